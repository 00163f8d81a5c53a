//! Intertwining weight functions built from `J(x) = c x + d`.
//!
//! Every weight pair has the shape
//! `left = (κ_L(J) |J|^{s_L})^{-1}` and `right = κ_R(J) |J|^{s_R}`,
//! with `κ` one of the identity, reversion, conjugation or the constant `1`.

use std::sync::Arc;

use serde::Serialize;

use crate::clifford::{versor_inverse, versor_norm, Multivector};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::moebius::{denominator_jet, versor_norm_squared_jet, VahlenMatrix};
use crate::operators::Geometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightVariant {
    /// Iterates `G^l`, `l` odd.
    Odd,
    /// Iterates `G^l`, `l` even; scalar weights.
    Even,
    /// The variant `G†`.
    Dagger,
    /// The paravector operator on `R ⊕ R^n`.
    Paravector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WeightSpec {
    pub variant: WeightVariant,
    pub l: usize,
}

impl WeightSpec {
    pub fn new(variant: WeightVariant, l: usize) -> Result<Self> {
        let ok = match variant {
            WeightVariant::Odd => l % 2 == 1,
            WeightVariant::Even => l >= 2 && l % 2 == 0,
            WeightVariant::Dagger | WeightVariant::Paravector => l == 1,
        };
        if !ok {
            return Err(Error::Usage(format!("{variant:?} weights undefined for l = {l}")));
        }
        Ok(Self { variant, l })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Involution {
    /// `κ(J) = 1`.
    One,
    Identity,
    Reverse,
    Conjugate,
}

impl Involution {
    pub fn apply(&self, j: &Multivector) -> Multivector {
        match self {
            Involution::One => Multivector::one(j.dim()),
            Involution::Identity => j.clone(),
            Involution::Reverse => j.reverse(),
            Involution::Conjugate => j.conjugate(),
        }
    }

    pub fn apply_jet(&self, j: &Jet) -> Jet {
        match self {
            Involution::One => Jet::constant(Arc::clone(j.base()), j.order(), &Multivector::one(j.dim())),
            Involution::Identity => j.clone(),
            Involution::Reverse => j.reverse(),
            Involution::Conjugate => j.conjugate(),
        }
    }
}

/// Concrete weight pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightForm {
    pub left: Involution,
    pub left_power: f64,
    pub right: Involution,
    pub right_power: f64,
}

impl WeightForm {
    /// Weights for `spec`; `p` is the first-factor dimension in the split model.
    ///
    /// Along words `J(M_1 M_2, x) = J(M_1, M_2 x) J(M_2, x)` while left weights
    /// compose in the opposite order, so `κ_L` must be an anti-automorphism.
    /// In the split model it is the Clifford conjugation: for vector-valued
    /// `J` (reflections, inversion) the plain `(cx+d)^{-1}` factor is off by
    /// a sign. In the paravector model it is the reversion.
    pub fn for_spec(spec: WeightSpec, p: usize) -> Self {
        let p = p as f64;
        let l = spec.l as f64;
        match spec.variant {
            WeightVariant::Odd => WeightForm {
                left: Involution::Conjugate,
                left_power: -(p + 2.0 + l),
                right: Involution::Reverse,
                right_power: -(p + 2.0 - l),
            },
            WeightVariant::Even => WeightForm {
                left: Involution::One,
                left_power: -(p + 1.0 + l),
                right: Involution::One,
                right_power: -p - 1.0 + l,
            },
            WeightVariant::Dagger => WeightForm {
                left: Involution::Conjugate,
                left_power: -(p - 1.0),
                right: Involution::Reverse,
                right_power: -(p + 1.0),
            },
            WeightVariant::Paravector => WeightForm {
                left: Involution::Reverse,
                left_power: 0.0,
                right: Involution::Conjugate,
                right_power: -2.0,
            },
        }
    }

    /// Same exponents, but the left factor built from `c x + d` itself.
    pub fn literal_left(self) -> Self {
        WeightForm {
            left: match self.left {
                Involution::One => Involution::One,
                _ => Involution::Identity,
            },
            ..self
        }
    }

    /// Jet of the right weight at `x0`.
    pub fn right_jet(&self, m: &VahlenMatrix, geo: Geometry, x0: &Arc<[f64]>, order: usize) -> Result<Jet> {
        let w = denominator_jet(m, geo, x0, order)?;
        let n2 = versor_norm_squared_jet(&w)?;
        if !(n2.value().scalar_part() > 0.0) {
            return Err(Error::Singular(format!("c x + d vanishes at {:?}", &**x0)));
        }
        let scale = n2.scalar_power(self.right_power / 2.0)?;
        self.right.apply_jet(&w).mul(&scale)
    }

    /// Value of the left weight at `x0`.
    pub fn left_value(&self, m: &VahlenMatrix, geo: Geometry, x0: &[f64]) -> Result<Multivector> {
        let j = m.denominator(geo, x0);
        let n = versor_norm(&j)?;
        if !(n > 0.0) {
            return Err(Error::Singular(format!("c x + d vanishes at {x0:?}")));
        }
        versor_inverse(&self.left.apply(&j).scale(n.powf(self.left_power)))
    }

    pub fn pair(
        &self,
        m: &VahlenMatrix,
        geo: Geometry,
        x0: &Arc<[f64]>,
        order: usize,
    ) -> Result<(Multivector, Jet)> {
        Ok((self.left_value(m, geo, x0)?, self.right_jet(m, geo, x0, order)?))
    }
}

pub fn right_weight_jet(
    spec: WeightSpec,
    m: &VahlenMatrix,
    geo: Geometry,
    x0: &Arc<[f64]>,
    order: usize,
) -> Result<Jet> {
    form_for(spec, geo).right_jet(m, geo, x0, order)
}

pub fn left_weight_value(spec: WeightSpec, m: &VahlenMatrix, geo: Geometry, x0: &[f64]) -> Result<Multivector> {
    form_for(spec, geo).left_value(m, geo, x0)
}

pub fn weight_pair(
    spec: WeightSpec,
    m: &VahlenMatrix,
    geo: Geometry,
    x0: &Arc<[f64]>,
    order: usize,
) -> Result<(Multivector, Jet)> {
    form_for(spec, geo).pair(m, geo, x0, order)
}

fn form_for(spec: WeightSpec, geo: Geometry) -> WeightForm {
    let p = match geo {
        Geometry::Split(sig) => sig.p,
        Geometry::Paravector { .. } => 1,
    };
    WeightForm::for_spec(spec, p)
}
