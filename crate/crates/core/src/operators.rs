//! Differential operators on jets: Dirac and Euler parts, the global slice
//! Dirac operator `G`, its iterates, the variant `G†` and the paravector
//! operator on `R ⊕ R^n`.

use std::ops::Range;
use std::sync::Arc;

use crate::clifford::{AlgebraSignature, Multivector};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Coordinate model of the domain.
///
/// `Split` is `R^{p+q}` embedded as vectors `x = Σ e_i x_i`, all axes carrying
/// a generator. `Paravector` is `R ⊕ R^n` with `x = x_0 + Σ e_j x_j`: axis 0 is
/// the scalar axis and axis `j ≥ 1` carries generator `e_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Split(AlgebraSignature),
    Paravector { n: usize },
}

impl Geometry {
    pub fn paravector(n: usize) -> Result<Self> {
        if n == 0 || n > crate::clifford::MAX_GENERATORS {
            return Err(Error::Usage(format!(
                "paravector model needs 1..={} generators, got {n}",
                crate::clifford::MAX_GENERATORS
            )));
        }
        Ok(Geometry::Paravector { n })
    }

    /// Number of real coordinates.
    pub fn nvars(&self) -> usize {
        match self {
            Geometry::Split(sig) => sig.dim(),
            Geometry::Paravector { n } => n + 1,
        }
    }

    /// Number of Clifford generators.
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Split(sig) => sig.dim(),
            Geometry::Paravector { n } => *n,
        }
    }

    /// Axes of a part. In the paravector model `P` is the scalar axis and `Q`
    /// the vector axes.
    pub fn axes(&self, part: Part) -> Range<usize> {
        match (self, part) {
            (Geometry::Split(sig), Part::P) => sig.p_range(),
            (Geometry::Split(sig), Part::Q) => sig.q_range(),
            (Geometry::Paravector { .. }, Part::P) => 0..1,
            (Geometry::Paravector { n }, Part::Q) => 1..n + 1,
            (g, Part::Full) => 0..g.nvars(),
        }
    }

    /// Blade attached to an axis.
    pub fn axis_blade(&self, axis: usize) -> usize {
        match self {
            Geometry::Split(_) => 1 << axis,
            Geometry::Paravector { .. } => {
                if axis == 0 {
                    0
                } else {
                    1 << (axis - 1)
                }
            }
        }
    }

    /// The point `x` as a multivector.
    pub fn point(&self, coords: &[f64]) -> Multivector {
        let mut mv = Multivector::zero(self.dim());
        for (axis, &c) in coords.iter().enumerate() {
            mv.coeffs_mut()[self.axis_blade(axis)] += c;
        }
        mv
    }

    /// Coordinates of a multivector that lies in the model's point space.
    pub fn coords_of(&self, mv: &Multivector) -> Vec<f64> {
        (0..self.nvars()).map(|a| mv.coeff(self.axis_blade(a))).collect()
    }

    /// Whether a blade belongs to the model's point space.
    pub fn is_point_blade(&self, mask: u32) -> bool {
        match self {
            Geometry::Split(_) => mask.count_ones() == 1,
            Geometry::Paravector { .. } => mask.count_ones() <= 1,
        }
    }

    /// `|x_part|²` at a point.
    pub fn part_norm_squared(&self, coords: &[f64], part: Part) -> f64 {
        self.axes(part).map(|i| coords[i] * coords[i]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    P,
    Q,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Geometry plus base point; builds the multiplier jets used by `G`.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    geometry: Geometry,
    base: Arc<[f64]>,
}

impl OperatorContext {
    pub fn new(geometry: Geometry, base: &[f64]) -> Result<Self> {
        if base.len() != geometry.nvars() {
            return Err(Error::JetMismatch(format!(
                "base point has {} coordinates, geometry needs {}",
                base.len(),
                geometry.nvars()
            )));
        }
        Ok(Self {
            geometry,
            base: Arc::from(base),
        })
    }

    pub fn split(sig: AlgebraSignature, base: &[f64]) -> Result<Self> {
        Self::new(Geometry::Split(sig), base)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn base(&self) -> &Arc<[f64]> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn coordinate(&self, axis: usize, order: usize) -> Result<Jet> {
        Jet::coordinate(axis, Arc::clone(&self.base), order, self.dim())
    }

    pub fn constant(&self, value: &Multivector, order: usize) -> Jet {
        Jet::constant(Arc::clone(&self.base), order, value)
    }

    /// Jet of `x_part` as a Clifford-valued function.
    pub fn vector_jet(&self, part: Part, order: usize) -> Result<Jet> {
        let mut out = Jet::zero(Arc::clone(&self.base), order, self.dim());
        for axis in self.geometry.axes(part) {
            let e = Multivector::blade(self.dim(), self.geometry.axis_blade(axis), 1.0);
            out = out.add(&self.coordinate(axis, order)?.left_mul_const(&e)?)?;
        }
        Ok(out)
    }

    /// Jet of `|x_part|²`.
    pub fn norm_squared_jet(&self, part: Part, order: usize) -> Result<Jet> {
        let mut out = Jet::zero(Arc::clone(&self.base), order, self.dim());
        for axis in self.geometry.axes(part) {
            let c = self.coordinate(axis, order)?;
            out = out.add(&c.mul(&c)?)?;
        }
        Ok(out)
    }

    /// Jet of `|x|^alpha` over the full point.
    pub fn norm_power_jet(&self, alpha: f64, order: usize) -> Result<Jet> {
        self.norm_squared_jet(Part::Full, order)?
            .scalar_power(alpha / 2.0)
    }

    fn check_off_p_space(&self) -> Result<()> {
        let nq = self.geometry.part_norm_squared(&self.base, Part::Q);
        if nq > 0.0 {
            Ok(())
        } else {
            Err(Error::Singular(format!(
                "|x_q| = 0 at base point {:?}",
                &*self.base
            )))
        }
    }

    /// Jet of `x_q / |x_q|²`.
    pub fn slice_multiplier(&self, order: usize) -> Result<Jet> {
        self.check_off_p_space()?;
        let inv = self.norm_squared_jet(Part::Q, order)?.reciprocal()?;
        self.vector_jet(Part::Q, order)?.mul(&inv)
    }
}

fn require_order(f: &Jet, needed: usize) -> Result<()> {
    if f.order() < needed {
        return Err(Error::OrderExhausted {
            needed,
            available: f.order(),
        });
    }
    Ok(())
}

fn check_context(f: &Jet, ctx: &OperatorContext) -> Result<()> {
    if f.nvars() != ctx.geometry.nvars() || f.base() != ctx.base() {
        return Err(Error::JetMismatch(
            "jet base point differs from operator context".into(),
        ));
    }
    if f.dim() != ctx.dim() {
        return Err(Error::SignatureMismatch {
            left: f.dim(),
            right: ctx.dim(),
        });
    }
    Ok(())
}

/// `Σ_{i ∈ part} e_i ∂_i f`, left multiplication.
pub fn apply_dirac(f: &Jet, part: Part, ctx: &OperatorContext) -> Result<Jet> {
    check_context(f, ctx)?;
    require_order(f, 1)?;
    let mut out = Jet::zero(Arc::clone(f.base()), f.order() - 1, f.dim());
    for axis in ctx.geometry.axes(part) {
        let e = Multivector::blade(f.dim(), ctx.geometry.axis_blade(axis), 1.0);
        out = out.add(&f.partial(axis)?.left_mul_const(&e)?)?;
    }
    Ok(out)
}

/// `Σ_{i ∈ part} x_i ∂_i f`.
pub fn apply_euler(f: &Jet, part: Part, ctx: &OperatorContext) -> Result<Jet> {
    check_context(f, ctx)?;
    require_order(f, 1)?;
    let order = f.order() - 1;
    let mut out = Jet::zero(Arc::clone(f.base()), order, f.dim());
    for axis in ctx.geometry.axes(part) {
        out = out.add(&ctx.coordinate(axis, order)?.mul(&f.partial(axis)?)?)?;
    }
    Ok(out)
}

/// `G f = D_p f + (x_q/|x_q|²) E_q f`.
pub fn apply_g(f: &Jet, ctx: &OperatorContext) -> Result<Jet> {
    check_context(f, ctx)?;
    require_order(f, 1)?;
    let m = ctx.slice_multiplier(f.order() - 1)?;
    apply_dirac(f, Part::P, ctx)?.add(&m.mul(&apply_euler(f, Part::Q, ctx)?)?)
}

/// `G^l f`.
pub fn apply_g_iterated(f: &Jet, l: usize, ctx: &OperatorContext) -> Result<Jet> {
    require_order(f, l)?;
    let mut cur = f.clone();
    for _ in 0..l {
        cur = apply_g(&cur, ctx)?;
    }
    Ok(cur)
}

fn weighted_pair(f: &Jet, ctx: &OperatorContext) -> Result<Jet> {
    check_context(f, ctx)?;
    require_order(f, 1)?;
    let order = f.order() - 1;
    let nq = ctx.norm_squared_jet(Part::Q, order)?;
    let xq = ctx.vector_jet(Part::Q, order)?;
    nq.mul(&apply_dirac(f, Part::P, ctx)?)?
        .add(&xq.mul(&apply_euler(f, Part::Q, ctx)?)?)
}

/// `G† f = |x_q|² D_p f + x_q E_q f`, defined on all of `R^{p+q}`.
pub fn apply_g_dagger(f: &Jet, ctx: &OperatorContext) -> Result<Jet> {
    if !matches!(ctx.geometry, Geometry::Split(_)) {
        return Err(Error::Usage("G† acts in the split model".into()));
    }
    weighted_pair(f, ctx)
}

/// `𝒢 f = |x̲|² ∂_0 f + x̲ Σ_{j≥1} x_j ∂_j f` on `R ⊕ R^n`.
pub fn apply_g_paravector(f: &Jet, ctx: &OperatorContext) -> Result<Jet> {
    if !matches!(ctx.geometry, Geometry::Paravector { .. }) {
        return Err(Error::Usage(
            "the paravector operator needs the paravector model".into(),
        ));
    }
    weighted_pair(f, ctx)
}

/// Multiplication operator: `g f` (left) or `f g` (right).
pub fn multiply_by(f: &Jet, g: &Jet, side: Side) -> Result<Jet> {
    match side {
        Side::Left => g.mul(f),
        Side::Right => f.mul(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{MultiIndex, PolynomialFunction};

    fn sig(p: usize, q: usize) -> AlgebraSignature {
        AlgebraSignature::new(p, q).unwrap()
    }

    fn poly_jet(f: &PolynomialFunction, ctx: &OperatorContext, order: usize) -> Jet {
        f.to_jet(Arc::clone(ctx.base()), order).unwrap()
    }

    fn close(a: &Multivector, b: &Multivector, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm() + b.norm())
    }

    #[test]
    fn dirac_of_coordinate() {
        let ctx = OperatorContext::split(sig(1, 2), &[0.3, 1.0, -0.5]).unwrap();
        let x1 = ctx.coordinate(0, 2).unwrap();
        let d = apply_dirac(&x1, Part::Full, &ctx).unwrap();
        assert_eq!(d.value(), Multivector::generator(3, 0));
        assert!(apply_dirac(&ctx.constant(&Multivector::one(3), 2), Part::Full, &ctx)
            .unwrap()
            .max_abs()
            == 0.0);
    }

    #[test]
    fn euler_is_homogeneity() {
        let ctx = OperatorContext::split(sig(1, 2), &[0.3, 1.0, -0.5]).unwrap();
        let f = PolynomialFunction::monomial(
            MultiIndex::new(vec![1, 1, 0]),
            Multivector::blade(3, 0b101, 2.0),
        );
        let jet = poly_jet(&f, &ctx, 3);
        let e = apply_euler(&jet, Part::Full, &ctx).unwrap();
        assert!(e.sub(&jet.truncate(2).unwrap().scale(2.0)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn g_on_constants_and_p_coordinates() {
        let ctx = OperatorContext::split(sig(1, 2), &[0.3, 1.0, -0.5]).unwrap();
        let one = ctx.constant(&Multivector::one(3), 1);
        assert_eq!(apply_g(&one, &ctx).unwrap().max_abs(), 0.0);
        let x1 = ctx.coordinate(0, 1).unwrap();
        assert_eq!(apply_g(&x1, &ctx).unwrap().value(), Multivector::generator(3, 0));
    }

    #[test]
    fn g_on_q_coordinate() {
        let ctx = OperatorContext::split(sig(2, 2), &[0.0, 0.0, 1.0, 1.0]).unwrap();
        let x3 = ctx.coordinate(2, 1).unwrap();
        let v = apply_g(&x3, &ctx).unwrap().value();
        let want = Multivector::from_vector(4, &[0.0, 0.0, 0.5, 0.5]);
        assert!(close(&v, &want, 1e-15));
    }

    #[test]
    fn g_needs_q_part() {
        let ctx = OperatorContext::split(sig(2, 2), &[1.0, 2.0, 0.0, 0.0]).unwrap();
        let x1 = ctx.coordinate(0, 1).unwrap();
        assert!(matches!(apply_g(&x1, &ctx), Err(Error::Singular(_))));
        assert_eq!(apply_g_dagger(&x1, &ctx).unwrap().value(), Multivector::zero(4));
    }

    #[test]
    fn order_is_checked() {
        let ctx = OperatorContext::split(sig(1, 1), &[1.0, 1.0]).unwrap();
        let x = ctx.coordinate(0, 1).unwrap();
        assert_eq!(
            apply_g_iterated(&x, 2, &ctx).unwrap_err(),
            Error::OrderExhausted {
                needed: 2,
                available: 1
            }
        );
        let c = ctx.constant(&Multivector::one(2), 0);
        assert!(matches!(apply_dirac(&c, Part::Full, &ctx), Err(Error::OrderExhausted { .. })));
    }

    #[test]
    fn dagger_is_scaled_g() {
        let ctx = OperatorContext::split(sig(2, 2), &[0.4, -0.2, 0.7, 1.1]).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let f = PolynomialFunction::random(&mut rng, 4, 4, 3, 2);
        let jet = poly_jet(&f, &ctx, 1);
        let nq = ctx.geometry().part_norm_squared(ctx.base(), Part::Q);
        let g = apply_g(&jet, &ctx).unwrap().value();
        let gd = apply_g_dagger(&jet, &ctx).unwrap().value();
        assert!(close(&gd, &g.scale(nq), 1e-13));
    }

    #[test]
    fn paravector_operator_basics() {
        let geo = Geometry::paravector(2).unwrap();
        let ctx = OperatorContext::new(geo, &[0.5, 0.3, -0.8]).unwrap();
        let x0 = ctx.coordinate(0, 1).unwrap();
        let v = apply_g_paravector(&x0, &ctx).unwrap().value();
        assert!(close(&v, &Multivector::scalar(2, 0.09 + 0.64), 1e-15));
        // the paravector x itself is a null solution
        let x = ctx.vector_jet(Part::Full, 1).unwrap();
        assert!(apply_g_paravector(&x, &ctx).unwrap().max_abs() < 1e-15);
        assert!(matches!(apply_g_dagger(&x, &ctx), Err(Error::Usage(_))));
    }

    #[test]
    fn multiplication_sides() {
        let ctx = OperatorContext::split(sig(1, 1), &[1.0, 2.0]).unwrap();
        let f = ctx.constant(&Multivector::generator(2, 1), 1);
        let e1 = ctx.constant(&Multivector::generator(2, 0), 1);
        let twice = multiply_by(&multiply_by(&f, &e1, Side::Left).unwrap(), &e1, Side::Left).unwrap();
        assert_eq!(twice, f.neg());
        let l = multiply_by(&f, &e1, Side::Left).unwrap().value();
        let r = multiply_by(&f, &e1, Side::Right).unwrap().value();
        assert_eq!(l, -r);
    }
}
