//! Vahlen matrices for the group generated by p-part translations, dilations,
//! q-sphere reflections and the inversion, together with point and jet
//! evaluation of `y = (ax+b)(cx+d)^{-1}`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::clifford::{versor_inverse, versor_norm, Multivector, VERSOR_TOLERANCE};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::operators::{Geometry, Part};

/// Default box half-width for point sampling.
pub const SAMPLE_BOX: f64 = 2.0;
/// Default rejection-sampling budget.
pub const RETRY_BUDGET: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    Translation,
    Dilation,
    Reflection,
    Inversion,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 4] = [
        GeneratorKind::Translation,
        GeneratorKind::Dilation,
        GeneratorKind::Reflection,
        GeneratorKind::Inversion,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Translation => "translation",
            GeneratorKind::Dilation => "dilation",
            GeneratorKind::Reflection => "reflection",
            GeneratorKind::Inversion => "inversion",
        }
    }
}

/// One generator. Translation coordinates cover the p-part (the scalar axis
/// in the paravector model); reflection axes are unit vectors in the q-part
/// (the vector part in the paravector model).
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Translation(Vec<f64>),
    Dilation(f64),
    Reflection(Vec<f64>),
    Inversion,
}

impl Generator {
    pub fn kind(&self) -> GeneratorKind {
        match self {
            Generator::Translation(_) => GeneratorKind::Translation,
            Generator::Dilation(_) => GeneratorKind::Dilation,
            Generator::Reflection(_) => GeneratorKind::Reflection,
            Generator::Inversion => GeneratorKind::Inversion,
        }
    }

    /// Random instance: translations in `[-1,1]`, `|λ| ∈ [0.75, 1.5]` with
    /// random sign, reflection axes uniform on the sphere.
    pub fn random<R: Rng + ?Sized>(kind: GeneratorKind, geo: Geometry, rng: &mut R) -> Self {
        match kind {
            GeneratorKind::Translation => Generator::Translation(
                geo.axes(Part::P).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
            ),
            GeneratorKind::Dilation => {
                let mag: f64 = rng.gen_range(0.75..=1.5);
                Generator::Dilation(if rng.gen_bool(0.5) { mag } else { -mag })
            }
            GeneratorKind::Reflection => {
                let k = geo.axes(Part::Q).len();
                loop {
                    let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if (0.1..=1.0).contains(&n) {
                        break Generator::Reflection(v.iter().map(|x| x / n).collect());
                    }
                }
            }
            GeneratorKind::Inversion => Generator::Inversion,
        }
    }

    /// Vahlen matrix of the generator.
    ///
    /// Reflections use `(a, 0; 0, a^{-1})`, inducing `y = a x a`.
    pub fn to_vahlen(&self, geo: Geometry) -> Result<VahlenMatrix> {
        let dim = geo.dim();
        let zero = Multivector::zero(dim);
        let one = Multivector::one(dim);
        match self {
            Generator::Translation(b) => {
                let axes = geo.axes(Part::P);
                if b.len() != axes.len() {
                    return Err(Error::InvalidGenerator(format!(
                        "translation needs {} coordinates, got {}",
                        axes.len(),
                        b.len()
                    )));
                }
                let mut coords = vec![0.0; geo.nvars()];
                for (axis, v) in axes.zip(b) {
                    coords[axis] = *v;
                }
                Ok(VahlenMatrix::new(one.clone(), geo.point(&coords), zero, one))
            }
            Generator::Dilation(l) => {
                if *l == 0.0 || !l.is_finite() {
                    return Err(Error::InvalidGenerator(format!("dilation factor {l}")));
                }
                Ok(VahlenMatrix::new(
                    Multivector::scalar(dim, *l),
                    zero.clone(),
                    zero,
                    Multivector::scalar(dim, 1.0 / l),
                ))
            }
            Generator::Reflection(a) => {
                let axes = geo.axes(Part::Q);
                if a.len() != axes.len() {
                    return Err(Error::InvalidGenerator(format!(
                        "reflection axis needs {} coordinates, got {}",
                        axes.len(),
                        a.len()
                    )));
                }
                let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (n - 1.0).abs() > VERSOR_TOLERANCE {
                    return Err(Error::InvalidGenerator(format!(
                        "reflection axis has norm {n}, expected 1"
                    )));
                }
                let mut coords = vec![0.0; geo.nvars()];
                for (axis, v) in axes.zip(a) {
                    coords[axis] = *v;
                }
                let av = geo.point(&coords);
                let d = versor_inverse(&av)?;
                Ok(VahlenMatrix::new(av, zero.clone(), zero, d))
            }
            Generator::Inversion => Ok(VahlenMatrix::new(zero.clone(), one.clone(), -one, zero)),
        }
    }

    /// Direct point action, independent of the matrix route.
    pub fn act(&self, geo: Geometry, x: &[f64]) -> Result<Vec<f64>> {
        let xv = geo.point(x);
        let y = match self {
            Generator::Translation(b) => {
                let mut y = x.to_vec();
                for (axis, v) in geo.axes(Part::P).zip(b) {
                    y[axis] += v;
                }
                return Ok(y);
            }
            Generator::Dilation(l) => return Ok(x.iter().map(|v| l * l * v).collect()),
            Generator::Reflection(a) => {
                let mut coords = vec![0.0; geo.nvars()];
                for (axis, v) in geo.axes(Part::Q).zip(a) {
                    coords[axis] = *v;
                }
                let av = geo.point(&coords);
                &(&av * &xv) * &av
            }
            Generator::Inversion => versor_inverse(&-&xv)?,
        };
        Ok(geo.coords_of(&y))
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Translation(b) => write!(f, "T[{}]", fmt_list(b)),
            Generator::Dilation(l) => write!(f, "D[{}]", fmt_num(*l)),
            Generator::Reflection(a) => write!(f, "R[{}]", fmt_list(a)),
            Generator::Inversion => write!(f, "I"),
        }
    }
}

/// Generators applied as `g_1 ∘ g_2 ∘ ... ∘ g_k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeneratorWord(pub Vec<Generator>);

impl GeneratorWord {
    pub fn single(g: Generator) -> Self {
        GeneratorWord(vec![g])
    }

    /// Random word with length in `1..=max_len`.
    pub fn random<R: Rng + ?Sized>(geo: Geometry, max_len: usize, rng: &mut R) -> Self {
        let len = rng.gen_range(1..=max_len.max(1));
        GeneratorWord(
            (0..len)
                .map(|_| {
                    let kind = GeneratorKind::ALL[rng.gen_range(0..4)];
                    Generator::random(kind, geo, rng)
                })
                .collect(),
        )
    }

    pub fn generators(&self) -> &[Generator] {
        &self.0
    }

    /// Applies the generators right to left.
    pub fn act(&self, geo: Geometry, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        for g in self.0.iter().rev() {
            y = g.act(geo, &y)?;
        }
        Ok(y)
    }
}

impl fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "id");
        }
        let parts: Vec<String> = self.0.iter().map(|g| g.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// `(a b; c d)` with Clifford entries.
#[derive(Debug, Clone, PartialEq)]
pub struct VahlenMatrix {
    pub a: Multivector,
    pub b: Multivector,
    pub c: Multivector,
    pub d: Multivector,
}

impl VahlenMatrix {
    pub fn new(a: Multivector, b: Multivector, c: Multivector, d: Multivector) -> Self {
        Self { a, b, c, d }
    }

    pub fn identity(dim: usize) -> Self {
        let one = Multivector::one(dim);
        let zero = Multivector::zero(dim);
        Self::new(one.clone(), zero.clone(), zero, one)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn mul(&self, o: &VahlenMatrix) -> VahlenMatrix {
        VahlenMatrix {
            a: &(&self.a * &o.a) + &(&self.b * &o.c),
            b: &(&self.a * &o.b) + &(&self.b * &o.d),
            c: &(&self.c * &o.a) + &(&self.d * &o.c),
            d: &(&self.c * &o.b) + &(&self.d * &o.d),
        }
    }

    /// Pseudo-determinant `a d̃ − b c̃`.
    pub fn pseudo_determinant(&self) -> Multivector {
        &(&self.a * &self.d.reverse()) - &(&self.b * &self.c.reverse())
    }

    /// Checks that the pseudo-determinant is `±1` and that `a b̃, c d̃, c̃ a,
    /// d̃ b` lie in the point space.
    pub fn validate(&self, geo: Geometry) -> Result<()> {
        let det = self.pseudo_determinant();
        let s = det.scalar_part();
        let off = det.residue_outside(|m| m == 0);
        let scale = self.a.norm() + self.b.norm() + self.c.norm() + self.d.norm();
        let tol = VERSOR_TOLERANCE * (1.0 + scale * scale);
        if (s.abs() - 1.0).abs() > tol || off > tol {
            return Err(Error::VahlenInvariant(format!(
                "pseudo-determinant {det} is not ±1"
            )));
        }
        let checks = [
            ("a b~", &self.a * &self.b.reverse()),
            ("c d~", &self.c * &self.d.reverse()),
            ("c~ a", &self.c.reverse() * &self.a),
            ("d~ b", &self.d.reverse() * &self.b),
        ];
        for (name, v) in checks {
            if v.residue_outside(|m| geo.is_point_blade(m)) > tol * (1.0 + v.norm()) {
                return Err(Error::VahlenInvariant(format!(
                    "{name} = {v} leaves the point space"
                )));
            }
        }
        Ok(())
    }

    /// `c x + d` at a point.
    pub fn denominator(&self, geo: Geometry, x: &[f64]) -> Multivector {
        &(&self.c * &geo.point(x)) + &self.d
    }

    /// `|c x + d|` at a point.
    pub fn denominator_norm(&self, geo: Geometry, x: &[f64]) -> Result<f64> {
        versor_norm(&self.denominator(geo, x))
    }
}

/// Left-to-right product of the generator matrices.
pub fn compose(word: &GeneratorWord, geo: Geometry) -> Result<VahlenMatrix> {
    let mut m = VahlenMatrix::identity(geo.dim());
    for g in word.generators() {
        let gm = g.to_vahlen(geo)?;
        gm.validate(geo)?;
        m = m.mul(&gm);
    }
    m.validate(geo)?;
    Ok(m)
}

/// `y = (a x + b)(c x + d)^{-1}`.
pub fn evaluate_point(m: &VahlenMatrix, geo: Geometry, x: &[f64]) -> Result<Vec<f64>> {
    let w = m.denominator(geo, x);
    if versor_norm(&w)? <= f64::EPSILON {
        return Err(Error::Singular(format!("c x + d vanishes at {x:?}")));
    }
    let num = &(&m.a * &geo.point(x)) + &m.b;
    let y = &num * &versor_inverse(&w)?;
    let off = y.residue_outside(|mask| geo.is_point_blade(mask));
    if off > VERSOR_TOLERANCE * (1.0 + y.norm()) {
        return Err(Error::VahlenInvariant(format!(
            "image {y} leaves the point space"
        )));
    }
    Ok(geo.coords_of(&y))
}

/// Coordinate jets of `y = φ(x)` at a base point.
#[derive(Debug, Clone)]
pub struct MapJet {
    pub coords: Vec<Jet>,
    pub value: Vec<f64>,
}

/// Jet of `c x + d`.
pub fn denominator_jet(m: &VahlenMatrix, geo: Geometry, base: &Arc<[f64]>, order: usize) -> Result<Jet> {
    let x = point_jet(geo, base, order)?;
    x.left_mul_const(&m.c)?
        .add(&Jet::constant(Arc::clone(base), order, &m.d))
}

/// Jet of the identity map as a Clifford-valued function.
pub fn point_jet(geo: Geometry, base: &Arc<[f64]>, order: usize) -> Result<Jet> {
    let mut out = Jet::zero(Arc::clone(base), order, geo.dim());
    for axis in 0..geo.nvars() {
        let e = Multivector::blade(geo.dim(), geo.axis_blade(axis), 1.0);
        out = out.add(&Jet::coordinate(axis, Arc::clone(base), order, geo.dim())?.left_mul_const(&e)?)?;
    }
    Ok(out)
}

/// Scalar jet `|w|² = w conj(w)` of a versor-valued jet.
pub fn versor_norm_squared_jet(w: &Jet) -> Result<Jet> {
    Ok(w.mul(&w.conjugate())?.scalar_part())
}

pub fn evaluate_map_jet(m: &VahlenMatrix, geo: Geometry, x0: &[f64], order: usize) -> Result<MapJet> {
    let base: Arc<[f64]> = Arc::from(x0);
    let w = denominator_jet(m, geo, &base, order)?;
    let n2 = versor_norm_squared_jet(&w)?;
    if !(n2.value().scalar_part() > 0.0) {
        return Err(Error::Singular(format!("c x + d vanishes at {x0:?}")));
    }
    let num = point_jet(geo, &base, order)?
        .left_mul_const(&m.a)?
        .add(&Jet::constant(Arc::clone(&base), order, &m.b))?;
    let y = num.mul(&w.conjugate())?.mul(&n2.reciprocal()?)?;
    let off = y.max_abs_outside(|mask| geo.is_point_blade(mask));
    if off > VERSOR_TOLERANCE * (1.0 + y.max_abs()) {
        return Err(Error::VahlenInvariant(format!(
            "map jet leaves the point space by {off:e}"
        )));
    }
    let coords: Vec<Jet> = (0..geo.nvars())
        .map(|axis| y.blade_component(geo.axis_blade(axis)))
        .collect();
    let value = coords.iter().map(|c| c.value().scalar_part()).collect();
    Ok(MapJet { coords, value })
}

/// Rejection-samples `x` in `[-2,2]^n` with `|x_q|`, `|c x + d|` and
/// `|φ(x)_q|` all at least `delta`.
pub fn sample_valid_point<R: Rng + ?Sized>(
    m: &VahlenMatrix,
    geo: Geometry,
    delta: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    sample_valid_point_with_budget(m, geo, delta, RETRY_BUDGET, rng)
}

pub fn sample_valid_point_with_budget<R: Rng + ?Sized>(
    m: &VahlenMatrix,
    geo: Geometry,
    delta: f64,
    budget: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::Usage(format!("clearance must be positive, got {delta}")));
    }
    let d2 = delta * delta;
    for _ in 0..budget {
        let x: Vec<f64> = (0..geo.nvars())
            .map(|_| rng.gen_range(-SAMPLE_BOX..=SAMPLE_BOX))
            .collect();
        if geo.part_norm_squared(&x, Part::Q) < d2 {
            continue;
        }
        match m.denominator_norm(geo, &x) {
            Ok(n) if n >= delta => {}
            _ => continue,
        }
        match evaluate_point(m, geo, &x) {
            Ok(y) if geo.part_norm_squared(&y, Part::Q) >= d2 => return Ok(x),
            _ => continue,
        }
    }
    Err(Error::Sampling {
        attempts: budget,
        reason: format!("no point with clearance {delta} found"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::AlgebraSignature;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn split(p: usize, q: usize) -> Geometry {
        Geometry::Split(AlgebraSignature::new(p, q).unwrap())
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs() + y.abs()))
    }

    #[test]
    fn inversion_matrix_and_action() {
        let geo = split(1, 2);
        let m = Generator::Inversion.to_vahlen(geo).unwrap();
        assert_eq!(m.b, Multivector::one(3));
        assert_eq!(m.c, Multivector::scalar(3, -1.0));
        let y = evaluate_point(&m, geo, &[1.0, 0.0, 0.0]).unwrap();
        assert!(close(&y, &[1.0, 0.0, 0.0], 1e-15));
        let y = evaluate_point(&m, geo, &[1.0, 1.0, 1.0]).unwrap();
        assert!(close(&y, &[1.0 / 3.0; 3], 1e-15));
    }

    #[test]
    fn translation_and_identity() {
        let geo = split(2, 2);
        let t0 = Generator::Translation(vec![0.0, 0.0]).to_vahlen(geo).unwrap();
        assert_eq!(t0, VahlenMatrix::identity(4));
        let t = Generator::Translation(vec![0.5, -1.0]).to_vahlen(geo).unwrap();
        let y = evaluate_point(&t, geo, &[1.0, 1.0, 0.3, 0.2]).unwrap();
        assert!(close(&y, &[1.5, 0.0, 0.3, 0.2], 1e-15));
        assert_eq!(compose(&GeneratorWord::default(), geo).unwrap(), VahlenMatrix::identity(4));
    }

    #[test]
    fn reflection_action() {
        let geo = split(1, 2);
        let r = Generator::Reflection(vec![1.0, 0.0]);
        let m = r.to_vahlen(geo).unwrap();
        assert_eq!(m.d, Multivector::generator(3, 1).scale(-1.0));
        let y = evaluate_point(&m, geo, &[0.5, 0.7, -0.3]).unwrap();
        // a x a with a = e2: e1 -> e1, e2 -> -e2, e3 -> e3
        assert!(close(&y, &[0.5, -0.7, -0.3], 1e-15));
        let x = Multivector::from_vector(3, &[0.5, 0.7, -0.3]);
        let a = Multivector::generator(3, 1);
        assert_eq!(geo.coords_of(&(&(&a * &x) * &a)), y);
        assert!(matches!(
            Generator::Reflection(vec![1.0, 1.0]).to_vahlen(geo),
            Err(Error::InvalidGenerator(_))
        ));
    }

    #[test]
    fn involutive_words_act_trivially() {
        let geo = split(2, 2);
        let x = [0.3, -0.4, 0.9, 0.2];
        let ii = compose(&GeneratorWord(vec![Generator::Inversion, Generator::Inversion]), geo).unwrap();
        assert!(close(&evaluate_point(&ii, geo, &x).unwrap(), &x, 1e-14));
        let dd = compose(
            &GeneratorWord(vec![Generator::Dilation(1.7), Generator::Dilation(1.0 / 1.7)]),
            geo,
        )
        .unwrap();
        assert!(close(&evaluate_point(&dd, geo, &x).unwrap(), &x, 1e-14));
        assert!(matches!(
            Generator::Dilation(0.0).to_vahlen(geo),
            Err(Error::InvalidGenerator(_))
        ));
    }

    #[test]
    fn composition_matches_sequential_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for geo in [split(1, 2), split(2, 3), Geometry::paravector(3).unwrap()] {
            for _ in 0..50 {
                let word = GeneratorWord::random(geo, 4, &mut rng);
                let m = compose(&word, geo).unwrap();
                let x = sample_valid_point(&m, geo, 0.1, &mut rng).unwrap();
                let direct = word.act(geo, &x).unwrap();
                let via = evaluate_point(&m, geo, &x).unwrap();
                assert!(close(&direct, &via, 1e-10), "{word}: {direct:?} vs {via:?}");
            }
        }
    }

    #[test]
    fn map_jet_value_and_identity() {
        let geo = split(2, 2);
        let x = [0.3, -0.4, 0.9, 0.2];
        let id = evaluate_map_jet(&VahlenMatrix::identity(4), geo, &x, 2).unwrap();
        for (i, c) in id.coords.iter().enumerate() {
            let want = Jet::coordinate(i, Arc::from(&x[..]), 2, 4).unwrap();
            assert!(c.sub(&want).unwrap().max_abs() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let word = GeneratorWord::random(geo, 3, &mut rng);
        let m = compose(&word, geo).unwrap();
        let mj = evaluate_map_jet(&m, geo, &x, 2).unwrap();
        assert!(close(&mj.value, &evaluate_point(&m, geo, &x).unwrap(), 1e-13));
    }

    #[test]
    fn inversion_first_derivatives() {
        let geo = split(1, 2);
        let x = [0.6, -0.3, 1.1];
        let m = Generator::Inversion.to_vahlen(geo).unwrap();
        let mj = evaluate_map_jet(&m, geo, &x, 1).unwrap();
        let n2: f64 = x.iter().map(|v| v * v).sum();
        for j in 0..3 {
            for i in 0..3 {
                let got = mj.coords[j].derivative(&crate::jet::MultiIndex::unit(3, i)).scalar_part();
                let delta = if i == j { 1.0 } else { 0.0 };
                let want = delta / n2 - 2.0 * x[i] * x[j] / (n2 * n2);
                assert!((got - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sampling_respects_clearance() {
        let geo = split(2, 2);
        let m = Generator::Inversion.to_vahlen(geo).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = sample_valid_point(&m, geo, 0.1, &mut rng).unwrap();
            assert!(geo.part_norm_squared(&x, Part::Q) >= 0.01);
            let y = evaluate_point(&m, geo, &x).unwrap();
            assert!(geo.part_norm_squared(&y, Part::Q) >= 0.01);
        }
        let err = sample_valid_point_with_budget(&m, geo, 10.0, 50, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Sampling { attempts: 50, .. }));
    }

    #[test]
    fn word_display() {
        let w = GeneratorWord(vec![
            Generator::Translation(vec![0.3, 0.0, -1.0]),
            Generator::Dilation(1.7),
            Generator::Reflection(vec![1.0]),
            Generator::Inversion,
        ]);
        assert_eq!(w.to_string(), "T[0.3,0,-1] D[1.7] R[1] I");
        assert_eq!(GeneratorWord::default().to_string(), "id");
    }
}
