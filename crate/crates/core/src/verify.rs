//! Identity checks: both sides of every intertwining relation, operator
//! identity and null-solution statement are computed by independent jet
//! routes at random points on random polynomial test functions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clifford::{AlgebraSignature, Multivector};
use crate::error::{Error, Result};
use crate::jet::{Jet, PolynomialFunction};
use crate::moebius::{
    compose, evaluate_map_jet, evaluate_point, sample_valid_point, Generator, GeneratorKind,
    GeneratorWord, VahlenMatrix,
};
use crate::operators::{
    apply_euler, apply_g, apply_g_dagger, apply_g_paravector, Geometry, OperatorContext, Part,
};
use crate::weights::{Involution, WeightForm, WeightSpec, WeightVariant};

/// Guard added to every denominator of the relative residual.
pub const RESIDUAL_GUARD: f64 = 1e-300;
/// Median residual a negative control must exceed.
pub const FAILURE_FLOOR: f64 = 1e-2;
/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "SLICE_GRAV_THREADS";

/// `‖lhs − rhs‖ / (‖lhs‖ + ‖rhs‖ + guard)`.
pub fn relative_residual(lhs: &Multivector, rhs: &Multivector) -> f64 {
    (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + RESIDUAL_GUARD)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// `G`, iterated.
    Slice,
    /// `G†`, iterated.
    Dagger,
    /// The paravector operator.
    Paravector,
}

impl OperatorKind {
    pub fn apply(&self, f: &Jet, ctx: &OperatorContext) -> Result<Jet> {
        match self {
            OperatorKind::Slice => apply_g(f, ctx),
            OperatorKind::Dagger => apply_g_dagger(f, ctx),
            OperatorKind::Paravector => apply_g_paravector(f, ctx),
        }
    }

    pub fn apply_iterated(&self, f: &Jet, l: usize, ctx: &OperatorContext) -> Result<Jet> {
        if f.order() < l {
            return Err(Error::OrderExhausted {
                needed: l,
                available: f.order(),
            });
        }
        let mut cur = f.clone();
        for _ in 0..l {
            cur = self.apply(&cur, ctx)?;
        }
        Ok(cur)
    }
}

/// Operator identities checked on test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LemmaItem {
    /// `G_x² (x/|x|^m)` expanded through `y = −x^{-1}`.
    A { m: usize },
    /// `G^{2k−2} y = −(2k−2) G^{2k−3} + y G^{2k−2}`.
    B { k: usize },
    /// `G^{2k−1} y = −(p+2k−1+2E) G^{2k−2} − y G^{2k−1}`.
    C { k: usize },
    /// `G^{2k−2} |y|² = −2(k−1)(p+2k−3+2E) G^{2k−4} + |y|² G^{2k−2}`.
    D { k: usize },
    /// `E_x = −E_y` under the inversion.
    E,
    /// `G(|x|^{−m} f) = −m x/|x|^{m+2} f + |x|^{−m} G f`.
    NormPower { m: usize },
    /// `G(x/|x|^m f) = |x|^{−m}(m−p−1−2E) f − x/|x|^m G f`.
    VectorPower { m: usize },
    /// `G_x = |y|² G_y − 2 y E_y` under the inversion.
    ChainRule,
}

impl LemmaItem {
    fn uses_inversion(&self) -> bool {
        matches!(self, LemmaItem::A { .. } | LemmaItem::E | LemmaItem::ChainRule)
    }

    /// Derivative order consumed.
    fn depth(&self) -> usize {
        match self {
            LemmaItem::A { .. } => 2,
            LemmaItem::B { k } | LemmaItem::D { k } => (2 * k).saturating_sub(2).max(1),
            LemmaItem::C { k } => 2 * k - 1,
            LemmaItem::E | LemmaItem::NormPower { .. } | LemmaItem::VectorPower { .. } => 1,
            LemmaItem::ChainRule => 1,
        }
    }
}

/// Deliberate weight corruptions for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corruption {
    ExponentShift,
    DropReversion,
    WrongParity,
    IteratedDagger,
    LiteralLeft,
}

impl Corruption {
    pub fn name(&self) -> &'static str {
        match self {
            Corruption::ExponentShift => "exponent-shift",
            Corruption::DropReversion => "drop-reversion",
            Corruption::WrongParity => "wrong-parity",
            Corruption::IteratedDagger => "iterated-dagger",
            Corruption::LiteralLeft => "literal-left",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckKind {
    /// `Op_y^l f(y) = L · Op_x^l (R · f∘φ)` with weights `form`.
    Intertwining {
        operator: OperatorKind,
        form: WeightForm,
    },
    Lemma(LemmaItem),
    /// The paravector operator annihilates `(x_0 + x̲)^power`.
    NullSolution { power: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckCase {
    pub id: String,
    pub kind: CheckKind,
    pub geometry: Geometry,
    pub word: GeneratorWord,
    pub l: usize,
    pub degree: usize,
    pub max_grade: usize,
    pub samples: usize,
    pub tolerance: f64,
    /// Negative controls pass when the identity visibly fails.
    pub negative: bool,
}

impl CheckCase {
    pub fn p(&self) -> usize {
        match self.geometry {
            Geometry::Split(sig) => sig.p,
            Geometry::Paravector { n } => n,
        }
    }

    pub fn q(&self) -> usize {
        match self.geometry {
            Geometry::Split(sig) => sig.q,
            Geometry::Paravector { .. } => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub index: usize,
    pub point: Vec<f64>,
    pub lhs: Multivector,
    pub rhs: Multivector,
    pub rel: f64,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub case: CheckCase,
    pub residuals: Vec<Residual>,
    pub max_rel: f64,
    pub median_rel: f64,
    pub pass: bool,
    pub error: Option<String>,
    pub wall_time: Duration,
}

impl CheckReport {
    fn build(case: CheckCase, outcomes: Vec<Result<Residual>>, wall_time: Duration) -> Self {
        let mut residuals = Vec::with_capacity(outcomes.len());
        let mut error = None;
        for o in outcomes {
            match o {
                Ok(r) => residuals.push(r),
                Err(e) => {
                    error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        let rels: Vec<f64> = residuals.iter().map(|r| r.rel).collect();
        let max_rel = rels.iter().copied().fold(f64::NAN, f64::max);
        let median_rel = median(&rels);
        let ok = error.is_none() && !rels.is_empty();
        let pass = ok
            && if case.negative {
                median_rel > FAILURE_FLOOR
            } else {
                max_rel < case.tolerance
            };
        Self {
            case,
            residuals,
            max_rel,
            median_rel,
            pass,
            error,
            wall_time,
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sampling parameters shared by all cases of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleParams {
    pub seed: u64,
    pub delta: f64,
    /// Extra jet orders beyond the operator depth.
    pub guard: usize,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self {
            seed: 42,
            delta: 0.1,
            guard: 1,
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Random stream for `(seed, case id, stream)`; disjoint across streams.
pub fn substream(seed: u64, id: &str, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(id).rotate_left(17));
    rng.set_stream(stream);
    rng
}

fn point_value(geo: Geometry, x: &[f64]) -> Multivector {
    geo.point(x)
}

/// One dual-route sample.
pub fn run_sample(case: &CheckCase, params: &SampleParams, index: usize) -> Result<Residual> {
    let mut rng = substream(params.seed, &case.id, index as u64);
    let geo = case.geometry;
    let matrix = compose(&case.word, geo)?;
    match &case.kind {
        CheckKind::Intertwining { operator, form } => {
            let f = PolynomialFunction::random(&mut rng, geo.nvars(), geo.dim(), case.degree, case.max_grade);
            let x0 = sample_valid_point(&matrix, geo, params.delta, &mut rng)?;
            let (lhs, rhs) = intertwining_sides(*operator, form, &matrix, geo, &f, &x0, case.l, case.l + params.guard)?;
            Ok(residual(index, x0, lhs, rhs))
        }
        CheckKind::Lemma(item) => {
            let f = PolynomialFunction::random(&mut rng, geo.nvars(), geo.dim(), case.degree, case.max_grade);
            let x0 = sample_valid_point(&matrix, geo, params.delta, &mut rng)?;
            let (lhs, rhs) = lemma_sides(*item, geo, &f, &x0, item.depth() + params.guard)?;
            Ok(residual(index, x0, lhs, rhs))
        }
        CheckKind::NullSolution { power } => {
            let x0 = sample_valid_point(&matrix, geo, params.delta, &mut rng)?;
            let f = paravector_power(geo, *power)?;
            let (lhs, rhs) = null_sides(geo, &f, &x0, 1 + params.guard)?;
            Ok(residual(index, x0, lhs, rhs))
        }
    }
}

fn residual(index: usize, point: Vec<f64>, lhs: Multivector, rhs: Multivector) -> Residual {
    let rel = relative_residual(&lhs, &rhs);
    Residual {
        index,
        point,
        lhs,
        rhs,
        rel,
    }
}

/// Left side `Op_y^l f(y)` and right side `L(x) Op_x^l (R f∘φ)(x)`.
#[allow(clippy::too_many_arguments)]
pub fn intertwining_sides(
    operator: OperatorKind,
    form: &WeightForm,
    matrix: &VahlenMatrix,
    geo: Geometry,
    f: &PolynomialFunction,
    x0: &[f64],
    l: usize,
    order: usize,
) -> Result<(Multivector, Multivector)> {
    let y0 = evaluate_point(matrix, geo, x0)?;
    let ctx_y = OperatorContext::new(geo, &y0)?;
    let fy = f.to_jet(Arc::clone(ctx_y.base()), order)?;
    let lhs = operator.apply_iterated(&fy, l, &ctx_y)?.value();

    let ctx_x = OperatorContext::new(geo, x0)?;
    let map = evaluate_map_jet(matrix, geo, x0, order)?;
    let pulled = f.compose(&map.coords)?;
    let (left, right) = form.pair(matrix, geo, ctx_x.base(), order)?;
    let h = right.mul(&pulled)?;
    let inner = operator.apply_iterated(&h, l, &ctx_x)?.value();
    Ok((lhs, &left * &inner))
}

fn split_p(geo: Geometry) -> Result<usize> {
    match geo {
        Geometry::Split(sig) => Ok(sig.p),
        Geometry::Paravector { .. } => Err(Error::Usage(
            "operator identities are stated in the split model".into(),
        )),
    }
}

fn g_power(f: &Jet, j: usize, ctx: &OperatorContext) -> Result<Jet> {
    OperatorKind::Slice.apply_iterated(f, j, ctx)
}

/// Both sides of an operator identity at `x0` on the test function `f`.
pub fn lemma_sides(
    item: LemmaItem,
    geo: Geometry,
    f: &PolynomialFunction,
    x0: &[f64],
    order: usize,
) -> Result<(Multivector, Multivector)> {
    let p = split_p(geo)? as f64;
    let ctx = OperatorContext::new(geo, x0)?;
    let base = Arc::clone(ctx.base());
    let x = point_value(geo, x0);
    let nx2: f64 = x0.iter().map(|v| v * v).sum();
    let nx = nx2.sqrt();
    let inversion = || -> Result<(Vec<f64>, Jet)> {
        let m = Generator::Inversion.to_vahlen(geo)?;
        let y0 = evaluate_point(&m, geo, x0)?;
        let map = evaluate_map_jet(&m, geo, x0, order)?;
        Ok((y0, f.compose(&map.coords)?))
    };
    match item {
        LemmaItem::A { m } => {
            let mf = m as f64;
            let (y0, pulled) = inversion()?;
            let weight = ctx.vector_jet(Part::Full, order)?.mul(&ctx.norm_power_jet(-mf, order)?)?;
            let lhs = g_power(&weight.mul(&pulled)?, 2, &ctx)?.value();

            let ctx_y = OperatorContext::new(geo, &y0)?;
            let fy = f.to_jet(Arc::clone(ctx_y.base()), order)?;
            let g1 = apply_g(&fy, &ctx_y)?.value();
            let g2 = g_power(&fy, 2, &ctx_y)?.value();
            let ex = apply_euler(&pulled, Part::Full, &ctx)?.value();
            let c = mf - p - 1.0;
            let xm2 = x.scale(nx.powf(-mf - 2.0));
            let rhs = &(&(&xm2 * &pulled.value()).scale(-mf * c) + &(&xm2 * &ex).scale(2.0 * c))
                + &(&g1.scale(-2.0 * nx.powf(-mf - 2.0)) + &(&x.scale(nx.powf(-mf - 4.0)) * &g2));
            Ok((lhs, rhs))
        }
        LemmaItem::B { k } => {
            let j = 2 * k - 2;
            let fj = f.to_jet(base, order)?;
            let y = ctx.vector_jet(Part::Full, order)?;
            let lhs = g_power(&y.mul(&fj)?, j, &ctx)?.value();
            let mut rhs = &x * &g_power(&fj, j, &ctx)?.value();
            if j >= 1 {
                rhs += &g_power(&fj, j - 1, &ctx)?.value().scale(-(j as f64));
            }
            Ok((lhs, rhs))
        }
        LemmaItem::C { k } => {
            let j = 2 * k - 1;
            let fj = f.to_jet(base, order)?;
            let y = ctx.vector_jet(Part::Full, order)?;
            let lhs = g_power(&y.mul(&fj)?, j, &ctx)?.value();
            let lower = g_power(&fj, j - 1, &ctx)?;
            let e = apply_euler(&lower, Part::Full, &ctx)?.value();
            let rhs = &(&lower.value().scale(-(p + j as f64)) - &e.scale(2.0))
                - &(&x * &g_power(&fj, j, &ctx)?.value());
            Ok((lhs, rhs))
        }
        LemmaItem::D { k } => {
            let j = 2 * k - 2;
            let fj = f.to_jet(base, order)?;
            let n2 = ctx.norm_squared_jet(Part::Full, order)?;
            let lhs = g_power(&n2.mul(&fj)?, j, &ctx)?.value();
            let mut rhs = g_power(&fj, j, &ctx)?.value().scale(nx2);
            if k >= 2 {
                let lower = g_power(&fj, j - 2, &ctx)?;
                let e = apply_euler(&lower, Part::Full, &ctx)?.value();
                let c = -2.0 * (k as f64 - 1.0);
                rhs += &(&lower.value().scale(c * (p + 2.0 * k as f64 - 3.0)) + &e.scale(2.0 * c));
            }
            Ok((lhs, rhs))
        }
        LemmaItem::E => {
            let (y0, pulled) = inversion()?;
            let lhs = apply_euler(&pulled, Part::Full, &ctx)?.value();
            let ctx_y = OperatorContext::new(geo, &y0)?;
            let fy = f.to_jet(Arc::clone(ctx_y.base()), order)?;
            let rhs = -apply_euler(&fy, Part::Full, &ctx_y)?.value();
            Ok((lhs, rhs))
        }
        LemmaItem::NormPower { m } => {
            let mf = m as f64;
            let fj = f.to_jet(base, order)?;
            let lhs = apply_g(&ctx.norm_power_jet(-mf, order)?.mul(&fj)?, &ctx)?.value();
            let rhs = &(&x * &fj.value()).scale(-mf * nx.powf(-mf - 2.0))
                + &apply_g(&fj, &ctx)?.value().scale(nx.powf(-mf));
            Ok((lhs, rhs))
        }
        LemmaItem::VectorPower { m } => {
            let mf = m as f64;
            let fj = f.to_jet(base, order)?;
            let weight = ctx.vector_jet(Part::Full, order)?.mul(&ctx.norm_power_jet(-mf, order)?)?;
            let lhs = apply_g(&weight.mul(&fj)?, &ctx)?.value();
            let e = apply_euler(&fj, Part::Full, &ctx)?.value();
            let rhs = &(&fj.value().scale(mf - p - 1.0) - &e.scale(2.0)).scale(nx.powf(-mf))
                - &(&x.scale(nx.powf(-mf)) * &apply_g(&fj, &ctx)?.value());
            Ok((lhs, rhs))
        }
        LemmaItem::ChainRule => {
            let (y0, pulled) = inversion()?;
            let lhs = apply_g(&pulled, &ctx)?.value();
            let ctx_y = OperatorContext::new(geo, &y0)?;
            let fy = f.to_jet(Arc::clone(ctx_y.base()), order)?;
            let y = point_value(geo, &y0);
            let ny2: f64 = y0.iter().map(|v| v * v).sum();
            let rhs = &apply_g(&fy, &ctx_y)?.value().scale(ny2)
                - &(&y * &apply_euler(&fy, Part::Full, &ctx_y)?.value()).scale(2.0);
            Ok((lhs, rhs))
        }
    }
}

/// `(x_0 + x̲)^n` as a polynomial on `R ⊕ R^n`.
pub fn paravector_power(geo: Geometry, power: usize) -> Result<PolynomialFunction> {
    let n = match geo {
        Geometry::Paravector { n } => n,
        Geometry::Split(_) => {
            return Err(Error::Usage("paravector powers need the paravector model".into()))
        }
    };
    let nvars = n + 1;
    let mut x = PolynomialFunction::zero(nvars, n);
    for axis in 0..nvars {
        let e = Multivector::blade(n, geo.axis_blade(axis), 1.0);
        x = x.add(&PolynomialFunction::coordinate(nvars, axis, e))?;
    }
    let mut out = PolynomialFunction::constant(nvars, Multivector::one(n));
    for _ in 0..power {
        out = out.mul(&x)?;
    }
    Ok(out)
}

/// The two terms `|x̲|² ∂_0 f` and `−x̲ E_q f` whose difference is `𝒢 f`.
pub fn null_sides(
    geo: Geometry,
    f: &PolynomialFunction,
    x0: &[f64],
    order: usize,
) -> Result<(Multivector, Multivector)> {
    let ctx = OperatorContext::new(geo, x0)?;
    let fj = f.to_jet(Arc::clone(ctx.base()), order)?;
    let d0 = crate::operators::apply_dirac(&fj, Part::P, &ctx)?.value();
    let eq = apply_euler(&fj, Part::Q, &ctx)?.value();
    let nq = geo.part_norm_squared(x0, Part::Q);
    let xq = point_value(geo, x0).project_where(|m| m != 0);
    Ok((d0.scale(nq), -(&xq * &eq)))
}

/// Runs every sample of a case, in parallel but with a fixed result order.
pub fn run_case(case: &CheckCase, params: &SampleParams) -> CheckReport {
    let start = Instant::now();
    let outcomes: Vec<Result<Residual>> = (0..case.samples)
        .into_par_iter()
        .map(|i| run_sample(case, params, i))
        .collect();
    CheckReport::build(case.clone(), outcomes, start.elapsed())
}

/// Selectable groups of cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SuiteId {
    Slice,
    Words,
    Paravector,
    Lemma,
    Proof,
    Odd,
    Even,
    Dagger,
    Null,
    Negative,
}

impl SuiteId {
    pub const ALL: [SuiteId; 10] = [
        SuiteId::Slice,
        SuiteId::Words,
        SuiteId::Paravector,
        SuiteId::Lemma,
        SuiteId::Proof,
        SuiteId::Odd,
        SuiteId::Even,
        SuiteId::Dagger,
        SuiteId::Null,
        SuiteId::Negative,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SuiteId::Slice => "slice",
            SuiteId::Words => "words",
            SuiteId::Paravector => "paravector",
            SuiteId::Lemma => "lemma",
            SuiteId::Proof => "proof",
            SuiteId::Odd => "odd",
            SuiteId::Even => "even",
            SuiteId::Dagger => "dagger",
            SuiteId::Null => "null",
            SuiteId::Negative => "negative",
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id = match s.trim().to_ascii_lowercase().as_str() {
            "slice" | "thm3" => SuiteId::Slice,
            "words" => SuiteId::Words,
            "paravector" | "cor3" => SuiteId::Paravector,
            "lemma" => SuiteId::Lemma,
            "proof" | "chain" => SuiteId::Proof,
            "odd" | "thm4odd" => SuiteId::Odd,
            "even" | "thm4even" => SuiteId::Even,
            "dagger" | "thm5" => SuiteId::Dagger,
            "null" => SuiteId::Null,
            "negative" => SuiteId::Negative,
            other => return Err(Error::Usage(format!("unknown suite '{other}'"))),
        };
        Ok(id)
    }
}

/// Tolerances per iteration level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub l1: f64,
    pub l3: f64,
    pub l5: f64,
    pub lemma: f64,
    pub null: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            l1: 1e-8,
            l3: 1e-6,
            l5: 1e-5,
            lemma: 1e-7,
            null: 1e-9,
        }
    }
}

impl Tolerances {
    /// `l ≤ 2` uses `l1`, `l ∈ {3,4}` uses `l3`, larger `l` uses `l5`.
    pub fn for_level(&self, l: usize) -> f64 {
        match l {
            0..=2 => self.l1,
            3 | 4 => self.l3,
            _ => self.l5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub signatures: Vec<AlgebraSignature>,
    pub paravector_dims: Vec<usize>,
    pub max_l: usize,
    pub samples: usize,
    pub degree: usize,
    pub max_grade: usize,
    pub params: SampleParams,
    pub tolerances: Tolerances,
    pub suites: Vec<SuiteId>,
    pub random_words: usize,
    pub word_max_len: usize,
    /// Generators of the algebra used for the null-solution check.
    pub null_dim: usize,
    pub null_max_power: usize,
    pub null_points: usize,
    pub threads: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            signatures: [(1, 2), (2, 2), (2, 3)]
                .iter()
                .map(|&(p, q)| AlgebraSignature::new(p, q).unwrap())
                .collect(),
            paravector_dims: vec![1, 2],
            max_l: 4,
            samples: 100,
            degree: 4,
            max_grade: 2,
            params: SampleParams::default(),
            tolerances: Tolerances::default(),
            suites: SuiteId::ALL.to_vec(),
            random_words: 10,
            word_max_len: 3,
            null_dim: 3,
            null_max_power: 4,
            null_points: 50,
            threads: None,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_l == 0 || self.max_l > 5 {
            return Err(Error::Usage(format!("max-l must be in 1..=5, got {}", self.max_l)));
        }
        if self.samples == 0 {
            return Err(Error::Usage("samples must be at least 1".into()));
        }
        if !(self.params.delta > 0.0) {
            return Err(Error::Usage(format!("delta must be positive, got {}", self.params.delta)));
        }
        if self.signatures.is_empty() {
            return Err(Error::Usage("no signature selected".into()));
        }
        Ok(())
    }

    fn has(&self, id: SuiteId) -> bool {
        self.suites.contains(&id)
    }
}

fn sig_tag(sig: AlgebraSignature) -> String {
    format!("p{}q{}", sig.p, sig.q)
}

/// Fixed generator instance for a case, drawn from the case's own stream.
fn case_generator(seed: u64, id: &str, kind: GeneratorKind, geo: Geometry) -> Generator {
    let mut rng = substream(seed, id, u64::MAX);
    Generator::random(kind, geo, &mut rng)
}

struct CaseBuilder<'a> {
    cfg: &'a SuiteConfig,
    cases: Vec<CheckCase>,
}

impl CaseBuilder<'_> {
    fn push(&mut self, id: String, kind: CheckKind, geometry: Geometry, word: GeneratorWord, l: usize, tolerance: f64, negative: bool) {
        self.cases.push(CheckCase {
            id,
            kind,
            geometry,
            word,
            l,
            // G^l annihilates polynomials of degree < l
            degree: self.cfg.degree.max(l + 1),
            max_grade: self.cfg.max_grade,
            samples: self.cfg.samples,
            tolerance,
            negative,
        });
    }

    fn generator_cases(&mut self, prefix: &str, operator: OperatorKind, spec: WeightSpec) {
        let cfg = self.cfg;
        for &sig in &cfg.signatures {
            let geo = Geometry::Split(sig);
            for kind in GeneratorKind::ALL {
                let id = format!("{prefix}/{}/{}", sig_tag(sig), kind.name());
                let word = GeneratorWord::single(case_generator(cfg.params.seed, &id, kind, geo));
                let kind = CheckKind::Intertwining {
                    operator,
                    form: WeightForm::for_spec(spec, sig.p),
                };
                let tol = cfg.tolerances.for_level(spec.l);
                self.push(id, kind, geo, word, spec.l, tol, false);
            }
        }
    }
}

/// The full case matrix selected by `cfg`, in a fixed order.
pub fn build_cases(cfg: &SuiteConfig) -> Result<Vec<CheckCase>> {
    cfg.validate()?;
    let mut b = CaseBuilder {
        cfg,
        cases: Vec::new(),
    };
    let odd1 = WeightSpec::new(WeightVariant::Odd, 1)?;
    if cfg.has(SuiteId::Slice) {
        b.generator_cases("slice", OperatorKind::Slice, odd1);
    }
    if cfg.has(SuiteId::Words) {
        for &sig in &cfg.signatures {
            let geo = Geometry::Split(sig);
            for w in 0..cfg.random_words {
                let id = format!("slice/{}/word{:02}", sig_tag(sig), w);
                let mut rng = substream(cfg.params.seed, &id, u64::MAX);
                let word = GeneratorWord::random(geo, cfg.word_max_len, &mut rng);
                let kind = CheckKind::Intertwining {
                    operator: OperatorKind::Slice,
                    form: WeightForm::for_spec(odd1, sig.p),
                };
                b.push(id, kind, geo, word, 1, cfg.tolerances.for_level(1), false);
            }
        }
    }
    if cfg.has(SuiteId::Paravector) {
        let spec = WeightSpec::new(WeightVariant::Paravector, 1)?;
        for &n in &cfg.paravector_dims {
            let geo = Geometry::paravector(n)?;
            for kind in GeneratorKind::ALL {
                let id = format!("paravector/n{n}/{}", kind.name());
                let word = GeneratorWord::single(case_generator(cfg.params.seed, &id, kind, geo));
                let kind = CheckKind::Intertwining {
                    operator: OperatorKind::Paravector,
                    form: WeightForm::for_spec(spec, n),
                };
                b.push(id, kind, geo, word, 1, cfg.tolerances.for_level(1), false);
            }
        }
    }
    if cfg.has(SuiteId::Null) {
        let geo = Geometry::paravector(cfg.null_dim)?;
        for power in 0..=cfg.null_max_power {
            let id = format!("null/n{}/power{power}", cfg.null_dim);
            b.push(id, CheckKind::NullSolution { power }, geo, GeneratorWord::default(), 1, cfg.tolerances.null, false);
            b.cases.last_mut().unwrap().samples = cfg.null_points;
        }
    }
    let lemma_sig = cfg.signatures[0];
    if cfg.has(SuiteId::Lemma) {
        let geo = Geometry::Split(lemma_sig);
        let p = lemma_sig.p;
        let mut items = vec![
            ("a-m=p+1", LemmaItem::A { m: p + 1 }),
            ("a-m=p+3", LemmaItem::A { m: p + 3 }),
        ];
        for k in 2..=3 {
            items.push((["", "", "b-k=2", "b-k=3"][k], LemmaItem::B { k }));
        }
        for k in 1..=2 {
            items.push((["", "c-k=1", "c-k=2"][k], LemmaItem::C { k }));
        }
        for k in 2..=3 {
            items.push((["", "", "d-k=2", "d-k=3"][k], LemmaItem::D { k }));
        }
        items.push(("e", LemmaItem::E));
        for (name, item) in items {
            b.lemma_case(format!("lemma-{name}/{}", sig_tag(lemma_sig)), item, geo);
        }
    }
    if cfg.has(SuiteId::Proof) {
        for &sig in &cfg.signatures {
            let geo = Geometry::Split(sig);
            let p = sig.p;
            let tag = sig_tag(sig);
            for m in [p + 1, p + 3] {
                b.lemma_case(format!("norm-power/{tag}/m={m}"), LemmaItem::NormPower { m }, geo);
                b.lemma_case(format!("vector-power/{tag}/m={m}"), LemmaItem::VectorPower { m }, geo);
            }
            b.lemma_case(format!("chain-rule/{tag}"), LemmaItem::ChainRule, geo);
        }
    }
    if cfg.has(SuiteId::Odd) {
        for l in (3..=cfg.max_l).step_by(2) {
            b.generator_cases(&format!("odd-l{l}"), OperatorKind::Slice, WeightSpec::new(WeightVariant::Odd, l)?);
        }
    }
    if cfg.has(SuiteId::Even) {
        for l in (2..=cfg.max_l).step_by(2) {
            b.generator_cases(&format!("even-l{l}"), OperatorKind::Slice, WeightSpec::new(WeightVariant::Even, l)?);
        }
    }
    if cfg.has(SuiteId::Dagger) {
        b.generator_cases("dagger", OperatorKind::Dagger, WeightSpec::new(WeightVariant::Dagger, 1)?);
    }
    if cfg.has(SuiteId::Negative) {
        let sig = cfg.signatures[0];
        for c in [
            Corruption::ExponentShift,
            Corruption::DropReversion,
            Corruption::WrongParity,
            Corruption::IteratedDagger,
            Corruption::LiteralLeft,
        ] {
            let (case, l) = negative_control(sig, c, cfg.params.seed)?;
            let id = format!("negative/{}/{}", c.name(), sig_tag(sig));
            b.push(id, case.0, Geometry::Split(sig), case.1, l, FAILURE_FLOOR, true);
        }
    }
    Ok(b.cases)
}

impl CaseBuilder<'_> {
    fn lemma_case(&mut self, id: String, item: LemmaItem, geo: Geometry) {
        let word = if item.uses_inversion() {
            GeneratorWord::single(Generator::Inversion)
        } else {
            GeneratorWord::default()
        };
        let tol = self.cfg.tolerances.lemma;
        self.push(id, CheckKind::Lemma(item), geo, word, item.depth(), tol, false);
    }
}

/// Corrupted intertwining check: `((kind, word), l)`.
pub fn negative_control(
    sig: AlgebraSignature,
    corruption: Corruption,
    seed: u64,
) -> Result<((CheckKind, GeneratorWord), usize)> {
    let p = sig.p;
    let geo = Geometry::Split(sig);
    let odd1 = WeightForm::for_spec(WeightSpec::new(WeightVariant::Odd, 1)?, p);
    let inversion = GeneratorWord::single(Generator::Inversion);
    let reflected_inversion = || {
        let id = format!("negative/{}/{}", corruption.name(), sig_tag(sig));
        let r = case_generator(seed, &id, GeneratorKind::Reflection, geo);
        GeneratorWord(vec![r, Generator::Inversion])
    };
    let slice = |form| CheckKind::Intertwining {
        operator: OperatorKind::Slice,
        form,
    };
    Ok(match corruption {
        Corruption::ExponentShift => (
            (
                slice(WeightForm {
                    left_power: odd1.left_power - 1.0,
                    ..odd1
                }),
                inversion,
            ),
            1,
        ),
        Corruption::DropReversion => (
            (
                slice(WeightForm {
                    right: Involution::Identity,
                    ..odd1
                }),
                reflected_inversion(),
            ),
            1,
        ),
        Corruption::WrongParity => (
            (
                slice(WeightForm::for_spec(
                    WeightSpec {
                        variant: WeightVariant::Odd,
                        l: 2,
                    },
                    p,
                )),
                inversion,
            ),
            2,
        ),
        Corruption::IteratedDagger => (
            (
                CheckKind::Intertwining {
                    operator: OperatorKind::Dagger,
                    form: WeightForm::for_spec(WeightSpec::new(WeightVariant::Dagger, 1)?, p),
                },
                inversion,
            ),
            2,
        ),
        Corruption::LiteralLeft => ((slice(odd1.literal_left()), inversion), 1),
    })
}

/// Worker pool honoring the thread cap (or `SLICE_GRAV_THREADS`).
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                Error::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))
            })?),
            Err(_) => None,
        },
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Usage("thread count must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    builder
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))
}

pub fn run_cases(cases: &[CheckCase], params: &SampleParams, threads: Option<usize>) -> Result<Vec<CheckReport>> {
    let pool = thread_pool(threads)?;
    Ok(pool.install(|| cases.iter().map(|c| run_case(c, params)).collect()))
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CheckReport>> {
    let cases = build_cases(cfg)?;
    run_cases(&cases, &cfg.params, cfg.threads)
}
