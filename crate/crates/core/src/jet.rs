//! Truncated multivariate Taylor expansions ("jets") with multivector
//! coefficients.
//!
//! A [`Jet`] of order `K` at base point `x0` stores `c_alpha = d^alpha f(x0) / alpha!`
//! for every multi-index `alpha` with `|alpha| <= K`. Products are truncated
//! Cauchy products whose coefficient products are geometric products taken in
//! operand order, so noncommutativity is preserved.
//!
//! Multi-indices are enumerated in graded order (by total degree, then
//! lexicographically with larger leading exponents first). Because the order
//! is graded, the index set of order `K - 1` is a prefix of the set of order
//! `K`, which makes truncation a slice operation.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;

use crate::clifford::{cayley_table, gp_accumulate, Multivector, MAX_GENERATORS};
use crate::error::{Error, Result};

/// Exponent vector of a monomial or partial derivative.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: Vec<u8>) -> Self {
        Self(exponents)
    }

    pub fn zero(nvars: usize) -> Self {
        Self(vec![0; nvars])
    }

    /// `e_i`: exponent one on variable `i`.
    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `alpha! = prod_i alpha_i!`
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e as u64).product::<u64>() as f64)
            .product()
    }

    pub fn plus_unit(&self, i: usize) -> Self {
        let mut e = self.0.clone();
        e[i] += 1;
        Self(e)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices in `nvars` variables with total degree exactly `degree`,
/// larger leading exponents first.
fn indices_of_degree(nvars: usize, degree: usize) -> Vec<MultiIndex> {
    fn rec(nvars: usize, left: usize, prefix: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == nvars {
            prefix.push(left as u8);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e as u8);
            rec(nvars, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if degree == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    rec(nvars, degree, &mut Vec::with_capacity(nvars), &mut out);
    out
}

/// Index bookkeeping shared by every jet of a given variable count and order.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    indices: Vec<MultiIndex>,
    /// `degree_end[d]` = number of indices with total degree `<= d`.
    degree_end: Vec<usize>,
    lookup: HashMap<MultiIndex, usize>,
    /// `sums[a][b]` = position of `alpha_a + alpha_b`, for every `b` whose
    /// degree keeps the sum within `order`.
    sums: Vec<Vec<u32>>,
    /// Per variable: for each position of the order-(K-1) space, the source
    /// position of `alpha + e_i` here and the factor `alpha_i + 1`.
    partials: Vec<Vec<(u32, f64)>>,
    lower: Option<Arc<JetSpace>>,
}

type SpaceCache = Mutex<HashMap<(usize, usize), Arc<JetSpace>>>;

fn space_cache() -> &'static SpaceCache {
    static CACHE: OnceLock<SpaceCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl JetSpace {
    /// Shared space for `nvars` variables truncated at total order `order`.
    pub fn get(nvars: usize, order: usize) -> Arc<JetSpace> {
        if let Some(s) = space_cache().lock().unwrap().get(&(nvars, order)) {
            return Arc::clone(s);
        }
        let lower = if order > 0 {
            Some(Self::get(nvars, order - 1))
        } else {
            None
        };
        let built = Arc::new(Self::build(nvars, order, lower));
        let mut cache = space_cache().lock().unwrap();
        Arc::clone(cache.entry((nvars, order)).or_insert(built))
    }

    fn build(nvars: usize, order: usize, lower: Option<Arc<JetSpace>>) -> Self {
        let mut indices = Vec::new();
        let mut degree_end = Vec::with_capacity(order + 1);
        for d in 0..=order {
            indices.extend(indices_of_degree(nvars, d));
            degree_end.push(indices.len());
        }
        let lookup: HashMap<MultiIndex, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let sums = indices
            .iter()
            .map(|a| {
                let room = order - a.total();
                indices[..degree_end[room]]
                    .iter()
                    .map(|b| {
                        let s = MultiIndex(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
                        lookup[&s] as u32
                    })
                    .collect()
            })
            .collect();
        let partials = match &lower {
            Some(lo) => (0..nvars)
                .map(|i| {
                    lo.indices
                        .iter()
                        .map(|a| {
                            let src = lookup[&a.plus_unit(i)] as u32;
                            (src, a.0[i] as f64 + 1.0)
                        })
                        .collect()
                })
                .collect(),
            None => Vec::new(),
        };
        Self {
            nvars,
            order,
            indices,
            degree_end,
            lookup,
            sums,
            partials,
            lower,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Number of multi-indices with total degree `<= d`.
    pub fn count_upto(&self, d: usize) -> usize {
        self.degree_end[d.min(self.order)]
    }
}

/// Truncated Taylor expansion of a `Cl_dim`-valued function of `nvars` real
/// variables.
#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    dim: usize,
    base: Arc<[f64]>,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn zero(base: Arc<[f64]>, order: usize, dim: usize) -> Self {
        assert!(dim <= MAX_GENERATORS);
        let space = JetSpace::get(base.len(), order);
        let coeffs = vec![0.0; space.len() << dim];
        Self {
            space,
            dim,
            base,
            coeffs,
        }
    }

    pub fn constant(base: Arc<[f64]>, order: usize, value: &Multivector) -> Self {
        let mut jet = Self::zero(base, order, value.dim());
        jet.coeffs[..value.coeffs().len()].copy_from_slice(value.coeffs());
        jet
    }

    /// Jet of the coordinate function `x -> x_i` (0-based `i`).
    pub fn coordinate(i: usize, base: Arc<[f64]>, order: usize, dim: usize) -> Result<Self> {
        if i >= base.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                bound: base.len(),
            });
        }
        let x0 = base[i];
        let nvars = base.len();
        let mut jet = Self::zero(base, order, dim);
        jet.coeffs[0] = x0;
        if order >= 1 {
            let pos = jet.space.position(&MultiIndex::unit(nvars, i)).unwrap();
            jet.coeffs[pos << dim] = 1.0;
        }
        Ok(jet)
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> &Arc<[f64]> {
        &self.base
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    fn blades(&self) -> usize {
        1 << self.dim
    }

    /// Raw coefficients of position `pos` in the space's enumeration.
    pub fn coeff_at(&self, pos: usize) -> &[f64] {
        let n = self.blades();
        &self.coeffs[pos * n..(pos + 1) * n]
    }

    /// Taylor coefficient `d^alpha f(x0) / alpha!`; zero beyond the order.
    pub fn coeff(&self, alpha: &MultiIndex) -> Multivector {
        match self.space.position(alpha) {
            Some(pos) => Multivector::from_coeffs(self.dim, self.coeff_at(pos).to_vec()).unwrap(),
            None => Multivector::zero(self.dim),
        }
    }

    /// Partial derivative `d^alpha f(x0)`.
    pub fn derivative(&self, alpha: &MultiIndex) -> Multivector {
        self.coeff(alpha).scale(alpha.factorial())
    }

    /// The function value at the base point.
    pub fn value(&self) -> Multivector {
        Multivector::from_coeffs(self.dim, self.coeff_at(0).to_vec()).unwrap()
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::SignatureMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.space.order != other.space.order {
            return Err(Error::JetMismatch(format!(
                "orders differ: {} vs {}",
                self.space.order, other.space.order
            )));
        }
        if !Arc::ptr_eq(&self.base, &other.base) && self.base[..] != other.base[..] {
            return Err(Error::JetMismatch(format!(
                "base points differ: {:?} vs {:?}",
                &self.base[..],
                &other.base[..]
            )));
        }
        Ok(())
    }

    fn with_coeffs(&self, coeffs: Vec<f64>) -> Self {
        Self {
            space: Arc::clone(&self.space),
            dim: self.dim,
            base: Arc::clone(&self.base),
            coeffs,
        }
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.with_coeffs(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.with_coeffs(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect()))
    }

    pub fn scale(&self, s: f64) -> Jet {
        self.with_coeffs(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    /// In-place `self += s * other`.
    pub fn add_scaled(&mut self, other: &Jet, s: f64) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
        Ok(())
    }

    fn nonzero_lists(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.blades();
        self.coeffs
            .chunks(n)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(b, v)| (b, *v))
                    .collect()
            })
            .collect()
    }

    /// Truncated Cauchy product `self * other`, coefficients multiplied in
    /// this operand order.
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        let n = self.blades();
        let table = cayley_table(self.dim);
        let a_nz = self.nonzero_lists();
        let b_nz = other.nonzero_lists();
        let mut out = vec![0.0; self.coeffs.len()];
        for (ia, alist) in a_nz.iter().enumerate() {
            if alist.is_empty() {
                continue;
            }
            for (ib, &target) in self.space.sums[ia].iter().enumerate() {
                let blist = &b_nz[ib];
                if blist.is_empty() {
                    continue;
                }
                let dst = &mut out[target as usize * n..(target as usize + 1) * n];
                for &(ba, va) in alist {
                    let row = &table[ba * n..(ba + 1) * n];
                    for &(bb, vb) in blist {
                        dst[ba ^ bb] += row[bb] * va * vb;
                    }
                }
            }
        }
        Ok(self.with_coeffs(out))
    }

    /// `c * self` for a constant multivector `c`.
    pub fn left_mul_const(&self, c: &Multivector) -> Result<Jet> {
        self.mul_const(c, true)
    }

    /// `self * c` for a constant multivector `c`.
    pub fn right_mul_const(&self, c: &Multivector) -> Result<Jet> {
        self.mul_const(c, false)
    }

    fn mul_const(&self, c: &Multivector, left: bool) -> Result<Jet> {
        if c.dim() != self.dim {
            return Err(Error::SignatureMismatch {
                left: c.dim(),
                right: self.dim,
            });
        }
        let n = self.blades();
        let mut out = vec![0.0; self.coeffs.len()];
        for (src, dst) in self.coeffs.chunks(n).zip(out.chunks_mut(n)) {
            if left {
                gp_accumulate(self.dim, c.coeffs(), src, dst);
            } else {
                gp_accumulate(self.dim, src, c.coeffs(), dst);
            }
        }
        Ok(self.with_coeffs(out))
    }

    /// Applies `f` to every Taylor coefficient; `f` must be linear.
    pub fn map_coeffs(&self, f: impl Fn(&Multivector) -> Multivector) -> Jet {
        let n = self.blades();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in self.coeffs.chunks(n) {
            let mv = Multivector::from_coeffs(self.dim, c.to_vec()).unwrap();
            out.extend_from_slice(f(&mv).coeffs());
        }
        self.with_coeffs(out)
    }

    pub fn reverse(&self) -> Jet {
        self.map_coeffs(Multivector::reverse)
    }

    pub fn conjugate(&self) -> Jet {
        self.map_coeffs(Multivector::conjugate)
    }

    /// Keeps only the blades whose grade satisfies `keep`, coefficient-wise.
    pub fn project_where(&self, keep: impl Fn(u32) -> bool) -> Jet {
        let n = self.blades();
        let mut out = self.coeffs.clone();
        for c in out.chunks_mut(n) {
            for (mask, v) in c.iter_mut().enumerate() {
                if !keep((mask as u32).count_ones()) {
                    *v = 0.0;
                }
            }
        }
        self.with_coeffs(out)
    }

    /// Jet of the scalar part.
    pub fn scalar_part(&self) -> Jet {
        self.project_where(|g| g == 0)
    }

    /// Jet of the coefficient of one blade, as a scalar jet.
    pub fn blade_component(&self, mask: usize) -> Jet {
        let n = self.blades();
        let mut out = vec![0.0; self.coeffs.len()];
        for (src, dst) in self.coeffs.chunks(n).zip(out.chunks_mut(n)) {
            dst[0] = src[mask];
        }
        self.with_coeffs(out)
    }

    pub fn is_scalar(&self) -> bool {
        let n = self.blades();
        self.coeffs
            .chunks(n)
            .all(|c| c[1..].iter().all(|&v| v == 0.0))
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Largest absolute coefficient outside the blades accepted by `keep`.
    pub fn max_abs_outside(&self, keep: impl Fn(u32) -> bool) -> f64 {
        let n = self.blades();
        let mut m: f64 = 0.0;
        for c in self.coeffs.chunks(n) {
            for (mask, v) in c.iter().enumerate() {
                if !keep((mask as u32).count_ones()) {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }

    /// Scalar coefficient of every position (blade 0).
    fn scalar_series(&self) -> Vec<f64> {
        self.coeffs.chunks(self.blades()).map(|c| c[0]).collect()
    }

    fn from_scalar_series(&self, series: &[f64]) -> Jet {
        let n = self.blades();
        let mut out = vec![0.0; self.coeffs.len()];
        for (pos, &v) in series.iter().enumerate() {
            out[pos * n] = v;
        }
        self.with_coeffs(out)
    }

    fn scalar_series_mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len()];
        for (ia, &va) in a.iter().enumerate() {
            if va == 0.0 {
                continue;
            }
            for (ib, &target) in self.space.sums[ia].iter().enumerate() {
                out[target as usize] += va * b[ib];
            }
        }
        out
    }

    fn require_positive_scalar(&self) -> Result<f64> {
        if !self.is_scalar() {
            return Err(Error::Domain("real power of a jet with non-scalar coefficients".into()));
        }
        let u0 = self.coeffs[0];
        if !(u0 > 0.0) {
            return Err(Error::Domain(format!(
                "real power needs a positive base value, got {u0:e}"
            )));
        }
        Ok(u0)
    }

    /// `u^alpha` for a scalar jet with positive value, through the univariate
    /// expansion `sum_k binom(alpha, k) u0^{alpha-k} (u - u0)^k` in Horner form.
    pub fn scalar_power(&self, alpha: f64) -> Result<Jet> {
        let u0 = self.require_positive_scalar()?;
        let order = self.order();
        let mut coef = Vec::with_capacity(order + 1);
        let mut binom = 1.0;
        for k in 0..=order {
            coef.push(binom * u0.powf(alpha - k as f64));
            binom *= (alpha - k as f64) / (k as f64 + 1.0);
        }
        let mut delta = self.scalar_series();
        delta[0] = 0.0;
        let mut acc = vec![0.0; delta.len()];
        acc[0] = coef[order];
        for k in (0..order).rev() {
            acc = self.scalar_series_mul(&acc, &delta);
            acc[0] += coef[k];
        }
        Ok(self.from_scalar_series(&acc))
    }

    /// `1 / u` for a scalar jet with positive value.
    pub fn reciprocal(&self) -> Result<Jet> {
        self.scalar_power(-1.0)
    }

    /// `d f / d x_i`; the result has order one less.
    pub fn partial(&self, i: usize) -> Result<Jet> {
        if i >= self.nvars() {
            return Err(Error::IndexOutOfRange {
                index: i,
                bound: self.nvars(),
            });
        }
        let lower = match &self.space.lower {
            Some(lo) => Arc::clone(lo),
            None => {
                return Err(Error::OrderExhausted {
                    needed: 1,
                    available: 0,
                })
            }
        };
        let n = self.blades();
        let mut out = vec![0.0; lower.len() * n];
        for (dst, &(src, factor)) in out.chunks_mut(n).zip(&self.space.partials[i]) {
            let s = &self.coeffs[src as usize * n..(src as usize + 1) * n];
            for (d, v) in dst.iter_mut().zip(s) {
                *d = factor * v;
            }
        }
        Ok(Jet {
            space: lower,
            dim: self.dim,
            base: Arc::clone(&self.base),
            coeffs: out,
        })
    }

    /// Drops all coefficients above total order `order`.
    pub fn truncate(&self, order: usize) -> Result<Jet> {
        if order > self.order() {
            return Err(Error::OrderExhausted {
                needed: order,
                available: self.order(),
            });
        }
        let space = JetSpace::get(self.nvars(), order);
        let len = space.len() << self.dim;
        Ok(Jet {
            space,
            dim: self.dim,
            base: Arc::clone(&self.base),
            coeffs: self.coeffs[..len].to_vec(),
        })
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.nvars() == other.nvars()
            && self.order() == other.order()
            && self.base == other.base
            && self.coeffs == other.coeffs
    }
}

/// Polynomial in the coordinates with multivector coefficients. Monomials are
/// real, so it does not matter on which side a coefficient is written.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFunction {
    nvars: usize,
    dim: usize,
    terms: Vec<(MultiIndex, Multivector)>,
}

impl PolynomialFunction {
    pub fn zero(nvars: usize, dim: usize) -> Self {
        Self {
            nvars,
            dim,
            terms: Vec::new(),
        }
    }

    pub fn new(nvars: usize, dim: usize, terms: Vec<(MultiIndex, Multivector)>) -> Result<Self> {
        for (alpha, c) in &terms {
            if alpha.nvars() != nvars {
                return Err(Error::Usage(format!(
                    "monomial {alpha} has {} variables, expected {nvars}",
                    alpha.nvars()
                )));
            }
            if c.dim() != dim {
                return Err(Error::SignatureMismatch {
                    left: c.dim(),
                    right: dim,
                });
            }
        }
        Ok(Self { nvars, dim, terms })
    }

    /// The single term `c x^alpha`.
    pub fn monomial(alpha: MultiIndex, c: Multivector) -> Self {
        Self {
            nvars: alpha.nvars(),
            dim: c.dim(),
            terms: vec![(alpha, c)],
        }
    }

    /// The coordinate function `x_i` times `c`.
    pub fn coordinate(nvars: usize, i: usize, c: Multivector) -> Self {
        Self::monomial(MultiIndex::unit(nvars, i), c)
    }

    pub fn constant(nvars: usize, c: Multivector) -> Self {
        Self::monomial(MultiIndex::zero(nvars), c)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(MultiIndex, Multivector)] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(a, _)| a.total()).max().unwrap_or(0)
    }

    /// Random polynomial containing every monomial of degree `<= degree`,
    /// with coefficients uniform in `[-1, 1]` on each blade of grade
    /// `<= max_grade`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        nvars: usize,
        dim: usize,
        degree: usize,
        max_grade: usize,
    ) -> Self {
        let mut terms = Vec::new();
        for d in 0..=degree {
            for alpha in indices_of_degree(nvars, d) {
                let mut c = Multivector::zero(dim);
                for (mask, v) in c.coeffs_mut().iter_mut().enumerate() {
                    if mask.count_ones() as usize <= max_grade {
                        *v = rng.gen_range(-1.0..=1.0);
                    }
                }
                terms.push((alpha, c));
            }
        }
        Self { nvars, dim, terms }
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.nvars {
            return Err(Error::Usage(format!(
                "point has {len} coordinates, polynomial has {} variables",
                self.nvars
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Multivector> {
        self.check_point(x.len())?;
        let mut out = Multivector::zero(self.dim);
        for (alpha, c) in &self.terms {
            let m: f64 = alpha
                .exponents()
                .iter()
                .zip(x)
                .map(|(&e, &xi)| xi.powi(e as i32))
                .product();
            out += &c.scale(m);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.nvars != other.nvars || self.dim != other.dim {
            return Err(Error::Usage("polynomials over different spaces".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            nvars: self.nvars,
            dim: self.dim,
            terms,
        }
        .collected())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            nvars: self.nvars,
            dim: self.dim,
            terms: self.terms.iter().map(|(a, c)| (a.clone(), c.scale(s))).collect(),
        }
    }

    /// Product with coefficients multiplied in operand order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.nvars != other.nvars || self.dim != other.dim {
            return Err(Error::Usage("polynomials over different spaces".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let s = MultiIndex(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
                terms.push((s, ca * cb));
            }
        }
        Ok(Self {
            nvars: self.nvars,
            dim: self.dim,
            terms,
        }
        .collected())
    }

    /// Merges repeated monomials and drops zero terms, sorted by multi-index.
    fn collected(self) -> Self {
        let mut merged: Vec<(MultiIndex, Multivector)> = Vec::new();
        let mut terms = self.terms;
        terms.sort_by(|x, y| x.0.cmp(&y.0));
        for (a, c) in terms {
            match merged.last_mut() {
                Some((last, acc)) if *last == a => *acc += &c,
                _ => merged.push((a, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        Self {
            nvars: self.nvars,
            dim: self.dim,
            terms: merged,
        }
    }

    /// Exact Taylor coefficients at `base`, by binomial expansion of every
    /// monomial around the base point.
    pub fn to_jet(&self, base: Arc<[f64]>, order: usize) -> Result<Jet> {
        self.check_point(base.len())?;
        let mut jet = Jet::zero(Arc::clone(&base), order, self.dim);
        let n = 1usize << self.dim;
        let space = Arc::clone(&jet.space);
        for (gamma, c) in &self.terms {
            // enumerate beta <= gamma with |beta| <= order
            let g = gamma.exponents();
            let mut beta = vec![0u8; g.len()];
            loop {
                let total: usize = beta.iter().map(|&b| b as usize).sum();
                if total <= order {
                    let mut w = 1.0;
                    for i in 0..g.len() {
                        w *= binomial(g[i] as u32, beta[i] as u32)
                            * base[i].powi((g[i] - beta[i]) as i32);
                    }
                    if w != 0.0 {
                        let pos = space.position(&MultiIndex(beta.clone())).unwrap();
                        for (d, v) in jet.coeffs[pos * n..(pos + 1) * n].iter_mut().zip(c.coeffs()) {
                            *d += w * v;
                        }
                    }
                }
                if !odometer_step(&mut beta, g) {
                    break;
                }
            }
        }
        Ok(jet)
    }

    /// Jet of `x -> f(y_1(x), ..., y_n(x))` from scalar coordinate jets `y_i`.
    pub fn compose(&self, coords: &[Jet]) -> Result<Jet> {
        if coords.len() != self.nvars {
            return Err(Error::JetMismatch(format!(
                "{} coordinate jets for a polynomial in {} variables",
                coords.len(),
                self.nvars
            )));
        }
        let first = coords
            .first()
            .ok_or_else(|| Error::JetMismatch("no coordinate jets".into()))?;
        for y in coords {
            first.check_compatible(y)?;
            if !y.is_scalar() {
                return Err(Error::JetMismatch("coordinate jets must be scalar".into()));
            }
        }
        if first.dim != self.dim {
            return Err(Error::SignatureMismatch {
                left: first.dim,
                right: self.dim,
            });
        }
        let one = Jet::constant(Arc::clone(&first.base), first.order(), &Multivector::one(self.dim));
        let degree = self.degree();
        // powers[i][k] = y_i^k as a scalar series
        let mut powers: Vec<Vec<Vec<f64>>> = Vec::with_capacity(coords.len());
        for y in coords {
            let s = y.scalar_series();
            let mut pw = vec![one.scalar_series()];
            for k in 1..=degree {
                let next = first.scalar_series_mul(&pw[k - 1], &s);
                pw.push(next);
            }
            powers.push(pw);
        }
        let n = 1usize << self.dim;
        let mut out = vec![0.0; first.coeffs.len()];
        for (alpha, c) in &self.terms {
            let mut mono = one.scalar_series();
            for (i, &e) in alpha.exponents().iter().enumerate() {
                if e > 0 {
                    mono = first.scalar_series_mul(&mono, &powers[i][e as usize]);
                }
            }
            for (pos, &m) in mono.iter().enumerate() {
                if m != 0.0 {
                    for (d, v) in out[pos * n..(pos + 1) * n].iter_mut().zip(c.coeffs()) {
                        *d += m * v;
                    }
                }
            }
        }
        Ok(first.with_coeffs(out))
    }
}

/// Advances `beta` through the box `0..=bound` componentwise; false once wrapped.
fn odometer_step(beta: &mut [u8], bound: &[u8]) -> bool {
    for (b, &g) in beta.iter_mut().zip(bound) {
        if *b < g {
            *b += 1;
            return true;
        }
        *b = 0;
    }
    false
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central-difference estimate of `d^alpha f(x0)`, `|alpha| <= 3`.
///
/// Steps are `1e-4` for `|alpha| <= 2` and `1e-3` for `|alpha| = 3`. The
/// estimate is exact for quadratics up to rounding; accuracy degrades with
/// higher derivatives of `f` and with larger `|alpha|`.
pub fn finite_difference(
    f: &dyn Fn(&[f64]) -> Multivector,
    x0: &[f64],
    alpha: &MultiIndex,
) -> Result<Multivector> {
    let total = alpha.total();
    if total > 3 {
        return Err(Error::Usage(format!(
            "finite differences support |alpha| <= 3, got {total}"
        )));
    }
    if alpha.nvars() != x0.len() {
        return Err(Error::Usage("multi-index and point dimension differ".into()));
    }
    let h = if total <= 2 { 1e-4 } else { 1e-3 };
    // per-axis stencils: (offset in steps, weight) with the 1/h^k factor folded in
    let stencils: Vec<Vec<(f64, f64)>> = alpha
        .exponents()
        .iter()
        .map(|&k| match k {
            0 => vec![(0.0, 1.0)],
            1 => vec![(1.0, 0.5 / h), (-1.0, -0.5 / h)],
            2 => vec![(1.0, 1.0 / (h * h)), (0.0, -2.0 / (h * h)), (-1.0, 1.0 / (h * h))],
            _ => {
                let s = 0.5 / (h * h * h);
                vec![(2.0, s), (1.0, -2.0 * s), (-1.0, 2.0 * s), (-2.0, -s)]
            }
        })
        .collect();
    let probe = f(x0);
    let mut acc = Multivector::zero(probe.dim());
    let mut choice = vec![0usize; x0.len()];
    let mut point = x0.to_vec();
    loop {
        let mut w = 1.0;
        for (i, st) in stencils.iter().enumerate() {
            let (off, wi) = st[choice[i]];
            point[i] = x0[i] + off * h;
            w *= wi;
        }
        acc += &f(&point).scale(w);
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < stencils[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(v: &[f64]) -> Arc<[f64]> {
        Arc::from(v.to_vec())
    }

    #[test]
    fn graded_enumeration() {
        let s = JetSpace::get(2, 2);
        let got: Vec<String> = s.indices().iter().map(|a| a.to_string()).collect();
        assert_eq!(got, ["(0,0)", "(1,0)", "(0,1)", "(2,0)", "(1,1)", "(0,2)"]);
        // C(m+K, K)
        assert_eq!(JetSpace::get(5, 5).len(), 252);
        assert_eq!(JetSpace::get(8, 6).len(), 3003);
    }

    #[test]
    fn coordinate_jet_definition() {
        let j = Jet::coordinate(0, base(&[2.0, 0.0, 1.0]), 2, 3).unwrap();
        assert_eq!(j.value(), Multivector::scalar(3, 2.0));
        assert_eq!(j.coeff(&MultiIndex::new(vec![1, 0, 0])), Multivector::one(3));
        assert!(j.coeff(&MultiIndex::new(vec![0, 1, 0])).is_zero());
        assert!(j.coeff(&MultiIndex::new(vec![2, 0, 0])).is_zero());
        assert!(Jet::coordinate(3, base(&[2.0, 0.0, 1.0]), 2, 3).is_err());
    }

    #[test]
    fn partial_of_coordinate_is_kronecker() {
        let b = base(&[0.3, -1.0]);
        for i in 0..2 {
            let y = Jet::coordinate(i, Arc::clone(&b), 3, 2).unwrap();
            for j in 0..2 {
                let d = y.partial(j).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(d.value(), Multivector::scalar(2, expect));
                assert_eq!(d.order(), 2);
                assert_eq!(d.max_abs(), expect);
            }
        }
    }

    #[test]
    fn vector_from_coordinate_jets() {
        let b = base(&[1.0, -2.0, 0.5]);
        let mut acc = Jet::zero(Arc::clone(&b), 2, 3);
        for i in 0..3 {
            let c = Jet::coordinate(i, Arc::clone(&b), 2, 3).unwrap();
            acc = acc.add(&c.left_mul_const(&Multivector::generator(3, i)).unwrap()).unwrap();
        }
        assert_eq!(acc.value(), Multivector::from_vector(3, &[1.0, -2.0, 0.5]));
    }

    #[test]
    fn product_values_and_order() {
        let b = base(&[3.0, -2.0]);
        let x = Jet::coordinate(0, Arc::clone(&b), 2, 2).unwrap();
        let y = Jet::coordinate(1, Arc::clone(&b), 2, 2).unwrap();
        assert_eq!(x.mul(&y).unwrap().value(), Multivector::scalar(2, -6.0));
        let e1 = Jet::constant(Arc::clone(&b), 2, &Multivector::generator(2, 0));
        let e2 = Jet::constant(Arc::clone(&b), 2, &Multivector::generator(2, 1));
        assert_eq!(e1.mul(&e2).unwrap().value(), Multivector::blade(2, 0b11, 1.0));
        assert_eq!(e2.mul(&e1).unwrap().value(), Multivector::blade(2, 0b11, -1.0));
    }

    #[test]
    fn mismatched_jets_are_rejected() {
        let a = Jet::coordinate(0, base(&[1.0, 2.0]), 2, 2).unwrap();
        let b = Jet::coordinate(0, base(&[1.0, 2.5]), 2, 2).unwrap();
        let c = Jet::coordinate(0, base(&[1.0, 2.0]), 3, 2).unwrap();
        assert!(matches!(a.mul(&b), Err(Error::JetMismatch(_))));
        assert!(matches!(a.add(&c), Err(Error::JetMismatch(_))));
    }

    #[test]
    fn square_root_and_identity_power() {
        let four = Jet::constant(base(&[0.0]), 3, &Multivector::scalar(1, 4.0));
        let r = four.scalar_power(0.5).unwrap();
        assert_eq!(r.value(), Multivector::scalar(1, 2.0));
        assert_eq!(r.max_abs(), 2.0);
        let b = base(&[1.5, 0.5]);
        let x = Jet::coordinate(0, Arc::clone(&b), 3, 1).unwrap();
        let u = x.mul(&x).unwrap().add(&Jet::constant(Arc::clone(&b), 3, &Multivector::one(1))).unwrap();
        let same = u.scalar_power(1.0).unwrap();
        assert!(same.sub(&u).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn power_domain_errors() {
        let b = base(&[0.5]);
        let neg = Jet::constant(Arc::clone(&b), 2, &Multivector::scalar(1, -1.0));
        assert!(matches!(neg.scalar_power(0.5), Err(Error::Domain(_))));
        let vec = Jet::constant(Arc::clone(&b), 2, &Multivector::from_paravector(1, 1.0, &[1.0]));
        assert!(matches!(vec.reciprocal(), Err(Error::Domain(_))));
    }

    #[test]
    fn reciprocal_of_constant() {
        let two = Jet::constant(base(&[0.1, 0.2]), 2, &Multivector::scalar(2, 2.0));
        assert_eq!(two.reciprocal().unwrap().value(), Multivector::scalar(2, 0.5));
    }

    #[test]
    fn partial_of_square() {
        let b = base(&[0.7, 0.0]);
        let x = Jet::coordinate(0, Arc::clone(&b), 2, 1).unwrap();
        let sq = x.mul(&x).unwrap();
        assert_eq!(sq.partial(0).unwrap().value(), Multivector::scalar(1, 1.4));
        let c = Jet::constant(Arc::clone(&b), 2, &Multivector::generator(1, 0));
        assert_eq!(c.partial(1).unwrap().max_abs(), 0.0);
        let flat = Jet::constant(b, 0, &Multivector::one(1));
        assert!(matches!(flat.partial(0), Err(Error::OrderExhausted { .. })));
    }

    #[test]
    fn polynomial_square_expansion() {
        let f = PolynomialFunction::monomial(MultiIndex::new(vec![2, 0]), Multivector::one(1));
        let j = f.to_jet(base(&[3.0, 1.0]), 2).unwrap();
        assert_eq!(j.value(), Multivector::scalar(1, 9.0));
        assert_eq!(j.coeff(&MultiIndex::new(vec![1, 0])), Multivector::scalar(1, 6.0));
        assert_eq!(j.coeff(&MultiIndex::new(vec![2, 0])), Multivector::scalar(1, 1.0));
        assert!(j.coeff(&MultiIndex::new(vec![0, 1])).is_zero());
        let c = PolynomialFunction::constant(2, Multivector::generator(1, 0));
        let cj = c.to_jet(base(&[3.0, 1.0]), 2).unwrap();
        assert_eq!(cj.value(), Multivector::generator(1, 0));
        assert_eq!(cj.partial(0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn compose_with_identity_coordinates() {
        let b = base(&[0.4, -1.1]);
        let ys: Vec<Jet> = (0..2)
            .map(|i| Jet::coordinate(i, Arc::clone(&b), 3, 2).unwrap())
            .collect();
        let f = PolynomialFunction::coordinate(2, 0, Multivector::one(2));
        let j = f.compose(&ys).unwrap();
        assert!(j.sub(&ys[0]).unwrap().max_abs() == 0.0);
        let g = PolynomialFunction::monomial(MultiIndex::new(vec![1, 1]), Multivector::one(2));
        let direct = ys[0].mul(&ys[1]).unwrap();
        assert!(g.compose(&ys).unwrap().sub(&direct).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn finite_difference_quadratic() {
        let f = |x: &[f64]| Multivector::scalar(1, x[0] * x[0]);
        let d = finite_difference(&f, &[0.3, 0.2], &MultiIndex::new(vec![2, 0])).unwrap();
        assert!((d.scalar_part() - 2.0).abs() < 1e-6);
        let c = |_: &[f64]| Multivector::scalar(1, 5.0);
        let d = finite_difference(&c, &[0.3, 0.2], &MultiIndex::new(vec![1, 1])).unwrap();
        assert!(d.scalar_part().abs() < 1e-6);
        assert!(finite_difference(&c, &[0.3, 0.2], &MultiIndex::new(vec![3, 1])).is_err());
    }

    #[test]
    fn truncation_keeps_prefix() {
        let b = base(&[0.5, 0.25]);
        let x = Jet::coordinate(0, Arc::clone(&b), 3, 1).unwrap();
        let cube = x.mul(&x).unwrap().mul(&x).unwrap();
        let t = cube.truncate(1).unwrap();
        assert_eq!(t.order(), 1);
        assert_eq!(t.coeff(&MultiIndex::new(vec![1, 0])), cube.coeff(&MultiIndex::new(vec![1, 0])));
        assert!(cube.truncate(4).is_err());
    }

    #[test]
    fn polynomial_product_is_noncommutative() {
        let x = PolynomialFunction::coordinate(1, 0, Multivector::generator(2, 0));
        let y = PolynomialFunction::coordinate(1, 0, Multivector::generator(2, 1));
        let xy = x.mul(&y).unwrap();
        let yx = y.mul(&x).unwrap();
        assert_eq!(xy.add(&yx).unwrap().terms().len(), 0);
        assert_eq!(xy.degree(), 2);
    }
}
