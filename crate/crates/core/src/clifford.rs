//! Dense real Clifford algebra `Cl_m` with every generator squaring to `-1`.
//!
//! A multivector stores `2^m` coefficients. The coefficient at index `mask`
//! belongs to the blade `e_{i1} e_{i2} ... e_{ik}` whose generators are the set
//! bits of `mask`, written in ascending order. Generators are 0-based in code:
//! bit `i` is the generator usually written `e_{i+1}`.
//!
//! The sign of every blade product is looked up in a Cayley sign table that is
//! built once per generator count and shared by all threads.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of generators (256 blades).
pub const MAX_GENERATORS: usize = 8;

/// Relative tolerance for deciding that a product `w * conj(w)` is scalar.
pub const VERSOR_TOLERANCE: f64 = 1e-9;

/// Split `R^{p+q} = R^p (+) R^q` of the generator set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraSignature {
    pub p: usize,
    pub q: usize,
}

impl AlgebraSignature {
    /// A signature usable by the slice operators: both factors non-trivial.
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::Usage(format!(
                "slice signature needs p >= 1 and q >= 1, got p={p}, q={q}"
            )));
        }
        if p + q > MAX_GENERATORS {
            return Err(Error::Usage(format!(
                "p+q = {} exceeds the maximum of {MAX_GENERATORS} generators",
                p + q
            )));
        }
        Ok(Self { p, q })
    }

    /// Total number of generators `m = p + q`.
    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    pub fn blades(&self) -> usize {
        1 << self.dim()
    }

    /// Generator indices belonging to the first factor.
    pub fn p_range(&self) -> std::ops::Range<usize> {
        0..self.p
    }

    /// Generator indices belonging to the second factor.
    pub fn q_range(&self) -> std::ops::Range<usize> {
        self.p..self.p + self.q
    }
}

impl fmt::Display for AlgebraSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

/// Sign of `e_A e_B` for blade masks `a`, `b`, computed from the number of
/// transpositions needed to sort the concatenated generator list plus one
/// factor of `-1` for every generator shared by both blades.
pub fn blade_sign(a: usize, b: usize) -> f64 {
    let mut swaps = 0u32;
    let mut rest = a >> 1;
    while rest != 0 {
        swaps += (rest & b).count_ones();
        rest >>= 1;
    }
    swaps += (a & b).count_ones();
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

static CAYLEY: [OnceLock<Vec<f64>>; MAX_GENERATORS + 1] = [const { OnceLock::new() }; MAX_GENERATORS + 1];

/// Cayley sign table for `dim` generators: entry `a * 2^dim + b` is the sign of
/// `e_A e_B`; the product blade is always `a ^ b`.
pub fn cayley_table(dim: usize) -> &'static [f64] {
    assert!(dim <= MAX_GENERATORS, "at most {MAX_GENERATORS} generators supported");
    CAYLEY[dim].get_or_init(|| {
        let n = 1usize << dim;
        let mut table = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                table.push(blade_sign(a, b));
            }
        }
        table
    })
}

/// `out += a * b` on raw coefficient slices, skipping zero coefficients.
pub(crate) fn gp_accumulate(dim: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    let n = 1usize << dim;
    let table = cayley_table(dim);
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let row = &table[i * n..(i + 1) * n];
        for (j, &bj) in b.iter().enumerate() {
            if bj != 0.0 {
                out[i ^ j] += row[j] * ai * bj;
            }
        }
    }
}

fn grade_sign_reverse(k: u32) -> f64 {
    // (-1)^{k(k-1)/2}
    if (k * k.saturating_sub(1) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn grade_sign_conjugate(k: u32) -> f64 {
    // (-1)^{k(k+1)/2}
    if (k * (k + 1) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Dense multivector of `Cl_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multivector {
    dim: usize,
    coeffs: Vec<f64>,
}

impl Multivector {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= MAX_GENERATORS, "at most {MAX_GENERATORS} generators supported");
        Self {
            dim,
            coeffs: vec![0.0; 1 << dim],
        }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut mv = Self::zero(dim);
        mv.coeffs[0] = value;
        mv
    }

    pub fn one(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    /// The blade with the given generator mask and coefficient.
    pub fn blade(dim: usize, mask: usize, value: f64) -> Self {
        assert!(mask < (1 << dim), "blade mask {mask:#b} outside Cl_{dim}");
        let mut mv = Self::zero(dim);
        mv.coeffs[mask] = value;
        mv
    }

    /// The generator with 0-based index `i`.
    pub fn generator(dim: usize, i: usize) -> Self {
        Self::blade(dim, 1 << i, 1.0)
    }

    pub fn from_coeffs(dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != 1 << dim {
            return Err(Error::Usage(format!(
                "Cl_{dim} needs {} coefficients, got {}",
                1 << dim,
                coeffs.len()
            )));
        }
        Ok(Self { dim, coeffs })
    }

    /// Grade-1 element `sum_i coords[i] e_i`.
    pub fn from_vector(dim: usize, coords: &[f64]) -> Self {
        assert!(coords.len() <= dim, "{} coordinates for {dim} generators", coords.len());
        let mut mv = Self::zero(dim);
        for (i, &c) in coords.iter().enumerate() {
            mv.coeffs[1 << i] = c;
        }
        mv
    }

    /// Paravector `x0 + sum_i coords[i] e_i`.
    pub fn from_paravector(dim: usize, x0: f64, coords: &[f64]) -> Self {
        let mut mv = Self::from_vector(dim, coords);
        mv.coeffs[0] = x0;
        mv
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> f64 {
        self.coeffs[mask]
    }

    pub fn scalar_part(&self) -> f64 {
        self.coeffs[0]
    }

    /// Grade-1 coefficients in generator order.
    pub fn vector_coords(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.coeffs[1 << i]).collect()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::SignatureMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Geometric product `self * other`.
    pub fn geometric_product(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.dim);
        gp_accumulate(self.dim, &self.coeffs, &other.coeffs, &mut out.coeffs);
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    fn map_grades(&self, sign: impl Fn(u32) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(mask, &c)| c * sign((mask as u32).count_ones()))
            .collect();
        Self {
            dim: self.dim,
            coeffs,
        }
    }

    /// Reversion: reverses the generator order inside every blade.
    pub fn reverse(&self) -> Self {
        self.map_grades(grade_sign_reverse)
    }

    /// Clifford conjugation: reversion composed with `e_i -> -e_i`.
    pub fn conjugate(&self) -> Self {
        self.map_grades(grade_sign_conjugate)
    }

    /// Main involution `e_i -> -e_i`.
    pub fn grade_involution(&self) -> Self {
        self.map_grades(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
    }

    pub fn grade_project(&self, k: usize) -> Result<Self> {
        if k > self.dim {
            return Err(Error::Usage(format!(
                "grade {k} out of range 0..={}",
                self.dim
            )));
        }
        Ok(self.project_where(|g| g == k as u32))
    }

    /// Keeps the blades whose grade satisfies `keep`.
    pub fn project_where(&self, keep: impl Fn(u32) -> bool) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(mask, &c)| if keep((mask as u32).count_ones()) { c } else { 0.0 })
            .collect();
        Self {
            dim: self.dim,
            coeffs,
        }
    }

    /// Euclidean norm over all blade coefficients.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Euclidean norm of the blades whose grade fails `keep`.
    pub fn residue_outside(&self, keep: impl Fn(u32) -> bool) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(mask, _)| !keep((*mask as u32).count_ones()))
            .map(|(_, c)| c * c)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (mask, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if first {
                write!(f, "{c}")?;
            } else if c < 0.0 {
                write!(f, " - {}", -c)?;
            } else {
                write!(f, " + {c}")?;
            }
            first = false;
            if mask != 0 {
                write!(f, "*e")?;
                for i in 0..self.dim {
                    if mask & (1 << i) != 0 {
                        write!(f, "{}", i + 1)?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add<&Multivector> for &Multivector {
    type Output = Multivector;
    fn add(self, rhs: &Multivector) -> Multivector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Multivector {
    type Output = Multivector;
    fn add(mut self, rhs: Multivector) -> Multivector {
        self += &rhs;
        self
    }
}

impl AddAssign<&Multivector> for Multivector {
    fn add_assign(&mut self, rhs: &Multivector) {
        assert_eq!(self.dim, rhs.dim, "signature mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Sub<&Multivector> for &Multivector {
    type Output = Multivector;
    fn sub(self, rhs: &Multivector) -> Multivector {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for Multivector {
    type Output = Multivector;
    fn sub(mut self, rhs: Multivector) -> Multivector {
        self -= &rhs;
        self
    }
}

impl SubAssign<&Multivector> for Multivector {
    fn sub_assign(&mut self, rhs: &Multivector) {
        assert_eq!(self.dim, rhs.dim, "signature mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

/// Geometric product. Panics on a signature mismatch; use
/// [`Multivector::geometric_product`] for the fallible form.
impl Mul<&Multivector> for &Multivector {
    type Output = Multivector;
    fn mul(self, rhs: &Multivector) -> Multivector {
        self.geometric_product(rhs).expect("signature mismatch in geometric product")
    }
}

impl Mul for Multivector {
    type Output = Multivector;
    fn mul(self, rhs: Multivector) -> Multivector {
        &self * &rhs
    }
}

impl Mul<f64> for &Multivector {
    type Output = Multivector;
    fn mul(self, rhs: f64) -> Multivector {
        self.scale(rhs)
    }
}

impl Mul<f64> for Multivector {
    type Output = Multivector;
    fn mul(self, rhs: f64) -> Multivector {
        self.scale(rhs)
    }
}

/// A grade-1 multivector `x = sum_i x_i e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorValue {
    coords: Vec<f64>,
}

impl VectorValue {
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(coords.len() <= MAX_GENERATORS);
        Self { coords }
    }

    /// Reads the grade-1 part of `mv`, failing if other grades are present
    /// beyond `tol` relative to the vector norm.
    pub fn from_multivector(mv: &Multivector, tol: f64) -> Result<Self> {
        let coords = mv.vector_coords();
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        let residue = mv.residue_outside(|g| g == 1);
        if residue > tol * norm.max(f64::MIN_POSITIVE) && residue > 0.0 {
            return Err(Error::Domain(format!(
                "expected a vector, non-vector residue {residue:e} vs norm {norm:e}"
            )));
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_multivector(&self) -> Multivector {
        Multivector::from_vector(self.coords.len(), &self.coords)
    }

    pub fn norm_squared(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Components along the first `p` generators; the rest are zeroed.
    pub fn p_part(&self, p: usize) -> Self {
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, &c)| if i < p { c } else { 0.0 })
            .collect();
        Self { coords }
    }

    /// Components along generators `p..`; the first `p` are zeroed.
    pub fn q_part(&self, p: usize) -> Self {
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, &c)| if i >= p { c } else { 0.0 })
            .collect();
        Self { coords }
    }
}

/// `v^{-1} = -v / |v|^2`, since `v^2 = -|v|^2`.
pub fn vector_inverse(v: &VectorValue) -> Result<VectorValue> {
    let n2 = v.norm_squared();
    if n2 == 0.0 {
        return Err(Error::Singular("inverse of the zero vector".into()));
    }
    Ok(VectorValue::new(v.coords.iter().map(|c| -c / n2).collect()))
}

/// `w * conj(w)` reduced to its scalar, after checking that the remainder is
/// negligible. For a product of vectors (or paravectors) this is `|w|^2`.
fn versor_square_norm(w: &Multivector) -> Result<f64> {
    let prod = w * &w.conjugate();
    let s = prod.scalar_part();
    let residue = prod.residue_outside(|g| g == 0);
    if !(s > 0.0) || residue > VERSOR_TOLERANCE * s {
        return Err(Error::Domain(format!(
            "not an invertible versor: w*conj(w) has scalar {s:e} and non-scalar residue {residue:e}"
        )));
    }
    Ok(s)
}

/// Inverse of a versor (product of vectors or paravectors) as
/// `conj(w) / (w conj(w))`.
pub fn versor_inverse(w: &Multivector) -> Result<Multivector> {
    let s = versor_square_norm(w)?;
    Ok(w.conjugate().scale(1.0 / s))
}

/// `|w| = sqrt(w conj(w))`, multiplicative on versors.
pub fn versor_norm(w: &Multivector) -> Result<f64> {
    if w.is_zero() {
        return Ok(0.0);
    }
    Ok(versor_square_norm(w)?.sqrt())
}
