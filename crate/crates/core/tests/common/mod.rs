//! Reference implementations used as oracles by the integration tests.
//! None of them call into the library's product, jet or difference code.

#![allow(dead_code)]

use rand::Rng;
use slice_grav::clifford::Multivector;
use slice_grav::jet::{MultiIndex, PolynomialFunction};

/// Product of basis blades by explicit generator shuffling.
///
/// Concatenates the generator lists, bubble sorts them counting swaps and
/// cancels adjacent equal pairs with `e_i e_i = -1`.
pub fn naive_blade_product(a: usize, b: usize) -> (f64, usize) {
    let mut gens: Vec<usize> = (0..usize::BITS as usize).filter(|i| a >> i & 1 == 1).collect();
    gens.extend((0..usize::BITS as usize).filter(|i| b >> i & 1 == 1));
    let mut sign = 1.0;
    let mut sorted = false;
    while !sorted {
        sorted = true;
        for k in 1..gens.len() {
            if gens[k - 1] > gens[k] {
                gens.swap(k - 1, k);
                sign = -sign;
                sorted = false;
            }
        }
    }
    let mut mask = 0;
    let mut k = 0;
    while k < gens.len() {
        if k + 1 < gens.len() && gens[k] == gens[k + 1] {
            sign = -sign;
            k += 2;
        } else {
            mask |= 1 << gens[k];
            k += 1;
        }
    }
    (sign, mask)
}

pub fn naive_product(a: &Multivector, b: &Multivector) -> Multivector {
    let dim = a.dim();
    let mut out = vec![0.0; 1 << dim];
    for (i, &x) in a.coeffs().iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.coeffs().iter().enumerate() {
            let (s, m) = naive_blade_product(i, j);
            out[m] += s * x * y;
        }
    }
    Multivector::from_coeffs(dim, out).unwrap()
}

pub fn random_multivector<R: Rng>(rng: &mut R, dim: usize) -> Multivector {
    let coeffs = (0..1 << dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Multivector::from_coeffs(dim, coeffs).unwrap()
}

pub fn random_point<R: Rng>(rng: &mut R, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..r)).collect()
}

/// `‖a − b‖ / (‖a‖ + ‖b‖ + 1e-300)`.
pub fn rel(a: &Multivector, b: &Multivector) -> f64 {
    (a - b).norm() / (a.norm() + b.norm() + 1e-300)
}

fn falling(n: u8, k: u8) -> f64 {
    (0..k).map(|j| (n - j) as f64).product()
}

/// `∂^α p(x)` by differentiating each monomial by hand.
pub fn symbolic_derivative(p: &PolynomialFunction, alpha: &[u8], x: &[f64]) -> Multivector {
    let mut out = Multivector::zero(p.dim());
    for (beta, c) in p.terms() {
        let e = beta.exponents();
        if e.iter().zip(alpha).any(|(b, a)| b < a) {
            continue;
        }
        let mut w = 1.0;
        for i in 0..e.len() {
            w *= falling(e[i], alpha[i]) * x[i].powi((e[i] - alpha[i]) as i32);
        }
        out += &c.scale(w);
    }
    out
}

/// `Σ_i ∂_i² p(x)`.
pub fn symbolic_laplacian(p: &PolynomialFunction, x: &[f64]) -> Multivector {
    let n = p.nvars();
    let mut out = Multivector::zero(p.dim());
    for i in 0..n {
        let mut a = vec![0u8; n];
        a[i] = 2;
        out += &symbolic_derivative(p, &a, x);
    }
    out
}

/// Fourth-order central difference applied axis by axis, `|α| <= 3`.
pub fn fd_derivative(f: &dyn Fn(&[f64]) -> Multivector, x: &[f64], alpha: &[u8], h: f64) -> Multivector {
    match alpha.iter().position(|&a| a > 0) {
        None => f(x),
        Some(i) => {
            let mut rest = alpha.to_vec();
            rest[i] -= 1;
            let at = |t: f64| {
                let mut y = x.to_vec();
                y[i] += t * h;
                fd_derivative(f, &y, &rest, h)
            };
            (&(&at(-2.0) - &at(2.0)) + &(&at(1.0) - &at(-1.0)).scale(8.0)).scale(1.0 / (12.0 * h))
        }
    }
}

/// All multi-indices in `n` variables with total degree `<= d`.
pub fn multi_indices(n: usize, d: usize) -> Vec<Vec<u8>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..=d {
        for mut tail in multi_indices(n - 1, d - first) {
            tail.insert(0, first as u8);
            out.push(tail);
        }
    }
    out
}

pub fn factorial(alpha: &[u8]) -> f64 {
    alpha.iter().map(|&a| (1..=a as u32).product::<u32>() as f64).product()
}

pub fn index(alpha: &[u8]) -> MultiIndex {
    MultiIndex::new(alpha.to_vec())
}
