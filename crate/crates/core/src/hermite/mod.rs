//! Probabilists' Hermite polynomials and the moment algebra of
//! `J(Z) = Σ α_k H_k(Z)` for a standard normal `Z`.

mod matching;
mod polynomial;

use serde::{Deserialize, Serialize};

pub use matching::{match_moments, HermiteExpansion, MatchSettings};
pub use polynomial::{real_roots, Polynomial};

/// Normalisation of the basket whose moments are matched.
///
/// `A` matches `B_T / (B_0 e^{rT})` (mean one), `B` matches
/// `B_T / (B_0 e^{rT}) - 1` (mean zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
}

impl Variant {
    /// Offset `h_1` added back to `J` to recover the normalised basket.
    pub fn h1(self) -> f64 {
        match self {
            Variant::A => 0.0,
            Variant::B => 1.0,
        }
    }

    /// Exact first target moment.
    pub fn mean(self) -> f64 {
        match self {
            Variant::A => 1.0,
            Variant::B => 0.0,
        }
    }
}

const MAX_TABLED_MOMENT: usize = 30;

const fn normal_moment_table() -> [f64; MAX_TABLED_MOMENT + 1] {
    let mut t = [0.0; MAX_TABLED_MOMENT + 1];
    t[0] = 1.0;
    let mut n = 2;
    while n <= MAX_TABLED_MOMENT {
        t[n] = t[n - 2] * (n - 1) as f64;
        n += 2;
    }
    t
}

static NORMAL_MOMENTS: [f64; MAX_TABLED_MOMENT + 1] = normal_moment_table();

/// `E[Z^n]` for standard normal `Z`: zero for odd `n`, `(n-1)!!` for even.
pub fn normal_moment(n: usize) -> f64 {
    if n <= MAX_TABLED_MOMENT {
        return NORMAL_MOMENTS[n];
    }
    if n % 2 == 1 {
        return 0.0;
    }
    (1..n).step_by(2).map(|k| k as f64).product()
}

/// `E[p(Z)]` for a polynomial `p`.
pub fn normal_expectation(p: &Polynomial) -> f64 {
    p.coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| c * normal_moment(n))
        .sum()
}

/// Probabilists' Hermite polynomial via `H_k = z H_{k-1} - H'_{k-1}`.
pub fn hermite_poly(k: usize) -> Polynomial {
    let mut h = Polynomial::constant(1.0);
    for _ in 0..k {
        let d = h.derivative().scale(-1.0);
        h = &h.shift_up() + &d;
    }
    h
}

/// The first `n` Hermite polynomials.
pub fn hermite_basis(n: usize) -> Vec<Polynomial> {
    let mut out = Vec::with_capacity(n);
    let mut h = Polynomial::constant(1.0);
    for _ in 0..n {
        let next = &h.shift_up() + &h.derivative().scale(-1.0);
        out.push(h);
        h = next;
    }
    out
}

/// Evaluates `H_0(z), …, H_{n-1}(z)` by the three-term recurrence.
pub fn hermite_values(z: f64, n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    if n == 0 {
        return v;
    }
    v.push(1.0);
    if n > 1 {
        v.push(z);
    }
    for k in 2..n {
        let next = z * v[k - 1] - (k - 1) as f64 * v[k - 2];
        v.push(next);
    }
    v
}

/// `Σ α_k H_k` in the monomial basis.
pub fn series_to_polynomial(alpha: &[f64]) -> Polynomial {
    hermite_basis(alpha.len())
        .iter()
        .zip(alpha)
        .fold(Polynomial::zero(), |acc, (h, a)| &acc + &h.scale(*a))
}

/// Exact `E[J(Z)^k]`, by powering `J` in the monomial basis and
/// contracting against the normal moments.
pub fn expansion_moment(alpha: &[f64], k: usize) -> f64 {
    normal_expectation(&series_to_polynomial(alpha).powi(k))
}

/// `∂E[J^k]/∂α_i` for `k = 1..=m` (rows) and `i = 1..m-1` (columns).
///
/// `α_0` is excluded since the first target moment pins it.
pub fn expansion_moment_jacobian(alpha: &[f64], m: usize) -> Vec<Vec<f64>> {
    assert_eq!(alpha.len(), m, "alpha must have m coefficients");
    let basis = hermite_basis(m);
    let j = series_to_polynomial(alpha);
    let mut power = Polynomial::constant(1.0);
    let mut rows = Vec::with_capacity(m);
    for k in 1..=m {
        // power = J^{k-1}
        let row = basis[1..]
            .iter()
            .map(|h| k as f64 * normal_expectation(&(&power * h)))
            .collect();
        rows.push(row);
        power = &power * &j;
    }
    rows
}

/// `E[J^k]` for `k = 1..=m` sharing the powers of `J`.
pub fn expansion_moments(alpha: &[f64], m: usize) -> Vec<f64> {
    let j = series_to_polynomial(alpha);
    let mut power = Polynomial::constant(1.0);
    (1..=m)
        .map(|_| {
            power = &power * &j;
            normal_expectation(&power)
        })
        .collect()
}
