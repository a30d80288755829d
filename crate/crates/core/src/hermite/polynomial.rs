use std::ops::{Add, Mul};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Dense real polynomial in the monomial basis, constant term first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Multiplies by `z`.
    pub fn shift_up(&self) -> Polynomial {
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(0.0);
        c.extend_from_slice(&self.coeffs);
        Polynomial::new(c)
    }

    pub fn powi(&self, k: usize) -> Polynomial {
        let mut out = Polynomial::constant(1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Largest coefficient magnitude, used to scale root residuals.
    pub fn scale_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(0.0)
                        + rhs.coeffs.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut c = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Polynomial::new(c)
    }
}

/// Real roots of `p`, ascending.
///
/// Eigenvalues of the companion matrix whose imaginary part is below
/// `1e-9 · max(1, |λ|)` are taken as real and then Newton-polished.
pub fn real_roots(p: &Polynomial) -> Vec<f64> {
    let deg = p.degree();
    if deg == 0 {
        return Vec::new();
    }
    let c = p.coeffs();
    let lead = c[deg];
    if deg == 1 {
        return vec![-c[0] / lead];
    }
    let companion = DMatrix::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -c[deg - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let dp = p.derivative();
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * z.re.abs().max(1.0))
        .map(|z| polish(p, &dp, z.re))
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

fn polish(p: &Polynomial, dp: &Polynomial, mut z: f64) -> f64 {
    let mut best = (p.eval(z).abs(), z);
    for _ in 0..8 {
        let d = dp.eval(z);
        if d == 0.0 {
            break;
        }
        z -= p.eval(z) / d;
        let r = p.eval(z).abs();
        if !(r < best.0) {
            break;
        }
        best = (r, z);
        if r == 0.0 {
            break;
        }
    }
    best.1
}
