//! Exact moments of the shifted basket `B_T = Σ a_i (S_T - b_i δ_T)`.
//!
//! Writing `X_i = σ_i V_t^(i) + Σ_l log(Y_l^(i) + 1)`, the shifted asset is
//! `c_i e^{X_i}` with `c_i = a_i (S_0 - b_i δ_0) e^{(r + ω_i) t}`, so
//! `E[B_t^k]` is a sum of joint mgf values over `k`-element multisets of
//! asset indices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::hermite::Variant;
use crate::model::ValidatedBasket;
use crate::numerics::{binomial, factorial, CompensatedSum};

/// Highest moment order supported by the enumeration.
pub const MAX_ORDER: usize = 6;

/// Raw basket moments together with the normalised targets for one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    /// `μ_1..μ_m` of `B_T`.
    pub raw: Vec<f64>,
    /// `E[X^k]`, `k = 1..m`, of the variant's normalised basket.
    pub target: Vec<f64>,
    pub variant: Variant,
    pub order: usize,
}

/// Joint mgf of the log-return vector `X` at horizon `t`.
///
/// `log M(u) = t u'Σu / 2 + Σ_i t λ_i (exp(η_i u_i + υ_i² u_i² / 2) - 1)`
/// with `Σ_ij = σ_i σ_j ρ_ij`.
#[derive(Debug, Clone)]
pub struct JumpDiffusionMgf {
    t: f64,
    cov: Vec<Vec<f64>>,
    lambda: Vec<f64>,
    eta: Vec<f64>,
    upsilon: Vec<f64>,
}

impl JumpDiffusionMgf {
    pub fn new(basket: &ValidatedBasket, t: f64) -> Self {
        let assets = basket.assets();
        let cov = basket
            .correlation()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, rho)| assets[i].vol * assets[j].vol * rho)
                    .collect()
            })
            .collect();
        JumpDiffusionMgf {
            t,
            cov,
            lambda: assets.iter().map(|a| a.jump_intensity).collect(),
            eta: assets.iter().map(|a| a.jump_log_mean).collect(),
            upsilon: assets.iter().map(|a| a.jump_log_vol).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn jump_exponent(&self, i: usize, u: f64) -> f64 {
        if self.lambda[i] == 0.0 || u == 0.0 {
            return 0.0;
        }
        let v = self.upsilon[i];
        self.lambda[i] * (self.eta[i] * u + 0.5 * v * v * u * u).exp_m1()
    }

    pub fn log_value(&self, u: &[f64]) -> f64 {
        let n = self.dim();
        let mut quad = 0.0;
        let mut jumps = 0.0;
        for i in 0..n {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                quad += u[i] * self.cov[i][j] * u[j];
            }
            jumps += self.jump_exponent(i, u[i]);
        }
        self.t * (0.5 * quad + jumps)
    }

    pub fn value(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(PricingError::DimensionMismatch(format!(
                "mgf argument has {} entries for {} assets",
                u.len(),
                self.dim()
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(PricingError::InvalidParameter("mgf argument not finite".into()));
        }
        let v = self.log_value(u).exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(PricingError::Overflow("joint mgf exceeds floating range".into()))
        }
    }
}

pub fn joint_mgf(u: &[f64], basket: &ValidatedBasket, t: f64) -> Result<f64> {
    JumpDiffusionMgf::new(basket, t).value(u)
}

/// Multiset enumerator specialised to integer mgf arguments.
struct MultisetSum<'a> {
    mgf: &'a JumpDiffusionMgf,
    coef: Vec<f64>,
    /// `jump[i][c] = λ_i (e^{η_i c + υ_i² c² / 2} - 1)`.
    jump: Vec<Vec<f64>>,
    size: usize,
}

#[derive(Clone)]
struct State {
    /// (index, total count, free count) for the indices drawn so far.
    support: Vec<(usize, usize, usize)>,
    quad: f64,
    jump: f64,
    prod: f64,
    inv_fact: f64,
}

impl<'a> MultisetSum<'a> {
    fn new(mgf: &'a JumpDiffusionMgf, coef: Vec<f64>, size: usize) -> Self {
        let max_count = size + 1;
        let jump = (0..mgf.dim())
            .map(|i| (0..=max_count).map(|c| mgf.jump_exponent(i, c as f64)).collect())
            .collect();
        MultisetSum {
            mgf,
            coef,
            jump,
            size,
        }
    }

    fn push(&self, state: &State, j: usize, free: bool) -> State {
        let mut s = state.clone();
        let cross: f64 = s
            .support
            .iter()
            .map(|&(l, c, _)| self.mgf.cov[j][l] * c as f64)
            .sum();
        s.quad += 2.0 * cross + self.mgf.cov[j][j];
        let pos = s.support.iter().position(|&(l, _, _)| l == j);
        let prev = pos.map_or(0, |p| s.support[p].1);
        s.jump += self.jump[j][prev + 1] - self.jump[j][prev];
        match pos {
            Some(p) => {
                s.support[p].1 += 1;
                if free {
                    s.support[p].2 += 1;
                }
            }
            None => s.support.push((j, 1, usize::from(free))),
        }
        if free {
            s.prod *= self.coef[j];
            let fc = s.support.iter().find(|e| e.0 == j).unwrap().2;
            s.inv_fact /= fc as f64;
        }
        s
    }

    fn leaf(&self, s: &State) -> f64 {
        s.prod * factorial(self.size) * s.inv_fact * (self.mgf.t * (0.5 * s.quad + s.jump)).exp()
    }

    fn walk(&self, s: &State, start: usize, remaining: usize, acc: &mut CompensatedSum, visits: &mut u64) {
        if remaining == 0 {
            acc.add(self.leaf(s));
            *visits += 1;
            return;
        }
        for j in start..self.coef.len() {
            if self.coef[j] == 0.0 {
                continue;
            }
            let next = self.push(s, j, true);
            self.walk(&next, j, remaining - 1, acc, visits);
        }
    }

    /// Sums over `size`-element multisets drawn on top of `seed`, partitioned
    /// by the first free index and reduced in index order.
    fn total(&self, seed: &[usize]) -> Result<(f64, u64)> {
        let mut root = State {
            support: Vec::with_capacity(self.size + seed.len()),
            quad: 0.0,
            jump: 0.0,
            prod: 1.0,
            inv_fact: 1.0,
        };
        for &j in seed {
            root = self.push(&root, j, false);
        }
        if self.size == 0 {
            let v = self.leaf(&root);
            return finite(v).map(|v| (v, 1));
        }
        let parts: Vec<(f64, u64)> = (0..self.coef.len())
            .into_par_iter()
            .map(|j| {
                let mut acc = CompensatedSum::new();
                let mut visits = 0;
                if self.coef[j] != 0.0 {
                    let next = self.push(&root, j, true);
                    self.walk(&next, j, self.size - 1, &mut acc, &mut visits);
                }
                (acc.value(), visits)
            })
            .collect();
        let mut acc = CompensatedSum::new();
        let mut visits = 0;
        for (v, n) in parts {
            acc.add(v);
            visits += n;
        }
        finite(acc.value()).map(|v| (v, visits))
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(PricingError::Overflow("basket moment is not finite".into()))
    }
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(PricingError::InvalidParameter(format!(
            "moment order {k} exceeds {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// `c_i = a_i (S_0 - b_i δ_0) e^{(r + ω_i) t}`.
fn coefficients(basket: &ValidatedBasket, t: f64) -> Vec<f64> {
    basket
        .assets()
        .iter()
        .zip(basket.weights())
        .map(|(a, w)| w * a.effective_spot() * ((basket.rate() + a.omega()) * t).exp())
        .collect()
}

/// `μ_k = E[B_t^k]` by multiset enumeration.
pub fn basket_moment(k: usize, basket: &ValidatedBasket, t: f64) -> Result<f64> {
    basket_moment_counted(k, basket, t).map(|(v, _)| v)
}

/// As [`basket_moment`], also returning the number of multisets visited.
pub fn basket_moment_counted(k: usize, basket: &ValidatedBasket, t: f64) -> Result<(f64, u64)> {
    check_order(k)?;
    let mgf = JumpDiffusionMgf::new(basket, t);
    MultisetSum::new(&mgf, coefficients(basket, t), k).total(&[])
}

/// `μ_1..μ_m`.
pub fn basket_moments(m: usize, basket: &ValidatedBasket, t: f64) -> Result<Vec<f64>> {
    check_order(m)?;
    let mgf = JumpDiffusionMgf::new(basket, t);
    let coef = coefficients(basket, t);
    (1..=m)
        .map(|k| MultisetSum::new(&mgf, coef.clone(), k).total(&[]).map(|(v, _)| v))
        .collect()
}

/// `∂μ_k / ∂a_1 = k (S_0^(1) - b_1 δ_0^(1)) e^{(r + ω_1) t} Σ_{(k-1)-multisets} ∏ c · mgf(e_1 + …)`.
pub fn dmoment_da1(k: usize, basket: &ValidatedBasket, t: f64) -> Result<f64> {
    check_order(k)?;
    if k == 0 {
        return Ok(0.0);
    }
    let mgf = JumpDiffusionMgf::new(basket, t);
    let a1 = &basket.assets()[0];
    let lead = k as f64 * a1.effective_spot() * ((basket.rate() + a1.omega()) * t).exp();
    let (inner, _) = MultisetSum::new(&mgf, coefficients(basket, t), k - 1).total(&[0])?;
    finite(lead * inner)
}

fn normalise(raw: &[f64], forward: f64, variant: Variant) -> Vec<f64> {
    let m = raw.len();
    let a: Vec<f64> = (0..=m)
        .map(|k| if k == 0 { 1.0 } else { raw[k - 1] / forward.powi(k as i32) })
        .collect();
    let mut target: Vec<f64> = match variant {
        Variant::A => a[1..].to_vec(),
        Variant::B => (1..=m).map(|k| central_from_scaled(&a, k)).collect(),
    };
    target[0] = variant.mean();
    target
}

/// `Σ_i C(k, i) (-1)^i a_{k-i}`.
fn central_from_scaled(a: &[f64], k: usize) -> f64 {
    let mut s = CompensatedSum::new();
    for i in 0..=k {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        s.add(sign * binomial(k, i) * a[k - i]);
    }
    s.value()
}

/// Raw and normalised moments of `B_t` for `k = 1..=m`.
pub fn target_moments(basket: &ValidatedBasket, t: f64, variant: Variant, m: usize) -> Result<MomentVector> {
    let raw = basket_moments(m, basket, t)?;
    let forward = basket.shifted_b0() * (basket.rate() * t).exp();
    let target = normalise(&raw, forward, variant);
    if target.iter().any(|x| !x.is_finite()) {
        return Err(PricingError::Overflow("target moment is not finite".into()));
    }
    Ok(MomentVector {
        raw,
        target,
        variant,
        order: m,
    })
}

/// `∂E[X^k]/∂B_0` for `k = 1..=m`, moving `B_0` along the first asset.
///
/// `B_0` changes by `S_0^(1) - b_1 δ_0^(1)` per unit of `a_1`, so the
/// weight derivative is divided by that effective spot.
pub fn dtarget_db0_all(basket: &ValidatedBasket, t: f64, variant: Variant, m: usize) -> Result<Vec<f64>> {
    check_order(m)?;
    let e1 = basket.assets()[0].effective_spot();
    if e1 == 0.0 {
        return Err(PricingError::InvalidParameter(
            "first asset has zero effective spot".into(),
        ));
    }
    let growth = (basket.rate() * t).exp();
    let forward = basket.shifted_b0() * growth;
    let dforward = e1 * growth;
    let raw = basket_moments(m, basket, t)?;
    let dscaled: Vec<f64> = (0..=m)
        .map(|k| {
            if k <= 1 {
                return Ok(0.0);
            }
            let dmu = dmoment_da1(k, basket, t)?;
            let kf = k as f64;
            Ok((dmu / forward.powi(k as i32) - kf * raw[k - 1] * dforward / forward.powi(k as i32 + 1)) / e1)
        })
        .collect::<Result<_>>()?;
    let out: Vec<f64> = match variant {
        Variant::A => dscaled[1..].to_vec(),
        Variant::B => (1..=m)
            .map(|k| if k == 1 { 0.0 } else { central_from_scaled(&dscaled, k) })
            .collect(),
    };
    if out.iter().any(|x| !x.is_finite()) {
        return Err(PricingError::Overflow("target derivative is not finite".into()));
    }
    Ok(out)
}

pub fn dtarget_db0(basket: &ValidatedBasket, t: f64, variant: Variant, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    dtarget_db0_all(basket, t, variant, k).map(|v| v[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AssetSpec, BasketSpec, ShiftSign};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn basket1() -> ValidatedBasket {
        BasketSpec {
            assets: vec![AssetSpec::gbm(100.0, 0.2), AssetSpec::gbm(120.0, 0.3)],
            weights: vec![-1.0, 1.0],
            correlation: BasketSpec::uniform_correlation(2, 0.9),
            rate: 0.03,
            maturity: 1.0,
            strike: 20.0,
        }
        .validate()
        .unwrap()
    }

    fn jumpy() -> ValidatedBasket {
        let mut a = AssetSpec::gbm(110.0, 0.25);
        a.shift0 = 10.0;
        a.jump_intensity = 0.3;
        a.jump_log_mean = -0.3;
        a.jump_log_vol = 0.2;
        let mut b = AssetSpec::gbm(90.0, 0.2);
        b.shift0 = 20.0;
        b.shift_sign = ShiftSign::Negative;
        b.jump_intensity = 0.1;
        b.jump_log_mean = 0.1;
        b.jump_log_vol = 0.15;
        let c = AssetSpec::gbm(95.0, 0.35);
        BasketSpec {
            assets: vec![a, b, c],
            weights: vec![0.6, -0.8, 0.5],
            correlation: vec![
                vec![1.0, 0.5, 0.2],
                vec![0.5, 1.0, -0.3],
                vec![0.2, -0.3, 1.0],
            ],
            rate: 0.04,
            maturity: 0.7,
            strike: 30.0,
        }
        .validate()
        .unwrap()
    }

    fn single(asset: AssetSpec, rate: f64, t: f64) -> ValidatedBasket {
        BasketSpec {
            assets: vec![asset],
            weights: vec![1.0],
            correlation: vec![vec![1.0]],
            rate,
            maturity: t,
            strike: 100.0,
        }
        .validate()
        .unwrap()
    }

    /// Full `n^k` loop over ordered index tuples.
    fn naive_moment(k: usize, basket: &ValidatedBasket, t: f64) -> f64 {
        let n = basket.len();
        let mgf = JumpDiffusionMgf::new(basket, t);
        let c = coefficients(basket, t);
        let mut total = CompensatedSum::new();
        for idx in 0..n.pow(k as u32) {
            let mut u = vec![0.0; n];
            let mut prod = 1.0;
            let mut rest = idx;
            for _ in 0..k {
                let i = rest % n;
                rest /= n;
                u[i] += 1.0;
                prod *= c[i];
            }
            total.add(prod * mgf.value(&u).unwrap());
        }
        total.value()
    }

    #[test]
    fn mgf_values() {
        let b = basket1();
        assert_eq!(joint_mgf(&[0.0, 0.0], &b, 1.0).unwrap(), 1.0);
        let g = single(AssetSpec::gbm(100.0, 0.2), 0.0, 1.0);
        assert_relative_eq!(joint_mgf(&[1.0], &g, 1.0).unwrap(), 0.02f64.exp(), max_relative = 1e-15);
        let mut a = AssetSpec::gbm(100.0, 0.0);
        a.jump_intensity = 0.3;
        a.jump_log_mean = -0.3;
        a.jump_log_vol = 0.2;
        let j = single(a, 0.0, 1.0);
        let v = joint_mgf(&[1.0], &j, 1.0).unwrap();
        assert_relative_eq!(v, (0.3 * ((-0.28f64).exp() - 1.0)).exp(), max_relative = 1e-14);
        // frozen from 10^7 compound Poisson draws: 0.929346 ± 0.000047
        assert!((v - 0.929346).abs() < 1.5e-4);
        assert!(matches!(joint_mgf(&[1e3], &j, 1.0), Err(PricingError::Overflow(_))));
    }

    #[test]
    fn first_moment_is_forward() {
        let b = basket1();
        let mu1 = basket_moment(1, &b, 1.0).unwrap();
        assert_relative_eq!(mu1, 20.0 * 0.03f64.exp(), max_relative = 1e-13);
        let j = jumpy();
        assert_relative_eq!(basket_moment(1, &j, 0.7).unwrap(), j.shifted_forward(), max_relative = 1e-12);
    }

    #[test]
    fn lognormal_second_moment() {
        let g = single(AssetSpec::gbm(100.0, 0.2), 0.0, 1.0);
        let mu2 = basket_moment(2, &g, 1.0).unwrap();
        assert_relative_eq!(mu2, 1e4 * 0.04f64.exp(), max_relative = 1e-14);
        assert!((mu2 - 10408.1077).abs() < 1e-4);
    }

    #[test]
    fn multiset_matches_naive_enumeration() {
        for b in [basket1(), jumpy()] {
            for k in 1..=4 {
                let fast = basket_moment(k, &b, b.maturity()).unwrap();
                let slow = naive_moment(k, &b, b.maturity());
                assert_relative_eq!(fast, slow, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn visit_count_is_multiset_count() {
        let spec = BasketSpec {
            assets: (0..5).map(|i| AssetSpec::gbm(90.0 + i as f64, 0.2)).collect(),
            weights: vec![0.2; 5],
            correlation: BasketSpec::uniform_correlation(5, 0.3),
            rate: 0.01,
            maturity: 1.0,
            strike: 90.0,
        };
        let b = spec.validate().unwrap();
        for k in 1..=6 {
            let (_, visits) = basket_moment_counted(k, &b, 1.0).unwrap();
            assert_eq!(visits as f64, binomial(5 + k - 1, k));
        }
    }

    /// Independent multivariate lognormal product moment.
    fn gbm_product_moment(basket: &ValidatedBasket, idx: &[usize], t: f64) -> f64 {
        let a = basket.assets();
        let rho = basket.correlation();
        let mut log = 0.0;
        for &i in idx {
            log += a[i].spot.ln() + basket.rate() * t;
        }
        for (p, &i) in idx.iter().enumerate() {
            for &j in &idx[p + 1..] {
                log += a[i].vol * a[j].vol * rho[i][j] * t;
            }
        }
        log.exp()
    }

    #[test]
    fn gbm_reduction() {
        let b = basket1();
        let w = b.weights();
        for k in 1..=4usize {
            let mut total = 0.0;
            for idx in 0..2usize.pow(k as u32) {
                let tuple: Vec<usize> = (0..k).map(|p| (idx >> p) & 1).collect();
                let wp: f64 = tuple.iter().map(|&i| w[i]).product();
                total += wp * gbm_product_moment(&b, &tuple, 1.0);
            }
            assert_relative_eq!(basket_moment(k, &b, 1.0).unwrap(), total, max_relative = 1e-10);
        }
    }

    #[test]
    fn targets_pin_first_entry() {
        let b = jumpy();
        let a = target_moments(&b, 0.7, Variant::A, 6).unwrap();
        let bb = target_moments(&b, 0.7, Variant::B, 6).unwrap();
        assert_eq!(a.target[0], 1.0);
        assert_eq!(bb.target[0], 0.0);
        assert!(a.target[1] - 1.0 > 0.0);
        assert_relative_eq!(bb.target[1], a.target[1] - 1.0, max_relative = 1e-10);
        assert_eq!(a.raw, bb.raw);
    }

    #[test]
    fn da1_matches_finite_difference() {
        for b in [basket1(), jumpy()] {
            let t = b.maturity();
            for k in 1..=4 {
                let h = 1e-6;
                let a1 = b.weights()[0];
                let up = b.with(|s| s.weights[0] = a1 + h).unwrap();
                let dn = b.with(|s| s.weights[0] = a1 - h).unwrap();
                let fd = (basket_moment(k, &up, t).unwrap() - basket_moment(k, &dn, t).unwrap()) / (2.0 * h);
                let an = dmoment_da1(k, &b, t).unwrap();
                assert_relative_eq!(an, fd, max_relative = 1e-6);
            }
        }
        let b = basket1();
        assert_relative_eq!(dmoment_da1(1, &b, 1.0).unwrap(), 100.0 * 0.03f64.exp(), max_relative = 1e-14);
    }

    #[test]
    fn da1_single_asset_closed_form() {
        let mut a = AssetSpec::gbm(100.0, 0.3);
        a.shift0 = 5.0;
        a.jump_intensity = 0.2;
        a.jump_log_mean = -0.1;
        a.jump_log_vol = 0.1;
        let b = BasketSpec {
            assets: vec![a],
            weights: vec![0.7],
            correlation: vec![vec![1.0]],
            rate: 0.02,
            maturity: 1.0,
            strike: 60.0,
        }
        .validate()
        .unwrap();
        let mgf3 = joint_mgf(&[3.0], &b, 1.0).unwrap();
        let e = a.effective_spot();
        let expect = 3.0 * 0.49 * e.powi(3) * (3.0 * (0.02 + a.omega())).exp() * mgf3;
        assert_relative_eq!(dmoment_da1(3, &b, 1.0).unwrap(), expect, max_relative = 1e-13);
    }

    #[test]
    fn dtarget_matches_finite_difference() {
        for variant in [Variant::A, Variant::B] {
            for b in [basket1(), jumpy()] {
                let t = b.maturity();
                let e1 = b.assets()[0].effective_spot();
                let db = 1e-4;
                let a1 = b.weights()[0];
                let up = b.with(|s| s.weights[0] = a1 + db / e1).unwrap();
                let dn = b.with(|s| s.weights[0] = a1 - db / e1).unwrap();
                let tu = target_moments(&up, t, variant, 4).unwrap().target;
                let td = target_moments(&dn, t, variant, 4).unwrap().target;
                let an = dtarget_db0_all(&b, t, variant, 4).unwrap();
                assert_eq!(an[0], 0.0);
                for k in 2..=4 {
                    let fd = (tu[k - 1] - td[k - 1]) / (2.0 * db);
                    assert_relative_eq!(an[k - 1], fd, max_relative = 1e-5);
                }
            }
        }
    }

    #[test]
    fn bit_stable_across_pool_sizes() {
        let b = jumpy();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| basket_moment(5, &b, 0.7).unwrap())
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn martingale_property(
            spots in proptest::collection::vec(60.0f64..140.0, 3),
            vols in proptest::collection::vec(0.05f64..0.6, 3),
            lambdas in proptest::collection::vec(0.0f64..0.5, 3),
            etas in proptest::collection::vec(-0.3f64..0.3, 3),
            shifts in proptest::collection::vec(-20.0f64..20.0, 3),
            weights in proptest::collection::vec(-1.0f64..1.0, 3),
            rho in -0.4f64..0.9,
            rate in 0.0f64..0.1,
            t in 0.1f64..2.0,
        ) {
            let assets = (0..3).map(|i| AssetSpec {
                spot: spots[i],
                vol: vols[i],
                shift0: shifts[i].abs(),
                shift_sign: if shifts[i] < 0.0 { ShiftSign::Negative } else { ShiftSign::Positive },
                jump_intensity: lambdas[i],
                jump_log_mean: etas[i],
                jump_log_vol: 0.2,
            }).collect();
            let spec = BasketSpec {
                assets,
                weights,
                correlation: BasketSpec::uniform_correlation(3, rho),
                rate,
                maturity: t,
                strike: 10.0,
            };
            if let Ok(b) = spec.validate() {
                let mu1 = basket_moment(1, &b, t).unwrap();
                let f = b.shifted_forward();
                prop_assert!((mu1 / f - 1.0).abs() <= 1e-12 || (mu1 - f).abs() <= 1e-12 * b.weights().iter().zip(b.assets()).map(|(w, a)| (w * a.effective_spot()).abs()).sum::<f64>());
            }
        }
    }
}
