//! Discrete Delta-hedging backtest of a short basket call.
//!
//! The hedger sells the call at the method price, holds `Δ` units of the raw
//! basket `B* = Σ a_i S^(i)` and keeps the rest in a money account at `r`.
//! Positions are rebalanced at `t_i = iT/n`, `i < n`, and the payoff is
//! settled at `T`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::mc::{mc_price, mix_seed, simulate_paths, McConfig};
use crate::model::ValidatedBasket;
use crate::pricer::{delta_from_quote, price, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeConfig {
    pub paths: u64,
    pub rebalances: usize,
    pub seed: u64,
    /// Paths for the nested Monte Carlo prices behind C5; `None` skips C5.
    pub nested_paths: Option<u64>,
    /// Physical drifts per asset; `None` simulates under the pricing measure.
    pub drift: Option<Vec<f64>>,
}

impl Default for HedgeConfig {
    fn default() -> Self {
        HedgeConfig {
            paths: 1000,
            rebalances: 12,
            seed: 42,
            nested_paths: Some(100_000),
            drift: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgePathRecord {
    /// `Δ` at `t_0..t_{n-1}`.
    pub deltas: Vec<f64>,
    /// Raw basket `B*` at `t_0..t_n`.
    pub basket_values: Vec<f64>,
    /// Method price at `t_0..t_{n-1}`.
    pub method_prices: Vec<f64>,
    /// Nested Monte Carlo price at `t_0..t_n` (payoff at `t_n`).
    pub mc_prices: Option<Vec<f64>>,
    /// Portfolio value at `T` after settling the payoff.
    pub terminal_error: f64,
    /// Sample standard deviation of `deltas`.
    pub delta_vol: f64,
    /// Rebalances where pricing failed and the previous `Δ` was kept.
    pub carried_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeReport {
    pub method: Method,
    pub paths: u64,
    pub rebalances: usize,
    /// Mean over paths of the per-path standard deviation of `Δ`.
    pub c4: f64,
    /// `sqrt(mean e_i²) / c_{t_0}` with monthly hedged error
    /// `e_i = (c_{t_{i+1}} - c_{t_i}) - Δ_{t_i}(B_{t_{i+1}} - B_{t_i})`.
    pub c5: Option<f64>,
    /// Fraction of paths with terminal value below zero.
    pub c6: f64,
    /// Fraction of paths with terminal value at or above zero.
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    pub carried_steps: usize,
    pub degenerate_paths: usize,
    /// Largest relative violation of the self-financing identity.
    pub self_financing_error: f64,
    pub records: Vec<HedgePathRecord>,
}

/// Basket as seen at time `t` with spots `spots`: shifts grown to
/// `δ_0 e^{rt}` and remaining maturity `T - t`.
pub fn basket_at(basket: &ValidatedBasket, t: f64, spots: &[f64]) -> Result<ValidatedBasket> {
    let growth = (basket.rate() * t).exp();
    let remaining = basket.maturity() - t;
    basket.with(|s| {
        for (a, &x) in s.assets.iter_mut().zip(spots) {
            a.spot = x;
            a.shift0 *= growth;
        }
        s.maturity = remaining;
    })
}

fn retryable(e: &PricingError) -> bool {
    matches!(
        e,
        PricingError::MatchFailure(_) | PricingError::SingularJacobian(_) | PricingError::Overflow(_)
    )
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

struct PathOutcome {
    record: HedgePathRecord,
    sf_error: f64,
}

pub fn run_hedge(basket: &ValidatedBasket, method: Method, config: &HedgeConfig) -> Result<HedgeReport> {
    let n = config.rebalances;
    if n == 0 || config.paths == 0 {
        return Err(PricingError::InvalidParameter(
            "hedging needs at least one path and one rebalance".into(),
        ));
    }
    let t_mat = basket.maturity();
    let r = basket.rate();
    let dt = t_mat / n as f64;
    let grid: Vec<f64> = (1..=n).map(|i| i as f64 * t_mat / n as f64).collect();
    let quote0 = price(basket, method)?;
    let delta0 = delta_from_quote(basket, &quote0)?.value;
    let paths = simulate_paths(
        basket,
        &grid,
        &McConfig::with_paths(config.paths, config.seed),
        config.drift.as_deref(),
    )?;
    let weights = basket.weights();
    let strike = basket.raw_strike();
    let accrual = (r * dt).exp();
    let c0_mc = match config.nested_paths {
        Some(p) => Some(mc_price(basket, &McConfig::with_paths(p, mix_seed(config.seed, u64::MAX, 0)))?.value),
        None => None,
    };

    let outcomes: Vec<PathOutcome> = (0..paths.n_paths())
        .into_par_iter()
        .map(|p| -> Result<PathOutcome> {
            let b = paths.raw_basket(p, weights);
            let mut deltas = vec![delta0];
            let mut prices = vec![quote0.price];
            let mut carried = 0;
            let mut cash = quote0.price - delta0 * b[0];
            let mut sf_error: f64 = 0.0;
            for i in 1..n {
                let (prev_cash, prev_delta) = (cash, deltas[i - 1]);
                cash *= accrual;
                // value change over the interval is basket P&L plus interest
                let before = cash + prev_delta * b[i];
                let pnl = prev_delta * (b[i] - b[i - 1]) + prev_cash * (accrual - 1.0);
                let start = prev_cash + prev_delta * b[i - 1];
                let scale = prev_cash.abs().max((prev_delta * b[i]).abs()).max(1.0);
                sf_error = sf_error.max(((before - start) - pnl).abs() / scale);

                let spec = basket_at(basket, grid[i - 1], &paths.spots[p][i])?;
                let (d, c) = match price(&spec, method).and_then(|q| Ok((delta_from_quote(&spec, &q)?.value, q.price))) {
                    Ok(v) => v,
                    Err(e) if retryable(&e) => {
                        carried += 1;
                        (prev_delta, f64::NAN)
                    }
                    Err(e) => return Err(e),
                };
                cash -= (d - prev_delta) * b[i];
                let after = cash + d * b[i];
                sf_error = sf_error.max((after - before).abs() / scale);
                deltas.push(d);
                prices.push(c);
            }
            cash *= accrual;
            let payoff = (b[n] - strike).max(0.0);
            let terminal_error = cash + deltas[n - 1] * b[n] - payoff;

            let mc_prices = match (config.nested_paths, c0_mc) {
                (Some(np), Some(c0)) => {
                    let mut cs = vec![c0];
                    for i in 1..n {
                        let spec = basket_at(basket, grid[i - 1], &paths.spots[p][i])?;
                        let cfg = McConfig::with_paths(np, mix_seed(config.seed, p as u64, i as u64));
                        cs.push(mc_price(&spec, &cfg)?.value);
                    }
                    cs.push(payoff);
                    Some(cs)
                }
                _ => None,
            };
            Ok(PathOutcome {
                record: HedgePathRecord {
                    delta_vol: sample_std(&deltas),
                    deltas,
                    basket_values: b,
                    method_prices: prices,
                    mc_prices,
                    terminal_error,
                    carried_steps: carried,
                },
                sf_error,
            })
        })
        .collect::<Result<_>>()?;

    let count = outcomes.len() as f64;
    let c4 = outcomes.iter().map(|o| o.record.delta_vol).sum::<f64>() / count;
    let c5 = c0_mc.map(|c0| {
        let mut sq = 0.0;
        let mut terms = 0.0;
        for o in &outcomes {
            let rec = &o.record;
            let cs = rec.mc_prices.as_ref().expect("nested prices present");
            for i in 0..n {
                let e = (cs[i + 1] - cs[i]) - rec.deltas[i] * (rec.basket_values[i + 1] - rec.basket_values[i]);
                sq += e * e;
                terms += 1.0;
            }
        }
        (sq / terms).sqrt() / c0
    });
    let errors: Vec<f64> = outcomes.iter().map(|o| o.record.terminal_error).collect();
    let sub: Vec<f64> = errors.iter().copied().filter(|e| *e < 0.0).collect();
    let sup: Vec<f64> = errors.iter().copied().filter(|e| *e >= 0.0).collect();
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    Ok(HedgeReport {
        method,
        paths: config.paths,
        rebalances: n,
        c4,
        c5,
        c6: sub.len() as f64 / count,
        c7: sup.len() as f64 / count,
        c8: mean(&sub),
        c9: mean(&sup),
        c10: mean(&errors),
        carried_steps: outcomes.iter().map(|o| o.record.carried_steps).sum(),
        degenerate_paths: outcomes.iter().filter(|o| o.record.carried_steps > 0).count(),
        self_financing_error: outcomes.iter().map(|o| o.sf_error).fold(0.0, f64::max),
        records: outcomes.into_iter().map(|o| o.record).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AssetSpec, BasketSpec};

    fn basket1(k: f64) -> ValidatedBasket {
        BasketSpec {
            assets: vec![AssetSpec::gbm(100.0, 0.2), AssetSpec::gbm(120.0, 0.3)],
            weights: vec![-1.0, 1.0],
            correlation: BasketSpec::uniform_correlation(2, 0.9),
            rate: 0.03,
            maturity: 1.0,
            strike: k,
        }
        .validate()
        .unwrap()
    }

    fn quick(paths: u64) -> HedgeConfig {
        HedgeConfig {
            paths,
            nested_paths: None,
            ..HedgeConfig::default()
        }
    }

    #[test]
    fn basket_at_grows_shift() {
        let mut spec = basket1(20.0).into_spec();
        spec.assets[0].shift0 = 10.0;
        let b = spec.validate().unwrap();
        let later = basket_at(&b, 0.25, &[101.0, 119.0]).unwrap();
        assert!((later.assets()[0].shift0 - 10.0 * (0.03f64 * 0.25).exp()).abs() < 1e-12);
        assert!((later.maturity() - 0.75).abs() < 1e-15);
        assert_eq!(later.raw_strike(), 20.0);
    }

    #[test]
    fn forward_like_option_is_replicated() {
        let b = basket1(-2000.0);
        let rep = run_hedge(&b, Method::G4A, &quick(50)).unwrap();
        assert_eq!(rep.c4, 0.0);
        for rec in &rep.records {
            assert!(rec.deltas.iter().all(|d| *d == 1.0));
            assert!(rec.terminal_error.abs() < 1e-10 * 2000.0);
        }
        assert!(rep.c10.abs() < 1e-10 * 2000.0);
    }

    #[test]
    fn deterministic_basket_has_constant_delta() {
        let mut spec = basket1(15.0).into_spec();
        spec.assets[0].vol = 0.0;
        spec.assets[1].vol = 0.0;
        let b = spec.validate().unwrap();
        let rep = run_hedge(&b, Method::G4A, &quick(10)).unwrap();
        assert_eq!(rep.c4, 0.0);
        assert_eq!(rep.carried_steps, 0);
    }

    #[test]
    fn partition_and_self_financing() {
        let b = basket1(20.0);
        let rep = run_hedge(&b, Method::G4A, &quick(100)).unwrap();
        assert!((rep.c6 + rep.c7 - 1.0).abs() < 1e-15);
        assert!((rep.c10 - (rep.c6 * rep.c8 + rep.c7 * rep.c9)).abs() < 1e-10);
        assert!(rep.c8 <= 0.0 && rep.c9 >= 0.0);
        assert!(rep.self_financing_error <= 1e-10);
        assert_eq!(rep.records[0].deltas.len(), 12);
        assert_eq!(rep.records[0].basket_values.len(), 13);
    }

    #[test]
    fn scale_equivariance() {
        let kappa = 3.0;
        let b = basket1(20.0);
        let scaled = b
            .with(|s| {
                for a in &mut s.assets {
                    a.spot *= kappa;
                    a.shift0 *= kappa;
                }
                s.strike *= kappa;
            })
            .unwrap();
        let r1 = run_hedge(&b, Method::G4A, &quick(60)).unwrap();
        let r2 = run_hedge(&scaled, Method::G4A, &quick(60)).unwrap();
        assert_eq!(r1.c6, r2.c6);
        assert!((r2.c10 - kappa * r1.c10).abs() < 1e-8);
        assert!((r2.c8 - kappa * r1.c8).abs() < 1e-8);
        assert!((r2.c4 - r1.c4).abs() < 1e-9);
    }
}
