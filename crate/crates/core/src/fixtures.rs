//! Reference baskets used by the test suite, the CLI and the benchmarks.
//!
//! Baskets 1 to 6 are two- and three-asset GBM baskets with `r = 0.03` and
//! `T = 1`. The starred variants add shifts and jumps for the hedging study.

use crate::model::{AssetSpec, BasketSpec, ShiftSign};

const RATE: f64 = 0.03;
const MATURITY: f64 = 1.0;

fn three_asset_correlation() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.9, 0.8], vec![0.9, 1.0, 0.9], vec![0.8, 0.9, 1.0]]
}

fn gbm_basket(spots: &[f64], vols: &[f64], weights: &[f64], correlation: Vec<Vec<f64>>, strike: f64) -> BasketSpec {
    BasketSpec {
        assets: spots.iter().zip(vols).map(|(&s, &v)| AssetSpec::gbm(s, v)).collect(),
        weights: weights.to_vec(),
        correlation,
        rate: RATE,
        maturity: MATURITY,
        strike,
    }
}

/// Basket `index` in `1..=6`.
pub fn basket(index: usize) -> BasketSpec {
    let rho = BasketSpec::uniform_correlation;
    match index {
        1 => gbm_basket(&[100.0, 120.0], &[0.2, 0.3], &[-1.0, 1.0], rho(2, 0.9), 20.0),
        2 => gbm_basket(&[150.0, 100.0], &[0.3, 0.2], &[-1.0, 1.0], rho(2, 0.3), -50.0),
        3 => gbm_basket(&[110.0, 90.0], &[0.3, 0.2], &[0.7, 0.3], rho(2, 0.9), 104.0),
        4 => gbm_basket(&[200.0, 50.0], &[0.1, 0.15], &[-1.0, 1.0], rho(2, 0.8), -140.0),
        5 => gbm_basket(
            &[95.0, 90.0, 105.0],
            &[0.2, 0.3, 0.25],
            &[1.0, -0.8, -0.5],
            three_asset_correlation(),
            -30.0,
        ),
        6 => gbm_basket(
            &[100.0, 90.0, 95.0],
            &[0.25, 0.3, 0.2],
            &[0.6, 0.8, -1.0],
            three_asset_correlation(),
            35.0,
        ),
        _ => panic!("basket index must be in 1..=6, got {index}"),
    }
}

/// Starred basket `index` in `1..=6`.
pub fn starred_basket(index: usize) -> BasketSpec {
    let mut spec = basket(index);
    let discount = (-spec.rate * spec.maturity).exp();
    match index {
        1 | 2 => {}
        3 => {
            for (i, a) in spec.assets.iter_mut().enumerate() {
                a.shift0 = 10.0 * (i + 1) as f64 * discount;
                a.jump_intensity = 0.3;
                a.jump_log_mean = -0.3;
                a.jump_log_vol = 0.2;
            }
        }
        4 => {
            let shifts = [0.0, 50.0 * discount];
            let signs = [ShiftSign::Positive, ShiftSign::Negative];
            let etas = [0.3, 0.1];
            for (i, a) in spec.assets.iter_mut().enumerate() {
                a.shift0 = shifts[i];
                a.shift_sign = signs[i];
                a.jump_intensity = 0.3;
                a.jump_log_mean = etas[i];
                a.jump_log_vol = 0.2;
            }
        }
        5 | 6 => {
            for (i, a) in spec.assets.iter_mut().enumerate() {
                a.shift0 = 10.0 * (i + 1) as f64 * discount;
                a.jump_intensity = 0.0;
            }
        }
        _ => panic!("basket index must be in 1..=6, got {index}"),
    }
    spec
}

/// Fixture by name: `basket1`..`basket6` or `basket1s`..`basket6s`.
pub fn by_name(name: &str) -> Option<BasketSpec> {
    let rest = name.strip_prefix("basket")?;
    let (digits, starred) = match rest.strip_suffix('s') {
        Some(d) => (d, true),
        None => (rest, false),
    };
    let index: usize = digits.parse().ok()?;
    if !(1..=6).contains(&index) {
        return None;
    }
    Some(if starred { starred_basket(index) } else { basket(index) })
}

pub const NAMES: [&str; 12] = [
    "basket1", "basket2", "basket3", "basket4", "basket5", "basket6", "basket1s", "basket2s", "basket3s",
    "basket4s", "basket5s", "basket6s",
];
