//! Randomized scenario sets and method-versus-oracle error statistics.
//!
//! Every scenario draws from its own ChaCha stream (stream = scenario index),
//! so a scenario list is reproducible from `(set, count, seed)` alone and
//! does not depend on the thread pool.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::mc::{mc_price, mix_seed, McConfig};
use crate::model::{validate_basket, AssetSpec, BasketSpec, ShiftSign, ValidatedBasket};
use crate::pricer::{price, Method};

/// Hard cap on redraws of a single scenario; never reached in practice.
const MAX_RESAMPLES: u32 = 1000;

/// Relative slack under which two squared errors count as a tie for C1.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioSet {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl ScenarioSet {
    pub fn id(self) -> u64 {
        match self {
            ScenarioSet::One => 1,
            ScenarioSet::Two => 2,
        }
    }

    /// Asset-count buckets `(lo, hi, weight)`.
    pub fn asset_count_mix(self) -> &'static [(usize, usize, f64)] {
        match self {
            ScenarioSet::One => &[(2, 10, 0.5), (11, 15, 0.3), (16, 20, 0.1), (21, 50, 0.1)],
            ScenarioSet::Two => &[(2, 50, 1.0)],
        }
    }

    /// Range of the log jump mean `η`.
    pub fn jump_mean_range(self) -> (f64, f64) {
        match self {
            ScenarioSet::One => (-0.3, 0.0),
            ScenarioSet::Two => (-0.3, 0.3),
        }
    }
}

impl FromStr for ScenarioSet {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(ScenarioSet::One),
            "2" => Ok(ScenarioSet::Two),
            _ => Err(PricingError::InvalidParameter(format!("scenario set must be 1 or 2, got {s:?}"))),
        }
    }
}

impl fmt::Display for ScenarioSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub set: ScenarioSet,
    pub count: usize,
    pub seed: u64,
}

/// Sampling bounds shared by both sets.
pub mod ranges {
    pub const RATE: (f64, f64) = (0.0, 0.1);
    pub const MATURITY: (f64, f64) = (0.1, 1.0);
    pub const VOL: (f64, f64) = (0.1, 0.6);
    pub const SPOT: (f64, f64) = (70.0, 130.0);
    pub const WEIGHT: (f64, f64) = (-1.0, 1.0);
    /// Range of `δ_0 e^{rT}`.
    pub const GROWN_SHIFT: (f64, f64) = (-20.0, 20.0);
    pub const JUMP_INTENSITY: (f64, f64) = (0.0, 0.2);
    pub const JUMP_LOG_VOL: (f64, f64) = (0.0, 0.3);
    /// Range of `K*/B*_0`.
    pub const STRIKE_RATIO: (f64, f64) = (0.95, 1.05);
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: usize,
    pub basket: ValidatedBasket,
    /// Sampled `K*/B*_0`.
    pub strike_ratio: f64,
    /// Draws rejected because the shifted basket was zero.
    pub resamples: u32,
}

impl Scenario {
    /// FNV-1a hash of the scenario's JSON, a stable fingerprint for exports.
    pub fn params_hash(&self) -> u64 {
        let json = serde_json::to_vec(self.basket.spec()).expect("basket spec serializes");
        json.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..hi)
}

/// Random correlation matrix `C = D^{-1/2} G G' D^{-1/2}` with `G` standard
/// normal, which is PSD by construction.
pub fn random_correlation<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let c = &g * g.transpose();
    let d: Vec<f64> = (0..n).map(|i| c[(i, i)].sqrt()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { (c[(i, j)] / (d[i] * d[j])).clamp(-1.0, 1.0) })
                .collect()
        })
        .collect()
}

fn sample_asset_count<R: Rng>(set: ScenarioSet, rng: &mut R) -> usize {
    let mix = set.asset_count_mix();
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(lo, hi, w) in mix {
        acc += w;
        if u < acc {
            return rng.random_range(lo..=hi);
        }
    }
    let (lo, hi, _) = mix[mix.len() - 1];
    rng.random_range(lo..=hi)
}

fn sample_spec<R: Rng>(set: ScenarioSet, rng: &mut R) -> (BasketSpec, f64) {
    let n = sample_asset_count(set, rng);
    let rate = uniform(rng, ranges::RATE);
    let maturity = uniform(rng, ranges::MATURITY);
    let growth = (rate * maturity).exp();
    let assets: Vec<AssetSpec> = (0..n)
        .map(|_| AssetSpec {
            spot: uniform(rng, ranges::SPOT),
            vol: uniform(rng, ranges::VOL),
            shift0: uniform(rng, ranges::GROWN_SHIFT) / growth,
            shift_sign: if rng.random::<bool>() { ShiftSign::Positive } else { ShiftSign::Negative },
            jump_intensity: uniform(rng, ranges::JUMP_INTENSITY),
            jump_log_mean: uniform(rng, set.jump_mean_range()),
            jump_log_vol: uniform(rng, ranges::JUMP_LOG_VOL),
        })
        .collect();
    let weights: Vec<f64> = (0..n).map(|_| uniform(rng, ranges::WEIGHT)).collect();
    let correlation = random_correlation(n, rng);
    let ratio = uniform(rng, ranges::STRIKE_RATIO);
    let raw_b0: f64 = assets.iter().zip(&weights).map(|(a, w)| w * a.spot).sum();
    let spec = BasketSpec { assets, weights, correlation, rate, maturity, strike: ratio * raw_b0 };
    (spec, ratio)
}

/// Scenario `index` of the configured set; redraws while the shifted basket
/// is degenerate.
pub fn generate_scenario(config: &ScenarioConfig, index: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, config.set.id(), 0));
    rng.set_stream(index as u64);
    let mut resamples = 0;
    loop {
        let (spec, strike_ratio) = sample_spec(config.set, &mut rng);
        match validate_basket(spec) {
            Ok(basket) => return Scenario { id: index, basket, strike_ratio, resamples },
            Err(_) if resamples < MAX_RESAMPLES => resamples += 1,
            Err(e) => panic!("scenario {index}: generator keeps producing invalid baskets: {e}"),
        }
    }
}

pub fn generate_scenarios(config: &ScenarioConfig) -> Vec<Scenario> {
    (0..config.count).into_par_iter().map(|i| generate_scenario(config, i)).collect()
}

/// A method column in the benchmark tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodTag {
    Single(Method),
    /// The combination of 4GA and 4GB scored by the worse of the two.
    Hybrid4GAB,
}

impl MethodTag {
    pub fn name(self) -> &'static str {
        match self {
            MethodTag::Single(m) => m.name(),
            MethodTag::Hybrid4GAB => "4GAB",
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub scenario: usize,
    pub method: MethodTag,
    /// `None` when the method could not produce a price.
    pub price: Option<f64>,
    pub failure: Option<String>,
    pub squared_error: Option<f64>,
    /// `|price - oracle| / |oracle|`; `None` on failure or a zero oracle.
    pub relative_error: Option<f64>,
}

impl MethodResult {
    pub fn from_price(scenario: usize, method: MethodTag, outcome: Result<f64>, oracle: f64) -> Self {
        match outcome {
            Ok(p) if p.is_finite() => MethodResult {
                scenario,
                method,
                price: Some(p),
                failure: None,
                squared_error: Some((p - oracle).powi(2)),
                relative_error: (oracle != 0.0).then(|| (p - oracle).abs() / oracle.abs()),
            },
            Ok(p) => Self::failed(scenario, method, format!("non-finite price {p}")),
            Err(e) => Self::failed(scenario, method, e.to_string()),
        }
    }

    pub fn failed(scenario: usize, method: MethodTag, reason: String) -> Self {
        MethodResult {
            scenario,
            method,
            price: None,
            failure: Some(reason),
            squared_error: None,
            relative_error: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.price.is_some()
    }
}

/// Hybrid of 4GA and 4GB: the successful one if only one succeeds, the
/// larger error if both do, a failure if neither does.
pub fn combine_4gab(a: &MethodResult, b: &MethodResult) -> MethodResult {
    assert_eq!(a.scenario, b.scenario, "results refer to different scenarios");
    let pick = match (a.succeeded(), b.succeeded()) {
        (true, false) => a,
        (false, true) => b,
        (true, true) => {
            if b.squared_error > a.squared_error {
                b
            } else {
                a
            }
        }
        (false, false) => {
            let reason = format!(
                "4GA: {}; 4GB: {}",
                a.failure.as_deref().unwrap_or("failed"),
                b.failure.as_deref().unwrap_or("failed")
            );
            return MethodResult::failed(a.scenario, MethodTag::Hybrid4GAB, reason);
        }
    };
    MethodResult { method: MethodTag::Hybrid4GAB, ..pick.clone() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub methods: Vec<Method>,
    pub oracle_seed: u64,
    /// Fixed oracle path count; `None` scales with the number of assets.
    pub oracle_paths: Option<u64>,
    /// Order-6 methods only run on baskets with at most this many assets.
    pub order6_max_assets: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            methods: Method::ALL.to_vec(),
            oracle_seed: 42,
            oracle_paths: None,
            order6_max_assets: Some(10),
        }
    }
}

/// Oracle path count by basket size.
pub fn default_oracle_paths(n_assets: usize) -> u64 {
    match n_assets {
        0..=10 => 100_000,
        11..=15 => 500_000,
        16..=20 => 1_000_000,
        _ => 4_000_000,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario: usize,
    pub n_assets: usize,
    pub rate: f64,
    pub maturity: f64,
    pub strike_ratio: f64,
    pub params_hash: u64,
    pub oracle: f64,
    pub oracle_std_error: f64,
    /// Oracle too noisy for a relative error: `|oracle| < 10 SE`.
    pub noisy_oracle: bool,
    pub results: Vec<MethodResult>,
}

impl ScenarioOutcome {
    pub fn result(&self, method: MethodTag) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Prices every scenario with every applicable method and the MC oracle.
pub fn evaluate_scenarios(scenarios: &[Scenario], config: &SuiteConfig) -> Result<Vec<ScenarioOutcome>> {
    scenarios.par_iter().map(|s| evaluate_one(s, config)).collect()
}

fn evaluate_one(s: &Scenario, config: &SuiteConfig) -> Result<ScenarioOutcome> {
    let n = s.basket.len();
    let paths = config.oracle_paths.unwrap_or_else(|| default_oracle_paths(n));
    let mc = McConfig::with_paths(paths, mix_seed(config.oracle_seed, s.id as u64, 1));
    let oracle = mc_price(&s.basket, &mc)?;
    let mut results: Vec<MethodResult> = config
        .methods
        .iter()
        .filter(|m| m.order() < 6 || config.order6_max_assets.is_none_or(|cap| n <= cap))
        .map(|&m| {
            let outcome = price(&s.basket, m).map(|q| q.price);
            MethodResult::from_price(s.id, MethodTag::Single(m), outcome, oracle.value)
        })
        .collect();
    let a = results.iter().find(|r| r.method == MethodTag::Single(Method::G4A)).cloned();
    let b = results.iter().find(|r| r.method == MethodTag::Single(Method::G4B)).cloned();
    if let (Some(a), Some(b)) = (a, b) {
        results.push(combine_4gab(&a, &b));
    }
    Ok(ScenarioOutcome {
        scenario: s.id,
        n_assets: n,
        rate: s.basket.rate(),
        maturity: s.basket.maturity(),
        strike_ratio: s.strike_ratio,
        params_hash: s.params_hash(),
        oracle: oracle.value,
        oracle_std_error: oracle.std_error,
        noisy_oracle: oracle.value.abs() < 10.0 * oracle.std_error,
        results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCriteria {
    pub method: MethodTag,
    /// Scenarios where the method was run.
    pub evaluated: usize,
    /// Times the method attained the smallest squared error.
    pub c1: usize,
    pub c1_fraction: f64,
    /// Relative errors above 5% plus failures, over non-noisy scenarios.
    pub c2: usize,
    pub c2_fraction: f64,
    /// Root mean squared error over successful, non-noisy scenarios.
    pub c3: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub label: String,
    pub scenarios: usize,
    pub noisy: usize,
    pub methods: Vec<MethodCriteria>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub slices: Vec<SliceReport>,
    pub outcomes: Vec<ScenarioOutcome>,
}

impl BenchmarkReport {
    pub fn slice(&self, label: &str) -> Option<&SliceReport> {
        self.slices.iter().find(|s| s.label == label)
    }

    pub fn total(&self) -> &SliceReport {
        &self.slices[0]
    }
}

impl SliceReport {
    pub fn method(&self, method: MethodTag) -> Option<&MethodCriteria> {
        self.methods.iter().find(|m| m.method == method)
    }
}

pub const RELATIVE_ERROR_THRESHOLD: f64 = 0.05;

/// C1–C3 over a set of outcomes.
pub fn criteria(label: &str, outcomes: &[&ScenarioOutcome]) -> SliceReport {
    let mut tags: Vec<MethodTag> = Vec::new();
    for o in outcomes {
        for r in &o.results {
            if !tags.contains(&r.method) {
                tags.push(r.method);
            }
        }
    }
    let mut methods: Vec<MethodCriteria> = tags
        .iter()
        .map(|&method| MethodCriteria {
            method,
            evaluated: 0,
            c1: 0,
            c1_fraction: 0.0,
            c2: 0,
            c2_fraction: 0.0,
            c3: None,
            failures: 0,
        })
        .collect();
    let mut sse = vec![0.0; tags.len()];
    let mut matched = vec![0usize; tags.len()];
    let mut judged = vec![0usize; tags.len()];

    for o in outcomes {
        let best = o
            .results
            .iter()
            .filter_map(|r| r.squared_error)
            .fold(f64::INFINITY, f64::min);
        let slack = TIE_TOLERANCE * o.oracle.abs().max(1.0);
        for r in &o.results {
            let k = tags.iter().position(|t| *t == r.method).expect("tag collected");
            let c = &mut methods[k];
            c.evaluated += 1;
            if !r.succeeded() {
                c.failures += 1;
            }
            if let Some(se) = r.squared_error {
                if se.sqrt() <= best.sqrt() + slack {
                    c.c1 += 1;
                }
            }
            if o.noisy_oracle {
                continue;
            }
            judged[k] += 1;
            match (r.squared_error, r.relative_error) {
                (Some(se), rel) => {
                    sse[k] += se;
                    matched[k] += 1;
                    if rel.is_some_and(|e| e > RELATIVE_ERROR_THRESHOLD) {
                        c.c2 += 1;
                    }
                }
                (None, _) => c.c2 += 1,
            }
        }
    }
    for (k, c) in methods.iter_mut().enumerate() {
        c.c1_fraction = if c.evaluated > 0 { c.c1 as f64 / c.evaluated as f64 } else { 0.0 };
        c.c2_fraction = if judged[k] > 0 { c.c2 as f64 / judged[k] as f64 } else { 0.0 };
        c.c3 = (matched[k] > 0).then(|| (sse[k] / matched[k] as f64).sqrt());
    }
    SliceReport {
        label: label.to_string(),
        scenarios: outcomes.len(),
        noisy: outcomes.iter().filter(|o| o.noisy_oracle).count(),
        methods,
    }
}

type SlicePredicate = fn(&ScenarioOutcome) -> bool;

/// Table slices: total, rate, maturity, strike ratio and basket size.
pub const SLICES: [(&str, SlicePredicate); 12] = [
    ("total", |_| true),
    ("r<=0.05", |o| o.rate <= 0.05),
    ("r>0.05", |o| o.rate > 0.05),
    ("T<=0.5", |o| o.maturity <= 0.5),
    ("T>0.5", |o| o.maturity > 0.5),
    ("K/B<=0.98", |o| o.strike_ratio <= 0.98),
    ("0.98<K/B<=1.02", |o| o.strike_ratio > 0.98 && o.strike_ratio <= 1.02),
    ("K/B>1.02", |o| o.strike_ratio > 1.02),
    ("assets 2-10", |o| o.n_assets <= 10),
    ("assets 11-15", |o| (11..=15).contains(&o.n_assets)),
    ("assets 16-20", |o| (16..=20).contains(&o.n_assets)),
    ("assets 21-50", |o| o.n_assets >= 21),
];

pub fn summarize(outcomes: Vec<ScenarioOutcome>) -> BenchmarkReport {
    let slices = SLICES
        .iter()
        .map(|(label, keep)| {
            let chosen: Vec<&ScenarioOutcome> = outcomes.iter().filter(|o| keep(o)).collect();
            criteria(label, &chosen)
        })
        .collect();
    BenchmarkReport { slices, outcomes }
}

/// Oracle pricing, method pricing and C1–C3 for a scenario list.
pub fn evaluate_methods(scenarios: &[Scenario], config: &SuiteConfig) -> Result<BenchmarkReport> {
    Ok(summarize(evaluate_scenarios(scenarios, config)?))
}
