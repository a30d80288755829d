//! Monte Carlo oracle with exact sampling of the shifted jump-diffusion.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path index)`,
//! batches are reduced in path order, so estimates are bit-identical for
//! any worker count.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::model::ValidatedBasket;

/// Fraction of paths spent estimating the control-variate coefficient.
pub const PILOT_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: u64,
    pub seed: u64,
    /// Paths per reduction block.
    pub batch: u64,
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 100_000,
            seed: 42,
            batch: 4096,
            antithetic: false,
        }
    }
}

impl McConfig {
    pub fn with_paths(paths: u64, seed: u64) -> Self {
        McConfig {
            paths,
            seed,
            ..McConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Control-variate estimate.
    pub value: f64,
    pub std_error: f64,
    pub paths: u64,
    pub cv_beta: f64,
    /// Plain discounted payoff mean over every path.
    pub plain_value: f64,
    pub plain_std_error: f64,
    /// Payoff had zero sample variance.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    /// `E[B_T^k]` estimates, `k = 1..=k_max`.
    pub moments: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub paths: u64,
}

/// Terminal draws of the shifted and raw basket.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSample {
    pub shifted: Vec<f64>,
    pub raw: Vec<f64>,
}

/// Asset values on a time grid, indexed `[path][time][asset]`. Time zero is
/// stored first, so each path holds `grid.len() + 1` states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub times: Vec<f64>,
    pub spots: Vec<Vec<Vec<f64>>>,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.spots.len()
    }

    /// `Σ a_i S_t^(i)` along one path.
    pub fn raw_basket(&self, path: usize, weights: &[f64]) -> Vec<f64> {
        self.spots[path]
            .iter()
            .map(|s| s.iter().zip(weights).map(|(x, w)| x * w).sum())
            .collect()
    }
}

/// SplitMix64 finaliser, used to derive independent child seeds.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn path_rng(base: &ChaCha8Rng, index: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(index);
    rng.set_word_pos(0);
    rng
}

/// `L` with `L L' = ρ`, from the eigen-decomposition with negative
/// eigenvalues clipped.
pub fn correlation_factor(rho: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rho.len();
    let m = DMatrix::from_fn(n, n, |i, j| rho[i][j]);
    let eig = SymmetricEigen::new(m);
    let mut l = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        for i in 0..n {
            l[(i, j)] *= s;
        }
    }
    l
}

/// Exact one-interval stepper for the log part `X_i` of every asset.
struct Stepper {
    n: usize,
    factor: DMatrix<f64>,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
    jumps: Vec<Option<Poisson<f64>>>,
    eta: Vec<f64>,
    upsilon: Vec<f64>,
}

impl Stepper {
    fn new(basket: &ValidatedBasket, dt: f64, drift_override: Option<&[f64]>) -> Self {
        let assets = basket.assets();
        let n = assets.len();
        let drift = assets
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mu = drift_override.map_or(basket.rate(), |d| d[i]);
                (mu + a.omega()) * dt
            })
            .collect();
        Stepper {
            n,
            factor: correlation_factor(basket.correlation()),
            drift,
            diffusion: assets.iter().map(|a| a.vol * dt.sqrt()).collect(),
            jumps: assets
                .iter()
                .map(|a| {
                    let mean = a.jump_intensity * dt;
                    (mean > 0.0).then(|| Poisson::new(mean).expect("positive Poisson mean"))
                })
                .collect(),
            eta: assets.iter().map(|a| a.jump_log_mean).collect(),
            upsilon: assets.iter().map(|a| a.jump_log_vol).collect(),
        }
    }

    /// Draws the normals and jump counts consumed by one step.
    fn draw<R: Rng>(&self, rng: &mut R, z: &mut [f64], counts: &mut [f64], jn: &mut [f64]) {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..self.n {
            match &self.jumps[i] {
                Some(p) => {
                    counts[i] = p.sample(rng);
                    jn[i] = rng.sample(StandardNormal);
                }
                None => {
                    counts[i] = 0.0;
                    jn[i] = 0.0;
                }
            }
        }
    }

    /// Log increments for draws `(z, counts, jn)`, with `sign = -1` giving the
    /// antithetic partner.
    fn increments(&self, z: &[f64], counts: &[f64], jn: &[f64], sign: f64, out: &mut [f64]) {
        for i in 0..self.n {
            let mut w = 0.0;
            for (j, zj) in z.iter().enumerate() {
                w += self.factor[(i, j)] * zj;
            }
            let mut x = self.drift[i] + self.diffusion[i] * sign * w;
            if counts[i] > 0.0 {
                x += counts[i] * self.eta[i] + counts[i].sqrt() * self.upsilon[i] * sign * jn[i];
            }
            out[i] = x;
        }
    }
}

/// Terminal sampler: shifted basket `Σ c_i e^{X_i}` with `c_i = a_i (S_0 - b δ_0)`.
struct Terminal {
    stepper: Stepper,
    coef: Vec<f64>,
    shift_total: f64,
}

impl Terminal {
    fn new(basket: &ValidatedBasket, t: f64) -> Self {
        Terminal {
            stepper: Stepper::new(basket, t, None),
            coef: basket
                .assets()
                .iter()
                .zip(basket.weights())
                .map(|(a, w)| w * a.effective_spot())
                .collect(),
            shift_total: basket.shift_total(t),
        }
    }

    /// One shifted-basket draw, or an antithetic pair when `antithetic`.
    fn sample<R: Rng>(&self, rng: &mut R, antithetic: bool, scratch: &mut Scratch) -> (f64, Option<f64>) {
        let Scratch { z, counts, jn, x } = scratch;
        self.stepper.draw(rng, z, counts, jn);
        let basket = |x: &[f64]| -> f64 { self.coef.iter().zip(x).map(|(c, xi)| c * xi.exp()).sum() };
        self.stepper.increments(z, counts, jn, 1.0, x);
        let first = basket(x);
        if !antithetic {
            return (first, None);
        }
        self.stepper.increments(z, counts, jn, -1.0, x);
        (first, Some(basket(x)))
    }
}

struct Scratch {
    z: Vec<f64>,
    counts: Vec<f64>,
    jn: Vec<f64>,
    x: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            z: vec![0.0; n],
            counts: vec![0.0; n],
            jn: vec![0.0; n],
            x: vec![0.0; n],
        }
    }
}

/// Running means and co-moments of a pair `(x, y)`, mergeable in any
/// fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoMoments {
    pub n: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub m2x: f64,
    pub m2y: f64,
    pub cxy: f64,
}

impl CoMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        let dx = x - self.mean_x;
        self.mean_x += dx / self.n;
        let dy = y - self.mean_y;
        self.mean_y += dy / self.n;
        self.m2x += dx * (x - self.mean_x);
        self.m2y += dy * (y - self.mean_y);
        self.cxy += dx * (y - self.mean_y);
    }

    pub fn merge(&self, o: &CoMoments) -> CoMoments {
        if self.n == 0.0 {
            return *o;
        }
        if o.n == 0.0 {
            return *self;
        }
        let n = self.n + o.n;
        let dx = o.mean_x - self.mean_x;
        let dy = o.mean_y - self.mean_y;
        let f = self.n * o.n / n;
        CoMoments {
            n,
            mean_x: self.mean_x + dx * o.n / n,
            mean_y: self.mean_y + dy * o.n / n,
            m2x: self.m2x + o.m2x + dx * dx * f,
            m2y: self.m2y + o.m2y + dy * dy * f,
            cxy: self.cxy + o.cxy + dx * dy * f,
        }
    }

    pub fn var_x(&self) -> f64 {
        if self.n > 1.0 {
            self.m2x / (self.n - 1.0)
        } else {
            0.0
        }
    }

    pub fn var_y(&self) -> f64 {
        if self.n > 1.0 {
            self.m2y / (self.n - 1.0)
        } else {
            0.0
        }
    }

    pub fn cov(&self) -> f64 {
        if self.n > 1.0 {
            self.cxy / (self.n - 1.0)
        } else {
            0.0
        }
    }
}

/// Runs `f` on every sample unit `0..units` in parallel batches, folding
/// each batch in index order and merging batches in index order.
fn reduce_units<A, F, M>(units: u64, batch: u64, init: A, f: F, merge: M) -> A
where
    A: Clone + Send + Sync,
    F: Fn(&mut A, u64) + Sync,
    M: Fn(&A, &A) -> A + Sync,
{
    let batch = batch.max(1);
    let n_batches = units.div_ceil(batch);
    let parts: Vec<A> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = init.clone();
            for u in b * batch..((b + 1) * batch).min(units) {
                f(&mut acc, u);
            }
            acc
        })
        .collect();
    parts.iter().fold(init, |acc, p| merge(&acc, p))
}

fn check_paths(config: &McConfig) -> Result<()> {
    if config.paths == 0 {
        return Err(PricingError::InvalidParameter("path count must be positive".into()));
    }
    if config.antithetic && config.paths % 2 == 1 {
        return Err(PricingError::InvalidParameter(
            "antithetic sampling needs an even path count".into(),
        ));
    }
    Ok(())
}

/// Number of independent sample units: pairs in antithetic mode.
fn units(config: &McConfig) -> u64 {
    if config.antithetic {
        config.paths / 2
    } else {
        config.paths
    }
}

/// Draws `B_T` and `B*_T` at horizon `t` for every path.
pub fn sample_terminal(basket: &ValidatedBasket, t: f64, config: &McConfig) -> Result<TerminalSample> {
    check_paths(config)?;
    let sampler = Terminal::new(basket, t);
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let per = if config.antithetic { 2 } else { 1 };
    let n_units = units(config);
    let batch = config.batch.max(1);
    let shifted: Vec<f64> = (0..n_units.div_ceil(batch))
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut out = Vec::with_capacity((batch * per) as usize);
            let mut scratch = Scratch::new(basket.len());
            for u in b * batch..((b + 1) * batch).min(n_units) {
                let mut rng = path_rng(&base, u);
                let (x, y) = sampler.sample(&mut rng, config.antithetic, &mut scratch);
                out.push(x);
                out.extend(y);
            }
            out
        })
        .collect();
    let raw = shifted.iter().map(|b| b + sampler.shift_total).collect();
    Ok(TerminalSample { shifted, raw })
}

/// Control-variate price of the call `(B*_T - K*)⁺ = (B_T - K)⁺`.
///
/// The control is `e^{-rT} B_T` with known mean `B_0`. Its coefficient is
/// estimated on the first 5% of sample units and applied to the rest.
pub fn mc_price(basket: &ValidatedBasket, config: &McConfig) -> Result<McEstimate> {
    check_paths(config)?;
    let t = basket.maturity();
    let disc = (-basket.rate() * t).exp();
    let k = basket.shifted_strike();
    let b0 = basket.shifted_b0();
    let sampler = Terminal::new(basket, t);
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let n_units = units(config);
    let pilot_units = ((n_units as f64 * PILOT_FRACTION).ceil() as u64).clamp(1, n_units.saturating_sub(1).max(1));
    let antithetic = config.antithetic;

    // (pilot, main, all) accumulators of (control, payoff)
    type Acc = (CoMoments, CoMoments, CoMoments);
    let merge = |a: &Acc, b: &Acc| (a.0.merge(&b.0), a.1.merge(&b.1), a.2.merge(&b.2));
    let n = basket.len();
    let (pilot, main, all) = reduce_units(
        n_units,
        config.batch,
        (CoMoments::default(), CoMoments::default(), CoMoments::default()),
        |acc: &mut Acc, u| {
            let mut scratch = Scratch::new(n);
            let mut rng = path_rng(&base, u);
            let (b1, b2) = sampler.sample(&mut rng, antithetic, &mut scratch);
            let pay = |b: f64| disc * (b - k).max(0.0);
            let (c, y) = match b2 {
                Some(b2) => (0.5 * disc * (b1 + b2), 0.5 * (pay(b1) + pay(b2))),
                None => (disc * b1, pay(b1)),
            };
            if u < pilot_units {
                acc.0.push(c, y);
            } else {
                acc.1.push(c, y);
            }
            acc.2.push(c, y);
        },
        merge,
    );

    let plain_value = all.mean_y;
    let plain_se = (all.var_y() / all.n).sqrt();
    let degenerate = all.var_y() == 0.0;
    if degenerate {
        return Ok(McEstimate {
            value: plain_value,
            std_error: 0.0,
            paths: config.paths,
            cv_beta: 0.0,
            plain_value,
            plain_std_error: 0.0,
            degenerate,
        });
    }
    let beta = if pilot.var_x() > 0.0 { pilot.cov() / pilot.var_x() } else { 0.0 };
    let (value, se) = if main.n >= 2.0 {
        let value = main.mean_y - beta * (main.mean_x - b0);
        let var = (main.var_y() - 2.0 * beta * main.cov() + beta * beta * main.var_x()).max(0.0);
        (value, (var / main.n).sqrt())
    } else {
        (plain_value, plain_se)
    };
    Ok(McEstimate {
        value,
        std_error: se,
        paths: config.paths,
        cv_beta: beta,
        plain_value,
        plain_std_error: plain_se,
        degenerate,
    })
}

/// Sample raw moments `E[B_T^k]`, `k = 1..=k_max`, of the shifted basket
/// with standard errors. For a sample mean the delete-one jackknife error
/// coincides with `s / √n`.
pub fn mc_moments(basket: &ValidatedBasket, t: f64, k_max: usize, config: &McConfig) -> Result<SampleMoments> {
    check_paths(config)?;
    if k_max == 0 || k_max > crate::moments::MAX_ORDER {
        return Err(PricingError::InvalidParameter(format!("k_max must be in 1..=6, got {k_max}")));
    }
    let sampler = Terminal::new(basket, t);
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let n = basket.len();
    let antithetic = config.antithetic;
    let stats = reduce_units(
        units(config),
        config.batch,
        vec![CoMoments::default(); k_max],
        |acc: &mut Vec<CoMoments>, u| {
            let mut scratch = Scratch::new(n);
            let mut rng = path_rng(&base, u);
            let (b1, b2) = sampler.sample(&mut rng, antithetic, &mut scratch);
            for (k, a) in acc.iter_mut().enumerate() {
                let p = (k + 1) as i32;
                let v = match b2 {
                    Some(b2) => 0.5 * (b1.powi(p) + b2.powi(p)),
                    None => b1.powi(p),
                };
                a.push(0.0, v);
            }
        },
        |a, b| a.iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
    );
    Ok(SampleMoments {
        moments: stats.iter().map(|s| s.mean_y).collect(),
        std_errors: stats.iter().map(|s| (s.var_y() / s.n).sqrt()).collect(),
        paths: config.paths,
    })
}

/// Simulates asset paths on `grid` by exact stepwise increments.
///
/// `drift` replaces the risk-free rate in the growth of the diffusive part
/// of each asset; the shift always accrues at the risk-free rate.
pub fn simulate_paths(
    basket: &ValidatedBasket,
    grid: &[f64],
    config: &McConfig,
    drift: Option<&[f64]>,
) -> Result<PathSet> {
    check_paths(config)?;
    if config.antithetic {
        return Err(PricingError::InvalidParameter(
            "path simulation does not support antithetic pairs".into(),
        ));
    }
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PricingError::InvalidParameter(
            "time grid must be strictly increasing and start after zero".into(),
        ));
    }
    if let Some(d) = drift {
        if d.len() != basket.len() {
            return Err(PricingError::DimensionMismatch("one drift per asset required".into()));
        }
    }
    let n = basket.len();
    let mut prev = 0.0;
    let steppers: Vec<Stepper> = grid
        .iter()
        .map(|&t| {
            let s = Stepper::new(basket, t - prev, drift);
            prev = t;
            s
        })
        .collect();
    let assets = basket.assets();
    let r = basket.rate();
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let spots: Vec<Vec<Vec<f64>>> = (0..config.paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(&base, p);
            let mut scratch = Scratch::new(n);
            let mut logx = vec![0.0; n];
            let mut out = Vec::with_capacity(grid.len() + 1);
            out.push(assets.iter().map(|a| a.spot).collect());
            for (step, &t) in steppers.iter().zip(grid) {
                let Scratch { z, counts, jn, x } = &mut scratch;
                step.draw(&mut rng, z, counts, jn);
                step.increments(z, counts, jn, 1.0, x);
                for i in 0..n {
                    logx[i] += x[i];
                }
                out.push(
                    assets
                        .iter()
                        .zip(&logx)
                        .map(|(a, lx)| {
                            a.effective_spot() * lx.exp() + a.shift_sign.value() * a.shift0 * (r * t).exp()
                        })
                        .collect(),
                );
            }
            out
        })
        .collect();
    let mut times = vec![0.0];
    times.extend_from_slice(grid);
    Ok(PathSet { times, spots })
}
