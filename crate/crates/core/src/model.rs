//! Market description for the shifted jump-diffusion basket.
//!
//! Each asset follows
//! `S_t = (S_0 - b δ_0) exp((r - β̃λ̃ - σ²/2) t + σ V_t) Π (Y_l + 1) + b δ_0 e^{rt}`
//! with lognormal jump factors `log(Y + 1) ~ N(η, υ²)` arriving at rate `λ̃`.
//! The option pays `(Σ a_i S_T^(i) - K*)⁺`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

/// Smallest correlation eigenvalue accepted before rejecting the matrix.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Eigenvalues below this are clipped to zero and the matrix is rebuilt.
const CLIP_THRESHOLD: f64 = -1e-14;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Direction of the deterministic shift, `b ∈ {-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShiftSign {
    Positive,
    Negative,
}

impl ShiftSign {
    pub fn value(self) -> f64 {
        match self {
            ShiftSign::Positive => 1.0,
            ShiftSign::Negative => -1.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(ShiftSign::Positive)
        } else if v == -1.0 {
            Ok(ShiftSign::Negative)
        } else {
            Err(PricingError::InvalidParameter(format!(
                "shift sign must be +1 or -1, got {v}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssetSpec {
    pub spot: f64,
    pub vol: f64,
    /// Shift at time zero, `δ_0`. Grows at the risk-free rate.
    pub shift0: f64,
    pub shift_sign: ShiftSign,
    pub jump_intensity: f64,
    /// Mean of the log jump factor, `η`.
    pub jump_log_mean: f64,
    /// Standard deviation of the log jump factor, `υ`.
    pub jump_log_vol: f64,
}

impl AssetSpec {
    /// Plain geometric Brownian motion asset.
    pub fn gbm(spot: f64, vol: f64) -> Self {
        AssetSpec {
            spot,
            vol,
            shift0: 0.0,
            shift_sign: ShiftSign::Positive,
            jump_intensity: 0.0,
            jump_log_mean: 0.0,
            jump_log_vol: 0.0,
        }
    }

    /// `S_0 - b δ_0`, the part of the spot that diffuses and jumps.
    pub fn effective_spot(&self) -> f64 {
        self.spot - self.shift_sign.value() * self.shift0
    }

    pub fn beta_tilde(&self) -> f64 {
        jump_mean_beta(self.jump_log_mean, self.jump_log_vol)
    }

    /// Compensator drift `ω = -β̃ λ̃ - σ²/2`.
    pub fn omega(&self) -> f64 {
        -self.beta_tilde() * self.jump_intensity - 0.5 * self.vol * self.vol
    }

    fn validate(&self, index: usize) -> Result<()> {
        let fields = [
            ("spot", self.spot),
            ("vol", self.vol),
            ("shift", self.shift0),
            ("lambda", self.jump_intensity),
            ("eta", self.jump_log_mean),
            ("upsilon", self.jump_log_vol),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(PricingError::InvalidParameter(format!(
                    "asset {index}: {name} is not finite"
                )));
            }
        }
        for (name, v) in [
            ("vol", self.vol),
            ("lambda", self.jump_intensity),
            ("upsilon", self.jump_log_vol),
        ] {
            if v < 0.0 {
                return Err(PricingError::InvalidParameter(format!(
                    "asset {index}: {name} must be non-negative, got {v}"
                )));
            }
        }
        if !self.effective_spot().is_finite() {
            return Err(PricingError::InvalidParameter(format!(
                "asset {index}: effective spot is not finite"
            )));
        }
        Ok(())
    }
}

/// Expected jump size `β̃ = E[Y] = exp(η + υ²/2) - 1` for lognormal `Y + 1`.
pub fn jump_mean_beta(eta: f64, upsilon: f64) -> f64 {
    (eta + 0.5 * upsilon * upsilon).exp_m1()
}

/// Full model and contract description, as supplied by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasketConfig", into = "BasketConfig")]
pub struct BasketSpec {
    pub assets: Vec<AssetSpec>,
    pub weights: Vec<f64>,
    /// Row-major correlation matrix of the driving Brownian motions.
    pub correlation: Vec<Vec<f64>>,
    pub rate: f64,
    pub maturity: f64,
    /// Strike on the raw basket, `K*`.
    pub strike: f64,
}

/// Columnar JSON layout of [`BasketSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasketConfig {
    pub spots: Vec<f64>,
    pub vols: Vec<f64>,
    #[serde(default)]
    pub shifts: Option<Vec<f64>>,
    #[serde(default)]
    pub shift_signs: Option<Vec<f64>>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default)]
    pub etas: Option<Vec<f64>>,
    #[serde(default)]
    pub upsilons: Option<Vec<f64>>,
    pub weights: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
    pub rate: f64,
    pub maturity: f64,
    pub strike: f64,
}

impl TryFrom<BasketConfig> for BasketSpec {
    type Error = PricingError;

    fn try_from(c: BasketConfig) -> Result<Self> {
        let n = c.spots.len();
        let column = |name: &str, col: Option<Vec<f64>>, default: f64| -> Result<Vec<f64>> {
            match col {
                None => Ok(vec![default; n]),
                Some(v) if v.len() == n => Ok(v),
                Some(v) => Err(PricingError::DimensionMismatch(format!(
                    "{name} has {} entries, spots has {n}",
                    v.len()
                ))),
            }
        };
        let vols = column("vols", Some(c.vols), 0.0)?;
        let shifts = column("shifts", c.shifts, 0.0)?;
        let signs = column("shift_signs", c.shift_signs, 1.0)?;
        let lambdas = column("lambdas", c.lambdas, 0.0)?;
        let etas = column("etas", c.etas, 0.0)?;
        let upsilons = column("upsilons", c.upsilons, 0.0)?;
        let assets = (0..n)
            .map(|i| {
                Ok(AssetSpec {
                    spot: c.spots[i],
                    vol: vols[i],
                    shift0: shifts[i],
                    shift_sign: ShiftSign::from_value(signs[i])?,
                    jump_intensity: lambdas[i],
                    jump_log_mean: etas[i],
                    jump_log_vol: upsilons[i],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BasketSpec {
            assets,
            weights: c.weights,
            correlation: c.correlation,
            rate: c.rate,
            maturity: c.maturity,
            strike: c.strike,
        })
    }
}

impl From<BasketSpec> for BasketConfig {
    fn from(s: BasketSpec) -> Self {
        let col = |f: fn(&AssetSpec) -> f64| Some(s.assets.iter().map(f).collect::<Vec<_>>());
        BasketConfig {
            spots: s.assets.iter().map(|a| a.spot).collect(),
            vols: s.assets.iter().map(|a| a.vol).collect(),
            shifts: col(|a| a.shift0),
            shift_signs: col(|a| a.shift_sign.value()),
            lambdas: col(|a| a.jump_intensity),
            etas: col(|a| a.jump_log_mean),
            upsilons: col(|a| a.jump_log_vol),
            weights: s.weights,
            correlation: s.correlation,
            rate: s.rate,
            maturity: s.maturity,
            strike: s.strike,
        }
    }
}

impl BasketSpec {
    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn validate(self) -> Result<ValidatedBasket> {
        validate_basket(self)
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("basket spec serializes")
    }

    /// Constant-correlation matrix helper.
    pub fn uniform_correlation(n: usize, rho: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { rho }).collect())
            .collect()
    }
}

/// Per-asset drift terms derived from the jump parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTerms {
    pub beta_tilde: Vec<f64>,
    pub omega: Vec<f64>,
}

/// A [`BasketSpec`] whose invariants have been checked, with the shifted
/// basket value and shifted strike precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedBasket {
    spec: BasketSpec,
    drift: DriftTerms,
    shifted_b0: f64,
    shifted_strike: f64,
}

/// Checks every invariant of `spec` and precomputes `B_0` and `K`.
///
/// Correlation matrices with eigenvalues in `[-1e-10, 0)` are accepted,
/// clipped to the PSD cone and renormalized to a unit diagonal.
pub fn validate_basket(mut spec: BasketSpec) -> Result<ValidatedBasket> {
    let n = spec.assets.len();
    if n == 0 {
        return Err(PricingError::DimensionMismatch("basket has no assets".into()));
    }
    if spec.weights.len() != n {
        return Err(PricingError::DimensionMismatch(format!(
            "{} weights for {n} assets",
            spec.weights.len()
        )));
    }
    if spec.correlation.len() != n || spec.correlation.iter().any(|row| row.len() != n) {
        return Err(PricingError::DimensionMismatch(format!(
            "correlation must be {n}x{n}"
        )));
    }
    for (i, a) in spec.assets.iter().enumerate() {
        a.validate(i)?;
    }
    if spec.weights.iter().any(|w| !w.is_finite()) {
        return Err(PricingError::InvalidParameter("weights must be finite".into()));
    }
    if !(spec.rate.is_finite() && spec.rate >= 0.0) {
        return Err(PricingError::InvalidParameter(format!(
            "rate must be non-negative, got {}",
            spec.rate
        )));
    }
    if !(spec.maturity.is_finite() && spec.maturity > 0.0) {
        return Err(PricingError::InvalidParameter(format!(
            "maturity must be positive, got {}",
            spec.maturity
        )));
    }
    if !spec.strike.is_finite() {
        return Err(PricingError::InvalidParameter("strike must be finite".into()));
    }
    spec.correlation = checked_correlation(&spec.correlation)?;

    let drift = DriftTerms {
        beta_tilde: spec.assets.iter().map(AssetSpec::beta_tilde).collect(),
        omega: spec.assets.iter().map(AssetSpec::omega).collect(),
    };
    let (shifted_b0, shifted_strike) = shifted_basket_and_strike(&spec);
    if shifted_b0 == 0.0 || !shifted_b0.is_finite() {
        return Err(PricingError::ZeroShiftedBasket);
    }
    Ok(ValidatedBasket {
        spec,
        drift,
        shifted_b0,
        shifted_strike,
    })
}

fn checked_correlation(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = rows.len();
    for i in 0..n {
        if !rows[i].iter().all(|v| v.is_finite()) {
            return Err(PricingError::InvalidCorrelation("non-finite entry".into()));
        }
        if (rows[i][i] - 1.0).abs() > SYMMETRY_TOLERANCE {
            return Err(PricingError::InvalidCorrelation(format!(
                "diagonal entry ({i},{i}) = {} is not 1",
                rows[i][i]
            )));
        }
        for j in 0..i {
            if (rows[i][j] - rows[j][i]).abs() > SYMMETRY_TOLERANCE {
                return Err(PricingError::InvalidCorrelation(format!(
                    "not symmetric at ({i},{j})"
                )));
            }
        }
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let eig = SymmetricEigen::new(m);
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOLERANCE {
        return Err(PricingError::InvalidCorrelation(format!(
            "not positive semi-definite: smallest eigenvalue {min_eig:.3e}"
        )));
    }
    if min_eig >= CLIP_THRESHOLD {
        return Ok(rows.to_vec());
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d: Vec<f64> = (0..n).map(|i| rebuilt[(i, i)].sqrt()).collect();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        let v = 0.5 * (rebuilt[(i, j)] + rebuilt[(j, i)]) / (d[i] * d[j]);
                        v.clamp(-1.0, 1.0)
                    }
                })
                .collect()
        })
        .collect())
}

/// Shifted basket `B_0 = Σ a_i (S_0 - b_i δ_0)` and shifted strike
/// `K = K* - Σ a_i b_i δ_0 e^{rT}`, so that `(B*_T - K*)⁺ = (B_T - K)⁺`.
pub fn shifted_basket_and_strike(spec: &BasketSpec) -> (f64, f64) {
    let growth = (spec.rate * spec.maturity).exp();
    let mut b0 = 0.0;
    let mut shift_total = 0.0;
    for (a, w) in spec.assets.iter().zip(&spec.weights) {
        b0 += w * a.effective_spot();
        shift_total += w * a.shift_sign.value() * a.shift0;
    }
    (b0, spec.strike - shift_total * growth)
}

impl ValidatedBasket {
    pub fn spec(&self) -> &BasketSpec {
        &self.spec
    }

    pub fn into_spec(self) -> BasketSpec {
        self.spec
    }

    pub fn assets(&self) -> &[AssetSpec] {
        &self.spec.assets
    }

    pub fn weights(&self) -> &[f64] {
        &self.spec.weights
    }

    pub fn correlation(&self) -> &[Vec<f64>] {
        &self.spec.correlation
    }

    pub fn len(&self) -> usize {
        self.spec.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.assets.is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.spec.rate
    }

    pub fn maturity(&self) -> f64 {
        self.spec.maturity
    }

    pub fn raw_strike(&self) -> f64 {
        self.spec.strike
    }

    pub fn drift(&self) -> &DriftTerms {
        &self.drift
    }

    /// Shifted basket value at time zero.
    pub fn shifted_b0(&self) -> f64 {
        self.shifted_b0
    }

    /// Strike on the shifted basket.
    pub fn shifted_strike(&self) -> f64 {
        self.shifted_strike
    }

    /// Raw basket `B*_0 = Σ a_i S_0^(i)`.
    pub fn raw_b0(&self) -> f64 {
        self.spec
            .assets
            .iter()
            .zip(&self.spec.weights)
            .map(|(a, w)| w * a.spot)
            .sum()
    }

    /// Shifted forward `B_0 e^{rT}`, the risk-neutral mean of `B_T`.
    pub fn shifted_forward(&self) -> f64 {
        self.shifted_b0 * (self.spec.rate * self.spec.maturity).exp()
    }

    /// Aggregate deterministic shift `Σ a_i b_i δ_0^(i) e^{rt}` at time `t`.
    pub fn shift_total(&self, t: f64) -> f64 {
        let growth = (self.spec.rate * t).exp();
        self.spec
            .assets
            .iter()
            .zip(&self.spec.weights)
            .map(|(a, w)| w * a.shift_sign.value() * a.shift0)
            .sum::<f64>()
            * growth
    }

    /// Returns a copy of the raw spec with `f` applied, revalidated.
    pub fn with<F: FnOnce(&mut BasketSpec)>(&self, f: F) -> Result<ValidatedBasket> {
        let mut spec = self.spec.clone();
        f(&mut spec);
        validate_basket(spec)
    }

    pub fn volatility_free(&self) -> bool {
        self.spec
            .assets
            .iter()
            .all(|a| a.vol == 0.0 && a.jump_intensity == 0.0)
    }
}
