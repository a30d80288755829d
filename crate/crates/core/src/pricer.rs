//! Closed-form call price under a matched Hermite expansion, and its
//! sensitivities.
//!
//! With `F = B_0 e^{rT}` and `B_T ≈ F (J(Z) + h_1)`, the call is exercised on
//! one side of the root `z̃` of `F (J(z) + h_1) = K`, giving
//! `c_0 = B_0[(α_0 + h_1) Φ(-h_2 z̃) + h_2 g(z̃)] - K e^{-rT} Φ(-h_2 z̃)` with
//! `g(z) = φ(z) Σ α_{k+1} H_k(z)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::hermite::{
    expansion_moment_jacobian, hermite_values, match_moments, real_roots, HermiteExpansion, Variant,
};
use crate::model::{BasketSpec, ValidatedBasket};
use crate::moments::{dtarget_db0_all, target_moments, MomentVector};
use crate::numerics::{normal_cdf, normal_pdf};

/// Roots beyond this are treated as `±∞`.
pub const INFINITE_ROOT: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "4GA")]
    G4A,
    #[serde(rename = "4GB")]
    G4B,
    #[serde(rename = "6GA")]
    G6A,
    #[serde(rename = "6GB")]
    G6B,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::G4A, Method::G4B, Method::G6A, Method::G6B];

    pub fn order(self) -> usize {
        match self {
            Method::G4A | Method::G4B => 4,
            Method::G6A | Method::G6B => 6,
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            Method::G4A | Method::G6A => Variant::A,
            Method::G4B | Method::G6B => Variant::B,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::G4A => "4GA",
            Method::G4B => "4GB",
            Method::G6A => "6GA",
            Method::G6B => "6GB",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| PricingError::InvalidParameter(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuoteWarning {
    NonMonotoneExpansion,
    MultipleExerciseRoots { count: usize },
    NegativePrice,
}

/// Exercise boundary of the expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExerciseRoot {
    pub z: f64,
    /// Number of real crossings found.
    pub crossings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceQuote {
    pub price: f64,
    #[serde(with = "extended_float")]
    pub z_tilde: f64,
    pub h1: f64,
    pub h2: f64,
    pub method: Method,
    pub shifted_b0: f64,
    pub shifted_strike: f64,
    pub expansion: HermiteExpansion,
    pub moments: MomentVector,
    pub warnings: Vec<QuoteWarning>,
}

/// Serialises `±∞` as the strings `"inf"` / `"-inf"`.
pub mod extended_float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float {other:?}"))),
            },
        }
    }
}

/// Solves `J(z) + h_1 = K / (B_0 e^{rT})`.
///
/// Several crossings: the one nearest zero. None: `z̃ = -h_2 ∞` when the
/// option is always exercised and `+h_2 ∞` when never.
pub fn exercise_root(expansion: &HermiteExpansion, b0: f64, strike: f64, rate: f64, maturity: f64) -> ExerciseRoot {
    let h1 = expansion.variant.h1();
    let h2 = b0.signum();
    let forward = b0 * (rate * maturity).exp();
    let level = strike / forward;
    let mut p = expansion.polynomial();
    p = &p + &crate::hermite::Polynomial::constant(h1 - level);
    let roots = if p.degree() == 0 { Vec::new() } else { real_roots(&p) };
    if roots.is_empty() {
        let itm = forward * p.eval(0.0) > 0.0;
        let z = if itm { -h2 * f64::INFINITY } else { h2 * f64::INFINITY };
        return ExerciseRoot { z, crossings: 0 };
    }
    let z = roots
        .iter()
        .copied()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap();
    let z = if z.abs() > INFINITE_ROOT { z.signum() * f64::INFINITY } else { z };
    ExerciseRoot {
        z,
        crossings: roots.len(),
    }
}

/// `g(z) = φ(z) Σ_{k=0}^{m-2} c_{k+1} H_k(z)` for coefficients `c`.
fn tail_term(coeffs: &[f64], z: f64) -> f64 {
    if !z.is_finite() {
        return 0.0;
    }
    let h = hermite_values(z, coeffs.len() - 1);
    normal_pdf(z) * coeffs[1..].iter().zip(&h).map(|(c, hk)| c * hk).sum::<f64>()
}

fn closed_form(expansion: &HermiteExpansion, b0: f64, strike: f64, rate: f64, maturity: f64, z: f64) -> f64 {
    let h1 = expansion.variant.h1();
    let h2 = b0.signum();
    let p = normal_cdf(-h2 * z);
    let g = tail_term(&expansion.alpha, z);
    b0 * ((expansion.alpha[0] + h1) * p + h2 * g) - strike * (-rate * maturity).exp() * p
}

pub fn targets(basket: &ValidatedBasket, method: Method) -> Result<MomentVector> {
    target_moments(basket, basket.maturity(), method.variant(), method.order())
}

/// Full pipeline from a validated basket to a quote.
pub fn price(basket: &ValidatedBasket, method: Method) -> Result<PriceQuote> {
    let moments = targets(basket, method)?;
    let expansion = match_moments(&moments.target, method.variant())?;
    Ok(quote_from(basket, method, moments, expansion))
}

fn quote_from(basket: &ValidatedBasket, method: Method, moments: MomentVector, expansion: HermiteExpansion) -> PriceQuote {
    let b0 = basket.shifted_b0();
    let k = basket.shifted_strike();
    let (r, t) = (basket.rate(), basket.maturity());
    let root = exercise_root(&expansion, b0, k, r, t);
    let price = closed_form(&expansion, b0, k, r, t, root.z);
    let mut warnings = Vec::new();
    if !expansion.monotone && !expansion.is_constant() {
        warnings.push(QuoteWarning::NonMonotoneExpansion);
    }
    if root.crossings > 1 {
        warnings.push(QuoteWarning::MultipleExerciseRoots { count: root.crossings });
    }
    if price < 0.0 {
        warnings.push(QuoteWarning::NegativePrice);
    }
    PriceQuote {
        price,
        z_tilde: root.z,
        h1: method.variant().h1(),
        h2: b0.signum(),
        method,
        shifted_b0: b0,
        shifted_strike: k,
        expansion,
        moments,
        warnings,
    }
}

/// Parameter with respect to which a sensitivity is taken. Asset indices
/// are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "name", content = "asset", rename_all = "snake_case")]
pub enum GreekParameter {
    Spot(usize),
    B0,
    Vol(usize),
    Rate,
    Maturity,
    Weight(usize),
    JumpIntensity(usize),
    Shift(usize),
    JumpLogMean(usize),
    JumpLogVol(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreekMode {
    Analytic,
    Bumped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreekReport {
    pub parameter: GreekParameter,
    pub value: f64,
    pub mode: GreekMode,
}

impl GreekParameter {
    /// Every parameter of an `n`-asset basket.
    pub fn all(n: usize) -> Vec<GreekParameter> {
        let mut out = vec![GreekParameter::B0, GreekParameter::Rate, GreekParameter::Maturity];
        for i in 0..n {
            out.extend([
                GreekParameter::Spot(i),
                GreekParameter::Vol(i),
                GreekParameter::Weight(i),
                GreekParameter::JumpIntensity(i),
                GreekParameter::Shift(i),
                GreekParameter::JumpLogMean(i),
                GreekParameter::JumpLogVol(i),
            ]);
        }
        out
    }

    /// Whether the parameter exists in an `n`-asset basket.
    pub fn applies_to(self, n: usize) -> bool {
        self.asset().is_none_or(|i| i < n)
    }

    fn asset(self) -> Option<usize> {
        match self {
            GreekParameter::Spot(i)
            | GreekParameter::Vol(i)
            | GreekParameter::Weight(i)
            | GreekParameter::JumpIntensity(i)
            | GreekParameter::Shift(i)
            | GreekParameter::JumpLogMean(i)
            | GreekParameter::JumpLogVol(i) => Some(i),
            _ => None,
        }
    }

    pub fn get(self, spec: &BasketSpec) -> f64 {
        match self {
            GreekParameter::Spot(i) => spec.assets[i].spot,
            GreekParameter::B0 => crate::model::shifted_basket_and_strike(spec).0,
            GreekParameter::Vol(i) => spec.assets[i].vol,
            GreekParameter::Rate => spec.rate,
            GreekParameter::Maturity => spec.maturity,
            GreekParameter::Weight(i) => spec.weights[i],
            GreekParameter::JumpIntensity(i) => spec.assets[i].jump_intensity,
            GreekParameter::Shift(i) => spec.assets[i].shift0,
            GreekParameter::JumpLogMean(i) => spec.assets[i].jump_log_mean,
            GreekParameter::JumpLogVol(i) => spec.assets[i].jump_log_vol,
        }
    }

    /// Writes `v`. Setting `B_0` moves it through the first asset's spot,
    /// leaving the strike untouched.
    pub fn set(self, spec: &mut BasketSpec, v: f64) {
        match self {
            GreekParameter::Spot(i) => spec.assets[i].spot = v,
            GreekParameter::B0 => {
                let a1 = spec.weights[0];
                let b0 = crate::model::shifted_basket_and_strike(spec).0;
                spec.assets[0].spot += (v - b0) / a1;
            }
            GreekParameter::Vol(i) => spec.assets[i].vol = v,
            GreekParameter::Rate => spec.rate = v,
            GreekParameter::Maturity => spec.maturity = v,
            GreekParameter::Weight(i) => spec.weights[i] = v,
            GreekParameter::JumpIntensity(i) => spec.assets[i].jump_intensity = v,
            GreekParameter::Shift(i) => spec.assets[i].shift0 = v,
            GreekParameter::JumpLogMean(i) => spec.assets[i].jump_log_mean = v,
            GreekParameter::JumpLogVol(i) => spec.assets[i].jump_log_vol = v,
        }
    }

    /// Parameters that must stay non-negative (maturity strictly positive).
    pub fn lower_bounded(self) -> bool {
        matches!(
            self,
            GreekParameter::Vol(_)
                | GreekParameter::Rate
                | GreekParameter::Maturity
                | GreekParameter::JumpIntensity(_)
                | GreekParameter::JumpLogVol(_)
        )
    }

    fn check(self, n: usize) -> Result<()> {
        match self.asset() {
            Some(i) if i >= n => Err(PricingError::InvalidParameter(format!(
                "asset index {} out of range for {n} assets",
                i + 1
            ))),
            _ => Ok(()),
        }
    }
}

/// `name` or `name:i` with a one-based asset index, e.g. `vol:2`.
impl FromStr for GreekParameter {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, idx) = match s.split_once(':') {
            Some((n, i)) => {
                let i: usize = i
                    .trim()
                    .parse()
                    .map_err(|_| PricingError::InvalidParameter(format!("bad asset index in {s:?}")))?;
                if i == 0 {
                    return Err(PricingError::InvalidParameter("asset indices start at 1".into()));
                }
                (n.trim(), Some(i - 1))
            }
            None => (s.trim(), None),
        };
        let need = |f: fn(usize) -> GreekParameter| {
            idx.map(f)
                .ok_or_else(|| PricingError::InvalidParameter(format!("{name} needs an asset index, e.g. {name}:1")))
        };
        let bare = |p: GreekParameter| match idx {
            None => Ok(p),
            Some(_) => Err(PricingError::InvalidParameter(format!("{name} takes no asset index"))),
        };
        match name.to_ascii_lowercase().as_str() {
            "b0" | "delta" => bare(GreekParameter::B0),
            "rate" | "r" => bare(GreekParameter::Rate),
            "maturity" | "t" => bare(GreekParameter::Maturity),
            "spot" => need(GreekParameter::Spot),
            "vol" | "sigma" => need(GreekParameter::Vol),
            "weight" => need(GreekParameter::Weight),
            "lambda" => need(GreekParameter::JumpIntensity),
            "shift" | "delta0" => need(GreekParameter::Shift),
            "eta" => need(GreekParameter::JumpLogMean),
            "upsilon" => need(GreekParameter::JumpLogVol),
            _ => Err(PricingError::InvalidParameter(format!("unknown greek parameter {s:?}"))),
        }
    }
}

impl fmt::Display for GreekParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, idx) = match *self {
            GreekParameter::B0 => ("b0", None),
            GreekParameter::Rate => ("rate", None),
            GreekParameter::Maturity => ("maturity", None),
            GreekParameter::Spot(i) => ("spot", Some(i)),
            GreekParameter::Vol(i) => ("vol", Some(i)),
            GreekParameter::Weight(i) => ("weight", Some(i)),
            GreekParameter::JumpIntensity(i) => ("lambda", Some(i)),
            GreekParameter::Shift(i) => ("shift", Some(i)),
            GreekParameter::JumpLogMean(i) => ("eta", Some(i)),
            GreekParameter::JumpLogVol(i) => ("upsilon", Some(i)),
        };
        match idx {
            Some(i) => write!(f, "{name}:{}", i + 1),
            None => f.write_str(name),
        }
    }
}

/// Relative step for the target-moment derivatives.
const TARGET_BUMP: f64 = 1e-3;

/// Bump size for finite differences of `u`.
pub fn bump_step(u: f64) -> f64 {
    1e-5 * u.abs().max(1.0)
}

/// Derivatives of the forward, strike and discount factor along `u`.
struct Drivers {
    dforward: f64,
    dstrike: f64,
    ddiscount: f64,
}

fn drivers(basket: &ValidatedBasket, u: GreekParameter) -> Drivers {
    let r = basket.rate();
    let t = basket.maturity();
    let growth = (r * t).exp();
    let discount = 1.0 / growth;
    let b0 = basket.shifted_b0();
    let shift_t = basket.shift_total(t);
    let mut d = Drivers {
        dforward: 0.0,
        dstrike: 0.0,
        ddiscount: 0.0,
    };
    let assets = basket.assets();
    let w = basket.weights();
    match u {
        GreekParameter::B0 => d.dforward = growth,
        GreekParameter::Spot(i) => d.dforward = w[i] * growth,
        GreekParameter::Weight(i) => {
            let bd = assets[i].shift_sign.value() * assets[i].shift0;
            d.dforward = (assets[i].spot - bd) * growth;
            d.dstrike = -bd * growth;
        }
        GreekParameter::Shift(i) => {
            let ab = w[i] * assets[i].shift_sign.value();
            d.dforward = -ab * growth;
            d.dstrike = -ab * growth;
        }
        GreekParameter::Rate => {
            d.dforward = b0 * t * growth;
            d.dstrike = -t * shift_t;
            d.ddiscount = -t * discount;
        }
        GreekParameter::Maturity => {
            d.dforward = b0 * r * growth;
            d.dstrike = -r * shift_t;
            d.ddiscount = -r * discount;
        }
        _ => {}
    }
    d
}

/// Finite-difference derivative of the target moments along `u`.
fn bumped_target_derivative(basket: &ValidatedBasket, method: Method, u: GreekParameter) -> Result<Vec<f64>> {
    let x = u.get(basket.spec());
    // Order-6 matching amplifies rounding in the targets, so the step is
    // wide and the truncation error is removed by Richardson extrapolation.
    let h = TARGET_BUMP * x.abs().max(1.0);
    let eval = |v: f64| -> Result<Vec<f64>> {
        let b = basket.with(|s| u.set(s, v))?;
        Ok(targets(&b, method)?.target)
    };
    let forward = u.lower_bounded() && x - h <= 0.0;
    let t0 = if forward { Some(targets(basket, method)?.target) } else { None };
    let diff = |h: f64| -> Result<Vec<f64>> {
        match &t0 {
            Some(t0) => {
                let t1 = eval(x + h)?;
                let t2 = eval(x + 2.0 * h)?;
                Ok((0..t0.len()).map(|k| (-3.0 * t0[k] + 4.0 * t1[k] - t2[k]) / (2.0 * h)).collect())
            }
            None => {
                let up = eval(x + h)?;
                let dn = eval(x - h)?;
                Ok(up.iter().zip(&dn).map(|(a, b)| (a - b) / (2.0 * h)).collect())
            }
        }
    };
    let coarse = diff(h)?;
    let fine = diff(0.5 * h)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

/// Solves the linearised matching system for `∂α_1..∂α_{m-1}`.
fn alpha_sensitivity(expansion: &HermiteExpansion, dtarget: &[f64]) -> Result<Vec<f64>> {
    let m = expansion.m;
    let jac = expansion_moment_jacobian(&expansion.alpha, m);
    let n = m - 1;
    let a = DMatrix::from_fn(n, n, |row, col| jac[row + 1][col]);
    let b = DVector::from_iterator(n, dtarget[1..].iter().copied());
    let col_scale: f64 = (0..n).map(|c| a.column(c).norm()).product();
    let det = a.clone().lu().determinant();
    if !(det.abs() > 1e-13 * col_scale) {
        return Err(PricingError::SingularJacobian(format!(
            "determinant {det:e} at alpha {:?}",
            expansion.alpha
        )));
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| PricingError::SingularJacobian("LU solve failed".into()))?;
    let mut out = vec![dtarget[0]];
    out.extend(x.iter().copied());
    Ok(out)
}

/// Assembles `∂c_0/∂u` from a quote and the target derivatives.
///
/// `∂c/∂u = c e^{rT} ∂e^{-rT}/∂u + B_0 [h_2 g_∂(z̃) + ∂α_0/∂u Φ(-h_2 z̃)]
///        + e^{-rT} ∂F/∂u [h_2 g(z̃) + (α_0 + h_1) Φ(-h_2 z̃)] - e^{-rT} ∂K/∂u Φ(-h_2 z̃)`,
/// where `g_∂` is `g` with `α` replaced by `∂α/∂u`. The boundary terms from
/// moving `z̃` cancel because the integrand vanishes there.
fn assemble(basket: &ValidatedBasket, quote: &PriceQuote, dalpha: &[f64], d: &Drivers) -> f64 {
    let z = quote.z_tilde;
    let h2 = quote.h2;
    let p = normal_cdf(-h2 * z);
    let g = tail_term(&quote.expansion.alpha, z);
    let dg = tail_term(dalpha, z);
    let growth = (basket.rate() * basket.maturity()).exp();
    let discount = 1.0 / growth;
    quote.price * growth * d.ddiscount
        + quote.shifted_b0 * (h2 * dg + dalpha[0] * p)
        + discount * d.dforward * (h2 * g + (quote.expansion.alpha[0] + quote.h1) * p)
        - discount * d.dstrike * p
}

/// Sensitivity of the price to `u`, reusing a quote for `basket`.
pub fn greek_from_quote(basket: &ValidatedBasket, quote: &PriceQuote, u: GreekParameter) -> Result<GreekReport> {
    u.check(basket.len())?;
    let method = quote.method;
    if quote.expansion.is_constant() {
        // A deterministic basket stays deterministic under every bump except
        // those that switch randomness on, where the kink has no derivative.
        if matches!(
            u,
            GreekParameter::Vol(_) | GreekParameter::JumpIntensity(_) | GreekParameter::JumpLogMean(_) | GreekParameter::JumpLogVol(_)
        ) {
            return Err(PricingError::SingularJacobian(format!(
                "{u} sensitivity of a deterministic basket is undefined"
            )));
        }
        let dalpha = vec![0.0; quote.expansion.m];
        let value = assemble(basket, quote, &dalpha, &drivers(basket, u));
        let mode = if u == GreekParameter::B0 { GreekMode::Analytic } else { GreekMode::Bumped };
        return Ok(GreekReport { parameter: u, value, mode });
    }
    let (dtarget, mode) = match u {
        GreekParameter::B0 => (
            dtarget_db0_all(basket, basket.maturity(), method.variant(), method.order())?,
            GreekMode::Analytic,
        ),
        _ => (bumped_target_derivative(basket, method, u)?, GreekMode::Bumped),
    };
    let dalpha = alpha_sensitivity(&quote.expansion, &dtarget)?;
    let value = assemble(basket, quote, &dalpha, &drivers(basket, u));
    Ok(GreekReport {
        parameter: u,
        value,
        mode,
    })
}

pub fn greek(basket: &ValidatedBasket, method: Method, u: GreekParameter) -> Result<GreekReport> {
    let quote = price(basket, method)?;
    greek_from_quote(basket, &quote, u)
}

/// `∂c_0/∂B_0`, moving `B_0` along the first asset with the strike fixed.
pub fn delta(basket: &ValidatedBasket, method: Method) -> Result<GreekReport> {
    greek(basket, method, GreekParameter::B0)
}

pub fn delta_from_quote(basket: &ValidatedBasket, quote: &PriceQuote) -> Result<GreekReport> {
    greek_from_quote(basket, quote, GreekParameter::B0)
}

/// Central (or one-sided at a lower bound) difference of the full price.
pub fn bumped_price_greek(basket: &ValidatedBasket, method: Method, u: GreekParameter, h: f64) -> Result<f64> {
    u.check(basket.len())?;
    let x = u.get(basket.spec());
    let at = |v: f64| -> Result<f64> { Ok(price(&basket.with(|s| u.set(s, v))?, method)?.price) };
    if u.lower_bounded() && x - h <= 0.0 {
        let c0 = price(basket, method)?.price;
        Ok((-3.0 * c0 + 4.0 * at(x + h)? - at(x + 2.0 * h)?) / (2.0 * h))
    } else {
        Ok((at(x + h)? - at(x - h)?) / (2.0 * h))
    }
}
