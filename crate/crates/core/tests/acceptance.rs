//! Acceptance suite. Runs each criterion once, prints one PASS/FAIL line per
//! criterion with the measured numbers, and exits non-zero if any failed.

use std::time::{Duration, Instant};

use basket_core::benchmark::{generate_scenarios, ScenarioConfig, ScenarioSet, SuiteConfig};
use basket_core::hermite::{expansion_moments, hermite_values, match_moments, Variant};
use basket_core::mc::{mc_moments, simulate_paths};
use basket_core::moments::basket_moment;
use basket_core::numerics::normal_pdf;
use basket_core::pricer::GreekParameter;
use basket_core::{
    evaluate_methods, fixtures, greek, mc_price, price, run_hedge, AssetSpec, BasketSpec, HedgeConfig, McConfig,
    Method, MethodTag, ShiftSign, ValidatedBasket,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TABLE3_4GA: [f64; 6] = [8.1977, 16.4424, 12.5695, 1.1453, 7.4563, 9.7628];
const TABLE3_6GA: [f64; 6] = [8.2222, 16.4631, 12.5888, 1.0938, 7.4555, 9.7856];
const PRICE_TOL: f64 = 5e-4;
const SAME_PRICE_TOL: f64 = 5e-5;
const MC_BASKET1: f64 = 8.2263;
const MC_BASKET1_SD: f64 = 0.0031;
const HEDGE_C4: f64 = 0.1984;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn basket(i: usize) -> ValidatedBasket {
    fixtures::basket(i).validate().unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

/// Random shifted jump-diffusion basket with `lo..=hi` assets.
fn random_jump_basket(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> ValidatedBasket {
    let n = rng.random_range(lo..=hi);
    let rate = rng.random_range(0.0..0.08);
    let maturity = rng.random_range(0.25..1.5);
    let assets: Vec<AssetSpec> = (0..n)
        .map(|_| AssetSpec {
            spot: rng.random_range(70.0..130.0),
            vol: rng.random_range(0.1..0.4),
            shift0: rng.random_range(0.0..20.0),
            shift_sign: if rng.random::<bool>() { ShiftSign::Positive } else { ShiftSign::Negative },
            jump_intensity: rng.random_range(0.1..0.5),
            jump_log_mean: rng.random_range(-0.3..0.3),
            jump_log_vol: rng.random_range(0.05..0.3),
        })
        .collect();
    let weights: Vec<f64> = (0..n)
        .map(|_| {
            let w: f64 = rng.random_range(0.2..1.0);
            if rng.random::<bool>() { w } else { -w }
        })
        .collect();
    let rho: f64 = rng.random_range(0.0..0.8);
    let raw: f64 = assets.iter().zip(&weights).map(|(a, w)| a.spot * w).sum();
    BasketSpec {
        assets,
        weights,
        correlation: BasketSpec::uniform_correlation(n, rho),
        rate,
        maturity,
        strike: raw,
    }
    .validate()
    .unwrap()
}

fn table3_golden() -> Outcome {
    let start = Instant::now();
    let mut misses = Vec::new();
    let mut worst: f64 = 0.0;
    for (method, expected) in [(Method::G4A, TABLE3_4GA), (Method::G6A, TABLE3_6GA)] {
        for (i, want) in expected.iter().enumerate() {
            match price(&basket(i + 1), method) {
                Ok(q) => {
                    let err = (q.price - want).abs();
                    worst = worst.max(err);
                    if err > PRICE_TOL {
                        misses.push(format!("{method} basket {}: {:.4} vs {want}", i + 1, q.price));
                    }
                }
                Err(e) => misses.push(format!("{method} basket {}: {e}", i + 1)),
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = misses.is_empty() && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!("max |err| {worst:.2e} (tol {PRICE_TOL:e}), time {}; misses: [{}]", secs(elapsed), misses.join("; ")),
    )
}

fn four_ga_equals_four_gb() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 1..=6 {
        let b = basket(i);
        let a = price(&b, Method::G4A).unwrap().price;
        let c = price(&b, Method::G4B).unwrap().price;
        worst = worst.max((a - c).abs());
    }
    outcome(worst <= SAME_PRICE_TOL, format!("max |4GA - 4GB| {worst:.2e} (tol {SAME_PRICE_TOL:e})"))
}

fn mc_oracle() -> Outcome {
    let b = basket(1);
    let start = Instant::now();
    let m1 = mc_price(&b, &McConfig::with_paths(1_000_000, 2024)).unwrap();
    let t1 = start.elapsed();
    let m4 = mc_price(&b, &McConfig::with_paths(4_000_000, 2024)).unwrap();
    let tol1 = 3.0 * MC_BASKET1_SD * 2.0;
    let tol4 = 3.0 * MC_BASKET1_SD;
    let ok1 = (m1.value - MC_BASKET1).abs() <= tol1;
    let ok4 = (m4.value - MC_BASKET1).abs() <= tol4;
    outcome(
        ok1 && ok4 && t1 < Duration::from_secs(60),
        format!(
            "1e6: {:.4} (SE {:.4}, tol {tol1:.4}, {}); 4e6: {:.4} (SE {:.4}, tol {tol4:.4})",
            m1.value,
            m1.std_error,
            secs(t1),
            m4.value,
            m4.std_error
        ),
    )
}

fn martingale_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_z: f64 = 0.0;
    let mut worst_mu1: f64 = 0.0;
    let mut misses = Vec::new();
    for k in 0..20 {
        let b = random_jump_basket(&mut rng, 2, 4);
        let t = b.maturity();
        let disc = (-b.rate() * t).exp();
        let paths = simulate_paths(&b, &[t], &McConfig::with_paths(200_000, 100 + k), None).unwrap();
        let np = paths.n_paths() as f64;
        for (i, a) in b.assets().iter().enumerate() {
            let xs: Vec<f64> = paths.spots.iter().map(|p| disc * p[1][i]).collect();
            let mean = xs.iter().sum::<f64>() / np;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (np - 1.0);
            let z = (mean - a.spot).abs() / (var / np).sqrt();
            worst_z = worst_z.max(z);
            if z > 3.0 {
                misses.push(format!("basket {k} asset {i}: {z:.2} SE"));
            }
        }
        let mu1 = basket_moment(1, &b, t).unwrap();
        let expect = b.shifted_b0() * (b.rate() * t).exp();
        worst_mu1 = worst_mu1.max((mu1 - expect).abs() / expect.abs());
    }
    outcome(
        misses.is_empty() && worst_mu1 <= 1e-12,
        format!("worst |mean - S0| {worst_z:.2} SE (tol 3), worst mu1 rel err {worst_mu1:.1e}; misses: [{}]", misses.join("; ")),
    )
}

fn moment_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for k in 0..10 {
        let b = random_jump_basket(&mut rng, 2, 8);
        let t = b.maturity();
        let sample = mc_moments(&b, t, 4, &McConfig::with_paths(1_000_000, 200 + k)).unwrap();
        for order in 2..=4 {
            let exact = basket_moment(order, &b, t).unwrap();
            let z = (sample.moments[order - 1] - exact).abs() / sample.std_errors[order - 1];
            worst = worst.max(z);
            if z > 3.0 {
                misses.push(format!("basket {k} mu{order}: {z:.2} SE"));
            }
        }
    }
    outcome(misses.is_empty(), format!("worst deviation {worst:.2} SE (tol 3); misses: [{}]", misses.join("; ")))
}

fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            X.iter().zip(W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

fn hermite_identities() -> Outcome {
    let mut worst_orth: f64 = 0.0;
    for j in 0..=5 {
        for k in 0..=5 {
            let f = |z: f64| {
                let h = hermite_values(z, 6);
                h[j] * h[k] * normal_pdf(z)
            };
            let v = gauss_legendre(&f, -14.0, 14.0, 400);
            let expect = if j == k { (1..=k).map(|x| x as f64).product::<f64>() } else { 0.0 };
            worst_orth = worst_orth.max((v - expect).abs());
        }
    }
    let mut worst_tail: f64 = 0.0;
    for z0 in [-2.0, 0.0, 1.5] {
        for k in 1..=5 {
            let f = |z: f64| hermite_values(z, 6)[k] * normal_pdf(z);
            let v = gauss_legendre(&f, z0, 14.0, 400);
            let expect = hermite_values(z0, 6)[k - 1] * normal_pdf(z0);
            worst_tail = worst_tail.max((v - expect).abs());
        }
    }

    let mut worst_price: f64 = 0.0;
    let mut checked = 0;
    for i in 1..=6 {
        let b = basket(i);
        for method in Method::ALL {
            let Ok(q) = price(&b, method) else { continue };
            if !q.warnings.is_empty() {
                continue;
            }
            let f = b.shifted_forward();
            let k = b.shifted_strike();
            let j = q.expansion.polynomial();
            let integrand = |z: f64| (f * (j.eval(z) + q.h1) - k).max(0.0) * normal_pdf(z);
            let zt = q.z_tilde.clamp(-14.0, 14.0);
            let quad = gauss_legendre(&integrand, -14.0, zt, 3000) + gauss_legendre(&integrand, zt, 14.0, 3000);
            let expect = (-b.rate() * b.maturity()).exp() * quad;
            worst_price = worst_price.max((q.price - expect).abs() / expect.abs().max(1.0));
            checked += 1;
        }
    }
    outcome(
        worst_orth <= 1e-10 && worst_tail <= 1e-10 && worst_price <= 1e-8 && checked > 0,
        format!(
            "orthogonality {worst_orth:.1e}, tail {worst_tail:.1e} (tol 1e-10); closed form vs quadrature {worst_price:.1e} over {checked} quotes (tol 1e-8)"
        ),
    )
}

fn price_of(spec: BasketSpec, method: Method) -> f64 {
    price(&spec.validate().unwrap(), method).unwrap().price
}

fn finite_difference(b: &ValidatedBasket, method: Method, p: GreekParameter) -> f64 {
    let u = p.get(b.spec());
    let h = 1e-3 * u.abs().max(1.0);
    let at = |v: f64| {
        let mut spec = b.spec().clone();
        p.set(&mut spec, v);
        price_of(spec, method)
    };
    if p.lower_bounded() && u - h < 0.0 {
        (-3.0 * at(u) + 4.0 * at(u + h) - at(u + 2.0 * h)) / (2.0 * h)
    } else {
        (at(u + h) - at(u - h)) / (2.0 * h)
    }
}

fn greeks_vs_finite_differences() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    let mut checked = 0;
    for i in 1..=6 {
        let b = basket(i);
        for method in Method::ALL {
            for p in GreekParameter::all(b.len()) {
                let fd = finite_difference(&b, method, p);
                match greek(&b, method, p) {
                    Ok(g) => {
                        let err = (g.value - fd).abs();
                        let scale = g.value.abs().max(fd.abs());
                        checked += 1;
                        // sensitivities that vanish exactly are compared on an absolute floor
                        if err > 1e-4 * scale + 1e-9 {
                            misses.push(format!("basket {i} {method} {p}: {:.6} vs {fd:.6}", g.value));
                        }
                        if scale > 1e-6 {
                            worst = worst.max(err / scale);
                        }
                    }
                    Err(e) => misses.push(format!("basket {i} {method} {p}: {e}")),
                }
            }
        }
    }
    let mut fwd = fixtures::basket(1);
    fwd.strike = -2000.0;
    for a in &mut fwd.assets {
        a.vol = 0.05;
    }
    let fwd = fwd.validate().unwrap();
    let d = greek(&fwd, Method::G4A, GreekParameter::B0).unwrap().value;
    let fwd_ok = (d - 1.0).abs() <= 1e-3;
    outcome(
        misses.is_empty() && fwd_ok,
        format!(
            "{checked} sensitivities, worst rel err {worst:.1e} (tol 1e-4); forward-like Delta {d:.6}; misses ({}): [{}]",
            misses.len(),
            misses.join("; ")
        ),
    )
}

fn moment_matching() -> Outcome {
    // planted expansions, monotone near the Gaussian
    let planted = [
        vec![1.0, 0.2, 0.01, -0.004],
        vec![1.0, 0.35, -0.03, 0.01],
        vec![1.0, 0.1, 0.004, 0.002],
        vec![1.0, 0.25, 0.02, 0.005, -0.001, 0.0005],
    ];
    let mut worst_alpha: f64 = 0.0;
    for alpha in &planted {
        let t = expansion_moments(alpha, alpha.len());
        let e = match_moments(&t, Variant::A).unwrap();
        for (x, y) in e.alpha.iter().zip(alpha) {
            worst_alpha = worst_alpha.max((x - y).abs());
        }
    }
    let mut worst_residual: f64 = 0.0;
    let mut failures = Vec::new();
    for i in 1..=6 {
        for method in Method::ALL {
            match price(&basket(i), method) {
                Ok(q) => worst_residual = worst_residual.max(q.expansion.residual_norm),
                Err(e) => failures.push(format!("basket {i} {method}: {e}")),
            }
        }
    }
    let s: f64 = 0.2;
    let gauss = [1.0, 1.0 + s * s, 1.0 + 3.0 * s * s, 1.0 + 6.0 * s * s + 3.0 * s.powi(4)];
    let g = match_moments(&gauss, Variant::A).unwrap();
    let gauss_err = [g.alpha[0] - 1.0, g.alpha[1] - s, g.alpha[2], g.alpha[3]]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    outcome(
        worst_alpha <= 1e-8 && worst_residual <= 1e-10 && failures.is_empty() && gauss_err <= 1e-14,
        format!(
            "round trip {worst_alpha:.1e} (tol 1e-8); worst residual {worst_residual:.1e} (tol 1e-10); Gaussian alpha error {gauss_err:.1e} after {} iterations; failures: [{}]",
            g.iterations,
            failures.join("; ")
        ),
    )
}

fn benchmark_harness() -> Outcome {
    let start = Instant::now();
    let scenarios = generate_scenarios(&ScenarioConfig { set: ScenarioSet::One, count: 100, seed: 1 });
    let config = SuiteConfig { oracle_paths: Some(100_000), ..SuiteConfig::default() };
    let report = evaluate_methods(&scenarios, &config).unwrap();
    let elapsed = start.elapsed();
    let total = report.total();
    let c3 = total.method(MethodTag::Single(Method::G4A)).and_then(|m| m.c3).unwrap_or(f64::INFINITY);
    let c2 = total.method(MethodTag::Hybrid4GAB).map(|m| m.c2_fraction).unwrap_or(1.0);
    outcome(
        elapsed < Duration::from_secs(20 * 60) && c3 <= 0.5 && c2 <= 0.15,
        format!(
            "4GA C3 {c3:.4} (tol 0.5), 4GAB C2 {:.1}% (tol 15%), {} noisy oracles, time {}",
            100.0 * c2,
            total.noisy,
            secs(elapsed)
        ),
    )
}

fn hedging_simulator() -> Outcome {
    let mut fwd = fixtures::basket(1);
    fwd.strike = -2000.0;
    for a in &mut fwd.assets {
        a.vol = 0.05;
    }
    let fwd = fwd.validate().unwrap();
    let quick = HedgeConfig { paths: 200, nested_paths: None, ..HedgeConfig::default() };
    let f = run_hedge(&fwd, Method::G4A, &quick).unwrap();
    let fwd_ok = f.c4 == 0.0 && f.c10.abs() <= 1e-10 * 2000.0;

    let start = Instant::now();
    let r = run_hedge(&basket(1), Method::G4A, &HedgeConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let c4_ok = (r.c4 - HEDGE_C4).abs() <= 0.15 * HEDGE_C4;
    let c10_ok = r.c10 < 0.0;
    let sf_ok = r.self_financing_error <= 1e-10 && f.self_financing_error <= 1e-10;
    outcome(
        fwd_ok && c4_ok && c10_ok && sf_ok && elapsed < Duration::from_secs(15 * 60),
        format!(
            "forward-like C4 {:e} C10 {:.1e}; basket 1: C4 {:.4} (band {:.4}..{:.4}), C5 {:.4}, C6 {:.4}, C8 {:.4}, C9 {:.4}, C10 {:.4} (need < 0), carried {}, self-financing {:.1e}, time {}",
            f.c4,
            f.c10,
            r.c4,
            0.85 * HEDGE_C4,
            1.15 * HEDGE_C4,
            r.c5.unwrap_or(f64::NAN),
            r.c6,
            r.c8,
            r.c9,
            r.c10,
            r.carried_steps,
            r.self_financing_error,
            secs(elapsed)
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("golden prices for baskets 1-6", table3_golden),
        ("4GA and 4GB agree", four_ga_equals_four_gb),
        ("Monte Carlo oracle for basket 1", mc_oracle),
        ("martingale property", martingale_suite),
        ("moments against Monte Carlo", moment_oracle),
        ("Hermite identities and closed form", hermite_identities),
        ("sensitivities against finite differences", greeks_vs_finite_differences),
        ("moment matching", moment_matching),
        ("scenario benchmark", benchmark_harness),
        ("hedging simulator", hedging_simulator),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} ({name}): {}", o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
