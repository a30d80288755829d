//! `basket`: price, hedge and benchmark European basket options.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use basket_core::benchmark::{self, ScenarioOutcome, ScenarioSet, SuiteConfig};
use basket_core::hedgesim::HedgeReport;
use basket_core::mc::mc_moments;
use basket_core::moments::target_moments;
use basket_core::pricer::greek_from_quote;
use basket_core::{
    fixtures, mc_price, price, run_hedge, BasketSpec, GreekParameter, HedgeConfig, McConfig, Method, MethodResult,
    MethodTag, PricingError, ValidatedBasket, Variant,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use output::{Emitter, RunManifest};


#[derive(Parser)]
#[command(name = "basket", version = version_string(), about = "European basket options under a shifted jump-diffusion")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "HB_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

const fn version_string() -> &'static str {
    concat!(env!("CARGO_PKG_VERSION"), " (config format 1)")
}

#[derive(Subcommand)]
enum Command {
    /// Price with one or more Hermite methods.
    Price(PriceArgs),
    /// Sensitivities of the price.
    Greeks(GreeksArgs),
    /// Raw basket moments and matching targets.
    Moments(MomentsArgs),
    /// Monte Carlo price with control variate.
    Mc(McArgs),
    /// Discrete Delta-hedging backtest.
    Hedge(HedgeArgs),
    /// Randomized scenario benchmark against a Monte Carlo oracle.
    Suite(SuiteArgs),
    /// Reference baskets priced by every method and by Monte Carlo.
    Table3(Table3Args),
}

#[derive(Args)]
struct Common {
    /// Basket configuration: a JSON file or a bundled fixture name (basket1..basket6, basket1s..basket6s).
    #[arg(long)]
    config: String,
    /// Write results here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    common: Common,
    /// Methods, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4GA")]
    method: Vec<Method>,
}

#[derive(Args)]
struct GreeksArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "4GA")]
    method: Method,
    /// Parameters such as `b0`, `rate`, `vol:2`; all of them by default.
    #[arg(long, value_delimiter = ',')]
    param: Vec<GreekParameter>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    A,
    B,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 4)]
    order: usize,
    #[arg(long, value_enum, default_value = "a")]
    variant: VariantArg,
    /// Horizon; the maturity by default.
    #[arg(long)]
    time: Option<f64>,
    /// Also estimate the moments by Monte Carlo with this many paths.
    #[arg(long)]
    mc_paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1_000_000)]
    paths: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    antithetic: bool,
}

#[derive(Args)]
struct HedgeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "4GA")]
    method: Method,
    #[arg(long, default_value_t = 1000)]
    paths: u64,
    #[arg(long, default_value_t = 12)]
    rebalances: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Paths per nested Monte Carlo price used for C5.
    #[arg(long, default_value_t = 100_000)]
    nested_paths: u64,
    /// Skip the nested Monte Carlo prices (C5 is then not reported).
    #[arg(long)]
    no_nested: bool,
    /// Per-asset physical drifts, comma separated; risk-neutral by default.
    #[arg(long, value_delimiter = ',')]
    drift: Vec<f64>,
    /// Write one row per path to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value = "1")]
    set: ScenarioSet,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "4GA,4GB,6GA,6GB")]
    methods: Vec<Method>,
    /// Oracle paths for every scenario; scaled with the basket size by default.
    #[arg(long)]
    paths_oracle: Option<u64>,
    /// Run order-6 methods on baskets of any size.
    #[arg(long)]
    order6_all: bool,
    /// Write one row per scenario to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Table3Args {
    #[arg(long, default_value_t = 4_000_000)]
    paths: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Emit JSON instead of a text table.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Pricing(PricingError),
    Config(String),
    Io(String),
}

impl From<PricingError> for CliError {
    fn from(e: PricingError) -> Self {
        CliError::Pricing(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pricing(e) if e.is_validation() => 2,
            CliError::Config(_) => 2,
            CliError::Pricing(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Pricing(e) => write!(f, "{e}"),
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn load_spec(config: &str) -> CliResult<BasketSpec> {
    let path = Path::new(config);
    if !path.exists() {
        if let Some(spec) = fixtures::by_name(config) {
            return Ok(spec);
        }
    }
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    BasketSpec::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_basket(config: &str) -> CliResult<ValidatedBasket> {
    Ok(load_spec(config)?.validate()?)
}

/// The given seed, or a fresh one announced on standard error.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        let s = basket_core::mc::mix_seed(nanos, std::process::id() as u64, 0);
        eprintln!("seed: {s}");
        s
    })
}

fn cmd_price(args: &PriceArgs, em: &mut Emitter) -> CliResult<()> {
    let basket = load_basket(&args.common.config)?;
    em.manifest.methods = args.method.iter().map(|m| m.to_string()).collect();
    let quotes = args
        .method
        .iter()
        .map(|&m| price(&basket, m))
        .collect::<Result<Vec<_>, _>>()?;
    for q in &quotes {
        for w in &q.warnings {
            eprintln!("warning: {}: {w:?}", q.method);
        }
    }
    let body = if quotes.len() == 1 { json!(quotes[0]) } else { json!(quotes) };
    em.json(args.common.out.as_deref(), body)
}

fn cmd_greeks(args: &GreeksArgs, em: &mut Emitter) -> CliResult<()> {
    let basket = load_basket(&args.common.config)?;
    em.manifest.methods = vec![args.method.to_string()];
    let params = if args.param.is_empty() { GreekParameter::all(basket.len()) } else { args.param.clone() };
    if let Some(p) = params.iter().find(|p| !p.applies_to(basket.len())) {
        return Err(CliError::Config(format!("parameter {p} does not exist in a {}-asset basket", basket.len())));
    }
    let quote = price(&basket, args.method)?;
    let rows = params
        .iter()
        .map(|&p| {
            let g = greek_from_quote(&basket, &quote, p)?;
            Ok(json!({ "parameter": p.to_string(), "value": g.value, "mode": g.mode }))
        })
        .collect::<Result<Vec<_>, PricingError>>()?;
    em.json(
        args.common.out.as_deref(),
        json!({ "method": args.method, "price": quote.price, "greeks": rows }),
    )
}

fn cmd_moments(args: &MomentsArgs, em: &mut Emitter) -> CliResult<()> {
    let basket = load_basket(&args.common.config)?;
    let t = args.time.unwrap_or(basket.maturity());
    let variant = match args.variant {
        VariantArg::A => Variant::A,
        VariantArg::B => Variant::B,
    };
    let mv = target_moments(&basket, t, variant, args.order)?;
    let mut body = json!({ "time": t, "moments": mv });
    if let Some(paths) = args.mc_paths {
        let seed = resolve_seed(args.seed);
        em.manifest.seed = Some(seed);
        let sample = mc_moments(&basket, t, args.order, &McConfig::with_paths(paths, seed))?;
        body["monte_carlo"] = json!(sample);
    }
    em.json(args.common.out.as_deref(), body)
}

fn cmd_mc(args: &McArgs, em: &mut Emitter) -> CliResult<()> {
    let basket = load_basket(&args.common.config)?;
    let seed = resolve_seed(args.seed);
    em.manifest.seed = Some(seed);
    let config = McConfig { antithetic: args.antithetic, ..McConfig::with_paths(args.paths, seed) };
    let est = mc_price(&basket, &config)?;
    em.json(args.common.out.as_deref(), json!(est))
}

#[derive(Serialize)]
struct HedgeSummary {
    method: Method,
    paths: u64,
    rebalances: usize,
    c4: f64,
    c5: Option<f64>,
    c6: f64,
    c7: f64,
    c8: f64,
    c9: f64,
    c10: f64,
    carried_steps: usize,
    degenerate_paths: usize,
    self_financing_error: f64,
}

impl From<&HedgeReport> for HedgeSummary {
    fn from(r: &HedgeReport) -> Self {
        HedgeSummary {
            method: r.method,
            paths: r.paths,
            rebalances: r.rebalances,
            c4: r.c4,
            c5: r.c5,
            c6: r.c6,
            c7: r.c7,
            c8: r.c8,
            c9: r.c9,
            c10: r.c10,
            carried_steps: r.carried_steps,
            degenerate_paths: r.degenerate_paths,
            self_financing_error: r.self_financing_error,
        }
    }
}

fn cmd_hedge(args: &HedgeArgs, em: &mut Emitter) -> CliResult<()> {
    let basket = load_basket(&args.common.config)?;
    let seed = resolve_seed(args.seed);
    em.manifest.seed = Some(seed);
    em.manifest.methods = vec![args.method.to_string()];
    let config = HedgeConfig {
        paths: args.paths,
        rebalances: args.rebalances,
        seed,
        nested_paths: (!args.no_nested).then_some(args.nested_paths),
        drift: (!args.drift.is_empty()).then(|| args.drift.clone()),
    };
    let report = run_hedge(&basket, args.method, &config)?;
    if let Some(path) = &args.csv {
        let mut rows = Vec::with_capacity(report.records.len() + 1);
        for (i, rec) in report.records.iter().enumerate() {
            rows.push(vec![
                i.to_string(),
                rec.terminal_error.to_string(),
                rec.delta_vol.to_string(),
                rec.carried_steps.to_string(),
            ]);
        }
        rows.push(vec![
            "summary".into(),
            report.c10.to_string(),
            report.c4.to_string(),
            report.carried_steps.to_string(),
        ]);
        em.csv(path, &["path", "terminal_error", "delta_vol", "carried_steps"], &rows)?;
    }
    em.json(args.common.out.as_deref(), json!(HedgeSummary::from(&report)))
}

fn method_columns(outcomes: &[ScenarioOutcome]) -> Vec<MethodTag> {
    let mut tags = Vec::new();
    for o in outcomes {
        for r in &o.results {
            if !tags.contains(&r.method) {
                tags.push(r.method);
            }
        }
    }
    tags
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_suite(args: &SuiteArgs, em: &mut Emitter) -> CliResult<()> {
    let seed = resolve_seed(args.seed);
    em.manifest.seed = Some(seed);
    em.manifest.config = Some(format!("set {} count {}", args.set, args.count));
    em.manifest.methods = args.methods.iter().map(|m| m.to_string()).collect();
    let scenarios = benchmark::generate_scenarios(&benchmark::ScenarioConfig {
        set: args.set,
        count: args.count,
        seed,
    });
    let config = SuiteConfig {
        methods: args.methods.clone(),
        oracle_seed: seed,
        oracle_paths: args.paths_oracle,
        order6_max_assets: if args.order6_all { None } else { Some(10) },
    };
    let report = benchmark::evaluate_methods(&scenarios, &config)?;
    if let Some(path) = &args.csv {
        let tags = method_columns(&report.outcomes);
        let mut header: Vec<String> = [
            "scenario",
            "params_hash",
            "n_assets",
            "rate",
            "maturity",
            "strike_ratio",
            "oracle",
            "oracle_se",
            "noisy_oracle",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for t in &tags {
            header.extend([format!("{t}_price"), format!("{t}_error"), format!("{t}_failed")]);
        }
        let rows: Vec<Vec<String>> = report
            .outcomes
            .iter()
            .map(|o| {
                let mut row = vec![
                    o.scenario.to_string(),
                    format!("{:016x}", o.params_hash),
                    o.n_assets.to_string(),
                    o.rate.to_string(),
                    o.maturity.to_string(),
                    o.strike_ratio.to_string(),
                    o.oracle.to_string(),
                    o.oracle_std_error.to_string(),
                    o.noisy_oracle.to_string(),
                ];
                for t in &tags {
                    match o.result(*t) {
                        Some(r) => row.extend([
                            fmt_opt(r.price),
                            fmt_opt(r.price.map(|p| p - o.oracle)),
                            (!r.succeeded()).to_string(),
                        ]),
                        None => row.extend([String::new(), String::new(), String::new()]),
                    }
                }
                row
            })
            .collect();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        em.csv(path, &header_refs, &rows)?;
    }
    let resamples: u32 = scenarios.iter().map(|s| s.resamples).sum();
    em.json(args.out.as_deref(), json!({ "slices": report.slices, "resamples": resamples }))
}

fn cmd_table3(args: &Table3Args, em: &mut Emitter) -> CliResult<()> {
    let seed = resolve_seed(args.seed);
    em.manifest.seed = Some(seed);
    em.manifest.methods = Method::ALL.iter().map(|m| m.to_string()).collect();
    let mut outcomes = Vec::new();
    for i in 1..=6 {
        let basket = fixtures::basket(i).validate()?;
        let mc = mc_price(&basket, &McConfig::with_paths(args.paths, basket_core::mc::mix_seed(seed, i as u64, 0)))?;
        let results: Vec<MethodResult> = Method::ALL
            .iter()
            .map(|&m| MethodResult::from_price(i, MethodTag::Single(m), price(&basket, m).map(|q| q.price), mc.value))
            .collect();
        outcomes.push(ScenarioOutcome {
            scenario: i,
            n_assets: basket.len(),
            rate: basket.rate(),
            maturity: basket.maturity(),
            strike_ratio: basket.raw_strike() / basket.raw_b0(),
            params_hash: 0,
            oracle: mc.value,
            oracle_std_error: mc.std_error,
            noisy_oracle: false,
            results,
        });
    }
    let refs: Vec<&ScenarioOutcome> = outcomes.iter().collect();
    let summary = benchmark::criteria("table 2 baskets", &refs);
    if args.json {
        return em.json(args.out.as_deref(), json!({ "baskets": outcomes, "summary": summary }));
    }
    let mut text = String::new();
    text.push_str(&format!("{:<10}{:>18}", "", "MC (SE)"));
    for m in Method::ALL {
        text.push_str(&format!("{:>10}", m.name()));
    }
    text.push('\n');
    for o in &outcomes {
        text.push_str(&format!(
            "{:<10}{:>18}",
            format!("Basket {}", o.scenario),
            format!("{:.4} ({:.4})", o.oracle, o.oracle_std_error)
        ));
        for r in &o.results {
            text.push_str(&format!("{:>10}", r.price.map(|p| format!("{p:.4}")).unwrap_or_else(|| "fail".into())));
        }
        text.push('\n');
    }
    text.push_str(&format!("{:<10}{:>18}", "C1", "-"));
    for c in &summary.methods {
        text.push_str(&format!("{:>10}", format!("{:.2}%", 100.0 * c.c1_fraction)));
    }
    text.push('\n');
    text.push_str(&format!("{:<10}{:>18}", "C3", "-"));
    for c in &summary.methods {
        text.push_str(&format!("{:>10}", c.c3.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())));
    }
    text.push('\n');
    em.text(args.out.as_deref(), &text)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let start = Instant::now();
    let (name, config) = match &cli.command {
        Command::Price(a) => ("price", Some(a.common.config.clone())),
        Command::Greeks(a) => ("greeks", Some(a.common.config.clone())),
        Command::Moments(a) => ("moments", Some(a.common.config.clone())),
        Command::Mc(a) => ("mc", Some(a.common.config.clone())),
        Command::Hedge(a) => ("hedge", Some(a.common.config.clone())),
        Command::Suite(_) => ("suite", None),
        Command::Table3(_) => ("table3", None),
    };
    let mut em = Emitter::new(RunManifest::new(name, config), start);
    match &cli.command {
        Command::Price(a) => cmd_price(a, &mut em),
        Command::Greeks(a) => cmd_greeks(a, &mut em),
        Command::Moments(a) => cmd_moments(a, &mut em),
        Command::Mc(a) => cmd_mc(a, &mut em),
        Command::Hedge(a) => cmd_hedge(a, &mut em),
        Command::Suite(a) => cmd_suite(a, &mut em),
        Command::Table3(a) => cmd_table3(a, &mut em),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
