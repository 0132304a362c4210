//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 configuration or
//! module error. Whenever output goes to a file (`--out`), a run manifest is
//! written next to it as `<out>.manifest.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigFunction, CorrelationFunction, Point, Region, Support, TwoConfig};
use crate::error::{Error, Result};
use crate::generators::{apply_l, apply_lhat, apply_lhat_star};
use crate::gillespie::{manifest, simulate, Estimator, Initial, SimConfig};
use crate::hierarchy::{evolve_truncated, Discretization, Side};
use crate::lp_measure::{lp_integrate, Estimate, LPIntegrator, Rule};
use crate::rates::{Metric, RateSpec};
use crate::testfns::Factorized;
use crate::verify::{self, Suite};

#[derive(Parser, Debug)]
#[command(name = "twoconf", version, about = "Configuration-space analysis of two-component particle systems")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
    /// The raw command line, recorded in manifests.
    #[arg(skip)]
    pub argv: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Evaluate L, L-hat or L-hat-star at one configuration.
    Apply(ApplyArgs),
    /// Lebesgue-Poisson integral of a function.
    Integrate(IntegrateArgs),
    /// Truncated hierarchy evolution.
    Evolve(EvolveArgs),
    /// Stochastic simulation on the torus.
    Simulate(SimulateArgs),
}

/// Settings shared by the subcommands; also the shape of `--config`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dim: Option<usize>,
    pub rates: Option<RateSpec>,
    pub region: Option<Region>,
    pub orders: Option<(usize, usize)>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub rule: Option<Rule>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Spatial dimension (default 1).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Built-in rate family (constant, pp, ising, hop, hopflip, flip) or a JSON file.
    #[arg(long)]
    pub rates: Option<String>,
    /// Box as `lo:hi[,lo:hi...]` (default: the unit cube).
    #[arg(long)]
    pub region: Option<String>,
    /// Truncation orders `N+,N-`.
    #[arg(long)]
    pub orders: Option<String>,
    /// Monte Carlo samples per order.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Mc,
    Quadrature,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Algebra,
    Lemma2,
    Kernels,
    Duality,
    Bounds,
    Oracle,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    /// Largest configuration size for the algebra suite.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Number of random cases where a suite takes one.
    #[arg(long)]
    pub cases: Option<usize>,
    /// Weight of the L_C norms in the bounds suite.
    #[arg(long = "C")]
    pub c: Option<f64>,
    /// Growth base; fitted when absent.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Exponent of the correlation-side bound, in (0, 1/nu).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    L,
    Lhat,
    LhatStar,
}

#[derive(Args, Debug)]
pub struct ApplyArgs {
    #[arg(long, value_enum)]
    pub target: Target,
    /// Function: one, unit, zero, count+, count-, indicator:n,m, poisson:a,b,
    /// random:seed or random-positive:seed.
    #[arg(long, default_value = "unit")]
    pub function: String,
    /// Configuration `x,x,...;y,y,...` (plus points; minus points).
    #[arg(long, default_value = "")]
    pub at: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct IntegrateArgs {
    /// Function spec as for `apply`, or `prod-indicator:lo,hi`.
    #[arg(long, default_value = "prod-indicator:0,1")]
    pub function: String,
    /// Intensity z of the measure.
    #[arg(long, default_value_t = 1.0)]
    pub intensity: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Correlation,
    QuasiObservable,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[arg(long, value_enum, default_value = "correlation")]
    pub side: SideArg,
    /// Initial function spec, as for `apply`.
    #[arg(long, default_value = "poisson:1,1")]
    pub initial: String,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[arg(long, default_value_t = 100)]
    pub record_every: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// `poisson:rho+,rho-` or `config:x,...;y,...`.
    #[arg(long, default_value = "poisson:1,1")]
    pub initial: String,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 11)]
    pub record_points: usize,
    /// Comma-separated: n_plus, n_minus, total, pairs:n:m:r.
    #[arg(long, default_value = "n_plus,n_minus,total")]
    pub estimators: String,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let mut cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    cli.argv = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut out = std::io::stdout().lock();
    match run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    if let Some(n) = cli.threads {
        // an already-initialised pool (e.g. in tests) is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let file = match &cli.config {
        Some(p) => serde_json::from_str::<RunConfig>(&fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    let ctx = Context { file, argv: cli.argv };
    match cli.command {
        Command::Verify(a) => cmd_verify(a, &ctx, out),
        Command::Apply(a) => cmd_apply(a, &ctx, out),
        Command::Integrate(a) => cmd_integrate(a, &ctx, out),
        Command::Evolve(a) => cmd_evolve(a, &ctx, out),
        Command::Simulate(a) => cmd_simulate(a, &ctx, out),
    }
}

struct Context {
    file: RunConfig,
    argv: Vec<String>,
}

// ---------------------------------------------------------------------------
// parsing helpers

fn parse_pair<T: std::str::FromStr>(s: &str, what: &str) -> Result<(T, T)> {
    let bad = || Error::Config(format!("{what} must look like 'a,b', got '{s}'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

/// `lo:hi[,lo:hi...]`, one pair per axis.
pub fn parse_region(s: &str) -> Result<Region> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for axis in s.split(',') {
        let bad = || Error::Config(format!("region axis must look like 'lo:hi', got '{axis}'"));
        let (a, b) = axis.split_once(':').ok_or_else(bad)?;
        lo.push(a.trim().parse::<f64>().map_err(|_| bad())?);
        hi.push(b.trim().parse::<f64>().map_err(|_| bad())?);
    }
    Region::new(Point::new(&lo)?, Point::new(&hi)?)
}

/// `x,x,...;y,y,...`, each point given by `dim` space-separated coordinates.
pub fn parse_config(s: &str, dim: usize) -> Result<TwoConfig> {
    let points = |part: &str| -> Result<Vec<Point>> {
        part.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                let xs = t
                    .split_whitespace()
                    .map(|v| v.parse::<f64>().map_err(|_| Error::Config(format!("'{v}' is not a number"))))
                    .collect::<Result<Vec<_>>>()?;
                if xs.len() != dim {
                    return Err(Error::Config(format!("point '{t}' has {} coordinates, expected {dim}", xs.len())));
                }
                Point::new(&xs)
            })
            .collect()
    };
    let (p, m) = s.split_once(';').unwrap_or((s, ""));
    TwoConfig::new(points(p)?, points(m)?)
}

fn parse_rates(s: &str) -> Result<RateSpec> {
    if s.ends_with(".json") || Path::new(s).is_file() {
        return Ok(serde_json::from_str(&fs::read_to_string(s)?)?);
    }
    RateSpec::named(s)
}

/// Function specs understood by `apply`, `integrate` and `evolve`.
pub fn parse_function(spec: &str, region: Region, orders: (usize, usize)) -> Result<ConfigFunction> {
    let (head, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let seeded = |arg: &str| -> Result<crate::rng::Stream> {
        let seed: u64 = arg.trim().parse().map_err(|_| Error::Config(format!("bad seed in '{spec}'")))?;
        Ok(crate::rng::stream(seed, &[0x434C49]))
    };
    Ok(match head {
        "one" => ConfigFunction::constant(1.0),
        "unit" => ConfigFunction::unit(),
        "zero" => ConfigFunction::zero(),
        "count+" => ConfigFunction::new("count+", |c: &TwoConfig| c.n_plus() as f64),
        "count-" => ConfigFunction::new("count-", |c: &TwoConfig| c.n_minus() as f64),
        "indicator" => {
            let (n, m) = parse_pair::<usize>(arg, "indicator sizes")?;
            ConfigFunction::new(spec, move |c: &TwoConfig| f64::from(u8::from(c.n_plus() == n && c.n_minus() == m))).with_support(Support {
                max_plus: n,
                max_minus: m,
                region,
            })
        }
        "poisson" => {
            let (a, b) = parse_pair::<f64>(arg, "poisson densities")?;
            ConfigFunction::new(spec, move |c: &TwoConfig| a.powi(c.n_plus() as i32) * b.powi(c.n_minus() as i32))
        }
        "prod-indicator" => {
            let (lo, hi) = parse_pair::<f64>(arg, "indicator interval")?;
            ConfigFunction::new(spec, move |c: &TwoConfig| f64::from(u8::from(c.all_points().all(|p| (lo..=hi).contains(&p.first())))))
        }
        "random" => Factorized::random(&mut seeded(arg)?, region, orders).function(spec),
        "random-positive" => Factorized::random_positive(&mut seeded(arg)?, region, orders).function(spec),
        _ => return Err(Error::Config(format!("unknown function '{spec}'"))),
    })
}

/// Effective settings after merging the config file and flags.
#[derive(Clone, Debug, Serialize)]
struct Settings {
    rates: Option<RateSpec>,
    region: Region,
    orders: (usize, usize),
    samples: usize,
    seed: u64,
    rule: Rule,
    #[serde(skip)]
    out: Option<PathBuf>,
    #[serde(skip)]
    format: Option<Format>,
}

impl Settings {
    fn merge(file: &RunConfig, c: &Common, default_orders: (usize, usize), default_samples: usize) -> Result<Self> {
        let rates = match &c.rates {
            Some(s) => Some(parse_rates(s)?),
            None => file.rates.clone(),
        };
        let dim = c.dim.or(file.dim);
        let region = match &c.region {
            Some(s) => parse_region(s)?,
            None => match file.region {
                Some(r) => r,
                None => Region::cube(dim.unwrap_or(1), 0.0, 1.0)?,
            },
        };
        if let Some(d) = dim {
            if d != region.dim() {
                return Err(Error::Config(format!("--dim {d} does not match the {}-dimensional region", region.dim())));
            }
        }
        let orders = match &c.orders {
            Some(s) => parse_pair(s, "orders")?,
            None => file.orders.unwrap_or(default_orders),
        };
        let rule = match c.rule {
            Some(RuleArg::Mc) => Rule::MonteCarlo,
            Some(RuleArg::Quadrature) => Rule::Quadrature,
            None => file.rule.unwrap_or(Rule::MonteCarlo),
        };
        Ok(Self {
            rates,
            region,
            orders,
            samples: c.samples.or(file.samples).unwrap_or(default_samples),
            seed: c.seed.or(file.seed).unwrap_or(42),
            rule,
            out: c.out.clone(),
            format: c.format,
        })
    }

    fn integrator(&self) -> Result<LPIntegrator> {
        Ok(LPIntegrator::new(self.region, self.orders, self.samples, self.seed)?.with_rule(self.rule))
    }

    fn rates(&self) -> Result<RateSpec> {
        self.rates.clone().ok_or_else(|| Error::Config("--rates is required".into()))
    }
}

/// Everything needed to reproduce one run's output.
#[derive(Serialize)]
struct RunManifest<'a> {
    version: &'static str,
    argv: &'a [String],
    config_file: &'a RunConfig,
    settings: &'a Settings,
    extra: serde_json::Value,
    /// sha256 of the output file.
    content_hash: String,
}

fn sha256_hex(body: &[u8]) -> String {
    Sha256::digest(body).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `body` to `--out` (plus its manifest) or to `out`.
fn emit(ctx: &Context, s: &Settings, extra: serde_json::Value, out: &mut dyn Write, body: &[u8]) -> Result<()> {
    let Some(path) = &s.out else {
        out.write_all(body)?;
        return Ok(());
    };
    fs::write(path, body)?;
    let m = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        argv: &ctx.argv,
        config_file: &ctx.file,
        settings: s,
        extra,
        content_hash: sha256_hex(body),
    };
    let mut mpath = path.clone().into_os_string();
    mpath.push(".manifest.json");
    fs::write(mpath, serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

fn estimate_body(e: &Estimate, kernels: Option<String>, format: Option<Format>) -> Result<Vec<u8>> {
    let kernels = kernels.unwrap_or_default();
    Ok(match format {
        None => {
            let mut s = format!("value {:e}\nstderr {:e}\norders {},{}\n", e.value, e.std_err, e.orders.0, e.orders.1);
            if !kernels.is_empty() {
                s.push_str(&format!("kernels {kernels}\n"));
            }
            s.into_bytes()
        }
        Some(Format::Csv) => format!(
            "value,stderr,orders_plus,orders_minus,kernels\n{:e},{:e},{},{},{kernels}\n",
            e.value, e.std_err, e.orders.0, e.orders.1
        )
        .into_bytes(),
        Some(Format::Json) => {
            let mut v = serde_json::to_value(e)?;
            if !kernels.is_empty() {
                v["kernels"] = kernels.into();
            }
            let mut b = serde_json::to_vec_pretty(&v)?;
            b.push(b'\n');
            b
        }
    })
}

/// Turns CSV text into a JSON array of row objects (numbers where they parse).
fn csv_to_json(csv: &str) -> Result<Vec<u8>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let rows: Vec<serde_json::Map<String, serde_json::Value>> = lines
        .map(|l| {
            header
                .iter()
                .zip(l.split(','))
                .map(|(h, v)| {
                    let val = v.parse::<f64>().map(serde_json::Value::from).unwrap_or_else(|_| v.into());
                    (h.to_string(), val)
                })
                .collect()
        })
        .collect();
    let mut b = serde_json::to_vec_pretty(&rows)?;
    b.push(b'\n');
    Ok(b)
}

fn table_body(csv: String, format: Option<Format>) -> Result<Vec<u8>> {
    match format {
        Some(Format::Json) => csv_to_json(&csv),
        _ => Ok(csv.into_bytes()),
    }
}

// ---------------------------------------------------------------------------
// commands

fn cmd_verify(a: VerifyArgs, ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let file = &ctx.file;
    let s = Settings::merge(file, &a.common, (2, 2), 0)?;
    let suite = match a.suite {
        SuiteArg::Algebra => Suite::Algebra,
        SuiteArg::Lemma2 => Suite::Lemma2,
        SuiteArg::Kernels => Suite::Kernels,
        SuiteArg::Duality => Suite::Duality,
        SuiteArg::Bounds => Suite::Bounds,
        SuiteArg::Oracle => Suite::Oracle,
        SuiteArg::All => Suite::All,
    };
    let opts = verify::Options {
        n_max: a.n_max,
        seed: s.seed,
        rates: s.rates.clone(),
        orders: a.common.orders.is_some().then_some(s.orders).or(file.orders),
        samples: a.common.samples.or(file.samples),
        cases: a.cases,
        c: a.c,
        nu: a.nu,
        alpha: a.alpha,
    };
    let report = verify::run(suite, &opts)?;
    let summary = report.summary();
    if s.out.is_some() {
        write!(out, "{summary}")?;
        let body = match s.format {
            Some(Format::Csv) => {
                let mut t = String::from("name,criterion,lhs,rhs,tolerance,sigma,pass,informational\n");
                for c in &report.checks {
                    let crit = serde_json::to_value(c.criterion)?;
                    t.push_str(&format!(
                        "\"{}\",{},{:e},{:e},{:e},{:e},{},{}\n",
                        c.name.replace('"', "'"),
                        crit.as_str().unwrap_or_default(),
                        c.lhs,
                        c.rhs,
                        c.tolerance,
                        c.sigma,
                        c.pass,
                        c.informational
                    ));
                }
                t.into_bytes()
            }
            _ => serde_json::to_vec_pretty(&report)?,
        };
        emit(ctx, &s, serde_json::json!({ "suite": report.suite }), out, &body)?;
    } else if s.format == Some(Format::Json) {
        out.write_all(&serde_json::to_vec_pretty(&report)?)?;
        writeln!(out)?;
    } else {
        write!(out, "{summary}")?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_apply(a: ApplyArgs, ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let s = Settings::merge(&ctx.file, &a.common, (2, 2), 10_000)?;
    let rates = s.rates()?.build()?;
    let integ = s.integrator()?;
    let at = parse_config(&a.at, s.region.dim())?;
    let f = parse_function(&a.function, s.region, s.orders)?;
    let (est, prov) = match a.target {
        Target::L => (apply_l(&rates, |c| f.eval(c), &at, &integ)?, None),
        Target::Lhat => {
            let e = apply_lhat(&rates, &f, &at, &integ)?;
            (e.estimate, Some(e.provenance))
        }
        Target::LhatStar => {
            let e = apply_lhat_star(&rates, &CorrelationFunction(f), &at, &integ)?;
            (e.estimate, Some(e.provenance))
        }
    };
    let body = estimate_body(&est, prov.map(|p| format!("{p:?}")), s.format)?;
    let extra = serde_json::json!({ "target": format!("{:?}", a.target), "function": a.function, "at": a.at });
    emit(ctx, &s, extra, out, &body)?;
    Ok(0)
}

fn cmd_integrate(a: IntegrateArgs, ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let s = Settings::merge(&ctx.file, &a.common, (12, 0), 100_000)?;
    let integ = s.integrator()?.with_intensity(a.intensity);
    let f = parse_function(&a.function, s.region, s.orders)?;
    let e = lp_integrate(&f, &integ)?;
    let body = estimate_body(&e, None, s.format)?;
    emit(ctx, &s, serde_json::json!({ "function": a.function, "intensity": a.intensity }), out, &body)?;
    Ok(0)
}

fn cmd_evolve(a: EvolveArgs, ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let s = Settings::merge(&ctx.file, &a.common, (1, 1), 1)?;
    let rates = s.rates()?.build()?;
    let integ = s.integrator()?;
    let init = parse_function(&a.initial, s.region, s.orders)?;
    let side = match a.side {
        SideArg::Correlation => Side::Correlation,
        SideArg::QuasiObservable => Side::QuasiObservable,
    };
    let series = evolve_truncated(&rates, &init, side, a.t_end, a.dt, &integ, &Discretization {
        grid_points: a.grid,
        record_every: a.record_every,
    })?;
    let mut buf = Vec::new();
    series.write_csv(&mut buf)?;
    let body = table_body(String::from_utf8_lossy(&buf).into_owned(), s.format)?;
    let extra = serde_json::json!({
        "side": format!("{:?}", a.side), "initial": a.initial, "t_end": a.t_end, "dt": a.dt,
        "grid": a.grid, "record_every": a.record_every,
    });
    emit(ctx, &s, extra, out, &body)?;
    Ok(0)
}

fn parse_estimators(s: &str) -> Result<Vec<Estimator>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            Ok(match t {
                "n_plus" => Estimator::plus(),
                "n_minus" => Estimator::minus(),
                "total" => Estimator::Total,
                _ => {
                    let parts: Vec<&str> = t.split(':').collect();
                    let bad = || Error::Config(format!("unknown estimator '{t}'"));
                    if parts.len() != 4 || parts[0] != "pairs" {
                        return Err(bad());
                    }
                    Estimator::Moment {
                        n: parts[1].parse().map_err(|_| bad())?,
                        m: parts[2].parse().map_err(|_| bad())?,
                        radius: Some(parts[3].parse().map_err(|_| bad())?),
                    }
                }
            })
        })
        .collect()
}

fn parse_initial(s: &str, dim: usize) -> Result<Initial> {
    let (head, arg) = s.split_once(':').unwrap_or((s, ""));
    match head {
        "poisson" => {
            let (a, b) = parse_pair(arg, "initial densities")?;
            Ok(Initial::Poisson {
                density_plus: a,
                density_minus: b,
            })
        }
        "config" => Ok(Initial::fixed(&parse_config(arg, dim)?)),
        _ => Err(Error::Config(format!("unknown initial condition '{s}'"))),
    }
}

fn cmd_simulate(a: SimulateArgs, ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let s = Settings::merge(&ctx.file, &a.common, (1, 1), 1)?;
    let spec = s.rates()?.with_metric(Metric::Torus { region: s.region });
    let cfg = SimConfig::new(s.region, spec.build()?, parse_initial(&a.initial, s.region.dim())?, a.t_end, a.replicas, s.seed)
        .with_estimators(parse_estimators(&a.estimators)?)
        .with_record_points(a.record_points);
    let series = simulate(&cfg)?;
    let body = table_body(series.to_csv(), s.format)?;
    let extra = serde_json::to_value(manifest(&cfg, &series, serde_json::to_value(&spec)?))?;
    emit(ctx, &s, extra, out, &body)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String) {
        let cli = Cli::try_parse_from(std::iter::once("twoconf").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let code = match run(cli, &mut buf) {
            Ok(c) => c,
            Err(_) => 2,
        };
        (code, String::from_utf8(buf).unwrap())
    }

    fn value(out: &str) -> f64 {
        out.lines().find_map(|l| l.strip_prefix("value ")).unwrap().parse().unwrap()
    }

    #[test]
    fn parses_configs_and_regions() {
        let c = parse_config("0.1,0.5;0.3", 1).unwrap();
        assert_eq!((c.n_plus(), c.n_minus()), (2, 1));
        assert_eq!(parse_config("", 1).unwrap(), TwoConfig::empty());
        let c = parse_config("0.1 0.2;0.3 0.4, 0.5 0.6", 2).unwrap();
        assert_eq!((c.n_plus(), c.n_minus(), c.plus().points()[0].dim()), (1, 2, 2));
        assert!(parse_config("0.1 0.2", 1).is_err());
        assert_eq!(parse_region("0:2").unwrap().volume(), 2.0);
        assert_eq!(parse_region("0:2,-1:1").unwrap().volume(), 4.0);
        assert!(parse_region("0").is_err());
        assert!(parse_region("1:0").is_err());
    }

    #[test]
    fn apply_lhat_constant_death_on_singleton() {
        let (code, out) = run_args(&["apply", "--target", "lhat", "--rates", "constant", "--function", "indicator:1,0", "--at", "0;", "--rule", "quadrature"]);
        assert_eq!(code, 0);
        assert!((value(&out) + 1.0).abs() < 1e-14, "{out}");
    }

    #[test]
    fn apply_l_of_one_and_lhat_star_of_zero_vanish() {
        let (_, out) = run_args(&["apply", "--target", "l", "--rates", "pp", "--function", "one", "--at", "0.2,0.4;0.6", "--rule", "quadrature"]);
        assert_eq!(value(&out), 0.0);
        let (_, out) = run_args(&["apply", "--target", "lhat-star", "--rates", "ising", "--function", "zero", "--at", "0.2;0.6"]);
        assert_eq!(value(&out), 0.0);
    }

    #[test]
    fn unknown_rates_are_config_errors() {
        let (code, _) = run_args(&["apply", "--target", "l", "--rates", "nope"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn integrate_exponential_identity() {
        let (code, out) = run_args(&["integrate", "--orders", "12,0", "--samples", "2000"]);
        assert_eq!(code, 0);
        assert!((value(&out) - std::f64::consts::E).abs() < 1e-4);
    }
}
