//! Batch front end: single-point bound reports, parameter sweeps and a
//! verification mode that replays the numerical self-checks for one
//! configuration.
//!
//! Exit status: 0 success, 1 validation error, 2 verification failure.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use memchan_core::capacity::bounds_report;
use memchan_core::channel::{commutation_check, ChannelParams};
use memchan_core::checks::{
    decomposition_deviation_perturbed, energy_ceiling_check, oracle_comparison,
    thermal_identity_deviation, ModePreparation, ProductInput,
};
use memchan_core::sampling::random_constrained_state;
use memchan_core::spectral::{analyze, reconstruction_residual, SqueezingMatrix};

#[derive(Parser)]
#[command(
    name = "memchan",
    version,
    about = "Lossy bosonic channel with correlated noise: capacity bound reports, sweeps and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the bounds for a single configuration
    Report(CommonArgs),
    /// Evaluate the bounds along an evenly spaced parameter grid
    Sweep(SweepArgs),
    /// Run the numerical self-checks for a configuration
    Verify(VerifyArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Flat key=value configuration file; command-line flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Beam-splitter transmissivity in [0, 1]
    #[arg(long)]
    eta: Option<f64>,
    /// Input photon budget N per channel use
    #[arg(long)]
    photons: Option<f64>,
    /// Environment mean photon number M per mode (default 0)
    #[arg(long)]
    env_photons: Option<f64>,
    /// Number of channel uses
    #[arg(long)]
    modes: Option<usize>,
    /// Nearest-neighbor squeezing strength
    #[arg(long)]
    xi: Option<f64>,
    /// Path to a full squeezing-matrix file
    #[arg(long)]
    xi_file: Option<PathBuf>,
    /// Table format
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the table to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized verification instances
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sweep specification `param:start:stop:steps` with param one of
    /// eta | N | M | xi
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of random inputs for the decomposition and energy checks
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Inject a perturbation of this size into the decomposition pipeline
    /// (used to prove the checks can fail)
    #[arg(long)]
    perturb: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

/// Fully resolved configuration after merging config file and flags.
#[derive(Clone, Default)]
struct Resolved {
    eta: Option<f64>,
    photons: Option<f64>,
    env_photons: Option<f64>,
    modes: Option<usize>,
    xi: Option<f64>,
    xi_file: Option<PathBuf>,
    format: Option<Format>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    sweep: Option<String>,
}

fn parse_config_file(path: &Path) -> Result<Resolved, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map: HashMap<String, String> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    let mut cfg = Resolved::default();
    for (key, value) in map {
        match key.as_str() {
            "eta" => cfg.eta = Some(parse_num(&key, &value)?),
            "photons" => cfg.photons = Some(parse_num(&key, &value)?),
            "env-photons" => cfg.env_photons = Some(parse_num(&key, &value)?),
            "modes" => {
                cfg.modes =
                    Some(value.parse().map_err(|_| {
                        format!("config key modes: cannot parse {value:?} as an integer")
                    })?)
            }
            "xi" => cfg.xi = Some(parse_num(&key, &value)?),
            "xi-file" => cfg.xi_file = Some(PathBuf::from(value)),
            "format" => {
                cfg.format = Some(match value.as_str() {
                    "csv" => Format::Csv,
                    "jsonl" => Format::Jsonl,
                    other => return Err(format!("config key format: unknown format {other:?}")),
                })
            }
            "out" => cfg.out = Some(PathBuf::from(value)),
            "seed" => {
                cfg.seed = Some(value.parse().map_err(|_| {
                    format!("config key seed: cannot parse {value:?} as an integer")
                })?)
            }
            "sweep" => cfg.sweep = Some(value),
            other => return Err(format!("unknown config key {other:?}")),
        }
    }
    Ok(cfg)
}

fn parse_num(key: &str, value: &str) -> Result<f64, String> {
    value
        .parse()
        .map_err(|_| format!("config key {key}: cannot parse {value:?} as a number"))
}

fn resolve(common: &CommonArgs, sweep_flag: Option<&String>) -> Result<Resolved, String> {
    let mut cfg = match &common.config {
        Some(path) => parse_config_file(path)?,
        None => Resolved::default(),
    };
    // flags override the config file
    if common.eta.is_some() {
        cfg.eta = common.eta;
    }
    if common.photons.is_some() {
        cfg.photons = common.photons;
    }
    if common.env_photons.is_some() {
        cfg.env_photons = common.env_photons;
    }
    if common.modes.is_some() {
        cfg.modes = common.modes;
    }
    if common.xi.is_some() {
        cfg.xi = common.xi;
    }
    if common.xi_file.is_some() {
        cfg.xi_file = common.xi_file.clone();
    }
    if common.format.is_some() {
        cfg.format = common.format;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if let Some(s) = sweep_flag {
        cfg.sweep = Some(s.clone());
    }
    Ok(cfg)
}

fn squeezing_from(cfg: &Resolved) -> Result<SqueezingMatrix, String> {
    match (&cfg.xi_file, cfg.xi) {
        (Some(_), Some(_)) => Err("choose one of xi and xi-file, not both".into()),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let z = SqueezingMatrix::from_text(&text).map_err(|e| e.to_string())?;
            if let Some(modes) = cfg.modes {
                if modes != z.n() {
                    return Err(format!(
                        "modes={} but {} is {}x{}",
                        modes,
                        path.display(),
                        z.n(),
                        z.n()
                    ));
                }
            }
            Ok(z)
        }
        (None, Some(xi)) => {
            let n = cfg.modes.ok_or("xi given but modes missing")?;
            SqueezingMatrix::nearest_neighbor(n, xi).map_err(|e| e.to_string())
        }
        (None, None) => {
            let n = cfg.modes.ok_or("modes missing (or provide xi-file)")?;
            SqueezingMatrix::zero(n).map_err(|e| e.to_string())
        }
    }
}

fn build_params(cfg: &Resolved) -> Result<(ChannelParams, f64), String> {
    let eta = cfg.eta.ok_or("eta missing")?;
    let photons = cfg.photons.ok_or("photons missing")?;
    let z = squeezing_from(cfg)?;
    let params = ChannelParams::new(eta, cfg.env_photons.unwrap_or(0.0), z)
        .map_err(|e| e.to_string())?;
    if !(photons >= 0.0) || !photons.is_finite() {
        return Err(format!("photons must be nonnegative, got {photons}"));
    }
    Ok((params, photons))
}

/// 12 significant digits, the declared output precision.
fn fmt12(x: f64) -> String {
    format!("{:.11e}", x)
}

const COLUMNS: [&str; 15] = [
    "n",
    "eta",
    "M",
    "N",
    "d_bar",
    "s0",
    "s1",
    "s2",
    "n_bar",
    "n_prime",
    "feasible_lower",
    "baseline",
    "lower",
    "upper_input",
    "upper_output",
];

struct Record {
    n: usize,
    feasible_lower: bool,
    values: Vec<(&'static str, f64)>,
}

fn record_for(cfg: &Resolved) -> Result<Record, String> {
    let (params, photons) = build_params(cfg)?;
    let report = bounds_report(&params, photons).map_err(|e| e.to_string())?;
    let data = analyze(params.squeezing()).map_err(|e| e.to_string())?;
    Ok(Record {
        n: report.n,
        feasible_lower: report.feasible_lower,
        values: vec![
            ("eta", report.eta),
            ("M", report.env_photons),
            ("N", report.input_photons),
            ("d_bar", data.d_bar()),
            ("s0", data.s0()),
            ("s1", data.s1()),
            ("s2", data.s2()),
            ("n_bar", report.n_bar),
            ("n_prime", report.n_prime),
            ("baseline", report.baseline),
            ("lower", report.lower),
            ("upper_input", report.upper_input),
            ("upper_output", report.upper_output),
        ],
    })
}

fn emit(records: &[Record], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&COLUMNS.join(","));
            out.push('\n');
            for rec in records {
                let mut fields: Vec<String> = vec![rec.n.to_string()];
                for col in &COLUMNS[1..] {
                    if *col == "feasible_lower" {
                        fields.push(rec.feasible_lower.to_string());
                    } else {
                        let (_, v) = rec.values.iter().find(|(k, _)| k == col).unwrap();
                        fields.push(fmt12(*v));
                    }
                }
                out.push_str(&fields.join(","));
                out.push('\n');
            }
        }
        Format::Jsonl => {
            for rec in records {
                let mut line = String::from("{");
                write!(line, "\"n\":{}", rec.n).unwrap();
                for col in &COLUMNS[1..] {
                    if *col == "feasible_lower" {
                        write!(line, ",\"feasible_lower\":{}", rec.feasible_lower).unwrap();
                    } else {
                        let (_, v) = rec.values.iter().find(|(k, _)| k == col).unwrap();
                        write!(line, ",\"{}\":{}", col, fmt12(*v)).unwrap();
                    }
                }
                line.push('}');
                out.push_str(&line);
                out.push('\n');
            }
        }
    }
    out
}

fn write_table(cfg: &Resolved, table: &str) -> Result<(), String> {
    match &cfg.out {
        Some(path) => std::fs::write(path, table)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn run_report(args: &CommonArgs) -> Result<(), String> {
    let cfg = resolve(args, None)?;
    let record = record_for(&cfg)?;
    let table = emit(&[record], cfg.format.unwrap_or(Format::Csv));
    write_table(&cfg, &table)
}

struct SweepSpec {
    param: String,
    start: f64,
    stop: f64,
    steps: usize,
}

fn parse_sweep(spec: &str) -> Result<SweepSpec, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(format!(
            "sweep spec {spec:?} must look like param:start:stop:steps"
        ));
    }
    let param = parts[0].to_string();
    if !["eta", "N", "M", "xi"].contains(&param.as_str()) {
        return Err(format!(
            "sweep parameter {param:?} must be one of eta, N, M, xi"
        ));
    }
    let start: f64 = parts[1]
        .parse()
        .map_err(|_| format!("sweep start {:?} is not a number", parts[1]))?;
    let stop: f64 = parts[2]
        .parse()
        .map_err(|_| format!("sweep stop {:?} is not a number", parts[2]))?;
    let steps: usize = parts[3]
        .parse()
        .map_err(|_| format!("sweep steps {:?} is not an integer", parts[3]))?;
    if start > stop {
        return Err(format!("sweep start {start} exceeds stop {stop}"));
    }
    if steps < 1 {
        return Err("sweep needs at least one step".into());
    }
    Ok(SweepSpec {
        param,
        start,
        stop,
        steps,
    })
}

fn run_sweep(args: &SweepArgs) -> Result<(), String> {
    let cfg = resolve(&args.common, args.sweep.as_ref())?;
    let spec = parse_sweep(cfg.sweep.as_deref().ok_or("sweep specification missing")?)?;

    // the swept parameter must not also be fixed
    let fixed = match spec.param.as_str() {
        "eta" => cfg.eta.is_some(),
        "N" => cfg.photons.is_some(),
        "M" => cfg.env_photons.is_some(),
        "xi" => cfg.xi.is_some() || cfg.xi_file.is_some(),
        _ => unreachable!(),
    };
    if fixed {
        return Err(format!(
            "swept parameter {} is also fixed; drop the flag or config key",
            spec.param
        ));
    }

    let mut records = Vec::with_capacity(spec.steps + 1);
    for i in 0..=spec.steps {
        let value = spec.start + (spec.stop - spec.start) * i as f64 / spec.steps as f64;
        let mut point = cfg.clone();
        match spec.param.as_str() {
            "eta" => point.eta = Some(value),
            "N" => point.photons = Some(value),
            "M" => point.env_photons = Some(value),
            "xi" => point.xi = Some(value),
            _ => unreachable!(),
        }
        let record = record_for(&point)
            .map_err(|e| format!("sweep point {i} ({}={value}): {e}", spec.param))?;
        records.push(record);
    }
    let table = emit(&records, cfg.format.unwrap_or(Format::Csv));
    write_table(&cfg, &table)
}

struct CheckLine {
    name: &'static str,
    deviation: f64,
    threshold: f64,
}

impl CheckLine {
    fn passed(&self) -> bool {
        self.deviation < self.threshold
    }
}

fn run_verify(args: &VerifyArgs) -> Result<bool, String> {
    let cfg = resolve(&args.common, None)?;
    let (params, photons) = build_params(&cfg)?;
    let n = params.n();
    if n > 8 {
        return Err(format!(
            "verify runs symplectic checks up to 8 uses, got {n}"
        ));
    }
    let seed = cfg.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perturb = args.perturb.unwrap_or(0.0);
    let mut lines: Vec<CheckLine> = Vec::new();

    let mut worst_cov = 0.0_f64;
    let mut worst_mean = 0.0_f64;
    let mut worst_nbar = f64::NEG_INFINITY;
    let mut worst_nout = f64::NEG_INFINITY;
    for _ in 0..args.instances.max(1) {
        let input = random_constrained_state(n, photons, true, &mut rng);
        let dev = decomposition_deviation_perturbed(&params, &input, perturb)
            .map_err(|e| e.to_string())?;
        worst_cov = worst_cov.max(dev.covariance);
        worst_mean = worst_mean.max(dev.mean);
        let ceilings =
            energy_ceiling_check(&params, photons, &input).map_err(|e| e.to_string())?;
        worst_nbar = worst_nbar.max(ceilings.n_bar_excess);
        worst_nout = worst_nout.max(ceilings.n_out_excess);
    }
    lines.push(CheckLine {
        name: "decomposition covariance",
        deviation: worst_cov,
        threshold: 1e-9,
    });
    lines.push(CheckLine {
        name: "decomposition mean",
        deviation: worst_mean,
        threshold: 1e-10,
    });
    lines.push(CheckLine {
        name: "photon ceiling (N-bar)",
        deviation: worst_nbar,
        threshold: 1e-9,
    });
    lines.push(CheckLine {
        name: "photon ceiling (N-out)",
        deviation: worst_nout,
        threshold: 1e-9,
    });

    lines.push(CheckLine {
        name: "commutation",
        deviation: commutation_check(&params).map_err(|e| e.to_string())?,
        threshold: 1e-10,
    });
    lines.push(CheckLine {
        name: "thermal photon identity",
        deviation: thermal_identity_deviation(&params, photons).map_err(|e| e.to_string())?,
        threshold: 1e-9,
    });

    let data = analyze(params.squeezing()).map_err(|e| e.to_string())?;
    lines.push(CheckLine {
        name: "spectral s1 identity",
        deviation: ((data.s1() - (data.s0() - 1.0) / 2.0) / data.s1().max(1.0)).abs(),
        threshold: 1e-12,
    });
    lines.push(CheckLine {
        name: "spectral reconstruction",
        deviation: reconstruction_residual(params.squeezing(), &data),
        threshold: 1e-9,
    });
    lines.push(CheckLine {
        name: "budget inflation (N-bar >= N)",
        deviation: photons - data.n_bar(photons),
        threshold: 1e-12,
    });

    if n <= 2 {
        let cutoff = if n == 1 { 30 } else { 16 };
        let mut recipes = vec![ProductInput::vacuum(n)];
        let displaced = ProductInput {
            modes: (0..n)
                .map(|k| ModePreparation {
                    squeeze: if k == 0 { 0.1 } else { -0.08 },
                    mean_x: 0.3 * rng.gen_range(0.5..1.0),
                    mean_p: -0.2,
                })
                .collect(),
        };
        recipes.push(displaced);
        let mut dev_cov = 0.0_f64;
        let mut dev_mean = 0.0_f64;
        let mut dev_photons = 0.0_f64;
        let mut dev_entropy = 0.0_f64;
        for recipe in &recipes {
            let cmp = oracle_comparison(&params, recipe, cutoff).map_err(|e| e.to_string())?;
            dev_cov = dev_cov.max(cmp.covariance);
            dev_mean = dev_mean.max(cmp.mean);
            dev_photons = dev_photons.max(cmp.photons);
            dev_entropy = dev_entropy.max(cmp.entropy);
        }
        lines.push(CheckLine {
            name: "fock oracle covariance",
            deviation: dev_cov,
            threshold: 1e-5,
        });
        lines.push(CheckLine {
            name: "fock oracle mean",
            deviation: dev_mean,
            threshold: 1e-6,
        });
        lines.push(CheckLine {
            name: "fock oracle photons",
            deviation: dev_photons,
            threshold: 1e-5,
        });
        lines.push(CheckLine {
            name: "fock oracle entropy",
            deviation: dev_entropy,
            threshold: 1e-4,
        });
    } else {
        println!("fock oracle: skipped (needs 1 or 2 uses, got {n})");
    }

    let mut all_passed = true;
    for line in &lines {
        let verdict = if line.passed() { "PASS" } else { "FAIL" };
        println!(
            "{:<28} deviation {:>12.3e}  threshold {:>8.1e}  {verdict}",
            line.name, line.deviation, line.threshold
        );
        all_passed &= line.passed();
    }
    println!(
        "verify: {} ({} checks, seed {seed})",
        if all_passed { "PASS" } else { "FAIL" },
        lines.len()
    );
    Ok(all_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Report(args) => run_report(args).map(|()| true),
        Command::Sweep(args) => run_sweep(args).map(|()| true),
        Command::Verify(args) => run_verify(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
