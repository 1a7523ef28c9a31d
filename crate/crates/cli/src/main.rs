mod config;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cvpam::framefree::{self, RotationMeasure};
use cvpam::randomness::{self, GuessingSpec};
use cvpam::report::fmt_num;
use cvpam::witness::{self, Witness};
use cvpam::{fixtures, optimize, Error, MeasurementKind, OptimizerConfig, SchemeSpec};
use serde::Serialize;
use serde_json::{json, Value};

use config::{parse_grid, parse_list, FileConfig};

#[derive(Parser, Debug)]
#[command(name = "cvpam", version, about = "Dimension-witness optimization and randomness certification for CV measurements")]
struct Cli {
    /// JSON config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<String>,
    #[arg(long, global = true, env = "CVPAM_SEED")]
    seed: Option<u64>,
    /// Multistart restarts per optimization.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximal witness value for one or more measurement schemes.
    Optimize {
        #[arg(long)]
        witness: Option<String>,
        /// Scheme letters (H, D, P), comma-separated for several.
        #[arg(long)]
        scheme: Option<String>,
        /// Tilt for `s3t`.
        #[arg(long)]
        w: Option<f64>,
        /// Detection efficiency of the displacement settings.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Maximal value versus detection efficiency, with thresholds.
    Efficiency {
        #[arg(long)]
        witness: Option<String>,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        w: Option<f64>,
        /// `start:stop:step`.
        #[arg(long)]
        eta_grid: Option<String>,
        /// Sweep the tilt of `s3t` instead, reporting thresholds per tilt.
        #[arg(long)]
        w_grid: Option<String>,
    },
    /// Min-entropy versus witness value.
    Entropy {
        #[arg(long)]
        witness: Option<String>,
        #[arg(long)]
        w: Option<f64>,
        /// `start:stop:step` over W*; defaults to 21 points from the classical to the quantum bound.
        #[arg(long)]
        grid: Option<String>,
        /// uniform, global, conditional or average.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        x: Option<usize>,
        #[arg(long)]
        y: Option<usize>,
        /// Comma-separated input weights for `average`.
        #[arg(long)]
        px: Option<String>,
        #[arg(long)]
        py: Option<String>,
    },
    /// Violation statistics without a shared reference frame.
    Framefree {
        /// projective, displacement or homodyne.
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        /// euler or haar.
        #[arg(long)]
        rotation: Option<String>,
        /// Number of pooled settings.
        #[arg(long)]
        pool: Option<usize>,
        #[arg(long)]
        gamma_points: Option<usize>,
    },
    /// Closed-form guessing-probability bound for the tilted witness.
    Bound {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        w: f64,
    },
    /// Published optimal strategies with their values under this model.
    Fixtures {
        /// 3222, 4222 or 3322.
        #[arg(long)]
        table: Option<String>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Numeric(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) | Error::NonConvergent(_) => Self::Numeric(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// A command's output before the header is attached.
struct Output {
    csv: String,
    json: Value,
    /// Extra `key: value` lines for the CSV header.
    notes: Vec<(String, String)>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Numeric(m)) => {
            eprintln!("numeric failure: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(CliError::Usage)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(cvpam::rng::DEFAULT_SEED);
    let mut cfg = OptimizerConfig::default().with_seed(seed);
    if let Some(r) = cli.restarts.or(file.restarts) {
        cfg = cfg.with_restarts(r);
    }
    if let Some(n) = file.max_iterations {
        cfg.max_iterations = n;
    }
    if let Some(t) = file.tolerance {
        cfg.tolerance = t;
    }
    cfg.validate()?;
    let format = cli.format.or(file.format).unwrap_or(Format::Csv);
    let out_path = cli.out.clone().or(file.out.clone());

    let (name, resolved, output) = dispatch(cli.command, &file, &cfg)?;
    let resolved = json!({ "command": name, "optimizer": cfg, "format": format, "args": resolved });
    let text = render(&resolved, seed, format, output);
    match out_path {
        Some(p) => fs::write(&p, text).map_err(|e| CliError::Usage(format!("cannot write {p}: {e}"))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}"))),
    }
}

fn config_hash(resolved: &Value) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(resolved.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn render(resolved: &Value, seed: u64, format: Format, output: Output) -> String {
    let hash = config_hash(resolved);
    let version = env!("CARGO_PKG_VERSION");
    match format {
        Format::Csv => {
            let mut s = format!("# cvpam {version}\n# seed: {seed}\n# config_hash: {hash}\n");
            for (k, v) in &output.notes {
                s.push_str(&format!("# {k}: {v}\n"));
            }
            s.push_str(&output.csv);
            s
        }
        Format::Json => {
            let doc = json!({
                "header": { "version": version, "seed": seed, "config_hash": hash, "config": resolved },
                "data": output.json,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
    }
}

fn pick<T: Clone>(flag: Option<T>, file: &Option<T>) -> Option<T> {
    flag.or_else(|| file.clone())
}

fn resolve_witness(id: Option<String>, w: Option<f64>) -> CliResult<Witness> {
    let Some(id) = id else {
        return usage("--witness is required");
    };
    Ok(witness::by_id(&id, w)?)
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn dispatch(command: Command, file: &FileConfig, cfg: &OptimizerConfig) -> CliResult<(&'static str, Value, Output)> {
    match command {
        Command::Optimize { witness, scheme, w, eta } => {
            let w_val = pick(w, &file.w);
            let wit = resolve_witness(pick(witness, &file.witness), w_val)?;
            let schemes = pick(scheme, &file.scheme).ok_or_else(|| CliError::Usage("--scheme is required".into()))?;
            let eta = pick(eta, &file.eta).unwrap_or(1.0);
            let mut csv = String::from("scheme,witness,eta,value\n");
            let mut rows = Vec::new();
            for label in schemes.split(',') {
                let spec = SchemeSpec::parse(label.trim())?.with_efficiency(eta)?;
                let r = optimize::max_witness(&wit, &spec, cfg)?;
                csv.push_str(&format!("{},{},{},{}\n", spec.label(), wit.name, fmt_num(eta), fmt_num(r.best_value)));
                rows.push(json!({ "scheme": spec.label(), "witness": wit.name, "eta": eta, "result": r }));
            }
            let args = json!({ "witness": wit.name, "scheme": schemes, "w": w_val, "eta": eta });
            Ok(("optimize", args, Output { csv, json: Value::Array(rows), notes: vec![] }))
        }
        Command::Efficiency { witness, scheme, w, eta_grid, w_grid } => {
            let scheme = pick(scheme, &file.scheme).ok_or_else(|| CliError::Usage("--scheme is required".into()))?;
            let spec = SchemeSpec::parse(&scheme)?;
            if let Some(wg) = pick(w_grid, &file.w_grid) {
                let tilts = parse_grid(&wg).map_err(CliError::Usage)?;
                return efficiency_over_tilts(&spec, &tilts, &wg, cfg);
            }
            let w_val = pick(w, &file.w);
            let wit = resolve_witness(pick(witness, &file.witness), w_val)?;
            let grid_text = pick(eta_grid, &file.eta_grid).unwrap_or_else(|| "0:1:0.1".into());
            let etas = parse_grid(&grid_text).map_err(CliError::Usage)?;
            let curve = optimize::efficiency_curve(&wit, &spec, &etas, cfg)?;
            let crit = if spec.has_displacement() {
                Some(optimize::critical_efficiency(&wit, &spec, cfg)?)
            } else {
                None
            };
            let cross = optimize::crossover_efficiency(&wit, &spec, cfg)?;
            let mut csv = String::from("eta,value\n");
            for (eta, v) in &curve {
                csv.push_str(&format!("{},{}\n", fmt_num(*eta), fmt_num(*v)));
            }
            let show = |t: Option<f64>| t.map_or_else(|| "none".to_string(), fmt_num);
            let notes = vec![
                ("eta_crit".to_string(), show(crit.as_ref().and_then(|c| c.threshold.value()))),
                ("eta_gt_hh".to_string(), show(cross.threshold.value())),
            ];
            let data = json!({ "curve": curve, "critical": crit, "crossover": cross });
            let args = json!({ "witness": wit.name, "scheme": spec.label(), "w": w_val, "eta_grid": grid_text });
            Ok(("efficiency", args, Output { csv, json: data, notes }))
        }
        Command::Entropy { witness, w, grid, mode, x, y, px, py } => {
            let w_val = pick(w, &file.w);
            let wit = resolve_witness(pick(witness, &file.witness), w_val)?;
            let mode = pick(mode, &file.mode).unwrap_or_else(|| "uniform".into());
            let spec = match mode.as_str() {
                "uniform" => GuessingSpec::UniformAverage,
                "global" => GuessingSpec::Global,
                "conditional" => GuessingSpec::Conditional {
                    x: pick(x, &file.x).unwrap_or(0),
                    y: pick(y, &file.y).unwrap_or(0),
                },
                "average" => {
                    let weights = |flag: Option<String>, f: &Option<String>, name: &str| -> CliResult<Vec<f64>> {
                        let text = pick(flag, f).ok_or_else(|| CliError::Usage(format!("--{name} is required")))?;
                        parse_list(&text).map_err(CliError::Usage)
                    };
                    GuessingSpec::Average { p_x: weights(px, &file.px, "px")?, p_y: weights(py, &file.py, "py")? }
                }
                other => return usage(format!("unknown guessing mode '{other}'")),
            };
            let grid_text = pick(grid, &file.grid);
            let points = match &grid_text {
                Some(g) => parse_grid(g).map_err(CliError::Usage)?,
                None => {
                    let q = wit.quantum_bound.ok_or_else(|| CliError::Usage("witness has no quantum bound; pass --grid".into()))?;
                    let c = wit.classical_bound;
                    (0..21).map(|i| c + (q - c) * f64::from(i) / 20.0).collect()
                }
            };
            let curve = randomness::min_entropy_curve(&wit, &spec, &points, cfg)?;
            let notes = curve
                .points
                .iter()
                .filter_map(|p| p.error.as_ref().map(|e| (format!("skipped W*={}", fmt_num(p.w_star)), e.clone())))
                .collect();
            let args = json!({ "witness": wit.name, "w": w_val, "mode": spec, "grid": grid_text });
            Ok(("entropy", args, Output { csv: curve.to_csv(), json: to_json(&curve), notes }))
        }
        Command::Framefree { protocol, samples, rotation, pool, gamma_points } => {
            let protocol = pick(protocol, &file.protocol).unwrap_or_else(|| "projective".into());
            match protocol.as_str() {
                "projective" => {
                    let samples = pick(samples, &file.samples).unwrap_or(100_000);
                    let measure = match pick(rotation, &file.rotation).as_deref() {
                        None | Some("euler") => RotationMeasure::UniformEuler,
                        Some("haar") => RotationMeasure::Haar,
                        Some(other) => return usage(format!("unknown rotation measure '{other}'")),
                    };
                    let report = framefree::projective_framefree_with(samples, cfg.seed, measure)?;
                    let frac = |f: &framefree::Fraction| {
                        format!("{} [{}, {}]", fmt_num(f.value), fmt_num(f.lower), fmt_num(f.upper))
                    };
                    let notes = vec![
                        ("samples".to_string(), samples.to_string()),
                        ("non_violating".to_string(), frac(&report.non_violating)),
                        ("band_3.0_3.4".to_string(), frac(&report.bands[0])),
                        ("band_3.4_3.6".to_string(), frac(&report.bands[1])),
                        ("band_3.6_max".to_string(), frac(&report.bands[2])),
                        ("max_observed".to_string(), fmt_num(report.max_observed)),
                    ];
                    let args = json!({ "protocol": protocol, "samples": samples, "rotation": measure });
                    Ok(("framefree", args, Output { csv: report.histogram.to_csv(), json: to_json(&report), notes }))
                }
                "displacement" | "homodyne" => {
                    let kind = if protocol == "displacement" { MeasurementKind::Displacement } else { MeasurementKind::Homodyne };
                    let k = pick(pool, &file.pool).unwrap_or(4);
                    let n = pick(gamma_points, &file.gamma_points).unwrap_or(721);
                    let pool = framefree::build_cv_pool(kind, k, cfg)?;
                    let sweep = framefree::sweep_pool(&pool, &framefree::gamma_grid(n));
                    let lost = sweep.iter().filter(|p| !p.violated).count();
                    let notes = vec![("non_violating_points".to_string(), lost.to_string())];
                    let data = json!({ "pool": pool, "sweep": sweep });
                    let args = json!({ "protocol": protocol, "pool": k, "gamma_points": n });
                    Ok(("framefree", args, Output { csv: framefree::sweep_to_csv(&sweep), json: data, notes }))
                }
                other => usage(format!("unknown protocol '{other}'")),
            }
        }
        Command::Bound { s, w } => {
            let f = randomness::analytical_bound_f(s, w)?;
            let csv = format!(
                "S,w,F,H_min,clamped\n{},{},{},{},{}\n",
                fmt_num(s),
                fmt_num(w),
                fmt_num(f.value),
                fmt_num(f.min_entropy()),
                u8::from(f.clamped)
            );
            let data = json!({ "S": s, "w": w, "F": f.value, "H_min": f.min_entropy(), "clamped": f.clamped });
            Ok(("bound", json!({ "s": s, "w": w }), Output { csv, json: data, notes: vec![] }))
        }
        Command::Fixtures { table } => {
            let table = pick(table, &file.table);
            let list = match &table {
                Some(t) => fixtures::by_table(t),
                None => fixtures::all(),
            };
            if list.is_empty() {
                return usage(format!("no fixtures for table '{}'", table.unwrap_or_default()));
            }
            let mut csv = String::from("table,witness,scheme,reported,evaluated\n");
            let mut rows = Vec::new();
            for f in &list {
                let v = f.evaluate()?;
                csv.push_str(&format!("{},{},{},{},{}\n", f.table, f.witness, f.scheme, fmt_num(f.reported), fmt_num(v)));
                rows.push(json!({ "fixture": f, "evaluated": v }));
            }
            Ok(("fixtures", json!({ "table": table }), Output { csv, json: Value::Array(rows), notes: vec![] }))
        }
    }
}

fn efficiency_over_tilts(spec: &SchemeSpec, tilts: &[f64], grid: &str, cfg: &OptimizerConfig) -> CliResult<(&'static str, Value, Output)> {
    let mut csv = String::from("w,eta_crit,eta_gt_hh\n");
    let mut rows = Vec::new();
    for &t in tilts {
        let wit = witness::make_s3_tilted(t)?;
        let crit = if spec.has_displacement() {
            optimize::critical_efficiency(&wit, spec, cfg)?.threshold.value()
        } else {
            None
        };
        let cross = optimize::crossover_efficiency(&wit, spec, cfg)?.threshold.value();
        let cell = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        csv.push_str(&format!("{},{},{}\n", fmt_num(t), cell(crit), cell(cross)));
        rows.push(json!({ "w": t, "eta_crit": crit, "eta_gt_hh": cross }));
    }
    let args = json!({ "scheme": spec.label(), "w_grid": grid });
    Ok(("efficiency", args, Output { csv, json: Value::Array(rows), notes: vec![] }))
}
