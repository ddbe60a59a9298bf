//! Experiment CLI for the thermistor FEM solver.
//!
//! Experiments:
//!   converge   mesh/time refinement study (convergence tables as CSV)
//!   stability  fixed-mesh sweep over large time steps tau = k h
//!   split      temporal/spatial error-splitting sweeps with fitted slopes
//!   solve      single run exporting the final nodal fields
//!
//! Flags mirror a flat `key = value` config file (see --config); explicit
//! flags override file entries. Table CSV schema:
//! `variable,norm,t,M_or_k,error,order`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver failure,
//! 3 divergence detected in a convergence experiment.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use thermistor_fem::experiment::{
    run_convergence, run_solve, run_split, run_stability, ExperimentConfig, ExperimentKind, TauRule,
};
use thermistor_fem::scheme::HalfStepInit;
use thermistor_fem::Error;

#[derive(Parser, Debug)]
#[command(name = "thermistor", version, about = "Thermistor system experiment driver")]
struct Cli {
    /// Flat key-value config file (one `key = value` per line); flags
    /// override file entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Experiment kind: converge | stability | split | solve
    #[arg(long)]
    experiment: Option<String>,

    /// Spatial dimension: 2 | 3
    #[arg(long)]
    dim: Option<usize>,

    /// Element degree: 1 | 2
    #[arg(long)]
    degree: Option<usize>,

    /// Mesh subdivisions, comma separated (e.g. 20,40,80)
    #[arg(long = "M", value_delimiter = ',')]
    m: Option<Vec<usize>>,

    /// Time-step rule against h = 1/M: h | h32 | h12 | kh
    #[arg(long = "tau-rule")]
    tau_rule: Option<String>,

    /// k factors for the kh rule / stability sweep, comma separated
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<f64>>,

    /// Final time
    #[arg(long = "T")]
    final_time: Option<f64>,

    /// Half-step initialization: semi | explicit
    #[arg(long)]
    init: Option<String>,

    /// Output CSV path (stdout when omitted); the split experiment writes
    /// <out>.temporal.csv and <out>.spatial.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Options accumulated from the config file and the command line.
#[derive(Debug, Default, Clone)]
struct Options {
    experiment: Option<String>,
    dim: Option<usize>,
    degree: Option<usize>,
    m: Option<Vec<usize>>,
    tau_rule: Option<String>,
    k: Option<Vec<f64>>,
    final_time: Option<f64>,
    init: Option<String>,
    out: Option<PathBuf>,
}

fn parse_config_file(path: &Path) -> Result<Options, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {}", path.display(), e))?;
    let mut opt = Options::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("{}:{}: expected `key = value`", path.display(), lineno + 1));
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| format!("{}:{}: invalid {}: {}", path.display(), lineno + 1, what, value);
        match key {
            "experiment" => opt.experiment = Some(value.to_string()),
            "dim" => opt.dim = Some(value.parse().map_err(|_| bad("dim"))?),
            "degree" => opt.degree = Some(value.parse().map_err(|_| bad("degree"))?),
            "M" => {
                let list: Result<Vec<usize>, _> = value.split(',').map(|s| s.trim().parse()).collect();
                opt.m = Some(list.map_err(|_| bad("M list"))?);
            }
            "tau-rule" => opt.tau_rule = Some(value.to_string()),
            "k" => {
                let list: Result<Vec<f64>, _> = value.split(',').map(|s| s.trim().parse()).collect();
                opt.k = Some(list.map_err(|_| bad("k list"))?);
            }
            "T" => opt.final_time = Some(value.parse().map_err(|_| bad("T"))?),
            "init" => opt.init = Some(value.to_string()),
            "out" => opt.out = Some(PathBuf::from(value)),
            other => {
                return Err(format!("{}:{}: unknown key `{}`", path.display(), lineno + 1, other));
            }
        }
    }
    Ok(opt)
}

fn merge(cli: Cli, file: Options) -> Options {
    Options {
        experiment: cli.experiment.or(file.experiment),
        dim: cli.dim.or(file.dim),
        degree: cli.degree.or(file.degree),
        m: cli.m.or(file.m),
        tau_rule: cli.tau_rule.or(file.tau_rule),
        k: cli.k.or(file.k),
        final_time: cli.final_time.or(file.final_time),
        init: cli.init.or(file.init),
        out: cli.out.or(file.out),
    }
}

fn build_config(opt: &Options) -> Result<(ExperimentKind, ExperimentConfig), String> {
    let kind = match opt.experiment.as_deref().unwrap_or("converge") {
        "converge" => ExperimentKind::Converge,
        "stability" => ExperimentKind::Stability,
        "split" => ExperimentKind::Split,
        "solve" => ExperimentKind::Solve,
        other => return Err(format!("unknown experiment `{}`", other)),
    };
    let dim = opt.dim.unwrap_or(2);
    let degree = opt.degree.unwrap_or(1);
    let tau_rule = match opt.tau_rule.as_deref().unwrap_or("h") {
        "h" => TauRule::H,
        "h32" => TauRule::H32,
        "h12" => TauRule::H12,
        "kh" => TauRule::Kh,
        other => return Err(format!("unknown tau rule `{}`", other)),
    };
    let init = match opt.init.as_deref().unwrap_or("semi") {
        "semi" => HalfStepInit::SemiImplicit,
        "explicit" => HalfStepInit::Explicit,
        other => return Err(format!("unknown init variant `{}`", other)),
    };
    let m_list = opt.m.clone().unwrap_or_else(|| match (kind, dim) {
        (ExperimentKind::Stability, _) => vec![80],
        (_, 3) => vec![10, 20, 40],
        _ => vec![20, 40, 80],
    });
    let k_list = opt.k.clone().unwrap_or_else(|| {
        if dim == 3 {
            vec![1.0, 5.0, 10.0]
        } else {
            vec![1.0, 5.0, 10.0, 20.0]
        }
    });
    let final_time = opt.final_time.unwrap_or(4.0);
    let mut report_times: Vec<f64> = [1.0, 2.0, 3.0, 4.0]
        .into_iter()
        .filter(|&t| t <= final_time + 1e-12)
        .collect();
    if report_times.is_empty() {
        report_times.push(final_time);
    }

    Ok((
        kind,
        ExperimentConfig {
            kind,
            dim,
            degree,
            m_list,
            tau_rule,
            k_list,
            final_time,
            report_times,
            init,
            out: opt.out.clone(),
        },
    ))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, content),
        None => {
            print!("{}", content);
            Ok(())
        }
    }
}

/// Sibling path with an extra suffix before the extension:
/// split.csv -> split.temporal.csv.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{}.{}.{}", stem, suffix, ext))
}

fn exit_code_for(err: &Error) -> u8 {
    let mut e = err;
    while let Error::StepFailed { source, .. } = e {
        e = source;
    }
    match e {
        Error::Config(_) | Error::Io(_) => 1,
        Error::Divergence(_) => 3,
        _ => 2,
    }
}

fn run(opt: &Options) -> Result<(), (u8, String)> {
    let (kind, cfg) = build_config(opt).map_err(|m| (1, m))?;
    let fem_err = |e: Error| (exit_code_for(&e), e.to_string());

    match kind {
        ExperimentKind::Converge => {
            let table = run_convergence(&cfg).map_err(fem_err)?;
            for note in &table.notes {
                eprintln!("note: {}", note);
            }
            write_output(&cfg.out, &table.to_csv()).map_err(|e| (1, e.to_string()))?;
        }
        ExperimentKind::Stability => {
            let out = run_stability(&cfg).map_err(fem_err)?;
            for note in &out.table.notes {
                eprintln!("note: {}", note);
            }
            for flag in &out.divergence_flags {
                eprintln!("divergence: {}", flag);
            }
            write_output(&cfg.out, &out.table.to_csv()).map_err(|e| (1, e.to_string()))?;
        }
        ExperimentKind::Split => {
            let out = run_split(&cfg).map_err(fem_err)?;
            eprintln!(
                "temporal slope {:.4} at t = {}, spatial slope {:.4} at t = {}",
                out.temporal_slope, out.fit_time, out.spatial_slope, out.fit_time
            );
            match &cfg.out {
                Some(path) => {
                    fs::write(with_suffix(path, "temporal"), out.temporal.to_csv())
                        .map_err(|e| (1, e.to_string()))?;
                    fs::write(with_suffix(path, "spatial"), out.spatial.to_csv())
                        .map_err(|e| (1, e.to_string()))?;
                }
                None => {
                    println!("# temporal sweep (M = 128, varying tau)");
                    print!("{}", out.temporal.to_csv());
                    println!("# spatial sweep (tau = 1/512, varying M)");
                    print!("{}", out.spatial.to_csv());
                }
            }
        }
        ExperimentKind::Solve => {
            let csv = run_solve(&cfg).map_err(fem_err)?;
            write_output(&cfg.out, &csv).map_err(|e| (1, e.to_string()))?;
        }
    }
    Ok(())
}


fn main() -> ExitCode {
    let cli = Cli::parse();
    let file_opts = match &cli.config {
        Some(path) => match parse_config_file(path) {
            Ok(o) => o,
            Err(msg) => {
                eprintln!("error: {}", msg);
                return ExitCode::from(1);
            }
        },
        None => Options::default(),
    };
    let opts = merge(cli, file_opts);
    match run(&opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(code)
        }
    }
}
