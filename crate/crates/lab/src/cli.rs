//! `loewner-lab` subcommands.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use loewner_lab_core::conformal::{Chart, Configuration, CurvePath, ExtPoint, Region};
use loewner_lab_core::energies::{
    arc_driving, chord_driving, chordal_potential, chordal_potential_from_driving, exponents, radial_potential,
    radial_potential_from_driving, rho_potential, rho_potential_from_driving, Case, MultiRadialOptions, Truncation,
};
use loewner_lab_core::loewner::{
    chordal_trace, extract_driving, radial_trace, DrivingFunction, DrivingKind, ForcePoint, TraceOptions,
};
use loewner_lab_core::loop_soup::{loop_mass_two_sets, multi_cross_mass, LoopParams, LoopSet};
use loewner_lab_core::optimizer::{minimize_potential, LoopMode, Objective, ObjectiveSpec, OptimizerOptions};
use loewner_lab_core::sle::{sample_paths, SleConfig};
use loewner_lab_core::verifier::{
    om_ratio_experiment, reference_map, verify_deformation, verify_exponent_limits, CaseKind, DeformationCase,
    OmConfig,
};
use loewner_lab_core::C64;
use serde_json::{json, Value};

use crate::config::{Artifacts, RunConfig};
use crate::error::{LabError, LabResult};
use crate::formats::{driving_csv, pack_paths, read_curve, read_driving, read_map, CurveJson};
use crate::report;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "LOEWNER_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "loewner-lab", version, about = "Loewner evolution, loop soup and SLE experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Unset values take per-command defaults.
#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub mc_samples: Option<u64>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true, default_value_t = 2.0)]
    pub kappa: f64,
    #[arg(long, global = true, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, global = true, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',', default_value = "0.8,0.6,0.45")]
    pub eps_grid: Vec<f64>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EnergyCase {
    Chordal,
    Rho,
    Radial,
    RhoRadial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyCase {
    Chordal,
    Rho,
    Radial,
    MultiRadial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Chordal,
    Radial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BatchFormat {
    Packed,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Driving function to curve.
    Trace {
        #[arg(long)]
        driving: PathBuf,
        /// Trace only up to this capacity time.
        #[arg(long = "T")]
        t: Option<f64>,
        /// Vertical instead of tilted slits.
        #[arg(long)]
        vertical: bool,
    },
    /// Curve to driving function.
    Extract {
        #[arg(long)]
        curve: PathBuf,
    },
    /// Loewner energy and potential of a driving function or curve.
    Energy {
        #[arg(long, conflicts_with = "curve", required_unless_present = "curve")]
        driving: Option<PathBuf>,
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "chordal")]
        case: EnergyCase,
    },
    /// Brownian loop mass of loops in the disk hitting the given curves.
    Loopmass {
        #[arg(long = "curve", required = true)]
        curves: Vec<PathBuf>,
        /// Weight loops by `max(#curves hit - 1, 0)` instead of requiring
        /// exactly two curves.
        #[arg(long)]
        multi_cross: bool,
    },
    /// Sample SLE driving functions.
    Sample {
        #[arg(long, value_enum, default_value = "chordal")]
        kind: KindArg,
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
        #[arg(long, value_enum, default_value = "packed")]
        format: BatchFormat,
    },
    /// Minimize a potential over driving functions.
    Minimize {
        #[arg(long, value_enum, default_value = "chordal")]
        case: EnergyCase,
        /// Initial driver; defaults to `0.5 sin(pi t / T)`.
        #[arg(long)]
        driving: Option<PathBuf>,
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
    },
    /// Check a conformal deformation identity on its reference setup.
    VerifyDeform {
        #[arg(long, value_enum)]
        case: VerifyCase,
        /// Map JSON; defaults to the reference perturbation.
        #[arg(long = "f")]
        map: Option<PathBuf>,
    },
    /// Neighbourhood-ratio trend for chordal SLE.
    OmRatio {
        #[arg(long = "f")]
        map: Option<PathBuf>,
    },
    /// Exponent tables of every case at `--kappa`.
    Constants,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Trace { .. } => "trace",
            Command::Extract { .. } => "extract",
            Command::Energy { .. } => "energy",
            Command::Loopmass { .. } => "loopmass",
            Command::Sample { .. } => "sample",
            Command::Minimize { .. } => "minimize",
            Command::VerifyDeform { .. } => "verify-deform",
            Command::OmRatio { .. } => "om-ratio",
            Command::Constants => "constants",
        }
    }
}

/// Outcome of a successful command.
pub struct Outcome {
    pub summary: Value,
    /// `false` turns into exit code 1.
    pub pass: bool,
}

fn path_str(p: &std::path::Path) -> String {
    p.display().to_string()
}

fn build_config(cli: &Cli) -> RunConfig {
    let c = &cli.common;
    let (samples, steps, tol, n) = match &cli.command {
        Command::Loopmass { .. } => (100_000, 0, 0.0, 2),
        Command::Sample { .. } => (100, 1000, 0.0, 1),
        Command::Minimize { .. } => (0, 40, 1e-8, 1),
        Command::VerifyDeform { .. } => (100_000, 0, 1e-3, 2),
        Command::OmRatio { .. } => (10_000, 240, 0.0, 1),
        Command::Trace { .. } | Command::Extract { .. } | Command::Energy { .. } | Command::Constants => (0, 0, 0.0, 1),
    };
    let mut inputs = BTreeMap::new();
    let mut options = BTreeMap::new();
    match &cli.command {
        Command::Trace { driving, t, vertical } => {
            inputs.insert("driving".into(), path_str(driving));
            options.insert("T".into(), json!(t));
            options.insert("vertical".into(), json!(vertical));
        }
        Command::Extract { curve } => {
            inputs.insert("curve".into(), path_str(curve));
        }
        Command::Energy { driving, curve, case } => {
            if let Some(d) = driving {
                inputs.insert("driving".into(), path_str(d));
            }
            if let Some(cv) = curve {
                inputs.insert("curve".into(), path_str(cv));
            }
            options.insert("case".into(), json!(format!("{case:?}").to_lowercase()));
        }
        Command::Loopmass { curves, multi_cross } => {
            for (k, p) in curves.iter().enumerate() {
                inputs.insert(format!("curve{k}"), path_str(p));
            }
            options.insert("multi_cross".into(), json!(multi_cross));
        }
        Command::Sample { kind, t, format } => {
            options.insert("kind".into(), json!(format!("{kind:?}").to_lowercase()));
            options.insert("T".into(), json!(t));
            options.insert("format".into(), json!(format!("{format:?}").to_lowercase()));
        }
        Command::Minimize { case, driving, t } => {
            if let Some(d) = driving {
                inputs.insert("driving".into(), path_str(d));
            }
            options.insert("case".into(), json!(format!("{case:?}").to_lowercase()));
            options.insert("T".into(), json!(t));
        }
        Command::VerifyDeform { case, map } => {
            if let Some(m) = map {
                inputs.insert("f".into(), path_str(m));
            }
            options.insert("case".into(), json!(format!("{case:?}").to_lowercase()));
        }
        Command::OmRatio { map } => {
            if let Some(m) = map {
                inputs.insert("f".into(), path_str(m));
            }
        }
        Command::Constants => {}
    }
    RunConfig {
        command: cli.command.name().into(),
        inputs,
        out_dir: path_str(&c.out_dir),
        seed: c.seed,
        tol: c.tol.unwrap_or(tol),
        mc_samples: c.mc_samples.unwrap_or(samples),
        steps: c.steps.unwrap_or(steps),
        kappa: c.kappa,
        rho: c.rho,
        mu: c.mu,
        n: c.n.unwrap_or(n),
        eps_grid: c.eps_grid.clone(),
        options,
    }
}

fn origin_to_infinity() -> (ExtPoint, ExtPoint) {
    (ExtPoint::Finite(C64::new(0.0, 0.0)), ExtPoint::Infinity)
}

fn curve_ends(c: &CurvePath) -> (ExtPoint, ExtPoint) {
    let start = c.marked.start.unwrap_or(ExtPoint::Finite(c.start()));
    let end = c.marked.end.unwrap_or(ExtPoint::Finite(c.tip()));
    (start, end)
}

/// Cuts `d` at time `t`, interpolating the last value.
fn truncate_at(d: &DrivingFunction, t: f64) -> LabResult<DrivingFunction> {
    let horizon = d.horizon();
    if !(t > 0.0) || t > horizon * (1.0 + 1e-12) {
        return Err(LabError::Usage(format!("--T must lie in (0, {horizon}]")));
    }
    let mut grid: Vec<f64> = d.grid.iter().copied().take_while(|&s| s < t).collect();
    let mut values = d.values[..grid.len()].to_vec();
    let tail = d.value_at(t.min(horizon));
    grid.push(t.min(horizon));
    values.push(tail);
    Ok(DrivingFunction::new(d.kind, grid, values)?)
}

fn cmd_trace(art: &mut Artifacts, driving: &std::path::Path, t: Option<f64>, vertical: bool) -> LabResult<Outcome> {
    let mut d = read_driving(driving)?;
    if let Some(t) = t {
        d = truncate_at(&d, t)?;
    }
    let tr = match d.kind {
        DrivingKind::Chordal => chordal_trace(&d, &TraceOptions { vertical })?,
        DrivingKind::Radial => radial_trace(&d)?,
    };
    let tip = tr.curve.tip();
    let mut body = serde_json::to_value(CurveJson::from_curve(&tr.curve)).expect("curve serializes");
    body["capacity"] = json!(tr.capacity);
    art.write_json("curve.json", body)?;
    Ok(Outcome {
        summary: json!({"tip": [tip.re, tip.im], "capacity": tr.capacity, "points": tr.curve.len()}),
        pass: true,
    })
}

fn extracted(curve: &CurvePath) -> LabResult<DrivingFunction> {
    let trunc = Truncation::default();
    match curve.chart {
        Chart::H => Ok(extract_driving(curve)?),
        Chart::D => match curve.marked.target {
            Some(y) => Ok(arc_driving(curve, y, &trunc)?.0),
            None => {
                let (x, y) = curve_ends(curve);
                Ok(chord_driving(curve, x, y, &trunc)?.0)
            }
        },
    }
}

fn cmd_extract(art: &mut Artifacts, curve: &std::path::Path) -> LabResult<Outcome> {
    let c = read_curve(curve)?;
    let d = extracted(&c)?;
    let text = driving_csv(&d, &art.config().to_value());
    art.write_bytes("driving.csv", text.as_bytes())?;
    Ok(Outcome {
        summary: json!({"kind": d.kind.as_str(), "capacity": d.horizon(), "points": d.len()}),
        pass: true,
    })
}

fn cmd_energy(
    art: &mut Artifacts,
    driving: Option<&std::path::Path>,
    curve: Option<&std::path::Path>,
    case: EnergyCase,
) -> LabResult<Outcome> {
    let cfg = art.config().clone();
    let trunc = Truncation::default();
    let r = match (driving, curve) {
        (Some(p), _) => {
            let d = read_driving(p)?;
            let (x, y) = origin_to_infinity();
            match case {
                EnergyCase::Chordal => chordal_potential_from_driving(&d, x, y, false)?,
                EnergyCase::Rho => rho_potential_from_driving(&d, cfg.rho, ForcePoint::Start, x, y, false)?,
                EnergyCase::Radial => radial_potential_from_driving(&d, None, false)?,
                EnergyCase::RhoRadial => radial_potential_from_driving(&d, Some(cfg.rho), false)?,
            }
        }
        (None, Some(p)) => {
            let c = read_curve(p)?;
            match case {
                EnergyCase::Chordal | EnergyCase::Rho => {
                    let (x, y) = curve_ends(&c);
                    let mut conf = Configuration::chordal(c.chart, x, y, cfg.kappa);
                    if case == EnergyCase::Rho {
                        conf.rho = Some(cfg.rho);
                        rho_potential(&c, &conf, ForcePoint::Start, &trunc)?
                    } else {
                        chordal_potential(&c, &conf, &trunc)?
                    }
                }
                EnergyCase::Radial | EnergyCase::RhoRadial => {
                    let mut conf = Configuration::radial(c.start(), cfg.kappa);
                    conf.interior = Some(c.marked.target.unwrap_or(C64::new(0.0, 0.0)));
                    if case == EnergyCase::RhoRadial {
                        conf.rho = Some(cfg.rho);
                    }
                    radial_potential(&c, &conf, &trunc)?
                }
            }
        }
        (None, None) => return Err(LabError::Usage("energy needs --driving or --curve".into())),
    };
    let body = report::potential(&r);
    art.write_json("energy.json", body.clone())?;
    Ok(Outcome { summary: body, pass: true })
}

fn cmd_loopmass(art: &mut Artifacts, curves: &[PathBuf], multi: bool) -> LabResult<Outcome> {
    let cfg = art.config().clone();
    let cs = curves.iter().map(|p| read_curve(p)).collect::<LabResult<Vec<_>>>()?;
    let params = LoopParams::new(cfg.mc_samples, cfg.seed);
    let disk = Region::domain(Chart::D);
    let e = if multi {
        multi_cross_mass(&cs, &disk, &params)?
    } else {
        if cs.len() != 2 {
            return Err(LabError::Usage("loopmass needs exactly two --curve files (or --multi-cross)".into()));
        }
        loop_mass_two_sets(&LoopSet::curve(&cs[0])?, &LoopSet::curve(&cs[1])?, &disk, &params)?
    };
    let mut body = report::estimate(&e);
    body["seed"] = json!(cfg.seed);
    for k in ["t_min", "box", "bias_bound"] {
        if body.get(k).is_none() {
            body[k] = Value::Null;
        }
    }
    art.write_json("loopmass.json", body.clone())?;
    Ok(Outcome { summary: body, pass: true })
}

fn cmd_sample(art: &mut Artifacts, kind: KindArg, t: f64, format: BatchFormat) -> LabResult<Outcome> {
    let cfg = art.config().clone();
    if cfg.steps == 0 {
        return Err(LabError::Usage("--steps must be positive".into()));
    }
    let kind = match kind {
        KindArg::Chordal => DrivingKind::Chordal,
        KindArg::Radial => DrivingKind::Radial,
    };
    let mut sle = SleConfig::new(kind, cfg.kappa, t, cfg.steps);
    if cfg.rho != 0.0 {
        sle = sle.with_rho(cfg.rho, ForcePoint::Start);
    }
    let paths = sample_paths(&sle, cfg.seed, cfg.mc_samples as usize)?;
    let drivers: Vec<DrivingFunction> = paths.iter().map(|p| p.driving.clone()).collect();
    let layout = match format {
        BatchFormat::Packed => {
            art.write_bytes("paths.bin", &pack_paths(&sle.grid, &drivers))?;
            json!({
                "file": "paths.bin",
                "encoding": "little-endian f64: grid, then the values of each path",
                "grid_len": sle.grid.len(),
                "paths": drivers.len(),
            })
        }
        BatchFormat::Csv => {
            let conf = cfg.to_value();
            for (i, d) in drivers.iter().enumerate() {
                art.write_bytes(&format!("path_{i:06}.csv"), driving_csv(d, &conf).as_bytes())?;
            }
            json!({"files": "path_NNNNNN.csv", "paths": drivers.len()})
        }
    };
    let redraws: u64 = paths.iter().map(|p| p.attempts as u64).sum();
    let reflections: u64 = paths.iter().map(|p| p.reflections as u64).sum();
    let body = json!({"layout": layout, "redraws": redraws, "reflections": reflections});
    art.write_json("sample.json", body.clone())?;
    Ok(Outcome { summary: body, pass: true })
}

fn cmd_minimize(art: &mut Artifacts, case: EnergyCase, driving: Option<&std::path::Path>, t: f64) -> LabResult<Outcome> {
    let cfg = art.config().clone();
    let kind = match case {
        EnergyCase::Chordal | EnergyCase::Rho => DrivingKind::Chordal,
        EnergyCase::Radial | EnergyCase::RhoRadial => DrivingKind::Radial,
    };
    let init = match driving {
        Some(p) => read_driving(p)?,
        None => DrivingFunction::from_fn(kind, t, cfg.steps.max(2), |s| 0.5 * (std::f64::consts::PI * s / t).sin())?,
    };
    if init.kind != kind {
        return Err(LabError::Usage("initial driver kind does not match --case".into()));
    }
    let (x, y) = origin_to_infinity();
    let objective = match case {
        EnergyCase::Chordal => Objective::Chordal { x, y },
        EnergyCase::Rho => Objective::Rho {
            rho: cfg.rho,
            force: ForcePoint::Start,
            x,
            y,
        },
        EnergyCase::Radial => Objective::Radial,
        EnergyCase::RhoRadial => Objective::RhoRadial { rho: cfg.rho },
    };
    let spec = ObjectiveSpec::new(objective).with_loops(LoopMode::Off);
    let opts = OptimizerOptions {
        grad_tol: cfg.tol,
        ..Default::default()
    };
    let r = minimize_potential(&spec, &[init], &opts)?;
    let conf = cfg.to_value();
    for (k, d) in r.drivers.iter().enumerate() {
        art.write_bytes(&format!("driver_{k}.csv"), driving_csv(d, &conf).as_bytes())?;
    }
    let mut body = report::optimizer(&r);
    body["tolerances"] = json!({
        "grad_tol": opts.grad_tol,
        "step_tol": opts.step_tol,
        "h": opts.h,
        "max_iter": opts.max_iter,
    });
    body["loop_seeds"] = json!([]);
    art.write_json("result.json", body)?;
    let monotone = r.trace.windows(2).all(|w| w[1] <= w[0]);
    Ok(Outcome {
        summary: json!({
            "objective": r.report.total,
            "iterations": r.iterations,
            "stop": r.stop,
            "monotone": monotone,
        }),
        pass: true,
    })
}

fn verify_kind(case: VerifyCase, cfg: &RunConfig) -> CaseKind {
    match case {
        VerifyCase::Chordal => CaseKind::Chordal,
        VerifyCase::Rho => CaseKind::Rho { rho: cfg.rho },
        VerifyCase::Radial => CaseKind::Radial,
        VerifyCase::MultiRadial => CaseKind::MultiRadial(MultiRadialOptions {
            mu: cfg.mu,
            ..Default::default()
        }),
    }
}

fn cmd_verify(art: &mut Artifacts, case: VerifyCase, map: Option<&std::path::Path>) -> LabResult<Outcome> {
    let cfg = art.config().clone();
    let kind = verify_kind(case, &cfg);
    let f = match map {
        Some(p) => read_map(p)?,
        None => reference_map(&kind, cfg.n),
    };
    let mut c = DeformationCase::reference(kind, cfg.kappa, cfg.n, f)?
        .with_loops(LoopParams::new(cfg.mc_samples, cfg.seed).with_stream("verify"));
    c.tolerance = cfg.tol;
    let r = verify_deformation(&c)?;
    let body = report::identity(&r);
    art.write_json("verify.json", body)?;
    Ok(Outcome {
        summary: json!({"case": r.case, "discrepancy": r.discrepancy, "stderr": r.stderr, "pass": r.pass}),
        pass: r.pass,
    })
}

fn cmd_om(art: &mut Artifacts, map: Option<&std::path::Path>) -> LabResult<Outcome> {
    let cfg = art.config().clone();
    let f = match map {
        Some(p) => read_map(p)?,
        None => reference_map(&CaseKind::Chordal, 1),
    };
    let mut om = OmConfig::new(cfg.kappa, cfg.eps_grid.clone(), f, cfg.mc_samples, cfg.seed);
    om.steps = cfg.steps;
    let r = om_ratio_experiment(&om)?;
    let body = report::om(&r);
    art.write_json("om.json", body)?;
    Ok(Outcome {
        summary: json!({
            "target": r.target,
            "gaps": r.points.iter().map(|p| p.gap).collect::<Vec<_>>(),
            "final_pass": r.final_pass,
            "pass": r.pass,
        }),
        pass: r.pass,
    })
}

fn cmd_constants(art: &mut Artifacts) -> LabResult<Outcome> {
    let cfg = art.config().clone();
    let (k, rho, n, mu) = (cfg.kappa, cfg.rho, cfg.n.max(1), cfg.mu);
    let cases = [
        Case::Chordal,
        Case::ForcedChordal { rho },
        Case::MultiChordal { n },
        Case::Radial,
        Case::ForcedRadial { rho },
        Case::MultiRadial { n, mu },
    ];
    let tables = cases
        .iter()
        .map(|&c| exponents(k, c).map(|t| report::exponent_table(&t)))
        .collect::<Result<Vec<_>, _>>()?;
    let limits = report::exponent_report(&verify_exponent_limits());
    let first = &tables[0];
    let summary = json!({"kappa": k, "c": first["c"], "b": first["b"], "b_tilde": first["b_tilde"]});
    art.write_json("constants.json", json!({"tables": tables, "limits": limits}))?;
    Ok(Outcome { summary, pass: true })
}

fn configure_threads() -> LabResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| LabError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(LabError::Usage(format!("{THREADS_ENV} must be positive")));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one parsed command, writing its artifacts and manifest.
pub fn execute(cli: &Cli) -> LabResult<Outcome> {
    configure_threads()?;
    let mut art = Artifacts::new(build_config(cli))?;
    let out = match &cli.command {
        Command::Trace { driving, t, vertical } => cmd_trace(&mut art, driving, *t, *vertical),
        Command::Extract { curve } => cmd_extract(&mut art, curve),
        Command::Energy { driving, curve, case } => cmd_energy(&mut art, driving.as_deref(), curve.as_deref(), *case),
        Command::Loopmass { curves, multi_cross } => cmd_loopmass(&mut art, curves, *multi_cross),
        Command::Sample { kind, t, format } => cmd_sample(&mut art, *kind, *t, *format),
        Command::Minimize { case, driving, t } => cmd_minimize(&mut art, *case, driving.as_deref(), *t),
        Command::VerifyDeform { case, map } => cmd_verify(&mut art, *case, map.as_deref()),
        Command::OmRatio { map } => cmd_om(&mut art, map.as_deref()),
        Command::Constants => cmd_constants(&mut art),
    }?;
    let mut summary = out.summary.clone();
    summary["pass"] = json!(out.pass);
    art.finish(summary)?;
    Ok(out)
}

/// Parses `argv`, runs the command and returns the process exit code: 0 on
/// success, 1 when a check fails, 2 on errors (reported as JSON on stderr).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = LabError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return 2;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            println!("{}", out.summary);
            if out.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            2
        }
    }
}
