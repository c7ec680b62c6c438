//! The `qrealism` command line.
//!
//! Exit codes: 0 on success (for `nogo`, an infeasible verdict), 1 on usage or
//! precondition errors, 3 when the no-go LP turns out feasible.

pub mod spec;

use std::env;
use std::ffi::OsString;
use std::f64::consts::SQRT_2;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::frames::{
    bloch_covariant_frame, check_conditions, frame_distribution, husimi_frame, qubit_trine_frame, wigner_position_marginal,
    wigner_values, Frame,
};
use crate::lp::CERTIFICATE_TOL;
use crate::numeric::fmt_f64;
use crate::model::{born_table_grouped, min_k_scan_with, DEFAULT_ITERS};
use crate::reconstruction::{
    fock_effects, husimi_number_moment, ic_qubit_effects, pair_effects, recheck_no_go, verify_no_go_with,
    NoGoOptions, Verdict,
};
use spec::{parse_effect_net, parse_state, parse_state_net};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QREALISM_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNEXPECTED: i32 = 3;

pub const FRAME_NAMES: [&str; 3] = ["trine", "bloch", "husimi"];

#[derive(Parser, Debug)]
#[command(name = "qrealism", version, about = "Operator frames, bounded-response no-go checks and ontic-model search")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the built-in frames or print one with its condition report.
    Frames {
        #[command(subcommand)]
        action: FramesAction,
    },
    /// Quasi-distribution of a state on a frame, as CSV.
    Dist {
        frame: String,
        state: String,
        #[command(flatten)]
        params: FrameParams,
    },
    /// Bounded-response LP for a frame; prints the report JSON.
    Nogo {
        frame: String,
        #[arg(long, value_enum)]
        effects: Option<EffectSet>,
        /// Equality slack added to the frame's completeness defect.
        #[arg(long, default_value_t = crate::reconstruction::EQUALITY_TOL)]
        tol: f64,
        /// Largest completeness defect accepted as normalized.
        #[arg(long, default_value_t = 1e-2)]
        max_defect: f64,
        /// Also write `nogo_report.json` here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        params: FrameParams,
    },
    /// Number moment from Husimi quadrature, against the exact ⟨n̂⟩.
    Qmoment {
        state: String,
        #[arg(long, default_value_t = 40)]
        trunc: usize,
        #[arg(long, default_value_t = 7.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
    },
    /// Minimal residual of finite ontic models for K = 1..=kmax.
    Search {
        #[arg(long)]
        states: String,
        #[arg(long)]
        effects: String,
        #[arg(long)]
        kmax: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ITERS)]
        iters: usize,
        /// Where `model.json` goes; falls back to $QREALISM_OUT_DIR, then ".".
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Wigner function on a phase-space grid, as CSV.
    Wigner {
        state: String,
        #[arg(long, default_value_t = 30)]
        trunc: usize,
        #[arg(long, default_value_t = 6.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Add the position marginal as `q,marginal` columns.
        #[arg(long)]
        marginal: bool,
    },
}

#[derive(Subcommand, Debug)]
enum FramesAction {
    List,
    Show {
        name: String,
        /// Print only the condition report.
        #[arg(long)]
        report_only: bool,
        #[command(flatten)]
        params: FrameParams,
    },
}

#[derive(Args, Debug, Clone)]
struct FrameParams {
    #[arg(long, default_value_t = 40)]
    ntheta: usize,
    #[arg(long, default_value_t = 40)]
    nphi: usize,
    /// Husimi truncation.
    #[arg(long, default_value_t = 10)]
    trunc: usize,
    /// Husimi grid radius.
    #[arg(long, default_value_t = 4.0)]
    radius: f64,
    /// Husimi grid spacing.
    #[arg(long, default_value_t = 0.2)]
    step: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum EffectSet {
    Ic,
    Pair,
    Fock,
}

#[derive(Serialize)]
struct FrameSummary {
    points: usize,
    completeness_defect: f64,
    min_eigenvalue: f64,
    all_psd: bool,
}

fn load_frame(name: &str, p: &FrameParams) -> anyhow::Result<Frame> {
    if let Some(path) = name.strip_prefix('@') {
        let text = fs::read_to_string(path).with_context(|| format!("reading frame file {path}"))?;
        return serde_json::from_str(&text).with_context(|| format!("parsing frame file {path}"));
    }
    Ok(match name {
        "trine" => qubit_trine_frame(),
        "bloch" => bloch_covariant_frame(p.ntheta, p.nphi)?,
        "husimi" => husimi_frame(p.trunc, p.radius, p.step)?,
        _ => bail!("unknown frame '{name}' (expected one of {} or @file)", FRAME_NAMES.join(", ")),
    })
}

fn summary(frame: &Frame) -> FrameSummary {
    let pos = frame.positivity();
    FrameSummary {
        points: frame.len(),
        completeness_defect: frame.completeness_defect(),
        min_eigenvalue: pos.min_eigenvalue,
        all_psd: pos.all_psd,
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| env::var_os(OUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

fn write_json(dir: &Path, file: &str, value: &impl Serialize) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(file);
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn check_grid(radius: f64, step: f64) -> anyhow::Result<()> {
    if !(radius.is_finite() && radius > 0.0 && step.is_finite() && step > 0.0 && step <= radius) {
        bail!("invalid grid: need 0 < step ≤ radius, got radius {radius}, step {step}");
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Frames { action: FramesAction::List } => {
            for n in FRAME_NAMES {
                writeln!(out, "{n}")?;
            }
        }
        Command::Frames { action: FramesAction::Show { name, report_only, params } } => {
            let frame = load_frame(&name, &params)?;
            let report = summary(&frame);
            let text = if report_only {
                serde_json::to_string_pretty(&report)?
            } else {
                serde_json::to_string_pretty(&json!({ "frame": frame, "report": report }))?
            };
            writeln!(out, "{text}")?;
        }
        Command::Dist { frame, state, params } => {
            let frame = load_frame(&frame, &params)?;
            let psi = parse_state(&state, frame.dim())?;
            let dist = frame_distribution(&frame, &psi)?;
            dist.write_csv(&mut *out)?;
            let c = check_conditions(&dist);
            writeln!(err, "normalization {} (completeness defect {:e})", c.normalization, c.completeness_defect)?;
            writeln!(err, "min value {}", c.min_value)?;
        }
        Command::Nogo { frame, effects, tol, max_defect, out_dir, params } => {
            return nogo(&frame, effects, tol, max_defect, out_dir, &params, out, err);
        }
        Command::Qmoment { state, trunc, radius, step } => {
            check_grid(radius, step)?;
            let frame = husimi_frame(trunc, radius, step)?;
            let psi = parse_state(&state, trunc)?;
            let moment = husimi_number_moment(&psi, &frame)?;
            let exact = psi.mean_number();
            // points where the factor |α|²−1 multiplying Q is negative
            let q = frame_distribution(&frame, &psi)?;
            let (mut count, mut weight, mut min_factor) = (0usize, 0.0, f64::INFINITY);
            for (p, v) in frame.points().iter().zip(&q.values) {
                let [x, y] = p.coords.context("Husimi point without coordinates")?;
                let f = x * x + y * y - 1.0;
                if f < 0.0 {
                    count += 1;
                    weight += v * p.weight;
                    min_factor = min_factor.min(f);
                }
            }
            let report = json!({
                "quadrature": moment,
                "exact": exact,
                "abs_error": (moment - exact).abs(),
                "negative_factor": { "points": count, "weight": weight, "min_factor": min_factor },
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Search { states, effects, kmax, restarts, seed, iters, out_dir: dir } => {
            let states = parse_state_net(&states)?;
            let (effects, groups) = parse_effect_net(&effects)?;
            let table = born_table_grouped(&states, &effects, groups)?;
            let (report, models) = min_k_scan_with(&table, kmax, restarts, iters, seed)?;
            report.write_csv(&mut *out)?;
            // smallest K within 1e-9 of the best residual
            let best = report.rows.last().map(|r| r.best_residual).unwrap_or(f64::INFINITY);
            let pick = report.rows.iter().position(|r| r.best_residual <= best + 1e-9).unwrap_or(0);
            let path = write_json(&out_dir(dir), "model.json", &models[pick])?;
            writeln!(
                err,
                "model with K = {} (residual {:e}) written to {}",
                models[pick].k,
                report.rows[pick].best_residual,
                path.display()
            )?;
        }
        Command::Wigner { state, trunc, radius, step, marginal } => {
            check_grid(radius, step)?;
            let psi = parse_state(&state, trunc)?;
            let dist = wigner_values(&psi, radius, step)?;
            let marg = if marginal {
                let n = (radius / step + 1e-9).floor() as i64;
                let q: Vec<f64> = (-n..=n).map(|i| SQRT_2 * i as f64 * step).collect();
                let m = wigner_position_marginal(&psi, &q, radius, step)?;
                Some((q, m))
            } else {
                None
            };
            if marg.is_some() {
                writeln!(out, "re,im,W,q,marginal")?;
            } else {
                writeln!(out, "re,im,W")?;
            }
            for (row, (s, w)) in dist.support.iter().zip(&dist.values).enumerate() {
                let [x, y] = s.coords.context("grid point without coordinates")?;
                write!(out, "{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(*w))?;
                if let Some((q, m)) = &marg {
                    match (q.get(row), m.get(row)) {
                        (Some(q), Some(m)) => write!(out, ",{},{}", fmt_f64(*q), fmt_f64(*m))?,
                        _ => write!(out, ",,")?,
                    }
                }
                writeln!(out)?;
            }
            writeln!(err, "min {}", dist.min_value())?;
            writeln!(err, "integral {}", dist.normalization())?;
        }
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn nogo(
    name: &str,
    effects: Option<EffectSet>,
    tol: f64,
    max_defect: f64,
    dir: Option<PathBuf>,
    params: &FrameParams,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> anyhow::Result<i32> {
    if !(tol.is_finite() && tol > 0.0) {
        bail!("--tol must be positive, got {tol}");
    }
    if tol > max_defect {
        bail!("--tol {tol:e} is looser than the accepted completeness defect {max_defect:e}; feasibility would be trivial");
    }
    let frame = load_frame(name, params)?;
    let d = frame.dim();
    let set = effects.unwrap_or(if d == 2 { EffectSet::Ic } else { EffectSet::Fock });
    let (effects, pairs) = match set {
        EffectSet::Ic if d == 2 => (ic_qubit_effects(), true),
        EffectSet::Pair if d == 2 => (pair_effects(), true),
        EffectSet::Fock => (fock_effects(d)?, false),
        _ => bail!("--effects {set:?} needs a qubit frame, this one has dim {d}"),
    };
    let opts = NoGoOptions { tol, max_defect };
    let report = verify_no_go_with(&frame, &effects, pairs, &opts)?;
    let recheck = recheck_no_go(&frame, &report, &opts)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    if let Some(dir) = dir {
        write_json(&dir, "nogo_report.json", &report)?;
    }
    match report.verdict {
        Verdict::Infeasible => {
            if !(recheck > CERTIFICATE_TOL) {
                bail!("certificate failed the independent re-check (margin {recheck:e})");
            }
            writeln!(err, "Infeasible: certificate margin {recheck:e} (re-checked)")?;
            Ok(EXIT_OK)
        }
        Verdict::UnexpectedlyFeasible => {
            writeln!(err, "UnexpectedlyFeasible: joint residual {:e}", -recheck)?;
            Ok(EXIT_UNEXPECTED)
        }
    }
}
