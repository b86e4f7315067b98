//! Command-line front end: argument parsing, run orchestration, artifact
//! export, and exit-status mapping.
//!
//! Exit codes: 0 success, 1 solver failure (a failure record is written to
//! the output directory), 2 configuration or usage errors.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use crate::config::{validate_config, Built, Mode, RunConfig};
use crate::error::{Error, Result};
use crate::io;
use crate::objective::optimize_p_alpha;
use crate::quench::run_continuation;
use crate::state::{
    solve_state_alpha, solve_state_obstacle, truncate_initial_data, weak_form_residual,
};
use crate::util::fmt_f64;

const USAGE: &str = "usage: deepquench <state|obstacle|optimize|quench|validate> \
                     --config PATH [--out DIR] [--fail-fast]";

fn verbose() -> bool {
    static LEVEL: OnceLock<bool> = OnceLock::new();
    *LEVEL.get_or_init(|| {
        !matches!(
            std::env::var("DEEPQUENCH_LOG").as_deref(),
            Ok("quiet") | Ok("off")
        )
    })
}

fn log(msg: &str) {
    if verbose() {
        eprintln!("[deepquench] {msg}");
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Command {
    Run(Mode),
    Validate,
}

#[derive(Debug, Clone)]
struct CliArgs {
    command: Command,
    config: PathBuf,
    out: Option<PathBuf>,
    fail_fast: bool,
}

fn parse_args(args: &[String]) -> std::result::Result<CliArgs, String> {
    let mut it = args.iter();
    let sub = it.next().ok_or(USAGE)?;
    let command = match sub.as_str() {
        "state" => Command::Run(Mode::State),
        "obstacle" => Command::Run(Mode::Obstacle),
        "optimize" => Command::Run(Mode::Optimize),
        "quench" => Command::Run(Mode::Continuation),
        "validate" => Command::Validate,
        other => return Err(format!("unknown subcommand '{other}'\n{USAGE}")),
    };
    let mut config = None;
    let mut out = None;
    let mut fail_fast = false;
    while let Some(flag) = it.next() {
        match flag.as_str() {
            "--config" => {
                config = Some(PathBuf::from(
                    it.next().ok_or("--config needs a path")?,
                ))
            }
            "--out" => out = Some(PathBuf::from(it.next().ok_or("--out needs a path")?)),
            "--fail-fast" => fail_fast = true,
            other => return Err(format!("unknown flag '{other}'\n{USAGE}")),
        }
    }
    Ok(CliArgs {
        command,
        config: config.ok_or(format!("--config is required\n{USAGE}"))?,
        out,
        fail_fast,
    })
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_cli(args: Vec<String>) -> i32 {
    let parsed = match parse_args(&args) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("{msg}");
            return 2;
        }
    };
    let text = match std::fs::read_to_string(&parsed.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", parsed.config.display());
            return 2;
        }
    };
    let cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config parse failed: {e}");
            return 2;
        }
    };
    let mut built = match validate_config(&cfg) {
        Ok(b) => b,
        Err(violations) => {
            eprintln!("configuration invalid:");
            for v in violations {
                eprintln!("  - {v}");
            }
            return 2;
        }
    };
    if parsed.fail_fast {
        built.fail_fast = true;
    }
    match parsed.command {
        Command::Validate => {
            println!("configuration valid");
            0
        }
        Command::Run(mode) => {
            built.mode = mode;
            let out_dir = parsed
                .out
                .or_else(|| cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            match run(&built, &out_dir) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("run failed: {e}");
                    let _ = io::write_failure(&out_dir, &e);
                    1
                }
            }
        }
    }
}

/// Execute the configured mode and write its artifacts.
pub fn run(built: &Built, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    match built.mode {
        Mode::State => run_state(built, out_dir),
        Mode::Obstacle => run_obstacle(built, out_dir),
        Mode::Optimize => run_optimize(built, out_dir),
        Mode::Continuation => run_quench(built, out_dir),
    }
}

fn run_state(b: &Built, out: &Path) -> Result<()> {
    let level = b.alpha.min(0.5);
    let data = truncate_initial_data(&b.data, level, &b.setup.grid)?;
    log(&format!("state solve at alpha = {}", b.alpha));
    let traj = solve_state_alpha(&b.setup, &b.control, &data, b.alpha)?;
    io::write_trajectory_bulk(&out.join("state_bulk.csv"), &b.setup, &traj)?;
    io::write_trajectory_surface(&out.join("state_surface.csv"), &b.setup, &traj, &b.setup.quench)?;
    let weak = weak_form_residual(&b.setup, &traj, &b.control)?;
    let energy = crate::state::energy_diagnostics(&b.setup, &traj, b.alpha)?;
    let (ymin, ymax) = traj.min_max();
    let mut pairs = vec![
        ("mode".to_string(), "state".to_string()),
        ("alpha".to_string(), fmt_f64(b.alpha)),
        ("state_min".to_string(), fmt_f64(ymin)),
        ("state_max".to_string(), fmt_f64(ymax)),
        ("weak_form_residual".to_string(), fmt_f64(weak)),
        ("newton_iters".to_string(), traj.newton_iters.to_string()),
    ];
    for (name, v) in energy.components() {
        pairs.push((format!("energy.{name}"), fmt_f64(v)));
    }
    io::write_run_summary(&out.join("summary.txt"), &pairs)
}

fn run_obstacle(b: &Built, out: &Path) -> Result<()> {
    log("obstacle solve");
    let traj = solve_state_obstacle(&b.setup, &b.control, &b.data)?;
    io::write_trajectory_bulk(&out.join("state_bulk.csv"), &b.setup, &traj)?;
    io::write_trajectory_surface(&out.join("state_surface.csv"), &b.setup, &traj, &b.setup.quench)?;
    let weak = weak_form_residual(&b.setup, &traj, &b.control)?;
    let admissible = traj.multipliers_admissible(&b.setup.grid)?;
    io::write_run_summary(
        &out.join("summary.txt"),
        &[
            ("mode".to_string(), "obstacle".to_string()),
            ("max_abs_state".to_string(), fmt_f64(traj.max_abs())),
            ("weak_form_residual".to_string(), fmt_f64(weak)),
            (
                "multipliers_admissible".to_string(),
                admissible.to_string(),
            ),
            ("newton_iters".to_string(), traj.newton_iters.to_string()),
        ],
    )
}

fn run_optimize(b: &Built, out: &Path) -> Result<()> {
    let level = b.alpha.min(0.5);
    let data = truncate_initial_data(&b.data, level, &b.setup.grid)?;
    log(&format!("optimization at alpha = {}", b.alpha));
    let r = optimize_p_alpha(
        &b.setup,
        b.alpha,
        &b.control,
        &data,
        &b.cd,
        &b.bounds,
        b.anchor.as_ref(),
        &crate::objective::OptParams::default(),
    )?;
    io::write_iteration_log(&out.join("iterations.csv"), &r.log)?;
    io::write_trajectory_bulk(&out.join("state_bulk.csv"), &b.setup, &r.state)?;
    io::write_trajectory_surface(&out.join("state_surface.csv"), &b.setup, &r.state, &b.setup.quench)?;
    let lam = crate::adjoint::compute_lambda(&b.setup, &r.state, &r.adjoint, b.alpha)?;
    io::write_adjoint(out, &b.setup, &r.adjoint, &lam)?;
    io::write_run_summary(
        &out.join("summary.txt"),
        &[
            ("mode".to_string(), "optimize".to_string()),
            ("alpha".to_string(), fmt_f64(b.alpha)),
            ("J".to_string(), fmt_f64(r.cost)),
            ("vi_residual".to_string(), fmt_f64(r.vi_residual)),
            ("tol_vi".to_string(), fmt_f64(r.tol_vi)),
            ("converged".to_string(), r.converged.to_string()),
            ("iterations".to_string(), r.iterations.to_string()),
        ],
    )
}

fn run_quench(b: &Built, out: &Path) -> Result<()> {
    log(&format!(
        "continuation over {} levels{}",
        b.schedule.alphas().len(),
        if b.anchor.is_some() { " (anchored)" } else { "" }
    ));
    let path = run_continuation(
        &b.setup,
        &b.schedule,
        &b.cd,
        &b.bounds,
        b.anchor.as_ref(),
        &b.data,
        &b.control,
        &crate::objective::OptParams::default(),
        b.fail_fast,
    )?;
    io::write_path_summary(&out.join("path_summary.csv"), &path)?;
    io::export_plot_data(out, &b.setup, &path)?;
    let mut pairs = vec![
        ("mode".to_string(), "continuation".to_string()),
        (
            "levels".to_string(),
            b.schedule.alphas().len().to_string(),
        ),
        ("anchored".to_string(), path.anchored.to_string()),
    ];
    for r in &path.records {
        let status = match (&r.failure, &r.opt) {
            (Some(f), _) => format!("failed: {f}"),
            (None, Some(o)) if o.converged => "converged".to_string(),
            _ => "not converged".to_string(),
        };
        pairs.push((format!("alpha.{}", fmt_f64(r.alpha)), status));
    }
    if let Some(o) = &path.obstacle {
        pairs.push((
            "obstacle.distance_to_last_state".to_string(),
            fmt_f64(o.distance_to_last_state),
        ));
        pairs.push(("obstacle.J".to_string(), fmt_f64(o.cost)));
        pairs.push((
            "obstacle.weak_residual".to_string(),
            fmt_f64(o.weak_residual),
        ));
    }
    io::write_run_summary(&out.join("summary.txt"), &pairs)?;
    if path.records.iter().any(|r| r.failure.is_some()) {
        return Err(Error::Argument(
            "one or more quench levels failed; see path_summary.csv".into(),
        ));
    }
    Ok(())
}
