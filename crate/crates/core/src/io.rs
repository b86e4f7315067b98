//! Artifact writers: trajectory/adjoint CSVs, iteration logs, the path
//! summary, plot-ready two-column files, and plain-text run summaries.
//! All numbers use a fixed 17-significant-digit decimal form, so re-export
//! is byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::adjoint::{AdjointPair, LambdaPair};
use crate::error::Result;
use crate::objective::IterRecord;
use crate::potentials::{quench_psi, QuenchConfig};
use crate::quench::QuenchPath;
use crate::state::{Setup, Trajectory};
use crate::util::fmt_f64;

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    Ok(())
}

/// Bulk trajectory CSV: one row per (time node, node), schema t,i,j,y.
pub fn write_trajectory_bulk(path: &Path, setup: &Setup, traj: &Trajectory) -> Result<()> {
    let g = &setup.grid;
    let mut s = String::from("t,i,j,y\n");
    for (m, st) in traj.states.iter().enumerate() {
        let t = fmt_f64(setup.time.time(m));
        for i in 0..g.nx {
            for j in 0..g.ny + 2 {
                s.push_str(&t);
                s.push_str(&format!(",{i},{j},{}\n", fmt_f64(st.bulk.at(g, i, j))));
            }
        }
    }
    write_file(path, &s)
}

/// Surface trajectory CSV with the multiplier column: for obstacle runs the
/// recovered multiplier, for quenched runs the scaled logarithmic term.
/// Schema t,circle,i,y_gamma,xi_gamma; the multiplier column is empty at
/// t = 0 where no step multiplier exists.
pub fn write_trajectory_surface(
    path: &Path,
    setup: &Setup,
    traj: &Trajectory,
    quench: &QuenchConfig,
) -> Result<()> {
    let g = &setup.grid;
    let mut s = String::from("t,circle,i,y_gamma,xi_gamma\n");
    for (m, st) in traj.states.iter().enumerate() {
        let t = fmt_f64(setup.time.time(m));
        for c in 0..2 {
            for i in 0..g.nx {
                let y = st.surface.at(g, c, i);
                let xi = if m == 0 {
                    None
                } else if let Some(ms) = &traj.multipliers {
                    Some(ms[m - 1].surface.at(g, c, i))
                } else {
                    traj.alpha.map(|a| {
                        let psi = quench_psi(a, quench).unwrap_or(f64::NAN);
                        psi * ((1.0 + y) / (1.0 - y)).ln()
                    })
                };
                match xi {
                    Some(v) => s.push_str(&format!(
                        "{t},{c},{i},{},{}\n",
                        fmt_f64(y),
                        fmt_f64(v)
                    )),
                    None => s.push_str(&format!("{t},{c},{i},{},\n", fmt_f64(y))),
                }
            }
        }
    }
    write_file(path, &s)
}

/// Adjoint CSVs: bulk schema t,i,j,p,lambda and surface schema
/// t,circle,i,p_gamma,lambda_gamma.
pub fn write_adjoint(
    dir: &Path,
    setup: &Setup,
    adj: &AdjointPair,
    lam: &LambdaPair,
) -> Result<()> {
    let g = &setup.grid;
    let mut s = String::from("t,i,j,p,lambda\n");
    for m in 0..adj.bulk.len() {
        let t = fmt_f64(setup.time.time(m));
        for i in 0..g.nx {
            for j in 0..g.ny + 2 {
                s.push_str(&format!(
                    "{t},{i},{j},{},{}\n",
                    fmt_f64(adj.bulk[m].at(g, i, j)),
                    fmt_f64(lam.bulk[m].at(g, i, j))
                ));
            }
        }
    }
    write_file(&dir.join("adjoint_bulk.csv"), &s)?;
    let mut s = String::from("t,circle,i,p_gamma,lambda_gamma\n");
    for m in 0..adj.surface.len() {
        let t = fmt_f64(setup.time.time(m));
        for c in 0..2 {
            for i in 0..g.nx {
                s.push_str(&format!(
                    "{t},{c},{i},{},{}\n",
                    fmt_f64(adj.surface[m].at(g, c, i)),
                    fmt_f64(lam.surface[m].at(g, c, i))
                ));
            }
        }
    }
    write_file(&dir.join("adjoint_surface.csv"), &s)
}

/// Optimizer iteration log, schema iter,J,vi_residual,step_length,
/// newton_iters_total.
pub fn write_iteration_log(path: &Path, log: &[IterRecord]) -> Result<()> {
    let mut s = String::from("iter,J,vi_residual,step_length,newton_iters_total\n");
    for r in log {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iter,
            fmt_f64(r.cost),
            fmt_f64(r.vi_residual),
            fmt_f64(r.step_length),
            r.newton_iters_total
        ));
    }
    write_file(path, &s)
}

fn opt_fmt(v: Option<f64>) -> String {
    match v {
        Some(x) => fmt_f64(x),
        None => "nan".to_string(),
    }
}

/// Path summary: one row per quench level plus a final obstacle row. The
/// obstacle row reuses the J column for the obstacle cost and the
/// dist_to_anchor column for the state distance to the last optimum.
pub fn write_path_summary(path: &Path, quench_path: &QuenchPath) -> Result<()> {
    let mut s = String::from(
        "alpha,J,vi_residual,dist_to_anchor,comp_bulk,comp_surf,conc_bulk,conc_surf,proj_residual,\
         dt_bulk_l2,sup_h1_bulk,lap_bulk_l2,dt_surf_l2,sup_h1_surf,lap_surf_l2,phi_hprime_l2,psi_hprime_surf_l2\n",
    );
    for r in &quench_path.records {
        let (j, vi) = match &r.opt {
            Some(o) => (Some(o.cost), Some(o.vi_residual)),
            None => (None, None),
        };
        let energies: Vec<String> = match &r.energy {
            Some(e) => e.components().iter().map(|(_, v)| fmt_f64(*v)).collect(),
            None => vec!["nan".to_string(); 8],
        };
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.alpha),
            opt_fmt(j),
            opt_fmt(vi),
            fmt_f64(r.dist_to_anchor),
            fmt_f64(r.comp.0),
            fmt_f64(r.comp.1),
            fmt_f64(r.conc.0),
            fmt_f64(r.conc.1),
            opt_fmt(r.proj_residual),
            energies.join(",")
        ));
    }
    if let Some(o) = &quench_path.obstacle {
        s.push_str(&format!(
            "obstacle,{},{},{},nan,nan,nan,nan,nan,{}\n",
            fmt_f64(o.cost),
            fmt_f64(o.weak_residual),
            fmt_f64(o.distance_to_last_state),
            vec!["nan"; 8].join(",")
        ));
    }
    write_file(path, &s)
}

/// Gnuplot-ready two-column files plus field snapshots at t = 0, T/2, T
/// taken from the last successful record.
pub fn export_plot_data(dir: &Path, setup: &Setup, quench_path: &QuenchPath) -> Result<()> {
    let two_col = |name: &str, rows: Vec<(f64, f64)>| -> Result<()> {
        let mut s = String::new();
        for (a, v) in rows {
            s.push_str(&format!("{} {}\n", fmt_f64(a), fmt_f64(v)));
        }
        write_file(&dir.join(name), &s)
    };
    let recs = &quench_path.records;
    two_col(
        "alpha_vs_dist.dat",
        recs.iter().map(|r| (r.alpha, r.dist_to_anchor)).collect(),
    )?;
    two_col(
        "alpha_vs_j.dat",
        recs.iter()
            .map(|r| (r.alpha, r.opt.as_ref().map_or(f64::NAN, |o| o.cost)))
            .collect(),
    )?;
    two_col(
        "alpha_vs_proj.dat",
        recs.iter()
            .map(|r| (r.alpha, r.proj_residual.unwrap_or(f64::NAN)))
            .collect(),
    )?;
    two_col(
        "alpha_vs_phihprime.dat",
        recs.iter()
            .map(|r| {
                (
                    r.alpha,
                    r.energy.as_ref().map_or(f64::NAN, |e| e.phi_hprime_l2),
                )
            })
            .collect(),
    )?;

    if let Some(last) = recs.iter().rev().find(|r| r.opt.is_some()) {
        let traj = &last.opt.as_ref().expect("checked").state;
        let g = &setup.grid;
        let nt = setup.time.nt;
        for (label, m) in [("t0", 0usize), ("tmid", nt / 2), ("tfinal", nt)] {
            let st = &traj.states[m];
            let mut s = String::from("i,j,y\n");
            for i in 0..g.nx {
                for j in 0..g.ny + 2 {
                    s.push_str(&format!("{i},{j},{}\n", fmt_f64(st.bulk.at(g, i, j))));
                }
            }
            write_file(&dir.join(format!("snapshot_{label}.csv")), &s)?;
        }
    }
    Ok(())
}

/// Plain-text key = value run summary.
pub fn write_run_summary(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in pairs {
        s.push_str(&format!("{k} = {v}\n"));
    }
    write_file(path, &s)
}

/// Machine-readable failure record.
pub fn write_failure(dir: &Path, err: &crate::error::Error) -> Result<()> {
    write_run_summary(
        &dir.join("failure.txt"),
        &[
            ("status".to_string(), "failed".to_string()),
            ("error".to_string(), err.to_string()),
        ],
    )
}
