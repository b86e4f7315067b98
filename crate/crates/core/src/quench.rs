//! Deep-quench continuation: drive the quench parameter toward zero over a
//! schedule of optimizations (warm-started), assemble the limit
//! diagnostics, and compare against the obstacle reference solve.

use crate::adjoint::{compute_lambda, AdjointPair, CostData, LambdaPair};
use crate::error::{Error, Result};
use crate::objective::{
    optimize_p_alpha, projected_step_residual, reduced_gradient, OptParams, OptimizationResult,
};
use crate::state::{
    energy_diagnostics, solve_state_alpha, solve_state_obstacle, weak_form_residual, ControlBounds,
    ControlPair, EnergyDiagnostics, InitialData, Setup, Trajectory,
};

/// Strictly decreasing quench values in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchSchedule {
    alphas: Vec<f64>,
}

impl QuenchSchedule {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::Argument("schedule must not be empty".into()));
        }
        for w in alphas.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::Argument(format!(
                    "schedule must be strictly decreasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(Error::Argument(
                "schedule values must lie in (0, 1]".into(),
            ));
        }
        Ok(Self { alphas })
    }

    /// Geometric default: 1, 1e-1, ..., 1e-4.
    pub fn default_geometric() -> Self {
        Self::new(vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4]).expect("static schedule")
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn smallest(&self) -> f64 {
        *self.alphas.last().expect("nonempty")
    }
}

/// Everything recorded for one quench level.
#[derive(Debug, Clone)]
pub struct AlphaRecord {
    pub alpha: f64,
    pub failure: Option<String>,
    pub opt: Option<OptimizationResult>,
    pub lambda: Option<LambdaPair>,
    pub energy: Option<EnergyDiagnostics>,
    /// Complementarity pairings (bulk, surface).
    pub comp: (f64, f64),
    /// Concentration integrals (bulk, surface).
    pub conc: (f64, f64),
    pub proj_residual: Option<f64>,
    pub proj_skipped: Option<String>,
    /// Distance to the anchor (anchored mode) or to the final optimum
    /// (plain mode, filled in after the path completes).
    pub dist_to_anchor: f64,
}

/// Obstacle reference computed at the last optimal control.
#[derive(Debug, Clone)]
pub struct ObstacleRecord {
    pub trajectory: Trajectory,
    pub control: ControlPair,
    pub weak_residual: f64,
    pub cost: f64,
    /// L2(Q) distance between the smallest-alpha optimal state and the
    /// obstacle state at the same control.
    pub distance_to_last_state: f64,
}

/// The full continuation path.
#[derive(Debug, Clone)]
pub struct QuenchPath {
    pub records: Vec<AlphaRecord>,
    pub obstacle: Option<ObstacleRecord>,
    pub anchored: bool,
}

impl QuenchPath {
    pub fn last_converged(&self) -> Option<&AlphaRecord> {
        self.records
            .iter()
            .rev()
            .find(|r| r.failure.is_none() && r.opt.as_ref().is_some_and(|o| o.converged))
    }
}

/// Complementarity pairings of the quench multipliers with the adjoint:
/// space-time integrals of lambda p over the bulk and the surface. Both are
/// sums of pointwise nonnegative terms.
pub fn check_complementarity(setup: &Setup, lam: &LambdaPair, adj: &AdjointPair) -> (f64, f64) {
    let g = &setup.grid;
    let tg = &setup.time;
    let mut bulk = 0.0;
    let mut surf = 0.0;
    for m in 1..=tg.nt {
        bulk += tg.dt * crate::grid::inner_bulk(&lam.bulk[m], &adj.bulk[m], g);
        surf += tg.dt * crate::grid::inner_surface(&lam.surface[m], &adj.surface[m], g);
    }
    (bulk, surf)
}

/// Concentration check: integrals of lambda (1 - y^2) phi_test over the
/// cylinder (bulk and surface), with phi_test = t/T so it vanishes at the
/// initial time, plus the worst nodewise violation of the exact algebraic
/// identity lambda (1 - y^2) = 2 phi p (surface: 2 psi p_G).
#[derive(Debug, Clone, Copy)]
pub struct ConcentrationCheck {
    pub bulk: f64,
    pub surf: f64,
    pub max_identity_violation: f64,
}

pub fn check_concentration(
    setup: &Setup,
    base: &Trajectory,
    adj: &AdjointPair,
    lam: &LambdaPair,
    alpha: f64,
) -> Result<ConcentrationCheck> {
    let g = &setup.grid;
    let tg = &setup.time;
    let phi = crate::potentials::quench_phi(alpha, &setup.quench)?;
    let psi = crate::potentials::quench_psi(alpha, &setup.quench)?;
    let mut bulk = 0.0;
    let mut surf = 0.0;
    let mut worst = 0.0_f64;
    for m in 1..=tg.nt {
        let tfac = tg.time(m) / tg.t_final;
        let y = &base.states[m].bulk;
        let l = &lam.bulk[m];
        let p = &adj.bulk[m];
        for i in 0..g.nx {
            for j in 0..g.ny + 2 {
                let yv = y.at(g, i, j);
                let lhs = l.at(g, i, j) * (1.0 - yv * yv);
                let rhs = 2.0 * phi * p.at(g, i, j);
                worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
                bulk += tg.dt * tfac * g.bulk_weight(j) * lhs;
            }
        }
        let ys = &base.states[m].surface;
        let ls = &lam.surface[m];
        let ps = &adj.surface[m];
        for c in 0..2 {
            for i in 0..g.nx {
                let yv = ys.at(g, c, i);
                let lhs = ls.at(g, c, i) * (1.0 - yv * yv);
                let rhs = 2.0 * psi * ps.at(g, c, i);
                worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
                surf += tg.dt * tfac * g.surf_weight() * lhs;
            }
        }
    }
    Ok(ConcentrationCheck {
        bulk,
        surf,
        max_identity_violation: worst,
    })
}

/// Projection-formula check at a record: distance between the box
/// projection of the adjoint pair and the scaled optimal control, plus the
/// projected-step fixed-point residuals of the plain gradient for several
/// step lengths.
#[derive(Debug, Clone)]
pub struct ProjectionCheck {
    pub residual: Option<f64>,
    pub skipped: Option<String>,
    /// Residuals for tau = 0.1, 1, 10.
    pub fixed_point_residuals: [f64; 3],
}

pub fn check_projection_formula(
    setup: &Setup,
    opt: &OptimizationResult,
    bounds: &ControlBounds,
    cd: &CostData,
) -> Result<ProjectionCheck> {
    let g = &setup.grid;
    let tg = &setup.time;
    let b4 = cd.beta[3];
    let b5 = cd.beta[4];
    // Plain-gradient projected-step residuals (always computed).
    let grad = reduced_gradient(setup, &opt.control, &opt.adjoint, cd, None)?;
    let mut fps = [0.0; 3];
    for (k, tau) in [0.1, 1.0, 10.0].into_iter().enumerate() {
        fps[k] = projected_step_residual(setup, &opt.control, &grad, bounds, tau)?;
    }
    if b4 == 0.0 || b5 == 0.0 {
        return Ok(ProjectionCheck {
            residual: None,
            skipped: Some(format!(
                "projection identity needs positive control weights, got beta4={b4}, beta5={b5}"
            )),
            fixed_point_residuals: fps,
        });
    }
    // || clamp(p) - (-beta4 u) || over the control space, with the adjoint
    // slices aligned the same way as the gradient.
    let mut total = 0.0;
    for m in 1..=tg.nt {
        let p = &opt.adjoint.bulk[m - 1];
        let u = &opt.control.bulk[m - 1];
        let mut acc = 0.0;
        for i in 0..g.nx {
            for j in 0..g.ny + 2 {
                let node_p = p.at(g, i, j);
                let lo = bounds.lower_bulk.at(g, i, j);
                let hi = bounds.upper_bulk.at(g, i, j);
                let d = node_p.clamp(lo, hi) - (-b4 * u.at(g, i, j));
                acc += g.bulk_weight(j) * d * d;
            }
        }
        total += tg.dt * acc;
        let ps = &opt.adjoint.surface[m - 1];
        let us = &opt.control.surface[m - 1];
        let mut acc_s = 0.0;
        for c in 0..2 {
            for i in 0..g.nx {
                let node_p = ps.at(g, c, i);
                let lo = bounds.lower_surf.at(g, c, i);
                let hi = bounds.upper_surf.at(g, c, i);
                let d = node_p.clamp(lo, hi) - (-b5 * us.at(g, c, i));
                acc_s += g.surf_weight() * d * d;
            }
        }
        total += tg.dt * acc_s;
    }
    Ok(ProjectionCheck {
        residual: Some(total.sqrt()),
        skipped: None,
        fixed_point_residuals: fps,
    })
}

/// Run the continuation over the schedule. Each level is optimized from
/// the previous optimum (warm start), the initial data is truncated into
/// the strict interior (level capped at 1/2 so the largest quench values do
/// not collapse the data), and limit diagnostics are recorded per level.
/// After the schedule, the obstacle system is solved at the last optimal
/// control for the limit comparison.
#[allow(clippy::too_many_arguments)]
pub fn run_continuation(
    setup: &Setup,
    sched: &QuenchSchedule,
    cd: &CostData,
    bounds: &ControlBounds,
    anchor: Option<&ControlPair>,
    data: &InitialData,
    init: &ControlPair,
    opt: &OptParams,
    fail_fast: bool,
) -> Result<QuenchPath> {
    let g = &setup.grid;
    let tg = &setup.time;
    cd.validate(g, tg)?;
    bounds.validate()?;
    data.check_admissible()?;
    if let Some(a) = anchor {
        if !bounds.admits(a) {
            return Err(Error::Argument("anchor control is not admissible".into()));
        }
    }
    let mut records: Vec<AlphaRecord> = Vec::with_capacity(sched.alphas().len());
    let mut warm = init.clone();

    for &alpha in sched.alphas() {
        let level = alpha.min(0.5);
        let rec = (|| -> Result<AlphaRecord> {
            let data_a = crate::state::truncate_initial_data(data, level, g)?;
            let result = optimize_p_alpha(setup, alpha, &warm, &data_a, cd, bounds, anchor, opt)?;
            let lam = compute_lambda(setup, &result.state, &result.adjoint, alpha)?;
            let energy = energy_diagnostics(setup, &result.state, alpha)?;
            let comp = check_complementarity(setup, &lam, &result.adjoint);
            let conc = check_concentration(setup, &result.state, &result.adjoint, &lam, alpha)?;
            let proj = check_projection_formula(setup, &result, bounds, cd)?;
            let dist = match anchor {
                Some(bar) => result.control.sub(bar).norm(g, tg.dt),
                None => f64::NAN, // filled in after the path completes
            };
            Ok(AlphaRecord {
                alpha,
                failure: None,
                opt: Some(result),
                lambda: Some(lam),
                energy: Some(energy),
                comp,
                conc: (conc.bulk, conc.surf),
                proj_residual: proj.residual,
                proj_skipped: proj.skipped,
                dist_to_anchor: dist,
            })
        })();
        match rec {
            Ok(r) => {
                if let Some(o) = &r.opt {
                    warm = o.control.clone();
                }
                records.push(r);
            }
            Err(e) => {
                if fail_fast {
                    return Err(e);
                }
                records.push(AlphaRecord {
                    alpha,
                    failure: Some(e.to_string()),
                    opt: None,
                    lambda: None,
                    energy: None,
                    comp: (f64::NAN, f64::NAN),
                    conc: (f64::NAN, f64::NAN),
                    proj_residual: None,
                    proj_skipped: Some("record failed".into()),
                    dist_to_anchor: f64::NAN,
                });
            }
        }
    }

    // Plain mode: distances are measured against the final optimum.
    if anchor.is_none() {
        let last_ctrl = records
            .iter()
            .rev()
            .find_map(|r| r.opt.as_ref().map(|o| o.control.clone()));
        if let Some(bar) = last_ctrl {
            for r in &mut records {
                if let Some(o) = &r.opt {
                    r.dist_to_anchor = o.control.sub(&bar).norm(g, tg.dt);
                }
            }
        }
    }

    // Obstacle comparison at the last optimal control.
    let obstacle = if let Some(last) = records
        .iter()
        .rev()
        .find(|r| r.failure.is_none() && r.opt.is_some())
    {
        let last_opt = last.opt.as_ref().expect("checked");
        let ctrl = last_opt.control.clone();
        match solve_state_obstacle(setup, &ctrl, data) {
            Ok(traj) => {
                let weak = weak_form_residual(setup, &traj, &ctrl)?;
                let cost = crate::objective::evaluate_cost(setup, &traj, &ctrl, cd)?;
                let dist = crate::sensitivity::state_l2_distance(setup, &last_opt.state, &traj);
                Some(ObstacleRecord {
                    trajectory: traj,
                    control: ctrl,
                    weak_residual: weak,
                    cost,
                    distance_to_last_state: dist,
                })
            }
            Err(e) => {
                if fail_fast {
                    return Err(e);
                }
                None
            }
        }
    } else {
        None
    };

    Ok(QuenchPath {
        records,
        obstacle,
        anchored: anchor.is_some(),
    })
}

/// Convergence table of the scaled logarithmic terms toward the obstacle
/// multipliers at a fixed control: pairings against the test-field basis
/// per schedule level, the obstacle pairings, and the minimum of the
/// sampled subdifferential inequality.
#[derive(Debug, Clone)]
pub struct XiConvergence {
    /// (alpha, field name, bulk pairing, surface pairing)
    pub rows: Vec<(f64, String, f64, f64)>,
    /// (field name, bulk pairing, surface pairing) for the obstacle solve
    pub obstacle: Vec<(String, f64, f64)>,
    /// min over sampled test levels z of the bulk inequality integral
    pub subdiff_min: f64,
}

pub fn monitor_xi_convergence(
    setup: &Setup,
    path: &QuenchPath,
    fixed_control: &ControlPair,
    data: &InitialData,
) -> Result<XiConvergence> {
    let g = &setup.grid;
    let tg = &setup.time;
    let basis = crate::grid::test_field_basis(g);
    let mut rows = Vec::new();
    for rec in &path.records {
        let level = rec.alpha.min(0.5);
        let data_a = crate::state::truncate_initial_data(data, level, g)?;
        let traj = solve_state_alpha(setup, fixed_control, &data_a, rec.alpha)?;
        let phi = crate::potentials::quench_phi(rec.alpha, &setup.quench)?;
        let psi = crate::potentials::quench_psi(rec.alpha, &setup.quench)?;
        for (name, zb, zs) in &basis {
            let mut acc_b = 0.0;
            let mut acc_s = 0.0;
            for m in 1..=tg.nt {
                let y = &traj.states[m].bulk;
                let hp = crate::grid::BulkField::from_fn(g, |i, j| {
                    let v = y.at(g, i, j);
                    phi * ((1.0 + v) / (1.0 - v)).ln()
                });
                acc_b += tg.dt * crate::grid::inner_bulk(&hp, zb, g);
                let ys = &traj.states[m].surface;
                let hps = crate::grid::SurfaceField::from_fn(g, |c, i| {
                    let v = ys.at(g, c, i);
                    psi * ((1.0 + v) / (1.0 - v)).ln()
                });
                acc_s += tg.dt * crate::grid::inner_surface(&hps, zs, g);
            }
            rows.push((rec.alpha, name.clone(), acc_b, acc_s));
        }
    }

    let obs = solve_state_obstacle(setup, fixed_control, data)?;
    let ms = obs.multipliers.as_ref().expect("obstacle multipliers");
    let mut obstacle = Vec::new();
    for (name, zb, zs) in &basis {
        let mut acc_b = 0.0;
        let mut acc_s = 0.0;
        for m in 1..=tg.nt {
            acc_b += tg.dt * crate::grid::inner_bulk(&ms[m - 1].bulk, zb, g);
            acc_s += tg.dt * crate::grid::inner_surface(&ms[m - 1].surface, zs, g);
        }
        obstacle.push((name.clone(), acc_b, acc_s));
    }

    // Sampled subdifferential inequality: integral of xi (y - z) over the
    // cylinder is nonnegative for every |z| <= 1.
    let mut subdiff_min = f64::INFINITY;
    for &zlevel in &[-1.0, -0.5, 0.0, 0.5, 1.0] {
        let mut acc = 0.0;
        for m in 1..=tg.nt {
            let y = &obs.states[m].bulk;
            let xi = &ms[m - 1].bulk;
            let mut field = y.clone();
            for (v, x) in field.values_mut().iter_mut().zip(xi.values()) {
                *v = x * (*v - zlevel);
            }
            acc += tg.dt * crate::grid::integrate_bulk(&field, g)?;
        }
        subdiff_min = subdiff_min.min(acc);
    }

    Ok(XiConvergence {
        rows,
        obstacle,
        subdiff_min,
    })
}

/// Energy uniformity over the schedule tail: each component either attains
/// its maximum away from the smallest quench level or varies by less than a
/// factor two across the tail.
pub fn energy_uniformity(records: &[AlphaRecord], tail_from: f64) -> Vec<(String, bool, f64)> {
    let mut out = Vec::new();
    let ok_records: Vec<&AlphaRecord> = records.iter().filter(|r| r.energy.is_some()).collect();
    if ok_records.is_empty() {
        return out;
    }
    let names: Vec<&'static str> = ok_records[0]
        .energy
        .as_ref()
        .unwrap()
        .components()
        .iter()
        .map(|(n, _)| *n)
        .collect();
    for (k, name) in names.iter().enumerate() {
        let vals: Vec<(f64, f64)> = ok_records
            .iter()
            .map(|r| (r.alpha, r.energy.as_ref().unwrap().components()[k].1))
            .collect();
        let (max_alpha, _) = vals
            .iter()
            .fold((f64::NAN, f64::NEG_INFINITY), |(ma, mv), &(a, v)| {
                if v > mv {
                    (a, v)
                } else {
                    (ma, mv)
                }
            });
        let smallest = vals.iter().map(|&(a, _)| a).fold(f64::INFINITY, f64::min);
        let tail: Vec<f64> = vals
            .iter()
            .filter(|&&(a, _)| a <= tail_from)
            .map(|&(_, v)| v)
            .collect();
        let tail_ratio = if tail.len() >= 2 {
            let mx = tail.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let mn = tail.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            if mn > 0.0 {
                mx / mn
            } else if mx <= 1e-14 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            1.0
        };
        let ok = max_alpha > smallest || tail_ratio < 2.0;
        out.push((name.to_string(), ok, tail_ratio));
    }
    out
}
