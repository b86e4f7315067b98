//! Cost functionals, reduced gradients, the admissible-box projection, and
//! projected-gradient optimization with Armijo backtracking.

use crate::adjoint::{solve_adjoint, AdjointPair, CostData};
use crate::error::{Error, Result};
use crate::state::{
    solve_state_alpha, ControlBounds, ControlPair, InitialData, Setup, Trajectory,
};

/// Parameters of the projected-gradient loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptParams {
    /// The stationarity tolerance is `tol_vi_factor * (1 + ||init||)`.
    pub tol_vi_factor: f64,
    pub max_iters: usize,
    pub armijo_sigma: f64,
    pub backtrack: f64,
    pub init_step: f64,
    pub max_backtracks: usize,
}

impl Default for OptParams {
    fn default() -> Self {
        Self {
            tol_vi_factor: 1e-6,
            max_iters: 500,
            armijo_sigma: 1e-4,
            backtrack: 0.5,
            init_step: 1.0,
            max_backtracks: 40,
        }
    }
}

/// One accepted optimizer iteration, as logged to the iteration CSV.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub iter: usize,
    pub cost: f64,
    pub vi_residual: f64,
    pub step_length: f64,
    pub newton_iters_total: usize,
}

/// Outcome of one optimization run.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub control: ControlPair,
    pub state: Trajectory,
    pub adjoint: AdjointPair,
    pub cost: f64,
    pub vi_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tol_vi: f64,
    pub log: Vec<IterRecord>,
    /// Copy of the starting control; rerunning from it reproduces the
    /// result bitwise.
    pub warm_start: ControlPair,
}

/// Discrete tracking cost: quadratic mismatch over the cylinder, the
/// terminal slices, and the control energy, all with the grid quadrature
/// and right-endpoint time weights.
pub fn evaluate_cost(
    setup: &Setup,
    traj: &Trajectory,
    ctrl: &ControlPair,
    cd: &CostData,
) -> Result<f64> {
    let g = &setup.grid;
    let tg = &setup.time;
    ctrl.check(g, tg)?;
    cd.validate(g, tg)?;
    if traj.states.len() != tg.nt + 1 {
        return Err(Error::Argument(format!(
            "trajectory has {} states, expected {}",
            traj.states.len(),
            tg.nt + 1
        )));
    }
    let [b1, b2, b3, b4, b5] = cd.beta;
    let mut j = 0.0;
    for m in 1..=tg.nt {
        let y = &traj.states[m];
        if b1 > 0.0 {
            let mut d = y.bulk.clone();
            for (a, z) in d.values_mut().iter_mut().zip(cd.z_q[m - 1].values()) {
                *a -= z;
            }
            j += 0.5 * b1 * tg.dt * crate::grid::inner_bulk(&d, &d, g);
        }
        if b2 > 0.0 {
            let mut d = y.surface.clone();
            for (a, z) in d.values_mut().iter_mut().zip(cd.z_sigma[m - 1].values()) {
                *a -= z;
            }
            j += 0.5 * b2 * tg.dt * crate::grid::inner_surface(&d, &d, g);
        }
        if b4 > 0.0 {
            let u = &ctrl.bulk[m - 1];
            j += 0.5 * b4 * tg.dt * crate::grid::inner_bulk(u, u, g);
        }
        if b5 > 0.0 {
            let u = &ctrl.surface[m - 1];
            j += 0.5 * b5 * tg.dt * crate::grid::inner_surface(u, u, g);
        }
    }
    if b3 > 0.0 {
        let y = traj.final_state();
        let mut d = y.bulk.clone();
        for (a, z) in d.values_mut().iter_mut().zip(cd.z_t.values()) {
            *a -= z;
        }
        j += 0.5 * b3 * crate::grid::inner_bulk(&d, &d, g);
        let mut ds = y.surface.clone();
        for (a, z) in ds.values_mut().iter_mut().zip(cd.z_gamma_t.values()) {
            *a -= z;
        }
        j += 0.5 * b3 * crate::grid::inner_surface(&ds, &ds, g);
    }
    Ok(j)
}

/// The adapted cost: the plain cost plus half the squared distance to the
/// anchor control.
pub fn evaluate_adapted_cost(
    setup: &Setup,
    traj: &Trajectory,
    ctrl: &ControlPair,
    cd: &CostData,
    anchor: &ControlPair,
) -> Result<f64> {
    let j = evaluate_cost(setup, traj, ctrl, cd)?;
    let d = ctrl.sub(anchor);
    Ok(j + 0.5 * d.inner(&d, &setup.grid, setup.time.dt))
}

/// Nodewise reduced gradient: adjoint plus control-energy terms, plus the
/// anchor difference when optimizing the adapted cost. Control slice m
/// pairs with the adjoint value at the left endpoint of its step interval.
pub fn reduced_gradient(
    setup: &Setup,
    ctrl: &ControlPair,
    adj: &AdjointPair,
    cd: &CostData,
    anchor: Option<&ControlPair>,
) -> Result<ControlPair> {
    let g = &setup.grid;
    let tg = &setup.time;
    ctrl.check(g, tg)?;
    if adj.bulk.len() != tg.nt + 1 {
        return Err(Error::Argument(format!(
            "adjoint has {} slices, expected {}",
            adj.bulk.len(),
            tg.nt + 1
        )));
    }
    let b4 = cd.beta[3];
    let b5 = cd.beta[4];
    let mut grad = ControlPair::zeros(g, tg);
    for m in 1..=tg.nt {
        let gb = &mut grad.bulk[m - 1];
        for ((gv, u), p) in gb
            .values_mut()
            .iter_mut()
            .zip(ctrl.bulk[m - 1].values())
            .zip(adj.bulk[m - 1].values())
        {
            *gv = p + b4 * u;
        }
        let gs = &mut grad.surface[m - 1];
        for ((gv, u), p) in gs
            .values_mut()
            .iter_mut()
            .zip(ctrl.surface[m - 1].values())
            .zip(adj.surface[m - 1].values())
        {
            *gv = p + b5 * u;
        }
    }
    if let Some(bar) = anchor {
        bar.check(g, tg)?;
        let mut diff = ctrl.clone();
        diff.axpy(-1.0, bar);
        grad.axpy(1.0, &diff);
    }
    Ok(grad)
}

/// Nodewise clamp onto the admissible box. Idempotent.
pub fn project_control(ctrl: &ControlPair, bounds: &ControlBounds) -> Result<ControlPair> {
    bounds.validate()?;
    let mut out = ctrl.clone();
    for f in &mut out.bulk {
        for ((v, lo), hi) in f
            .values_mut()
            .iter_mut()
            .zip(bounds.lower_bulk.values())
            .zip(bounds.upper_bulk.values())
        {
            *v = v.clamp(*lo, *hi);
        }
    }
    for f in &mut out.surface {
        for ((v, lo), hi) in f
            .values_mut()
            .iter_mut()
            .zip(bounds.lower_surf.values())
            .zip(bounds.upper_surf.values())
        {
            *v = v.clamp(*lo, *hi);
        }
    }
    Ok(out)
}

/// Stationarity measure: distance between the control and its projected
/// gradient step with unit step length. Zero exactly when the discrete
/// variational inequality holds.
pub fn vi_residual(
    setup: &Setup,
    ctrl: &ControlPair,
    grad: &ControlPair,
    bounds: &ControlBounds,
) -> Result<f64> {
    projected_step_residual(setup, ctrl, grad, bounds, 1.0)
}

/// Distance ||ctrl - clamp(ctrl - tau grad)|| in the control space.
pub fn projected_step_residual(
    setup: &Setup,
    ctrl: &ControlPair,
    grad: &ControlPair,
    bounds: &ControlBounds,
    tau: f64,
) -> Result<f64> {
    let mut stepped = ctrl.clone();
    stepped.axpy(-tau, grad);
    let proj = project_control(&stepped, bounds)?;
    let d = ctrl.sub(&proj);
    Ok(d.norm(&setup.grid, setup.time.dt))
}

/// Projected gradient with Armijo backtracking on the (adapted) reduced
/// cost. Every iterate is admissible; convergence means the projected-step
/// residual is below tolerance for step lengths 0.1, 1, and 10, so the
/// stationarity certificate is step-length invariant.
#[allow(clippy::too_many_arguments)]
pub fn optimize_p_alpha(
    setup: &Setup,
    alpha: f64,
    init: &ControlPair,
    data: &InitialData,
    cd: &CostData,
    bounds: &ControlBounds,
    anchor: Option<&ControlPair>,
    opt: &OptParams,
) -> Result<OptimizationResult> {
    let g = &setup.grid;
    let tg = &setup.time;
    init.check(g, tg)?;
    bounds.validate()?;
    cd.validate(g, tg)?;
    if !bounds.admits(init) {
        return Err(Error::Argument(
            "initial control is not admissible for the given bounds".into(),
        ));
    }
    if let Some(a) = anchor {
        if !bounds.admits(a) {
            return Err(Error::Argument("anchor control is not admissible".into()));
        }
    }
    let tol_vi = opt.tol_vi_factor * (1.0 + init.norm(g, tg.dt));

    let eval = |u: &ControlPair, traj: &Trajectory| -> Result<f64> {
        match anchor {
            Some(bar) => evaluate_adapted_cost(setup, traj, u, cd, bar),
            None => evaluate_cost(setup, traj, u, cd),
        }
    };

    let wrap = |iter: usize, e: Error| Error::Optimization {
        iter,
        source: Box::new(e),
    };

    let mut u = init.clone();
    let mut state = solve_state_alpha(setup, &u, data, alpha).map_err(|e| wrap(0, e))?;
    let mut cost = eval(&u, &state)?;
    let mut newton_total = state.newton_iters;
    let mut log: Vec<IterRecord> = Vec::new();
    let mut converged = false;
    let mut vi = f64::INFINITY;
    let mut iterations = 0;

    for iter in 0..opt.max_iters {
        iterations = iter;
        let adj = solve_adjoint(setup, &state, cd, alpha).map_err(|e| wrap(iter, e))?;
        let grad = reduced_gradient(setup, &u, &adj, cd, anchor)?;
        vi = vi_residual(setup, &u, &grad, bounds)?;
        let vi_family = [0.1, 1.0, 10.0]
            .iter()
            .map(|&tau| projected_step_residual(setup, &u, &grad, bounds, tau))
            .collect::<Result<Vec<_>>>()?;
        let vi_max = vi_family.iter().fold(0.0_f64, |m, v| m.max(*v));

        if vi_max <= tol_vi {
            converged = true;
            log.push(IterRecord {
                iter,
                cost,
                vi_residual: vi,
                step_length: 0.0,
                newton_iters_total: newton_total,
            });
            let _ = adj;
            return finish(
                setup, alpha, u, state, cd, cost, vi, iterations, converged, tol_vi, log, init,
            );
        }

        // Armijo backtracking along the projection arc.
        let mut step = opt.init_step;
        let mut accepted = false;
        for _ in 0..=opt.max_backtracks {
            let mut trial = u.clone();
            trial.axpy(-step, &grad);
            let trial = project_control(&trial, bounds)?;
            let move_sq = {
                let d = trial.sub(&u);
                d.inner(&d, g, tg.dt)
            };
            if move_sq == 0.0 {
                break; // projection arc is stuck; treat as line-search failure
            }
            let trial_state = solve_state_alpha(setup, &trial, data, alpha);
            let trial_state = match trial_state {
                Ok(t) => t,
                Err(_) => {
                    // state solve failed at this step length; shorten
                    step *= opt.backtrack;
                    continue;
                }
            };
            newton_total += trial_state.newton_iters;
            let trial_cost = eval(&trial, &trial_state)?;
            if trial_cost <= cost - opt.armijo_sigma / step * move_sq {
                u = trial;
                state = trial_state;
                cost = trial_cost;
                log.push(IterRecord {
                    iter,
                    cost,
                    vi_residual: vi,
                    step_length: step,
                    newton_iters_total: newton_total,
                });
                accepted = true;
                break;
            }
            step *= opt.backtrack;
        }
        if !accepted {
            // No admissible decrease found: stop with the current iterate.
            break;
        }
    }

    finish(
        setup, alpha, u, state, cd, cost, vi, iterations, converged, tol_vi, log, init,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    setup: &Setup,
    alpha: f64,
    u: ControlPair,
    state: Trajectory,
    cd: &CostData,
    cost: f64,
    vi: f64,
    iterations: usize,
    converged: bool,
    tol_vi: f64,
    log: Vec<IterRecord>,
    init: &ControlPair,
) -> Result<OptimizationResult> {
    let adjoint = solve_adjoint(setup, &state, cd, alpha)?;
    Ok(OptimizationResult {
        control: u,
        state,
        adjoint,
        cost,
        vi_residual: vi,
        iterations,
        converged,
        tol_vi,
        log,
        warm_start: init.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BulkField, StripGrid, SurfaceField, TimeGrid};
    use crate::util::SplitMix64;

    fn setup() -> Setup {
        Setup::new(
            StripGrid::new(8, 4, 1.0, 0.5).unwrap(),
            TimeGrid::new(0.4, 10).unwrap(),
        )
    }

    fn zero_data(s: &Setup) -> InitialData {
        InitialData::from_bulk(BulkField::zeros(&s.grid), &s.grid).unwrap()
    }

    fn random_admissible(s: &Setup, seed: u64, amp: f64) -> ControlPair {
        let mut rng = SplitMix64::new(seed);
        let mut c = ControlPair::zeros(&s.grid, &s.time);
        for f in &mut c.bulk {
            for v in f.values_mut() {
                *v = rng.uniform(-amp, amp);
            }
        }
        for f in &mut c.surface {
            for v in f.values_mut() {
                *v = rng.uniform(-amp, amp);
            }
        }
        c
    }

    #[test]
    fn cost_of_zero_everything_is_zero() {
        let s = setup();
        let g = s.grid;
        let ctrl = ControlPair::zeros(&g, &s.time);
        let init = zero_data(&s);
        let mut s2 = s.clone();
        s2.pots = crate::potentials::PotentialSet::zero();
        let traj = solve_state_alpha(&s2, &ctrl, &init, 1.0).unwrap();
        let cd = CostData::zero_targets(&g, &s.time, [1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(evaluate_cost(&s2, &traj, &ctrl, &cd).unwrap(), 0.0);
    }

    /// Constant state, zero target, beta1 = 2: the quadrature is exact for
    /// constants, so J = |Q| = lx * height * T.
    #[test]
    fn cost_constant_integrand_exact() {
        let s = setup();
        let g = s.grid;
        let ctrl = ControlPair::zeros(&g, &s.time);
        let cd = CostData::zero_targets(&g, &s.time, [2.0, 0.0, 0.0, 0.0, 0.0]);
        // hand-build a trajectory y = 1
        let one = crate::state::StatePair::from_bulk(BulkField::constant(&g, 1.0), &g).unwrap();
        let traj = Trajectory {
            states: vec![one; s.time.nt + 1],
            multipliers: None,
            alpha: Some(1.0),
            newton_iters: 0,
        };
        let j = evaluate_cost(&s, &traj, &ctrl, &cd).unwrap();
        let expect = g.lx * g.height * s.time.t_final;
        assert!((j - expect).abs() < 1e-12, "{j} vs {expect}");
    }

    /// Independent direct-summation oracle for a random small instance.
    #[test]
    fn cost_matches_direct_summation() {
        let s = setup();
        let g = s.grid;
        let mut rng = SplitMix64::new(44);
        let ctrl = random_admissible(&s, 9, 0.8);
        let cd = CostData::constant_targets(
            &g,
            &s.time,
            [0.7, 1.3, 0.4, 0.9, 1.1],
            BulkField::from_fn(&g, |_, _| rng.uniform(-0.5, 0.5)),
            SurfaceField::from_fn(&g, |_, _| rng.uniform(-0.5, 0.5)),
            BulkField::from_fn(&g, |_, _| rng.uniform(-0.5, 0.5)),
        )
        .unwrap();
        let mut states = Vec::new();
        for _ in 0..=s.time.nt {
            states.push(
                crate::state::StatePair::from_bulk(
                    BulkField::from_fn(&g, |_, _| rng.uniform(-0.9, 0.9)),
                    &g,
                )
                .unwrap(),
            );
        }
        let traj = Trajectory {
            states,
            multipliers: None,
            alpha: Some(1.0),
            newton_iters: 0,
        };
        let j = evaluate_cost(&s, &traj, &ctrl, &cd).unwrap();

        // direct summation, written independently from the same formula
        let mut expect = 0.0;
        let wj = |j: usize| {
            if j == 0 || j == g.ny + 1 {
                0.5 * g.dx * g.dy
            } else {
                g.dx * g.dy
            }
        };
        for m in 1..=s.time.nt {
            for i in 0..g.nx {
                for jj in 0..g.ny + 2 {
                    let y = traj.states[m].bulk.at(&g, i, jj);
                    let z = cd.z_q[m - 1].at(&g, i, jj);
                    expect += 0.5 * 0.7 * s.time.dt * wj(jj) * (y - z) * (y - z);
                    let u = ctrl.bulk[m - 1].at(&g, i, jj);
                    expect += 0.5 * 0.9 * s.time.dt * wj(jj) * u * u;
                }
                for c in 0..2 {
                    let y = traj.states[m].surface.at(&g, c, i);
                    let z = cd.z_sigma[m - 1].at(&g, c, i);
                    expect += 0.5 * 1.3 * s.time.dt * g.dx * (y - z) * (y - z);
                    let u = ctrl.surface[m - 1].at(&g, c, i);
                    expect += 0.5 * 1.1 * s.time.dt * g.dx * u * u;
                }
            }
        }
        for i in 0..g.nx {
            for jj in 0..g.ny + 2 {
                let y = traj.states[s.time.nt].bulk.at(&g, i, jj);
                let z = cd.z_t.at(&g, i, jj);
                expect += 0.5 * 0.4 * wj(jj) * (y - z) * (y - z);
            }
            for c in 0..2 {
                let y = traj.states[s.time.nt].surface.at(&g, c, i);
                let z = cd.z_gamma_t.at(&g, c, i);
                expect += 0.5 * 0.4 * g.dx * (y - z) * (y - z);
            }
        }
        assert!(
            (j - expect).abs() <= 1e-12 * expect.max(1.0),
            "{j} vs {expect}"
        );
    }

    #[test]
    fn adapted_cost_properties() {
        let s = setup();
        let g = s.grid;
        let init = zero_data(&s);
        let anchor = random_admissible(&s, 5, 0.5);
        let traj = solve_state_alpha(&s, &anchor, &init, 0.5).unwrap();
        let cd = CostData::zero_targets(&g, &s.time, [1.0, 0.0, 0.0, 1.0, 1.0]);

        // at the anchor the penalty vanishes
        let plain = evaluate_cost(&s, &traj, &anchor, &cd).unwrap();
        let adapted = evaluate_adapted_cost(&s, &traj, &anchor, &cd, &anchor).unwrap();
        assert_eq!(plain, adapted);

        // adding 1 on the bulk only adds |Q| / 2 to the penalty
        let mut shifted = anchor.clone();
        for f in &mut shifted.bulk {
            for v in f.values_mut() {
                *v += 1.0;
            }
        }
        let plain_sh = evaluate_cost(&s, &traj, &shifted, &cd).unwrap();
        let adapted_sh = evaluate_adapted_cost(&s, &traj, &shifted, &cd, &anchor).unwrap();
        let expect = 0.5 * g.lx * g.height * s.time.t_final;
        assert!((adapted_sh - plain_sh - expect).abs() < 1e-12);

        // adapted >= plain always
        let other = random_admissible(&s, 6, 0.5);
        let a = evaluate_adapted_cost(&s, &traj, &other, &cd, &anchor).unwrap();
        let p = evaluate_cost(&s, &traj, &other, &cd).unwrap();
        assert!(a >= p);
    }

    #[test]
    fn gradient_trivial_cases() {
        let s = setup();
        let g = s.grid;
        let cd = CostData::zero_targets(&g, &s.time, [0.0, 0.0, 0.0, 1.0, 1.0]);
        let zero_adj = AdjointPair {
            bulk: vec![BulkField::zeros(&g); s.time.nt + 1],
            surface: vec![SurfaceField::zeros(&g); s.time.nt + 1],
            alpha: 1.0,
        };
        let zero_ctrl = ControlPair::zeros(&g, &s.time);
        let cd0 = CostData::zero_targets(&g, &s.time, [1.0, 0.0, 0.0, 0.0, 0.0]);
        let grad = reduced_gradient(&s, &zero_ctrl, &zero_adj, &cd0, None).unwrap();
        assert_eq!(grad.max_abs(), 0.0);

        let half_adj = AdjointPair {
            bulk: vec![BulkField::constant(&g, 0.5); s.time.nt + 1],
            surface: vec![SurfaceField::constant(&g, 0.5); s.time.nt + 1],
            alpha: 1.0,
        };
        let grad = reduced_gradient(&s, &zero_ctrl, &half_adj, &cd, None).unwrap();
        for f in &grad.bulk {
            assert!(f.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
        }
    }

    /// Adjoint gradient against central finite differences of the reduced
    /// cost, plain and adapted, on random directions.
    #[test]
    fn gradient_matches_finite_differences() {
        let mut s = setup();
        s.params.tol_newton = 1e-12;
        let g = s.grid;
        let init = InitialData::from_bulk(
            BulkField::from_fn(&g, |i, j| 0.25 * ((i as f64) * 0.7 + (j as f64) * 1.3).sin()),
            &g,
        )
        .unwrap();
        let cd = CostData::constant_targets(
            &g,
            &s.time,
            [1.0, 0.8, 0.6, 1.0, 1.0],
            BulkField::constant(&g, 0.3),
            SurfaceField::constant(&g, 0.3),
            BulkField::constant(&g, 0.2),
        )
        .unwrap();
        let alpha = 0.5;
        let u0 = random_admissible(&s, 21, 0.4);
        let anchor = random_admissible(&s, 22, 0.3);

        for (use_anchor, seed) in [(false, 31u64), (true, 32)] {
            let base = solve_state_alpha(&s, &u0, &init, alpha).unwrap();
            let adj = solve_adjoint(&s, &base, &cd, alpha).unwrap();
            let anchor_opt = if use_anchor { Some(&anchor) } else { None };
            let grad = reduced_gradient(&s, &u0, &adj, &cd, anchor_opt).unwrap();

            let k = random_admissible(&s, seed, 1.0);
            let dir_deriv = grad.inner(&k, &g, s.time.dt);

            let eps = 1e-5;
            let eval = |c: &ControlPair| -> f64 {
                let t = solve_state_alpha(&s, c, &init, alpha).unwrap();
                match anchor_opt {
                    Some(b) => evaluate_adapted_cost(&s, &t, c, &cd, b).unwrap(),
                    None => evaluate_cost(&s, &t, c, &cd).unwrap(),
                }
            };
            let mut up = u0.clone();
            up.axpy(eps, &k);
            let mut dn = u0.clone();
            dn.axpy(-eps, &k);
            let fd = (eval(&up) - eval(&dn)) / (2.0 * eps);
            let rel = (dir_deriv - fd).abs() / dir_deriv.abs().max(1e-12);
            assert!(
                rel <= 1e-8,
                "anchored={use_anchor}: adjoint {dir_deriv} vs fd {fd}, rel {rel}"
            );
        }
    }

    /// Central differences agree with the adjoint derivative at second
    /// order in the step: shrinking eps tenfold shrinks the disagreement
    /// by about a hundred.
    #[test]
    fn gradient_fd_agreement_is_second_order_in_eps() {
        let mut s = setup();
        s.params.tol_newton = 1e-13;
        let g = s.grid;
        let init = InitialData::from_bulk(
            BulkField::from_fn(&g, |i, j| 0.3 * ((i as f64) * 1.1 + (j as f64) * 0.6).cos()),
            &g,
        )
        .unwrap();
        let cd = CostData::constant_targets(
            &g,
            &s.time,
            [1.0, 0.5, 0.5, 1.0, 1.0],
            BulkField::constant(&g, 0.3),
            SurfaceField::constant(&g, 0.3),
            BulkField::constant(&g, 0.2),
        )
        .unwrap();
        let alpha = 0.5;
        let u0 = random_admissible(&s, 61, 0.4);
        let base = solve_state_alpha(&s, &u0, &init, alpha).unwrap();
        let adj = solve_adjoint(&s, &base, &cd, alpha).unwrap();
        let grad = reduced_gradient(&s, &u0, &adj, &cd, None).unwrap();
        let k = random_admissible(&s, 62, 1.0);
        let deriv = grad.inner(&k, &g, s.time.dt);
        let eval = |c: &ControlPair| -> f64 {
            let t = solve_state_alpha(&s, c, &init, alpha).unwrap();
            evaluate_cost(&s, &t, c, &cd).unwrap()
        };
        let mut gaps = Vec::new();
        for &eps in &[1e-2, 1e-3] {
            let mut up = u0.clone();
            up.axpy(eps, &k);
            let mut dn = u0.clone();
            dn.axpy(-eps, &k);
            let fd = (eval(&up) - eval(&dn)) / (2.0 * eps);
            gaps.push((deriv - fd).abs());
        }
        let order = (gaps[0] / gaps[1]).log10();
        assert!(order >= 1.8, "order {order}, gaps {gaps:?}");
    }

    #[test]
    fn projection_examples() {
        let s = setup();
        let g = s.grid;
        let bounds = ControlBounds::symmetric(&g, 1.0);
        let big = ControlPair::constant(&g, &s.time, 5.0, -3.0);
        let p = project_control(&big, &bounds).unwrap();
        assert!(p.bulk.iter().all(|f| f.values().iter().all(|v| *v == 1.0)));
        assert!(p
            .surface
            .iter()
            .all(|f| f.values().iter().all(|v| *v == -1.0)));
        // idempotent
        let pp = project_control(&p, &bounds).unwrap();
        assert_eq!(p, pp);
        // admissible input unchanged
        let ok = random_admissible(&s, 15, 0.9);
        assert_eq!(project_control(&ok, &bounds).unwrap(), ok);
    }

    /// Nonexpansiveness of the projection in the control norm on sampled
    /// pairs.
    #[test]
    fn projection_nonexpansive() {
        let s = setup();
        let g = s.grid;
        let bounds = ControlBounds::symmetric(&g, 0.7);
        for seed in 0..10u64 {
            let a = random_admissible(&s, 100 + seed, 2.0);
            let b = random_admissible(&s, 200 + seed, 2.0);
            let pa = project_control(&a, &bounds).unwrap();
            let pb = project_control(&b, &bounds).unwrap();
            let d0 = a.sub(&b).norm(&g, s.time.dt);
            let d1 = pa.sub(&pb).norm(&g, s.time.dt);
            assert!(d1 <= d0 + 1e-14, "{d1} > {d0}");
        }
    }

    #[test]
    fn vi_residual_examples() {
        let s = setup();
        let g = s.grid;
        let bounds = ControlBounds::symmetric(&g, 10.0);
        let ctrl = ControlPair::zeros(&g, &s.time);
        let zero_grad = ControlPair::zeros(&g, &s.time);
        assert_eq!(vi_residual(&s, &ctrl, &zero_grad, &bounds).unwrap(), 0.0);

        // interior control, projection inactive: residual = ||g||
        let grad = ControlPair::constant(&g, &s.time, 0.3, -0.2);
        let r = vi_residual(&s, &ctrl, &grad, &bounds).unwrap();
        assert!((r - grad.norm(&g, s.time.dt)).abs() < 1e-12);

        // pinned at the upper bound with negative gradient: residual 0
        let tight = ControlBounds::symmetric(&g, 1.0);
        let upper = ControlPair::constant(&g, &s.time, 1.0, 1.0);
        let neg_grad = ControlPair::constant(&g, &s.time, -0.5, -0.5);
        assert_eq!(vi_residual(&s, &upper, &neg_grad, &tight).unwrap(), 0.0);
    }

    /// Control-only cost: the optimum is the projection of zero onto the
    /// box.
    #[test]
    fn optimizer_control_only_cost() {
        let s = setup();
        let g = s.grid;
        let cd = CostData::zero_targets(&g, &s.time, [0.0, 0.0, 0.0, 1.0, 1.0]);
        let bounds = ControlBounds::constant(&g, 0.3, 1.0, -1.0, -0.2, 4.0);
        let init = ControlPair::constant(&g, &s.time, 0.8, -0.9);
        let data = zero_data(&s);
        let r = optimize_p_alpha(&s, 0.5, &init, &data, &cd, &bounds, None, &OptParams::default())
            .unwrap();
        assert!(r.converged);
        assert!(r.vi_residual <= r.tol_vi);
        for f in &r.control.bulk {
            assert!(f.values().iter().all(|v| (v - 0.3).abs() < 1e-6));
        }
        for f in &r.control.surface {
            assert!(f.values().iter().all(|v| (v + 0.2).abs() < 1e-6));
        }
    }

    /// Anchored problem with zero tracking: the anchor itself is optimal
    /// and the optimizer returns it unchanged.
    #[test]
    fn optimizer_anchor_fixed_point() {
        let s = setup();
        let g = s.grid;
        let cd = CostData::zero_targets(&g, &s.time, [0.0, 0.0, 0.0, 0.0, 1e-30]);
        // note: weights must not all vanish; the surface energy term is
        // negligible but keeps the cost data valid
        let bounds = ControlBounds::symmetric(&g, 1.0);
        let anchor = random_admissible(&s, 77, 0.5);
        let data = zero_data(&s);
        let r = optimize_p_alpha(
            &s,
            0.5,
            &anchor,
            &data,
            &cd,
            &bounds,
            Some(&anchor),
            &OptParams::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        for (a, b) in r.control.bulk.iter().zip(&anchor.bulk) {
            assert_eq!(a, b);
        }
    }

    /// Armijo guarantee: accepted costs never increase, every iterate is
    /// admissible, and the final point passes a sampled-direction VI check.
    #[test]
    fn optimizer_descent_and_stationarity() {
        let s = setup();
        let g = s.grid;
        let cd = CostData::constant_targets(
            &g,
            &s.time,
            [1.0, 0.5, 0.5, 1.0, 1.0],
            BulkField::constant(&g, 0.4),
            SurfaceField::constant(&g, 0.4),
            BulkField::constant(&g, 0.4),
        )
        .unwrap();
        let bounds = ControlBounds::symmetric(&g, 1.0);
        let init = ControlPair::zeros(&g, &s.time);
        let data = zero_data(&s);
        let r = optimize_p_alpha(&s, 0.5, &init, &data, &cd, &bounds, None, &OptParams::default())
            .unwrap();
        assert!(r.converged, "vi {} tol {}", r.vi_residual, r.tol_vi);
        assert!(bounds.admits(&r.control));
        for w in r.log.windows(2) {
            assert!(w[1].cost <= w[0].cost + 1e-15, "cost increased");
        }
        // sampled-direction variational inequality
        let adj = &r.adjoint;
        let grad = reduced_gradient(&s, &r.control, adj, &cd, None).unwrap();
        let mut rng = SplitMix64::new(500);
        for _ in 0..100 {
            let mut v = ControlPair::zeros(&g, &s.time);
            for f in &mut v.bulk {
                for x in f.values_mut() {
                    *x = rng.uniform(-1.0, 1.0);
                }
            }
            for f in &mut v.surface {
                for x in f.values_mut() {
                    *x = rng.uniform(-1.0, 1.0);
                }
            }
            let d = v.sub(&r.control);
            let pairing = grad.inner(&d, &g, s.time.dt);
            assert!(pairing >= -10.0 * r.tol_vi, "VI violated: {pairing}");
        }
        // fixed-point characterization for several step lengths
        for tau in [0.1, 1.0, 10.0] {
            let res = projected_step_residual(&s, &r.control, &grad, &bounds, tau).unwrap();
            assert!(res <= r.tol_vi, "tau {tau}: residual {res}");
        }
    }
}
