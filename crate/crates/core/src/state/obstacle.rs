//! Primal-dual active set solver for the double-obstacle state system: per
//! implicit step, alternate between guessing the contact sets and solving
//! the reduced nonlinear system with the contact values pinned.

use super::assembly::{assemble_forcing, for_each_linear_entry, nonlinear_diagonal, residual, Mode};
use super::{ControlPair, InitialData, MultiplierPair, Setup, StatePair, Trajectory};
use crate::error::{Error, Result};
use crate::grid::BulkField;
use crate::linalg::StripSystem;
use crate::potentials::TOL_ACTIVE;

/// Contact classification per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Contact {
    Inactive,
    Upper,
    Lower,
}

fn classify(y: &[f64], xi: &[f64], c: f64, out: &mut [Contact]) {
    for ((o, &yi), &xii) in out.iter_mut().zip(y).zip(xi) {
        *o = if xii + c * (yi - 1.0) > 0.0 {
            Contact::Upper
        } else if xii + c * (yi + 1.0) < 0.0 {
            Contact::Lower
        } else {
            Contact::Inactive
        };
    }
}

/// Solve the double-obstacle system forward in time, producing states and
/// multiplier selections. States satisfy |y| <= 1 at contact tolerance and
/// the multipliers lie in the obstacle subdifferential nodewise.
pub fn solve_state_obstacle(
    setup: &Setup,
    ctrl: &ControlPair,
    init: &InitialData,
) -> Result<Trajectory> {
    let g = &setup.grid;
    let tg = &setup.time;
    let prm = &setup.params;
    ctrl.check(g, tg)?;
    init.bulk.check(g)?;
    init.check_admissible()?;
    let n = g.n_bulk();
    let c = prm.pdas_c;

    let mut states = Vec::with_capacity(tg.nt + 1);
    states.push(StatePair::from_bulk(init.bulk.clone(), g)?);
    let mut multipliers = Vec::with_capacity(tg.nt);

    let mut y_prev: Vec<f64> = init.bulk.values().to_vec();
    let mut xi = vec![0.0; n];
    let mut newton_total = 0usize;

    for m in 1..=tg.nt {
        let forcing = assemble_forcing(g, &ctrl.bulk[m - 1], &ctrl.surface[m - 1]);
        let mut y = y_prev.clone();
        let mut active = vec![Contact::Inactive; n];
        classify(&y, &xi, c, &mut active);
        let mut settled = false;

        for _ in 0..prm.max_pdas {
            newton_total += solve_pinned(setup, m, &active, &y_prev, &forcing, &mut y)?;
            recover_multiplier(setup, &active, &y, &y_prev, &forcing, &mut xi);
            let mut next = vec![Contact::Inactive; n];
            classify(&y, &xi, c, &mut next);
            if next == active {
                settled = true;
                break;
            }
            active = next;
        }
        if !settled {
            return Err(Error::ActiveSetCycle {
                step: m,
                iters: prm.max_pdas,
            });
        }
        // At the fixed point the inactive values must respect the obstacle.
        for (node, (&a, &yi)) in active.iter().zip(&y).enumerate() {
            if a == Contact::Inactive && yi.abs() > 1.0 + TOL_ACTIVE {
                return Err(Error::InfeasiblePin { step: m, node });
            }
        }
        let bulk = BulkField::from_values(g, y.clone())?;
        let xi_bulk = BulkField::from_values(g, xi.clone())?;
        let xi_surf = crate::grid::trace(&xi_bulk, g)?;
        states.push(StatePair::from_bulk(bulk, g)?);
        multipliers.push(MultiplierPair {
            bulk: xi_bulk,
            surface: xi_surf,
        });
        y_prev = y;
    }

    Ok(Trajectory {
        states,
        multipliers: Some(multipliers),
        alpha: None,
        newton_iters: newton_total,
    })
}

/// Newton solve of the step system with contact nodes pinned to +-1.
/// Returns the number of Newton iterations spent.
fn solve_pinned(
    setup: &Setup,
    step: usize,
    active: &[Contact],
    y_prev: &[f64],
    forcing: &[f64],
    y: &mut Vec<f64>,
) -> Result<usize> {
    let g = &setup.grid;
    let prm = &setup.params;
    let n = g.n_bulk();
    for (yi, a) in y.iter_mut().zip(active) {
        match a {
            Contact::Upper => *yi = 1.0,
            Contact::Lower => *yi = -1.0,
            Contact::Inactive => {}
        }
    }
    let mut res = vec![0.0; n];
    let mut iters = 0usize;
    loop {
        residual(
            g,
            setup.time.dt,
            &setup.pots,
            Mode::Smooth,
            y,
            y_prev,
            forcing,
            &mut res,
        );
        for (r, a) in res.iter_mut().zip(active) {
            if *a != Contact::Inactive {
                *r = 0.0;
            }
        }
        let res_norm = res.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if !res_norm.is_finite() {
            return Err(Error::Nan {
                step,
                context: "obstacle residual".into(),
            });
        }
        if res_norm <= prm.tol_newton {
            return Ok(iters);
        }
        if iters >= prm.max_newton {
            return Err(Error::NewtonFailure {
                step,
                residual: res_norm,
                iters,
            });
        }
        iters += 1;
        let mut sys = StripSystem::new(g.nx, g.stride());
        for_each_linear_entry(g, setup.time.dt, |r, c, v| {
            if active[r] == Contact::Inactive && active[c] == Contact::Inactive {
                sys.add(r, c, v);
            }
        });
        let mut diag = vec![0.0; n];
        nonlinear_diagonal(g, &setup.pots, Mode::Smooth, y, &mut diag);
        for (r, d) in diag.iter().enumerate() {
            if active[r] == Contact::Inactive {
                sys.add(r, r, *d);
            } else {
                sys.add(r, r, 1.0);
            }
        }
        let factors = sys.factor()?;
        let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
        factors.solve_in_place(&mut delta);
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::Nan {
                step,
                context: "obstacle Newton update".into(),
            });
        }
        for (yi, di) in y.iter_mut().zip(&delta) {
            *yi += di;
        }
    }
}

/// Multiplier recovery: on contact nodes the multiplier balances the
/// equation row exactly; elsewhere it vanishes.
fn recover_multiplier(
    setup: &Setup,
    active: &[Contact],
    y: &[f64],
    y_prev: &[f64],
    forcing: &[f64],
    xi: &mut [f64],
) {
    let g = &setup.grid;
    let mut res0 = vec![0.0; g.n_bulk()];
    residual(
        g,
        setup.time.dt,
        &setup.pots,
        Mode::Smooth,
        y,
        y_prev,
        forcing,
        &mut res0,
    );
    for ((x, a), r0) in xi.iter_mut().zip(active).zip(&res0) {
        *x = if *a == Contact::Inactive { 0.0 } else { -r0 };
    }
}
