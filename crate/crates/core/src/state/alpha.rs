//! Implicit-Euler march for the alpha-regularized state system: a fully
//! implicit Newton solve per step with an interiority safeguard, since the
//! logarithmic term blows up at the obstacle.

use super::assembly::{assemble_forcing, build_jacobian, residual, Mode};
use super::{ControlPair, InitialData, Setup, StatePair, Trajectory};
use crate::error::{Error, Result};
use crate::grid::BulkField;
use crate::potentials::{quench_phi, quench_psi};

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Solve the regularized state system forward in time. The initial data
/// must already be strictly interior (truncate first); every produced state
/// stays strictly inside (-1, 1).
pub fn solve_state_alpha(
    setup: &Setup,
    ctrl: &ControlPair,
    init: &InitialData,
    alpha: f64,
) -> Result<Trajectory> {
    let g = &setup.grid;
    let tg = &setup.time;
    let prm = &setup.params;
    ctrl.check(g, tg)?;
    init.bulk.check(g)?;
    let phi = quench_phi(alpha, &setup.quench)?;
    let psi = quench_psi(alpha, &setup.quench)?;
    if init.bulk.max_abs() >= 1.0 {
        return Err(Error::Domain(
            "alpha solve needs strictly interior initial data; truncate first".into(),
        ));
    }
    let mode = Mode::Alpha { phi, psi };
    let n = g.n_bulk();
    let mut states = Vec::with_capacity(tg.nt + 1);
    states.push(StatePair::from_bulk(init.bulk.clone(), g)?);

    let mut y_prev: Vec<f64> = init.bulk.values().to_vec();
    let mut newton_total = 0usize;
    let interior_cap = 1.0 - prm.eps_interior;

    for m in 1..=tg.nt {
        let forcing = assemble_forcing(g, &ctrl.bulk[m - 1], &ctrl.surface[m - 1]);
        let mut y = y_prev.clone();
        let mut res = vec![0.0; n];
        let mut converged = false;
        let mut res_norm;
        for _ in 0..prm.max_newton {
            residual(g, tg.dt, &setup.pots, mode, &y, &y_prev, &forcing, &mut res);
            res_norm = max_abs(&res);
            if !res_norm.is_finite() {
                return Err(Error::Nan {
                    step: m,
                    context: "state residual".into(),
                });
            }
            if res_norm <= prm.tol_newton {
                converged = true;
                break;
            }
            newton_total += 1;
            let sys = build_jacobian(g, tg.dt, &setup.pots, mode, &y, false);
            let factors = sys.factor()?;
            let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
            factors.solve_in_place(&mut delta);
            if delta.iter().any(|d| !d.is_finite()) {
                return Err(Error::Nan {
                    step: m,
                    context: "Newton update".into(),
                });
            }
            // Step-halving safeguard: h' is undefined outside (-1, 1), so
            // the iterate must stay strictly interior.
            let mut scale = 1.0;
            let mut halvings = 0;
            loop {
                let ok = y
                    .iter()
                    .zip(&delta)
                    .all(|(yi, di)| (yi + scale * di).abs() <= interior_cap);
                if ok {
                    break;
                }
                halvings += 1;
                if halvings > prm.max_halvings {
                    return Err(Error::NewtonFailure {
                        step: m,
                        residual: res_norm,
                        iters: prm.max_newton,
                    });
                }
                scale *= 0.5;
            }
            for (yi, di) in y.iter_mut().zip(&delta) {
                *yi += scale * di;
            }
        }
        if !converged {
            // One more residual evaluation may already be below tolerance.
            residual(g, tg.dt, &setup.pots, mode, &y, &y_prev, &forcing, &mut res);
            res_norm = max_abs(&res);
            if res_norm > prm.tol_newton {
                return Err(Error::NewtonFailure {
                    step: m,
                    residual: res_norm,
                    iters: prm.max_newton,
                });
            }
        }
        let bulk = BulkField::from_values(g, y.clone())?;
        states.push(StatePair::from_bulk(bulk, g)?);
        y_prev = y;
    }

    Ok(Trajectory {
        states,
        multipliers: None,
        alpha: Some(alpha),
        newton_iters: newton_total,
    })
}
