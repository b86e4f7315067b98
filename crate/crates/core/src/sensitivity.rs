//! Linearized state system: the directional derivative of the discrete
//! control-to-state map. Coefficients are frozen from the base trajectory
//! at the new time level of each step, exactly matching the Newton
//! linearization of the forward scheme, so the Taylor remainder of the
//! discrete map is genuinely second order.

use crate::error::{Error, Result};
use crate::grid::{trace, BulkField, SurfaceField};
use crate::potentials::{quench_phi, quench_psi};
use crate::state::{assemble_forcing, ControlPair, Setup, Trajectory};

/// Time-indexed linearized state with zero initial data and exact trace
/// coupling.
#[derive(Debug, Clone)]
pub struct LinearizedPair {
    pub bulk: Vec<BulkField>,
    pub surface: Vec<SurfaceField>,
    pub alpha: f64,
}

impl LinearizedPair {
    pub fn final_bulk(&self) -> &BulkField {
        self.bulk.last().expect("nt+1 slices")
    }
}

/// Solve the linearized system along `direction` around `base`.
pub fn solve_linearized(
    setup: &Setup,
    base: &Trajectory,
    direction: &ControlPair,
    alpha: f64,
) -> Result<LinearizedPair> {
    let g = &setup.grid;
    let tg = &setup.time;
    direction.check(g, tg)?;
    match base.alpha {
        Some(a) if a == alpha => {}
        Some(a) => {
            return Err(Error::Argument(format!(
                "base trajectory was solved at alpha = {a}, requested {alpha}"
            )))
        }
        None => {
            return Err(Error::Argument(
                "base trajectory is an obstacle solve; the linearization needs an alpha solve"
                    .into(),
            ))
        }
    }
    if base.states.len() != tg.nt + 1 {
        return Err(Error::Argument(format!(
            "base trajectory has {} states, expected {}",
            base.states.len(),
            tg.nt + 1
        )));
    }
    let phi = quench_phi(alpha, &setup.quench)?;
    let psi = quench_psi(alpha, &setup.quench)?;
    let mode = crate::state::assembly::Mode::Alpha { phi, psi };

    let n = g.n_bulk();
    let mut bulk = Vec::with_capacity(tg.nt + 1);
    let mut surface = Vec::with_capacity(tg.nt + 1);
    bulk.push(BulkField::zeros(g));
    surface.push(SurfaceField::zeros(g));

    let mut prev = vec![0.0; n];
    for m in 1..=tg.nt {
        let sys = crate::state::assembly::build_jacobian(
            g,
            tg.dt,
            &setup.pots,
            mode,
            base.states[m].bulk.values(),
            false,
        );
        let forcing = assemble_forcing(g, &direction.bulk[m - 1], &direction.surface[m - 1]);
        let mut rhs: Vec<f64> = forcing;
        for (r, p) in rhs.iter_mut().zip(&prev) {
            *r += p / tg.dt;
        }
        let factors = sys.factor()?;
        factors.solve_in_place(&mut rhs);
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Nan {
                step: m,
                context: "linearized solve".into(),
            });
        }
        let field = BulkField::from_values(g, rhs.clone())?;
        surface.push(trace(&field, g)?);
        bulk.push(field);
        prev = rhs;
    }
    Ok(LinearizedPair {
        bulk,
        surface,
        alpha,
    })
}

/// Weighted L2(Q) norm of the difference of two trajectories' bulk parts,
/// right-endpoint in time.
pub fn state_l2_distance(setup: &Setup, a: &Trajectory, b: &Trajectory) -> f64 {
    let g = &setup.grid;
    let mut total = 0.0;
    for (sa, sb) in a.states.iter().zip(&b.states).skip(1) {
        let mut diff = sa.bulk.clone();
        for (x, y) in diff.values_mut().iter_mut().zip(sb.bulk.values()) {
            *x -= y;
        }
        total += setup.time.dt * crate::grid::inner_bulk(&diff, &diff, g);
    }
    total.sqrt()
}
