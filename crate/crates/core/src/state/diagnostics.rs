//! Residual and energy diagnostics on computed trajectories.

use super::assembly::{assemble_forcing, residual, Mode};
use super::{ControlPair, Setup, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{
    h1_norm_bulk, h1_norm_surface, inner_bulk, inner_surface, test_field_basis, BulkField,
    SurfaceField,
};
use crate::potentials::{quench_phi, quench_psi};

/// Maximum weak-form residual of a trajectory over the fixed test-field
/// basis and all time steps. The pairing substitutes the discrete Green
/// identity, so the stiffness term is represented through the assembled
/// strong-form rows; a converged solve scores at solver tolerance, and a
/// single perturbed node is clearly visible.
pub fn weak_form_residual(setup: &Setup, traj: &Trajectory, ctrl: &ControlPair) -> Result<f64> {
    let g = &setup.grid;
    let tg = &setup.time;
    ctrl.check(g, tg)?;
    if traj.states.len() != tg.nt + 1 {
        return Err(Error::Argument(format!(
            "trajectory has {} states, expected {}",
            traj.states.len(),
            tg.nt + 1
        )));
    }
    let mode = match traj.alpha {
        Some(alpha) => Mode::Alpha {
            phi: quench_phi(alpha, &setup.quench)?,
            psi: quench_psi(alpha, &setup.quench)?,
        },
        None => Mode::Smooth,
    };
    let basis = test_field_basis(g);
    let n = g.n_bulk();
    let stride = g.stride();
    let mut rows = vec![0.0; n];
    let mut worst = 0.0_f64;
    for m in 1..=tg.nt {
        let forcing = assemble_forcing(g, &ctrl.bulk[m - 1], &ctrl.surface[m - 1]);
        residual(
            g,
            tg.dt,
            &setup.pots,
            mode,
            traj.states[m].bulk.values(),
            traj.states[m - 1].bulk.values(),
            &forcing,
            &mut rows,
        );
        if let Some(ms) = &traj.multipliers {
            for (r, xi) in rows.iter_mut().zip(ms[m - 1].bulk.values()) {
                *r += xi;
            }
        }
        for (_, zb, _zs) in &basis {
            let mut s = 0.0;
            for (node, r) in rows.iter().enumerate() {
                let j = node % stride;
                let w = if g.is_boundary_row(j) {
                    g.surf_weight()
                } else {
                    g.dx * g.dy
                };
                s += w * r * zb.values()[node];
            }
            worst = worst.max(s.abs());
        }
    }
    Ok(worst)
}

/// Discrete counterparts of the uniform energy bounds: time-derivative and
/// Laplacian norms over the cylinder, sup-in-time H1 norms, and the scaled
/// logarithmic gradient norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDiagnostics {
    pub dt_bulk_l2: f64,
    pub sup_h1_bulk: f64,
    pub lap_bulk_l2: f64,
    pub dt_surf_l2: f64,
    pub sup_h1_surf: f64,
    pub lap_surf_l2: f64,
    pub phi_hprime_l2: f64,
    pub psi_hprime_surf_l2: f64,
}

impl EnergyDiagnostics {
    pub fn components(&self) -> [(&'static str, f64); 8] {
        [
            ("dt_bulk_l2", self.dt_bulk_l2),
            ("sup_h1_bulk", self.sup_h1_bulk),
            ("lap_bulk_l2", self.lap_bulk_l2),
            ("dt_surf_l2", self.dt_surf_l2),
            ("sup_h1_surf", self.sup_h1_surf),
            ("lap_surf_l2", self.lap_surf_l2),
            ("phi_hprime_l2", self.phi_hprime_l2),
            ("psi_hprime_surf_l2", self.psi_hprime_surf_l2),
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.components().iter().all(|(_, v)| v.is_finite())
    }
}

/// Compute the energy diagnostics of an alpha-trajectory.
pub fn energy_diagnostics(setup: &Setup, traj: &Trajectory, alpha: f64) -> Result<EnergyDiagnostics> {
    let g = &setup.grid;
    let tg = &setup.time;
    let phi = quench_phi(alpha, &setup.quench)?;
    let psi = quench_psi(alpha, &setup.quench)?;
    let mut dt_bulk = 0.0;
    let mut dt_surf = 0.0;
    let mut lap_bulk = 0.0;
    let mut lap_surf = 0.0;
    let mut phi_hp = 0.0;
    let mut psi_hp = 0.0;
    let mut sup_b: f64 = 0.0;
    let mut sup_s: f64 = 0.0;

    for m in 0..=tg.nt {
        let s = &traj.states[m];
        sup_b = sup_b.max(h1_norm_bulk(&s.bulk, g));
        sup_s = sup_s.max(h1_norm_surface(&s.surface, g));
        if m == 0 {
            continue;
        }
        let prev = &traj.states[m - 1];
        let mut dot = s.bulk.clone();
        for (a, b) in dot.values_mut().iter_mut().zip(prev.bulk.values()) {
            *a = (*a - b) / tg.dt;
        }
        dt_bulk += tg.dt * inner_bulk(&dot, &dot, g);
        let mut dot_s = s.surface.clone();
        for (a, b) in dot_s.values_mut().iter_mut().zip(prev.surface.values()) {
            *a = (*a - b) / tg.dt;
        }
        dt_surf += tg.dt * inner_surface(&dot_s, &dot_s, g);

        let lap = crate::grid::apply_bulk_laplacian(&s.bulk, g)?;
        lap_bulk += tg.dt * inner_bulk(&lap, &lap, g);
        let lap_s = crate::grid::apply_surface_laplacian(&s.surface, g)?;
        lap_surf += tg.dt * inner_surface(&lap_s, &lap_s, g);

        let hp = BulkField::from_fn(g, |i, j| {
            let y = s.bulk.at(g, i, j);
            phi * ((1.0 + y) / (1.0 - y)).ln()
        });
        phi_hp += tg.dt * inner_bulk(&hp, &hp, g);
        let hp_s = SurfaceField::from_fn(g, |c, i| {
            let y = s.surface.at(g, c, i);
            psi * ((1.0 + y) / (1.0 - y)).ln()
        });
        psi_hp += tg.dt * inner_surface(&hp_s, &hp_s, g);
    }

    Ok(EnergyDiagnostics {
        dt_bulk_l2: dt_bulk.sqrt(),
        sup_h1_bulk: sup_b,
        lap_bulk_l2: lap_bulk.sqrt(),
        dt_surf_l2: dt_surf.sqrt(),
        sup_h1_surf: sup_s,
        lap_surf_l2: lap_surf.sqrt(),
        phi_hprime_l2: phi_hp.sqrt(),
        psi_hprime_surf_l2: psi_hp.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{StripGrid, TimeGrid};
    use crate::state::{solve_state_alpha, solve_state_obstacle, InitialData};

    fn setup() -> Setup {
        Setup::new(
            StripGrid::new(8, 4, 1.0, 0.5).unwrap(),
            TimeGrid::new(0.5, 10).unwrap(),
        )
    }

    #[test]
    fn trivial_trajectory_has_zero_residual_and_energy() {
        let mut s = setup();
        s.pots = crate::potentials::PotentialSet::zero();
        let g = s.grid;
        let ctrl = ControlPair::zeros(&g, &s.time);
        let init = InitialData::from_bulk(crate::grid::BulkField::zeros(&g), &g).unwrap();
        let traj = solve_state_obstacle(&s, &ctrl, &init).unwrap();
        let r = weak_form_residual(&s, &traj, &ctrl).unwrap();
        assert!(r < 1e-12, "residual {r}");
        let e = energy_diagnostics(&s, &traj, 1.0).unwrap();
        for (name, v) in e.components() {
            assert!(v.abs() < 1e-12, "{name} = {v}");
        }
    }

    #[test]
    fn converged_solves_have_small_weak_residual() {
        let s = setup();
        let g = s.grid;
        let ctrl = ControlPair::constant(&g, &s.time, 2.0, 2.0);
        let init = InitialData::from_bulk(crate::grid::BulkField::zeros(&g), &g).unwrap();

        let tr_obs = solve_state_obstacle(&s, &ctrl, &init).unwrap();
        let r_obs = weak_form_residual(&s, &tr_obs, &ctrl).unwrap();
        assert!(r_obs < 1e-9, "obstacle residual {r_obs}");

        let tr_a = solve_state_alpha(&s, &ctrl, &init, 0.5).unwrap();
        let r_a = weak_form_residual(&s, &tr_a, &ctrl).unwrap();
        assert!(r_a < 1e-9, "alpha residual {r_a}");
    }

    #[test]
    fn perturbed_state_is_detected() {
        let s = setup();
        let g = s.grid;
        let ctrl = ControlPair::constant(&g, &s.time, 2.0, 2.0);
        let init = InitialData::from_bulk(crate::grid::BulkField::zeros(&g), &g).unwrap();
        let mut traj = solve_state_obstacle(&s, &ctrl, &init).unwrap();
        let base = weak_form_residual(&s, &traj, &ctrl).unwrap();
        let mid = traj.states.len() / 2;
        let v = traj.states[mid].bulk.at(&g, 3, 2);
        traj.states[mid].bulk.set(&g, 3, 2, v + 0.1);
        let bumped = weak_form_residual(&s, &traj, &ctrl).unwrap();
        assert!(bumped > 10.0 * base.max(1e-7), "base {base}, bumped {bumped}");
    }

    #[test]
    fn energy_components_finite_and_positive_for_driven_run() {
        let s = setup();
        let g = s.grid;
        let ctrl = ControlPair::constant(&g, &s.time, 1.0, 1.0);
        let init = InitialData::from_bulk(crate::grid::BulkField::zeros(&g), &g).unwrap();
        let traj = solve_state_alpha(&s, &ctrl, &init, 0.5).unwrap();
        let e = energy_diagnostics(&s, &traj, 0.5).unwrap();
        assert!(e.all_finite());
        assert!(e.dt_bulk_l2 > 0.0);
        assert!(e.sup_h1_bulk > 0.0);
        assert!(e.phi_hprime_l2 > 0.0);
    }
}
