//! Adjoint system: the exact transpose of the discrete forward
//! linearization, marched backward from the terminal condition, plus the
//! quench multipliers assembled from it.
//!
//! Variable convention: the multiplier of the step equation from t_{m-1} to
//! t_m, rescaled by the row weights, is stored as the adjoint value at
//! t_{m-1}; the terminal slice at t_nt holds the terminal condition
//! exactly. With this alignment the reduced gradient of the step-m control
//! slice reads p(t_{m-1}) + beta u(t_m), nodewise, including the boundary
//! rows (where the exported bulk field carries the surface adjoint, exactly
//! trace-coupled).

use crate::error::{Error, Result};
use crate::grid::{trace, BulkField, StripGrid, SurfaceField, TimeGrid};
use crate::potentials::{quench_phi, quench_psi};
use crate::state::{assembly, Setup, Trajectory};

/// Tracking weights and target profiles of the cost functional.
#[derive(Debug, Clone)]
pub struct CostData {
    /// beta1..beta5: bulk tracking, surface tracking, terminal tracking,
    /// bulk control energy, surface control energy.
    pub beta: [f64; 5],
    /// Bulk target on the cylinder, one slice per step (right endpoints).
    pub z_q: Vec<BulkField>,
    /// Surface target on the lateral cylinder, one slice per step.
    pub z_sigma: Vec<SurfaceField>,
    /// Terminal bulk target.
    pub z_t: BulkField,
    /// Terminal surface target; must equal the trace of `z_t`.
    pub z_gamma_t: SurfaceField,
}

impl CostData {
    /// Time-constant targets from single fields.
    pub fn constant_targets(
        g: &StripGrid,
        tg: &TimeGrid,
        beta: [f64; 5],
        z_q: BulkField,
        z_sigma: SurfaceField,
        z_t: BulkField,
    ) -> Result<Self> {
        let z_gamma_t = trace(&z_t, g)?;
        Ok(Self {
            beta,
            z_q: vec![z_q; tg.nt],
            z_sigma: vec![z_sigma; tg.nt],
            z_t,
            z_gamma_t,
        })
    }

    /// All-zero targets with the given weights.
    pub fn zero_targets(g: &StripGrid, tg: &TimeGrid, beta: [f64; 5]) -> Self {
        Self {
            beta,
            z_q: vec![BulkField::zeros(g); tg.nt],
            z_sigma: vec![SurfaceField::zeros(g); tg.nt],
            z_t: BulkField::zeros(g),
            z_gamma_t: SurfaceField::zeros(g),
        }
    }

    pub fn validate(&self, g: &StripGrid, tg: &TimeGrid) -> Result<()> {
        if self.beta.iter().any(|b| *b < 0.0 || !b.is_finite()) {
            return Err(Error::Argument(format!(
                "cost weights must be nonnegative and finite, got {:?}",
                self.beta
            )));
        }
        if self.beta.iter().all(|b| *b == 0.0) {
            return Err(Error::Argument("cost weights all vanish".into()));
        }
        if self.z_q.len() != tg.nt || self.z_sigma.len() != tg.nt {
            return Err(Error::Argument(format!(
                "targets need {} slices, got {} bulk / {} surface",
                tg.nt,
                self.z_q.len(),
                self.z_sigma.len()
            )));
        }
        for f in &self.z_q {
            f.check(g)?;
        }
        for f in &self.z_sigma {
            f.check(g)?;
        }
        self.z_t.check(g)?;
        self.z_gamma_t.check(g)?;
        // Terminal compatibility: the surface target is the exact trace of
        // the bulk target, which is what makes the terminal adjoint value
        // well defined on the shared rows.
        let tr = trace(&self.z_t, g)?;
        for k in 0..g.n_surface() {
            if tr.values()[k] != self.z_gamma_t.values()[k] {
                return Err(Error::Argument(format!(
                    "terminal targets incompatible at surface node {k}"
                )));
            }
        }
        Ok(())
    }
}

/// Time-indexed adjoint fields with exact trace coupling; `alpha` records
/// the quench level of the base trajectory.
#[derive(Debug, Clone)]
pub struct AdjointPair {
    pub bulk: Vec<BulkField>,
    pub surface: Vec<SurfaceField>,
    pub alpha: f64,
}

/// Quench multipliers: bulk part phi h''(y) p on every node, surface part
/// psi h''(y_G) p_G.
#[derive(Debug, Clone)]
pub struct LambdaPair {
    pub bulk: Vec<BulkField>,
    pub surface: Vec<SurfaceField>,
    pub alpha: f64,
}

/// Solve the adjoint system backward in time: transposed Newton-final
/// matrices, tracking sources with the same quadrature weights as the cost,
/// and terminal values set exactly.
pub fn solve_adjoint(
    setup: &Setup,
    base: &Trajectory,
    cd: &CostData,
    alpha: f64,
) -> Result<AdjointPair> {
    let g = &setup.grid;
    let tg = &setup.time;
    cd.validate(g, tg)?;
    match base.alpha {
        Some(a) if a == alpha => {}
        _ => {
            return Err(Error::Argument(
                "adjoint needs a base trajectory solved at the same alpha".into(),
            ))
        }
    }
    let phi = quench_phi(alpha, &setup.quench)?;
    let psi = quench_psi(alpha, &setup.quench)?;
    let mode = assembly::Mode::Alpha { phi, psi };
    let n = g.n_bulk();
    let stride = g.stride();
    let [b1, b2, b3, _, _] = cd.beta;

    let row_weight = |node: usize| -> f64 {
        let j = node % stride;
        if g.is_boundary_row(j) {
            g.surf_weight()
        } else {
            g.dx * g.dy
        }
    };
    let bulk_quad_weight = |node: usize| -> f64 {
        let j = node % stride;
        g.bulk_weight(j)
    };

    // Terminal condition, exact: p(T) = b3 (y(T) - z_T) with the surface
    // rows reading b3 (y_G(T) - z_{G,T}) through the trace compatibility.
    let y_final = base.states[tg.nt].bulk.values();
    let mut p_terminal = vec![0.0; n];
    for (r, p) in p_terminal.iter_mut().enumerate() {
        *p = b3 * (y_final[r] - cd.z_t.values()[r]);
    }

    let mut bulk: Vec<BulkField> = vec![BulkField::zeros(g); tg.nt + 1];
    let mut surface: Vec<SurfaceField> = vec![SurfaceField::zeros(g); tg.nt + 1];
    let terminal_field = BulkField::from_values(g, p_terminal.clone())?;
    surface[tg.nt] = trace(&terminal_field, g)?;
    bulk[tg.nt] = terminal_field;

    // Backward march in the raw multiplier variable q; p = -q / (dt w_row).
    let mut q_next: Vec<f64> = Vec::new();
    for m in (1..=tg.nt).rev() {
        let y_m = base.states[m].bulk.values();
        let mut rhs = vec![0.0; n];
        for r in 0..n {
            let j = r % stride;
            let mut dj = b1 * bulk_quad_weight(r) * (y_m[r] - cd.z_q[m - 1].values()[r]);
            if g.is_boundary_row(j) {
                let k = surface_index_of(g, r);
                dj += b2 * g.surf_weight() * (y_m[r] - cd.z_sigma[m - 1].values()[k]);
            }
            rhs[r] = -tg.dt * dj;
        }
        if m == tg.nt {
            // Terminal cost enters as the inflow of the last step.
            for r in 0..n {
                let j = r % stride;
                let mut w = bulk_quad_weight(r);
                if g.is_boundary_row(j) {
                    w += g.surf_weight();
                }
                rhs[r] -= w * p_terminal[r];
            }
        } else {
            for (r, q) in rhs.iter_mut().zip(&q_next) {
                *r += q / tg.dt;
            }
        }
        let sys = assembly::build_jacobian(g, tg.dt, &setup.pots, mode, y_m, true);
        let factors = sys.factor()?;
        factors.solve_in_place(&mut rhs);
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Nan {
                step: m,
                context: "adjoint solve".into(),
            });
        }
        let mut p_m = vec![0.0; n];
        for (r, p) in p_m.iter_mut().enumerate() {
            *p = -rhs[r] / (tg.dt * row_weight(r));
        }
        let field = BulkField::from_values(g, p_m)?;
        surface[m - 1] = trace(&field, g)?;
        bulk[m - 1] = field;
        q_next = rhs;
    }

    Ok(AdjointPair {
        bulk,
        surface,
        alpha,
    })
}

fn surface_index_of(g: &StripGrid, node: usize) -> usize {
    let stride = g.stride();
    let i = node / stride;
    let j = node % stride;
    let circle = if j == 0 { 0 } else { 1 };
    g.surf_idx(circle, i)
}

/// Assemble the quench multipliers from a base trajectory and its adjoint:
/// nodewise products of the scaled curvature of the logarithmic potential
/// with the adjoint fields.
pub fn compute_lambda(
    setup: &Setup,
    base: &Trajectory,
    adj: &AdjointPair,
    alpha: f64,
) -> Result<LambdaPair> {
    let g = &setup.grid;
    let tg = &setup.time;
    if base.states.len() != adj.bulk.len() {
        return Err(Error::Argument(format!(
            "trajectory has {} states but adjoint has {} slices",
            base.states.len(),
            adj.bulk.len()
        )));
    }
    let phi = quench_phi(alpha, &setup.quench)?;
    let psi = quench_psi(alpha, &setup.quench)?;
    let mut bulk = Vec::with_capacity(tg.nt + 1);
    let mut surface = Vec::with_capacity(tg.nt + 1);
    for m in 0..=tg.nt {
        let y = &base.states[m].bulk;
        let p = &adj.bulk[m];
        let lam = BulkField::from_fn(g, |i, j| {
            let yv = y.at(g, i, j);
            phi * (2.0 / (1.0 - yv * yv)) * p.at(g, i, j)
        });
        let y_s = &base.states[m].surface;
        let p_s = &adj.surface[m];
        let lam_s = SurfaceField::from_fn(g, |c, i| {
            let yv = y_s.at(g, c, i);
            psi * (2.0 / (1.0 - yv * yv)) * p_s.at(g, c, i)
        });
        bulk.push(lam);
        surface.push(lam_s);
    }
    Ok(LambdaPair {
        bulk,
        surface,
        alpha,
    })
}

/// Dual-pairing surrogate: the multipliers tested against the fixed basis
/// fields with the time factor t/T (vanishing at t = 0). One row per basis
/// field: (name, bulk pairing, surface pairing).
pub fn lambda_pairing_table(setup: &Setup, lam: &LambdaPair) -> Vec<(String, f64, f64)> {
    let g = &setup.grid;
    let tg = &setup.time;
    let basis = crate::grid::test_field_basis(g);
    let mut out = Vec::with_capacity(basis.len());
    for (name, zb, zs) in &basis {
        let mut acc_b = 0.0;
        let mut acc_s = 0.0;
        for m in 1..=tg.nt {
            let tfac = tg.time(m) / tg.t_final;
            acc_b += tg.dt * tfac * crate::grid::inner_bulk(&lam.bulk[m], zb, g);
            acc_s += tg.dt * tfac * crate::grid::inner_surface(&lam.surface[m], zs, g);
        }
        out.push((name.clone(), acc_b, acc_s));
    }
    out
}
