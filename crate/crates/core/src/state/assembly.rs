//! Single source of truth for the step operator: residual rows, Jacobian
//! entries, and the forcing layout shared by the forward, linearized, and
//! adjoint solves.
//!
//! Row conventions (monolithic vector, column-major node order):
//!   - interior rows carry the bulk equation in strong form,
//!   - boundary rows carry the surface equation in strong form, with the
//!     trace flux (y_b - y_adjacent)/dy and the half-cell share (dy/2) u of
//!     the bulk forcing.
//! With these scalings the constant part of the operator is symmetric under
//! the weighted inner product (dx dy interior, dx boundary), which is what
//! makes the transposed march structurally identical to the forward one.
//!
//! Time alignment (the single source of truth for every consumer): control
//! slice m-1 forces the implicit step from t_{m-1} to t_m; nonlinear
//! coefficients of step m are evaluated at the new time level t_m; the cost
//! uses right-endpoint quadrature over m = 1..nt.

use crate::grid::{BulkField, StripGrid, SurfaceField};
use crate::linalg::StripSystem;
use crate::potentials::PotentialSet;

/// Which nonlinearity the step carries.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Mode {
    /// Scaled logarithmic potential plus smooth parts.
    Alpha { phi: f64, psi: f64 },
    /// Obstacle system rows with the multiplier handled outside: smooth
    /// parts only.
    Smooth,
}

#[inline]
fn h_prime_raw(r: f64) -> f64 {
    ((1.0 + r) / (1.0 - r)).ln()
}

#[inline]
fn h_second_raw(r: f64) -> f64 {
    2.0 / (1.0 - r * r)
}

/// Per-row forcing vector: u at interior nodes, u_Gamma plus the half-cell
/// share of u at boundary nodes.
pub fn assemble_forcing(g: &StripGrid, u_bulk: &BulkField, u_surf: &SurfaceField) -> Vec<f64> {
    let mut f = vec![0.0; g.n_bulk()];
    let half_dy = 0.5 * g.dy;
    for i in 0..g.nx {
        for j in 1..=g.ny {
            f[g.idx(i, j)] = u_bulk.at(g, i, j);
        }
        f[g.idx(i, 0)] = u_surf.at(g, 0, i) + half_dy * u_bulk.at(g, i, 0);
        let top = g.ny + 1;
        f[g.idx(i, top)] = u_surf.at(g, 1, i) + half_dy * u_bulk.at(g, i, top);
    }
    f
}

/// Strong-form residual of one implicit step, written into `out`.
pub(crate) fn residual(
    g: &StripGrid,
    dt: f64,
    pots: &PotentialSet,
    mode: Mode,
    y: &[f64],
    y_prev: &[f64],
    forcing: &[f64],
    out: &mut [f64],
) {
    let inv_dt = 1.0 / dt;
    let inv_dx2 = 1.0 / (g.dx * g.dx);
    let inv_dy2 = 1.0 / (g.dy * g.dy);
    let inv_dy = 1.0 / g.dy;
    let top = g.ny + 1;
    for i in 0..g.nx {
        let ip = (i + 1) % g.nx;
        let im = (i + g.nx - 1) % g.nx;
        for j in 1..=g.ny {
            let r = g.idx(i, j);
            let c = y[r];
            let lap = (y[g.idx(ip, j)] - 2.0 * c + y[g.idx(im, j)]) * inv_dx2
                + (y[g.idx(i, j + 1)] - 2.0 * c + y[g.idx(i, j - 1)]) * inv_dy2;
            let nl = match mode {
                Mode::Alpha { phi, .. } => phi * h_prime_raw(c) + pots.f2p.eval(c),
                Mode::Smooth => pots.f2p.eval(c),
            };
            out[r] = (c - y_prev[r]) * inv_dt - lap + nl - forcing[r];
        }
        for &(j, j_adj) in &[(0usize, 1usize), (top, g.ny)] {
            let r = g.idx(i, j);
            let c = y[r];
            let lap_g = (y[g.idx(ip, j)] - 2.0 * c + y[g.idx(im, j)]) * inv_dx2;
            let flux = (c - y[g.idx(i, j_adj)]) * inv_dy;
            let nl = match mode {
                Mode::Alpha { psi, .. } => psi * h_prime_raw(c) + pots.g2p.eval(c),
                Mode::Smooth => pots.g2p.eval(c),
            };
            out[r] = (c - y_prev[r]) * inv_dt - lap_g + flux + nl - forcing[r];
        }
    }
}

/// Enumerate the constant part of the step matrix (time term, diffusion,
/// trace flux). `emit(row, col, value)` is called once per entry.
pub(crate) fn for_each_linear_entry(
    g: &StripGrid,
    dt: f64,
    mut emit: impl FnMut(usize, usize, f64),
) {
    let inv_dt = 1.0 / dt;
    let inv_dx2 = 1.0 / (g.dx * g.dx);
    let inv_dy2 = 1.0 / (g.dy * g.dy);
    let inv_dy = 1.0 / g.dy;
    let top = g.ny + 1;
    for i in 0..g.nx {
        let ip = (i + 1) % g.nx;
        let im = (i + g.nx - 1) % g.nx;
        for j in 1..=g.ny {
            let r = g.idx(i, j);
            emit(r, r, inv_dt + 2.0 * inv_dx2 + 2.0 * inv_dy2);
            emit(r, g.idx(ip, j), -inv_dx2);
            emit(r, g.idx(im, j), -inv_dx2);
            emit(r, g.idx(i, j + 1), -inv_dy2);
            emit(r, g.idx(i, j - 1), -inv_dy2);
        }
        for &(j, j_adj) in &[(0usize, 1usize), (top, g.ny)] {
            let r = g.idx(i, j);
            emit(r, r, inv_dt + 2.0 * inv_dx2 + inv_dy);
            emit(r, g.idx(ip, j), -inv_dx2);
            emit(r, g.idx(im, j), -inv_dx2);
            emit(r, g.idx(i, j_adj), -inv_dy);
        }
    }
}

/// Nonlinear diagonal of the step Jacobian at the given iterate.
pub(crate) fn nonlinear_diagonal(
    g: &StripGrid,
    pots: &PotentialSet,
    mode: Mode,
    y: &[f64],
    out: &mut [f64],
) {
    let top = g.ny + 1;
    for i in 0..g.nx {
        for j in 1..=g.ny {
            let r = g.idx(i, j);
            out[r] = match mode {
                Mode::Alpha { phi, .. } => phi * h_second_raw(y[r]) + pots.f2pp.eval(y[r]),
                Mode::Smooth => pots.f2pp.eval(y[r]),
            };
        }
        for &j in &[0usize, top] {
            let r = g.idx(i, j);
            out[r] = match mode {
                Mode::Alpha { psi, .. } => psi * h_second_raw(y[r]) + pots.g2pp.eval(y[r]),
                Mode::Smooth => pots.g2pp.eval(y[r]),
            };
        }
    }
}

/// Build the full step Jacobian (or its transpose) at the iterate `y`.
pub(crate) fn build_jacobian(
    g: &StripGrid,
    dt: f64,
    pots: &PotentialSet,
    mode: Mode,
    y: &[f64],
    transpose: bool,
) -> StripSystem {
    let mut sys = StripSystem::new(g.nx, g.stride());
    for_each_linear_entry(g, dt, |r, c, v| {
        if transpose {
            sys.add(c, r, v);
        } else {
            sys.add(r, c, v);
        }
    });
    let mut diag = vec![0.0; g.n_bulk()];
    nonlinear_diagonal(g, pots, mode, y, &mut diag);
    for (r, d) in diag.iter().enumerate() {
        sys.add(r, r, *d);
    }
    sys
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{StripGrid, SurfaceField};

    #[test]
    fn forcing_layout() {
        let g = StripGrid::new(8, 4, 1.0, 0.5).unwrap();
        let ub = BulkField::constant(&g, 2.0);
        let us = SurfaceField::constant(&g, 1.0);
        let f = assemble_forcing(&g, &ub, &us);
        assert_eq!(f[g.idx(3, 2)], 2.0);
        assert!((f[g.idx(3, 0)] - (1.0 + 0.5 * g.dy * 2.0)).abs() < 1e-15);
        assert!((f[g.idx(3, g.ny + 1)] - (1.0 + 0.5 * g.dy * 2.0)).abs() < 1e-15);
    }

    /// The constant part of the operator must be symmetric under the row
    /// weights (dx dy interior, dx boundary); the adjoint march depends on
    /// this structure.
    #[test]
    fn linear_part_weighted_symmetric() {
        let g = StripGrid::new(6, 3, 1.0, 0.4).unwrap();
        let n = g.n_bulk();
        let mut dense = vec![0.0; n * n];
        for_each_linear_entry(&g, 0.05, |r, c, v| {
            dense[r * n + c] += v;
        });
        let row_weight = |node: usize| {
            let j = node % g.stride();
            if g.is_boundary_row(j) {
                g.dx
            } else {
                g.dx * g.dy
            }
        };
        for r in 0..n {
            for c in 0..n {
                let a = row_weight(r) * dense[r * n + c];
                let b = row_weight(c) * dense[c * n + r];
                assert!(
                    (a - b).abs() < 1e-12 * a.abs().max(1.0),
                    "asymmetry at ({r},{c}): {a} vs {b}"
                );
            }
        }
    }

    /// Row sums of the operator part vanish, so spatially homogeneous
    /// states see only the time term and the nonlinearity.
    #[test]
    fn operator_annihilates_constants() {
        let g = StripGrid::new(6, 3, 1.0, 0.4).unwrap();
        let n = g.n_bulk();
        let dt = 0.05;
        let mut row_sum = vec![0.0; n];
        for_each_linear_entry(&g, dt, |r, _c, v| {
            row_sum[r] += v;
        });
        for s in row_sum {
            assert!((s - 1.0 / dt).abs() < 1e-10);
        }
    }
}
