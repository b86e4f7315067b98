//! State systems: the alpha-regularized equations and the limiting
//! double-obstacle system, marched by implicit Euler on the monolithic
//! bulk+surface unknown vector.

mod alpha;
pub(crate) mod assembly;
mod diagnostics;
mod obstacle;

pub use alpha::solve_state_alpha;
pub use assembly::assemble_forcing;
pub use diagnostics::{energy_diagnostics, weak_form_residual, EnergyDiagnostics};
pub use obstacle::solve_state_obstacle;

use crate::error::{Error, Result};
use crate::grid::{trace, BulkField, StripGrid, SurfaceField, TimeGrid};
use crate::potentials::{subdifferential_contains, PotentialSet, QuenchConfig};

/// Everything a solve needs besides its data: geometry, time grid,
/// potentials, quench scalings, and iteration controls.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: StripGrid,
    pub time: TimeGrid,
    pub pots: PotentialSet,
    pub quench: QuenchConfig,
    pub params: SolverParams,
}

impl Setup {
    pub fn new(grid: StripGrid, time: TimeGrid) -> Self {
        Self {
            grid,
            time,
            pots: PotentialSet::default(),
            quench: QuenchConfig::default(),
            params: SolverParams::default(),
        }
    }
}

/// Iteration controls for the nonlinear solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Max-norm residual tolerance for Newton.
    pub tol_newton: f64,
    pub max_newton: usize,
    /// Step-halving budget for the interiority safeguard.
    pub max_halvings: usize,
    /// Newton iterates are kept inside (-1+eps, 1-eps); h' is undefined
    /// outside the open interval.
    pub eps_interior: f64,
    pub max_pdas: usize,
    /// Complementarity constant in the active-set update.
    pub pdas_c: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol_newton: 1e-10,
            max_newton: 50,
            max_halvings: 60,
            eps_interior: 1e-14,
            max_pdas: 100,
            pdas_c: 1.0,
        }
    }
}

/// Bulk field together with its boundary trace. The monolithic layout
/// shares boundary rows, so the surface part is an exact copy of rows
/// j = 0 and j = ny+1.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub bulk: BulkField,
    pub surface: SurfaceField,
}

impl StatePair {
    pub fn from_bulk(bulk: BulkField, g: &StripGrid) -> Result<Self> {
        let surface = trace(&bulk, g)?;
        Ok(Self { bulk, surface })
    }
}

/// Distributed and boundary controls, one slice per implicit step. Slice
/// m-1 forces the transition from t_{m-1} to t_m, matching the
/// right-endpoint quadrature of the cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPair {
    pub bulk: Vec<BulkField>,
    pub surface: Vec<SurfaceField>,
}

impl ControlPair {
    pub fn zeros(g: &StripGrid, tg: &TimeGrid) -> Self {
        Self {
            bulk: vec![BulkField::zeros(g); tg.nt],
            surface: vec![SurfaceField::zeros(g); tg.nt],
        }
    }

    pub fn constant(g: &StripGrid, tg: &TimeGrid, bulk: f64, surf: f64) -> Self {
        Self {
            bulk: vec![BulkField::constant(g, bulk); tg.nt],
            surface: vec![SurfaceField::constant(g, surf); tg.nt],
        }
    }

    pub fn check(&self, g: &StripGrid, tg: &TimeGrid) -> Result<()> {
        if self.bulk.len() != tg.nt || self.surface.len() != tg.nt {
            return Err(Error::Argument(format!(
                "control has {} bulk / {} surface slices, expected {}",
                self.bulk.len(),
                self.surface.len(),
                tg.nt
            )));
        }
        for f in &self.bulk {
            f.check(g)?;
        }
        for f in &self.surface {
            f.check(g)?;
        }
        Ok(())
    }

    pub fn n_slices(&self) -> usize {
        self.bulk.len()
    }

    /// Weighted L2(Q) x L2(Sigma) inner product over the space-time cylinder.
    pub fn inner(&self, other: &ControlPair, g: &StripGrid, dt: f64) -> f64 {
        let mut total = 0.0;
        for (a, b) in self.bulk.iter().zip(&other.bulk) {
            total += dt * crate::grid::inner_bulk(a, b, g);
        }
        for (a, b) in self.surface.iter().zip(&other.surface) {
            total += dt * crate::grid::inner_surface(a, b, g);
        }
        total
    }

    pub fn norm(&self, g: &StripGrid, dt: f64) -> f64 {
        self.inner(self, g, dt).sqrt()
    }

    /// self += scale * other, nodewise.
    pub fn axpy(&mut self, scale: f64, other: &ControlPair) {
        for (a, b) in self.bulk.iter_mut().zip(&other.bulk) {
            for (x, y) in a.values_mut().iter_mut().zip(b.values()) {
                *x += scale * y;
            }
        }
        for (a, b) in self.surface.iter_mut().zip(&other.surface) {
            for (x, y) in a.values_mut().iter_mut().zip(b.values()) {
                *x += scale * y;
            }
        }
    }

    pub fn sub(&self, other: &ControlPair) -> ControlPair {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        let b = self.bulk.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
        let s = self.surface.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
        b.max(s)
    }
}

/// Box bounds for the admissible set, time-constant fields, plus the
/// ambient sup-norm radius R.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBounds {
    pub lower_bulk: BulkField,
    pub upper_bulk: BulkField,
    pub lower_surf: SurfaceField,
    pub upper_surf: SurfaceField,
    pub radius: f64,
}

impl ControlBounds {
    pub fn constant(g: &StripGrid, lo: f64, hi: f64, lo_s: f64, hi_s: f64, radius: f64) -> Self {
        Self {
            lower_bulk: BulkField::constant(g, lo),
            upper_bulk: BulkField::constant(g, hi),
            lower_surf: SurfaceField::constant(g, lo_s),
            upper_surf: SurfaceField::constant(g, hi_s),
            radius,
        }
    }

    /// Symmetric box [-a, a] on both components.
    pub fn symmetric(g: &StripGrid, a: f64) -> Self {
        Self::constant(g, -a, a, -a, a, 2.0 * a + 1.0)
    }

    /// Nodewise ordering check (lower <= upper), the first half of the data
    /// assumptions on the admissible set.
    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in self
            .lower_bulk
            .values()
            .iter()
            .zip(self.upper_bulk.values())
        {
            if lo > hi {
                return Err(Error::Argument(format!(
                    "invalid bounds: lower {lo} > upper {hi}"
                )));
            }
        }
        for (lo, hi) in self
            .lower_surf
            .values()
            .iter()
            .zip(self.upper_surf.values())
        {
            if lo > hi {
                return Err(Error::Argument(format!(
                    "invalid surface bounds: lower {lo} > upper {hi}"
                )));
            }
        }
        Ok(())
    }

    /// Whether a control satisfies the box at every node of every slice.
    pub fn admits(&self, ctrl: &ControlPair) -> bool {
        ctrl.bulk.iter().all(|f| {
            f.values()
                .iter()
                .zip(self.lower_bulk.values())
                .zip(self.upper_bulk.values())
                .all(|((v, lo), hi)| *v >= *lo && *v <= *hi)
        }) && ctrl.surface.iter().all(|f| {
            f.values()
                .iter()
                .zip(self.lower_surf.values())
                .zip(self.upper_surf.values())
                .all(|((v, lo), hi)| *v >= *lo && *v <= *hi)
        })
    }
}

/// Initial data for the order parameter; the surface part is the exact
/// trace of the bulk part.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub bulk: BulkField,
    pub surface: SurfaceField,
}

impl InitialData {
    pub fn from_bulk(bulk: BulkField, g: &StripGrid) -> Result<Self> {
        let surface = trace(&bulk, g)?;
        Ok(Self { bulk, surface })
    }

    /// |y0| <= 1 everywhere.
    pub fn check_admissible(&self) -> Result<()> {
        if self.bulk.max_abs() > 1.0 {
            return Err(Error::Domain(format!(
                "initial data leaves [-1, 1]: max |y0| = {}",
                self.bulk.max_abs()
            )));
        }
        Ok(())
    }
}

/// Multiplier selections for the obstacle system. The bulk field's boundary
/// rows carry the surface multiplier, mirroring the shared-row state layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierPair {
    pub bulk: BulkField,
    pub surface: SurfaceField,
}

/// Time-indexed sequence of states (t_0..t_nt), with multipliers at
/// t_1..t_nt for obstacle runs.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<StatePair>,
    pub multipliers: Option<Vec<MultiplierPair>>,
    /// Quench parameter the trajectory was solved at; None for obstacle runs.
    pub alpha: Option<f64>,
    /// Total Newton iterations spent across all steps.
    pub newton_iters: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &StatePair {
        self.states.last().expect("trajectory has nt+1 states")
    }

    pub fn max_abs(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.bulk.max_abs())
            .fold(0.0, f64::max)
    }

    /// Empirical pointwise range of the trajectory, the computable
    /// surrogate for the interior-bound constants.
    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.states {
            for v in s.bulk.values() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        (lo, hi)
    }

    /// Nodewise subdifferential membership of the stored multipliers.
    pub fn multipliers_admissible(&self, g: &StripGrid) -> Result<bool> {
        let Some(ms) = &self.multipliers else {
            return Ok(true);
        };
        for (s, m) in self.states.iter().skip(1).zip(ms) {
            for (y, xi) in s.bulk.values().iter().zip(m.bulk.values()) {
                if !subdifferential_contains(*y, *xi)? {
                    return Ok(false);
                }
            }
            let _ = g;
        }
        Ok(true)
    }
}

/// Clamp the initial data to the strict interior [-1 + alpha, 1 - alpha],
/// producing data the alpha-solver can start from.
pub fn truncate_initial_data(d: &InitialData, alpha: f64, g: &StripGrid) -> Result<InitialData> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "truncation level must lie in (0, 1), got {alpha}"
        )));
    }
    let lo = -1.0 + alpha;
    let hi = 1.0 - alpha;
    let mut bulk = d.bulk.clone();
    for v in bulk.values_mut() {
        *v = v.clamp(lo, hi);
    }
    InitialData::from_bulk(bulk, g)
}
