//! Periodic-strip geometry and the discrete operators built on it.
//!
//! The bulk domain is a rectangle of width `lx` and height `height`,
//! periodic in x. Its boundary consists of the two horizontal edges; each is
//! a closed curve, so surface diffusion along it is a periodic 1-D second
//! difference. Nodes are laid out on an `nx x (ny+2)` lattice: row `j = 0`
//! is the bottom boundary circle, rows `1..=ny` are interior, row `j = ny+1`
//! is the top boundary circle. Boundary rows are shared unknowns, which
//! makes the trace coupling between bulk and surface fields exact by
//! construction.
//!
//! Storage is column-major (`idx = i*(ny+2) + j`) so that the monolithic
//! bulk+surface systems assembled elsewhere stay narrowly banded.

use crate::error::{Error, Result};

/// Discretization of the periodic strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripGrid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub height: f64,
    pub dx: f64,
    pub dy: f64,
}

impl StripGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, height: f64) -> Result<Self> {
        if nx < 4 {
            return Err(Error::Grid(format!("nx must be >= 4, got {nx}")));
        }
        if ny < 2 {
            return Err(Error::Grid(format!("ny must be >= 2, got {ny}")));
        }
        if !(lx > 0.0) || !(height > 0.0) {
            return Err(Error::Grid(format!(
                "lx and height must be positive, got lx={lx}, height={height}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            height,
            dx: lx / nx as f64,
            dy: height / (ny + 1) as f64,
        })
    }

    /// Number of bulk nodes, boundary rows included.
    pub fn n_bulk(&self) -> usize {
        self.nx * (self.ny + 2)
    }

    /// Number of boundary nodes (two circles).
    pub fn n_surface(&self) -> usize {
        2 * self.nx
    }

    /// Rows per column in the column-major layout.
    pub fn stride(&self) -> usize {
        self.ny + 2
    }

    /// Flat index of bulk node (i, j), `i` wrapping modulo nx.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j < self.ny + 2);
        (i % self.nx) * self.stride() + j
    }

    /// Flat index of surface node `i` on `circle` (0 = bottom, 1 = top).
    #[inline]
    pub fn surf_idx(&self, circle: usize, i: usize) -> usize {
        debug_assert!(circle < 2);
        circle * self.nx + (i % self.nx)
    }

    /// Whether row `j` is one of the two boundary circles.
    #[inline]
    pub fn is_boundary_row(&self, j: usize) -> bool {
        j == 0 || j == self.ny + 1
    }

    /// The bulk node index of surface node `k`.
    #[inline]
    pub fn bulk_index_of_surface(&self, k: usize) -> usize {
        let circle = k / self.nx;
        let i = k % self.nx;
        let j = if circle == 0 { 0 } else { self.ny + 1 };
        self.idx(i, j)
    }

    /// x-coordinate of column i.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    /// y-coordinate of row j (0 at the bottom circle, `height` at the top).
    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    /// Trapezoid-in-y quadrature weight of row j (area element included).
    #[inline]
    pub fn bulk_weight(&self, j: usize) -> f64 {
        if self.is_boundary_row(j) {
            0.5 * self.dx * self.dy
        } else {
            self.dx * self.dy
        }
    }

    /// Surface quadrature weight (uniform).
    #[inline]
    pub fn surf_weight(&self) -> f64 {
        self.dx
    }
}

/// Uniform time grid for the implicit march.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub nt: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, nt: usize) -> Result<Self> {
        if nt < 1 {
            return Err(Error::Grid(format!("nt must be >= 1, got {nt}")));
        }
        if !(t_final > 0.0) {
            return Err(Error::Grid(format!("t_final must be positive, got {t_final}")));
        }
        Ok(Self {
            t_final,
            nt,
            dt: t_final / nt as f64,
        })
    }

    /// Node time t_m = m * dt.
    pub fn time(&self, m: usize) -> f64 {
        if m == self.nt {
            self.t_final
        } else {
            m as f64 * self.dt
        }
    }
}

/// One value per bulk node, boundary rows included.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl BulkField {
    pub fn zeros(g: &StripGrid) -> Self {
        Self {
            nx: g.nx,
            ny: g.ny,
            values: vec![0.0; g.n_bulk()],
        }
    }

    pub fn constant(g: &StripGrid, c: f64) -> Self {
        Self {
            nx: g.nx,
            ny: g.ny,
            values: vec![c; g.n_bulk()],
        }
    }

    pub fn from_fn(g: &StripGrid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(g);
        for i in 0..g.nx {
            for j in 0..g.ny + 2 {
                out.values[g.idx(i, j)] = f(i, j);
            }
        }
        out
    }

    pub fn from_values(g: &StripGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.n_bulk() {
            return Err(Error::Argument(format!(
                "bulk field needs {} values, got {}",
                g.n_bulk(),
                values.len()
            )));
        }
        Ok(Self {
            nx: g.nx,
            ny: g.ny,
            values,
        })
    }

    pub fn matches(&self, g: &StripGrid) -> bool {
        self.nx == g.nx && self.ny == g.ny
    }

    pub fn check(&self, g: &StripGrid) -> Result<()> {
        if !self.matches(g) {
            return Err(Error::Argument(format!(
                "bulk field sized {}x{} does not match grid {}x{}",
                self.nx, self.ny, g.nx, g.ny
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, g: &StripGrid, i: usize, j: usize) -> f64 {
        self.values[g.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, g: &StripGrid, i: usize, j: usize, v: f64) {
        self.values[g.idx(i, j)] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// One value per boundary node: circle 0 (bottom) then circle 1 (top).
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    nx: usize,
    values: Vec<f64>,
}

impl SurfaceField {
    pub fn zeros(g: &StripGrid) -> Self {
        Self {
            nx: g.nx,
            values: vec![0.0; g.n_surface()],
        }
    }

    pub fn constant(g: &StripGrid, c: f64) -> Self {
        Self {
            nx: g.nx,
            values: vec![c; g.n_surface()],
        }
    }

    pub fn from_fn(g: &StripGrid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(g);
        for circle in 0..2 {
            for i in 0..g.nx {
                out.values[g.surf_idx(circle, i)] = f(circle, i);
            }
        }
        out
    }

    pub fn matches(&self, g: &StripGrid) -> bool {
        self.nx == g.nx
    }

    pub fn check(&self, g: &StripGrid) -> Result<()> {
        if !self.matches(g) {
            return Err(Error::Argument(format!(
                "surface field sized for nx={} does not match grid nx={}",
                self.nx, g.nx
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, g: &StripGrid, circle: usize, i: usize) -> f64 {
        self.values[g.surf_idx(circle, i)]
    }

    #[inline]
    pub fn set(&mut self, g: &StripGrid, circle: usize, i: usize, v: f64) {
        self.values[g.surf_idx(circle, i)] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Five-point Laplacian, periodic in x, on interior rows. Boundary-row
/// entries of the result are zero: those rows carry the surface equation and
/// are handled by the monolithic assembly.
pub fn apply_bulk_laplacian(f: &BulkField, g: &StripGrid) -> Result<BulkField> {
    f.check(g)?;
    let mut out = BulkField::zeros(g);
    let inv_dx2 = 1.0 / (g.dx * g.dx);
    let inv_dy2 = 1.0 / (g.dy * g.dy);
    for i in 0..g.nx {
        let im = (i + g.nx - 1) % g.nx;
        let ip = (i + 1) % g.nx;
        for j in 1..=g.ny {
            let c = f.at(g, i, j);
            let lap = (f.at(g, ip, j) - 2.0 * c + f.at(g, im, j)) * inv_dx2
                + (f.at(g, i, j + 1) - 2.0 * c + f.at(g, i, j - 1)) * inv_dy2;
            out.set(g, i, j, lap);
        }
    }
    Ok(out)
}

/// Periodic three-point second difference along each boundary circle.
pub fn apply_surface_laplacian(f: &SurfaceField, g: &StripGrid) -> Result<SurfaceField> {
    f.check(g)?;
    let mut out = SurfaceField::zeros(g);
    let inv_dx2 = 1.0 / (g.dx * g.dx);
    for circle in 0..2 {
        for i in 0..g.nx {
            let im = (i + g.nx - 1) % g.nx;
            let ip = (i + 1) % g.nx;
            let lap =
                (f.at(g, circle, ip) - 2.0 * f.at(g, circle, i) + f.at(g, circle, im)) * inv_dx2;
            out.set(g, circle, i, lap);
        }
    }
    Ok(out)
}

/// Copy the two boundary rows of a bulk field into a surface field.
pub fn trace(f: &BulkField, g: &StripGrid) -> Result<SurfaceField> {
    f.check(g)?;
    let mut out = SurfaceField::zeros(g);
    for i in 0..g.nx {
        out.set(g, 0, i, f.at(g, i, 0));
        out.set(g, 1, i, f.at(g, i, g.ny + 1));
    }
    Ok(out)
}

/// Outward normal derivative on both circles by the second-order one-sided
/// stencil (3 f0 - 4 f1 + f2) / (2 dy), exact on quadratics in y.
pub fn normal_derivative(f: &BulkField, g: &StripGrid) -> Result<SurfaceField> {
    f.check(g)?;
    let mut out = SurfaceField::zeros(g);
    let c = 1.0 / (2.0 * g.dy);
    let top = g.ny + 1;
    for i in 0..g.nx {
        // Bottom circle: outward normal is -e_y, rows 0,1,2.
        let dn_bottom = (3.0 * f.at(g, i, 0) - 4.0 * f.at(g, i, 1) + f.at(g, i, 2)) * c;
        // Top circle: outward normal is +e_y, rows ny+1, ny, ny-1.
        let dn_top = (3.0 * f.at(g, i, top) - 4.0 * f.at(g, i, top - 1) + f.at(g, i, top - 2)) * c;
        out.set(g, 0, i, dn_bottom);
        out.set(g, 1, i, dn_top);
    }
    Ok(out)
}

/// Trapezoid-in-y, uniform-in-x quadrature over the strip; exact for fields
/// constant in y and for single x-harmonics.
pub fn integrate_bulk(f: &BulkField, g: &StripGrid) -> Result<f64> {
    f.check(g)?;
    let mut total = 0.0;
    for i in 0..g.nx {
        for j in 0..g.ny + 2 {
            total += g.bulk_weight(j) * f.at(g, i, j);
        }
    }
    Ok(total)
}

/// Uniform quadrature over both circles.
pub fn integrate_surface(f: &SurfaceField, g: &StripGrid) -> Result<f64> {
    f.check(g)?;
    Ok(f.values().iter().sum::<f64>() * g.surf_weight())
}

/// Weighted L2 inner product on the bulk.
pub fn inner_bulk(f: &BulkField, h: &BulkField, g: &StripGrid) -> f64 {
    let mut total = 0.0;
    for i in 0..g.nx {
        for j in 0..g.ny + 2 {
            total += g.bulk_weight(j) * f.at(g, i, j) * h.at(g, i, j);
        }
    }
    total
}

/// L2 inner product on the two circles.
pub fn inner_surface(f: &SurfaceField, h: &SurfaceField, g: &StripGrid) -> f64 {
    f.values()
        .iter()
        .zip(h.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * g.surf_weight()
}

/// Discrete gradient pairing sum over x- and y-cells with trapezoidal row
/// weights, the stiffness form behind the H1 norms and the Green identity.
pub fn grad_inner_bulk(f: &BulkField, h: &BulkField, g: &StripGrid) -> f64 {
    let mut total = 0.0;
    let inv_dx = 1.0 / g.dx;
    let inv_dy = 1.0 / g.dy;
    // x-cells along every row: half weight on boundary rows.
    for i in 0..g.nx {
        let ip = (i + 1) % g.nx;
        for j in 0..g.ny + 2 {
            let w = g.bulk_weight(j);
            let fx = (f.at(g, ip, j) - f.at(g, i, j)) * inv_dx;
            let hx = (h.at(g, ip, j) - h.at(g, i, j)) * inv_dx;
            total += w * fx * hx;
        }
    }
    // y-cells between consecutive rows, full weight each.
    for i in 0..g.nx {
        for j in 0..=g.ny {
            let fy = (f.at(g, i, j + 1) - f.at(g, i, j)) * inv_dy;
            let hy = (h.at(g, i, j + 1) - h.at(g, i, j)) * inv_dy;
            total += g.dx * g.dy * fy * hy;
        }
    }
    total
}

/// Periodic gradient pairing along each circle.
pub fn grad_inner_surface(f: &SurfaceField, h: &SurfaceField, g: &StripGrid) -> f64 {
    let mut total = 0.0;
    let inv_dx = 1.0 / g.dx;
    for circle in 0..2 {
        for i in 0..g.nx {
            let ip = (i + 1) % g.nx;
            let fx = (f.at(g, circle, ip) - f.at(g, circle, i)) * inv_dx;
            let hx = (h.at(g, circle, ip) - h.at(g, circle, i)) * inv_dx;
            total += g.dx * fx * hx;
        }
    }
    total
}

/// Discrete H1 norm of a bulk field.
pub fn h1_norm_bulk(f: &BulkField, g: &StripGrid) -> f64 {
    (inner_bulk(f, f, g) + grad_inner_bulk(f, f, g)).sqrt()
}

/// Discrete H1 norm of a surface field.
pub fn h1_norm_surface(f: &SurfaceField, g: &StripGrid) -> f64 {
    (inner_surface(f, f, g) + grad_inner_surface(f, f, g)).sqrt()
}

/// The fixed test-field basis used by weak-form residuals, dual-norm
/// surrogates, and convergence monitors: constants, the first two Fourier
/// modes in x, and a linear profile in y. Surface parts are exact traces.
pub fn test_field_basis(g: &StripGrid) -> Vec<(String, BulkField, SurfaceField)> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut basis: Vec<(String, BulkField, SurfaceField)> = Vec::new();
    let mut push = |name: &str, f: Box<dyn Fn(f64, f64) -> f64>| {
        let bulk = BulkField::from_fn(g, |i, j| f(g.x(i), g.y(j)));
        let surf = trace(&bulk, g).expect("trace of freshly built field");
        basis.push((name.to_string(), bulk, surf));
    };
    let lx = g.lx;
    let height = g.height;
    push("const", Box::new(|_, _| 1.0));
    push("cos1", Box::new(move |x, _| (two_pi * x / lx).cos()));
    push("sin1", Box::new(move |x, _| (two_pi * x / lx).sin()));
    push("cos2", Box::new(move |x, _| (2.0 * two_pi * x / lx).cos()));
    push("sin2", Box::new(move |x, _| (2.0 * two_pi * x / lx).sin()));
    push("ylin", Box::new(move |_, y| y / height));
    basis
}
