//! Flat key=value run configuration: parsing, validation of the data
//! assumptions, and construction of the solver inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::adjoint::CostData;
use crate::error::{Error, Result, Violation};
use crate::grid::{trace, BulkField, StripGrid, SurfaceField, TimeGrid};
use crate::objective::OptParams;
use crate::potentials::{Polynomial, PotentialSet, QuenchConfig};
use crate::quench::QuenchSchedule;
use crate::state::{ControlBounds, ControlPair, InitialData, Setup, SolverParams};

/// What a run does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    State,
    Obstacle,
    Optimize,
    Continuation,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::State => "state",
            Mode::Obstacle => "obstacle",
            Mode::Optimize => "optimize",
            Mode::Continuation => "continuation",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "state" => Some(Mode::State),
            "obstacle" => Some(Mode::Obstacle),
            "optimize" => Some(Mode::Optimize),
            "continuation" => Some(Mode::Continuation),
            _ => None,
        }
    }
}

/// A scalar field specification: constant, x-harmonic, or CSV file.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Const(f64),
    /// amp * cos(2 pi k x / lx)
    Fourier { k: u32, amp: f64 },
    File(PathBuf),
}

impl Profile {
    pub fn parse(s: &str) -> Result<Profile> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["const", v] => Ok(Profile::Const(parse_f64(v)?)),
            ["fourier", k, amp] => Ok(Profile::Fourier {
                k: k.parse()
                    .map_err(|_| Error::Argument(format!("bad fourier mode '{k}'")))?,
                amp: parse_f64(amp)?,
            }),
            ["file", path] => Ok(Profile::File(PathBuf::from(path))),
            _ => Err(Error::Argument(format!(
                "bad profile '{s}': expected const:V, fourier:K:AMP, or file:PATH"
            ))),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Profile::Const(v) => format!("const:{}", crate::util::fmt_f64(*v)),
            Profile::Fourier { k, amp } => format!("fourier:{k}:{}", crate::util::fmt_f64(*amp)),
            Profile::File(p) => format!("file:{}", p.display()),
        }
    }

    pub fn eval_bulk(&self, g: &StripGrid) -> Result<BulkField> {
        match self {
            Profile::Const(v) => Ok(BulkField::constant(g, *v)),
            Profile::Fourier { k, amp } => {
                let w = 2.0 * std::f64::consts::PI * *k as f64 / g.lx;
                Ok(BulkField::from_fn(g, |i, _| amp * (w * g.x(i)).cos()))
            }
            Profile::File(path) => read_bulk_csv(path, g),
        }
    }

    pub fn eval_surface(&self, g: &StripGrid) -> Result<SurfaceField> {
        match self {
            Profile::Const(v) => Ok(SurfaceField::constant(g, *v)),
            Profile::Fourier { k, amp } => {
                let w = 2.0 * std::f64::consts::PI * *k as f64 / g.lx;
                Ok(SurfaceField::from_fn(g, |_, i| amp * (w * g.x(i)).cos()))
            }
            Profile::File(path) => read_surface_csv(path, g),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Argument(format!("bad number '{s}'")))
}

fn read_bulk_csv(path: &Path, g: &StripGrid) -> Result<BulkField> {
    let text = std::fs::read_to_string(path)?;
    let mut field = BulkField::zeros(g);
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("i,") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Parse {
                line: ln + 1,
                what: format!("expected i,j,value in {}", path.display()),
            });
        }
        let i: usize = cols[0].trim().parse().map_err(|_| Error::Parse {
            line: ln + 1,
            what: "bad i index".into(),
        })?;
        let j: usize = cols[1].trim().parse().map_err(|_| Error::Parse {
            line: ln + 1,
            what: "bad j index".into(),
        })?;
        if i >= g.nx || j >= g.ny + 2 {
            return Err(Error::Parse {
                line: ln + 1,
                what: format!("node ({i},{j}) outside grid"),
            });
        }
        field.set(g, i, j, parse_f64(cols[2])?);
    }
    Ok(field)
}

fn read_surface_csv(path: &Path, g: &StripGrid) -> Result<SurfaceField> {
    let text = std::fs::read_to_string(path)?;
    let mut field = SurfaceField::zeros(g);
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("circle,") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Parse {
                line: ln + 1,
                what: format!("expected circle,i,value in {}", path.display()),
            });
        }
        let c: usize = cols[0].trim().parse().map_err(|_| Error::Parse {
            line: ln + 1,
            what: "bad circle index".into(),
        })?;
        let i: usize = cols[1].trim().parse().map_err(|_| Error::Parse {
            line: ln + 1,
            what: "bad i index".into(),
        })?;
        if c >= 2 || i >= g.nx {
            return Err(Error::Parse {
                line: ln + 1,
                what: format!("surface node ({c},{i}) outside grid"),
            });
        }
        field.set(g, c, i, parse_f64(cols[2])?);
    }
    Ok(field)
}

/// Parsed run configuration. Field names mirror the dotted keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub grid_lx: f64,
    pub grid_height: f64,
    pub t_final: f64,
    pub nt: usize,
    pub quench_p: f64,
    pub quench_q: f64,
    pub quench_c: f64,
    pub alpha: f64,
    pub schedule: Vec<f64>,
    pub f2p: Vec<f64>,
    pub g2p: Vec<f64>,
    pub beta: [f64; 5],
    pub z_q: Profile,
    pub z_sigma: Profile,
    pub z_t: Profile,
    /// Defaults to the trace of z_t when absent.
    pub z_gamma_t: Option<Profile>,
    pub y0: Profile,
    pub control_u: Profile,
    pub control_u_gamma: Profile,
    pub lower: Profile,
    pub upper: Profile,
    pub lower_gamma: Profile,
    pub upper_gamma: Profile,
    pub radius: f64,
    pub solver: SolverParams,
    pub opt: OptParams,
    pub anchor_fixed: bool,
    pub anchor_u: Profile,
    pub anchor_u_gamma: Profile,
    pub fail_fast: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::State,
            grid_nx: 64,
            grid_ny: 16,
            grid_lx: 1.0,
            grid_height: 0.5,
            t_final: 0.25,
            nt: 50,
            quench_p: 1.0,
            quench_q: 1.0,
            quench_c: 1.0,
            alpha: 0.1,
            schedule: vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4],
            f2p: vec![0.0, -1.0],
            g2p: vec![0.0, -1.0],
            beta: [1.0, 1.0, 1.0, 1.0, 1.0],
            z_q: Profile::Const(0.0),
            z_sigma: Profile::Const(0.0),
            z_t: Profile::Const(0.0),
            z_gamma_t: None,
            y0: Profile::Const(0.0),
            control_u: Profile::Const(0.0),
            control_u_gamma: Profile::Const(0.0),
            lower: Profile::Const(-1.0),
            upper: Profile::Const(1.0),
            lower_gamma: Profile::Const(-1.0),
            upper_gamma: Profile::Const(1.0),
            radius: 4.0,
            solver: SolverParams::default(),
            opt: OptParams::default(),
            anchor_fixed: false,
            anchor_u: Profile::Const(0.0),
            anchor_u_gamma: Profile::Const(0.0),
            fail_fast: false,
            out_dir: None,
        }
    }
}

impl RunConfig {
    /// Parse the flat key=value text format. Lines starting with '#' and
    /// blank lines are ignored; keys are dotted; unknown keys are errors.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let ln = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: ln,
                    what: format!("expected key = value, got '{line}'"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if seen.insert(key.to_string(), ln).is_some() {
                return Err(Error::Parse {
                    line: ln,
                    what: format!("duplicate key '{key}'"),
                });
            }
            cfg.apply(key, value).map_err(|e| Error::Parse {
                line: ln,
                what: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let p_usize = |v: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| Error::Argument(format!("bad integer '{v}'")))
        };
        let p_bool = |v: &str| -> Result<bool> {
            match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::Argument(format!("bad boolean '{v}'"))),
            }
        };
        let p_list = |v: &str| -> Result<Vec<f64>> {
            v.split(',').map(parse_f64).collect()
        };
        match key {
            "mode" => {
                self.mode = Mode::parse(value)
                    .ok_or_else(|| Error::Argument(format!("unknown mode '{value}'")))?
            }
            "grid.nx" => self.grid_nx = p_usize(value)?,
            "grid.ny" => self.grid_ny = p_usize(value)?,
            "grid.lx" => self.grid_lx = parse_f64(value)?,
            "grid.height" => self.grid_height = parse_f64(value)?,
            "time.t_final" => self.t_final = parse_f64(value)?,
            "time.nt" => self.nt = p_usize(value)?,
            "quench.p" => self.quench_p = parse_f64(value)?,
            "quench.q" => self.quench_q = parse_f64(value)?,
            "quench.c_phipsi" => self.quench_c = parse_f64(value)?,
            "quench.alpha" => self.alpha = parse_f64(value)?,
            "quench.schedule" => self.schedule = p_list(value)?,
            "potentials.f2p" => self.f2p = p_list(value)?,
            "potentials.g2p" => self.g2p = p_list(value)?,
            "cost.beta1" => self.beta[0] = parse_f64(value)?,
            "cost.beta2" => self.beta[1] = parse_f64(value)?,
            "cost.beta3" => self.beta[2] = parse_f64(value)?,
            "cost.beta4" => self.beta[3] = parse_f64(value)?,
            "cost.beta5" => self.beta[4] = parse_f64(value)?,
            "cost.zq" => self.z_q = Profile::parse(value)?,
            "cost.zsigma" => self.z_sigma = Profile::parse(value)?,
            "cost.zt" => self.z_t = Profile::parse(value)?,
            "cost.zgammat" => self.z_gamma_t = Some(Profile::parse(value)?),
            "init.y0" => self.y0 = Profile::parse(value)?,
            "control.u" => self.control_u = Profile::parse(value)?,
            "control.u_gamma" => self.control_u_gamma = Profile::parse(value)?,
            "bounds.lower" => self.lower = Profile::parse(value)?,
            "bounds.upper" => self.upper = Profile::parse(value)?,
            "bounds.lower_gamma" => self.lower_gamma = Profile::parse(value)?,
            "bounds.upper_gamma" => self.upper_gamma = Profile::parse(value)?,
            "bounds.radius" => self.radius = parse_f64(value)?,
            "solver.tol_newton" => self.solver.tol_newton = parse_f64(value)?,
            "solver.max_newton" => self.solver.max_newton = p_usize(value)?,
            "solver.max_halvings" => self.solver.max_halvings = p_usize(value)?,
            "solver.max_pdas" => self.solver.max_pdas = p_usize(value)?,
            "solver.pdas_c" => self.solver.pdas_c = parse_f64(value)?,
            "opt.tol_vi_factor" => self.opt.tol_vi_factor = parse_f64(value)?,
            "opt.max_iters" => self.opt.max_iters = p_usize(value)?,
            "opt.armijo_sigma" => self.opt.armijo_sigma = parse_f64(value)?,
            "opt.backtrack" => self.opt.backtrack = parse_f64(value)?,
            "opt.init_step" => self.opt.init_step = parse_f64(value)?,
            "opt.max_backtracks" => self.opt.max_backtracks = p_usize(value)?,
            "anchor.mode" => {
                self.anchor_fixed = match value {
                    "none" => false,
                    "fixed" => true,
                    _ => {
                        return Err(Error::Argument(format!(
                            "anchor.mode must be none or fixed, got '{value}'"
                        )))
                    }
                }
            }
            "anchor.u" => self.anchor_u = Profile::parse(value)?,
            "anchor.u_gamma" => self.anchor_u_gamma = Profile::parse(value)?,
            "run.fail_fast" => self.fail_fast = p_bool(value)?,
            "output.dir" => self.out_dir = Some(PathBuf::from(value)),
            _ => return Err(Error::Argument(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Serialize back to the key=value text format; parsing the output
    /// reproduces the configuration.
    pub fn to_text(&self) -> String {
        let f = crate::util::fmt_f64;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("mode", self.mode.as_str().to_string());
        kv("grid.nx", self.grid_nx.to_string());
        kv("grid.ny", self.grid_ny.to_string());
        kv("grid.lx", f(self.grid_lx));
        kv("grid.height", f(self.grid_height));
        kv("time.t_final", f(self.t_final));
        kv("time.nt", self.nt.to_string());
        kv("quench.p", f(self.quench_p));
        kv("quench.q", f(self.quench_q));
        kv("quench.c_phipsi", f(self.quench_c));
        kv("quench.alpha", f(self.alpha));
        kv(
            "quench.schedule",
            self.schedule.iter().map(|a| f(*a)).collect::<Vec<_>>().join(","),
        );
        kv(
            "potentials.f2p",
            self.f2p.iter().map(|a| f(*a)).collect::<Vec<_>>().join(","),
        );
        kv(
            "potentials.g2p",
            self.g2p.iter().map(|a| f(*a)).collect::<Vec<_>>().join(","),
        );
        for (i, b) in self.beta.iter().enumerate() {
            kv(&format!("cost.beta{}", i + 1), f(*b));
        }
        kv("cost.zq", self.z_q.to_text());
        kv("cost.zsigma", self.z_sigma.to_text());
        kv("cost.zt", self.z_t.to_text());
        if let Some(zg) = &self.z_gamma_t {
            kv("cost.zgammat", zg.to_text());
        }
        kv("init.y0", self.y0.to_text());
        kv("control.u", self.control_u.to_text());
        kv("control.u_gamma", self.control_u_gamma.to_text());
        kv("bounds.lower", self.lower.to_text());
        kv("bounds.upper", self.upper.to_text());
        kv("bounds.lower_gamma", self.lower_gamma.to_text());
        kv("bounds.upper_gamma", self.upper_gamma.to_text());
        kv("bounds.radius", f(self.radius));
        kv("solver.tol_newton", f(self.solver.tol_newton));
        kv("solver.max_newton", self.solver.max_newton.to_string());
        kv("solver.max_halvings", self.solver.max_halvings.to_string());
        kv("solver.max_pdas", self.solver.max_pdas.to_string());
        kv("solver.pdas_c", f(self.solver.pdas_c));
        kv("opt.tol_vi_factor", f(self.opt.tol_vi_factor));
        kv("opt.max_iters", self.opt.max_iters.to_string());
        kv("opt.armijo_sigma", f(self.opt.armijo_sigma));
        kv("opt.backtrack", f(self.opt.backtrack));
        kv("opt.init_step", f(self.opt.init_step));
        kv("opt.max_backtracks", self.opt.max_backtracks.to_string());
        kv(
            "anchor.mode",
            if self.anchor_fixed { "fixed" } else { "none" }.to_string(),
        );
        kv("anchor.u", self.anchor_u.to_text());
        kv("anchor.u_gamma", self.anchor_u_gamma.to_text());
        kv("run.fail_fast", self.fail_fast.to_string());
        if let Some(d) = &self.out_dir {
            kv("output.dir", d.display().to_string());
        }
        s
    }
}

/// Everything the run modes need, built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Built {
    pub mode: Mode,
    pub setup: Setup,
    pub cd: CostData,
    pub bounds: ControlBounds,
    pub data: InitialData,
    pub control: ControlPair,
    pub anchor: Option<ControlPair>,
    pub schedule: QuenchSchedule,
    pub alpha: f64,
    pub fail_fast: bool,
}

/// Check every data assumption and build the solver inputs. Violations are
/// collected, named, and reported together.
pub fn validate_config(cfg: &RunConfig) -> std::result::Result<Built, Vec<Violation>> {
    let mut violations: Vec<Violation> = Vec::new();

    let structural = |what: String| Violation::Structural { what };

    let grid = match StripGrid::new(cfg.grid_nx, cfg.grid_ny, cfg.grid_lx, cfg.grid_height) {
        Ok(g) => g,
        Err(e) => {
            violations.push(structural(e.to_string()));
            return Err(violations);
        }
    };
    let time = match TimeGrid::new(cfg.t_final, cfg.nt) {
        Ok(t) => t,
        Err(e) => {
            violations.push(structural(e.to_string()));
            return Err(violations);
        }
    };

    // (A2): smooth parts are polynomials with finite coefficients.
    let pots = match (
        Polynomial::new(cfg.f2p.clone()),
        Polynomial::new(cfg.g2p.clone()),
    ) {
        (Ok(f), Ok(gp)) => PotentialSet::new(f, gp),
        _ => {
            violations.push(Violation::A2Violation {
                where_: "potential coefficients must be finite".into(),
            });
            return Err(violations);
        }
    };

    let quench = match QuenchConfig::new(cfg.quench_p, cfg.quench_q, cfg.quench_c) {
        Ok(q) => q,
        Err(e) => {
            violations.push(structural(e.to_string()));
            return Err(violations);
        }
    };

    let mut setup = Setup::new(grid, time);
    setup.pots = pots;
    setup.quench = quench;
    setup.params = cfg.solver;

    let g = &setup.grid;
    let tg = &setup.time;

    let eval_bulk = |p: &Profile, what: &str, violations: &mut Vec<Violation>| match p.eval_bulk(g)
    {
        Ok(f) => Some(f),
        Err(e) => {
            violations.push(structural(format!("{what}: {e}")));
            None
        }
    };
    let eval_surf =
        |p: &Profile, what: &str, violations: &mut Vec<Violation>| match p.eval_surface(g) {
            Ok(f) => Some(f),
            Err(e) => {
                violations.push(structural(format!("{what}: {e}")));
                None
            }
        };

    let z_q = eval_bulk(&cfg.z_q, "cost.zq", &mut violations);
    let z_sigma = eval_surf(&cfg.z_sigma, "cost.zsigma", &mut violations);
    let z_t = eval_bulk(&cfg.z_t, "cost.zt", &mut violations);
    let z_gamma_t = match &cfg.z_gamma_t {
        Some(p) => eval_surf(p, "cost.zgammat", &mut violations),
        None => z_t.as_ref().and_then(|zt| trace(zt, g).ok()),
    };
    let y0 = eval_bulk(&cfg.y0, "init.y0", &mut violations);
    let u = eval_bulk(&cfg.control_u, "control.u", &mut violations);
    let u_gamma = eval_surf(&cfg.control_u_gamma, "control.u_gamma", &mut violations);
    let lower = eval_bulk(&cfg.lower, "bounds.lower", &mut violations);
    let upper = eval_bulk(&cfg.upper, "bounds.upper", &mut violations);
    let lower_g = eval_surf(&cfg.lower_gamma, "bounds.lower_gamma", &mut violations);
    let upper_g = eval_surf(&cfg.upper_gamma, "bounds.upper_gamma", &mut violations);
    let anchor_u = eval_bulk(&cfg.anchor_u, "anchor.u", &mut violations);
    let anchor_ug = eval_surf(&cfg.anchor_u_gamma, "anchor.u_gamma", &mut violations);
    if !violations.is_empty() {
        return Err(violations);
    }
    let (z_q, z_sigma, z_t, z_gamma_t) =
        (z_q.unwrap(), z_sigma.unwrap(), z_t.unwrap(), z_gamma_t.unwrap());
    let (y0, u, u_gamma) = (y0.unwrap(), u.unwrap(), u_gamma.unwrap());
    let (lower, upper, lower_g, upper_g) =
        (lower.unwrap(), upper.unwrap(), lower_g.unwrap(), upper_g.unwrap());

    // Cost weights: nonnegative, not all zero.
    if cfg.beta.iter().any(|b| *b < 0.0 || !b.is_finite()) {
        violations.push(structural(format!("cost weights must be >= 0, got {:?}", cfg.beta)));
    }
    if cfg.beta.iter().all(|b| *b == 0.0) {
        violations.push(Violation::WeightsAllZero);
    }

    // (A1): bound ordering, nodewise, with the offending node named.
    for i in 0..g.nx {
        for j in 0..g.ny + 2 {
            if lower.at(g, i, j) > upper.at(g, i, j) {
                violations.push(Violation::A1Violation {
                    where_: format!("bulk bounds out of order at node ({i},{j})"),
                });
            }
        }
        for c in 0..2 {
            if lower_g.at(g, c, i) > upper_g.at(g, c, i) {
                violations.push(Violation::A1Violation {
                    where_: format!("surface bounds out of order at node ({c},{i})"),
                });
            }
        }
    }

    // (A3): initial data within the obstacle interval.
    for i in 0..g.nx {
        for j in 0..g.ny + 2 {
            let v = y0.at(g, i, j);
            if v.abs() > 1.0 {
                violations.push(Violation::A3Violation {
                    where_: format!("|y0| > 1 at node ({i},{j}): {v}"),
                });
            }
        }
    }

    // (A4): bound sup-norms within the ambient radius.
    let sup_bulk = lower.max_abs().max(upper.max_abs());
    let sup_surf = lower_g.max_abs().max(upper_g.max_abs());
    if sup_bulk + sup_surf > cfg.radius {
        violations.push(Violation::A4Violation {
            where_: format!(
                "bound sup-norms {sup_bulk} + {sup_surf} exceed radius {}",
                cfg.radius
            ),
        });
    }

    // (A5): terminal target compatibility, nodewise.
    let tr = trace(&z_t, g).expect("trace of built target");
    for c in 0..2 {
        for i in 0..g.nx {
            if tr.at(g, c, i) != z_gamma_t.at(g, c, i) {
                violations.push(Violation::A5Violation {
                    where_: format!("surface terminal target differs from trace at node ({c},{i})"),
                });
            }
        }
    }

    // Schedule and alpha.
    let schedule = match QuenchSchedule::new(cfg.schedule.clone()) {
        Ok(s) => s,
        Err(e) => {
            violations.push(structural(e.to_string()));
            QuenchSchedule::default_geometric()
        }
    };
    if !(cfg.alpha > 0.0 && cfg.alpha <= 1.0) {
        violations.push(structural(format!(
            "quench.alpha must lie in (0,1], got {}",
            cfg.alpha
        )));
    }

    if !violations.is_empty() {
        return Err(violations);
    }

    let cd = CostData {
        beta: cfg.beta,
        z_q: vec![z_q; tg.nt],
        z_sigma: vec![z_sigma; tg.nt],
        z_t,
        z_gamma_t,
    };
    let bounds = ControlBounds {
        lower_bulk: lower,
        upper_bulk: upper,
        lower_surf: lower_g,
        upper_surf: upper_g,
        radius: cfg.radius,
    };
    let data = match InitialData::from_bulk(y0, g) {
        Ok(d) => d,
        Err(e) => {
            violations.push(structural(e.to_string()));
            return Err(violations);
        }
    };
    let control = ControlPair {
        bulk: vec![u; tg.nt],
        surface: vec![u_gamma; tg.nt],
    };
    let anchor = if cfg.anchor_fixed {
        Some(ControlPair {
            bulk: vec![anchor_u.unwrap(); tg.nt],
            surface: vec![anchor_ug.unwrap(); tg.nt],
        })
    } else {
        None
    };

    Ok(Built {
        mode: cfg.mode,
        setup,
        cd,
        bounds,
        data,
        control,
        anchor,
        schedule,
        alpha: cfg.alpha,
        fail_fast: cfg.fail_fast,
    })
}
