use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use tmop_core::mesh::MeshSpec;
use tmop_core::metrics::{MetricId, TargetSpec};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetKind {
    /// W = I
    Unit,
    /// Isotropic W with det W = mesh volume / element count
    Size,
}

impl TargetKind {
    pub fn spec(self) -> TargetSpec {
        match self {
            Self::Unit => TargetSpec::IdealUnit,
            Self::Size => TargetSpec::IdealEqualSize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// Parsed `--limit` value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limit(pub Option<f64>);

fn parse_limit(s: &str) -> Result<Limit, String> {
    if s == "off" {
        return Ok(Limit(None));
    }
    let v = s
        .strip_prefix("delta=")
        .ok_or_else(|| format!("expected `off` or `delta=<v>`, got `{s}`"))?;
    let d: f64 = v.parse().map_err(|_| format!("bad delta `{v}`"))?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(format!("delta must be positive, got {d}"));
    }
    Ok(Limit(Some(d)))
}

/// Optimize a Kershaw-deformed hex mesh back to the uniform lattice.
#[derive(Debug, Clone, Parser)]
#[command(name = "tmop-bench", version)]
pub struct Cli {
    #[arg(long, default_value_t = 12)]
    pub nx: usize,
    #[arg(long, default_value_t = 12)]
    pub ny: usize,
    #[arg(long, default_value_t = 12)]
    pub nz: usize,
    /// Polynomial order of the position field.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Gauss points per direction; defaults to order + 2.
    #[arg(long)]
    pub nq: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    pub epsy: f64,
    #[arg(long, default_value_t = 0.3)]
    pub epsz: f64,
    /// Metric number: 2 (2D shape), 55, or 303 (3D shape).
    #[arg(long, default_value_t = 303)]
    pub metric: u32,
    #[arg(long, value_enum, default_value_t = TargetKind::Unit)]
    pub target: TargetKind,
    /// Jacobi-preconditioned MINRES.
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub precond: Switch,
    #[arg(long, default_value_t = 200)]
    pub newton_max: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub newton_rtol: f64,
    #[arg(long, default_value_t = 50)]
    pub minres_max: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub minres_rtol: f64,
    /// `off`, or `delta=<v>` to tie nodes to their initial positions.
    #[arg(long, value_parser = parse_limit, default_value = "off")]
    pub limit: Limit,
    /// Worker threads; 0 uses the rayon default.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Writes <prefix>_initial.vtk and <prefix>_final.vtk.
    #[arg(long)]
    pub vtk_prefix: Option<PathBuf>,
}

/// A validated benchmark setup.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub order: usize,
    pub nq: usize,
    pub epsy: f64,
    pub epsz: f64,
    pub metric: MetricId,
    pub target: TargetKind,
    pub precondition: bool,
    pub newton_max: usize,
    pub newton_rtol: f64,
    pub minres_max: usize,
    pub minres_rtol: f64,
    /// Limiting length scale; `None` turns limiting off.
    pub limit_delta: Option<f64>,
    pub threads: usize,
    /// Recorded only; the run itself uses no randomness.
    pub seed: u64,
    pub csv: Option<PathBuf>,
    pub vtk_prefix: Option<PathBuf>,
}

impl BenchConfig {
    /// epsy = epsz = 0.3, MU_303, unit targets, preconditioned MINRES, no output files.
    pub fn new(nx: usize, ny: usize, nz: usize, order: usize, nq: usize) -> Self {
        Self {
            nx,
            ny,
            nz,
            order,
            nq,
            epsy: 0.3,
            epsz: 0.3,
            metric: MetricId::Mu303,
            target: TargetKind::Unit,
            precondition: true,
            newton_max: 200,
            newton_rtol: 1e-10,
            minres_max: 50,
            minres_rtol: 1e-8,
            limit_delta: None,
            threads: 0,
            seed: 0,
            csv: None,
            vtk_prefix: None,
        }
    }

    pub fn mesh_spec(&self) -> MeshSpec {
        MeshSpec::new_3d(self.nx, self.ny, self.nz, self.order)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let cfg = |m: String| Err(BenchError::Config(m));
        self.mesh_spec().check_kershaw_layout()?;
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return cfg("element counts must be positive".into());
        }
        if self.order == 0 {
            return cfg("order must be at least 1".into());
        }
        if self.nq < self.order + 1 {
            return cfg(format!("nq = {} must be at least order + 1 = {}", self.nq, self.order + 1));
        }
        self.metric.check_dim(3)?;
        for (name, e) in [("epsy", self.epsy), ("epsz", self.epsz)] {
            if !(e > 0.0 && e <= 1.0) {
                return cfg(format!("{name} = {e} outside (0, 1]"));
            }
        }
        if !(self.newton_rtol > 0.0 && self.minres_rtol > 0.0) {
            return cfg("tolerances must be positive".into());
        }
        if self.minres_max == 0 {
            return cfg("minres-max must be at least 1".into());
        }
        if let Some(d) = self.limit_delta {
            if !(d > 0.0 && d.is_finite()) {
                return cfg(format!("limiting delta {d} must be positive"));
            }
        }
        for p in [&self.csv, &self.vtk_prefix].into_iter().flatten() {
            if p.as_os_str().is_empty() {
                return Err(BenchError::Usage("output path is empty".into()));
            }
        }
        Ok(())
    }
}

impl TryFrom<Cli> for BenchConfig {
    type Error = BenchError;

    fn try_from(c: Cli) -> Result<Self, BenchError> {
        let cfg = Self {
            nx: c.nx,
            ny: c.ny,
            nz: c.nz,
            order: c.order,
            nq: c.nq.unwrap_or(c.order + 2),
            epsy: c.epsy,
            epsz: c.epsz,
            metric: MetricId::from_number(c.metric)?,
            target: c.target,
            precondition: c.precond == Switch::On,
            newton_max: c.newton_max,
            newton_rtol: c.newton_rtol,
            minres_max: c.minres_max,
            minres_rtol: c.minres_rtol,
            limit_delta: c.limit.0,
            threads: c.threads,
            seed: c.seed,
            csv: c.csv,
            vtk_prefix: c.vtk_prefix,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
