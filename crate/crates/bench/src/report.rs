use std::fmt;
use std::path::Path;

use tmop_core::solvers::{IterRecord, KernelTimes};

use crate::{BenchConfig, BenchError};

/// Everything a benchmark run measures.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: BenchConfig,
    pub nodes_per_component: usize,
    /// Position unknowns, 3 per node.
    pub dofs: usize,
    pub quad_points: usize,
    pub newton_iters: usize,
    pub minres_iters_total: usize,
    pub times: KernelTimes,
    pub f_initial: f64,
    pub f_final: f64,
    pub relgrad_final: f64,
    pub min_det_initial: f64,
    pub min_det_final: f64,
    /// Largest coordinate difference to the undeformed lattice.
    pub max_dev_uniform: f64,
    pub status: String,
    pub success: bool,
    pub iterations: Vec<IterRecord>,
}

pub const CSV_COLUMNS: [&str; 25] = [
    "nx",
    "ny",
    "nz",
    "order",
    "nq",
    "epsy",
    "epsz",
    "metric",
    "precond",
    "dofs",
    "quad_points",
    "newton_iters",
    "minres_iters_total",
    "t_total_s",
    "t_grad_s",
    "t_hess_setup_s",
    "t_hess_apply_s",
    "t_linesearch_s",
    "F_initial",
    "F_final",
    "relgrad_final",
    "min_detA_initial",
    "min_detA_final",
    "max_dev_uniform",
    "status",
];

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

impl RunReport {
    /// The data row matching [`CSV_COLUMNS`].
    pub fn csv_row(&self) -> Vec<String> {
        let c = &self.config;
        let t = &self.times;
        vec![
            c.nx.to_string(),
            c.ny.to_string(),
            c.nz.to_string(),
            c.order.to_string(),
            c.nq.to_string(),
            float(c.epsy),
            float(c.epsz),
            c.metric.number().to_string(),
            if c.precondition { "on" } else { "off" }.to_string(),
            self.dofs.to_string(),
            self.quad_points.to_string(),
            self.newton_iters.to_string(),
            self.minres_iters_total.to_string(),
            float(t.total),
            float(t.gradient),
            float(t.hessian_setup),
            float(t.hessian_apply),
            float(t.linesearch),
            float(self.f_initial),
            float(self.f_final),
            float(self.relgrad_final),
            float(self.min_det_initial),
            float(self.min_det_final),
            float(self.max_dev_uniform),
            self.status.clone(),
        ]
    }
}

pub fn write_csv(report: &RunReport, path: &Path) -> Result<(), BenchError> {
    if path.as_os_str().is_empty() {
        return Err(BenchError::Usage("CSV path is empty".into()));
    }
    let wrap = |e: csv::Error| BenchError::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(CSV_COLUMNS).map_err(wrap)?;
    w.write_record(report.csv_row()).map_err(wrap)?;
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub kernel: &'static str,
    pub seconds: f64,
    pub percent: f64,
}

/// Per-kernel share of the run; rows sum to the total.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
    pub total: f64,
}

impl TimingTable {
    pub fn get(&self, kernel: &str) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.kernel == kernel)
    }

    /// The kernel with the most time, not counting "other".
    pub fn largest_kernel(&self) -> &'static str {
        self.rows
            .iter()
            .filter(|r| r.kernel != "other")
            .fold(&self.rows[0], |a, r| if r.seconds > a.seconds { r } else { a })
            .kernel
    }
}

pub fn timing_breakdown(times: &KernelTimes) -> TimingTable {
    let parts = [
        ("objective", times.objective),
        ("gradient", times.gradient),
        ("hessian_setup", times.hessian_setup),
        ("hessian_apply", times.hessian_apply),
        ("linesearch", times.linesearch),
    ];
    let sum: f64 = parts.iter().map(|p| p.1).sum();
    let other = (times.total - sum).max(0.0);
    // timer resolution can push the kernel sum a hair past the total
    let denom = times.total.max(sum);
    let mut rows: Vec<TimingRow> = parts
        .iter()
        .chain(std::iter::once(&("other", other)))
        .map(|&(kernel, seconds)| TimingRow {
            kernel,
            seconds,
            percent: if denom > 0.0 { 100.0 * seconds / denom } else { 0.0 },
        })
        .collect();
    if denom <= 0.0 {
        rows.last_mut().unwrap().percent = 100.0;
    }
    TimingTable {
        rows,
        total: times.total,
    }
}

impl fmt::Display for TimingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14} {:>12} {:>8}", "kernel", "seconds", "%")?;
        for r in &self.rows {
            writeln!(f, "{:<14} {:>12.4} {:>8.2}", r.kernel, r.seconds, r.percent)?;
        }
        write!(f, "{:<14} {:>12.4} {:>8.2}", "total", self.total, 100.0)
    }
}
