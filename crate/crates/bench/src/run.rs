use std::ffi::OsString;
use std::path::{Path, PathBuf};

use tmop_core::mesh::{apply_kershaw, build_cartesian, Mesh};
use tmop_core::operator::{build_targets, LimitingConfig, ObjectiveConfig, Tmop};
use tmop_core::solvers::{newton_solve_observed, IterRecord, MinresConfig, NewtonConfig};

use crate::report::{write_csv, RunReport};
use crate::vtk::write_vtk;
use crate::{BenchConfig, BenchError};

/// `<prefix>_<tag>.vtk`
pub fn vtk_path(prefix: &Path, tag: &str) -> PathBuf {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(format!("_{tag}.vtk"));
    PathBuf::from(s)
}

/// Largest |x - y| over all entries.
pub fn max_deviation(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Deform the uniform mesh, optimize it back, and write the requested outputs.
/// Solver failures are reported through `RunReport::status`; only setup and I/O errors return `Err`.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<RunReport, BenchError> {
    run_benchmark_observed(cfg, |_, _| {})
}

/// [`run_benchmark`] reporting each Newton step (1-based index) while the solve runs.
pub fn run_benchmark_observed(
    cfg: &BenchConfig,
    progress: impl FnMut(usize, &IterRecord) + Send,
) -> Result<RunReport, BenchError> {
    cfg.validate()?;
    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        pool.install(|| run_inner(cfg, progress))
    } else {
        run_inner(cfg, progress)
    }
}

fn run_inner(cfg: &BenchConfig, mut progress: impl FnMut(usize, &IterRecord)) -> Result<RunReport, BenchError> {
    let uniform = build_cartesian(&cfg.mesh_spec())?;
    let mesh0 = apply_kershaw(&uniform, cfg.epsy, cfg.epsz)?;
    let x0 = mesh0.coords().to_vec();
    let target = build_targets(&mesh0, cfg.target.spec(), cfg.nq)?;
    let objective = ObjectiveConfig {
        limiting: cfg.limit_delta.map(|d| LimitingConfig::new(x0.clone(), d)),
        ..ObjectiveConfig::new(cfg.metric, target)
    };
    let op = Tmop::new(&mesh0, cfg.nq, objective)?;
    if let Some(prefix) = &cfg.vtk_prefix {
        write_vtk(&mesh0, &vtk_path(prefix, "initial"))?;
    }

    let ncfg = NewtonConfig {
        rtol: cfg.newton_rtol,
        max_iter: cfg.newton_max,
        minres: MinresConfig {
            max_iter: cfg.minres_max,
            rtol: cfg.minres_rtol,
            precondition: cfg.precondition,
        },
        ..Default::default()
    };
    let mut k = 0;
    let res = newton_solve_observed(&op, &x0, &ncfg, |it| {
        k += 1;
        progress(k, it);
    });
    let tr = &res.trace;
    let report = RunReport {
        config: cfg.clone(),
        nodes_per_component: mesh0.num_nodes(),
        dofs: mesh0.num_dofs(),
        quad_points: op.num_quad_points(),
        newton_iters: tr.newton_iterations(),
        minres_iters_total: tr.minres_total,
        times: tr.times,
        f_initial: tr.f_initial,
        f_final: tr.f_final(),
        relgrad_final: tr.rel_grad_final(),
        min_det_initial: tr.min_det_initial,
        min_det_final: tr.min_det_final(),
        max_dev_uniform: max_deviation(&res.x, uniform.coords()),
        status: res.status.label().to_string(),
        success: res.status.is_success(),
        iterations: tr.iterations.clone(),
    };

    if let Some(prefix) = &cfg.vtk_prefix {
        let last: Mesh = mesh0.with_coords(res.x)?;
        write_vtk(&last, &vtk_path(prefix, "final"))?;
    }
    if let Some(path) = &cfg.csv {
        write_csv(&report, path)?;
    }
    Ok(report)
}
