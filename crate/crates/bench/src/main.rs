use std::process::ExitCode;

use clap::Parser;
use tmop_bench::{run_benchmark_observed, timing_breakdown, BenchConfig, BenchError, Cli};

fn main() -> ExitCode {
    let cfg = match BenchConfig::try_from(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("tmop-bench: {e}");
            return ExitCode::from(2);
        }
    };
    println!(
        "mesh {}x{}x{}, p = {}, n_q = {}, metric {}, precond {}",
        cfg.nx,
        cfg.ny,
        cfg.nz,
        cfg.order,
        cfg.nq,
        cfg.metric.number(),
        if cfg.precondition { "on" } else { "off" }
    );
    println!("{:>4} {:>24} {:>12} {:>7} {:>10} {:>12}", "it", "F", "|dF|", "minres", "alpha", "min det A");
    let report = match run_benchmark_observed(&cfg, |k, it| {
        println!(
            "{:>4} {:>24.16e} {:>12.4e} {:>7} {:>10.3e} {:>12.4e}",
            k, it.f, it.grad_norm, it.minres_iters, it.alpha, it.min_det
        );
    }) {
        Ok(r) => r,
        Err(e @ BenchError::Usage(_)) => {
            eprintln!("tmop-bench: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("tmop-bench: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!(
        "dofs {} ({} nodes), quadrature points {}",
        report.dofs, report.nodes_per_component, report.quad_points
    );
    println!(
        "status {}: {} Newton, {} MINRES iterations, F {:.6e} -> {:.6e}, rel |dF| {:.3e}, max deviation {:.3e}",
        report.status,
        report.newton_iters,
        report.minres_iters_total,
        report.f_initial,
        report.f_final,
        report.relgrad_final,
        report.max_dev_uniform
    );
    println!("{}", timing_breakdown(&report.times));
    if report.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
