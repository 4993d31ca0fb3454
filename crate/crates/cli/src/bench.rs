//! `malm-bench`: limit points and inner iteration counts of MALM, PM and ALM.

use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::Context;
use trajopt_core::malm::instances::{CIRCLE_XA, CIRCLE_XB};
use trajopt_core::malm::{alm_solve, circle, malm_solve, ocp_disc, pm_solve, MalmConfig, MalmReport, QppInstance};

use crate::config::{BenchArgs, Instance};

/// Not applicable: the penalty method needs `pval > 0`.
pub const NOT_APPLICABLE: &str = "n.a.";
/// Not converged within the inner iteration budget.
pub const NOT_CONVERGED: &str = "n.c.";

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn iters(converged: bool, count: usize) -> String {
    if converged {
        count.to_string()
    } else {
        NOT_CONVERGED.to_string()
    }
}

fn num(v: f64) -> String {
    format!("{v:.6e}")
}

struct Solved {
    x: Vec<f64>,
    iters: String,
}

fn run_malm(inst: &QppInstance, cfg: &MalmConfig) -> anyhow::Result<(Solved, MalmReport)> {
    let (x, _, rep) = malm_solve(inst, cfg)?;
    Ok((
        Solved {
            x,
            iters: iters(rep.converged(), rep.inner_iters),
        },
        rep,
    ))
}

fn run_pm(inst: &QppInstance, cfg: &MalmConfig) -> anyhow::Result<String> {
    if inst.pval == 0.0 {
        return Ok(NOT_APPLICABLE.to_string());
    }
    let (_, rep) = pm_solve(inst, cfg)?;
    Ok(iters(rep.converged, rep.inner_iters))
}

fn run_alm(inst: &QppInstance, cfg: &MalmConfig) -> anyhow::Result<String> {
    let (_, _, rep) = alm_solve(inst, cfg)?;
    Ok(iters(rep.converged(), rep.inner_iters))
}

fn validate(args: &BenchArgs) -> anyhow::Result<()> {
    if let Some(v) = args.pval.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        anyhow::bail!("--pval entries must be finite and >= 0, got {v}");
    }
    match args.instance {
        Instance::Circle => {
            if let Some(v) = args.eps.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                anyhow::bail!("--eps entries must be finite and >= 0, got {v}");
            }
        }
        Instance::OcpDisc => {
            if args.n.contains(&0) || args.q == 0 {
                anyhow::bail!("--N entries and --q must be positive");
            }
        }
    }
    Ok(())
}

/// Writes the table; non-convergence is data, not an error.
pub fn run_malm_bench(args: &BenchArgs) -> anyhow::Result<()> {
    validate(args)?;
    let cfg = MalmConfig::default();
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    match args.instance {
        Instance::Circle => {
            writeln!(w, "pval,eps,e_a,e_b,malm_iters,pm_iters,alm_iters")?;
            let alm: Vec<String> =
                args.eps.iter().map(|&eps| run_alm(&circle(eps, 0.0), &cfg)).collect::<anyhow::Result<_>>()?;
            for &pval in &args.pval {
                for (k, &eps) in args.eps.iter().enumerate() {
                    let inst = circle(eps, pval);
                    let (m, _) = run_malm(&inst, &cfg)?;
                    let pm = run_pm(&inst, &cfg)?;
                    writeln!(
                        w,
                        "{pval:e},{eps:e},{},{},{},{pm},{}",
                        num(dist(&m.x, &CIRCLE_XA)),
                        num(dist(&m.x, &CIRCLE_XB)),
                        m.iters,
                        alm[k]
                    )?;
                }
            }
        }
        Instance::OcpDisc => {
            writeln!(w, "pval,N,h,delta_j,r,r_norm,malm_iters,pm_iters,alm_iters")?;
            let alm: Vec<String> =
                args.n.iter().map(|&n| run_alm(&ocp_disc(n, args.q, 0.0).inst, &cfg)).collect::<anyhow::Result<_>>()?;
            for &pval in &args.pval {
                for (k, &n) in args.n.iter().enumerate() {
                    let d = ocp_disc(n, args.q, pval);
                    let (m, _) = run_malm(&d.inst, &cfg)?;
                    let pm = run_pm(&d.inst, &cfg)?;
                    let r = d.residual(&m.x);
                    writeln!(
                        w,
                        "{pval:e},{n},{},{},{},{},{},{pm},{}",
                        num(d.h),
                        num(d.gap(&m.x)),
                        num(r),
                        num(r.sqrt()),
                        m.iters,
                        alm[k]
                    )?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
