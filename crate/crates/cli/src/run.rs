//! `solve` and `study`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use trajopt_core::fem::mesh::make_uniform_mesh;
use trajopt_core::fem::points::ref_points;
use trajopt_core::ipm::{self, SolveReport, SolveStatus};
use trajopt_core::measures::{bound_diameter, empirical_order, gamma_bound, MeasureReport, Orders, ORDER_FLOOR};
use trajopt_core::ocp::corpus::corpus_get;
use trajopt_core::transcription::{build_dcm, build_pbf, build_qpm, initial_guess, Nlp};

use crate::config::{RunArgs, SolveArgs, StudyArgs, Transcription};

/// Result of one mesh level.
pub struct Level {
    pub n: usize,
    pub h: f64,
    pub nlp: Nlp,
    pub report: SolveReport,
    pub measures: MeasureReport,
}

impl Level {
    pub fn succeeded(&self) -> bool {
        matches!(self.report.status, SolveStatus::Converged | SolveStatus::Acceptable)
    }
}

/// `measures.json`: the measure report with the solver outcome.
#[derive(Serialize)]
struct MeasuresFile<'a> {
    problem: &'a str,
    method: String,
    n: usize,
    status: SolveStatus,
    message: Option<&'a str>,
    kkt_inf: f64,
    #[serde(flatten)]
    measures: &'a MeasureReport,
}

fn build(args: &RunArgs, n: usize) -> anyhow::Result<(Nlp, Option<trajopt_core::ocp::ReferenceSolution>)> {
    let (problem, reference) = corpus_get(&args.problem)?;
    let mesh = make_uniform_mesh(problem.horizon, n)?;
    let nlp = match args.transcription()? {
        Transcription::Dcm { family } => build_dcm(&problem, &mesh, args.p, &ref_points(family, args.p)?)?,
        Transcription::Qpm { q, m, omega } => build_qpm(&problem, &mesh, args.p, q, m, omega)?,
        Transcription::Pbf { q, omega, tau } => build_pbf(&problem, &mesh, args.p, q, omega, tau)?,
    };
    Ok((nlp, reference))
}

/// Builds, solves and measures one mesh level. Configuration errors are
/// returned as `Err`; solver failures are reported in the level.
pub fn solve_level(args: &RunArgs, n: usize) -> anyhow::Result<Level> {
    let (nlp, reference) = build(args, n)?;
    let x0 = initial_guess(&nlp, args.init.into(), reference.as_ref())?;
    let report = ipm::solve(&nlp, &x0, &nlp.ipm_config(args.tol))?;
    let traj = nlp.trajectory(&report.state.x)?;
    let mut measures = MeasureReport::of(&nlp.problem, &traj, reference.as_ref())?;
    if let Transcription::Qpm { m, .. } = args.transcription()? {
        measures.gamma_bound = bound_diameter(&nlp.problem).and_then(|c| gamma_bound(args.p, m, c).ok());
    }
    measures.iterations = Some(report.inner_iters);
    measures.wall_time_s = Some(report.wall_time_s);
    Ok(Level {
        n,
        h: nlp.mesh.h(),
        nlp,
        report,
        measures,
    })
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn method_name(args: &RunArgs) -> String {
    format!("{:?}", args.method).to_lowercase()
}

fn write_level(args: &RunArgs, level: &Level, dir: &Path) -> anyhow::Result<()> {
    let traj = level.nlp.trajectory(&level.report.state.x)?;
    let mut w = create(&dir.join("solution.csv"))?;
    traj.write_csv(&mut w, args.samples)?;
    w.flush()?;
    let file = MeasuresFile {
        problem: &args.problem,
        method: method_name(args),
        n: level.n,
        status: level.report.status,
        message: level.report.message.as_deref(),
        kkt_inf: level.report.kkt_inf,
        measures: &level.measures,
    };
    let mut w = create(&dir.join("measures.json"))?;
    serde_json::to_writer_pretty(&mut w, &file)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_trace(report: &SolveReport, path: &Path) -> anyhow::Result<()> {
    let mut w = create(path)?;
    report.write_trace_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Returns whether the solve succeeded.
pub fn run_solve(args: &SolveArgs) -> anyhow::Result<bool> {
    let level = solve_level(&args.run, args.n)?;
    write_level(&args.run, &level, &args.run.out)?;
    if let Some(path) = &args.trace {
        write_trace(&level.report, path)?;
    }
    report_line(&level);
    Ok(level.succeeded())
}

fn report_line(level: &Level) {
    let m = &level.measures;
    let delta = m.delta.map_or("n/a".to_string(), |d| format!("{d:.3e}"));
    eprintln!(
        "N={} {:?} iters={} delta={delta} rho={:.3e} gamma={:.3e}{}",
        level.n,
        level.report.status,
        level.report.inner_iters,
        m.rho,
        m.gamma,
        level.report.message.as_deref().map_or(String::new(), |s| format!(" ({s})")),
    );
}

/// `study.csv` row; the header is `N,h,delta,rho,gamma,iters,time_s`.
#[derive(Serialize)]
struct StudyRow {
    #[serde(rename = "N")]
    n: usize,
    h: f64,
    delta: Option<f64>,
    rho: f64,
    gamma: f64,
    iters: usize,
    time_s: f64,
}

fn orders(levels: &[Level]) -> anyhow::Result<Orders> {
    let fit = |f: &dyn Fn(&Level) -> Option<f64>| -> anyhow::Result<Option<f64>> {
        let pairs: Option<Vec<(f64, f64)>> = levels.iter().map(|l| f(l).map(|v| (l.h, v))).collect();
        // a measure at the floor on all but one level has no order
        match pairs {
            Some(p) if p.iter().filter(|(_, v)| *v >= ORDER_FLOOR).count() >= 2 => Ok(Some(empirical_order(&p)?)),
            _ => Ok(None),
        }
    };
    Ok(Orders {
        rho: fit(&|l| Some(l.measures.rho))?,
        delta: fit(&|l| l.measures.delta.map(f64::abs))?,
        gamma: fit(&|l| Some(l.measures.gamma))?,
    })
}

/// Returns whether every level succeeded. Levels after the first failure
/// are dropped from the CSV and no orders are written.
pub fn run_study(args: &StudyArgs) -> anyhow::Result<bool> {
    if args.n.len() < 3 {
        anyhow::bail!("--N needs at least three mesh sizes, got {}", args.n.len());
    }
    if let Some(bad) = args.n.iter().find(|&&n| n == 0) {
        anyhow::bail!("mesh size {bad} must be positive");
    }
    args.run.transcription()?;
    let results: Vec<anyhow::Result<Level>> = if args.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = args.n.iter().map(|&n| s.spawn(move || solve_level(&args.run, n))).collect();
            handles.into_iter().map(|h| h.join().expect("study worker panicked")).collect()
        })
    } else {
        let mut out = Vec::new();
        for &n in &args.n {
            let level = solve_level(&args.run, n);
            let stop = !level.as_ref().is_ok_and(Level::succeeded);
            out.push(level);
            if stop {
                break;
            }
        }
        out
    };
    let mut levels = Vec::new();
    let mut failed = false;
    for r in results {
        let level = r?;
        report_line(&level);
        failed |= !level.succeeded();
        if !failed {
            levels.push(level);
        }
    }
    let failed = levels.len() < args.n.len();
    let out = &args.run.out;
    let mut w = csv::Writer::from_writer(create(&out.join("study.csv"))?);
    for l in &levels {
        w.serialize(StudyRow {
            n: l.n,
            h: l.h,
            delta: l.measures.delta,
            rho: l.measures.rho,
            gamma: l.measures.gamma,
            iters: l.report.inner_iters,
            time_s: l.report.wall_time_s,
        })?;
    }
    w.flush()?;
    if let Some(dir) = &args.trace {
        for l in &levels {
            write_trace(&l.report, &dir.join(format!("trace_N{}.csv", l.n)))?;
        }
    }
    if failed {
        return Ok(false);
    }
    let o = orders(&levels)?;
    eprintln!("orders rho={:?} delta={:?} gamma={:?}", o.rho, o.delta, o.gamma);
    let mut w = create(&out.join("orders.json"))?;
    serde_json::to_writer_pretty(&mut w, &o)?;
    writeln!(w)?;
    w.flush()?;
    Ok(true)
}
