//! `tridomain-sim`: one executable for simulation, certification and the
//! verification experiments.
//!
//! Exit codes: 0 success, 1 experiment failure (including solver failure),
//! 2 usage or configuration error. Verbosity comes from `TRIDOMAIN_LOG`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::assembly::{assemble, check_spd, regularized_matrix, BlockOperator, SpdMode};
use crate::config::{OutputFormat, RunConfig};
use crate::diagnostics::{self, apriori, energy, mms::MmsCase};
use crate::error::{Error, Result};
use crate::geometry::{build_unit_cell, tile, MicroMesh};
use crate::io::{self, Manifest, Verdict};
use crate::ionics::certify_assumptions;
use crate::stepper::{initialize, StepReport, Stepper};

#[derive(Debug, Parser)]
#[command(name = "tridomain-sim", version, about = "Microscopic tridomain simulator and verification harness")]
pub struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for experiments that fan out independent runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate to t_end and write the time series and final state.
    Run,
    /// Check the ionic-model assumptions on a sample grid.
    Certify,
    /// Positive (semi)definiteness of the regularised Galerkin matrix.
    Spd {
        /// Regularization δ (overrides `experiments.spd.delta`).
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
    },
    /// Perturbation amplification and Gronwall fit.
    Stability,
    /// Manufactured-solution convergence study.
    Mms,
    /// Trajectory distances as δ → 0.
    DeltaLimit,
    /// A-priori monitors on two mesh densities.
    Apriori,
    /// Physical units to dimensionless parameters.
    Nondim,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Certify => "certify",
            Command::Spd { .. } => "spd",
            Command::Stability => "stability",
            Command::Mms => "mms",
            Command::DeltaLimit => "delta-limit",
            Command::Apriori => "apriori",
            Command::Nondim => "nondim",
        }
    }
}

/// Entry point; `args[0]` is the program name.
pub fn main(args: Vec<String>) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRIDOMAIN_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(v) => {
            print!("{}", v.summary());
            if v.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::InvalidSpec(_) | Error::InvalidConductivity(_) | Error::InvalidModel(_) | Error::Io { .. }
    )
}

/// Parses the config, runs the selected experiment inside a thread pool of
/// `--jobs` workers and writes manifest and verdict.
pub fn execute(cli: &Cli) -> Result<Verdict> {
    let (mut cfg, bytes) = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => (RunConfig::default(), Vec::new()),
    };
    if let Some(o) = &cli.output {
        cfg.output.dir = o.clone();
    }
    let jobs = cli.jobs.unwrap_or(1);
    if jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let dir = cfg.output.dir.clone();
    io::create_dir(&dir)?;
    let start = Instant::now();
    let (verdict, files) = pool.install(|| dispatch(&cli.command, &cfg, &dir))?;
    verdict.write(&dir)?;
    let mut files = files;
    files.push(PathBuf::from("verdict.json"));
    Manifest::new(cli.command.name(), &bytes, start.elapsed().as_secs_f64(), files).write(&dir)?;
    Ok(verdict)
}

fn dispatch(cmd: &Command, cfg: &RunConfig, dir: &Path) -> Result<(Verdict, Vec<PathBuf>)> {
    match cmd {
        Command::Run => cmd_run(cfg, dir),
        Command::Certify => cmd_certify(cfg, dir),
        Command::Spd { delta } => cmd_spd(cfg, dir, delta.unwrap_or(cfg.experiments.spd.delta)),
        Command::Stability => cmd_stability(cfg, dir),
        Command::Mms => cmd_mms(cfg, dir),
        Command::DeltaLimit => cmd_delta_limit(cfg, dir),
        Command::Apriori => cmd_apriori(cfg, dir),
        Command::Nondim => cmd_nondim(cfg, dir),
    }
}

/// Mesh and operator for the configured geometry at `density`.
pub fn build(cfg: &RunConfig, density: usize) -> Result<(MicroMesh, BlockOperator)> {
    let mut spec = cfg.geometry.spec();
    spec.mesh_density = density;
    let cell = build_unit_cell(&spec)?;
    let mesh = tile(&cell, &cfg.tiling.spec())?;
    let op = assemble(&mesh, &cfg.conductivity)?;
    Ok((mesh, op))
}

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    io::write_text(&dir.join(name), text)?;
    files.push(PathBuf::from(name));
    Ok(())
}

fn cmd_run(cfg: &RunConfig, dir: &Path) -> Result<(Verdict, Vec<PathBuf>)> {
    let (mesh, op) = build(cfg, cfg.geometry.mesh_density)?;
    let model = cfg.model();
    let gap = cfg.gap_model();
    let solver = cfg.solver_config();
    let stepper = Stepper::new(&op, &model, &gap, &solver)?;
    let s0 = initialize(&mesh, &op, &cfg.initial)?;
    let stride = cfg.output.stride;
    let formats = &cfg.output.formats;
    let mut files = Vec::new();
    if formats.contains(&OutputFormat::Vtk) {
        write(dir, "mesh.vtk", &io::vtk_string(&mesh, &[]), &mut files)?;
    }
    let mut csv = String::from(io::TIMESERIES_HEADER);
    csv.push('\n');
    let mut count = 0usize;
    let mut last: Option<StepReport> = None;
    let mut worst_flux = 0.0f64;
    let mut prev = None;
    let result = stepper.run(s0, |s, rep| {
        if let Some(r) = rep {
            worst_flux = worst_flux.max(r.flux.max_abs() / r.state_norm.max(1.0));
            last = Some(r.clone());
        }
        if count % stride == 0 {
            let e = energy::energy(&op, &model, &gap, solver.eps, solver.delta, s, prev.as_ref());
            csv.push_str(&io::timeseries_row(s.t, &e, s.norm(), rep));
            csv.push('\n');
            if formats.contains(&OutputFormat::Vtk) {
                let name = format!("fields/state_{:05}.vtk", count / stride);
                let u = io::vertex_potential(&op, s);
                io::write_vtk(&dir.join(&name), &mesh, &[("u", &u)])?;
                files.push(PathBuf::from(name));
            }
            prev = Some(s.clone());
        }
        count += 1;
        Ok(())
    });
    let fin = match result {
        Ok(f) => f,
        Err(e) => {
            log::error!("run failed: {e}; last step report: {last:?}");
            return Err(e);
        }
    };
    if formats.contains(&OutputFormat::Csv) {
        write(dir, "timeseries.csv", &csv, &mut files)?;
    }
    if formats.contains(&OutputFormat::Binary) {
        io::write_final_state(dir, &fin)?;
        files.push(PathBuf::from("final_state.bin"));
        files.push(PathBuf::from("final_state.json"));
    }
    let mut v = Verdict::new("run");
    v.check("completed", true, format!("t = {}", fin.t));
    let tol = 10.0 * solver.lin_tol;
    v.check(
        "flux_balance",
        worst_flux <= tol,
        format!("max residual / state norm = {worst_flux:.3e}, tol {tol:e}"),
    );
    Ok((v, files))
}

fn cmd_certify(cfg: &RunConfig, dir: &Path) -> Result<(Verdict, Vec<PathBuf>)> {
    let c = &cfg.experiments.certify;
    let rep = certify_assumptions(&cfg.model(), (c.v_range[0], c.v_range[1]), (c.w_range[0], c.w_range[1]), c.samples)?;
    let mut files = Vec::new();
    write(dir, "assumptions.csv", &rep.to_csv(), &mut files)?;
    write(dir, "assumptions.txt", &rep.to_table(), &mut files)?;
    let mut v = Verdict::new("certify");
    for r in &rep.records {
        v.check(&r.name, r.pass, format!("worst margin {:.3e}, constant {:.6}", r.worst_margin, r.constant));
    }
    v.check(
        "e_coefficient_nonnegative",
        rep.e_coefficient >= 0.0,
        format!("coefficient {}", rep.e_coefficient),
    );
    Ok((v, files))
}

fn cmd_spd(cfg: &RunConfig, dir: &Path, delta: f64) -> Result<(Verdict, Vec<PathBuf>)> {
    if !(delta >= 0.0) {
        return Err(Error::Config(format!("--delta must be >= 0, got {delta}")));
    }
    let (_, op) = build(cfg, cfg.geometry.mesh_density)?;
    let a = regularized_matrix(&op, cfg.solver.eps, delta, cfg.gap.c_ratio);
    let strict = check_spd(&a, SpdMode::Strict)?;
    let semi = check_spd(&a, SpdMode::Semidefinite)?;
    let mut files = Vec::new();
    io::write_matrix_market(&dir.join("galerkin_matrix.mtx"), &a)?;
    files.push(PathBuf::from("galerkin_matrix.mtx"));
    let pf = |b: bool| if b { "pass" } else { "fail" };
    let text = format!(
        "delta = {delta:e}, dim = {}\nstrict PD: {}\nsemidefinite: {}, strict: {}\nmin pivot {:?}, min Ritz {:?}, ||A||_inf {:.6e}\n",
        a.rows(),
        pf(strict.pass),
        pf(semi.pass),
        pf(strict.pass),
        strict.min_pivot,
        semi.min_ritz,
        semi.norm
    );
    print!("{text}");
    write(dir, "spd.txt", &text, &mut files)?;
    let mut v = Verdict::new("spd");
    if delta > 0.0 {
        v.check("strict", strict.pass, format!("min pivot {:?}", strict.min_pivot));
    } else {
        v.check("semidefinite", semi.pass, format!("min Ritz {:?}", semi.min_ritz));
        v.check(
            "strict_fails_without_regularization",
            !strict.pass,
            format!("pivot failed at {:?}", strict.pivot_failed_at),
        );
    }
    Ok((v, files))
}

fn cmd_stability(cfg: &RunConfig, dir: &Path) -> Result<(Verdict, Vec<PathBuf>)> {
    let (mesh, op) = build(cfg, cfg.geometry.mesh_density)?;
    let s = &cfg.experiments.stability;
    let rep = diagnostics::stability_experiment(
        &mesh,
        &op,
        &cfg.model(),
        &cfg.gap_model(),
        &cfg.solver_config(),
        &cfg.initial,
        &s.profile,
        &s.etas,
    )?;
    let mut files = Vec::new();
    write(dir, "stability.csv", &rep.to_csv(), &mut files)?;
    write(dir, "stability_summary.txt", &rep.summary(), &mut files)?;
    let mut v = Verdict::new("stability");
    v.check("eta_independence", rep.linearity_pass, format!("spread {:.3e}", rep.linearity_spread));
    v.check("zero_perturbation_bitwise", rep.zero_perturbation_bitwise, "");
    v.check("gronwall_2t", rep.gronwall_pass, format!("excess {:.4}", rep.gronwall_excess));
    Ok((v, files))
}

fn cmd_mms(cfg: &RunConfig, dir: &Path) -> Result<(Verdict, Vec<PathBuf>)> {
    let m = &cfg.experiments.mms;
    let rep = diagnostics::mms_convergence(&cfg.geometry.spec(), &m.case, &m.densities)?;
    let mut files = Vec::new();
    write(dir, "mms.csv", &rep.to_csv(), &mut files)?;
    let mut v = Verdict::new("mms");
    match m.case {
        MmsCase::Trigonometric { .. } => v.check(
            "l2_slope",
            (1.7..=2.3).contains(&rep.slope_u),
            format!("slope {:.4}", rep.slope_u),
        ),
        _ => v.check("exact_reproduction", rep.max_err_u() <= 1e-9, format!("max error {:.3e}", rep.max_err_u())),
    }
    write(dir, "mms_summary.txt", &v.summary(), &mut files)?;
    Ok((v, files))
}

fn cmd_delta_limit(cfg: &RunConfig, dir: &Path) -> Result<(Verdict, Vec<PathBuf>)> {
    let (mesh, op) = build(cfg, cfg.geometry.mesh_density)?;
    let s0 = initialize(&mesh, &op, &cfg.initial)?;
    let rep = diagnostics::delta_limit(
        &op,
        &cfg.model(),
        &cfg.gap_model(),
        &cfg.solver_config(),
        &s0,
        &cfg.experiments.delta_limit.deltas,
    )?;
    let mut files = Vec::new();
    write(dir, "delta_limit.csv", &rep.to_csv(), &mut files)?;
    write(dir, "delta_limit_summary.txt", &rep.summary(), &mut files)?;
    let mut v = Verdict::new("delta-limit");
    v.check("strictly_decreasing", rep.strictly_decreasing, format!("{:?}", rep.distances));
    Ok((v, files))
}

/// Monitors at the configured density and at `refinement` times it.
pub fn apriori_pair(cfg: &RunConfig) -> Result<[apriori::AprioriReport; 2]> {
    let d = cfg.geometry.mesh_density;
    let densities = [d, d * cfg.experiments.apriori.refinement];
    let model = cfg.model();
    let gap = cfg.gap_model();
    let solver = cfg.solver_config();
    let stride = cfg.output.stride;
    let reps = densities.map(|density| -> Result<apriori::AprioriReport> {
        let (mesh, op) = build(cfg, density)?;
        let s0 = initialize(&mesh, &op, &cfg.initial)?;
        let (_, traj) = crate::stepper::run(&op, &model, &gap, &solver, s0, stride)?;
        Ok(apriori::apriori_monitor(&op, &model, solver.eps, &traj.snapshots))
    });
    let [a, b] = reps;
    Ok([a?, b?])
}

fn cmd_apriori(cfg: &RunConfig, dir: &Path) -> Result<(Verdict, Vec<PathBuf>)> {
    let [a, b] = apriori_pair(cfg)?;
    let tol = cfg.experiments.apriori.tolerance;
    let mut csv = String::from("monitor,coarse,fine,relative_spread\n");
    let mut v = Verdict::new("apriori");
    for ((name, spread), ((_, x), (_, y))) in apriori::relative_spread(&a, &b).into_iter().zip(a.headline().into_iter().zip(b.headline())) {
        csv.push_str(&format!("{name},{x:.12e},{y:.12e},{spread:.6e}\n"));
        if name != "e_dtv" {
            v.check(name, spread <= tol, format!("coarse {x:.6e}, fine {y:.6e}, spread {spread:.3e}"));
        }
    }
    v.check("duality", a.duality_pass() && b.duality_pass(), "pointwise in time on both meshes");
    let mut files = Vec::new();
    write(dir, "apriori.csv", &csv, &mut files)?;
    Ok((v, files))
}

fn cmd_nondim(cfg: &RunConfig, dir: &Path) -> Result<(Verdict, Vec<PathBuf>)> {
    let rep = diagnostics::nondimensionalize(&cfg.units)?;
    let mut files = Vec::new();
    let text = rep.to_text();
    print!("{text}");
    write(dir, "nondim.txt", &text, &mut files)?;
    write(dir, "nondim.csv", &rep.to_csv(), &mut files)?;
    let mut v = Verdict::new("nondim");
    v.check("identity", rep.identity_rel_err <= 1e-12, format!("relative error {:.3e}", rep.identity_rel_err));
    Ok((v, files))
}
