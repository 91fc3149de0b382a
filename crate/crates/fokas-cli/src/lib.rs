//! Front end of the `fokas` binary: reads a run configuration, performs the
//! requested computation and writes its artifacts to the output directory.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fokas::characteristic::find_zeros;
use fokas::contours::{select_contour_with, validate_contour, zero_radius, Family};
use fokas::evaluator::{evaluate_grid, evaluate_points, EvalSettings, SolutionGrid};
use fokas::verification::{fd_matching, max_error, sweep, Reference};
use fokas::{fmt17, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{GridSpec, Mode, Overrides, RunConfig};

/// Failure of a run, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite(_) | Error::Overflow(_) | Error::Validation(_) | Error::Numerical(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// One-line summary for the terminal.
    pub summary: String,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }
}

/// Run the configured mode.
///
/// Artifacts written before a numerical failure stay on disk so the failing
/// time levels can be inspected.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut w = Writer::new(&cfg.out)?;
    let mut meta = cfg.echo();
    let result = match cfg.mode {
        Mode::Solve => solve(cfg, &mut w, &mut meta),
        Mode::Benchmark => benchmark(cfg, &mut w, &mut meta),
        Mode::Sweep => run_sweep(cfg, &mut w, &mut meta),
        Mode::Zeros => zeros(cfg, &mut w, &mut meta),
        Mode::ValidateContour => validate(cfg, &mut w, &mut meta),
    };
    let _ = writeln!(meta, "status = {}", if result.is_ok() { "ok" } else { "failed" });
    let _ = writeln!(meta, "runtime_seconds = {:.3}", start.elapsed().as_secs_f64());
    w.put("metadata.txt", &meta)?;
    let summary = result?;
    Ok(Outcome { files: w.files, summary })
}

fn contour_lines(grid: &SolutionGrid, meta: &mut String) {
    for d in &grid.diagnostics {
        let _ = writeln!(
            meta,
            "level t={} contour: {} panels={} nodes={} near_pole_nodes={} residues={}",
            d.t, d.contour, d.panels, d.nodes, d.near_pole_nodes, d.residues
        );
        for warning in &d.warnings {
            let _ = writeln!(meta, "level t={} warning: {warning}", d.t);
        }
    }
}

fn check_failures(grid: &SolutionGrid) -> Result<(), CliError> {
    let failed: Vec<String> = grid
        .ts
        .iter()
        .zip(&grid.failures)
        .filter_map(|(t, f)| f.as_ref().map(|m| format!("t={t}: {m}")))
        .collect();
    if let Some(first) = failed.first() {
        return Err(CliError::Numerical(format!("{} time level(s) failed, first {first}", failed.len())));
    }
    if !grid.all_finite() {
        return Err(CliError::Numerical("solution contains non-finite values".into()));
    }
    Ok(())
}

fn contour_polylines(cfg: &RunConfig, t: f64) -> Result<String, CliError> {
    let mut s = String::from("branch,theta,re,im\n");
    for c in select_contour_with(&cfg.problem, t, &cfg.settings.contour)? {
        for line in c.polyline_csv(801).lines().skip(1) {
            let _ = writeln!(s, "{},{line}", c.branch);
        }
    }
    Ok(s)
}

fn gnuplot_script(title: &str, error_matrix: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 900,650");
    let _ = writeln!(s, "set xlabel 'x'\nset ylabel 't'");
    let _ = writeln!(s, "set view map\nset pm3d map");
    let _ = writeln!(s, "set output 'solution.png'");
    let _ = writeln!(s, "set title 'Re q(x,t): {title}'");
    let _ = writeln!(s, "splot 'solution.matrix' nonuniform matrix with pm3d notitle");
    if error_matrix {
        let _ = writeln!(s, "set output 'error.png'\nset logscale cb\nset format cb '%.0e'");
        let _ = writeln!(s, "set title '|q - exact|: {title}'");
        let _ = writeln!(s, "splot 'error.matrix' nonuniform matrix with pm3d notitle");
    }
    s
}

fn title(cfg: &RunConfig) -> String {
    cfg.benchmark.clone().unwrap_or_else(|| "custom problem".into())
}

fn solve(cfg: &RunConfig, w: &mut Writer, meta: &mut String) -> Result<String, CliError> {
    let grid = evaluate_grid(&cfg.problem, &cfg.grid.xs(), &cfg.grid.ts(), &cfg.settings)?;
    contour_lines(&grid, meta);
    w.put("solution.csv", &grid.to_csv())?;
    w.put("solution.matrix", &grid.to_gnuplot_matrix())?;
    w.put("plot.gp", &gnuplot_script(&title(cfg), false))?;
    w.put("contours.csv", &contour_polylines(cfg, cfg.grid.t_max)?)?;
    check_failures(&grid)?;
    Ok(format!("solved {} x {} grid", grid.xs.len(), grid.ts.len()))
}

/// The reference for error tables: the exact solution, or an FD solution on
/// the same grid.
fn reference_grid(cfg: &RunConfig) -> Result<Option<SolutionGrid>, CliError> {
    if cfg.exact.is_some() {
        return Ok(None);
    }
    let g = &cfg.grid;
    if g.x_min != 0.0 || g.x_max != cfg.problem.length() || g.t_min != 0.0 {
        return Err(CliError::Config(
            "without an exact solution the grid must span x from 0 to L and t from 0 (FD reference)".into(),
        ));
    }
    Ok(Some(fd_matching(&cfg.problem, g.nx, g.nt, g.t_max, cfg.fd_refine)?))
}

fn benchmark(cfg: &RunConfig, w: &mut Writer, meta: &mut String) -> Result<String, CliError> {
    let fd = reference_grid(cfg)?;
    let reference = match (&cfg.exact, &fd) {
        (Some(e), _) => Reference::Exact(e),
        (None, Some(g)) => Reference::Grid(g),
        (None, None) => unreachable!("reference_grid returns a grid when there is no exact solution"),
    };
    let _ = writeln!(meta, "reference = {}", if fd.is_some() { "finite differences" } else { "exact" });
    let grid = evaluate_grid(&cfg.problem, &cfg.grid.xs(), &cfg.grid.ts(), &cfg.settings)?;
    contour_lines(&grid, meta);
    w.put("solution.csv", &grid.to_csv())?;
    w.put("solution.matrix", &grid.to_gnuplot_matrix())?;

    let mut err = grid.clone();
    let mut table = String::from("t,max_error\n");
    for (j, &t) in grid.ts.iter().enumerate() {
        let mut row_max: f64 = 0.0;
        for (i, &x) in grid.xs.iter().enumerate() {
            let want = match reference {
                Reference::Exact(e) => e.eval(x, t),
                Reference::Grid(g) => g.values[j][i],
            };
            let e = (grid.values[j][i] - want).norm();
            err.values[j][i] = e.into();
            row_max = if e.is_nan() { f64::NAN } else { row_max.max(e) };
        }
        let _ = writeln!(table, "{},{}", fmt17(t), fmt17(row_max));
    }
    let total = max_error(&grid, reference)?;
    let _ = writeln!(table, "all,{}", fmt17(total));
    w.put("errors.csv", &table)?;
    w.put("error.matrix", &err.to_gnuplot_matrix())?;
    w.put("plot.gp", &gnuplot_script(&title(cfg), true))?;
    let _ = writeln!(meta, "max_error = {}", fmt17(total));
    check_failures(&grid)?;
    Ok(format!("max_error = {total:.3e}"))
}

fn run_sweep(cfg: &RunConfig, w: &mut Writer, meta: &mut String) -> Result<String, CliError> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("mode sweep needs a [sweep] section".into()))?;
    let fd = reference_grid(cfg)?;
    let reference = match (&cfg.exact, &fd) {
        (Some(e), _) => Reference::Exact(e),
        (None, Some(g)) => Reference::Grid(g),
        (None, None) => unreachable!("reference_grid returns a grid when there is no exact solution"),
    };
    let table = sweep(
        &cfg.problem,
        spec.parameter,
        &spec.values,
        &cfg.grid.xs(),
        &cfg.grid.ts(),
        &cfg.settings,
        reference,
    )?;
    let _ = writeln!(meta, "sweep_parameter = {}", spec.parameter.name());
    w.put("sweep.csv", &table.to_csv())?;
    if table.rows.iter().any(|r| r.max_error.is_nan()) {
        return Err(CliError::Numerical("a sweep value produced non-finite errors".into()));
    }
    Ok(format!("{} sweep over {} values", spec.parameter.name(), table.rows.len()))
}

fn zeros(cfg: &RunConfig, w: &mut Writer, meta: &mut String) -> Result<String, CliError> {
    if cfg.problem.is_half_line() {
        return Err(CliError::Config("the half-line problem has no characteristic zeros".into()));
    }
    let table = find_zeros(cfg.problem.alpha, cfg.problem.length(), cfg.zeros_radius)?;
    let _ = writeln!(meta, "zeros_radius = {}", cfg.zeros_radius);
    let _ = writeln!(meta, "zeros_found = {}", table.zeros.len());
    let _ = writeln!(meta, "zeros_per_ray = {:?}", table.count_per_ray);
    let _ = writeln!(meta, "zeros_dropped = {}", table.dropped);
    w.put("zeros.csv", &table.to_csv())?;
    if table.dropped > 0 {
        return Err(CliError::Numerical(format!("{} zero candidates did not converge", table.dropped)));
    }
    Ok(format!("{} zeros within radius {}", table.zeros.len(), cfg.zeros_radius))
}

/// Settings with the contour moved to a different but equivalent one.
fn perturbed(cfg: &RunConfig, t: f64) -> Result<EvalSettings, CliError> {
    let mut s = cfg.settings;
    let base = select_contour_with(&cfg.problem, t, &s.contour)?;
    match base[0].family {
        Family::HalfLineHyperbola => s.contour.theta_max = Some(0.8 * base[0].theta_max),
        Family::IntervalHyperbola { eta, .. } => s.contour.eta = Some(1.2 * eta),
        Family::IntervalAlpha1 { beta, .. } => s.contour.beta = Some(beta + 2.0),
    }
    Ok(s)
}

const INVARIANCE_TOL: f64 = 1e-6;

fn validate(cfg: &RunConfig, w: &mut Writer, meta: &mut String) -> Result<String, CliError> {
    let t = cfg.grid.t_max;
    let mut report = String::new();
    let mut ok = true;
    let contours = select_contour_with(&cfg.problem, t, &cfg.settings.contour)?;
    if cfg.problem.is_half_line() {
        let _ = writeln!(report, "half-line contour at t={t}: no poles to check");
    } else {
        for c in &contours {
            let zeros = find_zeros(cfg.problem.alpha, cfg.problem.length(), zero_radius(c))?;
            let r = validate_contour(c, &zeros, cfg.problem.alpha)?;
            ok &= r.passed();
            let _ = writeln!(report, "{r}");
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g = &cfg.grid;
    let t_lo = g.t_min.max(1e-3 * g.t_max);
    let mut worst: f64 = 0.0;
    let _ = writeln!(report, "invariance check (seed {}):", cfg.seed);
    for _ in 0..cfg.test_points {
        let x = rng.gen_range(g.x_min..=g.x_max);
        let t = rng.gen_range(t_lo..=g.t_max);
        let a = evaluate_points(&cfg.problem, &[x], t, &cfg.settings)?[0];
        let b = evaluate_points(&cfg.problem, &[x], t, &perturbed(cfg, t)?)?[0];
        let d = (a - b).norm();
        worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
        let _ = writeln!(report, "  x={} t={} |dq|={:.3e}", fmt17(x), fmt17(t), d);
    }
    let invariant = worst <= INVARIANCE_TOL;
    ok &= invariant;
    let _ = writeln!(
        report,
        "invariance: max |dq| = {worst:.3e} (tolerance {INVARIANCE_TOL:e}) {}",
        if invariant { "ok" } else { "FAILED" }
    );
    let _ = writeln!(report, "overall: {}", if ok { "ok" } else { "FAILED" });
    let _ = writeln!(meta, "validation = {}", if ok { "ok" } else { "failed" });
    w.put("validation.txt", &report)?;
    w.put("contours.csv", &contour_polylines(cfg, t)?)?;
    if ok {
        Ok("contour validation passed".into())
    } else {
        Err(CliError::Numerical("contour validation failed, see validation.txt".into()))
    }
}
