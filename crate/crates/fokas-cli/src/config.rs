//! Run configuration: flat `key = value` lines grouped under `[section]`
//! headers. Full-line comments start with `#` or `;`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use fokas::contours::ContourOverrides;
use fokas::evaluator::EvalSettings;
use fokas::verification::SweepParameter;
use fokas::{manufactured_problem_with_alpha, Arity, DataFunction, ProblemSpec};
use ini::{Ini, ParseOption};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Benchmark,
    Sweep,
    Zeros,
    ValidateContour,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "solve" => Ok(Mode::Solve),
            "benchmark" => Ok(Mode::Benchmark),
            "sweep" => Ok(Mode::Sweep),
            "zeros" => Ok(Mode::Zeros),
            "validate-contour" => Ok(Mode::ValidateContour),
            other => Err(CliError::Config(format!(
                "unknown mode {other:?} (expected solve, benchmark, sweep, zeros or validate-contour)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Solve => "solve",
            Mode::Benchmark => "benchmark",
            Mode::Sweep => "sweep",
            Mode::Zeros => "zeros",
            Mode::ValidateContour => "validate-contour",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

impl GridSpec {
    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.nx)
    }

    pub fn ts(&self) -> Vec<f64> {
        linspace(self.t_min, self.t_max, self.nt)
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Name of the built-in benchmark, if the problem is one.
    pub benchmark: Option<String>,
    pub problem: ProblemSpec,
    pub exact: Option<DataFunction>,
    pub grid: GridSpec,
    pub settings: EvalSettings,
    pub mode: Mode,
    pub out: PathBuf,
    pub seed: u64,
    /// Random points checked for contour invariance in validate-contour mode.
    pub test_points: usize,
    pub sweep: Option<SweepSpec>,
    pub zeros_radius: f64,
    /// Spatial refinement of the FD reference used when no exact solution
    /// is known.
    pub fd_refine: usize,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<String>,
    pub out: Option<PathBuf>,
    pub theta_max: Option<f64>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("run", &["mode", "out", "seed", "test_points"]),
    (
        "problem",
        &["benchmark", "domain", "length", "alpha", "q0", "f0", "g0", "h", "exact"],
    ),
    ("grid", &["x_min", "x_max", "nx", "t_min", "t_max", "nt"]),
    ("contour", &["theta_max", "eta", "shift", "gamma", "beta"]),
    (
        "evaluator",
        &[
            "panel_width",
            "order",
            "phase_budget",
            "amplitude_floor",
            "subtract_boundary",
            "residues",
            "refine_check",
            "refine_tol",
        ],
    ),
    ("sweep", &["parameter", "values"]),
    ("zeros", &["radius"]),
    ("reference", &["fd_refine"]),
];

type Table = BTreeMap<String, BTreeMap<String, String>>;

fn read_table(text: &str) -> Result<Table, CliError> {
    let opt = ParseOption {
        enabled_quote: false,
        enabled_escape: false,
        ..ParseOption::default()
    };
    let ini = Ini::load_from_str_opt(text, opt).map_err(|e| CliError::Config(e.to_string()))?;
    let mut table = Table::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(CliError::Config(format!("key `{k}` appears before any [section]")));
            }
            continue;
        };
        let allowed = KEYS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, k)| *k)
            .ok_or_else(|| CliError::Config(format!("unknown section [{section}]")))?;
        let entry = table.entry(section.to_string()).or_default();
        for (k, v) in props.iter() {
            if !allowed.contains(&k) {
                return Err(CliError::Config(format!("unknown key `{k}` in [{section}]")));
            }
            if entry.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("duplicate key `{k}` in [{section}]")));
            }
        }
    }
    Ok(table)
}

struct Section<'a> {
    name: &'a str,
    map: Option<&'a BTreeMap<String, String>>,
}

impl Section<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.and_then(|m| m.get(key)).map(String::as_str)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| CliError::Config(format!("[{}] {key} = {v:?} is not a finite number", self.name)))
            })
            .transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.raw(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| CliError::Config(format!("[{}] {key} = {v:?} is not a whole number", self.name)))
            })
            .transpose()
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.raw(key)
            .map(|v| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(CliError::Config(format!("[{}] {key} = {v:?} must be true or false", self.name))),
            })
            .transpose()
    }

    fn function(&self, key: &str, arity: Arity) -> Result<Option<DataFunction>, CliError> {
        self.raw(key)
            .map(|v| DataFunction::parse(v, arity).map_err(|e| CliError::Config(format!("[{}] {key}: {e}", self.name))))
            .transpose()
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if x <= 0.0 => Err(CliError::Config(format!("{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha.abs() > 1.0 {
        Err(CliError::Config(format!(
            "alpha = {alpha} is not supported: the coupling constant must satisfy |alpha| <= 1"
        )))
    } else {
        Ok(())
    }
}

/// Default grid of a built-in benchmark.
fn benchmark_grid(name: &str) -> GridSpec {
    match name {
        "halfline-exp" => GridSpec { x_min: 0.0, x_max: 3.0, nx: 50, t_min: 0.0, t_max: 1.0, nt: 50 },
        "alpha1-sine" => GridSpec { x_min: 0.0, x_max: 1.0, nx: 26, t_min: 0.0, t_max: 10.0, nt: 21 },
        _ => GridSpec { x_min: 0.0, x_max: 1.0, nx: 50, t_min: 0.0, t_max: 1.0, nt: 50 },
    }
}

impl RunConfig {
    pub fn parse(text: &str, cli: &Overrides) -> Result<Self, CliError> {
        let table = read_table(text)?;
        let sec = |name: &'static str| Section {
            name,
            map: table.get(name),
        };

        let p = sec("problem");
        let alpha = p.f64("alpha")?;
        if let Some(a) = alpha {
            check_alpha(a)?;
        }
        let (benchmark, problem, exact) = if let Some(name) = p.raw("benchmark") {
            for key in ["domain", "length", "q0", "f0", "g0", "h", "exact"] {
                if p.raw(key).is_some() {
                    return Err(CliError::Config(format!(
                        "[problem] {key} cannot be combined with benchmark = {name}"
                    )));
                }
            }
            if alpha.is_some() && name != "alpha-varying-sine" {
                return Err(CliError::Config(format!("benchmark {name} has a fixed alpha")));
            }
            let b = manufactured_problem_with_alpha(name, alpha.unwrap_or(0.5))?;
            (Some(name.to_string()), b.problem, b.exact)
        } else {
            let q0 = p
                .function("q0", Arity::X)?
                .ok_or_else(|| CliError::Config("[problem] needs either benchmark or q0".into()))?;
            let f0 = p.function("f0", Arity::T)?.unwrap_or_else(|| DataFunction::zero(Arity::T));
            let h = p.function("h", Arity::XT)?;
            let exact = p.function("exact", Arity::XT)?;
            let problem = match p.raw("domain").unwrap_or("interval") {
                "interval" => {
                    let g0 = p.function("g0", Arity::T)?.unwrap_or_else(|| DataFunction::zero(Arity::T));
                    ProblemSpec::interval(p.f64("length")?.unwrap_or(1.0), alpha.unwrap_or(0.0), q0, f0, g0, h)?
                }
                "half-line" => {
                    for key in ["length", "alpha", "g0"] {
                        if p.raw(key).is_some() {
                            return Err(CliError::Config(format!("[problem] {key} does not apply to the half-line")));
                        }
                    }
                    ProblemSpec::half_line(q0, f0, h)?
                }
                other => {
                    return Err(CliError::Config(format!(
                        "[problem] domain = {other:?} (expected interval or half-line)"
                    )))
                }
            };
            (None, problem, exact)
        };

        let g = sec("grid");
        let base = benchmark
            .as_deref()
            .map(benchmark_grid)
            .unwrap_or_else(|| benchmark_grid(if problem.is_half_line() { "halfline-exp" } else { "" }));
        let x_max_default = if problem.is_half_line() { base.x_max } else { problem.length() };
        let grid = GridSpec {
            x_min: g.f64("x_min")?.unwrap_or(0.0),
            x_max: g.f64("x_max")?.unwrap_or(x_max_default),
            nx: g.usize("nx")?.unwrap_or(base.nx),
            t_min: g.f64("t_min")?.unwrap_or(0.0),
            t_max: g.f64("t_max")?.unwrap_or(base.t_max),
            nt: g.usize("nt")?.unwrap_or(base.nt),
        };
        if grid.nx < 2 || grid.nt < 2 {
            return Err(CliError::Config("[grid] nx and nt must be at least 2".into()));
        }
        if !(grid.x_min < grid.x_max) || !(grid.t_min < grid.t_max) {
            return Err(CliError::Config("[grid] ranges must be nonempty (min < max)".into()));
        }
        if grid.x_min < 0.0 || grid.t_min < 0.0 {
            return Err(CliError::Config("[grid] x_min and t_min must be >= 0".into()));
        }
        if !problem.is_half_line() && grid.x_max > problem.length() {
            return Err(CliError::Config(format!(
                "[grid] x_max = {} exceeds the interval length {}",
                grid.x_max,
                problem.length()
            )));
        }

        let c = sec("contour");
        let contour = ContourOverrides {
            theta_max: cli.theta_max.or(c.f64("theta_max")?),
            eta: cli.eta.or(c.f64("eta")?),
            shift: c.f64("shift")?,
            gamma: c.f64("gamma")?,
            beta: cli.beta.or(c.f64("beta")?),
        };
        positive("theta_max", contour.theta_max)?;
        positive("eta", contour.eta)?;
        positive("gamma", contour.gamma)?;
        positive("beta", contour.beta)?;
        if let Some(s) = contour.shift {
            if s < 0.0 {
                return Err(CliError::Config(format!("shift must be >= 0, got {s}")));
            }
        }

        let e = sec("evaluator");
        let mut settings = EvalSettings {
            contour,
            ..EvalSettings::default()
        };
        if let Some(v) = e.f64("panel_width")? {
            settings.panel_width = v;
        }
        if let Some(v) = e.usize("order")? {
            settings.order = v;
        }
        if let Some(v) = e.f64("phase_budget")? {
            settings.phase_budget = v;
        }
        if let Some(v) = e.f64("amplitude_floor")? {
            settings.amplitude_floor = v;
        }
        if let Some(v) = e.bool("subtract_boundary")? {
            settings.subtract_boundary = v;
        }
        if let Some(v) = e.bool("residues")? {
            settings.residues = v;
        }
        if let Some(v) = e.bool("refine_check")? {
            settings.refine_check = v;
        }
        if let Some(v) = e.f64("refine_tol")? {
            settings.refine_tol = v;
        }
        positive("panel_width", Some(settings.panel_width))?;
        positive("phase_budget", Some(settings.phase_budget))?;
        positive("refine_tol", Some(settings.refine_tol))?;
        if !(2..=256).contains(&settings.order) {
            return Err(CliError::Config(format!("order must be in 2..=256, got {}", settings.order)));
        }
        if !(settings.amplitude_floor > 0.0 && settings.amplitude_floor < 1.0) {
            return Err(CliError::Config("amplitude_floor must lie in (0, 1)".into()));
        }

        let r = sec("run");
        let mode = match cli.mode.as_deref().or(r.raw("mode")) {
            Some(m) => Mode::parse(m)?,
            None => Mode::Solve,
        };
        let out = cli
            .out
            .clone()
            .or_else(|| r.raw("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let seed = match cli.seed {
            Some(s) => s,
            None => r
                .raw("seed")
                .map(|v| v.parse::<u64>().map_err(|_| CliError::Config(format!("[run] seed = {v:?} is not a whole number"))))
                .transpose()?
                .unwrap_or(0),
        };
        let test_points = r.usize("test_points")?.unwrap_or(5);

        let s = sec("sweep");
        let sweep = match (s.raw("parameter"), s.raw("values")) {
            (Some(p), Some(v)) => {
                let parameter = SweepParameter::parse(p).map_err(|e| CliError::Config(e.to_string()))?;
                let values = v
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| CliError::Config(format!("[sweep] bad value {x:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if values.is_empty() {
                    return Err(CliError::Config("[sweep] values is empty".into()));
                }
                Some(SweepSpec { parameter, values })
            }
            (None, None) => None,
            _ => return Err(CliError::Config("[sweep] needs both parameter and values".into())),
        };
        if mode == Mode::Sweep && sweep.is_none() {
            return Err(CliError::Config("mode sweep needs a [sweep] section".into()));
        }
        if mode == Mode::Benchmark && exact.is_none() && problem.is_half_line() {
            return Err(CliError::Config(
                "benchmark mode needs an exact solution or an interval problem (FD reference)".into(),
            ));
        }

        let zeros_radius = sec("zeros").f64("radius")?.unwrap_or(30.0);
        positive("radius", Some(zeros_radius))?;
        let fd_refine = sec("reference").usize("fd_refine")?.unwrap_or(8);
        if fd_refine == 0 {
            return Err(CliError::Config("[reference] fd_refine must be >= 1".into()));
        }

        Ok(Self {
            benchmark,
            problem,
            exact,
            grid,
            settings,
            mode,
            out,
            seed,
            test_points,
            sweep,
            zeros_radius,
            fd_refine,
        })
    }

    /// Every resolved parameter as `key = value` lines.
    pub fn echo(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let p = &self.problem;
        let o = &self.settings.contour;
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| x.to_string());
        let _ = writeln!(s, "mode = {}", self.mode);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(b) = &self.benchmark {
            let _ = writeln!(s, "benchmark = {b}");
        }
        let _ = writeln!(s, "domain = {}", if p.is_half_line() { "half-line" } else { "interval" });
        if !p.is_half_line() {
            let _ = writeln!(s, "length = {}", p.length());
            let _ = writeln!(s, "alpha = {}", p.alpha);
            let _ = writeln!(s, "g0 = {}", p.g0);
        }
        let _ = writeln!(s, "q0 = {}", p.q0);
        let _ = writeln!(s, "f0 = {}", p.f0);
        let _ = writeln!(s, "h = {}", p.forcing().map_or_else(|| "0".to_string(), |h| h.to_string()));
        let _ = writeln!(s, "exact = {}", self.exact.as_ref().map_or_else(|| "none".to_string(), |e| e.to_string()));
        let g = &self.grid;
        let _ = writeln!(s, "x_min = {}\nx_max = {}\nnx = {}", g.x_min, g.x_max, g.nx);
        let _ = writeln!(s, "t_min = {}\nt_max = {}\nnt = {}", g.t_min, g.t_max, g.nt);
        let _ = writeln!(s, "theta_max = {}", opt(o.theta_max));
        let _ = writeln!(s, "eta = {}", opt(o.eta));
        let _ = writeln!(s, "shift = {}", opt(o.shift));
        let _ = writeln!(s, "gamma = {}", opt(o.gamma));
        let _ = writeln!(s, "beta = {}", opt(o.beta));
        let e = &self.settings;
        let _ = writeln!(s, "panel_width = {}", e.panel_width);
        let _ = writeln!(s, "order = {}", e.order);
        let _ = writeln!(s, "phase_budget = {}", e.phase_budget);
        let _ = writeln!(s, "amplitude_floor = {}", e.amplitude_floor);
        let _ = writeln!(s, "subtract_boundary = {}", e.subtract_boundary);
        let _ = writeln!(s, "residues = {}", e.residues);
        let _ = writeln!(s, "refine_check = {}", e.refine_check);
        let _ = writeln!(s, "refine_tol = {}", e.refine_tol);
        s
    }
}
