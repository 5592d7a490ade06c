//! Experiment configuration: TOML sections of `key = value` lines, validated
//! against the preconditions of the numerical modules. Every error names the
//! offending key and its line.

use std::path::{Path, PathBuf};

use toml_edit::{Document, Item, Table, Value};

use crate::error::{Error, Result};
use crate::solver::ModelParams;

/// The batch pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Integrated,
    Continuation,
    Propagation,
    Smoothing,
    Asymptotics,
    TransformCheck,
    BarrierCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Simulate,
        Experiment::Integrated,
        Experiment::Continuation,
        Experiment::Propagation,
        Experiment::Smoothing,
        Experiment::Asymptotics,
        Experiment::TransformCheck,
        Experiment::BarrierCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Integrated => "integrated",
            Experiment::Continuation => "continuation",
            Experiment::Propagation => "propagation",
            Experiment::Smoothing => "smoothing",
            Experiment::Asymptotics => "asymptotics",
            Experiment::TransformCheck => "transform-check",
            Experiment::BarrierCheck => "barrier-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    /// Comma-separated list of valid names, for error messages.
    pub fn valid_names() -> String {
        Self::ALL.map(Experiment::name).join(", ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_length: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshots {
    /// Equally spaced times `0, t_end/(k-1), …, t_end`.
    Count(usize),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpec {
    pub t_end: f64,
    pub snapshots: Snapshots,
}

impl TimeSpec {
    pub fn snap_times(&self) -> Vec<f64> {
        match &self.snapshots {
            Snapshots::List(v) => v.clone(),
            Snapshots::Count(k) => (0..*k)
                .map(|i| self.t_end * i as f64 / (*k - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Gaussian {
        mass: f64,
        width: f64,
        center: f64,
    },
    /// Gaussian of standard deviation `4h`.
    Dirac {
        mass: f64,
        center: f64,
    },
    /// Smooth compact bump `exp(1 - 1/(1-y²))` scaled to the given mass.
    Bump {
        mass: f64,
        center: f64,
        half_width: f64,
    },
    TwoBump {
        masses: [f64; 2],
        centers: [f64; 2],
        half_widths: [f64; 2],
    },
    HeavisidePrimitive {
        mass: f64,
        x0: f64,
    },
    /// Two-column CSV `x,u` sampled on the configured grid.
    File {
        path: PathBuf,
    },
    Zero,
}

/// Scaling self-consistency of a simulate run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSpec {
    pub lambda: f64,
    pub t: f64,
    pub tolerance: f64,
}

/// Tolerances of the conservation and monotonicity checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSpec {
    pub mass_tolerance: f64,
    pub monotone_tolerance: f64,
    pub p_list: Vec<f64>,
}

impl Default for CheckSpec {
    fn default() -> Self {
        Self {
            mass_tolerance: 1e-8,
            monotone_tolerance: 1e-8,
            p_list: vec![2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSpec {
    pub schedule: Vec<(f64, f64, f64)>,
    pub checkpoint: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    Finite,
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationSpec {
    pub mode: PropagationMode,
    pub threshold_rel: f64,
    pub window: (f64, f64),
    pub tolerance: f64,
    pub probe_radius: f64,
    pub t_probe: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingSpec {
    pub window: (f64, f64),
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticsSpec {
    pub lambdas: Vec<f64>,
    pub t_probe: f64,
    pub p_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformSpec {
    pub q: f64,
    pub sigma: f64,
    pub refine: Vec<usize>,
    pub tau_end: f64,
    pub mass: f64,
    /// Mapped residual must stay below `factor` times the source residual.
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSpec {
    pub x0: f64,
    pub x1: f64,
    pub t1: f64,
    pub taus: Vec<f64>,
    pub xis: Vec<f64>,
    /// Probe points `x < x0`, from `x0 - probe_start` leftwards in steps of `probe_step`.
    pub probe_count: usize,
    pub probe_start: f64,
    pub probe_step: f64,
    pub probe_times: usize,
    pub safety: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualitySpec {
    pub refine: Vec<usize>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonSpec {
    pub pairs: usize,
    pub steps: usize,
    pub tolerance: f64,
}

/// Fully validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelParams,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub initial_data: InitialData,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub checks: CheckSpec,
    pub scaling: Option<ScalingSpec>,
    pub continuation: Option<ContinuationSpec>,
    pub propagation: Option<PropagationSpec>,
    pub smoothing: Option<SmoothingSpec>,
    pub asymptotics: Option<AsymptoticsSpec>,
    pub transform: Option<TransformSpec>,
    pub barrier: Option<BarrierSpec>,
    pub duality: Option<DualitySpec>,
    pub comparison: Option<ComparisonSpec>,
    /// The text the configuration was parsed from.
    pub source: String,
}

impl ExperimentConfig {
    /// Fractional order `α = 1 - s` of the integrated model.
    pub fn alpha(&self) -> f64 {
        1.0 - self.model.s
    }
}

struct Parser<'a> {
    text: &'a str,
    base: Option<&'a Path>,
}

/// View of one table with its dotted name.
struct Section<'a, 'p> {
    parser: &'p Parser<'a>,
    name: String,
    table: &'a Table,
    line: usize,
}

impl<'a> Parser<'a> {
    fn line_of(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())]
            .bytes()
            .filter(|&b| b == b'\n')
            .count()
            + 1
    }

    fn error(&self, line: usize, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl<'a, 'p> Section<'a, 'p> {
    fn path(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{}", self.name, key)
        }
    }

    fn value_line(&self, key: &str) -> usize {
        self.table
            .get_key_value(key)
            .and_then(|(k, item)| item.span().or_else(|| k.span()))
            .map(|s| self.parser.line_of(s.start))
            .unwrap_or(self.line)
    }

    fn fail(&self, key: &str, message: impl Into<String>) -> Error {
        self.parser
            .error(self.value_line(key), &self.path(key), message)
    }

    fn check_keys(&self, allowed: &[&str], subsections: &[&str]) -> Result<()> {
        for (k, item) in self.table.iter() {
            if item.is_table() {
                if !subsections.contains(&k) {
                    return Err(self.fail(
                        k,
                        format!(
                            "unknown section; expected one of: {}",
                            subsections.join(", ")
                        ),
                    ));
                }
            } else if !allowed.contains(&k) {
                return Err(self.fail(
                    k,
                    format!("unknown key; expected one of: {}", allowed.join(", ")),
                ));
            }
        }
        Ok(())
    }

    fn value(&self, key: &str) -> Option<&'a Value> {
        self.table.get(key).and_then(Item::as_value)
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.value(key) {
            None => Ok(None),
            Some(v) => as_f64(v)
                .map(Some)
                .ok_or_else(|| self.fail(key, "expected a number")),
        }
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.opt_f64(key)?
            .ok_or_else(|| self.fail(key, "missing required key"))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    fn positive(&self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = match default {
            Some(d) => self.f64_or(key, d)?,
            None => self.f64(key)?,
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(self.fail(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn usize(&self, key: &str, default: Option<usize>) -> Result<usize> {
        match self.value(key) {
            None => default.ok_or_else(|| self.fail(key, "missing required key")),
            Some(v) => v
                .as_integer()
                .filter(|&i| i >= 0)
                .map(|i| i as usize)
                .ok_or_else(|| self.fail(key, "expected a nonnegative integer")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&'a str>> {
        match self.value(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(Some)
                .ok_or_else(|| self.fail(key, "expected a string")),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.value(key) {
            None => Ok(None),
            Some(v) => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| self.fail(key, "expected a list of numbers"))?;
                arr.iter()
                    .map(|x| as_f64(x).ok_or_else(|| self.fail(key, "expected a list of numbers")))
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
        }
    }

    fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        Ok(self.list(key)?.unwrap_or_else(|| default.to_vec()))
    }

    fn pair(&self, key: &str, default: Option<(f64, f64)>) -> Result<(f64, f64)> {
        match self.list(key)? {
            None => default.ok_or_else(|| self.fail(key, "missing required key")),
            Some(v) if v.len() == 2 => Ok((v[0], v[1])),
            Some(v) => Err(self.fail(key, format!("expected two numbers, got {}", v.len()))),
        }
    }

    fn sizes(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.value(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| self.fail(key, "expected a list of integers"))?;
                arr.iter()
                    .map(|x| {
                        x.as_integer()
                            .filter(|&i| i > 0)
                            .map(|i| i as usize)
                            .ok_or_else(|| self.fail(key, "expected a list of positive integers"))
                    })
                    .collect()
            }
        }
    }

    fn sub(&self, key: &str) -> Option<Section<'a, 'p>> {
        let (k, item) = self.table.get_key_value(key)?;
        let table = item.as_table()?;
        let line = k
            .span()
            .map(|s| self.parser.line_of(s.start))
            .unwrap_or(self.line);
        Some(Section {
            parser: self.parser,
            name: self.path(key),
            table,
            line,
        })
    }

    fn required(&self, key: &str) -> Result<Section<'a, 'p>> {
        self.sub(key).ok_or_else(|| {
            self.parser
                .error(self.line, &self.path(key), "missing required section")
        })
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

/// Parses and validates a configuration. Relative file paths resolve
/// against the working directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_at(text, None)
}

/// [`parse_config`] with relative paths resolved against `base`.
pub fn parse_config_at(text: &str, base: Option<&Path>) -> Result<ExperimentConfig> {
    let doc = Document::parse(text).map_err(|e| {
        let p = Parser { text, base };
        Error::Syntax {
            line: e.span().map(|s| p.line_of(s.start)).unwrap_or(0),
            message: e.message().trim().to_string(),
        }
    })?;
    let parser = Parser { text, base };
    let root = Section {
        parser: &parser,
        name: String::new(),
        table: doc.as_table(),
        line: 1,
    };
    root.check_keys(
        &["experiment", "output_dir", "seed"],
        &[
            "model",
            "grid",
            "time",
            "initial_data",
            "checks",
            "scaling",
            "continuation",
            "propagation",
            "smoothing",
            "asymptotics",
            "transform",
            "barrier",
            "duality",
            "comparison",
        ],
    )?;
    let name = root
        .string("experiment")?
        .ok_or_else(|| root.fail("experiment", "missing required key"))?;
    let experiment = Experiment::from_name(name).ok_or_else(|| {
        root.fail(
            "experiment",
            format!(
                "unknown experiment `{name}`; valid names: {}",
                Experiment::valid_names()
            ),
        )
    })?;
    let output_dir = PathBuf::from(root.string("output_dir")?.unwrap_or("output"));
    let seed = match root.value("seed") {
        None => 0,
        Some(v) => v
            .as_integer()
            .filter(|&i| i >= 0)
            .map(|i| i as u64)
            .ok_or_else(|| root.fail("seed", "expected a nonnegative integer"))?,
    };

    let model = parse_model(&root)?;
    let grid = parse_grid(&root)?;
    let time = parse_time(&root)?;
    let initial_data = parse_initial(&root, &grid)?;

    let checks = match root.sub("checks") {
        None => CheckSpec::default(),
        Some(c) => {
            c.check_keys(&["mass_tolerance", "monotone_tolerance", "p"], &[])?;
            let d = CheckSpec::default();
            let p_list = c.list_or("p", &d.p_list)?;
            if p_list.iter().any(|&p| !(p > 1.0)) {
                return Err(c.fail("p", "every p must exceed 1"));
            }
            CheckSpec {
                mass_tolerance: c.positive("mass_tolerance", Some(d.mass_tolerance))?,
                monotone_tolerance: c.positive("monotone_tolerance", Some(d.monotone_tolerance))?,
                p_list,
            }
        }
    };

    let scaling = match root.sub("scaling") {
        None => None,
        Some(c) => {
            c.check_keys(&["lambda", "t", "tolerance"], &[])?;
            let lambda = c.f64_or("lambda", 2.0)?;
            if !(lambda >= 1.0) {
                return Err(c.fail("lambda", "must be >= 1"));
            }
            Some(ScalingSpec {
                lambda,
                t: c.positive("t", None)?,
                tolerance: c.positive("tolerance", Some(0.02))?,
            })
        }
    };

    let continuation = match root.sub("continuation") {
        None => None,
        Some(c) => {
            c.check_keys(&["schedule", "checkpoint"], &[])?;
            let arr = c
                .value("schedule")
                .and_then(Value::as_array)
                .ok_or_else(|| c.fail("schedule", "expected a list of [eps, delta, mu] triples"))?;
            let mut schedule = Vec::new();
            for entry in arr.iter() {
                let t = entry
                    .as_array()
                    .filter(|a| a.len() == 3)
                    .and_then(|a| {
                        let v: Option<Vec<f64>> = a.iter().map(as_f64).collect();
                        v
                    })
                    .ok_or_else(|| {
                        c.fail("schedule", "expected a list of [eps, delta, mu] triples")
                    })?;
                schedule.push((t[0], t[1], t[2]));
            }
            crate::solver::validate_schedule(&schedule)
                .map_err(|e| c.fail("schedule", e.to_string()))?;
            let checkpoint = c.positive("checkpoint", Some(time.t_end))?;
            if checkpoint > time.t_end {
                return Err(c.fail("checkpoint", "must not exceed time.t_end"));
            }
            Some(ContinuationSpec {
                schedule,
                checkpoint,
            })
        }
    };

    let propagation = match root.sub("propagation") {
        None => None,
        Some(c) => {
            c.check_keys(
                &[
                    "mode",
                    "threshold_rel",
                    "window",
                    "tolerance",
                    "probe_radius",
                    "t_probe",
                ],
                &[],
            )?;
            let mode = match c.string("mode")?.unwrap_or("finite") {
                "finite" => PropagationMode::Finite,
                "infinite" => PropagationMode::Infinite,
                other => {
                    return Err(c.fail(
                        "mode",
                        format!("expected `finite` or `infinite`, got `{other}`"),
                    ))
                }
            };
            let window = c.pair("window", Some((0.0, time.t_end)))?;
            if !(window.0 < window.1) {
                return Err(c.fail("window", "must be increasing"));
            }
            let probe_radius = c.f64_or("probe_radius", 0.5 * grid.half_length)?;
            if !(probe_radius >= 0.0 && probe_radius < grid.half_length) {
                return Err(c.fail("probe_radius", "must lie in [0, grid.half_length)"));
            }
            let t_probe = c.positive("t_probe", Some(time.t_end))?;
            if mode == PropagationMode::Infinite && model.m >= 2.0 {
                return Err(root
                    .required("model")?
                    .fail("m", "the infinite-propagation witness needs m < 2"));
            }
            Some(PropagationSpec {
                mode,
                threshold_rel: c.positive("threshold_rel", Some(1e-8))?,
                window,
                tolerance: c.positive("tolerance", Some(0.05))?,
                probe_radius,
                t_probe,
            })
        }
    };

    let smoothing = match root.sub("smoothing") {
        None => None,
        Some(c) => {
            c.check_keys(&["window", "tolerance"], &[])?;
            let window = c.pair("window", Some((1.0, time.t_end)))?;
            if !(window.0 > 0.0 && window.1 >= 10.0 * window.0) {
                return Err(c.fail("window", "must be positive and span at least one decade"));
            }
            Some(SmoothingSpec {
                window,
                tolerance: c.positive("tolerance", Some(0.10))?,
            })
        }
    };

    let asymptotics = match root.sub("asymptotics") {
        None => None,
        Some(c) => {
            c.check_keys(&["lambdas", "t_probe", "p"], &[])?;
            let lambdas = c.list_or("lambdas", &[1.0, 2.0, 4.0, 8.0])?;
            if lambdas.len() < 3 || lambdas[0] < 1.0 || lambdas.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(c.fail("lambdas", "need at least three increasing values >= 1"));
            }
            let p_list = c.list_or("p", &[2.0])?;
            if p_list.iter().any(|&p| !(p >= 1.0)) {
                return Err(c.fail("p", "every p must be >= 1"));
            }
            Some(AsymptoticsSpec {
                lambdas,
                t_probe: c.positive("t_probe", Some(1.0))?,
                p_list,
            })
        }
    };

    let transform = match root.sub("transform") {
        None => None,
        Some(c) => {
            c.check_keys(&["q", "sigma", "refine", "tau_end", "mass", "factor"], &[])?;
            let q = c.positive("q", Some(2.0))?;
            let sigma = c.f64_or("sigma", 0.5)?;
            if !(sigma > 0.0 && sigma < 1.0) {
                return Err(c.fail("sigma", "must lie in (0, 1)"));
            }
            if !((2.0 * q - 1.0) / q > 1.0) {
                return Err(c.fail("q", "must exceed 1 so that the mapped exponent exceeds 1"));
            }
            let refine = c.sizes("refine", &[512, 1024])?;
            for &n in &refine {
                crate::grid::make_grid(grid.half_length, n)
                    .map_err(|e| c.fail("refine", e.to_string()))?;
            }
            if refine.len() < 2 || refine.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(c.fail("refine", "need at least two increasing sizes"));
            }
            Some(TransformSpec {
                q,
                sigma,
                refine,
                tau_end: c.positive("tau_end", Some(30.0))?,
                mass: c.positive("mass", Some(1.0))?,
                factor: c.positive("factor", Some(3.0))?,
            })
        }
    };

    let barrier = match root.sub("barrier") {
        None => None,
        Some(c) => {
            c.check_keys(
                &[
                    "x0",
                    "x1",
                    "t1",
                    "taus",
                    "xis",
                    "probe_count",
                    "probe_start",
                    "probe_step",
                    "probe_times",
                    "safety",
                ],
                &[],
            )?;
            let x0 = c.f64("x0")?;
            if !(x0 < 0.0 && x0 > -grid.half_length) {
                return Err(c.fail("x0", "must be negative and inside the grid"));
            }
            let x1 = c.f64("x1")?;
            if !(x1 < x0 && x1 > -grid.half_length) {
                return Err(c.fail("x1", "must lie left of x0 inside the grid"));
            }
            let t1 = c.positive("t1", Some(time.t_end))?;
            if t1 > time.t_end {
                return Err(c.fail("t1", "must not exceed time.t_end"));
            }
            let taus = c.list_or("taus", &[0.2, 0.3, 0.5, 1.0])?;
            let xis = c.list_or("xis", &[1.0, 4.0, 16.0, 32.0])?;
            for (k, v) in [("taus", &taus), ("xis", &xis)] {
                if v.is_empty() || v.iter().any(|&x| !(x > 0.0)) {
                    return Err(c.fail(k, "must be a non-empty list of positive numbers"));
                }
            }
            if !(model.m > 1.0 && model.m < 2.0) {
                return Err(root
                    .required("model")?
                    .fail("m", "the barrier needs 1 < m < 2"));
            }
            let safety = c.f64_or("safety", 1.2)?;
            if !(safety >= 1.0) {
                return Err(c.fail("safety", "must be >= 1"));
            }
            Some(BarrierSpec {
                x0,
                x1,
                t1,
                taus,
                xis,
                probe_count: c.usize("probe_count", Some(24))?.max(1),
                probe_start: c.positive("probe_start", Some(0.05))?,
                probe_step: c.positive("probe_step", Some(0.5))?,
                probe_times: c.usize("probe_times", Some(5))?.max(2),
                safety,
            })
        }
    };

    let duality = match root.sub("duality") {
        None => None,
        Some(c) => {
            c.check_keys(&["refine", "tolerance"], &[])?;
            let refine = c.sizes("refine", &[grid.n])?;
            for &n in &refine {
                crate::grid::make_grid(grid.half_length, n)
                    .map_err(|e| c.fail("refine", e.to_string()))?;
            }
            if refine.is_empty() || refine.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(c.fail("refine", "must be a non-empty increasing list"));
            }
            Some(DualitySpec {
                refine,
                tolerance: c.positive("tolerance", Some(0.05))?,
            })
        }
    };

    let comparison = match root.sub("comparison") {
        None => None,
        Some(c) => {
            c.check_keys(&["pairs", "steps", "tolerance"], &[])?;
            Some(ComparisonSpec {
                pairs: c.usize("pairs", Some(50))?,
                steps: c.usize("steps", Some(100))?,
                tolerance: c.positive("tolerance", Some(1e-8))?,
            })
        }
    };

    let needs = |present: bool, key: &str| -> Result<()> {
        if present {
            Ok(())
        } else {
            Err(parser.error(
                1,
                key,
                format!("experiment `{}` requires this section", experiment.name()),
            ))
        }
    };
    match experiment {
        Experiment::Continuation => needs(continuation.is_some(), "continuation")?,
        Experiment::Propagation => needs(propagation.is_some(), "propagation")?,
        Experiment::Smoothing => needs(smoothing.is_some(), "smoothing")?,
        Experiment::Asymptotics => needs(asymptotics.is_some(), "asymptotics")?,
        Experiment::TransformCheck => needs(transform.is_some(), "transform")?,
        Experiment::BarrierCheck => needs(barrier.is_some(), "barrier")?,
        _ => {}
    }
    if let (Some(b), Experiment::BarrierCheck) = (&barrier, experiment) {
        if !time.snap_times().contains(&b.t1) {
            return Err(root
                .required("barrier")?
                .fail("t1", "must be one of the snapshot times"));
        }
    }
    if let (Some(p), Experiment::Propagation) = (&propagation, experiment) {
        if p.mode == PropagationMode::Infinite && !time.snap_times().contains(&p.t_probe) {
            return Err(root
                .required("propagation")?
                .fail("t_probe", "must be one of the snapshot times"));
        }
    }
    Ok(ExperimentConfig {
        experiment,
        model,
        grid,
        time,
        initial_data,
        output_dir,
        seed,
        checks,
        scaling,
        continuation,
        propagation,
        smoothing,
        asymptotics,
        transform,
        barrier,
        duality,
        comparison,
        source: text.to_string(),
    })
}

fn parse_model(root: &Section) -> Result<ModelParams> {
    let c = root.required("model")?;
    c.check_keys(&["m", "s", "eps", "delta", "mu"], &[])?;
    let m = c.f64("m")?;
    if !(m > 1.0) || !m.is_finite() {
        return Err(c.fail("m", format!("must exceed 1, got {m}")));
    }
    let s = c.f64("s")?;
    if !(s > 0.0 && s < 1.0) {
        return Err(c.fail("s", format!("must lie in (0, 1), got {s}")));
    }
    let mut reg = [0.0; 3];
    for (slot, key) in reg.iter_mut().zip(["eps", "delta", "mu"]) {
        let v = c.f64_or(key, 0.0)?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(c.fail(key, format!("must be finite and >= 0, got {v}")));
        }
        *slot = v;
    }
    ModelParams::new(m, s)?.with_regularization(reg[0], reg[1], reg[2])
}

fn parse_grid(root: &Section) -> Result<GridSpec> {
    let c = root.required("grid")?;
    c.check_keys(&["half_length", "n"], &[])?;
    let half_length = c.positive("half_length", None)?;
    let n = c.usize("n", None)?;
    crate::grid::make_grid(half_length, n).map_err(|e| c.fail("n", e.to_string()))?;
    Ok(GridSpec { half_length, n })
}

fn parse_time(root: &Section) -> Result<TimeSpec> {
    let c = root.required("time")?;
    c.check_keys(&["t_end", "snapshots"], &[])?;
    let t_end = c.positive("t_end", None)?;
    let snapshots = match c.value("snapshots") {
        None => Snapshots::Count(11),
        Some(v) if v.is_integer() => {
            let k = c.usize("snapshots", None)?;
            if k < 2 {
                return Err(c.fail("snapshots", "need at least two snapshots"));
            }
            Snapshots::Count(k)
        }
        Some(_) => {
            let list = c.list("snapshots")?.unwrap_or_default();
            if list.is_empty()
                || list[0] < 0.0
                || *list.last().unwrap() > t_end
                || list.windows(2).any(|w| !(w[0] < w[1]))
            {
                return Err(c.fail(
                    "snapshots",
                    "times must increase strictly within [0, t_end]",
                ));
            }
            Snapshots::List(list)
        }
    };
    Ok(TimeSpec { t_end, snapshots })
}

fn parse_initial(root: &Section, grid: &GridSpec) -> Result<InitialData> {
    let Some(c) = root.sub("initial_data") else {
        return Err(root
            .parser
            .error(1, "initial_data", "missing required section"));
    };
    let kind = c
        .string("kind")?
        .ok_or_else(|| c.fail("kind", "missing required key"))?;
    let l = grid.half_length;
    let inside = |key: &str, x: f64| -> Result<f64> {
        if x > -l && x < l {
            Ok(x)
        } else {
            Err(c.fail(key, format!("{x} lies outside the grid (-{l}, {l})")))
        }
    };
    let two = |key: &str| -> Result<[f64; 2]> {
        match c.list(key)? {
            Some(v) if v.len() == 2 => Ok([v[0], v[1]]),
            Some(_) => Err(c.fail(key, "expected two numbers")),
            None => Err(c.fail(key, "missing required key")),
        }
    };
    let data = match kind {
        "gaussian" => {
            c.check_keys(&["kind", "mass", "width", "center"], &[])?;
            InitialData::Gaussian {
                mass: c.positive("mass", None)?,
                width: c.positive("width", None)?,
                center: inside("center", c.f64_or("center", 0.0)?)?,
            }
        }
        "dirac" => {
            c.check_keys(&["kind", "mass", "center"], &[])?;
            InitialData::Dirac {
                mass: c.positive("mass", None)?,
                center: inside("center", c.f64_or("center", 0.0)?)?,
            }
        }
        "bump" => {
            c.check_keys(&["kind", "mass", "center", "half_width"], &[])?;
            let center = inside("center", c.f64_or("center", 0.0)?)?;
            let half_width = c.positive("half_width", None)?;
            inside("half_width", center - half_width)?;
            inside("half_width", center + half_width)?;
            InitialData::Bump {
                mass: c.positive("mass", None)?,
                center,
                half_width,
            }
        }
        "two-bump" => {
            c.check_keys(&["kind", "masses", "centers", "half_widths"], &[])?;
            let masses = two("masses")?;
            let centers = two("centers")?;
            let half_widths = two("half_widths")?;
            for i in 0..2 {
                if !(masses[i] > 0.0) {
                    return Err(c.fail("masses", "must be positive"));
                }
                if !(half_widths[i] > 0.0) {
                    return Err(c.fail("half_widths", "must be positive"));
                }
                inside("centers", centers[i] - half_widths[i])?;
                inside("centers", centers[i] + half_widths[i])?;
            }
            InitialData::TwoBump {
                masses,
                centers,
                half_widths,
            }
        }
        "heaviside-primitive" => {
            c.check_keys(&["kind", "mass", "x0"], &[])?;
            InitialData::HeavisidePrimitive {
                mass: c.positive("mass", None)?,
                x0: inside("x0", c.f64("x0")?)?,
            }
        }
        "file" => {
            c.check_keys(&["kind", "path"], &[])?;
            let raw = c.string("path")?.ok_or_else(|| c.fail("path", "missing required key"))?;
            let path = match c.parser.base {
                Some(b) if Path::new(raw).is_relative() => b.join(raw),
                _ => PathBuf::from(raw),
            };
            if !path.is_file() {
                return Err(c.fail("path", format!("file `{}` does not exist", path.display())));
            }
            InitialData::File { path }
        }
        "zero" => {
            c.check_keys(&["kind"], &[])?;
            InitialData::Zero
        }
        other => {
            return Err(c.fail(
                "kind",
                format!("unknown initial data `{other}`; valid kinds: gaussian, dirac, bump, two-bump, heaviside-primitive, file, zero"),
            ))
        }
    };
    Ok(data)
}
