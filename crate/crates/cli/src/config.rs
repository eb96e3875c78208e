//! Flat `key = value` experiment configs.
//!
//! Lines are `key = value`; `#` starts a comment. Command-line `--set`
//! overrides are applied on top of the file before validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cvq_core::hilbert::{self, CvState};
use cvq_core::protocol::{log_grid, Evaluator, LAMBDA_RANGE};
use cvq_core::randgen::{self, RandomStateSpec};
use cvq_core::C64;

use crate::CliError;

pub const DEFAULT_DIM: usize = 200;
pub const DEFAULT_SEED: u64 = 1;

const KEYS: &[&str] = &[
    "experiment",
    "dim",
    "seed",
    "inputs",
    "n_qubits",
    "lambda",
    "lambda_range",
    "evaluator",
    "fidelity",
    "nbar",
    "count",
    "noise",
    "channels",
    "alpha",
    "methods",
    "iterated_n_qubits",
    "wigner_extent",
    "wigner_points",
    "dump_dir",
    "format",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SweepLambda,
    FockScaling,
    RandomEnsemble,
    NoiseSweep,
    CatDemo,
    Tilde0Report,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SweepLambda => "sweep-lambda",
            Experiment::FockScaling => "fock-scaling",
            Experiment::RandomEnsemble => "random-ensemble",
            Experiment::NoiseSweep => "noise-sweep",
            Experiment::CatDemo => "cat-demo",
            Experiment::Tilde0Report => "tilde0-report",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "sweep-lambda" => Experiment::SweepLambda,
            "fock-scaling" => Experiment::FockScaling,
            "random-ensemble" => Experiment::RandomEnsemble,
            "noise-sweep" => Experiment::NoiseSweep,
            "cat-demo" => Experiment::CatDemo,
            "tilde0-report" => Experiment::Tilde0Report,
            other => return Err(format!("unknown experiment `{other}`")),
        })
    }
}

/// An input state family with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputSpec {
    Vacuum,
    Fock(usize),
    Coherent(f64),
    Cat(f64),
    Squeezed(f64),
    /// Random state with target mean photon number and stream index.
    Random { nbar: f64, stream: u64 },
}

impl InputSpec {
    pub fn build(&self, dim: usize, seed: u64) -> cvq_core::Result<CvState> {
        match *self {
            InputSpec::Vacuum => hilbert::vacuum(dim),
            InputSpec::Fock(m) => hilbert::fock(dim, m),
            InputSpec::Coherent(a) => hilbert::coherent(dim, C64::new(a, 0.0)),
            InputSpec::Cat(a) => hilbert::cat(dim, a),
            InputSpec::Squeezed(r) => hilbert::squeezed_vacuum(dim, r),
            InputSpec::Random { nbar, stream } => {
                randgen::random_state(&RandomStateSpec::new(nbar, seed, dim).with_stream(stream))
            }
        }
    }
}

impl fmt::Display for InputSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InputSpec::Vacuum => write!(f, "vacuum"),
            InputSpec::Fock(m) => write!(f, "fock:{m}"),
            InputSpec::Coherent(a) => write!(f, "coherent:{a}"),
            InputSpec::Cat(a) => write!(f, "cat:{a}"),
            InputSpec::Squeezed(r) => write!(f, "squeezed:{r}"),
            InputSpec::Random { nbar, stream: 0 } => write!(f, "random:{nbar}"),
            InputSpec::Random { nbar, stream } => write!(f, "random:{nbar}:{stream}"),
        }
    }
}

impl FromStr for InputSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<f64, String> {
            let v = args.get(i).ok_or_else(|| format!("input `{s}` is missing a parameter"))?;
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("input `{s}`: `{v}` is not a number"))
        };
        let arity = |n: usize| {
            if args.len() > n {
                Err(format!("input `{s}` has too many parameters"))
            } else {
                Ok(())
            }
        };
        match kind {
            "vacuum" => {
                arity(0)?;
                Ok(InputSpec::Vacuum)
            }
            "fock" => {
                arity(1)?;
                let v = args.first().ok_or_else(|| format!("input `{s}` is missing a parameter"))?;
                let m = v.parse().map_err(|_| format!("input `{s}`: `{v}` is not a photon number"))?;
                Ok(InputSpec::Fock(m))
            }
            "coherent" => {
                arity(1)?;
                Ok(InputSpec::Coherent(num(0)?))
            }
            "cat" => {
                arity(1)?;
                Ok(InputSpec::Cat(num(0)?))
            }
            "squeezed" => {
                arity(1)?;
                Ok(InputSpec::Squeezed(num(0)?))
            }
            "random" => {
                arity(2)?;
                let nbar = num(0)?;
                let stream = match args.get(1) {
                    None => 0,
                    Some(v) => v.parse().map_err(|_| format!("input `{s}`: `{v}` is not a stream index"))?,
                };
                Ok(InputSpec::Random { nbar, stream })
            }
            other => Err(format!("unknown input family `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaChoice {
    Values(Vec<f64>),
    /// Minimise `ε` per cell over `lambda_range`.
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluatorKind {
    Fock,
    Position,
}

impl EvaluatorKind {
    pub fn evaluator(self, dim: usize) -> Evaluator {
        match self {
            EvaluatorKind::Fock => Evaluator::Fock { dim },
            EvaluatorKind::Position => Evaluator::Position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSpec {
    Dephasing,
    AmplitudeDamping,
}

impl ChannelSpec {
    pub fn name(self) -> &'static str {
        match self {
            ChannelSpec::Dephasing => "p_z",
            ChannelSpec::AmplitudeDamping => "gamma",
        }
    }

    pub fn build(self, p: f64) -> cvq_core::Result<cvq_core::noise::KrausChannel> {
        match self {
            ChannelSpec::Dephasing => cvq_core::noise::dephasing(p),
            ChannelSpec::AmplitudeDamping => cvq_core::noise::amplitude_damping(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub seed: u64,
    pub inputs: Vec<InputSpec>,
    pub n_qubits: Vec<usize>,
    pub lambda: LambdaChoice,
    pub lambda_range: (f64, f64),
    pub evaluator: EvaluatorKind,
    pub fidelity: bool,
    pub nbar: Vec<f64>,
    pub count: usize,
    pub noise: Vec<f64>,
    pub channels: Vec<ChannelSpec>,
    pub alpha: f64,
    pub methods: Vec<cvq_core::protocol::Tilde0Method>,
    pub iterated_n_qubits: usize,
    pub wigner_extent: f64,
    pub wigner_points: usize,
    pub dump_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

/// Splits a config file into raw key/value pairs.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let k = k.trim().to_string();
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(map)
}

/// Applies `key=value` overrides; later ones win.
pub fn apply_overrides(map: &mut BTreeMap<String, String>, overrides: &[String]) -> Result<(), CliError> {
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{o}`: expected key=value")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(())
}

fn field_err(key: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| field_err(key, format!("cannot parse `{v}`")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = parse_one(key, v)?;
    if !x.is_finite() {
        return Err(field_err(key, format!("`{v}` is not finite")));
    }
    Ok(x)
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// `a,b,c` or `log:lo:hi:n` / `lin:lo:hi:n`.
pub fn parse_grid(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    let grid = if let Some(rest) = v.strip_prefix("log:").or_else(|| v.strip_prefix("lin:")) {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(field_err(key, format!("`{v}`: expected {}lo:hi:n", &v[..4])));
        }
        let lo = parse_f64(key, parts[0])?;
        let hi = parse_f64(key, parts[1])?;
        let n: usize = parse_one(key, parts[2])?;
        if n > 1 && hi <= lo {
            return Err(field_err(key, format!("`{v}`: need lo < hi")));
        }
        if v.starts_with("log:") {
            if n > 0 && lo <= 0.0 {
                return Err(field_err(key, format!("`{v}`: log grid needs lo > 0")));
            }
            if n == 0 {
                Vec::new()
            } else {
                log_grid(lo, hi, n)
            }
        } else {
            match n {
                0 => Vec::new(),
                1 => vec![lo],
                _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
            }
        }
    } else {
        split_list(v).map(|s| parse_f64(key, s)).collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(field_err(key, "grid is empty"));
    }
    Ok(grid)
}

/// `a,b,c` or inclusive range `lo..hi`.
pub fn parse_usize_list(key: &str, v: &str) -> Result<Vec<usize>, CliError> {
    let list: Vec<usize> = if let Some((a, b)) = v.split_once("..") {
        let a: usize = parse_one(key, a.trim())?;
        let b: usize = parse_one(key, b.trim())?;
        (a..=b).collect()
    } else {
        split_list(v).map(|s| parse_one(key, s)).collect::<Result<_, _>>()?
    };
    if list.is_empty() {
        return Err(field_err(key, "range is empty"));
    }
    Ok(list)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(field_err(key, format!("`{v}` is not a boolean"))),
    }
}

impl ExperimentConfig {
    /// Preset for `experiment` before any keys are applied.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = ExperimentConfig {
            experiment,
            dim: DEFAULT_DIM,
            seed: DEFAULT_SEED,
            inputs: vec![InputSpec::Fock(1)],
            n_qubits: vec![4],
            lambda: LambdaChoice::Optimize,
            lambda_range: LAMBDA_RANGE,
            evaluator: EvaluatorKind::Fock,
            fidelity: false,
            nbar: vec![1.0, 3.0, 7.0],
            count: 100,
            noise: (0..7).map(|i| 0.025 * i as f64).collect(),
            channels: vec![ChannelSpec::Dephasing, ChannelSpec::AmplitudeDamping],
            alpha: 2.0,
            methods: vec![
                cvq_core::protocol::Tilde0Method::SincProjection,
                cvq_core::protocol::Tilde0Method::IteratedEncode,
                cvq_core::protocol::Tilde0Method::Squeezed,
            ],
            iterated_n_qubits: 8,
            wigner_extent: 6.0,
            wigner_points: 61,
            dump_dir: None,
            format: OutputFormat::Csv,
            out: None,
        };
        match experiment {
            Experiment::SweepLambda => {
                c.lambda = LambdaChoice::Values(log_grid(LAMBDA_RANGE.0, LAMBDA_RANGE.1, 40));
            }
            Experiment::FockScaling => {
                c.inputs = vec![InputSpec::Fock(1), InputSpec::Fock(3), InputSpec::Fock(7)];
                c.n_qubits = (3..=10).collect();
                c.evaluator = EvaluatorKind::Position;
            }
            Experiment::RandomEnsemble => {
                c.inputs = Vec::new();
                c.n_qubits = vec![4, 5, 6];
            }
            Experiment::NoiseSweep => {
                c.inputs = vec![InputSpec::Fock(5), InputSpec::Random { nbar: 3.0, stream: 0 }];
                c.n_qubits = vec![6];
                c.lambda = LambdaChoice::Values(vec![0.07]);
            }
            Experiment::CatDemo => {
                c.inputs = Vec::new();
                c.lambda = LambdaChoice::Values(vec![0.29]);
            }
            Experiment::Tilde0Report => {
                c.inputs = Vec::new();
                c.dim = 300;
                c.lambda = LambdaChoice::Values(vec![0.05, 0.1, 0.2, 0.3]);
            }
        }
        c
    }

    /// Builds and validates a config from raw pairs.
    pub fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        for k in map.keys() {
            if !KEYS.contains(&k.as_str()) {
                return Err(field_err(k, "unknown key"));
            }
        }
        let exp = map
            .get("experiment")
            .ok_or_else(|| field_err("experiment", "missing"))?;
        let experiment: Experiment = exp.parse().map_err(|e| field_err("experiment", e))?;
        let mut c = Self::defaults(experiment);
        for (k, v) in map {
            let key = k.as_str();
            match key {
                "experiment" => {}
                "dim" => c.dim = parse_one(key, v)?,
                "seed" => c.seed = parse_one(key, v)?,
                "inputs" => {
                    c.inputs = split_list(v)
                        .map(|s| s.parse().map_err(|e| field_err(key, e)))
                        .collect::<Result<_, _>>()?;
                }
                "n_qubits" => c.n_qubits = parse_usize_list(key, v)?,
                "lambda" => {
                    c.lambda = if v == "opt" {
                        LambdaChoice::Optimize
                    } else {
                        LambdaChoice::Values(parse_grid(key, v)?)
                    };
                }
                "lambda_range" => {
                    let g: Vec<f64> = split_list(v).map(|s| parse_f64(key, s)).collect::<Result<_, _>>()?;
                    if g.len() != 2 || !(g[0] > 0.0 && g[1] > g[0]) {
                        return Err(field_err(key, "expected `lo,hi` with 0 < lo < hi"));
                    }
                    c.lambda_range = (g[0], g[1]);
                }
                "evaluator" => {
                    c.evaluator = match v.as_str() {
                        "fock" => EvaluatorKind::Fock,
                        "position" => EvaluatorKind::Position,
                        _ => return Err(field_err(key, format!("`{v}` is not fock or position"))),
                    };
                }
                "fidelity" => c.fidelity = parse_bool(key, v)?,
                "nbar" => c.nbar = parse_grid(key, v)?,
                "count" => c.count = parse_one(key, v)?,
                "noise" => c.noise = parse_grid(key, v)?,
                "channels" => {
                    c.channels = split_list(v)
                        .map(|s| match s {
                            "dephasing" => Ok(ChannelSpec::Dephasing),
                            "amplitude-damping" => Ok(ChannelSpec::AmplitudeDamping),
                            _ => Err(field_err(key, format!("unknown channel `{s}`"))),
                        })
                        .collect::<Result<_, _>>()?;
                }
                "alpha" => c.alpha = parse_f64(key, v)?,
                "methods" => {
                    c.methods = split_list(v)
                        .map(|s| s.parse().map_err(|e| field_err(key, e)))
                        .collect::<Result<_, _>>()?;
                }
                "iterated_n_qubits" => c.iterated_n_qubits = parse_one(key, v)?,
                "wigner_extent" => c.wigner_extent = parse_f64(key, v)?,
                "wigner_points" => c.wigner_points = parse_one(key, v)?,
                "dump_dir" => c.dump_dir = Some(PathBuf::from(v)),
                "format" => c.format = v.parse().map_err(|e| field_err(key, e))?,
                "out" => c.out = Some(PathBuf::from(v)),
                _ => unreachable!("checked against KEYS"),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.dim < 2 {
            return Err(field_err("dim", "must be at least 2"));
        }
        if self.n_qubits.iter().any(|&n| n < 2) {
            return Err(field_err("n_qubits", "every entry must be at least 2"));
        }
        if self.n_qubits.is_empty() {
            return Err(field_err("n_qubits", "range is empty"));
        }
        if let LambdaChoice::Values(v) = &self.lambda {
            if v.is_empty() {
                return Err(field_err("lambda", "grid is empty"));
            }
            if v.iter().any(|&l| l <= 0.0) {
                return Err(field_err("lambda", "values must be positive"));
            }
        }
        let needs_inputs = matches!(
            self.experiment,
            Experiment::SweepLambda | Experiment::FockScaling | Experiment::NoiseSweep
        );
        if needs_inputs && self.inputs.is_empty() {
            return Err(field_err("inputs", "list is empty"));
        }
        match self.experiment {
            Experiment::NoiseSweep | Experiment::CatDemo => {
                if !matches!(&self.lambda, LambdaChoice::Values(_)) {
                    return Err(field_err("lambda", "this experiment needs explicit values"));
                }
            }
            Experiment::Tilde0Report => {
                if !matches!(&self.lambda, LambdaChoice::Values(_)) {
                    return Err(field_err("lambda", "this experiment needs explicit values"));
                }
                if self.methods.is_empty() {
                    return Err(field_err("methods", "list is empty"));
                }
                if self.iterated_n_qubits < 2 {
                    return Err(field_err("iterated_n_qubits", "must be at least 2"));
                }
            }
            _ => {}
        }
        if self.experiment == Experiment::NoiseSweep {
            if self.channels.is_empty() {
                return Err(field_err("channels", "list is empty"));
            }
            if self.noise.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(field_err("noise", "values must lie in [0, 1]"));
            }
        }
        if self.experiment == Experiment::RandomEnsemble {
            if self.count == 0 {
                return Err(field_err("count", "must be positive"));
            }
            for &nbar in &self.nbar {
                RandomStateSpec::new(nbar, self.seed, self.dim)
                    .validate()
                    .map_err(|e| field_err("nbar", e))?;
            }
        }
        if self.experiment == Experiment::CatDemo && !(self.alpha > 0.0) {
            return Err(field_err("alpha", "must be positive"));
        }
        if self.wigner_points < 2 || !(self.wigner_extent > 0.0) {
            return Err(field_err("wigner_points", "need at least 2 points and a positive extent"));
        }
        for spec in &self.inputs {
            spec.build(self.dim, self.seed)
                .map_err(|e| field_err("inputs", format!("{spec}: {e}")))?;
        }
        Ok(())
    }

    /// Reads a config file and applies overrides.
    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut map = parse_pairs(&text)?;
        apply_overrides(&mut map, overrides)?;
        Self::from_pairs(&map)
    }
}
