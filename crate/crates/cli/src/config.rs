//! Run configuration: TOML text in, a fully validated [`RunConfig`] out.
//!
//! Validation walks every section and collects all problems before
//! reporting, each tagged with the dotted path of the offending entry.

use std::fmt;
use std::path::PathBuf;

use pavg_core::{BasisKind, BasisSet, BoxDomain, KatoQuadrature, Method, Physics, PotentialModel, SamplerConfig};
use serde::Serialize;
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Rho,
    Z,
    Study,
    Kato,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rho => "rho",
            Command::Z => "z",
            Command::Study => "study",
            Command::Kato => "kato",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Free { dim: usize },
    Harmonic { dim: usize, mass: f64, omega: f64 },
    Quartic { dim: usize, c: f64 },
    Coulomb3d { q: f64 },
    Coulomb3dConfined { q: f64, k_conf: f64 },
}

impl PotentialSpec {
    pub fn dim(&self) -> usize {
        match self {
            PotentialSpec::Free { dim } | PotentialSpec::Harmonic { dim, .. } | PotentialSpec::Quartic { dim, .. } => {
                *dim
            }
            PotentialSpec::Coulomb3d { .. } | PotentialSpec::Coulomb3dConfined { .. } => 3,
        }
    }

    pub fn build(&self) -> pavg_core::Result<PotentialModel> {
        match *self {
            PotentialSpec::Free { dim } => PotentialModel::free(dim),
            PotentialSpec::Harmonic { dim, mass, omega } => PotentialModel::harmonic(dim, mass, omega),
            PotentialSpec::Quartic { dim, c } => PotentialModel::quartic(dim, c),
            PotentialSpec::Coulomb3d { q } => PotentialModel::coulomb3d(q),
            PotentialSpec::Coulomb3dConfined { q, k_conf } => PotentialModel::coulomb3d_confined(q, k_conf),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSpec {
    pub kind: Method,
    pub n: usize,
    pub basis: BasisSet,
    pub quad_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSpec {
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyObservable {
    RhoDiag,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySpec {
    pub observable: StudyObservable,
    pub orders: Vec<usize>,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KatoSpec {
    pub eps: Vec<f64>,
    pub grid: Vec<Vec<f64>>,
    pub quadrature: KatoQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Eigensolver,
    Trotter,
    HarmonicExact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSpec {
    pub kind: OracleKind,
    pub points: usize,
    /// `None` means `±10σ`.
    pub half_width: Option<f64>,
    pub squarings: u32,
    pub write_matrix: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

/// Fully resolved configuration; serialized verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub potential: PotentialSpec,
    pub physics: Physics,
    pub method: MethodSpec,
    pub sampler: SamplerConfig,
    pub observable: ObservableSpec,
    /// `None` picks the smallest box on which `e^{-βV}` has decayed.
    pub domain: Option<BoxDomain>,
    pub study: StudySpec,
    pub kato: KatoSpec,
    pub oracle: OracleSpec,
    pub output: OutputSpec,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|e| e.path == path)
    }
}

const SECTIONS: &[&str] =
    &["potential", "physics", "method", "sampler", "observable", "domain", "study", "kato", "oracle", "output"];

const NON_KATO: &[&str] = &["lennard_jones", "lj", "lennard-jones"];

/// Accumulates errors while reading values out of TOML tables.
struct Reader {
    errors: Vec<ConfigError>,
}

impl Reader {
    fn err(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ConfigError { path: path.into(), message: message.into() });
    }

    fn section(&mut self, root: &Table, name: &str, allowed: &[&str]) -> Table {
        match root.get(name) {
            None => Table::new(),
            Some(Value::Table(t)) => {
                for key in t.keys() {
                    if !allowed.contains(&key.as_str()) {
                        self.err(format!("{name}.{key}"), format!("unknown key (allowed: {})", allowed.join(", ")));
                    }
                }
                t.clone()
            }
            Some(_) => {
                self.err(name, "expected a table");
                Table::new()
            }
        }
    }

    fn float(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        match t.get(key) {
            None => None,
            Some(Value::Float(v)) => Some(*v),
            Some(Value::Integer(v)) => Some(*v as f64),
            Some(_) => {
                self.err(format!("{path}.{key}"), "expected a number");
                None
            }
        }
    }

    fn positive(&mut self, t: &Table, path: &str, key: &str, default: Option<f64>) -> f64 {
        let full = format!("{path}.{key}");
        match self.float(t, path, key).or(default) {
            Some(v) if v.is_finite() && v > 0.0 => v,
            Some(v) => {
                if t.contains_key(key) {
                    self.err(full, format!("must be a positive finite number, got {v}"));
                }
                f64::NAN
            }
            None => {
                if !t.contains_key(key) {
                    self.err(full, "missing required key");
                }
                f64::NAN
            }
        }
    }

    fn nonnegative(&mut self, t: &Table, path: &str, key: &str, default: f64) -> f64 {
        match self.float(t, path, key) {
            Some(v) if v.is_finite() && v >= 0.0 => v,
            Some(v) => {
                self.err(format!("{path}.{key}"), format!("must be finite and non-negative, got {v}"));
                f64::NAN
            }
            None => default,
        }
    }

    fn uint(&mut self, t: &Table, path: &str, key: &str, default: u64) -> u64 {
        match t.get(key) {
            None => default,
            Some(Value::Integer(v)) if *v >= 0 => *v as u64,
            Some(Value::Integer(v)) => {
                self.err(format!("{path}.{key}"), format!("must be non-negative, got {v}"));
                default
            }
            Some(_) => {
                self.err(format!("{path}.{key}"), "expected an integer");
                default
            }
        }
    }

    fn boolean(&mut self, t: &Table, path: &str, key: &str, default: bool) -> bool {
        match t.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                self.err(format!("{path}.{key}"), "expected true or false");
                default
            }
        }
    }

    fn string(&mut self, t: &Table, path: &str, key: &str) -> Option<String> {
        match t.get(key) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.err(format!("{path}.{key}"), "expected a string");
                None
            }
        }
    }

    fn float_list(&mut self, t: &Table, path: &str, key: &str) -> Option<Vec<f64>> {
        let full = format!("{path}.{key}");
        match t.get(key) {
            None => None,
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, v) in items.iter().enumerate() {
                    match v {
                        Value::Float(f) => out.push(*f),
                        Value::Integer(n) => out.push(*n as f64),
                        _ => self.err(format!("{full}[{i}]"), "expected a number"),
                    }
                }
                Some(out)
            }
            Some(_) => {
                self.err(full, "expected an array of numbers");
                None
            }
        }
    }

    fn uint_list(&mut self, t: &Table, path: &str, key: &str) -> Option<Vec<usize>> {
        let full = format!("{path}.{key}");
        match t.get(key) {
            None => None,
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, v) in items.iter().enumerate() {
                    match v {
                        Value::Integer(n) if *n >= 0 => out.push(*n as usize),
                        _ => self.err(format!("{full}[{i}]"), "expected a non-negative integer"),
                    }
                }
                Some(out)
            }
            Some(_) => {
                self.err(full, "expected an array of integers");
                None
            }
        }
    }

    fn point(&mut self, t: &Table, path: &str, key: &str, dim: usize) -> Option<Vec<f64>> {
        let v = self.float_list(t, path, key)?;
        if v.len() != dim {
            self.err(format!("{path}.{key}"), format!("expected {dim} coordinates, got {}", v.len()));
        } else if v.iter().any(|c| !c.is_finite()) {
            self.err(format!("{path}.{key}"), "coordinates must be finite");
        }
        Some(v)
    }
}

/// Parses and validates a configuration for `command`.
pub fn parse_config(text: &str, command: Command, overrides: &Overrides) -> Result<RunConfig, ConfigErrors> {
    let root: Table = toml::from_str(text).map_err(|e| {
        ConfigErrors(vec![ConfigError { path: "<document>".into(), message: e.to_string().trim().to_string() }])
    })?;
    let mut r = Reader { errors: Vec::new() };
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            r.err(key.clone(), format!("unknown section (allowed: {})", SECTIONS.join(", ")));
        }
    }

    let potential = parse_potential(&mut r, &root);
    let dim = potential.as_ref().map_or(1, PotentialSpec::dim);

    // physics
    let t = r.section(&root, "physics", &["beta", "masses"]);
    let beta = r.positive(&t, "physics", "beta", None);
    let masses = match r.float_list(&t, "physics", "masses") {
        Some(m) => {
            if m.len() != dim {
                r.err("physics.masses", format!("expected {dim} masses, got {}", m.len()));
            }
            if m.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                r.err("physics.masses", "masses must be positive and finite");
            }
            m
        }
        None => vec![1.0; dim],
    };
    let physics = Physics { beta, masses };

    // method
    let t = r.section(&root, "method", &["kind", "n", "basis", "max_k", "quad_nodes"]);
    let kind = match r.string(&t, "method", "kind").as_deref() {
        None | Some("pa") => Method::PartialAveraging,
        Some("primitive") => Method::Primitive,
        Some(other) => {
            r.err("method.kind", format!("unknown method {other:?} (expected \"pa\" or \"primitive\")"));
            Method::PartialAveraging
        }
    };
    match r.string(&t, "method", "basis").as_deref() {
        None | Some("fourier_sine") => {}
        Some(other) => r.err("method.basis", format!("unknown basis {other:?} (expected \"fourier_sine\")")),
    }
    let max_k = r.uint(&t, "method", "max_k", BasisSet::DEFAULT_MAX_K as u64) as usize;
    if max_k == 0 {
        r.err("method.max_k", "must be positive");
    }
    let n = r.uint(&t, "method", "n", 32) as usize;
    if n > max_k {
        r.err("method.n", format!("order {n} exceeds method.max_k = {max_k}"));
    }
    let quad_nodes = r.uint(&t, "method", "quad_nodes", 64) as usize;
    if quad_nodes == 0 {
        r.err("method.quad_nodes", "must be positive");
    }
    let method = MethodSpec { kind, n, basis: BasisSet { kind: BasisKind::FourierSine, max_k }, quad_nodes };

    // sampler
    let t = r.section(&root, "sampler", &["n_samples", "seed", "batch_count"]);
    let sampler = SamplerConfig {
        n_samples: overrides.samples.unwrap_or_else(|| r.uint(&t, "sampler", "n_samples", 100_000)),
        seed: overrides.seed.unwrap_or_else(|| r.uint(&t, "sampler", "seed", 0)),
        batch_count: r.uint(&t, "sampler", "batch_count", SamplerConfig::DEFAULT_BATCHES),
    };
    if sampler.batch_count < SamplerConfig::MIN_BATCHES {
        r.err("sampler.batch_count", format!("must be at least {}", SamplerConfig::MIN_BATCHES));
    } else if sampler.n_samples < sampler.batch_count {
        r.err("sampler.n_samples", format!("must be at least batch_count = {}", sampler.batch_count));
    }

    // observable
    let t = r.section(&root, "observable", &["x", "x_prime"]);
    let x = r.point(&t, "observable", "x", dim).unwrap_or_else(|| vec![0.0; dim]);
    let x_prime = r.point(&t, "observable", "x_prime", dim).unwrap_or_else(|| x.clone());
    let observable = ObservableSpec { x, x_prime };

    // domain
    let t = r.section(&root, "domain", &["half_width", "lower", "upper", "nodes", "require_decay"]);
    let domain = if t.is_empty() {
        None
    } else {
        let nodes = r.uint(&t, "domain", "nodes", BoxDomain::DEFAULT_NODES as u64) as usize;
        if nodes == 0 {
            r.err("domain.nodes", "must be positive");
        }
        let require_decay = r.boolean(&t, "domain", "require_decay", true);
        let (lower, upper) = if t.contains_key("half_width") {
            if t.contains_key("lower") || t.contains_key("upper") {
                r.err("domain.half_width", "give either half_width or lower/upper, not both");
            }
            let h = r.positive(&t, "domain", "half_width", None);
            (vec![-h; dim], vec![h; dim])
        } else {
            let lower = r.point(&t, "domain", "lower", dim);
            let upper = r.point(&t, "domain", "upper", dim);
            match (lower, upper) {
                (Some(l), Some(u)) => {
                    if l.iter().zip(&u).any(|(a, b)| a >= b) {
                        r.err("domain.upper", "every upper bound must exceed its lower bound");
                    }
                    (l, u)
                }
                _ => {
                    r.err("domain", "needs half_width, or both lower and upper");
                    (vec![-1.0; dim], vec![1.0; dim])
                }
            }
        };
        Some(BoxDomain { lower, upper, nodes, require_decay })
    };

    // study
    let t = r.section(&root, "study", &["observable", "orders", "reference"]);
    let study_obs = match r.string(&t, "study", "observable").as_deref() {
        None | Some("z") => StudyObservable::Z,
        Some("rho_diag") => StudyObservable::RhoDiag,
        Some(other) => {
            r.err("study.observable", format!("unknown observable {other:?} (expected \"z\" or \"rho_diag\")"));
            StudyObservable::Z
        }
    };
    let orders = r.uint_list(&t, "study", "orders").unwrap_or_else(|| pavg_core::lab::DEFAULT_ORDERS.to_vec());
    if orders.is_empty() {
        r.err("study.orders", "needs at least one order");
    }
    if let Some(bad) = orders.iter().find(|&&o| o > max_k) {
        r.err("study.orders", format!("order {bad} exceeds method.max_k = {max_k}"));
    }
    let reference = r.float(&t, "study", "reference");
    let study = StudySpec { observable: study_obs, orders, reference };

    // kato
    let t = r.section(&root, "kato", &["eps", "grid", "u_nodes", "inner_nodes"]);
    let eps = r.float_list(&t, "kato", "eps").unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125]);
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        r.err("kato.eps", "every eps must lie in (0, 1)");
    }
    let grid = match t.get("grid") {
        None => default_kato_grid(dim),
        Some(Value::Array(rows)) => {
            let mut out = Vec::new();
            for (i, row) in rows.iter().enumerate() {
                let mut single = Table::new();
                single.insert("p".into(), row.clone());
                if let Some(p) = r.point(&single, &format!("kato.grid[{i}]"), "p", dim) {
                    out.push(p);
                }
            }
            if out.is_empty() {
                r.err("kato.grid", "needs at least one point");
            }
            out
        }
        Some(_) => {
            r.err("kato.grid", "expected an array of points");
            Vec::new()
        }
    };
    let quadrature = KatoQuadrature {
        u_nodes: r.uint(&t, "kato", "u_nodes", 32) as usize,
        inner_nodes: r.uint(&t, "kato", "inner_nodes", 32) as usize,
    };
    if quadrature.u_nodes == 0 {
        r.err("kato.u_nodes", "must be positive");
    }
    if quadrature.inner_nodes < 8 {
        r.err("kato.inner_nodes", "must be at least 8");
    }
    let kato = KatoSpec { eps, grid, quadrature };

    // oracle
    let t = r.section(&root, "oracle", &["kind", "points", "half_width", "squarings", "write_matrix"]);
    let oracle_kind = match r.string(&t, "oracle", "kind").as_deref() {
        None | Some("eigensolver") => OracleKind::Eigensolver,
        Some("trotter") => OracleKind::Trotter,
        Some("harmonic_exact") => OracleKind::HarmonicExact,
        Some(other) => {
            r.err(
                "oracle.kind",
                format!("unknown oracle {other:?} (expected \"eigensolver\", \"trotter\" or \"harmonic_exact\")"),
            );
            OracleKind::Eigensolver
        }
    };
    let points = r.uint(&t, "oracle", "points", pavg_core::GridSpec::DEFAULT_POINTS as u64) as usize;
    if points < pavg_core::GridSpec::MIN_POINTS {
        r.err("oracle.points", format!("must be at least {}", pavg_core::GridSpec::MIN_POINTS));
    }
    let half_width =
        if t.contains_key("half_width") { Some(r.positive(&t, "oracle", "half_width", None)) } else { None };
    let squarings = r.uint(&t, "oracle", "squarings", 10);
    if !(8..=40).contains(&squarings) {
        r.err("oracle.squarings", "must lie in 8..=40");
    }
    let oracle = OracleSpec {
        kind: oracle_kind,
        points,
        half_width,
        squarings: squarings.min(40) as u32,
        write_matrix: r.boolean(&t, "oracle", "write_matrix", false),
    };

    // output
    let t = r.section(&root, "output", &["dir"]);
    let dir = overrides
        .out
        .clone()
        .or_else(|| r.string(&t, "output", "dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("pavg-out"));
    let output = OutputSpec { dir };

    // command-specific requirements
    if let Some(p) = &potential {
        if command == Command::Oracle && p.dim() != 1 {
            r.err("potential.dim", "grid oracles are one-dimensional");
        }
        if command == Command::Oracle
            && oracle.kind == OracleKind::HarmonicExact
            && !matches!(p, PotentialSpec::Harmonic { .. })
        {
            r.err("oracle.kind", "harmonic_exact requires a harmonic potential");
        }
    }

    match (r.errors.is_empty(), potential) {
        (true, Some(potential)) => Ok(RunConfig {
            command,
            potential,
            physics,
            method,
            sampler,
            observable,
            domain,
            study,
            kato,
            oracle,
            output,
        }),
        _ => Err(ConfigErrors(r.errors)),
    }
}

fn parse_potential(r: &mut Reader, root: &Table) -> Option<PotentialSpec> {
    let t = r.section(root, "potential", &["kind", "dim", "mass", "omega", "c", "q", "k_conf"]);
    let kind = match r.string(&t, "potential", "kind") {
        Some(k) => k,
        None => {
            if !t.contains_key("kind") {
                r.err("potential.kind", "missing required key");
            }
            return None;
        }
    };
    if NON_KATO.contains(&kind.as_str()) {
        r.err(
            "potential.kind",
            format!(
                "{kind:?} is rejected: its r^-12 core is not in the Kato class, so the Feynman-Kac \
                 representation behind these estimators does not apply"
            ),
        );
        return None;
    }
    let only = |r: &mut Reader, allowed: &[&str]| {
        for key in t.keys() {
            if key != "kind" && !allowed.contains(&key.as_str()) {
                r.err(format!("potential.{key}"), format!("not a parameter of {kind:?}"));
            }
        }
    };
    let dim = |r: &mut Reader| {
        let d = r.uint(&t, "potential", "dim", 1) as usize;
        if !(1..=3).contains(&d) {
            r.err("potential.dim", format!("must lie in 1..=3, got {d}"));
        }
        d.clamp(1, 3)
    };
    let spec = match kind.as_str() {
        "free" => {
            only(r, &["dim"]);
            PotentialSpec::Free { dim: dim(r) }
        }
        "harmonic" => {
            only(r, &["dim", "mass", "omega"]);
            PotentialSpec::Harmonic {
                dim: dim(r),
                mass: r.positive(&t, "potential", "mass", Some(1.0)),
                omega: r.positive(&t, "potential", "omega", Some(1.0)),
            }
        }
        "quartic" => {
            only(r, &["dim", "c"]);
            PotentialSpec::Quartic { dim: dim(r), c: r.positive(&t, "potential", "c", Some(1.0)) }
        }
        "coulomb3d" | "coulomb3d_confined" => {
            let confined = kind == "coulomb3d_confined";
            only(r, if confined { &["dim", "q", "k_conf"] } else { &["dim", "q"] });
            if let Some(d) = t.get("dim") {
                if d.as_integer() != Some(3) {
                    r.err("potential.dim", "Coulomb potentials are three-dimensional");
                }
            }
            let q = r.nonnegative(&t, "potential", "q", 1.0);
            if confined {
                PotentialSpec::Coulomb3dConfined { q, k_conf: r.nonnegative(&t, "potential", "k_conf", 1.0) }
            } else {
                PotentialSpec::Coulomb3d { q }
            }
        }
        other => {
            r.err(
                "potential.kind",
                format!(
                    "unknown potential {other:?} (expected free, harmonic, quartic, coulomb3d or coulomb3d_confined)"
                ),
            );
            return None;
        }
    };
    Some(spec)
}

/// The origin plus points along the first axis out to `‖x‖ = 1`.
fn default_kato_grid(dim: usize) -> Vec<Vec<f64>> {
    [0.0, 0.05, 0.1, 0.25, 0.5, 1.0]
        .iter()
        .map(|&r| {
            let mut p = vec![0.0; dim];
            p[0] = r;
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigErrors> {
        parse_config(text, Command::Rho, &Overrides::default())
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse("[potential]\nkind = \"harmonic\"\n[physics]\nbeta = 1.0\n").unwrap();
        assert_eq!(cfg.potential, PotentialSpec::Harmonic { dim: 1, mass: 1.0, omega: 1.0 });
        assert_eq!(cfg.physics.masses, vec![1.0]);
        assert_eq!(cfg.method.n, 32);
        assert_eq!(cfg.method.quad_nodes, 64);
        assert_eq!(cfg.sampler.batch_count, 64);
        assert_eq!(cfg.observable.x, vec![0.0]);
        assert_eq!(cfg.study.orders, vec![0, 1, 2, 4, 8, 16, 32, 64]);
        assert!(cfg.domain.is_none());
    }

    #[test]
    fn negative_beta_names_its_path() {
        let e = parse("[potential]\nkind = \"harmonic\"\n[physics]\nbeta = -1\n").unwrap_err();
        assert!(e.mentions("physics.beta"), "{e}");
    }

    #[test]
    fn lennard_jones_is_rejected_as_non_kato() {
        let e = parse("[potential]\nkind = \"lennard_jones\"\n[physics]\nbeta = 1\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("potential.kind") && msg.contains("Kato"), "{msg}");
    }

    #[test]
    fn all_errors_are_collected() {
        let text = "
            [potential]
            kind = \"harmonic\"
            omeg = 2.0
            [physics]
            beta = 0
            [sampler]
            batch_count = 4
            [extra]
            a = 1
        ";
        let e = parse(text).unwrap_err();
        for path in ["potential.omeg", "physics.beta", "sampler.batch_count", "extra"] {
            assert!(e.mentions(path), "missing {path} in {e}");
        }
    }

    #[test]
    fn missing_required_keys() {
        let e = parse("").unwrap_err();
        assert!(e.mentions("potential.kind"));
        assert!(e.mentions("physics.beta"));
    }

    #[test]
    fn overrides_take_precedence() {
        let o = Overrides { seed: Some(9), samples: Some(640), out: Some("elsewhere".into()) };
        let text = "[potential]\nkind = \"free\"\n[physics]\nbeta = 1\n[sampler]\nseed = 1\nn_samples = 10\n";
        let cfg = parse_config(text, Command::Z, &o).unwrap();
        assert_eq!((cfg.sampler.seed, cfg.sampler.n_samples), (9, 640));
        assert_eq!(cfg.output.dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn coulomb_is_three_dimensional() {
        let cfg = parse("[potential]\nkind = \"coulomb3d_confined\"\n[physics]\nbeta = 1\n").unwrap();
        assert_eq!(cfg.physics.masses.len(), 3);
        assert_eq!(cfg.observable.x.len(), 3);
        let e = parse("[potential]\nkind = \"coulomb3d\"\ndim = 1\n[physics]\nbeta = 1\n").unwrap_err();
        assert!(e.mentions("potential.dim"));
    }

    #[test]
    fn domain_forms() {
        let base = "[potential]\nkind = \"quartic\"\n[physics]\nbeta = 1\n";
        let cfg = parse(&format!("{base}[domain]\nhalf_width = 4.0\nnodes = 24\n")).unwrap();
        let d = cfg.domain.unwrap();
        assert_eq!((d.lower[0], d.upper[0], d.nodes), (-4.0, 4.0, 24));
        let e = parse(&format!("{base}[domain]\nlower = [1.0]\nupper = [0.0]\n")).unwrap_err();
        assert!(e.mentions("domain.upper"));
    }
}
