//! Experiment configuration files.
//!
//! ```text
//! # comment
//! experiment = tanaka
//! seed = 7
//!
//! [grid]
//! n_steps = 512
//!
//! [tanaka]
//! n_paths = 4000
//! ```
//!
//! One `key = value` per line. `[section]` prefixes the following keys, so
//! `n_paths` above is the parameter `tanaka.n_paths`. Everything after `#` is
//! ignored; blank lines are skipped. Keys before the first section are
//! top-level (`experiment`, `seed`). Every other parameter has a default;
//! unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt;

use crate::ito_approx::Stage;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted parameter path, or `line N` for syntax errors.
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{} (line {l}): {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    /// Integer `>= min`.
    Count(u64),
    Seed,
    /// Real in the open interval `(lo, hi)`; infinite ends are unbounded.
    Real(f64, f64),
    /// Finite real `>= 0`.
    NonNegative,
    /// Comma-separated reals, each in `(lo, hi)`.
    Reals(f64, f64),
    /// `j,k,l,m; j,k,l,m; ...`, `inf` allowed for `j` and `l`.
    Schedule,
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub unit: &'static str,
    pub default: &'static str,
    pub kind: Kind,
    pub doc: &'static str,
}

const fn p(key: &'static str, unit: &'static str, default: &'static str, kind: Kind, doc: &'static str) -> Param {
    Param {
        key,
        unit,
        default,
        kind,
        doc,
    }
}

const INF: f64 = f64::INFINITY;
const POS: Kind = Kind::Real(0.0, INF);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentKind {
    DilationCheck,
    FrameRoundtrip,
    Correspondence,
    ItoApprox,
    Tanaka,
    Monotone,
}

pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub name: &'static str,
    pub summary: &'static str,
    /// Parameter overridden by `--paths`.
    pub paths_key: Option<&'static str>,
    pub params: &'static [Param],
}

const SEED: Param = p("seed", "-", "1", Kind::Seed, "base seed of all random streams");

pub static EXPERIMENTS: &[ExperimentSpec] = &[
    ExperimentSpec {
        kind: ExperimentKind::DilationCheck,
        name: "dilation-check",
        summary: "dilation diagram pi U_t l = S_t, adjointness of pi and l, isometry of l",
        paths_key: Some("check.pairs"),
        params: &[
            SEED,
            p("space.n_modes", "modes", "8", Kind::Count(1), "N, rates lambda_k = k"),
            p("space.x_min", "length", "-12", Kind::Real(-INF, 0.0), "left end of the dilation window"),
            p("space.x_max", "length", "4", Kind::Real(0.0, INF), "right end of the dilation window"),
            p("space.h", "length", "0.0625", POS, "spatial grid step"),
            p("space.tail_tol", "-", "1e-10", Kind::Real(0.0, 1.0), "admissible tail mass e^(2 lambda_min x_min)"),
            p("check.times", "time", "0.25,0.5,1,2", Kind::Reals(0.0, INF), "group times of the diagram check, multiples of h"),
            p("check.diagram_tol", "-", "1e-6", POS, "max |pi U_t l e_k - e^(-kt) e_k|"),
            p("check.pairs", "pairs", "100", Kind::Count(1), "random unit-norm pairs for adjointness and isometry"),
            p("check.adjoint_tol", "-", "1e-12", POS, "adjointness and isometry tolerance"),
        ],
    },
    ExperimentSpec {
        kind: ExperimentKind::FrameRoundtrip,
        name: "frame-roundtrip",
        summary: "Gamma(Delta(v)) = v on random paths; Delta(Gamma(w)) = w for the translation group",
        paths_key: Some("check.paths"),
        params: &[
            SEED,
            p("grid.t_end", "time", "1", POS, "horizon"),
            p("grid.n_steps", "steps", "256", Kind::Count(1), "time steps; dt must be a multiple of space.h"),
            p("space.n_modes", "modes", "8", Kind::Count(1), "N"),
            p("space.x_min", "length", "-12", Kind::Real(-INF, 0.0), "left end of the dilation window"),
            p("space.x_max", "length", "1", Kind::Real(0.0, INF), "right end, at least grid.t_end"),
            p("space.h", "length", "0.00390625", POS, "spatial grid step"),
            p("space.tail_tol", "-", "1e-10", Kind::Real(0.0, 1.0), "admissible tail mass"),
            p("group.x_min", "length", "-4", Kind::Real(-INF, 0.0), "left end of the translation-group window"),
            p("group.x_max", "length", "4", Kind::Real(0.0, INF), "right end of the translation-group window"),
            p("check.paths", "paths", "100", Kind::Count(1), "random paths per case"),
            p("check.tol", "-", "1e-12", POS, "max entrywise round-trip error"),
        ],
    },
    ExperimentSpec {
        kind: ExperimentKind::Correspondence,
        name: "correspondence",
        summary: "exponential Euler for dX = (AX - X) dt + diag(1/k) dW against Gamma of Euler-Maruyama in the moving frame",
        paths_key: Some("check.paths"),
        params: &[
            SEED,
            p("grid.t_end", "time", "1", POS, "horizon"),
            p("space.n_modes", "modes", "4", Kind::Count(1), "N"),
            p("space.x_min", "length", "-12", Kind::Real(-INF, 0.0), "left end of the dilation window"),
            p("space.x_max", "length", "1", Kind::Real(0.0, INF), "right end, at least grid.t_end"),
            p("space.tail_tol", "-", "1e-10", Kind::Real(0.0, 1.0), "admissible tail mass"),
            p("check.levels", "log2(1/dt)", "6,8,10", Kind::Reals(0.0, 30.0), "refinement levels, dt = 2^-level = h"),
            p("check.paths", "paths", "32", Kind::Count(1), "Monte Carlo paths per level"),
            p("check.ratio", "-", "3", POS, "required error(coarsest) / error(finest)"),
            p("check.final_tol", "-", "0.02", POS, "max mean sup error at the finest level"),
        ],
    },
    ExperimentSpec {
        kind: ExperimentKind::ItoApprox,
        name: "ito-approx",
        summary: "staged Riemann sums of int diag(e^(-kt)/k) dW against the fine-grid Ito sum",
        paths_key: Some("check.paths"),
        params: &[
            SEED,
            p("grid.t_end", "time", "1", POS, "horizon"),
            p("grid.n_steps", "steps", "4096", Kind::Count(1), "reference grid"),
            p("space.n_modes", "modes", "4", Kind::Count(1), "K = N, Q = diag(1/k^2)"),
            p(
                "check.schedule",
                "(j,k,l,m)",
                "1,1,4,4; 2,2,64,64; 8,3,512,512; inf,4,4096,4096",
                Kind::Schedule,
                "stages (norm cut, rank, 1/window, 1/block), nondecreasing",
            ),
            p("check.paths", "paths", "16", Kind::Count(1), "paths averaged per stage"),
            p("check.tol", "-", "0.01", POS, "max mean sup error of the last stage"),
        ],
    },
    ExperimentSpec {
        kind: ExperimentKind::Tanaka,
        name: "tanaka",
        summary: "Tanaka SPDE: moments, covariation, KS law tests, sign-flip non-uniqueness, Phi(B) reconstruction",
        paths_key: Some("tanaka.n_paths"),
        params: &[
            SEED,
            p("grid.t_end", "time", "1", POS, "horizon"),
            p("grid.n_steps", "steps", "1024", Kind::Count(1), "time steps"),
            p("space.n_modes", "modes", "4", Kind::Count(1), "N"),
            p("tanaka.n_paths", "paths", "20000", Kind::Count(1), "ensemble size; KS samples are its two halves"),
            p("tanaka.min_paths", "paths", "1000", Kind::Count(1), "below this the statistics are flagged as underpowered"),
            p("tanaka.alpha", "-", "0.001", Kind::Real(0.0, 1.0), "KS significance level"),
            p("tanaka.threshold", "-", "0.1", POS, "separation threshold of the non-uniqueness probability"),
            p("tanaka.recon_paths", "paths", "1000", Kind::Count(1), "paths for the reconstruction refinement"),
            p("tanaka.recon_tol", "-", "0.01", POS, "max mean sup |X - Phi(B)|"),
        ],
    },
    ExperimentSpec {
        kind: ExperimentKind::Monotone,
        name: "monotone",
        summary: "monotonicity certificates and Gronwall gap growth, plain and in the translation-group frame",
        paths_key: Some("monotone.paths"),
        params: &[
            SEED,
            p("grid.t_end", "time", "1", POS, "horizon"),
            p("grid.n_steps", "steps", "64", Kind::Count(1), "time steps; dt is also the group grid step"),
            p("space.n_modes", "modes", "4", Kind::Count(1), "dimension of the finite-dimensional families"),
            p("monotone.eps", "-", "0.1", Kind::NonNegative, "initial gap"),
            p("monotone.paths", "paths", "64", Kind::Count(1), "paths per Gronwall run"),
            p("monotone.samples", "pairs", "2000", Kind::Count(1), "random pairs per certificate"),
            p("monotone.radius", "-", "5", POS, "radius of the sampled ball"),
            p("group.x_min", "length", "-2", Kind::Real(-INF, 0.0), "left end of the translation-group window"),
            p("group.x_max", "length", "2", Kind::Real(0.0, INF), "right end of the translation-group window"),
        ],
    },
];

pub fn experiment_spec(name: &str) -> Option<&'static ExperimentSpec> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

fn spec_of(kind: ExperimentKind) -> &'static ExperimentSpec {
    EXPERIMENTS.iter().find(|e| e.kind == kind).expect("every kind has a spec")
}

/// A validated configuration: every parameter resolved, defaults included.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    values: BTreeMap<&'static str, String>,
}

fn check_kind(param: &Param, raw: &str, line: Option<usize>) -> Result<(), ConfigError> {
    let err = |m: String| ConfigError::new(param.key, line, m);
    let in_range = |v: f64, lo: f64, hi: f64| -> Result<(), ConfigError> {
        if v.is_nan() || v <= lo || v >= hi {
            return Err(err(format!("{v} outside ({lo}, {hi})")));
        }
        Ok(())
    };
    match param.kind {
        Kind::Count(min) => {
            let v: u64 = raw.parse().map_err(|_| err(format!("expected a nonnegative integer, got {raw:?}")))?;
            if v < min {
                return Err(err(format!("must be at least {min}, got {v}")));
            }
        }
        Kind::Seed => {
            raw.parse::<u64>().map_err(|_| err(format!("expected an unsigned 64-bit seed, got {raw:?}")))?;
        }
        Kind::Real(lo, hi) => {
            let v: f64 = raw.parse().map_err(|_| err(format!("expected a number, got {raw:?}")))?;
            in_range(v, lo, hi)?;
        }
        Kind::NonNegative => {
            let v: f64 = raw.parse().map_err(|_| err(format!("expected a number, got {raw:?}")))?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(err(format!("must be finite and nonnegative, got {v}")));
            }
        }
        Kind::Reals(lo, hi) => {
            let items: Vec<&str> = raw.split(',').map(str::trim).collect();
            if items.iter().any(|s| s.is_empty()) {
                return Err(err("empty list entry".into()));
            }
            for s in items {
                let v: f64 = s.parse().map_err(|_| err(format!("expected a number, got {s:?}")))?;
                in_range(v, lo, hi)?;
            }
        }
        Kind::Schedule => {
            parse_schedule(raw).map_err(err)?;
        }
    }
    Ok(())
}

fn parse_inf_u64(s: &str) -> Result<u64, String> {
    if s == "inf" {
        Ok(u64::MAX)
    } else {
        s.parse().map_err(|_| format!("expected a positive integer or inf, got {s:?}"))
    }
}

/// `j,k,l,m; ...`; `inf` for `l` becomes `u64::MAX`.
pub fn parse_schedule(raw: &str) -> Result<Vec<Stage>, String> {
    let mut out = Vec::new();
    for (n, stage) in raw.split(';').enumerate() {
        let parts: Vec<&str> = stage.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(format!("stage {} needs 4 entries j,k,l,m", n + 1));
        }
        let j: f64 = parts[0]
            .parse()
            .map_err(|_| format!("stage {}: j must be a number or inf", n + 1))?;
        let k: usize = parts[1].parse().map_err(|_| format!("stage {}: k must be an integer", n + 1))?;
        let ell = parse_inf_u64(parts[2]).map_err(|e| format!("stage {}: l {e}", n + 1))?;
        let m: u64 = parts[3].parse().map_err(|_| format!("stage {}: m must be an integer", n + 1))?;
        if j.is_nan() || j <= 0.0 || k == 0 || ell == 0 || m == 0 {
            return Err(format!("stage {}: entries must be positive", n + 1));
        }
        out.push(Stage::new(j, k, ell, m));
    }
    if out.windows(2).any(|w| w[1].j < w[0].j || w[1].k < w[0].k || w[1].ell < w[0].ell || w[1].m < w[0].m) {
        return Err("stages must be nondecreasing in every entry".into());
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut section = String::new();
    let mut entries: Vec<(String, String, usize)> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(format!("line {line_no}"), Some(line_no), "unterminated section header"))?
                .trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_lowercase() || c == '_' || c.is_ascii_digit()) {
                return Err(ConfigError::new(
                    format!("line {line_no}"),
                    Some(line_no),
                    format!("bad section name {name:?}"),
                ));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(format!("line {line_no}"), Some(line_no), "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::new(
                format!("line {line_no}"),
                Some(line_no),
                "empty key or value",
            ));
        }
        let path = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        if let Some((_, _, first)) = entries.iter().find(|(p, _, _)| *p == path) {
            return Err(ConfigError::new(path, Some(line_no), format!("repeated; first set on line {first}")));
        }
        entries.push((path, value.to_string(), line_no));
    }

    let (_, name, line) = entries
        .iter()
        .find(|(p, _, _)| p == "experiment")
        .ok_or_else(|| ConfigError::new("experiment", None, "missing; see `list` for the available names"))?;
    let spec = experiment_spec(name).ok_or_else(|| {
        let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
        ConfigError::new("experiment", Some(*line), format!("unknown experiment {name:?}; expected one of {}", names.join(", ")))
    })?;

    let mut values: BTreeMap<&'static str, String> =
        spec.params.iter().map(|p| (p.key, p.default.to_string())).collect();
    for (path, value, line) in &entries {
        if path == "experiment" {
            continue;
        }
        let param = spec
            .params
            .iter()
            .find(|p| p.key == path)
            .ok_or_else(|| ConfigError::new(path.clone(), Some(*line), format!("not a parameter of {}", spec.name)))?;
        check_kind(param, value, Some(*line))?;
        values.insert(param.key, value.clone());
    }
    let cfg = ExperimentConfig { kind: spec.kind, values };
    cfg.cross_validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// All parameters at their defaults.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let spec = spec_of(kind);
        Self {
            kind,
            values: spec.params.iter().map(|p| (p.key, p.default.to_string())).collect(),
        }
    }

    pub fn spec(&self) -> &'static ExperimentSpec {
        spec_of(self.kind)
    }

    pub fn name(&self) -> &'static str {
        self.spec().name
    }

    /// Resolved parameters, for the report.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m: BTreeMap<String, String> = self.values.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        m.insert("experiment".into(), self.name().into());
        m
    }

    /// Replaces one parameter, validating the new value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let param = self
            .spec()
            .params
            .iter()
            .find(|p| p.key == key)
            .ok_or_else(|| ConfigError::new(key, None, format!("not a parameter of {}", self.name())))?;
        check_kind(param, value, None)?;
        self.values.insert(param.key, value.to_string());
        self.cross_validate()
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.values.insert("seed", seed.to_string());
    }

    pub fn set_paths(&mut self, n: u64) -> Result<(), ConfigError> {
        match self.spec().paths_key {
            Some(key) => self.set(key, &n.to_string()),
            None => Err(ConfigError::new("--paths", None, format!("{} has no path count", self.name()))),
        }
    }

    fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("{key} is not a parameter of {}", self.name()))
    }

    pub fn real(&self, key: &str) -> f64 {
        self.raw(key).parse().expect("validated")
    }

    pub fn count(&self, key: &str) -> usize {
        self.raw(key).parse().expect("validated")
    }

    pub fn seed(&self) -> u64 {
        self.raw("seed").parse().expect("validated")
    }

    pub fn reals(&self, key: &str) -> Vec<f64> {
        self.raw(key).split(',').map(|s| s.trim().parse().expect("validated")).collect()
    }

    pub fn schedule(&self, key: &str) -> Vec<Stage> {
        parse_schedule(self.raw(key)).expect("validated")
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Relations between parameters: commensurability and window sizes.
    fn cross_validate(&self) -> Result<(), ConfigError> {
        let multiple = |value: f64, step: f64| crate::spaces::integer_ratio(value, step).is_some();
        if self.has("space.h") {
            let h = self.real("space.h");
            for key in ["space.x_min", "space.x_max"] {
                if !multiple(self.real(key), h) {
                    return Err(ConfigError::new(key, None, format!("must be a multiple of space.h = {h}")));
                }
            }
        }
        if self.has("grid.n_steps") {
            let dt = self.real("grid.t_end") / self.count("grid.n_steps") as f64;
            if self.has("space.h") && self.kind == ExperimentKind::FrameRoundtrip && !multiple(dt, self.real("space.h")) {
                return Err(ConfigError::new(
                    "grid.n_steps",
                    None,
                    format!("dt = {dt} is not a multiple of space.h"),
                ));
            }
            if self.has("group.x_min") {
                for key in ["group.x_min", "group.x_max"] {
                    if !multiple(self.real(key), dt) {
                        return Err(ConfigError::new(key, None, format!("must be a multiple of dt = {dt}")));
                    }
                }
            }
        }
        if self.has("space.x_max") && self.has("grid.t_end") && self.real("space.x_max") < self.real("grid.t_end") {
            return Err(ConfigError::new("space.x_max", None, "must be at least grid.t_end"));
        }
        match self.kind {
            ExperimentKind::DilationCheck => {
                let h = self.real("space.h");
                for t in self.reals("check.times") {
                    if !multiple(t, h) {
                        return Err(ConfigError::new("check.times", None, format!("{t} is not a multiple of space.h")));
                    }
                }
            }
            ExperimentKind::Correspondence => {
                if self.reals("check.levels").iter().any(|l| l.fract() != 0.0) {
                    return Err(ConfigError::new("check.levels", None, "levels must be integers"));
                }
                if self.reals("check.levels").len() < 2 {
                    return Err(ConfigError::new("check.levels", None, "at least two levels are needed"));
                }
            }
            ExperimentKind::ItoApprox => {
                let dt = self.real("grid.t_end") / self.count("grid.n_steps") as f64;
                let k_max = self.count("space.n_modes");
                for s in self.schedule("check.schedule") {
                    if !multiple(1.0 / s.m as f64, dt) {
                        return Err(ConfigError::new(
                            "check.schedule",
                            None,
                            format!("1/m = 1/{} is not a multiple of dt = {dt}", s.m),
                        ));
                    }
                    if s.k > k_max {
                        return Err(ConfigError::new("check.schedule", None, format!("k = {} exceeds K = {k_max}", s.k)));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The configuration as a file that parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = format!("experiment = {}\n", self.name());
        let mut section = "";
        for p in self.spec().params {
            let (sec, key) = p.key.split_once('.').unwrap_or(("", p.key));
            if sec != section {
                out.push_str(&format!("\n[{sec}]\n"));
                section = sec;
            }
            out.push_str(&format!("{key} = {}\n", self.raw(p.key)));
        }
        out
    }
}

/// Text table of experiments and their parameters.
pub fn list_experiments() -> String {
    let mut out = String::new();
    for e in EXPERIMENTS {
        out.push_str(&format!("{}\n  {}\n", e.name, e.summary));
        out.push_str(&format!("  {:<20} {:<12} {:<46} {}\n", "parameter", "unit", "default", "meaning"));
        for p in e.params {
            out.push_str(&format!("  {:<20} {:<12} {:<46} {}\n", p.key, p.unit, p.default, p.doc));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for e in EXPERIMENTS {
            let cfg = ExperimentConfig::defaults(e.kind);
            cfg.cross_validate().unwrap();
            assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg, "{}", e.name);
        }
    }

    #[test]
    fn list_covers_every_experiment_and_unit() {
        let text = list_experiments();
        for name in ["dilation-check", "frame-roundtrip", "correspondence", "ito-approx", "tanaka", "monotone"] {
            assert!(text.contains(name));
        }
        assert!(EXPERIMENTS.iter().flat_map(|e| e.params).all(|p| !p.unit.is_empty() && !p.doc.is_empty()));
    }

    #[test]
    fn sections_comments_and_overrides() {
        let cfg = parse_config("experiment = tanaka # trailing\nseed=9\n\n[tanaka]\n  n_paths = 10\n[grid]\nn_steps = 64").unwrap();
        assert_eq!(cfg.count("tanaka.n_paths"), 10);
        assert_eq!(cfg.count("grid.n_steps"), 64);
        assert_eq!(cfg.seed(), 9);
        assert_eq!(cfg.real("tanaka.alpha"), 0.001);
        assert_eq!(cfg.echo()["experiment"], "tanaka");
    }

    #[test]
    fn diagnostics_carry_field_paths() {
        let e = parse_config("experiment = tanaka\n[grid]\nt_end = -1\n").unwrap_err();
        assert_eq!(e.path, "grid.t_end");
        assert_eq!(e.line, Some(3));
        assert_eq!(parse_config("experiment = tanaka\n[tanaka]\nbogus = 1").unwrap_err().path, "tanaka.bogus");
        assert_eq!(parse_config("experiment = nope").unwrap_err().path, "experiment");
        assert_eq!(parse_config("seed = 1").unwrap_err().path, "experiment");
        assert!(parse_config("experiment = tanaka\nseed = 1\nseed = 2").is_err());
        assert!(parse_config("experiment = tanaka\n[grid\n").is_err());
        assert!(parse_config("experiment = tanaka\njunk").is_err());
        let e = parse_config("experiment = frame-roundtrip\n[grid]\nn_steps = 100\n").unwrap_err();
        assert_eq!(e.path, "grid.n_steps");
        let e = parse_config("experiment = ito-approx\n[check]\nschedule = 1,1,4,3\n").unwrap_err();
        assert_eq!(e.path, "check.schedule");
    }

    #[test]
    fn schedule_grammar() {
        let s = parse_schedule("1,1,4,4; inf,4,inf,8").unwrap();
        assert_eq!(s[1].j, f64::INFINITY);
        assert_eq!(s[1].ell, u64::MAX);
        assert!(parse_schedule("2,1,4,4; 1,1,4,4").is_err());
        assert!(parse_schedule("1,1,4").is_err());
        assert!(parse_schedule("0,1,4,4").is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Tanaka);
        cfg.set_seed(77);
        cfg.set_paths(500).unwrap();
        assert_eq!(cfg.seed(), 77);
        assert_eq!(cfg.count("tanaka.n_paths"), 500);
        assert!(cfg.set_paths(0).is_err());
        assert!(cfg.set("grid.n_steps", "abc").is_err());
    }
}
