//! Experiment configuration: a TOML document validated key by key.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::fock::MAX_MODES;
use crate::grid::PotentialKind;
use crate::hf::ExchangeMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Hf,
    VlasovCompare,
    Convergence,
    Fluctuation,
    Diagnose,
}

impl ExperimentKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "hf" => ExperimentKind::Hf,
            "vlasov_compare" => ExperimentKind::VlasovCompare,
            "convergence" => ExperimentKind::Convergence,
            "fluctuation" => ExperimentKind::Fluctuation,
            "diagnose" => ExperimentKind::Diagnose,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Hf => "hf",
            ExperimentKind::VlasovCompare => "vlasov_compare",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Fluctuation => "fluctuation",
            ExperimentKind::Diagnose => "diagnose",
        }
    }

    /// Runs on the few-mode Fock model rather than a grid.
    pub fn uses_modes(self) -> bool {
        matches!(self, ExperimentKind::Convergence | ExperimentKind::Fluctuation)
    }
}

/// How `ε` follows the particle number.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    /// `ε = N^{-1/3}`.
    Coupled13,
    /// `ε = N^{-1}`.
    Coupled1,
    /// One `ε` per entry of the particle-number list.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalConfig {
    pub temperature: f64,
    pub n_values: Vec<f64>,
    pub epsilon_mode: EpsilonMode,
    pub tf_dim: usize,
    pub oversample: usize,
    pub v_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt: f64,
    pub record_every: usize,
}

/// Initial fluctuation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum XiChoice {
    /// The vacuum `Ω`.
    Vacuum,
    /// `a*_{0,l}Ω`.
    Excitation,
    /// Random vector supported on at most `cutoff` particles.
    Random { cutoff: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockConfig {
    pub d: usize,
    pub k_max: u32,
    pub xi: XiChoice,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output: Option<String>,
    pub grid: Option<GridConfig>,
    pub potential: PotentialKind,
    /// Confining potential used only to prepare the initial state.
    pub external: Option<PotentialKind>,
    pub thermal: ThermalConfig,
    pub time: TimeConfig,
    pub exchange: ExchangeMode,
    pub fock: Option<FockConfig>,
    pub semiclassical_probes: usize,
}

impl ExperimentConfig {
    /// `ε` of every sweep point, paired with its particle number.
    pub fn sweep(&self) -> Vec<(f64, f64)> {
        let ns = &self.thermal.n_values;
        match &self.thermal.epsilon_mode {
            EpsilonMode::Coupled13 => ns.iter().map(|&n| (n, n.powf(-1.0 / 3.0))).collect(),
            EpsilonMode::Coupled1 => ns.iter().map(|&n| (n, 1.0 / n)).collect(),
            EpsilonMode::Explicit(eps) => ns.iter().copied().zip(eps.iter().copied()).collect(),
        }
    }

    /// Sample times `j·dt·record_every` up to and including `t_final`.
    pub fn sample_times(&self) -> Vec<f64> {
        let t = &self.time;
        let stride = t.dt * t.record_every as f64;
        let count = (t.t_final / stride - 1e-9).ceil().max(0.0) as usize;
        let mut out: Vec<f64> = (0..count).map(|j| j as f64 * stride).collect();
        out.push(t.t_final);
        out
    }

    /// SHA-256 of the normalized configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// A parsed configuration with non-fatal findings.
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
}

struct Section<'a> {
    name: &'a str,
    table: Option<&'a Table>,
    seen: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, table: Option<&'a Table>) -> Self {
        Section {
            name,
            table,
            seen: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn float(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<f64> {
        let path = self.path(key);
        match self.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                errors.push(format!("{path}: expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn int(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<i64> {
        let path = self.path(key);
        match self.get(key)? {
            Value::Integer(i) => Some(*i),
            other => {
                errors.push(format!("{path}: expected an integer, found {}", other.type_str()));
                None
            }
        }
    }

    fn string(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<&'a str> {
        let path = self.path(key);
        match self.get(key)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                errors.push(format!("{path}: expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn floats(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<Vec<f64>> {
        let path = self.path(key);
        match self.get(key)? {
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for v in items {
                    match v {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(i) => out.push(*i as f64),
                        other => {
                            errors.push(format!("{path}: expected numbers, found {}", other.type_str()));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            other => {
                errors.push(format!("{path}: expected an array, found {}", other.type_str()));
                None
            }
        }
    }

    fn required<T>(&self, key: &str, value: Option<T>, errors: &mut Vec<String>) -> Option<T> {
        if value.is_none() && self.table.and_then(|t| t.get(key)).is_none() {
            errors.push(format!("missing required key {}", self.path(key)));
        }
        value
    }

    fn finish(&self, errors: &mut Vec<String>) {
        if let Some(t) = self.table {
            for key in t.keys() {
                if !self.seen.contains(key.as_str()) {
                    errors.push(format!("unknown key {}", self.path(key)));
                }
            }
        }
    }
}

fn sub_table<'a>(root: &'a Table, name: &str, errors: &mut Vec<String>) -> Option<&'a Table> {
    match root.get(name)? {
        Value::Table(t) => Some(t),
        other => {
            errors.push(format!("{name}: expected a table, found {}", other.type_str()));
            None
        }
    }
}

fn potential_from(value: &Table, name: &str, errors: &mut Vec<String>) -> Option<PotentialKind> {
    match Value::Table(value.clone()).try_into::<PotentialKind>() {
        Ok(kind) => Some(kind),
        Err(e) => {
            errors.push(format!("{name}: {}", e.to_string().trim()));
            None
        }
    }
}

fn positive(path: &str, x: Option<f64>, errors: &mut Vec<String>) {
    if let Some(x) = x {
        if !(x > 0.0 && x.is_finite()) {
            errors.push(format!("{path} must be positive, got {x}"));
        }
    }
}

const ROOT_SECTIONS: [&str; 7] = ["grid", "potential", "external", "thermal", "time", "hf", "fock"];

/// Parse and validate a configuration. Every violation is reported together.
pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.to_string().trim())]))?;
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let mut top = Section::new("", Some(&root));
    for s in ROOT_SECTIONS {
        top.seen.insert(s);
    }
    let kind_name = top.string("kind", &mut errors);
    let kind_name = top.required("kind", kind_name, &mut errors);
    let kind = kind_name.and_then(|k| {
        let parsed = ExperimentKind::parse(k);
        if parsed.is_none() {
            errors.push(format!(
                "kind: unknown experiment kind {k:?} (expected hf, vlasov_compare, convergence, fluctuation or diagnose)"
            ));
        }
        parsed
    });
    let seed = top.int("seed", &mut errors).unwrap_or(0);
    if seed < 0 {
        errors.push("seed must be nonnegative".into());
    }
    let output = top.string("output", &mut errors).map(str::to_string);
    top.finish(&mut errors);

    // [grid]
    let grid_table = sub_table(&root, "grid", &mut errors);
    let mut gs = Section::new("grid", grid_table);
    let dim = gs.int("dim", &mut errors).unwrap_or(1);
    let n = gs.int("n", &mut errors);
    let length = gs.float("length", &mut errors).unwrap_or(2.0 * PI);
    gs.finish(&mut errors);
    positive("grid.length", Some(length), &mut errors);
    if !(1..=3).contains(&dim) {
        errors.push(format!("grid.dim must be 1, 2 or 3, got {dim}"));
    }
    if let Some(n) = n {
        if n < 2 || n % 2 != 0 {
            errors.push(format!("grid.n must be even and at least 2, got {n}"));
        } else if (1..=3).contains(&dim) && (n as f64).powi(dim as i32) > 8192.0 {
            errors.push(format!("grid has {n}^{dim} points, more than 8192"));
        }
    }

    // [potential]
    let potential = match sub_table(&root, "potential", &mut errors) {
        Some(t) => potential_from(t, "potential", &mut errors),
        None => {
            if !root.contains_key("potential") {
                errors.push("missing required section potential".into());
            }
            None
        }
    };
    let external = sub_table(&root, "external", &mut errors).and_then(|t| potential_from(t, "external", &mut errors));

    // [thermal]
    let thermal_table = sub_table(&root, "thermal", &mut errors);
    if thermal_table.is_none() && !root.contains_key("thermal") {
        errors.push("missing required section thermal".into());
    }
    let mut ts = Section::new("thermal", thermal_table);
    let temperature = ts.float("temperature", &mut errors);
    let temperature = ts.required("temperature", temperature, &mut errors);
    positive("thermal.temperature", temperature, &mut errors);
    let n_values = ts.floats("n_values", &mut errors);
    let n_values = ts.required("n_values", n_values, &mut errors);
    if let Some(ns) = &n_values {
        if ns.is_empty() {
            errors.push("thermal.n_values must not be empty".into());
        }
        for &x in ns {
            positive("thermal.n_values entry", Some(x), &mut errors);
        }
    }
    let mode_name = ts.string("epsilon_mode", &mut errors).unwrap_or("coupled_13");
    let epsilons = ts.floats("epsilons", &mut errors);
    let epsilon_mode = match mode_name {
        "coupled_13" => Some(EpsilonMode::Coupled13),
        "coupled_1" => Some(EpsilonMode::Coupled1),
        "explicit" => match &epsilons {
            Some(eps) => {
                for &e in eps {
                    positive("thermal.epsilons entry", Some(e), &mut errors);
                }
                if let Some(ns) = &n_values {
                    if ns.len() != eps.len() {
                        errors.push(format!(
                            "thermal.epsilons has {} entries but thermal.n_values has {}",
                            eps.len(),
                            ns.len()
                        ));
                    }
                }
                Some(EpsilonMode::Explicit(eps.clone()))
            }
            None => {
                errors.push("missing required key thermal.epsilons (epsilon_mode = \"explicit\")".into());
                None
            }
        },
        other => {
            errors.push(format!(
                "thermal.epsilon_mode: unknown mode {other:?} (expected coupled_13, coupled_1 or explicit)"
            ));
            None
        }
    };
    if epsilons.is_some() && mode_name != "explicit" {
        warnings.push("thermal.epsilons is ignored unless epsilon_mode = \"explicit\"".into());
    }
    let tf_dim = ts.int("tf_dim", &mut errors).unwrap_or(dim);
    if !(1..=3).contains(&tf_dim) {
        errors.push(format!("thermal.tf_dim must be 1, 2 or 3, got {tf_dim}"));
    }
    let oversample = ts.int("oversample", &mut errors).unwrap_or(2);
    if oversample < 1 {
        errors.push(format!("thermal.oversample must be at least 1, got {oversample}"));
    }
    let v_max = ts.float("v_max", &mut errors);
    positive("thermal.v_max", v_max, &mut errors);
    ts.finish(&mut errors);

    // [time]
    let needs_time = kind != Some(ExperimentKind::Diagnose);
    let time_table = sub_table(&root, "time", &mut errors);
    if needs_time && time_table.is_none() && !root.contains_key("time") {
        errors.push("missing required section time".into());
    }
    let mut tm = Section::new("time", time_table);
    let t_final = tm.float("t_final", &mut errors);
    let t_final = if needs_time && time_table.is_some() {
        tm.required("t_final", t_final, &mut errors)
    } else {
        Some(t_final.unwrap_or(0.0))
    };
    if let Some(t) = t_final {
        if !(t >= 0.0 && t.is_finite()) {
            errors.push(format!("time.t_final must be nonnegative, got {t}"));
        }
    }
    let dt = tm.float("dt", &mut errors).unwrap_or(1e-3);
    positive("time.dt", Some(dt), &mut errors);
    let record_every = tm.int("record_every", &mut errors).unwrap_or(10);
    if record_every < 1 {
        errors.push(format!("time.record_every must be at least 1, got {record_every}"));
    }
    tm.finish(&mut errors);

    // [hf]
    let hf_table = sub_table(&root, "hf", &mut errors);
    let mut hs = Section::new("hf", hf_table);
    let exchange_name = hs.string("exchange", &mut errors);
    let exchange = match exchange_name {
        None if kind == Some(ExperimentKind::VlasovCompare) => ExchangeMode::Off,
        None => ExchangeMode::Subtract,
        Some("subtract") => ExchangeMode::Subtract,
        Some("add") => ExchangeMode::Add,
        Some("off") => ExchangeMode::Off,
        Some(other) => {
            errors.push(format!("hf.exchange: unknown mode {other:?} (expected subtract, add or off)"));
            ExchangeMode::Subtract
        }
    };
    let probes = hs.int("semiclassical_probes", &mut errors).unwrap_or(4);
    if probes < 1 {
        errors.push(format!("hf.semiclassical_probes must be at least 1, got {probes}"));
    }
    hs.finish(&mut errors);

    // [fock]
    let fock_table = sub_table(&root, "fock", &mut errors);
    let mut fs = Section::new("fock", fock_table);
    let d = fs.int("d", &mut errors);
    let k_max = fs.int("k_max", &mut errors).unwrap_or(2);
    let xi_name = fs.string("xi", &mut errors).unwrap_or("vacuum");
    let cutoff = fs.int("xi_cutoff", &mut errors);
    let fock_length = fs.float("length", &mut errors).unwrap_or(2.0 * PI);
    fs.finish(&mut errors);
    let xi = match xi_name {
        "vacuum" => XiChoice::Vacuum,
        "excitation" => XiChoice::Excitation,
        "random" => XiChoice::Random {
            cutoff: cutoff.unwrap_or(2).max(0) as usize,
        },
        other => {
            errors.push(format!("fock.xi: unknown choice {other:?} (expected vacuum, excitation or random)"));
            XiChoice::Vacuum
        }
    };
    if cutoff.is_some() && xi_name != "random" {
        warnings.push("fock.xi_cutoff is ignored unless xi = \"random\"".into());
    }
    if !(1..=10).contains(&k_max) {
        errors.push(format!("fock.k_max must lie in 1..=10, got {k_max}"));
    }
    positive("fock.length", Some(fock_length), &mut errors);

    // Cross-section rules by kind.
    if let Some(kind) = kind {
        if kind.uses_modes() {
            if fock_table.is_none() {
                errors.push(format!("missing required section fock (kind = {})", kind.name()));
            } else if d.is_none() {
                errors.push("missing required key fock.d".into());
            }
            if let Some(d) = d {
                if d < 1 || 2 * d as usize > MAX_MODES {
                    errors.push(format!("fock.d = {d} needs 2d <= {MAX_MODES}"));
                }
                if let Some(ns) = &n_values {
                    for &x in ns {
                        if x >= d as f64 {
                            errors.push(format!("thermal.n_values entry {x} must be below fock.d = {d}"));
                        }
                    }
                }
            }
            if grid_table.is_some() {
                warnings.push(format!("section grid is unused for kind = {}", kind.name()));
            }
        } else {
            if grid_table.is_none() {
                errors.push(format!("missing required section grid (kind = {})", kind.name()));
            } else if n.is_none() {
                errors.push("missing required key grid.n".into());
            }
            if fock_table.is_some() {
                warnings.push(format!("section fock is unused for kind = {}", kind.name()));
            }
            if kind == ExperimentKind::VlasovCompare && dim != 1 {
                errors.push("vlasov_compare needs grid.dim = 1".into());
            }
            if let (Some(n), Some(ns)) = (n, &n_values) {
                let size = (n as f64).powi(dim.clamp(1, 3) as i32);
                for &x in ns {
                    if x >= size {
                        errors.push(format!("thermal.n_values entry {x} must be below the grid size {size}"));
                    }
                }
            }
        }
        if kind == ExperimentKind::Diagnose && time_table.is_some() {
            warnings.push("section time is unused for kind = diagnose".into());
        }
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let kind = kind.expect("validated");
    let grid = if kind.uses_modes() {
        None
    } else {
        Some(GridConfig {
            dim: dim as usize,
            n: n.expect("validated") as usize,
            length,
        })
    };
    let fock = if kind.uses_modes() {
        Some(FockConfig {
            d: d.expect("validated") as usize,
            k_max: k_max as u32,
            xi,
            length: fock_length,
        })
    } else {
        None
    };
    Ok(ParsedConfig {
        config: ExperimentConfig {
            kind,
            seed: seed as u64,
            output,
            grid,
            potential: potential.expect("validated"),
            external,
            thermal: ThermalConfig {
                temperature: temperature.expect("validated"),
                n_values: n_values.expect("validated"),
                epsilon_mode: epsilon_mode.expect("validated"),
                tf_dim: tf_dim as usize,
                oversample: oversample as usize,
                v_max,
            },
            time: TimeConfig {
                t_final: t_final.expect("validated"),
                dt,
                record_every: record_every as usize,
            },
            exchange,
            fock,
            semiclassical_probes: probes as usize,
        },
        warnings,
    })
}
