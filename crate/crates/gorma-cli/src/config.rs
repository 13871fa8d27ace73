//! Sectioned key=value scenario configs.
//!
//! The format is a flat INI-style text file: a top-level `mode` key, then
//! `[params]`, optional `[group1]`/`[group2]`, an optional `[sweep]` and an
//! optional `[run]` section. Keys carry their unit in the name
//! (`period_ms`, `energy_per_copy_j`). Every diagnostic names the line and
//! field it refers to.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use gorma::{QoSGroupSpec, SystemParams};

/// Configuration diagnostic with the offending line and field where known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<u32>,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn at(line: u32, field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            field: Some(field.into()),
            message: message.into(),
        }
    }

    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            field: Some(field.into()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, ", field '{field}'")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    OneHopSweep,
    TwoGroupSweep,
    Optimize,
    Capacity,
    Energy,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::OneHopSweep => "one-hop-sweep",
            Mode::TwoGroupSweep => "two-group-sweep",
            Mode::Optimize => "optimize",
            Mode::Capacity => "capacity",
            Mode::Energy => "energy",
        }
    }
}

/// Sweep axis with its points in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// One-hop total copies per packet.
    Copies(Vec<u32>),
    /// Per-group retransmissions, applied to both groups.
    Retrans(Vec<u32>),
    /// First-group QoS target for the capacity search.
    Q1(Vec<f64>),
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub params: SystemParams,
    /// Two groups for the group modes, empty otherwise.
    pub groups: Vec<QoSGroupSpec>,
    /// Retransmission period of the searched group (capacity mode).
    pub capacity_t1: Option<f64>,
    pub sweep: Option<Sweep>,
    pub periods: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

/// Raw parse product: (section, key) -> (value, line).
struct RawConfig {
    entries: BTreeMap<(String, String), (String, u32)>,
    consumed: std::cell::RefCell<Vec<(String, String)>>,
}

fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut entries = BTreeMap::new();
    let mut section = String::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index as u32 + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                ConfigError::at(line_no, line, "unterminated section header")
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::at(line_no, line, "expected 'key = value'")
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::at(line_no, raw_line.trim(), "empty key"));
        }
        if let Some((_, previous)) =
            entries.insert((section.clone(), key.clone()), (value, line_no))
        {
            return Err(ConfigError::at(
                line_no,
                qualified(&section, &key),
                format!("duplicate key, first set at line {previous}"),
            ));
        }
    }
    Ok(RawConfig {
        entries,
        consumed: std::cell::RefCell::new(Vec::new()),
    })
}

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

impl RawConfig {
    fn get(&self, section: &str, key: &str) -> Option<(&str, u32)> {
        let id = (section.to_string(), key.to_string());
        let found = self.entries.get(&id).map(|(v, l)| (v.as_str(), *l));
        if found.is_some() {
            self.consumed.borrow_mut().push(id);
        }
        found
    }

    fn parse<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        what: &str,
    ) -> Result<Option<(T, u32)>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some((value, line)) => value.parse::<T>().map(|v| Some((v, line))).map_err(|_| {
                ConfigError::at(
                    line,
                    qualified(section, key),
                    format!("expected {what}, got '{value}'"),
                )
            }),
        }
    }

    fn require<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        what: &str,
    ) -> Result<(T, u32), ConfigError> {
        self.parse(section, key, what)?.ok_or_else(|| {
            ConfigError::field(qualified(section, key), "required key is missing")
        })
    }

    fn reject_unconsumed(&self) -> Result<(), ConfigError> {
        let consumed = self.consumed.borrow();
        for ((section, key), (_, line)) in &self.entries {
            if !consumed.iter().any(|(s, k)| s == section && k == key) {
                return Err(ConfigError::at(
                    *line,
                    qualified(section, key),
                    "unknown key for this mode",
                ));
            }
        }
        Ok(())
    }
}

fn map_gorma_err(field: &str, line: Option<u32>, err: gorma::Error) -> ConfigError {
    ConfigError {
        line,
        field: Some(field.to_string()),
        message: err.to_string(),
    }
}

fn parse_params(raw: &RawConfig) -> Result<SystemParams, ConfigError> {
    let (n_nodes, n_line) = raw.require::<u32>("params", "n_nodes", "a positive integer")?;
    let (period, _) = raw.require::<f64>("params", "period_ms", "a number")?;
    let (packet_time, tp_line) = raw.require::<f64>("params", "packet_time_ms", "a number")?;
    let mut params = SystemParams::new(n_nodes, period, packet_time)
        .map_err(|e| map_gorma_err("params", Some(n_line.max(tp_line)), e))?;
    if let Some((cs, line)) = raw.parse::<f64>("params", "carrier_sense_ms", "a number")? {
        params = params
            .with_carrier_sense(cs)
            .map_err(|e| map_gorma_err("params.carrier_sense_ms", Some(line), e))?;
    }
    if let Some((eps, line)) = raw.parse::<f64>("params", "channel_error", "a number")? {
        params = params
            .with_channel_error(eps)
            .map_err(|e| map_gorma_err("params.channel_error", Some(line), e))?;
    }
    if let Some((j, line)) = raw.parse::<f64>("params", "energy_per_copy_j", "a number")? {
        params = params
            .with_energy_per_copy(j)
            .map_err(|e| map_gorma_err("params.energy_per_copy_j", Some(line), e))?;
    }
    Ok(params)
}

fn parse_group(raw: &RawConfig, section: &str) -> Result<QoSGroupSpec, ConfigError> {
    let (m, m_line) = raw.require::<u32>(section, "m", "a positive integer")?;
    let (q_min, _) = raw.require::<f64>(section, "q_min", "a number in (0, 1)")?;
    let (t, _) = raw.require::<f64>(section, "t_ms", "a number")?;
    QoSGroupSpec::new(m, q_min, t).map_err(|e| map_gorma_err(section, Some(m_line), e))
}

fn parse_number_list<T: std::str::FromStr>(
    value: &str,
    line: u32,
    field: &str,
    what: &str,
) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|part| {
            part.trim().parse::<T>().map_err(|_| {
                ConfigError::at(line, field, format!("expected {what}, got '{}'", part.trim()))
            })
        })
        .collect()
}

fn parse_integer_points(raw: &RawConfig) -> Result<Vec<u32>, ConfigError> {
    if let Some((value, line)) = raw.get("sweep", "values") {
        let points =
            parse_number_list::<u32>(value, line, "sweep.values", "an integer list")?;
        if points.is_empty() || points.contains(&0) {
            return Err(ConfigError::at(
                line,
                "sweep.values",
                "need a non-empty list of integers >= 1",
            ));
        }
        return Ok(points);
    }
    let (from, from_line) = raw.require::<u32>("sweep", "from", "an integer")?;
    let (to, to_line) = raw.require::<u32>("sweep", "to", "an integer")?;
    let step = match raw.parse::<u32>("sweep", "step", "an integer")? {
        Some((0, line)) => {
            return Err(ConfigError::at(line, "sweep.step", "step must be >= 1"))
        }
        Some((s, _)) => s,
        None => 1,
    };
    if from == 0 {
        return Err(ConfigError::at(from_line, "sweep.from", "must be >= 1"));
    }
    if to < from {
        return Err(ConfigError::at(
            to_line,
            "sweep.to",
            format!("empty range: to = {to} < from = {from}"),
        ));
    }
    Ok((from..=to).step_by(step as usize).collect())
}

fn parse_sweep(raw: &RawConfig, mode: Mode) -> Result<Option<Sweep>, ConfigError> {
    let variable = raw.get("sweep", "variable");
    match mode {
        Mode::Optimize => {
            if let Some((_, line)) = variable {
                return Err(ConfigError::at(
                    line,
                    "sweep.variable",
                    "optimize mode takes no sweep",
                ));
            }
            Ok(None)
        }
        Mode::OneHopSweep | Mode::Energy | Mode::TwoGroupSweep => {
            let wanted = match mode {
                Mode::TwoGroupSweep => "retrans",
                _ => "copies",
            };
            let (value, line) = variable.ok_or_else(|| {
                ConfigError::field("sweep.variable", "required key is missing")
            })?;
            if value != wanted {
                return Err(ConfigError::at(
                    line,
                    "sweep.variable",
                    format!("mode {} sweeps '{wanted}', got '{value}'", mode.name()),
                ));
            }
            let points = parse_integer_points(raw)?;
            Ok(Some(match mode {
                Mode::TwoGroupSweep => Sweep::Retrans(points),
                _ => Sweep::Copies(points),
            }))
        }
        Mode::Capacity => {
            let (value, line) = variable.ok_or_else(|| {
                ConfigError::field("sweep.variable", "required key is missing")
            })?;
            if value != "q1" {
                return Err(ConfigError::at(
                    line,
                    "sweep.variable",
                    format!("capacity mode sweeps 'q1', got '{value}'"),
                ));
            }
            let (list, list_line) = raw.get("sweep", "values").ok_or_else(|| {
                ConfigError::field("sweep.values", "capacity mode needs a q1 list")
            })?;
            let points =
                parse_number_list::<f64>(list, list_line, "sweep.values", "a number list")?;
            if points.is_empty() {
                return Err(ConfigError::at(list_line, "sweep.values", "empty range"));
            }
            if let Some(bad) = points.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
                return Err(ConfigError::at(
                    list_line,
                    "sweep.values",
                    format!("q1 = {bad} must lie strictly in (0, 1)"),
                ));
            }
            Ok(Some(Sweep::Q1(points)))
        }
    }
}

/// Parses and validates one scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw = parse_raw(text)?;
    let (mode_name, mode_line) = raw.require::<String>("", "mode", "a mode name")?;
    let mode = match mode_name.as_str() {
        "one-hop-sweep" => Mode::OneHopSweep,
        "two-group-sweep" => Mode::TwoGroupSweep,
        "optimize" => Mode::Optimize,
        "capacity" => Mode::Capacity,
        "energy" => Mode::Energy,
        other => {
            return Err(ConfigError::at(
                mode_line,
                "mode",
                format!("unknown mode '{other}'"),
            ))
        }
    };
    let params = parse_params(&raw)?;

    let mut capacity_t1 = None;
    let groups = match mode {
        Mode::OneHopSweep | Mode::Energy => Vec::new(),
        Mode::TwoGroupSweep => {
            vec![parse_group(&raw, "group1")?, parse_group(&raw, "group2")?]
        }
        Mode::Optimize => {
            // One-hop when no group sections are present.
            if raw.get("group1", "m").is_some() {
                vec![parse_group(&raw, "group1")?, parse_group(&raw, "group2")?]
            } else {
                Vec::new()
            }
        }
        Mode::Capacity => {
            let (t1, t1_line) = raw.require::<f64>("group1", "t_ms", "a number")?;
            if !(t1.is_finite() && t1 > 0.0) {
                return Err(ConfigError::at(t1_line, "group1.t_ms", "must be > 0"));
            }
            capacity_t1 = Some(t1);
            vec![parse_group(&raw, "group2")?]
        }
    };
    if mode == Mode::TwoGroupSweep || (mode == Mode::Optimize && groups.len() == 2) {
        if groups[0].q_min() < groups[1].q_min() {
            return Err(ConfigError::field(
                "group1.q_min",
                format!(
                    "group1 must carry the stricter target: q_1 = {} < q_2 = {}",
                    groups[0].q_min(),
                    groups[1].q_min()
                ),
            ));
        }
    }

    let sweep = parse_sweep(&raw, mode)?;
    let periods = match raw.parse::<u64>("run", "periods", "a positive integer")? {
        Some((0, line)) => {
            return Err(ConfigError::at(line, "run.periods", "must be >= 1"))
        }
        Some((p, _)) => p,
        None => 100_000,
    };
    let seed = raw
        .parse::<u64>("run", "seed", "an integer")?
        .map(|(s, _)| s)
        .unwrap_or(42);
    let out = raw
        .get("run", "out")
        .map(|(value, _)| PathBuf::from(value));

    raw.reject_unconsumed()?;
    Ok(ScenarioConfig {
        mode,
        params,
        groups,
        capacity_t1,
        sweep,
        periods,
        seed,
        out,
    })
}
