//! Flat `key = value` scenario files layered under command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use wva_core::Amplitude;

use crate::format::{fmt_complex, fmt_num};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Line(usize),
    Flag,
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Line(n) => write!(f, "line {n}"),
            Source::Flag => write!(f, "command line"),
            Source::Default => write!(f, "default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: Source,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: field '{}': {}", self.source, self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(source: Source, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        source,
        field: field.to_string(),
        message: message.into(),
    }
}

const KEYS: &[&str] = &[
    "g", "aw_re", "aw_im", "chi", "phi", "pre", "post", "obs", "probe", "w", "s", "probe_file",
    "n_points", "support", "n_range", "output", "format", "axis", "values", "from", "to",
    "count", "max_iters", "step", "tol", "seed", "init", "probe_output",
];

/// Raw entries keyed by name, remembering where each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Source)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let source = Source::Line(idx + 1);
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(source, content, "expected key = value"))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(err(source, key, "unknown key"));
            }
            if raw.entries.contains_key(key) {
                return Err(err(source, key, "duplicate key"));
            }
            raw.entries
                .insert(key.to_string(), (value.trim().to_string(), source));
        }
        Ok(raw)
    }

    /// Flags replace file entries with the same key.
    pub fn set_flag(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key), "unknown key {key}");
        self.entries
            .insert(key.to_string(), (value.into(), Source::Flag));
    }

    fn get(&self, key: &str) -> Option<(&str, Source)> {
        self.entries.get(key).map(|(v, s)| (v.as_str(), *s))
    }

    /// Raw text and origin of one entry.
    pub fn lookup(&self, key: &str) -> Option<(&str, Source)> {
        self.get(key)
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|(v, s)| parse_real(v).map_err(|m| err(s, key, m)))
            .transpose()
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key)
            .map(|(v, s)| {
                v.parse::<T>()
                    .map_err(|_| err(s, key, format!("invalid integer '{v}'")))
            })
            .transpose()
    }

    fn required_real(&self, key: &str) -> Result<f64, ConfigError> {
        self.real(key)?
            .ok_or_else(|| err(Source::Default, key, "missing required value"))
    }

    fn source(&self, key: &str) -> Source {
        self.get(key).map_or(Source::Default, |(_, s)| s)
    }
}

pub fn parse_real(text: &str) -> Result<f64, String> {
    let x: f64 = text
        .trim()
        .parse()
        .map_err(|_| format!("invalid number '{text}'"))?;
    if !x.is_finite() {
        return Err(format!("non-finite number '{text}'"));
    }
    Ok(x)
}

/// Accepts `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i` with optional exponents.
pub fn parse_complex(text: &str) -> Result<Amplitude, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("invalid complex number '{text}'");
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return parse_real(&s).map(|re| Amplitude::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re_part, im_part) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im_part {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => parse_real(other).map_err(|_| bad())?,
    };
    let re = parse_real(re_part).map_err(|_| bad())?;
    Ok(Amplitude::new(re, im))
}

fn parse_vector(text: &str) -> Result<Vec<Amplitude>, String> {
    text.split(',').map(parse_complex).collect()
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<Amplitude>>, String> {
    text.split(';').map(parse_vector).collect()
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',').map(parse_real).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    WeakValue(Amplitude),
    MachZehnder { chi: f64, phi: f64 },
    States {
        pre: Vec<Amplitude>,
        post: Vec<Amplitude>,
        obs: Vec<Vec<Amplitude>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeChoice {
    Gaussian { w: f64 },
    Optimal,
    Smoothed { s: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    PostselectionAngle,
    SmoothingS,
    CouplingG,
    GridN,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::PostselectionAngle => "postselection_angle",
            Axis::SmoothingS => "smoothing_s",
            Axis::CouplingG => "coupling_g",
            Axis::GridN => "grid_n",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        [
            Axis::PostselectionAngle,
            Axis::SmoothingS,
            Axis::CouplingG,
            Axis::GridN,
        ]
        .into_iter()
        .find(|a| a.name() == text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValues {
    List(Vec<f64>),
    Range { from: f64, to: f64, count: usize },
}

impl SweepValues {
    pub fn expand(&self) -> Vec<f64> {
        match self {
            SweepValues::List(v) => v.clone(),
            SweepValues::Range { from, to, count } => {
                let step = (to - from) / (*count - 1) as f64;
                (0..*count)
                    .map(|k| if k + 1 == *count { *to } else { from + step * k as f64 })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: SweepValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitChoice {
    Gaussian,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSettings {
    pub max_iters: usize,
    pub step: f64,
    pub tol: f64,
    pub seed: u64,
    pub init: InitChoice,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            step: 1.0,
            tol: 1e-6,
            seed: 7,
            init: InitChoice::Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub g: f64,
    pub selection: Selection,
    pub probe: ProbeChoice,
    /// `None` picks a grid suited to the probe.
    pub n_points: Option<usize>,
    /// Support multiplier `m` for `[-πm/2g, πm/2g]`.
    pub support: u32,
    pub n_range: usize,
    pub output: Option<PathBuf>,
    pub probe_output: Option<PathBuf>,
    pub sweep: Option<SweepConfig>,
    pub optimize: OptimizeSettings,
}

pub const DEFAULT_N_RANGE: usize = 20;

impl ScenarioConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let g = raw.required_real("g")?;
        if g.is_nan() || g < 0.0 {
            return Err(err(raw.source("g"), "g", "coupling must be non-negative"));
        }

        let modes: Vec<&str> = [
            ("weak_value", raw.has("aw_re") || raw.has("aw_im")),
            ("mach_zehnder", raw.has("chi") || raw.has("phi")),
            ("states", raw.has("pre") || raw.has("post") || raw.has("obs")),
        ]
        .iter()
        .filter(|(_, on)| *on)
        .map(|(name, _)| *name)
        .collect();
        let selection = match modes.as_slice() {
            ["weak_value"] => Selection::WeakValue(Amplitude::new(
                raw.real("aw_re")?.unwrap_or(0.0),
                raw.real("aw_im")?.unwrap_or(0.0),
            )),
            ["mach_zehnder"] => Selection::MachZehnder {
                chi: raw.required_real("chi")?,
                phi: raw.required_real("phi")?,
            },
            ["states"] => {
                let field = |key: &str| {
                    raw.get(key)
                        .ok_or_else(|| err(Source::Default, key, "missing required value"))
                };
                let (pre, s) = field("pre")?;
                let pre = parse_vector(pre).map_err(|m| err(s, "pre", m))?;
                let (post, s) = field("post")?;
                let post = parse_vector(post).map_err(|m| err(s, "post", m))?;
                let (obs, s) = field("obs")?;
                let obs = parse_matrix(obs).map_err(|m| err(s, "obs", m))?;
                Selection::States { pre, post, obs }
            }
            [] => {
                return Err(err(
                    Source::Default,
                    "selection",
                    "one of aw_re/aw_im, chi/phi or pre/post/obs is required",
                ))
            }
            many => {
                return Err(err(
                    Source::Default,
                    "selection",
                    format!("exactly one selection mode allowed, found {}", many.join(", ")),
                ))
            }
        };

        let sweep = match raw.get("axis") {
            None => None,
            Some((name, s)) => {
                let axis = Axis::parse(name).ok_or_else(|| {
                    err(
                        s,
                        "axis",
                        "expected postselection_angle, smoothing_s, coupling_g or grid_n",
                    )
                })?;
                let values = if let Some((list, s)) = raw.get("values") {
                    if raw.has("from") || raw.has("to") || raw.has("count") {
                        return Err(err(s, "values", "give either values or from/to/count"));
                    }
                    SweepValues::List(parse_list(list).map_err(|m| err(s, "values", m))?)
                } else {
                    let count: usize = raw
                        .integer("count")?
                        .ok_or_else(|| err(Source::Default, "count", "missing required value"))?;
                    if count < 2 {
                        return Err(err(raw.source("count"), "count", "a sweep needs at least 2 samples"));
                    }
                    SweepValues::Range {
                        from: raw.required_real("from")?,
                        to: raw.required_real("to")?,
                        count,
                    }
                };
                if values.expand().len() < 2 {
                    return Err(err(raw.source("values"), "values", "a sweep needs at least 2 samples"));
                }
                Some(SweepConfig { axis, values })
            }
        };

        let probe = match raw.get("probe") {
            None => return Err(err(Source::Default, "probe", "missing required value")),
            Some(("gaussian", _)) => ProbeChoice::Gaussian {
                w: raw.required_real("w")?,
            },
            Some(("optimal", _)) => ProbeChoice::Optimal,
            Some(("smoothed", _)) => ProbeChoice::Smoothed {
                s: match (raw.real("s")?, &sweep) {
                    (Some(s), _) => s,
                    // The swept value replaces s row by row.
                    (None, Some(sw)) if sw.axis == Axis::SmoothingS => sw.values.expand()[0],
                    (None, _) => raw.required_real("s")?,
                },
            },
            Some(("file", s)) => ProbeChoice::File {
                path: raw
                    .get("probe_file")
                    .map(|(p, _)| PathBuf::from(p))
                    .ok_or_else(|| err(s, "probe_file", "required for probe = file"))?,
            },
            Some((other, s)) => {
                return Err(err(
                    s,
                    "probe",
                    format!("expected gaussian, optimal, smoothed or file, got '{other}'"),
                ))
            }
        };
        for (key, needed) in [
            ("w", matches!(probe, ProbeChoice::Gaussian { .. })),
            ("s", matches!(probe, ProbeChoice::Smoothed { .. })),
            ("probe_file", matches!(probe, ProbeChoice::File { .. })),
        ] {
            if raw.has(key) && !needed {
                return Err(err(
                    raw.source(key),
                    key,
                    "does not apply to the selected probe (exactly one probe choice)",
                ));
            }
        }

        let n_points: Option<usize> = raw.integer("n_points")?;
        if let Some(n) = n_points {
            if n < 5 || n % 2 == 0 {
                return Err(err(raw.source("n_points"), "n_points", "must be odd and at least 5"));
            }
        }
        let support: u32 = raw.integer("support")?.unwrap_or(1);
        if support == 0 {
            return Err(err(raw.source("support"), "support", "must be at least 1"));
        }
        let n_range = raw.integer("n_range")?.unwrap_or(DEFAULT_N_RANGE);
        if let Some((f, s)) = raw.get("format") {
            if f != "csv" {
                return Err(err(s, "format", format!("only csv is supported, got '{f}'")));
            }
        }

        let defaults = OptimizeSettings::default();
        let optimize = OptimizeSettings {
            max_iters: raw.integer("max_iters")?.unwrap_or(defaults.max_iters),
            step: raw.real("step")?.unwrap_or(defaults.step),
            tol: raw.real("tol")?.unwrap_or(defaults.tol),
            seed: raw.integer("seed")?.unwrap_or(defaults.seed),
            init: match raw.get("init") {
                None | Some(("gaussian", _)) => InitChoice::Gaussian,
                Some(("random", _)) => InitChoice::Random,
                Some((other, s)) => {
                    return Err(err(s, "init", format!("expected gaussian or random, got '{other}'")))
                }
            },
        };

        Ok(ScenarioConfig {
            g,
            selection,
            probe,
            n_points,
            support,
            n_range,
            output: raw.get("output").map(|(p, _)| PathBuf::from(p)),
            probe_output: raw.get("probe_output").map(|(p, _)| PathBuf::from(p)),
            sweep,
            optimize,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    /// Serializes to the file format; [`ScenarioConfig::parse`] inverts it.
    pub fn to_config_text(&self) -> String {
        let mut lines = vec![format!("g = {}", exact(self.g))];
        match &self.selection {
            Selection::WeakValue(aw) => {
                lines.push(format!("aw_re = {}", exact(aw.re)));
                lines.push(format!("aw_im = {}", exact(aw.im)));
            }
            Selection::MachZehnder { chi, phi } => {
                lines.push(format!("chi = {}", exact(*chi)));
                lines.push(format!("phi = {}", exact(*phi)));
            }
            Selection::States { pre, post, obs } => {
                let vector = |v: &[Amplitude]| {
                    v.iter().map(|z| exact_complex(*z)).collect::<Vec<_>>().join(", ")
                };
                lines.push(format!("pre = {}", vector(pre)));
                lines.push(format!("post = {}", vector(post)));
                let rows: Vec<String> = obs.iter().map(|r| vector(r)).collect();
                lines.push(format!("obs = {}", rows.join("; ")));
            }
        }
        match &self.probe {
            ProbeChoice::Gaussian { w } => {
                lines.push("probe = gaussian".into());
                lines.push(format!("w = {}", exact(*w)));
            }
            ProbeChoice::Optimal => lines.push("probe = optimal".into()),
            ProbeChoice::Smoothed { s } => {
                lines.push("probe = smoothed".into());
                lines.push(format!("s = {}", exact(*s)));
            }
            ProbeChoice::File { path } => {
                lines.push("probe = file".into());
                lines.push(format!("probe_file = {}", path.display()));
            }
        }
        if let Some(n) = self.n_points {
            lines.push(format!("n_points = {n}"));
        }
        lines.push(format!("support = {}", self.support));
        lines.push(format!("n_range = {}", self.n_range));
        if let Some(p) = &self.output {
            lines.push(format!("output = {}", p.display()));
        }
        if let Some(p) = &self.probe_output {
            lines.push(format!("probe_output = {}", p.display()));
        }
        if let Some(sweep) = &self.sweep {
            lines.push(format!("axis = {}", sweep.axis.name()));
            match &sweep.values {
                SweepValues::List(v) => {
                    let items: Vec<String> = v.iter().map(|x| exact(*x)).collect();
                    lines.push(format!("values = {}", items.join(", ")));
                }
                SweepValues::Range { from, to, count } => {
                    lines.push(format!("from = {}", exact(*from)));
                    lines.push(format!("to = {}", exact(*to)));
                    lines.push(format!("count = {count}"));
                }
            }
        }
        let o = &self.optimize;
        lines.push(format!("max_iters = {}", o.max_iters));
        lines.push(format!("step = {}", exact(o.step)));
        lines.push(format!("tol = {}", exact(o.tol)));
        lines.push(format!("seed = {}", o.seed));
        lines.push(format!(
            "init = {}",
            match o.init {
                InitChoice::Gaussian => "gaussian",
                InitChoice::Random => "random",
            }
        ));
        lines.join("\n") + "\n"
    }
}

/// Shortest representation that parses back to the same `f64`.
fn exact(x: f64) -> String {
    format!("{x:?}")
}

fn exact_complex(z: Amplitude) -> String {
    let sign = if z.im.is_sign_negative() { "" } else { "+" };
    format!("{:?}{sign}{:?}i", z.re, z.im)
}

/// Human-readable summary of the scenario for diagnostics.
pub fn describe(config: &ScenarioConfig) -> String {
    let selection = match &config.selection {
        Selection::WeakValue(aw) => format!("A_w = {}", fmt_complex(*aw)),
        Selection::MachZehnder { chi, phi } => {
            format!("mach_zehnder chi = {}, phi = {}", fmt_num(*chi), fmt_num(*phi))
        }
        Selection::States { pre, .. } => format!("states (dimension {})", pre.len()),
    };
    format!("g = {}, {selection}", fmt_num(config.g))
}
