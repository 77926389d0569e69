//! Run configuration: flat dotted-key TOML, validated in one pass.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::Value;

use crate::besov::{BesovParams, FriedrichsConfig};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{Coefficients, Frame};
use crate::timestep::{RunPlan, StepControl};

pub const DEFAULT_N: usize = 512;
pub const DEFAULT_LENGTH: f64 = 40.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Friedrichs,
    Audit,
    Sweep,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Friedrichs => "friedrichs",
            Mode::Audit => "audit",
            Mode::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "simulate" => Mode::Simulate,
            "friedrichs" => Mode::Friedrichs,
            "audit" => Mode::Audit,
            "sweep" => Mode::Sweep,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Vorticity { a: f64 },
    Coriolis { omega: f64 },
    Generalized2ch,
    Sigma0,
    Custom { a: [f64; 6], b: [f64; 3] },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Vorticity { .. } => "vorticity",
            Preset::Coriolis { .. } => "coriolis",
            Preset::Generalized2ch => "generalized-2ch",
            Preset::Sigma0 => "sigma0",
            Preset::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub preset: Preset,
    pub sigma: f64,
}

impl ModelConfig {
    pub fn coefficients(&self) -> Coefficients {
        match &self.preset {
            Preset::Vorticity { a } => Coefficients::from_vorticity(*a, self.sigma),
            Preset::Coriolis { omega } => Coefficients::from_coriolis(*omega, self.sigma),
            Preset::Generalized2ch => Coefficients::generalized_two_component(self.sigma),
            Preset::Sigma0 => Coefficients::sigma0(),
            Preset::Custom { a, b } => Coefficients::custom(self.sigma, *a, *b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Gaussian,
    Sech2,
    SinePacket,
    SteepFront,
    File,
}

impl InitialKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitialKind::Gaussian => "gaussian",
            InitialKind::Sech2 => "sech2",
            InitialKind::SinePacket => "sine_packet",
            InitialKind::SteepFront => "steep_front",
            InitialKind::File => "file",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gaussian" => InitialKind::Gaussian,
            "sech2" => InitialKind::Sech2,
            "sine_packet" => InitialKind::SinePacket,
            "steep_front" => InitialKind::SteepFront,
            "file" => InitialKind::File,
            _ => return None,
        })
    }
}

/// Initial profile. With `s = (x - center) / width`:
///
/// | kind | u | zeta |
/// |---|---|---|
/// | gaussian | `A exp(-s^2)` | `Z exp(-s^2)` |
/// | sech2 | `A sech^2 s` | `Z sech^2 s` |
/// | sine_packet | `A exp(-s^2) sin(k(x-center))` | `Z exp(-s^2) cos(k(x-center))` |
/// | steep_front | `-A sqrt(2e) s exp(-s^2)` | `Z exp(-s^2)` |
///
/// `A = amplitude`, `Z = zeta_amplitude`, `k = wavenumber`. The steep front has
/// `u0'(center) = -A sqrt(2e) / width`; its default `Z = -1` puts a dry point
/// (`rho0 = 0`) under the steepest slope.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataSpec {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub width: f64,
    /// `None` centres the profile in the domain.
    pub center: Option<f64>,
    pub zeta_amplitude: f64,
    pub wavenumber: f64,
    /// Rescales both components so that `E(0)` hits this value.
    pub target_e0: Option<f64>,
    /// Marks a run intended for the small-energy global regime.
    pub global_regime: bool,
    pub file: Option<PathBuf>,
}

impl InitialDataSpec {
    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        Self {
            kind: InitialKind::Gaussian,
            amplitude,
            width,
            center: None,
            zeta_amplitude: 0.0,
            wavenumber: 2.0,
            target_e0: None,
            global_regime: false,
            file: None,
        }
    }

    pub fn steep_front(amplitude: f64, width: f64) -> Self {
        Self {
            kind: InitialKind::SteepFront,
            zeta_amplitude: -1.0,
            ..Self::gaussian(amplitude, width)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub grid: Grid,
    pub model: ModelConfig,
    pub frame: Frame,
    pub initial: InitialDataSpec,
    pub t_final: f64,
    pub step: StepControl,
    pub fixed_dt: Option<f64>,
    pub diag_interval: f64,
    pub eps0: Option<f64>,
    pub snapshot_times: Vec<f64>,
    pub snapshot_interval: Option<f64>,
    pub besov: Option<BesovParams>,
    pub flowmap_seeds: usize,
    pub flowmap_range: Option<(f64, f64)>,
    pub output_dir: PathBuf,
    pub friedrichs: FriedrichsConfig,
    pub audit_a: Vec<f64>,
    /// Dotted key and value list of every swept parameter.
    pub sweep: Vec<(String, Vec<Value>)>,
    settings: BTreeMap<String, Value>,
}

impl RunConfig {
    /// Configuration built from defaults only, for the given preset.
    pub fn with_preset(preset: &str) -> Result<Self> {
        parse_config(&format!("model.preset = \"{preset}\"\n"))
    }

    pub fn coefficients(&self) -> Coefficients {
        self.model.coefficients()
    }

    pub fn plan(&self) -> RunPlan {
        RunPlan {
            t_final: self.t_final,
            diag_interval: self.diag_interval,
            snapshot_interval: self.snapshot_interval,
            snapshot_times: self.snapshot_times.clone(),
            besov: self.besov,
            eps0: self.eps0,
            fixed_dt: self.fixed_dt,
        }
    }

    /// Explicitly set keys after overrides, in canonical order.
    pub fn settings(&self) -> &BTreeMap<String, Value> {
        &self.settings
    }

    /// Canonical `key = value` listing of the explicit settings.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.settings {
            out.push_str(&format!("{} = {}\n", quote_key(k), v));
        }
        out
    }

    /// SHA-256 of the canonical settings.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// One configuration per point of the Cartesian product of the sweep lists, with the
    /// assignments in key order. Keys are taken in sorted order and the last varies fastest.
    pub fn sweep_points(&self) -> Result<Vec<(Vec<(String, Value)>, RunConfig)>> {
        if self.sweep.is_empty() {
            return Err(Error::Config("sweep mode needs at least one sweep list".into()));
        }
        let mut points = vec![Vec::new()];
        for (key, values) in &self.sweep {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for v in values {
                    let mut q: Vec<(String, Value)> = p.clone();
                    q.push((key.clone(), v.clone()));
                    next.push(q);
                }
            }
            points = next;
        }
        let mut base = self.settings.clone();
        base.retain(|k, _| !k.starts_with("sweep."));
        base.insert("mode".into(), Value::String("simulate".into()));
        points
            .into_iter()
            .map(|assign| {
                let mut flat = base.clone();
                for (k, v) in &assign {
                    flat.insert(k.clone(), v.clone());
                }
                from_flat(flat, None).map(|c| (assign, c))
            })
            .collect()
    }
}

fn quote_key(k: &str) -> String {
    match k.strip_prefix("sweep.") {
        Some(rest) => format!("sweep.\"{rest}\""),
        None => k.to_string(),
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_with_overrides(text, &[], None)
}

/// Reads a configuration file; relative paths inside it resolve against its directory.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_with_overrides(&text, overrides, path.parent())
}

/// Parses `text`, applies `key value` overrides, then validates.
pub fn parse_with_overrides(
    text: &str,
    overrides: &[(String, String)],
    base_dir: Option<&Path>,
) -> Result<RunConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    let mut flat = BTreeMap::new();
    flatten("", &Value::Table(table), &mut flat);
    for (k, raw) in overrides {
        flat.insert(k.clone(), parse_override(raw));
    }
    from_flat(flat, base_dir)
}

/// Value of a command-line override: a TOML literal if it parses as one, else a string.
pub fn parse_override(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Table(t) if prefix != "sweep" && !prefix.starts_with("sweep.") => {
            for (k, child) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, out);
            }
        }
        Value::Table(t) if prefix == "sweep" => {
            for (k, child) in t {
                out.insert(format!("sweep.{k}"), child.clone());
            }
        }
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

struct Reader {
    map: BTreeMap<String, Value>,
    used: BTreeSet<String>,
    errors: Vec<String>,
}

impl Reader {
    fn get(&mut self, key: &str) -> Option<Value> {
        self.used.insert(key.to_string());
        self.map.get(key).cloned()
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn opt_f64(&mut self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Float(f) => Some(f),
            Value::Integer(i) => Some(i as f64),
            Value::String(s) if s == "inf" => Some(f64::INFINITY),
            other => {
                self.errors
                    .push(format!("{key}: expected a number, got {}", other.type_str()));
                None
            }
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        self.opt_f64(key).unwrap_or(default)
    }

    fn opt_usize(&mut self, key: &str) -> Option<usize> {
        match self.get(key)? {
            Value::Integer(i) if i >= 0 => Some(i as usize),
            other => {
                self.errors
                    .push(format!("{key}: expected a non-negative integer, got {other}"));
                None
            }
        }
    }

    fn opt_str(&mut self, key: &str) -> Option<String> {
        match self.get(key)? {
            Value::String(s) => Some(s),
            other => {
                self.errors
                    .push(format!("{key}: expected a string, got {}", other.type_str()));
                None
            }
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> bool {
        match self.get(key) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(other) => {
                self.errors
                    .push(format!("{key}: expected a boolean, got {}", other.type_str()));
                default
            }
        }
    }

    fn opt_f64_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.get(key)?;
        let Value::Array(items) = v else {
            self.errors.push(format!("{key}: expected a list of numbers"));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Value::Float(f) => out.push(f),
                Value::Integer(i) => out.push(i as f64),
                _ => {
                    self.errors.push(format!("{key}: expected a list of numbers"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn fixed_list<const K: usize>(&mut self, key: &str) -> Option<[f64; K]> {
        let v = self.opt_f64_list(key)?;
        match <[f64; K]>::try_from(v.as_slice()) {
            Ok(a) => Some(a),
            Err(_) => {
                self.errors
                    .push(format!("{key}: expected {K} numbers, got {}", v.len()));
                None
            }
        }
    }

    fn positive(&mut self, key: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.errors.push(format!("{key} must be positive, got {v}"));
        }
    }
}

fn from_flat(map: BTreeMap<String, Value>, base_dir: Option<&Path>) -> Result<RunConfig> {
    let mut r = Reader {
        map: map.clone(),
        used: BTreeSet::new(),
        errors: Vec::new(),
    };

    let mode = match r.opt_str("mode") {
        None => Mode::Simulate,
        Some(s) => Mode::parse(&s).unwrap_or_else(|| {
            r.errors.push(format!(
                "mode: unknown mode '{s}' (expected simulate, friedrichs, audit or sweep)"
            ));
            Mode::Simulate
        }),
    };

    let n = r.opt_usize("grid.n").unwrap_or(DEFAULT_N);
    let length = r.f64_or("grid.length", DEFAULT_LENGTH);
    let grid = match Grid::new(n, length) {
        Ok(g) => g,
        Err(e) => {
            r.errors.push(format!("grid: {e}"));
            Grid::new(DEFAULT_N, DEFAULT_LENGTH).expect("default grid")
        }
    };

    let model = read_model(&mut r);

    let frame = match r.opt_str("frame").as_deref() {
        None | Some("translated") => Frame::Translated,
        Some("original") => Frame::Original,
        Some(other) => {
            r.errors.push(format!(
                "frame: unknown frame '{other}' (expected translated or original)"
            ));
            Frame::Translated
        }
    };

    let initial = read_initial(&mut r, base_dir);

    let t_final = r.f64_or("t_final", 10.0);
    r.positive("t_final", t_final);

    let defaults = StepControl::default();
    let step = StepControl {
        cfl: r.f64_or("step.cfl", defaults.cfl),
        dt_min: r.f64_or("step.dt_min", defaults.dt_min),
        dt_max: r.f64_or("step.dt_max", defaults.dt_max),
        breaking_threshold: r.f64_or("step.breaking_threshold", defaults.breaking_threshold),
    };
    r.errors.extend(step.validate());
    let fixed_dt = r.opt_f64("step.fixed_dt");
    if let Some(h) = fixed_dt {
        r.positive("step.fixed_dt", h);
    }

    let diag_interval = r.f64_or("diagnostics.interval", 0.1);
    r.positive("diagnostics.interval", diag_interval);
    let eps0 = r.opt_f64("diagnostics.eps0");
    if let Some(e) = eps0 {
        r.positive("diagnostics.eps0", e);
    }

    let snapshot_times = r.opt_f64_list("snapshots.times").unwrap_or_default();
    if snapshot_times.iter().any(|&t| !(t >= 0.0 && t <= t_final)) {
        r.errors
            .push(format!("snapshots.times must lie in [0, t_final = {t_final}]"));
    }
    let snapshot_interval = r.opt_f64("snapshots.interval");
    if let Some(i) = snapshot_interval {
        r.positive("snapshots.interval", i);
    }

    let besov_on = r.bool_or("besov.enabled", false);
    let bp = BesovParams {
        s: r.f64_or("besov.s", 1.0),
        p: r.f64_or("besov.p", 2.0),
        r: r.f64_or("besov.r", 2.0),
    };
    if besov_on {
        r.errors.extend(bp.validate());
    }

    let flowmap_seeds = r.opt_usize("flowmap.seeds").unwrap_or(0);
    let flowmap_range = r.fixed_list::<2>("flowmap.range").map(|[a, b]| (a, b));
    if let Some((a, b)) = flowmap_range {
        if !(a < b) {
            r.errors
                .push(format!("flowmap.range must be increasing, got [{a}, {b}]"));
        }
    }

    let output_dir = PathBuf::from(r.opt_str("output_dir").unwrap_or_else(|| "runs/out".into()));

    let fd = FriedrichsConfig::default();
    let friedrichs = FriedrichsConfig {
        t_final: r.f64_or("friedrichs.t_final", fd.t_final),
        dt: r.opt_f64("friedrichs.dt"),
        j_max: r.opt_usize("friedrichs.j_max").unwrap_or(fd.j_max),
        s: r.f64_or("friedrichs.s", fd.s),
    };
    r.positive("friedrichs.t_final", friedrichs.t_final);
    if let Some(h) = friedrichs.dt {
        r.positive("friedrichs.dt", h);
    }

    let audit_a = r
        .opt_f64_list("audit.a_values")
        .unwrap_or_else(|| (0..=10).map(|k| 0.5 * k as f64).collect());

    let mut sweep = Vec::new();
    let sweep_keys: Vec<String> = map.keys().filter(|k| k.starts_with("sweep.")).cloned().collect();
    for k in sweep_keys {
        r.used.insert(k.clone());
        let target = k["sweep.".len()..].to_string();
        match map.get(&k) {
            Some(Value::Array(vals)) if !vals.is_empty() => {
                if !is_known_key(&target) || target.starts_with("sweep.") || target == "mode" {
                    r.errors.push(format!("{k}: cannot sweep over '{target}'"));
                } else {
                    sweep.push((target, vals.clone()));
                }
            }
            _ => r.errors.push(format!("{k}: expected a non-empty list")),
        }
    }
    if mode == Mode::Sweep && sweep.is_empty() {
        r.errors
            .push("mode = sweep requires at least one sweep.\"<key>\" list".into());
    }
    if mode != Mode::Sweep && !sweep.is_empty() {
        r.errors.push("sweep lists are only allowed with mode = sweep".into());
    }

    for k in map.keys() {
        if !r.used.contains(k) {
            r.errors.push(format!("unknown key '{k}'"));
        }
    }

    if !r.errors.is_empty() {
        return Err(Error::ConfigList(r.errors));
    }
    let settings = map;
    Ok(RunConfig {
        mode,
        grid,
        model,
        frame,
        initial,
        t_final,
        step,
        fixed_dt,
        diag_interval,
        eps0,
        snapshot_times,
        snapshot_interval,
        besov: besov_on.then_some(bp),
        flowmap_seeds,
        flowmap_range,
        output_dir,
        friedrichs,
        audit_a,
        sweep,
        settings,
    })
}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "grid.n",
    "grid.length",
    "model.preset",
    "model.sigma",
    "model.A",
    "model.omega",
    "model.a",
    "model.b",
    "frame",
    "initial.kind",
    "initial.amplitude",
    "initial.width",
    "initial.center",
    "initial.zeta_amplitude",
    "initial.wavenumber",
    "initial.target_E0",
    "initial.global_regime",
    "initial.file",
    "t_final",
    "step.cfl",
    "step.dt_min",
    "step.dt_max",
    "step.breaking_threshold",
    "step.fixed_dt",
    "diagnostics.interval",
    "diagnostics.eps0",
    "snapshots.times",
    "snapshots.interval",
    "besov.enabled",
    "besov.s",
    "besov.p",
    "besov.r",
    "flowmap.seeds",
    "flowmap.range",
    "output_dir",
    "friedrichs.t_final",
    "friedrichs.dt",
    "friedrichs.j_max",
    "friedrichs.s",
    "audit.a_values",
];

/// True for keys accepted by the parser (sweep lists aside).
pub fn is_known_key(key: &str) -> bool {
    KNOWN_KEYS.contains(&key)
}

fn read_model(r: &mut Reader) -> ModelConfig {
    let preset_name = r.opt_str("model.preset");
    let a = r.opt_f64("model.A");
    let omega = r.opt_f64("model.omega");
    let a_list = r.fixed_list::<6>("model.a");
    let b_list = r.fixed_list::<3>("model.b");
    let sigma_given = r.has("model.sigma");
    let sigma = r.f64_or("model.sigma", 1.0);
    if !sigma.is_finite() {
        r.errors.push(format!("model.sigma must be finite, got {sigma}"));
    }

    let forbid = |r: &mut Reader, present: bool, key: &str, preset: &str| {
        if present {
            r.errors
                .push(format!("{key} does not apply to preset '{preset}'"));
        }
    };
    let (has_a, has_o) = (r.has("model.A"), r.has("model.omega"));
    let (has_la, has_lb) = (r.has("model.a"), r.has("model.b"));

    let preset = match preset_name.as_deref() {
        None => {
            r.errors.push(
                "model.preset is required (vorticity, coriolis, generalized-2ch, sigma0 or custom)"
                    .into(),
            );
            Preset::Sigma0
        }
        Some("vorticity") => {
            forbid(r, has_o, "model.omega", "vorticity");
            forbid(r, has_la || has_lb, "model.a/model.b", "vorticity");
            match a {
                Some(a) => Preset::Vorticity { a },
                None => {
                    if !has_a {
                        r.errors
                            .push("model.A is required for preset 'vorticity'".into());
                    }
                    Preset::Vorticity { a: 0.0 }
                }
            }
        }
        Some("coriolis") => {
            forbid(r, has_a, "model.A", "coriolis");
            forbid(r, has_la || has_lb, "model.a/model.b", "coriolis");
            match omega {
                Some(omega) => Preset::Coriolis { omega },
                None => {
                    if !has_o {
                        r.errors
                            .push("model.omega is required for preset 'coriolis'".into());
                    }
                    Preset::Coriolis { omega: 0.0 }
                }
            }
        }
        Some("generalized-2ch") => {
            forbid(r, has_a, "model.A", "generalized-2ch");
            forbid(r, has_o, "model.omega", "generalized-2ch");
            forbid(r, has_la || has_lb, "model.a/model.b", "generalized-2ch");
            Preset::Generalized2ch
        }
        Some("sigma0") => {
            forbid(r, has_a, "model.A", "sigma0");
            forbid(r, has_o, "model.omega", "sigma0");
            forbid(r, has_la || has_lb, "model.a/model.b", "sigma0");
            forbid(r, sigma_given, "model.sigma", "sigma0");
            Preset::Sigma0
        }
        Some("custom") => {
            forbid(r, has_a, "model.A", "custom");
            forbid(r, has_o, "model.omega", "custom");
            if !has_la {
                r.errors.push("model.a is required for preset 'custom'".into());
            }
            if !has_lb {
                r.errors.push("model.b is required for preset 'custom'".into());
            }
            Preset::Custom {
                a: a_list.unwrap_or([0.0; 6]),
                b: b_list.unwrap_or([0.0; 3]),
            }
        }
        Some(other) => {
            r.errors.push(format!(
                "model.preset: unknown preset '{other}' (expected vorticity, coriolis, generalized-2ch, sigma0 or custom)"
            ));
            Preset::Sigma0
        }
    };
    let sigma = if preset == Preset::Sigma0 { 0.0 } else { sigma };
    ModelConfig { preset, sigma }
}

fn read_initial(r: &mut Reader, base_dir: Option<&Path>) -> InitialDataSpec {
    let kind = match r.opt_str("initial.kind") {
        None => InitialKind::Gaussian,
        Some(s) => InitialKind::parse(&s).unwrap_or_else(|| {
            r.errors.push(format!(
                "initial.kind: unknown kind '{s}' (expected gaussian, sech2, sine_packet, steep_front or file)"
            ));
            InitialKind::Gaussian
        }),
    };
    let zeta_default = if kind == InitialKind::SteepFront { -1.0 } else { 0.0 };
    let spec = InitialDataSpec {
        kind,
        amplitude: r.f64_or("initial.amplitude", 0.1),
        width: r.f64_or("initial.width", 1.0),
        center: r.opt_f64("initial.center"),
        zeta_amplitude: r.f64_or("initial.zeta_amplitude", zeta_default),
        wavenumber: r.f64_or("initial.wavenumber", 2.0),
        target_e0: r.opt_f64("initial.target_E0"),
        global_regime: r.bool_or("initial.global_regime", false),
        file: r.opt_str("initial.file").map(|f| match base_dir {
            Some(d) if Path::new(&f).is_relative() => d.join(f),
            _ => PathBuf::from(f),
        }),
    };
    r.positive("initial.width", spec.width);
    if !spec.amplitude.is_finite() {
        r.errors.push("initial.amplitude must be finite".into());
    }
    if let Some(e) = spec.target_e0 {
        if !(e >= 0.0 && e.is_finite()) {
            r.errors
                .push(format!("initial.target_E0 must be non-negative, got {e}"));
        }
    }
    match (&spec.file, kind) {
        (None, InitialKind::File) => r
            .errors
            .push("initial.file is required for initial.kind = 'file'".into()),
        (Some(f), InitialKind::File) if !f.exists() => r
            .errors
            .push(format!("initial.file '{}' does not exist", f.display())),
        (Some(_), k) if k != InitialKind::File => r
            .errors
            .push("initial.file only applies to initial.kind = 'file'".into()),
        _ => {}
    }
    spec
}
