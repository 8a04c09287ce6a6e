//! Scenario configuration: flat `key = value` text with `#` comments.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::NablaRicNorm;
use crate::state::Topology;

/// Initial profile family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Sphere,
    Dumbbell,
    CylinderCaps,
}

/// Time-weight function of the strong estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HKind {
    /// `h(t) = t`
    Linear,
    /// `h(t) = (T/pi) sin(pi t / T)`
    Sine,
}

/// Global or local point picking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PickMode {
    Global,
    Local,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($variant:path => $word:literal),+ $(,)?) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $word),+ })
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($word => Ok($variant),)+
                    other => Err(format!(
                        concat!("unknown ", $what, " '{}' (expected {})"),
                        other,
                        [$($word),+].join("|")
                    )),
                }
            }
        }
    };
}

keyword_enum!(Profile, "profile",
    Profile::Sphere => "sphere",
    Profile::Dumbbell => "dumbbell",
    Profile::CylinderCaps => "cylinder_caps",
);
keyword_enum!(HKind, "h kind", HKind::Linear => "linear", HKind::Sine => "sine");
keyword_enum!(PickMode, "pick mode", PickMode::Global => "global", PickMode::Local => "local");
keyword_enum!(NablaRicNorm, "norm", NablaRicNorm::Full => "full", NablaRicNorm::Paper => "paper");

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub topology: Topology,
    pub n: usize,
    /// Number of grid cells; the grid has `nodes + 1` points.
    pub nodes: usize,
    pub r0: f64,
    pub profile: Profile,
    pub neck_amp: f64,
    pub neck_width: f64,
    pub t_end: f64,
    pub sigma_cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub snapshot_every: usize,
    pub pinch_epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub delta: f64,
    pub m: f64,
    pub h_kind: HKind,
    pub pick_alpha: f64,
    pub pick_epsilon: f64,
    pub pick_mode: PickMode,
    pub pick_x0: f64,
    pub theta1: f64,
    /// Cutoff support radius; `None` picks a quarter of the initial length.
    pub cutoff_r: Option<f64>,
    /// Barrier constant `B`; `None` derives it from the measured `C1`.
    pub b_const: Option<f64>,
    pub nabla_norm: NablaRicNorm,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            topology: Topology::Sphere,
            n: 3,
            nodes: 400,
            r0: 1.0,
            profile: Profile::Sphere,
            neck_amp: 0.3,
            neck_width: 0.1,
            t_end: 0.2,
            sigma_cfl: 0.25,
            dt_min: 1e-14,
            dt_max: 1e-3,
            snapshot_every: 64,
            pinch_epsilon: 1e-2,
            alpha: 1.0,
            beta: 1.0,
            eta: 1.0,
            delta: 0.1,
            m: 2.0,
            h_kind: HKind::Linear,
            pick_alpha: 1.0,
            pick_epsilon: 0.5,
            pick_mode: PickMode::Global,
            pick_x0: 0.5,
            theta1: 0.5,
            cutoff_r: None,
            b_const: None,
            nabla_norm: NablaRicNorm::Full,
        }
    }
}

const KEYS: &[&str] = &[
    "name",
    "topology",
    "n",
    "nodes",
    "r0",
    "profile",
    "neck_amp",
    "neck_width",
    "t_end",
    "sigma_cfl",
    "dt_min",
    "dt_max",
    "snapshot_every",
    "pinch_epsilon",
    "alpha",
    "beta",
    "eta",
    "delta",
    "m",
    "h_kind",
    "pick_alpha",
    "pick_epsilon",
    "pick_mode",
    "pick_x0",
    "theta1",
    "cutoff_r",
    "b_const",
    "nabla_norm",
];

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::Parse { line, message: format!("bad value '{value}' for {key}: {e}") })
}

fn parse_auto(line: usize, key: &str, value: &str) -> Result<Option<f64>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(line, key, value).map(Some)
    }
}

/// Parse configuration text. Missing keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected 'key = value', got '{content}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(Error::Parse { line, message: format!("unknown key '{key}'") });
        };
        if seen.contains(&known) {
            return Err(Error::Parse { line, message: format!("duplicate key '{key}'") });
        }
        seen.push(known);
        match known {
            "name" => cfg.name = value.to_string(),
            "topology" => cfg.topology = parse_value(line, key, value)?,
            "n" => cfg.n = parse_value(line, key, value)?,
            "nodes" => cfg.nodes = parse_value(line, key, value)?,
            "r0" => cfg.r0 = parse_value(line, key, value)?,
            "profile" => cfg.profile = parse_value(line, key, value)?,
            "neck_amp" => cfg.neck_amp = parse_value(line, key, value)?,
            "neck_width" => cfg.neck_width = parse_value(line, key, value)?,
            "t_end" => cfg.t_end = parse_value(line, key, value)?,
            "sigma_cfl" => cfg.sigma_cfl = parse_value(line, key, value)?,
            "dt_min" => cfg.dt_min = parse_value(line, key, value)?,
            "dt_max" => cfg.dt_max = parse_value(line, key, value)?,
            "snapshot_every" => cfg.snapshot_every = parse_value(line, key, value)?,
            "pinch_epsilon" => cfg.pinch_epsilon = parse_value(line, key, value)?,
            "alpha" => cfg.alpha = parse_value(line, key, value)?,
            "beta" => cfg.beta = parse_value(line, key, value)?,
            "eta" => cfg.eta = parse_value(line, key, value)?,
            "delta" => cfg.delta = parse_value(line, key, value)?,
            "m" => cfg.m = parse_value(line, key, value)?,
            "h_kind" => cfg.h_kind = parse_value(line, key, value)?,
            "pick_alpha" => cfg.pick_alpha = parse_value(line, key, value)?,
            "pick_epsilon" => cfg.pick_epsilon = parse_value(line, key, value)?,
            "pick_mode" => cfg.pick_mode = parse_value(line, key, value)?,
            "pick_x0" => cfg.pick_x0 = parse_value(line, key, value)?,
            "theta1" => cfg.theta1 = parse_value(line, key, value)?,
            "cutoff_r" => cfg.cutoff_r = parse_auto(line, key, value)?,
            "b_const" => cfg.b_const = parse_auto(line, key, value)?,
            "nabla_norm" => cfg.nabla_norm = parse_value(line, key, value)?,
            _ => unreachable!("key list and match arms agree"),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn range(key: &str, message: impl Into<String>) -> Error {
    Error::Range { key: key.to_string(), message: message.into() }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(range(key, format!("must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    /// Range-check every field.
    pub fn validate(&self) -> Result<()> {
        let valid_name = !self.name.is_empty()
            && self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
        if !valid_name {
            return Err(range("name", "use letters, digits, '_', '-' or '.'"));
        }
        if self.n < 2 {
            return Err(range("n", format!("dimension must be at least 2, got {}", self.n)));
        }
        if self.nodes < 64 {
            return Err(range("nodes", format!("need at least 64 cells, got {}", self.nodes)));
        }
        positive("r0", self.r0)?;
        match (self.profile, self.topology) {
            (Profile::Sphere | Profile::Dumbbell, Topology::Sphere)
            | (Profile::CylinderCaps, Topology::Neck) => {}
            (p, t) => return Err(range("profile", format!("profile {p} does not fit topology {t}"))),
        }
        if !(self.neck_amp.is_finite() && self.neck_amp >= 0.0) {
            return Err(range("neck_amp", format!("must be non-negative, got {}", self.neck_amp)));
        }
        positive("neck_width", self.neck_width)?;
        positive("t_end", self.t_end)?;
        if !(self.sigma_cfl > 0.0 && self.sigma_cfl <= 0.5) {
            return Err(range("sigma_cfl", format!("must lie in (0, 0.5], got {}", self.sigma_cfl)));
        }
        positive("dt_min", self.dt_min)?;
        positive("dt_max", self.dt_max)?;
        if self.dt_min > self.dt_max {
            return Err(range("dt_min", "must not exceed dt_max"));
        }
        if self.snapshot_every == 0 {
            return Err(range("snapshot_every", "must be at least 1"));
        }
        if !(self.pinch_epsilon > 0.0 && self.pinch_epsilon < 1.0) {
            return Err(range("pinch_epsilon", format!("must lie in (0, 1), got {}", self.pinch_epsilon)));
        }
        for (key, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("eta", self.eta),
            ("delta", self.delta),
            ("pick_alpha", self.pick_alpha),
            ("pick_epsilon", self.pick_epsilon),
        ] {
            positive(key, v)?;
        }
        if !(self.m.is_finite() && self.m >= 1.0) {
            return Err(range("m", format!("must be at least 1, got {}", self.m)));
        }
        if !(0.0..=1.0).contains(&self.pick_x0) {
            return Err(range("pick_x0", format!("must lie in [0, 1], got {}", self.pick_x0)));
        }
        if !(self.theta1 > 0.0 && self.theta1 < 1.0) {
            return Err(range("theta1", format!("must lie in (0, 1), got {}", self.theta1)));
        }
        if let Some(r) = self.cutoff_r {
            positive("cutoff_r", r)?;
        }
        if let Some(b) = self.b_const {
            positive("b_const", b)?;
        }
        Ok(())
    }

    /// Render every field as configuration text that parses back to `self`.
    pub fn to_config_text(&self) -> String {
        let num = |x: f64| format!("{x:?}");
        let auto = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), num);
        let values: Vec<String> = vec![
            self.name.clone(),
            self.topology.to_string(),
            self.n.to_string(),
            self.nodes.to_string(),
            num(self.r0),
            self.profile.to_string(),
            num(self.neck_amp),
            num(self.neck_width),
            num(self.t_end),
            num(self.sigma_cfl),
            num(self.dt_min),
            num(self.dt_max),
            self.snapshot_every.to_string(),
            num(self.pinch_epsilon),
            num(self.alpha),
            num(self.beta),
            num(self.eta),
            num(self.delta),
            num(self.m),
            self.h_kind.to_string(),
            num(self.pick_alpha),
            num(self.pick_epsilon),
            self.pick_mode.to_string(),
            num(self.pick_x0),
            num(self.theta1),
            auto(self.cutoff_r),
            auto(self.b_const),
            self.nabla_norm.to_string(),
        ];
        KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_text_takes_defaults() {
        let cfg = parse_config("topology = sphere\nn = 3\nnodes = 400\nr0 = 1.0\nt_end = 0.2").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
    }

    #[test]
    fn errors_name_line_and_key() {
        match parse_config("n = 1") {
            Err(Error::Range { key, .. }) => assert_eq!(key, "n"),
            other => panic!("{other:?}"),
        }
        match parse_config("# comment\n\nnodez = 400") {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("nodez"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("n = three"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("n = 3\nn = 4"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_config("nodes"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn profile_must_match_topology() {
        let err = parse_config("profile = cylinder_caps").unwrap_err();
        assert!(matches!(err, Error::Range { ref key, .. } if key == "profile"));
        assert!(parse_config("topology = neck\nprofile = cylinder_caps").is_ok());
    }

    #[test]
    fn text_round_trips() {
        let cfg = ScenarioConfig {
            name: "neck-0.3".into(),
            topology: Topology::Sphere,
            profile: Profile::Dumbbell,
            neck_amp: 0.1 + 0.2,
            cutoff_r: Some(0.7),
            h_kind: HKind::Sine,
            pick_mode: PickMode::Local,
            nabla_norm: NablaRicNorm::Paper,
            ..ScenarioConfig::default()
        };
        assert_eq!(parse_config(&cfg.to_config_text()).unwrap(), cfg);
    }
}
