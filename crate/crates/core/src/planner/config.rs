use std::fmt::Write as _;

use thiserror::Error;

use super::Variant;

/// Version written into planner config files.
pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue { line: usize, key: String, reason: String },
    #[error("unsupported config format version {0}")]
    Version(u32),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Planner weights and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Weight of the waypoint heading deviation.
    pub w_f: f64,
    /// Weight of the deviation from the hysteresis heading.
    pub w_f2: f64,
    /// Weight of the speed deviation.
    pub w_g: f64,
    pub w_s: f64,
    pub w_i: f64,
    /// Scale the information cost of left-passing actions by `rule_factor`.
    pub rule_compliance: bool,
    pub rule_factor: f64,
    pub sensing_range: f64,
    /// Particles per obstacle.
    pub particles: usize,
    /// Rollout and safety look-ahead, s.
    pub horizon: f64,
    /// Look-ahead of the no-go test, s.
    pub nogo_horizon: f64,
    pub variant: Variant,
    /// Clustering thresholds: TCPA (s), DCPA (m), relative bearing (deg).
    pub tau_t: f64,
    pub tau_d: f64,
    pub tau_b: f64,
    /// `C = collision_factor * max(L_ego, L_obs)`.
    pub collision_factor: f64,
    /// `R = risky_factor * C`.
    pub risky_factor: f64,
    /// Allowance, m, subtracted from every predicted DCPA in the safety cost
    /// on top of the obstacle's reported uncertainty.
    pub safety_margin: f64,
    /// Winding dead-band, rad.
    pub dead_band: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            w_f: 1.0,
            w_f2: 0.5,
            w_g: 0.3,
            w_s: 2.0,
            w_i: 1.0,
            rule_compliance: false,
            rule_factor: 0.3,
            sensing_range: 100.0,
            particles: 1000,
            horizon: 60.0,
            nogo_horizon: 20.0,
            variant: Variant::MoaLstm,
            tau_t: 30.0,
            tau_d: 20.0,
            tau_b: 30.0,
            collision_factor: 2.0,
            risky_factor: 2.0,
            safety_margin: 0.5,
            dead_band: crate::topology::DEFAULT_DEAD_BAND,
        }
    }
}

impl PlannerConfig {
    pub fn with_variant(mut self, v: Variant) -> Self {
        self.variant = v;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let weights = [self.w_f, self.w_f2, self.w_g, self.w_s, self.w_i];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ConfigError::Invalid("weights must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.rule_factor) {
            return Err(ConfigError::Invalid("rule_factor must lie in [0, 1]".into()));
        }
        if self.particles == 0 {
            return Err(ConfigError::Invalid("particles must be at least 1".into()));
        }
        let positive = [
            ("sensing_range", self.sensing_range),
            ("horizon", self.horizon),
            ("nogo_horizon", self.nogo_horizon),
            ("collision_factor", self.collision_factor),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid(format!("{k} must be positive")));
            }
        }
        if !(self.risky_factor > 1.0) {
            return Err(ConfigError::Invalid("risky_factor must exceed 1".into()));
        }
        if [self.tau_t, self.tau_d, self.tau_b, self.dead_band, self.safety_margin]
            .iter()
            .any(|t| *t < 0.0)
        {
            return Err(ConfigError::Invalid("thresholds must be non-negative".into()));
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Missing keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            cfg.set(key.trim(), value.trim(), line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::BadValue {
            line,
            key: key.to_string(),
            reason,
        };
        let f = || value.parse::<f64>().map_err(|e| bad(e.to_string()));
        match key {
            "format_version" => {
                let v: u32 = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
                if v != CONFIG_FORMAT_VERSION {
                    return Err(ConfigError::Version(v));
                }
            }
            "w_f" => self.w_f = f()?,
            "w_f2" => self.w_f2 = f()?,
            "w_g" => self.w_g = f()?,
            "w_s" => self.w_s = f()?,
            "w_i" => self.w_i = f()?,
            "rule_compliance" => {
                self.rule_compliance = value
                    .parse()
                    .map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?
            }
            "rule_factor" => self.rule_factor = f()?,
            "sensing_range" => self.sensing_range = f()?,
            "particles" => self.particles = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "horizon" => self.horizon = f()?,
            "nogo_horizon" => self.nogo_horizon = f()?,
            "variant" => self.variant = value.parse().map_err(bad)?,
            "tau_t" => self.tau_t = f()?,
            "tau_d" => self.tau_d = f()?,
            "tau_b" => self.tau_b = f()?,
            "collision_factor" => self.collision_factor = f()?,
            "risky_factor" => self.risky_factor = f()?,
            "safety_margin" => self.safety_margin = f()?,
            "dead_band" => self.dead_band = f()?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Serializes every key; `parse(to_config_string())` round-trips.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "format_version = {CONFIG_FORMAT_VERSION}");
        let _ = writeln!(s, "variant = {}", self.variant);
        for (k, v) in [
            ("w_f", self.w_f),
            ("w_f2", self.w_f2),
            ("w_g", self.w_g),
            ("w_s", self.w_s),
            ("w_i", self.w_i),
        ] {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        let _ = writeln!(s, "rule_compliance = {}", self.rule_compliance);
        let _ = writeln!(s, "rule_factor = {:?}", self.rule_factor);
        let _ = writeln!(s, "sensing_range = {:?}", self.sensing_range);
        let _ = writeln!(s, "particles = {}", self.particles);
        for (k, v) in [
            ("horizon", self.horizon),
            ("nogo_horizon", self.nogo_horizon),
            ("tau_t", self.tau_t),
            ("tau_d", self.tau_d),
            ("tau_b", self.tau_b),
            ("collision_factor", self.collision_factor),
            ("risky_factor", self.risky_factor),
            ("safety_margin", self.safety_margin),
            ("dead_band", self.dead_band),
        ] {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        s
    }

    pub(crate) fn cluster_thresholds(&self) -> super::ClusterThresholds {
        super::ClusterThresholds {
            tcpa_s: self.tau_t,
            dcpa_m: self.tau_d,
            bearing_deg: self.tau_b,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = PlannerConfig::default();
        cfg.w_i = 0.75;
        cfg.rule_compliance = true;
        cfg.variant = Variant::VoPlus;
        assert_eq!(PlannerConfig::parse(&cfg.to_config_string()).unwrap(), cfg);
    }

    #[test]
    fn shipped_default_matches() {
        let text = include_str!("../../../../config/planner.default.conf");
        assert_eq!(PlannerConfig::parse(text).unwrap(), PlannerConfig::default());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            PlannerConfig::parse("w_f 1"),
            Err(ConfigError::Syntax { line: 1 })
        ));
        assert!(matches!(
            PlannerConfig::parse("# c\nfoo = 1"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            PlannerConfig::parse("w_s = x"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(PlannerConfig::parse("w_s = -1"), Err(ConfigError::Invalid(_))));
        assert!(matches!(
            PlannerConfig::parse("format_version = 9"),
            Err(ConfigError::Version(9))
        ));
    }
}
