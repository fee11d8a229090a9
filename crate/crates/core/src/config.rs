//! Run configuration: one flat key = value namespace shared by config
//! files and command-line flags, with strict validation and a digest that
//! makes every emitted file reproducible from its own header.

use crate::{Error, Result};

/// Which pipeline a run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunKind {
    Bs,
    Mzi,
    EprbGenerate,
    EprbAnalyze,
    SmaxSweep,
    Histogram,
    #[default]
    Oracle,
    CalibrateD,
}

impl RunKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RunKind::Bs => "bs",
            RunKind::Mzi => "mzi",
            RunKind::EprbGenerate => "eprb-generate",
            RunKind::EprbAnalyze => "eprb-analyze",
            RunKind::SmaxSweep => "smax-sweep",
            RunKind::Histogram => "histogram",
            RunKind::Oracle => "oracle",
            RunKind::CalibrateD => "calibrate-d",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "bs" => RunKind::Bs,
            "mzi" => RunKind::Mzi,
            "eprb-generate" => RunKind::EprbGenerate,
            "eprb-analyze" => RunKind::EprbAnalyze,
            "smax-sweep" => RunKind::SmaxSweep,
            "histogram" => RunKind::Histogram,
            "oracle" => RunKind::Oracle,
            "calibrate-d" => RunKind::CalibrateD,
            other => return Err(Error::invalid(format!("unknown kind '{other}'"))),
        })
    }
}

/// All run parameters with their defaults. Angles are degrees here and in
/// files; conversion to radians happens at the computation boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: RunKind,
    pub seed: u64,
    // Beam splitter / interferometer.
    pub events: u64,
    pub events_per_point: u64,
    pub alpha: f64,
    pub p0: f64,
    pub psi0_deg: Option<f64>,
    pub psi0_per_event: bool,
    pub psi1_deg: f64,
    pub phi0_start_deg: f64,
    pub phi0_stop_deg: f64,
    pub phi0_step_deg: f64,
    pub phi1_deg: f64,
    // Pair experiment.
    pub settings_per_station: u32,
    pub angles1_deg: Option<Vec<f64>>,
    pub angles2_deg: Option<Vec<f64>>,
    pub source_mode: String,
    pub xi1_deg: f64,
    pub xi2_deg: f64,
    pub t0: f64,
    pub d: f64,
    // Analysis.
    pub tau: f64,
    pub window: f64,
    pub delta: f64,
    pub pairing: String,
    pub rule: String,
    pub auto_delta: bool,
    pub resolution: f64,
    pub windows: Option<Vec<f64>>,
    pub filter_x: i8,
    pub filter_y: i8,
    pub filter_m1: Option<u32>,
    pub filter_m2: Option<u32>,
    pub bin_width: f64,
    pub match_window: f64,
    pub d_values: Vec<f64>,
    pub grid_step_deg: f64,
    // Paths.
    pub station1_path: Option<String>,
    pub station2_path: Option<String>,
    pub out: Option<String>,
    pub out_prefix: Option<String>,
    /// Per-event route trace (single-point interferometer runs only).
    pub trace: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kind: RunKind::default(),
            seed: 12345,
            events: 1_000_000,
            events_per_point: 10_000,
            alpha: 0.99,
            p0: 0.5,
            psi0_deg: None,
            psi0_per_event: false,
            psi1_deg: 0.0,
            phi0_start_deg: 0.0,
            phi0_stop_deg: 360.0,
            phi0_step_deg: 10.0,
            phi1_deg: 0.0,
            settings_per_station: 20,
            angles1_deg: None,
            angles2_deg: None,
            source_mode: "singlet".to_string(),
            xi1_deg: 0.0,
            xi2_deg: 0.0,
            t0: 1.0,
            // Delay exponent; 2 is the value the calibrate-d sweep selects.
            d: 2.0,
            tau: 0.00025,
            window: 0.00025,
            delta: 0.0,
            pairing: "by-index".to_string(),
            rule: "discretized".to_string(),
            auto_delta: false,
            resolution: 0.0005,
            windows: None,
            filter_x: 1,
            filter_y: 1,
            filter_m1: None,
            filter_m2: None,
            bin_width: 0.01,
            match_window: f64::INFINITY,
            d_values: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            grid_step_deg: 5.0,
            station1_path: None,
            station2_path: None,
            out: None,
            out_prefix: None,
            trace: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("key '{key}': malformed value '{value}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_num(key, v))
        .collect::<Result<Vec<f64>>>()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::invalid(format!(
            "key '{key}': expected a boolean, got '{other}'"
        ))),
    }
}

impl RunConfig {
    /// Apply one `key = value` assignment. Unknown keys are rejected by
    /// name; range checks run in [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "kind" => self.kind = RunKind::parse(v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "events" => self.events = parse_num(key, v)?,
            "events_per_point" => self.events_per_point = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "p0" => self.p0 = parse_num(key, v)?,
            "psi0_deg" => self.psi0_deg = Some(parse_num(key, v)?),
            "psi0_per_event" => self.psi0_per_event = parse_bool(key, v)?,
            "psi1_deg" => self.psi1_deg = parse_num(key, v)?,
            "phi0_start_deg" => self.phi0_start_deg = parse_num(key, v)?,
            "phi0_stop_deg" => self.phi0_stop_deg = parse_num(key, v)?,
            "phi0_step_deg" => self.phi0_step_deg = parse_num(key, v)?,
            "phi1_deg" => self.phi1_deg = parse_num(key, v)?,
            "settings_per_station" => self.settings_per_station = parse_num(key, v)?,
            "angles1_deg" => self.angles1_deg = Some(parse_list(key, v)?),
            "angles2_deg" => self.angles2_deg = Some(parse_list(key, v)?),
            "source_mode" => match v {
                "singlet" | "fixed" => self.source_mode = v.to_string(),
                other => {
                    return Err(Error::invalid(format!(
                        "key 'source_mode': expected singlet or fixed, got '{other}'"
                    )))
                }
            },
            "xi1_deg" => self.xi1_deg = parse_num(key, v)?,
            "xi2_deg" => self.xi2_deg = parse_num(key, v)?,
            "t0" => self.t0 = parse_num(key, v)?,
            "d" => self.d = parse_num(key, v)?,
            "tau" => self.tau = parse_num(key, v)?,
            "window" | "W" => self.window = parse_num(key, v)?,
            "delta" => self.delta = parse_num(key, v)?,
            "pairing" => match v {
                "by-index" | "by-time-matching" => self.pairing = v.to_string(),
                other => {
                    return Err(Error::invalid(format!(
                        "key 'pairing': expected by-index or by-time-matching, got '{other}'"
                    )))
                }
            },
            "rule" => match v {
                "discretized" | "continuous" => self.rule = v.to_string(),
                other => {
                    return Err(Error::invalid(format!(
                        "key 'rule': expected discretized or continuous, got '{other}'"
                    )))
                }
            },
            "auto_delta" => self.auto_delta = parse_bool(key, v)?,
            "resolution" => self.resolution = parse_num(key, v)?,
            "windows" => self.windows = Some(parse_list(key, v)?),
            "filter_x" => self.filter_x = parse_num(key, v)?,
            "filter_y" => self.filter_y = parse_num(key, v)?,
            "filter_m1" => self.filter_m1 = Some(parse_num(key, v)?),
            "filter_m2" => self.filter_m2 = Some(parse_num(key, v)?),
            "bin_width" => self.bin_width = parse_num(key, v)?,
            "match_window" => {
                self.match_window = if v == "inf" {
                    f64::INFINITY
                } else {
                    parse_num(key, v)?
                }
            }
            "d_values" => self.d_values = parse_list(key, v)?,
            "grid_step_deg" => self.grid_step_deg = parse_num(key, v)?,
            "station1_path" => self.station1_path = Some(v.to_string()),
            "station2_path" => self.station2_path = Some(v.to_string()),
            "out" => self.out = Some(v.to_string()),
            "out_prefix" => self.out_prefix = Some(v.to_string()),
            "trace" => self.trace = Some(v.to_string()),
            other => return Err(Error::invalid(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parse a config text: one `key = value` per line, `#` comments.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(idx + 1, format!("expected key = value, got '{line}'"))
            })?;
            cfg.set(key.trim(), value)
                .map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range and cross-field checks, with the offending key in the message.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "key 'alpha': must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.p0) {
            return Err(Error::invalid(format!(
                "key 'p0': must lie in [0, 1], got {}",
                self.p0
            )));
        }
        if self.events == 0 {
            return Err(Error::invalid("key 'events': must be at least 1"));
        }
        if self.events_per_point == 0 {
            return Err(Error::invalid("key 'events_per_point': must be at least 1"));
        }
        if self.settings_per_station == 0 {
            return Err(Error::invalid(
                "key 'settings_per_station': must be at least 1",
            ));
        }
        if !(self.t0 > 0.0) {
            return Err(Error::invalid(format!(
                "key 't0': must be positive, got {}",
                self.t0
            )));
        }
        if !(self.d >= 0.0) {
            return Err(Error::invalid(format!(
                "key 'd': must be non-negative, got {}",
                self.d
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::invalid(format!(
                "key 'tau': must be positive, got {}",
                self.tau
            )));
        }
        if !(self.window >= self.tau) {
            return Err(Error::invalid(format!(
                "key 'window': must be at least tau ({} < {})",
                self.window, self.tau
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("key 'delta': must be finite"));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::invalid("key 'resolution': must be positive"));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::invalid("key 'bin_width': must be positive"));
        }
        if self.filter_x.abs() != 1 || self.filter_y.abs() != 1 {
            return Err(Error::invalid(
                "keys 'filter_x'/'filter_y': must be +1 or -1",
            ));
        }
        if !(self.phi0_step_deg > 0.0) {
            return Err(Error::invalid("key 'phi0_step_deg': must be positive"));
        }
        if !(self.grid_step_deg > 0.0) {
            return Err(Error::invalid("key 'grid_step_deg': must be positive"));
        }
        if let Some(angles) = &self.angles1_deg {
            if angles.is_empty() || angles.iter().any(|a| !a.is_finite()) {
                return Err(Error::invalid("key 'angles1_deg': need finite angles"));
            }
        }
        if let Some(angles) = &self.angles2_deg {
            if angles.is_empty() || angles.iter().any(|a| !a.is_finite()) {
                return Err(Error::invalid("key 'angles2_deg': need finite angles"));
            }
        }
        if self.d_values.is_empty() || self.d_values.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::invalid(
                "key 'd_values': need a nonempty list of non-negative exponents",
            ));
        }
        Ok(())
    }

    /// Canonical text rendering, used for digests and file headers.
    pub fn to_kv_text(&self) -> String {
        fn fmt_list(v: &[f64]) -> String {
            v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        }
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("kind", self.kind.as_str().to_string());
        push("seed", self.seed.to_string());
        push("events", self.events.to_string());
        push("events_per_point", self.events_per_point.to_string());
        push("alpha", self.alpha.to_string());
        push("p0", self.p0.to_string());
        if let Some(psi0) = self.psi0_deg {
            push("psi0_deg", psi0.to_string());
        }
        push("psi0_per_event", self.psi0_per_event.to_string());
        push("psi1_deg", self.psi1_deg.to_string());
        push("phi0_start_deg", self.phi0_start_deg.to_string());
        push("phi0_stop_deg", self.phi0_stop_deg.to_string());
        push("phi0_step_deg", self.phi0_step_deg.to_string());
        push("phi1_deg", self.phi1_deg.to_string());
        push("settings_per_station", self.settings_per_station.to_string());
        if let Some(a) = &self.angles1_deg {
            push("angles1_deg", fmt_list(a));
        }
        if let Some(a) = &self.angles2_deg {
            push("angles2_deg", fmt_list(a));
        }
        push("source_mode", self.source_mode.clone());
        push("xi1_deg", self.xi1_deg.to_string());
        push("xi2_deg", self.xi2_deg.to_string());
        push("t0", self.t0.to_string());
        push("d", self.d.to_string());
        push("tau", self.tau.to_string());
        push("window", self.window.to_string());
        push("delta", self.delta.to_string());
        push("pairing", self.pairing.clone());
        push("rule", self.rule.clone());
        push("auto_delta", self.auto_delta.to_string());
        push("resolution", self.resolution.to_string());
        if let Some(w) = &self.windows {
            push("windows", fmt_list(w));
        }
        push("filter_x", self.filter_x.to_string());
        push("filter_y", self.filter_y.to_string());
        if let Some(m) = self.filter_m1 {
            push("filter_m1", m.to_string());
        }
        if let Some(m) = self.filter_m2 {
            push("filter_m2", m.to_string());
        }
        push("bin_width", self.bin_width.to_string());
        push("match_window", self.match_window.to_string());
        push("d_values", fmt_list(&self.d_values));
        push("grid_step_deg", self.grid_step_deg.to_string());
        if let Some(p) = &self.station1_path {
            push("station1_path", p.clone());
        }
        if let Some(p) = &self.station2_path {
            push("station2_path", p.clone());
        }
        if let Some(p) = &self.out {
            push("out", p.clone());
        }
        if let Some(p) = &self.out_prefix {
            push("out_prefix", p.clone());
        }
        if let Some(p) = &self.trace {
            push("trace", p.clone());
        }
        out
    }

    /// FNV-1a digest of the canonical rendering, as 16 hex digits.
    pub fn digest(&self) -> String {
        let mut hash: u64 = 0xcbf29ce484222325;
        for b in self.to_kv_text().bytes() {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{hash:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = RunConfig::from_kv_text("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.alpha, 0.99);
        assert_eq!(cfg.t0, 1.0);
        assert_eq!(cfg.tau, 0.00025);
        assert_eq!(cfg.window, 0.00025);
    }

    #[test]
    fn window_must_cover_tau() {
        assert!(RunConfig::from_kv_text("W = 0.00025\ntau = 0.00025").is_ok());
        let err = RunConfig::from_kv_text("tau = 0.5\nwindow = 0.1").unwrap_err();
        assert!(err.to_string().contains("window"));
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::from_kv_text("taw = 0.1").unwrap_err();
        assert!(err.to_string().contains("taw"), "{err}");
    }

    #[test]
    fn out_of_range_values_are_named() {
        let err = RunConfig::from_kv_text("alpha = 1.5").unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
        let err = RunConfig::from_kv_text("p0 = -0.2").unwrap_err();
        assert!(err.to_string().contains("p0"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let cfg = RunConfig::from_kv_text("# a comment\n\nseed = 9\nkind = mzi\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.kind, RunKind::Mzi);
    }

    #[test]
    fn digest_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.digest(), b.digest());
        b.set("seed", "777").unwrap();
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn round_trips_through_rendering() {
        let mut cfg = RunConfig::default();
        cfg.set("kind", "eprb-generate").unwrap();
        cfg.set("angles1_deg", "0,45").unwrap();
        cfg.set("angles2_deg", "22.5,67.5").unwrap();
        cfg.set("windows", "0.00025,0.001,0.01").unwrap();
        cfg.set("out_prefix", "run1").unwrap();
        let back = RunConfig::from_kv_text(&cfg.to_kv_text()).unwrap();
        assert_eq!(back, cfg);
    }
}
