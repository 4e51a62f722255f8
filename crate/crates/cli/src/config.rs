//! Run configuration: every tunable default in one tree, with dotted-key
//! overrides such as `control.k_la=0.8`.

use std::path::Path;

use dtr_core::centerline::CenterlineConfig;
use dtr_core::control::{ControlParams, DtrConfig, VehicleParams};
use dtr_core::ftg::FtgParams;
use dtr_core::sim::EpisodeConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("override `{0}` is not of the form key=value")]
    Syntax(String),
    #[error("unknown config key `{key}`; valid keys here: {valid}")]
    UnknownKey { key: String, valid: String },
    #[error("config key `{0}` names a section, not a value")]
    Section(String),
    #[error("invalid value for `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read config file {path}: {reason}")]
    File { path: String, reason: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub centerline: CenterlineConfig,
    pub control: ControlParams,
    pub vehicle: VehicleParams,
    pub ftg: FtgParams,
    pub sim: EpisodeConfig,
}

impl Config {
    /// Reads a JSON config file; omitted keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let file_err = |reason: String| ConfigError::File { path: path.display().to_string(), reason };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        let config: Config = serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn dtr(&self) -> DtrConfig {
        DtrConfig { centerline: self.centerline, control: self.control, vehicle: self.vehicle }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.dtr().validate().map_err(ConfigError::Invalid)?;
        self.ftg.validate().map_err(ConfigError::Invalid)?;
        self.sim.validate().map_err(ConfigError::Invalid)
    }

    /// Applies `key=value` overrides in order. Values are parsed as JSON
    /// where possible and as bare strings otherwise.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut tree = serde_json::to_value(self).expect("config serializes");
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Syntax(item.to_string()))?;
            let key = key.trim();
            let slot = lookup(&mut tree, key)?;
            if slot.is_object() {
                return Err(ConfigError::Section(key.to_string()));
            }
            *slot = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
            serde_json::from_value::<Config>(tree.clone())
                .map_err(|e| ConfigError::Value { key: key.to_string(), reason: e.to_string() })?;
        }
        let config: Config = serde_json::from_value(tree).expect("checked per override");
        config.validate()?;
        Ok(config)
    }

    /// Every leaf key in dotted form.
    pub fn keys(&self) -> Vec<String> {
        fn walk(prefix: &str, v: &Value, out: &mut Vec<String>) {
            match v {
                Value::Object(map) => {
                    for (k, child) in map {
                        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                        walk(&key, child, out);
                    }
                }
                _ => out.push(prefix.to_string()),
            }
        }
        let mut out = Vec::new();
        walk("", &serde_json::to_value(self).expect("config serializes"), &mut out);
        out
    }
}

fn lookup<'a>(tree: &'a mut Value, key: &str) -> Result<&'a mut Value, ConfigError> {
    let mut node = tree;
    for part in key.split('.') {
        let Value::Object(map) = node else {
            return Err(ConfigError::UnknownKey { key: key.to_string(), valid: "(none, not a section)".into() });
        };
        if !map.contains_key(part) {
            let valid = map.keys().cloned().collect::<Vec<_>>().join(", ");
            return Err(ConfigError::UnknownKey { key: key.to_string(), valid });
        }
        node = map.get_mut(part).expect("checked");
    }
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_keys() {
        let c = Config::default()
            .with_overrides(&["control.k_la=0.8", "sim.lidar.noise_sigma=0.01", "centerline.require_two_classes=false"])
            .unwrap();
        assert_eq!(c.control.k_la, 0.8);
        assert_eq!(c.sim.lidar.noise_sigma, 0.01);
        assert!(!c.centerline.require_two_classes);
        assert_eq!(c.vehicle, VehicleParams::default());
    }

    #[test]
    fn integers_fill_float_fields() {
        let c = Config::default().with_overrides(&["vehicle.v_max=6"]).unwrap();
        assert_eq!(c.vehicle.v_max, 6.0);
    }

    #[test]
    fn table_override() {
        let c = Config::default().with_overrides(&["ftg.steer_speed_table=[[0.2,3.0],[0.4,1.0]]"]).unwrap();
        assert_eq!(c.ftg.steer_speed_table, vec![[0.2, 3.0], [0.4, 1.0]]);
    }

    #[test]
    fn rejects_bad_overrides() {
        let d = Config::default();
        assert!(matches!(d.with_overrides(&["control.k_lx=1"]), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(d.with_overrides(&["nope=1"]), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(d.with_overrides(&["control.k_la.x=1"]), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(d.with_overrides(&["control=1"]), Err(ConfigError::Section(_))));
        assert!(matches!(d.with_overrides(&["control.k_la"]), Err(ConfigError::Syntax(_))));
        assert!(matches!(d.with_overrides(&["control.k_la=fast"]), Err(ConfigError::Value { .. })));
        assert!(matches!(d.with_overrides(&["vehicle.mu=-1"]), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn unknown_key_lists_siblings() {
        let err = Config::default().with_overrides(&["control.k_lx=1"]).unwrap_err();
        assert!(err.to_string().contains("k_la"), "{err}");
    }

    #[test]
    fn keys_cover_every_section() {
        let keys = Config::default().keys();
        for k in ["centerline.sg_window", "control.n_hold", "vehicle.a_y_max", "ftg.bubble_radius", "sim.lidar.beams"] {
            assert!(keys.iter().any(|x| x == k), "{k}");
        }
        let tree = serde_json::to_value(Config::default()).unwrap();
        for k in &keys {
            let current = tree.pointer(&format!("/{}", k.replace('.', "/"))).unwrap();
            assert_eq!(Config::default().with_overrides(&[format!("{k}={current}")]), Ok(Config::default()), "{k}");
        }
    }
}
