//! Optional `key = value` config file. Flags always win; unknown keys are
//! rejected so a typo cannot silently fall back to a default.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> geomid::Result<Self> {
        let mut entries = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                geomid::Error::invalid(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(geomid::Error::invalid(format!(
                        "config line {} is not `key = value`: `{line}`",
                        lineno + 1
                    )));
                };
                entries.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Config { entries })
    }

    pub fn check_keys(&self, allowed: &[&str]) -> geomid::Result<()> {
        for key in self.entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(geomid::Error::invalid(format!("unknown config key `{key}`")));
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }
}

/// Fills `slot` from the config when the flag was not given on the command
/// line. A malformed value is an input error, the same as a bad flag.
pub fn fill<T: FromStr>(slot: &mut Option<T>, cfg: &Config, key: &str) -> geomid::Result<()> {
    if slot.is_none() {
        if let Some(raw) = cfg.get(key) {
            let v = raw.parse::<T>().map_err(|_| {
                geomid::Error::invalid(format!("config value for `{key}` is malformed: `{raw}`"))
            })?;
            *slot = Some(v);
        }
    }
    Ok(())
}
