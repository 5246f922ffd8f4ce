//! Plain key-value run configuration mirroring the CLI flags.
//!
//! A config file supplies defaults; explicit flags override it. Every
//! command records the values it actually ran with, so the effective
//! configuration can be written back out and re-used losslessly.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context};

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
    /// Key-value pairs the current run actually used, in resolution order.
    effective: Vec<(String, String)>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    bail!("{}:{}: expected 'key = value'", path.display(), lineno + 1);
                };
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self { values, effective: Vec::new() })
    }

    /// Flag value if given, else the config-file value, else the default.
    /// The resolved value is recorded for `--save-config`.
    pub fn resolve<T>(&mut self, key: &str, flag: Option<T>, default: T) -> anyhow::Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.values.get(key) {
                Some(raw) => raw
                    .parse::<T>()
                    .map_err(|e| anyhow::anyhow!("config key {key} = {raw:?}: {e}"))?,
                None => default,
            },
        };
        self.effective.push((key.to_string(), value.to_string()));
        Ok(value)
    }

    /// Like [`Config::resolve`] but the value stays optional.
    pub fn resolve_opt<T>(&mut self, key: &str, flag: Option<T>) -> anyhow::Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.values.get(key) {
                Some(raw) => Some(
                    raw.parse::<T>()
                        .map_err(|e| anyhow::anyhow!("config key {key} = {raw:?}: {e}"))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.effective.push((key.to_string(), v.to_string()));
        }
        Ok(value)
    }

    /// Writes the effective configuration of this run as `key = value`
    /// lines.
    pub fn save_effective(&self, path: &Path) -> anyhow::Result<()> {
        let mut out = String::new();
        for (k, v) in &self.effective {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        std::fs::write(path, out)
            .with_context(|| format!("writing config to {}", path.display()))?;
        Ok(())
    }
}
