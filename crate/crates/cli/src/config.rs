use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;
use thiserror::Error;

use frozencheck_core::patterns::LintConfig;

pub const DEFAULT_CONFIG_PATH: &str = "frozencheck.config.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    pub immutable_by_default: bool,
    pub allow_mutable: Vec<String>,
    pub format: Format,
}

impl Config {
    pub fn lint_config(&self) -> LintConfig {
        LintConfig {
            immutable_by_default: self.immutable_by_default,
            allow_mutable: self.allow_mutable.clone(),
        }
    }
}

/// On-disk shape. Every key is optional; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    immutable_by_default: Option<bool>,
    allow_mutable: Option<Vec<String>>,
    format: Option<Format>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub immutable_by_default: bool,
    pub allow_mutable: Vec<String>,
    pub format: Option<Format>,
}

/// Loads `path`, or `./frozencheck.config.json` when no path is given.
/// A missing default file yields defaults; a missing explicit file is an error.
pub fn load_config(path: Option<&Path>) -> Result<Config, ConfigError> {
    let (path, explicit) = match path {
        Some(p) => (p.to_path_buf(), true),
        None => (PathBuf::from(DEFAULT_CONFIG_PATH), false),
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if !explicit && e.kind() == std::io::ErrorKind::NotFound => return Ok(Config::default()),
        Err(source) => return Err(ConfigError::Read { path, source }),
    };
    parse_config(&text).map_err(|message| ConfigError::Invalid { path, message })
}

pub fn parse_config(text: &str) -> Result<Config, String> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    Ok(Config {
        immutable_by_default: file.immutable_by_default.unwrap_or(false),
        allow_mutable: file.allow_mutable.unwrap_or_default(),
        format: file.format.unwrap_or_default(),
    })
}

impl Config {
    pub fn with_overrides(mut self, o: &Overrides) -> Config {
        if o.immutable_by_default {
            self.immutable_by_default = true;
        }
        if !o.allow_mutable.is_empty() {
            self.allow_mutable = o.allow_mutable.clone();
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let c = parse_config(r#"{"immutable_by_default": true, "allow_mutable": ["Address"]}"#).unwrap();
        assert!(c.immutable_by_default);
        assert_eq!(c.allow_mutable, vec!["Address"]);
        assert_eq!(c.format, Format::Text);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config(r#"{"imutable_by_default": true}"#).unwrap_err();
        assert!(err.contains("imutable_by_default"), "{err}");
    }

    #[test]
    fn wrong_type_is_rejected() {
        assert!(parse_config(r#"{"allow_mutable": "Address"}"#).is_err());
    }

    #[test]
    fn empty_object_is_default() {
        assert_eq!(parse_config("{}").unwrap(), Config::default());
    }

    #[test]
    fn missing_explicit_file_is_error() {
        let err = load_config(Some(Path::new("/nonexistent/frozencheck.json"))).unwrap_err();
        assert!(matches!(err, ConfigError::Read { .. }));
    }

    #[test]
    fn flags_override_file() {
        let base = parse_config(r#"{"allow_mutable": ["A"], "format": "json"}"#).unwrap();
        let c = base.with_overrides(&Overrides {
            immutable_by_default: true,
            allow_mutable: vec!["B".into()],
            format: Some(Format::Text),
        });
        assert!(c.immutable_by_default);
        assert_eq!(c.allow_mutable, vec!["B"]);
        assert_eq!(c.format, Format::Text);
    }
}
