//! Output envelopes. Every JSON report and CSV table carries the artifact version, the
//! config hash, the resolved config and the warnings of the run.

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub code: &'static str,
    pub message: String,
}

impl Warning {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    artifact: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: String,
    config: &'a ExperimentConfig,
    warnings: &'a [Warning],
    result: &'a T,
}

pub fn json_report<T: Serialize>(command: &str, config: &ExperimentConfig, warnings: &[Warning], result: &T) -> Result<Vec<u8>> {
    let envelope = Envelope {
        artifact: ARTIFACT,
        version: VERSION,
        command,
        config_hash: config.hash(),
        config,
        warnings,
        result,
    };
    let mut out = serde_json::to_vec_pretty(&envelope).map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// `#` comment lines that precede every CSV table; `extra` adds `# key: value` lines.
pub fn csv_preamble(command: &str, config: &ExperimentConfig, warnings: &[Warning], extra: &[(&str, String)]) -> Vec<u8> {
    let mut s = format!(
        "# artifact: {ARTIFACT} {VERSION}\n# command: {command}\n# config_hash: {}\n# config: {}\n",
        config.hash(),
        config.canonical_json()
    );
    for (k, v) in extra {
        s.push_str(&format!("# {k}: {v}\n"));
    }
    for w in warnings {
        s.push_str(&format!("# warning[{}]: {}\n", w.code, w.message.replace('\n', " ")));
    }
    s.into_bytes()
}

/// Serializes `rows` as CSV after the preamble.
pub fn csv_table<R: Serialize>(mut preamble: Vec<u8>, rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    let body = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    preamble.extend(body);
    Ok(preamble)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preamble_lines_are_comments() {
        let cfg = ExperimentConfig::default();
        let bytes = csv_preamble("count", &cfg, &[Warning::new("x", "two\nlines")], &[("beta", "0.5".into())]);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.lines().all(|l| l.starts_with("# ")), "{text}");
        assert!(text.contains(&cfg.hash()));
        assert!(text.contains("# warning[x]: two lines"));
    }

    #[test]
    fn json_envelope_fields() {
        let cfg = ExperimentConfig::default();
        let bytes = json_report("oracle", &cfg, &[], &42).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["version"], VERSION);
        assert_eq!(v["config_hash"], cfg.hash());
        assert_eq!(v["result"], 42);
    }
}
