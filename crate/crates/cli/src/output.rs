use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::{Format, OutputArgs};
use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Identifies a run: the canonical config echo, its SHA-256 and the seed.
/// Carries no timings, so equal configs give byte-identical outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub config_hash: String,
    pub seed: u64,
}

impl Manifest {
    pub fn new(command: &'static str, config: Value, seed: u64) -> Self {
        // serde_json maps are key-sorted, so this text is canonical.
        let text = serde_json::to_string(&json!({ "command": command, "config": &config, "seed": seed })).unwrap();
        let config_hash = sha256_hex(text.as_bytes());
        Self { tool: "stablegap", version: env!("CARGO_PKG_VERSION"), command, config, config_hash, seed }
    }

    fn csv_header(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# config: {}\n# config_hash: {}\n# seed: {}\n",
            self.tool,
            self.version,
            self.command,
            serde_json::to_string(&self.config).unwrap(),
            self.config_hash,
            self.seed
        )
    }
}

/// Rows plus a summary, rendered as CSV (manifest and summary as `#`
/// comment lines) or as one JSON document with the same field names.
pub fn render<R: Serialize>(manifest: &Manifest, rows: &[R], summary: &Value, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let doc = json!({ "manifest": manifest, "rows": rows, "summary": summary });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Computation(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut buf = manifest.csv_header().into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                for r in rows {
                    w.serialize(r).map_err(|e| CliError::Computation(e.to_string()))?;
                }
                w.flush().map_err(|e| CliError::Computation(e.to_string()))?;
            }
            if !summary.is_null() {
                buf.extend_from_slice(format!("# summary: {}\n", serde_json::to_string(summary).unwrap()).as_bytes());
            }
            String::from_utf8(buf).map_err(|e| CliError::Computation(e.to_string()))
        }
    }
}

fn timing_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".timing.json");
    path.with_file_name(name)
}

/// Writes the rendered artifact, and next to a file output a
/// `<file>.timing.json` run record holding the wall-clock time.
pub fn emit(out: &OutputArgs, manifest: &Manifest, text: &str, seconds: f64) -> Result<(), CliError> {
    match &out.output {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let timing = json!({
                "command": manifest.command,
                "config_hash": manifest.config_hash,
                "seed": manifest.seed,
                "version": manifest.version,
                "seconds": seconds,
            });
            let tp = timing_path(path);
            fs::write(&tp, serde_json::to_string_pretty(&timing).unwrap() + "\n")
                .map_err(|e| CliError::Io(format!("{}: {e}", tp.display())))?;
        }
        None => {
            io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
            eprintln!("# {} finished in {seconds:.3} s", manifest.command);
        }
    }
    Ok(())
}
