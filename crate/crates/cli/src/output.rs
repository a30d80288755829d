//! Output plumbing: every artifact carries a run manifest.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::{io_err, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Option<String>,
    pub seed: Option<u64>,
    pub methods: Vec<String>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    /// Filled in when the JSON result is emitted; never written to CSV.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: Option<String>) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config,
            seed: None,
            methods: Vec::new(),
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: None,
        }
    }
}

pub struct Emitter {
    pub manifest: RunManifest,
    start: Instant,
}

impl Emitter {
    pub fn new(manifest: RunManifest, start: Instant) -> Self {
        Emitter { manifest, start }
    }

    fn write(&mut self, out: Option<&Path>, text: &str) -> CliResult<()> {
        match out {
            Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| io_err(Path::new("<stdout>"), e))
            }
        }
    }

    /// Result document `{"manifest": …, "result": …}`.
    pub fn json(&mut self, out: Option<&Path>, result: Value) -> CliResult<()> {
        if let Some(path) = out {
            self.manifest.outputs.push(path.display().to_string());
        }
        self.manifest.wall_time_seconds = Some(self.start.elapsed().as_secs_f64());
        let doc = json!({ "manifest": self.manifest, "result": result });
        let text = serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n";
        self.write(out, &text)
    }

    /// Plain text with the manifest on a leading comment line.
    pub fn text(&mut self, out: Option<&Path>, body: &str) -> CliResult<()> {
        if let Some(path) = out {
            self.manifest.outputs.push(path.display().to_string());
        }
        self.manifest.wall_time_seconds = Some(self.start.elapsed().as_secs_f64());
        let text = format!("# manifest: {}\n{body}", serde_json::to_string(&self.manifest).expect("manifest serializes"));
        self.write(out, &text)
    }

    /// CSV file whose first line is the manifest as a `#` comment. Wall time
    /// is left out so identical runs give identical files.
    pub fn csv(&mut self, path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        self.manifest.outputs.push(path.display().to_string());
        let mut stamp = self.manifest.clone();
        stamp.wall_time_seconds = None;
        let mut buf = format!("# manifest: {}\n", serde_json::to_string(&stamp).expect("manifest serializes")).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header).map_err(|e| io_err(path, e))?;
            for row in rows {
                w.write_record(row).map_err(|e| io_err(path, e))?;
            }
            w.flush().map_err(|e| io_err(path, e))?;
        }
        std::fs::write(path, buf).map_err(|e| io_err(path, e))
    }
}
