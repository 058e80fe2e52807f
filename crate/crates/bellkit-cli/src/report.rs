//! The single structured report document every subcommand emits: inputs
//! echo, verdicts, margins, standard errors, and the tool version, plus a
//! human-readable summary embedded in the same document. Serialization is
//! deterministic: no timestamps, no maps with unstable order.

use serde::Serialize;
use serde_json::Value;

#[derive(Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: Value,
    pub summary: String,
    pub results: Value,
}

impl Report {
    pub fn new(command: &'static str, inputs: Value, summary: String, results: Value) -> Self {
        Report {
            tool: "bellkit",
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs,
            summary,
            results,
        }
    }

    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Writes to `out` when given, otherwise prints the whole document.
    /// With a file destination the summary still goes to stdout.
    pub fn emit(&self, out: Option<&std::path::Path>) -> std::io::Result<()> {
        let rendered = self.render();
        match out {
            Some(path) => {
                std::fs::write(path, rendered)?;
                println!("{}", self.summary.trim_end());
                println!("report written to {}", path.display());
            }
            None => print!("{rendered}"),
        }
        Ok(())
    }
}

/// Serializes an exact rational as both a string and its nearest float.
pub fn rational_value(q: &bellkit::BigRational) -> Value {
    serde_json::json!({
        "exact": q.to_string(),
        "float": bellkit::Scalar::to_f64(q),
    })
}
