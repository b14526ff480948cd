use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use polysparse::PencilBounds;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct Verification {
    pub eps: f64,
    pub attempts: u32,
    pub passed: bool,
    pub bounds: Option<PencilBounds>,
    /// Seed of the accepted (or last) attempt.
    pub seed: u64,
}

/// Summary printed by every subcommand. Everything except `timings_ms` is
/// determined by the inputs and the seed.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub parameters: Value,
    pub timings_ms: BTreeMap<String, f64>,
    pub nnz: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    pub warnings: Vec<String>,
    pub result: Value,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, parameters: Value) -> Self {
        Self {
            command: command.to_owned(),
            seed,
            parameters,
            timings_ms: BTreeMap::new(),
            nnz: BTreeMap::new(),
            verification: None,
            warnings: Vec::new(),
            result: Value::Null,
        }
    }

    /// Runs `f` and records its wall time under `phase`.
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        *self.timings_ms.entry(phase.to_owned()).or_insert(0.0) += ms;
        out
    }

    pub fn emit(&self, path: Option<&Path>) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        match path {
            Some(p) => std::fs::write(p, text + "\n"),
            None => {
                println!("{text}");
                Ok(())
            }
        }
    }
}
