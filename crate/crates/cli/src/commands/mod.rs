mod corpus;
mod grpo;
mod reward;
mod run;
mod topology;

use std::io::{Read, Write};
use std::path::Path;

use layerflow_core::Difficulty;
use serde::Serialize;

use crate::jsonfmt;
use crate::CliError;

pub use corpus::{corpus_filter, corpus_stats};
pub use grpo::{grpo_adv, grpo_surrogate};
pub use reward::reward;
pub use run::run;
pub use topology::{score, validate};

fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Usage(format!("reading standard input: {e}")))?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))
    }
}

fn json_line<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = jsonfmt::to_vec(value).map_err(|e| CliError::Usage(format!("serializing output: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes one JSON line to standard output.
fn emit<T: Serialize + ?Sized>(value: &T) -> Result<(), CliError> {
    let bytes = json_line(value)?;
    let mut out = std::io::stdout().lock();
    out.write_all(&bytes)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Usage(format!("writing output: {e}")))
}

fn difficulty_arg(level: Option<u8>) -> Result<Option<Difficulty>, CliError> {
    level
        .map(|l| Difficulty::new(l).ok_or_else(|| CliError::Usage(format!("difficulty must be 1, 2 or 3, got {l}"))))
        .transpose()
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid {what}: {e}")))
}
