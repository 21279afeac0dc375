use std::path::Path;

use serde::Serialize;

use crate::error::CliResult;
use crate::format::{emit, json};

pub mod distill;
pub mod monotone;
pub mod rate_scan;
pub mod sample_haar;
pub mod selftest;

/// Where the primary output of a command goes.
#[derive(Clone, Copy, Debug)]
pub struct Output<'a> {
    pub json: bool,
    pub path: Option<&'a Path>,
}

impl Output<'_> {
    pub fn write_json<T: Serialize>(&self, value: &T) -> CliResult<()> {
        emit(self.path, &json(value)?)
    }

    pub fn write_text(&self, text: &str) -> CliResult<()> {
        emit(self.path, text)
    }

    /// JSON when `--json` is set, otherwise the text rendering.
    pub fn write<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) -> CliResult<()> {
        if self.json {
            self.write_json(value)
        } else {
            self.write_text(&text())
        }
    }
}

/// `key: value` lines.
pub(crate) fn key_values(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
}
