//! Result persistence: RFC-4180 CSV (one row per experiment cell) and a
//! single nested JSON object {config, results, timings}. Output bytes are
//! a pure function of (config, seed); wall-clock durations are therefore
//! kept out of the persisted files and the timings block carries
//! deterministic work counters instead.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::Result;

/// Write one serializable record per row with a header row.
pub fn write_csv_cells<T: Serialize>(path: &Path, cells: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut writer = csv::Writer::from_path(path).map_err(io_like)?;
    for cell in cells {
        writer.serialize(cell).map_err(io_like)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the {config, results, timings} JSON document.
pub fn write_json_document<C: Serialize, R: Serialize>(
    path: &Path,
    config: &C,
    results: &R,
    cells: usize,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let doc = json!({
        "config": config,
        "results": results,
        "timings": { "cells": cells, "unit": "experiment cells (deterministic work counter)" },
    });
    fs::write(path, serde_json::to_string_pretty(&doc)?.as_bytes() as &[u8])?;
    Ok(())
}

/// Write any serializable value as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)?.as_bytes() as &[u8])?;
    Ok(())
}

fn io_like(err: csv::Error) -> crate::Error {
    crate::Error::Numerical(format!("csv write failed: {err}"))
}
