//! CSV emitters for figure-style outputs. Every file carries a comment
//! header with the column names and the full config echo plus its digest,
//! so any curve can be regenerated from its own header.

use crate::config::RunConfig;
use crate::{Error, Result};
use std::io::Write;
use std::path::Path;

/// Write a curve as CSV. `rows` must be nonempty and each row as wide as
/// `columns`.
pub fn emit_curve(
    path: impl AsRef<Path>,
    title: &str,
    columns: &[&str],
    rows: &[Vec<f64>],
    cfg: &RunConfig,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    write_curve(&mut out, title, columns, rows, cfg)?;
    std::fs::write(path, out)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Same as [`emit_curve`] but to any writer.
pub fn write_curve(
    mut out: impl Write,
    title: &str,
    columns: &[&str],
    rows: &[Vec<f64>],
    cfg: &RunConfig,
) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("curve needs at least one point"));
    }
    if rows.iter().any(|r| r.len() != columns.len()) {
        return Err(Error::invalid("curve row width does not match column count"));
    }
    writeln!(out, "# epsim {title}")?;
    writeln!(out, "# config_digest = {}", cfg.digest())?;
    for line in cfg.to_kv_text().lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        let rendered: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{}", rendered.join(","))?;
    }
    Ok(())
}
