//! Run-config parsing: a TOML file plus `key=value` overrides, validated
//! into a `TrainConfig`, with an echo of the effective config.

use std::path::Path;

use cyclegan_core::{Error, Result, TrainConfig};

pub fn parse_config(path: &Path, overrides: &[String]) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config(path.display().to_string(), e.to_string()))?;
    for entry in overrides {
        apply_override(&mut table, entry)?;
    }
    let cfg: TrainConfig = table
        .try_into()
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Apply one `dotted.key=value` override onto the parsed TOML tree. The
/// value is parsed as TOML; anything that does not parse is treated as a
/// bare string.
fn apply_override(table: &mut toml::Table, entry: &str) -> Result<()> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| Error::config(entry, "override must look like key=value"))?;
    let value = parse_value(raw);
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        cur = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(*part, "not a table"))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Write the fully resolved config next to the run outputs, so a run is
/// reproducible from its artifacts alone.
pub fn echo_effective_config(cfg: &TrainConfig, out_dir: &Path) -> Result<()> {
    let text = toml::to_string_pretty(cfg)
        .map_err(|e| Error::config("effective config", e.to_string()))?;
    std::fs::write(out_dir.join("effective-config.toml"), text)?;
    Ok(())
}
