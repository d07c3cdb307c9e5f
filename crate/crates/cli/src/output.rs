//! Tables and reports. Every artifact starts with its metadata: CSV files
//! carry `#` comment lines, JSON files a `meta` object.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub config: Value,
}

impl Meta {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: Option<u64>) -> CliResult<Self> {
        let config = serde_json::to_value(config)?;
        let digest = Sha256::digest(serde_json::to_vec(&config)?);
        Ok(Meta {
            command: command.to_string(),
            config_sha256: hex::encode(digest),
            seed,
            config,
        })
    }

    /// Writes the resolved config to stderr as TOML.
    pub fn echo(&self) {
        let body = toml::to_string(&self.config).unwrap_or_else(|_| self.config.to_string());
        eprintln!("# resolved config for `{}`\n{}", self.command, body.trim_end());
    }

    fn comment_lines(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# cpa-auction {}\n# config_sha256={} seed={}\n",
            self.command, self.config_sha256, seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.header
                            .iter()
                            .zip(r)
                            .map(|(h, c)| (h.to_string(), c.json()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_table(path: Option<&Path>, format: Format, meta: &Meta, table: &Table) -> CliResult<()> {
    let mut out = sink(path)?;
    match format {
        Format::Csv => {
            out.write_all(meta.comment_lines().as_bytes())?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&table.header)?;
            for r in &table.rows {
                w.write_record(r.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &json!({ "meta": meta, "rows": table.json_rows() }))?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: Option<&Path>, meta: &Meta, key: &str, data: &T) -> CliResult<()> {
    let mut out = sink(path)?;
    let mut doc = serde_json::Map::new();
    doc.insert("meta".into(), serde_json::to_value(meta)?);
    doc.insert(key.into(), serde_json::to_value(data)?);
    serde_json::to_writer_pretty(&mut out, &Value::Object(doc))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_the_config_only() {
        let a = Meta::new("gamma", &json!({"n": [2]}), Some(1)).unwrap();
        let b = Meta::new("gamma", &json!({"n": [2]}), Some(2)).unwrap();
        let c = Meta::new("gamma", &json!({"n": [3]}), Some(1)).unwrap();
        assert_eq!(a.config_sha256, b.config_sha256);
        assert_ne!(a.config_sha256, c.config_sha256);
        assert_eq!(a.config_sha256.len(), 64);
    }

    #[test]
    fn cells_render_shortest_round_trip() {
        assert_eq!(Cell::from(0.5).render(), "0.5");
        assert_eq!(Cell::from(1.0 / 3.0).render(), "0.3333333333333333");
        assert_eq!(Cell::from(3usize).render(), "3");
    }
}
