#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Output;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_bose-genfun")
}

pub struct Scratch {
    pub dir: tempfile::TempDir,
}

impl Scratch {
    pub fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    /// Runs `command` on `config` and writes the document to `out.csv`.
    pub fn run(&self, command: &str, config: &str, extra: &[&str]) -> (Output, Option<Doc>) {
        let cfg = self.write("config.json", config);
        let out = self.path("out.csv");
        let _ = std::fs::remove_file(&out);
        let output = std::process::Command::new(bin())
            .arg(command)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(extra)
            .output()
            .unwrap();
        let doc = std::fs::read_to_string(&out).ok().filter(|t| t.starts_with("# ")).map(|t| Doc::parse(&t));
        (output, doc)
    }
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

/// A parsed CSV result document.
#[derive(Debug, Default)]
pub struct Doc {
    pub meta: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub tables: BTreeMap<String, (Vec<String>, Vec<Vec<String>>)>,
}

impl Doc {
    pub fn parse(text: &str) -> Self {
        let mut doc = Doc::default();
        let mut current: Option<String> = None;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once(": ").unwrap();
                match k {
                    "warning" => doc.warnings.push(v.to_string()),
                    "table" => {
                        current = Some(v.to_string());
                        doc.tables.insert(v.to_string(), (Vec::new(), Vec::new()));
                    }
                    _ => {
                        doc.meta.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            let name = current.clone().expect("row before table");
            let fields: Vec<String> = csv::ReaderBuilder::new()
                .has_headers(false)
                .from_reader(line.as_bytes())
                .records()
                .next()
                .unwrap()
                .unwrap()
                .iter()
                .map(String::from)
                .collect();
            let t = doc.tables.get_mut(&name).unwrap();
            if t.0.is_empty() {
                t.0 = fields;
            } else {
                t.1.push(fields);
            }
        }
        doc
    }

    pub fn column(&self, table: &str, col: &str) -> Vec<f64> {
        let (cols, rows) = &self.tables[table];
        let i = cols.iter().position(|c| c == col).unwrap_or_else(|| panic!("no column {col} in {table}"));
        rows.iter().map(|r| parse_f64(&r[i])).collect()
    }

    pub fn rows(&self, table: &str) -> &Vec<Vec<String>> {
        &self.tables[table].1
    }

    /// Value from a two-column `quantity,value` table.
    pub fn quantity(&self, table: &str, name: &str) -> String {
        self.rows(table).iter().find(|r| r[0] == name).unwrap_or_else(|| panic!("no {name}"))[1].clone()
    }
}

pub fn parse_f64(s: &str) -> f64 {
    match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => s.parse().unwrap_or(f64::NAN),
    }
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}
