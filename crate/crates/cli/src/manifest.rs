//! The example corpus shipped with the CLI: programs plus the classical
//! bindings each needs to compile. The manifest is a TSV file so the same
//! rows serve the regression tests and copy-paste command lines.

use std::path::{Path, PathBuf};

use qmodc_core::compile::CompileOptions;
use qmodc_core::frontend::eval::Value;

use crate::values::parse_binding;

pub struct CorpusEntry {
    pub name: String,
    pub path: PathBuf,
    pub machine_precision: u32,
    pub consts: Vec<(String, Value)>,
    pub args: Vec<(String, Value)>,
    /// Golden OpenQASM file, when the entry is small enough to pin verbatim.
    pub golden: Option<PathBuf>,
    /// What the acceptance suite asserts about this entry.
    pub expect: String,
}

impl CorpusEntry {
    pub fn source(&self) -> String {
        std::fs::read_to_string(&self.path)
            .unwrap_or_else(|e| panic!("cannot read {}: {e}", self.path.display()))
    }

    pub fn options(&self) -> CompileOptions {
        let mut o = CompileOptions {
            machine_precision: self.machine_precision,
            ..Default::default()
        };
        for (k, v) in &self.consts {
            o.consts.insert(k.clone(), v.clone());
        }
        for (k, v) in &self.args {
            o.args.insert(k.clone(), v.clone());
        }
        o
    }
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Load `corpus/manifest.tsv`. Columns: name, file, machine_precision,
/// consts, args, golden, expect. Binding lists are `;`-separated
/// `NAME=VALUE` pairs; `-` marks an empty field.
pub fn load_corpus() -> Vec<CorpusEntry> {
    let dir = corpus_dir();
    let text = std::fs::read_to_string(dir.join("manifest.tsv")).expect("corpus manifest");
    let mut entries = Vec::new();
    for line in text.lines() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 7, "manifest row needs 7 columns: {line}");
        entries.push(CorpusEntry {
            name: cols[0].to_string(),
            path: dir.join(cols[1]),
            machine_precision: cols[2].parse().expect("machine precision"),
            consts: parse_bindings(cols[3]),
            args: parse_bindings(cols[4]),
            golden: (cols[5] != "-").then(|| dir.join(cols[5])),
            expect: cols[6].to_string(),
        });
    }
    entries
}

pub fn entry(name: &str) -> CorpusEntry {
    load_corpus()
        .into_iter()
        .find(|e| e.name == name)
        .unwrap_or_else(|| panic!("no corpus entry named '{name}'"))
}

fn parse_bindings(field: &str) -> Vec<(String, Value)> {
    if field == "-" {
        return vec![];
    }
    field
        .split(';')
        .map(|s| parse_binding(s).unwrap_or_else(|e| panic!("manifest binding '{s}': {e}")))
        .collect()
}
