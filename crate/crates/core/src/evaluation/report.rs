//! Line-oriented TSV reports: a `# experiment <name>` line, then blocks
//! opened by `[name]`, each a tab-separated header row plus data rows and a
//! closing blank line, then a `[summary]` block of `key<TAB>value` lines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Block {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Block {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Values of column `name` parsed as numbers.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[k].parse().ok()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub name: String,
    pub blocks: Vec<Block>,
    pub summary: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn new(name: &str) -> Self {
        ExperimentReport {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn add_summary(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn to_tsv(&self) -> String {
        let mut s = format!("# experiment {}\n", self.name);
        for b in &self.blocks {
            writeln!(s, "[{}]", b.name).unwrap();
            writeln!(s, "{}", b.columns.join("\t")).unwrap();
            for r in &b.rows {
                writeln!(s, "{}", r.join("\t")).unwrap();
            }
            s.push('\n');
        }
        s.push_str("[summary]\n");
        for (k, v) in &self.summary {
            writeln!(s, "{k}\t{v}").unwrap();
        }
        s
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn parse_tsv(text: &str, origin: &Path) -> Result<Self> {
        let malformed = |line: usize, message: &str| Error::Malformed {
            path: origin.to_path_buf(),
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
        let name = match lines.next() {
            Some((_, l)) if l.starts_with("# experiment ") => l["# experiment ".len()..].to_string(),
            _ => return Err(malformed(1, "missing `# experiment` header")),
        };
        let mut report = ExperimentReport::new(&name);
        let mut current: Option<Block> = None;
        let mut in_summary = false;
        for (no, line) in lines {
            if line.is_empty() {
                report.blocks.extend(current.take());
                continue;
            }
            if let Some(block) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                report.blocks.extend(current.take());
                in_summary = block == "summary";
                if !in_summary {
                    current = Some(Block {
                        name: block.to_string(),
                        ..Default::default()
                    });
                }
                continue;
            }
            let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
            if in_summary {
                let [k, v]: [String; 2] = fields
                    .try_into()
                    .map_err(|_| malformed(no, "summary lines need `key<TAB>value`"))?;
                report.summary.push((k, v));
            } else if let Some(b) = current.as_mut() {
                if b.columns.is_empty() {
                    b.columns = fields;
                } else if fields.len() != b.columns.len() {
                    return Err(malformed(no, "row width differs from header"));
                } else {
                    b.rows.push(fields);
                }
            } else {
                return Err(malformed(no, "data outside a block"));
            }
        }
        report.blocks.extend(current);
        Ok(report)
    }
}

/// Shortest decimal that round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
