//! Sectioned text files: a magic first line, then `[section]` headers each
//! followed by whitespace-separated rows. `#` starts a comment line.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) struct Section<'a> {
    pub name: &'a str,
    /// `(line number, content)` of each non-empty row.
    pub rows: Vec<(usize, &'a str)>,
}

pub(crate) struct Sectioned<'a> {
    pub path: PathBuf,
    pub sections: Vec<Section<'a>>,
}

impl<'a> Sectioned<'a> {
    pub fn parse(path: &Path, text: &'a str, magic: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == magic => {}
            _ => return Err(Error::parse(path, 1, format!("expected header {magic:?}"))),
        }
        let mut sections: Vec<Section<'a>> = Vec::new();
        for (i, line) in lines {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                sections.push(Section { name, rows: Vec::new() });
            } else {
                match sections.last_mut() {
                    Some(s) => s.rows.push((i + 1, t)),
                    None => return Err(Error::parse(path, i + 1, "data before the first section")),
                }
            }
        }
        Ok(Sectioned {
            path: path.to_path_buf(),
            sections,
        })
    }

    pub fn get(&self, name: &str) -> Option<&Section<'a>> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Section<'a>> {
        self.get(name)
            .ok_or_else(|| Error::Structure(format!("{}: missing section [{name}]", self.path.display())))
    }

    /// Values of `key value` rows in a section.
    pub fn key_usize(&self, section: &str, key: &str) -> Result<usize> {
        let s = self.require(section)?;
        for &(line, row) in &s.rows {
            let mut it = row.split_whitespace();
            if it.next() == Some(key) {
                return self.field(line, it.next(), key);
            }
        }
        Err(Error::Structure(format!("{}: [{section}] lacks {key}", self.path.display())))
    }

    pub fn field<V: FromStr>(&self, line: usize, tok: Option<&str>, what: &str) -> Result<V> {
        let tok = tok.ok_or_else(|| Error::parse(&self.path, line, format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| Error::parse(&self.path, line, format!("malformed {what} {tok:?}")))
    }

    /// All whitespace-separated values in a section, in order.
    pub fn values<V: FromStr>(&self, section: &str, expected: usize) -> Result<Vec<V>> {
        let s = self.require(section)?;
        let mut out = Vec::with_capacity(expected);
        for &(line, row) in &s.rows {
            for tok in row.split_whitespace() {
                out.push(self.field(line, Some(tok), section)?);
            }
        }
        if out.len() != expected {
            return Err(Error::Structure(format!(
                "{}: [{section}] holds {} values, expected {expected}",
                self.path.display(),
                out.len()
            )));
        }
        Ok(out)
    }
}

/// Append `[name]` and one row of space-separated values.
pub(crate) fn push_row<V: std::fmt::Display>(out: &mut String, values: &[V]) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        out.push_str(&v.to_string());
    }
    out.push('\n');
}
