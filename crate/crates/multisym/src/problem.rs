//! Declarative problem files: flat `[section]` headers over `key = value`
//! lines, `#` comments, expression-valued entries. The exact grammar is
//! documented in the repository README.

use std::collections::HashMap;

use crate::bundle::BundleShape;
use crate::charts::ChartedDomain;
use crate::error::{Error, Result};
use crate::expr::{parse_checked, Expr};

/// One parsed `key = value` entry with its 1-based source line.
#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// A parsed problem file: ordered sections of ordered entries.
#[derive(Debug, Clone, Default)]
pub struct ProblemFile {
    sections: Vec<(String, Vec<Entry>)>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ProblemFile::default();
        let mut offset = 0usize;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                offset += raw.len() + 1;
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(Error::Parse {
                    offset,
                    msg: format!("line {lineno}: section header missing `]`"),
                })?;
                out.sections.push((name.trim().to_string(), Vec::new()));
            } else if let Some((key, value)) = line.split_once('=') {
                let section = out.sections.last_mut().ok_or(Error::Parse {
                    offset,
                    msg: format!("line {lineno}: `key = value` before any [section]"),
                })?;
                section.1.push(Entry {
                    key: key.trim().to_string(),
                    value: value.trim().to_string(),
                    line: lineno,
                });
            } else {
                return Err(Error::Parse {
                    offset,
                    msg: format!("line {lineno}: expected `[section]` or `key = value`"),
                });
            }
            offset += raw.len() + 1;
        }
        Ok(out)
    }

    pub fn section(&self, name: &str) -> Option<&[Entry]> {
        self.sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, entries)| entries.as_slice())
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.section(name).is_some()
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.section(section)?
            .iter()
            .find(|e| e.key == key)
            .map(|e| e.value.as_str())
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| Error::Config(format!("missing `{key}` in [{section}]")))
    }

    fn parse_value<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("[{section}] {key} = {raw}: not a valid value"))
            }),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.parse_value(section, key)
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.parse_value(section, key)
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.parse_value(section, key)
    }

    /// Comma-separated floats, e.g. `box = 0, 1, 0, 1`.
    pub fn get_f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|part| {
                    part.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("[{section}] {key}: `{part}` is not a number"))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

/// The fibre-bundle coordinate names for a shape: x1..xn, q1..qN, pA_M
/// (A the field index, M the base index), plus bare `p` when `with_p`.
pub fn coordinate_names(shape: &BundleShape, with_p: bool) -> Vec<String> {
    let mut names = Vec::new();
    for mu in 0..shape.n {
        names.push(format!("x{}", mu + 1));
    }
    for a in 0..shape.fibre {
        names.push(format!("q{}", a + 1));
    }
    for a in 0..shape.fibre {
        for mu in 0..shape.n {
            names.push(format!("p{}_{}", a + 1, mu + 1));
        }
    }
    if with_p {
        names.push("p".to_string());
    }
    names
}

/// An expression compiled against a fixed coordinate list: evaluation takes
/// a coordinate vector instead of a name map.
pub struct CompiledExpr {
    pub expr: Expr,
    names: Vec<String>,
}

impl CompiledExpr {
    pub fn compile(text: &str, names: &[String]) -> Result<Self> {
        let expr = parse_checked(text, &|name| names.iter().any(|n| n == name))?;
        Ok(Self {
            expr,
            names: names.to_vec(),
        })
    }

    pub fn eval(&self, coords: &[f64]) -> Result<f64> {
        let env: HashMap<String, f64> = self
            .names
            .iter()
            .cloned()
            .zip(coords.iter().copied())
            .collect();
        self.expr.eval(&env)
    }
}

/// Extract the per-axis domain bounds: `[domain]` entries `x1 = lo, hi`.
pub fn domain_from(file: &ProblemFile, n: usize) -> Result<ChartedDomain<f64>> {
    let mut bounds = Vec::with_capacity(n);
    for mu in 0..n {
        let key = format!("x{}", mu + 1);
        let pair = file
            .get_f64_list("domain", &key)?
            .ok_or_else(|| Error::Config(format!("missing `{key}` in [domain]")))?;
        if pair.len() != 2 {
            return Err(Error::Config(format!("[domain] {key}: expected `lo, hi`")));
        }
        bounds.push((pair[0], pair[1]));
    }
    ChartedDomain::new(bounds)
}
