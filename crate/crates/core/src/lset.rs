//! The ternary L-relation on the root domain, and its `LSET v1` text form.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

pub type Triple = (String, String, String);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LSet {
    pub domain: BTreeSet<String>,
    pub triples: BTreeSet<Triple>,
}

/// Vertex ids must survive the line formats: no whitespace and none of `-:>|(),;[]`.
pub fn valid_id(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || "-:>|(),;[]".contains(c))
}

impl LSet {
    pub fn new(domain: impl IntoIterator<Item = String>) -> LSet {
        LSet {
            domain: domain.into_iter().collect(),
            triples: BTreeSet::new(),
        }
    }

    /// Inserts `(a; b, c)` and its swap `(a; c, b)`.
    pub fn insert_pair(&mut self, a: &str, b: &str, c: &str) {
        self.triples.insert((a.into(), b.into(), c.into()));
        self.triples.insert((a.into(), c.into(), b.into()));
    }

    pub fn holds(&self, a: &str, b: &str, c: &str) -> bool {
        self.triples
            .contains(&(a.to_string(), b.to_string(), c.to_string()))
    }

    /// The element in first position for the unordered triple `{a, b, c}`, if any.
    pub fn middle<'a>(&self, a: &'a str, b: &'a str, c: &'a str) -> Option<&'a str> {
        if self.holds(a, b, c) {
            Some(a)
        } else if self.holds(b, a, c) {
            Some(b)
        } else if self.holds(c, a, b) {
            Some(c)
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Checks entries are in the domain and pairwise distinct, swap closure, and that each
    /// 3-subset has exactly one middle element.
    pub fn validate(&self) -> Result<()> {
        for (a, b, c) in &self.triples {
            for v in [a, b, c] {
                if !self.domain.contains(v) {
                    return Err(Error::UnknownVertex(v.clone()));
                }
            }
            if a == b || b == c || a == c {
                return Err(Error::NotDistinct(format!("L {a} {b} {c}")));
            }
            if !self.holds(a, c, b) {
                return Err(Error::Invalid(format!(
                    "L {a} {b} {c} present without L {a} {c} {b}"
                )));
            }
        }
        let vs: Vec<&String> = self.domain.iter().collect();
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                for k in j + 1..vs.len() {
                    let (a, b, c) = (vs[i], vs[j], vs[k]);
                    let count = [
                        self.holds(a, b, c),
                        self.holds(b, a, c),
                        self.holds(c, a, b),
                    ]
                    .iter()
                    .filter(|x| **x)
                    .count();
                    if count != 1 {
                        return Err(Error::Invalid(format!(
                            "{{{a},{b},{c}}} has {count} middle elements"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Image under a map on the domain; triples whose images are not distinct are dropped.
    pub fn map_domain(&self, f: impl Fn(&str) -> Option<String>) -> LSet {
        let mut out = LSet::new(self.domain.iter().filter_map(|v| f(v)));
        for (a, b, c) in &self.triples {
            if let (Some(x), Some(y), Some(z)) = (f(a), f(b), f(c)) {
                if x != y && y != z && x != z {
                    out.triples.insert((x, y, z));
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<LSet> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let err = |line: usize, msg: &str| Error::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        match lines.next() {
            Some((_, l)) if l.trim() == "LSET v1" => {}
            Some((i, _)) => return Err(err(i, "expected header `LSET v1`")),
            None => return Err(err(0, "empty input")),
        }
        let domain = match lines.next() {
            Some((_, l)) if l.split_whitespace().next() == Some("domain") => l
                .split_whitespace()
                .skip(1)
                .map(String::from)
                .collect::<Vec<_>>(),
            Some((i, _)) => return Err(err(i, "expected `domain` line")),
            None => return Err(err(1, "missing `domain` line")),
        };
        for v in &domain {
            if !valid_id(v) {
                return Err(err(1, &format!("bad vertex id {v:?}")));
            }
        }
        let mut out = LSet::new(domain);
        for (i, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            match parts.as_slice() {
                ["L", a, b, c] => {
                    out.triples
                        .insert((a.to_string(), b.to_string(), c.to_string()));
                }
                _ => return Err(err(i, "expected `L a b c`")),
            }
        }
        out.validate()?;
        Ok(out)
    }
}

impl fmt::Display for LSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LSET v1")?;
        write!(f, "domain")?;
        for v in &self.domain {
            write!(f, " {v}")?;
        }
        writeln!(f)?;
        for (a, b, c) in &self.triples {
            writeln!(f, "L {a} {b} {c}")?;
        }
        Ok(())
    }
}
