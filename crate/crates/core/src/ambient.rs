//! Colour chains, the coloured ambient tree and the upper semilinear sequence order.
//!
//! Ambient nodes are finite branching sequences `(c0, (c1,n1), ..., (ck,nk))` with strictly
//! increasing colours. Only explicit finite node sets are ever handled.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// A colour: a tuple of exact rationals compared lexicographically.
/// The single-coordinate case covers `OmegaStar` and `Rationals`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Colour(pub Vec<Rational64>);

impl Colour {
    pub fn int(n: i64) -> Colour {
        Colour(vec![Rational64::from_integer(n)])
    }

    pub fn ratio(p: i64, q: i64) -> Colour {
        Colour(vec![Rational64::new(p, q)])
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

fn fmt_rational(r: &Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_rational(s: &str) -> Option<Rational64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().ok()?;
            let q: i64 = q.trim().parse().ok()?;
            if q == 0 {
                return None;
            }
            Some(Rational64::new(p, q))
        }
        None => s.parse::<i64>().ok().map(Rational64::from_integer),
    }
}

impl fmt::Display for Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", fmt_rational(&self.0[0]))
        } else {
            let parts: Vec<String> = self.0.iter().map(fmt_rational).collect();
            write!(f, "[{}]", parts.join(";"))
        }
    }
}

impl FromStr for Colour {
    type Err = Error;
    fn from_str(s: &str) -> Result<Colour> {
        let s = s.trim();
        let bad = || Error::Parse {
            line: 0,
            msg: format!("bad colour {s:?}"),
        };
        if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let coords: Option<Vec<Rational64>> = inner.split(';').map(parse_rational).collect();
            let coords = coords.ok_or_else(bad)?;
            if coords.is_empty() {
                return Err(bad());
            }
            Ok(Colour(coords))
        } else {
            Ok(Colour(vec![parse_rational(s).ok_or_else(bad)?]))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    Z,
    Q,
}

/// A chain with no least element from which colours are drawn.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ColorChain {
    /// The negative integers.
    OmegaStar,
    Rationals,
    /// Lexicographic product of copies of Z and Q.
    LexProduct(Vec<Factor>),
}

impl ColorChain {
    pub fn name(&self) -> String {
        match self {
            ColorChain::OmegaStar => "OmegaStar".into(),
            ColorChain::Rationals => "Rationals".into(),
            ColorChain::LexProduct(w) => {
                let word: String = w
                    .iter()
                    .map(|f| if *f == Factor::Z { 'Z' } else { 'Q' })
                    .collect();
                format!("Lex:{word}")
            }
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            ColorChain::LexProduct(w) => w.len(),
            _ => 1,
        }
    }

    pub fn contains(&self, c: &Colour) -> bool {
        match self {
            ColorChain::OmegaStar => {
                c.arity() == 1 && c.0[0].is_integer() && c.0[0] < Rational64::zero()
            }
            ColorChain::Rationals => c.arity() == 1,
            ColorChain::LexProduct(w) => {
                c.arity() == w.len()
                    && w.iter()
                        .zip(&c.0)
                        .all(|(f, x)| *f == Factor::Q || x.is_integer())
            }
        }
    }

    pub fn check(&self, c: &Colour) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::ChainMismatch(c.to_string(), self.name()))
        }
    }

    /// Deterministic colour strictly below every member of `colours`: min − 1 on the final
    /// coordinate.
    pub fn color_below<'a>(&self, colours: impl IntoIterator<Item = &'a Colour>) -> Result<Colour> {
        let min = colours
            .into_iter()
            .min()
            .ok_or_else(|| Error::Other("color_below needs a non-empty colour set".into()))?;
        self.check(min)?;
        let mut out = min.clone();
        let last = out.0.len() - 1;
        out.0[last] -= Rational64::one();
        Ok(out)
    }

    /// A colour strictly between `lo` and `hi` when the chain has one; used by samplers.
    pub fn colour_between(&self, lo: &Colour, hi: &Colour) -> Option<Colour> {
        if lo >= hi {
            return None;
        }
        match self {
            ColorChain::OmegaStar => {
                let (a, b) = (lo.0[0], hi.0[0]);
                if b - a >= Rational64::from_integer(2) {
                    Some(Colour(vec![a + Rational64::one()]))
                } else {
                    None
                }
            }
            ColorChain::Rationals => Some(Colour(vec![
                (lo.0[0] + hi.0[0]) / Rational64::from_integer(2),
            ])),
            ColorChain::LexProduct(w) => {
                // Increase the last coordinate of lo; any suffix with larger last coordinate
                // stays below hi when the prefixes differ.
                let n = w.len();
                let mut c = lo.clone();
                let same_prefix = lo.0[..n - 1] == hi.0[..n - 1];
                if same_prefix {
                    let (a, b) = (lo.0[n - 1], hi.0[n - 1]);
                    match w[n - 1] {
                        Factor::Q => c.0[n - 1] = (a + b) / Rational64::from_integer(2),
                        Factor::Z => {
                            if b - a >= Rational64::from_integer(2) {
                                c.0[n - 1] = a + Rational64::one();
                            } else {
                                return None;
                            }
                        }
                    }
                } else {
                    c.0[n - 1] += Rational64::one();
                }
                Some(c)
            }
        }
    }

    /// A colour strictly above `lo`.
    pub fn colour_above(&self, lo: &Colour) -> Option<Colour> {
        match self {
            ColorChain::OmegaStar => {
                let a = lo.0[0] + Rational64::one();
                if a < Rational64::zero() {
                    Some(Colour(vec![a]))
                } else {
                    None
                }
            }
            _ => {
                let mut c = lo.clone();
                let last = c.0.len() - 1;
                c.0[last] += Rational64::one();
                Some(c)
            }
        }
    }
}

impl fmt::Display for ColorChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl FromStr for ColorChain {
    type Err = Error;
    fn from_str(s: &str) -> Result<ColorChain> {
        match s {
            "OmegaStar" => Ok(ColorChain::OmegaStar),
            "Rationals" => Ok(ColorChain::Rationals),
            _ => {
                let word = s.strip_prefix("Lex:").ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!("unknown chain {s:?}"),
                })?;
                let factors: Option<Vec<Factor>> = word
                    .chars()
                    .map(|c| match c {
                        'Z' => Some(Factor::Z),
                        'Q' => Some(Factor::Q),
                        _ => None,
                    })
                    .collect();
                match factors {
                    Some(f) if !f.is_empty() => Ok(ColorChain::LexProduct(f)),
                    _ => Err(Error::Parse {
                        line: 0,
                        msg: format!("bad lex word {word:?}"),
                    }),
                }
            }
        }
    }
}

/// Which cone above a point a node lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cone {
    /// Same branch sequence, larger final colour.
    Continuation,
    Branch(u64),
}

/// A point of the ambient tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AmbientNode {
    pub head: Colour,
    pub tail: Vec<(Colour, u64)>,
}

impl AmbientNode {
    pub fn root(c: Colour) -> AmbientNode {
        AmbientNode {
            head: c,
            tail: Vec::new(),
        }
    }

    pub fn new(head: Colour, tail: Vec<(Colour, u64)>) -> Result<AmbientNode> {
        let mut prev = &head;
        for (c, _) in &tail {
            if c.arity() != head.arity() {
                return Err(Error::ChainMismatch(
                    c.to_string(),
                    format!("arity {}", head.arity()),
                ));
            }
            if c <= prev {
                return Err(Error::ColourOrder {
                    current: prev.to_string(),
                    new: c.to_string(),
                });
            }
            prev = c;
        }
        Ok(AmbientNode { head, tail })
    }

    /// Colour of the node: its last colour.
    pub fn colour(&self) -> &Colour {
        self.tail.last().map(|(c, _)| c).unwrap_or(&self.head)
    }

    fn colour_at(&self, i: usize) -> &Colour {
        if i == 0 {
            &self.head
        } else {
            &self.tail[i - 1].0
        }
    }

    fn index_at(&self, i: usize) -> u64 {
        self.tail[i - 1].1
    }

    /// Number of entries (head counts as one).
    pub fn len(&self) -> usize {
        self.tail.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn colours(&self) -> impl Iterator<Item = &Colour> {
        std::iter::once(&self.head).chain(self.tail.iter().map(|(c, _)| c))
    }

    fn same_chain(&self, other: &AmbientNode) -> Result<()> {
        if self.head.arity() != other.head.arity() {
            return Err(Error::ChainMismatch(self.to_string(), other.to_string()));
        }
        Ok(())
    }

    /// Truncation keeping entries `0..=i`.
    fn prefix(&self, i: usize) -> AmbientNode {
        AmbientNode {
            head: self.head.clone(),
            tail: self.tail[..i].to_vec(),
        }
    }

    pub fn leq(&self, other: &AmbientNode) -> Result<bool> {
        self.same_chain(other)?;
        Ok(self.leq_unchecked(other))
    }

    pub(crate) fn leq_unchecked(&self, other: &AmbientNode) -> bool {
        let k = self.len() - 1;
        let l = other.len() - 1;
        if k > l {
            return false;
        }
        for i in 1..=k {
            if self.index_at(i) != other.index_at(i) {
                return false;
            }
        }
        for i in 0..k {
            if self.colour_at(i) != other.colour_at(i) {
                return false;
            }
        }
        self.colour_at(k) <= other.colour_at(k)
    }

    pub fn tree_lt(&self, other: &AmbientNode) -> bool {
        self != other && self.leq_unchecked(other)
    }

    pub fn meet(&self, other: &AmbientNode) -> Result<AmbientNode> {
        self.same_chain(other)?;
        Ok(self.meet_unchecked(other))
    }

    pub(crate) fn meet_unchecked(&self, other: &AmbientNode) -> AmbientNode {
        let n = self.len().min(other.len());
        for i in 0..n {
            if i >= 1 && self.index_at(i) != other.index_at(i) {
                return self.prefix(i - 1);
            }
            let (a, b) = (self.colour_at(i), other.colour_at(i));
            if a != b {
                let smaller = if a < b { self } else { other };
                return smaller.prefix(i);
            }
        }
        if self.len() <= other.len() {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Same branch sequence with the final colour replaced by `c`.
    pub fn raise(&self, c: Colour) -> Result<AmbientNode> {
        if &c <= self.colour() {
            return Err(Error::ColourOrder {
                current: self.colour().to_string(),
                new: c.to_string(),
            });
        }
        let mut out = self.clone();
        match out.tail.last_mut() {
            Some(last) => last.0 = c,
            None => out.head = c,
        }
        Ok(out)
    }

    /// Appends `(c, n)`.
    pub fn branch(&self, c: Colour, n: u64) -> Result<AmbientNode> {
        if &c <= self.colour() {
            return Err(Error::ColourOrder {
                current: self.colour().to_string(),
                new: c.to_string(),
            });
        }
        let mut out = self.clone();
        out.tail.push((c, n));
        Ok(out)
    }

    /// The unique node `<= self` with colour `c`.
    pub fn below(&self, c: &Colour) -> Result<AmbientNode> {
        if c > self.colour() {
            return Err(Error::ColourOrder {
                current: c.to_string(),
                new: self.colour().to_string(),
            });
        }
        let i = (0..self.len())
            .find(|&i| c <= self.colour_at(i))
            .unwrap_or(0);
        let mut out = self.prefix(i);
        match out.tail.last_mut() {
            Some(last) => last.0 = c.clone(),
            None => out.head = c.clone(),
        }
        Ok(out)
    }

    /// The cone at `p` containing `self`, if `self > p`.
    pub fn cone_at(&self, p: &AmbientNode) -> Option<Cone> {
        if !p.tree_lt(self) {
            return None;
        }
        let j = p.len() - 1;
        if self.colour_at(j) > p.colour_at(j) {
            Some(Cone::Continuation)
        } else {
            Some(Cone::Branch(self.index_at(j + 1)))
        }
    }

    /// Moves `self` (in some cone at `p`) into branch `fresh` at `q`, keeping everything that
    /// lies above the branching point. `q` must have the colour of `p`.
    pub fn transplant(&self, p: &AmbientNode, q: &AmbientNode, fresh: u64) -> Option<AmbientNode> {
        let cone = self.cone_at(p)?;
        let j = p.len() - 1;
        let mut out = q.clone();
        match cone {
            Cone::Continuation => {
                out.tail.push((self.colour_at(j).clone(), fresh));
                out.tail.extend(self.tail[j..].iter().cloned());
            }
            Cone::Branch(_) => {
                out.tail.push((self.tail[j].0.clone(), fresh));
                out.tail.extend(self.tail[j + 1..].iter().cloned());
            }
        }
        Some(out)
    }

    /// Branch indices used directly above `p` by members of `nodes`.
    pub fn max_branch_index<'a>(
        p: &AmbientNode,
        nodes: impl IntoIterator<Item = &'a AmbientNode>,
    ) -> Option<u64> {
        nodes
            .into_iter()
            .filter_map(|n| match n.cone_at(p) {
                Some(Cone::Branch(m)) => Some(m),
                _ => None,
            })
            .max()
    }

    pub fn check_chain(&self, chain: &ColorChain) -> Result<()> {
        for c in self.colours() {
            chain.check(c)?;
        }
        Ok(())
    }
}

/// Whether the pairwise meets of `nodes` all belong to `nodes`.
pub fn is_meet_closed<'a>(nodes: impl IntoIterator<Item = &'a AmbientNode>) -> bool {
    let set: std::collections::BTreeSet<&AmbientNode> = nodes.into_iter().collect();
    set.iter()
        .all(|a| set.iter().all(|b| set.contains(&a.meet_unchecked(b))))
}

impl fmt::Display for AmbientNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.tail.is_empty() {
            write!(f, " |")?;
            for (c, n) in &self.tail {
                write!(f, " ({c},{n})")?;
            }
        }
        Ok(())
    }
}

impl FromStr for AmbientNode {
    type Err = Error;
    fn from_str(s: &str) -> Result<AmbientNode> {
        let bad = |m: &str| Error::Parse {
            line: 0,
            msg: format!("bad node {s:?}: {m}"),
        };
        let (head, rest) = match s.split_once('|') {
            Some((h, r)) => (h, r),
            None => (s, ""),
        };
        let head: Colour = head.trim().parse()?;
        let mut tail = Vec::new();
        let mut rest = rest.trim();
        while !rest.is_empty() {
            let inner_end = rest.find(')').ok_or_else(|| bad("unclosed entry"))?;
            let entry = rest[..inner_end]
                .strip_prefix('(')
                .ok_or_else(|| bad("missing '('"))?;
            let (c, n) = entry.rsplit_once(',').ok_or_else(|| bad("missing ','"))?;
            let c: Colour = c.trim().parse()?;
            let n: u64 = n.trim().parse().map_err(|_| bad("bad branch index"))?;
            tail.push((c, n));
            rest = rest[inner_end + 1..].trim_start();
        }
        AmbientNode::new(head, tail)
    }
}

/// Reserved letters that never occur in an [`AdelekeNode`].
pub const RESERVED: [char; 2] = ['α', 'β'];

/// A sequence `q1 w1 q2 ... qk` with strictly decreasing rationals, ordered so that
/// extending downward makes a node smaller.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AdelekeNode {
    pub qs: Vec<Rational64>,
    pub letters: Vec<char>,
}

impl AdelekeNode {
    pub fn new(qs: Vec<Rational64>, letters: Vec<char>) -> Result<AdelekeNode> {
        if qs.is_empty() || letters.len() + 1 != qs.len() {
            return Err(Error::Other(
                "sequence must alternate rationals and letters".into(),
            ));
        }
        if qs.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Other("rationals must strictly decrease".into()));
        }
        if letters.iter().any(|l| RESERVED.contains(l)) {
            return Err(Error::Other("reserved letter".into()));
        }
        Ok(AdelekeNode { qs, letters })
    }

    pub fn leq(&self, other: &AdelekeNode) -> bool {
        let (k, l) = (self.qs.len(), other.qs.len());
        if l > k {
            return false;
        }
        for i in 0..l - 1 {
            if self.qs[i] != other.qs[i] || self.letters[i] != other.letters[i] {
                return false;
            }
        }
        self.qs[l - 1] <= other.qs[l - 1]
    }

    /// Least upper bound.
    pub fn meet_up(&self, other: &AdelekeNode) -> AdelekeNode {
        let n = self.qs.len().min(other.qs.len());
        let mut m = 1;
        while m < n
            && self.qs[m - 1] == other.qs[m - 1]
            && self.letters[m - 1] == other.letters[m - 1]
        {
            m += 1;
        }
        let mut qs = self.qs[..m].to_vec();
        qs[m - 1] = self.qs[m - 1].max(other.qs[m - 1]);
        AdelekeNode {
            qs,
            letters: self.letters[..m - 1].to_vec(),
        }
    }
}

impl fmt::Display for AdelekeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fmt_rational(&self.qs[0]))?;
        for (l, q) in self.letters.iter().zip(&self.qs[1..]) {
            write!(f, " {l} {}", fmt_rational(q))?;
        }
        Ok(())
    }
}
