//! Finite B-sets of positive type, stored as free trees.
//!
//! Betweenness is always derived: `x` is between `y` and `z` when `x` lies on the unique `y`-`z`
//! path. A one-vertex B-set carries the empty relation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Prefix for vertices minted by the library. User ids should avoid it.
pub const FRESH_PREFIX: &str = "•";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BSet {
    adj: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Centroid {
    /// The three points are incomparable and meet here.
    Vertex(String),
    /// One of the three lies between the other two.
    Linear(String),
}

impl BSet {
    pub fn new<V, E>(vertices: V, edges: E) -> Result<BSet>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        E: IntoIterator<Item = (String, String)>,
    {
        let mut adj: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for v in vertices {
            adj.insert(v.into(), BTreeSet::new());
        }
        if adj.is_empty() {
            return Err(Error::NotATree("no vertices".into()));
        }
        let mut count = 0usize;
        for (a, b) in edges {
            if a == b {
                return Err(Error::NotATree(format!("loop at {a}")));
            }
            if !adj.contains_key(&b) {
                return Err(Error::UnknownVertex(b));
            }
            match adj.get_mut(&a) {
                Some(s) => {
                    if !s.insert(b.clone()) {
                        return Err(Error::NotATree(format!("repeated edge {a}-{b}")));
                    }
                }
                None => return Err(Error::UnknownVertex(a)),
            }
            adj.get_mut(&b).unwrap().insert(a);
            count += 1;
        }
        let b = BSet { adj };
        if count + 1 != b.len() || b.component(b.first(), None).len() != b.len() {
            return Err(Error::NotATree(format!(
                "{} vertices, {} edges, not connected and acyclic",
                b.len(),
                count
            )));
        }
        Ok(b)
    }

    pub fn singleton(v: impl Into<String>) -> BSet {
        let mut adj = BTreeMap::new();
        adj.insert(v.into(), BTreeSet::new());
        BSet { adj }
    }

    pub fn path<S: AsRef<str>>(vs: &[S]) -> Result<BSet> {
        let edges = vs
            .windows(2)
            .map(|w| (w[0].as_ref().to_string(), w[1].as_ref().to_string()));
        BSet::new(
            vs.iter().map(|v| v.as_ref().to_string()),
            edges.collect::<Vec<_>>(),
        )
    }

    pub fn star<S: AsRef<str>>(centre: &str, leaves: &[S]) -> Result<BSet> {
        let edges: Vec<_> = leaves
            .iter()
            .map(|l| (centre.to_string(), l.as_ref().to_string()))
            .collect();
        let vs = std::iter::once(centre.to_string())
            .chain(leaves.iter().map(|l| l.as_ref().to_string()));
        BSet::new(vs, edges)
    }

    fn first(&self) -> &str {
        self.adj.keys().next().expect("non-empty")
    }

    pub fn vertices(&self) -> impl Iterator<Item = &String> + '_ {
        self.adj.keys()
    }

    pub fn vertex_set(&self) -> BTreeSet<String> {
        self.adj.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn contains(&self, v: &str) -> bool {
        self.adj.contains_key(v)
    }

    fn check(&self, v: &str) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v.to_string()))
        }
    }

    pub fn neighbours(&self, v: &str) -> Result<&BTreeSet<String>> {
        self.adj
            .get(v)
            .ok_or_else(|| Error::UnknownVertex(v.to_string()))
    }

    pub fn degree(&self, v: &str) -> Result<usize> {
        self.neighbours(v).map(|s| s.len())
    }

    /// Edges as sorted pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (a, ns) in &self.adj {
            for b in ns {
                if a < b {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }

    /// Vertices reachable from `start` without passing through `avoid`.
    fn component(&self, start: &str, avoid: Option<&str>) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start.to_string()];
        seen.insert(start.to_string());
        while let Some(v) = stack.pop() {
            for w in &self.adj[&v] {
                if Some(w.as_str()) != avoid && seen.insert(w.clone()) {
                    stack.push(w.clone());
                }
            }
        }
        seen
    }

    /// The unique path from `y` to `z`, both ends included.
    pub fn path_between(&self, y: &str, z: &str) -> Result<Vec<String>> {
        self.check(y)?;
        self.check(z)?;
        let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
        let mut queue = VecDeque::from([y]);
        parent.insert(y, y);
        while let Some(v) = queue.pop_front() {
            if v == z {
                break;
            }
            for w in &self.adj[v] {
                if !parent.contains_key(w.as_str()) {
                    parent.insert(w, v);
                    queue.push_back(w);
                }
            }
        }
        let mut path = vec![z.to_string()];
        let mut cur = z;
        while cur != y {
            cur = parent[cur];
            path.push(cur.to_string());
        }
        path.reverse();
        Ok(path)
    }

    pub fn between(&self, x: &str, y: &str, z: &str) -> Result<bool> {
        self.check(x)?;
        if self.len() == 1 {
            self.check(y)?;
            self.check(z)?;
            return Ok(false);
        }
        Ok(self.path_between(y, z)?.iter().any(|v| v == x))
    }

    pub fn metric(&self) -> Metric {
        Metric::new(self)
    }

    /// The derived ternary relation, reflexive triples included.
    pub fn relation(&self) -> TernaryRelation {
        let m = self.metric();
        let mut r = TernaryRelation::new(self.vertices().cloned());
        if self.len() == 1 {
            return r;
        }
        // Metric indices follow the sorted vertex order, as do the relation's.
        let n = m.names.len();
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if m.between_idx(x, y, z) {
                        r.set(x, y, z);
                    }
                }
            }
        }
        r
    }

    pub fn centroid(&self, x: &str, y: &str, z: &str) -> Result<Centroid> {
        if x == y || y == z || x == z {
            return Err(Error::NotDistinct(format!("{x}, {y}, {z}")));
        }
        for (a, b, c) in [(x, y, z), (y, x, z), (z, x, y)] {
            if self.between(a, b, c)? {
                return Ok(Centroid::Linear(a.to_string()));
            }
        }
        let pxy: BTreeSet<String> = self.path_between(x, y)?.into_iter().collect();
        let pxz: BTreeSet<String> = self.path_between(x, z)?.into_iter().collect();
        let pyz = self.path_between(y, z)?;
        let u = pyz
            .into_iter()
            .find(|v| pxy.contains(v) && pxz.contains(v))
            .expect("three paths in a tree meet");
        Ok(Centroid::Vertex(u))
    }

    /// Connected components after deleting `v`, in lexicographic order.
    pub fn branches_at(&self, v: &str) -> Result<Vec<BTreeSet<String>>> {
        let ns = self.neighbours(v)?;
        let mut out: Vec<_> = ns.iter().map(|w| self.component(w, Some(v))).collect();
        out.sort();
        Ok(out)
    }

    /// The branch at `v` containing `w`.
    pub fn branch_containing(&self, v: &str, w: &str) -> Result<BTreeSet<String>> {
        self.check(v)?;
        self.check(w)?;
        if v == w {
            return Err(Error::NotDistinct(format!("{v}, {w}")));
        }
        let p = self.path_between(v, w)?;
        Ok(self.component(&p[1], Some(v)))
    }

    /// The neighbour of `v` on the path towards `w`.
    pub fn step_towards(&self, v: &str, w: &str) -> Result<String> {
        if v == w {
            return Err(Error::NotDistinct(format!("{v}, {w}")));
        }
        Ok(self.path_between(v, w)?[1].clone())
    }

    fn by_degree(&self, keep: impl Fn(usize) -> bool) -> BTreeSet<String> {
        self.adj
            .iter()
            .filter(|(_, ns)| keep(ns.len()))
            .map(|(v, _)| v.clone())
            .collect()
    }

    pub fn ramification_points(&self) -> BTreeSet<String> {
        self.by_degree(|d| d >= 3)
    }

    pub fn leaves(&self) -> BTreeSet<String> {
        self.by_degree(|d| d == 1)
    }

    pub fn dyadic(&self) -> BTreeSet<String> {
        self.by_degree(|d| d == 2)
    }

    pub fn is_linear(&self) -> bool {
        self.adj.values().all(|ns| ns.len() < 3)
    }

    /// Whether `self` is a strong substructure of `big`: the betweenness of `big` restricted to
    /// `self`'s vertices is exactly `self`'s.
    ///
    /// Holds iff the `big`-paths realising `self`'s edges avoid `self`'s other vertices and are
    /// pairwise internally disjoint, so their union is a subdivision of `self`.
    pub fn is_strong_sub(&self, big: &BSet) -> Result<bool> {
        for v in self.vertices() {
            if !big.contains(v) {
                return Err(Error::UnknownVertex(v.clone()));
            }
        }
        let mut used: BTreeSet<String> = BTreeSet::new();
        for (a, b) in self.edges() {
            let p = big.path_between(&a, &b)?;
            for v in &p[1..p.len() - 1] {
                if self.contains(v) || !used.insert(v.clone()) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Triple-by-triple version of [`BSet::is_strong_sub`].
    pub fn is_strong_sub_brute(&self, big: &BSet) -> Result<bool> {
        for v in self.vertices() {
            if !big.contains(v) {
                return Err(Error::UnknownVertex(v.clone()));
            }
        }
        let vs: Vec<&String> = self.vertices().collect();
        for x in &vs {
            for y in &vs {
                for z in &vs {
                    if x == y || y == z || x == z {
                        continue;
                    }
                    if self.between(x, y, z)? != big.between(x, y, z)? {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// The positive-type B-set induced on `subset`, if the restricted relation is of positive type.
    pub fn restrict(&self, subset: &BTreeSet<String>) -> Result<BSet> {
        for v in subset {
            self.check(v)?;
        }
        let Some(first) = subset.iter().next() else {
            return Err(Error::NotATree("empty restriction".into()));
        };
        // Steiner tree: union of paths from one subset vertex to all others.
        let mut parent: BTreeMap<&str, &str> = BTreeMap::from([(first.as_str(), first.as_str())]);
        let mut queue = VecDeque::from([first.as_str()]);
        while let Some(v) = queue.pop_front() {
            for w in &self.adj[v] {
                if !parent.contains_key(w.as_str()) {
                    parent.insert(w, v);
                    queue.push_back(w);
                }
            }
        }
        let mut steiner: BTreeSet<String> = BTreeSet::from([first.clone()]);
        for v in subset {
            let mut cur = v.as_str();
            while steiner.insert(cur.to_string()) {
                cur = parent[cur];
            }
        }
        let mut edges = Vec::new();
        for a in subset {
            for w in &self.adj[a] {
                if !steiner.contains(w) {
                    continue;
                }
                // walk through non-subset vertices until a subset vertex
                let mut prev = a.clone();
                let mut cur = w.clone();
                loop {
                    if subset.contains(&cur) {
                        if a < &cur {
                            edges.push((a.clone(), cur.clone()));
                        }
                        break;
                    }
                    let next: Vec<&String> = self.adj[&cur]
                        .iter()
                        .filter(|x| **x != prev && steiner.contains(*x))
                        .collect();
                    if next.len() != 1 {
                        return Err(Error::NotStrong(format!(
                            "{cur} is a centroid outside the subset"
                        )));
                    }
                    prev = cur;
                    cur = next[0].clone();
                }
            }
        }
        BSet::new(subset.iter().cloned(), edges)
    }

    /// Adds `new` as a leaf on `at`.
    pub fn add_leaf(&mut self, at: &str, new: impl Into<String>) -> Result<()> {
        self.check(at)?;
        let new = new.into();
        if self.contains(&new) {
            return Err(Error::NotDistinct(new));
        }
        self.adj.get_mut(at).unwrap().insert(new.clone());
        self.adj.insert(new, BTreeSet::from([at.to_string()]));
        Ok(())
    }

    /// Inserts `new` in the middle of edge `a`-`b`.
    pub fn subdivide(&mut self, a: &str, b: &str, new: impl Into<String>) -> Result<()> {
        let new = new.into();
        if !self.neighbours(a)?.contains(b) {
            return Err(Error::NotATree(format!("{a}-{b} is not an edge")));
        }
        if self.contains(&new) {
            return Err(Error::NotDistinct(new));
        }
        self.adj.get_mut(a).unwrap().remove(b);
        self.adj.get_mut(b).unwrap().remove(a);
        self.adj.get_mut(a).unwrap().insert(new.clone());
        self.adj.get_mut(b).unwrap().insert(new.clone());
        self.adj
            .insert(new, BTreeSet::from([a.to_string(), b.to_string()]));
        Ok(())
    }

    /// Renames vertices; ids missing from `map` are kept. The map must be injective on `self`.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Result<BSet> {
        let f = |v: &String| map.get(v).cloned().unwrap_or_else(|| v.clone());
        let vs: Vec<String> = self.vertices().map(f).collect();
        let distinct: BTreeSet<&String> = vs.iter().collect();
        if distinct.len() != vs.len() {
            return Err(Error::NotDistinct("renaming is not injective".into()));
        }
        BSet::new(
            vs.clone(),
            self.edges()
                .iter()
                .map(|(a, b)| (f(a), f(b)))
                .collect::<Vec<_>>(),
        )
    }

    /// The first id `•k` not used by `self` nor in `avoid`.
    pub fn fresh_vertex(&self, avoid: &BTreeSet<String>) -> String {
        (0..)
            .map(|k| format!("{FRESH_PREFIX}{k}"))
            .find(|v| !self.contains(v) && !avoid.contains(v))
            .unwrap()
    }
}

impl fmt::Display for BSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vs: Vec<&str> = self.vertices().map(|s| s.as_str()).collect();
        write!(f, "{{{}}}", vs.join(","))?;
        for (a, b) in self.edges() {
            write!(f, " {a}-{b}")?;
        }
        Ok(())
    }
}

/// All-pairs distances, for bulk betweenness queries.
#[derive(Clone, Debug)]
pub struct Metric {
    pub names: Vec<String>,
    index: BTreeMap<String, usize>,
    dist: Vec<Vec<u32>>,
}

impl Metric {
    pub fn new(b: &BSet) -> Metric {
        let names: Vec<String> = b.vertices().cloned().collect();
        let index: BTreeMap<String, usize> = names
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let n = names.len();
        let mut dist = vec![vec![u32::MAX; n]; n];
        for (s, row) in dist.iter_mut().enumerate() {
            row[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for w in &b.adj[&names[v]] {
                    let j = index[w];
                    if row[j] == u32::MAX {
                        row[j] = row[v] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        Metric { names, index, dist }
    }

    pub fn index(&self, v: &str) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn distance(&self, a: usize, b: usize) -> u32 {
        self.dist[a][b]
    }

    pub fn between_idx(&self, x: usize, y: usize, z: usize) -> bool {
        self.names.len() > 1 && self.dist[y][x] + self.dist[x][z] == self.dist[y][z]
    }

    pub fn between(&self, x: &str, y: &str, z: &str) -> Result<bool> {
        let i = |v: &str| {
            self.index(v)
                .ok_or_else(|| Error::UnknownVertex(v.to_string()))
        };
        Ok(self.between_idx(i(x)?, i(y)?, i(z)?))
    }
}

/// A ternary relation on a finite domain, as input to the axiom validators. Stored as one bit per
/// ordered triple over the sorted domain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TernaryRelation {
    names: Vec<String>,
    bits: Vec<bool>,
}

impl TernaryRelation {
    pub fn new(domain: impl IntoIterator<Item = String>) -> TernaryRelation {
        let names: Vec<String> = domain
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let n = names.len();
        TernaryRelation {
            names,
            bits: vec![false; n * n * n],
        }
    }

    /// The domain in sorted order.
    pub fn domain(&self) -> &[String] {
        &self.names
    }

    fn n(&self) -> usize {
        self.names.len()
    }

    fn index(&self, v: &str) -> Result<usize> {
        self.names
            .binary_search_by(|w| w.as_str().cmp(v))
            .map_err(|_| Error::UnknownVertex(v.to_string()))
    }

    fn at(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.n() + y) * self.n() + z
    }

    fn r(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.at(x, y, z)]
    }

    fn set(&mut self, x: usize, y: usize, z: usize) {
        let i = self.at(x, y, z);
        self.bits[i] = true;
    }

    pub fn insert(&mut self, x: &str, y: &str, z: &str) -> Result<()> {
        let (x, y, z) = (self.index(x)?, self.index(y)?, self.index(z)?);
        self.set(x, y, z);
        Ok(())
    }

    /// False when any entry is outside the domain.
    pub fn holds(&self, x: &str, y: &str, z: &str) -> bool {
        match (self.index(x), self.index(y), self.index(z)) {
            (Ok(x), Ok(y), Ok(z)) => self.r(x, y, z),
            _ => false,
        }
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.contains(&true)
    }

    /// Betweenness of a linear order listed from one end to the other.
    pub fn linear<S: AsRef<str>>(order: &[S]) -> TernaryRelation {
        let mut r = TernaryRelation::new(order.iter().map(|s| s.as_ref().to_string()));
        let pos: Vec<usize> = order
            .iter()
            .map(|s| r.index(s.as_ref()).expect("in domain"))
            .collect();
        let n = pos.len();
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if (y <= x && x <= z) || (z <= x && x <= y) {
                        r.set(pos[x], pos[y], pos[z]);
                    }
                }
            }
        }
        r
    }

    fn collect(
        &self,
        keep: impl Fn(usize, usize, usize) -> bool,
    ) -> BTreeSet<(String, String, String)> {
        let n = self.n();
        let mut out = Vec::new();
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if self.r(x, y, z) && keep(x, y, z) {
                        let nm = &self.names;
                        out.push((nm[x].clone(), nm[y].clone(), nm[z].clone()));
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// Every triple, as names.
    pub fn triples(&self) -> BTreeSet<(String, String, String)> {
        self.collect(|_, _, _| true)
    }

    /// Triples with three distinct entries.
    pub fn irreflexive(&self) -> BTreeSet<(String, String, String)> {
        self.collect(|x, y, z| x != y && y != z && x != z)
    }

    fn witness(&self, vs: &[usize]) -> Vec<String> {
        vs.iter().map(|&v| self.names[v].clone()).collect()
    }
}

/// Outcome of checking a list of named axioms; `None` means the axiom holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub results: Vec<(&'static str, Option<Vec<String>>)>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|(_, w)| w.is_none())
    }

    pub fn get(&self, axiom: &str) -> Option<&Option<Vec<String>>> {
        self.results
            .iter()
            .find(|(a, _)| *a == axiom)
            .map(|(_, w)| w)
    }

    pub fn holds(&self, axiom: &str) -> bool {
        matches!(self.get(axiom), Some(None))
    }

    pub fn first_failure(&self) -> Option<(&'static str, &Vec<String>)> {
        self.results
            .iter()
            .find_map(|(a, w)| w.as_ref().map(|w| (*a, w)))
    }

    pub fn into_result(self) -> Result<()> {
        match self.first_failure() {
            None => Ok(()),
            Some((axiom, w)) => Err(Error::Axiom {
                axiom,
                witness: w.join(","),
            }),
        }
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, w)) in self.results.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match w {
                None => write!(f, "{a} pass")?,
                Some(w) => write!(f, "{a} fail {}", w.join(","))?,
            }
        }
        Ok(())
    }
}

fn first_triple(
    n: usize,
    mut bad: impl FnMut(usize, usize, usize) -> Option<Vec<usize>>,
) -> Option<Vec<usize>> {
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if let Some(w) = bad(x, y, z) {
                    return Some(w);
                }
            }
        }
    }
    None
}

/// Checks B1-B5 exhaustively. A one-point domain with the empty relation is the trivial B-set and
/// passes by convention.
pub fn validate_b_axioms(r: &TernaryRelation) -> Result<AxiomReport> {
    Ok(b_axioms(r))
}

fn b_axioms(d: &TernaryRelation) -> AxiomReport {
    let n = d.n();
    let trivial = n == 1 && !d.bits[0];
    let w = |o: Option<Vec<usize>>| o.map(|v| d.witness(&v));
    let b1 = first_triple(n, |x, y, z| {
        (d.r(x, y, z) && !d.r(x, z, y)).then(|| vec![x, y, z])
    });
    let b2 = if trivial {
        None
    } else {
        first_triple(n, |x, y, z| {
            ((d.r(x, y, z) && d.r(y, x, z)) != (x == y)).then(|| vec![x, y, z])
        })
    };
    let b3 = first_triple(n, |x, y, z| {
        if !d.r(x, y, z) {
            return None;
        }
        (0..n)
            .find(|&w| !d.r(x, y, w) && !d.r(x, w, z))
            .map(|w| vec![x, y, z, w])
    });
    let b4 = if trivial {
        None
    } else {
        first_triple(n, |x, y, z| {
            if d.r(x, y, z) || (0..n).any(|w| w != x && d.r(w, x, y) && d.r(w, x, z)) {
                None
            } else {
                Some(vec![x, y, z])
            }
        })
    };
    let b5 = if trivial {
        None
    } else {
        first_triple(n, |x, y, z| {
            let incomparable = !d.r(x, y, z) && !d.r(y, x, z) && !d.r(z, x, y);
            if incomparable && !(0..n).any(|u| d.r(u, x, y) && d.r(u, x, z) && d.r(u, y, z)) {
                Some(vec![x, y, z])
            } else {
                None
            }
        })
    };
    AxiomReport {
        results: vec![
            ("B1", w(b1)),
            ("B2", w(b2)),
            ("B3", w(b3)),
            ("B4", w(b4)),
            ("B5", w(b5)),
        ],
    }
}

/// Whether some element of every triple lies between the other two.
pub fn is_linear_relation(d: &TernaryRelation) -> Result<bool> {
    Ok(first_triple(d.n(), |x, y, z| {
        (!d.r(x, y, z) && !d.r(y, z, x) && !d.r(z, x, y)).then(Vec::new)
    })
    .is_none())
}

/// Checks C1-C4 exhaustively.
pub fn validate_c_axioms(d: &TernaryRelation) -> Result<AxiomReport> {
    let n = d.n();
    let w = |o: Option<Vec<usize>>| o.map(|v| d.witness(&v));
    let c1 = first_triple(n, |x, y, z| {
        (d.r(x, y, z) && !d.r(x, z, y)).then(|| vec![x, y, z])
    });
    let c2 = first_triple(n, |x, y, z| {
        (d.r(x, y, z) && d.r(y, x, z)).then(|| vec![x, y, z])
    });
    let c3 = first_triple(n, |x, y, z| {
        if !d.r(x, y, z) {
            return None;
        }
        (0..n)
            .find(|&w| !d.r(x, w, z) && !d.r(w, y, z))
            .map(|w| vec![x, y, z, w])
    });
    let c4 = first_triple(n, |x, y, _| (x != y && !d.r(x, y, y)).then(|| vec![x, y]));
    Ok(AxiomReport {
        results: vec![("C1", w(c1)), ("C2", w(c2)), ("C3", w(c3)), ("C4", w(c4))],
    })
}

/// Rebuilds the free tree of a positive-type B-relation: two points are adjacent when nothing
/// else lies between them.
pub fn relation_to_tree(d: &TernaryRelation) -> Result<BSet> {
    b_axioms(d).into_result()?;
    let names = &d.names;
    let n = d.n();
    let mut edges = Vec::new();
    if n == 2 {
        edges.push((names[0].clone(), names[1].clone()));
    } else if n > 2 {
        for x in 0..n {
            for y in x + 1..n {
                if !(0..n).any(|w| w != x && w != y && d.r(w, x, y)) {
                    edges.push((names[x].clone(), names[y].clone()));
                }
            }
        }
    }
    let tree = BSet::new(names.iter().cloned(), edges)?;
    // Metric indices follow the sorted vertex order, as do the relation's.
    let m = tree.metric();
    let distinct = |x, y, z| x != y && y != z && x != z;
    if first_triple(n, |x, y, z| {
        (distinct(x, y, z) && m.between_idx(x, y, z) != d.r(x, y, z)).then(Vec::new)
    })
    .is_some()
    {
        return Err(Error::NotATree(
            "adjacency graph does not reproduce the relation".into(),
        ));
    }
    Ok(tree)
}
