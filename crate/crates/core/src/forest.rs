//! Finite coloured trees of B-sets.
//!
//! Nodes are ambient nodes; each carries a positive-type B-set. A non-root node `t` with parent `s`
//! stores `f_s(t)`, a ramification point of `B(s)`, and `g_{st}`, which collapses each branch of
//! `B(s)` at `f_s(t)` onto one vertex of `B(t)`. The L-domain is the vertex set of the root B-set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ambient::{AmbientNode, ColorChain};
use crate::bset::BSet;
use crate::error::{Error, Result};
use crate::lset::{valid_id, LSet};

pub type VertexMap = BTreeMap<String, String>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeOfBSets {
    pub chain: ColorChain,
    pub(crate) bsets: BTreeMap<AmbientNode, BSet>,
    /// `f[t]` is `f_s(t)` for the parent `s` of `t`.
    pub(crate) f: BTreeMap<AmbientNode, String>,
    /// `g[t]` is `g_{st}` for the parent `s` of `t`.
    pub(crate) g: BTreeMap<AmbientNode, VertexMap>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub clause: &'static str,
    pub at: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn push(
        &mut self,
        clause: &'static str,
        at: impl ToString,
        detail: impl Into<String>,
    ) {
        self.violations.push(Violation {
            clause,
            at: at.to_string(),
            detail: detail.into(),
        });
    }

    pub fn fails(&self, clause: &str) -> bool {
        self.violations.iter().any(|v| v.clause == clause)
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::Invalid(format!(
                "{} at {}: {}",
                v.clause, v.at, v.detail
            ))),
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "FAIL {} at {}: {}", v.clause, v.at, v.detail)?;
        }
        Ok(())
    }
}

impl TreeOfBSets {
    pub fn single(chain: ColorChain, node: AmbientNode, bset: BSet) -> Result<TreeOfBSets> {
        let t = TreeOfBSets::unchecked(
            chain,
            BTreeMap::from([(node, bset)]),
            BTreeMap::new(),
            BTreeMap::new(),
        );
        t.validate().into_result()?;
        Ok(t)
    }

    pub fn from_parts(
        chain: ColorChain,
        bsets: BTreeMap<AmbientNode, BSet>,
        f: BTreeMap<AmbientNode, String>,
        g: BTreeMap<AmbientNode, VertexMap>,
    ) -> Result<TreeOfBSets> {
        let t = TreeOfBSets::unchecked(chain, bsets, f, g);
        t.validate().into_result()?;
        Ok(t)
    }

    pub(crate) fn unchecked(
        chain: ColorChain,
        bsets: BTreeMap<AmbientNode, BSet>,
        f: BTreeMap<AmbientNode, String>,
        g: BTreeMap<AmbientNode, VertexMap>,
    ) -> TreeOfBSets {
        TreeOfBSets { chain, bsets, f, g }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &AmbientNode> + '_ {
        self.bsets.keys()
    }

    pub fn node_count(&self) -> usize {
        self.bsets.len()
    }

    pub fn contains(&self, t: &AmbientNode) -> bool {
        self.bsets.contains_key(t)
    }

    fn check_node(&self, t: &AmbientNode) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::UnknownNode(t.to_string()))
        }
    }

    /// The meet of all nodes; a member of the tree whenever it is meet-closed.
    pub fn root(&self) -> AmbientNode {
        let mut it = self.bsets.keys();
        let first = it.next().expect("a tree of B-sets has a node").clone();
        it.fold(first, |acc, n| acc.meet_unchecked(n))
    }

    pub fn bset(&self, t: &AmbientNode) -> Result<&BSet> {
        self.bsets
            .get(t)
            .ok_or_else(|| Error::UnknownNode(t.to_string()))
    }

    pub fn root_bset(&self) -> &BSet {
        &self.bsets[&self.root()]
    }

    /// The L-domain: vertices of the root B-set.
    pub fn domain(&self) -> BTreeSet<String> {
        self.root_bset().vertex_set()
    }

    /// `f_s(t)` where `s` is the parent of `t`.
    pub fn f_of(&self, child: &AmbientNode) -> Option<&String> {
        self.f.get(child)
    }

    /// `g_{st}` where `s` is the parent of `t`.
    pub fn g_of(&self, child: &AmbientNode) -> Option<&VertexMap> {
        self.g.get(child)
    }

    pub fn parent(&self, t: &AmbientNode) -> Option<&AmbientNode> {
        self.bsets
            .keys()
            .filter(|s| s.tree_lt(t))
            .max_by(|a, b| a.colour().cmp(b.colour()))
    }

    pub fn children(&self, t: &AmbientNode) -> Vec<&AmbientNode> {
        let above: Vec<&AmbientNode> = self.bsets.keys().filter(|c| t.tree_lt(c)).collect();
        above
            .iter()
            .filter(|c| !above.iter().any(|d| d.tree_lt(c)))
            .copied()
            .collect()
    }

    pub fn is_leaf(&self, t: &AmbientNode) -> bool {
        !self.bsets.keys().any(|c| t.tree_lt(c))
    }

    /// `s = s_0 < s_1 < ... < s_n = t` through consecutive parents.
    pub fn chain_between(&self, s: &AmbientNode, t: &AmbientNode) -> Result<Vec<AmbientNode>> {
        self.check_node(s)?;
        self.check_node(t)?;
        if !s.leq_unchecked(t) {
            return Err(Error::NotBelow(format!("{s} is not below {t}")));
        }
        // nodes between s and t form a chain, ordered by colour
        let mut out: Vec<AmbientNode> = self
            .bsets
            .keys()
            .filter(|c| s.leq_unchecked(c) && c.leq_unchecked(t))
            .cloned()
            .collect();
        out.sort_by(|a, b| a.colour().cmp(b.colour()));
        Ok(out)
    }

    /// The child of `s` lying below `t`, for `s < t`.
    pub fn child_towards(&self, s: &AmbientNode, t: &AmbientNode) -> Result<AmbientNode> {
        self.check_node(s)?;
        self.check_node(t)?;
        self.bsets
            .keys()
            .filter(|c| s.tree_lt(c) && c.leq_unchecked(t))
            .min_by(|a, b| a.colour().cmp(b.colour()))
            .cloned()
            .ok_or_else(|| Error::NotBelow(format!("{s} is not strictly below {t}")))
    }

    /// `f_s(t)` for any `t > s`: the ramification point of `B(s)` for the cone containing `t`.
    pub fn f_towards(&self, s: &AmbientNode, t: &AmbientNode) -> Result<&String> {
        let c = self.child_towards(s, t)?;
        Ok(&self.f[&c])
    }

    /// Composite `g_{st}` along the chain from `s` to `t`; identity when `s = t`.
    pub fn g_composite(&self, s: &AmbientNode, t: &AmbientNode) -> Result<VertexMap> {
        let chain = self.chain_between(s, t)?;
        let mut map: VertexMap = self.bsets[s]
            .vertices()
            .map(|v| (v.clone(), v.clone()))
            .collect();
        for c in &chain[1..] {
            let step = &self.g[c];
            map = map
                .into_iter()
                .filter_map(|(k, v)| step.get(&v).map(|w| (k, w.clone())))
                .collect();
        }
        Ok(map)
    }

    /// `[x]_t`: the root vertices sent to the same vertex of `B(t)` as `x`.
    pub fn class_of(&self, x: &str, t: &AmbientNode) -> Result<Option<BTreeSet<String>>> {
        self.check_node(t)?;
        if !self.root_bset().contains(x) {
            return Err(Error::UnknownVertex(x.to_string()));
        }
        let gm = self.g_composite(&self.root(), t)?;
        Ok(gm.get(x).map(|img| {
            gm.iter()
                .filter(|(_, v)| *v == img)
                .map(|(k, _)| k.clone())
                .collect()
        }))
    }

    /// Root vertices over each vertex of `B(t)`.
    pub fn fibres(&self, t: &AmbientNode) -> Result<BTreeMap<String, BTreeSet<String>>> {
        let gm = self.g_composite(&self.root(), t)?;
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (k, v) in gm {
            out.entry(v).or_default().insert(k);
        }
        Ok(out)
    }

    /// The pre-B-set at `t`: root vertices on which `g_{rt}` is defined.
    pub fn pre_set(&self, t: &AmbientNode) -> Result<BTreeSet<String>> {
        Ok(self.g_composite(&self.root(), t)?.into_keys().collect())
    }

    /// The classes `[a]_t`, sorted.
    pub fn class_partition(&self, t: &AmbientNode) -> Result<Vec<BTreeSet<String>>> {
        let mut out: Vec<_> = self.fibres(t)?.into_values().collect();
        out.sort();
        Ok(out)
    }

    /// Union of the classes over the branch of `B(t)` at `v` that contains `w`.
    pub fn pre_branch(&self, t: &AmbientNode, v: &str, w: &str) -> Result<BTreeSet<String>> {
        let branch = self.bset(t)?.branch_containing(v, w)?;
        let fib = self.fibres(t)?;
        Ok(branch.iter().flat_map(|u| fib[u].iter().cloned()).collect())
    }

    /// Every pre-branch of the tree, deduplicated.
    pub fn all_pre_branches(&self) -> BTreeSet<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        for (t, b) in &self.bsets {
            let fib = self.fibres(t).expect("node of self");
            for v in b.vertices() {
                for branch in b.branches_at(v).expect("vertex of b") {
                    out.insert(branch.iter().flat_map(|u| fib[u].iter().cloned()).collect());
                }
            }
        }
        out
    }

    pub fn restrict_above(&self, s: &AmbientNode) -> Result<TreeOfBSets> {
        self.check_node(s)?;
        let keep = |t: &AmbientNode| s.leq_unchecked(t);
        let bsets = self
            .bsets
            .iter()
            .filter(|(t, _)| keep(t))
            .map(|(t, b)| (t.clone(), b.clone()))
            .collect();
        let f = self
            .f
            .iter()
            .filter(|(t, _)| keep(t) && *t != s)
            .map(|(t, v)| (t.clone(), v.clone()))
            .collect();
        let g = self
            .g
            .iter()
            .filter(|(t, _)| keep(t) && *t != s)
            .map(|(t, v)| (t.clone(), v.clone()))
            .collect();
        Ok(TreeOfBSets::unchecked(self.chain.clone(), bsets, f, g))
    }

    /// The L-relation: `L(a; b, c)` iff at some node the three classes are defined, distinct and
    /// `B_t([a]; [b], [c])`.
    pub fn compute_l(&self) -> LSet {
        let mut out = LSet::new(self.domain());
        for (t, b) in &self.bsets {
            let fib = self.fibres(t).expect("node of self");
            let m = b.metric();
            let n = m.names.len();
            for x in 0..n {
                for y in 0..n {
                    for z in y + 1..n {
                        if x == y || x == z || !m.between_idx(x, y, z) {
                            continue;
                        }
                        for a in &fib[&m.names[x]] {
                            for bb in &fib[&m.names[y]] {
                                for c in &fib[&m.names[z]] {
                                    out.insert_pair(a, bb, c);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// The unique node witnessing `L(x; y, z)`, found by climbing through centroids.
    pub fn witness_node(&self, x: &str, y: &str, z: &str) -> Result<AmbientNode> {
        let dom = self.domain();
        for v in [x, y, z] {
            if !dom.contains(v) {
                return Err(Error::UnknownVertex(v.to_string()));
            }
        }
        let not_in_l = || Error::NotInL(format!("({x}; {y}, {z})"));
        if x == y || y == z || x == z {
            return Err(not_in_l());
        }
        let mut s = self.root();
        loop {
            let gm = self.g_composite(&self.root(), &s)?;
            let (Some(a), Some(b), Some(c)) = (gm.get(x), gm.get(y), gm.get(z)) else {
                return Err(not_in_l());
            };
            if a == b || b == c || a == c {
                return Err(not_in_l());
            }
            match self.bsets[&s].centroid(a, b, c)? {
                crate::bset::Centroid::Linear(mid) => {
                    return if &mid == a { Ok(s) } else { Err(not_in_l()) };
                }
                crate::bset::Centroid::Vertex(d) => {
                    let next = self
                        .children(&s)
                        .into_iter()
                        .find(|t| self.f[*t] == d)
                        .cloned();
                    match next {
                        Some(t) => s = t,
                        None => return Err(not_in_l()),
                    }
                }
            }
        }
    }

    pub fn validate(&self) -> Report {
        let mut r = Report::default();
        if self.bsets.is_empty() {
            r.push("non-empty", "-", "no nodes");
            return r;
        }
        for t in self.bsets.keys() {
            if let Err(e) = t.check_chain(&self.chain) {
                r.push("chain", t, e.to_string());
            }
        }
        let nodes: Vec<&AmbientNode> = self.bsets.keys().collect();
        for (i, a) in nodes.iter().enumerate() {
            for b in &nodes[i + 1..] {
                if a.colour().arity() != b.colour().arity() {
                    r.push("chain", a, format!("mixed colour arity with {b}"));
                } else if !self.contains(&a.meet_unchecked(b)) {
                    r.push(
                        "meet-closed",
                        a,
                        format!("meet with {b} is {} which is absent", a.meet_unchecked(b)),
                    );
                }
            }
        }
        if !r.ok() {
            return r;
        }
        let root = self.root();
        for t in self.f.keys().chain(self.g.keys()) {
            if !self.contains(t) || *t == root {
                r.push(
                    "links",
                    t,
                    "f or g given for a node that is not a non-root node",
                );
            }
        }
        for t in self.bsets.keys().filter(|t| **t != root) {
            if !self.f.contains_key(t) || !self.g.contains_key(t) {
                r.push("links", t, "missing f or g for non-root node");
            }
        }
        if !r.ok() {
            return r;
        }
        for (s, b) in &self.bsets {
            let kids = self.children(s);
            if kids.is_empty() {
                if !b.is_linear() {
                    r.push(
                        "leaf-linear",
                        s,
                        format!("leaf node carries non-linear B-set {b}"),
                    );
                }
                continue;
            }
            let mut seen = BTreeSet::new();
            for t in &kids {
                let v = &self.f[*t];
                if !b.contains(v) {
                    r.push("f-bijection", s, format!("f({t}) = {v} is not a vertex"));
                } else if !seen.insert(v.clone()) {
                    r.push("f-bijection", s, format!("f({t}) = {v} repeats"));
                }
            }
            let ram = b.ramification_points();
            if seen != ram {
                let shown: Vec<&String> = ram.iter().collect();
                r.push(
                    "f-bijection",
                    s,
                    format!("f image differs from ramification points {shown:?}"),
                );
            }
            for t in kids {
                self.check_g(s, t, &mut r);
            }
        }
        r
    }

    fn check_g(&self, s: &AmbientNode, t: &AmbientNode, r: &mut Report) {
        let b = &self.bsets[s];
        let bt = &self.bsets[t];
        let v = &self.f[t];
        let g = &self.g[t];
        if !b.contains(v) {
            return;
        }
        let dom: BTreeSet<String> = b.vertices().filter(|u| *u != v).cloned().collect();
        let keys: BTreeSet<String> = g.keys().cloned().collect();
        if keys != dom {
            r.push("g-map", t, format!("domain must be B({s}) minus {v}"));
            return;
        }
        let mut images = BTreeSet::new();
        for branch in b.branches_at(v).expect("vertex of b") {
            let vals: BTreeSet<&String> = branch.iter().map(|u| &g[u]).collect();
            if vals.len() != 1 {
                r.push(
                    "g-map",
                    t,
                    format!(
                        "not constant on the branch containing {}",
                        branch.first().unwrap()
                    ),
                );
                continue;
            }
            let val = vals.into_iter().next().unwrap();
            if !bt.contains(val) {
                r.push("g-map", t, format!("value {val} is not a vertex of B({t})"));
            } else if !images.insert(val.clone()) {
                r.push("g-map", t, format!("two branches collapse onto {val}"));
            }
        }
        if images.len() != bt.len() && !r.fails("g-map") {
            r.push(
                "g-map",
                t,
                format!("{} branches but |B({t})| = {}", images.len(), bt.len()),
            );
        }
    }

    /// `nodes,rootVerts`.
    pub fn sizes(&self) -> (usize, usize) {
        (self.node_count(), self.root_bset().len())
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<TreeOfBSets> {
        let t = parse_tob(text)?;
        t.validate().into_result()?;
        Ok(t)
    }

    /// Parses without running [`TreeOfBSets::validate`], so a caller can report every violation.
    pub fn parse_unchecked(text: &str) -> Result<TreeOfBSets> {
        parse_tob(text)
    }

    /// Node poset as one digraph; each B-set as a cluster subgraph.
    pub fn to_dot(&self) -> String {
        let idx: BTreeMap<&AmbientNode, usize> =
            self.bsets.keys().enumerate().map(|(i, t)| (t, i)).collect();
        let mut out = String::from("digraph tob {\n  compound=true;\n");
        for (t, i) in &idx {
            out.push_str(&format!("  n{i} [shape=box,label=\"{t}\"];\n"));
        }
        for (t, v) in &self.f {
            let p = self.parent(t).expect("non-root");
            out.push_str(&format!("  n{} -> n{} [label=\"{v}\"];\n", idx[p], idx[t]));
        }
        for (t, b) in &self.bsets {
            let i = idx[t];
            out.push_str(&format!(
                "  subgraph cluster_{i} {{\n    label=\"B({t})\";\n"
            ));
            for v in b.vertices() {
                out.push_str(&format!("    \"n{i}:{v}\" [label=\"{v}\"];\n"));
            }
            for (a, c) in b.edges() {
                out.push_str(&format!("    \"n{i}:{a}\" -> \"n{i}:{c}\" [dir=none];\n"));
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for TreeOfBSets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "TOB v1 chain={}", self.chain)?;
        for (t, b) in &self.bsets {
            writeln!(f, "node {t}")?;
            write!(f, "vertices")?;
            for v in b.vertices() {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
            write!(f, "edges")?;
            for (a, c) in b.edges() {
                write!(f, " {a}-{c}")?;
            }
            writeln!(f)?;
            let mut kids = self.children(t);
            kids.sort();
            for c in kids {
                writeln!(f, "f {c} -> {}", self.f[c])?;
                write!(f, "g {c}:")?;
                for (k, v) in &self.g[c] {
                    write!(f, " {k}->{v}")?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

fn parse_tob(text: &str) -> Result<TreeOfBSets> {
    let err = |line: usize, msg: String| Error::Parse { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim().is_empty());
    let chain: ColorChain = match lines.next() {
        Some((i, l)) => {
            let rest = l
                .strip_prefix("TOB v1 chain=")
                .ok_or_else(|| err(i, "expected `TOB v1 chain=<preset>`".into()))?;
            rest.parse().map_err(|e: Error| err(i, e.to_string()))?
        }
        None => return Err(err(1, "empty input".into())),
    };
    let id = |i: usize, s: &str| -> Result<String> {
        if valid_id(s) {
            Ok(s.to_string())
        } else {
            Err(err(i, format!("bad vertex id {s:?}")))
        }
    };
    let mut bsets = BTreeMap::new();
    let mut f = BTreeMap::new();
    let mut g = BTreeMap::new();
    let mut declared_parent: Vec<(usize, AmbientNode, AmbientNode)> = Vec::new();
    let mut cur: Option<AmbientNode> = None;
    let mut verts: Option<Vec<String>> = None;
    for (i, l) in lines {
        let (kw, rest) = l.split_once(' ').unwrap_or((l, ""));
        match kw {
            "node" => {
                let t: AmbientNode = rest.parse().map_err(|e: Error| err(i, e.to_string()))?;
                if bsets.contains_key(&t) {
                    return Err(err(i, format!("node {t} repeated")));
                }
                cur = Some(t);
                verts = None;
            }
            "vertices" => {
                if cur.is_none() || verts.is_some() {
                    return Err(err(i, "`vertices` must follow `node`".into()));
                }
                verts = Some(
                    rest.split_whitespace()
                        .map(|s| id(i, s))
                        .collect::<Result<_>>()?,
                );
            }
            "edges" | "edges\t" => {
                let (Some(t), Some(vs)) = (cur.clone(), verts.take()) else {
                    return Err(err(i, "`edges` must follow `vertices`".into()));
                };
                let mut edges = Vec::new();
                for p in rest.split_whitespace() {
                    let (a, b) = p
                        .split_once('-')
                        .ok_or_else(|| err(i, format!("bad edge {p:?}")))?;
                    edges.push((id(i, a)?, id(i, b)?));
                }
                let b = BSet::new(vs, edges).map_err(|e| err(i, e.to_string()))?;
                bsets.insert(t, b);
            }
            "f" => {
                let parent = cur
                    .clone()
                    .filter(|t| bsets.contains_key(t))
                    .ok_or_else(|| err(i, "`f` outside a node block".into()))?;
                let (c, v) = rest
                    .rsplit_once(" -> ")
                    .ok_or_else(|| err(i, "expected `f <node> -> <vertex>`".into()))?;
                let c: AmbientNode = c.parse().map_err(|e: Error| err(i, e.to_string()))?;
                if f.insert(c.clone(), id(i, v.trim())?).is_some() {
                    return Err(err(i, format!("second f for {c}")));
                }
                declared_parent.push((i, parent, c));
            }
            "g" => {
                let parent = cur
                    .clone()
                    .filter(|t| bsets.contains_key(t))
                    .ok_or_else(|| err(i, "`g` outside a node block".into()))?;
                let (c, maps) = rest
                    .split_once(':')
                    .ok_or_else(|| err(i, "expected `g <node>: v->w ...`".into()))?;
                let c: AmbientNode = c.parse().map_err(|e: Error| err(i, e.to_string()))?;
                let mut m = VertexMap::new();
                for p in maps.split_whitespace() {
                    let (a, b) = p
                        .split_once("->")
                        .ok_or_else(|| err(i, format!("bad map entry {p:?}")))?;
                    if m.insert(id(i, a)?, id(i, b)?).is_some() {
                        return Err(err(i, format!("{a} mapped twice")));
                    }
                }
                if g.insert(c.clone(), m).is_some() {
                    return Err(err(i, format!("second g for {c}")));
                }
                declared_parent.push((i, parent, c));
            }
            _ => return Err(err(i, format!("unexpected line {l:?}"))),
        }
    }
    if verts.is_some() {
        return Err(err(
            text.lines().count(),
            "node block without `edges`".into(),
        ));
    }
    if bsets.is_empty() {
        return Err(err(1, "no nodes".into()));
    }
    let t = TreeOfBSets::unchecked(chain, bsets, f, g);
    for (i, p, c) in declared_parent {
        if t.contains(&c) && t.parent(&c) != Some(&p) {
            return Err(err(
                i,
                format!("{c} is listed under {p}, which is not its parent"),
            ));
        }
    }
    Ok(t)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn n(s: &str) -> AmbientNode {
        s.parse().unwrap()
    }

    pub(crate) fn vm(pairs: &[(&str, &str)]) -> VertexMap {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    pub(crate) fn set(vs: &[&str]) -> BTreeSet<String> {
        vs.iter().map(|s| s.to_string()).collect()
    }

    /// Root star on e with leaves x1 x2 x3; child at colour 1 carries X1-X2-X3.
    pub(crate) fn e2() -> TreeOfBSets {
        TreeOfBSets::from_parts(
            ColorChain::Rationals,
            BTreeMap::from([
                (n("0"), BSet::star("e", &["x1", "x2", "x3"]).unwrap()),
                (n("1"), BSet::path(&["X1", "X2", "X3"]).unwrap()),
            ]),
            BTreeMap::from([(n("1"), "e".to_string())]),
            BTreeMap::from([(n("1"), vm(&[("x1", "X1"), ("x2", "X2"), ("x3", "X3")]))]),
        )
        .unwrap()
    }

    /// Three levels: root spider on c with legs a, b, h, d-d2; above c a star on m; above m a
    /// path. The leg h collapses onto m, so it has no class at the top node.
    pub(crate) fn three_level() -> TreeOfBSets {
        TreeOfBSets::from_parts(
            ColorChain::OmegaStar,
            BTreeMap::from([
                (
                    n("-3"),
                    BSet::new(
                        ["c", "a", "b", "d", "d2", "h"],
                        vec![
                            ("c".into(), "h".into()),
                            ("c".into(), "a".into()),
                            ("c".into(), "b".into()),
                            ("c".into(), "d".into()),
                            ("d".into(), "d2".into()),
                        ],
                    )
                    .unwrap(),
                ),
                (n("-2"), BSet::star("m", &["A", "B", "D"]).unwrap()),
                (n("-1"), BSet::path(&["P", "Q", "R"]).unwrap()),
            ]),
            BTreeMap::from([(n("-2"), "c".to_string()), (n("-1"), "m".to_string())]),
            BTreeMap::from([
                (
                    n("-2"),
                    vm(&[("a", "A"), ("b", "B"), ("d", "D"), ("d2", "D"), ("h", "m")]),
                ),
                (n("-1"), vm(&[("A", "P"), ("B", "Q"), ("D", "R")])),
            ]),
        )
        .unwrap()
    }

    #[test]
    fn validate_examples() {
        let p = TreeOfBSets::single(
            ColorChain::Rationals,
            n("0"),
            BSet::path(&["a", "b"]).unwrap(),
        );
        assert!(p.is_ok());
        let star = TreeOfBSets::unchecked(
            ColorChain::Rationals,
            BTreeMap::from([(n("0"), BSet::star("e", &["x1", "x2", "x3"]).unwrap())]),
            BTreeMap::new(),
            BTreeMap::new(),
        );
        let rep = star.validate();
        assert!(rep.fails("leaf-linear"), "{rep}");
        assert!(e2().validate().ok());
        assert_eq!(e2().validate().to_string(), "ok");
        assert!(three_level().validate().ok());
    }

    #[test]
    fn validate_catches_broken_links() {
        let mut t = e2();
        t.g.get_mut(&n("1"))
            .unwrap()
            .insert("x3".into(), "X1".into());
        assert!(t.validate().fails("g-map"));
        let mut t = e2();
        t.f.insert(n("1"), "x1".into());
        assert!(t.validate().fails("f-bijection"));
        let mut t = e2();
        t.bsets.insert(n("0 | (1,1)"), BSet::singleton("z"));
        t.bsets.insert(n("0 | (1,2)"), BSet::singleton("z"));
        t.bsets.remove(&n("0"));
        assert!(t.validate().fails("meet-closed"));
        let mut t = e2();
        t.g.get_mut(&n("1")).unwrap().remove("x1");
        assert!(t.validate().fails("g-map"));
        let mut t = e2();
        t.bsets.insert(n("1"), BSet::path(&["X1", "X2"]).unwrap());
        assert!(t.validate().fails("g-map"));
        let mut t = e2();
        t.f.remove(&n("1"));
        assert!(t.validate().fails("links"));
    }

    #[test]
    fn g_composite_examples() {
        let t = e2();
        let g = t.g_composite(&n("0"), &n("1")).unwrap();
        assert_eq!(g.get("x1"), Some(&"X1".to_string()));
        assert_eq!(g.get("e"), None);
        let id = t.g_composite(&n("1"), &n("1")).unwrap();
        assert!(id.iter().all(|(k, v)| k == v));
        assert!(matches!(
            t.g_composite(&n("1"), &n("0")),
            Err(Error::NotBelow(_))
        ));
    }

    #[test]
    fn g_composite_is_associative_and_fibres_are_unions_of_branches() {
        let t = three_level();
        let (r, s, u) = (n("-3"), n("-2"), n("-1"));
        let rs = t.g_composite(&r, &s).unwrap();
        let su = t.g_composite(&s, &u).unwrap();
        let ru = t.g_composite(&r, &u).unwrap();
        for v in t.bset(&r).unwrap().vertices() {
            let stepwise = rs.get(v).and_then(|w| su.get(w));
            assert_eq!(ru.get(v), stepwise, "at {v}");
        }
        // c = f_r(u) is excluded; fibres of g_ru are unions of branches at c
        assert_eq!(ru.get("c"), None);
        let branches = t.bset(&r).unwrap().branches_at("c").unwrap();
        for w in ru.values() {
            let fibre: BTreeSet<String> = ru
                .iter()
                .filter(|(_, x)| *x == w)
                .map(|(k, _)| k.clone())
                .collect();
            assert!(branches
                .iter()
                .filter(|b| !b.is_disjoint(&fibre))
                .all(|b| b.is_subset(&fibre)));
        }
        assert_eq!(ru.get("d2"), Some(&"R".to_string()));
    }

    #[test]
    fn classes() {
        let t = e2();
        assert_eq!(t.class_of("x1", &n("0")).unwrap(), Some(set(&["x1"])));
        assert_eq!(t.class_of("x1", &n("1")).unwrap(), Some(set(&["x1"])));
        assert_eq!(t.class_of("e", &n("1")).unwrap(), None);
        assert!(t.class_of("zz", &n("1")).is_err());
        assert!(t.class_of("e", &n("5")).is_err());
        let t3 = three_level();
        assert_eq!(t3.class_of("d", &n("-1")).unwrap(), Some(set(&["d", "d2"])));
    }

    #[test]
    fn restriction() {
        let t = e2();
        assert_eq!(t.restrict_above(&n("0")).unwrap(), t);
        let up = t.restrict_above(&n("1")).unwrap();
        assert!(up.validate().ok());
        assert_eq!(up.node_count(), 1);
        assert_eq!(up.root_bset(), &BSet::path(&["X1", "X2", "X3"]).unwrap());
        for tree in [e2(), three_level()] {
            let r = tree.root();
            for s in tree.nodes() {
                let up = tree.restrict_above(s).unwrap();
                assert!(up.validate().ok());
                let g = tree.g_composite(&r, s).unwrap();
                let pushed = tree.compute_l().map_domain(|v| g.get(v).cloned());
                assert_eq!(pushed.triples, up.compute_l().triples, "above {s}");
            }
        }
    }

    #[test]
    fn l_examples() {
        let p = TreeOfBSets::single(
            ColorChain::Rationals,
            n("0"),
            BSet::path(&["a", "b", "c"]).unwrap(),
        )
        .unwrap();
        let l = p.compute_l();
        assert_eq!(
            l.triples,
            BTreeSet::from([
                ("b".into(), "a".into(), "c".into()),
                ("b".into(), "c".into(), "a".into()),
            ])
        );
        let ab = TreeOfBSets::single(
            ColorChain::Rationals,
            n("0"),
            BSet::path(&["a", "b"]).unwrap(),
        )
        .unwrap();
        assert!(ab.compute_l().is_empty());
        let l = e2().compute_l();
        let mut want = LSet::new(set(&["e", "x1", "x2", "x3"]));
        for (i, j) in [("x1", "x2"), ("x1", "x3"), ("x2", "x3")] {
            want.insert_pair("e", i, j);
        }
        want.insert_pair("x2", "x1", "x3");
        assert_eq!(l, want);
        assert!(l.validate().is_ok());
    }

    #[test]
    fn witnesses() {
        let t = e2();
        assert_eq!(t.witness_node("e", "x1", "x2").unwrap(), n("0"));
        assert_eq!(t.witness_node("x2", "x1", "x3").unwrap(), n("1"));
        assert!(matches!(
            t.witness_node("x1", "x2", "x3"),
            Err(Error::NotInL(_))
        ));
        assert!(matches!(
            t.witness_node("x1", "e", "x3"),
            Err(Error::NotInL(_))
        ));
        let t3 = three_level();
        let l = t3.compute_l();
        for (a, b, c) in &l.triples {
            let w = t3.witness_node(a, b, c).unwrap();
            let scan: Vec<&AmbientNode> = t3
                .nodes()
                .filter(|s| {
                    let g = t3.g_composite(&t3.root(), s).unwrap();
                    match (g.get(a), g.get(b), g.get(c)) {
                        (Some(x), Some(y), Some(z)) if x != y && y != z && x != z => {
                            t3.bset(s).unwrap().between(x, y, z).unwrap()
                        }
                        _ => false,
                    }
                })
                .collect();
            assert_eq!(scan, vec![&w]);
        }
    }

    #[test]
    fn pre_sets() {
        let t = e2();
        assert_eq!(t.pre_set(&n("0")).unwrap(), set(&["e", "x1", "x2", "x3"]));
        assert_eq!(t.pre_set(&n("1")).unwrap(), set(&["x1", "x2", "x3"]));
        assert_eq!(
            t.class_partition(&n("1")).unwrap(),
            vec![set(&["x1"]), set(&["x2"]), set(&["x3"])]
        );
        assert_eq!(t.pre_branch(&n("1"), "X2", "X1").unwrap(), set(&["x1"]));
        assert_eq!(
            t.pre_branch(&n("0"), "x1", "e").unwrap(),
            set(&["e", "x2", "x3"])
        );
        let t3 = three_level();
        for s in t3.nodes() {
            for u in t3.nodes().filter(|u| s.leq_unchecked(u)) {
                let ps = t3.pre_set(s).unwrap();
                let pu = t3.pre_set(u).unwrap();
                assert!(pu.is_subset(&ps));
                for x in &pu {
                    let cs = t3.class_of(x, s).unwrap().unwrap();
                    let cu = t3.class_of(x, u).unwrap().unwrap();
                    assert!(cs.is_subset(&cu));
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let t = e2();
        let text = t.to_text();
        assert_eq!(
            text,
            "TOB v1 chain=Rationals\nnode 0\nvertices e x1 x2 x3\nedges e-x1 e-x2 e-x3\nf 1 -> e\ng 1: x1->X1 x2->X2 x3->X3\nnode 1\nvertices X1 X2 X3\nedges X1-X2 X2-X3\n"
        );
        assert_eq!(TreeOfBSets::parse(&text).unwrap(), t);
        let t3 = three_level();
        assert_eq!(TreeOfBSets::parse(&t3.to_text()).unwrap(), t3);
    }

    #[test]
    fn fixtures_match_e2() {
        let t = TreeOfBSets::parse(include_str!("../fixtures/e2.tob")).unwrap();
        assert_eq!(t, e2());
        let l = LSet::parse(include_str!("../fixtures/e2.lset")).unwrap();
        assert_eq!(l, e2().compute_l());
    }

    #[test]
    fn parser_rejects_bad_input() {
        assert!(matches!(TreeOfBSets::parse(""), Err(Error::Parse { .. })));
        assert!(matches!(
            TreeOfBSets::parse("TOB v2 chain=OmegaStar\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let bad = "TOB v1 chain=Rationals\nnode 0\nvertices e x1 x2 x3\nedges e-x1 e-x2 e-x3\n";
        assert!(matches!(TreeOfBSets::parse(bad), Err(Error::Invalid(_))));
        let cyc = "TOB v1 chain=Rationals\nnode 0\nvertices a b c\nedges a-b b-c c-a\n";
        assert!(matches!(
            TreeOfBSets::parse(cyc),
            Err(Error::Parse { line: 4, .. })
        ));
        let misplaced = e2()
            .to_text()
            .replace("f 1 -> e\ng 1: x1->X1 x2->X2 x3->X3\n", "")
            + "f 1 -> e\n";
        assert!(matches!(
            TreeOfBSets::parse(&misplaced),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn dot_export_mentions_every_node() {
        let d = e2().to_dot();
        assert!(d.starts_with("digraph tob {"));
        assert!(d.contains("n0 -> n1 [label=\"e\"]"));
        assert!(d.contains("cluster_1"));
    }
}
