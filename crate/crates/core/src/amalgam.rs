//! One-point extensions and their amalgamation, decomposition of strong extensions into
//! one-point steps, general amalgamation, and joint embedding.
//!
//! Every construction keeps the base structure `A` literally: its nodes stay where they are and
//! its vertices keep their names. New material from the first extension is renamed or moved into
//! fresh cones only when it would collide with the second.

use std::collections::{BTreeMap, BTreeSet};

use crate::ambient::{AmbientNode, Cone};
use crate::bset::{BSet, FRESH_PREFIX};
use crate::error::{Error, Result};
use crate::forest::{TreeOfBSets, VertexMap};
use crate::morphisms::{is_strong_substructure, l_iso_to_arboreal, ArborealMorphism, MorphismKind};

/// Recursion budget for general amalgamation.
const MAX_DEPTH: usize = 48;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtensionKind {
    /// A new root strictly below the old one, carrying a star centred at `hub`.
    Star { root: AmbientNode, hub: String },
    /// `e` hangs off `u`, a leaf (or the only vertex) of the old root B-set.
    Leaf { e: String, u: String },
    /// `e` subdivides the edge `u`-`v`; `u < v`.
    Dyadic { e: String, u: String, v: String },
    /// `e` hangs off the dyadic vertex `u`, which becomes a ramification point.
    Ternary { e: String, u: String },
    /// `e` hangs off the ramification point `u`.
    Ramification { e: String, u: String },
}

impl ExtensionKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ExtensionKind::Star { .. } => "Star",
            ExtensionKind::Leaf { .. } => "Leaf",
            ExtensionKind::Dyadic { .. } => "Dyadic",
            ExtensionKind::Ternary { .. } => "Ternary",
            ExtensionKind::Ramification { .. } => "Ramification",
        }
    }

    /// The added root vertex; for a star, its hub.
    pub fn new_vertex(&self) -> &str {
        match self {
            ExtensionKind::Star { hub, .. } => hub,
            ExtensionKind::Leaf { e, .. }
            | ExtensionKind::Dyadic { e, .. }
            | ExtensionKind::Ternary { e, .. }
            | ExtensionKind::Ramification { e, .. } => e,
        }
    }

    /// Old root vertices the new one is joined to; empty for a star.
    pub fn attachment(&self) -> BTreeSet<String> {
        match self {
            ExtensionKind::Star { .. } => BTreeSet::new(),
            ExtensionKind::Dyadic { u, v, .. } => BTreeSet::from([u.clone(), v.clone()]),
            ExtensionKind::Leaf { u, .. }
            | ExtensionKind::Ternary { u, .. }
            | ExtensionKind::Ramification { u, .. } => BTreeSet::from([u.clone()]),
        }
    }

    /// Repeats a root extension on `b` under the name `name`.
    fn attach(&self, b: &mut BSet, name: &str) -> Result<()> {
        match self {
            ExtensionKind::Star { .. } => Err(Error::Other("a star does not attach".into())),
            ExtensionKind::Dyadic { u, v, .. } => b.subdivide(u, v, name),
            ExtensionKind::Leaf { u, .. }
            | ExtensionKind::Ternary { u, .. }
            | ExtensionKind::Ramification { u, .. } => b.add_leaf(u, name),
        }
    }
}

impl std::fmt::Display for ExtensionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtensionKind::Star { root, hub } => write!(f, "Star(root={root} hub={hub})"),
            ExtensionKind::Leaf { e, u } => write!(f, "Leaf({e} on {u})"),
            ExtensionKind::Dyadic { e, u, v } => write!(f, "Dyadic({e} between {u},{v})"),
            ExtensionKind::Ternary { e, u } => write!(f, "Ternary({e} on {u})"),
            ExtensionKind::Ramification { e, u } => write!(f, "Ramification({e} on {u})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmalgamResult {
    pub amalgam: TreeOfBSets,
    pub emb1: ArborealMorphism,
    pub emb2: ArborealMorphism,
    pub over: ArborealMorphism,
}

impl AmalgamResult {
    /// Validates the amalgam, checks the three embeddings and that the square commutes.
    pub fn verify(&self, a: &TreeOfBSets, e1: &TreeOfBSets, e2: &TreeOfBSets) -> Result<()> {
        self.amalgam.validate().into_result()?;
        for (name, m, src) in [
            ("emb1", &self.emb1, e1),
            ("emb2", &self.emb2, e2),
            ("over", &self.over, a),
        ] {
            m.check(src, &self.amalgam)
                .into_result()
                .map_err(|e| Error::BadMorphism(format!("{name}: {e}")))?;
        }
        let incl = ArborealMorphism::inclusion(a);
        for (name, m) in [("emb1", &self.emb1), ("emb2", &self.emb2)] {
            let via = incl.compose(m)?;
            if via.tau != self.over.tau || via.phi != self.over.phi {
                return Err(Error::BadMorphism(format!(
                    "square does not commute through {name}"
                )));
            }
        }
        Ok(())
    }

    fn swapped(self) -> AmalgamResult {
        AmalgamResult {
            emb1: self.emb2,
            emb2: self.emb1,
            ..self
        }
    }
}

fn embedding(
    tau: BTreeMap<AmbientNode, AmbientNode>,
    phi: BTreeMap<AmbientNode, VertexMap>,
) -> ArborealMorphism {
    ArborealMorphism {
        kind: MorphismKind::StrongEmbedding,
        tau,
        phi,
    }
}

fn as_embedding(m: ArborealMorphism) -> ArborealMorphism {
    ArborealMorphism {
        kind: MorphismKind::StrongEmbedding,
        ..m
    }
}

/// `•k` for the least `k` not in `avoid`.
fn fresh_name(avoid: &BTreeSet<String>) -> String {
    (0..)
        .map(|k| format!("{FRESH_PREFIX}{k}"))
        .find(|v| !avoid.contains(v))
        .unwrap()
}

fn keep_or_fresh(name: &str, avoid: &BTreeSet<String>) -> String {
    if avoid.contains(name) {
        fresh_name(avoid)
    } else {
        name.to_string()
    }
}

fn identity_on(b: &BSet) -> VertexMap {
    b.vertices().map(|v| (v.clone(), v.clone())).collect()
}

pub fn classify_extension(a: &TreeOfBSets, e: &TreeOfBSets) -> Result<ExtensionKind> {
    if !is_strong_substructure(a, e) {
        return Err(Error::NotStrong(
            "the base is not a strong substructure of the extension".into(),
        ));
    }
    kind_of(a, e)
}

/// `classify_extension` for an `e` already known to contain `a` strongly.
fn kind_of(a: &TreeOfBSets, e: &TreeOfBSets) -> Result<ExtensionKind> {
    let (ra, re) = (a.root(), e.root());
    let (ba, be) = (a.root_bset(), e.root_bset());
    if be.len() != ba.len() + 1 {
        return Err(Error::NotOnePoint(format!(
            "root B-sets have {} and {} vertices",
            ba.len(),
            be.len()
        )));
    }
    if re != ra {
        let hub = e.f_towards(&re, &ra)?.clone();
        let star = be.vertices().all(|v| {
            v == &hub || be.neighbours(v).map(|n| n.len() == 1 && n.contains(&hub)) == Ok(true)
        });
        let gc = e.g_composite(&re, &ra)?;
        let images: BTreeSet<&String> = gc.values().collect();
        if !star || gc.len() != ba.len() || images.len() != gc.len() {
            return Err(Error::NotOnePoint(format!(
                "new root {re} does not carry a star onto the old root"
            )));
        }
        return Ok(ExtensionKind::Star { root: re, hub });
    }
    let fresh: Vec<&String> = be.vertices().filter(|v| !ba.contains(v)).collect();
    if fresh.len() != 1 {
        return Err(Error::NotOnePoint(
            "root B-set is not the old one plus a point".into(),
        ));
    }
    let e_v = fresh[0].clone();
    let ns: Vec<String> = be.neighbours(&e_v)?.iter().cloned().collect();
    match ns.len() {
        1 => {
            let u = ns[0].clone();
            Ok(match ba.degree(&u)? {
                0 | 1 => ExtensionKind::Leaf { e: e_v, u },
                2 => ExtensionKind::Ternary { e: e_v, u },
                _ => ExtensionKind::Ramification { e: e_v, u },
            })
        }
        2 => Ok(ExtensionKind::Dyadic {
            e: e_v,
            u: ns[0].clone(),
            v: ns[1].clone(),
        }),
        n => Err(Error::NotStrong(format!("{e_v} has valency {n}"))),
    }
}

/// The isomorphism `e1 -> e2` fixing `a` and sending the new point to the new point, if any.
fn iso_over(a: &TreeOfBSets, e1: &TreeOfBSets, e2: &TreeOfBSets) -> Option<ArborealMorphism> {
    let (r1, r2, ra) = (e1.root(), e2.root(), a.root());
    let (b1, b2) = (e1.root_bset(), e2.root_bset());
    if r1 != r2 || b1.len() != b2.len() {
        return None;
    }
    let psi: VertexMap = if r1 == ra {
        let n1 = b1.vertices().find(|v| !a.root_bset().contains(v))?;
        let n2 = b2.vertices().find(|v| !a.root_bset().contains(v))?;
        b1.vertices()
            .map(|v| (v.clone(), if v == n1 { n2.clone() } else { v.clone() }))
            .collect()
    } else {
        let h1 = e1.f_towards(&r1, &ra).ok()?;
        let h2 = e2.f_towards(&r2, &ra).ok()?;
        let g1 = e1.g_composite(&r1, &ra).ok()?;
        let g2 = e2.g_composite(&r2, &ra).ok()?;
        let back: BTreeMap<&String, &String> = g2.iter().map(|(k, v)| (v, k)).collect();
        let mut psi = VertexMap::from([(h1.clone(), h2.clone())]);
        for (x, img) in &g1 {
            psi.insert(x.clone(), (*back.get(img)?).clone());
        }
        psi
    };
    let m = l_iso_to_arboreal(e1, e2, &psi).ok()?;
    let fixes = a.nodes().all(|t| {
        m.tau.get(t) == Some(t) && a.bsets[t].vertices().all(|v| m.phi[t].get(v) == Some(v))
    });
    fixes.then(|| as_embedding(m))
}

/// Completes each `g` by branch membership: a vertex with no value takes the value of any other
/// vertex in its branch at `f`. Stale keys are dropped.
fn fill_links(t: &mut TreeOfBSets) -> Result<()> {
    let kids: Vec<AmbientNode> = t.f.keys().cloned().collect();
    for c in kids {
        let p = t
            .parent(&c)
            .ok_or_else(|| Error::Invalid(format!("{c} has no parent")))?
            .clone();
        let b = t.bsets[&p].clone();
        let fv = t.f[&c].clone();
        let g = t.g.entry(c.clone()).or_default();
        g.retain(|k, _| b.contains(k) && *k != fv);
        for branch in b.branches_at(&fv)? {
            let val = branch
                .iter()
                .find_map(|x| g.get(x).cloned())
                .ok_or_else(|| {
                    Error::Invalid(format!(
                        "no value for the branch at {fv} containing {}",
                        branch.first().unwrap()
                    ))
                })?;
            for x in branch {
                g.entry(x).or_insert_with(|| val.clone());
            }
        }
    }
    Ok(())
}

type Link = (String, VertexMap);

/// Union of `e1` and `e2`, which share `a`. Explicit B-sets and links win; otherwise a node takes
/// whichever side changed it, and a link comes from any side containing both ends.
fn merge(
    a: &TreeOfBSets,
    e1: &TreeOfBSets,
    e2: &TreeOfBSets,
    bset_over: BTreeMap<AmbientNode, BSet>,
    link_over: BTreeMap<AmbientNode, Link>,
) -> Result<TreeOfBSets> {
    let nodes: BTreeSet<AmbientNode> = e1
        .nodes()
        .chain(e2.nodes())
        .chain(bset_over.keys())
        .cloned()
        .collect();
    let mut bsets = BTreeMap::new();
    for t in &nodes {
        let b = match (bset_over.get(t), e1.bsets.get(t), e2.bsets.get(t)) {
            (Some(b), _, _) => b.clone(),
            (None, Some(x), Some(y)) if x == y => x.clone(),
            (None, Some(x), Some(y)) => {
                let base = a.bsets.get(t);
                if base == Some(x) {
                    y.clone()
                } else if base == Some(y) {
                    x.clone()
                } else {
                    return Err(Error::Other(format!("both sides change B({t})")));
                }
            }
            (None, Some(x), None) | (None, None, Some(x)) => x.clone(),
            (None, None, None) => unreachable!("node comes from one side"),
        };
        bsets.insert(t.clone(), b);
    }
    let mut out = TreeOfBSets::unchecked(e2.chain.clone(), bsets, BTreeMap::new(), BTreeMap::new());
    let root = out.root();
    for t in nodes.iter().filter(|t| **t != root) {
        let p = out
            .parent(t)
            .ok_or_else(|| Error::Invalid(format!("{t} has no parent")))?
            .clone();
        if let Some((fv, g)) = link_over.get(t) {
            out.f.insert(t.clone(), fv.clone());
            out.g.insert(t.clone(), g.clone());
            continue;
        }
        let mut fv: Option<String> = None;
        let mut g = VertexMap::new();
        for e in [e1, e2] {
            if !(e.contains(t) && e.contains(&p)) {
                continue;
            }
            let v = e.f_towards(&p, t)?.clone();
            if fv.as_ref().is_some_and(|w| *w != v) {
                return Err(Error::Other(format!("sides disagree on f at {t}")));
            }
            for (k, val) in e.g_composite(&p, t)? {
                if let Some(prev) = g.insert(k.clone(), val.clone()) {
                    if prev != val {
                        return Err(Error::Other(format!("sides disagree on g at {t}")));
                    }
                }
            }
            fv = Some(v);
        }
        let fv = fv.ok_or_else(|| Error::Other(format!("no side links {p} to {t}")))?;
        out.f.insert(t.clone(), fv);
        out.g.insert(t.clone(), g);
    }
    fill_links(&mut out)?;
    out.validate().into_result()?;
    Ok(out)
}

/// Renames nodes and vertices of `d` along `sigma` and `rho`.
fn relabel(
    d: &TreeOfBSets,
    sigma: &BTreeMap<AmbientNode, AmbientNode>,
    rho: &BTreeMap<AmbientNode, VertexMap>,
) -> Result<TreeOfBSets> {
    let mut bsets = BTreeMap::new();
    let mut f = BTreeMap::new();
    let mut g = BTreeMap::new();
    for (t, b) in &d.bsets {
        bsets.insert(sigma[t].clone(), b.rename(&rho[t])?);
    }
    for (t, v) in &d.f {
        let p = d.parent(t).expect("non-root");
        f.insert(sigma[t].clone(), rho[p][v].clone());
        g.insert(
            sigma[t].clone(),
            d.g[t]
                .iter()
                .map(|(k, x)| (rho[p][k].clone(), rho[t][x].clone()))
                .collect(),
        );
    }
    Ok(TreeOfBSets::unchecked(d.chain.clone(), bsets, f, g))
}

/// A copy of `d` in which the image of `m: base -> d` is `base` itself.
///
/// Nodes below an image node keep their colour under the image; the rest keep their cone unless
/// it would meet `base` or `avoid`, in which case the cone moves to a fresh branch. Vertices
/// outside the image keep their names unless taken at the same node.
pub(crate) fn transport(
    base: &TreeOfBSets,
    m: &ArborealMorphism,
    d: &TreeOfBSets,
    avoid: Option<&TreeOfBSets>,
) -> Result<(TreeOfBSets, ArborealMorphism)> {
    let inv: BTreeMap<&AmbientNode, &AmbientNode> = m.tau.iter().map(|(b, x)| (x, b)).collect();
    let mut occupied: BTreeSet<AmbientNode> = base.nodes().cloned().collect();
    if let Some(av) = avoid {
        occupied.extend(av.nodes().cloned());
    }
    let mut order: Vec<&AmbientNode> = d.nodes().collect();
    order.sort_by(|x, y| x.colour().cmp(y.colour()).then(x.cmp(y)));
    let mut sigma: BTreeMap<AmbientNode, AmbientNode> = BTreeMap::new();
    let mut groups: BTreeMap<(AmbientNode, Cone), Option<u64>> = BTreeMap::new();
    let mut next_index: BTreeMap<AmbientNode, u64> = BTreeMap::new();
    for x in order {
        if let Some(b) = inv.get(x) {
            sigma.insert(x.clone(), (*b).clone());
            continue;
        }
        let up = m
            .tau
            .values()
            .filter(|y| x.leq_unchecked(y))
            .min_by(|p, q| p.colour().cmp(q.colour()));
        if let Some(y) = up {
            sigma.insert(x.clone(), inv[y].below(x.colour())?);
            continue;
        }
        let q = m
            .tau
            .values()
            .map(|y| x.meet_unchecked(y))
            .max_by(|p, q| p.colour().cmp(q.colour()))
            .ok_or_else(|| Error::Other("empty embedding".into()))?;
        let sq = sigma
            .get(&q)
            .ok_or_else(|| Error::Invalid(format!("{q} is not a node")))?
            .clone();
        let cone = x.cone_at(&q).expect("x lies above q");
        let key = (q.clone(), cone);
        if !groups.contains_key(&key) {
            let clash = sq != q || occupied.iter().any(|o| o.cone_at(&q) == Some(cone));
            let idx = if clash {
                let n = next_index.entry(sq.clone()).or_insert_with(|| {
                    AmbientNode::max_branch_index(&sq, occupied.iter().chain(d.nodes()))
                        .map_or(1, |k| k + 1)
                });
                *n += 1;
                Some(*n - 1)
            } else {
                None
            };
            groups.insert(key.clone(), idx);
        }
        let target = match groups[&key] {
            None => x.clone(),
            Some(idx) => x
                .transplant(&q, &sq, idx)
                .ok_or_else(|| Error::Other(format!("cannot move {x}")))?,
        };
        sigma.insert(x.clone(), target);
    }
    let mut rho = BTreeMap::new();
    for (x, b) in &d.bsets {
        let y = &sigma[x];
        let mut taken: BTreeSet<String> = base
            .bsets
            .get(y)
            .map(|b| b.vertex_set())
            .unwrap_or_default();
        if let Some(bb) = avoid.and_then(|av| av.bsets.get(y)) {
            taken.extend(bb.vertex_set());
        }
        let mut map = VertexMap::new();
        if let Some(src) = inv.get(x) {
            for (v, w) in &m.phi[*src] {
                map.insert(w.clone(), v.clone());
            }
        }
        let mut used: BTreeSet<String> = map.values().cloned().collect();
        for w in b.vertices() {
            if map.contains_key(w) {
                continue;
            }
            let name = if taken.contains(w) || used.contains(w) {
                let mut all = taken.clone();
                all.extend(used.iter().cloned());
                all.extend(b.vertex_set());
                fresh_name(&all)
            } else {
                w.clone()
            };
            used.insert(name.clone());
            map.insert(w.clone(), name);
        }
        rho.insert(x.clone(), map);
    }
    let out = relabel(d, &sigma, &rho)?;
    Ok((
        out,
        ArborealMorphism {
            kind: MorphismKind::Isomorphism,
            tau: sigma,
            phi: rho,
        },
    ))
}

/// Amalgamates two one-point extensions of `a`.
pub fn amalgamate_one_point(
    a: &TreeOfBSets,
    e1: &TreeOfBSets,
    e2: &TreeOfBSets,
) -> Result<AmalgamResult> {
    let k1 = classify_extension(a, e1)?;
    let k2 = classify_extension(a, e2)?;
    let res = one_point_kinds(a, e1, &k1, e2, &k2)?;
    res.verify(a, e1, e2)
        .map_err(|e| Error::Other(format!("amalgam of {k1} and {k2} failed: {e}")))?;
    Ok(res)
}

/// One-point amalgamation without the final check, for callers that check the end result.
fn one_point_unchecked(
    a: &TreeOfBSets,
    e1: &TreeOfBSets,
    e2: &TreeOfBSets,
) -> Result<AmalgamResult> {
    let k1 = kind_of(a, e1)?;
    let k2 = kind_of(a, e2)?;
    one_point_kinds(a, e1, &k1, e2, &k2)
}

fn one_point_kinds(
    a: &TreeOfBSets,
    e1: &TreeOfBSets,
    k1: &ExtensionKind,
    e2: &TreeOfBSets,
    k2: &ExtensionKind,
) -> Result<AmalgamResult> {
    // an isomorphism over `a` fixes the neighbours of the new point
    let same = k1.tag() == k2.tag() && k1.attachment() == k2.attachment();
    match same.then(|| iso_over(a, e1, e2)).flatten() {
        Some(iso) => Ok(AmalgamResult {
            amalgam: e2.clone(),
            emb1: iso,
            emb2: ArborealMorphism::inclusion(e2),
            over: ArborealMorphism::inclusion(a),
        }),
        None => one_point_case(a, e1, k1, e2, k2),
    }
}

fn one_point_case(
    a: &TreeOfBSets,
    e1: &TreeOfBSets,
    k1: &ExtensionKind,
    e2: &TreeOfBSets,
    k2: &ExtensionKind,
) -> Result<AmalgamResult> {
    use ExtensionKind::*;
    match (k1, k2) {
        (Star { root: r1, .. }, Star { root: r2, .. }) => {
            if r1.colour() == r2.colour() {
                Err(Error::Other(
                    "stars of one colour are isomorphic over the base".into(),
                ))
            } else if r1.colour() < r2.colour() {
                star_below_star(a, e1, e2)
            } else {
                Ok(star_below_star(a, e2, e1)?.swapped())
            }
        }
        (Star { .. }, _) => star_below_root(a, e1, e2),
        (_, Star { .. }) => Ok(star_below_root(a, e2, e1)?.swapped()),
        _ if k1.attachment() != k2.attachment() => disjoint(a, e1, k1, e2),
        (Ternary { u, .. }, Ternary { .. }) => ternary_pair(a, e1, e2, u),
        (Ramification { u, .. }, Ramification { .. }) => ramification_pair(a, e1, e2, u),
        _ => Err(Error::Other(format!(
            "{k1} and {k2} share an attachment but are not isomorphic"
        ))),
    }
}

/// Both roots drop; `e1`'s root is lower and receives an extra leaf for `e2`'s hub.
fn star_below_star(a: &TreeOfBSets, e1: &TreeOfBSets, e2: &TreeOfBSets) -> Result<AmalgamResult> {
    let (ra, r1, r2) = (a.root(), e1.root(), e2.root());
    let h1 = e1.f_towards(&r1, &ra)?.clone();
    let h2 = e2.f_towards(&r2, &ra)?.clone();
    let mut b = e1.bsets[&r1].clone();
    let n = keep_or_fresh(&h2, &b.vertex_set());
    b.add_leaf(&h1, n.clone())?;
    let g1 = e1.g_composite(&r1, &ra)?;
    let g2 = e2.g_composite(&r2, &ra)?;
    let back: BTreeMap<&String, &String> = g2.iter().map(|(k, v)| (v, k)).collect();
    let mut link: VertexMap = g1
        .iter()
        .map(|(x, img)| (x.clone(), back[img].clone()))
        .collect();
    link.insert(n, h2);
    let amalgam = merge(
        a,
        e1,
        e2,
        BTreeMap::from([(r1, b)]),
        BTreeMap::from([(r2, (h1, link))]),
    )?;
    Ok(AmalgamResult {
        amalgam,
        emb1: ArborealMorphism::inclusion(e1),
        emb2: ArborealMorphism::inclusion(e2),
        over: ArborealMorphism::inclusion(a),
    })
}

/// `e1` drops the root, `e2` extends it: the star goes below `e2` with a leaf for its new point.
fn star_below_root(a: &TreeOfBSets, e1: &TreeOfBSets, e2: &TreeOfBSets) -> Result<AmalgamResult> {
    let (ra, r1) = (a.root(), e1.root());
    let h1 = e1.f_towards(&r1, &ra)?.clone();
    let new2 = e2
        .root_bset()
        .vertices()
        .find(|v| !a.root_bset().contains(v))
        .ok_or_else(|| Error::NotOnePoint("second extension adds no root vertex".into()))?
        .clone();
    let mut b = e1.bsets[&r1].clone();
    let n = keep_or_fresh(&new2, &b.vertex_set());
    b.add_leaf(&h1, n.clone())?;
    let mut link = e1.g_composite(&r1, &ra)?;
    link.insert(n, new2);
    let amalgam = merge(
        a,
        e1,
        e2,
        BTreeMap::from([(r1, b)]),
        BTreeMap::from([(ra, (h1, link))]),
    )?;
    Ok(AmalgamResult {
        amalgam,
        emb1: ArborealMorphism::inclusion(e1),
        emb2: ArborealMorphism::inclusion(e2),
        over: ArborealMorphism::inclusion(a),
    })
}

/// Root extensions attached at different places: the union.
fn disjoint(
    a: &TreeOfBSets,
    e1: &TreeOfBSets,
    k1: &ExtensionKind,
    e2: &TreeOfBSets,
) -> Result<AmalgamResult> {
    let r = a.root();
    let (e1p, iso) = transport(a, &ArborealMorphism::inclusion(a), e1, Some(e2))?;
    let e1n = iso.phi[&r][k1.new_vertex()].clone();
    let mut b = e2.root_bset().clone();
    k1.attach(&mut b, &e1n)?;
    let amalgam = merge(a, &e1p, e2, BTreeMap::from([(r, b)]), BTreeMap::new())?;
    Ok(AmalgamResult {
        amalgam,
        emb1: as_embedding(iso),
        emb2: ArborealMorphism::inclusion(e2),
        over: ArborealMorphism::inclusion(a),
    })
}

/// Where `e` sits on the 3-point path through `x` and `y`: 0 beyond `x`, 2 between, 4 beyond `y`.
fn position(b: &BSet, x: &str, y: &str, e: &str) -> Result<u8> {
    Ok(if b.between(x, e, y)? {
        0
    } else if b.between(e, x, y)? {
        2
    } else {
        4
    })
}

fn child_at<'a>(t: &'a TreeOfBSets, s: &AmbientNode, v: &str) -> Result<&'a AmbientNode> {
    t.children(s)
        .into_iter()
        .find(|c| t.f[*c] == v)
        .ok_or_else(|| Error::Invalid(format!("no child of {s} at {v}")))
}

fn new_root_vertex(a: &TreeOfBSets, e: &TreeOfBSets) -> Result<String> {
    e.root_bset()
        .vertices()
        .find(|v| !a.root_bset().contains(v))
        .cloned()
        .ok_or_else(|| Error::NotOnePoint("no new root vertex".into()))
}

/// Both extensions make the dyadic `u` ternary.
fn ternary_pair(
    a: &TreeOfBSets,
    e1: &TreeOfBSets,
    e2: &TreeOfBSets,
    u: &str,
) -> Result<AmalgamResult> {
    let r = a.root();
    let s1 = child_at(e1, &r, u)?.clone();
    let s2 = child_at(e2, &r, u)?.clone();
    if s1.colour() > s2.colour() {
        return Ok(ternary_pair(a, e2, e1, u)?.swapped());
    }
    let ns: Vec<String> = a.root_bset().neighbours(u)?.iter().cloned().collect();
    let (x, y) = (&ns[0], &ns[1]);
    let (v1, v2) = (new_root_vertex(a, e1)?, new_root_vertex(a, e2)?);
    let g1 = &e1.g[&s1];
    let g2 = &e2.g[&s2];
    let (x1, y1, w1) = (&g1[x], &g1[y], &g1[&v1]);
    let (x2, y2, w2) = (&g2[x], &g2[y], &g2[&v2]);
    let p1 = position(&e1.bsets[&s1], x1, y1, w1)?;
    let mut out = e2.clone();
    let mut root_b = e2.root_bset().clone();
    let v1n = keep_or_fresh(&v1, &root_b.vertex_set());
    root_b.add_leaf(u, v1n.clone())?;
    let mut tau: BTreeMap<AmbientNode, AmbientNode> =
        e1.nodes().map(|t| (t.clone(), t.clone())).collect();
    let mut phi: BTreeMap<AmbientNode, VertexMap> = e1
        .bsets
        .iter()
        .map(|(t, b)| (t.clone(), identity_on(b)))
        .collect();
    phi.get_mut(&r).unwrap().insert(v1.clone(), v1n.clone());
    if s1.colour() == s2.colour() {
        // one node, a 4-point path extending both orders; e1's point first on ties
        let p2 = position(&e2.bsets[&s2], x2, y2, w2)?;
        let w1n = keep_or_fresh(w1, &e2.bsets[&s2].vertex_set());
        let mut items = [
            (1u8, 0u8, x2.clone()),
            (3, 0, y2.clone()),
            (p1, 0, w1n.clone()),
            (p2, 1, w2.clone()),
        ];
        items.sort();
        let path: Vec<String> = items.into_iter().map(|(_, _, v)| v).collect();
        out.bsets.insert(s2.clone(), BSet::path(&path)?);
        out.g.get_mut(&s2).unwrap().insert(v1n.clone(), w1n.clone());
        out.bsets.insert(r.clone(), root_b);
        fill_links(&mut out)?;
        tau.insert(s1.clone(), s2.clone());
        phi.insert(
            s1.clone(),
            VertexMap::from([
                (x1.clone(), x2.clone()),
                (y1.clone(), y2.clone()),
                (w1.clone(), w1n),
            ]),
        );
    } else {
        // s1 goes below s2 with a 5-point B-set; `aux` is the extra root point
        let mut taken = root_b.vertex_set();
        let aux = fresh_name(&taken);
        taken.insert(aux.clone());
        root_b.add_leaf(u, aux.clone())?;
        let mut local: BTreeSet<String> = [x1, y1, w1].into_iter().cloned().collect();
        let n2 = fresh_name(&local);
        local.insert(n2.clone());
        let ne = fresh_name(&local);
        let pair = |p: &str, q: &str| (p.to_string(), q.to_string());
        let mut edges = vec![pair(&ne, &n2)];
        let x_side = p1 != 4;
        match p1 {
            0 => edges.extend([pair(w1, x1), pair(x1, &ne), pair(&ne, y1)]),
            2 => edges.extend([pair(x1, w1), pair(w1, &ne), pair(&ne, y1)]),
            _ => edges.extend([pair(w1, y1), pair(y1, &ne), pair(&ne, x1)]),
        }
        let b_s1 = BSet::new([x1, y1, w1, &n2, &ne].map(|s| s.clone()), edges)?;
        let s1e = s2.below(s1.colour())?;
        let mut link1 = VertexMap::new();
        for v in root_b.vertices().filter(|v| *v != u) {
            let img = if *v == v1n {
                w1.clone()
            } else if *v == v2 {
                n2.clone()
            } else if *v == aux {
                ne.clone()
            } else if root_b.branch_containing(u, v)?.contains(x) {
                x1.clone()
            } else {
                y1.clone()
            };
            link1.insert(v.clone(), img);
        }
        let mut link2 = VertexMap::from([
            (x1.clone(), g2[x].clone()),
            (y1.clone(), g2[y].clone()),
            (n2.clone(), w2.clone()),
        ]);
        link2.insert(
            w1.clone(),
            if x_side { g2[x].clone() } else { g2[y].clone() },
        );
        out.bsets.insert(r.clone(), root_b);
        out.bsets.insert(s1e.clone(), b_s1);
        out.f.insert(s1e.clone(), u.to_string());
        out.g.insert(s1e.clone(), link1);
        out.f.insert(s2.clone(), ne);
        out.g.insert(s2.clone(), link2);
        fill_links(&mut out)?;
        tau.insert(s1.clone(), s1e);
    }
    Ok(AmalgamResult {
        amalgam: out,
        emb1: embedding(tau, phi),
        emb2: ArborealMorphism::inclusion(e2),
        over: ArborealMorphism::inclusion(a),
    })
}

/// Both extensions hang a point on the ramification point `u`.
fn ramification_pair(
    a: &TreeOfBSets,
    e1: &TreeOfBSets,
    e2: &TreeOfBSets,
    u: &str,
) -> Result<AmalgamResult> {
    let r = a.root();
    let s = child_at(a, &r, u)?.clone();
    let s1 = e1.child_towards(&r, &s)?;
    let s2 = e2.child_towards(&r, &s)?;
    match (s1 == s, s2 == s) {
        (true, true) => ramification_above(a, e1, e2, u, &s),
        (false, true) => nest_star(a, e1, e2, &s1, &s2, &s),
        (true, false) => Ok(nest_star(a, e2, e1, &s2, &s1, &s)?.swapped()),
        (false, false) => {
            if s1.colour() == s2.colour() {
                Err(Error::Other(
                    "stars of one colour below the same node are isomorphic".into(),
                ))
            } else if s1.colour() < s2.colour() {
                nest_star(a, e1, e2, &s1, &s2, &s)
            } else {
                Ok(nest_star(a, e2, e1, &s2, &s1, &s)?.swapped())
            }
        }
    }
}

/// `e1` has a star at `s1` below `s`; `t2` is `e2`'s child of the root towards `s` and lies
/// above `s1`. The star gains a leaf standing for `e2`'s new point.
fn nest_star(
    a: &TreeOfBSets,
    e1: &TreeOfBSets,
    e2: &TreeOfBSets,
    s1: &AmbientNode,
    t2: &AmbientNode,
    s: &AmbientNode,
) -> Result<AmalgamResult> {
    let r = a.root();
    let (e1p, iso) = transport(a, &ArborealMorphism::inclusion(a), e1, Some(e2))?;
    let s1p = iso.tau[s1].clone();
    let v1n = iso.phi[&r][&new_root_vertex(a, e1)?].clone();
    let v2 = new_root_vertex(a, e2)?;
    let u = e1p.f[&s1p].clone();
    let mut root_b = e2.root_bset().clone();
    root_b.add_leaf(&u, v1n.clone())?;
    let hub = e1p.f_towards(&s1p, s)?.clone();
    let mut b_s1 = e1p.bsets[&s1p].clone();
    let n = fresh_name(&b_s1.vertex_set());
    b_s1.add_leaf(&hub, n.clone())?;
    let g1 = e1p.g[&s1p].clone();
    let mut link1 = g1.clone();
    link1.insert(v2.clone(), n.clone());
    let g2t = e2.g_composite(&r, t2)?;
    let mut link2 = VertexMap::new();
    for (v, leaf) in &g1 {
        if a.root_bset().contains(v) && *leaf != hub {
            link2.insert(leaf.clone(), g2t[v].clone());
        }
    }
    link2.insert(n, g2t[&v2].clone());
    let amalgam = merge(
        a,
        &e1p,
        e2,
        BTreeMap::from([(r, root_b), (s1p.clone(), b_s1)]),
        BTreeMap::from([(s1p, (u, link1)), (t2.clone(), (hub, link2))]),
    )?;
    Ok(AmalgamResult {
        amalgam,
        emb1: as_embedding(iso),
        emb2: ArborealMorphism::inclusion(e2),
        over: ArborealMorphism::inclusion(a),
    })
}

/// Neither extension adds a node below `s`: amalgamate above `s`, then restore the root.
fn ramification_above(
    a: &TreeOfBSets,
    e1: &TreeOfBSets,
    e2: &TreeOfBSets,
    u: &str,
    s: &AmbientNode,
) -> Result<AmalgamResult> {
    let r = a.root();
    let inner = one_point_unchecked(
        &a.restrict_above(s)?,
        &e1.restrict_above(s)?,
        &e2.restrict_above(s)?,
    )?;
    let v1 = new_root_vertex(a, e1)?;
    let mut root_b = e2.root_bset().clone();
    let v1n = keep_or_fresh(&v1, &root_b.vertex_set());
    root_b.add_leaf(u, v1n.clone())?;
    let above = |t: &AmbientNode| s.leq_unchecked(t);
    let mut out = inner.amalgam.clone();
    for (t, b) in &e2.bsets {
        if !above(t) {
            out.bsets.insert(t.clone(), b.clone());
        }
    }
    for (t, v) in &e2.f {
        if !above(t) {
            out.f.insert(t.clone(), v.clone());
            out.g.insert(t.clone(), e2.g[t].clone());
        }
    }
    let g1 = &e1.g[s];
    let g2 = &e2.g[s];
    let mut link: VertexMap = g2
        .iter()
        .map(|(v, w)| (v.clone(), inner.emb2.phi[s][w].clone()))
        .collect();
    link.insert(v1n.clone(), inner.emb1.phi[s][&g1[&v1]].clone());
    // points the inner amalgam added on its own (an auxiliary point) need a branch at u
    let hit: BTreeSet<String> = link.values().cloned().collect();
    for z in inner.amalgam.bsets[s].vertices() {
        if !hit.contains(z) {
            let aux = fresh_name(&root_b.vertex_set());
            root_b.add_leaf(u, aux.clone())?;
            link.insert(aux, z.clone());
        }
    }
    out.bsets.insert(r.clone(), root_b);
    out.f.insert(s.clone(), u.to_string());
    out.g.insert(s.clone(), link);
    fill_links(&mut out)?;
    let lift = |e: &TreeOfBSets, m: &ArborealMorphism, rename: Option<(&String, &String)>| {
        let mut tau = BTreeMap::new();
        let mut phi = BTreeMap::new();
        for (t, b) in &e.bsets {
            if above(t) {
                tau.insert(t.clone(), m.tau[t].clone());
                phi.insert(t.clone(), m.phi[t].clone());
            } else {
                let mut id = identity_on(b);
                if let (true, Some((from, to))) = (*t == r, rename) {
                    id.insert(from.clone(), to.clone());
                }
                tau.insert(t.clone(), t.clone());
                phi.insert(t.clone(), id);
            }
        }
        embedding(tau, phi)
    };
    Ok(AmalgamResult {
        emb1: lift(e1, &inner.emb1, Some((&v1, &v1n))),
        emb2: lift(e2, &inner.emb2, None),
        over: ArborealMorphism::inclusion(a),
        amalgam: out,
    })
}

/// Working parts of a substructure under construction.
#[derive(Clone, Default)]
struct Parts {
    bsets: BTreeMap<AmbientNode, BSet>,
    f: BTreeMap<AmbientNode, String>,
    g: BTreeMap<AmbientNode, VertexMap>,
}

struct Inducer<'a> {
    e: &'a TreeOfBSets,
    base: Option<&'a TreeOfBSets>,
}

impl Inducer<'_> {
    /// Places `B(t)` induced on `v`, then for each ramification point picks the lowest workable
    /// node in its cone, backtracking on failure.
    fn grow(&self, t: &AmbientNode, v: &BTreeSet<String>, out: &mut Parts) -> bool {
        let Ok(b) = self.e.bsets[t].restrict(v) else {
            return false;
        };
        let required: Vec<&AmbientNode> = match self.base {
            Some(base) => {
                if let Some(bb) = base.bsets.get(t) {
                    if !bb.vertices().all(|x| v.contains(x)) {
                        return false;
                    }
                }
                base.nodes().filter(|n| t.tree_lt(n)).collect()
            }
            None => Vec::new(),
        };
        let ram = b.ramification_points();
        let mut req_at: BTreeMap<String, Vec<&AmbientNode>> = BTreeMap::new();
        for n in &required {
            let Ok(p) = self.e.f_towards(t, n) else {
                return false;
            };
            if !ram.contains(p) {
                return false;
            }
            req_at.entry(p.clone()).or_default().push(n);
        }
        out.bsets.insert(t.clone(), b.clone());
        for p in &ram {
            let bound = req_at.get(p).map(|ns| {
                ns.iter()
                    .skip(1)
                    .fold((*ns[0]).clone(), |acc, n| acc.meet_unchecked(n))
            });
            let kids: Vec<&AmbientNode> = self
                .e
                .children(t)
                .into_iter()
                .filter(|c| self.e.f.get(*c) == Some(p))
                .collect();
            let mut cands: Vec<&AmbientNode> = self
                .e
                .nodes()
                .filter(|w| {
                    kids.iter().any(|c| c.leq_unchecked(w))
                        && bound.as_ref().is_none_or(|m| w.leq_unchecked(m))
                })
                .collect();
            cands.sort_by(|x, y| {
                let top = |n: &AmbientNode| Some(n) != bound.as_ref();
                top(x)
                    .cmp(&top(y))
                    .then(x.colour().cmp(y.colour()))
                    .then(x.cmp(y))
            });
            let branches = b.branches_at(p).expect("vertex of b");
            let mut placed = false;
            for w in cands {
                let gc = self.e.g_composite(t, w).expect("t < w");
                let mut link = VertexMap::new();
                let mut images = BTreeSet::new();
                let mut ok = true;
                for br in &branches {
                    let vals: Option<BTreeSet<&String>> = br.iter().map(|x| gc.get(x)).collect();
                    match vals {
                        Some(vals) if vals.len() == 1 => {
                            let val = vals.into_iter().next().unwrap().clone();
                            if !images.insert(val.clone()) {
                                ok = false;
                                break;
                            }
                            for x in br {
                                link.insert(x.clone(), val.clone());
                            }
                        }
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let snapshot = out.clone();
                if self.grow(w, &images, out) {
                    out.f.insert(w.clone(), p.clone());
                    out.g.insert(w.clone(), link);
                    placed = true;
                    break;
                }
                *out = snapshot;
            }
            if !placed {
                return false;
            }
        }
        true
    }
}

/// A strong substructure of `e` rooted at `at` whose root B-set is induced on `s`. When `base` is
/// given, every node of `base` is kept and its B-sets are contained.
pub fn induced_substructure(
    e: &TreeOfBSets,
    at: &AmbientNode,
    s: &BTreeSet<String>,
    base: Option<&TreeOfBSets>,
) -> Option<TreeOfBSets> {
    let t = induce(e, at, s, base)?;
    if !is_strong_substructure(&t, e) || base.is_some_and(|b| !is_strong_substructure(b, &t)) {
        return None;
    }
    Some(t)
}

/// `induced_substructure` without the final strength checks. Restrictions are strong and links
/// are composites of `e`'s, so the result sits strongly in `e`; `base` sits strongly in it for
/// the same reason.
fn induce(
    e: &TreeOfBSets,
    at: &AmbientNode,
    s: &BTreeSet<String>,
    base: Option<&TreeOfBSets>,
) -> Option<TreeOfBSets> {
    if !e.contains(at) {
        return None;
    }
    let mut parts = Parts::default();
    let ind = Inducer { e, base };
    if !ind.grow(at, s, &mut parts) {
        return None;
    }
    let t = TreeOfBSets::unchecked(e.chain.clone(), parts.bsets, parts.f, parts.g);
    t.validate().ok().then_some(t)
}

/// The star step: `e`'s root below `a`'s, with each old root vertex represented by a neighbour
/// of the hub.
fn star_step(a: &TreeOfBSets, e: &TreeOfBSets) -> Result<TreeOfBSets> {
    let (ra, re) = (a.root(), e.root());
    let hub = e.f_towards(&re, &ra)?.clone();
    let gc = e.g_composite(&re, &ra)?;
    let b = &e.bsets[&re];
    let mut leaves = VertexMap::new();
    for target in a.root_bset().vertices() {
        let n = b
            .neighbours(&hub)?
            .iter()
            .find(|n| gc.get(*n) == Some(target))
            .ok_or_else(|| Error::NotStrong(format!("no neighbour of {hub} over {target}")))?;
        leaves.insert(n.clone(), target.clone());
    }
    let names: Vec<&String> = leaves.keys().collect();
    let mut out = a.clone();
    out.bsets.insert(re.clone(), BSet::star(&hub, &names)?);
    out.f.insert(ra.clone(), hub);
    out.g.insert(ra, leaves);
    out.validate().into_result()?;
    Ok(out)
}

/// A root step: one outside vertex joins the root, leaf and dyadic attachments first.
fn root_step(a: &TreeOfBSets, e: &TreeOfBSets) -> Result<TreeOfBSets> {
    let r = a.root();
    let ba = a.root_bset();
    let be = e.bset(&r)?;
    let mut cands = Vec::new();
    for x in be.vertices().filter(|x| !ba.contains(x)) {
        let mut s = ba.vertex_set();
        s.insert(x.clone());
        let Ok(rb) = be.restrict(&s) else {
            continue;
        };
        let ns = rb.neighbours(x)?;
        let rank = match ns.len() {
            2 => 0,
            1 => match ba.degree(ns.iter().next().unwrap())? {
                0 | 1 => 0,
                2 => 1,
                _ => 2,
            },
            _ => continue,
        };
        let near = be.neighbours(x)?.iter().any(|n| ba.contains(n));
        cands.push((!near, rank, x.clone(), s));
    }
    cands.sort();
    for (_, _, _, s) in cands {
        if let Some(t) = induce(e, &r, &s, Some(a)) {
            return Ok(t);
        }
    }
    Err(Error::Other(format!(
        "no one-point step from {} root vertices",
        ba.len()
    )))
}

fn step(a: &TreeOfBSets, e: &TreeOfBSets) -> Result<TreeOfBSets> {
    let (ra, re) = (a.root(), e.root());
    if re != ra {
        if a.root_bset().len() >= 3 {
            star_step(a, e)
        } else {
            root_step(a, &e.restrict_above(&ra)?)
        }
    } else if a.root_bset().len() == e.root_bset().len() {
        Err(Error::Other(
            "equal root B-sets but different structures".into(),
        ))
    } else {
        root_step(a, e)
    }
}

/// `a = A_0 < A_1 < ... < A_n = e`, each a one-point strong extension of the previous.
pub fn decompose(a: &TreeOfBSets, e: &TreeOfBSets) -> Result<Vec<TreeOfBSets>> {
    if !is_strong_substructure(a, e) {
        return Err(Error::NotStrong(
            "the base is not a strong substructure".into(),
        ));
    }
    chain_of_steps(a, e)
}

fn chain_of_steps(a: &TreeOfBSets, e: &TreeOfBSets) -> Result<Vec<TreeOfBSets>> {
    let mut out = vec![a.clone()];
    while out.last().unwrap() != e {
        let next = step(out.last().unwrap(), e)?;
        out.push(next);
    }
    Ok(out)
}

/// Amalgamates arbitrary strong extensions `e1`, `e2` of `a`.
pub fn amalgamate(a: &TreeOfBSets, e1: &TreeOfBSets, e2: &TreeOfBSets) -> Result<AmalgamResult> {
    if !is_strong_substructure(a, e2) {
        return Err(Error::NotStrong(
            "the base is not a strong substructure of the second".into(),
        ));
    }
    let steps = decompose(a, e1)?;
    let mut d = e2.clone();
    let mut over = ArborealMorphism::inclusion(a);
    let mut emb2 = ArborealMorphism::inclusion(e2);
    let mut cur = ArborealMorphism::inclusion(a);
    for w in steps.windows(2) {
        let (xi, xn) = (&w[0], &w[1]);
        let (dp, rho) = transport(xi, &cur, &d, None)?;
        let r = one_vs(xi, xn, &dp, 0)?;
        let to_e = rho.compose(&r.emb2)?;
        over = over.compose(&to_e)?;
        emb2 = emb2.compose(&to_e)?;
        cur = r.emb1;
        d = r.amalgam;
    }
    let res = AmalgamResult {
        amalgam: d,
        emb1: as_embedding(cur),
        emb2: as_embedding(emb2),
        over: as_embedding(over),
    };
    res.verify(a, e1, e2)?;
    Ok(res)
}

/// Amalgamates the one-point extension `x1` of `a` with an arbitrary extension `y`.
fn one_vs(
    a: &TreeOfBSets,
    x1: &TreeOfBSets,
    y: &TreeOfBSets,
    depth: usize,
) -> Result<AmalgamResult> {
    if depth > MAX_DEPTH {
        return Err(Error::Other("amalgamation recursion too deep".into()));
    }
    // `a` sits strongly in `y` by construction: the caller transports it there
    let ys = chain_of_steps(a, y)?;
    match ys.len() {
        1 => {
            return Ok(AmalgamResult {
                amalgam: x1.clone(),
                emb1: ArborealMorphism::inclusion(x1),
                emb2: ArborealMorphism::inclusion(y),
                over: ArborealMorphism::inclusion(a),
            })
        }
        2 => return one_point_unchecked(a, x1, y),
        _ => {}
    }
    let mut c = x1.clone();
    let mut emb_x = ArborealMorphism::inclusion(x1);
    let mut over = ArborealMorphism::inclusion(a);
    let mut nj = ArborealMorphism::inclusion(a);
    for w in ys.windows(2) {
        let (yj, yn) = (&w[0], &w[1]);
        let (cp, rho) = transport(yj, &nj, &c, None)?;
        let r = one_vs(yj, yn, &cp, depth + 1)?.swapped();
        let to_e = rho.compose(&r.emb1)?;
        emb_x = emb_x.compose(&to_e)?;
        over = over.compose(&to_e)?;
        nj = r.emb2;
        c = r.amalgam;
    }
    Ok(AmalgamResult {
        amalgam: c,
        emb1: as_embedding(emb_x),
        emb2: as_embedding(nj),
        over: as_embedding(over),
    })
}

/// Grows a single-node root to at least three vertices by leaf extensions.
fn pad(a: &TreeOfBSets) -> Result<TreeOfBSets> {
    let mut out = a.clone();
    let r = out.root();
    while out.bsets[&r].len() < 3 {
        let b = out.bsets.get_mut(&r).unwrap();
        let at = if b.len() == 1 {
            b.vertices().next().unwrap().clone()
        } else {
            b.leaves().into_iter().next_back().unwrap()
        };
        let name = fresh_name(&b.vertex_set());
        b.add_leaf(&at, name)?;
    }
    fill_links(&mut out)?;
    Ok(out)
}

/// Both structures above a new root coloured below their roots, which carries a double star.
pub fn joint_embed(
    a1: &TreeOfBSets,
    a2: &TreeOfBSets,
) -> Result<(TreeOfBSets, ArborealMorphism, ArborealMorphism)> {
    if a1.chain != a2.chain {
        return Err(Error::ChainMismatch(a1.chain.name(), a2.chain.name()));
    }
    let (p1, p2) = (pad(a1)?, pad(a2)?);
    let (r1, r2) = (p1.root(), p2.root());
    let c = p1.chain.color_below([r1.colour(), r2.colour()])?;
    let r = r1.below(&c)?;
    let q2 = r2.below(&c)?;
    let idx = AmbientNode::max_branch_index(&r, p1.nodes()).map_or(1, |k| k + 1);
    let mut tau2 = BTreeMap::new();
    for x in p2.nodes() {
        let moved = x
            .transplant(&q2, &r, idx)
            .ok_or_else(|| Error::Other(format!("cannot move {x}")))?;
        tau2.insert(x.clone(), moved);
    }
    let (m, n) = (p1.root_bset().len(), p2.root_bset().len());
    let names: Vec<String> = (0..m + n).map(|k| format!("{FRESH_PREFIX}{k}")).collect();
    let (h1, h2) = (names[0].clone(), names[1].clone());
    let xs = &names[2..m + 1];
    let ys = &names[m + 1..];
    let mut edges = vec![(h1.clone(), h2.clone())];
    edges.extend(xs.iter().map(|x| (h1.clone(), x.clone())));
    edges.extend(ys.iter().map(|y| (h2.clone(), y.clone())));
    let root_b = BSet::new(names.clone(), edges)?;
    let v1: Vec<&String> = p1.root_bset().vertices().collect();
    let v2: Vec<&String> = p2.root_bset().vertices().collect();
    let mut g1: VertexMap = xs
        .iter()
        .zip(&v1)
        .map(|(x, v)| (x.clone(), (*v).clone()))
        .collect();
    for z in ys.iter().chain([&h2]) {
        g1.insert(z.clone(), v1[m - 1].clone());
    }
    let mut g2: VertexMap = ys
        .iter()
        .zip(&v2)
        .map(|(y, v)| (y.clone(), (*v).clone()))
        .collect();
    for z in xs.iter().chain([&h1]) {
        g2.insert(z.clone(), v2[n - 1].clone());
    }
    let phi2: BTreeMap<AmbientNode, VertexMap> = p2
        .bsets
        .iter()
        .map(|(t, b)| (t.clone(), identity_on(b)))
        .collect();
    let moved = relabel(&p2, &tau2, &phi2)?;
    let mut out = p1.clone();
    out.bsets.extend(moved.bsets);
    out.f.extend(moved.f);
    out.g.extend(moved.g);
    out.bsets.insert(r.clone(), root_b);
    out.f.insert(r1.clone(), h1);
    out.g.insert(r1, g1);
    out.f.insert(tau2[&r2].clone(), h2);
    out.g.insert(tau2[&r2].clone(), g2);
    out.validate().into_result()?;
    let emb1 = ArborealMorphism::inclusion(a1);
    let emb2 = embedding(
        a2.nodes().map(|t| (t.clone(), tau2[t].clone())).collect(),
        a2.bsets
            .iter()
            .map(|(t, b)| (t.clone(), identity_on(b)))
            .collect(),
    );
    for (m, src) in [(&emb1, a1), (&emb2, a2)] {
        m.check(src, &out)
            .into_result()
            .map_err(|e| Error::Other(format!("joint embedding failed: {e}")))?;
    }
    Ok((out, emb1, emb2))
}
