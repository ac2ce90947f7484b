//! Arboreal isomorphisms and strong arboreal embeddings between trees of B-sets.
//!
//! All morphisms are internal: `tau` must preserve colours as well as order and meets.

use std::collections::{BTreeMap, BTreeSet};

use crate::ambient::AmbientNode;
use crate::bset::{BSet, Metric};
use crate::error::{Error, Result};
use crate::forest::{Report, TreeOfBSets, VertexMap};
use crate::lset::{LSet, Triple};

/// Largest L-domain for which automorphisms are enumerated.
pub const AUTOMORPHISM_GUARD: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MorphismKind {
    Isomorphism,
    StrongEmbedding,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArborealMorphism {
    pub kind: MorphismKind,
    pub tau: BTreeMap<AmbientNode, AmbientNode>,
    pub phi: BTreeMap<AmbientNode, VertexMap>,
}

fn identity_map(b: &BSet) -> VertexMap {
    b.vertices().map(|v| (v.clone(), v.clone())).collect()
}

impl ArborealMorphism {
    pub fn identity(a: &TreeOfBSets) -> ArborealMorphism {
        ArborealMorphism {
            kind: MorphismKind::Isomorphism,
            tau: a.nodes().map(|t| (t.clone(), t.clone())).collect(),
            phi: a
                .bsets
                .iter()
                .map(|(t, b)| (t.clone(), identity_map(b)))
                .collect(),
        }
    }

    /// Node-wise and vertex-wise inclusion of `a` into a larger tree.
    pub fn inclusion(a: &TreeOfBSets) -> ArborealMorphism {
        ArborealMorphism {
            kind: MorphismKind::StrongEmbedding,
            ..ArborealMorphism::identity(a)
        }
    }

    /// `then ∘ self`. The result is an isomorphism only if both are.
    pub fn compose(&self, then: &ArborealMorphism) -> Result<ArborealMorphism> {
        let mut tau = BTreeMap::new();
        let mut phi = BTreeMap::new();
        for (s, ts) in &self.tau {
            let tts = then
                .tau
                .get(ts)
                .ok_or_else(|| Error::BadMorphism(format!("{ts} outside the second domain")))?;
            tau.insert(s.clone(), tts.clone());
            let p1 = &self.phi[s];
            let p2 = &then.phi[ts];
            let mut m = VertexMap::new();
            for (x, y) in p1 {
                let z = p2
                    .get(y)
                    .ok_or_else(|| Error::BadMorphism(format!("{y} outside B({ts})")))?;
                m.insert(x.clone(), z.clone());
            }
            phi.insert(s.clone(), m);
        }
        let kind =
            if self.kind == MorphismKind::Isomorphism && then.kind == MorphismKind::Isomorphism {
                MorphismKind::Isomorphism
            } else {
                MorphismKind::StrongEmbedding
            };
        Ok(ArborealMorphism { kind, tau, phi })
    }

    pub fn inverse(&self) -> Result<ArborealMorphism> {
        if self.kind != MorphismKind::Isomorphism {
            return Err(Error::BadMorphism("only isomorphisms invert".into()));
        }
        let tau = self
            .tau
            .iter()
            .map(|(a, b)| (b.clone(), a.clone()))
            .collect();
        let phi = self
            .phi
            .iter()
            .map(|(s, m)| {
                (
                    self.tau[s].clone(),
                    m.iter().map(|(x, y)| (y.clone(), x.clone())).collect(),
                )
            })
            .collect();
        Ok(ArborealMorphism {
            kind: MorphismKind::Isomorphism,
            tau,
            phi,
        })
    }

    pub fn check(&self, a1: &TreeOfBSets, a2: &TreeOfBSets) -> Report {
        let mut r = Report::default();
        for s in a1.nodes() {
            match self.tau.get(s) {
                Some(t) if a2.contains(t) => {}
                Some(t) => r.push(
                    "tau-domain",
                    s,
                    format!("image {t} is not a node of the target"),
                ),
                None => r.push("tau-domain", s, "no image"),
            }
        }
        for s in self.tau.keys() {
            if !a1.contains(s) {
                r.push("tau-domain", s, "not a node of the source");
            }
        }
        if !r.ok() {
            return r;
        }
        let nodes: Vec<&AmbientNode> = a1.nodes().collect();
        for s in &nodes {
            if self.tau[*s].colour() != s.colour() {
                r.push(
                    "tau-colour",
                    s,
                    format!("sent to {} of another colour", self.tau[*s]),
                );
            }
            for t in &nodes {
                let (ts, tt) = (&self.tau[*s], &self.tau[*t]);
                if s.leq_unchecked(t) != ts.leq_unchecked(tt) {
                    r.push("tau-order", s, format!("order with {t} not preserved"));
                }
                if self.tau.get(&s.meet_unchecked(t)) != Some(&ts.meet_unchecked(tt)) {
                    r.push("tau-meet", s, format!("meet with {t} not preserved"));
                }
            }
        }
        if self.kind == MorphismKind::Isomorphism && self.tau.len() != a2.node_count() {
            r.push("tau-bijective", "-", "tau is not onto");
        }
        if !r.ok() {
            return r;
        }
        for s in &nodes {
            let ts = &self.tau[*s];
            let (b1, b2) = (&a1.bsets[*s], &a2.bsets[ts]);
            let Some(m) = self.phi.get(*s) else {
                r.push("phi-map", s, "missing");
                continue;
            };
            let keys: BTreeSet<&String> = m.keys().collect();
            let vals: BTreeSet<&String> = m.values().collect();
            if keys != b1.vertices().collect()
                || vals.len() != m.len()
                || !vals.iter().all(|v| b2.contains(v))
            {
                r.push(
                    "phi-map",
                    s,
                    format!("not an injection from B({s}) into B({ts})"),
                );
                continue;
            }
            match b1.rename(m).and_then(|img| img.is_strong_sub(b2)) {
                Ok(true) => {}
                _ => r.push("phi-strong", s, "image is not a strong substructure"),
            }
            if self.kind == MorphismKind::Isomorphism && vals.len() != b2.len() {
                r.push("phi-bijective", s, "not onto");
            }
        }
        if !r.ok() {
            return r;
        }
        for s in &nodes {
            for t in nodes.iter().filter(|t| s.tree_lt(t)) {
                let (ts, tt) = (&self.tau[*s], &self.tau[*t]);
                let lhs = &self.phi[*s][a1.f_towards(s, t).expect("s < t")];
                let rhs = a2.f_towards(ts, tt).expect("order preserved");
                if lhs != rhs {
                    r.push("coherence-f", s, format!("towards {t}: {lhs} vs {rhs}"));
                }
                let g1 = a1.g_composite(s, t).expect("s < t");
                let g2 = a2.g_composite(ts, tt).expect("order preserved");
                for x in a1.bsets[*s].vertices() {
                    let via_target = g2.get(&self.phi[*s][x]);
                    let via_source = g1.get(x).map(|y| &self.phi[*t][y]);
                    if via_target != via_source {
                        r.push("coherence-g", s, format!("towards {t} at {x}"));
                    }
                }
            }
        }
        r
    }

    /// The map on L-domains: each root vertex goes to the least vertex of the target root over
    /// its image at `tau(root)`.
    pub fn induced_l_map(&self, a1: &TreeOfBSets, a2: &TreeOfBSets) -> Result<VertexMap> {
        self.check(a1, a2)
            .into_result()
            .map_err(|e| Error::BadMorphism(e.to_string()))?;
        let r1 = a1.root();
        let r2 = a2.root();
        let gc = a2.g_composite(&r2, &self.tau[&r1])?;
        let mut out = VertexMap::new();
        for (a, img) in &self.phi[&r1] {
            let pre = gc
                .iter()
                .find(|(_, v)| *v == img)
                .map(|(k, _)| k.clone())
                .expect("g composite is onto");
            out.insert(a.clone(), pre);
        }
        Ok(out)
    }
}

/// Whether `small` is a strong substructure of `big` with inclusion maps.
pub fn is_strong_substructure(small: &TreeOfBSets, big: &TreeOfBSets) -> bool {
    ArborealMorphism::inclusion(small).check(small, big).ok()
}

fn preserves_l(l1: &LSet, l2: &LSet, psi: &VertexMap) -> bool {
    let vs: Vec<&String> = l1.domain.iter().collect();
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            for k in j + 1..vs.len() {
                let (a, b, c) = (vs[i], vs[j], vs[k]);
                let m1 = l1.middle(a, b, c).map(|m| psi[m].as_str());
                let m2 = l2.middle(&psi[a], &psi[b], &psi[c]);
                if m1 != m2 {
                    return false;
                }
            }
        }
    }
    true
}

/// Bijections `l1.domain -> l2.domain` carrying `l1` onto `l2`, in lexicographic order.
pub fn l_isomorphisms(l1: &LSet, l2: &LSet) -> Vec<VertexMap> {
    let src: Vec<&String> = l1.domain.iter().collect();
    let dst: Vec<&String> = l2.domain.iter().collect();
    let mut out = Vec::new();
    if src.len() != dst.len() {
        return out;
    }
    fn go(
        i: usize,
        src: &[&String],
        dst: &[&String],
        img: &mut Vec<usize>,
        l1: &LSet,
        l2: &LSet,
        out: &mut Vec<VertexMap>,
    ) {
        if i == src.len() {
            out.push(
                src.iter()
                    .zip(img.iter())
                    .map(|(a, &j)| ((*a).clone(), dst[j].clone()))
                    .collect(),
            );
            return;
        }
        for j in 0..dst.len() {
            if img.contains(&j) {
                continue;
            }
            let ok = (0..i).all(|p| {
                (p + 1..i).all(|q| {
                    let m1 = l1.middle(src[p], src[q], src[i]);
                    let m2 = l2.middle(dst[img[p]], dst[img[q]], dst[j]);
                    let m1_idx = m1.map(|m| {
                        if m == src[p] {
                            0
                        } else if m == src[q] {
                            1
                        } else {
                            2
                        }
                    });
                    let m2_idx = m2.map(|m| {
                        if m == dst[img[p]] {
                            0
                        } else if m == dst[img[q]] {
                            1
                        } else {
                            2
                        }
                    });
                    m1_idx == m2_idx
                })
            });
            if ok {
                img.push(j);
                go(i + 1, src, dst, img, l1, l2, out);
                img.pop();
            }
        }
    }
    go(0, &src, &dst, &mut Vec::new(), l1, l2, &mut out);
    out
}

/// Lifts an L-isomorphism to an arboreal isomorphism by climbing from the roots.
pub fn l_iso_to_arboreal(
    a1: &TreeOfBSets,
    a2: &TreeOfBSets,
    psi: &VertexMap,
) -> Result<ArborealMorphism> {
    let (l1, l2) = (a1.compute_l(), a2.compute_l());
    let keys: BTreeSet<&String> = psi.keys().collect();
    let vals: BTreeSet<&String> = psi.values().collect();
    if keys != l1.domain.iter().collect()
        || vals != l2.domain.iter().collect()
        || vals.len() != psi.len()
    {
        return Err(Error::NotLIso(
            "not a bijection between the L-domains".into(),
        ));
    }
    if !preserves_l(&l1, &l2, psi) {
        return Err(Error::NotLIso("L is not carried onto L".into()));
    }
    let r1 = a1.root();
    let r2 = a2.root();
    if a1.bsets[&r1].rename(psi)? != a2.bsets[&r2] {
        return Err(Error::NotLIso(
            "root B-relation is not carried onto the target's".into(),
        ));
    }
    let mut tau = BTreeMap::from([(r1.clone(), r2.clone())]);
    let mut phi = BTreeMap::from([(r1.clone(), psi.clone())]);
    let mut stack = vec![r1];
    while let Some(s) = stack.pop() {
        let ts = tau[&s].clone();
        for t in a1.children(&s) {
            let v = &phi[&s][&a1.f[t]];
            let tt = a2
                .children(&ts)
                .into_iter()
                .find(|c| &a2.f[*c] == v)
                .ok_or_else(|| {
                    Error::NotLIso(format!("{v} is not a ramification point above {ts}"))
                })?
                .clone();
            let g1 = &a1.g[t];
            let g2 = &a2.g[&tt];
            let mut m = VertexMap::new();
            for (y, x) in g1 {
                let w = g2[&phi[&s][y]].clone();
                if let Some(prev) = m.insert(x.clone(), w.clone()) {
                    if prev != w {
                        return Err(Error::NotLIso(format!(
                            "branch at {t} splits under the map"
                        )));
                    }
                }
            }
            tau.insert(t.clone(), tt);
            phi.insert(t.clone(), m);
            stack.push(t.clone());
        }
    }
    let out = ArborealMorphism {
        kind: MorphismKind::Isomorphism,
        tau,
        phi,
    };
    out.check(a1, a2)
        .into_result()
        .map_err(|e| Error::NotLIso(e.to_string()))?;
    Ok(out)
}

/// All internal automorphisms, ordered by their action on the L-domain.
pub fn automorphisms(a: &TreeOfBSets) -> Result<Vec<ArborealMorphism>> {
    let l = a.compute_l();
    if l.domain.len() > AUTOMORPHISM_GUARD {
        return Err(Error::SizeGuard {
            limit: AUTOMORPHISM_GUARD,
            got: l.domain.len(),
        });
    }
    Ok(l_isomorphisms(&l, &l)
        .iter()
        .filter_map(|psi| l_iso_to_arboreal(a, a, psi).ok())
        .collect())
}

/// Orbits of ordered triples of distinct domain elements under the automorphisms.
pub fn triple_orbits(a: &TreeOfBSets) -> Result<Vec<BTreeSet<Triple>>> {
    let perms: Vec<VertexMap> = automorphisms(a)?
        .into_iter()
        .map(|m| m.phi[&a.root()].clone())
        .collect();
    let dom: Vec<String> = a.domain().into_iter().collect();
    let mut seen: BTreeSet<Triple> = BTreeSet::new();
    let mut out = Vec::new();
    for x in &dom {
        for y in &dom {
            for z in &dom {
                if x == y || y == z || x == z {
                    continue;
                }
                let t = (x.clone(), y.clone(), z.clone());
                if seen.contains(&t) {
                    continue;
                }
                // automorphisms form a group, so one pass gives the whole orbit
                let orbit: BTreeSet<Triple> = perms
                    .iter()
                    .map(|p| (p[x].clone(), p[y].clone(), p[z].clone()))
                    .collect();
                seen.extend(orbit.iter().cloned());
                out.push(orbit);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Union of the orbits that are closed under swapping the second and third entries.
pub fn symmetric_orbit_union(a: &TreeOfBSets) -> Result<BTreeSet<Triple>> {
    Ok(triple_orbits(a)?
        .into_iter()
        .filter(|o| {
            o.iter()
                .all(|(x, y, z)| o.contains(&(x.clone(), z.clone(), y.clone())))
        })
        .flatten()
        .collect())
}

/// Injective strong embeddings of `b1` into `b2`, at most `max` of them.
pub fn strong_bset_embeddings(b1: &BSet, b2: &BSet, max: usize) -> Vec<VertexMap> {
    strong_bset_embeddings_fixing(b1, b2, &VertexMap::new(), max)
}

/// As [`strong_bset_embeddings`], restricted to maps extending `fixed`.
pub fn strong_bset_embeddings_fixing(
    b1: &BSet,
    b2: &BSet,
    fixed: &VertexMap,
    max: usize,
) -> Vec<VertexMap> {
    let m1 = b1.metric();
    let m2 = b2.metric();
    let mut pinned = vec![None; m1.names.len()];
    for (x, y) in fixed {
        match (m1.index(x), m2.index(y)) {
            (Some(i), Some(j)) => pinned[i] = Some(j),
            _ => return Vec::new(),
        }
    }
    // breadth-first order keeps each new vertex adjacent to an assigned one
    let mut order: Vec<usize> = Vec::new();
    let first = fixed
        .keys()
        .next()
        .unwrap_or_else(|| b1.vertices().next().expect("non-empty"));
    let mut seen = BTreeSet::from([first.clone()]);
    let mut queue = std::collections::VecDeque::from([first.clone()]);
    while let Some(v) = queue.pop_front() {
        order.push(m1.index(&v).unwrap());
        for w in b1.neighbours(&v).unwrap() {
            if seen.insert(w.clone()) {
                queue.push_back(w.clone());
            }
        }
    }
    let deg1: Vec<usize> = m1.names.iter().map(|v| b1.degree(v).unwrap()).collect();
    let deg2: Vec<usize> = m2.names.iter().map(|v| b2.degree(v).unwrap()).collect();
    let mut out = Vec::new();
    let mut img = vec![usize::MAX; m1.names.len()];
    let mut used = vec![false; m2.names.len()];
    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        order: &[usize],
        m1: &Metric,
        m2: &Metric,
        deg1: &[usize],
        deg2: &[usize],
        pinned: &[Option<usize>],
        img: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<VertexMap>,
        max: usize,
    ) {
        if out.len() >= max {
            return;
        }
        if i == order.len() {
            out.push(
                order
                    .iter()
                    .map(|&v| (m1.names[v].clone(), m2.names[img[v]].clone()))
                    .collect(),
            );
            return;
        }
        let v = order[i];
        for w in 0..m2.names.len() {
            if used[w] || deg2[w] < deg1[v] || pinned[v].is_some_and(|p| p != w) {
                continue;
            }
            img[v] = w;
            let ok = order[..i].iter().all(|&p| {
                order[..i].iter().all(|&q| {
                    p == q
                        || (m1.between_idx(v, p, q) == m2.between_idx(w, img[p], img[q])
                            && m1.between_idx(p, v, q) == m2.between_idx(img[p], w, img[q]))
                })
            });
            if ok {
                used[w] = true;
                go(
                    i + 1,
                    order,
                    m1,
                    m2,
                    deg1,
                    deg2,
                    pinned,
                    img,
                    used,
                    out,
                    max,
                );
                used[w] = false;
            }
            img[v] = usize::MAX;
        }
    }
    go(
        0, &order, &m1, &m2, &deg1, &deg2, &pinned, &mut img, &mut used, &mut out, max,
    );
    out
}

/// Strong arboreal embeddings of `a1` into `a2`, at most `max`.
///
/// Once `tau(root)` and the root vertex map are fixed, every other vertex map is forced by the
/// g-coherence condition; the only further choice is which node of the right colour and cone
/// each child goes to.
pub fn strong_embeddings(a1: &TreeOfBSets, a2: &TreeOfBSets, max: usize) -> Vec<ArborealMorphism> {
    let none = ArborealMorphism {
        kind: MorphismKind::StrongEmbedding,
        tau: BTreeMap::new(),
        phi: BTreeMap::new(),
    };
    strong_embeddings_extending(a1, a2, &none, max)
}

/// Strong embeddings of `a1` into `a2` that agree with `partial` wherever it is defined: on the
/// nodes in its `tau` and the vertices in its `phi`.
pub fn strong_embeddings_extending(
    a1: &TreeOfBSets,
    a2: &TreeOfBSets,
    partial: &ArborealMorphism,
    max: usize,
) -> Vec<ArborealMorphism> {
    let mut order: Vec<AmbientNode> = a1.nodes().cloned().collect();
    order.sort_by(|x, y| x.colour().cmp(y.colour()).then(x.cmp(y)));
    let r1 = order[0].clone();
    let parents: Vec<Option<AmbientNode>> = order.iter().map(|t| a1.parent(t).cloned()).collect();
    let mut out = Vec::new();
    let empty = VertexMap::new();
    let fixed_r = partial.phi.get(&r1).unwrap_or(&empty);
    for cand in a2
        .nodes()
        .filter(|c| c.colour() == r1.colour() && partial.tau.get(&r1).is_none_or(|x| x == *c))
    {
        for phi_r in
            strong_bset_embeddings_fixing(&a1.bsets[&r1], &a2.bsets[cand], fixed_r, usize::MAX)
        {
            let mut tau = BTreeMap::from([(r1.clone(), cand.clone())]);
            let mut phi = BTreeMap::from([(r1.clone(), phi_r)]);
            extend(
                a1, a2, partial, &order, &parents, 1, &mut tau, &mut phi, &mut out, max,
            );
            if out.len() >= max {
                return out;
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    a1: &TreeOfBSets,
    a2: &TreeOfBSets,
    partial: &ArborealMorphism,
    order: &[AmbientNode],
    parents: &[Option<AmbientNode>],
    i: usize,
    tau: &mut BTreeMap<AmbientNode, AmbientNode>,
    phi: &mut BTreeMap<AmbientNode, VertexMap>,
    out: &mut Vec<ArborealMorphism>,
    max: usize,
) {
    if out.len() >= max {
        return;
    }
    if i == order.len() {
        let m = ArborealMorphism {
            kind: MorphismKind::StrongEmbedding,
            tau: tau.clone(),
            phi: phi.clone(),
        };
        if m.check(a1, a2).ok() {
            out.push(m);
        }
        return;
    }
    let t = &order[i];
    let s = parents[i].as_ref().expect("non-root");
    let ts = tau[s].clone();
    let want = phi[s][&a1.f[t]].clone();
    let g1 = &a1.g[t];
    let cands: Vec<AmbientNode> = a2
        .nodes()
        .filter(|u| u.colour() == t.colour() && ts.tree_lt(u) && !tau.values().any(|x| x == *u))
        .filter(|u| partial.tau.get(t).is_none_or(|x| x == *u))
        .filter(|u| a2.f_towards(&ts, u).map(|v| *v == want).unwrap_or(false))
        .cloned()
        .collect();
    for u in cands {
        let g2 = a2.g_composite(&ts, &u).expect("ts < u");
        let mut m = VertexMap::new();
        let mut ok = true;
        for (y, x) in g1 {
            match g2.get(&phi[s][y]) {
                Some(w) => match m.insert(x.clone(), w.clone()) {
                    Some(prev) if prev != *w => {
                        ok = false;
                        break;
                    }
                    _ => {}
                },
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let vals: BTreeSet<&String> = m.values().collect();
        if !ok || vals.len() != m.len() {
            continue;
        }
        if let Some(fix) = partial.phi.get(t) {
            if fix.iter().any(|(x, y)| m.get(x) != Some(y)) {
                continue;
            }
        }
        match a1.bsets[t]
            .rename(&m)
            .and_then(|img| img.is_strong_sub(&a2.bsets[&u]))
        {
            Ok(true) => {}
            _ => continue,
        }
        tau.insert(t.clone(), u.clone());
        phi.insert(t.clone(), m);
        extend(a1, a2, partial, order, parents, i + 1, tau, phi, out, max);
        tau.remove(t);
        phi.remove(t);
        if out.len() >= max {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::ColorChain;
    use crate::forest::tests::{e2, n, three_level, vm};

    fn swap13() -> ArborealMorphism {
        let mut m = ArborealMorphism::identity(&e2());
        m.phi.insert(
            n("0"),
            vm(&[("e", "e"), ("x1", "x3"), ("x2", "x2"), ("x3", "x1")]),
        );
        m.phi
            .insert(n("1"), vm(&[("X1", "X3"), ("X2", "X2"), ("X3", "X1")]));
        m
    }

    fn single_path(vs: &[&str]) -> TreeOfBSets {
        TreeOfBSets::single(ColorChain::Rationals, n("0"), BSet::path(vs).unwrap()).unwrap()
    }

    #[test]
    fn check_examples() {
        for a in [e2(), three_level()] {
            assert!(ArborealMorphism::identity(&a).check(&a, &a).ok());
        }
        assert!(swap13().check(&e2(), &e2()).ok());
        let abc = single_path(&["a", "b", "c"]);
        let abcd = single_path(&["a", "b", "c", "d"]);
        assert!(ArborealMorphism::inclusion(&abc).check(&abc, &abcd).ok());
        assert!(is_strong_substructure(&abc, &abcd));
        // the star symmetry x1 <-> x2 cannot be made coherent
        let mut bad = swap13();
        bad.phi.insert(
            n("0"),
            vm(&[("e", "e"), ("x1", "x2"), ("x2", "x1"), ("x3", "x3")]),
        );
        bad.phi
            .insert(n("1"), vm(&[("X1", "X2"), ("X2", "X1"), ("X3", "X3")]));
        let rep = bad.check(&e2(), &e2());
        assert!(rep.fails("phi-strong"), "{rep}");
        let mut bad = swap13();
        bad.phi
            .insert(n("1"), vm(&[("X1", "X1"), ("X2", "X2"), ("X3", "X3")]));
        assert!(bad.check(&e2(), &e2()).fails("coherence-g"));
    }

    #[test]
    fn colour_must_be_preserved() {
        let a = single_path(&["a", "b"]);
        let b = TreeOfBSets::single(
            ColorChain::Rationals,
            n("1"),
            BSet::path(&["a", "b"]).unwrap(),
        )
        .unwrap();
        let mut m = ArborealMorphism::identity(&a);
        m.tau.insert(n("0"), n("1"));
        m.phi.insert(n("1"), m.phi[&n("0")].clone());
        m.phi.remove(&n("0"));
        m.phi.insert(n("0"), vm(&[("a", "a"), ("b", "b")]));
        assert!(m.check(&a, &b).fails("tau-colour"));
    }

    #[test]
    fn induced_maps() {
        let a = e2();
        let psi = swap13().induced_l_map(&a, &a).unwrap();
        assert_eq!(
            psi,
            vm(&[("e", "e"), ("x1", "x3"), ("x2", "x2"), ("x3", "x1")])
        );
        // star extension: the child of E2 sits below nothing, so embed the restriction above 1
        let up = a.restrict_above(&n("1")).unwrap();
        let m = ArborealMorphism {
            kind: MorphismKind::StrongEmbedding,
            tau: BTreeMap::from([(n("1"), n("1"))]),
            phi: BTreeMap::from([(n("1"), vm(&[("X1", "X1"), ("X2", "X2"), ("X3", "X3")]))]),
        };
        assert!(m.check(&up, &a).ok());
        let psi = m.induced_l_map(&up, &a).unwrap();
        assert_eq!(psi, vm(&[("X1", "x1"), ("X2", "x2"), ("X3", "x3")]));
        let l_up = up.compute_l();
        let l_a = a.compute_l();
        for (x, y, z) in &l_up.triples {
            assert!(l_a.holds(&psi[x], &psi[y], &psi[z]));
        }
        assert_eq!(
            l_a.map_domain(|v| psi
                .iter()
                .find(|(_, w)| w.as_str() == v)
                .map(|(k, _)| k.clone())),
            l_up
        );
    }

    #[test]
    fn lifting() {
        let a = e2();
        let id = vm(&[("e", "e"), ("x1", "x1"), ("x2", "x2"), ("x3", "x3")]);
        assert_eq!(
            l_iso_to_arboreal(&a, &a, &id).unwrap(),
            ArborealMorphism::identity(&a)
        );
        let sw = vm(&[("e", "e"), ("x1", "x3"), ("x2", "x2"), ("x3", "x1")]);
        assert_eq!(l_iso_to_arboreal(&a, &a, &sw).unwrap(), swap13());
        let bad = vm(&[("e", "e"), ("x1", "x2"), ("x2", "x1"), ("x3", "x3")]);
        assert!(matches!(
            l_iso_to_arboreal(&a, &a, &bad),
            Err(Error::NotLIso(_))
        ));
    }

    #[test]
    fn automorphism_examples() {
        assert_eq!(
            automorphisms(&single_path(&["a", "b", "c"])).unwrap().len(),
            2
        );
        assert_eq!(automorphisms(&single_path(&["a", "b"])).unwrap().len(), 2);
        let auts = automorphisms(&e2()).unwrap();
        assert_eq!(auts, vec![ArborealMorphism::identity(&e2()), swap13()]);
        let big = single_path(&["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]);
        assert!(matches!(automorphisms(&big), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn automorphisms_form_a_group_and_round_trip() {
        for a in [e2(), three_level(), single_path(&["a", "b", "c", "d"])] {
            let auts = automorphisms(&a).unwrap();
            for m in &auts {
                let psi = m.induced_l_map(&a, &a).unwrap();
                assert_eq!(&l_iso_to_arboreal(&a, &a, &psi).unwrap(), m);
                assert!(auts.contains(&m.inverse().unwrap()));
                for k in &auts {
                    let c = m.compose(k).unwrap();
                    assert!(auts.contains(&c));
                }
            }
        }
    }

    #[test]
    fn orbit_examples() {
        let p = single_path(&["a", "b", "c"]);
        assert_eq!(symmetric_orbit_union(&p).unwrap(), p.compute_l().triples);
        let a = e2();
        let l = a.compute_l().triples;
        for o in triple_orbits(&a).unwrap() {
            assert!(o.is_subset(&l) || o.is_disjoint(&l));
        }
        let t = |x: &str, y: &str, z: &str| (x.to_string(), y.to_string(), z.to_string());
        // The swap x1 <-> x3 makes {(e;x1,x3),(e;x3,x1)} one symmetric orbit alongside the
        // orbit through x2; the two orbits through (e;x1,x2) are not symmetric.
        let sym = symmetric_orbit_union(&a).unwrap();
        assert_eq!(
            sym,
            BTreeSet::from([
                t("x2", "x1", "x3"),
                t("x2", "x3", "x1"),
                t("e", "x1", "x3"),
                t("e", "x3", "x1")
            ])
        );
        assert!(sym.is_subset(&l) && sym.len() < l.len());
    }

    #[test]
    fn embedding_search() {
        let abc = single_path(&["a", "b", "c"]);
        let abcd = single_path(&["a", "b", "c", "d"]);
        let found = strong_embeddings(&abc, &abcd, 100);
        // any three of the four path vertices, in either direction
        assert_eq!(found.len(), 8);
        assert!(found.iter().all(|m| m.check(&abc, &abcd).ok()));
        let a = e2();
        assert_eq!(strong_embeddings(&a, &a, 100).len(), 2);
        let t3 = three_level();
        let found = strong_embeddings(&t3, &t3, 100);
        assert_eq!(found.len(), automorphisms(&t3).unwrap().len());
        let star = BSet::star("e", &["x1", "x2", "x3"]).unwrap();
        let leaves = BSet::path(&["x1", "x2", "x3"]).unwrap();
        // a 3-path only fits the star through its centre
        let embs = strong_bset_embeddings(&leaves, &star, 100);
        assert_eq!(embs.len(), 6);
        assert!(embs.iter().all(|m| m["x2"] == "e"));
        assert_eq!(strong_bset_embeddings(&star, &star, 100).len(), 6);
    }
}
