//! Rebuilding a tree of B-sets, up to colours, from its L-relation alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ambient::AmbientNode;
use crate::bset::BSet;
use crate::error::{Error, Result};
use crate::forest::{TreeOfBSets, VertexMap};
use crate::lset::LSet;
use crate::morphisms::strong_bset_embeddings;

/// A tree of B-sets without colours. Node 0 is the root; `f` and `g` are stored on the child.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractForest {
    pub nodes: Vec<ShapeNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeNode {
    pub parent: Option<usize>,
    pub bset: BSet,
    pub f: Option<String>,
    pub g: VertexMap,
}

impl AbstractForest {
    pub fn root_bset(&self) -> &BSet {
        &self.nodes[0].bset
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&c| self.nodes[c].parent == Some(i))
            .collect()
    }

    /// The structural clauses of a tree of B-sets, colours aside.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() || self.nodes[0].parent.is_some() {
            return Err(Error::Invalid("node 0 must be the only root".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let kids = self.children(i);
            if kids.is_empty() && !n.bset.is_linear() {
                return Err(Error::Invalid(format!("leaf node {i} is not linear")));
            }
            let ram = n.bset.ramification_points();
            let fs: BTreeSet<&String> = kids
                .iter()
                .filter_map(|&c| self.nodes[c].f.as_ref())
                .collect();
            if fs.len() != kids.len() || fs != ram.iter().collect() {
                return Err(Error::Invalid(format!(
                    "children of node {i} do not match its ramification points"
                )));
            }
            for c in kids {
                let child = &self.nodes[c];
                let p = child.f.as_ref().expect("checked above");
                let mut images = BTreeSet::new();
                for branch in n.bset.branches_at(p)? {
                    let vals: BTreeSet<Option<&String>> =
                        branch.iter().map(|x| child.g.get(x)).collect();
                    let [Some(v)] = vals.into_iter().collect::<Vec<_>>()[..] else {
                        return Err(Error::Invalid(format!(
                            "g at node {c} is not constant on a branch at {p}"
                        )));
                    };
                    if !child.bset.contains(v) || !images.insert(v) {
                        return Err(Error::Invalid(format!("g at node {c} is not a bijection")));
                    }
                }
                if images.len() != child.bset.len() || child.g.len() + 1 != n.bset.len() {
                    return Err(Error::Invalid(format!("g at node {c} is not a bijection")));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for AbstractForest {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            match n.parent {
                None => writeln!(out, "node {i}")?,
                Some(p) => writeln!(
                    out,
                    "node {i} parent {p} f {}",
                    n.f.as_deref().unwrap_or("")
                )?,
            }
            let vs: Vec<&str> = n.bset.vertices().map(String::as_str).collect();
            writeln!(out, "vertices {}", vs.join(" "))?;
            let es: Vec<String> = n
                .bset
                .edges()
                .iter()
                .map(|(a, b)| format!("{a}-{b}"))
                .collect();
            writeln!(out, "edges {}", es.join(" "))?;
            if !n.g.is_empty() {
                let gs: Vec<String> = n.g.iter().map(|(k, v)| format!("{k}->{v}")).collect();
                writeln!(out, "g {}", gs.join(" "))?;
            }
        }
        Ok(())
    }
}

/// The root B-set of any tree of B-sets with L-relation `m`: `a`, `b` are adjacent iff nothing
/// lies between them.
pub fn root_adjacency(m: &LSet) -> Result<BSet> {
    m.validate()?;
    if m.domain.is_empty() {
        return Err(Error::NotATree("empty domain".into()));
    }
    let vs: Vec<&String> = m.domain.iter().collect();
    let mut edges = Vec::new();
    for (i, a) in vs.iter().enumerate() {
        for b in &vs[i + 1..] {
            if !vs.iter().any(|c| m.holds(c, a, b)) {
                edges.push(((*a).clone(), (*b).clone()));
            }
        }
    }
    let b = BSet::new(vs.iter().map(|v| (*v).clone()), edges)?;
    // every betweenness of the tree must already be in L
    let mt = b.metric();
    let n = mt.names.len();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if x != y
                    && x != z
                    && y != z
                    && mt.between_idx(x, y, z)
                    && !m.holds(&mt.names[x], &mt.names[y], &mt.names[z])
                {
                    return Err(Error::NotATree(format!(
                        "{} lies between {} and {} in the adjacency tree but not in L",
                        mt.names[x], mt.names[y], mt.names[z]
                    )));
                }
            }
        }
    }
    Ok(b)
}

/// Each branch at `w` is named by its least member.
fn branch_names(b: &BSet, w: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for branch in b.branches_at(w)? {
        let name = branch.iter().min().expect("branches are non-empty").clone();
        for x in branch {
            out.insert(x, name.clone());
        }
    }
    Ok(out)
}

/// L on the branches at the ramification point `w`, through representatives in three distinct
/// branches. Branches are named by their least member.
pub fn quotient_l(m: &LSet, w: &str) -> Result<LSet> {
    let b = root_adjacency(m)?;
    if !b.ramification_points().contains(w) {
        return Err(Error::Invalid(format!("{w} is not a ramification point")));
    }
    let names = branch_names(&b, w)?;
    Ok(m.map_domain(|v| names.get(v).cloned()))
}

/// The shape of a tree of B-sets with L-relation `m`: the adjacency tree at the root, and one
/// child per ramification point carrying the quotient.
pub fn recover_tree(m: &LSet) -> Result<AbstractForest> {
    let mut out = AbstractForest { nodes: Vec::new() };
    grow(m, None, &mut out)?;
    Ok(out)
}

fn grow(m: &LSet, up: Option<(usize, String, VertexMap)>, out: &mut AbstractForest) -> Result<()> {
    let b = root_adjacency(m)?;
    let me = out.nodes.len();
    let (parent, f, g) = match up {
        Some((p, f, g)) => (Some(p), Some(f), g),
        None => (None, None, VertexMap::new()),
    };
    out.nodes.push(ShapeNode {
        parent,
        bset: b.clone(),
        f,
        g,
    });
    for w in b.ramification_points() {
        let names = branch_names(&b, &w)?;
        let q = m.map_domain(|v| names.get(v).cloned());
        grow(&q, Some((me, w, names)), out)?;
    }
    Ok(())
}

/// A colour-blind isomorphism from a tree of B-sets onto a shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeIso {
    pub tau: BTreeMap<AmbientNode, usize>,
    pub phi: BTreeMap<AmbientNode, VertexMap>,
}

/// An isomorphism `a -> s` ignoring colours, if one exists.
pub fn align(a: &TreeOfBSets, s: &AbstractForest) -> Option<ShapeIso> {
    if a.node_count() != s.nodes.len() || a.root_bset().len() != s.root_bset().len() {
        return None;
    }
    strong_bset_embeddings(a.root_bset(), s.root_bset(), usize::MAX)
        .into_iter()
        .find_map(|psi| {
            let mut iso = ShapeIso {
                tau: BTreeMap::new(),
                phi: BTreeMap::new(),
            };
            follow(a, s, &a.root(), 0, psi, &mut iso).then_some(iso)
        })
}

/// Extends `iso` from `t -> i` with vertex map `psi` upward; the f-points force the rest.
fn follow(
    a: &TreeOfBSets,
    s: &AbstractForest,
    t: &AmbientNode,
    i: usize,
    psi: VertexMap,
    iso: &mut ShapeIso,
) -> bool {
    let (bt, bi) = (&a.bsets[t], &s.nodes[i].bset);
    let edges_ok = bt.len() == bi.len()
        && bt
            .edges()
            .iter()
            .all(|(x, y)| match (psi.get(x), psi.get(y)) {
                (Some(u), Some(v)) => bi.neighbours(u).is_ok_and(|n| n.contains(v)),
                _ => false,
            });
    let kids_a = a.children(t);
    let kids_s = s.children(i);
    if !edges_ok || kids_a.len() != kids_s.len() {
        return false;
    }
    for c in kids_a {
        let p = &a.f[c];
        let Some(j) = kids_s
            .iter()
            .copied()
            .find(|&j| s.nodes[j].f.as_ref() == psi.get(p))
        else {
            return false;
        };
        // phi at the child: g_a(x) -> g_s(psi(x)) must be a function and a bijection
        let mut next = VertexMap::new();
        for (x, gx) in &a.g[c] {
            let Some(img) = psi.get(x).and_then(|y| s.nodes[j].g.get(y)) else {
                return false;
            };
            if next.get(gx).is_some_and(|v| v != img) {
                return false;
            }
            next.insert(gx.clone(), img.clone());
        }
        let distinct: BTreeSet<&String> = next.values().collect();
        if distinct.len() != next.len() || !follow(a, s, c, j, next, iso) {
            return false;
        }
    }
    iso.tau.insert(t.clone(), i);
    iso.phi.insert(t.clone(), psi);
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderReport {
    /// Distinct classes at `t` lie in `S_s` and stay distinct at `s`.
    pub criterion: bool,
    /// `s <= t` in the node order.
    pub order: bool,
    /// A pair separated at `t` but not at `s`, when the criterion fails.
    pub witness: Option<(String, String)>,
}

impl OrderReport {
    pub fn agrees(&self) -> bool {
        self.criterion == self.order
    }
}

/// Evaluates the class-separation test for `s <= t` on `a` and compares it with the order.
pub fn order_criterion(a: &TreeOfBSets, s: &AmbientNode, t: &AmbientNode) -> Result<OrderReport> {
    for n in [s, t] {
        if !a.contains(n) {
            return Err(Error::UnknownNode(n.to_string()));
        }
    }
    let (cs, ct) = (a.g_composite(&a.root(), s)?, a.g_composite(&a.root(), t)?);
    let mut witness = None;
    'outer: for (x, cx) in &ct {
        for (y, cy) in &ct {
            if cx == cy {
                continue;
            }
            match (cs.get(x), cs.get(y)) {
                (Some(u), Some(v)) if u != v => {}
                _ => {
                    witness = Some((x.clone(), y.clone()));
                    break 'outer;
                }
            }
        }
    }
    Ok(OrderReport {
        criterion: witness.is_none(),
        order: s.leq_unchecked(t),
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::ColorChain;
    use crate::bset::tests::all_trees;
    use crate::forest::tests::{e2, n, three_level};
    use crate::fraisse::are_isomorphic;
    use crate::gen::{random_tree, Bounds};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chains() -> Vec<ColorChain> {
        vec![
            ColorChain::OmegaStar,
            ColorChain::Rationals,
            "Lex:ZQ".parse().unwrap(),
        ]
    }

    fn samples(seed: u64, per_chain: usize, bounds: Bounds) -> Vec<TreeOfBSets> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        chains()
            .iter()
            .flat_map(|c| {
                (0..per_chain)
                    .map(|_| random_tree(&mut rng, c, bounds))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    fn single(vs: &[&str]) -> TreeOfBSets {
        TreeOfBSets::single(ColorChain::Rationals, n("0"), BSet::path(vs).unwrap()).unwrap()
    }

    #[test]
    fn adjacency_examples() {
        let p = root_adjacency(&single(&["a", "b", "c"]).compute_l()).unwrap();
        assert_eq!(p, BSet::path(&["a", "b", "c"]).unwrap());
        let star = root_adjacency(&e2().compute_l()).unwrap();
        assert_eq!(star, BSet::star("e", &["x1", "x2", "x3"]).unwrap());
        let two = LSet::new(["a".to_string(), "b".to_string()]);
        assert_eq!(
            root_adjacency(&two).unwrap(),
            BSet::path(&["a", "b"]).unwrap()
        );
        // three points and no middle element is not an L-set
        let bad = LSet::new(["a", "b", "c"].map(String::from));
        assert!(root_adjacency(&bad).is_err());
    }

    #[test]
    fn adjacency_matches_root_bsets() {
        for a in samples(1, 80, Bounds::default()) {
            assert_eq!(
                &root_adjacency(&a.compute_l()).unwrap(),
                a.root_bset(),
                "{a}"
            );
        }
    }

    /// Exhaustive check at small sizes: exactly one labelled tree has all its betweenness in L.
    #[test]
    fn unique_tree_inside_l() {
        let bounds = Bounds {
            max_nodes: 4,
            max_root: 7,
        };
        let mut by_size: BTreeMap<usize, Vec<BSet>> = BTreeMap::new();
        for a in samples(2, 25, bounds) {
            let l = a.compute_l();
            let names: Vec<String> = l.domain.iter().cloned().collect();
            let k = names.len();
            let trees = by_size.entry(k).or_insert_with(|| all_trees(k));
            let rename: BTreeMap<String, String> = (0..k)
                .map(|i| (format!("v{i}"), names[i].clone()))
                .collect();
            let inside: Vec<BSet> = trees
                .iter()
                .map(|t| t.rename(&rename).unwrap())
                .filter(|t| {
                    let m = t.metric();
                    let n = m.names.len();
                    (0..n).all(|x| {
                        (0..n).all(|y| {
                            (0..n).all(|z| {
                                x == y
                                    || x == z
                                    || y == z
                                    || !m.between_idx(x, y, z)
                                    || l.holds(&m.names[x], &m.names[y], &m.names[z])
                            })
                        })
                    })
                })
                .collect();
            assert_eq!(inside.len(), 1, "{a}");
            assert_eq!(inside[0], root_adjacency(&l).unwrap());
        }
    }

    #[test]
    fn quotient_of_e2() {
        let q = quotient_l(&e2().compute_l(), "e").unwrap();
        let want: BTreeSet<String> = ["x1", "x2", "x3"].map(String::from).into();
        assert_eq!(q.domain, want);
        let triples: BTreeSet<(String, String, String)> = [("x2", "x1", "x3"), ("x2", "x3", "x1")]
            .map(|(a, b, c)| (a.into(), b.into(), c.into()))
            .into();
        assert_eq!(q.triples, triples);
        assert!(quotient_l(&single(&["a", "b", "c"]).compute_l(), "b").is_err());
    }

    #[test]
    fn quotients_do_not_depend_on_representatives() {
        for a in samples(3, 40, Bounds::default()) {
            let l = a.compute_l();
            let b = root_adjacency(&l).unwrap();
            for w in b.ramification_points() {
                let q = quotient_l(&l, &w).unwrap();
                q.validate().unwrap();
                let branches = b.branches_at(&w).unwrap();
                for (i, x) in branches.iter().enumerate() {
                    for (j, y) in branches.iter().enumerate() {
                        for (k, z) in branches.iter().enumerate() {
                            if i == j || j == k || i == k {
                                continue;
                            }
                            let mut seen = BTreeSet::new();
                            for u in x {
                                for v in y {
                                    for t in z {
                                        seen.insert(l.holds(u, v, t));
                                    }
                                }
                            }
                            assert_eq!(seen.len(), 1, "{a} at {w}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn recovers_e2() {
        let s = recover_tree(&e2().compute_l()).unwrap();
        s.validate().unwrap();
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(
            s.root_bset(),
            &BSet::star("e", &["x1", "x2", "x3"]).unwrap()
        );
        assert!(s.nodes[1].bset.is_linear());
        assert_eq!(s.nodes[1].bset.len(), 3);
        assert_eq!(s.nodes[1].f.as_deref(), Some("e"));
        assert!(align(&e2(), &s).is_some());
        let flat = recover_tree(&single(&["a", "b", "c"]).compute_l()).unwrap();
        assert_eq!(flat.nodes.len(), 1);
        assert!(align(&e2(), &flat).is_none());
        assert!(align(
            &three_level(),
            &recover_tree(&three_level().compute_l()).unwrap()
        )
        .is_some());
    }

    #[test]
    fn round_trip_at_bounds() {
        for a in samples(4, 120, Bounds::default()) {
            let s = recover_tree(&a.compute_l()).unwrap();
            s.validate().unwrap();
            let iso = align(&a, &s).unwrap_or_else(|| panic!("{a}\n{s}"));
            assert_eq!(iso.tau.len(), a.node_count());
        }
    }

    #[test]
    fn align_agrees_with_isomorphism() {
        let xs = samples(
            6,
            40,
            Bounds {
                max_nodes: 3,
                max_root: 5,
            },
        );
        let mut hits = 0;
        for a in &xs {
            for b in &xs {
                if a.node_count() != b.node_count() || a.root_bset().len() != b.root_bset().len() {
                    continue;
                }
                let ab = align(a, &recover_tree(&b.compute_l()).unwrap()).is_some();
                let ba = align(b, &recover_tree(&a.compute_l()).unwrap()).is_some();
                assert_eq!(ab, ba);
                if are_isomorphic(a, b).is_some() {
                    assert!(ab);
                    hits += 1;
                }
            }
        }
        assert!(hits >= xs.len());
    }

    #[test]
    fn order_criterion_examples() {
        let a = e2();
        let (r, c) = (n("0"), n("1"));
        let same = order_criterion(&a, &c, &c).unwrap();
        assert!(same.criterion && same.agrees());
        let up = order_criterion(&a, &r, &c).unwrap();
        assert!(up.criterion && up.order && up.agrees());
        let down = order_criterion(&a, &c, &r).unwrap();
        assert!(!down.criterion && down.agrees() && down.witness.is_some());
        assert!(order_criterion(&a, &n("5"), &r).is_err());
    }

    #[test]
    fn criterion_matches_the_order() {
        let bounds = Bounds {
            max_nodes: 5,
            max_root: 9,
        };
        for a in samples(7, 150, bounds) {
            let ns: Vec<&AmbientNode> = a.nodes().collect();
            for s in &ns {
                for t in &ns {
                    let rep = order_criterion(&a, s, t).unwrap();
                    assert!(rep.agrees(), "{a} {s} {t}");
                }
            }
        }
    }
}
