//! Seeded random instances: trees of B-sets, one-point extensions of every kind, extensions
//! and strong substructures. Used by fuzz tests, the chain builder and the CLI.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::amalgam::induced_substructure;
use crate::ambient::{AmbientNode, ColorChain, Colour, Cone};
use crate::bset::BSet;
use crate::forest::{TreeOfBSets, VertexMap};

/// Small name pool, so that independent extensions often collide.
const POOL: [&str; 8] = ["p", "q", "r", "s", "t", "w", "y", "z"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub max_nodes: usize,
    pub max_root: usize,
}

impl Default for Bounds {
    fn default() -> Bounds {
        Bounds {
            max_nodes: 4,
            max_root: 9,
        }
    }
}

/// A colour of `chain` leaving room for `depth` levels above it.
pub fn start_colour(chain: &ColorChain, depth: usize) -> Colour {
    match chain {
        ColorChain::OmegaStar => Colour::int(-(depth as i64) - 1),
        _ => Colour(vec![0.into(); chain.arity()]),
    }
}

/// A random tree on `names`.
fn random_bset(rng: &mut impl Rng, names: &[String], linear: bool) -> BSet {
    let k = names.len();
    if linear || k < 4 {
        let mut order = names.to_vec();
        order.shuffle(rng);
        return BSet::path(&order).expect("distinct names");
    }
    let edges = (1..k)
        .map(|i| (names[rng.gen_range(0..i)].clone(), names[i].clone()))
        .collect::<Vec<_>>();
    BSet::new(names.to_vec(), edges).expect("a tree")
}

fn colour_step(rng: &mut impl Rng, chain: &ColorChain, lo: &Colour) -> Option<Colour> {
    let mut c = chain.colour_above(lo)?;
    if rng.gen_bool(0.3) {
        if let Some(d) = chain.colour_above(&c) {
            c = d;
        }
    }
    if rng.gen_bool(0.3) {
        if let Some(m) = chain.colour_between(lo, &c) {
            c = m;
        }
    }
    Some(c)
}

/// Child nodes of `t` in pairwise distinct cones.
fn child_nodes(
    rng: &mut impl Rng,
    chain: &ColorChain,
    t: &AmbientNode,
    count: usize,
) -> Option<Vec<AmbientNode>> {
    let mut out = Vec::new();
    let mut next = 1;
    for i in 0..count {
        let c = colour_step(rng, chain, t.colour())?;
        if i == 0 && rng.gen_bool(0.5) {
            out.push(t.raise(c).ok()?);
        } else {
            out.push(t.branch(c, next).ok()?);
            next += 1;
        }
    }
    Some(out)
}

pub fn random_tree(rng: &mut impl Rng, chain: &ColorChain, bounds: Bounds) -> TreeOfBSets {
    let k = rng.gen_range(1..=bounds.max_root.max(1));
    let root = AmbientNode::root(start_colour(chain, bounds.max_nodes));
    let mut bsets = BTreeMap::new();
    let mut f = BTreeMap::new();
    let mut g = BTreeMap::new();
    let mut budget = bounds.max_nodes.saturating_sub(1);
    let mut queue = vec![(root, (0..k).map(|i| format!("v{i}")).collect::<Vec<_>>())];
    let mut serial = 0;
    while let Some((t, names)) = queue.pop() {
        let mut b = random_bset(rng, &names, false);
        let ram: Vec<String> = b.ramification_points().into_iter().collect();
        let kids = if ram.len() <= budget {
            child_nodes(rng, chain, &t, ram.len())
        } else {
            None
        };
        let Some(kids) = kids else {
            b = random_bset(rng, &names, true);
            bsets.insert(t, b);
            continue;
        };
        budget -= kids.len();
        for (p, c) in ram.iter().zip(kids) {
            serial += 1;
            let mut branches = b.branches_at(p).expect("vertex");
            branches.shuffle(rng);
            let child_names: Vec<String> = (0..branches.len())
                .map(|i| format!("n{serial}v{i}"))
                .collect();
            let mut link = VertexMap::new();
            for (br, name) in branches.iter().zip(&child_names) {
                for x in br {
                    link.insert(x.clone(), name.clone());
                }
            }
            f.insert(c.clone(), p.clone());
            g.insert(c.clone(), link);
            queue.push((c, child_names));
        }
        bsets.insert(t, b);
    }
    let out = TreeOfBSets::unchecked(chain.clone(), bsets, f, g);
    debug_assert!(out.validate().ok(), "{}", out.validate());
    out
}

fn pick_name(rng: &mut impl Rng, taken: &BTreeSet<String>) -> String {
    let free: Vec<&&str> = POOL.iter().filter(|p| !taken.contains(**p)).collect();
    match free.choose(rng) {
        Some(p) => p.to_string(),
        None => (0..)
            .map(|k| format!("x{k}"))
            .find(|v| !taken.contains(v))
            .unwrap(),
    }
}

/// Completes `g` maps after a vertex joined the B-set of a parent.
fn refill(t: &mut TreeOfBSets) {
    let kids: Vec<AmbientNode> = t.f.keys().cloned().collect();
    for c in kids {
        let p = t.parent(&c).expect("non-root").clone();
        let b = t.bsets[&p].clone();
        let fv = t.f[&c].clone();
        let g = t.g.get_mut(&c).expect("linked");
        for br in b.branches_at(&fv).expect("vertex") {
            if let Some(val) = br.iter().find_map(|x| g.get(x).cloned()) {
                for x in br {
                    g.entry(x).or_insert_with(|| val.clone());
                }
            }
        }
    }
}

/// A one-point extension whose new root, if any, is coloured above `floor`. Returns the
/// extension and its new root vertex (the hub for a star).
fn one_point_above(
    rng: &mut impl Rng,
    a: &TreeOfBSets,
    floor: Option<&Colour>,
) -> Option<(TreeOfBSets, String)> {
    let r = a.root();
    let b = a.root_bset();
    let taken = b.vertex_set();
    let e = pick_name(rng, &taken);
    let vs: Vec<String> = b.vertices().cloned().collect();
    let mut kinds = vec!["leaf", "dyadic", "ternary", "ramification", "star"];
    kinds.shuffle(rng);
    for kind in kinds {
        let mut out = a.clone();
        match kind {
            "star" if b.len() >= 3 => {
                let c = match floor {
                    Some(lo) => a.chain.colour_between(lo, r.colour()),
                    None => a.chain.color_below([r.colour()]).ok(),
                };
                let Some(c) = c else {
                    continue;
                };
                let top = r.below(&c).ok()?;
                let hub = "h".to_string();
                let leaves: Vec<String> = (0..vs.len()).map(|i| format!("l{i}")).collect();
                out.bsets
                    .insert(top, BSet::star(&hub, &leaves).expect("star"));
                out.f.insert(r.clone(), hub.clone());
                out.g.insert(r, leaves.into_iter().zip(vs).collect());
                return Some((out, hub));
            }
            "leaf" => {
                let us: Vec<&String> = vs
                    .iter()
                    .filter(|v| b.degree(v).unwrap_or(0) <= 1)
                    .collect();
                let u = us.choose(rng)?;
                out.bsets.get_mut(&r)?.add_leaf(u, e.clone()).ok()?;
            }
            "dyadic" => {
                let edges = b.edges();
                let Some((u, v)) = edges.choose(rng) else {
                    continue;
                };
                out.bsets.get_mut(&r)?.subdivide(u, v, e.clone()).ok()?;
            }
            "ternary" => {
                let us: Vec<String> = b.dyadic().into_iter().collect();
                let Some(u) = us.choose(rng) else {
                    continue;
                };
                let Some(c) = colour_step(rng, &a.chain, r.colour()) else {
                    continue;
                };
                let cont_free = !out
                    .nodes()
                    .any(|n| n.cone_at(&r) == Some(Cone::Continuation));
                let s = if cont_free && rng.gen_bool(0.5) {
                    r.raise(c).ok()?
                } else {
                    let idx = AmbientNode::max_branch_index(&r, out.nodes()).map_or(1, |k| k + 1);
                    r.branch(c, idx).ok()?
                };
                let rb = out.bsets.get_mut(&r)?;
                rb.add_leaf(u, e.clone()).ok()?;
                let rb = rb.clone();
                let mut labels = vec!["X", "Y", "W"];
                labels.shuffle(rng);
                let mut link = VertexMap::new();
                for (br, lab) in rb.branches_at(u).ok()?.into_iter().zip(["X", "Y", "W"]) {
                    for x in br {
                        link.insert(x, lab.to_string());
                    }
                }
                out.bsets.insert(s.clone(), BSet::path(&labels).ok()?);
                out.f.insert(s.clone(), u.clone());
                out.g.insert(s, link);
            }
            "ramification" => {
                let us: Vec<String> = b.ramification_points().into_iter().collect();
                let Some(u) = us.choose(rng) else {
                    continue;
                };
                let s = out
                    .children(&r)
                    .into_iter()
                    .find(|c| a.f[*c] == *u)?
                    .clone();
                let above = a.restrict_above(&s).ok()?;
                let (ext, w) = one_point_above(rng, &above, Some(r.colour()))?;
                for t in above.nodes() {
                    out.bsets.remove(t);
                    out.f.remove(t);
                    out.g.remove(t);
                }
                let s_new = ext.root();
                out.bsets.extend(ext.bsets);
                out.f.extend(ext.f);
                out.g.extend(ext.g);
                let mut link = a.g[&s].clone();
                if s_new != s {
                    // a star slid in below s: old branches go to the matching leaves
                    let to_leaf: BTreeMap<&String, &String> =
                        out.g[&s].iter().map(|(l, v)| (v, l)).collect();
                    link = link
                        .into_iter()
                        .map(|(k, v)| (k, to_leaf[&v].clone()))
                        .collect();
                }
                out.bsets.get_mut(&r)?.add_leaf(u, e.clone()).ok()?;
                link.insert(e.clone(), w);
                out.f.insert(s_new.clone(), u.clone());
                out.g.insert(s_new, link);
            }
            _ => continue,
        }
        refill(&mut out);
        if out.validate().ok() {
            return Some((out, e));
        }
    }
    None
}

/// A random one-point strong extension of `a`, of any kind that fits.
pub fn random_one_point(rng: &mut impl Rng, a: &TreeOfBSets) -> Option<TreeOfBSets> {
    one_point_above(rng, a, None).map(|(t, _)| t)
}

/// Up to `k` successive one-point extensions.
pub fn random_extension(rng: &mut impl Rng, a: &TreeOfBSets, k: usize) -> TreeOfBSets {
    let mut cur = a.clone();
    for _ in 0..k {
        if let Some(next) = random_one_point(rng, &cur) {
            cur = next;
        }
    }
    cur
}

/// A strong substructure of `e` on a random subset of the root (possibly all of it).
pub fn random_substructure(rng: &mut impl Rng, e: &TreeOfBSets) -> TreeOfBSets {
    let r = e.root();
    let vs: Vec<String> = e.root_bset().vertices().cloned().collect();
    for _ in 0..16 {
        let keep = rng.gen_range(1..=vs.len());
        let s: BTreeSet<String> = vs.choose_multiple(rng, keep).cloned().collect();
        if let Some(t) = induced_substructure(e, &r, &s, None) {
            return t;
        }
    }
    e.clone()
}

fn within(t: &TreeOfBSets, bounds: Bounds) -> bool {
    t.node_count() <= bounds.max_nodes && t.root_bset().len() <= bounds.max_root
}

/// Up to `k` one-point steps, skipping any that would leave `bounds`.
pub fn random_extension_within(
    rng: &mut impl Rng,
    a: &TreeOfBSets,
    k: usize,
    bounds: Bounds,
) -> TreeOfBSets {
    let mut cur = a.clone();
    for _ in 0..k {
        if let Some(next) = random_one_point(rng, &cur).filter(|t| within(t, bounds)) {
            cur = next;
        }
    }
    cur
}

/// A base with two strong extensions, all within `bounds`: the base is a random strong
/// substructure of a random tree, the first extension is that tree or a random extension, the
/// second is a random extension.
pub fn random_triple(
    rng: &mut impl Rng,
    chain: &ColorChain,
    bounds: Bounds,
) -> (TreeOfBSets, TreeOfBSets, TreeOfBSets) {
    let t = random_tree(rng, chain, bounds);
    let a = random_substructure(rng, &t);
    let k1 = rng.gen_range(0..=3);
    let k2 = rng.gen_range(0..=3);
    let e1 = if rng.gen_bool(0.5) {
        t
    } else {
        random_extension_within(rng, &a, k1, bounds)
    };
    let e2 = random_extension_within(rng, &a, k2, bounds);
    (a, e1, e2)
}
