//! Isomorphism classes, the alternating chain construction, extension checks, and the C-relation
//! read off pre-branches.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::amalgam::{amalgamate, joint_embed, transport};
use crate::ambient::{AmbientNode, ColorChain, Colour};
use crate::bset::{BSet, TernaryRelation};
use crate::error::{Error, Result};
use crate::forest::{TreeOfBSets, VertexMap};
use crate::gen::{random_one_point, Bounds};
use crate::morphisms::{
    is_strong_substructure, l_iso_to_arboreal, strong_embeddings, strong_embeddings_extending,
    ArborealMorphism, MorphismKind,
};

/// Per non-root node: colour, parent position, class of each root vertex, adjacency of classes.
struct Shape {
    m: usize,
    root_colour: Colour,
    root_adj: Vec<Vec<usize>>,
    nodes: Vec<NodeShape>,
}

struct NodeShape {
    colour: Colour,
    parent: Option<usize>,
    class: Vec<Option<usize>>,
    members: Vec<Vec<usize>>,
    adj: Vec<Vec<usize>>,
}

impl Shape {
    fn new(a: &TreeOfBSets, names: &[String]) -> Shape {
        let idx: BTreeMap<&String, usize> = names.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let r = a.root();
        let rb = a.root_bset();
        let root_adj = names
            .iter()
            .map(|v| rb.neighbours(v).unwrap().iter().map(|w| idx[w]).collect())
            .collect();
        let others: Vec<&AmbientNode> = a.nodes().filter(|t| **t != r).collect();
        let pos: BTreeMap<&AmbientNode, usize> =
            others.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let nodes = others
            .iter()
            .map(|t| {
                let b = &a.bsets[*t];
                let vs: Vec<&String> = b.vertices().collect();
                let vpos: BTreeMap<&String, usize> =
                    vs.iter().enumerate().map(|(i, v)| (*v, i)).collect();
                let gm = a.g_composite(&r, t).expect("r <= t");
                let mut class = vec![None; names.len()];
                let mut members = vec![Vec::new(); vs.len()];
                for (x, img) in &gm {
                    class[idx[x]] = Some(vpos[img]);
                    members[vpos[img]].push(idx[x]);
                }
                let adj = vs
                    .iter()
                    .map(|v| b.neighbours(v).unwrap().iter().map(|w| vpos[w]).collect())
                    .collect();
                NodeShape {
                    colour: t.colour().clone(),
                    parent: a.parent(t).and_then(|p| pos.get(p).copied()),
                    class,
                    members,
                    adj,
                }
            })
            .collect();
        Shape {
            m: names.len(),
            root_colour: r.colour().clone(),
            root_adj,
            nodes,
        }
    }

    /// One round of colour refinement; returns the new ranks.
    fn refine_once(&self, col: &[usize]) -> Vec<usize> {
        type Sig = (
            usize,
            Vec<usize>,
            Vec<(Colour, Vec<usize>, Vec<Vec<usize>>)>,
        );
        let sigs: Vec<Sig> = (0..self.m)
            .map(|x| {
                let mut nb: Vec<usize> = self.root_adj[x].iter().map(|&y| col[y]).collect();
                nb.sort();
                let mut per_node: Vec<(Colour, Vec<usize>, Vec<Vec<usize>>)> = self
                    .nodes
                    .iter()
                    .filter_map(|n| {
                        let c = n.class[x]?;
                        let cols = |k: usize| {
                            let mut v: Vec<usize> = n.members[k].iter().map(|&y| col[y]).collect();
                            v.sort();
                            v
                        };
                        let mut around: Vec<Vec<usize>> =
                            n.adj[c].iter().map(|&k| cols(k)).collect();
                        around.sort();
                        Some((n.colour.clone(), cols(c), around))
                    })
                    .collect();
                per_node.sort();
                (col[x], nb, per_node)
            })
            .collect();
        rank(&sigs)
    }

    fn refine(&self, mut col: Vec<usize>) -> Vec<usize> {
        loop {
            let next = self.refine_once(&col);
            let before = col.iter().collect::<BTreeSet<_>>().len();
            let after = next.iter().collect::<BTreeSet<_>>().len();
            col = next;
            if after == before {
                return col;
            }
        }
    }

    /// The structure written out under a labelling of the root vertices.
    fn encode(&self, lab: &[usize]) -> String {
        let mut edges: Vec<(usize, usize)> = (0..self.m)
            .flat_map(|x| {
                self.root_adj[x]
                    .iter()
                    .filter(move |&&y| lab[x] < lab[y])
                    .map(move |&y| (lab[x], lab[y]))
            })
            .collect();
        edges.sort();
        let codes: Vec<String> = self
            .nodes
            .iter()
            .map(|n| {
                let mut classes: Vec<Vec<usize>> = n
                    .members
                    .iter()
                    .map(|ms| {
                        let mut v: Vec<usize> = ms.iter().map(|&y| lab[y]).collect();
                        v.sort();
                        v
                    })
                    .collect();
                let key = |k: usize| n.members[k].iter().map(|&y| lab[y]).min().unwrap();
                let mut cedges: Vec<(usize, usize)> = (0..n.adj.len())
                    .flat_map(|k| {
                        n.adj[k]
                            .iter()
                            .filter(move |&&j| key(k) < key(j))
                            .map(move |&j| (key(k), key(j)))
                    })
                    .collect();
                classes.sort();
                cedges.sort();
                format!("{}{:?}{:?}", n.colour, classes, cedges)
            })
            .collect();
        let mut nodes: Vec<String> = self
            .nodes
            .iter()
            .zip(&codes)
            .map(|(n, code)| {
                let parent = n.parent.map_or("r", |p| codes[p].as_str());
                format!("{code}<{parent}")
            })
            .collect();
        nodes.sort();
        format!(
            "{}|{}|{:?}|{}",
            self.m,
            self.root_colour,
            edges,
            nodes.join(";")
        )
    }

    /// Least encoding over all individualisation leaves, with the root order that produced it.
    fn search(&self, col: Vec<usize>, best: &mut Option<(String, Vec<usize>)>) {
        let col = self.refine(col);
        let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (x, &c) in col.iter().enumerate() {
            cells.entry(c).or_default().push(x);
        }
        match cells.values().find(|c| c.len() > 1) {
            None => {
                let code = self.encode(&col);
                if best.as_ref().is_none_or(|(b, _)| code < *b) {
                    *best = Some((code, col));
                }
            }
            Some(cell) => {
                for &v in cell {
                    let keyed: Vec<(usize, bool)> = (0..self.m).map(|x| (col[x], x != v)).collect();
                    self.search(rank(&keyed), best);
                }
            }
        }
    }
}

/// Dense ranks of `keys` in sorted order.
fn rank<K: Ord>(keys: &[K]) -> Vec<usize> {
    let sorted: BTreeSet<&K> = keys.iter().collect();
    let pos: BTreeMap<&K, usize> = sorted
        .into_iter()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    keys.iter().map(|k| pos[k]).collect()
}

/// The canonical key and the root vertices listed in canonical order.
fn canonical_labelling(a: &TreeOfBSets) -> (String, Vec<String>) {
    let names: Vec<String> = a.root_bset().vertices().cloned().collect();
    let shape = Shape::new(a, &names);
    let mut best = None;
    shape.search(vec![0; names.len()], &mut best);
    let (key, lab) = best.expect("at least one leaf");
    let mut order = vec![String::new(); names.len()];
    for (x, &l) in lab.iter().enumerate() {
        order[l] = names[x].clone();
    }
    (key, order)
}

/// Equal exactly for internally isomorphic trees of B-sets (colours included).
pub fn canonical_form(a: &TreeOfBSets) -> String {
    canonical_labelling(a).0
}

pub fn are_isomorphic(a1: &TreeOfBSets, a2: &TreeOfBSets) -> Option<ArborealMorphism> {
    if a1.chain != a2.chain || a1.node_count() != a2.node_count() {
        return None;
    }
    let (k1, o1) = canonical_labelling(a1);
    let (k2, o2) = canonical_labelling(a2);
    if k1 != k2 {
        return None;
    }
    let psi: VertexMap = o1.into_iter().zip(o2).collect();
    let m = l_iso_to_arboreal(a1, a2, &psi).ok()?;
    m.check(a1, a2).ok().then_some(m)
}

/// AHU code of `b` rooted at `v`, away from `from`.
fn ahu(b: &BSet, v: &str, from: Option<&str>) -> String {
    let mut kids: Vec<String> = b
        .neighbours(v)
        .unwrap()
        .iter()
        .filter(|w| Some(w.as_str()) != from)
        .map(|w| ahu(b, w, Some(v)))
        .collect();
    kids.sort();
    format!("({})", kids.concat())
}

/// Isomorphism-invariant code of an unlabelled free tree.
pub fn tree_code(b: &BSet) -> String {
    // the centre is the last one or two vertices left after stripping leaves
    let mut left: BTreeSet<String> = b.vertex_set();
    while left.len() > 2 {
        let leaves: Vec<String> = left
            .iter()
            .filter(|v| {
                b.neighbours(v)
                    .unwrap()
                    .iter()
                    .filter(|w| left.contains(*w))
                    .count()
                    <= 1
            })
            .cloned()
            .collect();
        for l in leaves {
            left.remove(&l);
        }
    }
    left.iter().map(|c| ahu(b, c, None)).min().unwrap()
}

/// One free tree per isomorphism type on `k` vertices, named `prefix0..`.
pub fn free_trees(k: usize, prefix: &str) -> Vec<BSet> {
    let name = |i: usize| format!("{prefix}{i}");
    let mut level: BTreeMap<String, BSet> = BTreeMap::new();
    if k == 0 {
        return Vec::new();
    }
    let one = BSet::singleton(name(0));
    level.insert(tree_code(&one), one);
    for n in 1..k {
        let mut next = BTreeMap::new();
        for b in level.values() {
            for v in b.vertex_set() {
                let mut c = b.clone();
                c.add_leaf(&v, name(n)).expect("fresh name");
                next.entry(tree_code(&c)).or_insert(c);
            }
        }
        level = next;
    }
    level.into_values().collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassBounds {
    /// Colours nodes may take, in increasing order.
    pub colours: Vec<Colour>,
    pub max_nodes: usize,
    pub min_root: usize,
    pub max_root: usize,
}

#[derive(Clone, Default)]
struct Parts {
    bsets: BTreeMap<AmbientNode, BSet>,
    f: BTreeMap<AmbientNode, String>,
    g: BTreeMap<AmbientNode, VertexMap>,
}

impl Parts {
    fn join(&self, other: &Parts) -> Parts {
        let mut out = self.clone();
        out.bsets.extend(other.bsets.clone());
        out.f.extend(other.f.clone());
        out.g.extend(other.g.clone());
        out
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Every subtree with the given root B-set, using at most `budget` further nodes.
fn grow(
    b: &BSet,
    t: &AmbientNode,
    colours: &[Colour],
    budget: usize,
    serial: &mut usize,
) -> Vec<(Parts, usize)> {
    let ram: Vec<String> = b.ramification_points().into_iter().collect();
    let mut acc: Vec<(Parts, usize)> = vec![(
        Parts {
            bsets: BTreeMap::from([(t.clone(), b.clone())]),
            ..Parts::default()
        },
        0,
    )];
    for (i, p) in ram.iter().enumerate() {
        let branches = b.branches_at(p).expect("vertex");
        let d = branches.len();
        *serial += 1;
        let prefix = format!("n{serial}v");
        let mut next = Vec::new();
        for (parts, used) in &acc {
            if used + 1 > budget {
                continue;
            }
            for c in colours.iter().filter(|c| *c > t.colour()) {
                let child = t.branch(c.clone(), i as u64 + 1).expect("colour above");
                for shape in free_trees(d, &prefix) {
                    let vs: Vec<String> = shape.vertices().cloned().collect();
                    for perm in permutations(d) {
                        let mut link = VertexMap::new();
                        for (k, br) in branches.iter().enumerate() {
                            for x in br {
                                link.insert(x.clone(), vs[perm[k]].clone());
                            }
                        }
                        for (sub, n) in grow(&shape, &child, colours, budget - used - 1, serial) {
                            let mut joined = parts.join(&sub);
                            joined.f.insert(child.clone(), p.clone());
                            joined.g.insert(child.clone(), link.clone());
                            next.push((joined, used + 1 + n));
                        }
                    }
                }
            }
        }
        acc = next;
    }
    acc
}

/// Representatives of the isomorphism classes within `bounds`, smallest first.
pub fn enumerate_classes(chain: &ColorChain, bounds: &ClassBounds) -> Vec<TreeOfBSets> {
    let mut classes: BTreeMap<(usize, usize, String), TreeOfBSets> = BTreeMap::new();
    let mut serial = 0;
    for c in &bounds.colours {
        let root = AmbientNode::root(c.clone());
        for k in bounds.min_root.max(1)..=bounds.max_root {
            for shape in free_trees(k, "v") {
                let budget = bounds.max_nodes.saturating_sub(1);
                for (parts, _) in grow(&shape, &root, &bounds.colours, budget, &mut serial) {
                    let t = TreeOfBSets::unchecked(chain.clone(), parts.bsets, parts.f, parts.g);
                    if !t.validate().ok() {
                        continue;
                    }
                    let key = (t.node_count(), k, canonical_form(&t));
                    classes.entry(key).or_insert(t);
                }
            }
        }
    }
    classes.into_values().collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainConfig {
    pub chain: ColorChain,
    pub steps: usize,
    /// Bounds on the listed classes.
    pub classes: ClassBounds,
    /// Bounds on chain members; a step that would exceed them is deferred.
    pub cap: Bounds,
    pub seed: u64,
}

impl ChainConfig {
    /// Three consecutive colours, classes of at most two nodes and four root vertices.
    pub fn preset(chain: ColorChain, steps: usize, seed: u64) -> ChainConfig {
        let base = match chain {
            ColorChain::OmegaStar => Colour::int(-3),
            _ => Colour(vec![0.into(); chain.arity()]),
        };
        let mut colours = vec![base];
        for _ in 0..2 {
            let c = chain
                .colour_above(colours.last().unwrap())
                .expect("room above");
            colours.push(c);
        }
        ChainConfig {
            chain,
            steps,
            classes: ClassBounds {
                colours,
                max_nodes: 2,
                min_root: 1,
                max_root: 4,
            },
            cap: Bounds {
                max_nodes: 36,
                max_root: 66,
            },
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Joint,
    Extend,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Done,
    Deferred,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepLog {
    pub step: usize,
    pub task: Task,
    pub status: Status,
    /// Node count and root size of the new member.
    pub sizes: (usize, usize),
    pub note: String,
}

impl fmt::Display for StepLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let task = match self.task {
            Task::Joint => "joint",
            Task::Extend => "extend",
        };
        let status = match self.status {
            Status::Done => "done",
            Status::Deferred => "deferred",
        };
        write!(
            f,
            "step {} task={task} status={status} sizes={},{}",
            self.step, self.sizes.0, self.sizes.1
        )
    }
}

/// A discharged extension task: `nu` embeds `e` in the chain member after `step`, extending `mu`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discharged {
    pub step: usize,
    pub b: TreeOfBSets,
    pub e: TreeOfBSets,
    pub mu: ArborealMorphism,
    pub nu: ArborealMorphism,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainResult {
    pub chain: Vec<TreeOfBSets>,
    /// `inclusions[i]` embeds `chain[i]` in `chain[i + 1]`.
    pub inclusions: Vec<ArborealMorphism>,
    pub log: Vec<StepLog>,
    pub discharged: Vec<Discharged>,
    /// Colours of the listed classes.
    pub window: Vec<Colour>,
}

impl ChainResult {
    pub fn last(&self) -> &TreeOfBSets {
        self.chain.last().expect("A_0 is always present")
    }

    /// Every member in the TOB format, separated by `# step i` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.chain.iter().enumerate() {
            out += &format!("# step {i}\n{}", t.to_text());
        }
        out
    }
}

/// An extension task: each class is listed with a few one-point extensions of it.
fn extension_tasks(classes: &[TreeOfBSets], seed: u64) -> Vec<(usize, TreeOfBSets)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for round in 0..2 {
        for (i, b) in classes.iter().enumerate() {
            if let Some(e) = random_one_point(&mut rng, b) {
                if round == 0 || !out.iter().any(|(j, x)| *j == i && x == &e) {
                    out.push((i, e));
                }
            }
        }
    }
    out
}

fn fits(t: &TreeOfBSets, cap: Bounds) -> bool {
    t.node_count() <= cap.max_nodes && t.root_bset().len() <= cap.max_root
}

/// Whether `ai` plus what `e` adds over `b` stays under the cap, judged before amalgamating.
fn fits_projected(ai: &TreeOfBSets, b: &TreeOfBSets, e: &TreeOfBSets, cap: Bounds) -> bool {
    let grow = |f: fn(&TreeOfBSets) -> usize| f(ai) + f(e) - f(b);
    grow(|t| t.node_count()) <= cap.max_nodes && grow(|t| t.root_bset().len()) <= cap.max_root
}

/// `A_{i+1}` with `A_i` literally included and `e` embedded over `mu`.
fn discharge(
    ai: &TreeOfBSets,
    b: &TreeOfBSets,
    e: &TreeOfBSets,
    mu: &ArborealMorphism,
) -> Result<(TreeOfBSets, ArborealMorphism)> {
    let (moved, iso) = transport(b, mu, ai, None)?;
    let r = amalgamate(b, e, &moved)?;
    let to_d = iso.compose(&r.emb2)?;
    let (next, back) = transport(ai, &to_d, &r.amalgam, None)?;
    let nu = r.emb1.compose(&back)?;
    Ok((
        next,
        ArborealMorphism {
            kind: MorphismKind::StrongEmbedding,
            ..nu
        },
    ))
}

/// Runs the alternating construction for `cfg.steps` stages: odd stages jointly embed the next
/// listed class, even stages extend the next listed embedding.
pub fn build_chain(cfg: &ChainConfig) -> Result<ChainResult> {
    let classes = enumerate_classes(&cfg.chain, &cfg.classes);
    let first = classes
        .first()
        .ok_or_else(|| Error::Other("no classes within the bounds".into()))?
        .clone();
    let tasks = extension_tasks(&classes, cfg.seed);
    let mut res = ChainResult {
        chain: vec![first],
        inclusions: Vec::new(),
        log: Vec::new(),
        discharged: Vec::new(),
        window: cfg.classes.colours.clone(),
    };
    for step in 1..=cfg.steps {
        let ai = res.last().clone();
        // Ok(next member, discharged task, note) or Err(reason for deferring)
        let (task, outcome) = if step % 2 == 1 {
            let b = &classes[(step / 2) % classes.len()];
            let (j, _, _) = joint_embed(&ai, b)?;
            (Task::Joint, Ok((j, None, "joint")))
        } else {
            let (bi, e) = &tasks[(step / 2 - 1) % tasks.len()];
            let b = &classes[*bi];
            let outcome = match strong_embeddings(b, &ai, 1).into_iter().next() {
                None => Err("no-embedding"),
                Some(mu) => {
                    if check_extension_property(&ai, b, e, &mu)?.is_some() {
                        Ok((ai.clone(), None, "present"))
                    } else if !fits_projected(&ai, b, e, cfg.cap) {
                        Err("cap")
                    } else {
                        let (next, nu) = discharge(&ai, b, e, &mu)?;
                        let d = Discharged {
                            step,
                            b: b.clone(),
                            e: e.clone(),
                            mu,
                            nu,
                        };
                        Ok((next, Some(d), "amalgam"))
                    }
                }
            };
            (Task::Extend, outcome)
        };
        let (next, status, note, d) = match outcome {
            Ok((next, d, note)) if fits(&next, cfg.cap) => (next, Status::Done, note, d),
            Ok(_) => (ai.clone(), Status::Deferred, "cap", None),
            Err(why) => (ai.clone(), Status::Deferred, why, None),
        };
        res.log.push(StepLog {
            step,
            task,
            status,
            sizes: (next.node_count(), next.root_bset().len()),
            note: note.into(),
        });
        res.discharged.extend(d);
        res.inclusions.push(ArborealMorphism::inclusion(&ai));
        res.chain.push(next);
    }
    Ok(res)
}

/// A strong embedding of `e` into `a_n` extending `mu: b -> a_n`, if `a_n` has one.
pub fn check_extension_property(
    a_n: &TreeOfBSets,
    b: &TreeOfBSets,
    e: &TreeOfBSets,
    mu: &ArborealMorphism,
) -> Result<Option<ArborealMorphism>> {
    if !is_strong_substructure(b, e) {
        return Err(Error::NotStrong(
            "b is not a strong substructure of e".into(),
        ));
    }
    mu.check(b, a_n).into_result()?;
    Ok(strong_embeddings_extending(e, a_n, mu, 1)
        .into_iter()
        .next())
}

/// Pre-branches of pre-sets containing `p` that omit `p`.
pub fn c_family(a: &TreeOfBSets, p: &str) -> Result<BTreeSet<BTreeSet<String>>> {
    if !a.root_bset().contains(p) {
        return Err(Error::UnknownVertex(p.to_string()));
    }
    let mut out = BTreeSet::new();
    for (t, b) in &a.bsets {
        if !a.pre_set(t)?.contains(p) {
            continue;
        }
        let fib = a.fibres(t)?;
        for v in b.vertices() {
            for branch in b.branches_at(v)? {
                let pre: BTreeSet<String> =
                    branch.iter().flat_map(|u| fib[u].iter().cloned()).collect();
                if !pre.contains(p) {
                    out.insert(pre);
                }
            }
        }
    }
    Ok(out)
}

/// `C(x; y, z)` on the root domain without `p`: some member of [`c_family`] holds `y` and `z`
/// but not `x`.
pub fn derive_c_relation(a: &TreeOfBSets, p: &str) -> Result<TernaryRelation> {
    let fam = c_family(a, p)?;
    let dom: Vec<String> = a
        .root_bset()
        .vertices()
        .filter(|v| *v != p)
        .cloned()
        .collect();
    let mut r = TernaryRelation::new(dom.iter().cloned());
    for gamma in &fam {
        for x in dom.iter().filter(|x| !gamma.contains(*x)) {
            for y in gamma {
                for z in gamma {
                    r.insert(x, y, z)?;
                }
            }
        }
    }
    Ok(r)
}

/// A pair of sets that overlap without either containing the other.
pub fn typical_pair(
    fam: &BTreeSet<BTreeSet<String>>,
) -> Option<(BTreeSet<String>, BTreeSet<String>)> {
    let v: Vec<&BTreeSet<String>> = fam.iter().collect();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let (g, d) = (v[i], v[j]);
            if !g.is_disjoint(d) && !g.is_subset(d) && !d.is_subset(g) {
                return Some((g.clone(), d.clone()));
            }
        }
    }
    None
}
