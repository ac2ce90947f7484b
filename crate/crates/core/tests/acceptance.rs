//! Acceptance run: one PASS/FAIL line per criterion, brute-force oracles written here from
//! first principles. Exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bsetree::amalgam::{amalgamate, amalgamate_one_point, classify_extension, decompose};
use bsetree::ambient::{AmbientNode, ColorChain};
use bsetree::bset::{relation_to_tree, validate_b_axioms, validate_c_axioms, BSet};
use bsetree::forest::{TreeOfBSets, VertexMap};
use bsetree::fraisse::{
    are_isomorphic, build_chain, c_family, check_extension_property, derive_c_relation,
    typical_pair, ChainConfig,
};
use bsetree::gen::{random_tree, random_triple, Bounds};
use bsetree::lset::{LSet, Triple};
use bsetree::morphisms::{
    is_strong_substructure, l_iso_to_arboreal, l_isomorphisms, strong_embeddings,
    symmetric_orbit_union, triple_orbits, AUTOMORPHISM_GUARD,
};
use bsetree::reconstruct::{align, recover_tree, root_adjacency};

type Check = Result<String, String>;

/// Name, optional time budget in seconds, and the check.
type Criterion<'a> = (&'static str, Option<u64>, Box<dyn Fn() -> Check + 'a>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------------------------------------
// Oracles

/// Every labelled tree on `0..n`, decoded from Prüfer sequences.
fn labelled_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n <= 1 {
        return vec![vec![]];
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    let mut out = Vec::with_capacity(total);
    let mut code = vec![0usize; len];
    for mut k in 0..total {
        for c in code.iter_mut() {
            *c = k % n;
            k /= n;
        }
        out.push(prufer_edges(&code, n));
    }
    out
}

fn prufer_edges(code: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &c in code {
        degree[c] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &c in code {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, c));
        degree[leaf] -= 1;
        degree[c] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// All-pairs distances of a tree on `0..n` by breadth-first search.
fn distances(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n)
        .map(|s| {
            let mut d = vec![u32::MAX; n];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &w in &adj[v] {
                    if d[w] == u32::MAX {
                        d[w] = d[v] + 1;
                        q.push_back(w);
                    }
                }
            }
            d
        })
        .collect()
}

/// `x` lies on the path from `y` to `z`.
fn on_path(d: &[Vec<u32>], x: usize, y: usize, z: usize) -> bool {
    d[y][x] + d[x][z] == d[y][z]
}

/// Path betweenness as a B-relation: a one-point tree carries the empty relation by convention.
fn b_holds(d: &[Vec<u32>], x: usize, y: usize, z: usize) -> bool {
    d.len() > 1 && on_path(d, x, y, z)
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

fn bset_of(n: usize, edges: &[(usize, usize)]) -> BSet {
    let nm = names(n);
    BSet::new(
        nm.clone(),
        edges.iter().map(|&(a, b)| (nm[a].clone(), nm[b].clone())),
    )
    .unwrap()
}

/// Betweenness of a tree on `0..n` as a bit set over all ordered triples.
fn betweenness_bits(n: usize, d: &[Vec<u32>]) -> Vec<u64> {
    let mut bits = vec![0u64; (n * n * n).div_ceil(64)];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if b_holds(d, x, y, z) {
                    let i = (x * n + y) * n + z;
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
        }
    }
    bits
}

fn tob(body: &str) -> TreeOfBSets {
    TreeOfBSets::parse(&format!("TOB v1 chain=Rationals\n{body}")).unwrap()
}

fn chains() -> [ColorChain; 3] {
    [
        ColorChain::Rationals,
        ColorChain::OmegaStar,
        "Lex:ZQ".parse().unwrap(),
    ]
}

/// Seeded random instances over the three chains.
fn corpus(count: usize, bounds: Bounds, salt: u64) -> Vec<TreeOfBSets> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(salt * 1_000_003 + i as u64);
            random_tree(&mut rng, &chains()[i % 3], bounds)
        })
        .collect()
}

fn main_corpus() -> Vec<TreeOfBSets> {
    corpus(
        600,
        Bounds {
            max_nodes: 5,
            max_root: 10,
        },
        1,
    )
}

fn small_corpus() -> Vec<TreeOfBSets> {
    corpus(
        300,
        Bounds {
            max_nodes: 3,
            max_root: 7,
        },
        2,
    )
}

fn e2() -> TreeOfBSets {
    tob(
        "node 0\nvertices e x1 x2 x3\nedges e-x1 e-x2 e-x3\nf 1 -> e\ng 1: x1->X1 x2->X2 x3->X3\n\
         node 1\nvertices X1 X2 X3\nedges X1-X2 X2-X3\n",
    )
}

fn triple(a: &str, b: &str, c: &str) -> Triple {
    (a.into(), b.into(), c.into())
}

// ---------------------------------------------------------------------------------------------
// Criteria

fn duality() -> Check {
    let mut count = 0;
    for n in 1..=8 {
        let nm = names(n);
        for edges in labelled_trees(n) {
            let b = bset_of(n, &edges);
            let r = b.relation();
            if n <= 6 {
                // the derived relation against path betweenness from distances
                let d = distances(n, &edges);
                for x in 0..n {
                    for y in 0..n {
                        for z in 0..n {
                            ensure!(
                                r.holds(&nm[x], &nm[y], &nm[z]) == b_holds(&d, x, y, z),
                                "relation differs from path betweenness on {edges:?}"
                            );
                        }
                    }
                }
            }
            let rep = validate_b_axioms(&r).map_err(|e| e.to_string())?;
            ensure!(rep.passed(), "axioms fail on {edges:?}: {rep}");
            let back = relation_to_tree(&r).map_err(|e| e.to_string())?;
            ensure!(back == b, "relation_to_tree does not invert {edges:?}");
            count += 1;
        }
    }
    Ok(format!("{count} labelled trees on 1..8 vertices"))
}

fn containment_is_equality() -> Check {
    let mut pairs = 0u64;
    let mut contained = 0u64;
    for n in 1..=6 {
        let trees = labelled_trees(n);
        let nm = names(n);
        let bits: Vec<Vec<u64>> = trees
            .iter()
            .map(|edges| {
                let d = distances(n, edges);
                let own = betweenness_bits(n, &d);
                // the library relation must give the same bits
                let r = bset_of(n, edges).relation();
                let mut lib = vec![0u64; own.len()];
                for (x, y, z) in &r.triples() {
                    let ix = |v: &String| nm.iter().position(|w| w == v).unwrap();
                    let i = (ix(x) * n + ix(y)) * n + ix(z);
                    lib[i / 64] |= 1 << (i % 64);
                }
                assert_eq!(lib, own, "relation differs on {edges:?}");
                own
            })
            .collect();
        for (i, a) in bits.iter().enumerate() {
            for (j, b) in bits.iter().enumerate() {
                pairs += 1;
                if a.iter().zip(b).all(|(x, y)| x & !y == 0) {
                    contained += 1;
                    ensure!(i == j, "n={n}: tree {i} is contained in tree {j}");
                }
            }
        }
    }
    Ok(format!(
        "{pairs} ordered pairs on 1..6 vertices, {contained} containments, all trivial"
    ))
}

/// Oracle witnesses of the unordered triple: every `(node, middle)` where the three classes are
/// defined, distinct, and the middle one lies between the other two.
fn scan_witnesses(a: &TreeOfBSets, xs: [&str; 3]) -> Vec<(AmbientNode, String)> {
    let root = a.root();
    let mut out = Vec::new();
    for t in a.nodes() {
        let gm = a.g_composite(&root, t).unwrap();
        let img: Vec<Option<&String>> = xs.iter().map(|x| gm.get(*x)).collect();
        let [Some(p), Some(q), Some(r)] = img[..] else {
            continue;
        };
        if p == q || q == r || p == r {
            continue;
        }
        let b = a.bset(t).unwrap();
        for (m, y, z, name) in [(p, q, r, xs[0]), (q, p, r, xs[1]), (r, p, q, xs[2])] {
            if b.between(m, y, z).unwrap() {
                out.push((t.clone(), name.to_string()));
            }
        }
    }
    out
}

fn unique_witnesses(corpus: &[TreeOfBSets]) -> Check {
    let mut triples = 0;
    for a in corpus {
        ensure!(a.validate().ok(), "invalid instance\n{a}");
        let l = a.compute_l();
        let mut oracle = BTreeSet::new();
        let dom: Vec<String> = a.root_bset().vertices().cloned().collect();
        for i in 0..dom.len() {
            for j in i + 1..dom.len() {
                for k in j + 1..dom.len() {
                    let xs = [dom[i].as_str(), dom[j].as_str(), dom[k].as_str()];
                    let w = scan_witnesses(a, xs);
                    ensure!(w.len() == 1, "{xs:?} has witnesses {w:?}\n{a}");
                    let (t, m) = &w[0];
                    let rest: Vec<&str> = xs.iter().copied().filter(|x| x != m).collect();
                    let found = a
                        .witness_node(m, rest[0], rest[1])
                        .map_err(|e| e.to_string())?;
                    ensure!(
                        &found == t,
                        "witness_node gives {found}, scan gives {t}\n{a}"
                    );
                    oracle.insert(triple(m, rest[0], rest[1]));
                    oracle.insert(triple(m, rest[1], rest[0]));
                    triples += 1;
                }
            }
        }
        ensure!(oracle == l.triples, "compute_l differs from the scan\n{a}");
    }
    Ok(format!(
        "{} instances, {triples} unordered triples, one witness and one orientation each",
        corpus.len()
    ))
}

/// Trees on the domain of `l` whose betweenness on distinct triples lies in `l`.
fn trees_inside(l: &LSet) -> Vec<BTreeSet<(String, String)>> {
    let dom: Vec<&String> = l.domain.iter().collect();
    let n = dom.len();
    let mut dense = vec![false; n * n * n];
    for (a, b, c) in &l.triples {
        let ix = |v: &String| dom.iter().position(|w| *w == v).unwrap();
        dense[(ix(a) * n + ix(b)) * n + ix(c)] = true;
    }
    let mut out = Vec::new();
    'trees: for edges in labelled_trees(n) {
        let d = distances(n, &edges);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let distinct = x != y && y != z && x != z;
                    if distinct && on_path(&d, x, y, z) && !dense[(x * n + y) * n + z] {
                        continue 'trees;
                    }
                }
            }
        }
        out.push(edge_set(
            edges.iter().map(|&(a, b)| (dom[a].clone(), dom[b].clone())),
        ));
    }
    out
}

fn edge_set(it: impl IntoIterator<Item = (String, String)>) -> BTreeSet<(String, String)> {
    it.into_iter()
        .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
        .collect()
}

fn reconstruction(corpus: &[TreeOfBSets]) -> Check {
    let mut enumerated = 0;
    for a in corpus {
        let l = a.compute_l();
        if l.domain.len() <= 7 {
            let inside = trees_inside(&l);
            ensure!(inside.len() == 1, "{} trees inside L\n{a}", inside.len());
            let adj = root_adjacency(&l).map_err(|e| e.to_string())?;
            ensure!(
                edge_set(adj.edges()) == inside[0],
                "root_adjacency differs\n{a}"
            );
            ensure!(
                edge_set(a.root_bset().edges()) == inside[0],
                "the tree inside L is not the root B-set\n{a}"
            );
            enumerated += 1;
        }
        let shape = recover_tree(&l).map_err(|e| format!("{e}\n{a}"))?;
        ensure!(align(a, &shape).is_some(), "no alignment\n{a}\n{shape}");
    }
    Ok(format!(
        "{enumerated} instances enumerated exhaustively, {} of {} aligned",
        corpus.len(),
        corpus.len()
    ))
}

/// A copy of `a` with every root vertex renamed by `r`-prefixing.
fn relabel_root(a: &TreeOfBSets) -> TreeOfBSets {
    let root = a.root();
    let map: BTreeMap<String, String> = a
        .root_bset()
        .vertices()
        .map(|v| (v.clone(), format!("r{v}")))
        .collect();
    let mut bsets = BTreeMap::new();
    let mut f = BTreeMap::new();
    let mut g = BTreeMap::new();
    for t in a.nodes() {
        let b = a.bset(t).unwrap();
        bsets.insert(
            t.clone(),
            if *t == root {
                b.rename(&map).unwrap()
            } else {
                b.clone()
            },
        );
        if let Some(p) = a.parent(t) {
            let fv = a.f_of(t).unwrap().clone();
            let gv = a.g_of(t).unwrap().clone();
            if *p == root {
                f.insert(t.clone(), map[&fv].clone());
                g.insert(
                    t.clone(),
                    gv.into_iter()
                        .map(|(k, v)| (map[&k].clone(), v))
                        .collect::<VertexMap>(),
                );
            } else {
                f.insert(t.clone(), fv);
                g.insert(t.clone(), gv);
            }
        }
    }
    TreeOfBSets::from_parts(a.chain.clone(), bsets, f, g).unwrap()
}

fn lift_round_trip(corpus: &[TreeOfBSets]) -> Check {
    let mut isos = 0;
    for a in corpus {
        for b in [a.clone(), relabel_root(a)] {
            // arboreal isomorphisms found by search, independent of the lift
            let found = strong_embeddings(a, &b, usize::MAX);
            ensure!(!found.is_empty(), "no isomorphism onto the copy\n{a}");
            for alpha in &found {
                let psi = alpha.induced_l_map(a, &b).map_err(|e| e.to_string())?;
                let lift = l_iso_to_arboreal(a, &b, &psi).map_err(|e| format!("{e}\n{a}"))?;
                ensure!(
                    lift.tau == alpha.tau && lift.phi == alpha.phi,
                    "induce then lift moved an isomorphism\n{a}"
                );
            }
            let (la, lb) = (a.compute_l(), b.compute_l());
            let mut lifted = 0;
            for psi in l_isomorphisms(&la, &lb) {
                if let Ok(lift) = l_iso_to_arboreal(a, &b, &psi) {
                    let back = lift.induced_l_map(a, &b).map_err(|e| e.to_string())?;
                    ensure!(back == psi, "lift then induce changed the map\n{a}");
                    lifted += 1;
                }
            }
            ensure!(
                lifted == found.len(),
                "{lifted} lifts but {} isomorphisms\n{a}",
                found.len()
            );
            isos += found.len();
        }
    }
    Ok(format!(
        "{} instances, {isos} isomorphisms round-tripped both ways",
        corpus.len()
    ))
}

fn amalgam_cases() -> Check {
    let path = |vs: &str| {
        let v: Vec<&str> = vs.split('-').collect();
        let e: Vec<String> = v.windows(2).map(|w| format!("{}-{}", w[0], w[1])).collect();
        tob(&format!(
            "node 0\nvertices {}\nedges {}\n",
            v.join(" "),
            e.join(" ")
        ))
    };
    let ternary = |colour: &str, order: &str| {
        let v: Vec<&str> = order.split('-').collect();
        let e: Vec<String> = v.windows(2).map(|w| format!("{}-{}", w[0], w[1])).collect();
        tob(&format!(
            "node 0\nvertices x u y w\nedges x-u u-y u-w\nf {colour} -> u\ng {colour}: x->X y->Y w->W\n\
             node {colour}\nvertices X Y W\nedges {}\n",
            e.join(" ")
        ))
    };
    let e2_rest = "node 0\nvertices e x1 x2 x3\nedges e-x1 e-x2 e-x3\nf 1 -> e\n\
                   g 1: x1->X1 x2->X2 x3->X3\nnode 1\nvertices X1 X2 X3\nedges X1-X2 X2-X3\n";
    let star = |colour: &str, hub: &str| {
        tob(&format!(
            "node {colour}\nvertices {hub} Le Lx1 Lx2 Lx3\nedges {hub}-Le {hub}-Lx1 {hub}-Lx2 {hub}-Lx3\n\
             f 0 -> {hub}\ng 0: Le->e Lx1->x1 Lx2->x2 Lx3->x3\n{e2_rest}"
        ))
    };
    let e2_leaf = tob("node 0\nvertices e x1 x2 x3 z\nedges e-x1 e-x2 e-x3 x1-z\nf 1 -> e\n\
                       g 1: x1->X1 x2->X2 x3->X3 z->X1\nnode 1\nvertices X1 X2 X3\nedges X1-X2 X2-X3\n");
    let ram_base = tob(
        "node 0\nvertices u a b c\nedges u-a u-b u-c\nf 1 -> u\ng 1: a->A b->B c->C\n\
                        node 1\nvertices A B C\nedges A-B B-C\n",
    );
    let ram_above = |edges: &str| {
        tob(&format!(
            "node 0\nvertices u a b c e\nedges u-a u-b u-c u-e\nf 1 -> u\ng 1: a->A b->B c->C e->D\n\
             node 1\nvertices A B C D\nedges {edges}\n"
        ))
    };
    let ram_star = |colour: &str| {
        tob(&format!(
            "node 0\nvertices u a b c e\nedges u-a u-b u-c u-e\nf {colour} -> u\n\
             g {colour}: a->la b->lb c->lc e->h\n\
             node {colour}\nvertices h la lb lc\nedges h-la h-lb h-lc\nf 1 -> h\ng 1: la->A lb->B lc->C\n\
             node 1\nvertices A B C\nedges A-B B-C\n"
        ))
    };
    let a3 = path("a-b-c");
    let ux = path("x-u-y");
    let e2 = e2();
    let cases: Vec<(&str, TreeOfBSets, TreeOfBSets, TreeOfBSets)> = vec![
        (
            "identified pair",
            a3.clone(),
            path("p-a-b-c"),
            path("q-a-b-c"),
        ),
        (
            "star/star distinct colours",
            e2.clone(),
            star("-2", "h"),
            star("-1", "k"),
        ),
        ("star/root", e2.clone(), star("-1", "h"), e2_leaf),
        (
            "disjoint attachments",
            a3.clone(),
            path("p-a-b-c"),
            path("a-b-c-q"),
        ),
        ("leaf", a3.clone(), path("a-b-c-d"), path("a-b-x-c")),
        ("dyadic", a3.clone(), path("a-x-b-c"), path("a-b-y-c")),
        (
            "ternary same colour",
            ux.clone(),
            ternary("1", "W-X-Y"),
            ternary("1", "X-W-Y"),
        ),
        (
            "ternary distinct colours",
            ux.clone(),
            ternary("1", "X-W-Y"),
            ternary("2", "X-Y-W"),
        ),
        (
            "ramification, both above",
            ram_base.clone(),
            ram_above("A-B B-C C-D"),
            ram_above("A-D D-B B-C"),
        ),
        (
            "ramification, two stars below",
            ram_base.clone(),
            ram_star("1/3"),
            ram_star("2/3"),
        ),
        (
            "ramification, star below and growth above",
            ram_base.clone(),
            ram_star("1/2"),
            ram_above("A-B B-C C-D"),
        ),
    ];
    let mut tags = Vec::new();
    for (name, a, e1, e2) in &cases {
        let k1 = classify_extension(a, e1).map_err(|e| format!("{name}: {e}"))?;
        let k2 = classify_extension(a, e2).map_err(|e| format!("{name}: {e}"))?;
        for (x, y) in [(e1, e2), (e2, e1)] {
            let r = amalgamate_one_point(a, x, y).map_err(|e| format!("{name}: {e}"))?;
            r.verify(a, x, y).map_err(|e| format!("{name}: {e}"))?;
            if *name == "ternary distinct colours" {
                let root = r.amalgam.root_bset();
                ensure!(
                    root.len() == a.root_bset().len() + 3,
                    "{name}: root has {}",
                    root.len()
                );
                ensure!(
                    root.degree("u").unwrap() == 5,
                    "{name}: u has degree {}",
                    root.degree("u").unwrap()
                );
            }
            if *name == "identified pair" {
                ensure!(r.amalgam.root_bset().len() == 4, "{name}: not identified");
            }
        }
        tags.push(format!("{}/{}", k1.tag(), k2.tag()));
    }
    Ok(format!(
        "{} cases both ways: {}",
        cases.len(),
        tags.join(" ")
    ))
}

fn amalgam_fuzz() -> Check {
    let n = 1000;
    let mut steps = 0;
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + i as u64);
        let (a, e1, e2) = random_triple(&mut rng, &chains()[i % 3], Bounds::default());
        let r = amalgamate(&a, &e1, &e2).map_err(|e| format!("case {i}: {e}"))?;
        r.verify(&a, &e1, &e2)
            .map_err(|e| format!("case {i}: {e}"))?;
        for e in [&e1, &e2] {
            let chain = decompose(&a, e).map_err(|x| format!("case {i}: {x}"))?;
            ensure!(
                chain.first() == Some(&a),
                "case {i}: chain does not start at A"
            );
            let last = chain.last().unwrap();
            ensure!(
                are_isomorphic(last, e).is_some(),
                "case {i}: chain does not end at E"
            );
            for w in chain.windows(2) {
                classify_extension(&w[0], &w[1]).map_err(|x| format!("case {i}: {x}"))?;
                steps += 1;
            }
        }
    }
    Ok(format!(
        "{n} triples amalgamated, {steps} one-point steps recomposed"
    ))
}

fn chain_prefix() -> Check {
    let mut notes = Vec::new();
    let mut elapsed = Duration::ZERO;
    for preset in [ColorChain::OmegaStar, ColorChain::Rationals] {
        let cfg = ChainConfig::preset(preset.clone(), 50, 11);
        let t = Instant::now();
        let r = build_chain(&cfg).map_err(|e| e.to_string())?;
        elapsed += t.elapsed();
        for (i, inc) in r.inclusions.iter().enumerate() {
            let (s, b) = (&r.chain[i], &r.chain[i + 1]);
            ensure!(inc.check(s, b).ok(), "{preset}: inclusion {i} fails");
            ensure!(
                is_strong_substructure(s, b),
                "{preset}: step {i} is not strong"
            );
        }
        for d in &r.discharged {
            ensure!(
                d.nu.check(&d.e, &r.chain[d.step]).ok(),
                "{preset}: step {} bad",
                d.step
            );
            let again =
                check_extension_property(r.last(), &d.b, &d.e, &d.mu).map_err(|e| e.to_string())?;
            ensure!(
                again.is_some(),
                "{preset}: task of step {} not found",
                d.step
            );
        }
        let s = build_chain(&cfg).map_err(|e| e.to_string())?;
        ensure!(
            s.to_text() == r.to_text(),
            "{preset}: chains differ for one seed"
        );
        let log = |x: &bsetree::fraisse::ChainResult| {
            x.log
                .iter()
                .map(|l| format!("{l} {}", l.note))
                .collect::<Vec<_>>()
        };
        ensure!(log(&s) == log(&r), "{preset}: logs differ for one seed");
        let last = r.last();
        notes.push(format!(
            "{preset}: {} discharged, final {}x{}",
            r.discharged.len(),
            last.node_count(),
            last.root_bset().len()
        ));
    }
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "N=50 in {:.1}s; {}",
        elapsed.as_secs_f64(),
        notes.join("; ")
    ))
}

fn c_relations(corpus: &[TreeOfBSets]) -> Check {
    let (mut derived, mut asserted, mut c4) = (0, 0, 0);
    for a in corpus {
        for p in a.root_bset().vertices() {
            let fam = c_family(a, p).map_err(|e| e.to_string())?;
            ensure!(
                typical_pair(&fam).is_none(),
                "pre-branches cross at {p}\n{a}"
            );
            let r = derive_c_relation(a, p).map_err(|e| e.to_string())?;
            let rep = validate_c_axioms(&r).map_err(|e| e.to_string())?;
            derived += 1;
            ensure!(rep.holds("C1"), "C1 fails at {p}: {rep}\n{a}");
            if a.node_count() >= 2 && fam.iter().any(|g| g.len() >= 2) {
                ensure!(
                    rep.holds("C2") && rep.holds("C3"),
                    "C2/C3 fail at {p}: {rep}\n{a}"
                );
                asserted += 1;
            }
            if rep.passed() {
                c4 += 1;
            }
        }
    }
    let rep = validate_c_axioms(&derive_c_relation(&e2(), "e").unwrap()).unwrap();
    ensure!(rep.passed(), "the E2 fixture fails: {rep}");
    Ok(format!(
        "{} instances, {derived} relations, C2/C3 asserted on {asserted}, all of C1-C4 on {c4} ({:.0}%), E2 at e passes",
        corpus.len(),
        100.0 * c4 as f64 / derived as f64
    ))
}

fn orbits_and_l(corpora: &[&[TreeOfBSets]]) -> Check {
    let mut checked = 0;
    for a in corpora.iter().flat_map(|c| c.iter()) {
        if a.root_bset().len() > AUTOMORPHISM_GUARD {
            continue;
        }
        let l = a.compute_l();
        for o in triple_orbits(a).map_err(|e| e.to_string())? {
            let inside = o.iter().filter(|t| l.triples.contains(*t)).count();
            ensure!(
                inside == 0 || inside == o.len(),
                "orbit splits across L\n{a}"
            );
        }
        let u = symmetric_orbit_union(a).map_err(|e| e.to_string())?;
        ensure!(u.is_subset(&l.triples), "symmetric union leaves L\n{a}");
        checked += 1;
    }
    let e = e2();
    let u = symmetric_orbit_union(&e).unwrap();
    let want: BTreeSet<Triple> = [
        triple("x2", "x1", "x3"),
        triple("x2", "x3", "x1"),
        triple("e", "x1", "x3"),
        triple("e", "x3", "x1"),
    ]
    .into();
    ensure!(u == want, "E2 union is {u:?}");
    let l = e.compute_l();
    ensure!(
        u.is_subset(&l.triples) && u.len() < l.len(),
        "E2 containment is not strict"
    );
    Ok(format!(
        "{checked} instances; E2 union has {} of {} L-triples",
        u.len(),
        l.len()
    ))
}

// ---------------------------------------------------------------------------------------------

fn main() {
    let main = main_corpus();
    let small = small_corpus();
    let criteria: Vec<Criterion> = vec![
        ("B-set duality", Some(60), Box::new(duality)),
        (
            "triple containment implies equality",
            Some(60),
            Box::new(containment_is_equality),
        ),
        (
            "unique witness and orientation",
            Some(120),
            Box::new(|| unique_witnesses(&main)),
        ),
        (
            "adjacency and reconstruction",
            None,
            Box::new(|| reconstruction(&main)),
        ),
        (
            "induce/lift round trip",
            None,
            Box::new(|| lift_round_trip(&small)),
        ),
        (
            "one-point amalgamation cases",
            None,
            Box::new(amalgam_cases),
        ),
        ("amalgamation fuzz", None, Box::new(amalgam_fuzz)),
        ("chain prefix", Some(120), Box::new(chain_prefix)),
        (
            "pre-branches and C-relations",
            None,
            Box::new(|| c_relations(&main)),
        ),
        (
            "orbits against L",
            None,
            Box::new(|| orbits_and_l(&[&small, &main])),
        ),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        let res = match (res, limit) {
            (Ok(_), Some(l)) if secs > *l as f64 => Err(format!("over the {l}s budget")),
            (r, _) => r,
        };
        match res {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                let first = why.lines().next().unwrap_or("");
                println!("FAIL {:>2} {name}: {first} [{secs:.1}s]", i + 1);
                for l in why.lines().skip(1) {
                    eprintln!("    {l}");
                }
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
