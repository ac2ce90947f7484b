//! Command-line front end over the TOB and LSET text formats.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error. Every failure prints one
//! `ERR <code>: <message>` line on stderr. With `--json`, stdout carries a single JSON object
//! instead of the text report.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use bsetree::amalgam::{amalgamate, classify_extension, decompose, joint_embed};
use bsetree::ambient::ColorChain;
use bsetree::bset::validate_c_axioms;
use bsetree::forest::TreeOfBSets;
use bsetree::fraisse::{build_chain, c_family, derive_c_relation, typical_pair, ChainConfig};
use bsetree::gen::{random_triple, Bounds};
use bsetree::lset::{LSet, Triple};
use bsetree::morphisms::{automorphisms, symmetric_orbit_union, triple_orbits};
use bsetree::reconstruct::{align, recover_tree};

#[derive(Parser, Debug)]
#[command(name = "bsetree", version, about = "Finite coloured trees of B-sets")]
struct Cli {
    /// Print one JSON object on stdout instead of the line report.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check every clause of a tree of B-sets; prints "ok" or one FAIL line per violation.
    Validate { tob: PathBuf },
    /// Print the L-relation in the LSET format.
    CompileL { tob: PathBuf },
    /// The unique node witnessing betweenness of three distinct root vertices.
    Witness {
        tob: PathBuf,
        a: String,
        b: String,
        c: String,
    },
    /// Amalgamate E1 and E2 over A; prints the amalgam.
    Amalgamate {
        a: PathBuf,
        e1: PathBuf,
        e2: PathBuf,
    },
    /// Chain of one-point extensions from A up to E.
    Decompose { a: PathBuf, e: PathBuf },
    /// A structure containing both inputs, above a new root.
    JointEmbed { t1: PathBuf, t2: PathBuf },
    /// Build a prefix of the Fraisse chain.
    Chain {
        /// OmegaStar, Rationals or Lex:<word over Z,Q>
        #[arg(long)]
        preset: String,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write every member as step_<i>.tob into this directory.
        #[arg(long)]
        emit_all: Option<PathBuf>,
    },
    /// Recover the shape of a tree of B-sets from its L-relation.
    Reconstruct {
        lset: PathBuf,
        /// Also check that the recovered shape is isomorphic to this structure.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// C-relation on the root domain without `elem`, with its axiom report.
    DeriveC { tob: PathBuf, elem: String },
    /// Automorphism count, triple orbits and the symmetric orbit union.
    Orbits { tob: PathBuf },
    /// Amalgamate seeded random triples and verify each result.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 4)]
        max_nodes: usize,
        #[arg(long, default_value_t = 9)]
        max_root: usize,
    },
    /// Graphviz rendering: the node poset with each B-set as a cluster.
    ExportDot { tob: PathBuf },
}

/// A failed invocation: exit code, machine-readable code and message.
struct Failure {
    exit: u8,
    code: String,
    msg: String,
}

impl From<bsetree::Error> for Failure {
    fn from(e: bsetree::Error) -> Failure {
        Failure {
            exit: 1,
            code: e.code().into(),
            msg: e.to_string(),
        }
    }
}

fn fail(code: &str, msg: impl Into<String>) -> Failure {
    Failure {
        exit: 1,
        code: code.into(),
        msg: msg.into(),
    }
}

/// A report printed before exiting, either as text or as JSON. `failure` makes the run a domain
/// error after the report is out.
struct Out {
    text: String,
    json: Value,
    failure: Option<Failure>,
}

impl Out {
    fn ok(text: String, json: Value) -> Out {
        Out {
            text,
            json,
            failure: None,
        }
    }
}

fn read(p: &Path) -> Result<String, Failure> {
    fs::read_to_string(p).map_err(|e| Failure {
        exit: 2,
        code: "io".into(),
        msg: format!("{}: {e}", p.display()),
    })
}

fn load(p: &Path) -> Result<TreeOfBSets, Failure> {
    Ok(TreeOfBSets::parse(&read(p)?)?)
}

fn triple_json(t: &Triple) -> Value {
    json!([t.0, t.1, t.2])
}

fn lset_json(l: &LSet) -> Value {
    json!({
        "domain": l.domain,
        "triples": l.triples.iter().map(triple_json).collect::<Vec<_>>(),
    })
}

fn sizes_json(t: &TreeOfBSets) -> Value {
    json!({ "nodes": t.node_count(), "root": t.root_bset().len() })
}

fn dispatch(cmd: Cmd) -> Result<Out, Failure> {
    match cmd {
        Cmd::Validate { tob } => {
            let t = TreeOfBSets::parse_unchecked(&read(&tob)?)?;
            let report = t.validate();
            let json = json!({
                "ok": report.ok(),
                "violations": report.violations.iter().map(|v| json!({
                    "clause": v.clause, "at": v.at, "detail": v.detail,
                })).collect::<Vec<_>>(),
            });
            let failure = report.clone().into_result().err().map(Failure::from);
            Ok(Out {
                text: format!("{report}\n"),
                json,
                failure,
            })
        }
        Cmd::CompileL { tob } => {
            let l = load(&tob)?.compute_l();
            Ok(Out::ok(l.to_string(), lset_json(&l)))
        }
        Cmd::Witness { tob, a, b, c } => {
            let t = load(&tob)?;
            // The witness is looked up in the one orientation that lies in L.
            let l = t.compute_l();
            let m = l.middle(&a, &b, &c).unwrap_or(&a);
            let rest: Vec<&str> = [&a, &b, &c]
                .into_iter()
                .map(String::as_str)
                .filter(|v| *v != m)
                .collect();
            if rest.len() != 2 {
                return Err(bsetree::Error::NotDistinct(format!("{a} {b} {c}")).into());
            }
            let w = t.witness_node(m, rest[0], rest[1])?;
            let middle = m.to_string();
            Ok(Out::ok(
                format!("witness {w}\nmiddle {middle}\n"),
                json!({ "witness": w.to_string(), "middle": middle }),
            ))
        }
        Cmd::Amalgamate { a, e1, e2 } => {
            let (a, e1, e2) = (load(&a)?, load(&e1)?, load(&e2)?);
            let r = amalgamate(&a, &e1, &e2)?;
            r.verify(&a, &e1, &e2)?;
            let text = r.amalgam.to_text();
            Ok(Out::ok(
                text.clone(),
                json!({ "amalgam": text, "sizes": sizes_json(&r.amalgam) }),
            ))
        }
        Cmd::Decompose { a, e } => {
            let (a, e) = (load(&a)?, load(&e)?);
            let stages = decompose(&a, &e)?;
            let mut kinds = Vec::new();
            for w in stages.windows(2) {
                kinds.push(classify_extension(&w[0], &w[1])?.to_string());
            }
            let mut text = format!("steps {}\n", kinds.len());
            for (i, k) in kinds.iter().enumerate() {
                text += &format!("step {} {k}\n", i + 1);
            }
            for (i, s) in stages.iter().enumerate() {
                text += &format!("# stage {i}\n{}", s.to_text());
            }
            let json = json!({
                "steps": kinds,
                "stages": stages.iter().map(|s| s.to_text()).collect::<Vec<_>>(),
            });
            Ok(Out::ok(text, json))
        }
        Cmd::JointEmbed { t1, t2 } => {
            let (t1, t2) = (load(&t1)?, load(&t2)?);
            let (j, _, _) = joint_embed(&t1, &t2)?;
            let text = j.to_text();
            Ok(Out::ok(
                text.clone(),
                json!({ "joint": text, "sizes": sizes_json(&j) }),
            ))
        }
        Cmd::Chain {
            preset,
            steps,
            seed,
            emit_all,
        } => {
            let chain: ColorChain = preset.parse()?;
            let res = build_chain(&ChainConfig::preset(chain, steps, seed))?;
            if let Some(dir) = &emit_all {
                let io = |e: std::io::Error| fail("io", format!("{}: {e}", dir.display()));
                fs::create_dir_all(dir).map_err(io)?;
                for (i, t) in res.chain.iter().enumerate() {
                    fs::write(dir.join(format!("step_{i}.tob")), t.to_text()).map_err(io)?;
                }
            }
            let window: Vec<String> = res.window.iter().map(|c| c.to_string()).collect();
            let mut text = format!("window {}\n", window.join(" "));
            for l in &res.log {
                text += &format!("{l} note={}\n", l.note);
            }
            text += &format!(
                "discharged {}\n# final\n{}",
                res.discharged.len(),
                res.last()
            );
            let json = json!({
                "window": window,
                "log": res.log.iter().map(|l| json!({
                    "step": l.step,
                    "task": format!("{:?}", l.task).to_lowercase(),
                    "status": format!("{:?}", l.status).to_lowercase(),
                    "nodes": l.sizes.0,
                    "root": l.sizes.1,
                    "note": l.note,
                })).collect::<Vec<_>>(),
                "discharged": res.discharged.len(),
                "final": res.last().to_text(),
            });
            Ok(Out::ok(text, json))
        }
        Cmd::Reconstruct { lset, against } => {
            let l = LSet::parse(&read(&lset)?)?;
            let shape = recover_tree(&l)?;
            let mut text = shape.to_string();
            let mut json = json!({ "nodes": shape.nodes.len(), "shape": shape.to_string() });
            let mut failure = None;
            if let Some(p) = against {
                let t = load(&p)?;
                let found = align(&t, &shape).is_some();
                text += if found { "align ok\n" } else { "align none\n" };
                json["align"] = json!(found);
                if !found {
                    failure = Some(fail(
                        "no-alignment",
                        "shape is not isomorphic to the structure",
                    ));
                }
            }
            Ok(Out {
                text,
                json,
                failure,
            })
        }
        Cmd::DeriveC { tob, elem } => {
            let t = load(&tob)?;
            let r = derive_c_relation(&t, &elem)?;
            let report = validate_c_axioms(&r)?;
            let typical = typical_pair(&c_family(&t, &elem)?);
            let mut text = String::new();
            for (x, y, z) in r.irreflexive() {
                text += &format!("C {x} {y} {z}\n");
            }
            text += &format!("{report}\n");
            text += &format!(
                "typical-pairs {}\n",
                if typical.is_some() { "yes" } else { "none" }
            );
            let json = json!({
                "triples": r.irreflexive().iter().map(triple_json).collect::<Vec<_>>(),
                "axioms": report.results.iter().map(|(a, w)| json!({
                    "axiom": a, "pass": w.is_none(), "witness": w,
                })).collect::<Vec<_>>(),
                "typical_pair": typical.is_some(),
            });
            Ok(Out::ok(text, json))
        }
        Cmd::Orbits { tob } => {
            let t = load(&tob)?;
            let n = automorphisms(&t)?.len();
            let orbits = triple_orbits(&t)?;
            let union = symmetric_orbit_union(&t)?;
            let l = t.compute_l();
            let fmt_t = |(a, b, c): &Triple| format!("({a};{b},{c})");
            let mut text = format!("automorphisms {n}\norbits {}\n", orbits.len());
            let mut js = Vec::new();
            for o in &orbits {
                let in_l = o.iter().all(|x| l.triples.contains(x));
                let tag = if in_l { "in-l" } else { "outside-l" };
                let items: Vec<String> = o.iter().map(fmt_t).collect();
                text += &format!("orbit {tag} {}\n", items.join(" "));
                js.push(json!({ "in_l": in_l, "triples": o.iter().map(triple_json).collect::<Vec<_>>() }));
            }
            let items: Vec<String> = union.iter().map(fmt_t).collect();
            text += &format!("symmetric-union {}\n", items.join(" "));
            let json = json!({
                "automorphisms": n,
                "orbits": js,
                "symmetric_union": union.iter().map(triple_json).collect::<Vec<_>>(),
            });
            Ok(Out::ok(text, json))
        }
        Cmd::Fuzz {
            seed,
            cases,
            max_nodes,
            max_root,
        } => {
            let bounds = Bounds {
                max_nodes,
                max_root,
            };
            let failed = fuzz(seed, cases, bounds);
            let mut text = String::new();
            for (i, why) in &failed {
                text += &format!("case {i} FAIL {why}\n");
            }
            text += &format!(
                "cases {cases} passed {} failed {}\n",
                cases - failed.len(),
                failed.len()
            );
            let json = json!({
                "cases": cases,
                "failed": failed.iter().map(|(i, w)| json!({ "case": i, "reason": w })).collect::<Vec<_>>(),
            });
            let failure = (!failed.is_empty())
                .then(|| fail("fuzz", format!("{} of {cases} cases failed", failed.len())));
            Ok(Out {
                text,
                json,
                failure,
            })
        }
        Cmd::ExportDot { tob } => {
            let dot = load(&tob)?.to_dot();
            Ok(Out::ok(dot.clone(), json!({ "dot": dot })))
        }
    }
}

const FUZZ_CHAINS: [&str; 3] = ["Rationals", "OmegaStar", "Lex:ZQ"];

/// Case `i` draws from its own generator seeded with `seed + i`, so the cases can run on any
/// number of threads and still report identically. Returns the failing cases in order.
fn fuzz(seed: u64, cases: usize, bounds: Bounds) -> Vec<(usize, String)> {
    let one = |i: usize| -> Option<String> {
        let chain: ColorChain = FUZZ_CHAINS[i % 3].parse().expect("known preset");
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let (a, e1, e2) = random_triple(&mut rng, &chain, bounds);
        let r = amalgamate(&a, &e1, &e2).and_then(|r| r.verify(&a, &e1, &e2));
        r.err().map(|e| format!("{}: {e}", e.code()))
    };
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(cases.max(1));
    let mut out: Vec<(usize, String)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|k| {
                s.spawn(move || {
                    (k..cases)
                        .step_by(threads)
                        .filter_map(|i| one(i).map(|w| (i, w)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("fuzz worker panicked"))
            .collect()
    });
    out.sort();
    out
}

/// Runs one invocation; `argv[0]` is the program name.
fn run(argv: &[String]) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("ERR usage: {first}");
            return 2;
        }
    };
    let json = cli.json;
    match dispatch(cli.cmd) {
        Ok(out) => {
            if json {
                println!("{}", out.json);
            } else {
                print!("{}", out.text);
            }
            match out.failure {
                None => 0,
                Some(f) => {
                    eprintln!("ERR {}: {}", f.code, f.msg);
                    f.exit
                }
            }
        }
        Err(f) => {
            let msg = f.msg.replace('\n', " ");
            eprintln!("ERR {}: {msg}", f.code);
            f.exit
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    ExitCode::from(run(&argv))
}
