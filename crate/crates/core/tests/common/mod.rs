#![allow(dead_code)]

pub mod invariants;
pub mod oracle;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use logre::kg::{GraphBuilder, KnowledgeGraph};
use logre::reasoner::{Query, Reasoner, ReasonerConfig};
use logre::sampler::SamplerConfig;
use logre::schema::build_schema_streaming;
use logre::schema::{ReasoningSchema, ScoredPath};
use logre::score::Decay;
use logre::{EntityId, RelationId};

use oracle::{OPath, OSchema, Oracle};

pub const TYPE_POOL: [&str; 4] = ["org", "person", "place", "work"];
pub const DECAYS: [(u64, u64); 5] = [(1, 1), (1, 2), (1, 5), (19, 20), (3, 7)];

/// A random small graph with its reasoning parameters.
#[derive(Clone, Debug)]
pub struct Toy {
    pub seed: u64,
    pub n_ent: u32,
    pub n_rel: u32,
    pub facts: Vec<(u32, u32, u32)>,
    pub type_pairs: Vec<(u32, String)>,
    pub n_hop: usize,
    pub decay: (u64, u64),
    pub n_top: usize,
}

impl Toy {
    pub fn random(seed: u64) -> Toy {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_ent = rng.random_range(4..=30u32);
        let n_rel = rng.random_range(1..=6u32);
        let n_facts = rng.random_range(n_ent / 2..=2 * n_ent);
        // a few hub entities make paths overlap across heads
        let hubs = rng.random_range(1..=3u32.min(n_ent));
        let pick = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.3) {
                rng.random_range(0..hubs)
            } else {
                rng.random_range(0..n_ent)
            }
        };
        let facts = (0..n_facts)
            .map(|_| {
                let h = pick(&mut rng);
                let r = rng.random_range(0..n_rel);
                let t = pick(&mut rng);
                (h, r, t)
            })
            .collect();
        let n_types = rng.random_range(1..=TYPE_POOL.len());
        let mut type_pairs = Vec::new();
        for e in 0..n_ent {
            if rng.random_bool(0.15) {
                continue;
            }
            for _ in 0..rng.random_range(1..=3) {
                type_pairs.push((e, TYPE_POOL[rng.random_range(0..n_types)].to_owned()));
            }
        }
        let n_hop = rng.random_range(1..=3);
        let decay = DECAYS[rng.random_range(0..DECAYS.len())];
        let n_top = if rng.random_bool(0.3) {
            100
        } else {
            rng.random_range(1..=12)
        };
        Toy {
            seed,
            n_ent,
            n_rel,
            facts,
            type_pairs,
            n_hop,
            decay,
            n_top,
        }
    }

    pub fn graph(&self) -> KnowledgeGraph {
        let mut b = GraphBuilder::new();
        for e in 0..self.n_ent {
            b.entity(&format!("e{e}"));
        }
        for &(h, r, t) in &self.facts {
            b.fact(&format!("e{h}"), &format!("r{r}"), &format!("e{t}"));
        }
        for (e, ty) in &self.type_pairs {
            b.type_label(&format!("e{e}"), ty);
        }
        b.build()
    }

    pub fn decay(&self) -> Decay {
        Decay::new(self.decay.0, self.decay.1).unwrap()
    }

    /// The oracle over the same facts, expressed in the graph's ids.
    pub fn oracle(&self, g: &KnowledgeGraph) -> Oracle {
        let rel = |r: u32| g.relation_id(&format!("r{r}")).unwrap().0;
        let facts: Vec<_> = self.facts.iter().map(|&(h, r, t)| (h, rel(r), t)).collect();
        Oracle::new(
            self.n_ent,
            g.relation_count() as u32,
            &facts,
            &self.type_pairs,
            self.n_hop,
            self.decay,
        )
    }

    /// Every `(head, relation)` pair in id space.
    pub fn queries(&self, g: &KnowledgeGraph) -> Vec<(EntityId, RelationId)> {
        g.entities().flat_map(|e| g.relations().map(move |r| (e, r))).collect()
    }
}

pub fn to_opath(p: &ScoredPath) -> OPath {
    OPath {
        seq: p.relations.iter().map(|l| l.0).collect(),
        m: p.stats.m,
        n: p.stats.n,
        tails: p.example_tails.iter().map(|e| e.0).collect::<BTreeSet<_>>(),
    }
}

fn same_list(what: &str, got: &[ScoredPath], want: &[OPath]) -> Result<(), String> {
    let got: Vec<OPath> = got.iter().map(to_opath).collect();
    if got != want {
        return Err(format!("{what}: engine {got:?}\n  oracle {want:?}"));
    }
    Ok(())
}

/// Compares every list of `s` with the oracle schema, in order.
pub fn compare_schema(g: &KnowledgeGraph, s: &ReasoningSchema, o: &OSchema) -> Result<(), String> {
    let typed: usize = s.type_groups.values().map(|m| m.len()).sum();
    if typed != o.typed.len() {
        return Err(format!("type-specific list count {typed} vs oracle {}", o.typed.len()));
    }
    for (ty, rels) in &s.type_groups {
        for (r, paths) in rels {
            let key = (g.type_name(*ty).to_owned(), r.0);
            let want = o.typed.get(&key).ok_or_else(|| format!("unexpected list {key:?}"))?;
            same_list(&format!("type list {key:?}"), paths, want)?;
        }
    }
    let cross: BTreeSet<u32> = s.cross_type.keys().map(|r| r.0).collect();
    let want: BTreeSet<u32> = o.cross.keys().copied().collect();
    if cross != want {
        return Err(format!("cross-type relations {cross:?} vs oracle {want:?}"));
    }
    for (r, entry) in &s.cross_type {
        let (pooled, sources) = &o.cross[&r.0];
        same_list(&format!("cross list {}", r.0), &entry.paths, pooled)?;
        if entry.sources.len() != sources.len() {
            return Err(format!("cross {}: source groups differ", r.0));
        }
        for (ty, list) in &entry.sources {
            let name = g.type_name(*ty);
            let want = sources
                .get(name)
                .ok_or_else(|| format!("cross {}: extra source {name}", r.0))?;
            same_list(&format!("cross {} source {name}", r.0), list, want)?;
        }
    }
    Ok(())
}

// large enough that every toy entity is enumerated exhaustively
pub const N_PATH_EXHAUSTIVE: usize = 1_000_000;

/// Builds the schema exhaustively and compares it, and every query's ranking
/// under all four ablation settings, with the oracle.
pub fn check_against_oracle(toy: &Toy) -> Result<(), String> {
    let g = toy.graph();
    let cfg = SamplerConfig::new(N_PATH_EXHAUSTIVE, toy.n_hop, toy.seed).unwrap();
    let schema = build_schema_streaming(&g, cfg, toy.decay());
    let oracle = toy.oracle(&g);
    let expected = oracle.schema();
    compare_schema(&g, &schema, &expected).map_err(|e| format!("seed {}: {e}", toy.seed))?;

    for (sim, cross) in [(true, true), (false, true), (true, false), (false, false)] {
        let mut rc = ReasonerConfig::new(toy.n_top).unwrap();
        rc.similarity_enabled = sim;
        rc.cross_type_enabled = cross;
        let reasoner = Reasoner::new(&g, &schema, rc);
        for (h, r) in toy.queries(&g) {
            let got = reasoner.answer(Query::new(h, r));
            let want = oracle.rank(&expected, h.0, r.0, toy.n_top, sim, cross);
            let same = got.len() == want.len()
                && got.iter().zip(&want).all(|(a, b)| {
                    a.candidate.0 == b.entity && a.base_score == b.base && *a.final_score_squared() == b.final_sq
                });
            if !same {
                let got: Vec<_> = got.iter().map(|c| (c.candidate.0, c.base_score.to_string())).collect();
                let want: Vec<_> = want.iter().map(|c| (c.entity, c.base.to_string())).collect();
                return Err(format!(
                    "seed {} query ({}, {}) sim={sim} cross={cross}:\n  engine {got:?}\n  oracle {want:?}",
                    toy.seed, h.0, r.0
                ));
            }
        }
    }
    Ok(())
}

/// Root of the workspace.
pub fn workspace_root() -> PathBuf {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    root.canonicalize().unwrap_or(root)
}

/// A directory under `crates/core/tests/fixtures`, from either workspace crate.
pub fn fixture(name: &str) -> PathBuf {
    workspace_root().join("crates/core/tests/fixtures").join(name)
}

/// Compares `actual` with the stored golden file, or rewrites the file when
/// `UPDATE_GOLDEN` is set.
pub fn assert_golden(name: &str, actual: &str) {
    let path = fixture("toy/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1 to create it)", path.display()));
    assert!(
        expected == actual,
        "{} differs from the freshly generated output",
        path.display()
    );
}

/// The toy dataset with its settings from `run.cfg`.
pub fn toy_run() -> (logre::kg::Dataset, logre::config::RunConfig) {
    let dir = fixture("toy");
    let mut cfg = logre::config::RunConfig::default();
    cfg.apply_file(&dir.join("run.cfg")).unwrap();
    cfg.dataset_dir = Some(dir.clone());
    let data = logre::kg::load_dataset_dir(&dir, &cfg.load_options()).unwrap();
    (data, cfg)
}
