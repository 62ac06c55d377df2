//! Entity-path dictionary: bounded random walks per entity.
//!
//! Each walk draws a target length uniformly from `1..=n_hop` and then steps
//! along a uniformly chosen outgoing `(label, neighbour)` edge of the
//! inverse-augmented graph. Walks may revisit entities. Duplicate
//! `(relations, terminal)` pairs are dropped, at most `n_path` walks are kept,
//! and sampling gives up after `4 * n_path` attempts.
//!
//! When the whole walk tree of an entity (every partial walk up to `n_hop`
//! hops) has no more than `4 * n_path` nodes, the tree is enumerated instead
//! and, if it yields at most `n_path` distinct walks, all of them are kept.
//!
//! Every entity draws from its own ChaCha stream seeded from
//! `(seed, entity)`, so the dictionary does not depend on scheduling.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ids::{EdgeLabel, EntityId, RelationPath};
use crate::kg::KnowledgeGraph;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct SamplerConfig {
    pub n_path: usize,
    pub n_hop: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(n_path: usize, n_hop: usize, seed: u64) -> Result<Self> {
        if n_path == 0 || n_hop == 0 {
            return Err(Error::Config(format!(
                "n_path and n_hop must be positive (got {n_path}, {n_hop})"
            )));
        }
        if n_hop > u8::MAX as usize {
            return Err(Error::Config(format!("n_hop {n_hop} is too large")));
        }
        Ok(SamplerConfig { n_path, n_hop, seed })
    }

    /// Walk attempts, and walk-tree nodes for enumeration, per entity.
    pub fn budget(&self) -> u64 {
        (self.n_path as u64).saturating_mul(4)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Walk {
    pub relations: RelationPath,
    pub terminal: EntityId,
}

impl Walk {
    pub fn hops(&self) -> usize {
        self.relations.len()
    }

    /// Follows the walk edge by edge from `start`.
    pub fn replays_from(&self, g: &KnowledgeGraph, start: EntityId) -> bool {
        fn go(g: &KnowledgeGraph, at: EntityId, rest: &[EdgeLabel], end: EntityId) -> bool {
            match rest.split_first() {
                None => at == end,
                Some((&l, tail)) => g.neighbors(at, l).any(|n| go(g, n, tail, end)),
            }
        }
        go(g, start, &self.relations, self.terminal)
    }
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The random stream owned by entity `e` under master seed `seed`.
pub fn entity_rng(seed: u64, e: EntityId) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(mix64(seed) ^ e.0 as u64))
}

/// Samples walks for individual entities of one graph.
pub struct Sampler<'g> {
    graph: &'g KnowledgeGraph,
    cfg: SamplerConfig,
    // saturating count of partial walks of 1..=n_hop hops from each entity
    tree_size: Vec<u64>,
}

impl<'g> Sampler<'g> {
    pub fn new(graph: &'g KnowledgeGraph, cfg: SamplerConfig) -> Self {
        let n = graph.entity_count();
        // walks[v] = number of walks of exactly k hops starting at v
        let mut walks = vec![1u64; n];
        let mut total = vec![0u64; n];
        for _ in 0..cfg.n_hop {
            let next: Vec<u64> = graph
                .entities()
                .map(|v| {
                    graph
                        .out_edges(v)
                        .iter()
                        .fold(0u64, |acc, &(_, u)| acc.saturating_add(walks[u.index()]))
                })
                .collect();
            for (t, w) in total.iter_mut().zip(&next) {
                *t = t.saturating_add(*w);
            }
            walks = next;
        }
        Sampler {
            graph,
            cfg,
            tree_size: total,
        }
    }

    pub fn config(&self) -> SamplerConfig {
        self.cfg
    }

    pub fn graph(&self) -> &'g KnowledgeGraph {
        self.graph
    }

    /// Number of partial walks (saturating) within `n_hop` hops of `e`.
    pub fn walk_tree_size(&self, e: EntityId) -> u64 {
        self.tree_size[e.index()]
    }

    pub fn entity_walks(&self, e: EntityId) -> Vec<Walk> {
        let g = self.graph;
        if g.out_edges(e).is_empty() {
            return Vec::new();
        }
        if self.tree_size[e.index()] <= self.cfg.budget() {
            let all = self.enumerate(e);
            if all.len() <= self.cfg.n_path {
                return all.into_iter().collect();
            }
        }
        self.sample(e)
    }

    fn enumerate(&self, e: EntityId) -> BTreeSet<Walk> {
        fn go(g: &KnowledgeGraph, at: EntityId, path: &mut RelationPath, max: usize, out: &mut BTreeSet<Walk>) {
            if !path.is_empty() {
                out.insert(Walk {
                    relations: path.clone(),
                    terminal: at,
                });
            }
            if path.len() == max {
                return;
            }
            for &(l, next) in g.out_edges(at) {
                path.push(l);
                go(g, next, path, max, out);
                path.pop();
            }
        }
        let mut out = BTreeSet::new();
        go(self.graph, e, &mut RelationPath::new(), self.cfg.n_hop, &mut out);
        out
    }

    fn sample(&self, e: EntityId) -> Vec<Walk> {
        let g = self.graph;
        let mut rng = entity_rng(self.cfg.seed, e);
        let mut seen = HashSet::with_capacity(self.cfg.n_path.min(1 << 16));
        let mut out = Vec::with_capacity(self.cfg.n_path.min(1 << 16));
        for _ in 0..self.cfg.budget() {
            if out.len() == self.cfg.n_path {
                break;
            }
            let target = rng.random_range(1..=self.cfg.n_hop);
            let mut relations = RelationPath::new();
            let mut at = e;
            for _ in 0..target {
                let edges = g.out_edges(at);
                if edges.is_empty() {
                    break;
                }
                let (l, next) = edges[rng.random_range(0..edges.len())];
                relations.push(l);
                at = next;
            }
            if relations.is_empty() {
                continue;
            }
            let walk = Walk {
                relations,
                terminal: at,
            };
            if seen.insert(walk.clone()) {
                out.push(walk);
            }
        }
        out
    }
}

/// Walks of a single entity. Builds a [`Sampler`] for the graph; prefer
/// reusing one when sampling many entities.
pub fn sample_entity_walks(g: &KnowledgeGraph, e: EntityId, cfg: SamplerConfig) -> Result<Vec<Walk>> {
    g.check_entity(e)?;
    Ok(Sampler::new(g, cfg).entity_walks(e))
}

/// Anything that yields the walks of an entity.
pub trait WalkSource: Sync {
    fn walks(&self, e: EntityId) -> Cow<'_, [Walk]>;
    fn sampler_config(&self) -> SamplerConfig;
}

impl WalkSource for Sampler<'_> {
    fn walks(&self, e: EntityId) -> Cow<'_, [Walk]> {
        Cow::Owned(self.entity_walks(e))
    }

    fn sampler_config(&self) -> SamplerConfig {
        self.cfg
    }
}

/// Materialised walks for every entity of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntityPathDictionary {
    walks: Vec<Vec<Walk>>,
    config: SamplerConfig,
    graph_hash: String,
}

impl EntityPathDictionary {
    /// An empty dictionary for `g`, as if no entity had any walk.
    pub fn empty(g: &KnowledgeGraph, config: SamplerConfig) -> Self {
        EntityPathDictionary {
            walks: vec![Vec::new(); g.entity_count()],
            config,
            graph_hash: g.content_hash().to_owned(),
        }
    }

    pub fn from_walks(g: &KnowledgeGraph, config: SamplerConfig, walks: Vec<Vec<Walk>>) -> Self {
        assert_eq!(walks.len(), g.entity_count());
        EntityPathDictionary {
            walks,
            config,
            graph_hash: g.content_hash().to_owned(),
        }
    }

    pub fn config(&self) -> SamplerConfig {
        self.config
    }

    pub fn graph_hash(&self) -> &str {
        &self.graph_hash
    }

    pub fn entity_walks(&self, e: EntityId) -> &[Walk] {
        &self.walks[e.index()]
    }

    pub fn entity_count(&self) -> usize {
        self.walks.len()
    }

    pub fn walk_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    pub fn stored_hops(&self) -> usize {
        self.walks.iter().flatten().map(Walk::hops).sum()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut line = String::new();
        let io = |e| Error::io(path, e);
        writeln!(w, "{DICT_MAGIC} {DICT_VERSION}").map_err(io)?;
        writeln!(w, "seed {}", self.config.seed).map_err(io)?;
        writeln!(w, "n_path {}", self.config.n_path).map_err(io)?;
        writeln!(w, "n_hop {}", self.config.n_hop).map_err(io)?;
        writeln!(w, "graph_hash {}", self.graph_hash).map_err(io)?;
        writeln!(w, "entities {}", self.walks.len()).map_err(io)?;
        writeln!(w, "walks {}", self.walk_count()).map_err(io)?;
        for (e, walks) in self.walks.iter().enumerate() {
            for walk in walks {
                line.clear();
                write!(line, "{e}\t").unwrap();
                for (i, l) in walk.relations.iter().enumerate() {
                    if i > 0 {
                        line.push(',');
                    }
                    write!(line, "{l}").unwrap();
                }
                writeln!(line, "\t{}", walk.terminal).unwrap();
                w.write_all(line.as_bytes()).map_err(io)?;
            }
        }
        writeln!(w, "end").map_err(io)?;
        w.flush().map_err(io)
    }

    /// Reads a dictionary written by [`save`](Self::save). Returns `Ok(None)`
    /// when the header was written for a different graph or configuration.
    pub fn load_cached(path: &Path, g: &KnowledgeGraph, cfg: SamplerConfig) -> Result<Option<Self>> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let mut next = |what: &str| -> Result<String> {
            match lines.next() {
                Some(Ok(l)) => Ok(l),
                Some(Err(e)) => Err(Error::io(path, e)),
                None => Err(Error::format(path, format!("truncated before {what}"))),
            }
        };
        let magic = next("header")?;
        if magic != format!("{DICT_MAGIC} {DICT_VERSION}") {
            return Err(Error::format(path, format!("unsupported dictionary header {magic:?}")));
        }
        let mut field = |key: &str| -> Result<String> {
            let l = next(key)?;
            l.strip_prefix(key)
                .and_then(|v| v.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| Error::format(path, format!("expected `{key}`, found {l:?}")))
        };
        let seed = field("seed")?;
        let n_path = field("n_path")?;
        let n_hop = field("n_hop")?;
        let hash = field("graph_hash")?;
        let entities = field("entities")?;
        let total = field("walks")?;
        if seed != cfg.seed.to_string()
            || n_path != cfg.n_path.to_string()
            || n_hop != cfg.n_hop.to_string()
            || hash != g.content_hash()
            || entities != g.entity_count().to_string()
        {
            return Ok(None);
        }
        let total: usize = total.parse().map_err(|_| Error::format(path, "bad walk count"))?;
        let mut walks = vec![Vec::new(); g.entity_count()];
        let bad = |msg: &str| Error::format(path, msg.to_owned());
        for _ in 0..total {
            let l = next("walk record")?;
            let mut f = l.split('\t');
            let (Some(e), Some(rels), Some(t), None) = (f.next(), f.next(), f.next(), f.next()) else {
                return Err(bad("malformed walk record"));
            };
            let e: usize = e.parse().map_err(|_| bad("bad entity"))?;
            let terminal = EntityId(t.parse().map_err(|_| bad("bad terminal"))?);
            let relations = rels
                .split(',')
                .map(|x| x.parse().map(EdgeLabel))
                .collect::<std::result::Result<RelationPath, _>>()
                .map_err(|_| bad("bad relation path"))?;
            if e >= walks.len() || terminal.index() >= g.entity_count() || relations.is_empty() {
                return Err(bad("walk record out of range"));
            }
            walks[e].push(Walk { relations, terminal });
        }
        if next("end marker")? != "end" {
            return Err(bad("missing end marker"));
        }
        Ok(Some(EntityPathDictionary {
            walks,
            config: cfg,
            graph_hash: hash,
        }))
    }
}

const DICT_MAGIC: &str = "logre-dictionary";
const DICT_VERSION: u32 = 1;

impl WalkSource for EntityPathDictionary {
    fn walks(&self, e: EntityId) -> Cow<'_, [Walk]> {
        Cow::Borrowed(&self.walks[e.index()])
    }

    fn sampler_config(&self) -> SamplerConfig {
        self.config
    }
}

/// Samples walks for every entity, in parallel.
pub fn build_dictionary(g: &KnowledgeGraph, cfg: SamplerConfig) -> EntityPathDictionary {
    let sampler = Sampler::new(g, cfg);
    let entities: Vec<EntityId> = g.entities().collect();
    let walks = entities.par_iter().map(|&e| sampler.entity_walks(e)).collect();
    EntityPathDictionary {
        walks,
        config: cfg,
        graph_hash: g.content_hash().to_owned(),
    }
}
