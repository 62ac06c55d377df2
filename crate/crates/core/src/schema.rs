//! Relation-path reasoning schema.
//!
//! For every type group and every relation `r` its entities hold as head, the
//! walks of those entities are counted per relation path: `m` counts walk
//! records following the path, `n` those that end at a correct tail of `r`
//! for the walk's start entity. Paths that never hit a correct tail are
//! dropped. A relation held by two or more groups is lifted into the
//! cross-type group, where each path's counts are summed over the groups that
//! contain it. Lists are sorted by `d^hops * n / m`, descending.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_rational::BigRational;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ids::{EdgeLabel, EntityId, RelationId, RelationPath, TypeId};
use crate::kg::KnowledgeGraph;
use crate::sampler::{EntityPathDictionary, Sampler, SamplerConfig, WalkSource};
use crate::score::{
    cmp_decayed, decayed_score, decayed_score_f64, format_rational, parse_rational, path_precision, Decay, PathStats,
};

/// Default bound on the example tails kept per path.
pub const DEFAULT_TAIL_CAP: usize = 64;

const ENTITY_CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoredPath {
    pub relations: RelationPath,
    pub stats: PathStats,
    /// Correct tails this path reached while the schema was built, in
    /// first-encountered order.
    pub example_tails: Vec<EntityId>,
}

impl ScoredPath {
    pub fn hops(&self) -> u32 {
        self.relations.len() as u32
    }

    /// `n / m`.
    pub fn raw_score(&self) -> BigRational {
        path_precision(self.stats)
    }

    /// `d^hops * n / m`.
    pub fn final_score(&self, decay: Decay) -> BigRational {
        decayed_score(self.stats, self.hops(), decay)
    }

    pub fn final_score_f64(&self, decay: Decay) -> f64 {
        decayed_score_f64(self.stats, self.hops(), decay)
    }
}

/// Schema order: higher decayed score first, then fewer hops, then the
/// lexicographically smaller label sequence.
pub fn cmp_paths(a: &ScoredPath, b: &ScoredPath, decay: Decay) -> Ordering {
    cmp_decayed(b.stats, b.hops(), a.stats, a.hops(), decay)
        .then_with(|| a.hops().cmp(&b.hops()))
        .then_with(|| a.relations.cmp(&b.relations))
}

pub fn sort_paths(paths: &mut [ScoredPath], decay: Decay) {
    paths.sort_by(|a, b| cmp_paths(a, b, decay));
}

/// Counts and example tails of one path within one `(group, relation)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathAccumulator {
    pub stats: PathStats,
    pub example_tails: Vec<EntityId>,
}

impl PathAccumulator {
    fn add_tail(&mut self, t: EntityId, cap: usize) {
        if self.example_tails.len() < cap && !self.example_tails.contains(&t) {
            self.example_tails.push(t);
        }
    }

    fn into_scored(self, relations: RelationPath) -> ScoredPath {
        ScoredPath {
            relations,
            stats: self.stats,
            example_tails: self.example_tails,
        }
    }
}

/// `relation path -> counts` for one `(group, relation)`.
pub type GroupPathMap = BTreeMap<RelationPath, PathAccumulator>;

/// `group -> relation -> paths`, before lifting. A relation held by a group
/// is present even when it gathered no path.
pub type GroupSchemas = BTreeMap<TypeId, BTreeMap<RelationId, Vec<ScoredPath>>>;

type PathIndex = HashMap<RelationPath, usize>;

struct Counts {
    // (group, relation) -> path -> slot in `acc`
    index: HashMap<(TypeId, RelationId), PathIndex>,
    acc: Vec<(TypeId, RelationId, RelationPath, PathAccumulator)>,
}

/// Two passes over the walk source so that only paths with at least one
/// correct-tail hit are ever counted: the first pass finds hits, the second
/// counts occurrences of the hit paths.
fn count_paths(
    g: &KnowledgeGraph,
    source: &dyn WalkSource,
    only: Option<(TypeId, RelationId)>,
    tail_cap: usize,
) -> Counts {
    let entities: Vec<EntityId> = match only {
        Some((ty, _)) => g.entities().filter(|&e| g.entity_type(e) == ty).collect(),
        None => g.entities().collect(),
    };
    let relations_of = |e: EntityId| -> Vec<RelationId> {
        let mut rs = g.head_relations(e);
        if let Some((_, r)) = only {
            rs.retain(|&x| x == r);
        }
        rs
    };

    let mut counts = Counts {
        index: HashMap::new(),
        acc: Vec::new(),
    };

    for chunk in entities.chunks(ENTITY_CHUNK) {
        let hits: Vec<Vec<(RelationId, RelationPath, EntityId)>> = chunk
            .par_iter()
            .map(|&e| {
                let rs = relations_of(e);
                if rs.is_empty() {
                    return Vec::new();
                }
                let walks = source.walks(e);
                let mut out = Vec::new();
                for w in walks.iter() {
                    for &r in &rs {
                        if g.has_fact(e, r, w.terminal) {
                            out.push((r, w.relations.clone(), w.terminal));
                        }
                    }
                }
                out
            })
            .collect();
        for (&e, entity_hits) in chunk.iter().zip(hits) {
            let ty = g.entity_type(e);
            for (r, path, tail) in entity_hits {
                let slots = counts.index.entry((ty, r)).or_default();
                let slot = *slots.entry(path.clone()).or_insert_with(|| {
                    counts.acc.push((ty, r, path, PathAccumulator::default()));
                    counts.acc.len() - 1
                });
                let acc = &mut counts.acc[slot].3;
                acc.stats.n += 1;
                acc.add_tail(tail, tail_cap);
            }
        }
    }

    for chunk in entities.chunks(ENTITY_CHUNK) {
        let occurrences: Vec<Vec<usize>> = chunk
            .par_iter()
            .map(|&e| {
                let ty = g.entity_type(e);
                let slots: Vec<&PathIndex> = relations_of(e)
                    .into_iter()
                    .filter_map(|r| counts.index.get(&(ty, r)))
                    .collect();
                if slots.is_empty() {
                    return Vec::new();
                }
                let walks = source.walks(e);
                let mut out = Vec::new();
                for w in walks.iter() {
                    for s in &slots {
                        if let Some(&i) = s.get(&w.relations) {
                            out.push(i);
                        }
                    }
                }
                out
            })
            .collect();
        for i in occurrences.into_iter().flatten() {
            counts.acc[i].3.stats.m += 1;
        }
    }
    counts
}

/// Path statistics of `relation` within the entities of type `group`.
///
/// Returns an empty map when no group entity holds `relation` or no walk of
/// theirs reaches a correct tail.
pub fn collect_group_paths(
    g: &KnowledgeGraph,
    source: &dyn WalkSource,
    group: TypeId,
    relation: RelationId,
) -> GroupPathMap {
    collect_group_paths_capped(g, source, group, relation, DEFAULT_TAIL_CAP)
}

pub fn collect_group_paths_capped(
    g: &KnowledgeGraph,
    source: &dyn WalkSource,
    group: TypeId,
    relation: RelationId,
    tail_cap: usize,
) -> GroupPathMap {
    count_paths(g, source, Some((group, relation)), tail_cap)
        .acc
        .into_iter()
        .map(|(_, _, path, acc)| (path, acc))
        .collect()
}

/// Relations held (as head) by the entities of each type group.
pub fn group_relations(g: &KnowledgeGraph) -> BTreeMap<TypeId, BTreeSet<RelationId>> {
    let mut out: BTreeMap<TypeId, BTreeSet<RelationId>> = BTreeMap::new();
    for t in g.facts() {
        out.entry(g.entity_type(t.head)).or_default().insert(t.relation);
    }
    out
}

/// Type-specific path lists for every group, unsorted (path order).
pub fn group_schemas(g: &KnowledgeGraph, source: &dyn WalkSource, tail_cap: usize) -> GroupSchemas {
    let counts = count_paths(g, source, None, tail_cap);
    let mut out: GroupSchemas = group_relations(g)
        .into_iter()
        .map(|(ty, rs)| (ty, rs.into_iter().map(|r| (r, Vec::new())).collect()))
        .collect();
    let mut by_key: BTreeMap<(TypeId, RelationId), GroupPathMap> = BTreeMap::new();
    for (ty, r, path, acc) in counts.acc {
        by_key.entry((ty, r)).or_default().insert(path, acc);
    }
    for ((ty, r), paths) in by_key {
        let list = out
            .get_mut(&ty)
            .and_then(|m| m.get_mut(&r))
            .expect("hit paths belong to a held relation");
        list.extend(paths.into_iter().map(|(p, acc)| acc.into_scored(p)));
    }
    out
}

/// A relation shared by several type groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossTypeEntry {
    /// Union of the groups' paths with pooled counts.
    pub paths: Vec<ScoredPath>,
    /// Each source group's own list, as it was before lifting.
    pub sources: BTreeMap<TypeId, Vec<ScoredPath>>,
}

impl CrossTypeEntry {
    pub fn source_groups(&self) -> impl Iterator<Item = TypeId> + '_ {
        self.sources.keys().copied()
    }

    /// Number of source groups whose list contains `path`.
    pub fn contributing_groups(&self, path: &RelationPath) -> usize {
        self.sources
            .values()
            .filter(|l| l.iter().any(|p| &p.relations == path))
            .count()
    }
}

/// Moves every relation held by two or more groups into the cross-type
/// group. Returns the cross-type entries and the remaining type-specific
/// lists (relations with no path are dropped from the latter).
pub fn lift_cross_type(
    per_group: GroupSchemas,
    tail_cap: usize,
) -> (BTreeMap<RelationId, CrossTypeEntry>, GroupSchemas) {
    let mut holders: BTreeMap<RelationId, usize> = BTreeMap::new();
    for rels in per_group.values() {
        for &r in rels.keys() {
            *holders.entry(r).or_default() += 1;
        }
    }
    let mut cross: BTreeMap<RelationId, CrossTypeEntry> = BTreeMap::new();
    let mut residual: GroupSchemas = BTreeMap::new();
    for (ty, rels) in per_group {
        for (r, paths) in rels {
            if holders[&r] >= 2 {
                cross
                    .entry(r)
                    .or_insert_with(|| CrossTypeEntry {
                        paths: Vec::new(),
                        sources: BTreeMap::new(),
                    })
                    .sources
                    .insert(ty, paths);
            } else if !paths.is_empty() {
                residual.entry(ty).or_default().insert(r, paths);
            }
        }
    }
    for entry in cross.values_mut() {
        let mut pooled: BTreeMap<RelationPath, PathAccumulator> = BTreeMap::new();
        for paths in entry.sources.values() {
            for p in paths {
                let acc = pooled.entry(p.relations.clone()).or_default();
                acc.stats = PathStats::pooled([&acc.stats, &p.stats]);
                for &t in &p.example_tails {
                    acc.add_tail(t, tail_cap);
                }
            }
        }
        entry.paths = pooled.into_iter().map(|(p, acc)| acc.into_scored(p)).collect();
    }
    (cross, residual)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub n_path: usize,
    pub n_hop: usize,
    pub graph_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReasoningSchema {
    pub decay: Decay,
    pub tail_cap: usize,
    pub provenance: Provenance,
    pub type_groups: BTreeMap<TypeId, BTreeMap<RelationId, Vec<ScoredPath>>>,
    pub cross_type: BTreeMap<RelationId, CrossTypeEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SchemaSummary {
    pub type_groups: usize,
    pub type_specific_relations: usize,
    pub cross_type_relations: usize,
    pub stored_paths: usize,
}

impl ReasoningSchema {
    fn sort_all(&mut self) {
        let d = self.decay;
        for rels in self.type_groups.values_mut() {
            for paths in rels.values_mut() {
                sort_paths(paths, d);
            }
        }
        for entry in self.cross_type.values_mut() {
            sort_paths(&mut entry.paths, d);
            for paths in entry.sources.values_mut() {
                sort_paths(paths, d);
            }
        }
    }

    /// Re-scores every list under a different decay factor.
    pub fn set_decay(&mut self, decay: Decay) {
        if decay != self.decay {
            self.decay = decay;
            self.sort_all();
        }
    }

    pub fn with_decay(&self, decay: Decay) -> ReasoningSchema {
        let mut s = self.clone();
        s.set_decay(decay);
        s
    }

    /// The type-specific list of `relation` for `group`, if any.
    pub fn type_specific(&self, group: TypeId, relation: RelationId) -> Option<&[ScoredPath]> {
        self.type_groups
            .get(&group)
            .and_then(|m| m.get(&relation))
            .map(Vec::as_slice)
    }

    pub fn summary(&self) -> SchemaSummary {
        let typed: usize = self.type_groups.values().flat_map(|m| m.values()).map(Vec::len).sum();
        let cross: usize = self.cross_type.values().map(|e| e.paths.len()).sum();
        SchemaSummary {
            type_groups: self.type_groups.len(),
            type_specific_relations: self.type_groups.values().map(BTreeMap::len).sum(),
            cross_type_relations: self.cross_type.len(),
            stored_paths: typed + cross,
        }
    }

    /// Checks the structural invariants: counts, example tails, sort order,
    /// relation exclusivity and pooled cross-type counts.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let d = self.decay;
        let check_list = |what: &str, paths: &[ScoredPath]| -> std::result::Result<(), String> {
            for p in paths {
                if p.relations.is_empty() {
                    return Err(format!("{what}: empty relation path"));
                }
                if p.stats.m == 0 || p.stats.n == 0 || p.stats.n > p.stats.m {
                    return Err(format!("{what}: bad counts {:?} on {:?}", p.stats, p.relations));
                }
                if p.example_tails.is_empty() || p.example_tails.len() > self.tail_cap {
                    return Err(format!("{what}: example tails out of bounds on {:?}", p.relations));
                }
            }
            for w in paths.windows(2) {
                if cmp_paths(&w[0], &w[1], d) != Ordering::Less {
                    return Err(format!("{what}: list not sorted at {:?}", w[1].relations));
                }
            }
            Ok(())
        };
        let mut owner: HashMap<RelationId, String> = HashMap::new();
        for (ty, rels) in &self.type_groups {
            for (r, paths) in rels {
                let what = format!("group {ty} relation {r}");
                check_list(&what, paths)?;
                if let Some(prev) = owner.insert(*r, what.clone()) {
                    return Err(format!("relation {r} keyed in both {prev} and {what}"));
                }
            }
        }
        for (r, entry) in &self.cross_type {
            let what = format!("cross-type relation {r}");
            if let Some(prev) = owner.insert(*r, what.clone()) {
                return Err(format!("relation {r} keyed in both {prev} and {what}"));
            }
            if entry.sources.len() < 2 {
                return Err(format!("{what}: fewer than two source groups"));
            }
            check_list(&what, &entry.paths)?;
            for (ty, paths) in &entry.sources {
                check_list(&format!("{what} source {ty}"), paths)?;
            }
            let mut pooled: BTreeMap<&RelationPath, PathStats> = BTreeMap::new();
            for p in entry.sources.values().flatten() {
                let s = pooled.entry(&p.relations).or_default();
                *s = PathStats::pooled([&*s, &p.stats]);
            }
            if pooled.len() != entry.paths.len()
                || entry.paths.iter().any(|p| pooled.get(&p.relations) != Some(&p.stats))
            {
                return Err(format!("{what}: pooled counts disagree with sources"));
            }
        }
        Ok(())
    }
}

fn assemble(g: &KnowledgeGraph, source: &dyn WalkSource, decay: Decay, tail_cap: usize) -> ReasoningSchema {
    let cfg = source.sampler_config();
    let (cross_type, type_groups) = lift_cross_type(group_schemas(g, source, tail_cap), tail_cap);
    let mut schema = ReasoningSchema {
        decay,
        tail_cap,
        provenance: Provenance {
            seed: cfg.seed,
            n_path: cfg.n_path,
            n_hop: cfg.n_hop,
            graph_hash: g.content_hash().to_owned(),
        },
        type_groups,
        cross_type,
    };
    schema.sort_all();
    schema
}

/// Builds the schema from a materialised dictionary.
pub fn build_schema(g: &KnowledgeGraph, dict: &EntityPathDictionary, decay: Decay) -> Result<ReasoningSchema> {
    build_schema_capped(g, dict, decay, DEFAULT_TAIL_CAP)
}

pub fn build_schema_capped(
    g: &KnowledgeGraph,
    dict: &EntityPathDictionary,
    decay: Decay,
    tail_cap: usize,
) -> Result<ReasoningSchema> {
    if dict.graph_hash() != g.content_hash() || dict.entity_count() != g.entity_count() {
        return Err(Error::Mismatch(
            "entity-path dictionary was built for a different graph".into(),
        ));
    }
    Ok(assemble(g, dict, decay, tail_cap))
}

/// Builds the schema while sampling walks on the fly; the dictionary is
/// never held in memory as a whole. Equal to sampling a dictionary with the
/// same configuration and calling [`build_schema`].
pub fn build_schema_streaming(g: &KnowledgeGraph, cfg: SamplerConfig, decay: Decay) -> ReasoningSchema {
    build_schema_streaming_capped(g, cfg, decay, DEFAULT_TAIL_CAP)
}

pub fn build_schema_streaming_capped(
    g: &KnowledgeGraph,
    cfg: SamplerConfig,
    decay: Decay,
    tail_cap: usize,
) -> ReasoningSchema {
    assemble(g, &Sampler::new(g, cfg), decay, tail_cap)
}

const SCHEMA_MAGIC: &str = "logre-schema";
const SCHEMA_VERSION: u32 = 1;

fn write_path_line(out: &mut String, p: &ScoredPath, decay: Decay) {
    for (i, l) in p.relations.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{l}").unwrap();
    }
    write!(
        out,
        "\t{}\t{}\t{}\t",
        p.stats.m,
        p.stats.n,
        format_rational(&p.final_score(decay))
    )
    .unwrap();
    for (i, t) in p.example_tails.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{t}").unwrap();
    }
    out.push('\n');
}

/// Writes the schema as line-oriented text. Identical schemas produce
/// identical files.
pub fn save_schema(s: &ReasoningSchema, path: &Path) -> Result<()> {
    let mut out = String::new();
    write_schema(s, &mut out);
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(out.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_schema(s: &ReasoningSchema, out: &mut String) {
    let d = s.decay;
    writeln!(out, "{SCHEMA_MAGIC} {SCHEMA_VERSION}").unwrap();
    writeln!(out, "decay {d}").unwrap();
    writeln!(out, "seed {}", s.provenance.seed).unwrap();
    writeln!(out, "n_path {}", s.provenance.n_path).unwrap();
    writeln!(out, "n_hop {}", s.provenance.n_hop).unwrap();
    writeln!(out, "graph_hash {}", s.provenance.graph_hash).unwrap();
    writeln!(out, "tail_cap {}", s.tail_cap).unwrap();
    let lists: usize = s.type_groups.values().map(BTreeMap::len).sum();
    writeln!(out, "type_specific {lists}").unwrap();
    for (ty, rels) in &s.type_groups {
        for (r, paths) in rels {
            writeln!(out, "group {ty} {r} {}", paths.len()).unwrap();
            for p in paths {
                write_path_line(out, p, d);
            }
        }
    }
    writeln!(out, "cross_type {}", s.cross_type.len()).unwrap();
    for (r, entry) in &s.cross_type {
        writeln!(out, "cross {r} {} {}", entry.paths.len(), entry.sources.len()).unwrap();
        for p in &entry.paths {
            write_path_line(out, p, d);
        }
        for (ty, paths) in &entry.sources {
            writeln!(out, "source {ty} {}", paths.len()).unwrap();
            for p in paths {
                write_path_line(out, p, d);
            }
        }
    }
    writeln!(out, "end").unwrap();
}

struct Reader<'a, R> {
    path: &'a Path,
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Reader<'_, R> {
    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::format(self.path, format!("line {}: {msg}", self.line_no))
    }

    fn line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::io(self.path, e)),
            None => Err(self.err("unexpected end of file")),
        }
    }

    /// Reads `key v1 v2 ...` and returns the values.
    fn record(&mut self, key: &str, arity: usize) -> Result<Vec<String>> {
        let l = self.line()?;
        let mut parts = l.split(' ');
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`, found {l:?}")));
        }
        let vals: Vec<String> = parts.map(str::to_owned).collect();
        if vals.len() != arity {
            return Err(self.err(format!("`{key}` takes {arity} values")));
        }
        Ok(vals)
    }

    fn value<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.record(key, 1)?;
        self.num(&v[0])
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("bad number {s:?}")))
    }

    fn paths(&mut self, count: usize, decay: Decay) -> Result<Vec<ScoredPath>> {
        (0..count).map(|_| self.path_line(decay)).collect()
    }

    fn path_line(&mut self, decay: Decay) -> Result<ScoredPath> {
        let l = self.line()?;
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 5 {
            return Err(self.err("path record needs 5 tab-separated fields"));
        }
        let relations = f[0]
            .split(',')
            .map(|x| self.num::<u32>(x).map(EdgeLabel))
            .collect::<Result<RelationPath>>()?;
        let stats = PathStats::new(self.num(f[1])?, self.num(f[2])?);
        if stats.m == 0 || stats.n > stats.m {
            return Err(self.err("path counts out of range"));
        }
        let example_tails = if f[4].is_empty() {
            Vec::new()
        } else {
            f[4].split(',')
                .map(|x| self.num::<u32>(x).map(EntityId))
                .collect::<Result<Vec<_>>>()?
        };
        let p = ScoredPath {
            relations,
            stats,
            example_tails,
        };
        let stored = parse_rational(f[3]).ok_or_else(|| self.err("bad score"))?;
        if stored != p.final_score(decay) {
            return Err(self.err("stored score does not match counts and decay"));
        }
        Ok(p)
    }
}

pub fn load_schema(path: &Path) -> Result<ReasoningSchema> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rd = Reader {
        path,
        lines: BufReader::new(file).lines(),
        line_no: 0,
    };
    let header = rd.line()?;
    let expected = format!("{SCHEMA_MAGIC} {SCHEMA_VERSION}");
    if header != expected {
        let msg = match header.strip_prefix(SCHEMA_MAGIC) {
            Some(v) => format!("unsupported schema version{v} (expected {SCHEMA_VERSION})"),
            None => "not a schema file".to_owned(),
        };
        return Err(rd.err(msg));
    }
    let decay: Decay = rd.record("decay", 1)?[0].parse().map_err(|_| rd.err("bad decay"))?;
    let seed = rd.value("seed")?;
    let n_path = rd.value("n_path")?;
    let n_hop = rd.value("n_hop")?;
    let graph_hash = rd.record("graph_hash", 1)?.remove(0);
    let tail_cap = rd.value("tail_cap")?;

    let lists: usize = rd.value("type_specific")?;
    let mut type_groups: BTreeMap<TypeId, BTreeMap<RelationId, Vec<ScoredPath>>> = BTreeMap::new();
    for _ in 0..lists {
        let v = rd.record("group", 3)?;
        let ty = TypeId(rd.num(&v[0])?);
        let r = RelationId(rd.num(&v[1])?);
        let n = rd.num(&v[2])?;
        let paths = rd.paths(n, decay)?;
        type_groups.entry(ty).or_default().insert(r, paths);
    }
    let cross_count: usize = rd.value("cross_type")?;
    let mut cross_type = BTreeMap::new();
    for _ in 0..cross_count {
        let v = rd.record("cross", 3)?;
        let r = RelationId(rd.num(&v[0])?);
        let n: usize = rd.num(&v[1])?;
        let k: usize = rd.num(&v[2])?;
        let paths = rd.paths(n, decay)?;
        let mut sources = BTreeMap::new();
        for _ in 0..k {
            let v = rd.record("source", 2)?;
            let ty = TypeId(rd.num(&v[0])?);
            let n = rd.num(&v[1])?;
            sources.insert(ty, rd.paths(n, decay)?);
        }
        cross_type.insert(r, CrossTypeEntry { paths, sources });
    }
    rd.record("end", 0)?;
    if let Some(extra) = rd.lines.next() {
        if extra.map(|l| !l.is_empty()).unwrap_or(true) {
            return Err(rd.err("trailing content after end marker"));
        }
    }
    let schema = ReasoningSchema {
        decay,
        tail_cap,
        provenance: Provenance {
            seed,
            n_path,
            n_hop,
            graph_hash,
        },
        type_groups,
        cross_type,
    };
    schema
        .validate()
        .map_err(|m| Error::format(path, format!("invalid schema: {m}")))?;
    Ok(schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::GraphBuilder;
    use crate::sampler::{build_dictionary, Walk};
    use smallvec::smallvec;

    fn sp(rels: &[u32], m: u64, n: u64, tails: &[u32]) -> ScoredPath {
        ScoredPath {
            relations: rels.iter().map(|&l| EdgeLabel(l)).collect(),
            stats: PathStats::new(m, n),
            example_tails: tails.iter().map(|&t| EntityId(t)).collect(),
        }
    }

    #[test]
    fn group_path_counts_from_hand_built_dictionary() {
        let mut b = GraphBuilder::new();
        b.fact("A", "r", "B");
        b.fact("A", "q", "B");
        b.fact("A", "q", "C");
        b.type_label("A", "person");
        let g = b.build();
        let (a, bb, c) = (EntityId(0), EntityId(1), EntityId(2));
        let q = g.relation_id("q").unwrap().forward();
        let r = g.relation_id("r").unwrap();
        let cfg = SamplerConfig::new(10, 1, 0).unwrap();
        let mut walks = vec![Vec::new(); g.entity_count()];
        walks[a.index()] = vec![
            Walk {
                relations: smallvec![q],
                terminal: bb,
            },
            Walk {
                relations: smallvec![q],
                terminal: c,
            },
        ];
        let dict = EntityPathDictionary::from_walks(&g, cfg, walks);
        let person = g.type_id("person").unwrap();
        let got = collect_group_paths(&g, &dict, person, r);
        assert_eq!(got.len(), 1);
        let acc = &got[&RelationPath::from_slice(&[q])];
        assert_eq!(acc.stats, PathStats::new(2, 1));
        assert_eq!(acc.example_tails, vec![bb]);

        // no walk reaches a correct tail of q from a group without q
        let others = g.type_id("others").unwrap();
        assert!(collect_group_paths(&g, &dict, others, r).is_empty());
    }

    #[test]
    fn self_evidence_path_is_kept() {
        let mut b = GraphBuilder::new();
        b.fact("A", "r", "B");
        let g = b.build();
        let dict = build_dictionary(&g, SamplerConfig::new(10, 1, 0).unwrap());
        let ty = g.entity_type(EntityId(0));
        let got = collect_group_paths(&g, &dict, ty, RelationId(0));
        let acc = &got[&RelationPath::from_slice(&[EdgeLabel(0)])];
        assert_eq!(acc.stats, PathStats::new(1, 1));
    }

    #[test]
    fn lifting_pools_counts_of_shared_relations() {
        let (t0, t1, t2) = (TypeId(0), TypeId(1), TypeId(2));
        let (shared, own) = (RelationId(0), RelationId(1));
        let mut per: GroupSchemas = BTreeMap::new();
        per.entry(t0)
            .or_default()
            .insert(shared, vec![sp(&[5], 3, 2, &[10, 11])]);
        per.entry(t0).or_default().insert(own, vec![sp(&[6], 1, 1, &[12])]);
        per.entry(t1)
            .or_default()
            .insert(shared, vec![sp(&[5], 1, 1, &[11, 13]), sp(&[7], 2, 1, &[14])]);
        per.entry(t2).or_default().insert(shared, vec![]);
        let (cross, residual) = lift_cross_type(per, 64);
        assert_eq!(residual.len(), 1);
        assert_eq!(residual[&t0].keys().copied().collect::<Vec<_>>(), vec![own]);
        let entry = &cross[&shared];
        assert_eq!(entry.source_groups().collect::<Vec<_>>(), vec![t0, t1, t2]);
        let pooled = entry.paths.iter().find(|p| p.relations[0] == EdgeLabel(5)).unwrap();
        assert_eq!(pooled.stats, PathStats::new(4, 3));
        assert_eq!(pooled.raw_score(), BigRational::new(3.into(), 4.into()));
        assert_eq!(pooled.example_tails, vec![EntityId(10), EntityId(11), EntityId(13)]);
        assert_eq!(entry.contributing_groups(&pooled.relations), 2);
    }

    #[test]
    fn lifted_example_tails_respect_cap() {
        let mut per: GroupSchemas = BTreeMap::new();
        per.entry(TypeId(0))
            .or_default()
            .insert(RelationId(0), vec![sp(&[1], 5, 3, &[1, 2, 3])]);
        per.entry(TypeId(1))
            .or_default()
            .insert(RelationId(0), vec![sp(&[1], 5, 3, &[3, 4, 5])]);
        let (cross, _) = lift_cross_type(per, 4);
        assert_eq!(
            cross[&RelationId(0)].paths[0].example_tails,
            [1, 2, 3, 4].map(EntityId).to_vec()
        );
    }

    #[test]
    fn sort_order_with_ties() {
        let d: Decay = "0.5".parse().unwrap();
        let mut paths = vec![
            sp(&[3, 1], 1, 1, &[0]), // 0.25
            sp(&[2], 2, 1, &[0]),    // 0.25
            sp(&[1, 1], 1, 1, &[0]), // 0.25
            sp(&[4], 1, 1, &[0]),    // 0.5
        ];
        sort_paths(&mut paths, d);
        let order: Vec<Vec<u32>> = paths
            .iter()
            .map(|p| p.relations.iter().map(|l| l.0).collect())
            .collect();
        assert_eq!(order, vec![vec![4], vec![2], vec![1, 1], vec![3, 1]]);
    }

    #[test]
    fn empty_dictionary_gives_empty_schema() {
        let mut b = GraphBuilder::new();
        b.fact("A", "r", "B");
        let g = b.build();
        let dict = EntityPathDictionary::empty(&g, SamplerConfig::new(1, 1, 0).unwrap());
        let s = build_schema(&g, &dict, Decay::ONE).unwrap();
        assert!(s.type_groups.is_empty());
        assert!(s.cross_type.is_empty());
        assert!(s.validate().is_ok());
    }

    #[test]
    fn dictionary_for_another_graph_is_rejected() {
        let mut b = GraphBuilder::new();
        b.fact("A", "r", "B");
        let g = b.build();
        let mut b = GraphBuilder::new();
        b.fact("A", "r", "C");
        let other = b.build();
        let dict = build_dictionary(&other, SamplerConfig::new(1, 1, 0).unwrap());
        assert!(matches!(build_schema(&g, &dict, Decay::ONE), Err(Error::Mismatch(_))));
    }
}
