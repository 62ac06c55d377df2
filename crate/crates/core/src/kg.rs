//! Knowledge graph store.
//!
//! The training triples are indexed as a compressed adjacency list over the
//! `2|R|` edge labels, so every fact `(h, r, t)` is also walkable backwards as
//! `(t, r⁻¹, h)`. Validation and test triples never enter the adjacency.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ids::{EdgeLabel, EntityId, RelationId, TypeId};
use crate::score::Similarity;

/// Type assigned to entities absent from the types file.
pub const OTHERS_TYPE: &str = "others";

/// Interned names with dense ids in first-seen order.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple { head, relation, tail }
    }
}

/// Binary vector over the `2|R|` edge labels marking which labels leave an
/// entity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelationSignature {
    words: Box<[u64]>,
    dim: usize,
}

impl RelationSignature {
    pub fn zeros(dim: usize) -> Self {
        RelationSignature {
            words: vec![0; dim.div_ceil(64)].into_boxed_slice(),
            dim,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut sig = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                sig.set(i);
            }
        }
        sig
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.dim);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.dim).map(|i| self.get(i)).collect()
    }

    fn dot(&self, other: &Self) -> u64 {
        self.words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }
}

/// Exact cosine similarity of two signatures; zero when either is all-zero.
///
/// Panics on a dimension mismatch.
pub fn cosine(a: &RelationSignature, b: &RelationSignature) -> Similarity {
    assert_eq!(a.dim, b.dim, "signature dimensions differ");
    Similarity::new(a.dot(b), a.count_ones(), b.count_ones())
}

/// [`cosine`] as a float in `[0, 1]`.
pub fn cosine_similarity(a: &RelationSignature, b: &RelationSignature) -> f64 {
    cosine(a, b).to_f64()
}

/// Immutable, inverse-augmented triple store.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    entities: Vocab,
    relations: Vocab,
    types: Vocab,
    entity_types: Vec<TypeId>,
    facts: Vec<Triple>,
    offsets: Vec<usize>,
    // sorted by (label, neighbour) within each entity's range
    edges: Vec<(EdgeLabel, EntityId)>,
    signatures: Vec<RelationSignature>,
    entity_display: Option<Vec<String>>,
    relation_display: Option<Vec<String>>,
    content_hash: String,
}

impl KnowledgeGraph {
    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    /// Number of base relations `|R|`.
    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Number of edge labels, `2|R|`.
    pub fn label_count(&self) -> usize {
        2 * self.relations.len()
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    pub fn facts(&self) -> &[Triple] {
        &self.facts
    }

    pub fn entities(&self) -> impl ExactSizeIterator<Item = EntityId> {
        (0..self.entities.len() as u32).map(EntityId)
    }

    pub fn relations(&self) -> impl ExactSizeIterator<Item = RelationId> {
        (0..self.relations.len() as u32).map(RelationId)
    }

    pub fn entity_vocab(&self) -> &Vocab {
        &self.entities
    }

    pub fn relation_vocab(&self) -> &Vocab {
        &self.relations
    }

    pub fn type_vocab(&self) -> &Vocab {
        &self.types
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entities.get(name).map(EntityId)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.get(name).map(RelationId)
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.types.get(name).map(TypeId)
    }

    pub fn entity_name(&self, e: EntityId) -> &str {
        self.entities.name(e.0)
    }

    pub fn relation_name(&self, r: RelationId) -> &str {
        self.relations.name(r.0)
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        self.types.name(t.0)
    }

    /// Human-readable entity name when a name map was loaded.
    pub fn entity_label(&self, e: EntityId) -> &str {
        match &self.entity_display {
            Some(names) => &names[e.index()],
            None => self.entity_name(e),
        }
    }

    pub fn relation_label(&self, r: RelationId) -> &str {
        match &self.relation_display {
            Some(names) => &names[r.index()],
            None => self.relation_name(r),
        }
    }

    /// Display form of an edge label, `name` or `name⁻¹`.
    pub fn label_text(&self, label: EdgeLabel) -> String {
        let base = self.relation_label(label.base(self.relation_count()));
        if label.is_inverse(self.relation_count()) {
            format!("{base}⁻¹")
        } else {
            base.to_owned()
        }
    }

    pub fn has_entity_names(&self) -> bool {
        self.entity_display.is_some()
    }

    pub fn has_relation_names(&self) -> bool {
        self.relation_display.is_some()
    }

    pub fn inverse(&self, label: EdgeLabel) -> EdgeLabel {
        label.inverse(self.relation_count())
    }

    pub fn entity_type(&self, e: EntityId) -> TypeId {
        self.entity_types[e.index()]
    }

    /// Sha-256 over the vocabularies, training facts and type assignment.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn check_entity(&self, e: EntityId) -> Result<()> {
        if e.index() < self.entity_count() {
            Ok(())
        } else {
            Err(Error::Lookup(format!("entity id {e} out of vocabulary")))
        }
    }

    pub fn check_relation(&self, r: RelationId) -> Result<()> {
        if r.index() < self.relation_count() {
            Ok(())
        } else {
            Err(Error::Lookup(format!("relation id {r} out of vocabulary")))
        }
    }

    pub fn check_label(&self, l: EdgeLabel) -> Result<()> {
        if l.index() < self.label_count() {
            Ok(())
        } else {
            Err(Error::Lookup(format!("edge label {l} out of vocabulary")))
        }
    }

    /// All `(label, neighbour)` pairs leaving `e`, sorted.
    #[inline]
    pub fn out_edges(&self, e: EntityId) -> &[(EdgeLabel, EntityId)] {
        &self.edges[self.offsets[e.index()]..self.offsets[e.index() + 1]]
    }

    #[inline]
    fn label_range(&self, e: EntityId, label: EdgeLabel) -> &[(EdgeLabel, EntityId)] {
        let edges = self.out_edges(e);
        let lo = edges.partition_point(|&(l, _)| l < label);
        let hi = lo + edges[lo..].partition_point(|&(l, _)| l == label);
        &edges[lo..hi]
    }

    /// Neighbours of `e` under `label`, ascending by entity id. Unchecked.
    #[inline]
    pub fn neighbors(&self, e: EntityId, label: EdgeLabel) -> impl Iterator<Item = EntityId> + '_ {
        self.label_range(e, label).iter().map(|&(_, t)| t)
    }

    /// Checked form of [`neighbors`](Self::neighbors).
    pub fn successors(&self, e: EntityId, label: EdgeLabel) -> Result<Vec<EntityId>> {
        self.check_entity(e)?;
        self.check_label(label)?;
        Ok(self.neighbors(e, label).collect())
    }

    #[inline]
    pub fn has_edge(&self, h: EntityId, label: EdgeLabel, t: EntityId) -> bool {
        self.label_range(h, label).binary_search_by(|&(_, x)| x.cmp(&t)).is_ok()
    }

    /// Whether `(h, r, t)` is a training fact.
    #[inline]
    pub fn has_fact(&self, h: EntityId, r: RelationId, t: EntityId) -> bool {
        self.has_edge(h, r.forward(), t)
    }

    /// Base relations for which `e` is the head of at least one fact.
    pub fn head_relations(&self, e: EntityId) -> Vec<RelationId> {
        let n = self.relation_count() as u32;
        let mut out: Vec<RelationId> = self
            .out_edges(e)
            .iter()
            .take_while(|(l, _)| l.0 < n)
            .map(|(l, _)| RelationId(l.0))
            .collect();
        out.dedup();
        out
    }

    /// Precomputed signature; unchecked.
    #[inline]
    pub fn signature(&self, e: EntityId) -> &RelationSignature {
        &self.signatures[e.index()]
    }

    pub fn relation_signature(&self, e: EntityId) -> Result<RelationSignature> {
        self.check_entity(e)?;
        Ok(self.signatures[e.index()].clone())
    }

    /// Entities grouped by type id, ascending within each group.
    pub fn type_groups(&self) -> BTreeMap<TypeId, Vec<EntityId>> {
        let mut groups: BTreeMap<TypeId, Vec<EntityId>> = BTreeMap::new();
        for e in self.entities() {
            groups.entry(self.entity_type(e)).or_default().push(e);
        }
        groups
    }
}

/// Accumulates named triples and type labels, then freezes them into a
/// [`KnowledgeGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    entities: Vocab,
    relations: Vocab,
    facts: Vec<Triple>,
    seen: HashSet<Triple>,
    type_labels: Vec<(String, String)>,
    ignore_types: HashSet<String>,
    entity_names: HashMap<String, String>,
    relation_names: HashMap<String, String>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a training fact. Duplicates are dropped.
    pub fn fact(&mut self, head: &str, relation: &str, tail: &str) -> Triple {
        let triple = Triple::new(
            EntityId(self.entities.intern(head)),
            RelationId(self.relations.intern(relation)),
            EntityId(self.entities.intern(tail)),
        );
        if self.seen.insert(triple) {
            self.facts.push(triple);
        }
        triple
    }

    /// Registers a held-out triple's identifiers without adding an edge.
    pub fn held_out(&mut self, head: &str, relation: &str, tail: &str) -> Triple {
        Triple::new(
            EntityId(self.entities.intern(head)),
            RelationId(self.relations.intern(relation)),
            EntityId(self.entities.intern(tail)),
        )
    }

    pub fn entity(&mut self, name: &str) -> EntityId {
        EntityId(self.entities.intern(name))
    }

    /// One line of the types file. An entity may carry several types.
    pub fn type_label(&mut self, entity: &str, type_name: &str) -> &mut Self {
        self.type_labels.push((entity.to_owned(), type_name.to_owned()));
        self
    }

    /// Types dropped before resolution (e.g. a near-universal catch-all).
    pub fn ignore_type(&mut self, type_name: &str) -> &mut Self {
        self.ignore_types.insert(type_name.to_owned());
        self
    }

    pub fn entity_display_name(&mut self, entity: &str, name: &str) -> &mut Self {
        self.entity_names.insert(entity.to_owned(), name.to_owned());
        self
    }

    pub fn relation_display_name(&mut self, relation: &str, name: &str) -> &mut Self {
        self.relation_names.insert(relation.to_owned(), name.to_owned());
        self
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn build(self) -> KnowledgeGraph {
        let n_ent = self.entities.len();
        let n_rel = self.relations.len();

        let mut edges_per: Vec<Vec<(EdgeLabel, EntityId)>> = vec![Vec::new(); n_ent];
        for t in &self.facts {
            edges_per[t.head.index()].push((t.relation.forward(), t.tail));
            edges_per[t.tail.index()].push((t.relation.backward(n_rel), t.head));
        }
        let mut offsets = Vec::with_capacity(n_ent + 1);
        let mut edges = Vec::with_capacity(2 * self.facts.len());
        offsets.push(0);
        for mut list in edges_per {
            list.sort_unstable();
            list.dedup();
            edges.extend(list);
            offsets.push(edges.len());
        }

        let signatures = (0..n_ent)
            .map(|e| {
                let mut sig = RelationSignature::zeros(2 * n_rel);
                for &(l, _) in &edges[offsets[e]..offsets[e + 1]] {
                    sig.set(l.index());
                }
                sig
            })
            .collect();

        let (types, entity_types) = resolve_types(&self.entities, &self.type_labels, &self.ignore_types);

        let display = |vocab: &Vocab, names: &HashMap<String, String>| {
            (!names.is_empty()).then(|| {
                vocab
                    .names()
                    .iter()
                    .map(|id| names.get(id).cloned().unwrap_or_else(|| id.clone()))
                    .collect::<Vec<_>>()
            })
        };
        let entity_display = display(&self.entities, &self.entity_names);
        let relation_display = display(&self.relations, &self.relation_names);

        let content_hash = hash_graph(&self.entities, &self.relations, &self.facts, &types, &entity_types);

        KnowledgeGraph {
            entities: self.entities,
            relations: self.relations,
            types,
            entity_types,
            facts: self.facts,
            offsets,
            edges,
            signatures,
            entity_display,
            relation_display,
            content_hash,
        }
    }
}

/// Picks one type per entity: the globally most frequent of its listed types,
/// ties broken by type name; untyped entities get [`OTHERS_TYPE`].
fn resolve_types(entities: &Vocab, labels: &[(String, String)], ignore: &HashSet<String>) -> (Vocab, Vec<TypeId>) {
    let mut per_entity: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut frequency: HashMap<&str, usize> = HashMap::new();
    let mut seen_pairs: HashSet<(&str, &str)> = HashSet::new();
    for (e, t) in labels {
        if ignore.contains(t) || !seen_pairs.insert((e, t)) {
            continue;
        }
        *frequency.entry(t).or_default() += 1;
        if entities.get(e).is_some() {
            per_entity.entry(e).or_default().push(t);
        }
    }
    let mut types = Vocab::default();
    let assigned = entities
        .names()
        .iter()
        .map(|name| {
            let chosen = per_entity.get(name.as_str()).and_then(|cands| {
                cands
                    .iter()
                    .copied()
                    .max_by(|a, b| frequency[a].cmp(&frequency[b]).then_with(|| b.cmp(a)))
            });
            TypeId(types.intern(chosen.unwrap_or(OTHERS_TYPE)))
        })
        .collect();
    (types, assigned)
}

fn hash_graph(entities: &Vocab, relations: &Vocab, facts: &[Triple], types: &Vocab, entity_types: &[TypeId]) -> String {
    let mut h = Sha256::new();
    h.update(b"logre-graph-v1\n");
    for (tag, vocab) in [(b"E", entities), (b"R", relations), (b"T", types)] {
        h.update(tag);
        h.update((vocab.len() as u64).to_le_bytes());
        for name in vocab.names() {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
        }
    }
    let mut sorted: Vec<Triple> = facts.to_vec();
    sorted.sort_unstable();
    h.update(b"F");
    h.update((sorted.len() as u64).to_le_bytes());
    for t in sorted {
        h.update(t.head.0.to_le_bytes());
        h.update(t.relation.0.to_le_bytes());
        h.update(t.tail.0.to_le_bytes());
    }
    h.update(b"Y");
    for t in entity_types {
        h.update(t.0.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Column order of the triple files.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum TripleOrder {
    /// `head<TAB>relation<TAB>tail`
    #[default]
    HeadRelationTail,
    /// `head<TAB>tail<TAB>relation`, as shipped with some sparse KG benchmarks
    HeadTailRelation,
}

impl FromStr for TripleOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hrt" => Ok(TripleOrder::HeadRelationTail),
            "htr" => Ok(TripleOrder::HeadTailRelation),
            _ => Err(Error::Config(format!("triple order must be `hrt` or `htr`, got {s:?}"))),
        }
    }
}

impl fmt::Display for TripleOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TripleOrder::HeadRelationTail => "hrt",
            TripleOrder::HeadTailRelation => "htr",
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    pub triple_order: TripleOrder,
    pub ignore_types: Vec<String>,
}

/// Training graph plus the held-out splits.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: KnowledgeGraph,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

/// File names inside a dataset directory.
pub const TRAIN_FILE: &str = "train.triples";
pub const VALID_FILE: &str = "valid.triples";
pub const TEST_FILE: &str = "test.triples";
pub const TYPES_FILE: &str = "entity_types.tsv";
pub const ENTITY_NAMES_FILE: &str = "entity_names.tsv";
pub const RELATION_NAMES_FILE: &str = "relation_names.tsv";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn tab_fields<'a>(path: &Path, text: &'a str, arity: usize) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let fields: Vec<&str> = line.split('\t').collect();
        if line.is_empty() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: "blank line".into(),
            });
        }
        if fields.len() != arity || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: format!(
                    "expected {arity} non-empty tab-separated fields, found {}",
                    fields.len()
                ),
            });
        }
        rows.push((i + 1, fields));
    }
    Ok(rows)
}

fn read_triples(path: &Path, order: TripleOrder) -> Result<Vec<(String, String, String)>> {
    let text = read_text(path)?;
    Ok(tab_fields(path, &text, 3)?
        .into_iter()
        .map(|(_, f)| match order {
            TripleOrder::HeadRelationTail => (f[0].to_owned(), f[1].to_owned(), f[2].to_owned()),
            TripleOrder::HeadTailRelation => (f[0].to_owned(), f[2].to_owned(), f[1].to_owned()),
        })
        .collect())
}

fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_text(path)?;
    Ok(tab_fields(path, &text, 2)?
        .into_iter()
        .map(|(_, f)| (f[0].to_owned(), f[1].to_owned()))
        .collect())
}

/// Loads the four dataset files. Only `train` populates the adjacency;
/// entities and relations first seen in `valid`/`test` join the vocabularies
/// with no edges.
pub fn load_dataset(train: &Path, valid: &Path, test: &Path, types: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let (builder, valid, test) = read_dataset(train, valid, test, types, opts)?;
    Ok(Dataset {
        graph: builder.build(),
        valid,
        test,
    })
}

fn read_dataset(
    train: &Path,
    valid: &Path,
    test: &Path,
    types: &Path,
    opts: &LoadOptions,
) -> Result<(GraphBuilder, Vec<Triple>, Vec<Triple>)> {
    let train_rows = read_triples(train, opts.triple_order)?;
    if train_rows.is_empty() {
        return Err(Error::InvalidDataset(format!(
            "training file {} contains no facts",
            train.display()
        )));
    }
    let valid_rows = read_triples(valid, opts.triple_order)?;
    let test_rows = read_triples(test, opts.triple_order)?;
    let type_rows = read_pairs(types)?;

    let mut b = GraphBuilder::new();
    for t in &opts.ignore_types {
        b.ignore_type(t);
    }
    for (h, r, t) in &train_rows {
        b.fact(h, r, t);
    }
    let valid = valid_rows.iter().map(|(h, r, t)| b.held_out(h, r, t)).collect();
    let test = test_rows.iter().map(|(h, r, t)| b.held_out(h, r, t)).collect();
    for (e, t) in &type_rows {
        b.type_label(e, t);
    }
    Ok((b, valid, test))
}

/// Loads `{train,valid,test}.triples` and `entity_types.tsv` from `dir`, plus
/// the optional `entity_names.tsv` / `relation_names.tsv` display maps.
pub fn load_dataset_dir(dir: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let p = |f: &str| -> PathBuf { dir.join(f) };
    let (mut b, valid, test) = read_dataset(&p(TRAIN_FILE), &p(VALID_FILE), &p(TEST_FILE), &p(TYPES_FILE), opts)?;
    let entity_names = p(ENTITY_NAMES_FILE);
    if entity_names.exists() {
        for (id, name) in read_pairs(&entity_names)? {
            b.entity_display_name(&id, &name);
        }
    }
    let relation_names = p(RELATION_NAMES_FILE);
    if relation_names.exists() {
        for (id, name) in read_pairs(&relation_names)? {
            b.relation_display_name(&id, &name);
        }
    }
    Ok(Dataset {
        graph: b.build(),
        valid,
        test,
    })
}

/// NELL category of an id such as `concept_city_paris` or `concept:city:paris`.
pub fn nell_category(id: &str) -> Option<&str> {
    let (rest, sep) = if let Some(r) = id.strip_prefix("concept_") {
        (r, '_')
    } else {
        (id.strip_prefix("concept:")?, ':')
    };
    let (category, name) = rest.split_once(sep)?;
    (!category.is_empty() && !name.is_empty()).then_some(category)
}

/// Where [`derive_types`] reads entity types from.
#[derive(Copy, Clone, Debug)]
pub enum TypeSource<'a> {
    /// The category embedded in NELL entity ids.
    NellIds,
    /// Facts `entity<TAB>relation<TAB>type` of one relation (such as
    /// Wikidata's P31 "instance of") in a separate file.
    InstanceOf { facts: &'a Path, relation: &'a str },
}

/// Sorted, distinct `(entity, type)` pairs for the entities of the dataset
/// in `dir`, ready to be written as its types file. Entities without a type
/// are left out and fall back to "others" on load.
pub fn derive_types(dir: &Path, order: TripleOrder, source: TypeSource<'_>) -> Result<Vec<(String, String)>> {
    let mut entities = BTreeSet::new();
    for f in [TRAIN_FILE, VALID_FILE, TEST_FILE] {
        for (h, _, t) in read_triples(&dir.join(f), order)? {
            entities.insert(h);
            entities.insert(t);
        }
    }
    let mut pairs = BTreeSet::new();
    match source {
        TypeSource::NellIds => {
            for e in &entities {
                if let Some(c) = nell_category(e) {
                    pairs.insert((e.clone(), c.to_owned()));
                }
            }
        }
        TypeSource::InstanceOf { facts, relation } => {
            for (e, r, t) in read_triples(facts, TripleOrder::HeadRelationTail)? {
                if r == relation && entities.contains(&e) {
                    pairs.insert((e, t));
                }
            }
        }
    }
    Ok(pairs.into_iter().collect())
}
