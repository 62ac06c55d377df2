//! Query answering over a reasoning schema.
//!
//! For `(h, r, ?)` the path list of `r` is looked up by the type of `h`, the
//! best `n_top` paths are grounded from `h`, and each reached entity collects
//! the decayed score of every path that reaches it (once per path). The sum
//! is then scaled by the best cosine similarity between the candidate's
//! relation signature and the example tails recorded for those paths.

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::{EdgeLabel, EntityId, RelationId, TypeId};
use crate::kg::{cosine, KnowledgeGraph};
use crate::schema::{ReasoningSchema, ScoredPath};
use crate::score::{rational_to_f64, ScoreKey, Similarity};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub head: EntityId,
    pub relation: RelationId,
}

impl Query {
    pub fn new(head: EntityId, relation: RelationId) -> Self {
        Query { head, relation }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ReasonerConfig {
    pub n_top: usize,
    pub similarity_enabled: bool,
    pub cross_type_enabled: bool,
}

impl Default for ReasonerConfig {
    fn default() -> Self {
        ReasonerConfig {
            n_top: 100,
            similarity_enabled: true,
            cross_type_enabled: true,
        }
    }
}

impl ReasonerConfig {
    pub fn new(n_top: usize) -> Result<Self> {
        if n_top == 0 {
            return Err(Error::Config("n_top must be positive".into()));
        }
        Ok(ReasonerConfig {
            n_top,
            ..Default::default()
        })
    }
}

/// Path list used for `(head_type, relation)`.
///
/// Cross-type entries win. With `cross_type_enabled == false` a lifted
/// relation falls back to the head type's own list from before lifting.
pub fn lookup_paths<'s>(
    s: &'s ReasoningSchema,
    head_type: TypeId,
    relation: RelationId,
    cfg: &ReasonerConfig,
) -> &'s [ScoredPath] {
    if let Some(entry) = s.cross_type.get(&relation) {
        if cfg.cross_type_enabled {
            return &entry.paths;
        }
        return entry.sources.get(&head_type).map(Vec::as_slice).unwrap_or(&[]);
    }
    s.type_specific(head_type, relation).unwrap_or(&[])
}

/// Distinct endpoints of `path` from `head`, ascending. Empty as soon as a
/// step has no successor.
pub fn ground_path(g: &KnowledgeGraph, head: EntityId, path: &[EdgeLabel]) -> Vec<EntityId> {
    let mut frontier = vec![head];
    for &l in path {
        let mut next: Vec<EntityId> = frontier.iter().flat_map(|&e| g.neighbors(e, l)).collect();
        if next.is_empty() {
            return next;
        }
        next.sort_unstable();
        next.dedup();
        frontier = next;
    }
    frontier
}

#[derive(Clone, Debug)]
pub struct Contribution<'s> {
    pub path: &'s ScoredPath,
    pub score: BigRational,
}

#[derive(Clone, Debug)]
pub struct CandidateScore<'s> {
    pub candidate: EntityId,
    /// Sum of the contributing paths' decayed scores.
    pub base_score: BigRational,
    pub similarity: Similarity,
    /// In schema order.
    pub contributions: Vec<Contribution<'s>>,
    key: ScoreKey,
}

impl<'s> CandidateScore<'s> {
    fn new(candidate: EntityId, contributions: Vec<Contribution<'s>>) -> Self {
        let base_score = contributions.iter().fold(BigRational::zero(), |acc, c| acc + &c.score);
        let key = ScoreKey::new(&base_score, Similarity::ONE);
        CandidateScore {
            candidate,
            base_score,
            similarity: Similarity::ONE,
            contributions,
            key,
        }
    }

    fn set_similarity(&mut self, similarity: Similarity) {
        self.similarity = similarity;
        self.key = ScoreKey::new(&self.base_score, similarity);
    }

    /// `base_score * similarity` as an exactly comparable key.
    pub fn key(&self) -> &ScoreKey {
        &self.key
    }

    pub fn final_score_f64(&self) -> f64 {
        self.key.approx()
    }

    pub fn base_score_f64(&self) -> f64 {
        rational_to_f64(&self.base_score)
    }

    /// `final_score^2`, exact.
    pub fn final_score_squared(&self) -> &BigRational {
        self.key.exact_squared()
    }

    pub fn paths(&self) -> impl Iterator<Item = &'s ScoredPath> + '_ {
        self.contributions.iter().map(|c| c.path)
    }
}

/// Output order: final score descending, then entity id ascending.
pub fn sort_candidates(cands: &mut [CandidateScore<'_>]) {
    cands.sort_by(|a, b| b.key.cmp(&a.key).then_with(|| a.candidate.cmp(&b.candidate)));
}

/// Best similarity between `candidate` and the example tails of `paths`,
/// excluding the candidate itself; [`Similarity::ONE`] when there is no
/// other example tail.
pub fn answer_similarity<'a>(
    g: &KnowledgeGraph,
    candidate: EntityId,
    paths: impl IntoIterator<Item = &'a ScoredPath>,
) -> Similarity {
    let sig = g.signature(candidate);
    let mut best: Option<Similarity> = None;
    for p in paths {
        for &t in &p.example_tails {
            if t == candidate {
                continue;
            }
            let s = cosine(sig, g.signature(t));
            if best.is_none_or(|b| s > b) {
                best = Some(s);
            }
        }
    }
    best.unwrap_or(Similarity::ONE)
}

/// Applies [`answer_similarity`] over the candidate's contributing paths.
pub fn similarity_update<'s>(g: &KnowledgeGraph, mut cand: CandidateScore<'s>) -> CandidateScore<'s> {
    let sim = answer_similarity(g, cand.candidate, cand.paths().collect::<Vec<_>>());
    cand.set_similarity(sim);
    cand
}

/// Scores every entity reached by the top `n_top` paths for `q`.
///
/// Returns an empty list when the relation has no path for the head's type or
/// no path grounds.
pub fn score_candidates<'s>(
    g: &KnowledgeGraph,
    s: &'s ReasoningSchema,
    q: Query,
    cfg: &ReasonerConfig,
) -> Vec<CandidateScore<'s>> {
    if q.head.index() >= g.entity_count() {
        return Vec::new();
    }
    let paths = lookup_paths(s, g.entity_type(q.head), q.relation, cfg);
    let mut reached: HashMap<EntityId, Vec<Contribution<'s>>> = HashMap::new();
    for p in paths.iter().take(cfg.n_top) {
        let ends = ground_path(g, q.head, &p.relations);
        if ends.is_empty() {
            continue;
        }
        let score = p.final_score(s.decay);
        for t in ends {
            reached.entry(t).or_default().push(Contribution {
                path: p,
                score: score.clone(),
            });
        }
    }
    let mut cands: Vec<CandidateScore<'s>> = reached
        .into_iter()
        .map(|(t, contributions)| CandidateScore::new(t, contributions))
        .collect();
    if cfg.similarity_enabled {
        cands = cands.into_iter().map(|c| similarity_update(g, c)).collect();
    }
    sort_candidates(&mut cands);
    cands
}

/// One contributing path in an explanation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplainedPath {
    pub path: Vec<String>,
    pub score: f64,
}

/// A candidate with the paths that support it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Explanation {
    pub candidate: String,
    pub score: f64,
    pub base_score: f64,
    pub similarity: f64,
    pub paths: Vec<ExplainedPath>,
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\tscore={:.6}", self.candidate, self.score)?;
        for p in &self.paths {
            write!(f, "\n  ({})\t{:.6}", p.path.join(", "), p.score)?;
        }
        Ok(())
    }
}

/// Renders `cand` with its `limit` best paths, highest score first.
pub fn explain(g: &KnowledgeGraph, cand: &CandidateScore<'_>, limit: usize) -> Explanation {
    let mut contribs: Vec<&Contribution<'_>> = cand.contributions.iter().collect();
    // contributions are already in schema order; keep it stable for equal scores
    contribs.sort_by(|a, b| b.score.cmp(&a.score));
    Explanation {
        candidate: g.entity_label(cand.candidate).to_owned(),
        score: cand.final_score_f64(),
        base_score: cand.base_score_f64(),
        similarity: cand.similarity.to_f64(),
        paths: contribs
            .into_iter()
            .take(limit)
            .map(|c| ExplainedPath {
                path: c.path.relations.iter().map(|&l| g.label_text(l)).collect(),
                score: rational_to_f64(&c.score),
            })
            .collect(),
    }
}

/// Query answering bound to one graph and schema.
pub struct Reasoner<'a> {
    graph: &'a KnowledgeGraph,
    schema: &'a ReasoningSchema,
    cfg: ReasonerConfig,
}

impl<'a> Reasoner<'a> {
    pub fn new(graph: &'a KnowledgeGraph, schema: &'a ReasoningSchema, cfg: ReasonerConfig) -> Self {
        Reasoner { graph, schema, cfg }
    }

    pub fn graph(&self) -> &'a KnowledgeGraph {
        self.graph
    }

    pub fn schema(&self) -> &'a ReasoningSchema {
        self.schema
    }

    pub fn config(&self) -> &ReasonerConfig {
        &self.cfg
    }

    pub fn paths_for(&self, q: Query) -> &'a [ScoredPath] {
        lookup_paths(self.schema, self.graph.entity_type(q.head), q.relation, &self.cfg)
    }

    pub fn answer(&self, q: Query) -> Vec<CandidateScore<'a>> {
        score_candidates(self.graph, self.schema, q, &self.cfg)
    }

    pub fn explain(&self, cand: &CandidateScore<'_>, limit: usize) -> Explanation {
        explain(self.graph, cand, limit)
    }
}
