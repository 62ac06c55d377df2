//! Structural checks shared by the integration suites and the acceptance run.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use logre::eval::{rank_of, EvalReport, FilterIndex};
use logre::kg::{KnowledgeGraph, Triple};
use logre::reasoner::{ground_path, Query, Reasoner};
use logre::schema::{ReasoningSchema, ScoredPath};
use logre::score::path_precision;

type Check = Result<(), String>;

fn all_lists(s: &ReasoningSchema) -> impl Iterator<Item = &Vec<ScoredPath>> {
    s.type_groups
        .values()
        .flat_map(|m| m.values())
        .chain(s.cross_type.values().map(|e| &e.paths))
        .chain(s.cross_type.values().flat_map(|e| e.sources.values()))
}

/// Counts, ordering, exclusivity, pooling and decay monotonicity.
pub fn schema(s: &ReasoningSchema) -> Check {
    s.validate()?;
    for list in all_lists(s) {
        for p in list {
            if p.stats.n > p.stats.m {
                return Err(format!("n > m on {:?}", p.relations));
            }
        }
        for w in list.windows(2) {
            if w[0].final_score(s.decay) < w[1].final_score(s.decay) {
                return Err(format!("list out of order at {:?}", w[1].relations));
            }
        }
        for a in list {
            for b in list {
                if a.hops() < b.hops()
                    && a.raw_score() == b.raw_score()
                    && !s.decay.is_one()
                    && a.final_score(s.decay) <= b.final_score(s.decay)
                {
                    return Err(format!("decay does not favour {:?}", a.relations));
                }
            }
        }
    }
    for (r, entry) in &s.cross_type {
        if s.type_groups.values().any(|m| m.contains_key(r)) {
            return Err(format!("relation {r} is both lifted and type-specific"));
        }
        // pooled precision is Σn / Σm over the source groups
        let mut sums: BTreeMap<_, (u64, u64)> = BTreeMap::new();
        for p in entry.sources.values().flatten() {
            let e = sums.entry(p.relations.clone()).or_default();
            e.0 += p.stats.n;
            e.1 += p.stats.m;
        }
        for p in &entry.paths {
            let (n, m) = sums.get(&p.relations).copied().unwrap_or_default();
            let want = BigRational::new(n.into(), m.max(1).into());
            if m == 0 || path_precision(p.stats) != want {
                return Err(format!("pooled score of {:?} is not Σn/Σm", p.relations));
            }
        }
    }
    Ok(())
}

/// Explanation replay and score bookkeeping for one query.
pub fn answer(g: &KnowledgeGraph, s: &ReasoningSchema, r: &Reasoner<'_>, q: Query) -> Check {
    let cands = r.answer(q);
    let allowed: Vec<&ScoredPath> = r.paths_for(q).iter().take(r.config().n_top).collect();
    for c in &cands {
        if c.contributions.is_empty() {
            return Err(format!("candidate {} has no path", c.candidate));
        }
        let mut sum = BigRational::zero();
        for k in &c.contributions {
            if !allowed.iter().any(|p| std::ptr::eq(*p, k.path)) {
                return Err("contribution from outside the top paths".into());
            }
            if !ground_path(g, q.head, &k.path.relations).contains(&c.candidate) {
                return Err(format!("path {:?} does not reach {}", k.path.relations, c.candidate));
            }
            if k.score != k.path.final_score(s.decay) {
                return Err("contribution score differs from the path score".into());
            }
            sum += &k.score;
        }
        if c.base_score != sum {
            return Err(format!("base score of {} is not the sum of its paths", c.candidate));
        }
        let base_sq = &c.base_score * &c.base_score;
        if c.final_score_squared() > &base_sq || (!r.config().similarity_enabled && *c.final_score_squared() != base_sq)
        {
            return Err(format!("final score of {} out of range", c.candidate));
        }
    }
    for w in cands.windows(2) {
        if !(w[0].key() > w[1].key() || (w[0].key() == w[1].key() && w[0].candidate < w[1].candidate)) {
            return Err("candidates out of order".into());
        }
    }
    for p in &allowed {
        for t in ground_path(g, q.head, &p.relations) {
            if !cands.iter().any(|c| c.candidate == t) {
                return Err(format!("reached entity {t} missing from the candidates"));
            }
        }
    }
    Ok(())
}

pub fn hits_monotone(rep: &EvalReport) -> Check {
    let h: Vec<_> = rep.hits_at.values().collect();
    if h.windows(2).all(|w| w[0] <= w[1]) {
        Ok(())
    } else {
        Err(format!("hits not monotone in K: {:?}", rep.hits_at))
    }
}

/// Marks every candidate above each gold tail as a known decoy and checks that
/// filtering lifts the gold tail to the top without touching anything else.
pub fn decoy_filtering(r: &Reasoner<'_>, facts: &[Triple]) -> Check {
    for f in facts {
        let cands = r.answer(Query::new(f.head, f.relation));
        let Some(raw) = rank_of(&cands, f.tail, |_| false) else {
            continue;
        };
        let gold_key = cands.iter().find(|c| c.candidate == f.tail).unwrap().key();
        let decoys: Vec<Triple> = cands
            .iter()
            .filter(|c| c.key() > gold_key)
            .map(|c| Triple::new(f.head, f.relation, c.candidate))
            .chain([*f])
            .collect();
        let filter = FilterIndex::from_triples([&decoys[..]]);
        let known = filter.known_tails(f.head, f.relation).unwrap();
        let filtered = rank_of(&cands, f.tail, |e| known.contains(&e)).unwrap();
        if filtered.higher != 0 || filtered.tied != raw.tied {
            return Err(format!("filtering mis-ranked {f:?}: raw {raw:?} filtered {filtered:?}"));
        }
    }
    Ok(())
}
