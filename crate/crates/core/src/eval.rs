//! Filtered MRR and Hits@K.
//!
//! Each held-out fact `(h, r, t)` becomes the query `(h, r, ?)`. Other known
//! tails of `(h, r)` from any split are removed from the candidate list, then
//! the gold tail is ranked. Ties are resolved in expectation: a gold tail
//! tied with `k` other candidates after `j` strictly better ones is credited
//! with the average reciprocal rank and the average hit indicator over
//! positions `j+1 ..= j+k+1`. Unanswered queries count as misses.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::ids::{EntityId, RelationId};
use crate::kg::{Dataset, KnowledgeGraph, Triple};
use crate::reasoner::{CandidateScore, Query, Reasoner};
use crate::score::rational_to_f64;

pub const HITS_AT: [usize; 3] = [1, 3, 10];

/// Known tails per `(head, relation)` across all splits.
#[derive(Clone, Debug, Default)]
pub struct FilterIndex {
    known: HashMap<(EntityId, RelationId), HashSet<EntityId>>,
}

impl FilterIndex {
    pub fn from_triples<'a>(splits: impl IntoIterator<Item = &'a [Triple]>) -> Self {
        let mut known: HashMap<(EntityId, RelationId), HashSet<EntityId>> = HashMap::new();
        for split in splits {
            for t in split {
                known.entry((t.head, t.relation)).or_default().insert(t.tail);
            }
        }
        FilterIndex { known }
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        Self::from_triples([ds.graph.facts(), &ds.valid[..], &ds.test[..]])
    }

    pub fn known_tails(&self, head: EntityId, relation: RelationId) -> Option<&HashSet<EntityId>> {
        self.known.get(&(head, relation))
    }
}

/// Position of the gold tail among the filtered candidates.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rank {
    /// Candidates scored strictly higher than the gold tail.
    pub higher: usize,
    /// Other candidates scored exactly as the gold tail.
    pub tied: usize,
}

impl Rank {
    fn positions(&self) -> std::ops::RangeInclusive<usize> {
        self.higher + 1..=self.higher + self.tied + 1
    }

    /// `1 + higher + tied / 2`.
    pub fn expected(&self) -> BigRational {
        BigRational::new(BigInt::from(2 * (self.higher + 1) + self.tied), BigInt::from(2))
    }

    /// Mean of `1 / position` over the tied positions.
    pub fn reciprocal(&self) -> BigRational {
        let sum = self.positions().fold(BigRational::zero(), |acc, p| {
            acc + BigRational::new(BigInt::one(), BigInt::from(p))
        });
        sum / BigInt::from(self.tied + 1)
    }

    /// Fraction of the tied positions that fall within the top `k`.
    pub fn hits(&self, k: usize) -> BigRational {
        let inside = self.positions().filter(|&p| p <= k).count();
        BigRational::new(BigInt::from(inside), BigInt::from(self.tied + 1))
    }
}

/// Rank of `gold` after dropping every candidate for which `filter_out`
/// holds (the gold tail itself is never dropped). `None` when `gold` is not
/// among the candidates.
pub fn rank_of(
    candidates: &[CandidateScore<'_>],
    gold: EntityId,
    filter_out: impl Fn(EntityId) -> bool,
) -> Option<Rank> {
    let gold_key = candidates.iter().find(|c| c.candidate == gold)?.key();
    let mut rank = Rank { higher: 0, tied: 0 };
    for c in candidates {
        if c.candidate == gold || filter_out(c.candidate) {
            continue;
        }
        match c.key().cmp(gold_key) {
            std::cmp::Ordering::Greater => rank.higher += 1,
            std::cmp::Ordering::Equal => rank.tied += 1,
            std::cmp::Ordering::Less => {}
        }
    }
    Some(rank)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryOutcome {
    pub fact: Triple,
    pub rank: Option<Rank>,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalReport {
    pub query_count: usize,
    pub answered: usize,
    pub mrr: BigRational,
    pub hits_at: BTreeMap<usize, BigRational>,
    pub per_query: Vec<QueryOutcome>,
}

impl EvalReport {
    pub fn from_outcomes(per_query: Vec<QueryOutcome>) -> Self {
        let n = per_query.len();
        let mut rr = BigRational::zero();
        let mut hits: BTreeMap<usize, BigRational> = HITS_AT.iter().map(|&k| (k, BigRational::zero())).collect();
        for q in &per_query {
            if let Some(rank) = q.rank {
                rr += rank.reciprocal();
                for (k, h) in hits.iter_mut() {
                    *h += rank.hits(*k);
                }
            }
        }
        let mean = |x: BigRational| {
            if n == 0 {
                BigRational::zero()
            } else {
                x / BigInt::from(n)
            }
        };
        EvalReport {
            query_count: n,
            answered: per_query.iter().filter(|q| q.rank.is_some()).count(),
            mrr: mean(rr),
            hits_at: hits.into_iter().map(|(k, h)| (k, mean(h))).collect(),
            per_query,
        }
    }

    pub fn mrr_f64(&self) -> f64 {
        rational_to_f64(&self.mrr)
    }

    /// Hits@k as a proportion in `[0, 1]`.
    pub fn hits_f64(&self, k: usize) -> f64 {
        self.hits_at.get(&k).map(rational_to_f64).unwrap_or(f64::NAN)
    }

    pub fn summary_line(&self) -> String {
        format!(
            "queries={} answered={} MRR={:.4} Hits@1={:.2}% Hits@3={:.2}% Hits@10={:.2}%",
            self.query_count,
            self.answered,
            self.mrr_f64(),
            100.0 * self.hits_f64(1),
            100.0 * self.hits_f64(3),
            100.0 * self.hits_f64(10),
        )
    }

    /// Serialisable form with stable key names.
    pub fn document(&self, g: &KnowledgeGraph, with_queries: bool) -> ReportDocument {
        ReportDocument {
            query_count: self.query_count,
            answered: self.answered,
            mrr: self.mrr_f64(),
            hits_at_1: self.hits_f64(1),
            hits_at_3: self.hits_f64(3),
            hits_at_10: self.hits_f64(10),
            per_query: with_queries.then(|| {
                self.per_query
                    .iter()
                    .map(|q| QueryRecord {
                        head: g.entity_name(q.fact.head).to_owned(),
                        relation: g.relation_name(q.fact.relation).to_owned(),
                        tail: g.entity_name(q.fact.tail).to_owned(),
                        rank: q.rank.map(|r| rational_to_f64(&r.expected())),
                        reciprocal_rank: q.rank.map(|r| rational_to_f64(&r.reciprocal())).unwrap_or(0.0),
                        candidates: q.candidates,
                    })
                    .collect()
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportDocument {
    pub query_count: usize,
    pub answered: usize,
    pub mrr: f64,
    #[serde(rename = "hits@1")]
    pub hits_at_1: f64,
    #[serde(rename = "hits@3")]
    pub hits_at_3: f64,
    #[serde(rename = "hits@10")]
    pub hits_at_10: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_query: Option<Vec<QueryRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryRecord {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub rank: Option<f64>,
    pub reciprocal_rank: f64,
    pub candidates: usize,
}

/// Ranking protocol.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum Ranking {
    #[default]
    Filtered,
    Raw,
}

/// Answers and ranks every fact of `split`.
pub fn evaluate(reasoner: &Reasoner<'_>, split: &[Triple], filter: &FilterIndex, ranking: Ranking) -> EvalReport {
    let outcomes: Vec<QueryOutcome> = split
        .par_iter()
        .map(|fact| {
            let cands = reasoner.answer(Query::new(fact.head, fact.relation));
            let known = match ranking {
                Ranking::Filtered => filter.known_tails(fact.head, fact.relation),
                Ranking::Raw => None,
            };
            let rank = rank_of(&cands, fact.tail, |e| known.is_some_and(|k| k.contains(&e)));
            QueryOutcome {
                fact: *fact,
                rank,
                candidates: cands.len(),
            }
        })
        .collect();
    EvalReport::from_outcomes(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn outcome(rank: Option<(usize, usize)>) -> QueryOutcome {
        QueryOutcome {
            fact: Triple::new(EntityId(0), RelationId(0), EntityId(1)),
            rank: rank.map(|(higher, tied)| Rank { higher, tied }),
            candidates: 0,
        }
    }

    #[test]
    fn rank_conventions() {
        let top = Rank { higher: 0, tied: 0 };
        assert_eq!(top.expected(), q(1, 1));
        assert_eq!(top.reciprocal(), q(1, 1));
        assert_eq!(top.hits(1), q(1, 1));

        // tied with one other at the top: average over the two orders
        let tie = Rank { higher: 0, tied: 1 };
        assert_eq!(tie.expected(), q(3, 2));
        assert_eq!(tie.hits(1), q(1, 2));
        assert_eq!(tie.hits(3), q(1, 1));
        assert_eq!(tie.reciprocal(), (q(1, 1) + q(1, 2)) / BigInt::from(2));

        let straddle = Rank { higher: 9, tied: 2 };
        assert_eq!(straddle.hits(10), q(1, 3));
        assert_eq!(straddle.expected(), q(11, 1));
    }

    #[test]
    fn report_averages_over_all_queries() {
        let r = EvalReport::from_outcomes(vec![outcome(Some((0, 0)))]);
        assert_eq!(r.mrr, q(1, 1));
        assert!(r.hits_at.values().all(|h| *h == q(1, 1)));

        let r = EvalReport::from_outcomes(vec![
            outcome(Some((0, 0))),
            outcome(Some((1, 0))),
            outcome(None),
            outcome(Some((4, 0))),
        ]);
        assert_eq!(r.answered, 3);
        assert_eq!(r.mrr, (q(1, 1) + q(1, 2) + q(1, 5)) / BigInt::from(4));
        assert_eq!(r.hits_at[&1], q(1, 4));
        assert_eq!(r.hits_at[&3], q(2, 4));
        assert_eq!(r.hits_at[&10], q(3, 4));
    }
}
