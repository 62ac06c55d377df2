//! From-scratch reference implementation used to cross-check the engine on
//! graphs small enough to enumerate every bounded walk.
//!
//! Nothing here calls into the library beyond plain id conventions: entity
//! and relation ids are dense integers, label `r` is the forward edge of
//! relation `r` and label `r + |R|` its inverse.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Seq = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OPath {
    pub seq: Seq,
    pub m: u64,
    pub n: u64,
    pub tails: BTreeSet<u32>,
}

/// Pooled list and the per-type lists it was pooled from.
pub type OCross = (Vec<OPath>, BTreeMap<String, Vec<OPath>>);

#[derive(Clone, Debug, Default)]
pub struct OSchema {
    /// `(type name, relation) -> sorted paths`, only non-empty lists.
    pub typed: BTreeMap<(String, u32), Vec<OPath>>,
    /// `relation -> (sorted pooled paths, type name -> sorted pre-lift list)`.
    pub cross: BTreeMap<u32, OCross>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OCandidate {
    pub entity: u32,
    pub base: BigRational,
    pub final_sq: BigRational,
}

pub struct Oracle {
    pub n_rel: u32,
    pub n_hop: usize,
    pub decay: (u64, u64),
    facts: BTreeSet<(u32, u32, u32)>,
    adj: BTreeMap<(u32, u32), BTreeSet<u32>>,
    labels_of: Vec<BTreeSet<u32>>,
    pub types: Vec<String>,
}

impl Oracle {
    pub fn new(
        n_ent: u32,
        n_rel: u32,
        facts: &[(u32, u32, u32)],
        type_pairs: &[(u32, String)],
        n_hop: usize,
        decay: (u64, u64),
    ) -> Self {
        let facts: BTreeSet<_> = facts.iter().copied().collect();
        let mut adj: BTreeMap<(u32, u32), BTreeSet<u32>> = BTreeMap::new();
        let mut labels_of = vec![BTreeSet::new(); n_ent as usize];
        for &(h, r, t) in &facts {
            adj.entry((h, r)).or_default().insert(t);
            adj.entry((t, r + n_rel)).or_default().insert(h);
            labels_of[h as usize].insert(r);
            labels_of[t as usize].insert(r + n_rel);
        }
        // each entity takes its listed type that is most frequent over the
        // whole types file (distinct entity/type lines), smallest name on ties
        let pairs: BTreeSet<(u32, &str)> = type_pairs.iter().map(|(e, t)| (*e, t.as_str())).collect();
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, t) in &pairs {
            *freq.entry(t).or_default() += 1;
        }
        let types = (0..n_ent)
            .map(|e| {
                let mut best: Option<&str> = None;
                for &(_, t) in pairs.iter().filter(|p| p.0 == e) {
                    if best.is_none_or(|b| freq[t] > freq[b] || (freq[t] == freq[b] && t < b)) {
                        best = Some(t);
                    }
                }
                best.unwrap_or("others").to_owned()
            })
            .collect();
        Oracle {
            n_rel,
            n_hop,
            decay,
            facts,
            adj,
            labels_of,
            types,
        }
    }

    fn n_ent(&self) -> u32 {
        self.labels_of.len() as u32
    }

    pub fn ground(&self, h: u32, seq: &[u32]) -> BTreeSet<u32> {
        let mut frontier = BTreeSet::from([h]);
        for &l in seq {
            let mut next = BTreeSet::new();
            for e in &frontier {
                if let Some(s) = self.adj.get(&(*e, l)) {
                    next.extend(s.iter().copied());
                }
            }
            if next.is_empty() {
                return next;
            }
            frontier = next;
        }
        frontier
    }

    /// Every label sequence of 1..=n_hop hops that grounds from `e`, with its
    /// endpoint set.
    fn walk_space(&self, e: u32) -> Vec<(Seq, BTreeSet<u32>)> {
        let mut out = Vec::new();
        let mut stack: Vec<Seq> = (0..2 * self.n_rel).map(|l| vec![l]).collect();
        while let Some(seq) = stack.pop() {
            let ends = self.ground(e, &seq);
            if ends.is_empty() {
                continue;
            }
            if seq.len() < self.n_hop {
                for l in 0..2 * self.n_rel {
                    let mut longer = seq.clone();
                    longer.push(l);
                    stack.push(longer);
                }
            }
            out.push((seq, ends));
        }
        out
    }

    fn heads_of(&self, r: u32) -> BTreeSet<u32> {
        self.facts.iter().filter(|f| f.1 == r).map(|f| f.0).collect()
    }

    /// Per type, per held relation, the counted paths (possibly empty).
    pub fn group_paths(&self) -> BTreeMap<String, BTreeMap<u32, BTreeMap<Seq, OPath>>> {
        let spaces: Vec<_> = (0..self.n_ent()).map(|e| self.walk_space(e)).collect();
        let mut out: BTreeMap<String, BTreeMap<u32, BTreeMap<Seq, OPath>>> = BTreeMap::new();
        for r in 0..self.n_rel {
            for h in self.heads_of(r) {
                let ty = self.types[h as usize].clone();
                let per_seq = out.entry(ty).or_default().entry(r).or_default();
                for (seq, ends) in &spaces[h as usize] {
                    let hits: BTreeSet<u32> = ends
                        .iter()
                        .copied()
                        .filter(|t| self.facts.contains(&(h, r, *t)))
                        .collect();
                    let p = per_seq.entry(seq.clone()).or_insert_with(|| OPath {
                        seq: seq.clone(),
                        m: 0,
                        n: 0,
                        tails: BTreeSet::new(),
                    });
                    p.m += ends.len() as u64;
                    p.n += hits.len() as u64;
                    p.tails.extend(hits);
                }
            }
        }
        for rels in out.values_mut() {
            for paths in rels.values_mut() {
                paths.retain(|_, p| p.n > 0);
            }
        }
        out
    }

    pub fn score(&self, p: &OPath) -> BigRational {
        let (dn, dd) = self.decay;
        let hops = p.seq.len() as u32;
        BigRational::new(
            BigInt::from(dn).pow(hops) * BigInt::from(p.n),
            BigInt::from(dd).pow(hops) * BigInt::from(p.m),
        )
    }

    fn sorted(&self, paths: impl IntoIterator<Item = OPath>) -> Vec<OPath> {
        let mut v: Vec<(BigRational, OPath)> = paths.into_iter().map(|p| (self.score(&p), p)).collect();
        v.sort_by(|a, b| {
            b.0.cmp(&a.0)
                .then(a.1.seq.len().cmp(&b.1.seq.len()))
                .then(a.1.seq.cmp(&b.1.seq))
        });
        v.into_iter().map(|(_, p)| p).collect()
    }

    pub fn schema(&self) -> OSchema {
        let groups = self.group_paths();
        let mut holders: BTreeMap<u32, usize> = BTreeMap::new();
        for rels in groups.values() {
            for r in rels.keys() {
                *holders.entry(*r).or_default() += 1;
            }
        }
        let mut s = OSchema::default();
        for (ty, rels) in &groups {
            for (r, paths) in rels {
                if holders[r] >= 2 {
                    let entry = s.cross.entry(*r).or_default();
                    entry.1.insert(ty.clone(), self.sorted(paths.values().cloned()));
                } else if !paths.is_empty() {
                    s.typed.insert((ty.clone(), *r), self.sorted(paths.values().cloned()));
                }
            }
        }
        for (pooled, sources) in s.cross.values_mut() {
            let mut sum: BTreeMap<Seq, OPath> = BTreeMap::new();
            for list in sources.values() {
                for p in list {
                    let acc = sum.entry(p.seq.clone()).or_insert_with(|| OPath {
                        seq: p.seq.clone(),
                        m: 0,
                        n: 0,
                        tails: BTreeSet::new(),
                    });
                    acc.m += p.m;
                    acc.n += p.n;
                    acc.tails.extend(p.tails.iter().copied());
                }
            }
            *pooled = self.sorted(sum.into_values());
        }
        s
    }

    pub fn lookup<'s>(&self, s: &'s OSchema, h: u32, r: u32, cross_type: bool) -> &'s [OPath] {
        let ty = &self.types[h as usize];
        if let Some((pooled, sources)) = s.cross.get(&r) {
            return if cross_type {
                pooled
            } else {
                sources.get(ty).map(Vec::as_slice).unwrap_or(&[])
            };
        }
        s.typed.get(&(ty.clone(), r)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Squared cosine of the two entities' label sets; 0 for an empty set.
    pub fn cosine_sq(&self, a: u32, b: u32) -> BigRational {
        let la = &self.labels_of[a as usize];
        let lb = &self.labels_of[b as usize];
        if la.is_empty() || lb.is_empty() {
            return BigRational::zero();
        }
        let dot = la.intersection(lb).count() as u64;
        BigRational::new(BigInt::from(dot * dot), BigInt::from(la.len() as u64 * lb.len() as u64))
    }

    pub fn rank(
        &self,
        s: &OSchema,
        h: u32,
        r: u32,
        n_top: usize,
        similarity: bool,
        cross_type: bool,
    ) -> Vec<OCandidate> {
        let paths = self.lookup(s, h, r, cross_type);
        let mut base: BTreeMap<u32, BigRational> = BTreeMap::new();
        let mut tails: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for p in paths.iter().take(n_top) {
            let sc = self.score(p);
            for t in self.ground(h, &p.seq) {
                *base.entry(t).or_insert_with(BigRational::zero) += &sc;
                tails.entry(t).or_default().extend(p.tails.iter().copied());
            }
        }
        let mut out: Vec<OCandidate> = base
            .into_iter()
            .map(|(t, b)| {
                let others: Vec<u32> = tails[&t].iter().copied().filter(|&x| x != t).collect();
                let sim_sq = if !similarity || others.is_empty() {
                    BigRational::one()
                } else {
                    others.iter().map(|&x| self.cosine_sq(t, x)).max().unwrap()
                };
                OCandidate {
                    entity: t,
                    final_sq: &b * &b * sim_sq,
                    base: b,
                }
            })
            .collect();
        out.sort_by(|a, b| b.final_sq.cmp(&a.final_sq).then(a.entity.cmp(&b.entity)));
        out
    }
}
