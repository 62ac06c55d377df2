//! Exact score arithmetic.
//!
//! Path scores are `d^len * n / m` with `d` a rational decay, so every score
//! in the schema is an exact rational. Candidate scores multiply a rational
//! sum by a cosine similarity of binary vectors, `dot / sqrt(|a| |b|)`, which
//! is compared exactly through its square.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Hop decay factor `d` in `(0, 1]`, held as a reduced fraction.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decay {
    num: u64,
    den: u64,
}

impl Decay {
    pub const ONE: Decay = Decay { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num > den {
            return Err(Error::Config(format!("decay must lie in (0, 1], got {num}/{den}")));
        }
        let g = num.gcd(&den);
        Ok(Decay {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numer(self) -> u64 {
        self.num
    }

    pub fn denom(self) -> u64 {
        self.den
    }

    pub fn is_one(self) -> bool {
        self.num == self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `d^hops` as an exact rational.
    pub fn pow(self, hops: u32) -> BigRational {
        BigRational::new(BigInt::from(self.num).pow(hops), BigInt::from(self.den).pow(hops))
    }
}

impl FromStr for Decay {
    type Err = Error;

    /// Accepts decimals (`0.95`) and fractions (`19/20`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse decay {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse::<u64>().map_err(|_| bad())?;
            let d = d.trim().parse::<u64>().map_err(|_| bad())?;
            return Decay::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() > 18 {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac_v: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_v))
            .ok_or_else(bad)?;
        Decay::new(num, den)
    }
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Occurrence counts of a path: `m` walks followed it, `n` of them ended at a
/// correct tail.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PathStats {
    pub m: u64,
    pub n: u64,
}

impl PathStats {
    pub fn new(m: u64, n: u64) -> Self {
        PathStats { m, n }
    }

    pub fn pooled<'a>(parts: impl IntoIterator<Item = &'a PathStats>) -> PathStats {
        parts.into_iter().fold(PathStats::default(), |acc, s| PathStats {
            m: acc.m + s.m,
            n: acc.n + s.n,
        })
    }
}

/// Precision `n / m` of a path.
///
/// Panics when `m == 0`; such a path never reaches the schema.
pub fn path_precision(stats: PathStats) -> BigRational {
    assert!(stats.m > 0, "path precision of a path with no occurrences");
    BigRational::new(BigInt::from(stats.n), BigInt::from(stats.m))
}

/// `d^len * raw`.
pub fn apply_hop_decay(raw: &BigRational, hops: u32, decay: Decay) -> BigRational {
    assert!(hops >= 1, "paths have at least one hop");
    raw * decay.pow(hops)
}

/// Decayed precision `d^hops * n / m`.
pub fn decayed_score(stats: PathStats, hops: u32, decay: Decay) -> BigRational {
    apply_hop_decay(&path_precision(stats), hops, decay)
}

pub fn decayed_score_f64(stats: PathStats, hops: u32, decay: Decay) -> f64 {
    decay.to_f64().powi(hops as i32) * stats.n as f64 / stats.m as f64
}

fn pow_u128(base: u64, exp: u32) -> Option<u128> {
    (base as u128).checked_pow(exp)
}

fn product(parts: &[(u64, u32)]) -> Option<u128> {
    parts
        .iter()
        .try_fold(1u128, |acc, &(b, e)| acc.checked_mul(pow_u128(b, e)?))
}

fn product_big(parts: &[(u64, u32)]) -> BigUint {
    parts
        .iter()
        .fold(BigUint::one(), |acc, &(b, e)| acc * BigUint::from(b).pow(e))
}

/// Exact comparison of `d^ha * a.n / a.m` against `d^hb * b.n / b.m`.
pub fn cmp_decayed(a: PathStats, ha: u32, b: PathStats, hb: u32, decay: Decay) -> Ordering {
    let k = ha.min(hb);
    let (ea, eb) = (ha - k, hb - k);
    // d^ea * na / ma  vs  d^eb * nb / mb
    // p^ea q^eb na mb  vs  p^eb q^ea nb ma
    let (p, q) = (decay.numer(), decay.denom());
    let lhs = [(p, ea), (q, eb), (a.n, 1), (b.m, 1)];
    let rhs = [(p, eb), (q, ea), (b.n, 1), (a.m, 1)];
    match (product(&lhs), product(&rhs)) {
        (Some(l), Some(r)) => l.cmp(&r),
        _ => product_big(&lhs).cmp(&product_big(&rhs)),
    }
}

/// Cosine similarity of two binary vectors, `dot / sqrt(norm_product)`.
///
/// `norm_product == 0` encodes the zero-vector convention (similarity 0).
/// Equality compares values, so `2 / sqrt(4) == 1 / sqrt(1)`.
#[derive(Copy, Clone, Debug)]
pub struct Similarity {
    pub dot: u64,
    pub norm_product: u64,
}

impl Similarity {
    pub const ONE: Similarity = Similarity {
        dot: 1,
        norm_product: 1,
    };
    pub const ZERO: Similarity = Similarity {
        dot: 0,
        norm_product: 0,
    };

    pub fn new(dot: u64, norm_a: u64, norm_b: u64) -> Self {
        if norm_a == 0 || norm_b == 0 || dot == 0 {
            Similarity::ZERO
        } else {
            Similarity {
                dot,
                norm_product: norm_a * norm_b,
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.dot == 0
    }

    /// Exact square of the similarity.
    pub fn squared(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        BigRational::new(
            BigInt::from(self.dot) * BigInt::from(self.dot),
            BigInt::from(self.norm_product),
        )
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.dot as f64 / (self.norm_product as f64).sqrt()
        }
    }
}

impl PartialEq for Similarity {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Similarity {}

impl PartialOrd for Similarity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Similarity {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => {
                let l = self.dot as u128 * self.dot as u128 * other.norm_product as u128;
                let r = other.dot as u128 * other.dot as u128 * self.norm_product as u128;
                l.cmp(&r)
            }
        }
    }
}

/// Ordering key for a candidate score `base * similarity`.
///
/// Holds the exact square alongside a float approximation; the float decides
/// unless the two values are within rounding distance of each other.
#[derive(Clone, Debug)]
pub struct ScoreKey {
    approx: f64,
    exact_sq: BigRational,
}

impl ScoreKey {
    pub fn new(base: &BigRational, similarity: Similarity) -> Self {
        let approx = rational_to_f64(base) * similarity.to_f64();
        let exact_sq = base * base * similarity.squared();
        ScoreKey { approx, exact_sq }
    }

    pub fn approx(&self) -> f64 {
        self.approx
    }

    pub fn exact_squared(&self) -> &BigRational {
        &self.exact_sq
    }
}

impl PartialEq for ScoreKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ScoreKey {}

impl PartialOrd for ScoreKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScoreKey {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.approx, other.approx);
        let scale = a.abs().max(b.abs());
        if (a - b).abs() > scale * 1e-9 {
            return a.partial_cmp(&b).unwrap_or(Ordering::Equal);
        }
        self.exact_sq.cmp(&other.exact_sq)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator and denominator both beyond f64 range: scale down first
        let shift = r.denom().bits().saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// `num/den` text form used by the on-disk formats.
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let (n, d) = s.split_once('/')?;
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}
