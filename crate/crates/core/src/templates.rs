//! Boolean relations `t-in-k`, `NAE`, `odd-in-k` and the templates obtained
//! from `(t-in-k, NAE)` by adding tuples to the first structure or removing
//! tuples from the second.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PcspError, Result};
use crate::limits::{capacity, saturating_pow};
use crate::structures::{find_homomorphism, Relation, RelStructure, Tuple};

pub fn weight(t: &[u32]) -> usize {
    t.iter().filter(|&&v| v != 0).count()
}

/// `1110` style rendering of a Boolean tuple.
pub fn bitstring(t: &[u32]) -> String {
    t.iter().map(|&v| if v == 0 { '0' } else { '1' }).collect()
}

pub fn parse_bitstring(s: &str) -> Result<Tuple> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(PcspError::Param(format!(
                "invalid character {other:?} in bit string {s:?}"
            ))),
        })
        .collect()
}

/// `1^ones 0^(k-ones)`.
pub fn prefix_tuple(ones: usize, k: usize) -> Tuple {
    (0..k).map(|i| u32::from(i < ones)).collect()
}

fn check_bool_capacity(count: u64, what: &str) -> Result<()> {
    if count > capacity() {
        return Err(PcspError::Capacity(format!("{what} has {count} tuples")));
    }
    Ok(())
}

fn binomial(n: u64, r: u64) -> u64 {
    let r = r.min(n - r);
    (0..r).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn tuples_with_weights(k: usize, keep: impl Fn(usize) -> bool) -> Vec<Tuple> {
    (0u64..1 << k)
        .filter(|m| keep(m.count_ones() as usize))
        .map(|m| (0..k).map(|i| ((m >> (k - 1 - i)) & 1) as u32).collect())
        .collect()
}

pub fn t_in_k(t: usize, k: usize) -> Result<Relation> {
    if t < 1 || t >= k {
        return Err(PcspError::Param(format!("t-in-k needs 1 <= t < k, got t={t}, k={k}")));
    }
    check_bool_capacity(binomial(k as u64, t as u64), "t-in-k")?;
    if k > 40 {
        return Err(PcspError::Capacity(format!("arity {k} too large")));
    }
    // Gosper's hack over k-bit masks of popcount t
    let mut tuples = Vec::new();
    let mut mask: u64 = (1u64 << t) - 1;
    while mask < 1u64 << k {
        tuples.push((0..k).map(|i| ((mask >> (k - 1 - i)) & 1) as u32).collect());
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    Relation::new(k, tuples)
}

pub fn nae(k: usize) -> Result<Relation> {
    if k < 2 {
        return Err(PcspError::Param(format!("NAE needs k >= 2, got {k}")));
    }
    check_bool_capacity(saturating_pow(2, k as u64), "NAE")?;
    Relation::new(k, tuples_with_weights(k, |w| w != 0 && w != k))
}

pub fn odd_k(k: usize) -> Result<Relation> {
    if k < 2 {
        return Err(PcspError::Param(format!("odd-in-k needs k >= 2, got {k}")));
    }
    check_bool_capacity(saturating_pow(2, k as u64), "odd-in-k")?;
    Relation::new(k, tuples_with_weights(k, |w| w % 2 == 1))
}

pub fn negate_relation(r: &Relation) -> Result<Relation> {
    if r.min_domain() > 2 {
        return Err(PcspError::Domain("negation needs a Boolean relation".into()));
    }
    Relation::new(r.arity(), r.iter().map(|t| t.iter().map(|&v| 1 - v).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// tuples of `S` are added to `t-in-k`
    Add,
    /// tuples of `S` are removed from `NAE`
    Remove,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Add => "add",
            Mode::Remove => "remove",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub mode: Mode,
    pub t: usize,
    pub k: usize,
    #[serde(rename = "S")]
    pub s: Vec<Tuple>,
}

impl TemplateSpec {
    pub fn new(mode: Mode, t: usize, k: usize, s: Vec<Tuple>) -> Result<Self> {
        let spec = TemplateSpec { mode, t, k, s };
        spec.validate()?;
        Ok(spec.canonical())
    }

    /// Checks `k >= 3`, `1 <= t < k`, and that every tuple of `S` is a
    /// non-constant Boolean `k`-tuple whose weight differs from `t`.
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(PcspError::Spec(format!("k must be at least 3, got {}", self.k)));
        }
        if self.t < 1 || self.t >= self.k {
            return Err(PcspError::Spec(format!(
                "t must satisfy 1 <= t < k, got t={} k={}",
                self.t, self.k
            )));
        }
        for x in &self.s {
            if x.len() != self.k {
                return Err(PcspError::Spec(format!(
                    "tuple {} has length {}, expected {}",
                    bitstring(x),
                    x.len(),
                    self.k
                )));
            }
            if x.iter().any(|&v| v > 1) {
                return Err(PcspError::Spec(format!("tuple {x:?} is not Boolean")));
            }
            let d = weight(x);
            if d == 0 || d == self.k {
                return Err(PcspError::Spec(format!(
                    "tuple {} is not in NAE",
                    bitstring(x)
                )));
            }
            if d == self.t {
                return Err(PcspError::Spec(format!(
                    "tuple {} already has weight t={}",
                    bitstring(x),
                    self.t
                )));
            }
        }
        Ok(())
    }

    pub fn require_nonempty(&self) -> Result<()> {
        if self.s.is_empty() {
            return Err(PcspError::Spec("S must be non-empty".into()));
        }
        Ok(())
    }

    /// Same spec with `S` sorted lexicographically and deduplicated.
    pub fn canonical(mut self) -> Self {
        self.s.sort();
        self.s.dedup();
        self
    }

    pub fn weights(&self) -> Vec<usize> {
        self.s.iter().map(|x| weight(x)).collect()
    }

    pub fn s_relation(&self) -> Result<Relation> {
        Relation::new(self.k, self.s.iter().cloned())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcspTemplate {
    pub a: RelStructure,
    pub b: RelStructure,
}

impl PcspTemplate {
    /// Validates matching signatures and the existence of a homomorphism
    /// `a → b`.
    pub fn new(a: RelStructure, b: RelStructure) -> Result<Self> {
        if a.signature() != b.signature() {
            return Err(PcspError::Template(format!(
                "signatures {:?} and {:?} differ",
                a.signature(),
                b.signature()
            )));
        }
        if find_homomorphism(&a, &b)?.is_none() {
            return Err(PcspError::Template("no homomorphism A -> B".into()));
        }
        Ok(PcspTemplate { a, b })
    }
}

pub fn build_template(spec: &TemplateSpec) -> Result<PcspTemplate> {
    spec.validate()?;
    let spec = spec.clone().canonical();
    let base = t_in_k(spec.t, spec.k)?;
    let all_nae = nae(spec.k)?;
    let s = spec.s_relation()?;
    let (a, b) = match spec.mode {
        Mode::Add => (base.union(&s)?, all_nae),
        Mode::Remove => (base, all_nae.difference(&s)?),
    };
    PcspTemplate::new(RelStructure::boolean(a)?, RelStructure::boolean(b)?)
}
