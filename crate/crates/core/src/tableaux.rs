//! Matrix certificates showing that `(t-in-k ∪ {x}, NAE)` has no
//! 2-block-symmetric polymorphism of a given odd arity.
//!
//! One coordinate block is filled with copies of the cyclic matrix `C_k^t`,
//! so every row has the same weight there and a 2-block-symmetric `f`
//! behaves like a function of the weight in the other block. For three
//! weights `w1 < w2 < w3`, `f` must agree on one pair; each pair gets a
//! tableau whose constructed-block rows only take those two weights, so one
//! of the three outputs is all-equal and falls outside NAE.
//!
//! Row and column indices in the swap schedules below are 1-based, as in
//! the proofs they follow. The tuple `x` is always `1^d 0^(k-d)`, and the
//! constructions assume `d + t ≤ k`; [`refute`] normalizes by complementing
//! when that fails.

use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{PcspError, Result};
use crate::polymorphisms::Matrix;
use crate::structures::Tuple;
use crate::templates::{bitstring, prefix_tuple};

pub type Rational = Ratio<i64>;

mod ratio_str {
    use super::Rational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| D::Error::custom(format!("bad rational {s:?}")))
    }
}

mod ratio_pair {
    use super::Rational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &(Rational, Rational), s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([r.0.to_string(), r.1.to_string()])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(Rational, Rational), D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        let p = |s: &str| s.parse().map_err(|_| D::Error::custom(format!("bad rational {s:?}")));
        Ok((p(&lo)?, p(&hi)?))
    }
}

fn check_kt(k: usize, t: usize) -> Result<()> {
    if t == 0 || t >= k {
        return Err(PcspError::Param(format!("need 1 <= t < k, got t={t}, k={k}")));
    }
    Ok(())
}

/// Entry `(i, j)` is `1` iff `(i - j) mod k < t`: column `j` is the cyclic
/// shift of `1^t 0^(k-t)` by `j`.
pub fn cyclic_matrix(k: usize, t: usize) -> Result<Matrix> {
    check_kt(k, t)?;
    Ok((0..k)
        .map(|i| (0..k).map(|j| u32::from((i + k - j) % k < t)).collect())
        .collect())
}

/// `C_k^t` without its last column.
pub fn c_minus(k: usize, t: usize) -> Result<Matrix> {
    let mut m = cyclic_matrix(k, t)?;
    for row in &mut m {
        row.pop();
    }
    Ok(m)
}

/// `C_k^t` followed by an extra column `1^t 0^(k-t)`.
pub fn c_plus(k: usize, t: usize) -> Result<Matrix> {
    let mut m = cyclic_matrix(k, t)?;
    for (i, row) in m.iter_mut().enumerate() {
        row.push(u32::from(i < t));
    }
    Ok(m)
}

pub fn row_weights(m: &Matrix) -> Vec<usize> {
    m.iter().map(|r| r.iter().filter(|&&v| v == 1).count()).collect()
}

fn hcat(parts: &[Matrix]) -> Matrix {
    let k = parts.iter().map(Vec::len).max().unwrap_or(0);
    (0..k)
        .map(|i| parts.iter().flat_map(|p| p[i].iter().copied()).collect())
        .collect()
}

/// Swaps rows `ra` and `rb` (1-based) within column `col` (1-based).
fn swap(m: &mut Matrix, col: usize, ra: usize, rb: usize) {
    let (c, a, b) = (col - 1, ra - 1, rb - 1);
    let tmp = m[a][c];
    m[a][c] = m[b][c];
    m[b][c] = tmp;
}

fn set_column(m: &mut Matrix, col: usize, values: &[u32]) {
    for (row, &v) in m.iter_mut().zip(values) {
        row[col - 1] = v;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockParity {
    Odd,
    Even,
}

/// The four constructions, by the relation between `t` and `d` and whether
/// `(k, t, d) ≡ (1, 0, 0) mod 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `t < d`, arity `2k - 1`
    HeavyTupleShort,
    /// `d < t`, arity `2k + 1`
    LightTupleLong,
    /// `t < d`, `(k,t,d) ≡ (1,0,0)`, arity `2Lk + 1`
    HeavyTupleRepeated,
    /// `d < t`, `(k,t,d) ≡ (1,0,0)`, arity `2Lk - 1`
    LightTupleRepeated,
}

impl Construction {
    pub const ALL: [Construction; 4] = [
        Construction::HeavyTupleShort,
        Construction::LightTupleLong,
        Construction::HeavyTupleRepeated,
        Construction::LightTupleRepeated,
    ];

    /// Numeric id used on the command line.
    pub fn id(self) -> u8 {
        match self {
            Construction::HeavyTupleShort => 10,
            Construction::LightTupleLong => 11,
            Construction::HeavyTupleRepeated => 12,
            Construction::LightTupleRepeated => 13,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Construction::ALL
            .into_iter()
            .find(|c| c.id() == id)
            .ok_or_else(|| PcspError::Param(format!("unknown construction {id}; expected 10..=13")))
    }

    pub fn fixed_block(self) -> BlockParity {
        match self {
            Construction::HeavyTupleShort | Construction::LightTupleRepeated => BlockParity::Odd,
            Construction::LightTupleLong | Construction::HeavyTupleRepeated => BlockParity::Even,
        }
    }

    fn repeated(self) -> bool {
        matches!(
            self,
            Construction::HeavyTupleRepeated | Construction::LightTupleRepeated
        )
    }

    fn heavy(self) -> bool {
        matches!(
            self,
            Construction::HeavyTupleShort | Construction::HeavyTupleRepeated
        )
    }

    /// Checks the construction's hypotheses on `(k, t, d)`, except
    /// `d + t ≤ k`: that one only guarantees the construction succeeds, and
    /// [`build_case`] verifies its output when it does not hold.
    pub fn check(self, k: usize, t: usize, d: usize) -> Result<()> {
        let fail = |why: &str| {
            Err(PcspError::Case(format!(
                "construction {} does not apply to k={k}, t={t}, d={d}: {why}",
                self.id()
            )))
        };
        if k < 3 || t == 0 || t >= k || d == 0 || d >= k {
            return fail("need k >= 3 and 1 <= t, d < k");
        }
        if self.heavy() != (t < d) {
            return fail(if self.heavy() { "need t < d" } else { "need d < t" });
        }
        let odd_even_even = k % 2 == 1 && t % 2 == 0 && d % 2 == 0;
        if self.repeated() != odd_even_even {
            return fail(if self.repeated() {
                "need (k,t,d) = (1,0,0) mod 2"
            } else {
                "(k,t,d) = (1,0,0) mod 2 needs the repeated construction"
            });
        }
        if !self.repeated() && !(t % 2 == k % 2 || d % 2 != t % 2) {
            return fail("need t = k or d != t mod 2");
        }
        Ok(())
    }

    fn r(self, k: usize, t: usize, d: usize) -> usize {
        let (num, den) = match self {
            Construction::HeavyTupleShort => (t, d - t),
            Construction::LightTupleLong => (t, t - d),
            Construction::HeavyTupleRepeated => (k - t, d - t),
            Construction::LightTupleRepeated => (k - t, t - d),
        };
        num.div_ceil(den)
    }

    /// Number of `C_k^t` copies in the fixed block.
    fn copies(self, k: usize, t: usize, d: usize) -> usize {
        let r = self.r(k, t, d);
        match self {
            Construction::HeavyTupleShort | Construction::LightTupleLong => 1,
            Construction::HeavyTupleRepeated => r.saturating_sub(1).div_ceil(t).max(1),
            Construction::LightTupleRepeated => (r + 2).div_ceil(t).max(1),
        }
    }

    /// Arity of the refuted 2-block-symmetric functions.
    pub fn arity(self, k: usize, t: usize, d: usize) -> usize {
        let l = self.copies(k, t, d);
        l * k + self.width(l, k)
    }

    /// Width of the constructed block.
    fn width(self, l: usize, k: usize) -> usize {
        match self.fixed_block() {
            BlockParity::Odd => l * k - 1,
            BlockParity::Even => l * k + 1,
        }
    }

    /// The three row weights `w1 < w2 < w3` of the constructed block.
    fn weight_triple(self, l: usize, t: usize) -> [usize; 3] {
        let base = l * t;
        match self {
            Construction::HeavyTupleShort | Construction::LightTupleLong => [t - 1, t, t + 1],
            Construction::HeavyTupleRepeated => [base, base + 1, base + 2],
            Construction::LightTupleRepeated => [base - 2, base - 1, base],
        }
    }

    /// Weight pair of each case, in case order.
    fn case_pairs(self, l: usize, t: usize) -> [(usize, usize); 3] {
        let [w1, w2, w3] = self.weight_triple(l, t);
        match self {
            Construction::HeavyTupleShort => [(w1, w2), (w1, w3), (w2, w3)],
            Construction::LightTupleLong => [(w2, w3), (w1, w3), (w1, w2)],
            Construction::HeavyTupleRepeated => [(w1, w2), (w1, w3), (w2, w3)],
            Construction::LightTupleRepeated => [(w2, w3), (w1, w3), (w1, w2)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    One,
    /// dispatches to 2a or 2b by parity
    Two,
    TwoA,
    TwoB,
    Three,
}

impl std::str::FromStr for Case {
    type Err = PcspError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(Case::One),
            "2" => Ok(Case::Two),
            "2a" => Ok(Case::TwoA),
            "2b" => Ok(Case::TwoB),
            "3" => Ok(Case::Three),
            _ => Err(PcspError::Param(format!("unknown case {s:?}; expected 1, 2, 2a, 2b or 3"))),
        }
    }
}

/// Parameters of the weight-balancing construction: `r` copies of `x`,
/// then `budget` tuples from `t-in-k`, of which `s` put `b` ones in the upper
/// `d` rows and the rest `b + 1`, for an average of `a`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseParams {
    pub k: usize,
    pub t: usize,
    pub d: usize,
    pub r: usize,
    pub budget: usize,
    #[serde(with = "ratio_str")]
    pub a: Rational,
    pub b: usize,
    pub s: usize,
    #[serde(rename = "L")]
    pub l: usize,
    /// target row weights
    pub low: usize,
    pub high: usize,
    /// bounds on `a` from "every row reaches `low`"
    #[serde(with = "ratio_pair")]
    pub first: (Rational, Rational),
    /// bounds on `a` from "no row exceeds `high`"
    #[serde(with = "ratio_pair")]
    pub second: (Rational, Rational),
}

impl CaseParams {
    /// Admissible interval for `a`: both inequality pairs together with the
    /// height constraints `max(0, d+t-k) ≤ a ≤ min(d, t)`.
    pub fn interval(&self) -> (Rational, Rational) {
        let lo = *[
            self.first.0,
            self.second.0,
            Rational::from_integer((self.d + self.t).saturating_sub(self.k) as i64),
        ]
        .iter()
        .max()
        .expect("non-empty");
        let hi = *[
            self.first.1,
            self.second.1,
            Rational::from_integer(self.d.min(self.t) as i64),
        ]
        .iter()
        .min()
        .expect("non-empty");
        (lo, hi)
    }

    pub fn admits(&self, a: Rational) -> bool {
        let (lo, hi) = self.interval();
        lo <= a && a <= hi && (a * Rational::from_integer(self.budget as i64)).is_integer()
    }
}

fn case_params(
    k: usize,
    t: usize,
    d: usize,
    r: usize,
    budget: usize,
    l: usize,
    low: usize,
    high: usize,
) -> CaseParams {
    let q = |n: i64| Rational::from_integer(n);
    let (k_, t_, d_, r_, b_) = (k as i64, t as i64, d as i64, r as i64, budget as i64);
    let (lo_, hi_) = (low as i64, high as i64);
    // upper rows: r x-columns plus a·budget ones over d rows;
    // lower rows: (t - a)·budget ones over k - d rows
    let upper_at_least = Rational::new(d_ * (lo_ - r_), b_);
    let upper_at_most = Rational::new(d_ * (hi_ - r_), b_);
    let lower_at_least = q(t_) - Rational::new((k_ - d_) * lo_, b_);
    let lower_at_most = q(t_) - Rational::new((k_ - d_) * hi_, b_);
    CaseParams {
        k,
        t,
        d,
        r,
        budget,
        a: q(0),
        b: 0,
        s: 0,
        l,
        low,
        high,
        first: (upper_at_least, lower_at_least),
        second: (lower_at_most, upper_at_most),
    }
}

/// `(r x-columns | budget filled columns)`, where the filled columns are
/// placed top to bottom with wrap-around inside the upper `d` rows and,
/// separately, inside the lower `k - d` rows.
fn balanced_block(p: &CaseParams) -> Matrix {
    let (k, d) = (p.k, p.d);
    let mut m = vec![vec![0u32; p.r + p.budget]; k];
    for row in m.iter_mut().take(d) {
        for v in row.iter_mut().take(p.r) {
            *v = 1;
        }
    }
    let mut fill = |rows: std::ops::Range<usize>, quotas: &[usize]| {
        let h = rows.len();
        let mut next = 0usize;
        for (j, &quota) in quotas.iter().enumerate() {
            for step in 0..quota {
                m[rows.start + (next + step) % h][p.r + j] = 1;
            }
            if h > 0 {
                next = (next + quota) % h;
            }
        }
    };
    let upper: Vec<usize> = (0..p.budget).map(|j| if j < p.s { p.b } else { p.b + 1 }).collect();
    let lower: Vec<usize> = upper.iter().map(|&u| p.t - u).collect();
    fill(0..d, &upper);
    fill(d..k, &lower);
    m
}

fn choose_a(mut p: CaseParams, a_override: Option<Rational>) -> Result<CaseParams> {
    let budget = Rational::from_integer(p.budget as i64);
    let (lo, hi) = p.interval();
    let a = match a_override {
        Some(a) => {
            if !p.admits(a) {
                return Err(PcspError::Param(format!(
                    "a = {a} is not admissible; need {lo} <= a <= {hi} with denominator dividing {}",
                    p.budget
                )));
            }
            a
        }
        None => {
            if p.budget == 0 {
                return Err(PcspError::Internal("empty column budget".into()));
            }
            let a = (lo * budget).ceil() / budget;
            if a > hi {
                return Err(PcspError::Internal(format!(
                    "empty interval for a: {lo} > {hi} at k={}, t={}, d={}",
                    p.k, p.t, p.d
                )));
            }
            a
        }
    };
    let b = a.floor();
    p.a = a;
    p.b = b.to_integer() as usize;
    p.s = (budget * (b + Rational::from_integer(1) - a)).to_integer() as usize;
    Ok(p)
}

/// Constructed block plus the fixed block of `fixed_copies` copies of
/// `C_k^t`, interleaved by coordinate parity when used as an input matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tableau {
    pub k: usize,
    pub t: usize,
    #[serde(with = "bits")]
    pub x: Tuple,
    pub fixed_block: BlockParity,
    pub fixed_copies: usize,
    #[serde(with = "rows")]
    pub fixed: Matrix,
    #[serde(with = "rows")]
    pub constructed: Matrix,
    /// allowed row weights of the constructed block
    pub weights: (usize, usize),
    /// for weight-balanced tableaux, the height of the upper row group
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_rows: Option<usize>,
}

mod bits {
    use crate::templates::{bitstring, parse_bitstring};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &[u32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&bitstring(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u32>, D::Error> {
        parse_bitstring(&String::deserialize(d)?).map_err(D::Error::custom)
    }
}

mod rows {
    use crate::templates::{bitstring, parse_bitstring};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<u32>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(|r| bitstring(r)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<u32>>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|r| if r.is_empty() { Ok(Vec::new()) } else { parse_bitstring(r) })
            .collect::<Result<_, _>>()
            .map_err(D::Error::custom)
    }
}

impl Tableau {
    pub fn arity(&self) -> usize {
        self.fixed.first().map_or(0, Vec::len) + self.constructed.first().map_or(0, Vec::len)
    }

    fn blocks(&self) -> (&Matrix, &Matrix) {
        match self.fixed_block {
            BlockParity::Odd => (&self.fixed, &self.constructed),
            BlockParity::Even => (&self.constructed, &self.fixed),
        }
    }

    /// `k × arity` matrix with the odd block at coordinates 1, 3, 5, … and
    /// the even block at 2, 4, ….
    pub fn input_matrix(&self) -> Matrix {
        let (odd, even) = self.blocks();
        (0..self.k)
            .map(|i| {
                let mut row = Vec::with_capacity(self.arity());
                for j in 0..odd[i].len() {
                    row.push(odd[i][j]);
                    if j < even[i].len() {
                        row.push(even[i][j]);
                    }
                }
                row
            })
            .collect()
    }

    /// The same certificate for `(k-t)-in-k ∪ {x'}` with `x'` again of the
    /// form `1^(k-d) 0^d`: complement every entry and reverse the rows.
    pub fn complemented(&self) -> Tableau {
        let flip = |m: &Matrix| -> Matrix {
            m.iter()
                .rev()
                .map(|row| row.iter().map(|v| 1 - v).collect())
                .collect()
        };
        let width = self.constructed.first().map_or(0, Vec::len);
        let (w1, w2) = (width - self.weights.1, width - self.weights.0);
        Tableau {
            k: self.k,
            t: self.k - self.t,
            x: self.x.iter().rev().map(|v| 1 - v).collect(),
            fixed_block: self.fixed_block,
            fixed_copies: self.fixed_copies,
            fixed: flip(&self.fixed),
            constructed: flip(&self.constructed),
            weights: (w1, w2),
            upper_rows: self.upper_rows.map(|u| self.k - u),
        }
    }

    /// Plain-text rendering: constructed block, a bar, then the fixed block;
    /// a rule separates the row groups of weight-balanced tableaux.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        for (i, (c, f)) in self.constructed.iter().zip(&self.fixed).enumerate() {
            if Some(i) == self.upper_rows && i > 0 {
                let _ = writeln!(out, "{}", "-".repeat(c.len() + f.len() + 1));
            }
            let _ = writeln!(out, "{}|{}", bitstring(c), bitstring(f));
        }
        out
    }
}

/// Checks the certificate contract: constructed columns come from
/// `t-in-k ∪ {x}`, constructed rows take only the two declared weights, and
/// the fixed block is `fixed_copies` copies of `C_k^t` (as a multiset of
/// columns), with block widths fitting a 2-block-symmetric arity.
pub fn verify_tableau(tab: &Tableau) -> bool {
    let k = tab.k;
    if check_kt(k, tab.t).is_err()
        || tab.x.len() != k
        || tab.fixed.len() != k
        || tab.constructed.len() != k
        || tab.fixed_copies == 0
    {
        return false;
    }
    let fw = tab.fixed[0].len();
    let cw = tab.constructed[0].len();
    if tab.fixed.iter().any(|r| r.len() != fw) || tab.constructed.iter().any(|r| r.len() != cw) {
        return false;
    }
    let widths_ok = fw == tab.fixed_copies * k
        && match tab.fixed_block {
            BlockParity::Odd => cw + 1 == fw,
            BlockParity::Even => cw == fw + 1,
        };
    if !widths_ok {
        return false;
    }
    let columns = |m: &Matrix, w: usize| -> Vec<Tuple> {
        (0..w).map(|j| m.iter().map(|r| r[j]).collect()).collect()
    };
    let allowed = |c: &Tuple| c.iter().all(|&v| v <= 1) && (c.iter().sum::<u32>() as usize == tab.t || *c == tab.x);
    if !columns(&tab.constructed, cw).iter().all(allowed) {
        return false;
    }
    let (w1, w2) = tab.weights;
    if !row_weights(&tab.constructed).iter().all(|&w| w == w1 || w == w2) {
        return false;
    }
    let mut got = columns(&tab.fixed, fw);
    got.sort();
    let cyc = cyclic_matrix(k, tab.t).expect("checked above");
    let mut want: Vec<Tuple> = (0..tab.fixed_copies).flat_map(|_| columns(&cyc, k)).collect();
    want.sort();
    got == want
}

fn schedule_case_two(
    c: Construction,
    block: &mut Matrix,
    k: usize,
    t: usize,
    d: usize,
    sub: Case,
) -> Result<()> {
    let x = prefix_tuple(d, k);
    match (c, sub) {
        (Construction::HeavyTupleShort, Case::TwoA) => {
            // columns t+1, t+3, …, k-1 against row pairs (t,t+1), …, (k-2,k-1)
            for (i, col) in (t + 1..k).step_by(2).enumerate() {
                swap(block, col, t + 2 * i, t + 2 * i + 1);
            }
        }
        (Construction::HeavyTupleShort, Case::TwoB) => {
            set_column(block, 1, &x);
            if t >= 2 {
                swap(block, 2, t, d + 1);
            } else {
                // column 2 has no 1 in row t when t = 1; column d+1 does in row d+1
                swap(block, d + 1, t, d + 1);
            }
            for (i, col) in (d + 3..k).step_by(2).enumerate() {
                swap(block, col, d + 2 + 2 * i, d + 3 + 2 * i);
            }
        }
        (Construction::LightTupleLong, Case::TwoA) => {
            for (i, col) in (t + 2..=k).step_by(2).enumerate() {
                swap(block, col, t + 1 + 2 * i, t + 2 + 2 * i);
            }
        }
        (Construction::LightTupleLong, Case::TwoB) => {
            set_column(block, 1, &x);
            for (i, col) in (d + 2..=k).step_by(2).enumerate() {
                swap(block, col, d + 1 + 2 * i, d + 2 + 2 * i);
            }
        }
        (Construction::HeavyTupleRepeated, _) => {
            for i in (2..=t).step_by(2) {
                swap(block, i, i - 1, i);
            }
        }
        (Construction::LightTupleRepeated, _) => {
            for i in (2..=t.saturating_sub(2)).step_by(2) {
                swap(block, i, i - 1, i);
            }
            swap(block, k - 1, k, t - 1);
        }
        _ => unreachable!("sub-case resolved by caller"),
    }
    Ok(())
}

/// Builds the tableau of one case of a construction. For the repeated
/// constructions every case uses the copy count forced by case 3.
/// `a_override` replaces the default choice of `a` (the smallest admissible
/// value with denominator `budget`) in case 3.
pub fn build_case(
    c: Construction,
    case: Case,
    k: usize,
    t: usize,
    d: usize,
    a_override: Option<Rational>,
) -> Result<(Tableau, Option<CaseParams>)> {
    c.check(k, t, d)?;
    let l = c.copies(k, t, d);
    let pairs = c.case_pairs(l, t);
    let plain = cyclic_matrix(k, t)?;
    let fixed = hcat(&vec![plain.clone(); l]);
    let modified = match c.fixed_block() {
        BlockParity::Odd => c_minus(k, t)?,
        BlockParity::Even => c_plus(k, t)?,
    };
    let with_copies = |first: Matrix| -> Matrix {
        let mut parts = vec![first];
        parts.extend(std::iter::repeat(plain.clone()).take(l - 1));
        hcat(&parts)
    };
    let mut params = None;
    let mut upper_rows = None;
    let (constructed, weights) = match case {
        Case::One => (with_copies(modified), pairs[0]),
        Case::Two | Case::TwoA | Case::TwoB => {
            let parity_a = t % 2 == k % 2;
            let sub = if c.repeated() {
                if case != Case::Two {
                    return Err(PcspError::Case(format!(
                        "construction {} has no sub-cases 2a/2b",
                        c.id()
                    )));
                }
                Case::Two
            } else {
                let want = if parity_a { Case::TwoA } else { Case::TwoB };
                if case != Case::Two && case != want {
                    return Err(PcspError::Case(format!(
                        "case {case:?} does not match the parities of k={k}, t={t}, d={d}"
                    )));
                }
                want
            };
            let mut block = modified;
            schedule_case_two(c, &mut block, k, t, d, sub)?;
            (with_copies(block), pairs[1])
        }
        Case::Three => {
            let (low, high) = pairs[2];
            let r = c.r(k, t, d);
            let width = c.width(l, k);
            if r > width {
                return Err(PcspError::Internal(format!(
                    "{r} copies of x exceed the block width {width}"
                )));
            }
            let p = choose_a(case_params(k, t, d, r, width - r, l, low, high), a_override)
                .map_err(|e| match e {
                    PcspError::Internal(m) if d + t > k => PcspError::Case(m),
                    e => e,
                })?;
            let block = balanced_block(&p);
            params = Some(p);
            upper_rows = Some(d);
            (block, pairs[2])
        }
    };
    let tab = Tableau {
        k,
        t,
        x: prefix_tuple(d, k),
        fixed_block: c.fixed_block(),
        fixed_copies: l,
        fixed,
        constructed,
        weights,
        upper_rows,
    };
    if !verify_tableau(&tab) {
        let msg = format!("construction {} case {case:?} fails at k={k}, t={t}, d={d}", c.id());
        return Err(if d + t > k { PcspError::Case(msg) } else { PcspError::Internal(msg) });
    }
    Ok((tab, params))
}

/// Which construction applies to `(k, t, d)` once `d + t ≤ k`, or a case
/// error on the tractable parity class.
pub fn dispatch(k: usize, t: usize, d: usize) -> Result<Construction> {
    if k < 3 || t == 0 || t >= k || d == 0 || d >= k || d == t {
        return Err(PcspError::Param(format!(
            "need k >= 3, 1 <= t, d < k and d != t; got k={k}, t={t}, d={d}"
        )));
    }
    if d + t > k {
        return Err(PcspError::Precondition(format!(
            "normalize first: d + t = {} > k = {k}",
            d + t
        )));
    }
    if k % 2 == 0 && t % 2 == 1 && d % 2 == 1 {
        return Err(PcspError::Case(format!(
            "k={k}, t={t}, d={d}: t odd, k even, d odd admits 2-block-symmetric polymorphisms of all odd arities"
        )));
    }
    let repeated = k % 2 == 1 && t % 2 == 0 && d % 2 == 0;
    Ok(match (t < d, repeated) {
        (true, false) => Construction::HeavyTupleShort,
        (false, false) => Construction::LightTupleLong,
        (true, true) => Construction::HeavyTupleRepeated,
        (false, true) => Construction::LightTupleRepeated,
    })
}

/// `(t, d)` with `d + t ≤ k`, complementing if needed, and whether it was.
pub fn normalize(k: usize, t: usize, d: usize) -> (usize, usize, bool) {
    if d + t > k {
        (k - t, k - d, true)
    } else {
        (t, d, false)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefutationCertificate {
    pub k: usize,
    pub t: usize,
    pub d: usize,
    pub normalized: bool,
    /// parameters the tableaux are built for (after normalization)
    pub working_t: usize,
    pub working_d: usize,
    pub construction: Construction,
    pub arity: usize,
    /// row weight of the fixed block
    pub fixed_weight: usize,
    pub weight_triple: [usize; 3],
    /// cases 1, 2, 3, over the working parameters
    pub tableaux: Vec<Tableau>,
    pub params: CaseParams,
    pub conclusion: String,
}

impl RefutationCertificate {
    pub fn verify(&self) -> bool {
        let pairs: Vec<(usize, usize)> = self.tableaux.iter().map(|t| t.weights).collect();
        let [w1, w2, w3] = self.weight_triple;
        let mut sorted = pairs.clone();
        sorted.sort();
        self.tableaux.len() == 3
            && sorted == vec![(w1, w2), (w1, w3), (w2, w3)]
            && self.tableaux.iter().all(|t| verify_tableau(t) && t.arity() == self.arity)
            && self.original_tableaux().iter().all(verify_tableau)
    }

    /// Tableaux for the template as given, i.e. undoing normalization.
    pub fn original_tableaux(&self) -> Vec<Tableau> {
        if self.normalized {
            self.tableaux.iter().map(Tableau::complemented).collect()
        } else {
            self.tableaux.clone()
        }
    }
}

/// Certificate that `(t-in-k ∪ {x}, NAE)` with `|x| = d` has no
/// 2-block-symmetric polymorphism of the returned arity.
pub fn refute(k: usize, t: usize, d: usize) -> Result<RefutationCertificate> {
    refute_with(k, t, d, None)
}

pub fn refute_with(k: usize, t: usize, d: usize, a_override: Option<Rational>) -> Result<RefutationCertificate> {
    if k < 3 || t == 0 || t >= k || d == 0 || d >= k || d == t {
        return Err(PcspError::Param(format!(
            "need k >= 3, 1 <= t, d < k and d != t; got k={k}, t={t}, d={d}"
        )));
    }
    let (wt, wd, normalized) = normalize(k, t, d);
    let c = dispatch(k, wt, wd)?;
    let mut tableaux = Vec::with_capacity(3);
    let mut params = None;
    for case in [Case::One, Case::Two, Case::Three] {
        let (tab, p) = build_case(c, case, k, wt, wd, a_override)?;
        tableaux.push(tab);
        params = params.or(p);
    }
    let l = tableaux[0].fixed_copies;
    let arity = tableaux[0].arity();
    let triple = c.weight_triple(l, wt);
    let fixed_weight = l * wt;
    Ok(RefutationCertificate {
        k,
        t,
        d,
        normalized,
        working_t: wt,
        working_d: wd,
        construction: c,
        arity,
        fixed_weight,
        weight_triple: triple,
        tableaux,
        params: params.expect("case 3 always has parameters"),
        conclusion: format!(
            "any 2-block-symmetric f of arity {arity} agrees on two of the weights {triple:?} \
             beside fixed weight {fixed_weight}; the matching tableau maps to an all-equal tuple"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn cyclic_basics() {
        assert_eq!(
            cyclic_matrix(3, 1).unwrap(),
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]
        );
        assert!(row_weights(&cyclic_matrix(9, 3).unwrap()).iter().all(|&w| w == 3));
        assert!(row_weights(&cyclic_matrix(4, 2).unwrap()).iter().all(|&w| w == 2));
        assert!(cyclic_matrix(3, 3).is_err());
        assert!(cyclic_matrix(3, 0).is_err());
    }

    #[test]
    fn minus_and_plus() {
        let w = row_weights(&c_minus(9, 3).unwrap());
        assert_eq!(w.iter().filter(|&&x| x == 2).count(), 3);
        assert!(w.iter().all(|&x| x == 2 || x == 3));
        let w = row_weights(&c_plus(9, 3).unwrap());
        assert_eq!(w.iter().filter(|&&x| x == 4).count(), 3);
        assert!(w.iter().all(|&x| x == 3 || x == 4));
        assert_eq!(c_minus(3, 1).unwrap(), vec![vec![1, 0], vec![0, 1], vec![0, 0]]);
    }

    #[test]
    fn case_two_a_matches_figure() {
        let (tab, _) = build_case(Construction::HeavyTupleShort, Case::TwoA, 9, 3, 4, None).unwrap();
        let fig = [
            "10000001", "11000000", "11110000", "01100000", "00111100", "00011000", "00001111",
            "00000110", "00000011",
        ];
        let got: Vec<String> = tab.constructed.iter().map(|r| bitstring(r)).collect();
        assert_eq!(got, fig);
        assert!(verify_tableau(&tab));
        assert_eq!(tab.weights, (2, 4));
    }

    #[test]
    fn case_two_b_matches_figure() {
        let (tab, _) = build_case(Construction::HeavyTupleShort, Case::TwoB, 9, 2, 5, None).unwrap();
        let fig = [
            "10000000", "10000000", "11100000", "10110000", "10011000", "01001100", "00000111",
            "00000010", "00000001",
        ];
        let got: Vec<String> = tab.constructed.iter().map(|r| bitstring(r)).collect();
        assert_eq!(got, fig);
        assert_eq!(tab.weights, (1, 3));
        assert!(verify_tableau(&tab));
    }

    #[test]
    fn case_two_b_with_t_one() {
        let (tab, _) = build_case(Construction::HeavyTupleShort, Case::TwoB, 6, 1, 4, None).unwrap();
        assert!(verify_tableau(&tab));
    }

    #[test]
    fn wrong_sub_case() {
        assert!(matches!(
            build_case(Construction::HeavyTupleShort, Case::TwoB, 9, 3, 4, None),
            Err(PcspError::Case(_))
        ));
        assert!(matches!(
            build_case(Construction::LightTupleLong, Case::One, 9, 3, 4, None),
            Err(PcspError::Case(_))
        ));
    }

    #[test]
    fn figure_three_parameters() {
        let (tab, p) = build_case(Construction::HeavyTupleShort, Case::Three, 15, 7, 10, None).unwrap();
        let p = p.unwrap();
        assert_eq!((p.r, p.budget), (3, 11));
        assert_eq!(p.first, (r(40, 11), r(42, 11)));
        assert_eq!(p.second, (r(37, 11), r(50, 11)));
        assert_eq!((p.a, p.b, p.s), (r(40, 11), 3, 4));
        assert!(verify_tableau(&tab));
    }

    #[test]
    fn figure_three_matrix_with_paper_choice() {
        let (tab, p) =
            build_case(Construction::HeavyTupleShort, Case::Three, 15, 7, 10, Some(r(41, 11))).unwrap();
        let p = p.unwrap();
        assert_eq!((p.b, p.s), (3, 3));
        let fig = [
            "11110010100101", "11110010010100", "11110010010100", "11101001010010",
            "11101001010010", "11101001001010", "11100101001010", "11100100101001",
            "11100100101001", "11100010100101", "00011101101011", "00011101011010",
            "00011011010110", "00010110110101", "00001110101101",
        ];
        let got: Vec<String> = tab.constructed.iter().map(|r| bitstring(r)).collect();
        assert_eq!(got, fig);
        assert!(verify_tableau(&tab));
        assert!(build_case(Construction::HeavyTupleShort, Case::Three, 15, 7, 10, Some(r(43, 11))).is_err());
    }

    #[test]
    fn light_tuple_cases() {
        for case in [Case::One, Case::Two, Case::Three] {
            let (tab, _) = build_case(Construction::LightTupleLong, case, 9, 4, 3, None).unwrap();
            assert!(verify_tableau(&tab), "{case:?}");
            assert_eq!(tab.arity(), 19);
        }
    }

    #[test]
    fn flipped_bit_fails_verification() {
        let (mut tab, _) = build_case(Construction::HeavyTupleShort, Case::One, 9, 3, 4, None).unwrap();
        assert!(verify_tableau(&tab));
        tab.constructed[0][0] ^= 1;
        assert!(!verify_tableau(&tab));
    }

    #[test]
    fn c_minus_as_block() {
        let tab = Tableau {
            k: 9,
            t: 3,
            x: prefix_tuple(4, 9),
            fixed_block: BlockParity::Odd,
            fixed_copies: 1,
            fixed: cyclic_matrix(9, 3).unwrap(),
            constructed: c_minus(9, 3).unwrap(),
            weights: (2, 3),
            upper_rows: None,
        };
        assert!(verify_tableau(&tab));
    }

    #[test]
    fn refute_examples() {
        let c = refute(3, 1, 2).unwrap();
        assert_eq!((c.construction, c.arity), (Construction::HeavyTupleShort, 5));
        assert!(c.verify());
        // complemented to t=2, d=1
        let c = refute(4, 2, 3).unwrap();
        assert!(c.verify());
        assert_eq!((c.construction, c.arity), (Construction::LightTupleLong, 9));
        let c = refute(4, 1, 2).unwrap();
        assert_eq!((c.construction, c.arity), (Construction::HeavyTupleShort, 7));
        assert!(matches!(refute(4, 1, 3), Err(PcspError::Case(_))));
        assert!(matches!(refute(4, 2, 2), Err(PcspError::Param(_))));
        assert!(matches!(
            build_case(Construction::HeavyTupleShort, Case::Three, 4, 2, 3, None),
            Err(PcspError::Case(_))
        ));
    }

    #[test]
    fn repeated_constructions() {
        // (k,t,d) = (5,2,... ) with d even: 2 < d = 4 needs d+t <= k, fails; use k=7
        let c = refute(7, 2, 4).unwrap();
        assert_eq!(c.construction, Construction::HeavyTupleRepeated);
        assert!(c.verify());
        let c = refute(7, 4, 2).unwrap();
        assert_eq!(c.construction, Construction::LightTupleRepeated);
        assert!(c.verify());
    }

    #[test]
    fn normalization_round_trip() {
        let c = refute(5, 3, 4).unwrap();
        assert!(c.normalized);
        assert_eq!((c.working_t, c.working_d), (2, 1));
        for tab in c.original_tableaux() {
            assert_eq!(tab.t, 3);
            assert_eq!(tab.x, vec![1, 1, 1, 1, 0]);
            assert!(verify_tableau(&tab));
        }
    }

    #[test]
    fn certificate_json_round_trip() {
        let c = refute(4, 2, 3).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"a\":\""));
        let back: RefutationCertificate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn ascii_has_bar() {
        let (tab, _) = build_case(Construction::HeavyTupleShort, Case::Three, 15, 7, 10, None).unwrap();
        let text = tab.to_ascii();
        assert_eq!(text.lines().count(), 16);
        assert!(text.lines().all(|l| l.contains('|') || l.starts_with('-')));
    }
}
