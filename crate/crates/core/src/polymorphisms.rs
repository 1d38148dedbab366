//! Boolean functions, polymorphism checks, the named threshold/parity
//! families, and existence searches for 2-block-symmetric and alternating
//! polymorphisms.
//!
//! Inputs of an `m`-ary [`BoolFn`] are indexed by their binary encoding with
//! the first coordinate most significant, the same convention
//! [`crate::structures::power`] uses for the `m`-th power of `{0,1}`. A
//! function's truth table is therefore exactly the map of the corresponding
//! homomorphism from the power structure.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{PcspError, Result};
use crate::limits::{capacity, MAX_BLOCK_M, MAX_BOOL_ARITY};
use crate::structures::{all_homomorphisms, check_signature, power, RelStructure, Tuple};
use crate::templates::bitstring;

/// `k × m` Boolean matrix stored row-major.
pub type Matrix = Vec<Vec<u32>>;

pub fn matrix_from_columns(cols: &[Tuple]) -> Matrix {
    let k = cols.first().map_or(0, Vec::len);
    (0..k).map(|r| cols.iter().map(|c| c[r]).collect()).collect()
}

pub fn matrix_columns(m: &Matrix) -> Vec<Tuple> {
    let width = m.first().map_or(0, Vec::len);
    (0..width).map(|j| m.iter().map(|row| row[j]).collect()).collect()
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolFn {
    arity: usize,
    bits: Vec<u64>,
}

impl fmt::Debug for BoolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoolFn({}; {})", self.arity, self.table_string())
    }
}

impl BoolFn {
    fn check_arity(arity: usize) -> Result<()> {
        if arity == 0 || arity > MAX_BOOL_ARITY {
            return Err(PcspError::Capacity(format!(
                "function arity {arity} outside 1..={MAX_BOOL_ARITY}"
            )));
        }
        Ok(())
    }

    pub fn from_table(arity: usize, table: &[bool]) -> Result<Self> {
        Self::check_arity(arity)?;
        if table.len() != 1 << arity {
            return Err(PcspError::Dim(format!(
                "table of length {} for arity {arity}",
                table.len()
            )));
        }
        let mut f = BoolFn {
            arity,
            bits: vec![0; ((1usize << arity) + 63) / 64],
        };
        for (i, &v) in table.iter().enumerate() {
            f.set(i, v);
        }
        Ok(f)
    }

    /// Builds the table by evaluating `g` on every input, given as a slice
    /// of coordinates `x_1..x_m`.
    pub fn from_fn(arity: usize, mut g: impl FnMut(&[u32]) -> bool) -> Result<Self> {
        Self::check_arity(arity)?;
        let mut f = BoolFn {
            arity,
            bits: vec![0; ((1usize << arity) + 63) / 64],
        };
        let mut input = vec![0u32; arity];
        for idx in 0..1usize << arity {
            for (j, slot) in input.iter_mut().enumerate() {
                *slot = ((idx >> (arity - 1 - j)) & 1) as u32;
            }
            f.set(idx, g(&input));
        }
        Ok(f)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn set(&mut self, idx: usize, v: bool) {
        if v {
            self.bits[idx / 64] |= 1 << (idx % 64);
        } else {
            self.bits[idx / 64] &= !(1 << (idx % 64));
        }
    }

    pub fn eval_index(&self, idx: usize) -> bool {
        (self.bits[idx / 64] >> (idx % 64)) & 1 == 1
    }

    pub fn eval(&self, input: &[u32]) -> bool {
        let idx = input.iter().fold(0usize, |acc, &x| (acc << 1) | (x as usize & 1));
        self.eval_index(idx)
    }

    pub fn table(&self) -> Vec<bool> {
        (0..1usize << self.arity).map(|i| self.eval_index(i)).collect()
    }

    /// Truth table as a `0/1` string, input `0…0` first.
    pub fn table_string(&self) -> String {
        (0..1usize << self.arity)
            .map(|i| if self.eval_index(i) { '1' } else { '0' })
            .collect()
    }

    pub fn negated(&self) -> BoolFn {
        let mut f = self.clone();
        for i in 0..1usize << self.arity {
            f.set(i, !self.eval_index(i));
        }
        f
    }

    /// `x ↦ f(1 - x)` coordinate-wise.
    pub fn with_negated_inputs(&self) -> BoolFn {
        let mask = (1usize << self.arity) - 1;
        let mut f = self.clone();
        for i in 0..=mask {
            f.set(i, self.eval_index(i ^ mask));
        }
        f
    }

    /// Whether swapping coordinates `i` and `j` (0-based) leaves `f` fixed.
    fn invariant_under_swap(&self, i: usize, j: usize) -> bool {
        let (bi, bj) = (self.arity - 1 - i, self.arity - 1 - j);
        (0..1usize << self.arity).all(|idx| {
            let (xi, xj) = ((idx >> bi) & 1, (idx >> bj) & 1);
            if xi == xj {
                return true;
            }
            let swapped = idx ^ (1 << bi) ^ (1 << bj);
            self.eval_index(idx) == self.eval_index(swapped)
        })
    }

    pub fn is_symmetric(&self) -> bool {
        (1..self.arity).all(|i| self.invariant_under_swap(i - 1, i))
    }

    /// Invariance under permutations preserving coordinate parity.
    pub fn is_two_block_symmetric(&self) -> bool {
        self.arity % 2 == 1 && (2..self.arity).all(|i| self.invariant_under_swap(i - 2, i))
    }

    /// Coordinate blocks (0-based positions) within which `f` is invariant.
    fn symmetry_blocks(&self) -> Vec<Vec<usize>> {
        if self.is_symmetric() {
            vec![(0..self.arity).collect()]
        } else if self.is_two_block_symmetric() {
            vec![
                (0..self.arity).step_by(2).collect(),
                (1..self.arity).step_by(2).collect(),
            ]
        } else {
            (0..self.arity).map(|i| vec![i]).collect()
        }
    }
}

pub fn apply_rows(f: &BoolFn, m: &Matrix) -> Result<Tuple> {
    m.iter()
        .map(|row| {
            if row.len() != f.arity() {
                Err(PcspError::Dim(format!(
                    "row of length {} for a function of arity {}",
                    row.len(),
                    f.arity()
                )))
            } else {
                Ok(u32::from(f.eval(row)))
            }
        })
        .collect()
}

fn check_boolean_pair(a: &RelStructure, b: &RelStructure) -> Result<()> {
    check_signature(a, b)?;
    if !a.is_boolean() || !b.is_boolean() {
        return Err(PcspError::Domain("Boolean structures required".into()));
    }
    Ok(())
}

fn tuple_mask(t: &[u32]) -> u64 {
    t.iter()
        .enumerate()
        .fold(0u64, |acc, (r, &v)| acc | ((v as u64 & 1) << r))
}

fn multisets(n: u64, size: u64) -> u64 {
    // C(n + size - 1, size)
    if n == 0 {
        return u64::from(size == 0);
    }
    let top = n + size - 1;
    let r = size.min(top - size);
    (0..r).fold(1u64, |acc, i| acc.saturating_mul(top - i) / (i + 1))
}

struct ViolationSearch<'a> {
    f: &'a BoolFn,
    cols: Vec<u64>,
    allowed: HashSet<u64>,
    k: usize,
    // coordinate position of each DFS slot, and whether the slot starts a block
    slots: Vec<(usize, bool)>,
    chosen: Vec<usize>,
    row_idx: Vec<usize>,
}

impl ViolationSearch<'_> {
    fn dfs(&mut self, slot: usize) -> bool {
        if slot == self.slots.len() {
            let out = (0..self.k).fold(0u64, |acc, r| {
                acc | (u64::from(self.f.eval_index(self.row_idx[r])) << r)
            });
            return !self.allowed.contains(&out);
        }
        let (pos, starts_block) = self.slots[slot];
        let lo = if starts_block { 0 } else { self.chosen[slot - 1] };
        let shift = self.f.arity() - 1 - pos;
        for c in lo..self.cols.len() {
            self.chosen[slot] = c;
            let col = self.cols[c];
            for r in 0..self.k {
                self.row_idx[r] |= (((col >> r) & 1) as usize) << shift;
            }
            let found = self.dfs(slot + 1);
            for r in 0..self.k {
                self.row_idx[r] &= !(1usize << shift);
            }
            if found {
                return true;
            }
        }
        false
    }
}

/// A matrix whose columns come from a relation of `a` and whose row-wise
/// image under `f` falls outside the matching relation of `b`, if any.
/// Column choices are enumerated as multisets inside each block of
/// coordinates `f` is invariant on.
pub fn polymorphism_violation(
    f: &BoolFn,
    a: &RelStructure,
    b: &RelStructure,
) -> Result<Option<Matrix>> {
    check_boolean_pair(a, b)?;
    let blocks = f.symmetry_blocks();
    for (ra, rb) in a.relations().iter().zip(b.relations()) {
        let k = ra.arity();
        if k > 64 {
            return Err(PcspError::Capacity(format!("relation arity {k} too large")));
        }
        let cols: Vec<u64> = ra.iter().map(|t| tuple_mask(t)).collect();
        if cols.is_empty() {
            continue;
        }
        let work = blocks.iter().fold(1u64, |acc, bl| {
            acc.saturating_mul(multisets(cols.len() as u64, bl.len() as u64))
        });
        if work > capacity() {
            return Err(PcspError::Capacity(format!(
                "{work} column choices for an arity-{} check",
                f.arity()
            )));
        }
        let slots: Vec<(usize, bool)> = blocks
            .iter()
            .flat_map(|bl| bl.iter().enumerate().map(|(i, &p)| (p, i == 0)))
            .collect();
        let mut search = ViolationSearch {
            f,
            allowed: rb.iter().map(|t| tuple_mask(t)).collect(),
            k,
            chosen: vec![0; slots.len()],
            slots,
            cols,
            row_idx: vec![0; k],
        };
        if search.dfs(0) {
            let tuples: Vec<&Tuple> = ra.iter().collect();
            let mut columns = vec![Vec::new(); f.arity()];
            for (slot, &(pos, _)) in search.slots.iter().enumerate() {
                columns[pos] = tuples[search.chosen[slot]].clone();
            }
            return Ok(Some(matrix_from_columns(&columns)));
        }
    }
    Ok(None)
}

pub fn is_polymorphism(f: &BoolFn, a: &RelStructure, b: &RelStructure) -> Result<bool> {
    Ok(polymorphism_violation(f, a, b)?.is_none())
}

/// Every arity-`m` polymorphism of `(a, b)`, sorted by truth table. These
/// are the homomorphisms from the `m`-th power of `a` to `b`.
pub fn enumerate_polymorphisms(a: &RelStructure, b: &RelStructure, m: usize) -> Result<Vec<BoolFn>> {
    check_boolean_pair(a, b)?;
    BoolFn::check_arity(m)?;
    let pa = power(a, m)?;
    let cap = capacity() as usize;
    let homs = all_homomorphisms(&pa, b, cap.saturating_add(1))?;
    if homs.len() > cap {
        return Err(PcspError::Capacity(format!(
            "more than {cap} polymorphisms of arity {m}"
        )));
    }
    let mut out = homs
        .into_iter()
        .map(|h| {
            let table: Vec<bool> = h.map.iter().map(|&v| v == 1).collect();
            BoolFn::from_table(m, &table)
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_cached_key(BoolFn::table_string);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyName {
    Or,
    And,
    Xor,
    /// alternating threshold `x1 - x2 + x3 - ... > 0`
    At,
    Maj,
    /// `q`-threshold with `0 < q < 1`
    Thr(Ratio<i64>),
    Const(bool),
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyName::Or => f.write_str("OR"),
            FamilyName::And => f.write_str("AND"),
            FamilyName::Xor => f.write_str("XOR"),
            FamilyName::At => f.write_str("AT"),
            FamilyName::Maj => f.write_str("MAJ"),
            FamilyName::Thr(q) => write!(f, "THR({q})"),
            FamilyName::Const(c) => write!(f, "CONST({})", u8::from(*c)),
        }
    }
}

impl FromStr for FamilyName {
    type Err = PcspError;

    /// Accepts `or`, `and`, `xor`, `at`, `maj`, `thr:p/q`, `const:0|1`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (head, arg) = match lower.split_once(':') {
            Some((h, a)) => (h.to_string(), Some(a.to_string())),
            None => (lower.clone(), None),
        };
        match (head.as_str(), arg) {
            ("or", None) => Ok(FamilyName::Or),
            ("and", None) => Ok(FamilyName::And),
            ("xor", None) => Ok(FamilyName::Xor),
            ("at", None) => Ok(FamilyName::At),
            ("maj", None) => Ok(FamilyName::Maj),
            ("thr", Some(q)) => {
                let q: Ratio<i64> = q
                    .parse()
                    .map_err(|_| PcspError::Param(format!("bad threshold {q:?}")))?;
                if q <= Ratio::from_integer(0) || q >= Ratio::from_integer(1) {
                    return Err(PcspError::Param(format!("threshold {q} not in (0,1)")));
                }
                Ok(FamilyName::Thr(q))
            }
            ("const", Some(c)) if c == "0" || c == "1" => Ok(FamilyName::Const(c == "1")),
            _ => Err(PcspError::Param(format!("unknown family {s:?}"))),
        }
    }
}

impl FamilyName {
    /// Whether `m` is an arity at which the family has a member.
    pub fn admits_arity(&self, m: usize) -> bool {
        match self {
            FamilyName::Or | FamilyName::And => m >= 2,
            FamilyName::Xor | FamilyName::At | FamilyName::Maj => m % 2 == 1,
            FamilyName::Thr(q) => m >= 1 && (*q * Ratio::from_integer(m as i64)).denom() != &1,
            FamilyName::Const(_) => m >= 1,
        }
    }
}

pub fn family_member(name: FamilyName, m: usize, negated: bool) -> Result<BoolFn> {
    if m == 0 {
        return Err(PcspError::Param("arity must be positive".into()));
    }
    let parity_ok = match name {
        FamilyName::Xor | FamilyName::At | FamilyName::Maj => m % 2 == 1,
        FamilyName::Thr(q) => {
            if q <= Ratio::from_integer(0) || q >= Ratio::from_integer(1) {
                return Err(PcspError::Param(format!("threshold {q} not in (0,1)")));
            }
            name.admits_arity(m)
        }
        _ => true,
    };
    if !parity_ok {
        return Err(PcspError::Param(format!("{name} has no member of arity {m}")));
    }
    let f = BoolFn::from_fn(m, |x| {
        let sum: i64 = x.iter().map(|&v| v as i64).sum();
        match name {
            FamilyName::Or => sum > 0,
            FamilyName::And => sum == m as i64,
            FamilyName::Xor => sum % 2 == 1,
            FamilyName::At => {
                let alt: i64 = x
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| if j % 2 == 0 { v as i64 } else { -(v as i64) })
                    .sum();
                alt > 0
            }
            FamilyName::Maj => 2 * sum > m as i64,
            // 0 iff sum < m q
            FamilyName::Thr(q) => sum * q.denom() >= m as i64 * q.numer(),
            FamilyName::Const(c) => c,
        }
    })?;
    Ok(if negated { f.negated() } else { f })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub arity: usize,
    /// matrix rows as bit strings
    pub rows: Vec<String>,
    pub output: String,
}

/// Bounded evidence for "every member of a family up to `max_arity` is a
/// polymorphism". The families are infinite, so `holds == true` is never a
/// proof about the whole family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyEvidence {
    pub family: String,
    pub negated: bool,
    pub max_arity: usize,
    pub arities_checked: Vec<usize>,
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
}

pub fn check_family_in_pol(
    name: FamilyName,
    negated: bool,
    a: &RelStructure,
    b: &RelStructure,
    max_arity: usize,
) -> Result<FamilyEvidence> {
    if max_arity == 0 {
        return Err(PcspError::Param("max_arity must be at least 1".into()));
    }
    check_boolean_pair(a, b)?;
    let mut checked = Vec::new();
    for m in (1..=max_arity).filter(|&m| name.admits_arity(m)) {
        checked.push(m);
        let f = family_member(name, m, negated)?;
        if let Some(mat) = polymorphism_violation(&f, a, b)? {
            let out = apply_rows(&f, &mat)?;
            return Ok(FamilyEvidence {
                family: name.to_string(),
                negated,
                max_arity,
                arities_checked: checked,
                holds: false,
                counterexample: Some(Counterexample {
                    arity: m,
                    rows: mat.iter().map(|r| bitstring(r)).collect(),
                    output: bitstring(&out),
                }),
            });
        }
    }
    Ok(FamilyEvidence {
        family: name.to_string(),
        negated,
        max_arity,
        arities_checked: checked,
        holds: true,
        counterexample: None,
    })
}

/// A `(2m+1)`-ary function invariant under parity-preserving permutations:
/// its value depends only on the weight `w1 ∈ 0..=m+1` on the odd
/// coordinates (1st, 3rd, …) and `w2 ∈ 0..=m` on the even ones.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockSymFn {
    m: usize,
    table: Vec<bool>,
}

impl BlockSymFn {
    pub fn new(m: usize, table: Vec<bool>) -> Result<Self> {
        if table.len() != (m + 2) * (m + 1) {
            return Err(PcspError::Dim(format!(
                "block-symmetric table of length {} for m={m}",
                table.len()
            )));
        }
        Ok(BlockSymFn { m, table })
    }

    pub fn from_fn(m: usize, g: impl Fn(usize, usize) -> bool) -> Self {
        let table = (0..=m + 1)
            .flat_map(|w1| (0..=m).map(move |w2| (w1, w2)))
            .map(|(w1, w2)| g(w1, w2))
            .collect();
        BlockSymFn { m, table }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn arity(&self) -> usize {
        2 * self.m + 1
    }

    pub fn blocks(&self) -> [usize; 2] {
        [self.m + 1, self.m]
    }

    pub fn value(&self, w1: usize, w2: usize) -> bool {
        self.table[w1 * (self.m + 1) + w2]
    }

    pub fn expand(&self) -> Result<BoolFn> {
        BoolFn::from_fn(self.arity(), |x| {
            let w1 = x.iter().step_by(2).filter(|&&v| v == 1).count();
            let w2 = x.iter().skip(1).step_by(2).filter(|&&v| v == 1).count();
            self.value(w1, w2)
        })
    }

    pub fn to_json(&self) -> Value {
        let mut table = Map::new();
        for w1 in 0..=self.m + 1 {
            for w2 in 0..=self.m {
                table.insert(format!("({w1},{w2})"), Value::from(u8::from(self.value(w1, w2))));
            }
        }
        serde_json::json!({
            "kind": "block_symmetric",
            "arity": self.arity(),
            "blocks": self.blocks(),
            "table": table,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (m, table) = parse_table_json(v, "block_symmetric")?;
        BlockSymFn::new(
            m,
            (0..=m + 1)
                .flat_map(|w1| (0..=m).map(move |w2| format!("({w1},{w2})")))
                .map(|key| table_bit(&table, &key))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

/// A 2-block-symmetric function whose value depends only on
/// `s = w1 - w2 ∈ -m..=m+1`, so adjacent equal arguments cancel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AlternatingFn {
    m: usize,
    table: Vec<bool>,
}

impl AlternatingFn {
    pub fn new(m: usize, table: Vec<bool>) -> Result<Self> {
        if table.len() != 2 * m + 2 {
            return Err(PcspError::Dim(format!(
                "alternating table of length {} for m={m}",
                table.len()
            )));
        }
        Ok(AlternatingFn { m, table })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn arity(&self) -> usize {
        2 * self.m + 1
    }

    pub fn value(&self, s: i64) -> bool {
        self.table[(s + self.m as i64) as usize]
    }

    pub fn to_block_symmetric(&self) -> BlockSymFn {
        BlockSymFn::from_fn(self.m, |w1, w2| self.value(w1 as i64 - w2 as i64))
    }

    pub fn expand(&self) -> Result<BoolFn> {
        self.to_block_symmetric().expand()
    }

    pub fn to_json(&self) -> Value {
        let mut table = Map::new();
        for s in -(self.m as i64)..=self.m as i64 + 1 {
            table.insert(s.to_string(), Value::from(u8::from(self.value(s))));
        }
        serde_json::json!({
            "kind": "alternating",
            "arity": self.arity(),
            "blocks": [self.m + 1, self.m],
            "table": table,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (m, table) = parse_table_json(v, "alternating")?;
        AlternatingFn::new(
            m,
            (-(m as i64)..=m as i64 + 1)
                .map(|s| table_bit(&table, &s.to_string()))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

fn parse_table_json(v: &Value, kind: &str) -> Result<(usize, Map<String, Value>)> {
    let bad = |what: &str| PcspError::Param(format!("malformed {kind} JSON: {what}"));
    if v.get("kind").and_then(Value::as_str) != Some(kind) {
        return Err(bad("kind"));
    }
    let arity = v.get("arity").and_then(Value::as_u64).ok_or_else(|| bad("arity"))? as usize;
    if arity % 2 == 0 {
        return Err(bad("even arity"));
    }
    let table = v
        .get("table")
        .and_then(Value::as_object)
        .ok_or_else(|| bad("table"))?
        .clone();
    Ok((arity / 2, table))
}

fn table_bit(table: &Map<String, Value>, key: &str) -> Result<bool> {
    match table.get(key).and_then(Value::as_u64) {
        Some(0) => Ok(false),
        Some(1) => Ok(true),
        _ => Err(PcspError::Param(format!("missing or non-bit table entry {key}"))),
    }
}

/// Achievable row-weight vectors of `size` columns drawn (with repetition)
/// from `cols`.
fn block_weight_vectors(cols: &[&Tuple], k: usize, size: usize) -> HashSet<Vec<u8>> {
    let mut level: HashSet<Vec<u8>> = HashSet::from([vec![0u8; k]]);
    for _ in 0..size {
        let mut next = HashSet::with_capacity(level.len() * 2);
        for v in &level {
            for c in cols {
                next.insert(v.iter().zip(c.iter()).map(|(&a, &b)| a + b as u8).collect());
            }
        }
        level = next;
    }
    level
}

/// Backtracking over a weight table: entries are assigned in index order
/// trying `0` before `1`; a constraint is checked once its largest entry
/// index is assigned.
struct TableSearch {
    entries: usize,
    // by max entry: (relation id, entry per row)
    buckets: Vec<Vec<(usize, Vec<u16>)>>,
    allowed: Vec<HashSet<u64>>,
    values: Vec<bool>,
}

impl TableSearch {
    fn new(entries: usize) -> Self {
        TableSearch {
            entries,
            buckets: vec![Vec::new(); entries],
            allowed: Vec::new(),
            values: vec![false; entries],
        }
    }

    fn add_relation(&mut self, allowed: HashSet<u64>, constraints: HashSet<Vec<u16>>) {
        let rel = self.allowed.len();
        self.allowed.push(allowed);
        for c in constraints {
            let top = *c.iter().max().expect("non-empty constraint") as usize;
            self.buckets[top].push((rel, c));
        }
    }

    fn ok(&self, e: usize) -> bool {
        self.buckets[e].iter().all(|(rel, c)| {
            let out = c
                .iter()
                .enumerate()
                .fold(0u64, |acc, (r, &idx)| acc | (u64::from(self.values[idx as usize]) << r));
            self.allowed[*rel].contains(&out)
        })
    }

    fn solve(&mut self) -> Option<Vec<bool>> {
        if self.entries == 0 {
            return Some(Vec::new());
        }
        // explicit stack: tried[e] counts values tried at entry e
        let mut tried = vec![0u8; self.entries];
        let mut e = 0usize;
        loop {
            if tried[e] == 2 {
                tried[e] = 0;
                if e == 0 {
                    return None;
                }
                e -= 1;
                continue;
            }
            self.values[e] = tried[e] == 1;
            tried[e] += 1;
            if self.ok(e) {
                if e + 1 == self.entries {
                    return Some(self.values.clone());
                }
                e += 1;
            }
        }
    }
}

fn build_table_search(
    a: &RelStructure,
    b: &RelStructure,
    arity: usize,
    entries: usize,
    index: impl Fn(u8, u8) -> u16,
) -> Result<TableSearch> {
    check_boolean_pair(a, b)?;
    if arity % 2 == 0 {
        return Err(PcspError::Param(format!("arity {arity} is not odd")));
    }
    let m = arity / 2;
    if m > MAX_BLOCK_M {
        return Err(PcspError::Capacity(format!(
            "arity {arity} beyond the searchable bound {}",
            2 * MAX_BLOCK_M + 1
        )));
    }
    let mut search = TableSearch::new(entries);
    for (ra, rb) in a.relations().iter().zip(b.relations()) {
        let k = ra.arity();
        if k > 64 {
            return Err(PcspError::Capacity(format!("relation arity {k} too large")));
        }
        let cols: Vec<&Tuple> = ra.iter().collect();
        let odd = block_weight_vectors(&cols, k, m + 1);
        let even = block_weight_vectors(&cols, k, m);
        let pairs = (odd.len() as u64).saturating_mul(even.len() as u64);
        if pairs > capacity() {
            return Err(PcspError::Capacity(format!(
                "{pairs} row-weight combinations at arity {arity}"
            )));
        }
        let mut constraints = HashSet::new();
        for u in &odd {
            for v in &even {
                constraints.insert(
                    u.iter()
                        .zip(v.iter())
                        .map(|(&w1, &w2)| index(w1, w2))
                        .collect::<Vec<u16>>(),
                );
            }
        }
        search.add_relation(rb.iter().map(|t| tuple_mask(t)).collect(), constraints);
    }
    Ok(search)
}

/// A 2-block-symmetric polymorphism of the given odd arity, if one exists.
pub fn exists_block_symmetric(
    a: &RelStructure,
    b: &RelStructure,
    arity: usize,
) -> Result<Option<BlockSymFn>> {
    let m = arity / 2;
    let mut search = build_table_search(a, b, arity, (m + 2) * (m + 1), |w1, w2| {
        (w1 as usize * (m + 1) + w2 as usize) as u16
    })?;
    search
        .solve()
        .map(|table| BlockSymFn::new(m, table))
        .transpose()
}

/// An alternating polymorphism of the given odd arity, if one exists.
pub fn exists_alternating(
    a: &RelStructure,
    b: &RelStructure,
    arity: usize,
) -> Result<Option<AlternatingFn>> {
    let m = arity / 2;
    let mut search = build_table_search(a, b, arity, 2 * m + 2, |w1, w2| {
        (w1 as i64 - w2 as i64 + m as i64) as u16
    })?;
    search
        .solve()
        .map(|table| AlternatingFn::new(m, table))
        .transpose()
}
