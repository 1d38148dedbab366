//! The basic LP relaxation, the affine integer relaxation, and their
//! combination, all in exact arithmetic.
//!
//! Both relaxations share one variable per `(relation i, constraint x ∈ T_i,
//! tuple a ∈ R_i)`; the unary relation added by [`augment_unary`] carries
//! the per-variable marginals.

mod hnf;
mod lp;

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{PcspError, Result};
use crate::structures::{check_signature, RelStructure, Relation, Tuple};

use lp::{feasible_point, interior_point, with_bound_rows, with_fallback, SparseRow};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarKey {
    pub rel: usize,
    pub x: Tuple,
    pub a: Tuple,
}

fn join(t: &[u32]) -> String {
    t.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

impl VarKey {
    fn name(&self, prefix: &str) -> String {
        format!("{prefix}[{}][{}][{}]", self.rel, join(&self.x), join(&self.a))
    }
}

/// `{λ ≥ 0 : Aλ = b, λ ≤ u}` over exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct LPProblem {
    pub names: Vec<String>,
    pub keys: Vec<VarKey>,
    pub rows: Vec<(Vec<(usize, BigRational)>, BigRational)>,
    pub upper: Vec<Option<BigRational>>,
}

/// `{τ ∈ Z^n : Aτ = b}` where masked variables are fixed to `0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntSystem {
    pub names: Vec<String>,
    pub keys: Vec<VarKey>,
    pub rows: Vec<(Vec<(usize, BigInt)>, BigInt)>,
    pub zero: Vec<bool>,
}

impl LPProblem {
    /// Variables `v0..v{n-1}` with no rows and no bounds.
    pub fn new(n: usize) -> Self {
        LPProblem {
            names: (0..n).map(|j| format!("v{j}")).collect(),
            keys: Vec::new(),
            rows: Vec::new(),
            upper: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, BigRational)>, rhs: BigRational) -> Result<()> {
        if let Some((j, _)) = coeffs.iter().find(|(j, _)| *j >= self.num_vars()) {
            return Err(PcspError::Dim(format!("variable {j} out of range")));
        }
        self.rows.push((coeffs, rhs));
        Ok(())
    }

    pub fn index_of(&self, key: &VarKey) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    /// Whether `p` satisfies every row, bound and sign constraint exactly.
    pub fn satisfied_by(&self, p: &[BigRational]) -> bool {
        p.len() == self.num_vars()
            && p.iter().all(|v| !v.is_negative())
            && self
                .upper
                .iter()
                .zip(p)
                .all(|(u, v)| u.as_ref().map_or(true, |u| v <= u))
            && self.rows.iter().all(|(coeffs, rhs)| {
                let lhs: BigRational = coeffs.iter().map(|(j, c)| c * &p[*j]).sum();
                &lhs == rhs
            })
    }

    /// One line per constraint, `c*v + ... = rhs`, then the bounds.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (coeffs, rhs) in &self.rows {
            let _ = writeln!(out, "{} = {rhs}", linear_text(coeffs, &self.names));
        }
        for (j, u) in self.upper.iter().enumerate() {
            match u {
                Some(u) => {
                    let _ = writeln!(out, "0 <= {} <= {u}", self.names[j]);
                }
                None => {
                    let _ = writeln!(out, "0 <= {}", self.names[j]);
                }
            }
        }
        out
    }

    fn sparse_rows(&self) -> Vec<SparseRow> {
        self.rows.clone()
    }
}

fn linear_text<C: std::fmt::Display>(coeffs: &[(usize, C)], names: &[String]) -> String {
    if coeffs.is_empty() {
        return "0".into();
    }
    coeffs
        .iter()
        .map(|(j, c)| format!("{c}*{}", names[*j]))
        .collect::<Vec<_>>()
        .join(" + ")
}

impl IntSystem {
    pub fn new(n: usize) -> Self {
        IntSystem {
            names: (0..n).map(|j| format!("v{j}")).collect(),
            keys: Vec::new(),
            rows: Vec::new(),
            zero: vec![false; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, BigInt)>, rhs: BigInt) -> Result<()> {
        if let Some((j, _)) = coeffs.iter().find(|(j, _)| *j >= self.num_vars()) {
            return Err(PcspError::Dim(format!("variable {j} out of range")));
        }
        self.rows.push((coeffs, rhs));
        Ok(())
    }

    pub fn satisfied_by(&self, x: &[BigInt]) -> bool {
        x.len() == self.num_vars()
            && self.zero.iter().zip(x).all(|(&z, v)| !z || v.is_zero())
            && self.rows.iter().all(|(coeffs, rhs)| {
                let lhs: BigInt = coeffs.iter().map(|(j, c)| c * &x[*j]).sum();
                &lhs == rhs
            })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (coeffs, rhs) in &self.rows {
            let _ = writeln!(out, "{} = {rhs}", linear_text(coeffs, &self.names));
        }
        for (j, &z) in self.zero.iter().enumerate() {
            if z {
                let _ = writeln!(out, "{} = 0", self.names[j]);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Rational(Vec<BigRational>),
    Integer(Vec<BigInt>),
}

impl Serialize for Witness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = match self {
            Witness::Rational(v) => v.iter().map(ToString::to_string).collect(),
            Witness::Integer(v) => v.iter().map(ToString::to_string).collect(),
        };
        strs.serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelaxOutcome {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

impl RelaxOutcome {
    fn reject() -> Self {
        RelaxOutcome {
            verdict: Verdict::Reject,
            witness: None,
        }
    }

    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }
}

fn full_unary(r: &Relation, n: usize) -> bool {
    r.arity() == 1 && r.len() == n
}

/// Appends the full unary relation to both structures unless some index
/// already holds it in both; returns that index.
pub fn augment_unary(x: &RelStructure, a: &RelStructure) -> Result<(RelStructure, RelStructure, usize)> {
    check_signature(x, a)?;
    let existing = x
        .relations()
        .iter()
        .zip(a.relations())
        .position(|(rx, ra)| full_unary(rx, x.domain_size()) && full_unary(ra, a.domain_size()));
    if let Some(u) = existing {
        return Ok((x.clone(), a.clone(), u));
    }
    let mut xu = x.clone();
    let mut au = a.clone();
    xu.push_relation(Relation::unary_full(x.domain_size()));
    au.push_relation(Relation::unary_full(a.domain_size()));
    let u = xu.relations().len() - 1;
    Ok((xu, au, u))
}

/// Variables plus the mass and marginal rows shared by both relaxations,
/// with integer coefficients.
struct Skeleton {
    keys: Vec<VarKey>,
    rows: Vec<(Vec<(usize, i64)>, i64)>,
}

fn skeleton(x: &RelStructure, a: &RelStructure, u: usize) -> Result<Skeleton> {
    check_signature(x, a)?;
    let mut keys = Vec::new();
    let mut index = HashMap::new();
    for (i, (rx, ra)) in x.relations().iter().zip(a.relations()).enumerate() {
        for xt in rx.iter() {
            for at in ra.iter() {
                let key = VarKey {
                    rel: i,
                    x: xt.clone(),
                    a: at.clone(),
                };
                index.insert(key.clone(), keys.len());
                keys.push(key);
            }
        }
    }
    let mut rows = Vec::new();
    for (i, (rx, ra)) in x.relations().iter().zip(a.relations()).enumerate() {
        for xt in rx.iter() {
            let mass = ra
                .iter()
                .map(|at| {
                    (
                        index[&VarKey {
                            rel: i,
                            x: xt.clone(),
                            a: at.clone(),
                        }],
                        1,
                    )
                })
                .collect();
            rows.push((mass, 1));
            if i == u {
                continue;
            }
            for (j, &xj) in xt.iter().enumerate() {
                for value in 0..a.domain_size() as u32 {
                    let mut coeffs: Vec<(usize, i64)> = ra
                        .iter()
                        .filter(|at| at[j] == value)
                        .map(|at| {
                            (
                                index[&VarKey {
                                    rel: i,
                                    x: xt.clone(),
                                    a: at.clone(),
                                }],
                                1,
                            )
                        })
                        .collect();
                    let marginal = VarKey {
                        rel: u,
                        x: vec![xj],
                        a: vec![value],
                    };
                    coeffs.push((index[&marginal], -1));
                    rows.push((coeffs, 0));
                }
            }
        }
    }
    Ok(Skeleton { keys, rows })
}

fn check_augmented(x: &RelStructure, a: &RelStructure, u: usize) -> Result<()> {
    let ok = u < x.relations().len()
        && full_unary(x.relation(u), x.domain_size())
        && full_unary(a.relation(u), a.domain_size());
    if ok {
        Ok(())
    } else {
        Err(PcspError::Precondition(format!(
            "relation {u} is not the full unary relation in both structures"
        )))
    }
}

/// BLP(X, A) over augmented structures whose unary relation sits at `u`.
pub fn blp_build(x: &RelStructure, a: &RelStructure, u: usize) -> Result<LPProblem> {
    check_signature(x, a)?;
    check_augmented(x, a, u)?;
    let sk = skeleton(x, a, u)?;
    Ok(LPProblem {
        names: sk.keys.iter().map(|k| k.name("lam")).collect(),
        upper: vec![Some(BigRational::one()); sk.keys.len()],
        keys: sk.keys,
        rows: sk
            .rows
            .into_iter()
            .map(|(c, b)| {
                (
                    c.into_iter()
                        .map(|(j, v)| (j, BigRational::from_integer(v.into())))
                        .collect(),
                    BigRational::from_integer(b.into()),
                )
            })
            .collect(),
    })
}

/// AIP(X, A) over augmented structures whose unary relation sits at `u`.
pub fn aip_build(x: &RelStructure, a: &RelStructure, u: usize) -> Result<IntSystem> {
    check_signature(x, a)?;
    check_augmented(x, a, u)?;
    let sk = skeleton(x, a, u)?;
    Ok(IntSystem {
        names: sk.keys.iter().map(|k| k.name("tau")).collect(),
        zero: vec![false; sk.keys.len()],
        keys: sk.keys,
        rows: sk
            .rows
            .into_iter()
            .map(|(c, b)| (c.into_iter().map(|(j, v)| (j, v.into())).collect(), b.into()))
            .collect(),
    })
}

fn big_to_ratio_problem(p: &LPProblem) -> (Vec<SparseRow>, usize) {
    with_bound_rows(&p.sparse_rows(), p.num_vars(), &p.upper)
}

pub fn lp_feasible(p: &LPProblem) -> RelaxOutcome {
    let (rows, ncols) = big_to_ratio_problem(p);
    let point = with_fallback(
        || feasible_point::<Ratio<i128>>(&rows, ncols),
        || feasible_point::<BigRational>(&rows, ncols),
    );
    match point {
        Some(mut v) => {
            v.truncate(p.num_vars());
            RelaxOutcome {
                verdict: Verdict::Accept,
                witness: Some(Witness::Rational(v)),
            }
        }
        None => RelaxOutcome::reject(),
    }
}

/// A feasible point positive in every coordinate that is positive somewhere
/// on the polyhedron, or `None` if it is empty.
pub fn relative_interior_point(p: &LPProblem) -> Option<Vec<BigRational>> {
    let (rows, ncols) = big_to_ratio_problem(p);
    let mut v = with_fallback(
        || interior_point::<Ratio<i128>>(&rows, ncols),
        || interior_point::<BigRational>(&rows, ncols),
    )?;
    v.truncate(p.num_vars());
    Some(v)
}

pub fn int_feasible(s: &IntSystem) -> RelaxOutcome {
    let live: Vec<usize> = (0..s.num_vars()).filter(|&j| !s.zero[j]).collect();
    let mut col_of = vec![usize::MAX; s.num_vars()];
    for (c, &j) in live.iter().enumerate() {
        col_of[j] = c;
    }
    let mut a = Vec::with_capacity(s.rows.len());
    let mut b = Vec::with_capacity(s.rows.len());
    for (coeffs, rhs) in &s.rows {
        let mut row = vec![BigInt::zero(); live.len()];
        for (j, c) in coeffs {
            if !s.zero[*j] {
                row[col_of[*j]] += c;
            }
        }
        a.push(row);
        b.push(rhs.clone());
    }
    let sol = with_fallback(
        || hnf::solve::<i128>(&a, &b, live.len()),
        || hnf::solve::<BigInt>(&a, &b, live.len()),
    );
    match sol {
        Some(y) => {
            let mut x = vec![BigInt::zero(); s.num_vars()];
            for (c, &j) in live.iter().enumerate() {
                x[j] = y[c].clone();
            }
            RelaxOutcome {
                verdict: Verdict::Accept,
                witness: Some(Witness::Integer(x)),
            }
        }
        None => RelaxOutcome::reject(),
    }
}

/// BLP+AIP: zero-fix every AIP variable whose LP counterpart vanishes at a
/// relative interior point, then decide the refined AIP.
pub fn blp_aip(x: &RelStructure, a: &RelStructure) -> Result<RelaxOutcome> {
    let (xu, au, u) = augment_unary(x, a)?;
    let lp = blp_build(&xu, &au, u)?;
    let Some(p) = relative_interior_point(&lp) else {
        return Ok(RelaxOutcome::reject());
    };
    let mut sys = aip_build(&xu, &au, u)?;
    sys.zero = p.iter().map(Zero::is_zero).collect();
    Ok(int_feasible(&sys))
}

pub fn aip_decide(x: &RelStructure, a: &RelStructure) -> Result<RelaxOutcome> {
    let (xu, au, u) = augment_unary(x, a)?;
    Ok(int_feasible(&aip_build(&xu, &au, u)?))
}

pub fn blp_decide(x: &RelStructure, a: &RelStructure) -> Result<RelaxOutcome> {
    let (xu, au, u) = augment_unary(x, a)?;
    Ok(lp_feasible(&blp_build(&xu, &au, u)?))
}

/// Human-readable dump of a variable assignment, nonzero entries only.
pub fn describe_witness(names: &[String], w: &Witness) -> Vec<String> {
    match w {
        Witness::Rational(v) => names
            .iter()
            .zip(v)
            .filter(|(_, x)| !x.is_zero())
            .map(|(n, x)| format!("{n} = {x}"))
            .collect(),
        Witness::Integer(v) => names
            .iter()
            .zip(v)
            .filter(|(_, x)| !x.is_zero())
            .map(|(n, x)| format!("{n} = {x}"))
            .collect(),
    }
}
