//! Solving instances: the relaxations as decision procedures, linear algebra
//! over GF(2) as the search procedure for the tractable templates, and brute
//! force as an oracle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::classify;
use crate::error::{PcspError, Result};
use crate::limits::{capacity, saturating_pow};
use crate::relax::{aip_decide, blp_aip, RelaxOutcome, Verdict};
use crate::structures::{check_signature, find_homomorphism, is_homomorphism, Homomorphism, RelStructure};
use crate::templates::{build_template, TemplateSpec};

/// Linear system over GF(2); each row packs `n` coefficient bits and the
/// right-hand side as bit `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GF2System {
    n: usize,
    rows: Vec<Vec<u64>>,
}

impl GF2System {
    pub fn new(n: usize) -> Self {
        GF2System { n, rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `Σ x_v = rhs` over the listed variables; repeats cancel.
    pub fn add_equation(&mut self, vars: &[usize], rhs: bool) -> Result<()> {
        let mut row = vec![0u64; (self.n + 1).div_ceil(64)];
        for &v in vars {
            if v >= self.n {
                return Err(PcspError::Domain(format!("variable {v} out of range 0..{}", self.n)));
            }
            row[v / 64] ^= 1 << (v % 64);
        }
        if rhs {
            row[self.n / 64] ^= 1 << (self.n % 64);
        }
        self.rows.push(row);
        Ok(())
    }

    fn bit(row: &[u64], i: usize) -> bool {
        row[i / 64] >> (i % 64) & 1 == 1
    }

    /// Whether `x` satisfies every equation.
    pub fn satisfied_by(&self, x: &[u32]) -> bool {
        self.rows.iter().all(|row| {
            let lhs = (0..self.n).filter(|&i| Self::bit(row, i) && x[i] == 1).count() % 2 == 1;
            lhs == Self::bit(row, self.n)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub values: Vec<u32>,
}

impl Assignment {
    pub fn to_homomorphism(&self) -> Homomorphism {
        Homomorphism {
            map: self.values.clone(),
        }
    }
}

/// Gauss-Jordan elimination; free variables are set to 0.
pub fn gf2_solve(sys: &GF2System) -> Option<Assignment> {
    let n = sys.n;
    let mut rows = sys.rows.clone();
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..n {
        let Some(p) = (next..rows.len()).find(|&r| GF2System::bit(&rows[r], col)) else {
            continue;
        };
        rows.swap(next, p);
        let pivot = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next && GF2System::bit(row, col) {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        pivots.push(col);
        next += 1;
    }
    // leftover rows are 0 = rhs
    if rows[next..].iter().any(|row| GF2System::bit(row, n)) {
        return None;
    }
    let mut values = vec![0u32; n];
    for (r, &col) in pivots.iter().enumerate() {
        values[col] = u32::from(GF2System::bit(&rows[r], n));
    }
    Some(Assignment { values })
}

/// Requires `x` to have the single `k`-ary relation of the spec's templates.
fn check_instance(x: &RelStructure, spec: &TemplateSpec) -> Result<()> {
    if x.signature() != [spec.k] {
        return Err(PcspError::Signature(format!(
            "instance signature {:?}, expected [{}]",
            x.signature(),
            spec.k
        )));
    }
    Ok(())
}

/// Search for the tractable specs: every constraint becomes "the scope sums
/// to 1 mod 2", i.e. membership in odd-in-k, which sits between `A` and `B`.
pub fn solve_search_affine(x: &RelStructure, spec: &TemplateSpec) -> Result<Option<Assignment>> {
    check_instance(x, spec)?;
    let report = classify(spec)?;
    if !report.label.is_tractable() {
        return Err(PcspError::Precondition(format!(
            "spec is classified {}, the affine search needs a tractable one",
            report.label
        )));
    }
    let mut sys = GF2System::new(x.domain_size());
    for scope in x.relation(0).iter() {
        let vars: Vec<usize> = scope.iter().map(|&v| v as usize).collect();
        sys.add_equation(&vars, true)?;
    }
    Ok(gf2_solve(&sys))
}

/// Exhaustive search, bounded by `|B|^|X|` against the capacity.
pub fn brute_solve(x: &RelStructure, b: &RelStructure) -> Result<Option<Assignment>> {
    check_signature(x, b)?;
    let space = saturating_pow(b.domain_size() as u64, x.domain_size() as u64);
    if space > capacity() {
        return Err(PcspError::Capacity(format!(
            "search space {}^{} exceeds {}",
            b.domain_size(),
            x.domain_size(),
            capacity()
        )));
    }
    Ok(find_homomorphism(x, b)?.map(|h| Assignment { values: h.map }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Aip,
    BlpAip,
    Affine,
    Brute,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Aip => "aip",
            Algorithm::BlpAip => "blp-aip",
            Algorithm::Affine => "affine",
            Algorithm::Brute => "brute",
        })
    }
}

impl FromStr for Algorithm {
    type Err = PcspError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "aip" => Algorithm::Aip,
            "blp-aip" | "blp+aip" => Algorithm::BlpAip,
            "affine" => Algorithm::Affine,
            "brute" => Algorithm::Brute,
            _ => return Err(PcspError::Param(format!("unknown algorithm {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SolveResult {
    pub algorithm: Algorithm,
    pub verdict: Verdict,
    /// for the search algorithms, a homomorphism into `B`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Assignment>,
    /// for the relaxations, the feasible point
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<RelaxOutcome>,
}

impl SolveResult {
    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }
}

/// Runs one algorithm on `x` for the template of `spec`. The relaxations
/// decide against `A`; the searches return homomorphisms into `B`.
pub fn solve(x: &RelStructure, spec: &TemplateSpec, algorithm: Algorithm) -> Result<SolveResult> {
    check_instance(x, spec)?;
    let tpl = build_template(spec)?;
    let (verdict, assignment, relaxation) = match algorithm {
        Algorithm::Aip | Algorithm::BlpAip => {
            let out = if algorithm == Algorithm::Aip {
                aip_decide(x, &tpl.a)?
            } else {
                blp_aip(x, &tpl.a)?
            };
            (out.verdict, None, Some(out))
        }
        Algorithm::Affine | Algorithm::Brute => {
            let found = if algorithm == Algorithm::Affine {
                solve_search_affine(x, spec)?
            } else {
                brute_solve(x, &tpl.b)?
            };
            if let Some(a) = &found {
                if !is_homomorphism(&a.to_homomorphism(), x, &tpl.b)? {
                    return Err(PcspError::Internal("search returned a non-homomorphism".into()));
                }
            }
            let v = if found.is_some() { Verdict::Accept } else { Verdict::Reject };
            (v, found, None)
        }
    };
    Ok(SolveResult {
        algorithm,
        verdict,
        assignment,
        relaxation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{Relation, Tuple};
    use crate::templates::{t_in_k, Mode};

    fn inst(n: usize, scopes: Vec<Tuple>) -> RelStructure {
        let k = scopes[0].len();
        RelStructure::new(n, vec![Relation::new(k, scopes).unwrap()]).unwrap()
    }

    fn odd_spec() -> TemplateSpec {
        TemplateSpec::new(Mode::Add, 1, 4, vec![vec![1, 1, 1, 0]]).unwrap()
    }

    #[test]
    fn gf2_examples() {
        let mut s = GF2System::new(2);
        s.add_equation(&[0, 1], true).unwrap();
        assert_eq!(gf2_solve(&s).unwrap().values, vec![1, 0]);
        let mut s = GF2System::new(1);
        s.add_equation(&[0], true).unwrap();
        s.add_equation(&[0], false).unwrap();
        assert!(gf2_solve(&s).is_none());
        let mut s = GF2System::new(3);
        s.add_equation(&[0, 1, 2], true).unwrap();
        s.add_equation(&[1, 2], false).unwrap();
        assert_eq!(gf2_solve(&s).unwrap().values, vec![1, 0, 0]);
        assert!(s.add_equation(&[3], true).is_err());
    }

    #[test]
    fn gf2_wide_systems() {
        // x_i + x_{i+1} = 1 along a path of 130 variables
        let mut s = GF2System::new(130);
        for i in 0..129 {
            s.add_equation(&[i, i + 1], true).unwrap();
        }
        let x = gf2_solve(&s).unwrap();
        assert!(s.satisfied_by(&x.values));
        s.add_equation(&[0, 129], false).unwrap();
        assert!(gf2_solve(&s).is_none());
    }

    #[test]
    fn affine_examples() {
        let x = inst(4, vec![vec![0, 1, 2, 3]]);
        assert_eq!(solve_search_affine(&x, &odd_spec()).unwrap().unwrap().values, vec![1, 0, 0, 0]);
        let x = inst(1, vec![vec![0, 0, 0, 0]]);
        assert!(solve_search_affine(&x, &odd_spec()).unwrap().is_none());
        let hard = TemplateSpec::new(Mode::Add, 2, 4, vec![vec![1, 1, 1, 0]]).unwrap();
        assert!(matches!(
            solve_search_affine(&inst(4, vec![vec![0, 1, 2, 3]]), &hard),
            Err(PcspError::Precondition(_))
        ));
    }

    #[test]
    fn brute_examples() {
        let b = RelStructure::boolean(t_in_k(1, 3).unwrap()).unwrap();
        assert!(brute_solve(&inst(1, vec![vec![0, 0, 0]]), &b).unwrap().is_none());
        let a = brute_solve(&inst(3, vec![vec![0, 1, 2]]), &b).unwrap().unwrap();
        assert_eq!(a.values.iter().sum::<u32>(), 1);
        let big = inst(40, vec![vec![0, 1, 39]]);
        assert!(matches!(brute_solve(&big, &b), Err(PcspError::Capacity(_))));
    }

    #[test]
    fn solve_dispatch() {
        let x = inst(5, vec![vec![0, 1, 2, 3], vec![1, 2, 3, 4]]);
        for alg in [Algorithm::Aip, Algorithm::BlpAip, Algorithm::Affine, Algorithm::Brute] {
            let r = solve(&x, &odd_spec(), alg).unwrap();
            assert!(r.accepted(), "{alg}");
        }
        let bad = inst(1, vec![vec![0, 0, 0, 0]]);
        assert!(!solve(&bad, &odd_spec(), Algorithm::Aip).unwrap().accepted());
        assert!(!solve(&bad, &odd_spec(), Algorithm::Brute).unwrap().accepted());
        assert_eq!("blp-aip".parse::<Algorithm>().unwrap(), Algorithm::BlpAip);
        assert!("lp".parse::<Algorithm>().is_err());
    }
}
