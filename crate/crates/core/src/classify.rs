//! Classification of the `t-in-k` templates, Schaefer-style checks for
//! Boolean CSPs, and the closure arguments behind the CSP hardness.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{PcspError, Result};
use crate::polymorphisms::{
    apply_rows, check_family_in_pol, family_member, is_polymorphism, matrix_from_columns, FamilyEvidence,
    FamilyName,
};
use crate::structures::{find_homomorphism, is_homomorphism, largest_symmetric_subrelation, Homomorphism};
use crate::structures::{RelStructure, Relation, Tuple};
use crate::tableaux::{dispatch, normalize, refute, Construction, RefutationCertificate};
use crate::templates::{bitstring, nae, odd_k, t_in_k, weight, Mode, TemplateSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    TractableViaAIP,
    NotSolvedByBLPAIP,
    Tractable,
    NPHard,
}

impl Label {
    pub fn is_tractable(self) -> bool {
        matches!(self, Label::TractableViaAIP | Label::Tractable)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// `A ⊆ odd-in-k ⊆ B`, each inclusion checked as an identity homomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sandwich {
    pub chain: [String; 3],
    pub a_to_middle: Homomorphism,
    pub middle_to_b: Homomorphism,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableauReference {
    pub tuple: String,
    pub k: usize,
    pub t: usize,
    pub d: usize,
    pub normalized: bool,
    pub construction: Construction,
    pub arity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchaeferResult {
    pub function: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Sandwich(Sandwich),
    Tableau {
        reference: TableauReference,
        #[serde(skip_serializing_if = "Option::is_none")]
        certificate: Option<Box<RefutationCertificate>>,
    },
    /// Result of the Schaefer tests; `found` names the first passing function.
    Schaefer {
        found: Option<String>,
        tests: Vec<SchaeferResult>,
    },
    /// `CSP(B)` is hard and `B ≠ NAE`, for a template with `A = t-in-k`.
    CspHardness {
        tuple: String,
        relation_size: usize,
        csp: Box<ClassificationReport>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub label: Label,
    pub theorem: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

const TAG_ADD: &str = "add-tuples dichotomy";
const TAG_REMOVE: &str = "remove-tuples dichotomy";
const TAG_SUPERSET: &str = "t-in-k superset CSP criterion";
const TAG_SCHAEFER: &str = "Schaefer dichotomy";

fn sandwich(a: &Relation, b: &Relation, names: [&str; 2]) -> Result<Sandwich> {
    let k = a.arity();
    let mid = odd_k(k)?;
    let id = Homomorphism::identity(2);
    let [sa, sm, sb] = [a, &mid, b].map(|r| RelStructure::boolean(r.clone()));
    let (sa, sm, sb) = (sa?, sm?, sb?);
    if !is_homomorphism(&id, &sa, &sm)? || !is_homomorphism(&id, &sm, &sb)? {
        return Err(PcspError::Internal("sandwich inclusion failed".into()));
    }
    Ok(Sandwich {
        chain: [names[0].to_string(), format!("odd-in-{k}"), names[1].to_string()],
        a_to_middle: id.clone(),
        middle_to_b: id,
    })
}

fn parity_rule(spec: &TemplateSpec, want_odd: bool) -> bool {
    spec.t % 2 == 1 && spec.k % 2 == 0 && spec.weights().iter().all(|d| (d % 2 == 1) == want_odd)
}

fn check_mode(spec: &TemplateSpec, mode: Mode) -> Result<()> {
    spec.validate()?;
    spec.require_nonempty()?;
    if spec.mode != mode {
        return Err(PcspError::Spec(format!("expected a spec in {mode} mode, got {}", spec.mode)));
    }
    Ok(())
}

/// Tableau certificate reference for adding `x` to `t-in-k`.
pub fn tableau_reference(k: usize, t: usize, x: &[u32]) -> Result<TableauReference> {
    let d = weight(x);
    let (wt, wd, normalized) = normalize(k, t, d);
    let construction = dispatch(k, wt, wd)?;
    Ok(TableauReference {
        tuple: bitstring(x),
        k,
        t,
        d,
        normalized,
        construction,
        arity: construction.arity(k, wt, wd),
    })
}

/// Classifies `PCSP(t-in-k ∪ S, NAE)`.
pub fn classify_add(spec: &TemplateSpec) -> Result<ClassificationReport> {
    classify_add_with(spec, false)
}

/// With `certify`, hard verdicts carry the full refutation certificate.
pub fn classify_add_with(spec: &TemplateSpec, certify: bool) -> Result<ClassificationReport> {
    check_mode(spec, Mode::Add)?;
    let (t, k) = (spec.t, spec.k);
    if parity_rule(spec, true) {
        let a = t_in_k(t, k)?.union(&spec.s_relation()?)?;
        let w = sandwich(&a, &nae(k)?, ["t-in-k ∪ S", "NAE"])?;
        return Ok(ClassificationReport {
            label: Label::TractableViaAIP,
            theorem: TAG_ADD.into(),
            witness: Some(Witness::Sandwich(w)),
        });
    }
    // any tuple works unless only its parity is at fault
    let strict = t % 2 == 1 && k % 2 == 0;
    let x = spec
        .s
        .iter()
        .find(|x| !strict || weight(x) % 2 == 0)
        .expect("parity rule failed on some tuple");
    let reference = tableau_reference(k, t, x)?;
    let certificate = if certify {
        let c = refute(k, t, reference.d)?;
        if !c.verify() {
            return Err(PcspError::Internal(format!("certificate for {} does not verify", reference.tuple)));
        }
        Some(Box::new(c))
    } else {
        None
    };
    Ok(ClassificationReport {
        label: Label::NotSolvedByBLPAIP,
        theorem: TAG_ADD.into(),
        witness: Some(Witness::Tableau { reference, certificate }),
    })
}

/// Classifies `PCSP(t-in-k, NAE ∖ S)`.
pub fn classify_remove(spec: &TemplateSpec) -> Result<ClassificationReport> {
    check_mode(spec, Mode::Remove)?;
    let (t, k) = (spec.t, spec.k);
    let b = nae(k)?.difference(&spec.s_relation()?)?;
    if parity_rule(spec, false) {
        let w = sandwich(&t_in_k(t, k)?, &b, ["t-in-k", "NAE ∖ S"])?;
        return Ok(ClassificationReport {
            label: Label::Tractable,
            theorem: TAG_REMOVE.into(),
            witness: Some(Witness::Sandwich(w)),
        });
    }
    let strict = t % 2 == 1 && k % 2 == 0;
    let x = spec
        .s
        .iter()
        .find(|x| !strict || weight(x) % 2 == 1)
        .expect("parity rule failed on some tuple");
    let csp = classify_csp_superset(t, k, &b)?;
    if csp.label != Label::NPHard {
        return Err(PcspError::Internal(format!("NAE minus {} has a tractable CSP", bitstring(x))));
    }
    Ok(ClassificationReport {
        label: Label::NPHard,
        theorem: TAG_REMOVE.into(),
        witness: Some(Witness::CspHardness {
            tuple: bitstring(x),
            relation_size: b.len(),
            csp: Box::new(csp),
        }),
    })
}

/// Dispatches on the spec's mode.
pub fn classify(spec: &TemplateSpec) -> Result<ClassificationReport> {
    match spec.mode {
        Mode::Add => classify_add(spec),
        Mode::Remove => classify_remove(spec),
    }
}

/// Classifies `CSP(T)` for a `T` that `t-in-k` maps to.
pub fn classify_csp_superset(t: usize, k: usize, rel: &Relation) -> Result<ClassificationReport> {
    let base = RelStructure::boolean(t_in_k(t, k)?)?;
    if rel.arity() != k {
        return Err(PcspError::Precondition(format!("T has arity {}, expected {k}", rel.arity())));
    }
    let target = RelStructure::boolean(rel.clone())?;
    if find_homomorphism(&base, &target)?.is_none() {
        return Err(PcspError::Precondition(format!("{t}-in-{k} does not map to T")));
    }
    let constant = rel.contains(&vec![0; k]) || rel.contains(&vec![1; k]);
    let all_odd = t % 2 == 1 && k % 2 == 0 && *rel == odd_k(k)?;
    let label = if constant || all_odd { Label::Tractable } else { Label::NPHard };
    Ok(ClassificationReport {
        label,
        theorem: TAG_SUPERSET.into(),
        witness: Some(schaefer_witness(&target)?),
    })
}

fn schaefer_functions() -> [(FamilyName, usize); 6] {
    [
        (FamilyName::Const(false), 1),
        (FamilyName::Const(true), 1),
        (FamilyName::And, 2),
        (FamilyName::Or, 2),
        (FamilyName::Maj, 3),
        (FamilyName::Xor, 3),
    ]
}

fn schaefer_witness(b: &RelStructure) -> Result<Witness> {
    let mut tests = Vec::new();
    for (name, m) in schaefer_functions() {
        let f = family_member(name, m, false)?;
        tests.push(SchaeferResult {
            function: format!("{name}_{m}"),
            holds: is_polymorphism(&f, b, b)?,
        });
    }
    let found = tests.iter().find(|r| r.holds).map(|r| r.function.clone());
    Ok(Witness::Schaefer { found, tests })
}

/// Tests the two constants, `AND_2`, `OR_2`, `MAJ_3` and `XOR_3` as
/// polymorphisms of a Boolean structure.
pub fn schaefer_check(b: &RelStructure) -> Result<ClassificationReport> {
    if !b.is_boolean() {
        return Err(PcspError::Domain(format!("domain size {} is not Boolean", b.domain_size())));
    }
    let w = schaefer_witness(b)?;
    let label = match &w {
        Witness::Schaefer { found: Some(_), .. } => Label::Tractable,
        _ => Label::NPHard,
    };
    Ok(ClassificationReport {
        label,
        theorem: TAG_SCHAEFER.into(),
        witness: Some(w),
    })
}

/// The seven closure claims ruling out Schaefer polymorphisms of a proper
/// superset of `t-in-k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureCase {
    I,
    Ii,
    Iii,
    Iv,
    V,
    Vi,
    Vii,
}

impl ClosureCase {
    pub const ALL: [ClosureCase; 7] = [
        ClosureCase::I,
        ClosureCase::Ii,
        ClosureCase::Iii,
        ClosureCase::Iv,
        ClosureCase::V,
        ClosureCase::Vi,
        ClosureCase::Vii,
    ];

    pub fn function(self) -> (FamilyName, usize) {
        match self {
            ClosureCase::I => (FamilyName::And, 2),
            ClosureCase::Ii => (FamilyName::Or, 2),
            ClosureCase::Iii | ClosureCase::Iv => (FamilyName::Maj, 3),
            _ => (FamilyName::Xor, 3),
        }
    }

    pub fn applies(self, t: usize, k: usize) -> bool {
        if k < 3 || t == 0 || t >= k {
            return false;
        }
        match self {
            ClosureCase::I | ClosureCase::Ii => true,
            ClosureCase::Iii => t >= 2,
            ClosureCase::Iv => t + 2 <= k,
            ClosureCase::V => t % 2 == 0,
            ClosureCase::Vi => t % 2 == 1 && k % 2 == 1,
            ClosureCase::Vii => t % 2 == 1 && k % 2 == 0,
        }
    }

    pub fn eventual(self) -> Eventual {
        match self {
            ClosureCase::I | ClosureCase::Iv | ClosureCase::V => Eventual::AllZero,
            ClosureCase::Ii | ClosureCase::Iii | ClosureCase::Vi => Eventual::AllOne,
            ClosureCase::Vii => Eventual::AllOdd,
        }
    }
}

impl FromStr for ClosureCase {
    type Err = PcspError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "i" | "1" => ClosureCase::I,
            "ii" | "2" => ClosureCase::Ii,
            "iii" | "3" => ClosureCase::Iii,
            "iv" | "4" => ClosureCase::Iv,
            "v" | "5" => ClosureCase::V,
            "vi" | "6" => ClosureCase::Vi,
            "vii" | "7" => ClosureCase::Vii,
            _ => return Err(PcspError::Case(format!("unknown closure case {s:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eventual {
    AllZero,
    AllOne,
    AllOdd,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureStep {
    pub from_weight: usize,
    pub to_weight: usize,
    /// inputs, one `w`-weight tuple per argument
    pub seeds: Vec<String>,
    pub image: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureTrace {
    pub t: usize,
    pub k: usize,
    pub case: ClosureCase,
    pub function: String,
    pub steps: Vec<ClosureStep>,
    /// weights `w` such that all `w`-weight tuples were derived, ascending
    pub weights: Vec<usize>,
    pub eventual: Eventual,
    pub reached: bool,
}

impl ClosureTrace {
    /// Union of the derived weight classes.
    pub fn final_set(&self) -> Relation {
        let k = self.k;
        let tuples = (0u64..1 << k)
            .map(|v| (0..k).map(|i| ((v >> (k - 1 - i)) & 1) as u32).collect::<Tuple>())
            .filter(|x| self.weights.contains(&weight(x)));
        Relation::new(k, tuples).expect("Boolean tuples of equal length")
    }
}

fn ones_zeros(parts: &[(u32, usize)]) -> Tuple {
    parts.iter().flat_map(|&(v, n)| std::iter::repeat(v).take(n)).collect()
}

/// Inputs at weight `w` for a step raising (`up`) or lowering the weight.
fn seeds(case: ClosureCase, k: usize, w: usize, up: bool) -> Option<Vec<Tuple>> {
    let pair = |w: usize| {
        (w + 1 <= k).then(|| {
            vec![
                ones_zeros(&[(1, w), (0, k - w)]),
                ones_zeros(&[(0, 1), (1, w), (0, k - w - 1)]),
            ]
        })
    };
    // 1^{w-2} 0^{k-w-1} and a weight-2 tail of three positions
    let two_tail = |w: usize| {
        (w >= 2 && w < k).then(|| {
            ["110", "101", "011"]
                .iter()
                .map(|tail| {
                    let mut x = ones_zeros(&[(1, w - 2), (0, k - w - 1)]);
                    x.extend(tail.bytes().map(|c| u32::from(c == b'1')));
                    x
                })
                .collect()
        })
    };
    // 1^{w-1} 0^{k-w-2} and a weight-1 tail
    let one_tail = |w: usize| {
        (w >= 1 && w + 2 <= k).then(|| {
            ["100", "010", "001"]
                .iter()
                .map(|tail| {
                    let mut x = ones_zeros(&[(1, w - 1), (0, k - w - 2)]);
                    x.extend(tail.bytes().map(|c| u32::from(c == b'1')));
                    x
                })
                .collect()
        })
    };
    match (case, up) {
        (ClosureCase::I, false) | (ClosureCase::Ii, true) => pair(w),
        (ClosureCase::Iii, true) | (ClosureCase::V, false) => two_tail(w),
        (ClosureCase::Iv, false) | (ClosureCase::Vi, true) => one_tail(w),
        (ClosureCase::Vii, true) => one_tail(w),
        (ClosureCase::Vii, false) => two_tail(w),
        _ => None,
    }
}

/// Runs one closure argument: applies the case's function to its listed
/// tuples at weight `w`, which by symmetry yields every tuple of the image's
/// weight, and repeats until no new weight appears.
pub fn prop9_closure_trace(t: usize, k: usize, case: ClosureCase) -> Result<ClosureTrace> {
    if !case.applies(t, k) {
        return Err(PcspError::Case(format!("closure case {case:?} does not apply to t={t}, k={k}")));
    }
    let (name, m) = case.function();
    let f = family_member(name, m, false)?;
    let directions: &[bool] = match case {
        ClosureCase::I | ClosureCase::Iv | ClosureCase::V => &[false],
        ClosureCase::Vii => &[true, false],
        _ => &[true],
    };
    let mut weights = vec![t];
    let mut steps = Vec::new();
    let mut frontier = vec![t];
    while let Some(w) = frontier.pop() {
        for &up in directions {
            let Some(cols) = seeds(case, k, w, up) else { continue };
            debug_assert!(cols.iter().all(|c| weight(c) == w));
            let image = apply_rows(&f, &matrix_from_columns(&cols))?;
            let to = weight(&image);
            steps.push(ClosureStep {
                from_weight: w,
                to_weight: to,
                seeds: cols.iter().map(|c| bitstring(c)).collect(),
                image: bitstring(&image),
            });
            if !weights.contains(&to) {
                weights.push(to);
                frontier.push(to);
            }
        }
    }
    weights.sort_unstable();
    let eventual = case.eventual();
    let reached = match eventual {
        Eventual::AllZero => weights.contains(&0),
        Eventual::AllOne => weights.contains(&k),
        Eventual::AllOdd => weights == (1..k).step_by(2).collect::<Vec<_>>(),
    };
    Ok(ClosureTrace {
        t,
        k,
        case,
        function: format!("{name}_{m}"),
        steps,
        weights,
        eventual,
        reached,
    })
}

/// Replaces each relation of `b` by its largest symmetric subrelation; for a
/// symmetric `a` the template keeps its polymorphisms.
pub fn symmetrize(a: &RelStructure, b: &RelStructure) -> Result<(RelStructure, RelStructure)> {
    if !a.is_symmetric() {
        return Err(PcspError::Precondition("A is not symmetric".into()));
    }
    let rels = b.relations().iter().map(largest_symmetric_subrelation).collect();
    let bp = RelStructure::new(b.domain_size(), rels)?;
    if find_homomorphism(a, &bp)?.is_none() {
        return Err(PcspError::Precondition("A does not map to the symmetrized B".into()));
    }
    Ok((a.clone(), bp))
}

/// Every threshold `p/n` in `(0, 1)` with `n ≤ bound`, ascending.
pub fn threshold_grid(bound: usize) -> Vec<Ratio<i64>> {
    let mut qs: Vec<Ratio<i64>> = (2..=bound as i64)
        .flat_map(|n| (1..n).filter(move |p| p.gcd(&n) == 1).map(move |p| Ratio::new(p, n)))
        .collect();
    qs.sort();
    qs
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DichotomyEvidence {
    /// always `"EVIDENCE"`: finite checks never prove tractability
    pub status: String,
    pub arity_bound: usize,
    pub families: Vec<FamilyEvidence>,
    pub surviving: Vec<String>,
}

/// Bounded-arity membership checks for the tractable families of symmetric
/// Boolean templates and their negations.
pub fn symmetric_dichotomy_evidence(a: &RelStructure, b: &RelStructure, arity_bound: usize) -> Result<DichotomyEvidence> {
    if !a.is_boolean() || !b.is_boolean() || !a.is_symmetric() || !b.is_symmetric() {
        return Err(PcspError::Precondition("need symmetric Boolean structures".into()));
    }
    family_evidence(a, b, arity_bound)
}

/// The same checks without the symmetry requirement.
pub fn family_evidence(a: &RelStructure, b: &RelStructure, arity_bound: usize) -> Result<DichotomyEvidence> {
    let mut names = vec![
        FamilyName::Const(false),
        FamilyName::Const(true),
        FamilyName::Or,
        FamilyName::And,
        FamilyName::Xor,
        FamilyName::At,
    ];
    names.extend(threshold_grid(arity_bound).into_iter().map(FamilyName::Thr));
    let mut families = Vec::new();
    for name in names {
        let negations: &[bool] = if matches!(name, FamilyName::Const(_)) { &[false] } else { &[false, true] };
        for &neg in negations {
            families.push(check_family_in_pol(name, neg, a, b, arity_bound)?);
        }
    }
    let surviving = families
        .iter()
        .filter(|e| e.holds && !e.arities_checked.is_empty())
        .map(|e| if e.negated { format!("¬{}", e.family) } else { e.family.clone() })
        .collect();
    Ok(DichotomyEvidence {
        status: "EVIDENCE".into(),
        arity_bound,
        families,
        surviving,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub t: usize,
    pub d: usize,
    pub add: Label,
    pub remove: Label,
    /// arity of the refutation for hard add-mode verdicts
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_arity: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub k_max: usize,
    pub checked: usize,
    pub exceptions: Vec<SweepRow>,
    pub rows: Vec<SweepRow>,
}

/// Classifies every singleton `S = {1^d 0^(k-d)}` for `3 ≤ k ≤ k_max` in
/// both modes and compares against the parity rule.
pub fn consistency_sweep(k_max: usize) -> Result<SweepReport> {
    let mut rows = Vec::new();
    let mut exceptions = Vec::new();
    for k in 3..=k_max {
        for t in 1..k {
            for d in (1..k).filter(|&d| d != t) {
                let x = vec![crate::templates::prefix_tuple(d, k)];
                let add = classify_add(&TemplateSpec::new(Mode::Add, t, k, x.clone())?)?;
                let remove = classify_remove(&TemplateSpec::new(Mode::Remove, t, k, x)?)?;
                let certificate_arity = match &add.witness {
                    Some(Witness::Tableau { reference, .. }) => Some(reference.arity),
                    _ => None,
                };
                let row = SweepRow {
                    k,
                    t,
                    d,
                    add: add.label,
                    remove: remove.label,
                    certificate_arity,
                };
                let odd_t_even_k = t % 2 == 1 && k % 2 == 0;
                let add_ok = add.label.is_tractable() == (odd_t_even_k && d % 2 == 1);
                let remove_ok = remove.label.is_tractable() == (odd_t_even_k && d % 2 == 0);
                if !add_ok || !remove_ok {
                    exceptions.push(row.clone());
                }
                rows.push(row);
            }
        }
    }
    Ok(SweepReport {
        k_max,
        checked: rows.len(),
        exceptions,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::{prefix_tuple, Mode};

    fn spec(mode: Mode, t: usize, k: usize, s: &[&str]) -> TemplateSpec {
        let s = s.iter().map(|b| crate::templates::parse_bitstring(b).unwrap()).collect();
        TemplateSpec::new(mode, t, k, s).unwrap()
    }

    fn rel(k: usize, bits: &[&str]) -> Relation {
        Relation::new(k, bits.iter().map(|b| crate::templates::parse_bitstring(b).unwrap())).unwrap()
    }

    #[test]
    fn add_examples() {
        let r = classify_add(&spec(Mode::Add, 1, 4, &["1110"])).unwrap();
        assert_eq!(r.label, Label::TractableViaAIP);
        assert!(matches!(r.witness, Some(Witness::Sandwich(_))));
        assert_eq!(classify_add(&spec(Mode::Add, 1, 3, &["110"])).unwrap().label, Label::NotSolvedByBLPAIP);
        let r = classify_add(&spec(Mode::Add, 2, 4, &["1110"])).unwrap();
        assert_eq!(r.label, Label::NotSolvedByBLPAIP);
        match r.witness {
            Some(Witness::Tableau { reference, .. }) => assert_eq!(reference.d, 3),
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn add_picks_offending_tuple() {
        let r = classify_add_with(&spec(Mode::Add, 1, 4, &["1110", "1100"]), true).unwrap();
        assert_eq!(r.label, Label::NotSolvedByBLPAIP);
        match r.witness {
            Some(Witness::Tableau { reference, certificate }) => {
                assert_eq!(reference.tuple, "1100");
                let c = certificate.unwrap();
                assert!(c.verify());
                assert_eq!(c.arity, reference.arity);
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn remove_examples() {
        assert_eq!(classify_remove(&spec(Mode::Remove, 1, 4, &["1100"])).unwrap().label, Label::Tractable);
        assert_eq!(classify_remove(&spec(Mode::Remove, 1, 4, &["1110"])).unwrap().label, Label::NPHard);
        assert_eq!(classify_remove(&spec(Mode::Remove, 1, 3, &["110"])).unwrap().label, Label::NPHard);
    }

    #[test]
    fn mode_mismatch_is_a_spec_error() {
        let s = spec(Mode::Remove, 1, 4, &["1100"]);
        assert!(matches!(classify_add(&s), Err(PcspError::Spec(_))));
        let empty = TemplateSpec::new(Mode::Add, 1, 4, vec![]).unwrap();
        assert!(matches!(classify_add(&empty), Err(PcspError::Spec(_))));
    }

    #[test]
    fn csp_superset_examples() {
        let one3 = t_in_k(1, 3).unwrap();
        assert_eq!(classify_csp_superset(1, 3, &one3).unwrap().label, Label::NPHard);
        assert_eq!(classify_csp_superset(1, 4, &odd_k(4).unwrap()).unwrap().label, Label::Tractable);
        let with_zero = one3.union(&rel(3, &["000"])).unwrap();
        assert_eq!(classify_csp_superset(1, 3, &with_zero).unwrap().label, Label::Tractable);
        assert!(matches!(
            classify_csp_superset(1, 3, &rel(3, &["110"])),
            Err(PcspError::Precondition(_))
        ));
        // the complement of 1-in-3 is the image under negation
        assert_eq!(classify_csp_superset(1, 3, &t_in_k(2, 3).unwrap()).unwrap().label, Label::NPHard);
    }

    #[test]
    fn csp_superset_matches_schaefer() {
        // all supersets of 1-in-4 within {0,1}^4 closed under a few extra weights
        let k = 4;
        for mask in 0u32..32 {
            let mut r = t_in_k(1, k).unwrap();
            for w in 0..=k {
                if mask >> w & 1 == 1 {
                    r = r.union(&crate::templates::t_in_k(w.clamp(1, k - 1), k).unwrap()).unwrap();
                    if w == 0 || w == k {
                        r = r.union(&rel(k, &[if w == 0 { "0000" } else { "1111" }])).unwrap();
                    }
                }
            }
            let s = schaefer_check(&RelStructure::boolean(r.clone()).unwrap()).unwrap();
            assert_eq!(classify_csp_superset(1, k, &r).unwrap().label, s.label, "{r:?}");
        }
    }

    #[test]
    fn schaefer_examples() {
        let odd4 = RelStructure::boolean(odd_k(4).unwrap()).unwrap();
        let r = schaefer_check(&odd4).unwrap();
        assert_eq!(r.label, Label::Tractable);
        match r.witness {
            Some(Witness::Schaefer { found, .. }) => assert_eq!(found.as_deref(), Some("XOR_3")),
            w => panic!("{w:?}"),
        }
        let one3 = RelStructure::boolean(t_in_k(1, 3).unwrap()).unwrap();
        assert_eq!(schaefer_check(&one3).unwrap().label, Label::NPHard);
        let full = Relation::new(3, (0..8u32).map(|v| vec![v >> 2 & 1, v >> 1 & 1, v & 1])).unwrap();
        match schaefer_check(&RelStructure::boolean(full).unwrap()).unwrap().witness {
            Some(Witness::Schaefer { found, .. }) => assert_eq!(found.as_deref(), Some("CONST(0)_1")),
            w => panic!("{w:?}"),
        }
    }

    #[test]
    fn closure_examples() {
        let tr = prop9_closure_trace(1, 3, ClosureCase::I).unwrap();
        assert!(tr.reached);
        assert_eq!(tr.steps[0].seeds, vec!["100", "010"]);
        assert_eq!(tr.steps[0].image, "000");
        assert!(prop9_closure_trace(1, 3, ClosureCase::Ii).unwrap().reached);
        let tr = prop9_closure_trace(1, 4, ClosureCase::Vii).unwrap();
        assert!(tr.reached);
        assert_eq!(tr.final_set(), odd_k(4).unwrap());
        assert!(matches!(prop9_closure_trace(1, 4, ClosureCase::Iii), Err(PcspError::Case(_))));
        assert!(matches!(prop9_closure_trace(2, 4, ClosureCase::Vii), Err(PcspError::Case(_))));
    }

    #[test]
    fn closure_steps_stay_in_the_closed_set() {
        for k in 3..=8 {
            for t in 1..k {
                for case in ClosureCase::ALL.into_iter().filter(|c| c.applies(t, k)) {
                    let tr = prop9_closure_trace(t, k, case).unwrap();
                    assert!(tr.reached, "t={t} k={k} {case:?}");
                    for s in &tr.steps {
                        assert!(tr.weights.contains(&s.from_weight) && tr.weights.contains(&s.to_weight));
                    }
                }
            }
        }
    }

    #[test]
    fn symmetrize_examples() {
        let one3 = RelStructure::boolean(t_in_k(1, 3).unwrap()).unwrap();
        let b = RelStructure::boolean(nae(3).unwrap().difference(&rel(3, &["110"])).unwrap()).unwrap();
        let (_, bp) = symmetrize(&one3, &b).unwrap();
        assert_eq!(bp.relation(0), &t_in_k(1, 3).unwrap());
        let n = RelStructure::boolean(nae(3).unwrap()).unwrap();
        assert_eq!(symmetrize(&one3, &n).unwrap().1, n);
        let lopsided = RelStructure::boolean(rel(3, &["100"])).unwrap();
        assert!(matches!(symmetrize(&lopsided, &n), Err(PcspError::Precondition(_))));
    }

    #[test]
    fn small_sweep() {
        let rep = consistency_sweep(4).unwrap();
        assert!(rep.exceptions.is_empty());
        // (t, d) pairs: 2 for k=3, 6 for k=4
        assert_eq!(rep.checked, 2 + 6);
        let row = rep.rows.iter().find(|r| (r.k, r.t, r.d) == (4, 1, 3)).unwrap();
        assert_eq!((row.add, row.remove), (Label::TractableViaAIP, Label::NPHard));
    }

    #[test]
    fn grid() {
        let g = threshold_grid(4);
        let want: Vec<Ratio<i64>> = [(1, 4), (1, 3), (1, 2), (2, 3), (3, 4)]
            .iter()
            .map(|&(p, q)| Ratio::new(p, q))
            .collect();
        assert_eq!(g, want);
    }

    #[test]
    fn evidence_for_odd_template() {
        let o = RelStructure::boolean(odd_k(4).unwrap()).unwrap();
        let ev = symmetric_dichotomy_evidence(&o, &o, 5).unwrap();
        assert_eq!(ev.status, "EVIDENCE");
        assert!(ev.surviving.contains(&"XOR".to_string()));
        let one3 = RelStructure::boolean(t_in_k(1, 3).unwrap()).unwrap();
        assert!(symmetric_dichotomy_evidence(&one3, &one3, 5).unwrap().surviving.is_empty());
        // row weights of a 1-in-3 matrix sum to m, so neither side of the
        // m/3 threshold can hold all three rows
        let n = RelStructure::boolean(nae(3).unwrap()).unwrap();
        let ev = symmetric_dichotomy_evidence(&one3, &n, 9).unwrap();
        assert_eq!(ev.surviving, vec!["AT", "¬AT", "THR(1/3)", "¬THR(1/3)"]);
    }

    #[test]
    fn reference_arity_matches_certificate() {
        for k in 3..=7 {
            for t in 1..k {
                for d in (1..k).filter(|&d| d != t) {
                    if t % 2 == 1 && k % 2 == 0 && d % 2 == 1 {
                        continue;
                    }
                    let r = tableau_reference(k, t, &prefix_tuple(d, k)).unwrap();
                    assert_eq!(r.arity, refute(k, t, d).unwrap().arity, "k={k} t={t} d={d}");
                }
            }
        }
    }
}
