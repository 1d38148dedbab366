//! Finite relational structures and homomorphisms between them.
//!
//! Domains are `0..domain_size`. A relation is a set of equal-length tuples
//! over the domain; a structure is a domain plus an ordered list of
//! relations, and the list order is the signature.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{PcspError, Result};
use crate::limits::{capacity, saturating_pow};

pub type Tuple = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RelationRepr", into = "RelationRepr")]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Tuple>,
}

#[derive(Serialize, Deserialize)]
struct RelationRepr {
    arity: usize,
    tuples: Vec<Tuple>,
}

impl TryFrom<RelationRepr> for Relation {
    type Error = PcspError;

    fn try_from(r: RelationRepr) -> Result<Self> {
        Relation::new(r.arity, r.tuples)
    }
}

impl From<Relation> for RelationRepr {
    fn from(r: Relation) -> Self {
        RelationRepr {
            arity: r.arity,
            tuples: r.tuples.into_iter().collect(),
        }
    }
}

impl Relation {
    pub fn new(arity: usize, tuples: impl IntoIterator<Item = Tuple>) -> Result<Self> {
        if arity == 0 {
            return Err(PcspError::Param("relation arity must be positive".into()));
        }
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != arity {
                return Err(PcspError::Dim(format!(
                    "tuple {:?} has length {}, expected arity {}",
                    t,
                    t.len(),
                    arity
                )));
            }
            set.insert(t);
        }
        Ok(Relation { arity, tuples: set })
    }

    pub fn empty(arity: usize) -> Self {
        Relation {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    /// The unary relation containing every element of `0..n`.
    pub fn unary_full(n: usize) -> Self {
        Relation {
            arity: 1,
            tuples: (0..n as u32).map(|a| vec![a]).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &BTreeSet<Tuple> {
        &self.tuples
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> + '_ {
        self.tuples.iter()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[u32]) -> bool {
        self.tuples.contains(t)
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.arity == other.arity && self.tuples.is_subset(&other.tuples)
    }

    pub fn union(&self, other: &Relation) -> Result<Relation> {
        if self.arity != other.arity {
            return Err(PcspError::Dim("union of relations of different arity".into()));
        }
        Ok(Relation {
            arity: self.arity,
            tuples: self.tuples.union(&other.tuples).cloned().collect(),
        })
    }

    pub fn difference(&self, other: &Relation) -> Result<Relation> {
        if self.arity != other.arity {
            return Err(PcspError::Dim(
                "difference of relations of different arity".into(),
            ));
        }
        Ok(Relation {
            arity: self.arity,
            tuples: self.tuples.difference(&other.tuples).cloned().collect(),
        })
    }

    /// Largest entry plus one, i.e. the smallest domain the relation fits in.
    pub fn min_domain(&self) -> usize {
        self.tuples
            .iter()
            .flat_map(|t| t.iter())
            .map(|&a| a as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        largest_symmetric_subrelation(self).len() == self.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StructureRepr")]
pub struct RelStructure {
    domain_size: usize,
    relations: Vec<Relation>,
}

#[derive(Deserialize)]
struct StructureRepr {
    domain_size: usize,
    relations: Vec<Relation>,
}

impl TryFrom<StructureRepr> for RelStructure {
    type Error = PcspError;

    fn try_from(r: StructureRepr) -> Result<Self> {
        RelStructure::new(r.domain_size, r.relations)
    }
}

impl RelStructure {
    pub fn new(domain_size: usize, relations: Vec<Relation>) -> Result<Self> {
        if domain_size == 0 {
            return Err(PcspError::Domain("domain must be non-empty".into()));
        }
        for (i, r) in relations.iter().enumerate() {
            if r.min_domain() > domain_size {
                return Err(PcspError::Domain(format!(
                    "relation {i} uses elements outside 0..{domain_size}"
                )));
            }
        }
        Ok(RelStructure {
            domain_size,
            relations,
        })
    }

    /// Boolean structure with a single relation.
    pub fn boolean(rel: Relation) -> Result<Self> {
        RelStructure::new(2, vec![rel])
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, i: usize) -> &Relation {
        &self.relations[i]
    }

    pub fn signature(&self) -> Vec<usize> {
        self.relations.iter().map(Relation::arity).collect()
    }

    pub fn is_boolean(&self) -> bool {
        self.domain_size <= 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.relations.iter().all(Relation::is_symmetric)
    }

    pub(crate) fn push_relation(&mut self, r: Relation) {
        self.relations.push(r);
    }
}

/// An input structure whose domain elements are named variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    pub structure: RelStructure,
    pub variables: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    domain_size: usize,
    relations: Vec<Relation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variables: Option<Vec<String>>,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = PcspError;

    fn try_from(r: InstanceRepr) -> Result<Self> {
        if let Some(v) = &r.variables {
            if v.len() != r.domain_size {
                return Err(PcspError::Domain(format!(
                    "{} variable names for {} variables",
                    v.len(),
                    r.domain_size
                )));
            }
        }
        Ok(Instance {
            structure: RelStructure::new(r.domain_size, r.relations)?,
            variables: r.variables,
        })
    }
}

impl From<Instance> for InstanceRepr {
    fn from(i: Instance) -> Self {
        InstanceRepr {
            domain_size: i.structure.domain_size,
            relations: i.structure.relations,
            variables: i.variables,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Homomorphism {
    pub map: Vec<u32>,
}

impl Homomorphism {
    pub fn identity(n: usize) -> Self {
        Homomorphism {
            map: (0..n as u32).collect(),
        }
    }

    pub fn apply(&self, t: &[u32]) -> Tuple {
        t.iter().map(|&x| self.map[x as usize]).collect()
    }
}

pub fn check_signature(x: &RelStructure, a: &RelStructure) -> Result<()> {
    if x.signature() != a.signature() {
        return Err(PcspError::Signature(format!(
            "arities {:?} vs {:?}",
            x.signature(),
            a.signature()
        )));
    }
    Ok(())
}

pub fn is_homomorphism(phi: &Homomorphism, x: &RelStructure, a: &RelStructure) -> Result<bool> {
    check_signature(x, a)?;
    if phi.map.len() != x.domain_size() {
        return Err(PcspError::Domain(format!(
            "map has {} entries for a domain of size {}",
            phi.map.len(),
            x.domain_size()
        )));
    }
    if let Some(&bad) = phi.map.iter().find(|&&v| v as usize >= a.domain_size()) {
        return Err(PcspError::Domain(format!(
            "map value {bad} outside target domain of size {}",
            a.domain_size()
        )));
    }
    Ok(x.relations()
        .iter()
        .zip(a.relations())
        .all(|(xr, ar)| xr.iter().all(|t| ar.contains(&phi.apply(t)))))
}

/// Backtracking homomorphism search. Variables are assigned in order of
/// descending constraint degree; after every assignment each constraint
/// touching the variable must still have a target tuple consistent with the
/// assigned positions.
struct HomSearch<'a> {
    order: Vec<usize>,
    // constraint ids touching each variable
    touching: Vec<Vec<usize>>,
    scopes: Vec<(usize, &'a [u32])>,
    targets: Vec<Vec<&'a [u32]>>,
    domain: u32,
    assignment: Vec<Option<u32>>,
}

impl<'a> HomSearch<'a> {
    fn new(x: &'a RelStructure, a: &'a RelStructure) -> Self {
        let n = x.domain_size();
        let mut scopes = Vec::new();
        for (i, rel) in x.relations().iter().enumerate() {
            for t in rel.iter() {
                scopes.push((i, t.as_slice()));
            }
        }
        let mut touching = vec![Vec::new(); n];
        for (c, (_, scope)) in scopes.iter().enumerate() {
            let mut seen: Vec<u32> = scope.to_vec();
            seen.sort_unstable();
            seen.dedup();
            for v in seen {
                touching[v as usize].push(c);
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(touching[v].len()));
        let targets = a
            .relations()
            .iter()
            .map(|r| r.iter().map(Vec::as_slice).collect())
            .collect();
        HomSearch {
            order,
            touching,
            scopes,
            targets,
            domain: a.domain_size() as u32,
            assignment: vec![None; n],
        }
    }

    fn supported(&self, c: usize) -> bool {
        let (rel, scope) = self.scopes[c];
        self.targets[rel].iter().any(|t| {
            scope
                .iter()
                .zip(t.iter())
                .all(|(&v, &val)| self.assignment[v as usize].map_or(true, |x| x == val))
        })
    }

    fn consistent(&self, var: usize) -> bool {
        self.touching[var].iter().all(|&c| self.supported(c))
    }

    fn run(&mut self, depth: usize, limit: usize, out: &mut Vec<Homomorphism>) {
        if out.len() >= limit {
            return;
        }
        if depth == self.order.len() {
            out.push(Homomorphism {
                map: self.assignment.iter().map(|v| v.unwrap()).collect(),
            });
            return;
        }
        let var = self.order[depth];
        for val in 0..self.domain {
            self.assignment[var] = Some(val);
            if self.consistent(var) {
                self.run(depth + 1, limit, out);
                if out.len() >= limit {
                    break;
                }
            }
        }
        self.assignment[var] = None;
    }
}

pub fn find_homomorphism(x: &RelStructure, a: &RelStructure) -> Result<Option<Homomorphism>> {
    Ok(all_homomorphisms(x, a, 1)?.into_iter().next())
}

/// Up to `limit` homomorphisms from `x` to `a`, in search order.
pub fn all_homomorphisms(
    x: &RelStructure,
    a: &RelStructure,
    limit: usize,
) -> Result<Vec<Homomorphism>> {
    check_signature(x, a)?;
    let mut search = HomSearch::new(x, a);
    let mut out = Vec::new();
    if limit > 0 {
        search.run(0, limit, &mut out);
    }
    Ok(out)
}

/// Element `(a_1, ..., a_m)` of the `m`-th power of a domain of size `n`,
/// encoded mixed-radix with `a_1` most significant.
pub fn encode_power_element(coords: &[u32], n: usize) -> u32 {
    coords
        .iter()
        .fold(0u64, |acc, &c| acc * n as u64 + c as u64) as u32
}

pub fn decode_power_element(mut code: u32, n: usize, m: usize) -> Vec<u32> {
    let mut out = vec![0; m];
    for slot in out.iter_mut().rev() {
        *slot = code % n as u32;
        code /= n as u32;
    }
    out
}

/// The `m`-th Cartesian power. A tuple of the `i`-th relation is a `k×m`
/// matrix whose columns are tuples of the `i`-th relation of `a`; its
/// entries are the encoded rows.
pub fn power(a: &RelStructure, m: usize) -> Result<RelStructure> {
    if m == 0 {
        return Err(PcspError::Param("power exponent must be positive".into()));
    }
    let n = a.domain_size();
    let dom = saturating_pow(n as u64, m as u64);
    if dom > u32::MAX as u64 {
        return Err(PcspError::Capacity(format!("domain {n}^{m} too large")));
    }
    let mut rels = Vec::with_capacity(a.relations().len());
    for r in a.relations() {
        let count = saturating_pow(r.len() as u64, m as u64);
        if count > capacity() {
            return Err(PcspError::Capacity(format!(
                "power relation would have {}^{} tuples",
                r.len(),
                m
            )));
        }
        let cols: Vec<&Tuple> = r.iter().collect();
        let k = r.arity();
        let mut tuples = Vec::with_capacity(count as usize);
        for code in 0..count {
            // column choice for this code, first column most significant
            let idx = decode_power_element(code as u32, cols.len(), m);
            let row = (0..k)
                .map(|i| {
                    let coords: Vec<u32> = idx.iter().map(|&c| cols[c as usize][i]).collect();
                    encode_power_element(&coords, n)
                })
                .collect();
            tuples.push(row);
        }
        rels.push(Relation::new(k, tuples)?);
    }
    RelStructure::new(dom as usize, rels)
}

/// Component-wise image of `r` under the unary map `f`.
pub fn image_of_relation(r: &Relation, f: &[u32]) -> Relation {
    Relation {
        arity: r.arity,
        tuples: r
            .iter()
            .map(|t| t.iter().map(|&x| f[x as usize]).collect())
            .collect(),
    }
}

fn orbit_size(sorted: &[u32]) -> u128 {
    // multinomial k! / prod(c_v!) built as a product of binomials
    let mut total: u128 = 1;
    let mut placed: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        for c in 1..=(j - i) as u128 {
            placed += 1;
            total = total * placed / c;
        }
        i = j;
    }
    total
}

/// Tuples of `r` whose whole permutation orbit lies in `r`.
pub fn largest_symmetric_subrelation(r: &Relation) -> Relation {
    let mut counts: HashMap<Vec<u32>, u128> = HashMap::new();
    for t in r.iter() {
        let mut key = t.clone();
        key.sort_unstable();
        *counts.entry(key).or_default() += 1;
    }
    Relation {
        arity: r.arity,
        tuples: r
            .iter()
            .filter(|t| {
                let mut key = (*t).clone();
                key.sort_unstable();
                counts[&key] == orbit_size(&key)
            })
            .cloned()
            .collect(),
    }
}

/// `(ap, bp)` relaxes `(a, b)` when `ap → a` and `b → bp`.
pub fn is_homomorphic_relaxation(
    ap: &RelStructure,
    bp: &RelStructure,
    a: &RelStructure,
    b: &RelStructure,
) -> Result<bool> {
    check_signature(ap, bp)?;
    check_signature(ap, a)?;
    check_signature(a, b)?;
    Ok(find_homomorphism(ap, a)?.is_some() && find_homomorphism(b, bp)?.is_some())
}
