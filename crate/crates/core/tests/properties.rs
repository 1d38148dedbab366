mod common;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;
use pcsp_core::polymorphisms::{enumerate_polymorphisms, BoolFn};
use pcsp_core::relax::{
    aip_decide, augment_unary, blp_aip, blp_build, int_feasible, relative_interior_point, IntSystem, VarKey,
    Witness,
};
use pcsp_core::solve::{brute_solve, gf2_solve, solve_search_affine, GF2System};
use pcsp_core::structures::{all_homomorphisms, RelStructure, Relation, Tuple};
use pcsp_core::templates::{odd_k, t_in_k, Mode, TemplateSpec};
use proptest::prelude::*;

fn det(m: &[Vec<i64>]) -> i64 {
    match m.len() {
        0 => 1,
        1 => m[0][0],
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect())
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * det(&minor)
            })
            .sum(),
    }
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|s| s.count_ones() as usize == r)
        .map(|s| (0..n).filter(|&i| s >> i & 1 == 1).collect())
        .collect()
}

/// gcd of the `r × r` minors.
fn divisor(m: &[Vec<i64>], r: usize) -> i64 {
    let cols = m.first().map_or(0, Vec::len);
    let mut g = 0i64;
    for rs in subsets(m.len(), r) {
        for cs in subsets(cols, r) {
            let sub: Vec<Vec<i64>> = rs.iter().map(|&i| cs.iter().map(|&j| m[i][j]).collect()).collect();
            g = g.gcd(&det(&sub));
        }
    }
    g
}

fn rank(m: &[Vec<i64>]) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    (1..=m.len().min(cols)).rev().find(|&r| divisor(m, r) != 0).unwrap_or(0)
}

/// `Ax = b` has an integer solution iff the ranks of `A` and `[A | b]` agree
/// and so do their determinantal divisors at that rank.
fn integer_solvable(a: &[Vec<i64>], b: &[i64]) -> bool {
    let ab: Vec<Vec<i64>> = a.iter().zip(b).map(|(r, &v)| r.iter().copied().chain([v]).collect()).collect();
    let r = rank(a);
    if r != rank(&ab) {
        return false;
    }
    r == 0 || divisor(a, r) == divisor(&ab, r)
}

fn small_system() -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<i64>)> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(prop::collection::vec(-3i64..=3, n), m),
            prop::collection::vec(-5i64..=5, m),
        )
    })
}

fn boolean_relation(k: usize) -> impl Strategy<Value = Relation> {
    prop::collection::btree_set(0u32..1 << k, 1..(1usize << k)).prop_map(move |s| {
        Relation::new(k, s.into_iter().map(|v| (0..k).map(|i| (v >> (k - 1 - i)) & 1).collect::<Tuple>())).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn hnf_matches_determinantal_divisors((a, b) in small_system()) {
        let n = a[0].len();
        let mut sys = IntSystem::new(n);
        for (row, &rhs) in a.iter().zip(&b) {
            sys.add_row(row.iter().enumerate().map(|(j, &c)| (j, BigInt::from(c))).collect(), BigInt::from(rhs)).unwrap();
        }
        let out = int_feasible(&sys);
        prop_assert_eq!(out.accepted(), integer_solvable(&a, &b));
        if let Some(Witness::Integer(x)) = &out.witness {
            prop_assert!(sys.satisfied_by(x));
        }
    }

    #[test]
    fn hnf_survives_large_entries(scale in 1i64..=1_000_000_000_000, (a, b) in small_system()) {
        // scaling the system keeps solvability; entries beyond i64 products force the big path
        let n = a[0].len();
        let big = BigInt::from(scale) * BigInt::from(scale);
        let mut sys = IntSystem::new(n);
        for (row, &rhs) in a.iter().zip(&b) {
            sys.add_row(
                row.iter().enumerate().map(|(j, &c)| (j, BigInt::from(c) * &big)).collect(),
                BigInt::from(rhs) * &big,
            ).unwrap();
        }
        let out = int_feasible(&sys);
        prop_assert_eq!(out.accepted(), integer_solvable(&a, &b));
        if let Some(Witness::Integer(x)) = &out.witness {
            prop_assert!(sys.satisfied_by(x));
        }
    }

    #[test]
    fn gf2_matches_exhaustive(
        n in 1usize..=9,
        eqs in prop::collection::vec((prop::collection::vec(0usize..9, 1..5), any::<bool>()), 0..8),
    ) {
        let mut sys = GF2System::new(n);
        for (vars, rhs) in &eqs {
            let vars: Vec<usize> = vars.iter().map(|v| v % n).collect();
            sys.add_equation(&vars, *rhs).unwrap();
        }
        let exists = (0u32..1 << n).any(|v| {
            let x: Vec<u32> = (0..n).map(|i| v >> i & 1).collect();
            sys.satisfied_by(&x)
        });
        match gf2_solve(&sys) {
            Some(a) => prop_assert!(sys.satisfied_by(&a.values)),
            None => prop_assert!(!exists),
        }
        prop_assert_eq!(gf2_solve(&sys).is_some(), exists);
    }

    #[test]
    fn polymorphisms_match_naive_tables(a in boolean_relation(2), b in boolean_relation(2), m in 1usize..=2) {
        let sa = RelStructure::boolean(a.clone()).unwrap();
        let sb = RelStructure::boolean(b.clone()).unwrap();
        let got: Vec<String> = enumerate_polymorphisms(&sa, &sb, m).unwrap().iter().map(BoolFn::table_string).collect();
        let rows: Vec<&Tuple> = a.iter().collect();
        let mut want = Vec::new();
        for bits in 0u32..1 << (1 << m) {
            let table: Vec<bool> = (0..1 << m).map(|i| bits >> i & 1 == 1).collect();
            let f = BoolFn::from_table(m, &table).unwrap();
            // every choice of m columns from A
            let ok = (0..rows.len().pow(m as u32)).all(|mut c| {
                let cols: Vec<&Tuple> = (0..m).map(|_| { let x = rows[c % rows.len()]; c /= rows.len(); x }).collect();
                let out: Tuple = (0..2).map(|r| u32::from(f.eval(&cols.iter().map(|col| col[r]).collect::<Vec<_>>()))).collect();
                b.contains(&out)
            });
            if ok {
                want.push(f.table_string());
            }
        }
        want.sort();
        prop_assert_eq!(got, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    /// Every homomorphism gives a feasible 0/1 point of the BLP, so the
    /// interior point must be positive wherever one of them is.
    #[test]
    fn interior_point_covers_homomorphisms(seed in any::<u64>(), which in 0usize..3) {
        let rel = [t_in_k(1, 3).unwrap(), odd_k(4).unwrap(), t_in_k(2, 4).unwrap()][which].clone();
        let a = RelStructure::boolean(rel.clone()).unwrap();
        let mut rng = common::rng(seed);
        let n = 3 + (seed % 4) as usize;
        let m = 1 + (seed % 3) as usize;
        let x = common::random_instance(rel.arity(), n, m, &mut rng);
        let (xu, au, u) = augment_unary(&x, &a).unwrap();
        let lp = blp_build(&xu, &au, u).unwrap();
        let homs = all_homomorphisms(&x, &a, 1 << 12).unwrap();
        let p = relative_interior_point(&lp);
        prop_assert_eq!(p.is_some() || homs.is_empty(), true);
        if let Some(p) = p {
            prop_assert!(lp.satisfied_by(&p));
            for h in &homs {
                for (i, r) in xu.relations().iter().enumerate() {
                    for scope in r.iter() {
                        let key = VarKey { rel: i, x: scope.clone(), a: h.apply(scope) };
                        let j = lp.index_of(&key).expect("variable for a used tuple");
                        prop_assert!(p[j].is_positive(), "{} is zero", lp.names[j]);
                    }
                }
            }
        }
        // the refinement can only reject more, and never a solvable instance
        let aip = aip_decide(&x, &a).unwrap().accepted();
        let both = blp_aip(&x, &a).unwrap().accepted();
        prop_assert!(!both || aip);
        if !homs.is_empty() {
            prop_assert!(both);
        }
    }

    /// Instances with no homomorphism to odd-in-k get no affine solution.
    #[test]
    fn affine_search_matches_odd_brute_force(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let spec = TemplateSpec::new(Mode::Add, 1, 4, vec![vec![1, 1, 1, 0]]).unwrap();
        let odd = RelStructure::boolean(odd_k(4).unwrap()).unwrap();
        let n = 2 + (seed % 9) as usize;
        let x = common::random_instance(4, n, 1 + (seed % 6) as usize, &mut rng);
        let brute = brute_solve(&x, &odd).unwrap();
        let affine = solve_search_affine(&x, &spec).unwrap();
        prop_assert_eq!(brute.is_some(), affine.is_some());
    }
}
