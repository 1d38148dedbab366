//! Acceptance suite: one PASS/FAIL line per criterion, then a single
//! assertion over all of them.

mod common;

use std::time::{Duration, Instant};

use num_rational::Ratio;
use pcsp_core::classify::{consistency_sweep, prop9_closure_trace, symmetrize, ClosureCase, Label};
use pcsp_core::polymorphisms::{
    apply_rows, enumerate_polymorphisms, exists_alternating, exists_block_symmetric, family_member,
    is_polymorphism, matrix_from_columns, BoolFn,
};
use pcsp_core::relax::{aip_decide, blp_aip};
use pcsp_core::solve::{brute_solve, solve_search_affine};
use pcsp_core::structures::{is_homomorphism, RelStructure, Relation, Tuple};
use pcsp_core::tableaux::{build_case, refute, Case, Construction};
use pcsp_core::templates::{build_template, nae, odd_k, prefix_tuple, t_in_k, weight, Mode, TemplateSpec};
use pcsp_core::PcspError;
use rand::Rng;

type Outcome = Result<String, String>;

fn boolean(r: Relation) -> RelStructure {
    RelStructure::boolean(r).unwrap()
}

fn all_tuples(k: usize) -> Vec<Tuple> {
    (0u32..1 << k).map(|v| (0..k).map(|i| (v >> (k - 1 - i)) & 1).collect()).collect()
}

fn timed(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    if took > limit {
        Err(format!("{detail}; took {took:?}, limit {limit:?}"))
    } else {
        Ok(format!("{detail}; {took:?}"))
    }
}

fn parity_tractable(t: usize, k: usize, d: usize, add: bool) -> bool {
    t % 2 == 1 && k % 2 == 0 && (d % 2 == 1) == add
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let rep = consistency_sweep(6).map_err(|e| e.to_string())?;
    // recompute the expected labels here rather than trusting the report
    let mut wrong = Vec::new();
    let mut count = 0;
    for k in 3..=6 {
        for t in 1..k {
            for d in (1..k).filter(|&d| d != t) {
                count += 1;
                let row = rep
                    .rows
                    .iter()
                    .find(|r| (r.k, r.t, r.d) == (k, t, d))
                    .ok_or(format!("missing row k={k} t={t} d={d}"))?;
                let add = if parity_tractable(t, k, d, true) { Label::TractableViaAIP } else { Label::NotSolvedByBLPAIP };
                let rem = if parity_tractable(t, k, d, false) { Label::Tractable } else { Label::NPHard };
                if row.add != add || row.remove != rem {
                    wrong.push((k, t, d));
                }
            }
        }
    }
    if !wrong.is_empty() || rep.checked != count {
        return Err(format!("{} exceptions: {wrong:?}", wrong.len()));
    }
    timed(Duration::from_secs(1), start, format!("{count} (t,k,d) triples in both modes, 0 exceptions"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let rep = consistency_sweep(6).map_err(|e| e.to_string())?;
    let (mut refuted, mut found) = (0, 0);
    for row in &rep.rows {
        let spec = TemplateSpec::new(Mode::Add, row.t, row.k, vec![prefix_tuple(row.d, row.k)]).unwrap();
        let tpl = build_template(&spec).unwrap();
        match row.add {
            Label::NotSolvedByBLPAIP => {
                let n = row.certificate_arity.ok_or("hard verdict without certificate arity")?;
                if n > 9 {
                    continue;
                }
                let cert = refute(row.k, row.t, row.d).map_err(|e| e.to_string())?;
                if cert.arity != n || !cert.verify() {
                    return Err(format!("certificate mismatch at {:?}", (row.k, row.t, row.d)));
                }
                if let Some(f) = exists_block_symmetric(&tpl.a, &tpl.b, n).map_err(|e| e.to_string())? {
                    return Err(format!("2BS polymorphism of arity {n} at {:?}: {}", (row.k, row.t, row.d), f.to_json()));
                }
                refuted += 1;
            }
            Label::TractableViaAIP => {
                for n in [1, 3, 5] {
                    let f = exists_alternating(&tpl.a, &tpl.b, n)
                        .map_err(|e| e.to_string())?
                        .ok_or(format!("no alternating polymorphism of arity {n} at {:?}", (row.k, row.t, row.d)))?;
                    // independent check on the expanded function
                    let full = f.expand().map_err(|e| e.to_string())?;
                    if !is_polymorphism(&full, &tpl.a, &tpl.b).map_err(|e| e.to_string())? {
                        return Err(format!("alternating function at {:?} is not a polymorphism", (row.k, row.t, row.d)));
                    }
                    found += 1;
                }
            }
            l => return Err(format!("unexpected add-mode label {l}")),
        }
    }
    if refuted == 0 || found == 0 {
        return Err("nothing checked".into());
    }
    timed(
        Duration::from_secs(600),
        start,
        format!("{refuted} refutations without 2BS polymorphisms, {found} alternating polymorphisms found"),
    )
}

fn criterion_3() -> Outcome {
    let q = |n, d| Ratio::new(n, d);
    let (tab, p) = build_case(Construction::HeavyTupleShort, Case::Three, 15, 7, 10, None).map_err(|e| e.to_string())?;
    let p = p.ok_or("case 3 without parameters")?;
    let got = (p.r, p.first, p.second, p.a, p.b);
    let want = (3, (q(40, 11), q(42, 11)), (q(37, 11), q(50, 11)), q(40, 11), 3);
    if got != want {
        return Err(format!("parameters {got:?}, expected {want:?}"));
    }
    let s_formula = Ratio::from_integer(p.budget as i64) * (Ratio::from_integer(p.b as i64 + 1) - p.a);
    if s_formula != Ratio::from_integer(p.s as i64) {
        return Err(format!("s = {} but budget·(b+1-a) = {s_formula}", p.s));
    }
    if !pcsp_core::tableaux::verify_tableau(&tab) {
        return Err("default tableau does not verify".into());
    }
    let (tab41, p41) =
        build_case(Construction::HeavyTupleShort, Case::Three, 15, 7, 10, Some(q(41, 11))).map_err(|e| e.to_string())?;
    let p41 = p41.unwrap();
    if !pcsp_core::tableaux::verify_tableau(&tab41) || p41.s != 3 || p41.b != 3 {
        return Err(format!("a = 41/11 gives s={} b={}", p41.s, p41.b));
    }
    Ok(format!("r=3, a={} (s={}), a=41/11 (s=3) both verify", p.a, p.s))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut count = 0;
    for k in 3..=30 {
        for t in 1..k {
            for d in (1..k).filter(|&d| d != t) {
                if parity_tractable(t, k, d, true) {
                    continue;
                }
                match refute(k, t, d) {
                    Ok(c) if c.verify() && c.tableaux.len() == 3 => count += 1,
                    Ok(_) => return Err(format!("certificate for k={k} t={t} d={d} does not verify")),
                    Err(PcspError::Internal(m)) => return Err(format!("internal error at k={k} t={t} d={d}: {m}")),
                    Err(e) => return Err(format!("k={k} t={t} d={d}: {e}")),
                }
            }
        }
    }
    timed(Duration::from_secs(60), start, format!("{count} certificates verify"))
}

fn criterion_5() -> Outcome {
    let mut rng = common::rng(5);
    let templates = [
        ("1-in-3", t_in_k(1, 3).unwrap()),
        ("1-in-4", t_in_k(1, 4).unwrap()),
        ("odd-in-4", odd_k(4).unwrap()),
        ("odd-in-6", odd_k(6).unwrap()),
    ];
    for (name, rel) in &templates {
        let a = boolean(rel.clone());
        for i in 0..200 {
            let n = rng.gen_range(3..=8);
            let m = rng.gen_range(1..=5);
            let (x, sigma) = common::planted(rel, n, m, &mut rng);
            assert!(is_homomorphism(&pcsp_core::structures::Homomorphism { map: sigma }, &x, &a).unwrap());
            let aip = aip_decide(&x, &a).map_err(|e| e.to_string())?;
            let both = blp_aip(&x, &a).map_err(|e| e.to_string())?;
            if !aip.accepted() || !both.accepted() {
                return Err(format!("{name} instance {i} rejected (aip {:?}, blp+aip {:?})", aip.verdict, both.verdict));
            }
        }
    }
    let odd4 = boolean(odd_k(4).unwrap());
    let (mut yes, mut no) = (0, 0);
    for i in 0..200 {
        let n = rng.gen_range(2..=12);
        let m = rng.gen_range(1..=8);
        let x = common::random_instance(4, n, m, &mut rng);
        let brute = brute_solve(&x, &odd4).map_err(|e| e.to_string())?.is_some();
        let aip = aip_decide(&x, &odd4).map_err(|e| e.to_string())?.accepted();
        if brute != aip {
            return Err(format!("odd-in-4 instance {i}: brute force {brute}, AIP {aip}"));
        }
        if brute {
            yes += 1;
        } else {
            no += 1;
        }
    }
    Ok(format!("800 planted instances accepted; odd-in-4 agreement 200/200 ({yes} solvable, {no} not)"))
}

fn criterion_6() -> Outcome {
    let a = boolean(t_in_k(1, 3).unwrap());
    let x = RelStructure::new(1, vec![Relation::new(3, vec![vec![0, 0, 0]]).unwrap()]).unwrap();
    let aip = aip_decide(&x, &a).map_err(|e| e.to_string())?;
    let both = blp_aip(&x, &a).map_err(|e| e.to_string())?;
    if aip.accepted() || both.accepted() {
        return Err(format!("verdicts {:?} / {:?}", aip.verdict, both.verdict));
    }
    Ok("(x,x,x) over 1-in-3 rejected by AIP and BLP+AIP".into())
}

/// Image of the `w`-weight tuples under `f`, by brute force over all inputs.
fn image(f: &BoolFn, k: usize, w: usize) -> Vec<Tuple> {
    let cols: Vec<Tuple> = all_tuples(k).into_iter().filter(|x| weight(x) == w).collect();
    let m = f.arity();
    let mut out = std::collections::BTreeSet::new();
    let mut idx = vec![0usize; m];
    loop {
        let pick: Vec<Tuple> = idx.iter().map(|&i| cols[i].clone()).collect();
        out.insert(apply_rows(f, &matrix_from_columns(&pick)).unwrap());
        let mut j = 0;
        while j < m {
            idx[j] += 1;
            if idx[j] < cols.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == m {
            break;
        }
    }
    out.into_iter().collect()
}

fn criterion_7() -> Outcome {
    let mut traces = 0;
    let mut exhaustive = 0;
    for k in 3..=8 {
        for t in 1..k {
            for case in ClosureCase::ALL {
                if !case.applies(t, k) {
                    continue;
                }
                let tr = prop9_closure_trace(t, k, case).map_err(|e| format!("t={t} k={k} {case:?}: {e}"))?;
                let fs = tr.final_set();
                let expected = match case {
                    ClosureCase::I | ClosureCase::Iv | ClosureCase::V => fs.contains(&vec![0; k]),
                    ClosureCase::Ii | ClosureCase::Iii | ClosureCase::Vi => fs.contains(&vec![1; k]),
                    ClosureCase::Vii => fs == odd_k(k).unwrap(),
                };
                if !tr.reached || !expected {
                    return Err(format!("t={t} k={k} {case:?} stops at weights {:?}", tr.weights));
                }
                if k <= 6 {
                    let (name, m) = case.function();
                    let f = family_member(name, m, false).unwrap();
                    for s in &tr.steps {
                        let img = image(&f, k, s.from_weight);
                        let all = all_tuples(k).into_iter().filter(|x| weight(x) == s.to_weight);
                        if !all.into_iter().all(|x| img.contains(&x)) {
                            return Err(format!("t={t} k={k} {case:?}: weight {} not covered", s.to_weight));
                        }
                        exhaustive += 1;
                    }
                }
                traces += 1;
            }
        }
    }
    Ok(format!("{traces} traces reach their eventual output; {exhaustive} steps re-checked exhaustively"))
}

fn criterion_8() -> Outcome {
    let a = boolean(t_in_k(1, 3).unwrap());
    let b = boolean(nae(3).unwrap());
    let got: Vec<String> = enumerate_polymorphisms(&a, &b, 1).map_err(|e| e.to_string())?.iter().map(BoolFn::table_string).collect();
    // oracle: all four unary tables, applied tuple by tuple
    let mut want = Vec::new();
    for table in [[false, false], [false, true], [true, false], [true, true]] {
        let ok = a.relation(0).iter().all(|x| {
            let y: Tuple = x.iter().map(|&v| u32::from(table[v as usize])).collect();
            b.relation(0).contains(&y)
        });
        if ok {
            want.push(BoolFn::from_table(1, &table).unwrap().table_string());
        }
    }
    want.sort();
    if got != want || got.len() != 2 {
        return Err(format!("got {got:?}, oracle {want:?}"));
    }
    Ok(format!("unary polymorphisms {got:?} (identity, negation)"))
}

fn criterion_9() -> Outcome {
    let mut rng = common::rng(9);
    for i in 0..20 {
        let k = rng.gen_range(3..=4);
        let t = rng.gen_range(1..k);
        let base = t_in_k(t, k).unwrap();
        let removable: Vec<Tuple> = nae(k).unwrap().iter().filter(|x| !base.contains(x)).cloned().collect();
        let dropped = Relation::new(k, removable.into_iter().filter(|_| rng.gen_bool(0.4))).unwrap();
        let a = boolean(base);
        let b = boolean(nae(k).unwrap().difference(&dropped).unwrap());
        let (_, bp) = symmetrize(&a, &b).map_err(|e| e.to_string())?;
        for m in [1, 2] {
            let x: Vec<String> = enumerate_polymorphisms(&a, &b, m).unwrap().iter().map(BoolFn::table_string).collect();
            let y: Vec<String> = enumerate_polymorphisms(&a, &bp, m).unwrap().iter().map(BoolFn::table_string).collect();
            if x != y {
                return Err(format!("sample {i} (t={t}, k={k}), arity {m}: {} vs {} polymorphisms", x.len(), y.len()));
            }
        }
    }
    Ok("20 sampled templates, arities 1 and 2 agree".into())
}

fn random_tractable_spec(rng: &mut impl Rng) -> TemplateSpec {
    let k = if rng.gen_bool(0.5) { 4 } else { 6 };
    let t = 2 * rng.gen_range(0..k / 2) + 1;
    let add = rng.gen_bool(0.5);
    let pool: Vec<Tuple> = all_tuples(k)
        .into_iter()
        .filter(|x| {
            let d = weight(x);
            d > 0 && d < k && d != t && (d % 2 == 1) == add
        })
        .collect();
    let mut s: Vec<Tuple> = pool.iter().filter(|_| rng.gen_bool(0.2)).cloned().collect();
    if s.is_empty() {
        s.push(pool[rng.gen_range(0..pool.len())].clone());
    }
    TemplateSpec::new(if add { Mode::Add } else { Mode::Remove }, t, k, s).unwrap()
}

fn criterion_10() -> Outcome {
    let mut rng = common::rng(10);
    for i in 0..200 {
        let spec = random_tractable_spec(&mut rng);
        let tpl = build_template(&spec).unwrap();
        let n = rng.gen_range(4..=14);
        let m = rng.gen_range(1..=12);
        let (x, _) = common::planted(tpl.a.relation(0), n, m, &mut rng);
        let sol = solve_search_affine(&x, &spec)
            .map_err(|e| e.to_string())?
            .ok_or(format!("instance {i}: no assignment for a planted instance"))?;
        if !is_homomorphism(&sol.to_homomorphism(), &x, &tpl.b).unwrap() {
            return Err(format!("instance {i}: assignment is not a homomorphism into B"));
        }
    }
    Ok("200/200 planted instances solved into B".into())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("classification sweep", criterion_1),
        ("refutation/search cross-check", criterion_2),
        ("case 3 parameter reproduction", criterion_3),
        ("tableau totality", criterion_4),
        ("relaxation soundness", criterion_5),
        ("hard instance rejection", criterion_6),
        ("closure traces", criterion_7),
        ("unary polymorphism oracle", criterion_8),
        ("symmetrization equivalence", criterion_9),
        ("search-version correctness", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                println!("FAIL {} {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
