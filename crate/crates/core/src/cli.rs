//! The `pcsp-lab` command line. Every command prints JSON on standard output
//! (ASCII tableaux and LP dumps excepted); errors go to standard error with
//! exit code 2.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::classify::{
    classify_add_with, classify_csp_superset, classify_remove, consistency_sweep, family_evidence,
    symmetric_dichotomy_evidence,
};
use crate::error::{PcspError, Result};
use crate::polymorphisms::{exists_alternating, exists_block_symmetric};
use crate::relax::{aip_build, augment_unary, blp_build};
use crate::structures::{Instance, RelStructure, Relation, Tuple};
use crate::tableaux::{build_case, refute_with, verify_tableau, Case, Construction, Rational};
use crate::templates::{build_template, parse_bitstring, Mode, PcspTemplate, TemplateSpec};
use crate::solve::{solve, Algorithm};

#[derive(Parser, Debug)]
#[command(name = "pcsp-lab", version, about = "Boolean promise-CSP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a template
    #[command(subcommand)]
    Classify(ClassifyCmd),
    /// Run a relaxation or search on an instance
    Solve(SolveArgs),
    /// Polymorphism searches
    #[command(subcommand)]
    Poly(PolyCmd),
    /// Build a single tableau, or a full refutation with `refute`
    Tableau(TableauArgs),
    /// Exhaustive classification consistency sweep
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct SpecArgs {
    #[arg(long)]
    t: usize,
    #[arg(long)]
    k: usize,
    /// comma-separated bitstrings, e.g. 1110,0111
    #[arg(long)]
    tuples: String,
}

#[derive(Subcommand, Debug)]
enum ClassifyCmd {
    /// t-in-k ∪ S versus NAE
    Add {
        #[command(flatten)]
        spec: SpecArgs,
        /// attach the full refutation certificate to hard verdicts
        #[arg(long)]
        certify: bool,
    },
    /// t-in-k versus NAE ∖ S
    Remove {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// CSP(T) for a relation T that t-in-k maps to
    Csp {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        k: usize,
        #[arg(long = "T", value_name = "FILE")]
        relation: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, value_name = "FILE")]
    template: PathBuf,
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    #[arg(long, default_value = "aip", value_parser = parse_algorithm)]
    algorithm: Algorithm,
    /// print the BLP and AIP systems instead of solving
    #[arg(long)]
    emit_lp: bool,
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: PcspError| e.to_string())
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SearchFamily {
    #[value(name = "2bs")]
    BlockSymmetric,
    Alt,
}

#[derive(Subcommand, Debug)]
enum PolyCmd {
    /// Exhaustive search for a 2-block-symmetric or alternating polymorphism
    Search {
        #[arg(long, value_enum)]
        family: SearchFamily,
        #[arg(long)]
        arity: usize,
        #[arg(long, value_name = "FILE")]
        template: PathBuf,
    },
    /// Bounded membership checks for the symmetric tractable families
    Families {
        #[arg(long, value_name = "FILE")]
        template: PathBuf,
        #[arg(long, default_value_t = crate::limits::DEFAULT_FAMILY_ARITY)]
        max_arity: usize,
    },
}

#[derive(Args, Debug)]
#[command(args_conflicts_with_subcommands = true)]
struct TableauArgs {
    #[command(subcommand)]
    action: Option<TableauCmd>,
    /// construction: 10, 11, 12 or 13
    #[arg(long)]
    prop: Option<u8>,
    /// 1, 2, 2a, 2b or 3
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// balancing average for case 3, e.g. 41/11
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    ascii: bool,
}

#[derive(Subcommand, Debug)]
enum TableauCmd {
    /// Three tableaux ruling out 2-block-symmetric polymorphisms
    Refute {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        ascii: bool,
    },
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    /// also run the polymorphism searches up to this arity
    #[arg(long)]
    search_arity: Option<usize>,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn ok(stdout: String, code: i32) -> Self {
        Output {
            code,
            stdout,
            stderr: String::new(),
        }
    }

    fn json(v: &Value, code: i32) -> Self {
        Self::ok(format!("{}\n", serde_json::to_string_pretty(v).expect("JSON values serialize")), code)
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Output::ok(text, 0)
            } else {
                Output {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(out) => out,
        Err(e) => Output {
            code: 2,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}

fn parse_tuples(s: &str) -> Result<Vec<Tuple>> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(parse_bitstring).collect()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| PcspError::Param(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| PcspError::Param(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RelationFile {
    Relation(Relation),
    Tuples(Vec<Tuple>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TemplateFile {
    Spec(TemplateSpec),
    Pair { a: RelStructure, b: RelStructure },
}

fn read_template(path: &Path) -> Result<PcspTemplate> {
    match read_json::<TemplateFile>(path)? {
        TemplateFile::Spec(spec) => build_template(&spec),
        TemplateFile::Pair { a, b } => PcspTemplate::new(a, b),
    }
}

fn parse_rational(s: &str) -> Result<Rational> {
    s.trim().parse::<Rational>().map_err(|e| PcspError::Param(format!("bad rational {s:?}: {e}")))
}

fn dispatch(cmd: Command) -> Result<Output> {
    match cmd {
        Command::Classify(c) => run_classify(c),
        Command::Solve(s) => run_solve(s),
        Command::Poly(p) => run_poly(p),
        Command::Tableau(t) => run_tableau(t),
        Command::Sweep(s) => run_sweep(s),
    }
}

fn run_classify(cmd: ClassifyCmd) -> Result<Output> {
    let report = match cmd {
        ClassifyCmd::Add { spec, certify } => {
            let s = TemplateSpec::new(Mode::Add, spec.t, spec.k, parse_tuples(&spec.tuples)?)?;
            classify_add_with(&s, certify)?
        }
        ClassifyCmd::Remove { spec } => {
            let s = TemplateSpec::new(Mode::Remove, spec.t, spec.k, parse_tuples(&spec.tuples)?)?;
            classify_remove(&s)?
        }
        ClassifyCmd::Csp { t, k, relation } => {
            let rel = match read_json::<RelationFile>(&relation)? {
                RelationFile::Relation(r) => r,
                RelationFile::Tuples(ts) => Relation::new(k, ts)?,
            };
            classify_csp_superset(t, k, &rel)?
        }
    };
    Ok(Output::json(&to_value(&report), 0))
}

fn run_solve(args: SolveArgs) -> Result<Output> {
    let spec: TemplateSpec = read_json(&args.template)?;
    spec.validate()?;
    let inst: Instance = read_json(&args.instance)?;
    let x = &inst.structure;
    if args.emit_lp {
        let tpl = build_template(&spec)?;
        crate::structures::check_signature(x, &tpl.a)?;
        let (xu, au, u) = augment_unary(x, &tpl.a)?;
        let text = format!(
            "# BLP\n{}# AIP\n{}",
            blp_build(&xu, &au, u)?.to_text(),
            aip_build(&xu, &au, u)?.to_text()
        );
        return Ok(Output::ok(text, 0));
    }
    let result = solve(x, &spec, args.algorithm)?;
    let mut v = to_value(&result);
    if let (Some(names), Some(a)) = (&inst.variables, &result.assignment) {
        let named: serde_json::Map<String, Value> =
            names.iter().zip(&a.values).map(|(n, &b)| (n.clone(), json!(b))).collect();
        v["named_assignment"] = Value::Object(named);
    }
    Ok(Output::json(&v, if result.accepted() { 0 } else { 1 }))
}

fn run_poly(cmd: PolyCmd) -> Result<Output> {
    match cmd {
        PolyCmd::Search { family, arity, template } => {
            let tpl = read_template(&template)?;
            if arity % 2 == 0 {
                return Err(PcspError::Param(format!("arity must be odd, got {arity}")));
            }
            let found = match family {
                SearchFamily::BlockSymmetric => exists_block_symmetric(&tpl.a, &tpl.b, arity)?.map(|f| f.to_json()),
                SearchFamily::Alt => exists_alternating(&tpl.a, &tpl.b, arity)?.map(|f| f.to_json()),
            };
            let mut v = json!({ "found": found.is_some(), "arity": arity });
            if let Some(f) = found {
                v["function"] = f;
            }
            Ok(Output::json(&v, 0))
        }
        PolyCmd::Families { template, max_arity } => {
            let tpl = read_template(&template)?;
            let ev = if tpl.a.is_symmetric() && tpl.b.is_symmetric() {
                symmetric_dichotomy_evidence(&tpl.a, &tpl.b, max_arity)?
            } else {
                family_evidence(&tpl.a, &tpl.b, max_arity)?
            };
            Ok(Output::json(&to_value(&ev), 0))
        }
    }
}

fn run_tableau(args: TableauArgs) -> Result<Output> {
    if let Some(TableauCmd::Refute { k, t, d, a, ascii }) = args.action {
        let a = a.as_deref().map(parse_rational).transpose()?;
        let cert = refute_with(k, t, d, a)?;
        let verified = cert.verify();
        if ascii {
            let mut text = String::new();
            for (tab, label) in cert.tableaux.iter().zip(["case 1", "case 2", "case 3"]) {
                text.push_str(&format!("# {label}, row weights {:?}\n{}\n", tab.weights, tab.to_ascii()));
            }
            return Ok(Output::ok(text, if verified { 0 } else { 1 }));
        }
        let mut v = to_value(&cert);
        v["verified"] = json!(verified);
        return Ok(Output::json(&v, if verified { 0 } else { 1 }));
    }
    let missing = |name: &str| PcspError::Param(format!("tableau needs --{name} (or use `tableau refute`)"));
    let prop = args.prop.ok_or_else(|| missing("prop"))?;
    let case: Case = args.case.as_deref().ok_or_else(|| missing("case"))?.parse()?;
    let (k, t, d) = (
        args.k.ok_or_else(|| missing("k"))?,
        args.t.ok_or_else(|| missing("t"))?,
        args.d.ok_or_else(|| missing("d"))?,
    );
    let a = args.a.as_deref().map(parse_rational).transpose()?;
    let c = Construction::from_id(prop)?;
    let (tab, params) = build_case(c, case, k, t, d, a)?;
    let verified = verify_tableau(&tab);
    if args.ascii {
        return Ok(Output::ok(tab.to_ascii(), if verified { 0 } else { 1 }));
    }
    let mut v = json!({ "construction": c, "case": case, "verified": verified, "arity": tab.arity() });
    if let Some(p) = params {
        if let Value::Object(m) = to_value(&p) {
            for (key, val) in m {
                v[key] = val;
            }
        }
    }
    v["tableau"] = to_value(&tab);
    Ok(Output::json(&v, if verified { 0 } else { 1 }))
}

fn run_sweep(args: SweepArgs) -> Result<Output> {
    if args.k_max < 3 {
        return Err(PcspError::Param("--k-max must be at least 3".into()));
    }
    let rep = consistency_sweep(args.k_max)?;
    let mut v = to_value(&rep);
    let mut ok = rep.exceptions.is_empty();
    if let Some(bound) = args.search_arity {
        let mut disagreements = Vec::new();
        let mut searched = 0usize;
        for row in &rep.rows {
            let spec = TemplateSpec::new(Mode::Add, row.t, row.k, vec![crate::templates::prefix_tuple(row.d, row.k)])?;
            let tpl = build_template(&spec)?;
            match row.certificate_arity {
                Some(n) if n <= bound => {
                    searched += 1;
                    if exists_block_symmetric(&tpl.a, &tpl.b, n)?.is_some() {
                        disagreements.push(json!({"k": row.k, "t": row.t, "d": row.d, "arity": n}));
                    }
                }
                None => {
                    for n in (1..=bound.min(5)).step_by(2) {
                        searched += 1;
                        if exists_alternating(&tpl.a, &tpl.b, n)?.is_none() {
                            disagreements.push(json!({"k": row.k, "t": row.t, "d": row.d, "arity": n}));
                        }
                    }
                }
                _ => {}
            }
        }
        ok &= disagreements.is_empty();
        v["searches"] = json!(searched);
        v["search_disagreements"] = Value::Array(disagreements);
    }
    Ok(Output::json(&v, if ok { 0 } else { 1 }))
}
