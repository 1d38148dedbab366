//! Python bindings. Reports come back as plain dicts and lists, built from
//! the same JSON the command line prints.

use pcsp_core::structures::{Homomorphism, RelStructure, Relation, Tuple};
use pcsp_core::templates::{bitstring, parse_bitstring, Mode, TemplateSpec};
use pcsp_core::{classify, polymorphisms, relax, solve, tableaux};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

create_exception!(pcsp_lab, PcspError, PyValueError);

fn err(e: pcsp_core::PcspError) -> PyErr {
    PcspError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<PyObject> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py(py),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_py(py),
            (_, Some(u)) => u.into_py(py),
            _ => n.as_f64().unwrap_or(f64::NAN).into_py(py),
        },
        Value::String(s) => s.into_py(py),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new_bound(py, items).into_py(py)
        }
        Value::Object(m) => {
            let d = PyDict::new_bound(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_py(py)
        }
    })
}

fn report<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    let json = serde_json::to_value(v).map_err(|e| PcspError::new_err(e.to_string()))?;
    to_py(py, &json)
}

fn rational(a: Option<&str>) -> PyResult<Option<tableaux::Rational>> {
    a.map(|s| s.trim().parse().map_err(|e| PcspError::new_err(format!("bad rational {s:?}: {e}"))))
        .transpose()
}

/// A finite relational structure over `0..domain_size`.
#[pyclass(name = "Structure", module = "pcsp_lab")]
#[derive(Clone)]
struct PyStructure {
    inner: RelStructure,
}

#[pymethods]
impl PyStructure {
    /// `relations` is a list of `(arity, tuples)` pairs.
    #[new]
    fn new(domain_size: usize, relations: Vec<(usize, Vec<Tuple>)>) -> PyResult<Self> {
        let rels = relations
            .into_iter()
            .map(|(arity, ts)| Relation::new(arity, ts))
            .collect::<pcsp_core::Result<Vec<_>>>()
            .map_err(err)?;
        Ok(PyStructure {
            inner: RelStructure::new(domain_size, rels).map_err(err)?,
        })
    }

    /// Boolean structure with one relation given by its tuples.
    #[staticmethod]
    fn boolean(tuples: Vec<Tuple>) -> PyResult<Self> {
        let arity = tuples.first().map(Vec::len).ok_or_else(|| PcspError::new_err("no tuples"))?;
        let rel = Relation::new(arity, tuples).map_err(err)?;
        Ok(PyStructure {
            inner: RelStructure::boolean(rel).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(s).map_err(|e| PcspError::new_err(e.to_string()))?;
        Ok(PyStructure { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("structures serialize")
    }

    #[getter]
    fn domain_size(&self) -> usize {
        self.inner.domain_size()
    }

    #[getter]
    fn signature(&self) -> Vec<usize> {
        self.inner.signature()
    }

    fn relation(&self, i: usize) -> PyResult<Vec<Tuple>> {
        if i >= self.inner.relations().len() {
            return Err(PcspError::new_err(format!("no relation {i}")));
        }
        Ok(self.inner.relation(i).iter().cloned().collect())
    }

    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    fn __repr__(&self) -> String {
        format!("Structure(domain_size={}, signature={:?})", self.inner.domain_size(), self.inner.signature())
    }
}

/// `t-in-k ∪ S` versus NAE (mode "add") or `t-in-k` versus `NAE ∖ S`
/// (mode "remove").
#[pyclass(name = "TemplateSpec", module = "pcsp_lab")]
#[derive(Clone)]
struct PyTemplateSpec {
    inner: TemplateSpec,
}

#[pymethods]
impl PyTemplateSpec {
    #[new]
    fn new(mode: &str, t: usize, k: usize, tuples: Vec<String>) -> PyResult<Self> {
        let mode = match mode {
            "add" => Mode::Add,
            "remove" => Mode::Remove,
            _ => return Err(PcspError::new_err(format!("mode must be 'add' or 'remove', got {mode:?}"))),
        };
        let s = tuples.iter().map(|b| parse_bitstring(b)).collect::<pcsp_core::Result<Vec<_>>>().map_err(err)?;
        Ok(PyTemplateSpec {
            inner: TemplateSpec::new(mode, t, k, s).map_err(err)?,
        })
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.mode.to_string()
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn tuples(&self) -> Vec<String> {
        self.inner.s.iter().map(|x| bitstring(x)).collect()
    }

    /// `(A, B)` of the template.
    fn structures(&self) -> PyResult<(PyStructure, PyStructure)> {
        let tpl = pcsp_core::templates::build_template(&self.inner).map_err(err)?;
        Ok((PyStructure { inner: tpl.a }, PyStructure { inner: tpl.b }))
    }

    #[pyo3(signature = (certify = false))]
    fn classify(&self, py: Python<'_>, certify: bool) -> PyResult<PyObject> {
        let r = match self.inner.mode {
            Mode::Add => classify::classify_add_with(&self.inner, certify),
            Mode::Remove => classify::classify_remove(&self.inner),
        }
        .map_err(err)?;
        report(py, &r)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("specs serialize")
    }

    fn __repr__(&self) -> String {
        format!(
            "TemplateSpec(mode={:?}, t={}, k={}, tuples={:?})",
            self.mode(),
            self.inner.t,
            self.inner.k,
            self.tuples()
        )
    }
}

#[pyfunction]
fn classify_csp(py: Python<'_>, t: usize, k: usize, tuples: Vec<Tuple>) -> PyResult<PyObject> {
    let rel = Relation::new(k, tuples).map_err(err)?;
    report(py, &classify::classify_csp_superset(t, k, &rel).map_err(err)?)
}

#[pyfunction]
fn schaefer_check(py: Python<'_>, b: &PyStructure) -> PyResult<PyObject> {
    report(py, &classify::schaefer_check(&b.inner).map_err(err)?)
}

/// Closure trace for case `"i"` through `"vii"`.
#[pyfunction]
fn closure_trace(py: Python<'_>, t: usize, k: usize, case: &str) -> PyResult<PyObject> {
    let case: classify::ClosureCase = case.parse().map_err(err)?;
    report(py, &classify::prop9_closure_trace(t, k, case).map_err(err)?)
}

#[pyfunction]
fn symmetrize(a: &PyStructure, b: &PyStructure) -> PyResult<PyStructure> {
    let (_, bp) = classify::symmetrize(&a.inner, &b.inner).map_err(err)?;
    Ok(PyStructure { inner: bp })
}

#[pyfunction]
#[pyo3(signature = (a, b, max_arity = 9))]
fn family_evidence(py: Python<'_>, a: &PyStructure, b: &PyStructure, max_arity: usize) -> PyResult<PyObject> {
    report(py, &classify::family_evidence(&a.inner, &b.inner, max_arity).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (k_max = 6))]
fn sweep(py: Python<'_>, k_max: usize) -> PyResult<PyObject> {
    report(py, &classify::consistency_sweep(k_max).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (k, t, d, a = None))]
fn refute(py: Python<'_>, k: usize, t: usize, d: usize, a: Option<&str>) -> PyResult<PyObject> {
    let cert = tableaux::refute_with(k, t, d, rational(a)?).map_err(err)?;
    let mut v = serde_json::to_value(&cert).expect("certificates serialize");
    v["verified"] = Value::Bool(cert.verify());
    to_py(py, &v)
}

/// One tableau of a construction (10 to 13) and case ("1", "2a", "3", ...).
#[pyfunction]
#[pyo3(signature = (prop, case, k, t, d, a = None))]
fn tableau(py: Python<'_>, prop: u8, case: &str, k: usize, t: usize, d: usize, a: Option<&str>) -> PyResult<PyObject> {
    let c = tableaux::Construction::from_id(prop).map_err(err)?;
    let case: tableaux::Case = case.parse().map_err(err)?;
    let (tab, params) = tableaux::build_case(c, case, k, t, d, rational(a)?).map_err(err)?;
    let mut v = serde_json::json!({
        "verified": tableaux::verify_tableau(&tab),
        "arity": tab.arity(),
        "ascii": tab.to_ascii(),
        "tableau": tab,
    });
    if let Some(p) = params {
        v["params"] = serde_json::to_value(&p).expect("parameters serialize");
    }
    to_py(py, &v)
}

#[pyfunction]
fn aip_decide(x: &PyStructure, a: &PyStructure) -> PyResult<bool> {
    Ok(relax::aip_decide(&x.inner, &a.inner).map_err(err)?.accepted())
}

#[pyfunction]
fn blp_decide(x: &PyStructure, a: &PyStructure) -> PyResult<bool> {
    Ok(relax::blp_decide(&x.inner, &a.inner).map_err(err)?.accepted())
}

#[pyfunction]
fn blp_aip(x: &PyStructure, a: &PyStructure) -> PyResult<bool> {
    Ok(relax::blp_aip(&x.inner, &a.inner).map_err(err)?.accepted())
}

#[pyfunction]
#[pyo3(name = "solve", signature = (x, spec, algorithm = "aip"))]
fn solve_instance(py: Python<'_>, x: &PyStructure, spec: &PyTemplateSpec, algorithm: &str) -> PyResult<PyObject> {
    let alg: solve::Algorithm = algorithm.parse().map_err(err)?;
    report(py, &solve::solve(&x.inner, &spec.inner, alg).map_err(err)?)
}

/// Solves `Σ vars = rhs (mod 2)` equations; free variables are 0.
#[pyfunction]
fn gf2_solve(n: usize, equations: Vec<(Vec<usize>, bool)>) -> PyResult<Option<Vec<u32>>> {
    let mut sys = solve::GF2System::new(n);
    for (vars, rhs) in &equations {
        sys.add_equation(vars, *rhs).map_err(err)?;
    }
    Ok(solve::gf2_solve(&sys).map(|a| a.values))
}

#[pyfunction]
fn find_homomorphism(x: &PyStructure, a: &PyStructure) -> PyResult<Option<Vec<u32>>> {
    Ok(pcsp_core::structures::find_homomorphism(&x.inner, &a.inner).map_err(err)?.map(|h| h.map))
}

#[pyfunction]
fn is_homomorphism(map: Vec<u32>, x: &PyStructure, a: &PyStructure) -> PyResult<bool> {
    pcsp_core::structures::is_homomorphism(&Homomorphism { map }, &x.inner, &a.inner).map_err(err)
}

/// Truth tables (bitstrings, input `0…0` first) of all `m`-ary polymorphisms.
#[pyfunction]
fn enumerate_polymorphisms(a: &PyStructure, b: &PyStructure, m: usize) -> PyResult<Vec<String>> {
    Ok(polymorphisms::enumerate_polymorphisms(&a.inner, &b.inner, m)
        .map_err(err)?
        .iter()
        .map(polymorphisms::BoolFn::table_string)
        .collect())
}

#[pyfunction]
fn exists_block_symmetric(py: Python<'_>, a: &PyStructure, b: &PyStructure, arity: usize) -> PyResult<PyObject> {
    match polymorphisms::exists_block_symmetric(&a.inner, &b.inner, arity).map_err(err)? {
        Some(f) => to_py(py, &f.to_json()),
        None => Ok(py.None()),
    }
}

#[pyfunction]
fn exists_alternating(py: Python<'_>, a: &PyStructure, b: &PyStructure, arity: usize) -> PyResult<PyObject> {
    match polymorphisms::exists_alternating(&a.inner, &b.inner, arity).map_err(err)? {
        Some(f) => to_py(py, &f.to_json()),
        None => Ok(py.None()),
    }
}

#[pymodule]
fn pcsp_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PcspError", m.py().get_type_bound::<PcspError>())?;
    m.add_class::<PyStructure>()?;
    m.add_class::<PyTemplateSpec>()?;
    m.add_function(wrap_pyfunction!(classify_csp, m)?)?;
    m.add_function(wrap_pyfunction!(schaefer_check, m)?)?;
    m.add_function(wrap_pyfunction!(closure_trace, m)?)?;
    m.add_function(wrap_pyfunction!(symmetrize, m)?)?;
    m.add_function(wrap_pyfunction!(family_evidence, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(refute, m)?)?;
    m.add_function(wrap_pyfunction!(tableau, m)?)?;
    m.add_function(wrap_pyfunction!(aip_decide, m)?)?;
    m.add_function(wrap_pyfunction!(blp_decide, m)?)?;
    m.add_function(wrap_pyfunction!(blp_aip, m)?)?;
    m.add_function(wrap_pyfunction!(solve_instance, m)?)?;
    m.add_function(wrap_pyfunction!(gf2_solve, m)?)?;
    m.add_function(wrap_pyfunction!(find_homomorphism, m)?)?;
    m.add_function(wrap_pyfunction!(is_homomorphism, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_polymorphisms, m)?)?;
    m.add_function(wrap_pyfunction!(exists_block_symmetric, m)?)?;
    m.add_function(wrap_pyfunction!(exists_alternating, m)?)?;
    Ok(())
}
