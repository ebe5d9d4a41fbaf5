use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tropkern::control::{maupertuis_dp, maupertuis_dp_asym};
use tropkern::io::ProblemSpec;
use tropkern::kernels::is_tpsd_pairwise;
use tropkern::linear_theory::{is_idempotent, von_neumann_regular};
use tropkern::representer::{feasible_witnesses, SampleSet, WitnessOutcome};
use tropkern::{ClosedForm, ConjugationOp, GridFunction, KernelRep, Matrix, PointSet};

fn err(e: ::tropkern::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn closed_form(name: &str, scale: f64) -> PyResult<KernelRep> {
    let cf = match name {
        "conv" => ClosedForm::Conv,
        "sconv" => ClosedForm::Sconv { scale },
        "lip" => ClosedForm::Lip { scale },
        "dirac" => ClosedForm::Dirac,
        _ => return Err(PyValueError::new_err(format!("unknown kernel {name:?}"))),
    };
    Ok(KernelRep::ClosedForm(cf))
}

fn points(xs: &[f64]) -> PyResult<Arc<PointSet>> {
    PointSet::from_scalars(xs).map(Arc::new).map_err(err)
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_f64_rows(&rows).map_err(err)
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows().into_iter().map(|r| r.into_iter().map(|v| v.value()).collect()).collect()
}

/// Pairwise tpsd check of a symmetric gram matrix.
#[pyfunction]
#[pyo3(signature = (gram, tol = 1e-9))]
fn check_tpsd(gram: Vec<Vec<f64>>, tol: f64) -> PyResult<bool> {
    Ok(is_tpsd_pairwise(&matrix(gram)?, tol).map_err(err)?.is_none())
}

/// `(idempotent, von_neumann_regular)` for a square max-plus matrix.
#[pyfunction]
#[pyo3(signature = (m, tol = 1e-9))]
fn regularity(m: Vec<Vec<f64>>, tol: f64) -> PyResult<(bool, bool)> {
    let m = matrix(m)?;
    let idem = is_idempotent(&m, tol).map_err(err)?;
    Ok((idem, von_neumann_regular(&m, tol).map_err(err)?.regular))
}

/// Sesquilinear conjugate of `f` (given on `xs`) evaluated on `ys`.
#[pyfunction]
#[pyo3(signature = (kernel, xs, ys, f, scale = 1.0))]
fn conjugate(kernel: &str, xs: Vec<f64>, ys: Vec<f64>, f: Vec<f64>, scale: f64) -> PyResult<Vec<f64>> {
    let k = closed_form(kernel, scale)?;
    let dom = points(&xs)?;
    let op = ConjugationOp::new(&k, dom.clone(), points(&ys)?).map_err(err)?;
    let f = GridFunction::from_f64(dom, &f).map_err(err)?;
    Ok(op.conj_sesqui(&f).map_err(err)?.to_f64())
}

/// `(in_range, biconjugate)` of `g` on the square grid `xs`.
#[pyfunction]
#[pyo3(signature = (kernel, xs, g, scale = 1.0, tol = 1e-9))]
fn membership(kernel: &str, xs: Vec<f64>, g: Vec<f64>, scale: f64, tol: f64) -> PyResult<(bool, Vec<f64>)> {
    let pts = points(&xs)?;
    let op = ConjugationOp::square(&closed_form(kernel, scale)?, pts.clone()).map_err(err)?;
    let r = op.is_in_range(&GridFunction::from_f64(pts, &g).map_err(err)?, tol).map_err(err)?;
    Ok((r.in_range, r.biconjugate.to_f64()))
}

/// Witness points when the samples can be interpolated, else the 1-based
/// index of the first blocking sample.
#[pyfunction]
#[pyo3(signature = (kernel, xs, ys, dual_candidates, scale = 1.0))]
fn interpolate(
    kernel: &str,
    xs: Vec<f64>,
    ys: Vec<f64>,
    dual_candidates: Vec<f64>,
    scale: f64,
) -> PyResult<(bool, Vec<f64>)> {
    let s = SampleSet::new(points(&xs)?, ys, points(&dual_candidates)?).map_err(err)?;
    match feasible_witnesses(&s, &closed_form(kernel, scale)?).map_err(err)? {
        WitnessOutcome::Feasible { witnesses } => Ok((true, witnesses.iter().map(|&p| dual_candidates[p]).collect())),
        WitnessOutcome::Infeasible { blocking_index } => Ok((false, vec![(blocking_index + 1) as f64])),
    }
}

/// Maupertuis gram of a problem given as JSON.
#[pyfunction]
#[pyo3(signature = (problem_json, causal = false))]
fn maupertuis_gram(problem_json: &str, causal: bool) -> PyResult<Vec<Vec<f64>>> {
    let spec: ProblemSpec = serde_json::from_str(problem_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let p = spec.build().map_err(err)?;
    let g = if causal { maupertuis_dp_asym(&p) } else { maupertuis_dp(&p) };
    Ok(to_rows(&g.map_err(err)?))
}

#[pymodule(name = "tropkern")]
fn tropkern_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(check_tpsd, m)?)?;
    m.add_function(wrap_pyfunction!(regularity, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate, m)?)?;
    m.add_function(wrap_pyfunction!(membership, m)?)?;
    m.add_function(wrap_pyfunction!(interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(maupertuis_gram, m)?)?;
    Ok(())
}
