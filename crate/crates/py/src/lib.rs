use std::sync::{Arc, Mutex};

use appell_core::io::{from_json, to_canonical_json, AppellTables, KernelFile};
use appell_core::multi_index::multi_indices_up_to;
use appell_core::operators::{max_block_relative_error, BlackboxOptions};
use appell_core::transforms::{c_transform_series, inverse_s, s_transform, s_transform_series, BoundKind, Locality};
use appell_core::{
    AppellSystem, ChaosFunctional, ChaosVector, ComponentMeasure, HilbertScale, OperatorKernel, PowerSeries,
    ProductMeasure, SymTensor, C64,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: appell_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn tensors(d: usize, coeffs: Vec<Vec<C64>>) -> PyResult<Vec<SymTensor>> {
    coeffs
        .into_iter()
        .enumerate()
        .map(|(n, c)| SymTensor::from_coeffs(d, n, c).map_err(err))
        .collect()
}

fn raw(ts: &[SymTensor]) -> Vec<Vec<C64>> {
    ts.iter().map(|t| t.coeffs().to_vec()).collect()
}

/// Appell system of a product measure, truncated at degree `N`.
#[pyclass(name = "AppellSystem", module = "appell", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySystem(Arc<AppellSystem>);

#[pymethods]
impl PySystem {
    /// `measures` is a JSON list such as `[{"kind": "poisson", "rate": 1.0}]`.
    #[new]
    #[pyo3(signature = (measures, order, weights=None))]
    fn new(measures: &str, order: usize, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let comps: Vec<ComponentMeasure> = from_json(measures).map_err(err)?;
        let scale = match weights {
            Some(w) => HilbertScale::new(w).map_err(err)?,
            None => HilbertScale::default_for(comps.len()),
        };
        let m = ProductMeasure::new(comps).map_err(err)?;
        Ok(PySystem(AppellSystem::build(m, order, scale).map_err(err)?))
    }

    #[staticmethod]
    fn standard_gaussian(d: usize, order: usize) -> Self {
        PySystem(AppellSystem::standard_gaussian(d, order))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    /// Multi-indices `|α| ≤ N` in graded-lex order.
    fn multi_indices(&self) -> Vec<Vec<u32>> {
        multi_indices_up_to(self.0.dim(), self.0.order())
            .into_iter()
            .map(|a| a.entries().to_vec())
            .collect()
    }

    /// Monomial coefficients of `P_γ`, graded-lex.
    fn p_polynomial(&self, gamma: Vec<u32>) -> PyResult<Vec<C64>> {
        if gamma.len() != self.0.dim() {
            return Err(PyValueError::new_err("gamma has the wrong length"));
        }
        let idx = appell_core::MultiIndex::new(gamma);
        Ok(self.0.p_entry_polynomial(&idx).coeffs().to_vec())
    }

    fn p_tensor(&self, n: usize, x: Vec<C64>) -> PyResult<Vec<C64>> {
        Ok(self.0.p_tensor(n, &x).map_err(err)?.coeffs().to_vec())
    }

    fn e_vector(&self, eta: Vec<C64>) -> PyResult<PyChaosVector> {
        Ok(PyChaosVector(self.0.e_vector(&eta).map_err(err)?))
    }

    fn rho(&self, xi: Vec<C64>) -> PyResult<PyChaosFunctional> {
        Ok(PyChaosFunctional(self.0.rho(&xi).map_err(err)?))
    }

    fn q_pair(&self, big_phi: &PyChaosFunctional, phi: &PyChaosVector) -> PyResult<C64> {
        self.0.q_pair(&big_phi.0, &phi.0).map_err(err)
    }

    /// Same pairing computed from the moments of the measure.
    fn q_pair_by_moments(&self, big_phi: &PyChaosFunctional, phi: &PyChaosVector) -> PyResult<C64> {
        self.0.q_pair_by_moments(&big_phi.0, &phi.0).map_err(err)
    }

    fn tables_json(&self) -> PyResult<String> {
        to_canonical_json(&AppellTables::of(&self.0)).map_err(err)
    }

    fn __repr__(&self) -> String {
        let names: Vec<&str> = self.0.measure().components().iter().map(|c| c.name()).collect();
        format!("AppellSystem(d={}, N={}, measures={:?})", self.0.dim(), self.0.order(), names)
    }
}

/// `φ = Σ ⟨P_n, φ_n⟩`, one coefficient list per degree.
#[pyclass(name = "ChaosVector", module = "appell", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChaosVector(ChaosVector);

#[pymethods]
impl PyChaosVector {
    #[new]
    fn new(system: &PySystem, coeffs: Vec<Vec<C64>>) -> PyResult<Self> {
        let ts = tensors(system.0.dim(), coeffs)?;
        Ok(PyChaosVector(ChaosVector::new(system.0.clone(), ts).map_err(err)?))
    }

    /// Expands a polynomial given by graded-lex monomial coefficients.
    #[staticmethod]
    fn from_polynomial(system: &PySystem, coeffs: Vec<C64>) -> PyResult<Self> {
        let poly = PowerSeries::from_coeffs(system.0.dim(), system.0.order(), coeffs).map_err(err)?;
        Ok(PyChaosVector(ChaosVector::to_appell(&poly, system.0.clone()).map_err(err)?))
    }

    #[getter]
    fn system(&self) -> PySystem {
        PySystem(self.0.system().clone())
    }

    fn coeffs(&self) -> Vec<Vec<C64>> {
        raw(self.0.coeffs())
    }

    fn eval(&self, x: Vec<C64>) -> PyResult<C64> {
        self.0.eval(&x).map_err(err)
    }

    fn to_monomial(&self) -> Vec<C64> {
        self.0.to_monomial().coeffs().to_vec()
    }

    fn test_norm(&self, p: i32, q: i32) -> f64 {
        self.0.test_norm(p, q)
    }

    fn c_transform(&self, xi: Vec<C64>) -> PyResult<C64> {
        c_transform_series(&self.0, &xi).map_err(err)
    }

    fn embed_l2(&self) -> PyResult<PyChaosFunctional> {
        Ok(PyChaosFunctional(self.0.embed_l2().map_err(err)?))
    }
}

/// `Φ = Σ Q_n(Φ_n)` in the dual space.
#[pyclass(name = "ChaosFunctional", module = "appell", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChaosFunctional(ChaosFunctional);

#[pymethods]
impl PyChaosFunctional {
    #[new]
    fn new(system: &PySystem, coeffs: Vec<Vec<C64>>) -> PyResult<Self> {
        let ts = tensors(system.0.dim(), coeffs)?;
        Ok(PyChaosFunctional(ChaosFunctional::new(system.0.clone(), ts).map_err(err)?))
    }

    #[getter]
    fn system(&self) -> PySystem {
        PySystem(self.0.system().clone())
    }

    fn coeffs(&self) -> Vec<Vec<C64>> {
        raw(self.0.coeffs())
    }

    fn dual_norm(&self, p: i32, q: i32) -> f64 {
        self.0.dual_norm(p, q)
    }

    /// S-transform at `θ`; with `(p, q)` given, `θ` must lie in `U_{p,q}`.
    #[pyo3(signature = (theta, p=None, q=None))]
    fn s_transform(&self, theta: Vec<C64>, p: Option<i32>, q: Option<i32>) -> PyResult<C64> {
        let loc = match (p, q) {
            (Some(p), Some(q)) => Some(Locality::new(p, q, BoundKind::TestSpace)),
            (None, None) => None,
            _ => return Err(PyValueError::new_err("give both p and q or neither")),
        };
        s_transform(&self.0, &theta, loc.as_ref()).map_err(err)
    }

    /// Round trip through the S-transform germ.
    fn s_round_trip(&self) -> PyResult<PyChaosFunctional> {
        let germ = s_transform_series(&self.0);
        Ok(PyChaosFunctional(inverse_s(&germ, self.0.system().clone()).map_err(err)?))
    }
}

/// Operator kernel `{f_{m,n}}` between two Appell systems.
#[pyclass(name = "OperatorKernel", module = "appell", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKernel(OperatorKernel);

#[pymethods]
impl PyKernel {
    #[staticmethod]
    fn zero(sys_in: &PySystem, sys_out: &PySystem) -> PyResult<Self> {
        Ok(PyKernel(OperatorKernel::zero(sys_in.0.clone(), sys_out.0.clone()).map_err(err)?))
    }

    #[staticmethod]
    fn constant(sys_in: &PySystem, sys_out: &PySystem, value: C64) -> PyResult<Self> {
        Ok(PyKernel(
            OperatorKernel::constant(sys_in.0.clone(), sys_out.0.clone(), value).map_err(err)?,
        ))
    }

    #[staticmethod]
    fn measure_change(sys_in: &PySystem, sys_out: &PySystem) -> PyResult<Self> {
        Ok(PyKernel(
            OperatorKernel::measure_change(sys_in.0.clone(), sys_out.0.clone()).map_err(err)?,
        ))
    }

    /// `D(Φ_k)` for a degree-`k` coefficient list.
    #[staticmethod]
    fn d_operator(system: &PySystem, k: usize, phi_k: Vec<C64>) -> PyResult<Self> {
        let t = SymTensor::from_coeffs(system.0.dim(), k, phi_k).map_err(err)?;
        Ok(PyKernel(OperatorKernel::d_operator(system.0.clone(), &t).map_err(err)?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: KernelFile = from_json(text).map_err(err)?;
        Ok(PyKernel(file.to_kernel().map_err(err)?))
    }

    fn to_json(&self) -> PyResult<String> {
        to_canonical_json(&KernelFile::from_kernel(&self.0).map_err(err)?).map_err(err)
    }

    fn apply(&self, phi: &PyChaosVector) -> PyResult<PyChaosVector> {
        Ok(PyChaosVector(self.0.apply(&phi.0).map_err(err)?))
    }

    fn symbol(&self, xi: Vec<C64>, eta: Vec<C64>) -> PyResult<C64> {
        self.0.cs_symbol(&xi, &eta).map_err(err)
    }

    fn symbol_by_pairing(&self, xi: Vec<C64>, eta: Vec<C64>) -> PyResult<C64> {
        self.0.symbol_by_pairing(&xi, &eta).map_err(err)
    }

    /// Exact reconstruction from the symbol's Taylor coefficients.
    fn round_trip(&self) -> PyResult<PyKernel> {
        let germ = self.0.symbol_series();
        Ok(PyKernel(
            OperatorKernel::reconstruct_exact(&germ, self.0.sys_in().clone(), self.0.sys_out().clone())
                .map_err(err)?,
        ))
    }

    fn max_abs_difference(&self, other: &PyKernel) -> PyResult<f64> {
        self.0.max_abs_difference(&other.0).map_err(err)
    }

    fn max_block_relative_error(&self, reference: &PyKernel) -> PyResult<f64> {
        max_block_relative_error(&self.0, &reference.0).map_err(err)
    }

    /// Rebuilds a kernel from a callable `symbol(xi, eta) -> complex`.
    /// Returns the kernel and `(residual, convergence, evaluations)`.
    #[staticmethod]
    fn reconstruct_blackbox(
        py: Python<'_>,
        symbol: Py<PyAny>,
        sys_in: &PySystem,
        sys_out: &PySystem,
        max_degree: usize,
    ) -> PyResult<(PyKernel, (f64, f64, usize))> {
        let failure: Mutex<Option<PyErr>> = Mutex::new(None);
        let f = |xi: &[C64], eta: &[C64]| -> C64 {
            Python::attach(|py| {
                match symbol.call1(py, (xi.to_vec(), eta.to_vec())).and_then(|v| v.extract::<C64>(py)) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        C64::new(f64::NAN, f64::NAN)
                    }
                }
            })
        };
        let (a, b) = (sys_in.0.clone(), sys_out.0.clone());
        let opts = BlackboxOptions::new(max_degree);
        let result = py.detach(|| OperatorKernel::reconstruct_blackbox(f, a, b, &opts));
        if let Some(e) = failure.into_inner().map_err(|_| PyRuntimeError::new_err("poisoned lock"))? {
            return Err(e);
        }
        let (k, report) = result.map_err(err)?;
        Ok((PyKernel(k), (report.residual, report.convergence, report.evaluations)))
    }
}

#[pymodule]
fn appell(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyChaosVector>()?;
    m.add_class::<PyChaosFunctional>()?;
    m.add_class::<PyKernel>()?;
    Ok(())
}
