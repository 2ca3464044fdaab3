//! Python bindings: loops, Wilson-loop phases, the coupled-oscillator phase
//! report, the elliptic bound, the dynamics oracles and the experiment runner.

use std::cell::RefCell;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use holonomy::cli::{run_config, ExperimentConfig};
use holonomy::dynamics_oracle::{
    extract_geometric_phase, extract_hannay_angle, propagate_classical, propagate_quantum, DEFAULT_STEPS_PER_SAMPLE,
};
use holonomy::hybrid_pipeline::{self, Branch};
use holonomy::manifold::{standard_parameter_loops, subsystem_parameter_loops, DEFAULT_SAMPLES};
use holonomy::models::{spin_cone_loop, spin_family};
use holonomy::quantum_geometry::{self, berry_and_hannay, eigenframe_along_loop};
use holonomy::{HolonomyError, LoopSpec, StandardLoopParams};

create_exception!(holonomy, HolonomyException, PyException, "Raised for every library error; `args[0]` is the error kind.");

fn err(e: HolonomyError) -> PyErr {
    HolonomyException::new_err((e.kind(), e.to_string()))
}

/// Closed parameter loop sampled uniformly over one period.
#[pyclass(name = "Loop", module = "holonomy", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyLoop {
    inner: LoopSpec,
}

#[pymethods]
impl PyLoop {
    /// Samples `f(t) -> list[float]` at `n_samples` points of `[0, period)`.
    #[staticmethod]
    #[pyo3(signature = (f, period = 1.0, n_samples = DEFAULT_SAMPLES, cycles = 1))]
    fn from_callable(f: &Bound<'_, PyAny>, period: f64, n_samples: usize, cycles: usize) -> PyResult<Self> {
        let failure: RefCell<Option<PyErr>> = RefCell::new(None);
        let built = LoopSpec::from_fn(
            |t| {
                if failure.borrow().is_some() {
                    return vec![0.0];
                }
                match f.call1((t,)).and_then(|v| v.extract::<Vec<f64>>()) {
                    Ok(v) => v,
                    Err(e) => {
                        *failure.borrow_mut() = Some(e);
                        vec![0.0]
                    }
                }
            },
            period,
            n_samples,
            cycles,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        built.map(|inner| Self { inner }).map_err(err)
    }

    /// Field loop on a cone of half-angle `theta` about the third axis.
    #[staticmethod]
    #[pyo3(signature = (theta, b = 1.0, n_samples = DEFAULT_SAMPLES, cycles = 1))]
    fn cone(theta: f64, b: f64, n_samples: usize, cycles: usize) -> PyResult<Self> {
        spin_cone_loop(theta, b, n_samples, cycles).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period()
    }

    #[getter]
    fn cycles(&self) -> usize {
        self.inner.cycles()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.points().map(<[f64]>::to_vec).collect()
    }

    fn reversed(&self) -> Self {
        Self {
            inner: self.inner.reversed(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Loop(dim={}, samples={}, period={}, cycles={})",
            self.inner.dim(),
            self.inner.len(),
            self.inner.period(),
            self.inner.cycles()
        )
    }
}

/// Parameters of the standard coupled-oscillator loop.
#[pyclass(name = "StandardLoopParams", module = "holonomy", skip_from_py_object)]
#[derive(Clone)]
pub struct PyParams {
    inner: StandardLoopParams,
}

macro_rules! param_accessors {
    ($($field:ident: $ty:ty),*) => {
        #[pymethods]
        impl PyParams {
            #[new]
            #[pyo3(signature = (**kwargs))]
            fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
                let mut inner = StandardLoopParams::default();
                if let Some(kw) = kwargs {
                    for (key, value) in kw.iter() {
                        let key: String = key.extract()?;
                        match key.as_str() {
                            $(stringify!($field) => inner.$field = value.extract()?,)*
                            other => {
                                return Err(pyo3::exceptions::PyTypeError::new_err(format!("unknown parameter `{other}`")))
                            }
                        }
                    }
                }
                inner = inner.with_ratio(inner.ratio.0, inner.ratio.1);
                inner.validate().map_err(err)?;
                Ok(Self { inner })
            }

            $(
                #[getter]
                fn $field(&self) -> $ty {
                    self.inner.$field
                }
            )*

            /// Copy with the coupling set from the reduced value `D`.
            fn with_d(&self, d: f64) -> Self {
                let mut inner = self.inner;
                inner.k = d * inner.k_scale();
                Self { inner }
            }

            #[getter]
            fn d_coupling(&self) -> f64 {
                self.inner.d_coupling()
            }

            #[getter]
            fn elliptic_margin(&self) -> f64 {
                self.inner.elliptic_margin()
            }

            fn __repr__(&self) -> String {
                format!("{:?}", self.inner)
            }
        }
    };
}

param_accessors!(
    a1: f64,
    a2: f64,
    mu1: f64,
    mu2: f64,
    base_rate: f64,
    ratio: (u32, u32),
    epsilon: f64,
    k: f64,
    j_action: f64,
    hbar: f64,
    n_level: u32
);

/// Wilson-loop Berry phases `(gamma_1, gamma_2)` of a spin driven around a field loop.
#[pyfunction]
#[pyo3(signature = (b_loop, mu = 1.0))]
fn spin_berry_phases(b_loop: &PyLoop, mu: f64) -> PyResult<(f64, f64)> {
    let frame = eigenframe_along_loop(&spin_family(mu), &b_loop.inner, None).map_err(err)?;
    let g1 = berry_and_hannay(&frame, 0).map_err(err)?;
    let g2 = berry_and_hannay(&frame, 1).map_err(err)?;
    Ok((g1.berry, g2.berry))
}

/// Closed-form Hannay angle of spin level 1 or 2.
#[pyfunction]
fn spin_hannay_closed_form(b_loop: &PyLoop, level: usize) -> PyResult<f64> {
    quantum_geometry::spin_hannay_closed_form(&b_loop.inner, level)
        .map(|q| q.value)
        .map_err(err)
}

#[pyfunction]
fn wrap_angle(a: f64) -> f64 {
    quantum_geometry::wrap_angle(a)
}

/// `(D_max, K_max)`.
#[pyfunction]
fn elliptic_bound(params: &PyParams) -> (f64, f64) {
    hybrid_pipeline::elliptic_bound(&params.inner)
}

#[pyfunction]
fn uncoupled_gho_phase(n: u32, epsilon: f64, cycles1: usize) -> f64 {
    hybrid_pipeline::uncoupled_gho_phase(n, epsilon, cycles1)
}

/// Phase report on the standard loop as a dict; `branch` is `"subsystem"`, `"common"` or `None` (automatic).
#[pyfunction]
#[pyo3(signature = (params, n_samples = DEFAULT_SAMPLES, branch = None))]
fn standard_loop_report<'py>(
    py: Python<'py>,
    params: &PyParams,
    n_samples: usize,
    branch: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = match branch {
        None => hybrid_pipeline::standard_loop_report(&params.inner, n_samples),
        Some("subsystem") => hybrid_pipeline::standard_loop_report_on(&params.inner, n_samples, Branch::Subsystem),
        Some("common") => hybrid_pipeline::standard_loop_report_on(&params.inner, n_samples, Branch::Common),
        Some(other) => return Err(pyo3::exceptions::PyValueError::new_err(format!("unknown branch `{other}`"))),
    }
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("gamma", r.gamma.clone())?;
    d.set_item("gamma_n", r.gamma_n())?;
    d.set_item("delta_phi", r.delta_phi)?;
    d.set_item("gamma_0_part", r.gamma_0_part)?;
    d.set_item("gamma_i_part", r.gamma_i_part)?;
    d.set_item("delta_phi_0_part", r.delta_phi_0_part)?;
    d.set_item("delta_phi_i_part", r.delta_phi_i_part)?;
    d.set_item("gamma_i_approx", r.gamma_i_approx)?;
    d.set_item("delta_phi_i_approx", r.delta_phi_i_approx)?;
    d.set_item("elliptic_margin", r.elliptic_margin)?;
    d.set_item("quadrature_error", r.quadrature_error)?;
    d.set_item("branch", r.branch.as_str())?;
    Ok(d)
}

/// Berry phase of the fully quantum coupled oscillators in normal-mode state `(m, n)`.
#[pyfunction]
#[pyo3(signature = (params, m, n, n_samples = DEFAULT_SAMPLES))]
fn full_quantum_phase(params: &PyParams, m: u32, n: u32, n_samples: usize) -> PyResult<f64> {
    let (l1, l2) = standard_parameter_loops(&params.inner, n_samples).map_err(err)?;
    hybrid_pipeline::full_quantum_phase(&l1, &l2, params.inner.k, m, n)
        .map(|q| q.value)
        .map_err(err)
}

/// Born-Oppenheimer phase `(light, heavy)` with heavy level `m` and light level `n`.
#[pyfunction]
#[pyo3(signature = (params, m, n, n_samples = DEFAULT_SAMPLES))]
fn bo_full_quantum_phase(params: &PyParams, m: u32, n: u32, n_samples: usize) -> PyResult<(f64, f64)> {
    let (l1, l2) = standard_parameter_loops(&params.inner, n_samples).map_err(err)?;
    let bo = hybrid_pipeline::bo_full_quantum_phase(&l1, &l2, params.inner.k, m, n).map_err(err)?;
    Ok((bo.light.value, bo.heavy.value))
}

/// Propagates a spin around `b_loop` and returns the extracted Berry phase with diagnostics.
#[pyfunction]
#[pyo3(signature = (b_loop, slowness, level = 0, mu = 1.0, steps_per_sample = DEFAULT_STEPS_PER_SAMPLE))]
fn quantum_oracle<'py>(
    py: Python<'py>,
    b_loop: &PyLoop,
    slowness: f64,
    level: usize,
    mu: f64,
    steps_per_sample: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let lp = b_loop.inner.clone();
    let (gamma, prop) = py
        .detach(move || {
            let prop = propagate_quantum(&spin_family(mu), &lp, level, slowness, steps_per_sample)?;
            let gamma = extract_geometric_phase(&prop, &prop.cycle_marks[0].0)?;
            Ok::<_, HolonomyError>((gamma, prop))
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("gamma", gamma)?;
    d.set_item("fidelity", prop.fidelity)?;
    d.set_item("norm_drift", prop.norm_drift)?;
    d.set_item("dynamical_phase", prop.dynamical_phase)?;
    Ok(d)
}

/// Drives the second oscillator of `params` over its own period and returns the Hannay angle.
#[pyfunction]
#[pyo3(signature = (params, slowness, initial = (1.0, 0.0), n_samples = 2048, steps_per_sample = 8))]
fn classical_oracle<'py>(
    py: Python<'py>,
    params: &PyParams,
    slowness: f64,
    initial: (f64, f64),
    n_samples: usize,
    steps_per_sample: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let traj = py
        .detach(move || {
            let lp = subsystem_parameter_loops(&p, n_samples)?.1;
            propagate_classical(&lp, initial, slowness, steps_per_sample)
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("delta_phi", extract_hannay_angle(&traj))?;
    d.set_item("action_drift", traj.max_action_drift())?;
    d.set_item("dynamical_angle", traj.dynamical_angle)?;
    Ok(d)
}

/// Runs a JSON experiment config and returns `(csv_path, failed_rows)`.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir = None))]
fn run_experiment(py: Python<'_>, config_json: &str, out_dir: Option<PathBuf>) -> PyResult<(PathBuf, usize)> {
    let mut cfg = ExperimentConfig::from_json(config_json)
        .map_err(|e| HolonomyException::new_err((e.kind(), e.to_string())))?;
    if let Some(d) = out_dir {
        cfg.output.directory = d;
    }
    let out = py
        .detach(|| run_config(&cfg, true))
        .map_err(|e| HolonomyException::new_err((e.kind(), e.to_string())))?;
    Ok((out.files[0].clone(), out.failures()))
}

#[pymodule]
#[pyo3(name = "holonomy")]
fn holonomy_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HolonomyException", m.py().get_type::<HolonomyException>())?;
    m.add_class::<PyLoop>()?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(spin_berry_phases, m)?)?;
    m.add_function(wrap_pyfunction!(spin_hannay_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(wrap_angle, m)?)?;
    m.add_function(wrap_pyfunction!(elliptic_bound, m)?)?;
    m.add_function(wrap_pyfunction!(uncoupled_gho_phase, m)?)?;
    m.add_function(wrap_pyfunction!(standard_loop_report, m)?)?;
    m.add_function(wrap_pyfunction!(full_quantum_phase, m)?)?;
    m.add_function(wrap_pyfunction!(bo_full_quantum_phase, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(classical_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
