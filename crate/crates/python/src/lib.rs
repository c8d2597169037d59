//! Python bindings: parameters, trajectory ensembles, the Fokker-Planck
//! solver, fixed points and histogram diagnostics.

use std::fs::File;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use zeno_dimer::fokker_planck::{fp_stationary, PdfGrid};
use zeno_dimer::histogram::{empty_regions, marginal, occupied_fraction, product_of_marginals, tv_distance};
use zeno_dimer::{io, Backend, DimerError, Histogram2D, Site};

fn err(e: DimerError) -> PyErr {
    match e {
        DimerError::InvalidParameter(_) => PyValueError::new_err(e.to_string()),
        DimerError::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn backend(name: &str) -> PyResult<Backend> {
    Backend::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown backend {name:?}")))
}

fn site(name: &str) -> PyResult<Site> {
    match name {
        "left" | "L" => Ok(Site::Left),
        "right" | "R" => Ok(Site::Right),
        _ => Err(PyValueError::new_err(format!("site must be 'left' or 'right', got {name:?}"))),
    }
}

#[pyclass(name = "SimParams", module = "zeno_dimer", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySimParams(zeno_dimer::SimParams);

#[pymethods]
impl PySimParams {
    /// Strengths as `lambda1`/`lambda2` or as rates `gamma1`/`gamma2`, not both.
    #[new]
    #[pyo3(signature = (lambda1=None, lambda2=None, *, gamma1=None, gamma2=None, omega_s=1.0, dt=1e-3, t_final=20.0, n_traj=1000, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        lambda1: Option<f64>,
        lambda2: Option<f64>,
        gamma1: Option<f64>,
        gamma2: Option<f64>,
        omega_s: f64,
        dt: f64,
        t_final: f64,
        n_traj: u64,
        seed: u64,
    ) -> PyResult<Self> {
        let by_lambda = lambda1.is_some() || lambda2.is_some();
        let by_rate = gamma1.is_some() || gamma2.is_some();
        if by_lambda && by_rate {
            return Err(PyValueError::new_err("give lambda or gamma, not both"));
        }
        let base = zeno_dimer::SimParams {
            omega_s,
            ..Default::default()
        }
        .with_time(dt, t_final)
        .with_trajectories(n_traj, seed);
        let p = if by_rate {
            base.with_rates(gamma1.unwrap_or(0.0), gamma2.unwrap_or(0.0))
        } else {
            base.with_lambdas(lambda1.unwrap_or(0.0), lambda2.unwrap_or(0.0))
        };
        p.validate().map_err(err)?;
        Ok(Self(p))
    }

    #[getter]
    fn lambda1(&self) -> f64 {
        self.0.lambda1()
    }
    #[getter]
    fn lambda2(&self) -> f64 {
        self.0.lambda2()
    }
    #[getter]
    fn gamma1(&self) -> f64 {
        self.0.gamma1
    }
    #[getter]
    fn gamma2(&self) -> f64 {
        self.0.gamma2
    }
    #[getter]
    fn omega_s(&self) -> f64 {
        self.0.omega_s
    }
    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt
    }
    #[getter]
    fn t_final(&self) -> f64 {
        self.0.t_final
    }
    #[getter]
    fn n_traj(&self) -> u64 {
        self.0.n_traj
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.0.master_seed
    }
    #[getter]
    fn n_steps(&self) -> u64 {
        self.0.n_steps()
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "SimParams(lambda1={}, lambda2={}, omega_s={}, dt={}, t_final={}, n_traj={}, seed={})",
            p.lambda1(),
            p.lambda2(),
            p.omega_s,
            p.dt,
            p.t_final,
            p.n_traj,
            p.master_seed
        )
    }
}

/// Angle histogram on the `n × n` torus.
#[pyclass(name = "Histogram", module = "zeno_dimer", frozen)]
struct PyHistogram(Histogram2D);

#[pymethods]
impl PyHistogram {
    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }
    #[getter]
    fn total(&self) -> u64 {
        self.0.total()
    }
    #[getter]
    fn backend(&self) -> &'static str {
        self.0.meta.backend.as_str()
    }

    /// Row-major counts, row index along `theta_L`.
    fn counts(&self) -> Vec<u64> {
        self.0.counts().to_vec()
    }

    fn densities(&self) -> Vec<f64> {
        self.0.densities()
    }

    /// Normalized marginal density of `"left"` or `"right"`.
    fn marginal(&self, which: &str) -> PyResult<Vec<f64>> {
        Ok(marginal(&self.0, site(which)?).map_err(err)?.densities)
    }

    fn occupied_fraction(&self) -> f64 {
        occupied_fraction(&self.0, None)
    }

    /// Sizes of the connected empty regions, periodic 4-neighbourhood.
    fn empty_region_sizes(&self) -> Vec<usize> {
        empty_regions(&self.0).iter().map(Vec::len).collect()
    }

    fn tv_distance(&self, other: &PyHistogram) -> PyResult<f64> {
        tv_distance(&self.0, &other.0).map_err(err)
    }

    fn tv_to_transpose(&self) -> PyResult<f64> {
        tv_distance(&self.0, &self.0.transposed()).map_err(err)
    }

    fn tv_to_product(&self) -> PyResult<f64> {
        tv_distance(&self.0, &product_of_marginals(&self.0).map_err(err)?).map_err(err)
    }

    fn write(&self, path: &str) -> PyResult<()> {
        io::write_file(path.as_ref(), |w| io::write_histogram(w, &self.0)).map_err(err)
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        let f = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Ok(Self(io::read_histogram(f).map_err(err)?))
    }
}

/// Stationary Fokker-Planck density.
#[pyclass(name = "FpSolution", module = "zeno_dimer", frozen)]
struct PyFpSolution {
    grid: PdfGrid,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    steps: u64,
    #[pyo3(get)]
    residual: f64,
    #[pyo3(get)]
    max_mass_error: f64,
}

#[pymethods]
impl PyFpSolution {
    #[getter]
    fn n(&self) -> usize {
        self.grid.n
    }
    #[getter]
    fn time(&self) -> f64 {
        self.grid.time
    }
    #[getter]
    fn mass(&self) -> f64 {
        self.grid.mass()
    }

    /// Row-major cell averages of the density.
    fn densities(&self) -> Vec<f64> {
        let n = self.grid.n;
        (0..n * n).map(|k| self.grid.density(k / n, k % n)).collect()
    }

    /// Block-averaged copy on an `n / factor` grid.
    fn coarsen(&self, factor: usize) -> PyResult<Self> {
        Ok(Self {
            grid: self.grid.coarsen(factor).map_err(err)?,
            ..*self
        })
    }

    fn tv_distance(&self, h: &PyHistogram) -> PyResult<f64> {
        tv_distance(&self.grid, &h.0).map_err(err)
    }
}

/// Result of [`run_ensemble`].
#[pyclass(name = "EnsembleResult", module = "zeno_dimer", frozen)]
struct PyEnsemble(zeno_dimer::EnsembleResult);

#[pymethods]
impl PyEnsemble {
    #[getter]
    fn histogram(&self) -> PyHistogram {
        PyHistogram(self.0.histogram.clone())
    }

    /// TV distance between the even- and odd-indexed halves.
    fn split_floor(&self) -> PyResult<f64> {
        self.0.split_floor().map_err(err)
    }

    fn averages<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let a = self.0.stats.averages().map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("fidelity_mean", a.fidelity_mean)?;
        d.set_item("fidelity_se", a.fidelity_se)?;
        d.set_item("entropy_mean", a.entropy_mean)?;
        d.set_item("entropy_se", a.entropy_se)?;
        d.set_item("n_samples", a.n_samples)?;
        d.set_item("n_excluded", a.n_excluded)?;
        d.set_item("readout_totals", a.readout_totals.to_vec())?;
        Ok(d)
    }
}

/// Runs `params.n_traj` trajectories of `"exact"`, `"gutzwiller"` or `"sse"`.
#[pyfunction]
#[pyo3(signature = (params, backend_name, bins=72))]
fn run_ensemble(py: Python<'_>, params: PyRef<'_, PySimParams>, backend_name: &str, bins: usize) -> PyResult<PyEnsemble> {
    let b = backend(backend_name)?;
    let p = params.0;
    py.detach(|| zeno_dimer::run_ensemble(&p, b, bins)).map(PyEnsemble).map_err(err)
}

/// Final state of a single trajectory as a dict.
#[pyfunction]
fn run_trajectory<'py>(
    py: Python<'py>,
    params: PyRef<'_, PySimParams>,
    backend_name: &str,
    index: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.0;
    let s = match backend(backend_name)? {
        Backend::Exact => zeno_dimer::run_exact_trajectory(&p, index).map_err(err)?,
        Backend::Gutzwiller => zeno_dimer::run_gw_trajectory(&p, index),
        Backend::Sse => {
            let sse = zeno_dimer::SseParams::new(p).map_err(err)?;
            zeno_dimer::run_sse_trajectory(&sse, index).map_err(err)?
        }
        Backend::FokkerPlanck => return Err(PyValueError::new_err("fokker-planck has no trajectories")),
    };
    let d = PyDict::new(py);
    d.set_item("theta_l", s.angles.theta_l)?;
    d.set_item("theta_r", s.angles.theta_r)?;
    d.set_item("entropy", s.entropy)?;
    d.set_item("fidelity", s.fidelity)?;
    d.set_item("readout_counts", s.readout_counts.to_vec())?;
    Ok(d)
}

/// Evolves the pointer delta on an `n × n` grid until the residual drops
/// below `tol` or `t_max` is reached.
#[pyfunction]
#[pyo3(signature = (params, n=72, t_max=200.0, tol=1e-7))]
fn fokker_planck(py: Python<'_>, params: PyRef<'_, PySimParams>, n: usize, t_max: f64, tol: f64) -> PyResult<PyFpSolution> {
    let p = params.0;
    let s = py.detach(|| fp_stationary(&p, n, t_max, tol)).map_err(err)?;
    Ok(PyFpSolution {
        converged: s.criterion == zeno_dimer::StopCriterion::Converged,
        steps: s.steps,
        residual: s.residual,
        max_mass_error: s.max_mass_error,
        grid: s.grid,
    })
}

/// Fixed points of the no-click flow as `(theta_l, theta_r, class)`.
#[pyfunction]
fn find_fixed_points(lambda1: f64, lambda2: f64) -> Vec<(f64, f64, &'static str)> {
    zeno_dimer::find_fixed_points(lambda1, lambda2)
        .points
        .iter()
        .map(|p| (p.theta.theta_l, p.theta.theta_r, p.class.as_str()))
        .collect()
}

/// `"ergodic"`, `"correlated_zeno"`, `"standard_zeno"` or `"boundary"`.
#[pyfunction]
fn classify_phase(lambda1: f64, lambda2: f64) -> &'static str {
    zeno_dimer::flow::classify_cell(lambda1, lambda2).phase.as_str()
}

#[pymodule(name = "zeno_dimer")]
fn zeno_dimer_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimParams>()?;
    m.add_class::<PyHistogram>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyFpSolution>()?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(run_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(fokker_planck, m)?)?;
    m.add_function(wrap_pyfunction!(find_fixed_points, m)?)?;
    m.add_function(wrap_pyfunction!(classify_phase, m)?)?;
    Ok(())
}
