//! Python module `wva`: weak values, probes, shifts and the optimizer.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use wva_core::probe::recommended_support_points;
use wva_core::{
    Amplitude, Initialization, MomentumGrid, Observable, OptimizerConfig, PostSelectedEvolution,
    ProbeWavefunction, SystemState, WvaError,
};

fn py_err(e: WvaError) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.name()))
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for wva_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Weak value `A_w` together with the selection overlap `⟨f|i⟩`.
#[pyclass(name = "WeakValue", frozen, from_py_object)]
#[derive(Clone)]
struct PyWeakValue(wva_core::WeakValue);

#[pymethods]
impl PyWeakValue {
    /// A bare weak value with overlap 1.
    #[new]
    fn new(value: Amplitude) -> PyResult<Self> {
        Ok(Self(wva_core::WeakValue::from_value(value).py()?))
    }

    /// `⟨post|obs|pre⟩ / ⟨post|pre⟩`; states are normalized first.
    #[staticmethod]
    fn from_states(pre: Vec<Amplitude>, post: Vec<Amplitude>, obs: Vec<Vec<Amplitude>>) -> PyResult<Self> {
        let pre = SystemState::new(pre).py()?;
        let post = SystemState::new(post).py()?;
        let obs = Observable::new(obs).py()?;
        Ok(Self(wva_core::compute_weak_value(&pre, &post, &obs).py()?))
    }

    #[getter]
    fn value(&self) -> Amplitude {
        self.0.value()
    }

    #[getter]
    fn overlap(&self) -> Amplitude {
        self.0.overlap()
    }

    #[getter]
    fn success_probability(&self) -> f64 {
        self.0.success_probability()
    }

    /// Weak value of `scale·A + shift`.
    fn affine(&self, scale: f64, shift: f64) -> Self {
        Self(self.0.affine(scale, shift))
    }

    fn __repr__(&self) -> String {
        format!("WeakValue({}, overlap={})", self.0.value(), self.0.overlap())
    }
}

/// Path weak value `C_w` of the Mach-Zehnder setup. `.affine(2, -1)` gives
/// the weak value of the coupled observable.
#[pyfunction]
fn mach_zehnder_weak_value(chi: f64, phi: f64) -> PyResult<PyWeakValue> {
    Ok(PyWeakValue(wva_core::mach_zehnder_weak_value(chi, phi).py()?))
}

/// Initial probe sampled on a uniform momentum grid.
#[pyclass(name = "Probe", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProbe(ProbeWavefunction);

#[pymethods]
impl PyProbe {
    /// Normalized samples on `[p_min, p_max]`.
    #[new]
    fn new(p_min: f64, p_max: f64, values: Vec<Amplitude>) -> PyResult<Self> {
        let grid = MomentumGrid::new(p_min, p_max, values.len()).py()?;
        Ok(Self(ProbeWavefunction::from_samples(grid, values, "python").py()?))
    }

    /// Gaussian of position width `w`, on a grid suited to coupling `g`.
    #[staticmethod]
    fn gaussian(w: f64, g: f64) -> PyResult<Self> {
        let grid = wva_core::gaussian_grid(w, g).py()?;
        Ok(Self(wva_core::gaussian_probe(w, &grid).py()?))
    }

    /// The probe that maximizes the position shift.
    #[staticmethod]
    #[pyo3(signature = (g, aw, n_points=None))]
    fn optimal(g: f64, aw: Amplitude, n_points: Option<usize>) -> PyResult<Self> {
        let n = n_points.unwrap_or_else(|| recommended_support_points(aw, 1));
        Ok(Self(wva_core::optimal_probe(g, aw, n).py()?))
    }

    /// Optimal probe with Gaussian edges of steepness `s`.
    #[staticmethod]
    fn smoothed(g: f64, aw: Amplitude, s: f64) -> PyResult<Self> {
        let grid = wva_core::smoothed_grid(g, aw, s).py()?;
        Ok(Self(wva_core::smoothed_optimal_probe(g, aw, s, &grid).py()?))
    }

    #[getter]
    fn momenta(&self) -> Vec<f64> {
        self.0.grid().points().collect()
    }

    #[getter]
    fn values(&self) -> Vec<Amplitude> {
        self.0.values().to_vec()
    }

    #[getter]
    fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }
}

/// Post-selected evolution `⟨f|e^{-igAp}|i⟩` acting on a probe.
#[pyclass(name = "Evolution", frozen)]
struct PyEvolution(PostSelectedEvolution);

#[pymethods]
impl PyEvolution {
    #[new]
    fn new(g: f64, weak: PyWeakValue) -> PyResult<Self> {
        Ok(Self(PostSelectedEvolution::new(g, weak.0).py()?))
    }

    fn b_factor(&self, p: f64) -> Amplitude {
        self.0.b_factor(p)
    }

    /// Initial and final means, shifts and post-selection weight.
    fn shift_report<'py>(&self, py: Python<'py>, probe: &PyProbe) -> PyResult<Bound<'py, PyDict>> {
        let r = wva_core::shift_report(&self.0, &probe.0).py()?;
        let d = PyDict::new(py);
        d.set_item("q_initial", r.q_initial)?;
        d.set_item("q_final", r.q_final)?;
        d.set_item("p_initial", r.p_initial)?;
        d.set_item("p_final", r.p_final)?;
        d.set_item("delta_q", r.delta_q)?;
        d.set_item("delta_p", r.delta_p)?;
        d.set_item("weight", r.weight)?;
        Ok(d)
    }
}

/// `(delta_q, delta_p, denominator)` for a Gaussian probe of width `w`.
#[pyfunction]
fn gaussian_exact_shifts(g: f64, w: f64, aw: Amplitude) -> PyResult<(f64, f64, f64)> {
    let s = wva_core::gaussian_exact_shifts(g, w, aw).py()?;
    Ok((s.delta_q, s.delta_p, s.denominator))
}

#[pyfunction]
fn max_shift(g: f64, aw: Amplitude) -> PyResult<f64> {
    wva_core::max_shift(g, aw).py()
}

#[pyfunction]
fn shift_lower_bound(g: f64, aw: Amplitude) -> PyResult<f64> {
    wva_core::shift_lower_bound(g, aw).py()
}

#[pyfunction]
fn integral_b_minus2(g: f64, aw: Amplitude) -> PyResult<f64> {
    wva_core::integral_b_minus2(g, aw).py()
}

#[pyfunction]
fn integral_b_minus4(g: f64, aw: Amplitude) -> PyResult<f64> {
    wva_core::integral_b_minus4(g, aw).py()
}

/// Gradient ascent of the position shift on the optimal support. Returns a
/// dict with `objectives`, `converged` and the gauge-fixed final `probe`.
#[pyfunction]
#[pyo3(signature = (g, aw, n_points=401, max_iters=2000, step=1.0, tol=1e-6, seed=7, init="gaussian", width=1.0))]
#[allow(clippy::too_many_arguments)]
fn maximize<'py>(
    py: Python<'py>,
    g: f64,
    aw: Amplitude,
    n_points: usize,
    max_iters: usize,
    step: f64,
    tol: f64,
    seed: u64,
    init: &str,
    width: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let init = match init {
        "gaussian" => Initialization::Gaussian { width },
        "random" => Initialization::Random,
        other => return Err(PyValueError::new_err(format!("unknown init '{other}'"))),
    };
    let config = OptimizerConfig {
        grid: MomentumGrid::optimal_support(g, 1, n_points).py()?,
        max_iters,
        step,
        tol,
        seed,
        init,
    };
    let evo = PostSelectedEvolution::from_weak_value(g, aw).py()?;
    let trace = py.detach(|| wva_core::maximize(&config, &evo)).py()?;
    let d = PyDict::new(py);
    let objectives: Vec<f64> = trace.iterations.iter().map(|r| r.objective).collect();
    d.set_item("objectives", objectives)?;
    d.set_item("converged", trace.converged)?;
    d.set_item("probe", PyProbe(wva_core::gauge_fix(&trace.final_probe).py()?))?;
    Ok(d)
}

#[pymodule]
fn wva(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWeakValue>()?;
    m.add_class::<PyProbe>()?;
    m.add_class::<PyEvolution>()?;
    m.add_function(wrap_pyfunction!(mach_zehnder_weak_value, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_exact_shifts, m)?)?;
    m.add_function(wrap_pyfunction!(max_shift, m)?)?;
    m.add_function(wrap_pyfunction!(shift_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(integral_b_minus2, m)?)?;
    m.add_function(wrap_pyfunction!(integral_b_minus4, m)?)?;
    m.add_function(wrap_pyfunction!(maximize, m)?)?;
    Ok(())
}
