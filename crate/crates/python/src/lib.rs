//! Python bindings for the macpir simulator.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use macpir_core::harness::{run, Command, ConfigLayer};
use macpir_core::pir::{run_retrieval, AlphaRule, ChannelPlan, LatticeScheme, RetrievalOptions};
use macpir_core::{audit, partition, rates, rng, spir, FieldVector, LatticeKind, NestedLatticePair, PartitionMethod, Scheme};

fn err(e: macpir_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn method(name: &str) -> PyResult<PartitionMethod> {
    name.parse().map_err(err)
}

/// Product nested lattice pair `γZⁿ ⊃ γpZⁿ`.
#[pyclass(name = "NestedLatticePair", frozen)]
struct PyLattice {
    inner: NestedLatticePair,
}

#[pymethods]
impl PyLattice {
    #[new]
    fn new(dim: usize, prime: u64, scale: f64) -> PyResult<Self> {
        Ok(Self { inner: NestedLatticePair::new(dim, prime, scale).map_err(err)? })
    }

    /// Pair whose coarse Voronoi region has second moment `power`.
    #[staticmethod]
    fn for_power(power: f64, prime: u64, dim: usize) -> PyResult<Self> {
        Ok(Self { inner: NestedLatticePair::for_power(power, prime, dim).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn prime(&self) -> u64 {
        self.inner.prime()
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale()
    }

    fn second_moment(&self) -> f64 {
        self.inner.second_moment()
    }

    fn rate_bits(&self) -> f64 {
        self.inner.rate_bits()
    }

    fn quantize_fine(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.quantize(&x, LatticeKind::Fine).map_err(err)?.into_coords())
    }

    fn quantize_coarse(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.quantize(&x, LatticeKind::Coarse).map_err(err)?.into_coords())
    }

    fn mod_reduce(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.mod_reduce(&x).map_err(err)
    }

    /// Codeword of a vector of field symbols.
    fn encode(&self, symbols: Vec<u64>) -> PyResult<Vec<f64>> {
        let v = FieldVector::new(symbols, self.inner.prime()).map_err(err)?;
        Ok(self.inner.encode(&v).map_err(err)?.into_coords())
    }

    /// Field symbols of a point of the fine lattice.
    fn decode(&self, point: Vec<f64>) -> PyResult<Vec<u64>> {
        Ok(self.inner.decode(&point).map_err(err)?.symbols().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("NestedLatticePair(dim={}, prime={}, scale={})", self.inner.dim(), self.inner.prime(), self.inner.scale())
    }
}

/// Splits `weights` into two groups. Returns `(s1, s2, gain1, gain2)`.
#[pyfunction]
#[pyo3(signature = (weights, method_name = "exact", seed = 0))]
fn partition_gains(weights: Vec<f64>, method_name: &str, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>, f64, f64)> {
    let mut r = rng::stream(seed, 0);
    let p = partition::partition(&weights, method(method_name)?, &mut r).map_err(err)?;
    Ok((p.s1().to_vec(), p.s2().to_vec(), p.gain1(), p.gain2()))
}

#[pyfunction]
fn sum_capacity(fading: Vec<f64>, power: f64) -> f64 {
    rates::sum_capacity(&fading, power)
}

#[pyfunction]
fn r_eq(gain1: f64, power: f64) -> f64 {
    rates::r_eq(gain1, power)
}

/// Best compute-and-forward rate; returns `((a1, a2), rate)`.
#[pyfunction]
#[pyo3(signature = (gain1, gain2, power, a_max = 8))]
fn r_cf_best(gain1: f64, gain2: f64, power: f64, a_max: u32) -> PyResult<((i64, i64), f64)> {
    let (a, r) = rates::r_cf_best((gain1, gain2), power, a_max).map_err(err)?;
    Ok(((a[0], a[1]), r))
}

#[pyfunction]
fn lower_bound_rate(n_dbs: usize, power: f64) -> f64 {
    rates::lower_bound_rate(n_dbs, power)
}

#[pyfunction]
fn lower_bound_constant() -> f64 {
    rates::lower_bound_constant()
}

/// Monte-Carlo gap statistics as a dict.
#[pyfunction]
#[pyo3(signature = (n_dbs, power, trials, method_name = "exact", seed = 0))]
fn gap_statistics<'py>(
    py: Python<'py>,
    n_dbs: usize,
    power: f64,
    trials: u64,
    method_name: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = method(method_name)?;
    let s = py.detach(|| rates::gap_statistics(n_dbs, power, trials, m, seed)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("n_dbs", s.n_dbs)?;
    d.set_item("power", s.power)?;
    d.set_item("trials", s.trials)?;
    d.set_item("mean", s.mean)?;
    d.set_item("mean_lower", s.mean_lower)?;
    d.set_item("std_err", s.std_err)?;
    d.set_item("q05", s.q05)?;
    d.set_item("q50", s.q50)?;
    d.set_item("q95", s.q95)?;
    d.set_item("mean_c_sr", s.mean_c_sr)?;
    d.set_item("mean_r_eq", s.mean_r_eq)?;
    Ok(d)
}

/// Retrieves `messages[index]` over block fading. Returns a dict with the
/// decoded symbols and error counts.
#[pyfunction]
#[pyo3(signature = (messages, index, prime, n_dbs, power, scheme = "pir", dim = 1, noise = true, seed = 0, method_name = "exact"))]
#[allow(clippy::too_many_arguments)]
fn retrieve<'py>(
    py: Python<'py>,
    messages: Vec<Vec<u64>>,
    index: usize,
    prime: u64,
    n_dbs: usize,
    power: f64,
    scheme: &str,
    dim: usize,
    noise: bool,
    seed: u64,
    method_name: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let scheme = match scheme.parse::<Scheme>().map_err(err)? {
        Scheme::Pir => LatticeScheme::Pir,
        Scheme::SpirCr => LatticeScheme::SpirCr,
        Scheme::SpirNokey => return Err(PyValueError::new_err("retrieve supports the lattice schemes pir and spir-cr")),
    };
    let msgs = messages.into_iter().map(|m| FieldVector::new(m, prime)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let pair = NestedLatticePair::for_power(power, prime, dim).map_err(err)?;
    let plan = ChannelPlan::BlockFading { n_dbs, power, method: method(method_name)? };
    let options = RetrievalOptions { scheme, noise_on: noise, dithers_on: true, alpha: AlphaRule::Mmse };
    let out = py.detach(|| run_retrieval(&msgs, index, &plan, &pair, &options, seed)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("decoded", out.decoded.symbols().to_vec())?;
    d.set_item("symbol_errors", out.symbol_errors)?;
    d.set_item("symbols", out.symbols)?;
    d.set_item("ser", out.symbol_error_rate())?;
    d.set_item("sigma2_eq", out.trace.mean_sigma2_eq())?;
    Ok(d)
}

/// Runs the privacy audit suite for `scheme`. Returns `(passed, verdicts)`
/// with each verdict as a dict.
#[pyfunction]
#[pyo3(signature = (scheme, samples = 100_000, seed = 0, broken = false))]
fn audit_suite<'py>(
    py: Python<'py>,
    scheme: &str,
    samples: u64,
    seed: u64,
    broken: bool,
) -> PyResult<(bool, Vec<Bound<'py, PyDict>>)> {
    let scheme: Scheme = scheme.parse().map_err(err)?;
    let cfg = audit::SuiteConfig { samples, seed, broken, ..Default::default() };
    let verdicts = py.detach(|| audit::audit_suite(scheme, &cfg)).map_err(err)?;
    let pass = audit::suite_passes(&verdicts);
    let dicts = verdicts
        .into_iter()
        .map(|v| {
            let d = PyDict::new(py);
            d.set_item("name", v.name)?;
            d.set_item("statistic", v.statistic)?;
            d.set_item("value", v.value)?;
            d.set_item("threshold", v.threshold)?;
            d.set_item("pass", v.pass)?;
            d.set_item("exact", v.exact)?;
            d.set_item("mandatory", v.mandatory)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok((pass, dicts))
}

/// Posteriors of the two-database leakage example.
#[pyfunction]
fn leakage_example(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let demo = spir::leakage_example().map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("y_plain", demo.y_plain)?;
    d.set_item("y_masked", demo.y_masked)?;
    d.set_item("posterior_plain", demo.posterior_plain)?;
    d.set_item("posterior_masked", demo.posterior_masked)?;
    d.set_item("decoded_plain", demo.decoded_plain)?;
    d.set_item("decoded_masked", demo.decoded_masked)?;
    d.set_item("leaked_w2", demo.leaked_w2)?;
    Ok(d)
}

/// Runs a tool command (`rates`, `heatmap`, `simulate`, `audit`,
/// `leak-demo`) from TOML configuration text. Returns `(csv, passed)`.
#[pyfunction]
fn run_command(py: Python<'_>, command: &str, config: &str) -> PyResult<(String, bool)> {
    let command: Command = command.parse().map_err(err)?;
    let cfg = ConfigLayer::from_toml_str(config).and_then(|l| l.resolve(command)).map_err(err)?;
    let report = py.detach(|| run(&cfg)).map_err(err)?;
    Ok((report.csv, report.pass))
}

#[pymodule]
fn macpir(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_function(wrap_pyfunction!(partition_gains, m)?)?;
    m.add_function(wrap_pyfunction!(sum_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(r_eq, m)?)?;
    m.add_function(wrap_pyfunction!(r_cf_best, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_rate, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_constant, m)?)?;
    m.add_function(wrap_pyfunction!(gap_statistics, m)?)?;
    m.add_function(wrap_pyfunction!(retrieve, m)?)?;
    m.add_function(wrap_pyfunction!(audit_suite, m)?)?;
    m.add_function(wrap_pyfunction!(leakage_example, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    Ok(())
}
