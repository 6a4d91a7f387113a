//! Python bindings for the `lora-tbma` simulator.
//!
//! Signals cross the boundary as lists of Python `complex`; errors from the
//! core crate surface as `ValueError`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lora_tbma::channel::{dbm_to_watts, PresetOptions, ScenarioKind, ScenarioPreset};
use lora_tbma::rng::rng_from_seed;
use lora_tbma::tbma::empirical_noise_variance;
use lora_tbma::{
    self as core, BasebandSignal, ChannelRealization, Complex as Complex64, ExperimentConfig,
    Measurement,
};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn symbol(m: usize, n_levels: usize) -> PyResult<Measurement> {
    Measurement::new(m, n_levels).map_err(value_err)
}

#[pyclass(name = "ModulationConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyModulationConfig {
    inner: core::ModulationConfig,
}

#[pymethods]
impl PyModulationConfig {
    #[new]
    #[pyo3(signature = (n_levels, amplitude = 1.0, spreading_rate = 0.0))]
    fn new(n_levels: usize, amplitude: f64, spreading_rate: f64) -> PyResult<Self> {
        let inner = core::ModulationConfig::with_levels(n_levels)
            .and_then(|c| c.with_amplitude(amplitude))
            .and_then(|c| c.with_spreading_rate(spreading_rate))
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_levels(&self) -> usize {
        self.inner.n_levels()
    }

    #[getter]
    fn carrier_amplitude(&self) -> f64 {
        self.inner.carrier_amplitude()
    }

    #[getter]
    fn spreading_rate(&self) -> f64 {
        self.inner.spreading_rate()
    }

    #[getter]
    fn observation_time(&self) -> f64 {
        self.inner.observation_time()
    }

    #[getter]
    fn sample_rate(&self) -> f64 {
        self.inner.sample_rate()
    }

    fn __repr__(&self) -> String {
        format!(
            "ModulationConfig(n_levels={}, amplitude={}, spreading_rate={})",
            self.inner.n_levels(),
            self.inner.carrier_amplitude(),
            self.inner.spreading_rate()
        )
    }
}

#[pyclass(name = "Modem", frozen)]
pub struct PyModem {
    inner: core::Modem,
}

#[pymethods]
impl PyModem {
    #[new]
    fn new(config: &PyModulationConfig) -> Self {
        Self {
            inner: core::Modem::new(config.inner),
        }
    }

    #[getter]
    fn n_levels(&self) -> usize {
        self.inner.n_levels()
    }

    /// Transmitted block for symbol `m`, spread when the config is chirped.
    fn transmit(&self, m: usize) -> PyResult<Vec<Complex64>> {
        let s = self
            .inner
            .transmit(symbol(m, self.inner.n_levels())?)
            .map_err(value_err)?;
        Ok(s.samples)
    }

    /// Matched-filter scores after despreading.
    fn project(&self, samples: Vec<Complex64>) -> PyResult<Vec<f64>> {
        let y = BasebandSignal::new(samples, self.inner.config().sample_rate());
        self.inner.project(&y).map_err(value_err)
    }

    fn demodulate(&self, samples: Vec<Complex64>) -> PyResult<usize> {
        let y = BasebandSignal::new(samples, self.inner.config().sample_rate());
        Ok(self.inner.demodulate(&y).map_err(value_err)?.symbol.index())
    }
}

#[pyfunction]
fn dct_forward(x: Vec<f64>) -> PyResult<Vec<f64>> {
    core::dct_forward(&x).map_err(value_err)
}

#[pyfunction]
fn dct_inverse(coeffs: Vec<f64>) -> PyResult<Vec<f64>> {
    core::dct_inverse(&coeffs).map_err(value_err)
}

#[pyfunction]
fn modulate_single_tone(m: usize, config: &PyModulationConfig) -> PyResult<Vec<Complex64>> {
    let s = core::modulate_single_tone(symbol(m, config.inner.n_levels())?, &config.inner)
        .map_err(value_err)?;
    Ok(s.samples)
}

#[pyfunction]
fn demodulate(samples: Vec<Complex64>, config: &PyModulationConfig) -> PyResult<usize> {
    let y = BasebandSignal::new(samples, config.inner.sample_rate());
    Ok(core::demodulate(&y, &config.inner)
        .map_err(value_err)?
        .symbol
        .index())
}

#[pyfunction]
fn spread(samples: Vec<Complex64>, config: &PyModulationConfig) -> PyResult<Vec<Complex64>> {
    let z = BasebandSignal::new(samples, config.inner.sample_rate());
    Ok(core::spread(&z, &config.inner.chirp_params())
        .map_err(value_err)?
        .samples)
}

#[pyfunction]
fn despread(samples: Vec<Complex64>, config: &PyModulationConfig) -> PyResult<Vec<Complex64>> {
    let z = BasebandSignal::new(samples, config.inner.sample_rate());
    Ok(core::despread(&z, &config.inner.chirp_params())
        .map_err(value_err)?
        .samples)
}

#[pyfunction]
fn symbol_error_probability(snr: f64, n_levels: usize) -> PyResult<f64> {
    core::symbol_error_probability(snr, n_levels).map_err(value_err)
}

#[pyfunction]
fn free_space_path_loss(distance_m: f64, frequency_hz: f64) -> PyResult<f64> {
    core::free_space_path_loss(distance_m, frequency_hz).map_err(value_err)
}

/// Budget breakdown of one scenario (`ul`, `dl`, `isl-leo`, `isl-geo`).
#[pyfunction]
#[pyo3(signature = (scenario, ptx_dbm = 14.0, n_levels = 256))]
fn link_budget<'py>(
    py: Python<'py>,
    scenario: &str,
    ptx_dbm: f64,
    n_levels: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let kind: ScenarioKind = scenario.parse().map_err(value_err)?;
    let opts = PresetOptions {
        tx_power_w: dbm_to_watts(ptx_dbm),
        ..PresetOptions::default()
    };
    let p = ScenarioPreset::new(kind, &opts);
    let d = PyDict::new(py);
    d.set_item("scenario", kind.name())?;
    d.set_item("distance_m", p.budget.distance_m)?;
    d.set_item("fspl_db", p.budget.path_loss_db().map_err(value_err)?)?;
    d.set_item(
        "total_loss_db",
        p.budget.total_loss_db().map_err(value_err)?,
    )?;
    d.set_item("link_snr_db", p.link_snr_db().map_err(value_err)?)?;
    d.set_item(
        "symbol_snr_db",
        p.symbol_snr_db(n_levels).map_err(value_err)?,
    )?;
    Ok(d)
}

#[pyfunction]
fn discretize_gaussian(theta: f64, sigma: f64, n_levels: usize) -> PyResult<Vec<f64>> {
    core::discretize_gaussian(theta, sigma, n_levels).map_err(value_err)
}

/// Grid-search ML estimate of the mean over `[0, N-1]`.
#[pyfunction]
#[pyo3(signature = (r, sigma, weight_floor = 0.0, step = 0.1))]
fn ml_estimate(r: Vec<f64>, sigma: f64, weight_floor: f64, step: f64) -> PyResult<f64> {
    let n = r.len();
    let model = core::ParameterModel::new(n, sigma, 0.0, n.saturating_sub(1) as f64, step)
        .and_then(|m| m.with_weight_floor(weight_floor))
        .map_err(value_err)?;
    let est = core::ml_estimate(&core::EmpiricalMeasure::new(r), &model).map_err(value_err)?;
    Ok(est.theta)
}

#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    core::kl_divergence(&p, &q).map_err(value_err)
}

/// One TBMA round: returns `(theta_hat, r)`.
#[pyfunction]
#[pyo3(signature = (theta, sigma, users, snr_db, n_levels = 256, seed = 0))]
fn tbma_trial(
    theta: f64,
    sigma: f64,
    users: usize,
    snr_db: f64,
    n_levels: usize,
    seed: u64,
) -> PyResult<(f64, Vec<f64>)> {
    let modem = core::Modem::new(core::ModulationConfig::with_levels(n_levels).map_err(value_err)?);
    let ch = ChannelRealization::from_symbol_snr_db(snr_db, 1.0, 1.0).map_err(value_err)?;
    let mut rng = rng_from_seed(seed);
    let mut run = || -> core::Result<(f64, Vec<f64>)> {
        let ms = core::sample_measurements(theta, sigma, users, n_levels, &mut rng)?;
        let y = core::superpose(&ms, None, &modem, ch.noise_variance, &mut rng)?;
        let r = core::recover_empirical_measure(&y, users, &modem)?;
        let ev = empirical_noise_variance(ch.noise_variance, 1.0, users, n_levels);
        let model =
            core::ParameterModel::full_range(n_levels, sigma)?.with_channel_noise(users, ev)?;
        let est = core::ml_estimate(&r, &model)?;
        Ok((est.theta, r.values().to_vec()))
    };
    run().map_err(value_err)
}

/// Runs a sweep from TOML text plus `key=value` overrides. Returns the
/// records CSV and one dict per aggregate point.
#[pyfunction]
#[pyo3(signature = (config_toml = "", overrides = None, workers = None))]
fn sweep<'py>(
    py: Python<'py>,
    config_toml: &str,
    overrides: Option<Vec<(String, String)>>,
    workers: Option<usize>,
) -> PyResult<(String, Vec<Bound<'py, PyDict>>)> {
    let cfg =
        ExperimentConfig::from_toml_with_overrides(config_toml, &overrides.unwrap_or_default())
            .map_err(value_err)?;
    let exp = core::Experiment::new(cfg).map_err(value_err)?;
    let out = py.detach(|| exp.sweep(workers)).map_err(value_err)?;
    let mut csv = Vec::new();
    out.write_csv(&mut csv).map_err(value_err)?;
    let aggs = out
        .aggregates
        .iter()
        .map(|a| {
            let d = PyDict::new(py);
            d.set_item("scheme", a.scheme.name())?;
            d.set_item("users", a.users)?;
            d.set_item("snr_db", a.snr_db)?;
            d.set_item("trials", a.trials)?;
            d.set_item("mse", a.mse)?;
            d.set_item("nmse_db", a.nmse_db)?;
            d.set_item("mean_kl", a.mean_kl)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok((String::from_utf8(csv).map_err(value_err)?, aggs))
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModulationConfig>()?;
    m.add_class::<PyModem>()?;
    m.add_function(wrap_pyfunction!(dct_forward, m)?)?;
    m.add_function(wrap_pyfunction!(dct_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(modulate_single_tone, m)?)?;
    m.add_function(wrap_pyfunction!(demodulate, m)?)?;
    m.add_function(wrap_pyfunction!(spread, m)?)?;
    m.add_function(wrap_pyfunction!(despread, m)?)?;
    m.add_function(wrap_pyfunction!(symbol_error_probability, m)?)?;
    m.add_function(wrap_pyfunction!(free_space_path_loss, m)?)?;
    m.add_function(wrap_pyfunction!(link_budget, m)?)?;
    m.add_function(wrap_pyfunction!(discretize_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(ml_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(tbma_trial, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}

#[pymodule]
fn lora_tbma_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
