//! Python bindings: the main pipeline types and operations, mirroring the
//! `qrng` CLI stages. Bit streams cross the boundary as `bytes` packed
//! MSB-first per byte.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use std::path::Path;

use qrng_core::bits::BitBuf;
use qrng_core::digitizer::{
    arcsine_bin_pmax, convolved_pmf, empirical_pmf, quantize_values, quantum_min_entropy,
    AdcConfig,
};
use qrng_core::extractor::{
    extraction_rate, xor_pipeline, ExtractionMode, ToeplitzLut, ToeplitzSeed,
};
use qrng_core::optics::{arcsine_pdf, generate_pulse_train, InterferenceParams, NoiseModel};
use qrng_core::pipeline::{cmd_extract, cmd_simulate, cmd_test, PipelineConfig};
use qrng_core::stats;

fn err(e: qrng_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "InterferenceParams", from_py_object)]
#[derive(Clone)]
struct PyInterferenceParams(InterferenceParams);

#[pymethods]
impl PyInterferenceParams {
    #[new]
    #[pyo3(signature = (eta_d=1.0, e1=0.5, e2=0.5, phi2=0.0, rate_r=250e6))]
    fn new(eta_d: f64, e1: f64, e2: f64, phi2: f64, rate_r: f64) -> PyResult<Self> {
        Ok(Self(
            InterferenceParams::new(eta_d, e1, e2, phi2, rate_r).map_err(err)?,
        ))
    }

    #[getter]
    fn rate_r(&self) -> f64 {
        self.0.rate_r
    }

    #[getter]
    fn period_t(&self) -> f64 {
        self.0.period_t
    }

    fn peak_voltage(&self) -> f64 {
        self.0.peak_voltage()
    }
}

#[pyclass(name = "NoiseModel", from_py_object)]
#[derive(Clone)]
struct PyNoiseModel(NoiseModel);

#[pymethods]
impl PyNoiseModel {
    #[new]
    #[pyo3(signature = (sigma_frac=0.05, range_lo=-1.0, range_hi=1.0))]
    fn new(sigma_frac: f64, range_lo: f64, range_hi: f64) -> PyResult<Self> {
        Ok(Self(
            NoiseModel::new(sigma_frac, range_lo, range_hi).map_err(err)?,
        ))
    }

    #[getter]
    fn sigma_abs(&self) -> f64 {
        self.0.sigma_abs()
    }
}

#[pyclass(name = "AdcConfig", from_py_object)]
#[derive(Clone)]
struct PyAdcConfig(AdcConfig);

#[pymethods]
impl PyAdcConfig {
    #[new]
    fn new(n_bits: u32, range_lo: f64, range_hi: f64) -> PyResult<Self> {
        Ok(Self(AdcConfig::new(n_bits, range_lo, range_hi).map_err(err)?))
    }

    #[getter]
    fn n_bits(&self) -> u32 {
        self.0.n_bits
    }

    fn bin_width(&self) -> f64 {
        self.0.bin_width()
    }
}

/// Normalized pulse-center voltages for `count` pulses.
#[pyfunction]
fn pulse_train(
    count: u64,
    params: &PyInterferenceParams,
    noise: &PyNoiseModel,
    seed: u64,
) -> PyResult<Vec<f64>> {
    Ok(generate_pulse_train(count, &params.0, &noise.0, seed)
        .map_err(err)?
        .into_iter()
        .map(|s| s.value)
        .collect())
}

#[pyfunction(name = "arcsine_pdf")]
fn py_arcsine_pdf(x: f64) -> PyResult<f64> {
    arcsine_pdf(x).map_err(err)
}

/// Quantizes values into bin indices; returns (bins, saturated_below, saturated_above).
#[pyfunction]
fn quantize(values: Vec<f64>, cfg: &PyAdcConfig) -> (Vec<u16>, u64, u64) {
    let (bins, sat) = quantize_values(&values, &cfg.0);
    (bins, sat.below, sat.above)
}

/// Plug-in min-entropy of a quantized stream.
#[pyfunction]
fn min_entropy(bins: Vec<u16>, n_bits: u32) -> PyResult<f64> {
    Ok(empirical_pmf(&bins, n_bits).map_err(err)?.h_min)
}

#[pyfunction(name = "arcsine_bin_pmax")]
fn py_arcsine_bin_pmax(n_bits: u32) -> f64 {
    arcsine_bin_pmax(n_bits)
}

#[pyfunction(name = "quantum_min_entropy")]
fn py_quantum_min_entropy(cfg: &PyAdcConfig) -> PyResult<f64> {
    quantum_min_entropy(&cfg.0).map_err(err)
}

/// Min-entropy of the arcsine-plus-Gaussian oracle at the given binning.
#[pyfunction]
fn oracle_min_entropy(noise: &PyNoiseModel, cfg: &PyAdcConfig) -> PyResult<f64> {
    Ok(convolved_pmf(&noise.0, &cfg.0).map_err(err)?.h_min)
}

/// XOR-extracts a word stream; returns the packed bit stream as bytes plus
/// (bits_out, words_discarded).
#[pyfunction]
fn xor_extract<'py>(
    py: Python<'py>,
    words: Vec<u16>,
    n_bits: u32,
    m: usize,
) -> PyResult<(Bound<'py, PyBytes>, u64, u64)> {
    let mut out = BitBuf::new();
    let stats = xor_pipeline(&words, n_bits, m, &mut out).map_err(err)?;
    Ok((
        PyBytes::new(py, &out.to_bytes()),
        stats.bits_out,
        stats.words_discarded,
    ))
}

/// Hashes words through a Toeplitz matrix expanded from `seed_bits`.
#[pyfunction]
fn toeplitz_hash(words: Vec<u16>, seed_bits: Vec<u8>, n_in: u32, n_out: u32) -> PyResult<Vec<u16>> {
    let seed = ToeplitzSeed::new(seed_bits, n_in, n_out).map_err(err)?;
    let lut = ToeplitzLut::build(&seed);
    Ok(words.into_iter().map(|w| lut.map(w)).collect())
}

#[pyfunction(name = "extraction_rate")]
fn py_extraction_rate(n_bits: u32, rate_r: f64, mode: &str, n_out: u32) -> PyResult<f64> {
    let mode = match mode {
        "xor" => ExtractionMode::Xor,
        "toeplitz" => ExtractionMode::Toeplitz,
        "none" => ExtractionMode::None,
        other => return Err(PyValueError::new_err(format!("unknown mode '{other}'"))),
    };
    Ok(extraction_rate(n_bits, rate_r, mode, n_out))
}

/// Autocorrelation of a packed bit stream for lags 0..=max_lag.
#[pyfunction]
fn autocorrelation(bits: &[u8], nbits: usize, max_lag: usize) -> PyResult<Vec<f64>> {
    let buf = BitBuf::from_bytes(bits, nbits).map_err(err)?;
    stats::autocorrelation(&buf.to_bit_bytes(), max_lag).map_err(err)
}

#[pyfunction]
fn monobit_frequency(bits: &[u8], nbits: usize) -> PyResult<f64> {
    let buf = BitBuf::from_bytes(bits, nbits).map_err(err)?;
    stats::nist::monobit_frequency(&buf.to_bit_bytes()).map_err(err)
}

/// Runs the full battery over a packed bit stream; returns the report as a
/// JSON string.
#[pyfunction]
fn run_battery(
    bits: &[u8],
    nbits: usize,
    alpha: f64,
    n_samples: usize,
    sample_len: usize,
    uniformity_threshold: f64,
) -> PyResult<String> {
    let buf = BitBuf::from_bytes(bits, nbits).map_err(err)?;
    let cfg = stats::TestConfig::new(alpha, n_samples, sample_len, uniformity_threshold)
        .map_err(err)?;
    let report = stats::run_battery(&buf, &cfg).map_err(err)?;
    Ok(serde_json_string(&report))
}

fn serde_json_string<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

/// File-based pipeline stages driven by a TOML config string.
#[pyfunction]
fn simulate_to_file(config_toml: &str, out_path: &str) -> PyResult<String> {
    let cfg = PipelineConfig::from_toml_str(config_toml).map_err(err)?;
    let manifest = cmd_simulate(&cfg, Path::new(out_path)).map_err(err)?;
    Ok(serde_json_string(&manifest))
}

#[pyfunction]
fn extract_file(config_toml: &str, samples_path: &str, out_path: &str) -> PyResult<String> {
    let cfg = PipelineConfig::from_toml_str(config_toml).map_err(err)?;
    let manifest = cmd_extract(&cfg, Path::new(samples_path), Path::new(out_path)).map_err(err)?;
    Ok(serde_json_string(&manifest))
}

#[pyfunction]
fn test_file(config_toml: &str, bits_path: &str) -> PyResult<String> {
    let cfg = PipelineConfig::from_toml_str(config_toml).map_err(err)?;
    let report = cmd_test(&cfg, Path::new(bits_path)).map_err(err)?;
    Ok(serde_json_string(&report))
}

#[pymodule]
fn qrng_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInterferenceParams>()?;
    m.add_class::<PyNoiseModel>()?;
    m.add_class::<PyAdcConfig>()?;
    m.add_function(wrap_pyfunction!(pulse_train, m)?)?;
    m.add_function(wrap_pyfunction!(py_arcsine_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(min_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(py_arcsine_bin_pmax, m)?)?;
    m.add_function(wrap_pyfunction!(py_quantum_min_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_min_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(xor_extract, m)?)?;
    m.add_function(wrap_pyfunction!(toeplitz_hash, m)?)?;
    m.add_function(wrap_pyfunction!(py_extraction_rate, m)?)?;
    m.add_function(wrap_pyfunction!(autocorrelation, m)?)?;
    m.add_function(wrap_pyfunction!(monobit_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(run_battery, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_to_file, m)?)?;
    m.add_function(wrap_pyfunction!(extract_file, m)?)?;
    m.add_function(wrap_pyfunction!(test_file, m)?)?;
    Ok(())
}
