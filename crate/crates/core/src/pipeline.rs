//! End-to-end orchestration: reproducible configuration, file formats and the
//! simulate / extract / test / bench / report stages shared by the CLI and
//! the Python bindings.
//!
//! File formats: sample streams are 64-bit IEEE-754 little-endian values;
//! bit files are packed MSB-first per byte; manifests and reports are JSON.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use crate::bits::{pack_words, BitBuf};
use crate::digitizer::{
    convolved_pmf, empirical_pmf, quantize_values, quantum_min_entropy, AdcConfig, EntropyReport,
    Saturation, REFERENCE_QUANTUM_H_MIN, REFERENCE_TOTAL_H_MIN,
};
use crate::extractor::{
    extraction_rate, xor_pipeline, ExtractStats, ExtractionMode, ToeplitzLut, ToeplitzSeed,
};
use crate::optics::{generate_pulse_train_into, InterferenceParams, NoiseModel, PulseSample};
use crate::stats::{autocorrelation, run_battery, TestConfig, TestReport};
use crate::{Error, Result};

/// Samples processed per streaming step; bounds memory independent of count.
pub const STREAM_CHUNK: u64 = 1 << 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsSection {
    pub eta_d: f64,
    pub e1: f64,
    pub e2: f64,
    pub phi2: f64,
    pub rate_r: f64,
}

impl Default for OpticsSection {
    fn default() -> Self {
        Self {
            eta_d: 1.0,
            e1: 0.5,
            e2: 0.5,
            phi2: 0.0,
            rate_r: 250e6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma_frac: f64,
    pub range_lo: f64,
    pub range_hi: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            sigma_frac: 0.05,
            range_lo: -1.0,
            range_hi: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdcSection {
    pub n_bits: u32,
    /// ADC span; when absent it defaults to the noiseless span [-1, 1]
    /// widened by four noise standard deviations per side.
    pub range_lo: Option<f64>,
    pub range_hi: Option<f64>,
}

impl Default for AdcSection {
    fn default() -> Self {
        Self {
            n_bits: 12,
            range_lo: None,
            range_hi: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub mode: ExtractionMode,
    /// Half-buffer length of the XOR extractor.
    pub m: usize,
    /// Toeplitz output width.
    pub n_out: u32,
    /// Optional seed file (ASCII 0/1, n_in + n_out - 1 characters). Without
    /// it the Toeplitz seed is expanded deterministically from the global
    /// seed; either way it is a public parameter.
    pub toeplitz_seed_path: Option<String>,
}

impl Default for ExtractSection {
    fn default() -> Self {
        Self {
            mode: ExtractionMode::Xor,
            m: 7,
            n_out: 6,
            toeplitz_seed_path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestsSection {
    pub alpha: f64,
    pub n_samples: usize,
    pub sample_len: usize,
    pub uniformity_threshold: f64,
}

impl Default for TestsSection {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            n_samples: 100,
            sample_len: 1_000_000,
            uniformity_threshold: 1e-4,
        }
    }
}

/// Composite pipeline configuration. Every stage draws its randomness from
/// the one global seed, so identical configs produce bit-identical artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub count: u64,
    pub optics: OpticsSection,
    pub noise: NoiseSection,
    pub adc: AdcSection,
    pub extract: ExtractSection,
    pub tests: TestsSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            count: 1_000_000,
            optics: Default::default(),
            noise: Default::default(),
            adc: Default::default(),
            extract: Default::default(),
            tests: Default::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.interference_params()?;
        self.noise_model()?;
        self.adc_config()?;
        self.test_config()?;
        if self.extract.m == 0 {
            return Err(Error::Config("extract.m must be >= 1".into()));
        }
        if self.extract.n_out == 0 || self.extract.n_out > self.adc.n_bits {
            return Err(Error::Config(format!(
                "extract.n_out must be in 1..=adc.n_bits, got {}",
                self.extract.n_out
            )));
        }
        Ok(())
    }

    pub fn interference_params(&self) -> Result<InterferenceParams> {
        InterferenceParams::new(
            self.optics.eta_d,
            self.optics.e1,
            self.optics.e2,
            self.optics.phi2,
            self.optics.rate_r,
        )
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(
            self.noise.sigma_frac,
            self.noise.range_lo,
            self.noise.range_hi,
        )
    }

    pub fn adc_config(&self) -> Result<AdcConfig> {
        let noise = self.noise_model()?;
        let (dlo, dhi) = AdcConfig::default_range(&noise);
        AdcConfig::new(
            self.adc.n_bits,
            self.adc.range_lo.unwrap_or(dlo),
            self.adc.range_hi.unwrap_or(dhi),
        )
    }

    pub fn test_config(&self) -> Result<TestConfig> {
        TestConfig::new(
            self.tests.alpha,
            self.tests.n_samples,
            self.tests.sample_len,
            self.tests.uniformity_threshold,
        )
    }

    pub fn toeplitz_seed(&self) -> Result<ToeplitzSeed> {
        let n_in = self.adc.n_bits;
        let n_out = self.extract.n_out;
        match &self.extract.toeplitz_seed_path {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let bits: Vec<u8> = text
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| match c {
                        '0' => Ok(0u8),
                        '1' => Ok(1u8),
                        other => Err(Error::MalformedInput(format!(
                            "seed file contains '{other}'"
                        ))),
                    })
                    .collect::<Result<_>>()?;
                ToeplitzSeed::new(bits, n_in, n_out)
            }
            None => ToeplitzSeed::from_rng_seed(self.seed ^ 0x746f65706c697473, n_in, n_out),
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

/// Manifest of a simulate run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateManifest {
    pub stage: String,
    pub config: PipelineConfig,
    pub count: u64,
    pub sha256: String,
}

/// Manifest of an extract run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractManifest {
    pub stage: String,
    pub config: PipelineConfig,
    pub mode: ExtractionMode,
    pub n_bits: u32,
    pub m: usize,
    pub stats: ExtractStats,
    pub saturation: Saturation,
    /// Nominal output rate at the configured pulse clock, bits per second.
    pub nominal_rate_bps: f64,
    pub sha256: String,
}

fn write_manifest<T: Serialize>(path: &Path, manifest: &T) -> Result<()> {
    let mpath = manifest_path(path);
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(mpath, json)?;
    Ok(())
}

pub fn manifest_path(artifact: &Path) -> std::path::PathBuf {
    let mut os = artifact.as_os_str().to_owned();
    os.push(".manifest.json");
    std::path::PathBuf::from(os)
}

/// Generates `config.count` samples and writes them as f64 LE, chunked.
/// Returns the manifest (also written next to the output).
pub fn cmd_simulate(config: &PipelineConfig, out_path: &Path) -> Result<SimulateManifest> {
    config.validate()?;
    let params = config.interference_params()?;
    let noise = config.noise_model()?;
    let file = fs::File::create(out_path)?;
    let mut writer = BufWriter::new(file);
    let mut hasher = Sha256::new();
    let mut buf: Vec<PulseSample> = Vec::new();
    let mut produced = 0u64;
    while produced < config.count {
        let take = (config.count - produced).min(STREAM_CHUNK) as usize;
        buf.resize(take, PulseSample { index: 0, value: 0.0 });
        generate_pulse_train_into(produced, &mut buf, &params, &noise, config.seed);
        let mut bytes = Vec::with_capacity(take * 8);
        for s in &buf {
            bytes.extend_from_slice(&s.value.to_le_bytes());
        }
        hasher.update(&bytes);
        writer.write_all(&bytes)?;
        produced += take as u64;
    }
    writer.flush()?;
    let manifest = SimulateManifest {
        stage: "simulate".into(),
        config: config.clone(),
        count: config.count,
        sha256: format!("{:x}", hasher.finalize()),
    };
    write_manifest(out_path, &manifest)?;
    Ok(manifest)
}

/// Writes samples as `index,value` CSV for plotting.
pub fn samples_to_csv(samples_path: &Path, csv_path: &Path) -> Result<u64> {
    let values = read_samples(samples_path)?;
    let mut w = BufWriter::new(fs::File::create(csv_path)?);
    writeln!(w, "index,value")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    w.flush()?;
    Ok(values.len() as u64)
}

/// Reads a full f64 LE sample stream.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::MalformedInput(format!(
            "sample file length {} is not a multiple of 8",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// XOR-extracts a quantized word stream into output words (one per m input
/// pairs), block-parallel and order-preserving. Returns discarded word count.
pub fn xor_extract_words(words: &[u16], m: usize) -> (Vec<u16>, u64) {
    let block = 2 * m;
    let blocks = words.len() / block;
    let mut out = vec![0u16; blocks * m];
    out.par_chunks_mut(m)
        .zip(words.par_chunks_exact(block))
        .for_each(|(dst, src)| {
            for j in 0..m {
                dst[j] = src[j] ^ src[j + m];
            }
        });
    (out, (words.len() - blocks * block) as u64)
}

/// Quantizes a sample file and extracts it into a packed bit file per the
/// configured mode. Writes the bit file plus a manifest.
pub fn cmd_extract(
    config: &PipelineConfig,
    samples_path: &Path,
    out_path: &Path,
) -> Result<ExtractManifest> {
    config.validate()?;
    let adc = config.adc_config()?;
    let values = read_samples(samples_path)?;
    let (words, saturation) = quantize_values(&values, &adc);
    drop(values);

    let n = adc.n_bits;
    let mut bits = BitBuf::with_capacity(words.len() * n as usize);
    let stats = match config.extract.mode {
        ExtractionMode::Xor => xor_pipeline(&words, n, config.extract.m, &mut bits)?,
        ExtractionMode::Toeplitz => {
            let lut = ToeplitzLut::build(&config.toeplitz_seed()?);
            lut.hash_stream(&words, &mut bits)
        }
        ExtractionMode::None => {
            bits = pack_words(&words, n);
            ExtractStats {
                words_in: words.len() as u64,
                words_discarded: 0,
                bits_out: words.len() as u64 * n as u64,
            }
        }
    };

    let bytes = bits.to_bytes();
    fs::write(out_path, &bytes)?;
    let manifest = ExtractManifest {
        stage: "extract".into(),
        config: config.clone(),
        mode: config.extract.mode,
        n_bits: n,
        m: config.extract.m,
        stats,
        saturation,
        nominal_rate_bps: extraction_rate(
            n,
            config.optics.rate_r,
            config.extract.mode,
            config.extract.n_out,
        ),
        sha256: sha256_hex(&bytes),
    };
    write_manifest(out_path, &manifest)?;
    Ok(manifest)
}

/// Reads a packed bit file. Bit count comes from the manifest when present,
/// otherwise all whole bytes are used.
pub fn read_bits(path: &Path) -> Result<BitBuf> {
    let bytes = fs::read(path)?;
    let nbits = match fs::read_to_string(manifest_path(path)) {
        Ok(json) => serde_json::from_str::<ExtractManifest>(&json)
            .map(|m| m.stats.bits_out as usize)
            .unwrap_or(bytes.len() * 8),
        Err(_) => bytes.len() * 8,
    };
    BitBuf::from_bytes(&bytes, nbits.min(bytes.len() * 8))
}

/// Runs the statistical battery over a bit file.
pub fn cmd_test(config: &PipelineConfig, bits_path: &Path) -> Result<TestReport> {
    config.validate()?;
    let bits = read_bits(bits_path)?;
    let cfg = config.test_config()?;
    let mut report = run_battery(&bits, &cfg)?;
    report
        .metadata
        .insert("bit_file".into(), bits_path.display().to_string());
    report
        .metadata
        .insert("extraction_mode".into(), config.extract.mode.to_string());
    report
        .metadata
        .insert("m".into(), config.extract.m.to_string());
    Ok(report)
}

/// Entropy summary of a sample file under the configured ADC.
pub fn cmd_entropy_report(config: &PipelineConfig, samples_path: &Path) -> Result<EntropyReport> {
    config.validate()?;
    let adc = config.adc_config()?;
    let noise = config.noise_model()?;
    let values = read_samples(samples_path)?;
    let (bins, saturation) = quantize_values(&values, &adc);
    let pmf = empirical_pmf(&bins, adc.n_bits)?;
    let oracle_h_min = if noise.sigma_frac > 0.0 {
        Some(convolved_pmf(&noise, &adc)?.h_min)
    } else {
        None
    };
    Ok(EntropyReport {
        n_bits: adc.n_bits,
        samples: values.len() as u64,
        p_max: pmf.p_max,
        h_min: pmf.h_min,
        oracle_h_min,
        quantum_h_min: quantum_min_entropy(&AdcConfig::new(
            adc.n_bits,
            adc.range_lo.min(-1.0),
            adc.range_hi.max(1.0),
        )?)?,
        saturation,
        reference_total_h_min: REFERENCE_TOTAL_H_MIN,
        reference_quantum_h_min: REFERENCE_QUANTUM_H_MIN,
        estimator_note: "plug-in min-entropy estimate; biased downward at small sample counts"
            .into(),
    })
}

/// Autocorrelation CSV of a bit file: `lag,rho` rows plus the i.i.d. null
/// band `+/- 4/sqrt(n)` in a trailing comment column.
pub fn autocorrelation_csv(bits_path: &Path, max_lag: usize, csv_path: &Path) -> Result<()> {
    let bits = read_bits(bits_path)?;
    let unpacked = bits.to_bit_bytes();
    let rho = autocorrelation(&unpacked, max_lag)?;
    let band = 4.0 / (unpacked.len() as f64).sqrt();
    let mut w = BufWriter::new(fs::File::create(csv_path)?);
    writeln!(w, "lag,rho,null_band")?;
    for (k, r) in rho.iter().enumerate() {
        writeln!(w, "{k},{r},{band}")?;
    }
    w.flush()?;
    Ok(())
}

/// P-value histogram CSV (ten bins per test) from a battery report.
pub fn pvalue_histogram_csv(report: &TestReport, csv_path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(csv_path)?);
    writeln!(w, "test,bin_lo,bin_hi,count")?;
    for t in report.tests.iter().filter(|t| t.implemented) {
        let mut counts = [0u64; 10];
        for &p in &t.p_values {
            counts[((p * 10.0) as usize).min(9)] += 1;
        }
        for (b, c) in counts.iter().enumerate() {
            writeln!(w, "{},{},{},{}", t.name, b as f64 / 10.0, (b + 1) as f64 / 10.0, c)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Throughput measurements of the extraction stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub n_bits: u32,
    pub m: usize,
    /// Single-pass XOR extraction, input words per second.
    pub xor_single_words_per_s: f64,
    /// Block-parallel XOR extraction, input words per second.
    pub xor_parallel_words_per_s: f64,
    /// Extracted output bits per second of the parallel XOR path.
    pub xor_extracted_bits_per_s: f64,
    /// Toeplitz LUT path, words per second.
    pub toeplitz_lut_words_per_s: f64,
    /// Naive GF(2) matrix-multiply Toeplitz path, words per second.
    pub toeplitz_naive_words_per_s: f64,
    pub threads: usize,
    pub elapsed_s: f64,
}

fn time_loop<F: FnMut() -> u64>(min_seconds: f64, mut body: F) -> f64 {
    // warmup
    body();
    let start = Instant::now();
    let mut items = 0u64;
    while start.elapsed().as_secs_f64() < min_seconds {
        items += body();
    }
    items as f64 / start.elapsed().as_secs_f64()
}

/// Measures extraction throughput on precomputed words.
pub fn cmd_bench(config: &PipelineConfig, seconds_per_stage: f64) -> Result<BenchReport> {
    config.validate()?;
    let n = config.adc.n_bits;
    let m = config.extract.m;
    let mask = ((1u32 << n) - 1) as u16;
    // deterministic pseudo-words; contents do not affect timing
    let words: Vec<u16> = (0u32..4_000_000).map(|i| (i.wrapping_mul(2654435761) >> 16) as u16 & mask).collect();

    let started = Instant::now();
    let xor_single = time_loop(seconds_per_stage, || {
        let mut out = BitBuf::with_capacity(words.len() / 2 * n as usize);
        let stats = xor_pipeline(&words, n, m, &mut out).expect("valid params");
        std::hint::black_box(&out);
        stats.words_in
    });
    let mut extracted_ratio = 0.0;
    let xor_parallel = time_loop(seconds_per_stage, || {
        let (out, _) = xor_extract_words(&words, m);
        let packed = pack_words(&out, n);
        extracted_ratio = packed.len() as f64 / words.len() as f64;
        std::hint::black_box(&packed);
        words.len() as u64
    });

    let seed = config.toeplitz_seed()?;
    let lut = ToeplitzLut::build(&seed);
    let toeplitz_lut = time_loop(seconds_per_stage, || {
        let mut out = BitBuf::with_capacity(words.len() * seed.n_out as usize);
        lut.hash_stream(&words, &mut out);
        std::hint::black_box(&out);
        words.len() as u64
    });
    let toeplitz_naive = time_loop(seconds_per_stage, || {
        let mut out = BitBuf::with_capacity(words.len() * seed.n_out as usize);
        for &w in &words {
            let word = crate::digitizer::AdcWord::new(w, n);
            let h = crate::extractor::toeplitz_hash(&word, &seed).expect("widths match");
            out.push_bits(h.bin as u64, seed.n_out);
        }
        std::hint::black_box(&out);
        words.len() as u64
    });

    Ok(BenchReport {
        n_bits: n,
        m,
        xor_single_words_per_s: xor_single,
        xor_parallel_words_per_s: xor_parallel,
        xor_extracted_bits_per_s: xor_parallel * extracted_ratio,
        toeplitz_lut_words_per_s: toeplitz_lut,
        toeplitz_naive_words_per_s: toeplitz_naive,
        threads: rayon::current_num_threads(),
        elapsed_s: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("qrng-pipeline-{tag}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn small_config() -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.count = 50_000;
        cfg.tests.n_samples = 60;
        cfg.tests.sample_len = 2_000;
        cfg
    }

    #[test]
    fn toml_round_trip_and_defaults() {
        let cfg = PipelineConfig::default();
        let text = cfg.to_toml_string();
        let back = PipelineConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.seed, cfg.seed);
        assert_eq!(back.adc.n_bits, 12);

        let partial = PipelineConfig::from_toml_str("seed = 7\n[noise]\nsigma_frac = 0.0\n").unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.noise.sigma_frac, 0.0);
        // noiseless default ADC span is [-1, 1]
        let adc = partial.adc_config().unwrap();
        assert_eq!((adc.range_lo, adc.range_hi), (-1.0, 1.0));

        assert!(PipelineConfig::from_toml_str("unknown_key = 1").is_err());
    }

    #[test]
    fn default_adc_range_tracks_noise() {
        let cfg = PipelineConfig::default();
        let adc = cfg.adc_config().unwrap();
        assert!((adc.range_lo + 1.4).abs() < 1e-12);
        assert!((adc.range_hi - 1.4).abs() < 1e-12);
    }

    #[test]
    fn simulate_is_deterministic_and_checksummed() {
        let dir = tmpdir("sim");
        let mut cfg = small_config();
        cfg.count = 10_000;
        let p1 = dir.join("a.f64");
        let p2 = dir.join("b.f64");
        let m1 = cmd_simulate(&cfg, &p1).unwrap();
        let m2 = cmd_simulate(&cfg, &p2).unwrap();
        assert_eq!(m1.sha256, m2.sha256);
        assert_eq!(fs::metadata(&p1).unwrap().len(), 8 * 10_000);
        assert!(manifest_path(&p1).exists());

        cfg.count = 0;
        let m0 = cmd_simulate(&cfg, &dir.join("empty.f64")).unwrap();
        assert_eq!(m0.count, 0);
        assert!(manifest_path(&dir.join("empty.f64")).exists());
    }

    #[test]
    fn extract_length_contract_per_mode() {
        let dir = tmpdir("extract");
        let mut cfg = small_config();
        cfg.count = 2_000;
        let samples = dir.join("s.f64");
        cmd_simulate(&cfg, &samples).unwrap();

        let bits = dir.join("xor.bits");
        let man = cmd_extract(&cfg, &samples, &bits).unwrap();
        let blocks = 2_000 / (2 * cfg.extract.m) as u64;
        assert_eq!(man.stats.bits_out, blocks * cfg.extract.m as u64 * 12);
        assert_eq!(man.stats.words_discarded, 2_000 - blocks * 2 * cfg.extract.m as u64);
        assert_eq!(man.nominal_rate_bps, 1.5e9);
        assert_eq!(read_bits(&bits).unwrap().len() as u64, man.stats.bits_out);

        cfg.extract.mode = ExtractionMode::None;
        let man = cmd_extract(&cfg, &samples, &dir.join("raw.bits")).unwrap();
        assert_eq!(man.stats.bits_out, 2_000 * 12);

        cfg.extract.mode = ExtractionMode::Toeplitz;
        let man = cmd_extract(&cfg, &samples, &dir.join("toep.bits")).unwrap();
        assert_eq!(man.stats.bits_out, 2_000 * 6);
    }

    #[test]
    fn end_to_end_determinism() {
        let dir = tmpdir("e2e");
        let cfg = small_config();
        let mut hashes = Vec::new();
        for run in 0..2 {
            let samples = dir.join(format!("r{run}.f64"));
            let bits = dir.join(format!("r{run}.bits"));
            cmd_simulate(&cfg, &samples).unwrap();
            let man = cmd_extract(&cfg, &samples, &bits).unwrap();
            hashes.push(man.sha256.clone());
        }
        assert_eq!(hashes[0], hashes[1]);
    }

    #[test]
    fn xor_extract_words_matches_bit_pipeline() {
        let words: Vec<u16> = (0..997u16).map(|i| i.wrapping_mul(1031) & 0xFFF).collect();
        let (out, discarded) = xor_extract_words(&words, 7);
        let mut reference = BitBuf::new();
        let stats = xor_pipeline(&words, 12, 7, &mut reference).unwrap();
        assert_eq!(discarded, stats.words_discarded);
        assert!(pack_words(&out, 12) == reference);
    }

    #[test]
    fn entropy_report_fields() {
        let dir = tmpdir("entropy");
        let mut cfg = small_config();
        cfg.count = 200_000;
        cfg.adc.range_lo = Some(-1.0);
        cfg.adc.range_hi = Some(1.0);
        let samples = dir.join("s.f64");
        cmd_simulate(&cfg, &samples).unwrap();
        let rep = cmd_entropy_report(&cfg, &samples).unwrap();
        assert_eq!(rep.n_bits, 12);
        assert!(rep.h_min > 0.0 && rep.h_min <= 12.0);
        assert!(rep.oracle_h_min.is_some());
        assert!((rep.quantum_h_min - 6.65).abs() < 0.01);
        assert_eq!(rep.reference_quantum_h_min, 6.49);
    }

    #[test]
    fn toeplitz_seed_file_parsing() {
        let dir = tmpdir("seed");
        let path = dir.join("seed.txt");
        fs::write(&path, "1010 1100\n0111 0110\n1").unwrap();
        let mut cfg = small_config();
        cfg.extract.toeplitz_seed_path = Some(path.display().to_string());
        let seed = cfg.toeplitz_seed().unwrap();
        assert_eq!(seed.bits.len(), 17);
        fs::write(&path, "10102").unwrap();
        assert!(cfg.toeplitz_seed().is_err());
    }
}
