#!/usr/bin/env python3
"""Smoke test for the qrng_py extension module.

Builds the cdylib if needed, loads it, and exercises the main types and
operations end to end. Run from the repository root:

    python3 python/smoke_test.py
"""

import json
import math
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def build_module() -> str:
    """Builds qrng-py and returns a directory containing qrng_py.so."""
    subprocess.run(
        ["cargo", "build", "--release", "-p", "qrng-py"], cwd=ROOT, check=True
    )
    libname = {
        "darwin": "libqrng_py.dylib",
        "win32": "qrng_py.dll",
    }.get(sys.platform, "libqrng_py.so")
    src = os.path.join(ROOT, "target", "release", libname)
    dst_dir = os.path.join(ROOT, "target", "pymodule")
    os.makedirs(dst_dir, exist_ok=True)
    shutil.copy2(src, os.path.join(dst_dir, "qrng_py.so"))
    return dst_dir


def main() -> None:
    sys.path.insert(0, build_module())
    import qrng_py

    # Optics: arcsine PDF and a deterministic pulse train.
    assert abs(qrng_py.arcsine_pdf(0.0) - 1.0 / math.pi) < 1e-12
    params = qrng_py.InterferenceParams()
    assert params.rate_r == 250e6
    assert abs(params.peak_voltage() - 1.0) < 1e-12
    noise = qrng_py.NoiseModel(sigma_frac=0.05)
    values = qrng_py.pulse_train(100_000, params, noise, seed=42)
    assert len(values) == 100_000
    assert values == qrng_py.pulse_train(100_000, params, noise, seed=42)
    assert max(abs(v) for v in values) < 1.0 + 6 * noise.sigma_abs

    # Digitizer: quantization and entropy estimates.
    adc = qrng_py.AdcConfig(12, -1.4, 1.4)
    assert adc.n_bits == 12
    bins, sat_lo, sat_hi = qrng_py.quantize(values, adc)
    assert len(bins) == len(values) and sat_lo == 0 and sat_hi == 0
    h_emp = qrng_py.min_entropy(bins, 12)
    h_oracle = qrng_py.oracle_min_entropy(noise, adc)
    assert 0.0 < h_emp <= 12.0
    assert abs(h_emp - h_oracle) < 0.5, (h_emp, h_oracle)
    unit = qrng_py.AdcConfig(12, -1.0, 1.0)
    assert abs(qrng_py.quantum_min_entropy(unit) - 6.65) < 0.01
    assert abs(-math.log2(qrng_py.arcsine_bin_pmax(12))
               - qrng_py.quantum_min_entropy(unit)) < 1e-12

    # Extractor: XOR pipeline length contract and Toeplitz hashing.
    packed, bits_out, discarded = qrng_py.xor_extract(bins, 12, 7)
    assert bits_out == 12 * 7 * (len(bins) // 14)
    assert discarded == len(bins) % 14
    assert len(packed) == (bits_out + 7) // 8
    seed_bits = [1, 0] * 8 + [1]  # 17 = 12 + 6 - 1
    hashed = qrng_py.toeplitz_hash([0, 0xFFF, 1], seed_bits, 12, 6)
    assert hashed[0] == 0 and all(0 <= h < 64 for h in hashed)
    assert qrng_py.extraction_rate(12, 250e6, "xor", 6) == 1.5e9

    # Stats: monobit and autocorrelation on the extracted stream.
    p = qrng_py.monobit_frequency(packed, bits_out)
    assert 0.0 <= p <= 1.0
    rho = qrng_py.autocorrelation(packed, bits_out, 10)
    assert rho[0] == 1.0 and len(rho) == 11

    # File pipeline: simulate -> extract -> test from a TOML config.
    with tempfile.TemporaryDirectory() as tmp:
        config = "\n".join(
            [
                "seed = 7",
                "count = 400000",
                "[tests]",
                "n_samples = 60",
                "sample_len = 2000",
            ]
        )
        samples = os.path.join(tmp, "samples.f64")
        bits_path = os.path.join(tmp, "random.bits")
        manifest = json.loads(qrng_py.simulate_to_file(config, samples))
        assert manifest["count"] == 400000
        extract = json.loads(qrng_py.extract_file(config, samples, bits_path))
        assert extract["stats"]["bits_out"] == 12 * 7 * (400000 // 14)
        report = json.loads(qrng_py.test_file(config, bits_path))
        assert len([t for t in report["tests"] if t["implemented"]]) == 7

    print("smoke test passed")


if __name__ == "__main__":
    main()
