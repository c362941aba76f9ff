import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose
from scipy.special import binom

from randpivot.bootstrap import (BootstrapConfig, block_ci, filtered_sieve_ci, fit_ar,
                                 frac_diff_coefficients, percentile_interval, sieve_ci)
from randpivot.errors import FitError, ParameterError
from randpivot.linproc import ProcessSpec, simulate, simulate_batch
from randpivot.rng import stream


def test_config_validation_and_defaults():
    cfg = BootstrapConfig()
    assert cfg.B == 1000 and cfg.method == "sieve"
    assert cfg.pmax_for(100) == 20 and cfg.pmax_for(200) == 24
    assert cfg.blocklen_for(100) == 10 and cfg.blocklen_for(200) == 15
    for kw in ({"B": 99}, {"method": "wild"}, {"pmax": 0}, {"blocklen": 0}, {"alpha": 1.0}):
        with pytest.raises(ParameterError):
            BootstrapConfig(**kw)


def test_fit_ar_recovers_coefficient():
    x = simulate(ProcessSpec.ar1(0.8, "normal"), 5000, 1).values
    fit = fit_ar(x - x.mean(), 10)
    assert abs(fit.phi[0] - 0.8) < 0.05
    assert np.all(np.abs(fit.phi[1:]) < 0.05)
    assert abs(fit.sigma2 - 1) < 0.1
    assert fit.order == fit.phi.size


def test_fit_ar_errors():
    with pytest.raises(FitError):
        fit_ar(np.full(50, 2.0), 5)
    with pytest.raises(FitError):
        fit_ar(1.1 ** np.arange(60.0), 3)
    with pytest.raises(ParameterError):
        fit_ar(np.arange(10.0), 5)
    with pytest.raises(FitError):
        sieve_ci(np.full(50, 2.0), BootstrapConfig(B=100), 1)


def test_frac_diff_coefficients():
    d = 0.37
    k = np.arange(30)
    assert_allclose(frac_diff_coefficients(d, 30), (-1.0) ** k * binom(d, k), rtol=1e-12)
    inverse = np.convolve(frac_diff_coefficients(d, 30), frac_diff_coefficients(-d, 30))[:30]
    assert_allclose(inverse, np.eye(1, 30)[0], atol=1e-14)
    assert_allclose(frac_diff_coefficients(0.0, 5), [1, 0, 0, 0, 0])


@settings(max_examples=50, deadline=None)
@given(means=arrays(float, st.integers(100, 400), elements=st.floats(-1e3, 1e3)),
       alpha=st.floats(0.01, 0.5))
def test_percentile_interval_brackets_median(means, alpha):
    iv = percentile_interval(means, alpha, "sieve", {})
    assert iv.lo <= np.median(means) <= iv.hi
    assert iv.lo in means and iv.hi in means


def test_reproducible_with_fixed_seed():
    x = simulate(ProcessSpec.fid(0.4), 100, 2).values
    cfg = BootstrapConfig(B=200)
    for f in (sieve_ci, block_ci, filtered_sieve_ci):
        a, b = f(x, cfg, 7), f(x, cfg, 7)
        assert (a.lo, a.hi) == (b.lo, b.hi)
    assert sieve_ci(x, cfg, 7).lo != sieve_ci(x, cfg, 8).lo


def test_zero_memory_filter_reduces_to_sieve():
    x = simulate(ProcessSpec.ar1(0.5), 300, 3).values
    cfg = BootstrapConfig(B=300)
    raw = sieve_ci(x, cfg, 11)
    filt = filtered_sieve_ci(x, cfg, 11, d_hat=0.0)
    assert_allclose([filt.lo, filt.hi], [raw.lo, raw.hi], rtol=1e-10)
    assert filt.method == "augsieve" and filt.diagnostics["d_hat"] == 0.0


def test_filtered_sieve_estimates_memory():
    x = simulate(ProcessSpec.fid(0.4), 200, 4).values
    iv = filtered_sieve_ci(x, BootstrapConfig(B=200), 5)
    assert 0 <= iv.diagnostics["d_hat"] < 0.5
    assert iv.lo < iv.hi


def test_block_edge_cases():
    x = simulate(ProcessSpec.white(), 40, 5).values
    full = block_ci(x, BootstrapConfig(B=100, blocklen=40), 1)
    assert full.length == 0 and full.lo == pytest.approx(x.mean())
    with pytest.raises(ParameterError):
        block_ci(x, BootstrapConfig(B=100, blocklen=41), 1)
    iv = block_ci(x, BootstrapConfig(B=100), 1)
    assert iv.diagnostics["blocklen"] == 7


def _coverage(fn, cfg, n=500, reps=500, seed=17):
    x = simulate_batch(ProcessSpec.white("normal"), n, reps, stream(seed))
    hits = [fn(row, cfg, stream(seed, i, "bootstrap")).covers(0.0) for i, row in enumerate(x)]
    return np.mean(hits)


def test_sieve_coverage_on_white_noise():
    assert abs(_coverage(sieve_ci, BootstrapConfig(B=500)) - 0.95) < 0.04


def test_iid_block_coverage_on_white_noise():
    assert abs(_coverage(block_ci, BootstrapConfig(B=500, blocklen=1)) - 0.95) < 0.04
