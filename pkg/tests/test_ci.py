import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from randpivot.ci import CSV_FIELDS, Interval, classical_ci, randomized_ci, z_quantile
from randpivot.errors import DegenerateStudentizerError, DenominatorError, ParameterError
from randpivot.linproc import ProcessSpec, simulate, simulate_batch
from randpivot.rng import stream
from randpivot.studentize import studentized_randomized
from randpivot.weights import WeightScheme, gen_weights, gen_weights_batch

BERN = WeightScheme.bernoulli(0.25)


def test_z_quantile():
    assert_allclose(z_quantile(0.05), 1.959963984540054, rtol=1e-15)
    assert_allclose(z_quantile(0.10), 1.6448536269514722, rtol=1e-15)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ParameterError):
            z_quantile(bad)


def test_point_mass_midpoint_is_sample_mean():
    x = simulate(ProcessSpec.ar1(0.8), 200, 3).values
    for c in (0.0, 2.0):
        iv = randomized_ci(x, np.full(200, c), 0.39, 0.05, 0.0, 6,
                           scheme=WeightScheme.point_mass(c))
        assert_allclose(iv.midpoint, x.mean(), rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), mu=st.floats(-1, 1), complete=st.booleans(),
       d=st.sampled_from([0.0, 0.3]))
def test_coverage_iff_pivot_within_quantile(seed, mu, complete, d):
    x = simulate(ProcessSpec.ar1(0.5), 120, seed).values
    w = gen_weights(BERN, 120, seed)
    iv = randomized_ci(x, w, 0.39, 0.05, d, 5, complete=complete, scheme=BERN)
    G = studentized_randomized(x, w, 0.39, mu, d, 5, complete=complete, scheme=BERN)
    z = z_quantile(0.05)
    if abs(abs(G) - z) > 1e-9:
        assert iv.covers(mu) == (abs(G) <= z)
    st_value = iv.diagnostics["studentizer"]
    want = 2 * z * 120 ** (0.5 + d) * math.sqrt(st_value) / abs(np.sum(w - 0.39))
    assert_allclose(iv.length, want, rtol=1e-12)
    assert iv.lo <= iv.hi


def test_classical_interval_form():
    x = simulate(ProcessSpec.ar1(0.8), 200, 4).values
    iv = classical_ci(x, 0.05, 0.0, 6)
    assert_allclose(iv.midpoint, x.mean(), rtol=1e-12)
    half = z_quantile(0.05) * 200**-0.5 * math.sqrt(iv.diagnostics["studentizer"])
    assert_allclose(iv.length, 2 * half, rtol=1e-12)
    assert iv.method == "classical"


def test_degenerate_inputs():
    with pytest.raises(DegenerateStudentizerError):
        classical_ci(np.full(50, 1.0), 0.05, 0.0, 4)
    with pytest.raises(DegenerateStudentizerError):
        randomized_ci(np.full(50, 1.0), gen_weights(BERN, 50, 1), 0.39, 0.05, 0.0, 4, scheme=BERN)
    x = simulate(ProcessSpec.white(), 50, 1).values
    w = gen_weights(WeightScheme.multinomial(), 50, 1)
    with pytest.raises(DenominatorError):
        randomized_ci(x, w, 1.0, 0.05, 0.0, 4, scheme=WeightScheme.multinomial())
    with pytest.raises(ParameterError):
        randomized_ci(x, w[:-1], 1.5, 0.05, 0.0, 4, scheme=WeightScheme.multinomial())
    with pytest.raises(ParameterError):
        randomized_ci(x, w, 1.5, 0.05, 0.0, 4)


def test_randomized_length_shrinks_with_n():
    spec = ProcessSpec.ar1(0.8, "lognormal")
    med = {}
    for n, theta, q in ((200, 0.39, 6), (1600, 0.35, 12)):
        x = simulate_batch(spec, n, 300, stream(5, n))
        w = gen_weights_batch(BERN, n, 300, stream(5, n, "weights"))
        med[n] = np.median([randomized_ci(a, b, theta, 0.05, 0.0, q, scheme=BERN).length
                            for a, b in zip(x, w)])
    assert med[1600] < med[200]


def test_diagnostics_and_csv_row():
    x = simulate(ProcessSpec.white(), 60, 2).values
    w = gen_weights(BERN, 60, 2)
    iv = randomized_ci(x, w, 0.41, 0.1, 0.0, 3, complete=True)
    assert iv.method == "randomized_complete" and iv.alpha == 0.1
    assert set(iv.diagnostics) == {"theta", "q", "d_used", "weight_sum", "studentizer"}
    assert_allclose(iv.diagnostics["weight_sum"], np.sum(w - 0.41))
    row = iv.to_csv_row(0.0)
    assert len(row) == len(CSV_FIELDS)
    assert row[0] == "randomized_complete" and row[-1] in (0, 1)
    assert float(row[1]) == iv.lo and float(row[3]) == iv.length
    assert iv.to_csv_row()[-1] == ""
    assert Interval(1.0, 3.0, 0.05, "x").covers(3.0)
