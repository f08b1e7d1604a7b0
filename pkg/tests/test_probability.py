"""Input-uncertainty layer: intervals, entropy, standardization, sampling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from behuq.probability import (
    BadSupportError,
    NotNormalizedError,
    OutOfSupportError,
    RandomInputSpec,
    UniformInterval,
    ZeroNominalError,
    entropy,
    from_standard,
    interval_from_nominal,
    maxent_uniform,
    sample,
    standardize,
    to_standard,
)


# ---------------------------------------------------------------------------
# intervals


def test_uniform_interval_basics():
    iv = UniformInterval(0.64, 0.96)
    assert iv.width == pytest.approx(0.32)
    assert iv.midpoint == pytest.approx(0.8)
    assert iv.density == pytest.approx(1.0 / 0.32)
    assert iv.contains(0.8) and not iv.contains(1.0)


def test_interval_rejects_degenerate_support():
    with pytest.raises(BadSupportError):
        UniformInterval(1.0, 1.0)
    with pytest.raises(BadSupportError):
        UniformInterval(2.0, 1.0)
    with pytest.raises(BadSupportError):
        UniformInterval(0.0, math.inf)


def test_interval_from_nominal_spread():
    iv = interval_from_nominal(0.05, 0.2)
    assert (iv.a, iv.b) == (pytest.approx(0.04), pytest.approx(0.06))
    iv = interval_from_nominal(0.8, 0.2)
    assert (iv.a, iv.b) == (pytest.approx(0.64), pytest.approx(0.96))


def test_interval_from_nominal_negative_nominal_keeps_order():
    iv = interval_from_nominal(-0.5, 0.2)
    assert (iv.a, iv.b) == (pytest.approx(-0.6), pytest.approx(-0.4))


def test_interval_from_nominal_half_width_override():
    iv = interval_from_nominal(0.0, 0.2, half_width=0.18)
    assert (iv.a, iv.b) == (-0.18, 0.18)


def test_interval_from_nominal_zero_without_half_width():
    with pytest.raises(ZeroNominalError):
        interval_from_nominal(0.0, 0.2)


# ---------------------------------------------------------------------------
# entropy


def test_uniform_entropy_closed_form():
    for a, b in [(0.0, 1.0), (0.64, 0.96), (-2.0, 3.0)]:
        iv = maxent_uniform(a, b)
        grid = iv.grid(2001)
        assert entropy(grid, iv.pdf(grid)) == pytest.approx(
            math.log(b - a), abs=1e-8)


def test_entropy_rejects_unnormalized_density():
    grid = np.linspace(0.0, 1.0, 101)
    with pytest.raises(NotNormalizedError):
        entropy(grid, np.full_like(grid, 1.1))


def test_entropy_handles_zero_density_regions():
    # density that is zero on part of the grid: 0*log(0) must contribute 0
    grid = np.linspace(0.0, 2.0, 4001)
    dens = np.where(grid <= 1.0, 1.0, 0.0)
    dens /= np.trapezoid(dens, grid)
    h = entropy(grid, dens)
    assert np.isfinite(h)


def test_uniform_maximizes_entropy_among_small_family():
    # tilt the uniform by a few smooth bumps; every tilt must lose entropy
    iv = maxent_uniform(0.0, 2.0)
    grid = iv.grid(4001)
    base = iv.pdf(grid)
    h0 = entropy(grid, base)
    for k in range(1, 6):
        tilt = base * (1.0 + 0.3 * np.sin(k * math.pi * grid))
        tilt /= np.trapezoid(tilt, grid)
        assert entropy(grid, tilt) < h0


# ---------------------------------------------------------------------------
# standardization


def test_to_standard_maps_endpoints_and_midpoint_exactly():
    iv = UniformInterval(0.64, 0.96)
    assert to_standard(0.64, iv) == -1.0
    assert to_standard(0.96, iv) == 1.0
    assert to_standard(iv.midpoint, iv) == 0.0


def test_to_standard_rejects_points_outside_support():
    iv = UniformInterval(0.0, 1.0)
    with pytest.raises(OutOfSupportError):
        to_standard(1.01, iv)
    with pytest.raises(OutOfSupportError):
        to_standard(-0.01, iv)


def test_round_trip_is_tight():
    iv = UniformInterval(0.04, 0.06)
    x = np.linspace(0.04, 0.06, 1001)
    back = from_standard(to_standard(x, iv), iv)
    assert np.max(np.abs(back - x)) < 1e-15


@given(st.floats(-1e3, 1e3), st.floats(1e-6, 1e3), st.floats(0.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_standardization_round_trip_property(mid, half, u):
    iv = UniformInterval(mid - half, mid + half)
    x = iv.a + u * (iv.b - iv.a)
    x = min(max(x, iv.a), iv.b)
    xi = to_standard(x, iv)
    assert -1.0 <= xi <= 1.0
    assert from_standard(xi, iv) == pytest.approx(x, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# input specs


def make_spec(random=("lambda", "kappa", "f", "omega")):
    nominals = {"xi": 0.01, "chi": 0.05, "lambda": 0.05, "kappa": 0.5,
                "f": 0.083, "omega": 0.8, "beta": 0.0, "delta": 0.0,
                "phi": 0.0, "p": 0.0}
    entries = tuple((name, interval_from_nominal(nominals[name], 0.2))
                    for name in random)
    fixed = {k: v for k, v in nominals.items() if k not in random}
    return RandomInputSpec(entries=entries, fixed=fixed)


def test_spec_requires_exact_parameter_cover():
    spec = make_spec()
    with pytest.raises(ValueError):
        RandomInputSpec(entries=spec.entries, fixed={})
    bad_fixed = dict(spec.fixed)
    bad_fixed["kappa"] = 0.5  # also random -> overlap
    with pytest.raises(ValueError):
        RandomInputSpec(entries=spec.entries, fixed=bad_fixed)


def test_spec_dimension_and_order():
    spec = make_spec()
    assert spec.dimension == 4
    assert spec.names == ("lambda", "kappa", "f", "omega")
    assert spec.index("omega") == 3


def test_params_from_row_spells_lambda():
    spec = make_spec()
    params = spec.params_from_row(np.array([0.05, 0.5, 0.083, 0.8]))
    assert params.lam == 0.05
    assert params.f == 0.083


def test_kernel_matrix_matches_param_rows():
    spec = make_spec()
    rng = np.random.default_rng(7)
    X = sample(spec, 16, rng)
    K = spec.kernel_matrix(X)
    assert K.shape == (16, 9)
    for i in range(16):
        np.testing.assert_array_equal(
            K[i], spec.params_from_row(X[i]).kernel_row())


def test_sample_stays_inside_supports_and_is_reproducible():
    spec = make_spec()
    X1 = sample(spec, 500, np.random.default_rng(42))
    X2 = sample(spec, 500, np.random.default_rng(42))
    np.testing.assert_array_equal(X1, X2)
    for j, name in enumerate(spec.names):
        iv = spec.interval(name)
        assert X1[:, j].min() >= iv.a
        assert X1[:, j].max() <= iv.b


def test_sample_prefix_property():
    # drawing n rows then m < n rows from identical generators gives the
    # leading block: sample sizes must not reshuffle the stream
    spec = make_spec()
    big = sample(spec, 1000, np.random.default_rng(3))
    small = sample(spec, 100, np.random.default_rng(3))
    np.testing.assert_array_equal(big[:100], small)


def test_standardize_matrix_hits_unit_cube():
    spec = make_spec()
    X = sample(spec, 200, np.random.default_rng(0))
    Xi = standardize(spec, X)
    assert Xi.shape == X.shape
    assert np.all(Xi >= -1.0) and np.all(Xi <= 1.0)
