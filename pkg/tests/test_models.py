import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmed.divergence import dinf
from dmed.empirical import EmpiricalDist
from dmed.models import (
    Bernoulli,
    FiniteSupport,
    RngStream,
    ShiftedNegExponential,
    ShiftedNegGamma,
    TwoPoint,
    UniformInterval,
    model_from_dict,
    model_view,
    sample,
)

FAMILIES = [
    Bernoulli(0.3),
    TwoPoint(-2.0, 1.0, 0.6),
    FiniteSupport([-3.0, 0.0, 0.5, 1.0], [0.1, 0.2, 0.3, 0.4]),
    UniformInterval(-1.0, 1.0),
    UniformInterval(-2.0, 0.5),
    ShiftedNegExponential(2.0),
    ShiftedNegGamma(3.0, 2.0),
    ShiftedNegGamma(0.5, 1.5),
]
IDS = [repr(m) for m in FAMILIES]


# -- EmpiricalDist ----------------------------------------------------------------


def test_push_merges_duplicates():
    F = EmpiricalDist()
    for x in [0.0, 1.0, 0.0, 1.0, 1.0]:
        F.push(x)
    assert len(F) == 2
    assert sorted(F.atoms) == [(0.0, 2.0), (1.0, 3.0)]
    assert F.total_weight == 5.0
    assert F.mean() == pytest.approx(0.6, abs=1e-15)


def test_push_rejects_values_above_one():
    F = EmpiricalDist()
    with pytest.raises(ValueError):
        F.push(1.0000001)
    with pytest.raises(ValueError):
        F.push(float("nan"))
    with pytest.raises(ValueError):
        EmpiricalDist([0.5], [0.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1.0, allow_nan=False), min_size=1, max_size=60), st.floats(-1e3, 1.0))
def test_push_invariants(xs, extra):
    F = EmpiricalDist(xs)
    before = dict(F.atoms)
    F.push(extra)
    after = dict(F.atoms)
    assert F.total_weight == len(xs) + 1
    assert after[extra] == before.get(extra, 0.0) + 1.0
    assert all(after[x] == w for x, w in before.items() if x != extra)
    assert F.mean() <= 1.0
    assert F.mean() == pytest.approx(np.mean(xs + [extra]), abs=1e-9 * (1 + max(abs(v) for v in xs + [extra])))


def test_small_and_large_paths_agree():
    rng = np.random.default_rng(0)
    xs = rng.uniform(-3, 1, 100)
    big = EmpiricalDist(xs)
    mu, nu = 0.4, 1.1
    y = xs - mu
    assert big.expect_log(nu, mu) == pytest.approx(np.mean(np.log(1 - y * nu)), abs=1e-13)
    assert big.expect_ratio(nu, mu) == pytest.approx(np.mean(y / (1 - y * nu)), abs=1e-13)
    assert big.expect_ratio_sq(nu, mu) == pytest.approx(np.mean((y / (1 - y * nu)) ** 2), abs=1e-12)
    small = EmpiricalDist(xs[:10])
    y = xs[:10] - mu
    assert small.expect_log(nu, mu) == pytest.approx(np.mean(np.log(1 - y * nu)), abs=1e-13)
    assert small.ratio_and_log(nu, mu) == pytest.approx((np.mean(np.log(1 - y * nu)), np.mean(y / (1 - y * nu))), abs=1e-13)


def test_inv_gap_infinite_with_atom_at_one():
    assert EmpiricalDist([0.0, 1.0]).expect_inv_gap(0.5) == math.inf
    assert EmpiricalDist([0.0]).expect_inv_gap(0.5) == 0.5


# -- RngStream and sampling -----------------------------------------------------------


def test_degenerate_bernoulli():
    rng = RngStream(1, 0)
    assert all(sample(Bernoulli(1.0), rng) == 1.0 for _ in range(100))


@pytest.mark.parametrize("model", FAMILIES, ids=IDS)
def test_stream_determinism(model):
    a = model.sample(RngStream(42, 3), 1000)
    b = model.sample(RngStream(42, 3), 1000)
    c = model.sample(RngStream(42, 4), 1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all(a <= 1.0)


def test_exponential_sample_mean_clt_band():
    x = ShiftedNegExponential(1.0).sample(RngStream(7, 0), 10**6)
    assert abs(x.mean() - 0.0) <= 0.003


def test_streams_uncorrelated():
    a = UniformInterval(0, 1).sample(RngStream(9, 0), 200_000)
    b = UniformInterval(0, 1).sample(RngStream(9, 1), 200_000)
    # 4 standard errors of a sample correlation
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(200_000)


# -- means, MGFs ----------------------------------------------------------------------


@pytest.mark.parametrize("model", FAMILIES, ids=IDS)
def test_log_mgf_slope_at_zero_is_mean(model):
    h = 1e-5
    fd = (model.log_mgf(h) - model.log_mgf(-h)) / (2 * h)
    assert fd == pytest.approx(model.mean(), abs=1e-6)
    assert model.log_mgf(0.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("model", FAMILIES, ids=IDS)
@pytest.mark.parametrize("lam", [-0.4, 0.3, 2.0])
def test_log_mgf_derivs_match_finite_differences(model, lam):
    h = 1e-5
    d1, d2 = model.log_mgf_derivs(lam)
    assert d1 == pytest.approx((model.log_mgf(lam + h) - model.log_mgf(lam - h)) / (2 * h), abs=1e-6)
    fd2 = (model.log_mgf(lam + h) - 2 * model.log_mgf(lam) + model.log_mgf(lam - h)) / h**2
    assert d2 == pytest.approx(fd2, abs=1e-3)


@pytest.mark.parametrize("model", FAMILIES, ids=IDS)
def test_log_mgf_against_monte_carlo(model):
    x = model.sample(RngStream(3, 0), 400_000)
    for lam in (-0.3, 0.5):
        assert model.log_mgf(lam) == pytest.approx(math.log(np.mean(np.exp(lam * x))), abs=0.01)


def test_exponential_log_mgf_closed_form():
    m = ShiftedNegExponential(1.0)
    assert m.log_mgf(1.0) == pytest.approx(1 - math.log(2), abs=1e-15)
    assert m.lambda_domain() == (-1.0, math.inf)


@pytest.mark.parametrize("model", FAMILIES, ids=IDS)
def test_mean_matches_samples(model):
    x = model.sample(RngStream(5, 1), 400_000)
    assert abs(x.mean() - model.mean()) < 5 * x.std() / math.sqrt(x.size)


# -- views ------------------------------------------------------------------------------


def test_bernoulli_view_example():
    v = model_view(Bernoulli(0.5))
    assert v.expect_log(1.0, 0.75) == pytest.approx(0.5 * math.log(0.75) + 0.5 * math.log(1.75), abs=1e-15)


@pytest.mark.parametrize("model", FAMILIES, ids=IDS)
def test_view_zero_at_origin(model):
    assert model.view().expect_log(0.0, 0.3) == 0.0


def test_exponential_inv_gap_diverges():
    assert model_view(ShiftedNegExponential(1.0)).expect_inv_gap(0.5) == math.inf
    # shape > 1: E[1/G] = rate/(shape-1)
    assert model_view(ShiftedNegGamma(3.0, 2.0)).expect_inv_gap(0.5) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("model", FAMILIES, ids=IDS)
def test_view_expectations_against_monte_carlo(model):
    x = model.sample(RngStream(11, 2), 10**6)
    v = model.view()
    mu = min(model.mean() + 0.1, 0.95)
    nu = 0.5 / (1.0 - mu)
    y = x - mu
    g = 1.0 - y * nu
    for exact, draws in (
        (v.expect_log(nu, mu), np.log(g)),
        (v.expect_ratio(nu, mu), y / g),
        (v.expect_ratio_sq(nu, mu), (y / g) ** 2),
    ):
        se = draws.std() / math.sqrt(draws.size)
        assert abs(exact - draws.mean()) <= 4 * se + 1e-12


@pytest.mark.parametrize("model", FAMILIES, ids=IDS)
def test_empirical_dinf_converges_to_model(model):
    mu = min(model.mean() + 0.15, 0.95)
    x = model.sample(RngStream(13, 0), 10**5)
    assert abs(dinf(EmpiricalDist(x), mu) - dinf(model.view(), mu)) <= 0.01


def test_gamma_view_boundary_closed_form():
    v = ShiftedNegGamma(3.0, 2.0).view()
    mu = 0.2
    nu = 1.0 / (1.0 - mu)
    assert v.expect_log_at_boundary(mu) == pytest.approx(v.expect_log(nu * (1 - 1e-13), mu), abs=1e-8)


# -- serialization ------------------------------------------------------------------------


@pytest.mark.parametrize("model", FAMILIES, ids=IDS)
def test_round_trip(model):
    assert model_from_dict(model.to_dict()) == model


@pytest.mark.parametrize(
    "spec,exc",
    [
        ({"p": 0.5}, KeyError),
        ({"family": "cauchy"}, ValueError),
        ({"family": "bernoulli"}, KeyError),
        ({"family": "bernoulli", "p": 0.5, "q": 1}, ValueError),
        ({"family": "uniform", "a": 0.0, "b": 1.5}, ValueError),
    ],
)
def test_bad_specs(spec, exc):
    with pytest.raises(exc):
        model_from_dict(spec)
