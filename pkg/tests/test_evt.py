from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize, stats

from scalefree_lab.evt import (
    EULER_GAMMA,
    Estimate,
    TailModel,
    gev_cdf,
    gev_mean,
    mc_expected_excess,
    quantile_U,
    quantile_V,
    sample_S,
    sample_Zn_direct,
    sample_Zn_via_VS,
    scale_a0,
    theorem1_prediction,
    zn_from_exponentials,
)
from scalefree_lab.rng import substream

from . import oracles

MODELS = {
    "pareto": TailModel.pareto(0.5),
    "bounded": TailModel.bounded_power(-0.5, -1.0),
    "logpower": TailModel.log_power(1.0, -1.0),
    "exponential": TailModel.exponential(),
}
FAST_MODELS = ["pareto", "bounded", "exponential"]


# ---------------------------------------------------------------- models


def test_model_invariants():
    with pytest.raises(ValueError):
        TailModel.pareto(1.0)
    with pytest.raises(ValueError):
        TailModel.pareto(0.0)
    with pytest.raises(ValueError):
        TailModel.bounded_power(0.5, -1)
    with pytest.raises(ValueError):
        TailModel.bounded_power(-0.5, 0.0)
    with pytest.raises(ValueError):
        TailModel.log_power(0.0, -1)
    with pytest.raises(ValueError):
        TailModel.log_power(1.0, 0.0)
    with pytest.raises(ValueError):
        TailModel("Weibull")


@pytest.mark.parametrize("name", list(MODELS))
def test_spec_roundtrip(name):
    m = MODELS[name]
    assert TailModel.from_spec(json.loads(json.dumps(m.to_spec()))) == m


@pytest.mark.parametrize("name", list(MODELS))
def test_cdf_monotone_and_inverse_contract(name):
    m = MODELS[name]
    x = np.linspace(m.endpoint - 5 if math.isfinite(m.endpoint) else -1, 50 if not math.isfinite(m.endpoint) else m.endpoint, 2001)
    F = m.cdf(x)
    assert np.all(np.diff(F) >= -1e-15)
    assert np.all((F >= 0) & (F <= 1))
    t = np.geomspace(1, 1e12, 50)
    assert np.all(m.cdf(m.U(t)) >= 1 - 1 / t - 1e-9)


def test_closed_forms():
    lp = MODELS["logpower"]
    t = np.array([3.0, 100.0, 1e6])
    assert np.allclose(quantile_U(lp, t), -1 - 1 / np.log(t))
    assert np.allclose(lp.a(t), np.log(t) ** -2)
    assert quantile_U(TailModel.pareto(0.3), 1.0) == 1.0
    assert quantile_U(TailModel.bounded_power(-0.5, 1.0), 4.0) == pytest.approx(0.5)
    assert np.allclose(quantile_U(MODELS["exponential"], t), np.log(t))
    with pytest.raises(ValueError):
        quantile_U(lp, 0.5)


@pytest.mark.parametrize("name", list(MODELS))
def test_U_matches_numeric_inverse(name):
    m = MODELS[name]
    for t in (4.0, 57.0, 1e4):
        # left-continuous inverse of 1/(1-F): root of sf(y) = 1/t
        lo = m.endpoint - 50 if name == "logpower" else m.lower
        hi = m.endpoint if math.isfinite(m.endpoint) else 1e6
        y = optimize.brentq(lambda v: float(m.sf(v)) - 1 / t, lo, hi, xtol=1e-13, rtol=1e-13)
        assert float(m.U(t)) == pytest.approx(y, rel=1e-9, abs=1e-12)


def test_U_tends_to_endpoint():
    for name in ("bounded", "logpower"):
        m = MODELS[name]
        u = m.U(np.array([1e2, 1e8, 1e100]))
        assert np.all(np.diff(u) > 0) and u[-1] <= m.endpoint
        assert m.endpoint - u[-1] < 0.01


# ------------------------------------------------------------------ GEV


def test_gev_cdf_examples():
    assert gev_cdf(0, 0) == pytest.approx(math.exp(-1))
    assert gev_cdf(0.5, 0) == pytest.approx(math.exp(-1))
    assert gev_cdf(-1, 1.0) == 1.0 and gev_cdf(-1, 3.0) == 1.0
    assert gev_cdf(0.5, -2.0) == 0.0
    z = np.linspace(-3, 3, 13)
    assert np.allclose(gev_cdf(1e-9, z), gev_cdf(0, z), atol=1e-7)


def test_gev_cdf_matches_scipy():
    z = np.linspace(-2, 5, 30)
    for xi in (-0.5, 0.0, 0.3):
        # scipy's genextreme uses the opposite sign for the shape
        assert np.allclose(gev_cdf(xi, z), stats.genextreme.cdf(z, -xi), atol=1e-12)


def test_gev_mean_examples():
    assert gev_mean(0) == pytest.approx(0.5772156649, abs=1e-10)
    assert gev_mean(-1) == pytest.approx(0.0, abs=1e-12)
    assert gev_mean(0.5) == pytest.approx(2 * math.sqrt(math.pi) - 2, rel=1e-12)
    assert gev_mean(5e-7) == EULER_GAMMA
    assert gev_mean(1e-4) == pytest.approx(EULER_GAMMA, abs=1e-3)
    for xi in (1.0, 1.5):
        with pytest.raises(ValueError):
            gev_mean(xi)


def test_gev_mean_matches_scipy():
    for xi in (-2.0, -0.7, -0.1, 0.2, 0.6):
        assert gev_mean(xi) == pytest.approx(stats.genextreme.mean(-xi), rel=1e-9)


def test_sample_S_distribution():
    s = sample_S(substream(21), 10**6)
    assert np.mean(s <= 1) == pytest.approx(math.exp(-1), abs=0.002)
    assert np.median(s) == pytest.approx(1 / math.log(2), abs=0.01)
    assert np.mean(np.log(s)) == pytest.approx(EULER_GAMMA, abs=0.01)
    assert np.all(s > 0)


# -------------------------------------------------------------------- V


@pytest.mark.parametrize("name", list(MODELS))
def test_V_bisection_matches_closed_form(name):
    m = MODELS[name]
    t = np.geomspace(0.5, 1e12, 40)
    v = quantile_V(m, t)
    ref = m.V_closed(t)
    assert np.allclose(v, ref, rtol=1e-11, atol=1e-12)
    assert np.all(np.diff(v) >= 0)


def test_V_exponential_solves_defining_equation():
    m = MODELS["exponential"]
    for t in (0.3, 2.0, 100.0, 1e6):
        v = quantile_V(m, t)
        assert -math.log(-math.expm1(-v)) == pytest.approx(1 / t, rel=1e-9)
        grid = np.linspace(0, 30, 3_000_001)
        crossing = grid[np.argmax(-np.log(-np.expm1(-np.maximum(grid, 1e-300))) <= 1 / t)]
        assert v == pytest.approx(crossing, abs=2e-5)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(list(MODELS)), st.floats(0.01, 1e9), st.floats(0.01, 1e9))
def test_V_monotone(name, t1, t2):
    m = MODELS[name]
    lo, hi = sorted((t1, t2))
    assert quantile_V(m, lo) <= quantile_V(m, hi)


@pytest.mark.parametrize("name", list(MODELS))
def test_V_minus_U_over_a_vanishes(name):
    m = MODELS[name]
    t = np.array([1e2, 1e4, 1e6])
    r = np.abs((quantile_V(m, t) - m.U(t)) / m.a(t))
    assert r[-1] < 1e-3
    assert np.all(np.diff(r) <= 1e-12)


def test_V_rejects_nonpositive():
    with pytest.raises(ValueError):
        quantile_V(MODELS["pareto"], 0.0)


# ------------------------------------------------------------------- a0


@pytest.mark.parametrize("name", FAST_MODELS)
def test_a0_over_a_within_5pct(name):
    m = MODELS[name]
    for t in (1e3, 1e5, 1e7):
        assert scale_a0(m, t) / float(m.a(t)) == pytest.approx(1.0, abs=0.05)


def test_a0_over_a_logpower_converges_slowly():
    # the ratio behaves like 1 + c/log t, so 5% needs astronomically large t
    for alpha in (1.0, 2.0):
        m = TailModel.log_power(alpha, -1.0)
        dev = [abs(scale_a0(m, t) / float(m.a(t)) - 1) for t in (1e3, 1e5, 1e7, 1e12, 1e30)]
        assert all(b < a for a, b in zip(dev, dev[1:]))
        assert dev[-1] < 0.1


def test_a0_case_formulas():
    p = MODELS["pareto"]
    assert scale_a0(p, 1e4) == pytest.approx(0.5 * quantile_V(p, 1e4), rel=1e-12)
    b = MODELS["bounded"]
    assert scale_a0(b, 1e4) == pytest.approx(0.5 * (b.endpoint - quantile_V(b, 1e4)), rel=1e-12)
    assert quantile_V(b, 1e15) == pytest.approx(b.endpoint, abs=1e-7)


def test_a0_exponential_matches_independent_quadrature():
    m = MODELS["exponential"]
    t = 50.0
    v = lambda s: -math.log(-math.expm1(-1 / s)) if s > 0 else 0.0
    integral = oracles.simpson(v, 1e-9, t, 200000)
    assert scale_a0(m, t) == pytest.approx(v(t) - integral / t, rel=1e-6)


# ---------------------------------------------------- regime diagnostics


def test_regime_limits_at_large_t():
    t = 1e12
    p = TailModel.pareto(0.4)
    assert float(p.U(t) / p.a(t)) == pytest.approx(1 / 0.4, rel=1e-12)
    b = TailModel.bounded_power(-0.25, 2.0)
    assert float((b.endpoint - b.U(t)) / b.a(t)) == pytest.approx(4.0, rel=1e-12)
    e = MODELS["exponential"]
    assert float(e.a(t) / e.U(t)) < 0.04
    lp = MODELS["logpower"]
    assert float(lp.a(t) / (lp.endpoint - lp.U(t))) < 0.04


@pytest.mark.parametrize("name", FAST_MODELS)
def test_scale_function_regularly_varying(name):
    m = MODELS[name]
    t = 1e6
    for c in (2, 10):
        assert float(m.a(t * c) / m.a(t)) == pytest.approx(c ** m.xi, rel=0.02)


def test_scale_function_logpower_slowly_varying_trend():
    m = MODELS["logpower"]
    dev = [abs(float(m.a(10 * t) / m.a(t)) - 1) for t in (1e6, 1e12, 1e24, 1e48)]
    assert all(b < a for a, b in zip(dev, dev[1:]))


def _sup_distance(m: TailModel, n: float, seed: int) -> float:
    E = substream(seed).standard_exponential(100_000)
    w = np.sort((zn_from_exponentials(m, n, E) - m.U(n)) / m.a(n))
    F = gev_cdf(m.xi, w)
    k = np.arange(1, w.size + 1) / w.size
    return float(max(np.max(k - F), np.max(F - (k - 1 / w.size))))


@pytest.mark.parametrize("name", FAST_MODELS)
def test_normalized_maximum_converges_to_gev(name):
    assert _sup_distance(MODELS[name], 1e4, 22) <= 0.02


def test_normalized_maximum_logpower_converges_slowly():
    d = [_sup_distance(MODELS["logpower"], n, 22) for n in (1e4, 1e8, 1e16, 1e64)]
    assert all(b < a for a, b in zip(d, d[1:]))
    assert d[-1] <= 0.02


# -------------------------------------------------------------- samplers


@pytest.mark.parametrize("name", list(MODELS))
def test_direct_n1_is_a_single_draw(name):
    m = MODELS[name]
    z = sample_Zn_direct(m, 1, substream(23), 20_000)
    u = m.cdf(z)
    assert stats.kstest(u, "uniform").pvalue > 0.01


@pytest.mark.parametrize("name", list(MODELS))
def test_direct_cdf_is_F_to_the_n(name):
    m = MODELS[name]
    n = 50
    z = sample_Zn_direct(m, n, substream(24), 100_000)
    se = math.sqrt(0.25 / 100_000)
    for q in (0.2, 0.5, 0.8):
        # z with F(z)^n = q
        zq = float(m.isf(-math.expm1(math.log(q) / n)))
        assert np.mean(z <= zq) == pytest.approx(q, abs=4 * se)


def test_direct_monotone_coupling():
    m = MODELS["bounded"]
    for s in range(20):
        small = sample_Zn_direct(m, 10, substream(25, s), 1)[0]
        large = sample_Zn_direct(m, 40, substream(25, s), 1)[0]
        assert large >= small


def test_exponential_coupling_monotone_and_bounded():
    E = substream(26).standard_exponential(1000)
    for m in MODELS.values():
        zs = np.stack([zn_from_exponentials(m, n, E) for n in (1, 10, 1e3, 1e6)])
        assert np.all(np.diff(zs, axis=0) >= 0)
        if math.isfinite(m.endpoint):
            assert np.all(zs <= m.endpoint)


def test_via_VS_deterministic_given_S_and_bounded():
    for m in MODELS.values():
        S = sample_S(substream(27), 500)
        a = sample_Zn_via_VS(m, 100, None, S=S)
        b = sample_Zn_via_VS(m, 100, None, S=S)
        assert np.array_equal(a, b)
        if math.isfinite(m.endpoint):
            assert np.all(a <= m.endpoint)


def test_samplers_reject_bad_n():
    with pytest.raises(ValueError):
        sample_Zn_direct(MODELS["pareto"], 0, substream(0))
    with pytest.raises(ValueError):
        sample_Zn_via_VS(MODELS["pareto"], 0, substream(0))


# ---------------------------------------------------- expected excess


def test_excess_below_support_is_mean_shift():
    m = MODELS["bounded"]
    est = mc_expected_excess(m, 100, -5.0, 10_000, seed=28)
    E = substream(28, 0).standard_exponential(10_000)
    assert est.mean == pytest.approx(np.mean(zn_from_exponentials(m, 100, E)) + 5.0, rel=1e-12)


def test_excess_matches_quadrature_oracle():
    m = TailModel.bounded_power(-0.5, 1.0)
    n = 10**4
    est = mc_expected_excess(m, n, 0.0, 10**6, seed=29)
    # E[(Z - 0)_+] = int_0^1 P(Z > z) dz, with F(z) = 1 - (1 - z)^2 on [0, 1]
    tail = lambda z: 1.0 - (1.0 - (1.0 - z) ** 2) ** n
    exact = oracles.simpson(tail, 0.0, 0.9, 20000) + oracles.simpson(tail, 0.9, 1.0, 200000)
    assert abs(est.mean - exact) <= 3 * est.stderr


def test_theorem1_prediction_examples():
    e = MODELS["exponential"]
    for n in (10.0, 1e5):
        assert theorem1_prediction(e, n, 0.0) == pytest.approx(EULER_GAMMA + math.log(n))
    p = MODELS["pareto"]
    assert theorem1_prediction(p, 1, 0.0) == pytest.approx(gev_mean(0.5) * 0.5 + 1)
    for m in MODELS.values():
        n = 1e5
        x = float(m.isf(0.9))
        diff = theorem1_prediction(m, n * math.e, x) - theorem1_prediction(m, n, x)
        closed = gev_mean(m.xi) * float(m.a(n * math.e) - m.a(n)) + float(m.U(n * math.e) - m.U(n))
        assert diff == pytest.approx(closed, rel=1e-10)
    assert theorem1_prediction(e, 1e5 * math.e, 0) - theorem1_prediction(e, 1e5, 0) == pytest.approx(1.0)


def test_excess_contract():
    m = MODELS["bounded"]
    with pytest.raises(ValueError):
        mc_expected_excess(m, 10, -0.5, 999, seed=0)
    with pytest.raises(ValueError):
        mc_expected_excess(m, 10, -1.0, 1000, seed=0)
    with pytest.raises(ValueError):
        theorem1_prediction(m, 10, 0.0)


def test_estimate_json_and_determinism():
    m = MODELS["exponential"]
    a = mc_expected_excess(m, 1000, 1.0, 5000, seed=30)
    b = mc_expected_excess(m, 1000, 1.0, 5000, seed=30)
    assert a == b
    doc = json.loads(a.to_json())
    assert set(doc) == {"model", "n", "x", "reps", "mean", "stderr", "prediction"}
    assert isinstance(a, Estimate)


@pytest.mark.parametrize("name", FAST_MODELS)
def test_expected_excess_at_moderate_n(name):
    m = MODELS[name] if name != "pareto" else TailModel.pareto(0.25)
    n = 1e4
    x = float(m.isf(0.75))
    est = mc_expected_excess(m, n, x, 200_000, seed=31)
    assert abs(est.mean - est.prediction) / float(m.a(n)) <= 0.05
