import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import ks_bruteforce, ks_two_sample_bruteforce, lgumbel_cdf as cdf_ref
from unipers import universality as U
from unipers.errors import DomainError, InfiniteCycleError, InsufficientDataError, ParameterError
from unipers.persistence import PersistenceDiagram, compute_diagram
from unipers.samplers import IidModel, sample_iid

GAMMA = 0.5772156649
E = math.e


def _dgm(births, deaths, ct="rips"):
    return PersistenceDiagram(1, np.asarray(births, float), np.asarray(deaths, float), math.inf, 0, ct)


def test_pi_values_examples():
    assert U.pi_values(_dgm([1], [math.sqrt(2)])).values.tolist() == [math.sqrt(2)]
    assert U.pi_values(_dgm([2, 1], [6, 3])).values.tolist() == [3, 3]
    assert U.pi_values(_dgm([0.5], [0.5 + 1e-12])).values[0] > 1


def test_pi_values_infinite():
    d = _dgm([1, 2], [3, math.inf])
    with pytest.raises(InfiniteCycleError, match="threshold_search"):
        U.pi_values(d)
    p = U.pi_values(d, exclude_infinite=True)
    assert p.values.tolist() == [3] and p.n_infinite == 1


def test_l_values_constant():
    lv = U.l_values(np.full(5, E ** E), "rips")
    assert lv.Lbar == pytest.approx(1.0) and lv.B == pytest.approx(-GAMMA - 1)
    assert np.allclose(lv.values, -GAMMA, atol=1e-12)


def test_l_values_two_point():
    pi = [E ** E, E ** (E ** 2)]
    r = U.l_values(pi, "rips")
    assert r.Lbar == pytest.approx(1.5) and r.B == pytest.approx(-2.0772156649)
    assert np.allclose(r.values, [-1.0772156649, -0.0772156649], atol=1e-12)
    a = U.l_values(pi, "alpha")
    assert a.A == 0.5
    assert np.allclose(a.values, [-0.8272156649, -0.3272156649], atol=1e-12)


def test_l_values_errors():
    with pytest.raises(DomainError):
        U.l_values([1.0, 2.0], "rips")
    with pytest.raises(InsufficientDataError):
        U.l_values([2.0], "rips")
    with pytest.raises(ParameterError):
        U.l_values([2.0, 3.0], "vr")


def test_exclude_top():
    lv = U.l_values([1.5, 2.0, 50.0], "rips", exclude_top=1)
    assert len(lv) == 2


@given(st.lists(st.floats(1.0001, 1e6), min_size=2, max_size=200), st.sampled_from(["rips", "alpha"]))
def test_mean_l_is_minus_gamma(pis, ct):
    assert abs(U.l_values(pis, ct).values.mean() + GAMMA) < 1e-12


def test_lgumbel_functions():
    assert U.lgumbel_cdf(0) == pytest.approx(1 - math.exp(-1))
    assert U.lgumbel_quantile(1 - math.exp(-1)) == pytest.approx(0, abs=1e-15)
    with pytest.raises(DomainError):
        U.lgumbel_quantile(1.0)
    with pytest.raises(DomainError):
        U.lgumbel_quantile(0.0)
    xs = np.linspace(-5, 2, 50)
    assert np.allclose(U.lgumbel_cdf(xs), [cdf_ref(x) for x in xs], rtol=1e-14)
    assert np.allclose(U.lgumbel_cdf(xs) + U.lgumbel_sf(xs), 1.0)
    # density integrates to the CDF
    from scipy.integrate import quad
    assert quad(U.lgumbel_pdf, -30, 0.5)[0] == pytest.approx(U.lgumbel_cdf(0.5), rel=1e-9)


def test_lgumbel_sample_mean():
    x = U.lgumbel_sample(np.random.default_rng(0), 10 ** 6)
    assert abs(x.mean() + GAMMA) < 0.005


@given(st.floats(1e-9, 1 - 1e-9))
def test_quantile_inverts_cdf(q):
    assert U.lgumbel_cdf(U.lgumbel_quantile(q)) == pytest.approx(q, rel=1e-9)


def test_ecdf_and_qq():
    assert float(U.ecdf([1, 2, 3])(2)) == pytest.approx(2 / 3)
    assert float(U.ecdf([1, 2, 3])(0.5)) == 0.0
    m = 1000
    v = U.lgumbel_quantile((np.arange(1, m + 1) - 0.5) / m)
    qq = U.qq_against_lgumbel(v)
    assert np.allclose(qq[:, 0], qq[:, 1], atol=1e-12)
    assert U.ks_to_lgumbel(v) <= 1 / (2 * m) + 1e-12


def test_kde_single_atom():
    x, f = U.kde([0.0], bandwidth=1.0, grid=[0.0])
    assert f[0] == pytest.approx(1 / math.sqrt(2 * math.pi))


def test_kde_integrates_to_one():
    v = U.lgumbel_sample(np.random.default_rng(1), 500)
    x, f = U.kde(v, points=4000)
    assert np.trapezoid(f, x) == pytest.approx(1.0, abs=1e-3)


def test_ks_degenerate():
    assert U.ks_to_lgumbel(np.zeros(10)) == pytest.approx(max(U.lgumbel_cdf(0), 1 - U.lgumbel_cdf(0)))


@given(st.lists(st.floats(-6, 3), min_size=2, max_size=60))
def test_ks_matches_bruteforce(v):
    assert U.ks_to_lgumbel(v) == pytest.approx(ks_bruteforce(v, cdf_ref), abs=1e-12)


@given(st.lists(st.floats(-6, 3), min_size=2, max_size=60))
def test_ks_equals_qq_vertical_gap(v):
    qq = U.qq_against_lgumbel(v)
    emp = qq[:, 1]
    m = len(emp)
    F = U.lgumbel_cdf(emp)
    gap = max(np.max(np.arange(1, m + 1) / m - F), np.max(F - np.arange(m) / m), 0.0)
    assert U.ks_to_lgumbel(v) == pytest.approx(gap, abs=1e-12)


@given(st.lists(st.integers(-5, 5), min_size=2, max_size=30), st.lists(st.integers(-5, 5), min_size=2, max_size=30))
def test_ks_two_sample_matches_bruteforce(a, b):
    a, b = [float(x) for x in a], [float(x) for x in b]
    assert U.ks_two_sample(a, b) == pytest.approx(ks_two_sample_bruteforce(a, b), abs=1e-12)


def test_ks_large_sample_calibration():
    for seed in range(10):
        x = U.lgumbel_sample(np.random.default_rng(seed), 10 ** 5)
        assert U.ks_to_lgumbel(x) < 0.01


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100), st.sampled_from(["rips", "alpha"]))
@settings(max_examples=20, deadline=None)
def test_scale_invariance(seed, c, ct):
    pts = np.random.default_rng(seed).random((150, 2))
    a = compute_diagram(pts, ct, 1)
    b = compute_diagram(pts * c, ct, 1)
    pa, pb = U.pi_values(a, True).values, U.pi_values(b, True).values
    oa, ob = np.argsort(pa), np.argsort(pb)
    assert np.allclose(pa[oa], pb[ob], rtol=1e-12, atol=0)
    la = U.l_values(pa, ct).values[oa]
    lb = U.l_values(pb, ct).values[ob]
    # d loglog(π)/dπ = 1/(π log π): round-off in π is amplified near π = 1
    ok = pa[oa] - 1 > 1e-6
    assert np.allclose(la[ok], lb[ok], atol=1e-9, rtol=0)


def test_estimate_B_constant_diagram():
    d = _dgm([1.0, 2.0], [E ** E, 2 * E ** E])
    assert U.estimate_B(d) == pytest.approx(-GAMMA - 1)


@pytest.mark.slow
def test_B_reproducible_and_increasing_with_dimension():
    from unipers.harness.runner import diagram_for
    Bs = [U.estimate_B(diagram_for(sample_iid(IidModel("box", 2), 50_000, s), "rips", 1), "rips")
          for s in range(3)]
    assert max(Bs) - min(Bs) < 0.1           # every value within ±0.05 of the midrange
    B3 = U.estimate_B(diagram_for(sample_iid(IidModel("box", 3), 20_000, 0), "rips", 1), "rips")
    assert np.mean(Bs) < B3


def test_report_fields():
    d = _dgm([1, 1, 1, 2], [2, 3, 4, math.inf])
    r = U.report(d, "rips")
    assert set(r) == {"A", "B", "Lbar", "ks", "n_pairs", "n_infinite"}
    assert r["n_pairs"] == 3 and r["n_infinite"] == 1


def test_pimax_scale():
    assert U.pimax_scale(1000) == pytest.approx(math.log(1000) / math.log(math.log(1000)))
    assert U.pimax_scale(1000, 2) == pytest.approx(math.sqrt(U.pimax_scale(1000)))
