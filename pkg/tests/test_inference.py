import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from unipers import inference as I
from unipers import universality as U
from unipers.errors import DomainError, InsufficientDataError, NonTerminationError, ParameterError
from unipers.persistence import PersistenceDiagram, compute_diagram
from unipers.samplers import IidModel, sample_iid


def _dgm(births, deaths, tau=math.inf, ct="rips"):
    return PersistenceDiagram(1, np.asarray(births, float), np.asarray(deaths, float), tau, 0, ct)


def test_p_value_examples():
    assert I.p_value(0.0) == pytest.approx(math.exp(-1))
    assert abs(I.p_value(math.log(math.log(20))) - 0.05) < 1e-12
    assert I.p_value(-50.0) == 1.0
    assert I.p_value(np.array([0.0, 1.0])).shape == (2,)


def test_pi_min_examples():
    assert abs(I.pi_min(0.05, 1, 0) - 20) < 1e-9
    assert I.pi_min(0.5, 1, 0) == pytest.approx(2.0, rel=1e-12)
    v = I.pi_min(0.05, 0.5, -1)
    assert v == pytest.approx(math.exp(math.exp(2 * (math.log(math.log(20)) + 1))), rel=1e-12)
    assert math.log(v) == pytest.approx(66.3, abs=0.05)
    assert I.p_value(U.ell(v, 0.5, -1)) == pytest.approx(0.05, rel=1e-9)
    for x in (0.0, 1.0, -0.1, 2.0):
        with pytest.raises(DomainError):
            I.pi_min(x, 1, 0)
    assert I.pi_min(1e-300, 0.5, -5) == math.inf


@given(st.floats(-20, 5), st.floats(1e-6, 10))
def test_p_value_strictly_decreasing(l, step):
    assume(I.p_value(l) > 0)
    assert I.p_value(l + step) < I.p_value(l) or I.p_value(l + step) == 0


@given(st.floats(1e-12, 1 - 1e-12))
def test_p_value_inverts_quantile(x):
    assert abs(I.p_value(float(U.lgumbel_quantile(1 - x))) - x) < 1e-12 * max(1.0, x / 1e-3)


@given(st.floats(1e-6, 0.5), st.sampled_from([1.0, 0.5]), st.floats(-3, 3), st.floats(1.001, 1e4))
def test_pi_min_duality(x, A, B, pi):
    pm = I.pi_min(x, A, B)
    p = I.p_value(float(U.ell(pi, A, B)))
    if not math.isclose(pi, pm, rel_tol=1e-9):
        assert (pi >= pm) == (p <= x)


def test_signal_cycles_detects_outlier():
    rng = np.random.default_rng(0)
    b = rng.uniform(0.01, 0.02, 200)
    d = b * (1 + rng.exponential(0.1, 200))
    d[0] = b[0] * 50
    rep = I.signal_cycles(_dgm(b, d), "rips", 0.05)
    assert rep.n_significant == 1 and rep.cycles[0].pi == pytest.approx(50)
    assert rep.m == 200
    for c in rep.cycles:
        assert c.significant == (c.p < 0.05 / rep.m)
        assert 0 < c.p <= 1
    ls = [c.l for c in rep.cycles]
    assert ls == sorted(ls, reverse=True)


def test_signal_cycles_none_significant_below_threshold():
    pis = np.linspace(1.1, 2.0, 100)
    rep = I.signal_cycles(_dgm(np.ones(100), pis), "rips", 0.05)
    lmax = max(c.l for c in rep.cycles)
    assert lmax < U.lgumbel_quantile(1 - 0.05 / 100)
    assert rep.n_significant == 0


def test_signal_cycles_errors():
    with pytest.raises(InsufficientDataError):
        I.signal_cycles(_dgm([1.0], [2.0]), "rips")
    with pytest.raises(InsufficientDataError):
        I.signal_cycles(_dgm([], []), "rips")
    with pytest.raises(ParameterError):
        I.signal_cycles(_dgm([1, 1], [2, 3]), "rips", alpha=1.5)


def test_report_json_shape():
    rep = I.signal_cycles(_dgm([1, 1, 1], [2, 3, 4]), "rips")
    import json
    d = json.loads(rep.to_json())
    assert set(d) == {"alpha", "m", "A", "B", "cycles", "trace"}
    assert set(d["cycles"][0]) == {"birth", "death", "pi", "l", "p", "significant"}


@given(st.integers(0, 10 ** 6), st.floats(1.0, 3.0))
@settings(max_examples=30)
def test_significance_monotone_in_death_with_fixed_B(seed, stretch):
    rng = np.random.default_rng(seed)
    b = rng.uniform(1, 2, 50)
    d = b * (1 + rng.exponential(0.3, 50))
    d[0] = b[0] * 20
    B = U.l_values(d / b, "rips").B
    r1 = I.signal_cycles(_dgm(b, d), "rips", B=B)
    d2 = d.copy()
    d2[0] *= stretch
    r2 = I.signal_cycles(_dgm(b, d2), "rips", B=B)
    sig1 = {c.birth for c in r1.significant}
    sig2 = {c.birth for c in r2.significant}
    assert sig1 <= sig2


def test_annulus_single_significant_cycle():
    cloud = sample_iid(IidModel("annulus", 2, r_in=0.4, r_out=1.0), 1000, 0)
    rep = I.signal_cycles(compute_diagram(cloud.points, "rips", 1), "rips", 0.05)
    assert rep.n_significant == 1
    assert rep.cycles[0].pi > 3
    # the quoted realization has p = 0.008 after the Bonferroni factor
    assert 0.002 < rep.cycles[0].p * rep.m < 0.03


@pytest.mark.parametrize("seed", [0, 3])
def test_small_hole_not_significant(seed):
    # quoted realization at inner radius 0.2: p = 0.076, not significant
    cloud = sample_iid(IidModel("annulus", 2, r_in=0.2, r_out=1.0), 1000, seed)
    rep = I.signal_cycles(compute_diagram(cloud.points, "rips", 1), "rips", 0.05)
    assert rep.n_significant == 0
    assert 0.05 < rep.cycles[0].p * rep.m < 0.3


# -- threshold search ----------------------------------------------------------

def test_threshold_no_infinite_cycles_returns_immediately():
    pts = sample_iid(IidModel("box", 2), 400, 1).points
    D, rep, tr = I.threshold_search(pts, "rips", 1, 0.05, tau0=0.5)
    assert len(tr.iterations) == 1 and tr.final_tau == 0.5 and D.n_infinite == 0


class _Recorder:
    def __init__(self, pts, ct):
        self.pts, self.ct, self.seen = pts, ct, {}

    def __call__(self, tau):
        D = compute_diagram(self.pts, self.ct, 1, tau)
        self.seen[tau] = D
        return D


@pytest.mark.parametrize("policy", ["earliest", "latest"])
def test_threshold_trace_invariants(policy):
    pts = sample_iid(IidModel("annulus", 2, r_in=0.4, r_out=1.0), 800, 2).points
    rec = _Recorder(pts, "rips")
    D, rep, tr = I.threshold_search(pts, "rips", 1, 0.05, tau0=0.06, policy=policy, diagram_fn=rec)
    taus = [it["tau"] for it in tr.iterations]
    assert len(taus) >= 2
    assert all(a < b for a, b in zip(taus, taus[1:]))
    assert tr.iterations[-1]["I_size"] == 0
    assert rep.n_significant >= 1
    if policy == "earliest":
        for it, nxt in zip(tr.iterations, tr.iterations[1:]):
            prev = rec.seen[it["tau"]]
            inf_b = prev.births[~prev.finite]
            undecided = inf_b[it["tau"] / inf_b < it["pi_min"]]
            b0 = undecided.min()
            now = rec.seen[nxt["tau"]]
            j = np.nonzero(now.births == b0)[0]
            assert len(j) == 1
            resolved = np.isfinite(now.deaths[j[0]]) or nxt["tau"] / b0 >= nxt["pi_min"] \
                or nxt["tau"] / b0 >= it["pi_min"] * (1 - 1e-12)
            assert resolved


def test_threshold_declares_essential_cycle_significant():
    def fn(tau):
        b = np.r_[np.linspace(1, 2, 50), 0.1]
        d = np.r_[np.linspace(1, 2, 50) * 1.3, math.inf]
        return _dgm(b, d, tau)
    pts = np.array([[0, 0], [100.0, 0]])
    D, rep, tr = I.threshold_search(pts, "rips", 1, 0.05, tau0=0.2, diagram_fn=fn)
    assert len(tr.iterations) == 2
    assert rep.cycles[0].death == math.inf and rep.cycles[0].significant
    assert rep.cycles[0].pi == pytest.approx(tr.final_tau / 0.1)


def test_threshold_guard():
    def fn(tau):
        b = np.r_[np.linspace(1, 2, 50) * 1e-3, tau / 2]
        d = np.r_[np.linspace(1, 2, 50) * 1.3e-3, math.inf]
        return _dgm(b, d, tau)
    pts = np.array([[0, 0], [1.0, 0]])
    with pytest.raises(NonTerminationError, match="enclosing radius"):
        I.threshold_search(pts, "rips", 1, 0.05, tau0=0.1, diagram_fn=fn)


def test_threshold_parameter_errors():
    pts = np.random.default_rng(0).random((20, 2))
    with pytest.raises(ParameterError):
        I.threshold_search(pts, "rips", 1, 0.05, tau0=0.0)
    with pytest.raises(ParameterError):
        I.threshold_search(pts, "rips", 1, 0.05, tau0=0.3, policy="middle")
