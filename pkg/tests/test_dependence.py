import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import dcov_bruteforce
from unipers import dependence as DEP
from unipers.errors import DomainError, InsufficientDataError
from unipers.harness.models import ModelSpec
from unipers.harness.runner import _DiagramFn


def test_identical_rows_zero_covariance():
    X = np.tile(np.arange(5.0), (10, 1))
    assert np.all(DEP.covariance_matrix(X) == 0)
    with pytest.raises(DomainError):
        DEP.correlation_matrix(X)


def test_perfect_correlation():
    x = np.random.default_rng(0).random(50)
    X = np.column_stack([x, 3 * x + 1, np.random.default_rng(1).random(50)])
    C = DEP.correlation_matrix(X)
    assert abs(C[0, 1] - 1) < 1e-12


def test_covariance_matches_numpy_and_is_psd():
    X = np.random.default_rng(2).random((40, 6))
    C = DEP.covariance_matrix(X)
    assert np.allclose(C, np.cov(X.T, ddof=1))
    assert np.allclose(C, C.T) and np.linalg.eigvalsh(C).min() >= -1e-9


def test_dcov_examples():
    assert DEP.distance_covariance(np.ones(10), np.arange(10.0)) == 0
    x = np.random.default_rng(3).random(30)
    assert abs(DEP.distance_correlation(x, x) - 1) < 1e-12
    assert DEP.distance_covariance([1, 2, 3], [1, 3, 2]) == pytest.approx(
        dcov_bruteforce([1, 2, 3], [1, 3, 2]), abs=1e-12)
    with pytest.raises(InsufficientDataError):
        DEP.distance_covariance([1.0], [2.0])


@given(st.data())
@settings(max_examples=60)
def test_dcov_matches_bruteforce_and_symmetries(data):
    n = data.draw(st.integers(2, 20))
    x = np.array(data.draw(st.lists(st.floats(-100, 100), min_size=n, max_size=n)))
    y = np.array(data.draw(st.lists(st.floats(-100, 100), min_size=n, max_size=n)))
    a = data.draw(st.floats(-10, 10))
    c = data.draw(st.floats(-50, 50))
    # compare squared values: dCov^2 is bilinear in the distances, so it
    # scales with |a| and round-off is not amplified by the square root near 0
    d2 = DEP.distance_covariance(x, y) ** 2
    tol = 1e-9 * (1 + np.abs(x).max()) * (1 + np.abs(y).max())
    assert d2 == pytest.approx(dcov_bruteforce(x.tolist(), y.tolist()) ** 2, abs=tol)
    assert d2 == pytest.approx(DEP.distance_covariance(y, x) ** 2, abs=tol)
    assert d2 == pytest.approx(DEP.distance_covariance(x + c, y) ** 2, abs=tol)
    assert DEP.distance_covariance(a * x, y) ** 2 == pytest.approx(abs(a) * d2, abs=tol * (1 + abs(a)))


def test_dcov_matrix_layout():
    X = np.random.default_rng(4).random((30, 4))
    M = DEP.dcov_matrix(X)
    assert np.allclose(M, M.T)
    assert M[0, 0] == pytest.approx(DEP.distance_covariance(X[:, 0], X[:, 0]))
    assert M[0, 1] == pytest.approx(DEP.distance_correlation(X[:, 0], X[:, 1]))


def test_synthetic_baseline():
    s = DEP.synthetic_lgumbel(500, 5, 1)
    assert s.vectors.shape == (500, 5)
    assert np.array_equal(s.vectors, DEP.synthetic_lgumbel(500, 5, 1).vectors)
    assert abs(s.vectors.mean() + 0.5772) < 0.05


def test_collect_shape_and_determinism():
    spec = ModelSpec("iid", 300, {"kind": "box", "dim": 2})
    fn = _DiagramFn("rips", 1, "auto")
    a = DEP.collect_l_vectors(spec, fn, "rips", 3, 5, 1)
    b = DEP.collect_l_vectors(spec, fn, "rips", 3, 5, 1)
    assert a.vectors.shape == (3, 5) and np.all(np.isfinite(a.vectors))
    assert np.array_equal(a.vectors, b.vectors)
    assert len(set(a.seeds)) == 3


def test_collect_retries_then_fails():
    spec = ModelSpec("iid", 12, {"kind": "box", "dim": 2})
    with pytest.raises(InsufficientDataError, match="retries"):
        DEP.collect_l_vectors(spec, _DiagramFn("rips", 1, "auto"), "rips", 2, 500, 0)


def test_summary_and_outputs(tmp_path):
    s = DEP.synthetic_lgumbel(200, 4, 0)
    summ = json.loads(DEP.summary_json(s))
    assert set(summ) == {"mean_corr", "max_corr", "mean_dcorr", "max_dcorr", "N", "m"}
    assert summ["N"] == 200 and summ["m"] == 4
    DEP.write_matrix(tmp_path / "c.csv", DEP.covariance_matrix(s))
    assert np.loadtxt(tmp_path / "c.csv", delimiter=",").shape == (4, 4)
