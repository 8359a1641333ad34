import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from unipers import samplers as S
from unipers.errors import InputError, IntegrationError, ParameterError
from unipers.rng import derive_seed, stream


def test_sphere_unit_norm():
    c = S.sample_iid(S.IidModel("sphere", 2), 100, 7)
    assert c.ambient_dim == 3
    assert np.allclose(np.linalg.norm(c.points, axis=1), 1.0, atol=1e-12)


def test_box_small():
    c = S.sample_iid(S.IidModel("box", 2), 3, 0)
    assert c.points.shape == (3, 2)
    assert np.all((c.points >= 0) & (c.points <= 1))


def test_annulus_radial_law():
    c = S.sample_iid(S.IidModel("annulus", 2, r_in=0.5, r_out=1.0), 1000, 1)
    r = np.linalg.norm(c.points, axis=1)
    assert r.min() >= 0.5 and r.max() <= 1.0
    cdf = lambda t: (np.clip(t, 0.5, 1.0) ** 2 - 0.25) / 0.75
    assert stats.kstest(r, cdf).statistic < 0.05


@pytest.mark.parametrize("kind,check", [
    ("box", lambda p: np.all((p >= 0) & (p <= 1))),
    ("ball", lambda p: np.all(np.linalg.norm(p, axis=1) <= 1)),
    ("beta", lambda p: np.all((p >= 0) & (p <= 1))),
])
@pytest.mark.parametrize("dim", [1, 2, 3, 5])
def test_iid_supports(kind, check, dim):
    assert check(S.sample_iid(S.IidModel(kind, dim), 500, dim).points)


@pytest.mark.parametrize("kind", S.IID_KINDS)
def test_iid_deterministic(kind):
    m = S.IidModel(kind, 3)
    a, b = S.sample_iid(m, 50, 11), S.sample_iid(m, 50, 11)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, S.sample_iid(m, 50, 12).points)


def test_iid_parameter_errors():
    with pytest.raises(ParameterError):
        S.IidModel("annulus", 2, r_in=1.0, r_out=0.5)
    with pytest.raises(ParameterError):
        S.IidModel("beta", 2, a=0.0)
    with pytest.raises(ParameterError):
        S.IidModel("cube", 2)


def test_torus_equation():
    c = S.sample_manifold(S.ManifoldModel("torus", 2.0, 1.0), 500, 3)
    x, y, z = c.points.T
    assert np.allclose((np.hypot(x, y) - 2) ** 2 + z ** 2, 1.0, atol=1e-10)
    with pytest.raises(ParameterError):
        S.ManifoldModel("torus", 1.0, 2.0)


def test_linkage_edges_unit():
    c = S.sample_manifold(S.ManifoldModel("linkage"), 200, 5)
    p1, p2 = np.zeros((200, 2)), np.tile([1.0, 0.0], (200, 1))
    p3, p4, p5 = c.points[:, 0:2], c.points[:, 2:4], c.points[:, 4:6]
    for a, b in ((p1, p2), (p2, p3), (p3, p4), (p4, p5), (p5, p1)):
        assert np.allclose(np.linalg.norm(a - b, axis=1), 1.0, atol=1e-10)
    assert c.params["rejected"] > 0


def test_projective_preimage():
    c = S.sample_manifold(S.ManifoldModel("projective"), 300, 9)
    for pt in c.points:
        uv, uw, d, e = pt
        # v² − w² = d, 2vw = e  ⇒  v² + w² = |(d, e)|, then u² = 1 − v² − w²
        s = np.hypot(d, e)
        v = np.sqrt((s + d) / 2)
        w = e / (2 * v) if v > 1e-8 else np.sqrt((s - d) / 2)
        u2 = max(1 - s, 0.0)
        u = np.sqrt(u2)
        # fix the sign of u from the first coordinate
        if abs(v) > 1e-6 and np.sign(uv) != np.sign(u * v):
            u = -u
        elif abs(v) <= 1e-6 and abs(w) > 1e-6 and np.sign(uw) != np.sign(u * w):
            u = -u
        rec = np.array([u * v, u * w, v * v - w * w, 2 * v * w])
        assert np.allclose(rec, pt, atol=1e-10)


def test_klein_henneberg_shapes():
    assert S.sample_manifold(S.ManifoldModel("klein"), 40, 1).ambient_dim == 4
    assert S.sample_manifold(S.ManifoldModel("henneberg"), 40, 1).ambient_dim == 3


def test_stratified():
    assert np.all(S.sample_stratified(1.0, 100, 2).points[:, 2] == 0)
    assert np.mean(np.abs(S.sample_stratified(0.0, 100, 2).points[:, 2]) < 1e-9) == 0
    frac = np.mean(S.sample_stratified(0.5, 10000, 4).points[:, 2] == 0)
    assert abs(frac - 0.5) <= 0.02


def test_mesh_single_triangle():
    mesh = S.TriangleMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    c = S.sample_mesh(mesh, 1000, 1)
    x, y = c.points.T
    assert np.all((x >= 0) & (y >= 0) & (x + y <= 1 + 1e-12))
    assert np.allclose(c.points.mean(axis=0), [1 / 3, 1 / 3], atol=0.02)


def test_mesh_area_weighting_and_degenerate():
    # areas 1 and 3
    mesh = S.TriangleMesh([[0, 0], [2, 0], [0, 1], [10, 0], [16, 0], [10, 1]],
                          [[0, 1, 2], [3, 4, 5]])
    c = S.sample_mesh(mesh, 4000, 2)
    assert abs(np.mean(c.params["triangles"] == 1) - 0.75) <= 0.02
    inv = S.sample_mesh(mesh, 4000, 2, weighting="inverse-area")
    assert abs(np.mean(inv.params["triangles"] == 1) - 0.25) <= 0.02
    flat = S.TriangleMesh([[0, 0], [1, 0], [0, 1], [2, 2]], [[0, 1, 2], [0, 3, 3]])
    c = S.sample_mesh(flat, 10, 0)
    assert np.all(c.params["triangles"] == 0)
    with pytest.raises(InputError):
        S.sample_mesh(S.TriangleMesh([[0, 0], [1, 1], [2, 2]], [[0, 1, 2]]), 5, 0)


def test_read_off(tmp_path):
    p = tmp_path / "m.off"
    p.write_text("OFF\n# comment\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
    mesh = S.read_off(p)
    assert mesh.vertices.shape == (3, 3) and mesh.faces.tolist() == [[0, 1, 2]]
    p.write_text("OFX\n")
    with pytest.raises(InputError):
        S.read_off(p)


def test_brownian():
    one = S.sample_brownian(2, 1, 0)
    assert one.points.shape == (1, 2)
    c = S.sample_brownian(3, 10000, 1)
    inc = np.diff(c.points, axis=0)
    assert np.all(np.abs(inc.mean(axis=0)) < 0.05)
    var = inc.var(axis=0, ddof=1)
    assert np.all(np.abs(var - 1) < 0.05)
    assert var.max() / var.min() < 1.05
    assert np.array_equal(S.sample_brownian(2, 5, 7).points, S.sample_brownian(2, 5, 7).points)


def test_lorenz_bounded():
    c = S.sample_lorenz(S.LorenzParams(45, 54, 10, 0.1), 1000, 3)
    assert np.all(np.isfinite(c.points)) and np.abs(c.points).max() < 200


def test_lorenz_stable_origin():
    c = S.sample_lorenz(S.LorenzParams(10, 0.5, 8 / 3, 0.01), 5000, 1)
    assert np.linalg.norm(c.points[-1]) < np.linalg.norm(c.points[100])


def test_lorenz_single_point():
    c = S.sample_lorenz(S.LorenzParams(), 1, 4)
    assert c.n == 1 and np.all((c.points >= 0) & (c.points <= 1))


def test_lorenz_blowup_names_step():
    with pytest.raises(IntegrationError, match="step"):
        S.sample_lorenz(S.LorenzParams(45, 54, 10, 0.1, substeps=1), 200, 3)


def test_grid():
    g = S.sample_perturbed_grid(2, 3, 0.0, 0)
    axis = np.array([0, 0.5, 1.0])
    assert sorted(map(tuple, g.points)) == sorted((a, b) for a in axis for b in axis)
    g = S.sample_perturbed_grid(2, 10, 0.01, 1)
    base = S.sample_perturbed_grid(2, 10, 0.0, 1).points
    assert np.mean(np.linalg.norm(g.points - base, axis=1) <= 0.05) >= 0.99
    assert S.sample_perturbed_grid(3, 4, 0.005, 2).n == 64


def test_cut_annulus_and_figure8():
    c = S.sample_cut_annulus(0.25, 500, 1)
    x, y = c.points.T
    assert not np.any((x > 0) & (np.abs(y) < 0.125))
    r = np.hypot(x, y)
    assert r.min() >= 0.4 and r.max() <= 1.0
    f = S.sample_figure8(0.1, 500, 1)
    cc = 1.0 - 0.05
    dl = np.hypot(f.points[:, 0] + cc, f.points[:, 1])
    dr = np.hypot(f.points[:, 0] - cc, f.points[:, 1])
    assert np.all((dl <= 1) | (dr <= 1)) and np.all((dl >= 0.4) & (dr >= 0.4))


def test_delay_embed():
    c = S.delay_embed(np.arange(21.0), 3, 3, 7)
    assert c.points[0].tolist() == [0, 7, 14] and c.points[1].tolist() == [3, 10, 17]
    assert c.n == (21 - 14 - 1) // 3 + 1
    c = S.delay_embed(np.full(30, 2.5), 4, 2, 3)
    assert np.all(c.points == 2.5)
    assert S.delay_embed(np.arange(7.0), 3, 1, 3).n == 1
    with pytest.raises(InputError, match="at least 7"):
        S.delay_embed(np.arange(6.0), 3, 1, 3)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
def test_delay_embed_identity(sig):
    c = S.delay_embed(sig, 1, 1, 1)
    assert np.array_equal(c.points[:, 0], np.asarray(sig, dtype=float))


@given(st.integers(0, 2 ** 63 - 1), st.sampled_from(S.IID_KINDS), st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_sampler_determinism_property(seed, kind, dim):
    m = S.IidModel(kind, dim)
    assert np.array_equal(S.sample_iid(m, 20, seed).points, S.sample_iid(m, 20, seed).points)


def test_rng_streams_independent():
    assert derive_seed(1, "a") != derive_seed(1, "b")
    assert derive_seed(1, "a", 3) == derive_seed(1, "a", 3)
    x = stream(5, "x").random(4)
    assert np.array_equal(x, stream(5, "x").random(4))
    assert not np.array_equal(x, stream(5, "y").random(4))


def test_pointcloud_rejects_nonfinite():
    with pytest.raises(InputError):
        S.PointCloud(np.array([[0.0, np.nan]]), "t", 0)
