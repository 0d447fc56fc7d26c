import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mfisp import fbbasis
from mfisp.errors import DomainError, UsageError


@given(st.integers(0, 6), st.integers(1, 6), st.data())
def test_pack_unpack_roundtrip(M, N, data):
    p = data.draw(st.integers(0, (2 * M + 1) * N - 1))
    idx = fbbasis.unpack_position(p, M, N)
    assert fbbasis.pack_index(idx.m, idx.n, M, N) == p


def test_packing_layout():
    m, n = fbbasis.orders(2, 2)
    assert m.tolist() == [1, 1, 2, 2, 0, 0, -1, -1, -2, -2]
    assert n.tolist() == [1, 2] * 5
    assert [fbbasis.pack_index(a, b, 2, 2) for a, b in zip(m, n)] == list(range(10))


def test_pack_rejects_outside():
    with pytest.raises(UsageError):
        fbbasis.pack_index(3, 1, 2, 2)
    with pytest.raises(UsageError):
        fbbasis.pack_index(0, 0, 2, 2)
    with pytest.raises(UsageError):
        fbbasis.dimension(-1, 2)


@pytest.mark.parametrize("m,n", [(0, 1), (1, 2), (3, 3), (6, 1)])
def test_radial_normalization_by_adaptive_quadrature(m, n):
    R0 = 1.3
    # 2 pi int_0^R0 |radial|^2 r dr = 1
    val, _ = integrate.quad(lambda r: fbbasis.radial_profile(m, n, r, R0) ** 2 * r, 0, R0, limit=200)
    assert 2 * math.pi * val == pytest.approx(1.0, rel=1e-10)


def test_basis_orthonormal_on_grid():
    g = fbbasis.PolarGrid(1.0, 80, 64)
    M, N = 3, 4
    ms, ns = fbbasis.orders(M, N)
    r, t = g.mesh()
    B = np.array([fbbasis.eval_basis(a, b, r, t, 1.0) for a, b in zip(ms, ns)])
    gram = np.einsum("iab,jab,ab->ij", B, B.conj(), g.weights)
    np.testing.assert_allclose(gram, np.eye(len(ms)), atol=1e-12)


def test_basis_vanishes_on_boundary():
    th = np.linspace(0, 2 * np.pi, 9)
    for m, n in [(0, 1), (2, 3), (-4, 2)]:
        assert np.max(np.abs(fbbasis.eval_basis(m, n, 1.0, th, 1.0))) < 1e-13


def test_radius_outside_disc_raises():
    with pytest.raises(DomainError):
        fbbasis.eval_basis(0, 1, 1.01, 0.0, 1.0)


def test_grid_integrates_polynomials():
    g = fbbasis.PolarGrid(2.0, 20, 32)
    x, y = g.cartesian()
    assert g.integrate(np.ones(g.shape)) == pytest.approx(4 * math.pi, rel=1e-13)
    # int x^2 over disc of radius a = pi a^4 / 4
    assert g.integrate(x**2).real == pytest.approx(math.pi * 16 / 4, rel=1e-13)
    assert abs(g.integrate(x * y)) < 1e-12


def test_project_synthesize_roundtrip(rng):
    g = fbbasis.PolarGrid(1.0, 120, 96)
    M, N = 8, 8
    c = rng.normal(size=(2 * M + 1) * N) + 1j * rng.normal(size=(2 * M + 1) * N)
    exp = fbbasis.FBExpansion(M, N, 1.0, c)
    back = fbbasis.project(fbbasis.synthesize(exp, g), g, M, N)
    np.testing.assert_allclose(back.coeffs, c, atol=1e-11)


def test_synthesize_matches_pointwise_evaluation(rng):
    g = fbbasis.PolarGrid(1.0, 10, 12)
    exp = fbbasis.FBExpansion(2, 3, 1.0, rng.normal(size=15) + 1j * rng.normal(size=15))
    r, t = g.mesh()
    np.testing.assert_allclose(fbbasis.synthesize(exp, g), fbbasis.synthesize_at(exp, r, t), atol=1e-13)
    direct = sum(exp[m, n] * fbbasis.eval_basis(m, n, r, t, 1.0) for m, n in zip(*fbbasis.orders(2, 3)))
    np.testing.assert_allclose(fbbasis.synthesize(exp, g), direct, atol=1e-13)


def test_project_rejects_aliasing_grid():
    g = fbbasis.PolarGrid(1.0, 10, 6)
    with pytest.raises(UsageError):
        fbbasis.project(np.zeros(g.shape), g, 3, 2)


def test_real_field_symmetry(rng):
    g = fbbasis.PolarGrid(1.0, 60, 64)
    x, y = g.cartesian()
    field = np.exp(-3 * ((x - 0.2) ** 2 + y**2)) + 0.3 * x * y
    exp = fbbasis.project(field, g, 4, 4)
    np.testing.assert_allclose(exp.symmetrized().coeffs, exp.coeffs, atol=1e-13)
    for m in range(1, 5):
        np.testing.assert_allclose(exp.block(-m), (-1) ** m * np.conj(exp.block(m)), atol=1e-13)


def test_expansion_serialization_roundtrip(rng):
    c = rng.normal(size=21) + 1j * rng.normal(size=21)
    exp = fbbasis.FBExpansion(3, 3, 1.25, c)
    assert fbbasis.FBExpansion.loads(exp.dumps()) == exp
    assert fbbasis.FBExpansion.from_dict(json.loads(json.dumps(exp.to_dict()))) == exp


def test_expansion_validation():
    with pytest.raises(UsageError):
        fbbasis.FBExpansion(1, 1, 1.0, [1, 2])
    with pytest.raises(UsageError):
        fbbasis.FBExpansion(0, 1, 1.0, [np.nan])
    with pytest.raises(UsageError):
        fbbasis.FBExpansion.from_dict({"M": 0, "N": 1})
    exp = fbbasis.FBExpansion.zeros(1, 1)
    with pytest.raises(ValueError):
        exp.coeffs[0] = 1


def test_field_csv_roundtrip(tmp_path):
    g = fbbasis.PolarGrid(1.0, 4, 8)
    f = fbbasis.synthesize(fbbasis.FBExpansion.from_terms(1, 1, 1.0, {(1, 1): 1 + 2j}), g)
    path = tmp_path / "f.csv"
    fbbasis.write_field_csv(path, g, f)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 2] + 1j * data[:, 3], f.ravel())


def test_negative_order_conjugate_symmetry():
    r = np.linspace(0, 1, 7)[:, None]
    t = np.linspace(0, 6, 9)[None, :]
    for m, n in [(1, 1), (2, 3), (5, 2)]:
        np.testing.assert_allclose(fbbasis.eval_basis(-m, n, r, t, 1.0),
                                   (-1) ** m * np.conj(fbbasis.eval_basis(m, n, r, t, 1.0)), atol=1e-15)


def test_project_single_basis_function(grid):
    r, t = grid.mesh()
    exp = fbbasis.project(fbbasis.eval_basis(1, 2, r, t, 1.0), grid, 3, 3)
    expected = np.zeros(21, dtype=complex)
    expected[fbbasis.pack_index(1, 2, 3, 3)] = 1.0
    np.testing.assert_allclose(exp.coeffs, expected, atol=1e-9)


def test_eq44_projection_and_zero_field(grid):
    from mfisp import forward

    exp = forward.eq44_expansion()
    back = fbbasis.project(fbbasis.synthesize(exp, grid), grid, 3, 3)
    assert back[0, 1] == pytest.approx(2.0, abs=1e-10)
    assert back[3, 3] == pytest.approx(np.pi, abs=1e-10)
    assert not np.any(fbbasis.synthesize(fbbasis.FBExpansion.zeros(3, 3), grid))


def test_roundtrip_s55_relative_l2(rng, grid):
    c = rng.normal(size=55) + 1j * rng.normal(size=55)
    exp = fbbasis.FBExpansion(5, 5, 1.0, c)
    f = fbbasis.synthesize(exp, grid)
    g = fbbasis.synthesize(fbbasis.project(f, grid, 5, 5), grid)
    assert grid.norm(f - g) < 1e-9 * grid.norm(f)


def test_projection_error_matches_pipeline(grid):
    from mfisp import forward, pipeline

    s = forward.named_source("smooth522").sample(grid)
    sp_ = fbbasis.synthesize(fbbasis.project(s, grid, 3, 3), grid)
    rep = pipeline.run_reconstruction(pipeline.ExperimentConfig(M=3, N=3, source="smooth522"))
    assert grid.norm(s - sp_) / grid.norm(s) == pytest.approx(rep.metrics["rel_err_projection"], rel=1e-12)


def test_exhaustive_pack_and_layout_anchors():
    M = N = 4
    assert fbbasis.pack_index(1, 1, M, N) == 0
    assert fbbasis.pack_index(0, 1, M, N) == M * N
    for p in range(fbbasis.dimension(M, N)):
        i = fbbasis.unpack_position(p, M, N)
        assert fbbasis.pack_index(i.m, i.n, M, N) == p
