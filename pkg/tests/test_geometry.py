import math

import numpy as np
import pytest

from witten_novikov import geometry as geo


S1 = geo.circle_form(0.5)


def s1_op(t, n=128, omega=S1):
    return geo.assemble(geo.PeriodicMesh(1, (n,)), omega, t)


def test_mesh_invariants():
    with pytest.raises(geo.GeometryError):
        geo.PeriodicMesh(1, (8,))
    with pytest.raises(geo.GeometryError):
        geo.PeriodicMesh(1, (17,))
    with pytest.raises(geo.GeometryError):
        geo.PeriodicMesh(2, (16, 16), (1.0, -1.0))
    m = geo.PeriodicMesh(2, (16, 32))
    assert m.cochain_dims() == (512, 1024, 512)


def test_fourier_matrix_is_antisymmetric_and_exact_on_modes():
    n = 32
    d = geo.fourier_diff_matrix(n)
    x = 2 * np.pi * np.arange(n) / n
    assert np.allclose(d @ np.sin(3 * x), 3 * np.cos(3 * x), atol=1e-12)


def test_omega_is_closed_on_torus():
    mesh = geo.PeriodicMesh(2, (32, 32))
    om = geo.torus_product_form(0.5, 0.6)
    w = om.values(mesh.points())
    g1 = geo.spectral_gradient(mesh, w[:, 1])[:, 0]
    g2 = geo.spectral_gradient(mesh, w[:, 0])[:, 1]
    assert np.max(np.abs(g1 - g2)) < 1e-10


def test_flat_circle_spectrum():
    vals, _ = geo.spectrum(s1_op(0.0, 64), 0, 7)
    assert vals == pytest.approx([0, 1, 1, 4, 4, 9, 9], abs=1e-9)


def test_harmonic_form_spectrum_closed_form():
    a, t = 0.3, 2.0
    vals, _ = geo.spectrum(s1_op(t, 64, geo.harmonic_form((a,))), 0, 5)
    # (ik + ta)(-ik + ta) = k^2 + t^2 a^2
    expect = sorted(k * k + (t * a) ** 2 for k in range(-4, 5))[:5]
    assert vals == pytest.approx(expect, rel=1e-10)


def test_torus_product_spectrum_is_sum_of_factors():
    t = 1.0
    op = geo.assemble(geo.PeriodicMesh(2, (16, 16)), geo.torus_product_form(0.5, 0.6), t)
    v1 = geo.spectrum(s1_op(t, 16, geo.circle_form(0.5)), 0)[0]
    v2 = geo.spectrum(s1_op(t, 16, geo.circle_form(0.6)), 0)[0]
    sums = np.sort(np.add.outer(v1, v2).ravel())[:10]
    assert geo.spectrum(op, 0, 10)[0] == pytest.approx(sums, rel=1e-9, abs=1e-9)


def test_eigenvectors_orthonormal_in_discrete_inner_product():
    op = s1_op(5.0)
    _, vecs = geo.spectrum(op, 0, 4)
    gram = vecs.T @ vecs * op.mesh.cell
    assert np.allclose(gram, np.eye(4), atol=1e-12)


def test_one_small_eigenvalue_each_degree_and_supersymmetry():
    op = s1_op(20.0, 256)
    v0, _ = geo.spectrum(op, 0, 3)
    v1, _ = geo.spectrum(op, 1, 3)
    assert np.sum(v0 < 1) == 1 and np.sum(v1 < 1) == 1
    assert v0[0] == pytest.approx(v1[0], rel=1e-8)


def test_laplacians_psd_and_d_squared_zero():
    op = geo.assemble(geo.PeriodicMesh(2, (16, 16)), geo.torus_product_form(), 3.0)
    assert np.max(np.abs((op.d[1] @ op.d[0]).toarray())) < 1e-9
    for lap in op.laplacians:
        dense = lap.toarray()
        assert np.allclose(dense, dense.T, atol=1e-10)
        assert np.linalg.eigvalsh(dense).min() > -1e-9


def test_hodge_pairing_s1():
    op = s1_op(3.0, 64)
    v0 = geo.spectrum(op, 0)[0]
    v1 = geo.spectrum(op, 1)[0]
    assert v0 == pytest.approx(v1, rel=1e-8, abs=1e-8)


def test_gauge_conjugates_the_differential():
    t, n = 2.0, 128
    g = lambda x: 0.3 * np.cos(2 * x[..., 0])
    dg = lambda x: -0.6 * np.sin(2 * x)
    ddg = lambda x: (-1.2 * np.cos(2 * x))[..., None]
    shifted = S1.plus_exact(g, dg, ddg)
    mesh = geo.PeriodicMesh(1, (n,))
    e = np.exp(t * g(mesh.points()))
    d_old, d_new = s1_op(t, n).d[0], s1_op(t, n, shifted).d[0]
    for k in range(4):
        v = np.cos(k * mesh.nodes(0) + 0.2)
        assert np.allclose(d_new @ v, (d_old @ (e * v)) / e, atol=1e-8)
    # the Laplacians are not conjugate: only the complex is gauge covariant
    v = geo.spectrum(s1_op(t, n), 0, 3)[0]
    w = geo.spectrum(s1_op(t, n, shifted), 0, 3)[0]
    assert abs(v[1] - w[1]) > 1e-3


def test_small_large_split_dims():
    op = s1_op(20.0, 256)
    for q in (0, 1):
        split = geo.small_large_split(op, q, expected=1)
        assert split.basis.shape == (256, 1)
    op = s1_op(10.0, 64, geo.harmonic_form((0.5,)))
    assert geo.small_large_split(op, 0).basis.shape[1] == 0


def test_torus_small_dims():
    op = geo.assemble(geo.PeriodicMesh(2, (32, 32)), geo.torus_product_form(), 8.0)
    dims = [geo.small_large_split(op, q).basis.shape[1] for q in range(3)]
    assert dims == [1, 2, 1]


def test_gap_violation_at_small_t():
    with pytest.raises(geo.GapViolation):
        geo.small_large_split(s1_op(0.5, 64), 0)


def test_resolution_guard():
    with pytest.raises(geo.ResolutionTooLow):
        s1_op(200.0, 16)


def test_large_torsion_flat_closed_form():
    n = 64
    op = s1_op(0.0, n)
    vals = [k * k for k in range(1, n // 2)] * 2 + [(n // 2) ** 2]
    assert geo.large_torsion(op, check_gap=False) == pytest.approx(0.5 * sum(map(math.log, vals)))
    with pytest.raises(geo.GapViolation):
        geo.large_torsion(op)


def test_large_torsion_depends_on_grid():
    assert abs(geo.large_torsion(s1_op(15.0, 128)) - geo.large_torsion(s1_op(15.0, 256))) > 1


def test_monodromy_flat_value():
    # det'(-d^2/dx^2) on the circle of length L is L^2
    flat = geo.harmonic_form((0.0,))
    assert geo.oneD_zeta_determinant(flat, 0.0) == pytest.approx(2 * math.log(2 * math.pi), rel=1e-6)


def test_monodromy_continuity_in_t():
    # det(Delta_eps) / lambda_min(eps) -> det'(Delta_0) as omega -> 0
    flat = geo.oneD_zeta_determinant(geo.harmonic_form((0.0,)), 0.0)
    for eps in (1e-2, 1e-3):
        full = geo.oneD_zeta_determinant(geo.harmonic_form((eps,)), 1.0)
        assert full - 2 * math.log(eps) == pytest.approx(flat, abs=2 * eps)


def test_monodromy_methods_agree_at_moderate_t():
    for t in (0.5, 2.0):
        a = geo.oneD_zeta_determinant(S1, t, method="ode")
        b = geo.oneD_zeta_determinant(S1, t)
        assert a == pytest.approx(b, abs=1e-6)


def test_grid_renormalized_determinant_matches_monodromy():
    for t in (1.0, 2.0):
        grid = geo.renormalized_log_det(s1_op(t, 256), 1)
        cont = geo.oneD_zeta_determinant(S1, t)
        assert abs(grid - cont) <= 0.05 * abs(cont)
