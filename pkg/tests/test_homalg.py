import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from witten_novikov import homalg as H
from witten_novikov.series import DirichletSeries, evaluate

from factories import (random_complex, random_gl, random_quasi_iso, random_rational_complex,
                       random_spd, random_unimodular)


def real(dims, *ds):
    return H.FiniteCochainComplex(tuple(dims), tuple(np.array(d, dtype=float) for d in ds), "real")


def nov(pairs):
    return DirichletSeries([(F(l), F(c)) for l, c in pairs])


# --- complexes

def test_d_squared_rejected():
    with pytest.raises(H.HomalgError):
        real((1, 1, 1), [[1.0]], [[1.0]])


def test_json_roundtrip():
    c = H.FiniteCochainComplex((1, 2), (np.array([[F(1, 2)], [F(3)]], dtype=object),), "rational")
    back = H.FiniteCochainComplex.from_json(c.to_json())
    assert back.dims == c.dims and back.ring == "rational"
    assert list(back.d[0].flat) == [F(1, 2), F(3)]


def test_inner_product_requires_spd():
    with pytest.raises(H.HomalgError):
        H.InnerProductComplex(real((1, 1), [[1.0]]), (np.eye(1), -np.eye(1)))


# --- Milnor torsion

def test_milnor_one_pivot():
    assert H.milnor_torsion(real((1, 1), [[3.0]])) == pytest.approx(3.0)
    c = H.FiniteCochainComplex((1, 1), (np.array([[F(3)]], dtype=object),), "rational")
    assert H.milnor_torsion(c) == 3


def test_milnor_unimodular():
    assert H.milnor_torsion(real((2, 2), [[1, 1], [0, 1]])) == pytest.approx(1.0)


def test_milnor_novikov_unit_and_evaluation():
    d = nov([(0, 1), (1, -1)])
    c = H.FiniteCochainComplex((1, 1), (np.array([[d]], dtype=object),), "novikov")
    tau = H.milnor_torsion(c, level=6)
    assert tau.agrees_with(d, level=6)
    assert evaluate(tau, 1.0).value.real == pytest.approx(1 - math.exp(-1), rel=1e-12)


def test_not_acyclic():
    with pytest.raises(H.NotAcyclic):
        H.milnor_torsion(real((1, 1), [[0.0]]))


def test_non_acyclic_with_cohomology_basis():
    # H^0 = H^1 = R, representatives scaled by 2 and 5
    c = real((1, 1), [[0.0]])
    assert H.milnor_torsion(c, [np.array([[2.0]]), np.array([[5.0]])]) == pytest.approx(5 / 2)


def test_ambiguous_rank_raises():
    with pytest.raises(H.SingularPivot):
        H.milnor_torsion(real((2, 2), [[1, 0], [0, 1e-11]]))


# --- T-torsion and volumes

def test_t_torsion_one_term():
    ipc = H.InnerProductComplex(real((1, 1), [[3.0]]))
    assert H.t_torsion(ipc) == pytest.approx(math.log(3))


def test_t_torsion_zero_differential():
    ipc = H.InnerProductComplex(real((2, 3, 1), np.zeros((3, 2)), np.zeros((1, 3))))
    assert H.t_torsion(ipc) == 0.0


def test_vol_of_iso_examples():
    assert H.vol_of_iso(np.eye(3)) == pytest.approx(0)
    assert H.vol_of_iso(np.diag([2.0, 3.0])) == pytest.approx(math.log(6))
    c, s = math.cos(0.3), math.sin(0.3)
    assert H.vol_of_iso(np.array([[c, -s], [s, c]])) == pytest.approx(0, abs=1e-15)
    with pytest.raises(H.Singular):
        H.vol_of_iso(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_acyclic_milnor_equals_t_torsion_standard_bases():
    rng = np.random.default_rng(1)
    for _ in range(40):
        c = random_complex(rng, acyclic=True)
        lt = H.t_torsion(H.InnerProductComplex(c))
        assert H.milnor_log_torsion(c) == pytest.approx(lt, abs=1e-9)


# --- cones

def test_cone_of_identity():
    c = real((1,), )
    cone = H.mapping_cone([np.eye(1)], c, c)
    assert cone.dims == (1, 1)
    assert H.milnor_torsion(cone) == pytest.approx(1.0)


def test_cone_of_two():
    c = real((1,), )
    assert H.torsion_of_morphism([2 * np.eye(1)], c, c) == pytest.approx(2.0)


def test_not_chain_map():
    c1 = real((1, 1), [[1.0]])
    with pytest.raises(H.NotChainMap):
        H.mapping_cone([np.eye(1), 2 * np.eye(1)], c1, c1)


def test_cone_not_acyclic():
    c = real((1,), )
    with pytest.raises(H.ConeNotAcyclic):
        H.torsion_of_morphism([np.zeros((1, 1))], c, c)


def test_acyclic_quotient_rule():
    # u: (3) -> (6) with u = (1, 2); tau(u) = tau_1 / tau_2
    c1, c2 = real((1, 1), [[3.0]]), real((1, 1), [[6.0]])
    u = [np.eye(1), 2 * np.eye(1)]
    assert H.torsion_of_morphism(u, c1, c2) == pytest.approx(0.5)
    assert H.torsion_of_morphism(u, c1, c2, mode="T") == pytest.approx(math.log(0.5))


def test_iso_log_t_is_alternating_volume_sum():
    rng = np.random.default_rng(3)
    for _ in range(30):
        c1 = random_complex(rng, acyclic=True)
        g = [random_gl(rng, n) for n in c1.dims]
        c2 = H.FiniteCochainComplex(c1.dims, tuple(g[q + 1] @ c1.d[q] @ np.linalg.inv(g[q])
                                                   for q in range(c1.top)), "real")
        lt = H.torsion_of_morphism(g, c1, c2, mode="T")
        expect = sum((-1) ** q * H.vol_of_iso(g[q]) for q in range(len(g)))
        assert lt == pytest.approx(expect, abs=1e-9)


# --- ring homomorphism

def test_apply_ring_hom_value():
    d = nov([(0, 1), (1, -1)])
    c = H.FiniteCochainComplex((1, 1), (np.array([[d]], dtype=object),), "novikov")
    r = H.apply_ring_hom(c, 1.0)
    assert r.d[0][0, 0] == pytest.approx(0.632121, abs=1e-6)


def test_apply_ring_hom_unit():
    one = nov([(0, 1)])
    c = H.FiniteCochainComplex((2, 2), (np.array([[one, one], [one, one]], dtype=object),),
                               "novikov")
    assert np.all(H.apply_ring_hom(c, 2.5).d[0] == 1.0)


def _random_novikov_complex(rng):
    # 0 -> L^2 -> L^2 -> 0 with a random lower-triangular unit-dominated differential
    def elt():
        k = int(rng.integers(1, 3))
        return DirichletSeries([(F(int(rng.integers(0, 4)), 2), F(int(rng.integers(-3, 4))))
                                for _ in range(k)])
    while True:
        m = np.empty((2, 2), dtype=object)
        for idx in np.ndindex(2, 2):
            m[idx] = elt()
        c = H.FiniteCochainComplex((2, 2), (m,), "novikov")
        if H.is_acyclic(c, 8):
            return c


def test_torsion_naturality_novikov():
    rng = np.random.default_rng(7)
    for _ in range(15):
        c = _random_novikov_complex(rng)
        tau = H.milnor_torsion(c, level=12)
        for t in (1.5, 3.0):
            lhs = math.log(abs(evaluate(tau, t).value.real))
            rhs = H.milnor_log_torsion(H.apply_ring_hom(c, t))
            assert lhs == pytest.approx(rhs, abs=1e-8)


# --- properties

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_unimodular_base_change_exact(seed):
    rng = np.random.default_rng(seed)
    c = random_rational_complex(rng)
    n = c.dims[0]
    b0, b1 = random_unimodular(rng, n), random_unimodular(rng, n)
    assert H.milnor_torsion(c, bases=[b0, b1]) == H.milnor_torsion(c)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_log_torsion_volume_split_property(seed):
    rng = np.random.default_rng(seed)
    c1 = random_complex(rng)
    c2, u = random_quasi_iso(rng, c1)
    g1 = [random_spd(rng, n) for n in c1.dims]
    g2 = [random_spd(rng, n) for n in c2.dims]
    i1, i2 = H.InnerProductComplex(c1, tuple(g1)), H.InnerProductComplex(c2, tuple(g2))
    lt = H.torsion_of_morphism(u, c1, c2, mode="T", grams1=g1, grams2=g2)
    vol = sum((-1) ** q * H.cohomology_map_log_volume(u[q], i1, i2, q) for q in range(len(u)))
    assert lt == pytest.approx(H.t_torsion(i1) - H.t_torsion(i2) + vol, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_abs_tau_equals_t_with_orthonormal_bases(seed):
    rng = np.random.default_rng(seed)
    c = random_complex(rng)
    ipc = H.InnerProductComplex(c, tuple(random_spd(rng, n) for n in c.dims))
    h = [H.harmonic_basis(ipc, q) for q in range(len(c.dims))]
    la = H.milnor_log_torsion(c, h, H.orthonormal_bases(ipc))
    assert la == pytest.approx(H.t_torsion(ipc), abs=1e-9)
