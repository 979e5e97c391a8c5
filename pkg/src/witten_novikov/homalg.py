"""Finite cochain complexes: Milnor torsion, T-torsion, mapping cones, volumes.

Degrees run 0..n; ``d[q]`` has shape ``(dims[q+1], dims[q])``.  Three
coefficient modes are supported: ``"real"`` (float arrays), ``"rational"``
(``Fraction`` object arrays) and ``"novikov"`` (``DirichletSeries`` object
arrays).  Milnor torsion uses the convention

    tau = prod_q [ d b_{q-1}, h_q, b_q / c_q ] ** ((-1) ** (q + 1)),

so ``0 -> R --(3)--> R -> 0`` has torsion 3 and ``|tau| = T`` for
orthonormal bases.  The mapping cone of ``u: C1 -> C2`` is graded
``Cone^q = C1^q (+) C2^{q-1}`` with ``d(a, b) = (d1 a, u a - d2 b)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .series import DirichletSeries, delta0, evaluate, invert, zero as series_zero

RANK_TOL = 1e-9
DET_PRIME_TOL = 1e-9


class HomalgError(ValueError):
    pass


class NotAcyclic(HomalgError):
    pass


class SingularPivot(HomalgError):
    pass


class NotChainMap(HomalgError):
    pass


class ConeNotAcyclic(HomalgError):
    pass


class Singular(HomalgError):
    pass


# ---------------------------------------------------------------------------
# coefficient fields for exact elimination

class _RationalField:
    name = "rational"

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def is_zero(self, a):
        return a == 0

    def div(self, a, b):
        return a / b

    def inv(self, a):
        return Fraction(1) / a

    def pivot_key(self, a):
        return 0

    def normalize(self, a):
        return abs(a)


class _NovikovField:
    name = "novikov"

    def __init__(self, level):
        self.level = level

    def zero(self):
        return series_zero()

    def one(self):
        return delta0()

    def is_zero(self, a):
        return a.is_zero

    def inv(self, a):
        return invert(a, self.level)

    def div(self, a, b):
        return a * self.inv(b)

    def pivot_key(self, a):
        # smallest leading exponent = largest element in the Novikov valuation
        return float(a.min_exponent)

    def normalize(self, a):
        return a.normalized_sign()


def _field_for(ring, level):
    if ring == "rational":
        return _RationalField()
    if ring == "novikov":
        if level is None:
            raise HomalgError("novikov mode needs a truncation level")
        return _NovikovField(level)
    raise HomalgError(f"no exact field for ring {ring!r}")


def _to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(x)


def _to_series(x):
    if isinstance(x, DirichletSeries):
        return x
    if isinstance(x, dict):
        return DirichletSeries.from_json(x)
    if x == 0:
        return series_zero()
    return DirichletSeries([(0, x)])


def _coerce_matrix(m, ring, shape):
    if ring == "real":
        arr = np.array(m, dtype=float).reshape(shape)
        return arr
    conv = _to_fraction if ring == "rational" else _to_series
    arr = np.empty(shape, dtype=object)
    src = np.array(m, dtype=object).reshape(shape) if np.size(m) else np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        arr[idx] = conv(src[idx])
    return arr


def _exact_matmul(a, b, fld):
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.empty((n, m), dtype=object)
    for i in range(n):
        for j in range(m):
            s = fld.zero()
            for l in range(k):
                if fld.is_zero(a[i, l]) or fld.is_zero(b[l, j]):
                    continue
                s = s + a[i, l] * b[l, j]
            out[i, j] = s
    return out


# ---------------------------------------------------------------------------
# complexes

@dataclass(frozen=True)
class FiniteCochainComplex:
    dims: tuple
    d: tuple
    ring: str = "real"

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if any(n < 0 for n in dims):
            raise HomalgError("dims must be nonnegative")
        if len(self.d) != max(len(dims) - 1, 0):
            raise HomalgError("need one differential per consecutive pair of degrees")
        if self.ring not in ("real", "rational", "novikov"):
            raise HomalgError(f"unknown ring {self.ring!r}")
        mats = tuple(_coerce_matrix(m, self.ring, (dims[q + 1], dims[q]))
                     for q, m in enumerate(self.d))
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "d", mats)
        # Novikov entries are truncated, so d^2 = 0 only holds below a cutoff there
        if self.ring != "novikov" and len(mats) > 1:
            scale = max([1.0] + [float(np.linalg.norm(a.astype(float)) * np.linalg.norm(b.astype(float)))
                                 for a, b in zip(mats[1:], mats[:-1])])
            if self.check_d_squared() > 1e-10 * scale:
                raise HomalgError("d o d is not zero")

    @property
    def top(self) -> int:
        return len(self.dims) - 1

    def differential(self, q):
        """d^q, with zero maps outside the stored range."""
        if 0 <= q < len(self.d):
            return self.d[q]
        rows = self.dims[q + 1] if 0 <= q + 1 <= self.top else 0
        cols = self.dims[q] if 0 <= q <= self.top else 0
        if self.ring == "real":
            return np.zeros((rows, cols))
        fld = _RationalField() if self.ring == "rational" else _NovikovField(None)
        out = np.empty((rows, cols), dtype=object)
        for idx in np.ndindex(rows, cols):
            out[idx] = fld.zero()
        return out

    def check_d_squared(self, tol: float = 1e-10) -> float:
        """Largest deviation of d^{q+1} d^q from zero (0.0 when exact)."""
        worst = 0.0
        for q in range(len(self.d) - 1):
            if self.ring == "real":
                worst = max(worst, float(np.linalg.norm(self.d[q + 1] @ self.d[q])))
            else:
                fld = _RationalField() if self.ring == "rational" else _NovikovField(None)
                prod = _exact_matmul(self.d[q + 1], self.d[q], fld)
                for v in prod.flat:
                    if not fld.is_zero(v):
                        worst = math.inf
        return worst

    def to_json(self) -> dict:
        def enc(x):
            if self.ring == "real":
                return float(x)
            if self.ring == "rational":
                return str(x)
            return x.to_json()
        return {"dims": list(self.dims),
                "d": [[enc(x) for x in m.flatten()] for m in self.d],
                "ring": self.ring}

    @classmethod
    def from_json(cls, data: dict) -> "FiniteCochainComplex":
        return cls(tuple(data["dims"]), tuple(data["d"]), data.get("ring", "real"))


@dataclass(frozen=True)
class InnerProductComplex:
    complex: FiniteCochainComplex
    grams: tuple = field(default=None)

    def __post_init__(self):
        if self.complex.ring != "real":
            raise HomalgError("inner products need the real mode")
        grams = self.grams
        if grams is None:
            grams = tuple(np.eye(n) for n in self.complex.dims)
        grams = tuple(np.asarray(g, dtype=float) for g in grams)
        for g, n in zip(grams, self.complex.dims):
            if g.shape != (n, n):
                raise HomalgError("gram shape mismatch")
            if n and (not np.allclose(g, g.T, atol=1e-12) or np.linalg.eigvalsh(g).min() <= 0):
                raise HomalgError("gram matrices must be symmetric positive definite")
        object.__setattr__(self, "grams", grams)


def is_acyclic(c: FiniteCochainComplex, level=None) -> bool:
    ranks = [_rank(c, q, level) for q in range(len(c.d))]
    for q, n in enumerate(c.dims):
        r_in = ranks[q - 1] if q >= 1 else 0
        r_out = ranks[q] if q < len(ranks) else 0
        if r_in + r_out != n:
            return False
    return True


# ---------------------------------------------------------------------------
# pivot selection

def _real_pivots(m: np.ndarray):
    if m.size == 0:
        return [], 0
    _, r, piv = sla.qr(m, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0:
        return [], 0
    rel = diag / diag[0]
    ambiguous = (rel < RANK_TOL * 1e3) & (rel > RANK_TOL * 1e-3)
    if np.any(ambiguous):
        raise SingularPivot(f"numerical rank ambiguous (relative pivots {rel[ambiguous]})")
    rank = int(np.sum(rel > RANK_TOL))
    return sorted(int(j) for j in piv[:rank]), rank


def _exact_pivots(m: np.ndarray, fld):
    a = m.copy()
    rows, cols = a.shape
    pivots = []
    r = 0
    for j in range(cols):
        if r >= rows:
            break
        cand = [i for i in range(r, rows) if not fld.is_zero(a[i, j])]
        if not cand:
            continue
        p = min(cand, key=lambda i: (fld.pivot_key(a[i, j]), i))
        a[[r, p]] = a[[p, r]]
        for i in range(r + 1, rows):
            if fld.is_zero(a[i, j]):
                continue
            f = fld.div(a[i, j], a[r, j])
            for k in range(j, cols):
                if not fld.is_zero(a[r, k]):
                    a[i, k] = a[i, k] - f * a[r, k]
        pivots.append(j)
        r += 1
    return pivots, len(pivots)


def _pivots(c, q, level):
    m = c.d[q]
    if c.ring == "real":
        return _real_pivots(m)
    return _exact_pivots(m, _field_for(c.ring, level))


def _rank(c, q, level=None):
    return _pivots(c, q, level)[1]


def _exact_det(m: np.ndarray, fld):
    a = m.copy()
    n = a.shape[0]
    det = fld.one()
    sign = 1
    for j in range(n):
        cand = [i for i in range(j, n) if not fld.is_zero(a[i, j])]
        if not cand:
            return fld.zero()
        p = min(cand, key=lambda i: (fld.pivot_key(a[i, j]), i))
        if p != j:
            a[[j, p]] = a[[p, j]]
            sign = -sign
        piv = a[j, j]
        det = det * piv
        inv = fld.inv(piv)
        for i in range(j + 1, n):
            if fld.is_zero(a[i, j]):
                continue
            f = a[i, j] * inv
            for k in range(j, n):
                if not fld.is_zero(a[j, k]):
                    a[i, k] = a[i, k] - f * a[j, k]
    return det if sign > 0 else -det


# ---------------------------------------------------------------------------
# Milnor torsion

def _assembled_blocks(c, cohomology_basis, level):
    piv = [_pivots(c, q, level)[0] for q in range(len(c.d))]
    blocks = []
    for q, n in enumerate(c.dims):
        prev = piv[q - 1] if q >= 1 else []
        cur = piv[q] if q < len(piv) else []
        h = None
        nh = 0
        if cohomology_basis is not None:
            h = cohomology_basis[q]
            if h is not None:
                h = np.asarray(h, dtype=float if c.ring == "real" else object)
                if h.ndim == 1:
                    h = h.reshape(n, -1)
                nh = h.shape[1]
        if len(prev) + nh + len(cur) != n:
            if cohomology_basis is None:
                raise NotAcyclic(f"cohomology in degree {q} is nonzero")
            raise HomalgError(f"cohomology basis in degree {q} has the wrong size")
        if c.ring == "real":
            cols = [c.d[q - 1][:, prev]] if q >= 1 else []
            if nh:
                cols.append(h)
            cols.append(np.eye(n)[:, cur])
            blocks.append(np.hstack(cols) if n else np.zeros((0, 0)))
        else:
            fld = _field_for(c.ring, level)
            conv = _to_fraction if c.ring == "rational" else _to_series
            m = np.empty((n, n), dtype=object)
            col = 0
            for j in prev:
                for i in range(n):
                    m[i, col] = c.d[q - 1][i, j]
                col += 1
            for j in range(nh):
                for i in range(n):
                    m[i, col] = conv(h[i, j])
                col += 1
            for j in cur:
                for i in range(n):
                    m[i, col] = fld.one() if i == j else fld.zero()
                col += 1
            blocks.append(m)
    return blocks


def milnor_log_torsion(c: FiniteCochainComplex, cohomology_basis=None, bases=None) -> float:
    """log |tau| in the real mode."""
    if c.ring != "real":
        raise HomalgError("milnor_log_torsion is for the real mode")
    blocks = _assembled_blocks(c, cohomology_basis, None)
    total = 0.0
    for q, m in enumerate(blocks):
        if m.size == 0:
            continue
        sign, logdet = np.linalg.slogdet(m)
        if sign == 0 or not np.isfinite(logdet):
            raise HomalgError(f"degree {q}: cohomology representatives are dependent")
        total += (-1) ** (q + 1) * logdet
    if bases is not None:
        for q, b in enumerate(bases):
            if b is None:
                continue
            _, ld = np.linalg.slogdet(np.asarray(b, dtype=float))
            total += (-1) ** q * ld
    return total


def milnor_torsion(c: FiniteCochainComplex, cohomology_basis=None, bases=None, level=None):
    """Milnor torsion modulo sign.

    Real mode returns |tau| as a float; rational mode a nonnegative
    ``Fraction``; Novikov mode a ``DirichletSeries`` with positive leading
    coefficient (``level`` sets the truncation used for divisions).
    """
    if c.ring == "real":
        return math.exp(milnor_log_torsion(c, cohomology_basis, bases))
    fld = _field_for(c.ring, level)
    blocks = _assembled_blocks(c, cohomology_basis, level)
    tau = fld.one()
    for q, m in enumerate(blocks):
        if m.size == 0:
            continue
        det = _exact_det(m, fld)
        if fld.is_zero(det):
            raise HomalgError(f"degree {q}: cohomology representatives are dependent")
        tau = tau * det if (q + 1) % 2 == 0 else tau * fld.inv(det)
    if bases is not None:
        for q, b in enumerate(bases):
            if b is None:
                continue
            bm = _coerce_matrix(b, c.ring, (c.dims[q], c.dims[q]))
            det = _exact_det(bm, fld)
            tau = tau * det if q % 2 == 0 else tau * fld.inv(det)
    return fld.normalize(tau)


# ---------------------------------------------------------------------------
# inner-product quantities

def _adjoint_laplacian(ipc: InnerProductComplex, q: int) -> np.ndarray:
    """G_q Delta_q, symmetric; Delta_q = d^# d + d d^#."""
    c = ipc.complex
    g = ipc.grams
    n = c.dims[q]
    out = np.zeros((n, n))
    if q < len(c.d):
        dq = c.d[q]
        out += dq.T @ g[q + 1] @ dq
    if q >= 1:
        dp = c.d[q - 1]
        gi = np.linalg.solve(g[q - 1], dp.T @ g[q])
        out += g[q] @ dp @ gi
    return 0.5 * (out + out.T)


def laplacian_eigen(ipc: InnerProductComplex, q: int):
    """Eigenvalues and G-orthonormal eigenvectors of Delta_q."""
    n = ipc.complex.dims[q]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    return sla.eigh(_adjoint_laplacian(ipc, q), ipc.grams[q])


def log_det_prime(eigenvalues: np.ndarray) -> float:
    if eigenvalues.size == 0:
        return 0.0
    top = float(np.max(eigenvalues))
    if top <= 0:
        return 0.0
    keep = eigenvalues[eigenvalues > DET_PRIME_TOL * top]
    return float(np.sum(np.log(keep)))


def t_torsion(ipc: InnerProductComplex) -> float:
    """log T = 1/2 sum_i (-1)^{i+1} i log det' Delta_i."""
    total = 0.0
    for i in range(len(ipc.complex.dims)):
        if i == 0:
            continue
        vals, _ = laplacian_eigen(ipc, i)
        total += (-1) ** (i + 1) * i * log_det_prime(vals)
    return 0.5 * total


def vol_of_iso(theta, gram_src=None, gram_dst=None) -> float:
    """log Vol(theta) = 1/2 log det(theta^# theta)."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    n = theta.shape[1]
    if theta.shape[0] != n:
        raise Singular("theta must be square")
    if n == 0:
        return 0.0
    gs = np.eye(n) if gram_src is None else np.asarray(gram_src, dtype=float)
    gd = np.eye(n) if gram_dst is None else np.asarray(gram_dst, dtype=float)
    sv = np.linalg.svd(theta, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise Singular("theta is singular at tolerance")
    s1, l1 = np.linalg.slogdet(theta.T @ gd @ theta)
    s2, l2 = np.linalg.slogdet(gs)
    return 0.5 * (l1 - l2)


def orthonormal_bases(ipc: InnerProductComplex):
    """Per-degree change of basis B_q with B_q^T G_q B_q = I."""
    return [np.linalg.inv(np.linalg.cholesky(g).T) if g.size else g for g in ipc.grams]


def harmonic_basis(ipc: InnerProductComplex, q: int) -> np.ndarray:
    """G-orthonormal basis of ker Delta_q (harmonic cochains)."""
    vals, vecs = laplacian_eigen(ipc, q)
    if vals.size == 0:
        return np.zeros((0, 0))
    top = max(float(np.max(vals)), 1.0)
    return vecs[:, vals <= DET_PRIME_TOL * top]


def cohomology_log_volume(ipc: InnerProductComplex, q: int, h_reps) -> float:
    """log Vol of ker d/im d -> H^q, with the scalar product making h orthonormal."""
    eta = harmonic_basis(ipc, q)
    h = np.asarray(h_reps, dtype=float).reshape(ipc.complex.dims[q], -1)
    if eta.shape[1] != h.shape[1]:
        raise HomalgError("cohomology basis has the wrong size")
    if eta.shape[1] == 0:
        return 0.0
    c = ipc.complex
    exact = c.d[q - 1] if q >= 1 else np.zeros((c.dims[q], 0))
    system = np.hstack([h, exact])
    coef = np.linalg.lstsq(system, eta, rcond=None)[0][: h.shape[1]]
    return float(np.linalg.slogdet(coef)[1])


def cohomology_map_log_volume(u_q, ipc1: InnerProductComplex, ipc2: InnerProductComplex,
                              q: int) -> float:
    """log Vol H^q u with the scalar products induced in cohomology."""
    e1 = harmonic_basis(ipc1, q)
    e2 = harmonic_basis(ipc2, q)
    if e1.shape[1] != e2.shape[1]:
        raise HomalgError("u does not induce an isomorphism in cohomology")
    if e1.shape[1] == 0:
        return 0.0
    m = e2.T @ ipc2.grams[q] @ (np.asarray(u_q, dtype=float) @ e1)
    return float(np.linalg.slogdet(m)[1])


def cohomology_representatives(c: FiniteCochainComplex, q: int) -> np.ndarray:
    """Some cocycles whose classes form a basis of H^q (real mode)."""
    ipc = InnerProductComplex(c)
    return harmonic_basis(ipc, q)


# ---------------------------------------------------------------------------
# morphisms

def _pad(c: FiniteCochainComplex, top: int) -> FiniteCochainComplex:
    if c.top >= top:
        return c
    dims = list(c.dims) + [0] * (top - c.top)
    ds = [c.differential(q) for q in range(top)]
    return FiniteCochainComplex(tuple(dims), tuple(ds), c.ring)


def _block(rows, ring):
    if ring == "real":
        return np.block(rows) if rows else np.zeros((0, 0))
    nrow = [r[0].shape[0] for r in rows]
    ncol = [m.shape[1] for m in rows[0]]
    out = np.empty((sum(nrow), sum(ncol)), dtype=object)
    r0 = 0
    for i, r in enumerate(rows):
        c0 = 0
        for j, m in enumerate(r):
            out[r0:r0 + nrow[i], c0:c0 + ncol[j]] = m
            c0 += ncol[j]
        r0 += nrow[i]
    return out


def _zeros(shape, ring):
    if ring == "real":
        return np.zeros(shape)
    out = np.empty(shape, dtype=object)
    z = Fraction(0) if ring == "rational" else series_zero()
    for idx in np.ndindex(*shape):
        out[idx] = z
    return out


def _neg(m, ring):
    if ring == "real":
        return -m
    out = np.empty(m.shape, dtype=object)
    for idx in np.ndindex(*m.shape):
        out[idx] = -m[idx]
    return out


def check_chain_map(u, c1: FiniteCochainComplex, c2: FiniteCochainComplex, tol=1e-10):
    top = max(c1.top, c2.top)
    c1, c2 = _pad(c1, top), _pad(c2, top)
    us = [_coerce_matrix(u[q] if q < len(u) else np.zeros((c2.dims[q], c1.dims[q])),
                         c1.ring, (c2.dims[q], c1.dims[q])) for q in range(top + 1)]
    for q in range(top):
        if c1.ring == "real":
            err = np.linalg.norm(us[q + 1] @ c1.d[q] - c2.d[q] @ us[q])
            if err > tol * max(1.0, np.linalg.norm(us[q + 1]) * np.linalg.norm(c1.d[q])):
                raise NotChainMap(f"u does not commute with d in degree {q} ({err:.3g})")
        else:
            fld = _RationalField() if c1.ring == "rational" else _NovikovField(None)
            lhs = _exact_matmul(us[q + 1], c1.d[q], fld)
            rhs = _exact_matmul(c2.d[q], us[q], fld)
            for a, b in zip(lhs.flat, rhs.flat):
                if not fld.is_zero(a - b):
                    raise NotChainMap(f"u does not commute with d in degree {q}")
    return c1, c2, us


def mapping_cone(u, c1: FiniteCochainComplex, c2: FiniteCochainComplex) -> FiniteCochainComplex:
    """Cone^q = C1^q + C2^{q-1}, d(a, b) = (d1 a, u a - d2 b)."""
    if c1.ring != c2.ring:
        raise HomalgError("complexes must share a coefficient ring")
    ring = c1.ring
    c1, c2, us = check_chain_map(u, c1, c2)
    top = c1.top
    dims = [(c1.dims[q] if q <= top else 0) + (c2.dims[q - 1] if q >= 1 else 0)
            for q in range(top + 2)]
    ds = []
    for q in range(top + 1):
        d1 = c1.differential(q)  # C1^{q} -> C1^{q+1}
        d2 = c2.differential(q - 1) if q >= 1 else _zeros((c2.dims[0], 0), ring)
        n1_next = c1.dims[q + 1] if q + 1 <= top else 0
        n2_prev = c2.dims[q - 1] if q >= 1 else 0
        top_row = [d1.reshape(n1_next, c1.dims[q]), _zeros((n1_next, n2_prev), ring)]
        bot_row = [us[q], _neg(d2.reshape(c2.dims[q], n2_prev), ring)]
        ds.append(_block([top_row, bot_row], ring))
    return FiniteCochainComplex(tuple(dims), tuple(ds), ring)


def cone_grams(grams1, grams2):
    top = len(grams1) - 1
    out = []
    for q in range(top + 2):
        g1 = grams1[q] if q <= top else np.zeros((0, 0))
        g2 = grams2[q - 1] if q >= 1 else np.zeros((0, 0))
        out.append(sla.block_diag(g1, g2))
    return tuple(out)


def torsion_of_morphism(u, c1: FiniteCochainComplex, c2: FiniteCochainComplex, mode="milnor",
                        grams1=None, grams2=None, level=None):
    """tau(u) = tau(Cone u) (Milnor mode) or log T(u) = log T(Cone u) ("T" mode)."""
    cone = mapping_cone(u, c1, c2)
    if mode == "milnor":
        if not is_acyclic(cone, level):
            raise ConeNotAcyclic("u is not a quasi-isomorphism")
        return milnor_torsion(cone, level=level)
    if mode == "log_milnor":
        if not is_acyclic(cone, level):
            raise ConeNotAcyclic("u is not a quasi-isomorphism")
        return milnor_log_torsion(cone)
    if mode == "T":
        top = max(c1.top, c2.top)
        g1 = list(grams1) if grams1 is not None else [np.eye(n) for n in c1.dims]
        g2 = list(grams2) if grams2 is not None else [np.eye(n) for n in c2.dims]
        g1 += [np.zeros((0, 0))] * (top + 1 - len(g1))
        g2 += [np.zeros((0, 0))] * (top + 1 - len(g2))
        return t_torsion(InnerProductComplex(cone, cone_grams(g1, g2)))
    raise HomalgError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# ring homomorphisms

def apply_ring_hom(c: FiniteCochainComplex, t: float) -> FiniteCochainComplex:
    """ev_t: entrywise Laplace evaluation of a Novikov complex at real t."""
    if c.ring != "novikov":
        raise HomalgError("apply_ring_hom expects a Novikov complex")
    ds = []
    for m in c.d:
        out = np.zeros(m.shape)
        for idx in np.ndindex(*m.shape):
            out[idx] = evaluate(m[idx], t).value.real
        ds.append(out)
    return FiniteCochainComplex(c.dims, tuple(ds), "real")


def ev(f: DirichletSeries, t: float) -> float:
    return evaluate(f, t).value.real
