"""Small complexes of the Witten deformation and the identities they satisfy.

The integration map sends a grid cochain to the functions on the zeros of
degree q given by ``Int(a)(x) = int_{W^-_x} e^{t h_x} a`` (point evaluation
when q = 0).  Inverting it on the small eigenspace gives the canonical
basis ``E_x(t)``; expanding ``d_omega(t) E_y`` in that basis gives the
incidence functions, which are compared with the Laplace transforms of the
instanton counting series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from . import dynamics as dyn
from . import homalg
from .geometry import (ClosedOneFormSpec, PeriodicMesh, WittenOperator, assemble,
                       large_torsion, oneD_zeta_determinant, small_large_split,
                       trig_interpolate)
from .series import DirichletSeries, evaluate

INT_CUTOFF = 1e-25
COND_LIMIT = 1e6


class PipelineError(ValueError):
    pass


class DivergentIntegral(PipelineError):
    pass


class SingularRestriction(PipelineError):
    pass


class BadPrimitive(PipelineError):
    pass


# ---------------------------------------------------------------------------
# integration map

def _form_at(mesh: PeriodicMesh, vec: np.ndarray, q: int, pts: np.ndarray, frames: np.ndarray):
    """Evaluate a grid q-form on oriented tangent frames at points."""
    n = mesh.npoints
    if q == 0:
        return trig_interpolate(mesh, vec, pts)
    if q == 1:
        out = np.zeros(len(pts))
        for i in range(mesh.dim):
            out += trig_interpolate(mesh, vec[i * n:(i + 1) * n], pts) * frames[:, i, 0]
        return out
    if q == 2 and mesh.dim == 2:
        det = frames[:, 0, 0] * frames[:, 1, 1] - frames[:, 0, 1] * frames[:, 1, 0]
        return trig_interpolate(mesh, vec, pts) * det
    raise PipelineError("unsupported form degree")


def integration_map(charts: Sequence[dyn.UnstableChart], mesh: PeriodicMesh, vec, q: int,
                    t: float) -> np.ndarray:
    """Int(a)(x) for every chart center x of index q."""
    vec = np.asarray(vec, dtype=float)
    out = np.zeros(len(charts))
    for i, ch in enumerate(charts):
        if ch.center.index != q:
            raise PipelineError("form degree differs from the chart dimension")
        if q == 0:
            out[i] = trig_interpolate(mesh, vec, ch.center.coords[None, :])[0]
            continue
        if not dyn.l1_test(ch, t)[0]:
            raise DivergentIntegral(f"e^(t h_x) is not integrable at t={t}")
        factor = np.exp(t * ch.h)
        keep = factor > INT_CUTOFF
        vals = _form_at(mesh, vec, q, ch.points[keep], ch.frames[keep])
        out[i] = float(np.sum(ch.weights[keep] * factor[keep] * vals))
    return out


def integration_matrix(charts, mesh, vectors: np.ndarray, q: int, t: float) -> np.ndarray:
    cols = [integration_map(charts, mesh, vectors[:, j], q, t) for j in range(vectors.shape[1])]
    return np.array(cols).T.reshape(len(charts), vectors.shape[1])


# ---------------------------------------------------------------------------
# scenario data independent of t

@dataclass
class MorseData:
    omega: ClosedOneFormSpec
    zeros: list  # per degree
    charts: list  # per degree, aligned with zeros

    @property
    def counts(self) -> tuple:
        return tuple(len(z) for z in self.zeros)


def morse_data(omega: ClosedOneFormSpec) -> MorseData:
    pts = dyn.find_zeros(omega)
    zeros = [[z for z in pts if z.index == q] for q in range(omega.dim + 1)]
    charts = [[dyn.unstable_chart(omega, z) for z in zs] for zs in zeros]
    return MorseData(omega, zeros, charts)


# ---------------------------------------------------------------------------
# canonical basis

@dataclass
class SmallComplex:
    t: float
    mesh: PeriodicMesh
    zeros: list
    small: list  # L^2-orthonormal small eigenvectors per degree
    small_values: list
    int_matrices: list  # Int restricted to the small space
    bases: list  # E_x(t) as grid vectors (columns)
    grams: list  # raw Gram matrices
    scales: list  # Gaussian normalization per zero
    incidence: list = field(default_factory=list)

    @property
    def normalized_grams(self) -> list:
        return [g / np.outer(s, s) if g.size else g for g, s in zip(self.grams, self.scales)]

    def gram_deviation(self, normalized: bool = True) -> float:
        gs = self.normalized_grams if normalized else self.grams
        return max((float(np.linalg.norm(g - np.eye(len(g)), 2)) for g in gs if g.size),
                   default=0.0)


def gaussian_scale(z: dyn.CriticalPoint, t: float) -> float:
    """|E_x| for the model Gaussian at a zero: (t|k|/pi)^{1/4} unstable, (pi/(t k))^{1/4} stable."""
    s = 1.0
    for k in z.hessian_values:
        s *= (t * abs(k) / math.pi) ** 0.25 if k < 0 else (math.pi / (t * k)) ** 0.25
    return s


def canonical_basis(op: WittenOperator, data: MorseData) -> SmallComplex:
    mesh, t = op.mesh, op.t
    small, svals, ints, bases, grams, scales = [], [], [], [], [], []
    for q in range(mesh.dim + 1):
        split = small_large_split(op, q, expected=len(data.zeros[q]))
        v = split.basis
        small.append(v)
        svals.append(split.small)
        if v.shape[1] == 0:
            ints.append(np.zeros((0, 0)))
            bases.append(np.zeros((v.shape[0], 0)))
            grams.append(np.zeros((0, 0)))
            scales.append(np.zeros(0))
            continue
        m = integration_matrix(data.charts[q], mesh, v, q, t)
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise SingularRestriction(f"Int restricted to the small space has condition {cond:.3g}")
        e = v @ np.linalg.inv(m)
        ints.append(m)
        bases.append(e)
        grams.append(mesh.cell * (e.T @ e))
        scales.append(np.array([gaussian_scale(z, t) for z in data.zeros[q]]))
    sc = SmallComplex(t, mesh, data.zeros, small, svals, ints, bases, grams, scales)
    sc.incidence = incidence_functions(sc, op)
    return sc


def incidence_functions(sc: SmallComplex, op: WittenOperator) -> list:
    """Matrices I^q with d_omega(t) E_y = sum_x I^q[x, y] E_x."""
    out = []
    for q in range(sc.mesh.dim):
        ey, ex = sc.bases[q], sc.bases[q + 1]
        if ey.shape[1] == 0 or ex.shape[1] == 0:
            out.append(np.zeros((ex.shape[1], ey.shape[1])))
            continue
        de = op.d[q] @ ey
        out.append(np.linalg.lstsq(ex, de, rcond=None)[0])
    return out


def log_V(sc: SmallComplex, normalized: bool = False) -> float:
    """sum_q (-1)^q log Vol{E_x(t)} with respect to the grid inner product."""
    gs = sc.normalized_grams if normalized else sc.grams
    total = 0.0
    for q, g in enumerate(gs):
        if g.size:
            total += (-1) ** q * 0.5 * float(np.linalg.slogdet(g)[1])
    return total


def small_complex_log_torsion(sc: SmallComplex) -> float:
    """log T of the incidence complex with E_x orthonormal."""
    dims = tuple(len(z) for z in sc.zeros)
    c = homalg.FiniteCochainComplex(dims, tuple(sc.incidence))
    return homalg.t_torsion(homalg.InnerProductComplex(c))


@lru_cache(maxsize=32)
def _cached_small_complex(key):
    omega_name, sizes, t = key
    omega = _FORMS[omega_name]
    mesh = PeriodicMesh(len(sizes), sizes)
    data = _cached_morse(omega_name)
    op = assemble(mesh, omega, t)
    return canonical_basis(op, data), op


_FORMS: dict = {}


@lru_cache(maxsize=8)
def _cached_morse(omega_name):
    return morse_data(_FORMS[omega_name])


def small_complex(omega: ClosedOneFormSpec, sizes: tuple, t: float):
    """Memoized (SmallComplex, WittenOperator) for a named form."""
    key = omega.name or repr(id(omega))
    _FORMS[key] = omega
    return _cached_small_complex((key, tuple(sizes), float(t)))


def cached_morse_data(omega: ClosedOneFormSpec) -> MorseData:
    key = omega.name or repr(id(omega))
    _FORMS[key] = omega
    return _cached_morse(key)


# ---------------------------------------------------------------------------
# Laplace oracle for the incidence functions

def instanton_series_matrices(data: MorseData, level: float) -> list:
    mats = []
    for q in range(data.omega.dim):
        rows, cols = data.zeros[q + 1], data.zeros[q]
        m = np.empty((len(rows), len(cols)), dtype=object)
        for i, x in enumerate(rows):
            for j, y in enumerate(cols):
                m[i, j] = dyn.counting_series_instantons(data.omega, x, y, level)
        mats.append(m)
    return mats


@lru_cache(maxsize=16)
def _cached_series(omega_name, level):
    return instanton_series_matrices(_cached_morse(omega_name), level)


def cached_series_matrices(omega: ClosedOneFormSpec, level: float) -> list:
    """Memoized ``instanton_series_matrices`` for a named form (do not mutate)."""
    key = omega.name or repr(id(omega))
    _FORMS[key] = omega
    return _cached_series(key, float(level))


def laplace_matrices(series_mats: list, t: float) -> list:
    out = []
    for m in series_mats:
        r = np.zeros(m.shape)
        for idx in np.ndindex(*m.shape):
            r[idx] = evaluate(m[idx], t).value.real
        out.append(r)
    return out


def incidence_error(sc: SmallComplex, series_mats: list) -> float:
    """Largest entrywise relative error between incidence functions and Laplace transforms."""
    worst = 0.0
    for num, ref in zip(sc.incidence, laplace_matrices(series_mats, sc.t)):
        for idx in np.ndindex(*ref.shape):
            if ref[idx] == 0:
                worst = max(worst, abs(num[idx]))
            else:
                worst = max(worst, abs(num[idx] - ref[idx]) / abs(ref[idx]))
    return worst


# ---------------------------------------------------------------------------
# regularization

def smooth_step(s):
    """C-infinity step: 0 for s <= -1, 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    a = np.clip((s + 1) / 2, 0.0, 1.0)
    b = 1.0 - a
    with np.errstate(divide="ignore", over="ignore"):
        ga = np.where(a > 0, np.exp(-1.0 / np.where(a > 0, a, 1.0)), 0.0)
        gb = np.where(b > 0, np.exp(-1.0 / np.where(b > 0, b, 1.0)), 0.0)
    return ga / (ga + gb)


def smooth_step_prime(s):
    s = np.asarray(s, dtype=float)
    eps = 1e-6
    return (smooth_step(s + eps) - smooth_step(s - eps)) / (2 * eps)


def _wrap(u):
    return (np.asarray(u) + math.pi) % (2 * math.pi) - math.pi


@dataclass(frozen=True)
class PrimitiveChoice:
    """f = exact part + sum_i a_i saw(theta_i; center_i, width_i).

    saw(u) = u - 2 pi step(u / w) with u = wrap(theta - c) is a smooth
    periodic function whose differential is dtheta outside the cut strip
    |theta - c| < w.
    """
    centers: tuple
    widths: tuple

    def saw(self, theta, i):
        u = _wrap(theta - self.centers[i])
        return u - 2 * math.pi * smooth_step(u / self.widths[i])

    def saw_defect(self, theta, i):
        """1 - saw'(theta): the bump that makes dtheta - d saw compactly supported."""
        u = _wrap(theta - self.centers[i])
        return 2 * math.pi * smooth_step_prime(u / self.widths[i]) / self.widths[i]


def regularization(omega: ClosedOneFormSpec, choice: PrimitiveChoice,
                   field_form: Optional[ClosedOneFormSpec] = None, nodes: int = 96,
                   periodic_nodes: int = 512) -> float:
    """R(X, omega, g) for X = -field_form (default: omega) and the flat metric.

    R = int omega_0 ^ X^* Psi + sum_x (-1)^{ind x} f(x), omega_0 = omega - df,
    with Psi = sign(X)/2 on S^1 and Psi = -(1/2 pi) d(angle) on T^2.
    The Euler-form correction vanishes for flat metrics.
    """
    xf = field_form or omega
    n = omega.dim
    a = omega.harmonic
    zeros = dyn.find_zeros(xf)
    for z in zeros:
        for i in range(n):
            if abs(_wrap(z.coords[i] - choice.centers[i])) < choice.widths[i]:
                raise BadPrimitive(f"zero {z.coords} lies in the cut strip of factor {i}")

    def f(x):
        x = np.atleast_2d(x)
        val = omega.exact(x)
        for i in range(n):
            val = val + a[i] * choice.saw(x[:, i], i)
        return val

    total = float(sum((-1) ** z.index * f(z.coords[None, :])[0] for z in zeros))
    gn, gw = np.polynomial.legendre.leggauss(nodes)
    if n == 1:
        c, w = choice.centers[0], choice.widths[0]
        th = c + w * gn
        xs = -xf.values(th[:, None])[:, 0]
        integrand = a[0] * choice.saw_defect(th, 0) * 0.5 * np.sign(xs)
        return total + float(np.sum(w * gw * integrand))
    if n == 2:
        per = np.arange(periodic_nodes) * 2 * math.pi / periodic_nodes
        pw = 2 * math.pi / periodic_nodes
        for i in range(2):
            if a[i] == 0:
                continue
            c, w = choice.centers[i], choice.widths[i]
            th_i = c + w * gn
            grid = np.zeros((nodes, periodic_nodes, 2))
            grid[..., i] = th_i[:, None]
            grid[..., 1 - i] = per[None, :]
            pts = grid.reshape(-1, 2)
            x = -xf.values(pts)
            dx = -xf.hessian(pts)  # dX_a / dtheta_b
            r2 = np.sum(x * x, axis=1)
            beta = -(x[:, 0:1] * dx[:, 1, :] - x[:, 1:2] * dx[:, 0, :]) / r2[:, None] / (2 * math.pi)
            om0 = (a[i] * choice.saw_defect(pts[:, i], i))
            # omega_0 = om0 dtheta_i; dtheta_1 ^ beta = beta_2, dtheta_2 ^ beta = -beta_1
            wedge = om0 * (beta[:, 1] if i == 0 else -beta[:, 0])
            weights = (w * gw)[:, None] * np.full(periodic_nodes, pw)[None, :]
            total += float(np.sum(weights.ravel() * wedge))
        return total
    raise PipelineError("regularization supports S^1 and T^2")


# ---------------------------------------------------------------------------
# T-hat and the Novikov naturality check

def t_hat(sc: SmallComplex, op: WittenOperator, reg: float, large: str = "grid",
          normalized: bool = False) -> float:
    """log T_large(t) - log V(t) + t R."""
    if large == "grid":
        lt = large_torsion(op)
    elif large == "monodromy":
        if op.dim != 1:
            raise PipelineError("monodromy determinant is available on S^1 only")
        full = 0.5 * oneD_zeta_determinant(op.omega, op.t, q=1, period=op.mesh.periods[0])
        small = 0.5 * float(np.sum(np.log(sc.small_values[1]))) if sc.small_values[1].size else 0.0
        lt = full - small
    else:
        raise PipelineError(f"unknown large-torsion mode {large!r}")
    return lt - log_V(sc, normalized) + op.t * reg


def lift_anchors(data: MorseData) -> list:
    """Lifts of all zeros inside the box (y0 - pi, y0 + pi]^n around the first index-0 zero."""
    if not data.zeros[0]:
        raise PipelineError("anchoring needs an index-0 zero")
    y0 = data.zeros[0][0].coords
    out = []
    for zs in data.zeros:
        lifted = []
        for z in zs:
            k = np.ceil((z.coords - y0 - math.pi) / (2 * math.pi))
            lifted.append(z.coords - 2 * math.pi * k)
        out.append(lifted)
    return out


def novikov_complex(data: MorseData, level: float, series_mats: Optional[list] = None):
    """Novikov complex with entries shifted by the anchor differences."""
    mats = series_mats or instanton_series_matrices(data, level)
    anchors = lift_anchors(data)
    h = [[float(data.omega.primitive(p)) for p in a] for a in anchors]
    ds = []
    for q, m in enumerate(mats):
        out = np.empty(m.shape, dtype=object)
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                out[i, j] = m[i, j].shift(-(h[q + 1][i] - h[q][j]))
        ds.append(out)
    dims = tuple(len(z) for z in data.zeros)
    return homalg.FiniteCochainComplex(dims, tuple(ds), "novikov"), h


def novikov_torsion_check(sc: SmallComplex, data: MorseData, level: float,
                          series_mats: Optional[list] = None) -> float:
    """log|ev_t tau_N| - (log T_small(t) - t sum_x (-1)^{ind x} h(x~))."""
    cpx, h = novikov_complex(data, level, series_mats)
    tau = homalg.milnor_torsion(cpx, level=level)
    lhs = math.log(abs(evaluate(tau, sc.t).value.real))
    anchor = sum((-1) ** q * sum(hq) for q, hq in enumerate(h))
    rhs = small_complex_log_torsion(sc) - sc.t * anchor
    return lhs - rhs


def s1_oracle_integral(omega: ClosedOneFormSpec, x: dyn.CriticalPoint, t: float) -> float:
    """int over W^-_x of e^{t h_x} dtheta on S^1 by adaptive quadrature."""
    zs = [z for z in dyn.find_zeros(omega) if z.index == 0]
    x0 = x.coords[0]
    right = min((z.coords[0] - x0) % (2 * math.pi) for z in zs)
    left = min((x0 - z.coords[0]) % (2 * math.pi) for z in zs)
    hx = float(omega.primitive(x.coords))
    g = lambda th: math.exp(t * (float(omega.primitive(np.array([th]))) - hx))
    sign = 1.0 if x.unstable_basis[0, 0] > 0 else -1.0
    val = quad(g, x0 - left, x0, epsabs=0, epsrel=1e-12, limit=200)[0]
    val += quad(g, x0, x0 + right, epsabs=0, epsrel=1e-12, limit=200)[0]
    return sign * val
