"""Gradient flows of closed 1-forms and suspension flows.

The vector field is X = -omega (flat metric), so the lifted primitive
h = sum a_i x_i + f decreases along trajectories.  Zeros are reported in
universal-cover coordinates with representatives in [-pi, pi)^n.

Orientation conventions: the unstable space of an index-k zero is oriented
by the Hessian eigenvectors with negative eigenvalue, each normalized so its
first nonzero component is positive; zeros of top index use the standard
orientation.  Instanton signs:

* index 1 -> 0: the sign of <initial direction, u_x>;
* index 2 -> 1 in dimension 2: s_x * sign det[incoming direction at z, u_z].

Closed orbits of suspensions carry eps = sign det(I - D phi^n) and enter the
counting function with weight eps / p.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .geometry import ClosedOneFormSpec
from .series import DirichletSeries, exp_series, zero as series_zero

TWO_PI = 2 * math.pi
HESSIAN_TOL = 1e-6
SPHERE_RADIUS = 1e-3
BISECTION_TOL = 1e-10
FLOW_TIME = 80.0
GROWTH_FACTOR = 1.05
GROWTH_RUN = 5


class DynamicsError(ValueError):
    pass


class DegenerateZero(DynamicsError):
    pass


class NonTransversal(DynamicsError):
    pass


class DegenerateOrbit(DynamicsError):
    pass


class BlowUp(DynamicsError):
    pass


class InsufficientRadius(DynamicsError):
    pass


class RankDeficient(DynamicsError):
    pass


# ---------------------------------------------------------------------------
# zeros

@dataclass(frozen=True)
class CriticalPoint:
    coords: np.ndarray
    index: int
    hessian_values: np.ndarray
    hessian_vectors: np.ndarray
    orientation: int = 1  # extra +-1 relative to the convention above

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def unstable_basis(self) -> np.ndarray:
        """Oriented basis of the unstable space (columns)."""
        n = self.dim
        if self.index == n:
            basis = np.eye(n)
        else:
            cols = []
            for j in np.flatnonzero(self.hessian_values < 0):
                v = self.hessian_vectors[:, j].copy()
                nz = np.flatnonzero(np.abs(v) > 1e-12)
                if v[nz[0]] < 0:
                    v = -v
                cols.append(v)
            basis = np.array(cols).T.reshape(n, self.index)
        if self.index > 0 and self.orientation < 0:
            basis = basis.copy()
            basis[:, 0] *= -1
        return basis

    @property
    def stable_basis(self) -> np.ndarray:
        cols = [self.hessian_vectors[:, j] for j in np.flatnonzero(self.hessian_values > 0)]
        return np.array(cols).T.reshape(self.dim, len(cols))

    def flipped(self) -> "CriticalPoint":
        return CriticalPoint(self.coords, self.index, self.hessian_values,
                             self.hessian_vectors, -self.orientation)

    def same_point(self, other: "CriticalPoint", tol: float = 1e-7) -> bool:
        return lattice_offset(self.coords, other.coords, tol) is not None


def wrap(x):
    return (np.asarray(x, dtype=float) + math.pi) % TWO_PI - math.pi


def lattice_offset(a, b, tol: float = 1e-7):
    """Integer k with a = b + 2 pi k (within tol), or None."""
    k = np.round((np.asarray(a) - np.asarray(b)) / TWO_PI)
    if np.max(np.abs(np.asarray(a) - np.asarray(b) - TWO_PI * k)) <= tol:
        return tuple(int(v) for v in k)
    return None


def newton_zero(omega: ClosedOneFormSpec, x0, tol: float = 1e-13, maxit: int = 50):
    x = np.array(x0, dtype=float)
    for _ in range(maxit):
        g = omega.values(x)
        h = omega.hessian(x)
        try:
            step = np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            return None
        x = x - step
        if np.linalg.norm(step) < tol:
            break
    if np.linalg.norm(omega.values(x)) > 1e-10:
        return None
    return x


def make_critical_point(omega: ClosedOneFormSpec, x) -> CriticalPoint:
    vals, vecs = np.linalg.eigh(omega.hessian(np.asarray(x, dtype=float)))
    if np.min(np.abs(vals)) < HESSIAN_TOL:
        raise DegenerateZero(f"degenerate zero at {x} (Hessian eigenvalues {vals})")
    return CriticalPoint(np.asarray(x, dtype=float), int(np.sum(vals < 0)), vals, vecs)


def find_zeros(omega: ClosedOneFormSpec, seeds_per_axis: Optional[int] = None) -> list:
    n = omega.dim
    m = seeds_per_axis or (128 if n == 1 else 32)
    grid = np.meshgrid(*[np.arange(m) * TWO_PI / m - math.pi] * n, indexing="ij")
    seeds = np.stack([g.ravel() for g in grid], axis=1)
    found = []
    for s in seeds:
        z = newton_zero(omega, s)
        if z is None:
            continue
        z = wrap(z)
        z[np.abs(z - math.pi) < 1e-12] = -math.pi
        if any(lattice_offset(z, f, 1e-7) is not None for f in found):
            continue
        found.append(z)
    pts = [make_critical_point(omega, z) for z in found]
    pts.sort(key=lambda c: (c.index, tuple(np.round(c.coords, 9))))
    return pts


# ---------------------------------------------------------------------------
# flow integration

def _flow_rhs(omega):
    def rhs(_, y):
        return -omega.values(y)
    return rhs


def flow(omega: ClosedOneFormSpec, p0, tau: float = FLOW_TIME, dense: bool = False):
    sol = solve_ivp(_flow_rhs(omega), (0.0, tau), np.asarray(p0, dtype=float), method="DOP853",
                    rtol=1e-11, atol=1e-13, dense_output=dense)
    if not sol.success:
        raise BlowUp(sol.message)
    return sol


def _settle(omega, sol):
    """Newton-refine the end of a trajectory to the zero it approaches."""
    z = newton_zero(omega, sol.y[:, -1])
    if z is None or np.linalg.norm(z - sol.y[:, -1]) > 1e-3:
        return None
    return z


@dataclass
class Instanton:
    source: CriticalPoint
    target: CriticalPoint
    target_lift: np.ndarray
    class_value: float
    sign: int
    path: np.ndarray
    quadrature_value: float


def _quadrature_class_value(omega, x, target_lift, sol, tau_end):
    """-int omega along the path: h(x)-h(p0) + int |omega|^2 dtau + h(p_end)-h(z)."""
    taus = np.linspace(0.0, tau_end, 4001)
    pts = sol.sol(taus).T
    w2 = np.sum(omega.values(pts) ** 2, axis=1)
    # composite Simpson along the trajectory
    hstep = taus[1] - taus[0]
    integral = hstep / 3 * (w2[0] + w2[-1] + 4 * np.sum(w2[1:-1:2]) + 2 * np.sum(w2[2:-1:2]))
    head = omega.primitive(x) - omega.primitive(pts[0])
    tail = omega.primitive(pts[-1]) - omega.primitive(target_lift)
    return float(head + integral + tail), pts


def _instantons_index1(omega, x: CriticalPoint, y: CriticalPoint, level):
    u = x.unstable_basis[:, 0]
    out = []
    for s in (1.0, -1.0):
        p0 = x.coords + s * SPHERE_RADIUS * u
        sol = flow(omega, p0, dense=True)
        z = _settle(omega, sol)
        if z is None:
            raise NonTransversal("unstable branch did not settle at a zero")
        if lattice_offset(z, y.coords) is None:
            continue
        lam = float(omega.primitive(x.coords) - omega.primitive(z))
        if lam > level:
            continue
        quad, pts = _quadrature_class_value(omega, x.coords, z, sol, sol.t[-1])
        # u already carries O_x; an index-0 target only contributes its token
        sign = int(np.sign(s)) * y.orientation
        out.append(Instanton(x, y, z, lam, sign, pts, quad))
    return out


def _label(omega, p0):
    sol = flow(omega, p0)
    z = _settle(omega, sol)
    if z is None:
        return None
    return tuple(np.round(z, 6))


def _sphere_point(x, phi):
    return x.coords + SPHERE_RADIUS * np.array([math.cos(phi), math.sin(phi)])


def basin_boundaries(omega, x: CriticalPoint, seeds: int = 64, tol: float = BISECTION_TOL):
    """Angles on the small circle around an index-2 zero where the basin of arrival changes."""
    phis = (np.arange(seeds) + 0.5) * TWO_PI / seeds
    labels = [_label(omega, _sphere_point(x, p)) for p in phis]
    out = []
    for i in range(seeds):
        a, b = phis[i], phis[(i + 1) % seeds] + (TWO_PI if i == seeds - 1 else 0.0)
        la, lb = labels[i], labels[(i + 1) % seeds]
        if la == lb:
            continue
        while b - a > tol:
            m = 0.5 * (a + b)
            lm = _label(omega, _sphere_point(x, m))
            if lm == la:
                a = m
            elif lm == lb:
                b = m
            else:
                # a third basin between the two; keep the half next to a
                b, lb = m, lm
        out.append(0.5 * (a + b))
    return sorted(p % TWO_PI for p in out)


def _instantons_index2(omega, x: CriticalPoint, y: CriticalPoint, level, seeds=64):
    out = []
    for phi in basin_boundaries(omega, x, seeds):
        sol = flow(omega, _sphere_point(x, phi), dense=True)
        taus = np.linspace(0.0, sol.t[-1], 20001)
        pts = sol.sol(taus).T
        far = np.linalg.norm(pts - x.coords, axis=1) > 0.1
        if not np.any(far):
            raise NonTransversal("separatrix trajectory did not leave the source")
        speed = np.linalg.norm(omega.values(pts), axis=1)
        speed[~far] = np.inf
        # first slow passage that refines to a saddle
        local = np.flatnonzero((speed[1:-1] <= speed[:-2]) & (speed[1:-1] <= speed[2:])) + 1
        z = zp = None
        for k in local:
            cand = newton_zero(omega, pts[k])
            if cand is None or np.linalg.norm(cand - pts[k]) > 1e-2:
                continue
            cp = make_critical_point(omega, cand)
            if cp.index == 1:
                z, zp = cand, cp
                break
        if z is None:
            raise NonTransversal("bisection could not isolate the saddle")
        if lattice_offset(z, y.coords) is None:
            continue
        lam = float(omega.primitive(x.coords) - omega.primitive(z))
        if lam > level:
            continue
        # incoming direction along the stable eigenvector of z
        back = pts[max(k - 200, 0)]
        sdir = zp.stable_basis[:, 0]
        if np.dot(sdir, z - back) < 0:
            sdir = -sdir
        u_z = y.unstable_basis[:, 0]
        s_x = int(np.sign(np.linalg.det(x.unstable_basis)))
        sign = s_x * int(np.sign(np.linalg.det(np.column_stack([sdir, u_z]))))
        quad, path = _quadrature_class_value(omega, x.coords, z, sol, taus[k])
        out.append(Instanton(x, y, z, lam, sign, path, quad))
    return out


def instantons(omega: ClosedOneFormSpec, x: CriticalPoint, y: CriticalPoint,
               level: float) -> list:
    """All instantons from x to (lifts of) y with class value <= level."""
    if x.index != y.index + 1:
        raise DynamicsError("instantons need ind(x) = ind(y) + 1")
    if x.index == 1:
        found = _instantons_index1(omega, x, y, level)
    elif x.index == 2 and x.dim == 2:
        found = _instantons_index2(omega, x, y, level)
    else:
        raise DynamicsError("instanton search supports index 1 -> 0 and index 2 -> 1 in dim 2")
    found.sort(key=lambda i: (i.class_value, i.sign))
    return found


def counting_series_instantons(omega, x, y, level, found: Optional[list] = None) -> DirichletSeries:
    found = instantons(omega, x, y, level) if found is None else found
    return DirichletSeries([(i.class_value, i.sign) for i in found], cutoff=level)


def novikov_differentials(omega: ClosedOneFormSpec, zeros: Sequence[CriticalPoint], level: float):
    """Degreewise matrices of counting series: entry [x, y] = I_{x,y} for ind x = q+1, ind y = q."""
    by_index = {}
    for z in zeros:
        by_index.setdefault(z.index, []).append(z)
    n = omega.dim
    mats = []
    for q in range(n):
        rows = by_index.get(q + 1, [])
        cols = by_index.get(q, [])
        m = np.empty((len(rows), len(cols)), dtype=object)
        for i, x in enumerate(rows):
            for j, y in enumerate(cols):
                m[i, j] = counting_series_instantons(omega, x, y, level)
        mats.append(m)
    return mats, [by_index.get(q, []) for q in range(n + 1)]


# ---------------------------------------------------------------------------
# suspensions and closed orbits

@dataclass(frozen=True)
class TorusLinearMap:
    matrix: tuple
    return_value: Fraction = Fraction(1)
    name: str = "linear torus map"

    def __post_init__(self):
        m = tuple(tuple(int(v) for v in row) for row in self.matrix)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "return_value", Fraction(self.return_value))

    def power(self, n: int) -> np.ndarray:
        a = np.array(self.matrix, dtype=object)
        out = np.array([[1, 0], [0, 1]], dtype=object)
        for _ in range(n):
            out = out.dot(a)
        return out


@dataclass(frozen=True)
class CircleMap:
    """Lift phi: R -> R of a degree-1 circle diffeomorphism, with derivative."""
    phi: Callable
    dphi: Callable
    return_value: Fraction = Fraction(1)
    name: str = "circle map"


def cat_map() -> TorusLinearMap:
    return TorusLinearMap(((2, 1), (1, 1)), name="cat map")


def circle_diffeo(eps: float = 0.5) -> CircleMap:
    return CircleMap(lambda x: x - eps * np.sin(x), lambda x: 1 - eps * np.cos(x),
                     name=f"theta - {eps} sin theta")


@dataclass
class ClosedOrbit:
    class_value: Fraction
    period: int  # n, number of returns to the section
    multiplicity: int  # p
    sign: int
    points: list  # the periodic orbit on the section (representative loop)


def _det2(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def _torus_fixed_points(a: TorusLinearMap, n: int):
    """Fix(A^n) as integer vectors v with x = v / D, D = |det(A^n - I)|."""
    an = a.power(n)
    m = [[an[0][0] - 1, an[0][1]], [an[1][0], an[1][1] - 1]]
    det = _det2(m)
    if det == 0:
        raise DegenerateOrbit(f"A^{n} has eigenvalue 1")
    dd = abs(det)
    adj = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
    gens = [(adj[0][0] % dd, adj[1][0] % dd), (adj[0][1] % dd, adj[1][1] % dd)]
    seen = {(0, 0)}
    queue = deque([(0, 0)])
    while queue:
        v = queue.popleft()
        for g in gens:
            w = ((v[0] + g[0]) % dd, (v[1] + g[1]) % dd)
            if w not in seen:
                seen.add(w)
                queue.append(w)
    if len(seen) != dd:
        raise DynamicsError("lattice enumeration failed")
    return sorted(seen), dd, det


def _torus_apply(a: TorusLinearMap, v, dd):
    m = a.matrix
    return ((m[0][0] * v[0] + m[0][1] * v[1]) % dd, (m[1][0] * v[0] + m[1][1] * v[1]) % dd)


def _circle_power(c: CircleMap, x, n):
    d = 1.0
    for _ in range(n):
        d *= c.dphi(x)
        x = c.phi(x)
    return x, d


def _circle_fixed_points(c: CircleMap, n: int, seeds: int = 512):
    xs = np.arange(seeds) * TWO_PI / seeds
    g0 = np.array([_circle_power(c, x, n)[0] - x for x in xs])
    g0 = np.append(g0, g0[0])
    xs = np.append(xs, TWO_PI)
    roots = []
    for k in range(int(math.floor(g0.min() / TWO_PI)), int(math.ceil(g0.max() / TWO_PI)) + 1):
        g = g0 - TWO_PI * k
        for i in range(seeds):
            if g[i] == 0:
                roots.append(xs[i])
            elif g[i] * g[i + 1] < 0:
                f = lambda x: _circle_power(c, x, n)[0] - x - TWO_PI * k
                roots.append(brentq(f, xs[i], xs[i + 1], xtol=1e-15))
    out = []
    for r in roots:
        r = float(r % TWO_PI)
        if all(abs((r - s + math.pi) % TWO_PI - math.pi) > 1e-9 for s in out):
            out.append(r)
    return sorted(out)


def closed_orbits(phi, level) -> list:
    """Closed orbits of the suspension of phi with class value <= level."""
    nmax = int(math.floor(Fraction(level) / phi.return_value)) if math.isfinite(level) else None
    if nmax is None:
        raise DynamicsError("closed orbit search needs a finite level")
    orbits = []
    for n in range(1, nmax + 1):
        if isinstance(phi, TorusLinearMap):
            pts, dd, det = _torus_fixed_points(phi, n)
            an = phi.power(n)
            d_i_minus = _det2([[1 - an[0][0], -an[0][1]], [-an[1][0], 1 - an[1][1]]])
            eps = 1 if d_i_minus > 0 else -1
            remaining = set(pts)
            while remaining:
                v = min(remaining)
                orbit = [v]
                w = _torus_apply(phi, v, dd)
                while w != v:
                    orbit.append(w)
                    w = _torus_apply(phi, w, dd)
                k = len(orbit)
                remaining -= set(orbit)
                loop = [(Fraction(o[0], dd), Fraction(o[1], dd)) for o in orbit]
                orbits.append(ClosedOrbit(n * phi.return_value, n, n // k, eps, loop))
        elif isinstance(phi, CircleMap):
            pts = _circle_fixed_points(phi, n)
            remaining = list(pts)
            while remaining:
                v = remaining[0]
                _, dn = _circle_power(phi, v, n)
                det = 1.0 - dn
                if abs(det) < 1e-8:
                    raise DegenerateOrbit(f"fixed point {v} of phi^{n} is degenerate")
                orbit = [v]
                w = float(phi.phi(v) % TWO_PI)
                while abs((w - v + math.pi) % TWO_PI - math.pi) > 1e-9:
                    orbit.append(w)
                    w = float(phi.phi(w) % TWO_PI)
                    if len(orbit) > n:
                        raise DynamicsError("periodic orbit bookkeeping failed")
                k = len(orbit)
                remaining = [r for r in remaining
                             if all(abs((r - o + math.pi) % TWO_PI - math.pi) > 1e-9 for o in orbit)]
                orbits.append(ClosedOrbit(n * phi.return_value, n, n // k,
                                          1 if det > 0 else -1, orbit))
        else:
            raise DynamicsError("unsupported suspension")
    return orbits


def counting_series_orbits(phi, level, found: Optional[list] = None) -> DirichletSeries:
    """Z_X: terms (n * return value, sum of eps / p)."""
    found = closed_orbits(phi, level) if found is None else found
    return DirichletSeries([(o.class_value, Fraction(o.sign, o.multiplicity)) for o in found],
                           cutoff=Fraction(level))


def lefschetz_number(phi, n: int) -> int:
    """L(phi^n) from the action on homology."""
    if isinstance(phi, TorusLinearMap):
        an = phi.power(n)
        return int(_det2([[1 - an[0][0], -an[0][1]], [-an[1][0], 1 - an[1][1]]]))
    if isinstance(phi, CircleMap):
        return 0  # degree one: 1 - deg^n
    raise DynamicsError("unsupported map")


def lefschetz_zeta(phi, max_n: int) -> DirichletSeries:
    """exp(sum_{n <= max_n} L(phi^n) Z^n / n) truncated at Z^max_n."""
    step = phi.return_value
    cutoff = max_n * step
    terms = [(n * step, Fraction(lefschetz_number(phi, n), n)) for n in range(1, max_n + 1)]
    return exp_series(DirichletSeries(terms, cutoff=cutoff), cutoff)


# ---------------------------------------------------------------------------
# unstable manifolds

@dataclass
class UnstableChart:
    center: CriticalPoint
    points: np.ndarray  # (m, n) lifted coordinates
    h: np.ndarray  # h_x = h(p) - h(x) <= 0
    r: np.ndarray  # intrinsic radius (arclength along the flow line)
    weights: np.ndarray  # positive volume weights
    frames: np.ndarray  # (m, n, k) oriented tangent frames of W^-
    s_max: float
    shells: int

    @property
    def dim(self) -> int:
        return self.center.index

    def shell_edges(self) -> np.ndarray:
        return np.linspace(0.0, self.s_max, self.shells + 1)

    def volume_profile(self) -> tuple:
        """(s, Vol(B_s)) at the shell edges s_1 .. s_max."""
        edges = self.shell_edges()[1:]
        if self.dim == 0:
            return edges, np.zeros_like(edges)
        vols = np.array([self.weights[self.r <= s].sum() for s in edges])
        return edges, vols

    def shell_integrals(self, t: float) -> np.ndarray:
        edges = self.shell_edges()
        idx = np.clip(np.searchsorted(edges, self.r, side="right") - 1, 0, self.shells - 1)
        with np.errstate(over="ignore"):
            vals = self.weights * np.exp(t * self.h)
        keep = self.r <= self.s_max
        return np.bincount(idx[keep], weights=vals[keep], minlength=self.shells)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(self.weights * values))


def _gauss_panels(tau_max, panels, order=8):
    nodes, wts = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, tau_max, panels + 1)
    taus, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        taus.append(0.5 * (b - a) * nodes + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * wts)
    return np.concatenate(taus), np.concatenate(ws)


def _branch_samples(omega, x, direction, orient, tau_max, panels):
    p0 = x.coords + SPHERE_RADIUS * direction
    taus, tw = _gauss_panels(tau_max, panels)
    sol = solve_ivp(_flow_rhs(omega), (0.0, tau_max), p0, method="DOP853", t_eval=taus,
                    rtol=1e-11, atol=1e-13)
    if not sol.success:
        raise BlowUp(sol.message)
    pts = sol.y.T
    vel = -omega.values(pts)
    speed = np.linalg.norm(vel, axis=1)
    weights = speed * tw
    # arclength: inner segment plus cumulative Gauss integral of the speed
    fine = np.linspace(0.0, tau_max, 40 * panels + 1)
    fsol = solve_ivp(_flow_rhs(omega), (0.0, tau_max), p0, method="DOP853", t_eval=fine,
                     rtol=1e-11, atol=1e-13)
    fspeed = np.linalg.norm(omega.values(fsol.y.T), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (fspeed[1:] + fspeed[:-1]) * np.diff(fine))])
    r = SPHERE_RADIUS + np.interp(taus, fine, arc)
    frames = (orient * vel / np.maximum(speed, 1e-300)[:, None])[:, :, None]
    # inner segment [x, p0]
    gn, gw = np.polynomial.legendre.leggauss(8)
    s = 0.5 * SPHERE_RADIUS * (gn + 1)
    ipts = x.coords + s[:, None] * direction
    iw = 0.5 * SPHERE_RADIUS * gw
    iframes = np.repeat((orient * direction)[None, :, None], len(s), axis=0)
    return (np.vstack([ipts, pts]), np.concatenate([iw, weights]),
            np.concatenate([s, r]), np.concatenate([iframes, frames]))


def unstable_chart(omega: ClosedOneFormSpec, x: CriticalPoint, s_max: float = 8.0,
                   shells: int = 16, tau_max: float = 40.0, panels: int = 80,
                   angles: int = 128) -> UnstableChart:
    n = x.dim
    if x.index == 0:
        return UnstableChart(x, x.coords[None, :], np.zeros(1), np.zeros(1), np.ones(1),
                             np.zeros((1, n, 0)), s_max, shells)
    if x.index == 1:
        u = x.unstable_basis[:, 0]
        parts = [_branch_samples(omega, x, s * u, s, tau_max, panels) for s in (1.0, -1.0)]
        pts = np.vstack([p[0] for p in parts])
        w = np.concatenate([p[1] for p in parts])
        r = np.concatenate([p[2] for p in parts])
        fr = np.concatenate([p[3] for p in parts])
    elif x.index == 2 and n == 2:
        pts, w, r, fr = _disk_samples(omega, x, tau_max, panels, angles)
    else:
        raise DynamicsError("charts support unstable dimension <= 2")
    h = omega.primitive(pts) - omega.primitive(x.coords)
    h = np.minimum(h, 0.0)
    return UnstableChart(x, pts, h, r, w, fr, s_max, shells)


def _tanh_sinh(a, b, step=1.0 / 24, floor=1e-13):
    """Tanh-sinh nodes on (a, b); clusters double-exponentially at both ends."""
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    nodes, wts = [], []
    k = 0
    while True:
        u = k * step
        arg = 0.5 * math.pi * math.sinh(u)
        gap = half * 2.0 / (math.exp(2 * arg) + 1.0)  # half * (1 - tanh(arg))
        if gap < floor:
            break
        w = half * 0.5 * math.pi * math.cosh(u) / math.cosh(arg) ** 2 * step
        for sgn in ((1,) if k == 0 else (1, -1)):
            nodes.append(mid + sgn * (half - gap))
            wts.append(w)
        k += 1
    return np.array(nodes), np.array(wts)


def _disk_samples(omega, x, tau_max, panels, angles):
    cuts = basin_boundaries(omega, x, tol=1e-13)
    if cuts:
        phis, wphi = [], []
        for i, a in enumerate(cuts):
            b = cuts[(i + 1) % len(cuts)] + (TWO_PI if i == len(cuts) - 1 else 0.0)
            nodes, wts = _tanh_sinh(a, b)
            phis.append(nodes)
            wphi.append(wts)
        phis, wphi = np.concatenate(phis), np.concatenate(wphi)
    else:
        phis = np.arange(angles) * TWO_PI / angles
        wphi = np.full(angles, TWO_PI / angles)
    dphi = wphi
    taus, tw = _gauss_panels(tau_max, panels)
    m = len(phis)
    p0 = x.coords[None, :] + SPHERE_RADIUS * np.stack([np.cos(phis), np.sin(phis)], axis=1)
    j0 = SPHERE_RADIUS * np.stack([-np.sin(phis), np.cos(phis)], axis=1)

    def rhs(_, y):
        p = y[:2 * m].reshape(m, 2)
        j = y[2 * m:4 * m].reshape(m, 2)
        s = y[4 * m:]
        vel = -omega.values(p)
        dj = -np.einsum("mab,mb->ma", omega.hessian(p), j)
        return np.concatenate([vel.ravel(), dj.ravel(), np.linalg.norm(vel, axis=1)])

    y0 = np.concatenate([p0.ravel(), j0.ravel(), np.zeros(m)])
    sol = solve_ivp(rhs, (0.0, tau_max), y0, method="DOP853", t_eval=taus, rtol=1e-10, atol=1e-12)
    if not sol.success:
        raise BlowUp(sol.message)
    p = sol.y[:2 * m].T.reshape(len(taus), m, 2)
    j = sol.y[2 * m:4 * m].T.reshape(len(taus), m, 2)
    arc = sol.y[4 * m:].T
    vel = -omega.values(p)
    jac = np.abs(j[..., 0] * vel[..., 1] - j[..., 1] * vel[..., 0])
    w = jac * tw[:, None] * dphi
    r = SPHERE_RADIUS + arc
    # inner disk in polar coordinates
    gn, gw = np.polynomial.legendre.leggauss(8)
    rad = 0.5 * SPHERE_RADIUS * (gn + 1)
    rw = 0.5 * SPHERE_RADIUS * gw
    circle = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    ipts = x.coords[None, None, :] + rad[:, None, None] * circle[None]
    iw = (rw * rad)[:, None] * dphi[None, :]
    ir = np.repeat(rad[:, None], m, axis=1)
    pts = np.vstack([ipts.reshape(-1, 2), p.reshape(-1, 2)])
    weights = np.concatenate([iw.ravel(), w.ravel()])
    radii = np.concatenate([ir.ravel(), r.ravel()])
    basis = x.unstable_basis
    frames = np.repeat(basis[None], len(pts), axis=0)
    return pts, weights, radii, frames


def synthetic_chart(growth: float = 2.0, h_slope: float = 1.0, s_max: float = 40.0,
                    shell_width: float = 1.0) -> UnstableChart:
    """Shell data with Vol(B_s) = e^{growth s} and h_x = -h_slope * r at shell midpoints."""
    shells = int(round(s_max / shell_width))
    edges = np.arange(shells + 1) * shell_width
    mids = 0.5 * (edges[1:] + edges[:-1])
    vol = np.exp(growth * edges)
    weights = np.diff(vol)
    weights[0] += 1.0  # Vol(B_0) mass sits in the first shell
    center = CriticalPoint(np.zeros(1), 1, np.array([-1.0]), np.eye(1))
    return UnstableChart(center, mids[:, None], -h_slope * mids, mids, weights,
                         np.ones((shells, 1, 1)), float(edges[-1]), shells)


def growth_constant(chart: UnstableChart) -> float:
    """Exponential rate of Vol(B_s), fitted on the shell increments.

    Fitting the increments rather than Vol itself separates bounded volume
    (increments decay, C = 0) from slow saturation seen on a finite radius.
    """
    if chart.shells < 8:
        raise InsufficientRadius("need at least 8 shells")
    if chart.dim == 0:
        return 0.0
    s, vol = chart.volume_profile()
    inc = np.diff(vol)
    s = s[1:]
    half = len(s) // 2
    s, inc = s[half:], inc[half:]
    keep = inc > 0
    if keep.sum() < 2:
        return 0.0
    slope = float(np.polyfit(s[keep], np.log(inc[keep]), 1)[0])
    if abs(slope) < 1e-12:
        slope = 0.0
    return max(slope, 0.0)


def l1_test(chart: UnstableChart, t: float) -> tuple:
    """(finite?, estimate of the integral of e^{t h_x} over W^-_x)."""
    if chart.shells < 8:
        raise InsufficientRadius("need at least 8 shells")
    if chart.dim == 0:
        return True, 1.0
    shells = chart.shell_integrals(t)
    run = 0
    for a, b in zip(shells[:-1], shells[1:]):
        if a > 0 and b >= GROWTH_FACTOR * a:
            run += 1
            if run >= GROWTH_RUN:
                return False, math.inf
        else:
            run = 0
    return True, float(shells.sum())


def rho_estimate(chart: UnstableChart, bracket=(-10.0, 10.0), tol: float = 1e-6) -> float:
    """Bisection for the smallest t with l1_test finite."""
    lo, hi = bracket
    if l1_test(chart, lo)[0]:
        return lo
    if not l1_test(chart, hi)[0]:
        return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if l1_test(chart, mid)[0]:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# Grassmannian trace

def grassmann_trace(dims: tuple, kappa: float, w) -> float:
    """tr of the compression of kappa*Id (+) (-Id) to span(W), induced inner product."""
    p, m = dims
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if w.shape[0] != p + m:
        w = w.T
    if w.shape[0] != p + m:
        raise RankDeficient("W has the wrong ambient dimension")
    sv = np.linalg.svd(w, compute_uv=False)
    if sv.size == 0 or sv[-1] <= 1e-12 * sv[0] or w.shape[1] > p + m:
        raise RankDeficient("W does not have full column rank")
    a = np.concatenate([np.full(p, float(kappa)), -np.ones(m)])
    gram = w.T @ w
    return float(np.trace(np.linalg.solve(gram, w.T @ (a[:, None] * w))))
