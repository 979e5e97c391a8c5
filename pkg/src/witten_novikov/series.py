"""Dirichlet series and truncated Novikov-ring arithmetic.

A series is a sorted list of terms ``(lambda, coeff, exact)`` representing
``sum_i coeff_i * exp(-z * lambda_i)`` together with a ``cutoff``: every term
with ``lambda <= cutoff`` is recorded.  ``cutoff = inf`` means the series is a
genuinely finite sum.  Exponents and coefficients may be exact rationals
(``Fraction``) or floats; mixing promotes to float.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Union

import numpy as np

Number = Union[int, float, Fraction]

MERGE_TOL = 1e-12


class SeriesError(ValueError):
    pass


class AbscissaViolation(SeriesError):
    pass


class ZeroElement(SeriesError):
    pass


class DomainViolation(SeriesError):
    pass


@dataclass(frozen=True)
class GeometricTail:
    """Terms continue past the last recorded one as a_{k+1} = ratio * a_k,
    lambda_{k+1} = lambda_k + step."""

    ratio: Number
    step: Number


class Evaluation(NamedTuple):
    value: complex
    bound: float


class Abscissa(NamedTuple):
    value: float
    exact: bool


def _as_exponent(lam):
    if isinstance(lam, (int, np.integer)) and not isinstance(lam, bool):
        return Fraction(int(lam))
    if isinstance(lam, Fraction):
        return lam
    return float(lam)


def _as_coeff(c, exact=None):
    if isinstance(c, (int, np.integer)) and not isinstance(c, bool):
        c = Fraction(int(c))
    if isinstance(c, Fraction):
        if exact is False:
            return float(c), False
        return c, True
    return float(c), False


def _same_exponent(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return abs(float(a) - float(b)) <= MERGE_TOL * max(1.0, abs(float(a)))


def _add_coeff(a, ea, b, eb):
    if ea and eb:
        return a + b, True
    return float(a) + float(b), False


def _is_zero_coeff(c) -> bool:
    return c == 0


def _le(lam, cutoff) -> bool:
    if cutoff == math.inf:
        return True
    if isinstance(lam, Fraction) and isinstance(cutoff, Fraction):
        return lam <= cutoff
    return float(lam) <= float(cutoff) + MERGE_TOL * max(1.0, abs(float(cutoff)))


def _normalize(raw, cutoff):
    items = []
    for t in raw:
        if len(t) == 3:
            lam, c, ex = t
            c, ex = _as_coeff(c, ex)
        else:
            lam, c = t
            c, ex = _as_coeff(c)
        items.append((_as_exponent(lam), c, ex))
    items.sort(key=lambda t: float(t[0]))
    merged: list[list] = []
    for lam, c, ex in items:
        if merged and _same_exponent(merged[-1][0], lam):
            prev = merged[-1]
            prev[1], prev[2] = _add_coeff(prev[1], prev[2], c, ex)
            if isinstance(lam, Fraction) and not isinstance(prev[0], Fraction):
                prev[0] = lam
        else:
            merged.append([lam, c, ex])
    return tuple(
        (lam, c, ex) for lam, c, ex in merged if not _is_zero_coeff(c) and _le(lam, cutoff)
    )


class DirichletSeries:
    """Immutable truncated Dirichlet series / Novikov-ring element."""

    __slots__ = ("terms", "cutoff", "tail")

    def __init__(self, terms: Iterable = (), cutoff: Number = math.inf,
                 tail: GeometricTail | None = None):
        if isinstance(cutoff, (int, np.integer)) and not isinstance(cutoff, bool):
            cutoff = Fraction(int(cutoff))
        elif not isinstance(cutoff, Fraction):
            cutoff = float(cutoff)
        object.__setattr__(self, "cutoff", cutoff)
        object.__setattr__(self, "terms", _normalize(terms, cutoff))
        object.__setattr__(self, "tail", tail)

    def __setattr__(self, name, value):
        raise AttributeError("DirichletSeries is immutable")

    # basic queries
    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_exact(self) -> bool:
        return all(ex for _, _, ex in self.terms)

    @property
    def min_exponent(self):
        return self.terms[0][0] if self.terms else math.inf

    @property
    def leading(self):
        if not self.terms:
            raise ZeroElement("zero series has no leading term")
        return self.terms[0][0], self.terms[0][1]

    def is_unit(self) -> bool:
        return bool(self.terms)

    def exponents(self):
        return [lam for lam, _, _ in self.terms]

    def coefficients(self):
        return [c for _, c, _ in self.terms]

    # ring operations
    def __add__(self, other):
        other = _coerce(other)
        return DirichletSeries(self.terms + other.terms, min(self.cutoff, other.cutoff))

    __radd__ = __add__

    def __neg__(self):
        return DirichletSeries(((l, -c, e) for l, c, e in self.terms), self.cutoff)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, DirichletSeries):
            return convolve(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def scale(self, c):
        c, ex = _as_coeff(c)
        return DirichletSeries(
            ((l, a * c if (e and ex) else float(a) * float(c), e and ex) for l, a, e in self.terms),
            self.cutoff,
        )

    def shift(self, mu):
        """Multiply by exp(-z*mu)."""
        mu = _as_exponent(mu)
        tail = self.tail
        return DirichletSeries(((l + mu, c, e) for l, c, e in self.terms), self.cutoff + mu, tail)

    def truncate(self, level):
        return DirichletSeries(self.terms, min(self.cutoff, _as_exponent(level)))

    def normalized_sign(self):
        """Representative modulo +-1 with positive leading coefficient."""
        if self.terms and self.terms[0][1] < 0:
            return -self
        return self

    def __eq__(self, other):
        if not isinstance(other, DirichletSeries):
            return NotImplemented
        return self.terms == other.terms and self.cutoff == other.cutoff

    def __hash__(self):
        return hash((self.terms, self.cutoff))

    def agrees_with(self, other: "DirichletSeries", level=None, tol: float = 0.0) -> bool:
        """Term-by-term agreement up to ``level`` (default: the smaller cutoff)."""
        if level is None:
            level = min(self.cutoff, other.cutoff)
        a = [t for t in self.terms if _le(t[0], level)]
        b = [t for t in other.terms if _le(t[0], level)]
        if len(a) != len(b):
            return False
        for (la, ca, _), (lb, cb, _) in zip(a, b):
            if not _same_exponent(la, lb):
                return False
            if tol == 0.0:
                if ca != cb:
                    return False
            elif abs(float(ca) - float(cb)) > tol * max(1.0, abs(float(ca))):
                return False
        return True

    def __repr__(self):
        body = ", ".join(f"({_fmt(l)}, {_fmt(c)})" for l, c, _ in self.terms)
        return f"DirichletSeries([{body}], cutoff={_fmt(self.cutoff)})"

    # serialization
    def to_json(self) -> dict:
        out = {
            "terms": [
                {"lambda": _num_to_json(l), "coeff": _num_to_json(c), "exact": bool(e)}
                for l, c, e in self.terms
            ],
            "cutoff": _num_to_json(self.cutoff),
        }
        if self.tail is not None:
            out["tail"] = {"ratio": _num_to_json(self.tail.ratio),
                           "step": _num_to_json(self.tail.step)}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "DirichletSeries":
        terms = [(_num_from_json(t["lambda"]), _num_from_json(t["coeff"]), bool(t["exact"]))
                 for t in data["terms"]]
        tail = None
        if data.get("tail"):
            tail = GeometricTail(_num_from_json(data["tail"]["ratio"]),
                                 _num_from_json(data["tail"]["step"]))
        return cls(terms, _num_from_json(data["cutoff"]), tail)


NovikovElement = DirichletSeries


def _fmt(x):
    return str(x) if isinstance(x, Fraction) else repr(x)


def _num_to_json(x):
    if isinstance(x, Fraction):
        return str(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _num_from_json(x):
    if isinstance(x, str):
        if x in ("inf", "-inf"):
            return float(x)
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def _coerce(x) -> DirichletSeries:
    if isinstance(x, DirichletSeries):
        return x
    return DirichletSeries([(0, x)])


def delta0() -> DirichletSeries:
    """Ring unit {(0, 1)}."""
    return DirichletSeries([(0, 1)])


def zero(cutoff=math.inf) -> DirichletSeries:
    return DirichletSeries((), cutoff)


def monomial(lam, coeff=1, cutoff=math.inf) -> DirichletSeries:
    return DirichletSeries([(lam, coeff)], cutoff)


def power_series(coeffs, cutoff=None) -> DirichletSeries:
    """Series in Z = exp(-z): coefficient of Z^n sits at exponent n."""
    if cutoff is None:
        cutoff = math.inf
    return DirichletSeries([(Fraction(n), c) for n, c in enumerate(coeffs)], cutoff)


# ---------------------------------------------------------------------------
# evaluation and abscissa

def _estimate_abscissa(terms) -> float:
    lam = np.array([float(l) for l, _, _ in terms])
    a = np.array([abs(float(c)) for _, c, _ in terms])
    if lam.size == 0:
        return -math.inf
    half = lam.size // 2 if lam.size >= 4 else 0
    x = lam[half:]
    partial = np.cumsum(a)[half:]
    if x.size < 2 or np.ptp(x) == 0:
        return math.log(partial[-1]) / x[-1] if x[-1] > 0 else 0.0
    slope = np.polyfit(x, np.log(partial), 1)[0]
    if slope > 1e-9:
        return float(slope)
    slope2 = np.polyfit(x, np.log(a[half:]), 1)[0]
    return float(min(slope2, 0.0))


def abscissa(f: DirichletSeries) -> Abscissa:
    """Abscissa of (absolute) convergence with an exact/estimated tag."""
    if f.tail is not None:
        r, s = f.tail.ratio, f.tail.step
        return Abscissa(math.log(abs(float(r))) / float(s), True)
    if f.cutoff == math.inf:
        return Abscissa(-math.inf, True)
    return Abscissa(_estimate_abscissa(f.terms), False)


def evaluate(f: DirichletSeries, z: complex) -> Evaluation:
    """Laplace-transform value sum a_i exp(-z lambda_i) and a tail bound."""
    ab = abscissa(f)
    x = complex(z).real
    if ab.exact and ab.value > -math.inf and x <= ab.value:
        raise AbscissaViolation(f"Re z = {x} <= abscissa {ab.value}")
    value = 0j
    for lam, c, _ in f.terms:
        value += float(c) * cmath.exp(-complex(z) * float(lam))
    if f.tail is not None:
        if not f.terms:
            return Evaluation(value, 0.0)
        lam_k, a_k, _ = f.terms[-1]
        q = abs(float(f.tail.ratio)) * math.exp(-x * float(f.tail.step))
        bound = abs(float(a_k)) * math.exp(-x * float(lam_k)) * q / (1.0 - q)
        return Evaluation(value, bound)
    if f.cutoff == math.inf:
        return Evaluation(value, 0.0)
    sigma = ab.value
    if not f.terms or sigma >= x:
        return Evaluation(value, 0.0 if not f.terms and sigma < x else math.inf)
    lam = np.array([float(l) for l, _, _ in f.terms])
    partial = np.cumsum([abs(float(c)) for _, c, _ in f.terms])
    C = float(np.max(partial * np.exp(-sigma * lam)))
    cut = float(f.cutoff)
    bound = abs(complex(z)) * C * math.exp((sigma - x) * cut) / (x - sigma)
    return Evaluation(value, bound)


# ---------------------------------------------------------------------------
# products, inverses, exp/log

def _mul_terms(f_terms, g_terms, level):
    out = []
    for lf, cf, ef in f_terms:
        for lg, cg, eg in g_terms:
            lam = lf + lg
            if not _le(lam, level):
                break
            if ef and eg:
                out.append((lam, cf * cg, True))
            else:
                out.append((lam, float(cf) * float(cg), False))
    return out


def convolve(f: DirichletSeries, g: DirichletSeries) -> DirichletSeries:
    """Novikov-ring product; cutoff = min(cut_f + lmin_g, cut_g + lmin_f)."""
    if f.is_zero or g.is_zero:
        return zero(math.inf)
    cut = min(f.cutoff + g.min_exponent, g.cutoff + f.min_exponent)
    return DirichletSeries(_mul_terms(f.terms, g.terms, cut), cut)


def _scale_terms(terms, c, c_exact):
    out = []
    for l, a, e in terms:
        if e and c_exact:
            out.append((l, a * c, True))
        else:
            out.append((l, float(a) * float(c), False))
    return out


def invert(f: DirichletSeries, target_cutoff=None) -> DirichletSeries:
    """Multiplicative inverse valid up to ``target_cutoff``."""
    if f.is_zero:
        raise ZeroElement("zero element is not invertible")
    lam0, a0 = f.leading
    a0_exact = f.terms[0][2]
    inv_a0 = (Fraction(1) / a0) if a0_exact else 1.0 / float(a0)
    rest = [(l - lam0, c, e) for l, c, e in f.terms[1:]]
    if not rest and f.cutoff == math.inf:
        return DirichletSeries([(-lam0, inv_a0, a0_exact)], math.inf)
    if target_cutoff is None:
        raise SeriesError("target_cutoff required to invert a non-monomial series")
    target = _as_exponent(target_cutoff)
    valid = min(target, f.cutoff - 2 * lam0)
    level_r = valid + lam0
    r = _scale_terms(rest, inv_a0, a0_exact)
    neg_r = [(l, -c, e) for l, c, e in r]
    total = [(Fraction(0), Fraction(1), True)]
    power = [(Fraction(0), Fraction(1), True)]
    while True:
        power = list(_normalize(_mul_terms(power, neg_r, level_r), level_r))
        if not power:
            break
        total.extend(power)
    out = _scale_terms(total, inv_a0, a0_exact)
    return DirichletSeries([(l - lam0, c, e) for l, c, e in out], valid)


def exp_series(f: DirichletSeries, target_cutoff) -> DirichletSeries:
    """Truncated exp(f) for f with strictly positive exponents."""
    if any(float(l) <= 0 for l, _, _ in f.terms):
        raise DomainViolation("exp_series needs all exponents strictly positive")
    level = min(_as_exponent(target_cutoff), f.cutoff)
    total = [(Fraction(0), Fraction(1), True)]
    power = [(Fraction(0), Fraction(1), True)]
    k = 0
    while True:
        k += 1
        power = list(_normalize(_mul_terms(power, f.terms, level), level))
        if not power:
            break
        power = _scale_terms(power, Fraction(1, k), True)
        total.extend(power)
    return DirichletSeries(total, level)


def log_series(f: DirichletSeries, target_cutoff) -> DirichletSeries:
    """Truncated log(f) for f with leading term (0, 1)."""
    if f.is_zero:
        raise DomainViolation("log of zero")
    lam0, a0 = f.leading
    if float(lam0) != 0.0 or a0 != 1:
        raise DomainViolation("log_series needs leading term (0, 1)")
    level = min(_as_exponent(target_cutoff), f.cutoff)
    g = list(f.terms[1:])
    total: list = []
    power = [(Fraction(0), Fraction(1), True)]
    k = 0
    while True:
        k += 1
        power = list(_normalize(_mul_terms(power, g, level), level))
        if not power:
            break
        sign = 1 if k % 2 == 1 else -1
        total.extend(_scale_terms(power, Fraction(sign, k), True))
    return DirichletSeries(total, level)
