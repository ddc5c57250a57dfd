"""Eigenpairs of the homogeneous negative Laplacian and its Green kernels.

Coordinates are centred: an interval of length ``a`` is ``(-a/2, a/2)`` and
a rectangle is ``(-a/2, a/2) x (-b/2, b/2)``.  The boundary-condition tag
names the left end first, so ``ND`` is Neumann at ``-a/2`` and Dirichlet at
``+a/2``.

Every 1D kernel here is semi-separable: on each side of the diagonal it is a
short sum of products ``f(x) g(y)``.  :meth:`GreenKernel.terms` exposes those
factors so that integral operators can be applied with exact handling of the
derivative kink at ``x == y``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .errors import NonPositiveGamma, OutOfDomain, UnsupportedBoundary, UnsupportedIndex

_EDGE_TOL = 1e-12


class BoundaryCondition(enum.Enum):
    DD = "dd"
    ND = "nd"
    DN = "dn"
    NN = "nn"
    PP = "pp"

    @property
    def has_zero_mode(self) -> bool:
        return self in (BoundaryCondition.NN, BoundaryCondition.PP)

    @classmethod
    def parse(cls, text) -> "BoundaryCondition":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise UnsupportedBoundary(f"unknown boundary condition {text!r}; use dd|nd|dn|nn|pp") from None


BC = BoundaryCondition


@dataclass(frozen=True)
class Interval:
    a: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("interval length must be positive")

    @property
    def volume(self) -> float:
        return float(self.a)

    @property
    def dim(self) -> int:
        return 1

    def check(self, *coords):
        _check_range(self.a, coords)


@dataclass(frozen=True)
class Rectangle:
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("rectangle sides must be positive")

    @property
    def volume(self) -> float:
        return float(self.a * self.b)

    @property
    def dim(self) -> int:
        return 2

    def check(self, x, y):
        _check_range(self.a, (x,))
        _check_range(self.b, (y,))


def _check_range(length, coords):
    half = 0.5 * length * (1 + _EDGE_TOL)
    for c in coords:
        if np.any(np.abs(np.asarray(c, dtype=float)) > half):
            raise OutOfDomain(f"coordinate outside (-{length / 2}, {length / 2})")


# ---------------------------------------------------------------------------
# modes


@dataclass(frozen=True)
class Mode:
    """Normalized eigenfunction of -d2/dx2 on an interval.

    For NN and PP the ``(n, u)`` labelling follows two families: ``u=1``
    cosines (``n=0`` is the constant zero mode) and ``u=2`` sines.
    """

    bc: BoundaryCondition
    a: float
    n: int
    u: int = 1

    def __post_init__(self):
        bc, n, u = self.bc, self.n, self.u
        if bc.has_zero_mode:
            if u not in (1, 2) or n < 0 or (n == 0 and u != 1):
                raise UnsupportedIndex(f"invalid ({n}, {u}) for {bc.name}")
        elif n < 1 or u != 1:
            raise UnsupportedIndex(f"invalid index n={n}, u={u} for {bc.name}")

    @property
    def wavenumber(self) -> float:
        a, n, u = self.a, self.n, self.u
        if self.bc is BC.DD:
            return n * math.pi / a
        if self.bc in (BC.ND, BC.DN):
            return (2 * n - 1) * math.pi / (2 * a)
        if self.bc is BC.NN:
            return (2 * n if u == 1 else 2 * n - 1) * math.pi / a
        return 2 * n * math.pi / a

    @property
    def eigenvalue(self) -> float:
        return self.wavenumber ** 2

    @property
    def is_zero_mode(self) -> bool:
        return self.bc.has_zero_mode and self.n == 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, k = self.a, self.wavenumber
        c = math.sqrt(2.0 / a)
        if self.is_zero_mode:
            return np.full(x.shape, 1.0 / math.sqrt(a)) if x.ndim else 1.0 / math.sqrt(a)
        if self.bc is BC.DD or self.bc is BC.DN:
            return c * np.sin(k * (x + 0.5 * a))
        if self.bc is BC.ND:
            return c * np.sin(k * (x + 1.5 * a))
        return c * (np.cos(k * x) if self.u == 1 else np.sin(k * x))


def mode(bc, domain, n: int, u: int = 1) -> Mode:
    bc = BC.parse(bc)
    a = domain.a if hasattr(domain, "a") else float(domain)
    return Mode(bc, float(a), int(n), int(u))


def sorted_modes(bc, a: float, count: int, include_zero: bool = False) -> List[Mode]:
    """The ``count`` lowest modes by eigenvalue, ties broken by ``(n, u)``."""
    bc = BC.parse(bc)
    out: List[Mode] = []
    if bc.has_zero_mode and include_zero:
        out.append(Mode(bc, a, 0, 1))
    k = 1
    while len(out) < count:
        if bc is BC.NN:
            out.append(Mode(bc, a, k // 2, 1) if k % 2 == 0 else Mode(bc, a, (k + 1) // 2, 2))
        elif bc is BC.PP:
            out.append(Mode(bc, a, k, 1))
            if len(out) < count:
                out.append(Mode(bc, a, k, 2))
        else:
            out.append(Mode(bc, a, k, 1))
        k += 1
    return out[:count]


def mode_matrix(modes: Sequence[Mode], x) -> np.ndarray:
    """Rows are modes, columns are sample points."""
    x = np.asarray(x, dtype=float)
    return np.array([m(x) for m in modes]) if modes else np.zeros((0, x.size))


# ---------------------------------------------------------------------------
# 1D kernels, written in s = x + a/2, t = y + a/2 (both in [0, a])

Term = Tuple[Callable, Callable]


def _one(s):
    return np.ones_like(np.asarray(s, dtype=float))


def _closed_terms(bc: BC, a: float) -> Tuple[List[Term], List[Term]]:
    if bc is BC.DD:  # G = s_< (a - s_>) / a
        return ([(lambda s: (a - s) / a, lambda t: t)],
                [(lambda s: s / a, lambda t: a - t)])
    if bc is BC.DN:  # G = min(s, t)
        return [(_one, lambda t: t)], [(lambda s: s, _one)]
    if bc is BC.ND:  # G = a - max(s, t)
        return [(lambda s: a - s, _one)], [(_one, lambda t: a - t)]
    if bc is BC.NN:  # G0 = a/3 - s_> + (s^2 + t^2) / (2a)
        return ([(lambda s: a / 3 - s + s * s / (2 * a), _one), (_one, lambda t: t * t / (2 * a))],
                [(_one, lambda t: a / 3 - t + t * t / (2 * a)), (lambda s: s * s / (2 * a), _one)])
    # PP: G0 = a/12 - |s - t|/2 + (s - t)^2 / (2a)
    return ([(lambda s: a / 12 - s / 2 + s * s / (2 * a), _one),
             (_one, lambda t: t / 2 + t * t / (2 * a)),
             (lambda s: -s / a, lambda t: t)],
            [(lambda s: a / 12 + s / 2 + s * s / (2 * a), _one),
             (_one, lambda t: -t / 2 + t * t / (2 * a)),
             (lambda s: -s / a, lambda t: t)])


def _gamma_nn_terms(a: float, gamma: float) -> Tuple[List[Term], List[Term]]:
    # cosh(g s_<) cosh(g (a - s_>)) / (g sinh(g a)), split into bounded factors
    g = math.sqrt(gamma)
    scale = 1.0 / (g * -math.expm1(-2 * g * a))

    def small(s):  # cosh(g (a - s)) / (g sinh(g a)) without the scale
        return np.exp(-g * s) * (1.0 + np.exp(-2.0 * g * (a - s)))

    def grow(t):  # cosh(g t)
        return np.exp(g * t) * 0.5 * (1.0 + np.exp(-2.0 * g * t))

    lower = [(lambda s: scale * small(s), grow)]
    upper = [(grow, lambda t: scale * small(t))]
    return lower, upper


@dataclass(frozen=True)
class GreenKernel:
    """Green kernel of -d2/dx2 (or -d2/dx2 + gamma) on ``(-a/2, a/2)``.

    ``form`` is ``"closed"`` (DD, ND, DN), ``"regularized"`` (NN, PP: zero
    mode removed) or ``"gamma"`` (NN resolvent of -d2/dx2 + gamma).
    """

    bc: BoundaryCondition
    a: float = 1.0
    form: str = "closed"
    gamma: float = 0.0

    def __post_init__(self):
        if self.form == "closed" and self.bc.has_zero_mode:
            raise UnsupportedBoundary(f"{self.bc.name} has a zero mode; use the regularized kernel")
        if self.form == "regularized" and not self.bc.has_zero_mode:
            raise UnsupportedBoundary(f"{self.bc.name} has no zero mode to regularize")
        if self.form == "gamma":
            if self.bc is not BC.NN:
                raise UnsupportedBoundary("gamma-shifted kernel is provided for NN only")
            if not self.gamma > 0:
                raise NonPositiveGamma(f"gamma must be positive, got {self.gamma}")

    def terms(self) -> Tuple[List[Term], List[Term]]:
        """Factors in ``s = x + a/2``: lower applies for y <= x, upper for y >= x."""
        if self.form == "gamma":
            return _gamma_nn_terms(self.a, self.gamma)
        return _closed_terms(self.bc, self.a)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        _check_range(self.a, (x, y))
        s, t = np.broadcast_arrays(x + 0.5 * self.a, y + 0.5 * self.a)
        lower, upper = self.terms()
        lo = sum(f(s) * g(t) for f, g in lower)
        hi = sum(f(s) * g(t) for f, g in upper)
        out = np.where(t <= s, lo, hi)
        return out if out.ndim else float(out)


def green_closed_1d(bc, domain, x, y):
    """Closed-form Green kernel for DD, ND or DN."""
    return GreenKernel(BC.parse(bc), _length(domain), "closed")(x, y)


def green_regularized_1d(bc, domain, x, y):
    """Zero-mode-free kernel G0 = sum over nonzero modes of phi(x) phi(y) / eps."""
    return GreenKernel(BC.parse(bc), _length(domain), "regularized")(x, y)


def green_gamma_nn_1d(domain, gamma, x, y):
    """Neumann resolvent kernel of ``-d2/dx2 + gamma``.

    Equals ``1/(a gamma) + G0(x, y) + O(gamma)`` as ``gamma -> 0``.
    """
    if not gamma > 0:
        raise NonPositiveGamma(f"gamma must be positive, got {gamma}")
    return GreenKernel(BC.NN, _length(domain), "gamma", float(gamma))(x, y)


def green_gamma_dd_1d(domain, gamma, x, y):
    """Dirichlet resolvent kernel of ``-d2/dx2 + gamma`` (tends to the DD kernel)."""
    if not gamma > 0:
        raise NonPositiveGamma(f"gamma must be positive, got {gamma}")
    a = _length(domain)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_range(a, (x, y))
    g = math.sqrt(gamma)
    lo = np.minimum(x, y) + 0.5 * a
    hi = 0.5 * a - np.maximum(x, y)
    out = _sinh_ratio(g, lo, hi, a) / g
    return out if np.ndim(out) else float(out)


def green_spectral_sum_1d(bc, domain, x, y, terms: int = 10_000):
    """Truncated eigenfunction expansion; the oracle for the closed forms."""
    bc = BC.parse(bc)
    a = _length(domain)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    total = np.zeros(np.broadcast(x, y).shape)
    for chunk in range(0, terms, 2000):
        ms = sorted_modes(bc, a, min(terms, chunk + 2000))[chunk:]
        ev = np.array([m.eigenvalue for m in ms])
        Mx = mode_matrix(ms, x.ravel())
        My = mode_matrix(ms, y.ravel())
        total += np.sum(Mx * My / ev[:, None], axis=0).reshape(total.shape)
    return total if total.size > 1 else float(total[0])


def _length(domain):
    return float(domain.a) if hasattr(domain, "a") else float(domain)


def _sinh_ratio(k, lo, hi, length):
    """sinh(k lo) sinh(k hi) / sinh(k length) for 0 <= lo, hi, lo + hi <= length."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return (np.exp(k * (lo + hi - length)) * -np.expm1(-2 * k * lo) * -np.expm1(-2 * k * hi)
            / (2.0 * -np.expm1(-2 * k * length)))


# ---------------------------------------------------------------------------
# rectangle


def rect_y_kernel(k: float, b: float, y, yp):
    """g(y, y') = sum_ny phi(y) phi(y') / (k^2 + eta_ny) for Dirichlet in y."""
    y = np.asarray(y, dtype=float)
    yp = np.asarray(yp, dtype=float)
    lo = np.minimum(y, yp) + 0.5 * b
    hi = 0.5 * b - np.maximum(y, yp)
    return _sinh_ratio(k, lo, hi, b) / k


def rect_y_terms(k: float, b: float) -> Tuple[List[Term], List[Term]]:
    """Semi-separable factors of :func:`rect_y_kernel` in ``s = y + b/2``."""
    if k * b > 700:
        raise UnsupportedIndex("x-mode too high for the rectangle kernel (k b > 700)")
    denom = 2.0 * k * -math.expm1(-2 * k * b)

    def decay(s):  # sinh(k (b - s)) / (k sinh(k b)) times e^{...} bookkeeping
        return np.exp(-k * s) * -np.expm1(-2 * k * (b - s)) / denom

    def grow(t):  # 2 sinh(k t)
        return np.exp(k * t) * -np.expm1(-2 * k * t)

    return [(decay, grow)], [(grow, decay)]


def green_rect_2d(domain: Rectangle, x, y, xp, yp, nx_max: int = 80):
    """Dirichlet Green kernel of the rectangle as a sum over x-modes.

    Returns ``(value, tail)`` where ``tail`` is the magnitude of the first
    omitted term; terms decay like ``exp(-n pi |y - y'| / a)``.
    """
    if nx_max < 1:
        raise UnsupportedIndex("nx_max must be at least 1")
    a, b = domain.a, domain.b
    domain.check(x, y)
    domain.check(xp, yp)
    total = 0.0
    for n in range(1, nx_max + 2):
        m = Mode(BC.DD, a, n)
        term = rect_y_kernel(m.wavenumber, b, y, yp) * m(x) * m(xp)
        if n == nx_max + 1:
            return total, np.abs(term)
        total = total + term
