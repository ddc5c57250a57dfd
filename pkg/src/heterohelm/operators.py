"""Inverse operators on quadrature grids and their spectral matrices.

The operator of interest is ``O = Sigma^{-1/2} (-Lap) Sigma^{-1/2}``.  Its
inverse ``O^{-1} f = sqrt(Sigma) * (G * (sqrt(Sigma) f))`` is applied on the
nodes of a composite Gauss-Legendre rule; because every kernel is
semi-separable the inner integral splits at ``y = x`` into cumulative
integrals, so the kink of the kernel costs no accuracy.

Grid functions are plain float arrays holding values at ``ctx.nodes`` (for a
rectangle: a ``(len(ctx.x_rule.nodes), len(ctx.y_rule.nodes))`` array).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np

from .basis import (BC, BoundaryCondition, GreenKernel, Interval, Mode, Rectangle, mode_matrix,
                    rect_y_terms, sorted_modes)
from .density import DensitySpec, Separable2D, check_alpha
from .errors import (InsufficientTruncation, NonPositiveDensity, UnsupportedBoundary,
                     ZeroModePresent)
from .quadrature import DEFAULT_ORDER, PanelRule, make_rule, panel_width_for

DEFAULT_NX_MAX = 80


class OperatorContext:
    """Domain, boundary condition, density and quadrature bundled together.

    Build with :meth:`build` unless a hand-made rule is needed.
    """

    def __init__(self, domain, bc, density: DensitySpec, rule: PanelRule,
                 y_rule: Optional[PanelRule] = None, nx_max: int = DEFAULT_NX_MAX):
        self.domain = domain
        self.bc = BC.parse(bc)
        self.density = density
        self.rule = rule
        self.y_rule = y_rule
        self.nx_max = nx_max
        check_alpha(density, domain.a)
        if self.dim == 2:
            if self.bc is not BC.DD:
                raise UnsupportedBoundary("rectangles are supported with Dirichlet edges only")
            if y_rule is None:
                raise ValueError("a rectangle needs a y rule")
            X, Y = np.meshgrid(rule.nodes, y_rule.nodes, indexing="ij")
            self.sigma = np.asarray(density(X, Y), dtype=float)
            self.sqrt_sigma = np.asarray(density.sqrt(X, Y), dtype=float)
            self.weights = np.outer(rule.weights, y_rule.weights)
        else:
            self.sigma = np.asarray(density(rule.nodes), dtype=float)
            self.sqrt_sigma = np.asarray(density.sqrt(rule.nodes), dtype=float)
            self.weights = rule.weights
        if np.any(~(self.sigma > 0)):
            raise NonPositiveDensity(f"{density.to_text()} is not positive at every quadrature node")

    @classmethod
    def build(cls, domain, bc, density: DensitySpec, order: int = DEFAULT_ORDER,
              max_width: Optional[float] = None, min_panels: int = 16,
              nx_max: int = DEFAULT_NX_MAX) -> "OperatorContext":
        """Pick panels for the density's feature scale (and, in 2D, the x-mode cutoff)."""
        a = domain.a
        if domain.dim == 1:
            width = panel_width_for(a, density.feature_length, 0.0, order, min_panels)
            if max_width:
                width = min(width, max_width)
            return cls(domain, bc, density, make_rule(-a / 2, a / 2, order, width, min_panels))
        kmax = (nx_max + 1) * math.pi / a
        wx = panel_width_for(a, density.feature_length, 2 * kmax, order, min_panels)
        wy = panel_width_for(domain.b, density.feature_length, kmax, order, min_panels)
        if max_width:
            wx, wy = min(wx, max_width), min(wy, max_width)
        xr = make_rule(-a / 2, a / 2, order, wx, min_panels)
        yr = make_rule(-domain.b / 2, domain.b / 2, order, wy, min_panels)
        return cls(domain, bc, density, xr, yr, nx_max)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def nodes(self):
        return self.rule.nodes

    @property
    def shape(self):
        return self.sigma.shape

    def sample(self, func) -> np.ndarray:
        """Evaluate a callable (or copy an array) onto the grid."""
        if callable(func):
            if self.dim == 2:
                X, Y = np.meshgrid(self.rule.nodes, self.y_rule.nodes, indexing="ij")
                return np.asarray(func(X, Y), dtype=float) * np.ones(self.shape)
            return np.asarray(func(self.nodes), dtype=float) * np.ones(self.shape)
        arr = np.asarray(func, dtype=float)
        if arr.shape != self.shape:
            raise ValueError(f"grid function has shape {arr.shape}, expected {self.shape}")
        return arr.copy()

    def inner(self, f, g) -> float:
        return float(np.sum(self.weights * f * g))

    def norm(self, f) -> float:
        return math.sqrt(max(self.inner(f, f), 0.0))

    def integrate(self, f) -> float:
        return float(np.sum(self.weights * f))

    @cached_property
    def kernel(self):
        if self.dim == 2:
            return None
        form = "regularized" if self.bc.has_zero_mode else "closed"
        return GreenKernel(self.bc, self.domain.a, form)

    @cached_property
    def _factors(self):
        s = self.nodes + 0.5 * self.domain.a
        lower, upper = self.kernel.terms()
        P = np.array([f(s) for f, _ in lower])
        Q = np.array([g(s) for _, g in lower])
        R = np.array([f(s) for f, _ in upper])
        S = np.array([g(s) for _, g in upper])
        return P, Q, R, S

    @cached_property
    def _rect_factors(self):
        a, b = self.domain.a, self.domain.b
        modes = [Mode(BC.DD, a, n) for n in range(1, self.nx_max + 1)]
        Psi = mode_matrix(modes, self.rule.nodes)
        s = self.y_rule.nodes + 0.5 * b
        parts = []
        for m in modes:
            (lf, lg), = rect_y_terms(m.wavenumber, b)[0]
            (uf, ug), = rect_y_terms(m.wavenumber, b)[1]
            parts.append((lf(s), lg(s), uf(s), ug(s)))
        P, Q, R, S = (np.array(z) for z in zip(*parts))
        return Psi, P, Q, R, S


def _green_apply_1d(ctx: OperatorContext, g):
    P, Q, R, S = ctx._factors
    rule = ctx.rule
    lower = np.sum(P * rule.cumulative(Q * g), axis=0)
    upper = np.sum(R * rule.cumulative_from_right(S * g), axis=0)
    return lower + upper


def _green_apply_2d(ctx: OperatorContext, g):
    Psi, P, Q, R, S = ctx._rect_factors
    # project onto x-modes, solve each y problem, then resum
    F = (Psi * ctx.rule.weights) @ g  # (nx, ny_nodes)
    yr = ctx.y_rule
    U = P * yr.cumulative(Q * F) + R * yr.cumulative_from_right(S * F)
    return Psi.T @ U


def green_apply(ctx: OperatorContext, g) -> np.ndarray:
    """``(G * g)(x)`` at every node, with the context's homogeneous kernel."""
    g = np.asarray(g, dtype=float)
    return _green_apply_2d(ctx, g) if ctx.dim == 2 else _green_apply_1d(ctx, g)


def apply_inverse(ctx: OperatorContext, f, project: bool = False) -> np.ndarray:
    """``O^{-1} f = sqrt(Sigma) G (sqrt(Sigma) f)`` evaluated at the nodes.

    For NN and PP the kernel is the regularized one and the caller must
    either pre-project ``f`` or pass ``project=True`` (see
    :func:`apply_inverse_regularized`).
    """
    if ctx.bc.has_zero_mode and not project:
        raise ZeroModePresent(f"{ctx.bc.name} has a zero mode; use apply_inverse_regularized")
    f = np.asarray(f, dtype=float)
    if ctx.bc.has_zero_mode:
        f = project_out_zero_mode(ctx, f)
    out = ctx.sqrt_sigma * green_apply(ctx, ctx.sqrt_sigma * f)
    return project_out_zero_mode(ctx, out) if ctx.bc.has_zero_mode else out


def apply_kernel_unprojected(ctx: OperatorContext, f) -> np.ndarray:
    """``sqrt(Sigma) G (sqrt(Sigma) f)`` with no projection of the input.

    For zero-mode bcs this is the regularized kernel applied to the raw
    function followed by output projection; it is how an ansatz lying on
    the zero mode itself is moved into the complement.
    """
    out = ctx.sqrt_sigma * green_apply(ctx, ctx.sqrt_sigma * np.asarray(f, dtype=float))
    return project_out_zero_mode(ctx, out) if ctx.bc.has_zero_mode else out


def apply_inverse_regularized(ctx: OperatorContext, f) -> np.ndarray:
    """``P K P f`` with ``K`` the regularized-kernel operator and ``P`` the zero-mode projector.

    On functions orthogonal to sqrt(Sigma) this is the exact inverse of O;
    sqrt(Sigma) itself is mapped to zero.
    """
    if not ctx.bc.has_zero_mode:
        raise UnsupportedBoundary(f"{ctx.bc.name} has no zero mode")
    return apply_inverse(ctx, f, project=True)


def project_out_zero_mode(ctx: OperatorContext, f) -> np.ndarray:
    """``f - sqrt(Sigma) <sqrt(Sigma), f> / <Sigma>``; idempotent."""
    f = np.asarray(f, dtype=float)
    coef = ctx.integrate(ctx.sqrt_sigma * f) / ctx.integrate(ctx.sigma)
    return f - coef * ctx.sqrt_sigma


def forward_spectral(ctx: OperatorContext, f, n_modes: int = 60) -> np.ndarray:
    """``O f`` computed through ``n_modes`` Laplacian eigenfunctions.

    ``f / sqrt(Sigma)`` is projected on the modes, each coefficient is scaled
    by its eigenvalue and the sum is divided by ``sqrt(Sigma)``.  Only
    meaningful in 1D, and exact when ``f / sqrt(Sigma)`` lies in the span.
    """
    if ctx.dim != 1:
        raise UnsupportedBoundary("spectral forward operator is implemented for intervals")
    modes = sorted_modes(ctx.bc, ctx.domain.a, n_modes, include_zero=ctx.bc.has_zero_mode)
    M = mode_matrix(modes, ctx.nodes)
    ev = np.array([m.eigenvalue for m in modes])
    coef = M @ (ctx.weights * np.asarray(f, dtype=float) / ctx.sqrt_sigma)
    return (ev * coef) @ M / ctx.sqrt_sigma


# ---------------------------------------------------------------------------
# matrix engines


class Engine(enum.Enum):
    OINV = "oinv"
    WINV = "winv"
    WINV_DEFLATED = "winv_deflated"


@dataclass(frozen=True)
class ProductMode:
    """Product eigenfunction psi_nx(x) phi_ny(y) on a rectangle."""

    x: Mode
    y: Mode

    @property
    def eigenvalue(self) -> float:
        return self.x.eigenvalue + self.y.eigenvalue

    @property
    def is_zero_mode(self) -> bool:
        return self.x.is_zero_mode and self.y.is_zero_mode


def product_modes(bc, a: float, b: float, count: int) -> List[ProductMode]:
    """Lowest ``count`` product modes, ties broken by ``(nx, ny)``."""
    bc = BC.parse(bc)
    if bc.has_zero_mode:
        raise UnsupportedBoundary("product bases are provided for DD, ND and DN only")
    reach = 1
    while True:
        xs = sorted_modes(bc, a, reach)
        ys = sorted_modes(bc, b, reach)
        cands = sorted((ProductMode(mx, my) for mx in xs for my in ys),
                       key=lambda p: (p.eigenvalue, p.x.n, p.y.n))
        if len(cands) >= count:
            chosen = cands[:count]
            edge = min(xs[-1].eigenvalue + ys[0].eigenvalue, xs[0].eigenvalue + ys[-1].eigenvalue)
            if chosen[-1].eigenvalue < edge:
                return chosen
        reach *= 2


@dataclass
class SpectralMatrix:
    """Finite matrix of ``O^{-1}`` or ``W^{-1}`` in the Laplacian basis."""

    engine: Engine
    modes: list
    entries: np.ndarray
    overlaps: np.ndarray  # <n|Sigma|m> over ``modes``
    eigenvalues: np.ndarray  # Laplacian eigenvalues of ``modes``
    truncation: Optional[int] = None
    convergence: Optional[float] = None  # max entry change between R and 2R (OInv)
    extra: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _overlap_rule(ctx: OperatorContext, lo, hi, length, feature, kmax, y=False):
    width = panel_width_for(length, feature, kmax, ctx.rule.order)
    return make_rule(lo, hi, ctx.rule.order, width)


def overlap_matrix(ctx: OperatorContext, rows: Sequence, cols: Sequence, weight: str = "density"):
    """``<n|w|m>`` for ``w`` = Sigma (``"density"``) or sqrt(Sigma) (``"sqrt"``).

    The quadrature is refined until the highest mode product is resolved.
    """
    fn = ctx.density if weight == "density" else ctx.density.sqrt
    if ctx.dim == 1:
        a = ctx.domain.a
        kmax = max(m.wavenumber for m in rows) + max(m.wavenumber for m in cols)
        rule = _overlap_rule(ctx, -a / 2, a / 2, a, ctx.density.feature_length, kmax)
        w = rule.weights * fn(rule.nodes)
        A = mode_matrix(rows, rule.nodes)
        B = A if cols is rows else mode_matrix(cols, rule.nodes)
        return (A * w) @ B.T
    a, b = ctx.domain.a, ctx.domain.b
    dens = ctx.density
    if isinstance(dens, Separable2D):
        fx = dens.x_factor if weight == "density" else dens.x_factor.sqrt
        fy = dens.y_factor if weight == "density" else dens.y_factor.sqrt
        kx = max(m.x.wavenumber for m in rows) + max(m.x.wavenumber for m in cols)
        ky = max(m.y.wavenumber for m in rows) + max(m.y.wavenumber for m in cols)
        rx = _overlap_rule(ctx, -a / 2, a / 2, a, dens.x_factor.feature_length, kx)
        ry = _overlap_rule(ctx, -b / 2, b / 2, b, dens.y_factor.feature_length, ky)
        ox = _unique_overlaps([m.x for m in rows], [m.x for m in cols], rx, fx)
        oy = _unique_overlaps([m.y for m in rows], [m.y for m in cols], ry, fy)
        return np.array([[ox[(r.x, c.x)] * oy[(r.y, c.y)] for c in cols] for r in rows])
    kx = max(m.x.wavenumber for m in rows) + max(m.x.wavenumber for m in cols)
    ky = max(m.y.wavenumber for m in rows) + max(m.y.wavenumber for m in cols)
    rx = _overlap_rule(ctx, -a / 2, a / 2, a, dens.feature_length, kx)
    ry = _overlap_rule(ctx, -b / 2, b / 2, b, dens.feature_length, ky)
    X, Y = np.meshgrid(rx.nodes, ry.nodes, indexing="ij")
    W = np.outer(rx.weights, ry.weights) * fn(X, Y)
    out = np.empty((len(rows), len(cols)))
    Rx = {m: m(rx.nodes) for m in {p.x for p in list(rows) + list(cols)}}
    Ry = {m: m(ry.nodes) for m in {p.y for p in list(rows) + list(cols)}}
    for i, r in enumerate(rows):
        left = W * np.outer(Rx[r.x], Ry[r.y])
        for j, c in enumerate(cols):
            out[i, j] = Rx[c.x] @ left @ Ry[c.y]
    return out


def _unique_overlaps(rows, cols, rule, fn):
    modes = list(dict.fromkeys(list(rows) + list(cols)))
    M = mode_matrix(modes, rule.nodes)
    O = (M * (rule.weights * fn(rule.nodes))) @ M.T
    return {(p, q): O[i, j] for i, p in enumerate(modes) for j, q in enumerate(modes)}


def basis_modes(ctx: OperatorContext, count: int, include_zero: bool = False) -> list:
    if ctx.dim == 2:
        return product_modes(ctx.bc, ctx.domain.a, ctx.domain.b, count)
    return sorted_modes(ctx.bc, ctx.domain.a, count, include_zero=include_zero)


def density_overlap(ctx: OperatorContext, m, n) -> float:
    """``<m|Sigma|n>`` by quadrature."""
    return float(overlap_matrix(ctx, [m], [n])[0, 0])


def build_spectral_matrix(ctx: OperatorContext, N: int, engine=Engine.WINV,
                          R: Optional[int] = None) -> SpectralMatrix:
    """Matrix of the inverse operator over the ``N`` lowest nonzero modes.

    ``WINV``: ``<n|Sigma|m> / sqrt(eps_n eps_m)``.
    ``OINV``: ``sum_r <n|sqrt(Sigma)|r><r|sqrt(Sigma)|m> / eps_r`` over ``R`` modes.
    ``WINV_DEFLATED``: for NN/PP, overlaps with the zero-mode part removed,
    ``<n|Sigma|m> - <n|Sigma|0><m|Sigma|0>/<0|Sigma|0>``.
    """
    engine = Engine(engine) if not isinstance(engine, Engine) else engine
    if N < 2:
        raise InsufficientTruncation("need N >= 2")
    zero = ctx.bc.has_zero_mode
    if zero and engine is Engine.WINV:
        engine = Engine.WINV_DEFLATED
    if engine is Engine.WINV_DEFLATED and not zero:
        engine = Engine.WINV
    modes = basis_modes(ctx, N)
    ev = np.array([m.eigenvalue for m in modes])
    overlaps = overlap_matrix(ctx, modes, modes)
    if engine is Engine.OINV:
        if zero:
            raise UnsupportedBoundary("the OInv engine is provided for bcs without a zero mode")
        R = 2 * N if R is None else R
        if R < N:
            raise InsufficientTruncation(f"internal truncation R={R} < N={N}")

        def oinv(count):
            inner = basis_modes(ctx, count)
            C = overlap_matrix(ctx, modes, inner, weight="sqrt")
            er = np.array([m.eigenvalue for m in inner])
            return (C / er) @ C.T

        entries = oinv(R)
        change = float(np.max(np.abs(oinv(2 * R) - entries)))
        entries = 0.5 * (entries + entries.T)
        return SpectralMatrix(engine, modes, entries, overlaps, ev, R, change)
    if engine is Engine.WINV_DEFLATED:
        z = Mode(ctx.bc, ctx.domain.a, 0, 1)
        s0 = overlap_matrix(ctx, modes, [z])[:, 0]
        s00 = density_overlap(ctx, z, z)
        eff = overlaps - np.outer(s0, s0) / s00
    else:
        eff = overlaps
    root = np.sqrt(ev)
    entries = eff / np.outer(root, root)
    entries = 0.5 * (entries + entries.T)
    return SpectralMatrix(engine, modes, entries, overlaps, ev)
