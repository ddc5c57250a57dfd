"""Iteration schemes for the lowest modes of -Lap psi = E Sigma psi.

All grid-based solvers work with the symmetrized unknown ``Xi = sqrt(Sigma) psi``
and only ever apply the inverse operator, so eigenvalue estimates come from
overlap identities rather than differentiation:

``<Xi_p|O|Xi_p> / <Xi_p|Xi_p> = <Xi_p, Xi_{p-1}> / <Xi_p, Xi_p>``

whenever ``Xi_p = O^{-1} Xi_{p-1}``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import (DegenerateSubspace, LostOverlap, NoConvergence, RankCollapse,
                     UnsupportedBoundary)
from .operators import (Engine, OperatorContext, SpectralMatrix, apply_inverse,
                        apply_inverse_regularized, apply_kernel_unprojected, build_spectral_matrix,
                        project_out_zero_mode)

DEFAULT_TOL = 1e-12
DEFAULT_PMAX = 64
TINY_NORM = 1e-300
# a zero-mode ansatz whose projection keeps less than this fraction of its
# norm is moved into the complement by one unprojected kernel application
SEED_FRACTION = 1e-8


@dataclass
class IterateState:
    """One power step: ``xi`` is Xi_p, overlaps are with the previous iterate."""

    p: int
    xi: Optional[np.ndarray]
    overlap_pp: float  # <Xi_p, Xi_p>
    overlap_pq: float  # <Xi_p, Xi_{p-1}>
    overlap_qq: float  # <Xi_{p-1}, Xi_{p-1}>
    rayleigh: float
    msd: float


@dataclass
class LanczosState:
    """Two-dimensional Krylov step built on a unit vector ``xi``."""

    xi: np.ndarray
    chi: np.ndarray
    eta: float
    upsilon: float
    epsilon_q: float
    delta: float
    e1: float
    e2: float
    update: np.ndarray  # the Ritz vector for e2, normalized
    applied_update: Optional[np.ndarray] = None  # O^{-1} update


@dataclass
class SolveReport:
    """Per-iteration estimates plus the final mode.

    ``eigenvalues[i]`` and ``msd[i]`` belong to iteration ``i + 1``.
    ``eigenfunction`` holds Psi = Xi / sqrt(Sigma) at ``nodes`` with
    ``int Sigma Psi^2 = 1``.
    """

    method: str
    eigenvalues: List[float] = field(default_factory=list)
    msd: List[float] = field(default_factory=list)
    converged: bool = False
    eigenfunction: Optional[np.ndarray] = None
    nodes: Optional[np.ndarray] = None
    wall_clock: float = 0.0
    metadata: dict = field(default_factory=dict)
    history: List = field(default_factory=list)

    @property
    def eigenvalue(self) -> float:
        return self.eigenvalues[-1] if self.eigenvalues else math.nan

    @property
    def iterations(self) -> int:
        return len(self.eigenvalues)

    def to_lines(self) -> List[str]:
        """``p,eigenvalue,msd`` rows with 17 significant digits."""
        return [f"{p},{e:.17g},{d:.17g}"
                for p, (e, d) in enumerate(zip(self.eigenvalues, self.msd), start=1)]


def _finish(ctx, report, xi, t0):
    nrm = ctx.norm(xi)
    psi = xi / (nrm * ctx.sqrt_sigma)
    flat = psi.ravel()
    if flat[np.argmax(np.abs(flat))] < 0:
        psi = -psi
    report.eigenfunction = psi
    report.nodes = ctx.nodes if ctx.dim == 1 else (ctx.rule.nodes, ctx.y_rule.nodes)
    report.wall_clock = time.perf_counter() - t0
    return report


def _maybe_raise(report, strict):
    if strict and not report.converged:
        raise NoConvergence(f"{report.method} did not converge in {report.iterations} steps", report)
    return report


def _starting_iterate(ctx, ansatz):
    xi = ctx.sample(ansatz)
    if not ctx.norm(xi) > 0:
        raise LostOverlap("ansatz has zero norm")
    seeded = False
    if ctx.bc.has_zero_mode:
        projected = project_out_zero_mode(ctx, xi)
        if ctx.norm(projected) < SEED_FRACTION * ctx.norm(xi):
            projected = apply_kernel_unprojected(ctx, xi)
            seeded = True
        xi = projected
        if not ctx.norm(xi) > TINY_NORM:
            raise LostOverlap("ansatz has no component outside the zero mode")
    return xi / ctx.norm(xi), seeded


def _inverse(ctx):
    return apply_inverse_regularized if ctx.bc.has_zero_mode else apply_inverse


def power_step(ctx: OperatorContext, xi, p: int = 1) -> IterateState:
    """Apply the inverse once and measure the Rayleigh quotient and msd."""
    nxt = _inverse(ctx)(ctx, xi)
    pp = ctx.inner(nxt, nxt)
    if not pp > TINY_NORM ** 2:
        raise LostOverlap(f"iterate collapsed at step {p}")
    pq = ctx.inner(nxt, xi)
    qq = ctx.inner(xi, xi)
    ray = pq / pp
    msd = math.sqrt(max(qq / pp - ray * ray, 0.0))
    return IterateState(p, nxt, pp, pq, qq, ray, msd)


def power_iterate(ctx: OperatorContext, ansatz, p_max: int = DEFAULT_PMAX,
                  tol: Optional[float] = DEFAULT_TOL, strict: bool = False,
                  keep_history: bool = False) -> SolveReport:
    """Inverse power iteration on the lowest mode overlapping ``ansatz``.

    Parameters
    ----------
    ctx : OperatorContext
    ansatz : callable or array
        Starting Xi. Need not satisfy the boundary conditions. For NN/PP the
        zero-mode component is removed first (an ansatz that *is* the zero
        mode is seeded with one unprojected kernel application).
    p_max : int
        Maximum number of inverse applications.
    tol : float or None
        Stop when successive Rayleigh quotients differ by less than ``tol``.
        ``None`` runs exactly ``p_max`` steps and reports them as converged.
    strict : bool
        Raise :class:`NoConvergence` (carrying the report) instead of
        returning a report flagged ``converged=False``.
    keep_history : bool
        Store every :class:`IterateState` (with its grid function).

    Returns
    -------
    SolveReport
    """
    t0 = time.perf_counter()
    xi, seeded = _starting_iterate(ctx, ansatz)
    report = SolveReport("power", metadata={"bc": ctx.bc.name, "seeded": seeded,
                                            "tol": tol, "p_max": p_max})
    for p in range(1, p_max + 1):
        state = power_step(ctx, xi, p)
        report.eigenvalues.append(state.rayleigh)
        report.msd.append(state.msd)
        xi = state.xi / math.sqrt(state.overlap_pp)
        if keep_history:
            state.xi = xi
            report.history.append(state)
        if tol is not None and p > 1 and abs(report.eigenvalues[-1] - report.eigenvalues[-2]) < tol:
            report.converged = True
            break
    if tol is None:
        report.converged = True
    return _maybe_raise(_finish(ctx, report, xi, t0), strict)


def lanczos_step(ctx: OperatorContext, xi) -> LanczosState:
    """One step of the two-vector scheme; ``xi`` must be unit norm.

    Raises
    ------
    DegenerateSubspace
        If ``xi`` is already an eigenfunction (``upsilon < 1e-14 eta``).
    """
    A = apply_inverse(ctx, xi)
    eta = ctx.inner(xi, A)
    r = A - eta * xi
    c = ctx.inner(xi, r)  # re-orthogonalization, zero in exact arithmetic
    r = r - c * xi
    upsilon = ctx.norm(r)
    if upsilon < 1e-14 * abs(eta):
        raise DegenerateSubspace(f"upsilon={upsilon:.3g} is negligible against eta={eta:.3g}")
    chi = r / upsilon
    A2 = apply_inverse(ctx, A)
    A_chi = (A2 - (eta + c) * A) / upsilon
    eps = ctx.inner(chi, A_chi)
    delta = math.sqrt((eta - eps) ** 2 + 4.0 * upsilon ** 2)
    e2 = 0.5 * (eta + eps + delta)
    e1 = 0.5 * (eta + eps - delta)
    w_xi = math.sqrt(max(-eps + eta + delta, 0.0) / delta)
    w_chi = math.sqrt(max(eps - eta + delta, 0.0) / delta)
    update = (w_xi * xi + w_chi * chi) / math.sqrt(2.0)
    applied = (w_xi * A + w_chi * A_chi) / math.sqrt(2.0)
    return LanczosState(xi, chi, eta, upsilon, eps, delta, e1, e2, update, applied)


def lanczos_iterate(ctx: OperatorContext, ansatz, p_max: int = DEFAULT_PMAX,
                    tol: Optional[float] = DEFAULT_TOL, strict: bool = False,
                    keep_history: bool = False) -> SolveReport:
    """Two-dimensional Krylov iteration; each step costs two inverse applications.

    The estimate after step ``p`` is ``1 / e2`` with ``e2`` the larger Ritz
    value of the inverse operator on ``span{xi, O^{-1} xi}``. The ``msd``
    column holds the half-width of the interval around ``1/e2`` guaranteed
    to contain an eigenvalue (from the spread of ``O^{-1}`` on the update).

    The ansatz must satisfy the boundary conditions; zero-mode bcs are not
    supported.
    """
    if ctx.bc.has_zero_mode:
        raise UnsupportedBoundary("the two-vector scheme is provided for DD, ND and DN")
    t0 = time.perf_counter()
    xi = ctx.sample(ansatz)
    if not ctx.norm(xi) > TINY_NORM:
        raise LostOverlap("ansatz has zero norm")
    xi = xi / ctx.norm(xi)
    report = SolveReport("lanczos", metadata={"bc": ctx.bc.name, "tol": tol, "p_max": p_max,
                                              "eta": []})
    for p in range(1, p_max + 1):
        try:
            state = lanczos_step(ctx, xi)
        except DegenerateSubspace:
            A = apply_inverse(ctx, xi)
            eta = ctx.inner(xi, A)
            report.eigenvalues.append(1.0 / eta)
            report.msd.append(0.0)
            report.metadata["eta"].append(eta)
            report.metadata["stop"] = "degenerate"
            report.converged = True
            break
        report.metadata["eta"].append(state.eta)
        spread = math.sqrt(max(ctx.inner(state.applied_update, state.applied_update)
                               - state.e2 ** 2, 0.0))
        est = 1.0 / state.e2
        half = (1.0 / (state.e2 - spread) - est) if state.e2 > spread else math.inf
        report.eigenvalues.append(est)
        report.msd.append(half)
        xi = state.update / ctx.norm(state.update)
        if keep_history:
            report.history.append(state)
        if tol is not None and p > 1 and abs(report.eigenvalues[-1] - report.eigenvalues[-2]) < tol:
            report.converged = True
            break
    if tol is None:
        report.converged = True
    return _maybe_raise(_finish(ctx, report, xi, t0), strict)


def _inverse_quotient(ctx, xi):
    y = _inverse(ctx)(ctx, xi)
    return ctx.inner(xi, xi) / ctx.inner(xi, y)


def block_iterate(ctx: OperatorContext, ansatzes: Sequence, p_max: int = DEFAULT_PMAX,
                  tol: Optional[float] = DEFAULT_TOL, strict: bool = False) -> List[SolveReport]:
    """Simultaneous iteration for the lowest ``len(ansatzes)`` modes.

    Members are sorted by the starting estimate ``<xi,xi>/<xi,O^{-1}xi>``,
    then each step applies the inverse to every member and re-orthonormalizes
    with modified Gram-Schmidt in the plain L2 product. The estimate for
    member ``j`` is the Rayleigh quotient of ``O^{-1}`` applied to the
    previous orthonormal member.
    """
    t0 = time.perf_counter()
    members = []
    for a in ansatzes:
        xi = ctx.sample(a)
        if ctx.bc.has_zero_mode:
            xi = project_out_zero_mode(ctx, xi)
        if not ctx.norm(xi) > TINY_NORM:
            raise LostOverlap("an ansatz has zero norm")
        members.append(xi / ctx.norm(xi))
    order = np.argsort([_inverse_quotient(ctx, m) for m in members], kind="stable")
    members = _gram_schmidt(ctx, [members[i] for i in order])
    reports = [SolveReport("block", metadata={"bc": ctx.bc.name, "member": j, "tol": tol,
                                              "p_max": p_max})
               for j in range(len(members))]
    for p in range(1, p_max + 1):
        applied = [_inverse(ctx)(ctx, m) for m in members]
        for rep, m, y in zip(reports, members, applied):
            yy = ctx.inner(y, y)
            if not yy > TINY_NORM ** 2:
                raise LostOverlap(f"block member collapsed at step {p}")
            ray = ctx.inner(y, m) / yy
            rep.eigenvalues.append(ray)
            rep.msd.append(math.sqrt(max(ctx.inner(m, m) / yy - ray * ray, 0.0)))
        members = _gram_schmidt(ctx, applied)
        if tol is not None and p > 1 and all(
                abs(r.eigenvalues[-1] - r.eigenvalues[-2]) < tol for r in reports):
            for r in reports:
                r.converged = True
            break
    if tol is None:
        for r in reports:
            r.converged = True
    for r, m in zip(reports, members):
        _finish(ctx, r, m, t0)
    if strict and not all(r.converged for r in reports):
        raise NoConvergence(f"block iteration did not converge in {p_max} steps", reports)
    return reports


def _gram_schmidt(ctx, vectors):
    out = []
    for v in vectors:
        before = ctx.norm(v)
        w = v.copy()
        for q in out:
            w = w - ctx.inner(q, w) * q
        after = ctx.norm(w)
        if after < 1e-12 * before:
            raise RankCollapse(f"member {len(out)} lost its independent direction")
        out.append(w / after)
    return out


# ---------------------------------------------------------------------------
# matrix path


def rr_matrix_solve(ctx: OperatorContext, N: int, engine=Engine.WINV, k: int = 1):
    """Rayleigh-Ritz on ``N`` Laplacian modes.

    Returns
    -------
    list of (float, ndarray)
        ``k`` Helmholtz eigenvalues in ascending order, each paired with the
        matrix eigenvector (see :func:`ritz_eigenfunction`).
    """
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")
    matrix = build_spectral_matrix(ctx, N, engine)
    return rr_from_matrix(matrix, k)


def rr_from_matrix(matrix: SpectralMatrix, k: int = 1):
    vals, vecs = np.linalg.eigh(matrix.entries)
    idx = np.argsort(vals)[::-1][:k]
    return [(1.0 / vals[i], vecs[:, i]) for i in idx]


def ritz_eigenfunction(matrix: SpectralMatrix, vector, x, y=None) -> np.ndarray:
    """Psi samples for a WInv eigenvector; coefficients are ``b_n / sqrt(eps_n)``.

    Only meaningful for the WInv engines, whose eigenvectors are expressed
    in the ``(-Lap)^{1/2}``-scaled basis.
    """
    coef = np.asarray(vector) / np.sqrt(matrix.eigenvalues)
    if y is None:
        vals = np.array([m(x) for m in matrix.modes])
    else:
        vals = np.array([m.x(x) * m.y(y) for m in matrix.modes])
    return np.tensordot(coef, vals, axes=1)


def matrix_power_method(matrix, trial, deflate_against: Sequence = (), p_max: int = 10_000,
                        tol: float = 1e-14):
    """Dominant eigenpair of a symmetric matrix after deflating known vectors.

    Stops when the residual ``||M v - lam v||`` falls below ``tol * |lam|``.

    Raises
    ------
    LostOverlap
        If the deflated trial vector vanishes.
    NoConvergence
        If ``p_max`` steps pass without meeting the tolerance.
    """
    M = matrix.entries if isinstance(matrix, SpectralMatrix) else np.asarray(matrix, dtype=float)
    known = [np.asarray(q, dtype=float) / np.linalg.norm(q) for q in deflate_against]

    def deflate(v):
        for q in known:
            v = v - (q @ v) * q
        return v

    v = deflate(np.asarray(trial, dtype=float))
    if not np.linalg.norm(v) > TINY_NORM:
        raise LostOverlap("trial vector has no component outside the deflated space")
    v = v / np.linalg.norm(v)
    lam = math.nan
    for _ in range(p_max):
        w = deflate(M @ v)
        lam = float(v @ w)
        if np.linalg.norm(w - lam * v) <= tol * abs(lam):
            return lam, v
        nrm = np.linalg.norm(w)
        if not nrm > TINY_NORM:
            raise LostOverlap("iterate collapsed")
        v = w / nrm
    raise NoConvergence(f"matrix power method did not reach tol={tol} in {p_max} steps")
