"""Rectangular Dirichlet drum with density (1 + alpha x)^2.

The trial function is ``Xi0 = (1 + beta x) sqrt(Sigma) psi_1(x) phi_1(y)``.
:func:`bound0` is its closed-form Rayleigh quotient, :func:`beta_star` the
minimizing ``beta`` and :func:`bound1` the quotient after one inverse
application on the rectangle grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from .basis import BC, Mode, Rectangle
from .density import Constant, Parabolic, Separable2D, check_alpha
from .operators import OperatorContext, apply_inverse, build_spectral_matrix
from .solvers import rr_from_matrix

PI = math.pi
RR_BASIS = 400
RR_CHECK_BASIS = 600


def _validate(a, b, alpha):
    if not (a > 0 and b > 0):
        raise ValueError(f"rectangle sides must be positive, got a={a}, b={b}")
    check_alpha(Parabolic(alpha), a)


def bound0(a: float, b: float, alpha: float, beta: float) -> float:
    """Closed-form Rayleigh quotient of the trial function."""
    _validate(a, b, alpha)
    a2, b2 = a * a, b * b
    num = 20 * PI ** 4 * (6 * a2 * beta ** 2 * (b2 - a2) + PI ** 2 * (a2 + b2) * (a2 * beta ** 2 + 12))
    den = a2 * b2 * (3 * (120 - 20 * PI ** 2 + PI ** 4) * a2 * a2 * alpha ** 2 * beta ** 2
                     + 20 * PI ** 2 * (PI ** 2 - 6) * a2 * (alpha ** 2 + 4 * alpha * beta + beta ** 2)
                     + 240 * PI ** 4)
    return num / den


def gamma_discriminant(a: float, b: float, alpha: float) -> float:
    a2, b2, al2 = a * a, b * b, alpha * alpha
    p2 = PI ** 2
    first = 300 * p2 * (p2 - 6) ** 2 * a2 * al2 * (a2 + b2) * ((p2 - 6) * a2 + (6 + p2) * b2)
    second = ((p2 - 15) ** 2 * a2 * a2 * al2 + (315 - 45 * p2 + PI ** 4) * a2 * al2 * b2
              - 180 * p2 * b2) ** 2
    return first + second


def beta_star(a: float, b: float, alpha: float) -> float:
    """Minimizer of :func:`bound0` over ``beta``; 0 for the homogeneous drum."""
    _validate(a, b, alpha)
    if alpha == 0:
        return 0.0
    a2, b2, al2 = a * a, b * b, alpha * alpha
    p2 = PI ** 2
    num = (45 * a2 * al2 * (5 * a2 + 7 * b2) + PI ** 4 * a2 * al2 * (a2 + b2)
           - 15 * p2 * (2 * a2 * a2 * al2 + 3 * b2 * (a2 * al2 + 4))
           + math.sqrt(gamma_discriminant(a, b, alpha)))
    den = 5 * (p2 - 6) * a2 * alpha * ((p2 - 6) * a2 + (6 + p2) * b2)
    return num / den


def drum_context(a: float, b: float, alpha: float, nx_max: int = 80) -> OperatorContext:
    density = Separable2D(Parabolic(alpha), Constant(1.0))
    return OperatorContext.build(Rectangle(a, b), BC.DD, density, nx_max=nx_max)


def trial_function(ctx: OperatorContext, beta: float) -> np.ndarray:
    a, b = ctx.domain.a, ctx.domain.b
    psi, phi = Mode(BC.DD, a, 1), Mode(BC.DD, b, 1)
    return ctx.sample(lambda X, Y: (1 + beta * X) * ctx.density.sqrt(X, Y) * psi(X) * phi(Y))


def _bound1(a, b, alpha, beta, nx_max):
    ctx = drum_context(a, b, alpha, nx_max)
    xi0 = trial_function(ctx, beta)
    xi1 = apply_inverse(ctx, xi0)
    return ctx.inner(xi1, xi0) / ctx.inner(xi1, xi1)


def bound1(a: float, b: float, alpha: float, beta: float, nx_max: int = 80) -> float:
    """Rayleigh quotient of ``O^{-1} Xi0``, through the x-mode-summed rectangle kernel."""
    _validate(a, b, alpha)
    if nx_max < 20:
        raise ValueError(f"nx_max must be at least 20, got {nx_max}")
    return _bound1(a, b, alpha, beta, nx_max)


def bound1_with_error(a, b, alpha, beta, nx_max: int = 80):
    """``(bound1, |bound1(nx_max) - bound1(nx_max // 2)|)``; the second is a truncation estimate."""
    value = bound1(a, b, alpha, beta, nx_max)
    return value, abs(value - _bound1(a, b, alpha, beta, max(nx_max // 2, 10)))


def rr_reference(a: float, b: float, alpha: float, N: int = RR_BASIS,
                 check_N: Optional[int] = RR_CHECK_BASIS):
    """Rayleigh-Ritz ground eigenvalue on ``N`` product modes, plus the change at ``check_N``."""
    ctx = drum_context(a, b, alpha, nx_max=20)
    value = rr_from_matrix(build_spectral_matrix(ctx, N), 1)[0][0]
    if check_N is None:
        return value, math.nan
    finer = rr_from_matrix(build_spectral_matrix(ctx, check_N), 1)[0][0]
    return value, abs(finer - value)


@dataclass
class VariationalBound:
    a: float
    b: float
    alpha: float
    beta: float
    bound0_value: float
    beta_star: float
    gamma_disc: float
    bound1_value: Optional[float] = None


def variational_bound(a: float, b: float, alpha: float, beta: Optional[float] = None,
                      with_bound1: bool = True, nx_max: int = 80) -> VariationalBound:
    """Collect both bounds; ``beta=None`` uses ``beta_star``."""
    bs = beta_star(a, b, alpha)
    beta = bs if beta is None else beta
    b1 = bound1(a, b, alpha, beta, nx_max) if with_bound1 else None
    return VariationalBound(a, b, alpha, beta, bound0(a, b, alpha, beta), bs,
                            gamma_discriminant(a, b, alpha), b1)


FIG_COLUMNS = ("alpha", "bound0_beta0", "bound0_betastar", "bound1_beta0", "bound1_betastar",
               "rr_reference", "rr_delta")


def figure_rows(alphas: Iterable[float], a: float = 1.0, b: float = 0.5, nx_max: int = 80,
                N: int = RR_BASIS, check_N: Optional[int] = RR_CHECK_BASIS) -> List[dict]:
    """One record per alpha with both bounds at beta=0 and beta*, and the RR reference."""
    rows = []
    for alpha in alphas:
        bs = beta_star(a, b, alpha)
        rr, delta = rr_reference(a, b, alpha, N, check_N)
        rows.append({
            "alpha": alpha,
            "bound0_beta0": bound0(a, b, alpha, 0.0),
            "bound0_betastar": bound0(a, b, alpha, bs),
            "bound1_beta0": bound1(a, b, alpha, 0.0, nx_max),
            "bound1_betastar": bound1(a, b, alpha, bs, nx_max),
            "rr_reference": rr,
            "rr_delta": delta,
        })
    return rows
