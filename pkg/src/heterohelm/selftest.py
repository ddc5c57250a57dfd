"""Closed-form examples from every module, run by ``heterohelm selftest``."""

from __future__ import annotations

import math
from typing import Callable, List, Tuple

import numpy as np

PI = math.pi


def _close(got, want, tol, what):
    if not np.all(np.abs(np.asarray(got) - np.asarray(want)) <= tol):
        raise AssertionError(f"{what}: got {got}, expected {want}")


def _density():
    from .density import Constant, Oscillating, Parabolic, eval_density, eval_sqrt_density

    _close(eval_density(Parabolic(2.0), 0.0), 1.0, 0.0, "parabolic at origin")
    _close(eval_density(Oscillating(0.1, 1.0), -0.55), 2.0, 1e-14, "oscillating at sine zero")
    _close(eval_sqrt_density(Constant(4.0), 0.3), 2.0, 0.0, "sqrt of constant")
    _close(eval_sqrt_density(Parabolic(1.0), 0.5), 1.5, 1e-15, "sqrt of parabolic")
    _close(eval_sqrt_density(Oscillating(0.1, 1.0), -0.525), 1.0, 1e-14, "sqrt at sine trough")


def _basis():
    from .basis import BC, Interval, green_closed_1d, mode

    unit = Interval(1.0)
    m = mode(BC.DD, unit, 1)
    _close([m(0.0), m.eigenvalue], [math.sqrt(2), PI ** 2], 1e-12, "DD ground mode")
    z = mode(BC.NN, unit, 0, 1)
    _close([z(0.3), z.eigenvalue], [1.0, 0.0], 0.0, "NN zero mode")
    p = mode(BC.PP, unit, 1, 2)
    _close([p(0.25), p.eigenvalue], [math.sqrt(2), 4 * PI ** 2], 1e-12, "PP sine mode")
    _close(green_closed_1d(BC.DD, unit, 0.0, 0.0), 0.25, 1e-15, "DD kernel at centre")
    _close(green_closed_1d(BC.DD, unit, -0.5, 0.3), 0.0, 0.0, "DD kernel at endpoint")
    assert [bc.has_zero_mode for bc in BC] == [False, False, False, True, True]


def _operators():
    from .basis import BC, Interval, Mode, sorted_modes
    from .density import Constant, Parabolic
    from .operators import (OperatorContext, apply_inverse, apply_inverse_regularized,
                            build_spectral_matrix, overlap_matrix, project_out_zero_mode)

    ctx = OperatorContext.build(Interval(1.0), BC.DD, Constant(1.0))
    phi = Mode(BC.DD, 1.0, 1)(ctx.nodes)
    _close(apply_inverse(ctx, phi), phi / PI ** 2, 1e-12, "inverse on homogeneous mode")
    c3 = OperatorContext.build(Interval(1.0), BC.DD, Constant(3.0))
    f = math.sqrt(3.0) * phi
    _close(apply_inverse(c3, f), 3.0 / PI ** 2 * f, 1e-12, "constant density rescaling")
    pp = OperatorContext.build(Interval(1.0), BC.PP, Constant(1.0))
    cos = np.cos(2 * PI * pp.nodes)
    _close(apply_inverse_regularized(pp, cos), cos / (4 * PI ** 2), 1e-12, "PP cosine")
    nn = OperatorContext.build(Interval(1.0), BC.NN, Parabolic(2.0))
    _close(apply_inverse_regularized(nn, nn.sqrt_sigma), 0.0, 1e-10, "zero mode annihilated")
    once = project_out_zero_mode(nn, np.exp(nn.nodes))
    _close(project_out_zero_mode(nn, once), once, 1e-13, "projection idempotent")
    modes = sorted_modes(BC.DD, 1.0, 5)
    _close(overlap_matrix(ctx, modes, modes), np.eye(5), 1e-13, "unit density overlaps")
    M = build_spectral_matrix(ctx, 3)
    _close(M.entries, np.diag([1 / PI ** 2, 1 / (4 * PI ** 2), 1 / (9 * PI ** 2)]), 1e-14,
           "homogeneous WInv matrix")


def _solvers():
    from .basis import BC, Interval, Mode
    from .density import Constant
    from .operators import OperatorContext
    from .solvers import (block_iterate, lanczos_iterate, matrix_power_method, power_iterate,
                          rr_matrix_solve)

    ctx = OperatorContext.build(Interval(1.0), BC.DD, Constant(1.0))
    m1, m3 = Mode(BC.DD, 1.0, 1), Mode(BC.DD, 1.0, 3)
    rep = power_iterate(ctx, lambda x: m1(x) + 0.5 * m3(x), p_max=12, tol=None)
    _close(rep.eigenvalue, PI ** 2, 1e-9, "power on a mode mixture")
    lan = lanczos_iterate(ctx, m1)
    _close(lan.eigenvalue, PI ** 2, 1e-10, "two-vector scheme on an exact mode")
    reps = block_iterate(ctx, [Mode(BC.DD, 1.0, n) for n in (1, 2, 3)])
    _close([r.eigenvalue for r in reps], [PI ** 2, 4 * PI ** 2, 9 * PI ** 2], 1e-9, "block of 3")
    vals = [e for e, _ in rr_matrix_solve(ctx, 10, k=3)]
    _close(vals, [PI ** 2, 4 * PI ** 2, 9 * PI ** 2], 1e-10, "Rayleigh-Ritz")
    lam, _ = matrix_power_method(np.diag([1 / PI ** 2, 1 / (4 * PI ** 2), 1 / (9 * PI ** 2)]),
                                 np.ones(3))
    _close(lam, 1 / PI ** 2, 1e-14, "matrix power method")


def _accel():
    from .accel import shanks_once, shanks_table

    _close(shanks_once([1 + 2.0 ** -n for n in range(5)]), 1.0, 0.0, "geometric sequence")
    assert not shanks_table([2.0] * 5, 1).valid[1].any(), "constant sequence must be flagged"


def _drum():
    from .drum2d import beta_star, bound0, bound1

    _close(bound0(1.0, 0.5, 0.0, 0.0), 5 * PI ** 2, 1e-12, "homogeneous drum bound")
    assert beta_star(1.0, 0.5, 0.0) == 0.0
    _close(bound1(1.0, 0.5, 0.0, 0.0, nx_max=20), 5 * PI ** 2, 1e-8, "homogeneous iterate")


def _asymptotics():
    from .asymptotics import (AsymptoticModel, eval_asymptotic, eval_msd_asymptotic,
                              excited_validity_bound, reduced_msd_pp)

    _close([excited_validity_bound(e) for e in (1.0, 0.0625)], [1.25, 5.0], 1e-15,
           "validity bound")
    _close(eval_asymptotic(AsymptoticModel("pp", 1, PI / 2), 0.07, 0.3), 2 * PI ** 2, 1e-12,
           "flat periodic branch")
    _close(reduced_msd_pp(PI / 2), 0.0, 1e-15, "flat branch spread")
    _close(eval_msd_asymptotic("nd", 1, 0.1, 1.05), 0.0, 1e-12, "ND vanishing prefactor")


CHECKS: List[Tuple[str, Callable[[], None]]] = [
    ("density", _density),
    ("spectral_basis", _basis),
    ("operators", _operators),
    ("solvers", _solvers),
    ("accel", _accel),
    ("drum2d", _drum),
    ("asymptotics", _asymptotics),
]


def run_selftest() -> List[Tuple[str, bool, str]]:
    """``(name, passed, message)`` per module check."""
    results = []
    for name, check in CHECKS:
        try:
            check()
            results.append((name, True, ""))
        except Exception as exc:  # report every failure, keep going
            results.append((name, False, f"{type(exc).__name__}: {exc}"))
    return results
