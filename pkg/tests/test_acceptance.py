"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from heterohelm import (BC, Interval, OperatorContext, Oscillating, Parabolic, apply_inverse,
                        block_iterate, build_spectral_matrix, lanczos_iterate,
                        matrix_power_method, power_iterate, rr_matrix_solve, shanks_table)
from heterohelm.asymptotics import (AsymptoticModel, DEFAULT_EPSILONS, DEFAULT_ETAS,
                                    eval_asymptotic, numeric_eigenvalues, sweep_epsilon)
from heterohelm.basis import Mode, sorted_modes
from heterohelm.drum2d import beta_star, bound0, bound1, rr_reference
from heterohelm.operators import forward_spectral
from heterohelm.solvers import rr_from_matrix

from oracles import collocation_eigenvalues
from reference_values import (ALPHAS, GROUND_DD_ALPHA2, GROUND_NN_ALPHA2, GROUND_PP_ALPHA2,
                              ONE_STEP_TWO_VECTOR, REFERENCE_ROWS)

PI = math.pi


def string_context(alpha, bc=BC.DD):
    return OperatorContext.build(Interval(1.0), bc, Parabolic(alpha))


def ground_ansatz(ctx):
    """sqrt(Sigma) times the lowest Dirichlet mode."""
    return ctx.sqrt_sigma * Mode(BC.DD, 1.0, 1)(ctx.nodes)


def polynomial_ansatz(x):
    return math.sqrt(105) / 8 * (2 * x + 1) * (1 - 4 * x * x)


def oracle_eigenvalues(ctx, count=6):
    return collocation_eigenvalues(ctx.bc.name, ctx.density, ctx.domain.a, count=count)


def run_sequences():
    return {alpha: power_iterate(string_context(alpha), ground_ansatz(string_context(alpha)),
                                 p_max=10, tol=None).eigenvalues
            for alpha in ALPHAS}


class TestAcceptance:
    def test_criterion_1_printed_sequences(self, verdict):
        t0 = time.perf_counter()
        seqs = run_sequences()
        worst_o, worst_s, checked, invalid = 0.0, 0.0, 0, 0
        ok = True
        for col, alpha in enumerate(ALPHAS):
            table = shanks_table(seqs[alpha], 3)
            computed = {label: (value, valid) for label, value, valid in table.rows()}
            best = table.best_estimate()
            for label, reference in REFERENCE_ROWS:
                target = float(reference[col])
                value, valid = computed[label]
                if label.startswith("O_"):
                    worst_o = max(worst_o, abs(value - target))
                elif valid:
                    worst_s = max(worst_s, abs(value - target))
                else:
                    # 0/0 entry: the reference value must be the converged limit
                    invalid += 1
                    worst_s = max(worst_s, abs(best - target))
                checked += 1
        elapsed = time.perf_counter() - t0
        ok = worst_o <= 1e-10 and worst_s <= 1e-10 and elapsed < 60 and checked == 84
        verdict(1, ok, f"{checked} entries, max |O_p err|={worst_o:.2e}, "
                       f"max |s err|={worst_s:.2e} ({invalid} 0/0 entries checked against "
                       f"the converged value), {elapsed:.2f}s")

    def test_criterion_2_converged_eigenvalues(self, verdict):
        dd_ctx = string_context(2.0)
        dd = power_iterate(dd_ctx, ground_ansatz(dd_ctx), p_max=64).eigenvalue
        nn = power_iterate(string_context(2.0, BC.NN), lambda x: 2 * x + 1).eigenvalue
        pp = power_iterate(string_context(2.0, BC.PP), lambda x: 2 * x + 1).eigenvalue
        errs = (abs(dd - GROUND_DD_ALPHA2), abs(nn - GROUND_NN_ALPHA2), abs(pp - GROUND_PP_ALPHA2))
        ok = errs[0] <= 1e-10 and errs[1] <= 1e-9 and errs[2] <= 1e-9
        verdict(2, ok, f"DD={dd:.15g} (err {errs[0]:.1e}), NN={nn:.15g} (err {errs[1]:.1e}), "
                       f"PP={pp:.15g} (err {errs[2]:.1e})")

    def test_criterion_3_two_vector_one_step(self, verdict):
        errs = {}
        for alpha, target in ONE_STEP_TWO_VECTOR.items():
            ctx = string_context(alpha)
            rep = lanczos_iterate(ctx, ground_ansatz(ctx), p_max=1, tol=None)
            errs[alpha] = abs(rep.eigenvalues[0] - target)
        ok = max(errs.values()) <= 1e-8
        verdict(3, ok, ", ".join(f"alpha={a}: err {e:.1e}" for a, e in errs.items()))

    def test_criterion_4_cross_engine(self, verdict):
        spread = 0.0
        for alpha in ALPHAS:
            ctx = string_context(alpha)
            start = ground_ansatz(ctx)
            values = [power_iterate(ctx, start).eigenvalue,
                      lanczos_iterate(ctx, start).eigenvalue,
                      block_iterate(ctx, [start])[0].eigenvalue,
                      rr_matrix_solve(ctx, 40)[0][0]]
            spread = max(spread, max(values) - min(values))
        ctx = string_context(2.0)
        matrix = build_spectral_matrix(ctx, 30)
        vals, vecs = np.linalg.eigh(matrix.entries)
        trial = np.ones(30)
        lam1, v1 = matrix_power_method(matrix, trial)
        lam2, v2 = matrix_power_method(matrix, trial, deflate_against=[v1])
        pair_err = max(abs(lam1 - vals[-1]), abs(lam2 - vals[-2]),
                       np.linalg.norm(abs(v1 @ vecs[:, -1]) - 1), np.linalg.norm(abs(v2 @ vecs[:, -2]) - 1))
        ok = spread <= 1e-8 and pair_err <= 1e-12
        verdict(4, ok, f"engine spread {spread:.1e}, matrix power vs eigh {pair_err:.1e}")

    def test_criterion_5_inverse_identity(self, verdict):
        rng = np.random.default_rng(5)
        worst = 0.0
        for density in (Parabolic(2.0), Oscillating(0.25, 1.0)):
            for bc in BC:
                ctx = OperatorContext.build(Interval(1.0), bc, density)
                modes = sorted_modes(bc, 1.0, 6)
                h = sum(c * m(ctx.nodes) for c, m in zip(rng.standard_normal(6), modes))
                f = h / ctx.sqrt_sigma
                u = apply_inverse(ctx, f, project=bc.has_zero_mode)
                back = forward_spectral(ctx, u)
                worst = max(worst, ctx.norm(back - f) / ctx.norm(f))
        verdict(5, worst < 1e-6, f"max relative L2 error {worst:.1e} over 5 bcs x 2 densities")

    def test_criterion_6_monotonicity_and_brackets(self, verdict):
        slack = 1e-12
        bracket_slack = 1e-9
        rise, miss, runs = 0.0, 0.0, 0
        eta_drop = 0.0
        cases = [(alpha, BC.DD, None) for alpha in ALPHAS]
        cases += [(2.0, BC.DD, polynomial_ansatz), (2.0, BC.NN, lambda x: 2 * x + 1),
                  (2.0, BC.PP, lambda x: 2 * x + 1)]
        for alpha, bc, ansatz in cases:
            ctx = string_context(alpha, bc)
            start = ground_ansatz(ctx) if ansatz is None else ansatz
            rep = power_iterate(ctx, start, p_max=30, tol=None)
            runs += 1
            seq = np.array(rep.eigenvalues)
            rise = max(rise, float(np.max(np.diff(seq), initial=0.0)))
            oracle = oracle_eigenvalues(ctx)
            for value, msd in zip(rep.eigenvalues, rep.msd):
                gap = float(np.min(np.abs(oracle - value)))
                miss = max(miss, gap - msd)
            if bc is BC.DD:
                lan = lanczos_iterate(ctx, start, p_max=8, tol=None)
                runs += 1
                etas = np.array(lan.metadata["eta"])
                eta_drop = max(eta_drop, float(np.max(-np.diff(etas), initial=0.0)))
        ok = rise <= slack and eta_drop <= slack and miss <= bracket_slack
        verdict(6, ok, f"{runs} runs: max Rayleigh rise {rise:.1e}, max eta drop {eta_drop:.1e}, "
                       f"max bracket excess {miss:.1e}")

    def test_criterion_7_drum_ordering(self, verdict):
        a, b = 1.0, 0.5
        slack = 1e-9
        worst = -math.inf
        for alpha in (0.5, 1.0, 1.5, 2.0):
            rr, _ = rr_reference(a, b, alpha, 400, None)
            for beta in (0.0, beta_star(a, b, alpha)):
                b1 = bound1(a, b, alpha, beta)
                b0 = bound0(a, b, alpha, beta)
                worst = max(worst, rr - b1, b1 - b0)
        homogeneous = abs(bound0(a, b, 0.0, 0.0) - 5 * PI ** 2)
        ok = worst <= slack and homogeneous <= 1e-12
        verdict(7, ok, f"max ordering violation {worst:.2e}, |bound0(0,0) - 5 pi^2| = "
                       f"{homogeneous:.1e}")

    def test_criterion_8_oscillating_asymptotics(self, verdict):
        t0 = time.perf_counter()
        records = {}
        for bc in ("dd", "nd", "dn", "nn", "pp"):
            for eta in DEFAULT_ETAS:
                records[bc, eta] = sweep_epsilon(bc, eta, DEFAULT_EPSILONS)
        elapsed = time.perf_counter() - t0

        def residual(bc, eta, eps, phi=None):
            for r in records[bc, eta]:
                if r.epsilon == eps and r.n == 1 and (phi is None or r.phi == phi):
                    return r
            raise KeyError((bc, eta, eps, phi))

        ratio = residual("dd", 1.0, 0.1).residual / residual("dd", 1.0, 0.05).residual
        nd = residual("nd", 1.0, 0.05).E_numeric
        nd_err, nd_cap = abs(nd - PI ** 2 / 8), 2 * abs(PI / 16 * 0.05)
        flat = residual("pp", 1.0, 0.05, PI / 2)
        osc = residual("pp", 1.0, 0.05, 0.0)
        rel = max(flat.residual / flat.E_asymptotic, osc.residual / osc.E_asymptotic)
        flat_ok = abs(flat.E_asymptotic - 2 * PI ** 2) < 1e-12
        ok = ratio >= 20 and nd_err <= nd_cap and rel <= 5e-2 and flat_ok and elapsed < 300
        verdict(8, ok, f"DD residual ratio {ratio:.1f}, ND err {nd_err:.1e} <= {nd_cap:.1e}, "
                       f"PP rel err {rel:.1e}, sweep {elapsed:.1f}s")

    def test_criterion_9_shanks(self, verdict):
        A, B, r = 3.25, -1.5, 0.6
        seq = [A + B * r ** n for n in range(8)]
        table = shanks_table(seq, 1)
        exact = float(np.max(np.abs(table.levels[1] - A)))
        seqs = run_sequences()
        worst = 0.0
        for col, alpha in enumerate(ALPHAS):
            tab = shanks_table(seqs[alpha], 3)
            rows = {label: (v, ok) for label, v, ok in tab.rows()}
            for label, reference in REFERENCE_ROWS:
                if label.startswith("s"):
                    v, ok = rows[label]
                    got = v if ok else tab.best_estimate()
                    worst = max(worst, abs(got - float(reference[col])))
        ok = exact <= 1e-12 and worst <= 1e-10
        verdict(9, ok, f"geometric recovery err {exact:.1e}, accelerated rows max err {worst:.1e}")
