"""Small-period expansions for the string with density 2 + sin(2 pi (x + eta/2) / eps).

Formulas are for the unit interval and are compared against Rayleigh-Ritz
eigenvalues by :func:`sweep_epsilon`. The DN formulas follow from the ND
ones through the reflection ``x -> -x``, which maps ``(eps, eta)`` to
``(-eps, -eta)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .basis import BC, Interval
from .density import Oscillating
from .errors import ConfigError, ResolutionTooLow, UnsupportedModel
from .operators import Engine, OperatorContext

PI = math.pi
DEFAULT_EPSILONS = (0.2, 0.15, 0.1, 0.075, 0.05)
DEFAULT_ETAS = (0.0, 0.5, 1.0)
FLAT_PHI = PI / 2
OSCILLATING_PHI = 0.0
MIN_BASIS = 101

_MAX_ORDER = {BC.DD: 5, BC.ND: 1, BC.DN: 1, BC.NN: 1, BC.PP: 1}


@dataclass(frozen=True)
class AsymptoticModel:
    """One entry of the expansion catalog.

    ``n`` counts states from 1. ``order`` is the highest power of eps kept;
    ``None`` means the highest available (5 for the DD ground state, 3 for
    DD excited states, 1 otherwise). ``phi`` mixes the two degenerate
    periodic modes and is required for PP.
    """

    bc: BC
    n: int = 1
    phi: Optional[float] = None
    order: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "bc", BC.parse(self.bc))
        if self.n < 1:
            raise UnsupportedModel(f"state index starts at 1, got {self.n}")
        if self.bc in (BC.NN, BC.PP) and self.n != 1:
            raise UnsupportedModel(f"{self.bc.name} expansions cover the lowest nonzero state only")
        if self.bc is BC.PP and self.phi is None:
            raise UnsupportedModel("the PP expansion needs a mixing angle phi")
        top = self.max_order
        if self.order is not None and not 0 <= self.order <= top:
            raise UnsupportedModel(f"{self.bc.name} n={self.n} is available to order {top}")

    @property
    def max_order(self) -> int:
        if self.bc is BC.DD:
            return 5 if self.n == 1 else 3
        return _MAX_ORDER[self.bc]

    @property
    def effective_order(self) -> int:
        return self.max_order if self.order is None else self.order

    @property
    def homogeneous_limit(self) -> float:
        """Homogeneous eigenvalue divided by the mean density 2."""
        if self.bc is BC.DD:
            return PI ** 2 * self.n ** 2 / 2
        if self.bc in (BC.ND, BC.DN):
            return PI ** 2 * (2 * self.n - 1) ** 2 / 8
        if self.bc is BC.NN:
            return PI ** 2 / 2
        return 2 * PI ** 2


def _sum_orders(terms, order):
    return sum(value for power, value in terms if power <= order)


def _nd_terms(n, eps, eta):
    m2 = (1 - 2 * n) ** 2
    return [(0, PI ** 2 * m2 / 8), (1, -PI / 16 * eps * m2 * math.cos(PI * (1 - eta) / eps))]


def eval_asymptotic(model: AsymptoticModel, epsilon: float, eta: float) -> float:
    """Expansion value at period ``epsilon`` and phase ``eta``."""
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    return _eval(model, epsilon, eta)


def _eval(model, eps, eta):
    n, order = model.n, model.effective_order
    s1 = math.sin(PI / eps) * math.sin(PI * eta / eps)
    if model.bc is BC.DD:
        if n == 1:
            terms = [(0, PI ** 2 / 2), (2, -PI ** 2 * eps ** 2 / 64), (3, PI * eps ** 3 / 4 * s1),
                     (4, -15 * PI ** 2 * eps ** 4 / 1024),
                     (5, PI * eps ** 5 / 512 * (116 * s1 + 5 * math.sin(2 * PI / eps)
                                                * math.cos(2 * PI * eta / eps)))]
        else:
            n4 = n ** 4
            terms = [(0, PI ** 2 * n * n / 2), (2, -PI ** 2 * eps ** 2 * n4 / 64),
                     (3, PI * eps ** 3 * n4 / 4 * s1)]
        return _sum_orders(terms, order)
    if model.bc is BC.ND:
        return _sum_orders(_nd_terms(n, eps, eta), order)
    if model.bc is BC.DN:
        # reflection of the ND result; the ND formula is used at (-eps, -eta)
        return _sum_orders(_nd_terms(n, -eps, -eta), order)
    if model.bc is BC.NN:
        return _sum_orders([(0, PI ** 2 / 2), (1, -PI * eps / 2 * s1)], order)
    cos2 = math.cos(model.phi) ** 2
    return _sum_orders([(0, 2 * PI ** 2), (1, -2 * PI * eps * s1 * cos2)], order)


def reduced_msd_pp(phi: float) -> float:
    """``|cos phi| sqrt(pi^4 - 45 cos 2phi - 45)``, the phi-dependence of the PP spread."""
    return abs(math.cos(phi)) * math.sqrt(PI ** 4 - 45 * math.cos(2 * phi) - 45)


def _root(value):
    # leading-order radicands are nonnegative; clip round-off only
    return math.sqrt(max(value, 0.0))


def eval_msd_asymptotic(bc, k: int, epsilon: float, eta: float, n: int = 1,
                        phi: Optional[float] = None) -> float:
    """Leading-order mean-square deviation after ``k`` iterations.

    Supported: DD (k=1 any n, k=2 ground), ND and DN (k=1 any n, k=2
    ground), NN (k=1), PP (k=1, needs ``phi``).
    """
    bc = BC.parse(bc)
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    eps = epsilon
    if bc is BC.DD:
        if k == 1:
            return math.sqrt(7) / 64 * PI ** 2 * eps ** 2 * n ** 4
        if k == 2 and n == 1:
            p6 = PI ** 6
            a, b = 30240 - 31 * p6, 16 * p6 - 15120
            inner = (a * math.cos(2 * PI * eta / eps) + b * math.cos(2 * PI / eps - 2 * PI * eta / eps)
                     + b * math.cos(2 * PI * eta / eps + 2 * PI / eps) + a * math.cos(2 * PI / eps)
                     + 32 * p6 - 30240)
            return PI * eps ** 3 / (96 * math.sqrt(210)) * _root(inner)
    elif bc in (BC.ND, BC.DN):
        if bc is BC.DN:
            eps_, eta_ = -eps, -eta
        else:
            eps_, eta_ = eps, eta
        amp = abs(eps_ * math.cos(PI * (eta_ - 1) / eps_))
        if k == 1:
            m2 = (1 - 2 * n) ** 2
            return PI * m2 / (64 * math.sqrt(6)) * _root(PI ** 4 * m2 * m2 - 96) * amp
        if k == 2 and n == 1:
            return amp * PI / 768 * _root(17 * PI ** 8 / 70 - 2304)
    elif bc is BC.NN:
        if k == 1 and n == 1:
            p4 = PI ** 4
            c = math.cos
            inner = (-360 * c(2 * PI * (eta - 1) / eps) + (720 - 7 * p4) * c(2 * PI * eta / eps)
                     + c(2 * PI / eps) * (8 * p4 * c(2 * PI * eta / eps) - 7 * p4 + 720)
                     + 8 * (-45 * c(2 * PI * (eta + 1) / eps) + p4 - 90))
            return PI * eps / (48 * math.sqrt(5)) * _root(inner)
    elif bc is BC.PP:
        if phi is None:
            raise UnsupportedModel("the PP spread needs a mixing angle phi")
        if k == 1 and n == 1:
            s1 = math.sin(PI / eps) * math.sin(PI * eta / eps)
            return (math.sqrt(2 / 5) * PI / 3 * abs(eps * math.cos(phi) * s1)
                    * _root(PI ** 4 - 45 * math.cos(2 * phi) - 45))
    raise UnsupportedModel(f"no spread formula for {bc.name}, k={k}, n={n}")


def excited_validity_bound(epsilon: float) -> float:
    """States with ``n`` well below ``1.25 / sqrt(eps)`` are described by the DD excited formula."""
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    return 1.25 / math.sqrt(epsilon)


# ---------------------------------------------------------------------------
# sweeps


SWEEP_COLUMNS = ("bc", "eta", "phi", "epsilon", "n", "E_numeric", "E_asymptotic", "residual",
                 "msd_asymptotic")


@dataclass
class SweepRecord:
    bc: str
    eta: float
    phi: float
    epsilon: float
    n: int
    E_numeric: float
    E_asymptotic: float
    residual: float
    msd_asymptotic: float

    def as_dict(self) -> dict:
        return asdict(self)


def basis_size_for(epsilon: float, N: Optional[int] = None) -> int:
    """Default basis ``max(101, ceil(4/eps))``; an explicit ``N`` below ``2/eps`` is rejected."""
    if N is None:
        return max(MIN_BASIS, math.ceil(4.0 / epsilon - 1e-9))
    if N < 2.0 / epsilon:
        raise ResolutionTooLow(f"N={N} cannot resolve period {epsilon}; need N >= {2.0 / epsilon:g}")
    return int(N)


def numeric_eigenvalues(bc, epsilon: float, eta: float, count: int, N: Optional[int] = None):
    """Lowest ``count`` nonzero eigenvalues from the WInv Rayleigh-Ritz engine."""
    from .solvers import rr_matrix_solve

    size = basis_size_for(epsilon, N)
    ctx = OperatorContext.build(Interval(1.0), bc, Oscillating(epsilon, eta))
    return [e for e, _ in rr_matrix_solve(ctx, size, Engine.WINV, k=count)]


def second_opinion(bc, epsilon: float, eta: float, p_max: int = 400) -> float:
    """Ground (lowest nonzero) eigenvalue from kernel power iteration."""
    from .basis import Mode, sorted_modes
    from .solvers import power_iterate

    bc = BC.parse(bc)
    ctx = OperatorContext.build(Interval(1.0), bc, Oscillating(epsilon, eta))
    first = sorted_modes(bc, 1.0, 1)[0]
    if bc is BC.PP:
        # a generic mix of both lowest periodic modes
        second = Mode(bc, 1.0, 1, 2)
        ansatz = lambda x: ctx.density.sqrt(x) * (first(x) + 0.7 * second(x))  # noqa: E731
    else:
        ansatz = lambda x: ctx.density.sqrt(x) * first(x)  # noqa: E731
    return power_iterate(ctx, ansatz, p_max=p_max).eigenvalue


def _assign_pp(numeric, phis, eps, eta):
    out = []
    for phi in phis:
        asym = _eval(AsymptoticModel(BC.PP, 1, phi), eps, eta)
        out.append((phi, min(numeric, key=lambda e: abs(e - asym)), asym))
    return out


def _sweep_point(bc, eta, eps, n_states, phis, N):
    records = []
    if bc is BC.PP:
        numeric = numeric_eigenvalues(bc, eps, eta, 2, N)
        for phi, num, asym in _assign_pp(numeric, phis, eps, eta):
            msd = eval_msd_asymptotic(bc, 1, eps, eta, 1, phi)
            records.append(SweepRecord(bc.name, eta, phi, eps, 1, num, asym, abs(num - asym), msd))
        return records
    count = 1 if bc is BC.NN else n_states
    if bc is BC.DD:
        cap = excited_validity_bound(eps)
        count = max(1, min(count, math.ceil(cap) - 1))
    numeric = numeric_eigenvalues(bc, eps, eta, count, N)
    for n, num in enumerate(numeric, start=1):
        asym = _eval(AsymptoticModel(bc, n), eps, eta)
        k = 2 if n == 1 and bc in (BC.DD, BC.ND, BC.DN) else 1
        msd = eval_msd_asymptotic(bc, k, eps, eta, n)
        records.append(SweepRecord(bc.name, eta, math.nan, eps, n, num, asym, abs(num - asym), msd))
    return records


def thread_count(limit: Optional[int] = None) -> int:
    """Worker count: ``limit``, else ``HH_THREADS``, else the CPU count."""
    if limit is None:
        env = os.environ.get("HH_THREADS")
        if env:
            try:
                limit = int(env)
            except ValueError:
                raise ConfigError(f"HH_THREADS must be an integer, got {env!r}") from None
        else:
            limit = os.cpu_count() or 1
    if limit < 1:
        raise ConfigError(f"thread count must be positive, got {limit}")
    return limit


def sweep_epsilon(bc, eta: float, epsilons: Sequence[float] = DEFAULT_EPSILONS,
                  N: Optional[int] = None, phi: Optional[Iterable[float]] = None,
                  n_states: int = 1, threads: Optional[int] = None) -> List[SweepRecord]:
    """Numeric versus asymptotic eigenvalues over an eps grid.

    For PP each ``phi`` (default: the oscillating branch 0 and the flat
    branch pi/2) is matched to the closer of the two lowest nonzero numeric
    eigenvalues. For DD the number of states is capped below
    :func:`excited_validity_bound`. Records come back in grid order.
    """
    bc = BC.parse(bc)
    eps_list = [float(e) for e in epsilons]
    for e in eps_list:
        if not 0 < e <= 1:
            raise ConfigError(f"epsilon values must lie in (0, 1], got {e}")
        basis_size_for(e, N)
    phis = tuple(phi) if phi is not None else (OSCILLATING_PHI, FLAT_PHI)
    workers = min(thread_count(threads), len(eps_list)) or 1
    job = lambda e: _sweep_point(bc, eta, e, n_states, phis, N)  # noqa: E731
    if workers == 1:
        chunks = [job(e) for e in eps_list]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(job, eps_list))
    return [r for chunk in chunks for r in chunk]
