"""Composite Gauss-Legendre panel rules with spectral cumulative integration.

A :class:`PanelRule` tiles ``[lo, hi]`` with panels carrying ``order``
Gauss-Legendre nodes each.  Besides plain integration it provides the
indefinite integral of the panel-wise polynomial interpolant at every node,
which is what lets kernels with a kink on the diagonal be applied without
losing the high order of the rule.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L

DEFAULT_ORDER = 12


@lru_cache(maxsize=None)
def _reference(order: int):
    tau, w = L.leggauss(order)
    # S[i, l] = integral from -1 to tau_i of the l-th Lagrange basis polynomial
    coeffs = np.linalg.inv(L.legvander(tau, order - 1))
    S = np.empty((order, order))
    for l in range(order):
        S[:, l] = L.legval(tau, L.legint(coeffs[:, l], lbnd=-1))
    tau.setflags(write=False)
    w.setflags(write=False)
    S.setflags(write=False)
    return tau, w, S


class PanelRule:
    """Composite Gauss-Legendre rule over ``breaks[0] .. breaks[-1]``."""

    def __init__(self, breaks, order: int = DEFAULT_ORDER):
        breaks = np.asarray(breaks, dtype=float)
        if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0):
            raise ValueError("panel breaks must be strictly increasing")
        if order < 2:
            raise ValueError("need at least two nodes per panel")
        self.breaks = breaks
        self.order = order
        tau, w, S = _reference(order)
        self.half = 0.5 * np.diff(breaks)
        mid = 0.5 * (breaks[1:] + breaks[:-1])
        self.nodes = (mid[:, None] + self.half[:, None] * tau[None, :]).ravel()
        self.weights = (self.half[:, None] * w[None, :]).ravel()
        self._S = S

    @property
    def n_panels(self) -> int:
        return self.breaks.size - 1

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def lo(self) -> float:
        return float(self.breaks[0])

    @property
    def hi(self) -> float:
        return float(self.breaks[-1])

    def integrate(self, values, axis: int = -1):
        return np.tensordot(values, self.weights, axes=([axis], [0]))

    def cumulative(self, values):
        """Integral from ``lo`` to each node of the panel-wise interpolant.

        ``values`` may carry leading batch dimensions; the last axis runs over
        the nodes.
        """
        v = np.asarray(values, dtype=float)
        batch = v.shape[:-1]
        v = v.reshape(batch + (self.n_panels, self.order))
        local = np.einsum("il,...pl->...pi", self._S, v) * self.half[:, None]
        totals = np.einsum("...pl,l->...p", v, _reference(self.order)[1]) * self.half
        offsets = np.cumsum(totals, axis=-1) - totals
        return (local + offsets[..., None]).reshape(batch + (self.size,))

    def cumulative_from_right(self, values):
        """Integral from each node to ``hi``.

        Built from within-panel pieces plus suffix sums rather than
        ``total - cumulative``, so a rapidly decaying integrand keeps its
        relative accuracy near ``hi``.
        """
        v = np.asarray(values, dtype=float)
        batch = v.shape[:-1]
        v = v.reshape(batch + (self.n_panels, self.order))
        totals = np.einsum("...pl,l->...p", v, _reference(self.order)[1]) * self.half
        local = totals[..., None] - np.einsum("il,...pl->...pi", self._S, v) * self.half[:, None]
        after = np.cumsum(totals[..., ::-1], axis=-1)[..., ::-1] - totals
        return (local + after[..., None]).reshape(batch + (self.size,))

    def __repr__(self):
        return f"PanelRule([{self.lo}, {self.hi}], panels={self.n_panels}, order={self.order})"


def make_rule(lo: float, hi: float, order: int = DEFAULT_ORDER, max_width=None,
              min_panels: int = 16, breakpoints=()) -> PanelRule:
    """Uniform panels no wider than ``max_width``, split at ``breakpoints``."""
    length = hi - lo
    n = max(min_panels, 1)
    if max_width is not None and max_width > 0:
        n = max(n, math.ceil(length / max_width - 1e-12))
    breaks = np.linspace(lo, hi, n + 1)
    extra = [b for b in breakpoints if lo < b < hi]
    if extra:
        breaks = np.unique(np.concatenate([breaks, extra]))
        keep = np.concatenate([[True], np.diff(breaks) > 1e-12 * length])
        breaks = breaks[keep]
        breaks[-1] = hi
    return PanelRule(breaks, order)


def panel_width_for(length: float, feature_length=None, wavenumber: float = 0.0,
                    order: int = DEFAULT_ORDER, min_panels: int = 16) -> float:
    """Panel width resolving a density feature scale and an oscillation wavenumber.

    Panels are kept at or below a quarter of the density's feature length,
    and narrow enough that ``wavenumber * width <= order / 3`` which keeps a
    12-point rule at round-off for trigonometric integrands.
    """
    width = length / min_panels
    if feature_length:
        width = min(width, feature_length / 4.0)
    if wavenumber > 0:
        width = min(width, order / (3.0 * wavenumber))
    return width
