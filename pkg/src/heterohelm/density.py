"""Catalog of positive densities Sigma(x) for -Lap psi = E Sigma psi.

Densities are immutable value objects.  ``spec(x)`` evaluates Sigma without
checks (vectorized); :func:`eval_density` and :func:`eval_sqrt_density` are
the checked entry points that reject non-positive values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, NonPositiveDensity


class DensitySpec:
    """Base class; subclasses implement ``__call__`` and ``sqrt``."""

    kind: str = "abstract"
    dim: int = 1

    def __call__(self, x, y=None):
        raise NotImplementedError

    def sqrt(self, x, y=None):
        return np.sqrt(self(x, y))

    @property
    def feature_length(self) -> Optional[float]:
        """Shortest length scale on which Sigma varies, if it has one."""
        return None

    def to_text(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(DensitySpec):
    c: float = 1.0
    kind = "constant"

    def __post_init__(self):
        if not self.c > 0:
            raise NonPositiveDensity(f"constant density must be positive, got {self.c}")

    def __call__(self, x, y=None):
        return np.full(np.shape(x), float(self.c)) if np.ndim(x) else float(self.c)

    def sqrt(self, x, y=None):
        return np.full(np.shape(x), math.sqrt(self.c)) if np.ndim(x) else math.sqrt(self.c)

    def to_text(self):
        return f"constant:{self.c!r}"


@dataclass(frozen=True)
class Parabolic(DensitySpec):
    """Sigma(x) = (1 + alpha x)^2 on an interval centred at the origin."""

    alpha: float = 0.0
    kind = "parabolic"

    def __call__(self, x, y=None):
        return (1.0 + self.alpha * np.asarray(x, dtype=float)) ** 2

    def sqrt(self, x, y=None):
        return np.abs(1.0 + self.alpha * np.asarray(x, dtype=float))

    def to_text(self):
        return f"parabolic:alpha={self.alpha!r}"


@dataclass(frozen=True)
class Oscillating(DensitySpec):
    """Sigma(x) = 2 + sin(2 pi (x + eta/2) / epsilon), period epsilon."""

    epsilon: float = 0.1
    eta: float = 1.0
    kind = "oscillating"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")

    def __call__(self, x, y=None):
        x = np.asarray(x, dtype=float)
        return 2.0 + np.sin(2.0 * np.pi * (x + 0.5 * self.eta) / self.epsilon)

    @property
    def feature_length(self):
        return self.epsilon

    def to_text(self):
        return f"oscillating:epsilon={self.epsilon!r},eta={self.eta!r}"


@dataclass(frozen=True)
class Separable2D(DensitySpec):
    """Sigma(x, y) = x_factor(x) * y_factor(y)."""

    x_factor: DensitySpec = field(default_factory=Constant)
    y_factor: DensitySpec = field(default_factory=Constant)
    kind = "separable"
    dim = 2

    def __call__(self, x, y=None):
        return self.x_factor(x) * self.y_factor(y)

    def sqrt(self, x, y=None):
        return self.x_factor.sqrt(x) * self.y_factor.sqrt(y)

    @property
    def feature_length(self):
        scales = [s for s in (self.x_factor.feature_length, self.y_factor.feature_length) if s]
        return min(scales) if scales else None

    def to_text(self):
        return f"separable:[{self.x_factor.to_text()}]x[{self.y_factor.to_text()}]"


@dataclass(frozen=True)
class Custom(DensitySpec):
    """User-supplied pure callable; ``dim`` selects f(x) or f(x, y)."""

    evaluator: Callable = None
    dim: int = 1
    length_scale: Optional[float] = None
    name: str = "custom"
    kind = "custom"

    def __call__(self, x, y=None):
        if self.dim == 1:
            return np.asarray(self.evaluator(x), dtype=float)
        return np.asarray(self.evaluator(x, y), dtype=float)

    @property
    def feature_length(self):
        return self.length_scale

    def to_text(self):
        return f"custom:{self.name}"


def _check(values, spec):
    v = np.asarray(values, dtype=float)
    if np.any(~(v > 0)):
        raise NonPositiveDensity(f"{spec.to_text()} is not positive at the requested point(s)")
    return values


def eval_density(spec: DensitySpec, *point):
    """Checked evaluation of Sigma; raises NonPositiveDensity if Sigma <= 0."""
    return _check(spec(*point), spec)


def eval_sqrt_density(spec: DensitySpec, *point):
    _check(spec(*point), spec)
    return spec.sqrt(*point)


def check_alpha(spec: DensitySpec, a: float) -> None:
    """Parabolic densities need |alpha| <= 2/a so that 1 + alpha x >= 0."""
    if isinstance(spec, Parabolic) and abs(spec.alpha) > 2.0 / a * (1 + 1e-14):
        raise NonPositiveDensity(f"parabolic alpha={spec.alpha} exceeds 2/a={2.0 / a}")
    if isinstance(spec, Separable2D):
        check_alpha(spec.x_factor, a)


def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def parse_density(text: str) -> DensitySpec:
    """Parse ``kind:params`` strings such as ``parabolic:alpha=2`` or ``constant:1``.

    Positional values are accepted in declaration order, so
    ``oscillating:0.1,1`` equals ``oscillating:epsilon=0.1,eta=1``.
    """
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    table = {
        "constant": (Constant, ("c",)),
        "parabolic": (Parabolic, ("alpha",)),
        "oscillating": (Oscillating, ("epsilon", "eta")),
    }
    if kind not in table:
        raise ConfigError(f"unknown density kind {kind!r}; expected one of {sorted(table)}")
    cls, names = table[kind]
    kwargs = {}
    for pos, item in enumerate(p for p in rest.split(",") if p.strip()):
        key, eq, value = item.partition("=")
        if eq:
            key = key.strip().lower()
            if key not in names:
                raise ConfigError(f"{kind} has no parameter {key!r}")
            kwargs[key] = _number(value)
        else:
            if pos >= len(names):
                raise ConfigError(f"too many parameters for {kind}")
            kwargs[names[pos]] = _number(key)
    return cls(**kwargs)
