"""Shanks transformation and repeated application to estimate sequences."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import TooShort

# denominators below this fraction of |s_n| are treated as 0/0
INVALID_RATIO = 1e-14


def _shanks(seq, valid):
    s = np.asarray(seq, dtype=float)
    prev, cur, nxt = s[:-2], s[1:-1], s[2:]
    d1 = cur - prev
    d2 = nxt - cur
    den = d2 - d1
    ok = (valid[:-2] & valid[1:-1] & valid[2:] & (den != 0)
          & (np.abs(den) >= INVALID_RATIO * np.abs(cur)))
    out = np.full(cur.shape, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[ok] = nxt[ok] - d2[ok] ** 2 / den[ok]
    return out, ok


def shanks_once(seq: Sequence[float]) -> np.ndarray:
    """One Shanks transform, ``s_{n+1} - (s_{n+1} - s_n)^2 / (s_{n+1} - 2 s_n + s_{n-1})``.

    Entries whose second difference is negligible against ``|s_n|`` come
    back as NaN; use :func:`shanks_table` for the explicit validity mask.
    """
    s = np.asarray(seq, dtype=float)
    if s.size < 3:
        raise TooShort(f"the Shanks transform needs 3 terms, got {s.size}")
    return _shanks(s, np.isfinite(s))[0]


@dataclass
class ShanksTable:
    """``levels[0]`` is the input; ``levels[k]`` has ``len - 2k`` entries."""

    levels: List[np.ndarray] = field(default_factory=list)
    valid: List[np.ndarray] = field(default_factory=list)

    @property
    def sequence(self) -> np.ndarray:
        return self.levels[0]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def best_estimate(self) -> float:
        """Last valid entry of the deepest level that has one."""
        for vals, ok in zip(reversed(self.levels), reversed(self.valid)):
            if ok.any():
                return float(vals[np.flatnonzero(ok)[-1]])
        return float("nan")

    def best_level(self) -> int:
        for k in range(self.depth, -1, -1):
            if self.valid[k].any():
                return k
        return -1

    def rows(self, label_prefix: str = "s") -> List[tuple]:
        """``(label, value, valid)`` rows: ``O_p`` entries, then ``s^(k)_j``."""
        rows = [(f"O_{p}", float(v), bool(ok))
                for p, (v, ok) in enumerate(zip(self.levels[0], self.valid[0]), start=1)]
        for k in range(1, len(self.levels)):
            rows += [(f"{label_prefix}{k}_{j}", float(v), bool(ok))
                     for j, (v, ok) in enumerate(zip(self.levels[k], self.valid[k]), start=1)]
        return rows


def shanks_table(seq: Sequence[float], max_levels: int = 3) -> ShanksTable:
    """Apply the transform repeatedly, up to ``max_levels`` or until fewer than 3 terms remain."""
    s = np.asarray(seq, dtype=float)
    if s.size < 3:
        raise TooShort(f"the Shanks transform needs 3 terms, got {s.size}")
    table = ShanksTable([s.copy()], [np.isfinite(s)])
    while table.depth < max_levels and table.levels[-1].size >= 3:
        vals, ok = _shanks(table.levels[-1], table.valid[-1])
        table.levels.append(vals)
        table.valid.append(ok)
    return table


def tables_to_csv(columns: dict, max_levels: int = 3, fmt: str = "%.17g") -> str:
    """Table-layout CSV: one row per ``O_p`` / ``s^(k)_j`` label, one column per sequence.

    ``columns`` maps a header (e.g. ``alpha=1``) to its sequence. Invalid
    entries are written as ``nan``.
    """
    tables = {name: shanks_table(seq, max_levels) for name, seq in columns.items()}
    labels: List[str] = []
    cells = {}
    for name, tab in tables.items():
        for label, value, ok in tab.rows():
            if label not in cells:
                labels.append(label)
                cells[label] = {}
            cells[label][name] = (fmt % value) if ok else "nan"
    buf = io.StringIO()
    buf.write(",".join(["row"] + list(tables)) + "\n")
    for label in labels:
        buf.write(",".join([label] + [cells[label].get(n, "") for n in tables]) + "\n")
    return buf.getvalue()
