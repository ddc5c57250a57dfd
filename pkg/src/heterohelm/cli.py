"""Command-line front end: ``heterohelm {solve,table1,drum2d,sweep,selftest}``.

Every output starts with ``#`` lines recording the resolved configuration,
so an output file can be fed back through ``--config`` to reproduce it.
Exit status: 0 success, 1 configuration error, 2 numerical failure (the
partial report is still written).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, fields
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .errors import ConfigError, HelmholtzError, NumericalFailure

COMMANDS = ("solve", "table1", "drum2d", "sweep", "selftest")
METHODS = ("power", "lanczos", "block", "rr")
FORMATS = ("csv", "json-lines")
STRING_ALPHAS = (0.5, 1.0, 2.0)
DRUM_ALPHAS = (0.5, 1.0, 1.5, 2.0)
STRING_STEPS = 10


@dataclass
class RunConfig:
    """Resolved settings for one run; ``None`` list fields mean "command default"."""

    command: str = "solve"
    bc: str = "dd"
    density: str = "constant:1"
    method: str = "power"
    pmax: int = 64
    tol: float = 1e-12
    basis: Optional[int] = None
    states: int = 1
    nodes_per_panel: int = 12
    nx_max: int = 80
    length: float = 1.0
    sides: Tuple[float, float] = (1.0, 0.5)
    alpha: Optional[List[float]] = None
    beta: Optional[float] = None
    eta: List[float] = field(default_factory=lambda: [1.0])
    phi: Optional[List[float]] = None
    epsilon_grid: Optional[List[float]] = None
    out: Optional[str] = None
    format: str = "csv"

    def validate(self) -> "RunConfig":
        from .basis import BC
        from .density import parse_density

        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        try:
            BC.parse(self.bc)
        except Exception as exc:
            raise ConfigError(str(exc)) from None
        parse_density(self.density)
        checks = [
            (self.pmax >= 1, "pmax must be at least 1"),
            (self.tol >= 0, "tol must be nonnegative"),
            (self.basis is None or self.basis >= 2, "basis must be at least 2"),
            (self.states >= 1, "states must be at least 1"),
            (self.nodes_per_panel >= 2, "nodes-per-panel must be at least 2"),
            (self.nx_max >= 20, "nx-max must be at least 20"),
            (self.length > 0, "length must be positive"),
            (len(self.sides) == 2 and min(self.sides) > 0, "sides needs two positive values"),
            (all(0 < e <= 1 for e in self.epsilon_grid or ()), "epsilon values must lie in (0, 1]"),
            (len(self.eta) >= 1, "eta needs at least one value"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    def header(self) -> List[str]:
        lines = [f"# heterohelm {__version__} {self.command}"]
        for f in fields(self):
            if f.name == "out":
                continue
            lines.append(f"# {f.name.replace('_', '-')}={_render(getattr(self, f.name))}")
        return lines


def _render(value) -> str:
    if value is None:
        return "default"
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _number(kind):
    def convert(text):
        try:
            return kind(text)
        except ValueError:
            raise ConfigError(f"expected {kind.__name__}, got {text!r}") from None
    return convert


_CONVERTERS = {
    "command": str, "bc": str, "density": str, "method": str, "format": str, "out": str,
    "pmax": _number(int), "tol": _number(float), "basis": _number(int), "states": _number(int),
    "nodes_per_panel": _number(int), "nx_max": _number(int), "length": _number(float),
    "sides": lambda t: tuple(_floats(t)), "alpha": _floats, "beta": _number(float),
    "eta": _floats, "phi": _floats, "epsilon_grid": _floats,
}


def _convert(key: str, text: str):
    if key not in _CONVERTERS:
        raise ConfigError(f"unknown setting {key!r}")
    text = text.strip()
    if text == "default" and key in ("basis", "alpha", "beta", "phi", "epsilon_grid", "out"):
        return None
    return _CONVERTERS[key](text)


def read_config_file(path: str) -> dict:
    """Flat ``key=value`` lines; ``#`` lines holding ``key=value`` (an output header) count too.

    Reading stops at the first data line following a header, so a previous
    output file can be used as a config.
    """
    settings = {}
    seen_header = False
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            key, eq, value = body.partition("=")
            key = key.strip().replace("-", "_")
            if eq and key in _CONVERTERS:
                settings[key] = _convert(key, value)
                seen_header = True
            continue
        key, eq, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not eq or key not in _CONVERTERS:
            if seen_header:
                break
            raise ConfigError(f"{path}: cannot parse line {raw!r}")
        settings[key] = _convert(key, value)
    return settings


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heterohelm", description="Eigenmodes of -Lap psi = E Sigma psi.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in (("solve", "solve one eigenproblem"),
                           ("table1", "parabolic string power sequences with Shanks rows"),
                           ("drum2d", "rectangular drum bounds over an alpha grid"),
                           ("sweep", "oscillating-density asymptotics against numerics"),
                           ("selftest", "run closed-form checks")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="flat key=value file; flags override it")
        p.add_argument("--bc")
        p.add_argument("--density", help="kind:params, e.g. parabolic:alpha=2")
        p.add_argument("--method", choices=METHODS)
        p.add_argument("--pmax", type=_number(int))
        p.add_argument("--tol", type=_number(float))
        p.add_argument("--basis", type=_number(int), help="number of basis modes N")
        p.add_argument("--states", type=_number(int), help="states for block/rr/sweep")
        p.add_argument("--nodes-per-panel", type=_number(int))
        p.add_argument("--nx-max", type=_number(int))
        p.add_argument("--length", type=_number(float), help="interval length")
        p.add_argument("--sides", type=lambda t: tuple(_floats(t)), help="drum sides a,b")
        p.add_argument("--alpha", type=_floats, help="comma-separated alpha values")
        p.add_argument("--beta", type=_number(float))
        p.add_argument("--eta", type=_floats)
        p.add_argument("--phi", type=_floats)
        p.add_argument("--epsilon-grid", type=_floats)
        p.add_argument("--out")
        p.add_argument("--format", choices=FORMATS)
    return parser


def resolve_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    settings = read_config_file(args.config) if args.config else {}
    settings.pop("command", None)
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            settings[f.name] = value
    settings["command"] = args.command
    return RunConfig(**settings).validate()


# ---------------------------------------------------------------------------
# commands


def _context(cfg: RunConfig, density=None):
    from .basis import Interval
    from .density import parse_density
    from .operators import OperatorContext

    density = density or parse_density(cfg.density)
    return OperatorContext.build(Interval(cfg.length), cfg.bc, density, order=cfg.nodes_per_panel)


def _ansatz(ctx, n: int = 1):
    from .basis import BC, sorted_modes

    if ctx.bc is BC.PP and n == 1:
        first, second = sorted_modes(ctx.bc, ctx.domain.a, 2)
        return ctx.sqrt_sigma * (first(ctx.nodes) + 0.7 * second(ctx.nodes))
    m = sorted_modes(ctx.bc, ctx.domain.a, n)[n - 1]
    return ctx.sqrt_sigma * m(ctx.nodes)


def run_solve(cfg: RunConfig):
    from .solvers import block_iterate, lanczos_iterate, power_iterate, rr_matrix_solve

    ctx = _context(cfg)
    if cfg.method == "rr":
        N = cfg.basis or 40
        pairs = rr_matrix_solve(ctx, N, k=min(cfg.states, N))
        return ["n", "eigenvalue"], [[n, e] for n, (e, _) in enumerate(pairs, start=1)], None
    if cfg.method == "block":
        reps = block_iterate(ctx, [_ansatz(ctx, n) for n in range(1, cfg.states + 1)],
                             cfg.pmax, cfg.tol)
        rows = [[j, p, e, d] for j, r in enumerate(reps, start=1)
                for p, (e, d) in enumerate(zip(r.eigenvalues, r.msd), start=1)]
        failed = None if all(r.converged for r in reps) else "block iteration did not converge"
        return ["member", "p", "eigenvalue", "msd"], rows, failed
    solver = power_iterate if cfg.method == "power" else lanczos_iterate
    rep = solver(ctx, _ansatz(ctx), cfg.pmax, cfg.tol)
    rows = [[p, e, d] for p, (e, d) in enumerate(zip(rep.eigenvalues, rep.msd), start=1)]
    failed = None if rep.converged else f"{cfg.method} did not converge in {cfg.pmax} steps"
    return ["p", "eigenvalue", "msd"], rows, failed


def run_table1(cfg: RunConfig):
    from .accel import shanks_table
    from .basis import BC, Interval, Mode
    from .density import Parabolic
    from .operators import OperatorContext
    from .solvers import power_iterate

    alphas = cfg.alpha or list(STRING_ALPHAS)
    tables = {}
    for alpha in alphas:
        density = Parabolic(alpha)
        ctx = OperatorContext.build(Interval(1.0), BC.DD, density, order=cfg.nodes_per_panel)
        ground = Mode(BC.DD, 1.0, 1)
        # a fixed count of steps; the table is the object of interest, not a converged value
        rep = power_iterate(ctx, density.sqrt(ctx.nodes) * ground(ctx.nodes), STRING_STEPS, tol=None)
        tables[alpha] = shanks_table(rep.eigenvalues, 3)
    labels = [label for label, _, _ in tables[alphas[0]].rows()]
    rows = []
    for i, label in enumerate(labels):
        row = [label]
        for alpha in alphas:
            _, value, ok = tables[alpha].rows()[i]
            row.append(value if ok else math.nan)
        rows.append(row)
    return ["row"] + [f"alpha={_render(float(a))}" for a in alphas], rows, None


def run_drum2d(cfg: RunConfig):
    from .drum2d import FIG_COLUMNS, bound0, bound1, figure_rows

    a, b = cfg.sides
    alphas = cfg.alpha or list(DRUM_ALPHAS)
    records = figure_rows(alphas, a, b, cfg.nx_max, N=cfg.basis or 400)
    columns = list(FIG_COLUMNS)
    if cfg.beta is not None:
        columns += ["bound0_beta", "bound1_beta"]
        for rec in records:
            rec["bound0_beta"] = bound0(a, b, rec["alpha"], cfg.beta)
            rec["bound1_beta"] = bound1(a, b, rec["alpha"], cfg.beta, cfg.nx_max)
    return columns, [[rec[c] for c in columns] for rec in records], None


def run_sweep(cfg: RunConfig):
    from .asymptotics import DEFAULT_EPSILONS, SWEEP_COLUMNS, sweep_epsilon

    grid = cfg.epsilon_grid or list(DEFAULT_EPSILONS)
    rows = []
    for eta in cfg.eta:
        for rec in sweep_epsilon(cfg.bc, eta, grid, N=cfg.basis, phi=cfg.phi, n_states=cfg.states):
            rows.append([getattr(rec, c) for c in SWEEP_COLUMNS])
    return list(SWEEP_COLUMNS), rows, None


def run_selftest(cfg: RunConfig):
    from .selftest import run_selftest as checks

    rows = [[name, "PASS" if ok else "FAIL", msg] for name, ok, msg in checks()]
    failed = None if all(r[1] == "PASS" for r in rows) else "selftest failures"
    return ["check", "status", "message"], rows, failed


RUNNERS = {"solve": run_solve, "table1": run_table1, "drum2d": run_drum2d, "sweep": run_sweep,
           "selftest": run_selftest}


def _cell(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def format_output(cfg: RunConfig, columns, rows, status: Optional[str] = None) -> str:
    lines = cfg.header()
    if status:
        lines.append(f"# status={status}")
    if cfg.format == "csv":
        lines.append(",".join(columns))
        lines += [",".join(_cell(v) for v in row) for row in rows]
    else:
        lines += [json.dumps({c: _json_value(v) for c, v in zip(columns, row)}) for row in rows]
    return "\n".join(lines) + "\n"


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(cfg: RunConfig) -> int:
    """Execute a validated config; returns the process exit status."""
    try:
        columns, rows, failure = RUNNERS[cfg.command](cfg)
    except NumericalFailure as exc:
        partial = getattr(exc, "report", None)
        rows = []
        if partial is not None and hasattr(partial, "eigenvalues"):
            rows = [[p, e, d] for p, (e, d) in enumerate(zip(partial.eigenvalues, partial.msd), 1)]
        _emit(cfg, format_output(cfg, ["p", "eigenvalue", "msd"], rows, f"failed: {exc}"))
        print(f"heterohelm: numerical failure: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"heterohelm: configuration error: {exc}", file=sys.stderr)
        return 1
    except HelmholtzError as exc:
        if isinstance(exc, ValueError):
            print(f"heterohelm: configuration error: {exc}", file=sys.stderr)
            return 1
        raise
    _emit(cfg, format_output(cfg, columns, rows, f"failed: {failure}" if failure else None))
    if failure:
        print(f"heterohelm: {failure}", file=sys.stderr)
        return 2
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = resolve_config(argv)
    except ConfigError as exc:
        print(f"heterohelm: configuration error: {exc}", file=sys.stderr)
        return 1
    except HelmholtzError as exc:
        print(f"heterohelm: configuration error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
