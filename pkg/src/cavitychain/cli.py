"""Command-line front end: flat key=value configs in, CSV plus a run manifest out.

Four commands share one config schema:

``evolve``
    integrate a single trajectory and write its sampled observables
``bottleneck``
    grid-scan input rate against output rate for the time to reach a target
    sink population
``dat``
    grid-scan output rate against dephasing strength for the sink population
    at a fixed time
``sweep``
    the general two-axis scan the other two commands specialize

Every CSV is written alongside exactly one ``<prefix>.manifest.json`` whose
``config`` field parses back to the same resolved run, so a finished run can
be rerun from its own manifest.
"""

from __future__ import annotations

import argparse
import json
import sys
import time as _time
import warnings
from dataclasses import dataclass

from . import __version__
from .evolution import POSITIVITY_FLOOR, TrajectoryRecord, evolve
from .experiments import (
    DEFAULT_DT,
    DEFAULT_T_MAX,
    DEFAULT_TARGET,
    SinkAtTime,
    SweepAxis,
    SweepResult,
    SweepSpec,
    TimeToReach,
    bottleneck_scan,
    dat_scan,
    default_g_grid,
    default_rate_grid,
    run_sweep,
)
from .model import (
    ChainConfig,
    DephasingModel,
    DephasingTarget,
    InitialState,
    SinkCoupling,
)
from .modes import QuantaWindow


class ConfigError(ValueError):
    """Raised for malformed or contradictory configuration text."""


_FLOAT_KEYS = (
    "k",
    "mu",
    "g",
    "omega_a",
    "omega_p",
    "omega_g",
    "rate_in",
    "rate_out",
    "cavity_loss",
    "objective_time",
)
_INT_KEYS = ("n_atoms", "max_quanta", "phonon_cap")
_ENUM_KEYS = {
    "dephasing": DephasingModel,
    "sink_coupling": SinkCoupling,
    "dephasing_target": DephasingTarget,
    "initial_state": InitialState,
}
# long-form spellings tolerated on input, never emitted
_ENUM_ALIASES = {
    "dephasing": {"unitaryphonon": "unitary", "lindbladlike": "lindblad"},
}
_AXIS_KEYS = ("axis1_param", "axis1_values", "axis2_param", "axis2_values")
# ChainConfig fields settable directly from config keys (window is assembled)
_CHAIN_KEYS = ("n_atoms",) + _FLOAT_KEYS[:-1] + tuple(_ENUM_KEYS)
_OBJECTIVE_KINDS = ("time_to_reach", "sink_at_time")
_ALL_KEYS = frozenset(
    _FLOAT_KEYS + _INT_KEYS + tuple(_ENUM_KEYS) + _AXIS_KEYS + ("objective",)
)


@dataclass(frozen=True)
class RunSetup:
    """Everything a config file can say: the chain plus optional sweep parts."""

    chain: ChainConfig
    axis1: SweepAxis | None = None
    axis2: SweepAxis | None = None
    objective_kind: str | None = None
    objective_time: float | None = None


def _tokenize(text: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for token in line.split():
            if "=" not in token:
                raise ConfigError(
                    f"line {lineno}: expected key=value, got {token!r}"
                )
            key, value = token.split("=", 1)
            pairs.append((key, value))
    return pairs


def _parse_float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {raw!r}") from None
    if not (value == value and abs(value) != float("inf")):
        raise ConfigError(f"{key}: must be finite, got {raw!r}")
    return value


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: not an integer: {raw!r}") from None


def _parse_enum(key: str, raw: str):
    kind = _ENUM_KEYS[key]
    token = raw.lower()
    token = _ENUM_ALIASES.get(key, {}).get(token, token)
    try:
        return kind(token)
    except ValueError:
        options = "|".join(member.value for member in kind)
        raise ConfigError(f"{key}: expected one of {options}, got {raw!r}") from None


def _parse_values(key: str, raw: str) -> tuple[float, ...]:
    parts = [part for part in raw.split(",") if part != ""]
    if not parts:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers")
    return tuple(_parse_float(key, part) for part in parts)


def parse_config(text: str) -> RunSetup:
    """Parse flat ``key=value`` text ('#' comments) into a resolved RunSetup.

    Errors name the offending key.  Keys may share a line; each may appear
    once.  ``n_atoms`` is required; everything else has a documented default.
    """
    values: dict[str, object] = {}
    for key, raw in _tokenize(text):
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown key: {key}")
        if key in values:
            raise ConfigError(f"duplicate key: {key}")
        if key in _FLOAT_KEYS:
            values[key] = _parse_float(key, raw)
        elif key in _INT_KEYS:
            values[key] = _parse_int(key, raw)
        elif key in _ENUM_KEYS:
            values[key] = _parse_enum(key, raw)
        elif key in ("axis1_values", "axis2_values"):
            values[key] = _parse_values(key, raw)
        elif key == "objective":
            if raw not in _OBJECTIVE_KINDS:
                raise ConfigError(
                    f"objective: expected one of {'|'.join(_OBJECTIVE_KINDS)}, got {raw!r}"
                )
            values[key] = raw
        else:
            values[key] = raw

    if "n_atoms" not in values:
        raise ConfigError("n_atoms is required")

    chain_kwargs = {key: values[key] for key in _CHAIN_KEYS if key in values}
    if "max_quanta" in values or "phonon_cap" in values:
        rate_in = values.get("rate_in", 0.0)
        n_atoms = values["n_atoms"]
        default_max = 2 * n_atoms + 1 if rate_in > 0 else 1
        try:
            chain_kwargs["window"] = QuantaWindow(
                0,
                values.get("max_quanta", default_max),
                values.get("phonon_cap", 1),
            )
        except ValueError as exc:
            key = "max_quanta" if "max_quanta" in values else "phonon_cap"
            raise ConfigError(f"{key}: {exc}") from None
    try:
        chain = ChainConfig(**chain_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    axes = []
    for prefix in ("axis1", "axis2"):
        param = values.get(f"{prefix}_param")
        axis_values = values.get(f"{prefix}_values")
        if param is None and axis_values is None:
            axes.append(None)
            continue
        if param is None or axis_values is None:
            raise ConfigError(
                f"{prefix}_param and {prefix}_values must be given together"
            )
        try:
            axes.append(SweepAxis(param, axis_values))
        except ValueError as exc:
            raise ConfigError(f"{prefix}: {exc}") from None
    if axes[0] is None and axes[1] is not None:
        raise ConfigError("axis2_param requires axis1_param")

    objective_kind = values.get("objective")
    objective_time = values.get("objective_time")
    if objective_kind == "sink_at_time" and objective_time is None:
        raise ConfigError("objective_time is required when objective=sink_at_time")
    if objective_time is not None and objective_time <= 0:
        raise ConfigError("objective_time: must be > 0")

    setup = RunSetup(
        chain=chain,
        axis1=axes[0],
        axis2=axes[1],
        objective_kind=objective_kind,
        objective_time=objective_time,
    )
    if (
        chain.dephasing is DephasingModel.UNITARY_PHONON
        and chain.g == 0.0
    ):
        warnings.warn(
            "dephasing=unitary with g=0: phonons are present but decoupled",
            UserWarning,
            stacklevel=2,
        )
    return setup


def serialize_run(setup: RunSetup) -> str:
    """Emit config text that parses back to an equal RunSetup."""
    chain = setup.chain
    lines = [f"n_atoms={chain.n_atoms}"]
    for key in _FLOAT_KEYS[:-1]:
        lines.append(f"{key}={getattr(chain, key)!r}")
    for key in _ENUM_KEYS:
        lines.append(f"{key}={getattr(chain, key).value}")
    lines.append(f"max_quanta={chain.window.max_quanta}")
    lines.append(f"phonon_cap={chain.window.phonon_cap}")
    for prefix, axis in (("axis1", setup.axis1), ("axis2", setup.axis2)):
        if axis is not None:
            lines.append(f"{prefix}_param={axis.param}")
            joined = ",".join(repr(v) for v in axis.values)
            lines.append(f"{prefix}_values={joined}")
    if setup.objective_kind is not None:
        lines.append(f"objective={setup.objective_kind}")
    if setup.objective_time is not None:
        lines.append(f"objective_time={setup.objective_time!r}")
    return "\n".join(lines) + "\n"


def _format(value: float) -> str:
    return format(float(value), ".12g")


def write_trajectory_csv(record: TrajectoryRecord, path: str) -> None:
    n = record.n_sites
    header = (
        ["time", "sink"]
        + [f"photon_{i}" for i in range(1, n + 1)]
        + [f"exciton_{i}" for i in range(1, n + 1)]
        + ["trace", "min_eig_flag"]
    )
    flags = record.positivity_flags(POSITIVITY_FLOOR)
    with open(path, "w", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in range(record.times.shape[0]):
            cells = [_format(record.times[row]), _format(record.sink[row])]
            cells += [_format(x) for x in record.photon[row]]
            cells += [_format(x) for x in record.exciton[row]]
            cells.append(_format(record.trace[row]))
            cells.append(str(int(flags[row])))
            handle.write(",".join(cells) + "\n")


def write_sweep_csv(result: SweepResult, path: str) -> None:
    spec = result.spec
    two_axes = spec.axis2 is not None
    header = ["axis1", "axis2", "value", "capped"] if two_axes else [
        "axis1",
        "value",
        "capped",
    ]
    with open(path, "w", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for i, a1 in enumerate(spec.axis1.values):
            for j in range(result.grid.shape[1]):
                cells = [_format(a1)]
                if two_axes:
                    cells.append(_format(spec.axis2.values[j]))
                cells.append(_format(result.grid[i, j]))
                cells.append(str(int(result.cap_mask[i, j])))
                handle.write(",".join(cells) + "\n")


def _write_manifest(
    path: str,
    command: str,
    setup: RunSetup,
    dt: float,
    duration: float,
    max_trace_drift: float,
    min_eigenvalue: float,
) -> None:
    manifest = {
        "command": command,
        "config": serialize_run(setup),
        "dt": dt,
        "version": __version__,
        "duration_seconds": duration,
        "max_trace_drift": max_trace_drift,
        "min_eigenvalue_seen": min_eigenvalue,
    }
    with open(path, "w", newline="\n") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")


def _load_setup(path: str) -> RunSetup:
    with open(path, encoding="utf-8") as handle:
        return parse_config(handle.read())


def _resolve_objective(setup: RunSetup, args) -> TimeToReach | SinkAtTime:
    kind = setup.objective_kind or "time_to_reach"
    if kind == "time_to_reach":
        return TimeToReach(target=args.target, t_max=args.t_max)
    return SinkAtTime(setup.objective_time)


def _emit_sweep(command, args, setup, spec, runner) -> int:
    started = _time.perf_counter()
    result = runner(spec, workers=args.workers)
    duration = _time.perf_counter() - started
    write_sweep_csv(result, f"{args.out}.csv")
    _write_manifest(
        f"{args.out}.manifest.json",
        command,
        setup,
        spec.dt,
        duration,
        result.max_trace_drift,
        result.min_eigenvalue_seen,
    )
    return 0


def cmd_evolve(args) -> int:
    setup = _load_setup(args.config)
    started = _time.perf_counter()
    record = evolve(
        setup.chain, t_end=args.t_max, dt=args.dt, sample_every=args.sample_every
    )
    duration = _time.perf_counter() - started
    write_trajectory_csv(record, f"{args.out}.csv")
    _write_manifest(
        f"{args.out}.manifest.json",
        "evolve",
        setup,
        args.dt,
        duration,
        record.max_trace_drift,
        record.min_eigenvalue_seen,
    )
    return 0


def cmd_bottleneck(args) -> int:
    setup = _load_setup(args.config)
    axis1 = setup.axis1 or SweepAxis("rate_in", default_rate_grid())
    axis2 = setup.axis2 or SweepAxis("rate_out", default_rate_grid())
    spec = SweepSpec(
        base=setup.chain,
        axis1=axis1,
        axis2=axis2,
        objective=TimeToReach(target=args.target, t_max=args.t_max),
        dt=args.dt,
    )
    return _emit_sweep("bottleneck", args, setup, spec, bottleneck_scan)


def cmd_dat(args) -> int:
    setup = _load_setup(args.config)
    if setup.objective_time is None:
        raise ConfigError("objective_time is required for the dat command")
    axis1 = setup.axis1 or SweepAxis("rate_out", default_rate_grid())
    axis2 = setup.axis2 or SweepAxis("g", default_g_grid())
    spec = SweepSpec(
        base=setup.chain,
        axis1=axis1,
        axis2=axis2,
        objective=SinkAtTime(setup.objective_time),
        dt=args.dt,
    )
    return _emit_sweep("dat", args, setup, spec, dat_scan)


def cmd_sweep(args) -> int:
    setup = _load_setup(args.config)
    if setup.axis1 is None:
        raise ConfigError("axis1_param/axis1_values are required for the sweep command")
    spec = SweepSpec(
        base=setup.chain,
        axis1=setup.axis1,
        axis2=setup.axis2,
        objective=_resolve_objective(setup, args),
        dt=args.dt,
    )

    def runner(spec, workers):
        return run_sweep(spec, workers=workers)

    return _emit_sweep("sweep", args, setup, spec, runner)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavitychain",
        description="Excitation transport in dissipative cavity-atom chains.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, sweepy: bool) -> None:
        p.add_argument("--config", required=True, help="key=value config file")
        p.add_argument("--out", required=True, help="output path prefix")
        p.add_argument("--dt", type=float, default=DEFAULT_DT)
        p.add_argument("--t-max", type=float, default=DEFAULT_T_MAX)
        p.add_argument("--target", type=float, default=DEFAULT_TARGET)
        if sweepy:
            p.add_argument("--workers", type=int, default=1)

    p_evolve = sub.add_parser("evolve", help="integrate one trajectory")
    common(p_evolve, sweepy=False)
    p_evolve.add_argument("--sample-every", type=int, default=1)
    p_evolve.set_defaults(func=cmd_evolve)

    p_bottleneck = sub.add_parser(
        "bottleneck", help="scan input rate x output rate for time-to-target"
    )
    common(p_bottleneck, sweepy=True)
    p_bottleneck.set_defaults(func=cmd_bottleneck)

    p_dat = sub.add_parser(
        "dat", help="scan output rate x dephasing strength for sink population"
    )
    common(p_dat, sweepy=True)
    p_dat.set_defaults(func=cmd_dat)

    p_sweep = sub.add_parser("sweep", help="general two-axis scan")
    common(p_sweep, sweepy=True)
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dt <= 0:
        parser.error("--dt must be > 0")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
