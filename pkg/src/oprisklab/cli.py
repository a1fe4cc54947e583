"""Command-line driver: flag parsing, experiment orchestration, CSV/JSON output.

Commands
--------
phase-diagram    curve values lambda_A..lambda_D on a rho grid
schedule         (mu_N, t_N, rho_N) table for a parameter schedule
simulate         moment/quantile estimates of the bank loss at one N
fluctuations     normalized-fluctuation study across an N list
diversification  VaR ratio study across an N list
correlation      cell-pair correlation study across an N list

Configuration comes from flags, optionally seeded by ``--config file.json``
(same keys as the long flag names; flags override the file; unknown keys are
rejected).  Every table is written as CSV (default) or as a JSON object with
``config``, ``rows``, ``seed`` and ``version`` keys; re-running a command
with the embedded config reproduces the rows exactly.  Exit codes: 0 on
success, 2 on validation errors, 3 on numerical failures, 4 on I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import importlib.metadata
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

from .errors import ConfigError, DomainError, NumericalError, PreconditionError
from .invariance import Schedule, ScheduleMode, phase_grid
from .montecarlo import (
    ModelSpec,
    correlation_study,
    dr_study,
    fluctuation_study,
    simulate_bank_loss,
)
from .severity import SeverityFamily

try:
    _VERSION = importlib.metadata.version("oprisklab")
except importlib.metadata.PackageNotFoundError:  # pragma: no cover - dev tree
    _VERSION = "0.0.0"

_DEFAULT_SEED = 0x5EED0001

_MODEL_KEYS = ("rho", "lambda", "family", "weibull-c", "schedule", "a", "b", "c0")

_COMMAND_KEYS: Mapping[str, tuple[str, ...]] = {
    "phase-diagram": ("rho-min", "rho-max", "steps", "exponent-printed-forms"),
    "schedule": _MODEL_KEYS + ("n-list",),
    "simulate": _MODEL_KEYS + ("q", "n", "reps", "seed"),
    "fluctuations": _MODEL_KEYS + ("n-list", "reps", "seed"),
    "diversification": _MODEL_KEYS + ("q", "n-list", "reps", "seed", "eq15-printed-sign"),
    "correlation": _MODEL_KEYS + ("n-list", "reps", "seed"),
}

_DEFAULTS: Mapping[str, object] = {
    "rho": 2.0,
    "lambda": 2.0,
    "family": "gaussian",
    "weibull-c": None,
    "schedule": "exact-normalized",
    "a": 1.0,
    "b": 1.0,
    "c0": 0.0,
    "q": 0.99,
    "n": 1,
    "n-list": (256, 1024, 4096),
    "reps": 10000,
    "seed": _DEFAULT_SEED,
    "rho-min": 1.5,
    "rho-max": 4.0,
    "steps": 251,
    "eq15-printed-sign": False,
    "exponent-printed-forms": False,
}

_SCHEDULE_MODES = {mode.value: mode for mode in ScheduleMode}


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one CLI run.

    ``params`` maps the long flag names of the command to their resolved
    values (model fields, n/n-list, reps, seed, report flags); ``output``,
    ``format`` and ``workers`` are runtime knobs that never enter the
    reproducibility echo.
    """

    command: str
    params: Mapping[str, object]
    output: str | None = None
    format: str = "csv"
    workers: int | None = None


def _dest(key: str) -> str:
    return "lam" if key == "lambda" else key.replace("-", "_")


def _add_key(parser: argparse.ArgumentParser, key: str) -> None:
    flag = "--" + key
    dest = _dest(key)
    if key in ("eq15-printed-sign", "exponent-printed-forms"):
        parser.add_argument(flag, dest=dest, action="store_true", default=None)
    elif key in ("steps", "n", "reps", "seed"):
        parser.add_argument(flag, dest=dest, type=int, default=None)
    elif key in ("family", "schedule", "n-list"):
        parser.add_argument(flag, dest=dest, type=str, default=None)
    else:
        parser.add_argument(flag, dest=dest, type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oprisk",
        description="Scale-invariant loss-aggregation studies (tables as CSV/JSON).",
    )
    parser.add_argument("--version", action="version", version=f"oprisk {_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, keys in _COMMAND_KEYS.items():
        p = sub.add_parser(command)
        for key in keys:
            _add_key(p, key)
        p.add_argument("--config", type=str, default=None, help="JSON file with the same keys")
        p.add_argument("-o", "--output", type=str, default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--workers", type=int, default=None)
    return parser


def _as_int(key: str, value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    try:
        out = int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from exc
    if isinstance(value, float) and value != out:
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return out


def _as_float(key: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} must be a number, got {value!r}") from exc


def _as_bool(key: str, value: object) -> bool:
    if isinstance(value, bool):
        return value
    raise ConfigError(f"{key} must be a boolean, got {value!r}")


def _as_int_list(key: str, value: object) -> tuple[int, ...]:
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
        if not parts:
            raise ConfigError(f"{key} must be a non-empty comma-separated integer list")
        return tuple(_as_int(key, p.strip()) for p in parts)
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError(f"{key} must be non-empty")
        return tuple(_as_int(key, v) for v in value)
    raise ConfigError(f"{key} must be an integer list, got {value!r}")


def _normalize(key: str, value: object) -> object:
    if value is None:
        return None
    if key in ("eq15-printed-sign", "exponent-printed-forms"):
        return _as_bool(key, value)
    if key == "n-list":
        return _as_int_list(key, value)
    if key in ("steps", "n", "reps", "seed"):
        return _as_int(key, value)
    if key in ("family", "schedule"):
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}")
        return value
    return _as_float(key, value)


def _load_config_file(path: str, command: str) -> dict[str, object]:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            raw = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    allowed = set(_COMMAND_KEYS[command]) | {"command"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    declared = raw.pop("command", None)
    if declared is not None and declared != command:
        raise ConfigError(f"config file declares command {declared!r}, invoked {command!r}")
    return raw


def _resolve_params(command: str, ns: argparse.Namespace) -> dict[str, object]:
    params: dict[str, object] = {key: _DEFAULTS[key] for key in _COMMAND_KEYS[command]}
    if ns.config is not None:
        for key, value in _load_config_file(ns.config, command).items():
            params[key] = _normalize(key, value)
    for key in _COMMAND_KEYS[command]:
        cli_value = getattr(ns, _dest(key))
        if cli_value is not None:
            params[key] = _normalize(key, cli_value)
    return params


def _severity_family(params: Mapping[str, object]) -> SeverityFamily:
    name = params["family"]
    rho = float(params["rho"])  # type: ignore[arg-type]
    if name == "gaussian":
        if rho != 2.0:
            raise ConfigError(f"gaussian severities fix rho = 2, got {rho}")
        return SeverityFamily.gaussian()
    if name == "weibull":
        c = params.get("weibull-c")
        return SeverityFamily.weibull(rho, None if c is None else float(c))  # type: ignore[arg-type]
    raise ConfigError(f"family must be 'gaussian' or 'weibull', got {name!r}")


def _schedule_obj(params: Mapping[str, object]) -> Schedule:
    mode_name = params["schedule"]
    mode = _SCHEDULE_MODES.get(str(mode_name))
    if mode is None:
        raise ConfigError(
            f"schedule must be one of {sorted(_SCHEDULE_MODES)}, got {mode_name!r}"
        )
    return Schedule(
        mode=mode,
        family=_severity_family(params),
        lam=float(params["lambda"]),  # type: ignore[arg-type]
        a=float(params["a"]),  # type: ignore[arg-type]
        b=float(params["b"]),  # type: ignore[arg-type]
        c0=float(params["c0"]),  # type: ignore[arg-type]
    )


def _model_spec(params: Mapping[str, object]) -> ModelSpec:
    schedule = _schedule_obj(params)
    q = float(params.get("q", 0.99))  # type: ignore[arg-type]
    return ModelSpec(family=schedule.family, schedule=schedule, q=q)


def _effective_workers(workers: int | None) -> int | None:
    if workers is not None:
        return workers
    env = os.environ.get("OPRISK_WORKERS", "").strip()
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"OPRISK_WORKERS must be an integer, got {env!r}") from exc
    return None


def _run_phase_diagram(cfg: RunConfig) -> list[dict[str, object]]:
    rows = phase_grid(
        float(cfg.params["rho-min"]),  # type: ignore[arg-type]
        float(cfg.params["rho-max"]),  # type: ignore[arg-type]
        int(cfg.params["steps"]),  # type: ignore[arg-type]
        printed=bool(cfg.params["exponent-printed-forms"]),
    )
    return [asdict(r) for r in rows]


def _run_schedule(cfg: RunConfig) -> list[dict[str, object]]:
    schedule = _schedule_obj(cfg.params)
    rows = []
    for n in cfg.params["n-list"]:  # type: ignore[union-attr]
        values = schedule.evaluate(int(n))
        rows.append({"N": int(n), "mu_N": values.mu, "t_N": values.t, "rho_N": values.rho_n})
    return rows


def _run_simulate(cfg: RunConfig) -> list[dict[str, object]]:
    spec = _model_spec(cfg.params)
    est = simulate_bank_loss(
        spec,
        int(cfg.params["n"]),  # type: ignore[arg-type]
        int(cfg.params["reps"]),  # type: ignore[arg-type]
        int(cfg.params["seed"]),  # type: ignore[arg-type]
        workers=_effective_workers(cfg.workers),
    )
    value, se = est.quantiles[spec.q]
    return [
        {
            "N": est.n,
            "mean": est.mean,
            "mean_se": est.mean_se,
            "variance": est.variance,
            "variance_se": est.variance_se,
            "quantile_level": spec.q,
            "quantile": value,
            "quantile_se": se,
            "overflow": est.overflow,
        }
    ]


def _study_args(cfg: RunConfig) -> tuple[ModelSpec, tuple[int, ...], int, int, int | None]:
    spec = _model_spec(cfg.params)
    n_list = tuple(int(n) for n in cfg.params["n-list"])  # type: ignore[union-attr]
    return (
        spec,
        n_list,
        int(cfg.params["reps"]),  # type: ignore[arg-type]
        int(cfg.params["seed"]),  # type: ignore[arg-type]
        _effective_workers(cfg.workers),
    )


def _run_fluctuations(cfg: RunConfig) -> list[dict[str, object]]:
    spec, n_list, reps, seed, workers = _study_args(cfg)
    return [asdict(r) for r in fluctuation_study(spec, n_list, reps, seed, workers)]


def _run_diversification(cfg: RunConfig) -> list[dict[str, object]]:
    spec, n_list, reps, seed, workers = _study_args(cfg)
    return [asdict(r) for r in dr_study(spec, n_list, reps, seed, workers)]


def _run_correlation(cfg: RunConfig) -> list[dict[str, object]]:
    spec, n_list, reps, seed, workers = _study_args(cfg)
    return [asdict(r) for r in correlation_study(spec, n_list, reps, seed, workers)]


_HANDLERS = {
    "phase-diagram": _run_phase_diagram,
    "schedule": _run_schedule,
    "simulate": _run_simulate,
    "fluctuations": _run_fluctuations,
    "diversification": _run_diversification,
    "correlation": _run_correlation,
}


def _json_safe(value: object) -> object:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _render_csv(rows: Sequence[Mapping[str, object]]) -> str:
    if not rows:
        return ""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(rows[0].keys())
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else str(v) for v in row.values()])
    return buffer.getvalue()


def _render_json(cfg: RunConfig, rows: Sequence[Mapping[str, object]]) -> str:
    config_echo: dict[str, object] = {"command": cfg.command}
    for key in _COMMAND_KEYS[cfg.command]:
        config_echo[key] = cfg.params[key]
    payload = {
        "config": _json_safe(config_echo),
        "rows": [_json_safe(dict(r)) for r in rows],
        "seed": cfg.params.get("seed"),
        "version": _VERSION,
    }
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    start = time.perf_counter()
    try:
        rows = _HANDLERS[cfg.command](cfg)
        text = _render_json(cfg, rows) if cfg.format == "json" else _render_csv(rows)
        if cfg.output is None:
            sys.stdout.write(text)
        else:
            with open(cfg.output, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
    except (ConfigError, DomainError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    elapsed = time.perf_counter() - start
    seed = cfg.params.get("seed")
    seed_text = str(seed) if seed is not None else "-"
    target = cfg.output if cfg.output is not None else "-"
    print(
        f"{cfg.command}: rows={len(rows)} output={target} "
        f"elapsed={elapsed:.2f}s seed={seed_text}"
    )
    return 0


def entrypoint(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        params = _resolve_params(ns.command, ns)
        workers = ns.workers
        if workers is not None and workers < 1:
            raise ConfigError(f"workers must be at least 1, got {workers}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    cfg = RunConfig(
        command=ns.command,
        params=params,
        output=ns.output,
        format=ns.format,
        workers=workers,
    )
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(entrypoint())
