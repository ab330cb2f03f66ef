"""Batch front end: ``python3 -m sl2lyap COMMAND [options]``.

Exit status: 0 on success (warnings are embedded in the output), 2 on a
configuration error, 3 when no closed form or expansion applies.
"""
from __future__ import annotations

import argparse
import io
import itertools
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from . import model_maps
from .closed_form import FAMILY_NAMES, UnsupportedFamilyError, omega_closed
from .coeffs import PARAM_NAMES, DisorderModel, build_coefficients, classify_zeros, structural_family
from .fp_solver import DegenerateDiffusionError, gamma_from_density, rice_residual, stationary_density
from .monte_carlo import McConfig, StepSizeError, sde_generators, simulate_product, simulate_sde
from .perturbation import PoleError, omega2, omega4, omega_weak
from .sl2 import DomainError

COMMANDS = ("omega", "classify", "expand", "mc", "sde", "fp", "validate", "scan")
ROUTES = ("closed", "fp", "mc", "sde", "expand")
CSV_HEADER = "param,value,gamma,j,family,route,stderr_gamma,stderr_j"
EXIT_CONFIG = 2
EXIT_UNSUPPORTED = 3

# Preset name -> (builder, default keyword arguments).  The ZD presets also
# carry the offset between the exponent of M and that of the raw product A.
PRESETS = {
    "hyperbolic_bm": (lambda eps: (model_maps.hyperbolic_bm_model(eps), None), {"eps": 0.5}),
    "zd_example1": (lambda sigma2: model_maps.zd_to_model(model_maps.zd_example1(sigma2)),
                    {"sigma2": 1.0}),
    "zd_example2": (lambda sigma2: model_maps.zd_to_model(model_maps.zd_example2(sigma2)),
                    {"sigma2": 1.0}),
    "elliptic_equal": (lambda d: (DisorderModel.from_params(D_aa=d, D_ww=d), None), {"d": 1.0}),
}


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------ configuration

@dataclass(frozen=True)
class ModelSource:
    """Either a preset with keyword arguments or explicit means and covariance."""

    preset: Optional[str] = None
    preset_args: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def keys(self) -> set[str]:
        return set(self.preset_args) | set(PARAM_NAMES)

    def build(self, overrides: Optional[dict] = None) -> tuple[DisorderModel, Optional[float]]:
        overrides = dict(overrides or {})
        unknown = set(overrides) - self.keys()
        if unknown:
            raise ConfigError(f"unknown parameter(s) {sorted(unknown)}")
        if self.preset is not None:
            builder, _ = PRESETS[self.preset]
            args = {k: overrides.pop(k, v) for k, v in self.preset_args.items()}
            model, offset = builder(**args)
        else:
            model, offset = DisorderModel.from_params(**self.params), None
        if overrides:
            model = model.replace(**overrides)
        return model, offset


def _number(x: Any, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{what} must be a number, got {x!r}")
    return float(x)


def parse_config(data: Any) -> ModelSource:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    preset = data.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        _, defaults = PRESETS[preset]
        extra = set(data) - {"preset"} - set(defaults)
        if extra:
            raise ConfigError(f"preset {preset!r} does not take {sorted(extra)}")
        args = {k: _number(data.get(k, v), k) for k, v in defaults.items()}
        return ModelSource(preset=preset, preset_args=args)
    extra = set(data) - {"means", "cov"}
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    means = data.get("means", {})
    if not isinstance(means, dict) or set(means) - {"alpha", "w", "u"}:
        raise ConfigError('"means" must be an object with keys among alpha, w, u')
    cov = data.get("cov", [[0.0] * 3] * 3)
    if not (isinstance(cov, list) and len(cov) == 3
            and all(isinstance(r, list) and len(r) == 3 for r in cov)):
        raise ConfigError('"cov" must be a 3x3 array ordered (alpha, w, u)')
    c = [[_number(x, "cov entry") for x in row] for row in cov]
    params = {k: _number(means.get(k, 0.0), k) for k in ("alpha", "w", "u")}
    params.update(D_aa=c[0][0], D_ww=c[1][1], D_uu=c[2][2], D_aw=c[0][1], D_au=c[0][2],
                  D_wu=c[1][2])
    if c[1][0] != c[0][1] or c[2][0] != c[0][2] or c[2][1] != c[1][2]:
        raise ConfigError('"cov" must be symmetric')
    return ModelSource(params=params)


def _parse_assignment(text: str) -> tuple[str, str]:
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"expected PARAM=VALUE, got {text!r}")
    return key.strip(), val.strip()


def parse_sweep(text: str) -> tuple[str, np.ndarray]:
    key, spec = _parse_assignment(text)
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"sweep must be PARAM=START:STOP:N, got {text!r}")
    try:
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"bad sweep range {spec!r}") from exc
    if n < 2:
        raise ConfigError("sweep count must be at least 2")
    return key, np.linspace(start, stop, n)


# ------------------------------------------------------------ serialization

def _fmt(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def to_json(obj: Any) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits, complex as [re, im]."""
    buf = io.StringIO()

    def emit(o: Any, depth: int) -> None:
        pad = "  " * (depth + 1)
        if isinstance(o, dict):
            if not o:
                buf.write("{}")
                return
            buf.write("{\n")
            for i, k in enumerate(sorted(o)):
                buf.write(pad + json.dumps(str(k)) + ": ")
                emit(o[k], depth + 1)
                buf.write(",\n" if i + 1 < len(o) else "\n")
            buf.write("  " * depth + "}")
        elif isinstance(o, (list, tuple, np.ndarray)):
            items = list(o)
            if not items:
                buf.write("[]")
                return
            buf.write("[")
            for i, v in enumerate(items):
                emit(v, depth + 1)
                if i + 1 < len(items):
                    buf.write(", ")
            buf.write("]")
        elif o is None or isinstance(o, (bool, np.bool_)):
            buf.write(json.dumps(None if o is None else bool(o)))
        elif isinstance(o, (int, np.integer)):
            buf.write(str(int(o)))
        elif isinstance(o, (float, np.floating)):
            buf.write(_fmt(float(o)))
        elif isinstance(o, (complex, np.complexfloating)):
            emit([float(o.real), float(o.imag)], depth)
        else:
            buf.write(json.dumps(str(o)))

    emit(obj, 0)
    buf.write("\n")
    return buf.getvalue()


def _csv_cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return _fmt(x) if math.isfinite(x) else ""
    return str(x)


def to_csv(rows: Sequence[dict]) -> str:
    cols = CSV_HEADER.split(",")
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join(_csv_cell(r.get(c)) for c in cols))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ routes

@dataclass
class RouteOptions:
    order: int = 4
    seed: int = 0
    replicas: int = 8
    steps: int = 1_000_000
    scale: float = 1e-2
    dt: Optional[float] = None
    workers: int = 1
    grid: int = 4096


def _family(m: DisorderModel) -> str:
    try:
        return omega_closed(m).family
    except UnsupportedFamilyError:
        return "unsupported"


def _sde_dt(m: DisorderModel, opts: RouteOptions) -> float:
    if opts.dt is not None:
        return opts.dt
    A, B = sde_generators(m)
    a = float(np.abs(A).max())
    b2 = float(sum(np.abs(x).max() ** 2 for x in B))
    dt = 1e-3
    if a > 0:
        dt = min(dt, 0.02 / a)
    if b2 > 0:
        dt = min(dt, 0.05 / b2)
    return dt


def run_route(m: DisorderModel, route: str, opts: RouteOptions) -> dict:
    """One route on one model: gamma, j, family, stderrs (None for deterministic routes)."""
    out: dict[str, Any] = {"route": route, "stderr_gamma": None, "stderr_j": None}
    if route == "closed":
        e = omega_closed(m)
        out.update(gamma=e.gamma, j=e.j, family=e.family)
        return out
    out["family"] = _family(m)
    if route == "expand":
        om = omega_weak(m, opts.order)
        out.update(gamma=om.real, j=om.imag / math.pi, order=opts.order)
    elif route == "fp":
        d = stationary_density(m, opts.grid)
        out.update(gamma=gamma_from_density(m, d), j=d.j, method=d.method,
                   normalization_error=d.normalization_error, rice_residual=rice_residual(m, d))
    elif route == "mc":
        cfg = McConfig(n_steps=opts.steps, n_replicas=opts.replicas, seed=opts.seed,
                       continuum_scale=opts.scale, workers=opts.workers)
        est = simulate_product(m, cfg)
        out.update(gamma=est.gamma, j=est.j, stderr_gamma=est.gamma_stderr,
                   stderr_j=est.j_stderr, continuum_scale=opts.scale, samples=est.n_samples)
    elif route == "sde":
        dt = _sde_dt(m, opts)
        cfg = McConfig(n_steps=opts.steps, n_replicas=opts.replicas, seed=opts.seed, dt=dt,
                       workers=opts.workers)
        est, _ = simulate_sde(m, cfg)
        out.update(gamma=est.gamma, j=est.j, stderr_gamma=est.gamma_stderr,
                   stderr_j=est.j_stderr, dt=dt)
    else:
        raise ConfigError(f"unknown route {route!r}")
    return out


def _omega_record(m: DisorderModel, offset: Optional[float]) -> dict:
    e = omega_closed(m)
    rec = {"family": e.family, "family_name": FAMILY_NAMES[e.family], "gamma": e.gamma,
           "j": e.j, "omega": e.omega, "argument": e.argument, "indices": e.indices,
           "reflected": e.reflected}
    if e.meta.get("analytic_continuation"):
        rec["warnings"] = ["exponents outside Re a1, Re a2 > 0: analytically continued"]
    if offset is not None:
        rec["zd_offset"] = offset
        rec["Gamma"] = e.omega + offset
    return rec


def _classify_record(m: DisorderModel) -> dict:
    c = build_coefficients(m)
    z = classify_zeros(c, m)
    rec: dict[str, Any] = {
        "label": z.label, "structural": structural_family(m),
        "zeros": [("inf" if y is None else y) for y in z.zeros],
        "multiplicities": list(z.multiplicities), "real_zero": z.real_zero,
    }
    if z.exponents is not None:
        rec["exponents"] = list(z.exponents)
    try:
        e = omega_closed(m)
        rec["family"] = FAMILY_NAMES[e.family]
        rec["route_family"] = e.family
    except UnsupportedFamilyError as exc:
        rec["family"] = None
        rec["warnings"] = [str(exc)]
    return rec


def _expand_record(m: DisorderModel, order: int) -> dict:
    rec: dict[str, Any] = {"order": order, "omega_0": m.mu()}
    if order >= 2:
        rec["omega_2"] = omega2(m)
    if order >= 4:
        rec["omega_4"] = omega4(m)
    om = omega_weak(m, order)
    rec.update(omega=om, gamma=om.real, j=om.imag / math.pi)
    return rec


def _validate_record(m: DisorderModel, opts: RouteOptions) -> dict:
    results: dict[str, dict] = {}
    warn: list[str] = []
    for route in ROUTES:
        try:
            results[route] = run_route(m, route, opts)
        except (UnsupportedFamilyError, PoleError, DegenerateDiffusionError, StepSizeError) as exc:
            warn.append(f"{route}: {exc}")
    deltas = {}
    for a, b in itertools.combinations(results, 2):
        ra, rb = results[a], results[b]
        deltas[f"{a}-{b}"] = abs(complex(ra["gamma"] - rb["gamma"], math.pi * (ra["j"] - rb["j"])))
    rec: dict[str, Any] = {"routes": results, "pairwise_delta": deltas,
                           "max_delta": max(deltas.values()) if deltas else None}
    if warn:
        rec["warnings"] = warn
    return rec


def _model_record(m: DisorderModel) -> dict:
    return m.params()


# ------------------------------------------------------------ entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sl2lyap", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH", help="JSON model file")
    src.add_argument("--model", metavar="JSON", help="inline JSON model")
    src.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--set", action="append", default=[], metavar="PARAM=VALUE",
                   help="override a model or preset parameter (repeatable)")
    p.add_argument("--route", choices=ROUTES, default="closed", help="route used by scan")
    p.add_argument("--order", type=int, choices=(0, 2, 4), default=4)
    p.add_argument("--sweep", metavar="PARAM=START:STOP:N")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicas", type=int, default=8)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--scale", type=float, default=1e-2,
                   help="continuum scale for the mc route (per-step law = scale * model)")
    p.add_argument("--dt", type=float, default=None, help="sde step (default: from the model)")
    p.add_argument("--grid", type=int, default=4096, help="fp grid size")
    p.add_argument("--workers", type=int, default=1)
    return p


def _load_source(args: argparse.Namespace) -> ModelSource:
    if args.preset:
        return parse_config({"preset": args.preset})
    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        elif args.model:
            data = json.loads(args.model)
        else:
            raise ConfigError("one of --config, --model or --preset is required")
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(data)


def _overrides(items: Sequence[str]) -> dict:
    out = {}
    for it in items:
        k, v = _parse_assignment(it)
        try:
            out[k] = float(v)
        except ValueError as exc:
            raise ConfigError(f"bad value in {it!r}") from exc
    return out


def run(args: argparse.Namespace) -> tuple[int, str]:
    source = _load_source(args)
    base = _overrides(args.set)
    if args.steps < 1000 or args.replicas < 2 or args.workers < 1 or args.grid < 16:
        raise ConfigError("need --steps >= 1000, --replicas >= 2, --workers >= 1, --grid >= 16")
    if args.scale <= 0:
        raise ConfigError("--scale must be positive")
    if args.dt is not None and args.dt <= 0:
        raise ConfigError("--dt must be positive")
    opts = RouteOptions(order=args.order, seed=args.seed, replicas=args.replicas,
                        steps=args.steps, scale=args.scale, dt=args.dt, workers=args.workers,
                        grid=args.grid)

    if args.command == "scan":
        if not args.sweep:
            raise ConfigError("scan needs --sweep PARAM=START:STOP:N")
        key, values = parse_sweep(args.sweep)
        if key not in source.keys():
            raise ConfigError(f"cannot sweep unknown parameter {key!r}")
        models = [source.build({**base, key: float(v)})[0] for v in values]

        def one(iv):
            i, m = iv
            try:
                r = run_route(m, args.route, opts)
            except (UnsupportedFamilyError, PoleError, DegenerateDiffusionError,
                    StepSizeError) as exc:
                r = {"route": args.route, "gamma": float("nan"), "j": float("nan"),
                     "family": "unsupported", "warning": str(exc)}
            r.update(param=key, value=float(values[i]))
            return r

        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            rows = list(pool.map(one, enumerate(models)))
        if args.format == "csv":
            return 0, to_csv(rows)
        return 0, to_json({"command": "scan", "param": key, "route": args.route, "rows": rows})

    if args.sweep:
        raise ConfigError("--sweep is only valid with scan")
    m, offset = source.build(base)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.command == "omega":
            rec = _omega_record(m, offset)
            rec["route"] = "closed"
        elif args.command == "classify":
            rec = _classify_record(m)
        elif args.command == "expand":
            rec = _expand_record(m, args.order)
            rec["route"] = "expand"
        elif args.command in ("mc", "sde", "fp"):
            rec = run_route(m, args.command, opts)
        else:
            rec = _validate_record(m, opts)
    if caught:
        rec.setdefault("warnings", []).extend(sorted({str(w.message) for w in caught}))
    rec["command"] = args.command
    rec["model"] = _model_record(m)
    if args.format == "csv":
        row = {"param": "", "value": None, "gamma": rec.get("gamma"), "j": rec.get("j"),
               "family": rec.get("family", rec.get("route_family")),
               "route": rec.get("route", args.command),
               "stderr_gamma": rec.get("stderr_gamma"), "stderr_j": rec.get("stderr_j")}
        if args.command in ("classify", "validate"):
            raise ConfigError(f"{args.command} has no CSV form; use --format json")
        return 0, to_csv([row])
    return 0, to_json(rec)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        status, text = run(args)
    except (UnsupportedFamilyError, PoleError, DegenerateDiffusionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (ConfigError, DomainError, StepSizeError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status
