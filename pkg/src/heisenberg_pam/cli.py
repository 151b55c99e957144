"""Command line front end: ``heisenberg-pam <command> [flags]``.

Configuration is layered: built-in defaults, then a JSON file given by
``--config``, then explicit flags. Every run writes one artifact, CSV with
``#`` header lines or a JSON object with ``meta`` and ``data`` keys, whose
header echoes the full configuration and the library version. Apart from
the optional ``--timings`` entry the artifact bytes depend only on the
command and configuration.

Exit codes: 0 success, 1 a computation raised a flag or failed a check,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, HeisenbergError

__all__ = ["RunConfig", "COMMANDS", "dispatch", "main"]

RANDOMIZED = {"bm-sample", "noise-sample", "moments-fk", "moments-smooth", "mild-solve", "verify-all"}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration shared by all commands."""

    n: int = 1
    alpha: float = 0.75
    t_values: tuple[float, ...] = (1.0,)
    samples: int = 10_000
    steps: int = 128
    seed: int | None = None
    output_path: str | None = None
    format: str = "json"
    point: tuple[float, ...] = (0.0, 0.0, 0.0)
    mollify_eps: float = 0.1
    beta: float = 0.1
    m_tail: int = 4000
    timings: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError("n", f"must be a positive integer, got {self.n!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ConfigError("alpha", f"must be positive, got {self.alpha!r}")
        if not self.t_values or any(not (math.isfinite(t) and t > 0) for t in self.t_values):
            raise ConfigError("t_values", "must be a nonempty list of positive reals")
        if self.samples < 1:
            raise ConfigError("samples", "must be >= 1")
        if self.steps < 1:
            raise ConfigError("steps", "must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format", f"must be csv or json, got {self.format!r}")
        if len(self.point) != 2 * self.n + 1:
            raise ConfigError("point", f"needs {2 * self.n + 1} coordinates for n={self.n}")
        if self.mollify_eps < 0:
            raise ConfigError("mollify_eps", "must be nonnegative")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("timings")
        d["t_values"] = list(self.t_values)
        d["point"] = list(self.point)
        return d


# --- artifact writing ---------------------------------------------------------------


def _jsonable(v: Any) -> Any:
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, tuple):
        return list(v)
    return v


def _render(command: str, cfg: RunConfig, rows: list[dict], flags: list[str], runtime_ms: float | None) -> str:
    meta = {"command": command, "version": __version__, "config": cfg.echo(), "flags": sorted(set(flags))}
    if runtime_ms is not None:
        meta["runtime_ms"] = runtime_ms
    rows = [{k: _jsonable(v) for k, v in r.items()} for r in rows]
    if cfg.format == "json":
        return json.dumps({"meta": meta, "data": rows}, indent=2, sort_keys=True, default=_jsonable) + "\n"
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}: {json.dumps(meta[key], sort_keys=True)}\n")
    cols: list[str] = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


# --- commands --------------------------------------------------------------------------

Result = tuple[list[dict], list[str]]


def _alpha_gate(cfg: RunConfig, lo: float, hi: float) -> None:
    if not lo < cfg.alpha < hi:
        raise ConfigError("alpha", f"alpha outside ({lo:g}, {hi:g}) required by this command, got {cfg.alpha:g}")


def _cmd_group_check(cfg: RunConfig) -> Result:
    from . import group

    rng = np.random.default_rng(0 if cfg.seed is None else cfg.seed)
    p, q, r = (rng.normal(size=(256, 2 * cfg.n + 1)) for _ in range(3))
    e = np.zeros(2 * cfg.n + 1)
    assoc = float(np.max(np.abs(group.mul_arr(group.mul_arr(p, q), r) - group.mul_arr(p, group.mul_arr(q, r)))))
    inv = float(np.max(np.abs(group.mul_arr(p, group.inv_arr(p)) - e)))
    lam = 1.7
    hom = float(
        np.max(np.abs(group.dil_arr(lam, group.mul_arr(p, q)) - group.mul_arr(group.dil_arr(lam, p), group.dil_arr(lam, q))))
    )
    gauge = float(np.max(np.abs(group.gauge_arr(group.dil_arr(lam, p)) - lam * group.gauge_arr(p))))
    rows = [
        {"check": "associativity", "max_deviation": assoc},
        {"check": "inverse", "max_deviation": inv},
        {"check": "dilation_homomorphism", "max_deviation": hom},
        {"check": "gauge_homogeneity", "max_deviation": gauge},
    ]
    flags = [f"{r['check']}_failed" for r in rows if r["max_deviation"] > 1e-9]
    return rows, flags


def _cmd_bm_sample(cfg: RunConfig) -> Result:
    from .brownian import sample_endpoints

    rows = []
    for t in cfg.t_values:
        pts = sample_endpoints(cfg.n, t, cfg.steps, cfg.samples, cfg.seed)
        for i, p in enumerate(pts):
            rows.append({"t": t, "index": i, "point": p})
    return rows, []


def _cmd_heat_eval(cfg: RunConfig) -> Result:
    from .group import GroupPoint
    from .heat_kernel import eval_pt

    q = GroupPoint.from_array(cfg.point)
    rows, flags = [], []
    for t in cfg.t_values:
        v = eval_pt(t, q)
        rows.append({"t": t, "point": list(cfg.point), "value": v.value, "est_error": v.est_error, "method": v.method})
        flags += list(v.flags)
    return rows, flags


def _cmd_green_eval(cfg: RunConfig) -> Result:
    from .green import eval_G
    from .group import GroupPoint

    q = GroupPoint.from_array(cfg.point)
    if not 0 < cfg.alpha < cfg.n + 1:
        raise ConfigError("alpha", f"alpha outside (0, {cfg.n + 1}) required by green-eval, got {cfg.alpha:g}")
    return [{"alpha": cfg.alpha, "point": list(cfg.point), "value": eval_G(cfg.alpha, q)}], []


def _cmd_noise_sample(cfg: RunConfig) -> Result:
    from .group import GroupPoint
    from .noise import PolarLattice, sample_pointwise

    if cfg.n != 1:
        raise ConfigError("n", "pointwise sampling is implemented on H^1")
    _alpha_gate(cfg, 1.0, 1.5)
    lat = PolarLattice(**cfg.extra.get("lattice", {}))
    pts = [GroupPoint.from_array(cfg.point)]
    rows, flags = [], []
    for t in cfg.t_values:
        real = sample_pointwise(cfg.alpha, t, pts, cfg.seed, lat)
        rows += [{"t": tt, "point": p.as_array(), "value": float(v)} for (tt, p), v in zip(real.grid, real.values)]
        flags += list(real.flags)
    return rows, flags


def _cmd_noise_cov(cfg: RunConfig) -> Result:
    from .group import GroupPoint
    from .noise import TestFunction, covariance_quadrature

    if cfg.n != 1:
        raise ConfigError("n", "covariances are implemented on H^1")
    _alpha_gate(cfg, -1e-300, 1.5)
    phi = TestFunction(GroupPoint.identity(1), 1.0, frequency=6.0)
    psi = TestFunction(GroupPoint((0.3,), (-0.2,), 0.15), 0.9, frequency=7.0)
    return [{"alpha": cfg.alpha, "pair": "frozen", "covariance": covariance_quadrature(cfg.alpha, phi, psi)}], []


def _cmd_chaos_bound(cfg: RunConfig) -> Result:
    from .pam import ChaosParams, chaos_constants, chaos_series_bound, necessity_probe

    _alpha_gate(cfg, cfg.n / 2, (cfg.n + 1) / 2)
    rows, flags = [], []
    for t in cfg.t_values:
        p = ChaosParams(cfg.n, cfg.alpha, t, m_tail=cfg.m_tail)
        bound, N = chaos_series_bound(p)
        c = chaos_constants(replace(p, N=N))
        rows.append({"t": t, "bound": bound, "N": N, "C0": c.C0, "C1": c.C1, "C2": c.C2, "D_plus": c.D_plus, "D_minus": c.D_minus})
    probe = necessity_probe(cfg.n, cfg.alpha)
    if not probe.converged:
        flags.append("necessity_divergent")
    rows.append({"necessity_converged": probe.converged, "M1": probe.value})
    return rows, flags


def _cmd_moments_fk(cfg: RunConfig) -> Result:
    from .pam import fk_second_moment

    _alpha_gate(cfg, cfg.n / 2, (cfg.n + 1) / 2)
    rows, flags = [], []
    for t in cfg.t_values:
        est = fk_second_moment(cfg.alpha, t, cfg.samples, cfg.steps, cfg.mollify_eps, cfg.seed, n=cfg.n)
        report = dict(est.clip_report or {})
        report.pop("runtime_ms", None)
        rows.append({"t": t, "value": est.value, "std_err": est.std_err, **report})
        flags += list(est.flags)
    return rows, flags


def _cmd_moments_smooth(cfg: RunConfig) -> Result:
    from .pam import smooth_regime_moment

    _alpha_gate(cfg, (cfg.n + 1) / 2, (cfg.n + 2) / 2)
    rows, flags = [], []
    for t in cfg.t_values:
        est, rho = smooth_regime_moment(cfg.alpha, cfg.beta, t, cfg.samples, cfg.steps, cfg.seed, cfg.n)
        rows.append({"t": t, "beta": cfg.beta, "value": est.value, "std_err": est.std_err, "rho": rho})
        flags += list(est.flags)
    return rows, flags


def _cmd_mild_solve(cfg: RunConfig) -> Result:
    from .pam import BoxLattice, mild_solver_mollified

    if cfg.n != 1:
        raise ConfigError("n", "the lattice solver is implemented on H^1")
    _alpha_gate(cfg, 0.5, 1.0)
    lat = BoxLattice(**cfg.extra.get("lattice", {}))
    rows = []
    for t in cfg.t_values:
        res = mild_solver_mollified(
            cfg.alpha, t, lat, cfg.steps, cfg.seed, realizations=cfg.samples, mollify_eps=cfg.mollify_eps
        )
        rows.append(
            {
                "t": t,
                "mean": res.mean.value,
                "mean_std_err": res.mean.std_err,
                "second_moment": res.second_moment.value,
                "second_moment_std_err": res.second_moment.std_err,
                "exact_second_moment": res.exact_second_moment,
            }
        )
    return rows, []


def _verify_suite(cfg: RunConfig) -> list[tuple[str, bool, float, float]]:
    """Fast invariant checks as (name, passed, value, tolerance)."""
    from . import group
    from .brownian import scaling_diagnostic
    from .green import green_array
    from .heat_kernel import heat_kernel, kernel_at_identity, unit_kernel
    from .pam import ChaosParams, chaos_series_bound, dalang_criterion, necessity_probe

    seed = cfg.seed
    out = []
    g_rows, _ = _cmd_group_check(cfg)
    for r in g_rows:
        out.append((f"group:{r['check']}", r["max_deviation"] < 1e-9, r["max_deviation"], 1e-9))
    e = np.zeros((1, 3))
    dev = abs(float(heat_kernel(1.0, e)[0]) - kernel_at_identity(1))
    out.append(("heat:p1(e)=1/16", dev < 1e-12, dev, 1e-12))
    r2 = np.array([0.0, 0.5, 2.0, 1.0])
    zeta = np.array([0.5, 1.0, 3.0, 4.5])
    d = float(np.max(np.abs(unit_kernel(r2, zeta, method="direct") / unit_kernel(r2, zeta, method="contour") - 1)))
    out.append(("heat:direct_vs_contour", d < 1e-8, d, 1e-8))
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(32, 3))
    lam = 2.3
    ratio = lam ** (2 * (2 - 0.75)) * green_array(0.75, group.dil_arr(lam, pts)) / green_array(0.75, pts)
    d = float(np.max(np.abs(ratio - 1)))
    out.append(("green:dilation_scaling", d < 1e-4, d, 1e-4))
    g1 = float(green_array(1.0, np.array([[1.0, 0.0, 0.0]]))[0])
    d = abs(g1 * 8 * math.pi - 1)
    out.append(("green:G1_closed_form", d < 1e-6, d, 1e-6))
    b, _ = chaos_series_bound(ChaosParams(1, 0.75, 1.0))
    out.append(("chaos:bound_finite", math.isfinite(b), b, math.inf))
    lo = necessity_probe(1, 0.4)
    hi = necessity_probe(1, 1.1)
    out.append(("chaos:necessity_large_lambda", lo.divergent_side == "large_lambda" and lo.fitted_exponent > 0, lo.fitted_exponent, 0.0))
    out.append(("chaos:necessity_small_lambda", hi.divergent_side == "small_lambda" and hi.fitted_exponent < 0, hi.fitted_exponent, 0.0))
    dc = dalang_criterion(0.75)
    out.append(("chaos:dalang_finite", dc.finite and dc.quadrature_finite, dc.integral_value, 1.0))
    sc = scaling_diagnostic(2.0, 4000, 64, seed)
    out.append(("bm:scaling_ks", sc.p_value > 1e-3, sc.p_value, 1e-3))
    return out


def _cmd_verify_all(cfg: RunConfig) -> Result:
    results = _verify_suite(cfg)
    rows = [{"check": n, "passed": ok, "value": v, "tolerance": tol} for n, ok, v, tol in results]
    width = max(len(r["check"]) for r in rows)
    for r in rows:
        print(f"{r['check']:<{width}}  {'PASS' if r['passed'] else 'FAIL'}  {r['value']:.3e}")
    return rows, [f"failed:{r['check']}" for r in rows if not r["passed"]]


COMMANDS: dict[str, Callable[[RunConfig], Result]] = {
    "group-check": _cmd_group_check,
    "bm-sample": _cmd_bm_sample,
    "heat-eval": _cmd_heat_eval,
    "green-eval": _cmd_green_eval,
    "noise-sample": _cmd_noise_sample,
    "noise-cov": _cmd_noise_cov,
    "chaos-bound": _cmd_chaos_bound,
    "moments-fk": _cmd_moments_fk,
    "moments-smooth": _cmd_moments_smooth,
    "mild-solve": _cmd_mild_solve,
    "verify-all": _cmd_verify_all,
}

# fields changed from RunConfig defaults when a command has no better use for them
COMMAND_DEFAULTS: dict[str, dict] = {
    "noise-sample": {"alpha": 1.25},
    "moments-smooth": {"alpha": 1.25},
    "mild-solve": {"t_values": (0.5,), "steps": 10, "samples": 2000},
    "bm-sample": {"samples": 100},
}


def dispatch(command: str, cfg: RunConfig) -> int:
    """Run ``command`` and write its artifact; returns the exit status."""
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    if command in RANDOMIZED and cfg.seed is None:
        raise ConfigError("seed", f"{command} is randomized and requires --seed")
    t0 = time.perf_counter()
    try:
        rows, flags = COMMANDS[command](cfg)
    except ConfigError:
        raise
    except DomainError as exc:
        raise ConfigError("alpha" if "alpha" in str(exc) else "config", str(exc)) from exc
    except HeisenbergError as exc:
        rows, flags = [{"error": type(exc).__name__, "message": str(exc)}], [type(exc).__name__]
    runtime = (time.perf_counter() - t0) * 1e3 if cfg.timings else None
    text = _render(command, cfg, rows, flags, runtime)
    path = Path(cfg.output_path or f"{command}.{cfg.format}")
    path.write_text(text)
    print(f"{command}: wrote {path} ({len(rows)} rows, flags={sorted(set(flags)) or 'none'})")
    return 1 if flags else 0


# --- argument handling ----------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heisenberg-pam", description="Heisenberg-group PAM toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--n", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--t", dest="t_values", type=_floats, help="time or comma separated times")
        p.add_argument("--samples", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--output", dest="output_path")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--point", type=_floats, help="x1,..,xn,y1,..,yn,z")
        p.add_argument("--eps", dest="mollify_eps", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--m-tail", dest="m_tail", type=int)
        p.add_argument("--timings", action="store_true", default=None)
    return ap


def build_config(command: str, flag_values: dict, config_file: str | None = None) -> RunConfig:
    """Merge defaults, the JSON file and explicit flags, in that order."""
    merged: dict[str, Any] = dict(COMMAND_DEFAULTS.get(command, {}))
    names = {f.name for f in fields(RunConfig)}
    if config_file:
        try:
            data = json.loads(Path(config_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read {config_file}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        for k, v in data.items():
            if k not in names:
                raise ConfigError(k, "unknown config field")
            merged[k] = tuple(v) if isinstance(v, list) else v
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    if "n" in merged and "point" not in merged:
        merged["point"] = (0.0,) * (2 * int(merged["n"]) + 1)
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from exc


def main(argv: Sequence[str] | None = None) -> int:
    args = vars(_parser().parse_args(argv))
    command = args.pop("command")
    config_file = args.pop("config")
    try:
        cfg = build_config(command, args, config_file)
        return dispatch(command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
