"""Command-line front end: simulations, statistical suites, artifacts.

Subcommands ``simulate``, ``hyp``, ``martingale``, ``reversibility`` and
``transience`` wrap the library with provenance plumbing: every file-writing
run drops a ``manifest.json`` holding the fully resolved parameter map and
per-file content hashes, and :func:`replay_manifest` re-executes a manifest
into a fresh directory (byte-identical outputs).

Options may come from flags or from a plain ``key = value`` config file
(``--config``); flags win.  Exit codes: 0 success, 2 parameter/domain
validation error, 3 numerical failure, 4 statistically invalid run (low
effective sample count).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .coupling import (
    HORIZON_MARGIN,
    HullPolygon,
    _floor_index,
    _mark_indices,
    evaluate_grid,
    martingale_mc_test,
    polygon_exit,
    polygons_disjoint,
    simulate_pair,
)
from .drivers import (
    ForceSpec,
    IntermediateConfig,
    SleConfig,
    drive_intermediate,
    drive_kappa_rho,
    drive_standard,
)
from .errors import (
    ConvergenceError,
    DomainError,
    GeometryError,
    IntegrationAbort,
    ParameterError,
    StatisticalInvalid,
)
from .hypergeometric import HypParams, f0, g0, u0, v0
from .io_utils import (
    RunManifest,
    format_float,
    read_manifest,
    write_grid_csv,
    write_json,
    write_samples_csv,
    write_text_atomic,
    write_trace_csv,
    write_driver_csv,
)
from .loewner import trace_from_driver
from .reversibility import (
    MIN_VALID_FRACTION,
    test_reversal_degenerate,
    test_reversal_generic,
    transience_report,
)
from .rng import path_rng
from .svg import band_chart_svg, cdf_overlay_svg

__all__ = ["main", "build_parser", "replay_manifest", "read_polygon_file"]


# ---------------------------------------------------------------------------
# option registry (shared by argparse, the config file, and replay)


def _conv_float(s) -> float:
    try:
        return float(s)
    except (TypeError, ValueError):
        raise ParameterError(f"expected a number, got {s!r}") from None


def _conv_int(s) -> int:
    try:
        return int(str(s))
    except (TypeError, ValueError):
        raise ParameterError(f"expected an integer, got {s!r}") from None


def _conv_str(s) -> str:
    return str(s)


def _conv_force(s):
    """Force-point location: ``plus``/``minus``/``inf`` or a real number."""
    text = str(s)
    if text in ("plus", "minus", "inf"):
        return text
    return _conv_float(text)


def _conv_p1(s):
    """Near force point: ``degenerate`` or a positive real number."""
    text = str(s)
    if text == "degenerate":
        return text
    return _conv_float(text)


class _Opt(NamedTuple):
    flag: str
    conv: Callable
    default: object
    help: str
    choices: tuple = ()


_COMMON: dict[str, _Opt] = {
    "seed": _Opt("--seed", _conv_int, 0, "master seed for the run"),
    "out": _Opt("--out", _conv_str, ".", "output directory (created if missing)"),
    "threads": _Opt(
        "--threads", _conv_int, 1, "worker processes; 0 means auto-detect"
    ),
    "config": _Opt(
        "--config", _conv_str, None,
        "plain 'key = value' options file; explicit flags win",
    ),
}

_CMD_OPTS: dict[str, dict[str, _Opt]] = {
    "simulate": {
        "process": _Opt(
            "--process", _conv_str, "standard", "which driver SDE to integrate",
            ("standard", "kappa_rho", "intermediate"),
        ),
        "kappa": _Opt("--kappa", _conv_float, 2.0, "diffusivity, in (0, 4)"),
        "rho": _Opt("--rho", _conv_float, None, "force-point weight"),
        "force": _Opt(
            "--force", _conv_force, None,
            "force point: a real number, plus, minus, or inf",
        ),
        "p1": _Opt(
            "--p1", _conv_p1, None, "near force point ('degenerate' or > 0)"
        ),
        "p2": _Opt("--p2", _conv_float, None, "far force point (> p1)"),
        "t": _Opt("--t", _conv_float, 1.0, "capacity-time horizon"),
        "n": _Opt("--n", _conv_int, 1000, "number of time steps"),
    },
    "hyp": {
        "kappa": _Opt("--kappa", _conv_float, 2.0, "diffusivity, in (0, 4)"),
        "rho": _Opt("--rho", _conv_float, 1.0, "force-point weight"),
        "x_min": _Opt("--x-min", _conv_float, 0.0, "grid start, in [0, 1)"),
        "x_max": _Opt("--x-max", _conv_float, 0.99, "grid end, in [x-min, 1)"),
        "x_count": _Opt("--x-count", _conv_int, 100, "number of grid points"),
    },
    "martingale": {
        "kappa": _Opt("--kappa", _conv_float, 3.0, "diffusivity, in (0, 4)"),
        "rho": _Opt("--rho", _conv_float, 0.5, "force-point weight"),
        "x1": _Opt("--x1", _conv_float, 0.0, "seed of trace 1"),
        "x2": _Opt("--x2", _conv_float, 1.0, "seed of trace 2 (> x1)"),
        "poly1": _Opt(
            "--poly1", _conv_str, None,
            "stopping-hull polygon file for trace 1 ('x y' per line); "
            "default half-disk of radius 0.1",
        ),
        "poly2": _Opt(
            "--poly2", _conv_str, None,
            "stopping-hull polygon file for trace 2; default half-disk 0.1",
        ),
        "t2_bar": _Opt(
            "--t2-bar", _conv_float, 0.001, "deterministic cap on trace-2 time"
        ),
        "n_paths": _Opt("--n-paths", _conv_int, 5000, "Monte Carlo pairs"),
        "n_grid": _Opt("--n-grid", _conv_int, 64, "time-grid cells on axis 1"),
        "n_cells": _Opt(
            "--n-cells", _conv_int, 64, "quadrature cells on axis 2"
        ),
        "n_steps": _Opt("--n-steps", _conv_int, 256, "SDE steps per trace"),
    },
    "reversibility": {
        "test": _Opt(
            "--test", _conv_str, "degenerate", "which reversal theorem to check",
            ("degenerate", "generic"),
        ),
        "kappa": _Opt("--kappa", _conv_float, 2.0, "diffusivity, in (0, 4)"),
        "rho": _Opt("--rho", _conv_float, 1.0, "force-point weight"),
        "side": _Opt(
            "--side", _conv_str, "plus", "degenerate start side",
            ("plus", "minus"),
        ),
        "r0": _Opt(
            "--r0", _conv_float, 1.0,
            "last-crossing radius (degenerate test)",
        ),
        "b0": _Opt(
            "--b0", _conv_float, 1.0, "forward force point (generic test)"
        ),
        "r": _Opt(
            "--r", _conv_float, 0.5,
            "first-crossing radius (generic test), in (0, 1/b0)",
        ),
        "n_paths": _Opt("--n-paths", _conv_int, 2000, "paths per ensemble"),
        "escape_factor": _Opt(
            "--escape-factor", _conv_float, 100.0,
            "escape certification multiple of the crossing radius",
        ),
        "stage_steps": _Opt(
            "--stage-steps", _conv_int, 512, "SDE steps per geometric stage"
        ),
    },
    "transience": {
        "kind": _Opt(
            "--kind", _conv_str, "degenerate", "which seed-forced ensemble",
            ("degenerate", "intermediate"),
        ),
        "kappa": _Opt("--kappa", _conv_float, 2.0, "diffusivity, in (0, 4)"),
        "rho": _Opt("--rho", _conv_float, 1.0, "force-point weight"),
        "t": _Opt("--t", _conv_float, 1.0, "base capacity horizon T"),
        "n_paths": _Opt("--n-paths", _conv_int, 1000, "ensemble size"),
        "far_point": _Opt(
            "--far-point", _conv_float, 1.0,
            "far force point (intermediate kind only)",
        ),
        "stage_steps": _Opt(
            "--stage-steps", _conv_int, 512, "SDE steps per geometric stage"
        ),
    },
}

_DESCRIPTIONS = {
    "simulate": "integrate one driver SDE and write driver + trace CSVs",
    "hyp": "print the hypergeometric kernel table on an x-grid",
    "martingale": "Monte Carlo check that the two-time functional has mean 1",
    "reversibility": "two-sample crossing-angle comparison of a reversal law",
    "transience": "median max-modulus growth across doubling horizons",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slelab",
        description="numerical laboratory for chordal Loewner evolutions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in _CMD_OPTS.items():
        p = sub.add_parser(cmd, description=_DESCRIPTIONS[cmd])
        for dest, opt in {**opts, **_COMMON}.items():
            kwargs: dict = dict(
                dest=dest, type=opt.conv, default=argparse.SUPPRESS,
                help=opt.help + f" (default: {opt.default})",
            )
            if opt.choices:
                kwargs["choices"] = opt.choices
            p.add_argument(opt.flag, **kwargs)
    return parser


def _parse_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read config file {path}: {exc}") from None
    out: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(
                f"config line {ln} is not 'key = value': {raw!r}"
            )
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def resolve_params(command: str, namespace: argparse.Namespace) -> dict:
    """Merge defaults, config-file values, and explicit flags (flags win)."""
    opts = {**_CMD_OPTS[command], **_COMMON}
    resolved = {dest: opt.default for dest, opt in opts.items()}
    config_path = getattr(namespace, "config", None)
    if config_path is not None:
        for key, raw in _parse_config_file(config_path).items():
            if key == "config":
                raise ParameterError("config files cannot nest via 'config ='")
            if key not in opts:
                raise ParameterError(
                    f"unknown config key {key!r} for command {command!r}"
                )
            value = opts[key].conv(raw)
            if opts[key].choices and value not in opts[key].choices:
                raise ParameterError(
                    f"config key {key!r} must be one of {opts[key].choices}"
                )
            resolved[key] = value
    for dest in opts:
        if hasattr(namespace, dest):
            resolved[dest] = getattr(namespace, dest)
    return resolved


# ---------------------------------------------------------------------------
# shared plumbing


def _out_dir(params: dict) -> Path:
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(command: str, params: dict) -> RunManifest:
    stored = {
        k: v for k, v in params.items() if k not in ("out", "config")
    }
    return RunManifest(
        command=command, params=stored, master_seed=int(params["seed"])
    )


def read_polygon_file(path: str) -> HullPolygon:
    """Polygon from a text file with one ``x y`` vertex pair per line."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read polygon file {path}: {exc}") from None
    vertices = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ParameterError(
                f"polygon file {path} line {ln}: expected 'x y', got {raw!r}"
            )
        vertices.append(complex(_conv_float(fields[0]), _conv_float(fields[1])))
    return HullPolygon(np.asarray(vertices, dtype=complex))


def _check_kappa(kappa: float) -> None:
    if not 0.0 < kappa < 4.0:
        raise ParameterError(f"kappa={kappa} outside (0, 4)")


# ---------------------------------------------------------------------------
# subcommand runners (each takes the resolved parameter map)


def run_simulate(params: dict) -> int:
    process = params["process"]
    if process not in ("standard", "kappa_rho", "intermediate"):
        raise ParameterError(f"unknown process {process!r}")
    _check_kappa(params["kappa"])
    kappa, t, n, seed = (
        params["kappa"], params["t"], params["n"], params["seed"],
    )

    def _forbid(*keys: str) -> None:
        for key in keys:
            if params[key] is not None:
                raise ParameterError(
                    f"--{key.replace('_', '-')} does not apply to "
                    f"process {process}"
                )

    if process == "standard":
        _forbid("rho", "force", "p1", "p2")
        driver = drive_standard(kappa, t, n, seed)
    elif process == "kappa_rho":
        _forbid("p1", "p2")
        if params["rho"] is None or params["force"] is None:
            raise ParameterError("process kappa_rho needs --rho and --force")
        force = params["force"]
        if force == "plus":
            spec = ForceSpec.degenerate_plus()
        elif force == "minus":
            spec = ForceSpec.degenerate_minus()
        elif force == "inf":
            spec = ForceSpec.at_infinity()
        else:
            spec = ForceSpec.finite(force)
        cfg = SleConfig(
            kappa=kappa, x0=0.0, forces=((params["rho"], spec),),
            T=t, n=n, seed=seed,
        )
        driver = drive_kappa_rho(cfg)
    else:
        _forbid("force")
        if params["rho"] is None or params["p2"] is None:
            raise ParameterError("process intermediate needs --rho and --p2")
        p1 = params["p1"]
        cfg = IntermediateConfig(
            kappa=kappa, rho=params["rho"],
            p1=None if p1 in (None, "degenerate") else p1,
            p2=params["p2"], T=t, n=n, seed=seed,
        )
        driver = drive_intermediate(cfg)

    trace = trace_from_driver(driver)
    out = _out_dir(params)
    manifest = _manifest("simulate", params)
    if driver.truncation is not None:
        manifest.params["truncation"] = driver.truncation
    manifest.record(write_driver_csv(out / "driver.csv", driver))
    manifest.record(write_trace_csv(out / "trace.csv", trace))
    manifest.write(out / "manifest.json")
    print(f"simulate: wrote driver.csv, trace.csv, manifest.json to {out}")
    if driver.truncation is not None:
        print(f"simulate: note: run truncated early ({driver.truncation})")
    return 0


def run_hyp(params: dict) -> int:
    p = HypParams(params["kappa"], params["rho"])
    x_min, x_max, count = params["x_min"], params["x_max"], params["x_count"]
    if count < 1:
        raise ParameterError("x-count must be at least 1")
    if not 0.0 <= x_min <= x_max < 1.0:
        raise ParameterError("need 0 <= x-min <= x-max < 1")
    if count == 1:
        xs = [x_min]
    else:
        xs = np.linspace(x_min, x_max, count).tolist()
    print("x,u0,f0,g0,v0,f0_bound_ok,g0_bound_ok")
    for x in xs:
        ux, fx, gx = u0(p, x), f0(p, x), g0(p, x)
        if x == 0.0:
            if p.rho > 0.0:
                vx = 0.0
            elif p.rho == 0.0:
                vx = 1.0
            else:
                vx = float("inf")
        else:
            vx = v0(p, x)
        slack_f = 1e-9 * max(1.0, abs(fx))
        slack_g = 1e-9 * max(1.0, abs(gx))
        f_ok = fx + slack_f >= p.b / (1.0 - x)
        g_ok = gx + slack_g >= p.rho + (p.kappa - 4.0) * x / (1.0 - x)
        print(
            ",".join(
                [
                    format_float(x), format_float(ux), format_float(fx),
                    format_float(gx), format_float(vx),
                    "true" if f_ok else "false",
                    "true" if g_ok else "false",
                ]
            )
        )
    return 0


def _grid_dump(params: dict, poly1: HullPolygon, poly2: HullPolygon):
    """Full-grid evaluation of Monte Carlo pair #0, for the grid CSV."""
    kappa, rho = params["kappa"], params["rho"]
    x1, x2, seed = params["x1"], params["x2"], params["seed"]
    n_steps, n_grid, n_cells = (
        params["n_steps"], params["n_grid"], params["n_cells"],
    )
    T1 = HORIZON_MARGIN * poly1.radius_about(x1) ** 2 / 2.0
    T2 = HORIZON_MARGIN * poly2.radius_about(x2) ** 2 / 2.0
    setup = simulate_pair(
        kappa, rho, x1, x2, T1, n_steps, T2, n_steps,
        path_rng(seed, 0), path_rng(seed, 1),
    )
    ex1 = polygon_exit(setup.trace1, poly1)
    ex2 = polygon_exit(setup.trace2, poly2)
    i2 = min(_floor_index(setup.driver2.times, params["t2_bar"]), ex2.index)
    marks1 = (
        _mark_indices(ex1.index, n_grid) if ex1.index > 0 else np.array([0])
    )
    marks2 = _mark_indices(i2, n_cells) if i2 > 0 else np.array([0])
    return evaluate_grid(setup, marks1, marks2, mode="all")


def run_martingale(params: dict) -> int:
    _check_kappa(params["kappa"])
    x1, x2 = params["x1"], params["x2"]
    if not x1 < x2:
        raise ParameterError(f"seeds must satisfy x1 < x2, got ({x1}, {x2})")
    poly1 = (
        read_polygon_file(params["poly1"])
        if params["poly1"] is not None
        else HullPolygon.half_disk(x1, 0.1)
    )
    poly2 = (
        read_polygon_file(params["poly2"])
        if params["poly2"] is not None
        else HullPolygon.half_disk(x2, 0.1)
    )
    probe = 1e-6 * (x2 - x1)
    if not poly1.contains(complex(x1, probe)):
        raise ParameterError("hull 1 does not contain a neighborhood of seed x1")
    if not poly2.contains(complex(x2, probe)):
        raise ParameterError("hull 2 does not contain a neighborhood of seed x2")
    if not polygons_disjoint(poly1, poly2):
        raise ParameterError("stopping hulls must have disjoint closures")
    if not params["t2_bar"] > 0.0:
        raise ParameterError("t2-bar must be a positive time")
    if (
        params["n_grid"] < 1
        or params["n_cells"] < 1
        or params["n_steps"] < params["n_grid"]
    ):
        raise ParameterError(
            "need n-steps >= n-grid >= 1 and at least one quadrature cell"
        )
    out = _out_dir(params)
    manifest = _manifest("martingale", params)

    grid = _grid_dump(params, poly1, poly2)
    manifest.record(write_grid_csv(out / "grid.csv", grid))

    if params["n_paths"] < 2:
        report = {
            "kappa": params["kappa"], "rho": params["rho"],
            "x1": params["x1"], "x2": params["x2"],
            "t2_bar": params["t2_bar"],
            "n_paths": params["n_paths"], "n_valid": 0,
            "low_effective_n": True, "passed": False,
            "master_seed": params["seed"],
        }
        manifest.record(write_json(out / "report.json", report))
        manifest.write(out / "manifest.json")
        print(
            "martingale: fewer than 2 paths requested; "
            "report flagged low effective n"
        )
        return 4
    report = martingale_mc_test(
        params["kappa"], params["rho"], params["x1"], params["x2"],
        poly1, poly2, params["t2_bar"], params["n_paths"], params["seed"],
        n_grid=params["n_grid"], n_cells=params["n_cells"],
        n_steps=params["n_steps"], threads=params["threads"],
    )
    manifest.record(write_json(out / "report.json", report))
    if report["mean"]:
        chart = band_chart_svg(
            np.asarray(report["t_grid"]),
            np.asarray(report["mean"]),
            3.0 * np.asarray(report["stderr"]),
            title="stopped mean of the two-time functional",
            x_label="capacity time of trace 1",
            y_label="ensemble mean",
        )
        manifest.record(write_text_atomic(out / "mean_band.svg", chart))
    manifest.write(out / "manifest.json")
    print(
        f"martingale: terminal mean {report['terminal_mean']:.6f} "
        f"(stderr {report['terminal_stderr']:.2e}), "
        f"n_valid {report['n_valid']}/{report['n_paths']}, "
        f"within band everywhere: {report.get('mean_within_band_everywhere')}"
    )
    if report["low_effective_n"]:
        print("martingale: low effective sample count; run is invalid")
        return 4
    return 0


def run_reversibility(params: dict) -> int:
    _check_kappa(params["kappa"])
    out = _out_dir(params)
    manifest = _manifest("reversibility", params)
    common = dict(
        n_paths=params["n_paths"], master_seed=params["seed"],
        escape_factor=params["escape_factor"],
        stage_steps=params["stage_steps"], threads=params["threads"],
        return_ensembles=True,
    )
    if params["test"] == "degenerate":
        side = 1 if params["side"] == "plus" else -1
        report, res_a, res_b = test_reversal_degenerate(
            params["kappa"], params["rho"], side=side, r0=params["r0"],
            **common,
        )
    elif params["test"] == "generic":
        report, res_a, res_b = test_reversal_generic(
            params["kappa"], params["rho"], b0=params["b0"], r=params["r"],
            **common,
        )
    else:
        raise ParameterError(f"unknown reversibility test {params['test']!r}")

    samples = list(res_a.samples) + list(res_b.samples)
    manifest.record(write_samples_csv(out / "samples.csv", samples))
    manifest.record(write_json(out / "report.json", report.to_dict()))
    chart = cdf_overlay_svg(
        {
            "forward start": res_a.angles,
            "reversed (escape)": res_b.angles,
        },
        title=f"crossing-angle CDFs: {report.test}",
    )
    manifest.record(write_text_atomic(out / "cdf.svg", chart))
    manifest.write(out / "manifest.json")
    print(
        f"reversibility[{params['test']}]: KS statistic "
        f"{report.statistic:.4f}, p = {report.p_value:.4f} "
        f"(n1={report.n1}, n2={report.n2})"
    )
    if not report.valid:
        print(
            "reversibility: valid sample fraction below "
            f"{MIN_VALID_FRACTION}; run is statistically invalid"
        )
        return 4
    return 0


def run_transience(params: dict) -> int:
    _check_kappa(params["kappa"])
    out = _out_dir(params)
    manifest = _manifest("transience", params)
    report = transience_report(
        params["kind"], params["kappa"], params["rho"],
        T=params["t"], n_paths=params["n_paths"],
        master_seed=params["seed"], far_point=params["far_point"],
        stage_steps=params["stage_steps"], threads=params["threads"],
    )
    manifest.record(write_json(out / "report.json", report))
    manifest.write(out / "manifest.json")
    medians = ", ".join(f"{m:.4f}" for m in report["medians"])
    print(
        f"transience[{params['kind']}]: medians [{medians}] over horizons "
        f"T, 2T, 4T; ratio(4T/T) = {report['ratio_4T_over_T']:.4f}"
    )
    if report["n_valid"] < MIN_VALID_FRACTION * report["n_paths"]:
        print("transience: low valid path fraction; run is invalid")
        return 4
    return 0


_RUNNERS: dict[str, Callable[[dict], int]] = {
    "simulate": run_simulate,
    "hyp": run_hyp,
    "martingale": run_martingale,
    "reversibility": run_reversibility,
    "transience": run_transience,
}


def replay_manifest(manifest_path, out_dir) -> dict:
    """Re-run a recorded manifest into ``out_dir``; returns the new manifest.

    The stored parameter map is already fully resolved (config merged), so
    the replay is exact; outputs must be byte-identical to the original.
    """
    recorded = read_manifest(manifest_path)
    command = recorded["command"]
    if command not in _RUNNERS:
        raise ParameterError(f"manifest names unknown command {command!r}")
    params = dict(recorded["params"])
    params.pop("truncation", None)
    params["out"] = str(out_dir)
    code = _RUNNERS[command](params)
    if code not in (0, 4):
        raise ParameterError(f"replay of {command} failed with exit code {code}")
    return read_manifest(Path(out_dir) / "manifest.json")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        namespace = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        params = resolve_params(namespace.command, namespace)
        return _RUNNERS[namespace.command](params)
    except (ParameterError, DomainError) as exc:
        print(f"slelab: parameter error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, IntegrationAbort, ConvergenceError) as exc:
        print(f"slelab: numerical failure: {exc}", file=sys.stderr)
        return 3
    except StatisticalInvalid as exc:
        print(f"slelab: statistically invalid run: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
