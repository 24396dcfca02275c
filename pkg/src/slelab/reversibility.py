"""Statistical laboratory for trace reversal and transience.

The reversal statements identify curve laws only up to time change, so
every comparison here runs through parameterization-free observables:
the angles at which a trace crosses centered circles.  The inversion
``W0(z) = 1/conj(z)`` preserves the argument of every point, which makes
a *first* crossing angle of a forward trace directly comparable to a
*last* crossing angle of an independent forward trace at the reciprocal
radius — the reversed curve's early history is the forward curve's late
history seen through ``W0``.

Ensembles are generated in geometric capacity stages so the step size
stays proportional to the hull scale.  Two facts keep the cost linear in
practice:

* a hull of radius ``R`` has capacity at most ``R**2`` (it fits in the
  half-disk of radius ``R``), so integrating to capacity ``(F*r)**2 / 2``
  *certifies* that the true trace escaped beyond ``F*r`` without
  computing a single trace point;
* trace points are only materialized at full resolution while the hull
  capacity is comparable to the crossing radius (where crossings of the
  circle can occur), and sparsely afterwards.

"Last" crossings are certified only relative to the escape horizon; the
residual truncation error is monitored by :func:`escape_stability` rather
than bounded analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .drivers import (
    COLLISION_TOL_FACTOR,
    integrate_intermediate,
    integrate_kappa_rho,
    startup_offset,
)
from .errors import GeometryError, ParameterError
from .hypergeometric import HypParams, KernelTable
from .loewner import DrivingPath, Trace, tips_at, unzip_curve
from .parallel import resolve_threads, run_tasks
from .rng import path_rng

__all__ = [
    "DEFAULT_ESCAPE_FACTOR",
    "DEFAULT_STAGE_STEPS",
    "CrossingSample",
    "KsReport",
    "EnsembleSpec",
    "EnsembleResult",
    "invert_trace",
    "first_crossing_angle",
    "last_crossing_angle",
    "run_crossing_ensemble",
    "ks_two_sample",
    "test_reversal_degenerate",
    "test_reversal_generic",
    "transience_report",
    "escape_stability",
]

DEFAULT_ESCAPE_FACTOR = 100.0
DEFAULT_STAGE_STEPS = 512
STAGE_RATIO = 4.0  # capacity ratio between consecutive stages
FINE_CAPACITY_FACTOR = 64.0  # full trace resolution while hcap <= this * r^2
TAIL_DECIMATION = 16  # keep every 16th sample beyond the fine region
FIRST_CROSSING_CAP = 8.0  # give up on a first crossing past hcap = this * r^2
MIN_VALID_FRACTION = 0.8
_CENTER_TOL = 1e-12  # relative tolerance for "the seed sits at the center"


# ---------------------------------------------------------------------------
# samples and reports


@dataclass(frozen=True)
class CrossingSample:
    """One circle-crossing angle drawn from a trace.

    ``kind`` records which crossing the angle is (first or last passage
    through ``|z| = radius``); the angle is the argument of the crossing
    point, strictly inside ``(0, pi)`` because a simple trace meets the
    real line only at its seed.
    """

    path_id: int
    radius: float
    kind: str
    angle: float

    def __post_init__(self) -> None:
        if self.kind not in ("first_crossing", "last_crossing"):
            raise ParameterError(f"unknown crossing kind {self.kind!r}")
        if not self.radius > 0.0:
            raise ParameterError("crossing radius must be positive")
        if not 0.0 < self.angle < math.pi:
            raise ParameterError(
                f"crossing angle {self.angle!r} not strictly inside (0, pi)"
            )


@dataclass(frozen=True)
class KsReport:
    """Two-sample Kolmogorov-Smirnov comparison of crossing-angle laws."""

    test: str
    params: dict
    n1: int
    n2: int
    statistic: float
    p_value: float
    discarded: dict
    seeds: dict
    valid: bool

    def __post_init__(self) -> None:
        if not 0.0 <= self.statistic <= 1.0:
            raise ParameterError("KS statistic must lie in [0, 1]")
        if not 0.0 <= self.p_value <= 1.0:
            raise ParameterError("p-value must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "params": self.params,
            "n1": self.n1,
            "n2": self.n2,
            "ks_statistic": self.statistic,
            "p_value": self.p_value,
            "discarded": self.discarded,
            "seeds": self.seeds,
            "valid": self.valid,
        }


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ParameterError("both samples must be non-empty")
    res = ks_2samp(a, b, alternative="two-sided", method="asymp")
    return float(res.statistic), float(min(1.0, res.pvalue))


# ---------------------------------------------------------------------------
# circle crossings of a polyline

# |a + s(b-a)|^2 is a convex quadratic in s, so a segment's modulus is
# maximized at an endpoint: a segment with both endpoints inside the circle
# never pokes out, while one with both endpoints outside can dip inside
# (two crossings) only if the quadratic's vertex drops below the radius.


def _quad_coeffs(a: complex, b: complex, r: float):
    d = b - a
    A = d.real * d.real + d.imag * d.imag
    B = 2.0 * (a.real * d.real + a.imag * d.imag)
    C = a.real * a.real + a.imag * a.imag - r * r
    return A, B, C


def _segment_crossings(a: complex, b: complex, r: float) -> tuple[float, ...]:
    """Parameters s in (0, 1] where |a + s(b-a)| = r, increasing."""
    A, B, C = _quad_coeffs(a, b, r)
    if A == 0.0:
        return ()
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        return ()
    root = math.sqrt(disc)
    out = []
    for s in ((-B - root) / (2.0 * A), (-B + root) / (2.0 * A)):
        if 0.0 < s <= 1.0:
            out.append(s)
    return tuple(dict.fromkeys(out))


def _resolve_points(trace) -> np.ndarray:
    pts = getattr(trace, "points", trace)
    return np.asarray(pts, dtype=complex)


def _sample(path_id: int, radius: float, kind: str, z: complex) -> CrossingSample:
    return CrossingSample(
        path_id=path_id, radius=radius, kind=kind, angle=float(np.angle(z))
    )


def first_crossing_angle(trace, r: float, *, path_id: int = 0):
    """Angle of the first polyline crossing of ``|z| = r``, or None.

    The crossing point is linearly interpolated on the first segment whose
    far endpoint reaches modulus ``r``.
    """
    if not r > 0.0:
        raise ParameterError("crossing radius must be positive")
    pts = _resolve_points(trace)
    if pts.size == 0:
        return None
    mods = np.abs(pts)
    if mods[0] >= r:
        raise GeometryError("trace starts outside the crossing circle")
    outside = np.nonzero(mods >= r)[0]
    if outside.size == 0:
        return None
    k = int(outside[0])
    roots = _segment_crossings(complex(pts[k - 1]), complex(pts[k]), r)
    s = roots[0] if roots else 1.0
    z = pts[k - 1] + s * (pts[k] - pts[k - 1])
    return _sample(path_id, r, "first_crossing", complex(z))


def last_crossing_angle(
    trace,
    r: float,
    escape_factor: float = DEFAULT_ESCAPE_FACTOR,
    *,
    certified: bool = False,
    path_id: int = 0,
):
    """Angle of the final polyline crossing of ``|z| = r``, or None.

    Requires the trace to have demonstrably escaped: either its computed
    maximum modulus reaches ``escape_factor * r`` or the caller passes
    ``certified=True`` (capacity-based escape certificate).  Returns None
    when the escape precondition fails; the caller counts the discard.
    """
    if not r > 0.0:
        raise ParameterError("crossing radius must be positive")
    if not escape_factor > 1.0:
        raise ParameterError("escape factor must exceed 1")
    pts = _resolve_points(trace)
    if pts.size < 2:
        return None
    mods = np.abs(pts)
    if not certified and mods.max() < escape_factor * r:
        return None
    # coarse filter: segments straddling the circle, plus outside-outside
    # segments whose chord passes within r of the center
    lo = np.minimum(mods[:-1], mods[1:])
    hi = np.maximum(mods[:-1], mods[1:])
    candidates = np.nonzero((lo < r) | (hi >= r))[0]
    for k in reversed(candidates):
        a, b = complex(pts[k]), complex(pts[k + 1])
        if min(abs(a), abs(b)) >= r:
            A, B, C = _quad_coeffs(a, b, r)
            if A == 0.0:
                continue
            s_vertex = -B / (2.0 * A)
            if not 0.0 < s_vertex < 1.0:
                continue
            if C + s_vertex * (B + A * s_vertex) >= 0.0:
                continue
        roots = _segment_crossings(a, b, r)
        if not roots:
            continue
        s = roots[-1]
        return _sample(path_id, r, "last_crossing", a + s * (b - a))
    return None


# ---------------------------------------------------------------------------
# trace inversion


def invert_trace(trace: Trace) -> Trace:
    """Reverse a trace through the half-plane inversion ``z -> 1/conj(z)``.

    The seed (a point at the inversion center) is dropped before mapping —
    its image is the point at infinity — and the limit point 0 is prepended
    to the reversed image, which is where the image curve of an escaping
    trace starts.  Any *interior* point at the center is a geometry error.
    Output times are the capacity parameterization of the new curve,
    recovered by welding it back to the real line.
    """
    pts = np.asarray(trace.points, dtype=complex)
    if pts.size < 2:
        raise ParameterError("trace must contain at least two points")
    scale = float(np.abs(pts).max())
    if scale == 0.0:
        raise GeometryError("trace is a single point at the inversion center")
    core = pts[1:] if abs(pts[0]) <= _CENTER_TOL * scale else pts
    if np.any(np.abs(core) <= _CENTER_TOL * scale):
        raise GeometryError("trace passes through the inversion center")
    new_pts = np.concatenate(([0.0 + 0.0j], (1.0 / np.conj(core))[::-1]))
    res = unzip_curve(new_pts, validate=False)
    times = res.driver.times[res.markers]
    return Trace(times=times, points=new_pts)


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleSpec:
    """What process to run and which crossing statistic to harvest.

    ``process`` selects the driver SDE: ``"kappa_rho"`` is the single-force
    process (``force_point=None`` starts the force at the seed itself, on
    the side given by ``side``; ``rho=0`` gives the standard process), and
    ``"intermediate"`` is the two-force process with the near force
    starting at the seed and the far force at ``far_point``.
    """

    process: str
    kappa: float
    rho: float
    statistic: str
    radius: float
    side: int = 1
    force_point: float | None = None
    far_point: float | None = None
    escape_factor: float = DEFAULT_ESCAPE_FACTOR
    stage_steps: int = DEFAULT_STAGE_STEPS

    def __post_init__(self) -> None:
        if self.process not in ("kappa_rho", "intermediate"):
            raise ParameterError(f"unknown process {self.process!r}")
        if self.statistic not in ("first_crossing", "last_crossing"):
            raise ParameterError(f"unknown statistic {self.statistic!r}")
        if not 0.0 < self.kappa < 4.0:
            raise ParameterError("kappa must lie in (0, 4)")
        if self.rho < self.kappa / 2.0 - 2.0:
            raise ParameterError("rho must be at least kappa/2 - 2")
        if not self.radius > 0.0:
            raise ParameterError("radius must be positive")
        if not self.escape_factor > 1.0:
            raise ParameterError("escape factor must exceed 1")
        if self.stage_steps < 8:
            raise ParameterError("stage_steps must be at least 8")
        if self.side not in (1, -1):
            raise ParameterError("side must be +1 or -1")
        if self.process == "intermediate":
            if self.far_point is None or not self.far_point > 0.0:
                raise ParameterError(
                    "intermediate process requires a positive far_point"
                )
            if self.force_point is not None:
                raise ParameterError(
                    "intermediate near force always starts at the seed"
                )
        elif self.force_point is not None and self.force_point == 0.0:
            raise ParameterError("finite force point must differ from the seed")


@dataclass(frozen=True)
class EnsembleResult:
    spec: EnsembleSpec
    samples: tuple
    discards: dict
    n_paths: int
    master_seed: int
    seed_offset: int

    @property
    def angles(self) -> np.ndarray:
        return np.array([s.angle for s in self.samples])

    @property
    def valid_fraction(self) -> float:
        return len(self.samples) / self.n_paths if self.n_paths else 0.0


def _stage_edges(t0: float, t_end: float) -> list[float]:
    """Geometric capacity ladder 0, t0, 4*t0, ... capped at t_end."""
    edges = [0.0]
    hi = min(t0, t_end)
    while True:
        edges.append(hi)
        if hi >= t_end:
            return edges
        hi = min(hi * STAGE_RATIO, t_end)


def _integrate_ladder(task: dict, t_end: float):
    """Run the staged SDE to capacity ``t_end``; return (driver, truncated)."""
    spec: EnsembleSpec = task["spec"]
    rng = path_rng(task["master_seed"], task["seed_offset"] + task["index"])
    n_s = spec.stage_steps
    t0_stage = 0.25 * spec.radius * spec.radius
    edges = _stage_edges(t0_stage, t_end)

    times = [np.zeros(1)]
    xi_parts = [np.zeros(1)]
    truncated = False

    if spec.process == "kappa_rho":
        weights = [spec.rho] if spec.rho != 0.0 or spec.force_point else []
        if weights:
            if spec.force_point is None:
                eps0 = spec.side * startup_offset(edges[1], n_s)
                ps = [eps0]
            else:
                ps = [spec.force_point]
        else:
            ps = []
        scale = max(1.0, *(abs(p) for p in ps)) if ps else 1.0
        tol = COLLISION_TOL_FACTOR * scale
        xi = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            seg = integrate_kappa_rho(
                spec.kappa, weights, xi, ps, (hi - lo) / n_s, n_s, rng,
                collision_tol=tol, t0=lo,
            )
            times.append(seg.times[1:])
            xi_parts.append(seg.xi[1:])
            if seg.truncation is not None:
                truncated = True
                break
            xi = float(seg.xi[-1])
            ps = [float(seg.ps[m, -1]) for m in range(len(ps))]
    else:
        params = HypParams(spec.kappa, spec.rho)
        table = task.get("table") or KernelTable(params)
        xi = 0.0
        p1 = startup_offset(edges[1], n_s)
        p2 = spec.far_point
        tol = COLLISION_TOL_FACTOR * max(1.0, abs(p2))
        first = True
        for lo, hi in zip(edges[:-1], edges[1:]):
            seg = integrate_intermediate(
                params, table, xi, p1, p2, (hi - lo) / n_s, n_s, rng,
                collision_tol=tol, degenerate_first_step=first, t0=lo,
            )
            first = False
            times.append(seg.times[1:])
            xi_parts.append(seg.xi[1:])
            if seg.truncation is not None:
                truncated = True
                break
            xi = float(seg.xi[-1])
            p1 = float(seg.ps[0, -1])
            p2 = float(seg.ps[1, -1])

    driver = DrivingPath(
        times=np.concatenate(times), xi=np.concatenate(xi_parts)
    )
    return driver, truncated


def _crossing_path_task(task: dict) -> dict:
    spec: EnsembleSpec = task["spec"]
    r = spec.radius
    try:
        if spec.statistic == "first_crossing":
            return _first_crossing_path(task)
        t_cert = 0.5 * (spec.escape_factor * r) ** 2
        driver, truncated = _integrate_ladder(task, t_cert)
        n = driver.n_steps
        fine_cap = FINE_CAPACITY_FACTOR * r * r
        ks = np.nonzero(
            (driver.times[1:] <= fine_cap)
            | (np.arange(1, n + 1) % TAIL_DECIMATION == 0)
        )[0] + 1
        if ks.size == 0 or ks[-1] != n:
            ks = np.append(ks, n)
        pts = np.concatenate(([driver.xi[0] + 0.0j], tips_at(driver, ks)))
        certified = driver.times[-1] >= t_cert * (1.0 - 1e-12)
        sample = last_crossing_angle(
            pts, r, spec.escape_factor,
            certified=certified, path_id=task["index"],
        )
        if sample is None:
            reason = "collision" if truncated else "no_escape"
            return {"ok": False, "reason": reason}
        return {"ok": True, "sample": sample}
    except ParameterError:
        return {"ok": False, "reason": "degenerate_angle"}
    except GeometryError:
        return {"ok": False, "reason": "geometry"}


def _first_crossing_path(task: dict) -> dict:
    """Staged run that stops as soon as the polyline reaches the circle."""
    spec: EnsembleSpec = task["spec"]
    r = spec.radius
    rng = path_rng(task["master_seed"], task["seed_offset"] + task["index"])
    n_s = spec.stage_steps
    t0_stage = 0.25 * r * r
    edges = _stage_edges(t0_stage, FIRST_CROSSING_CAP * r * r)

    times = [np.zeros(1)]
    xi_parts = [np.zeros(1)]
    pts = [0.0 + 0.0j]

    if spec.process == "kappa_rho":
        weights = [spec.rho] if spec.rho != 0.0 or spec.force_point else []
        if weights:
            ps = (
                [spec.side * startup_offset(edges[1], n_s)]
                if spec.force_point is None
                else [spec.force_point]
            )
        else:
            ps = []
        scale = max(1.0, *(abs(p) for p in ps)) if ps else 1.0
        state = {"xi": 0.0, "ps": ps, "tol": COLLISION_TOL_FACTOR * scale}

        def advance(lo, hi):
            seg = integrate_kappa_rho(
                spec.kappa, weights, state["xi"], state["ps"],
                (hi - lo) / n_s, n_s, rng, collision_tol=state["tol"], t0=lo,
            )
            if seg.truncation is None:
                state["xi"] = float(seg.xi[-1])
                state["ps"] = [float(v) for v in seg.ps[:, -1]]
            return seg
    else:
        params = HypParams(spec.kappa, spec.rho)
        table = task.get("table") or KernelTable(params)
        state = {
            "xi": 0.0,
            "p1": startup_offset(edges[1], n_s),
            "p2": spec.far_point,
            "tol": COLLISION_TOL_FACTOR * max(1.0, abs(spec.far_point)),
            "first": True,
        }

        def advance(lo, hi):
            seg = integrate_intermediate(
                params, table, state["xi"], state["p1"], state["p2"],
                (hi - lo) / n_s, n_s, rng,
                collision_tol=state["tol"],
                degenerate_first_step=state["first"], t0=lo,
            )
            state["first"] = False
            if seg.truncation is None:
                state["xi"] = float(seg.xi[-1])
                state["p1"] = float(seg.ps[0, -1])
                state["p2"] = float(seg.ps[1, -1])
            return seg

    for lo, hi in zip(edges[:-1], edges[1:]):
        seg = advance(lo, hi)
        times.append(seg.times[1:])
        xi_parts.append(seg.xi[1:])
        driver = DrivingPath(
            times=np.concatenate(times), xi=np.concatenate(xi_parts)
        )
        k_prev = len(pts) - 1
        new = tips_at(driver, np.arange(k_prev + 1, driver.n_steps + 1))
        pts.extend(new)
        try:
            sample = first_crossing_angle(
                np.asarray(pts), r, path_id=task["index"]
            )
        except ParameterError:
            return {"ok": False, "reason": "degenerate_angle"}
        if sample is not None:
            return {"ok": True, "sample": sample}
        if seg.truncation is not None:
            return {"ok": False, "reason": "collision"}
    return {"ok": False, "reason": "no_crossing"}


def run_crossing_ensemble(
    spec: EnsembleSpec,
    n_paths: int,
    master_seed: int,
    *,
    seed_offset: int = 0,
    threads: int = 1,
) -> EnsembleResult:
    """Harvest one crossing-angle sample per path, deterministically.

    Path ``i`` draws from the dedicated stream ``(master_seed,
    seed_offset + i)``, so ensembles with disjoint offset ranges are
    independent and any one path can be replayed in isolation.
    """
    if n_paths < 2:
        raise ParameterError("n_paths must be at least 2")
    threads = resolve_threads(threads)
    table = (
        KernelTable(HypParams(spec.kappa, spec.rho))
        if spec.process == "intermediate"
        else None
    )
    tasks = [
        {
            "spec": spec,
            "index": i,
            "master_seed": master_seed,
            "seed_offset": seed_offset,
            "table": table,
        }
        for i in range(n_paths)
    ]
    results = run_tasks(_crossing_path_task, tasks, threads)
    samples = []
    discards: dict[str, int] = {}
    for res in results:
        if res["ok"]:
            samples.append(res["sample"])
        else:
            discards[res["reason"]] = discards.get(res["reason"], 0) + 1
    return EnsembleResult(
        spec=spec,
        samples=tuple(samples),
        discards=discards,
        n_paths=n_paths,
        master_seed=master_seed,
        seed_offset=seed_offset,
    )


# ---------------------------------------------------------------------------
# reversal tests


def _ks_report(
    name: str,
    params: dict,
    res_a: EnsembleResult,
    res_b: EnsembleResult,
) -> KsReport:
    stat, p = ks_two_sample(res_a.angles, res_b.angles)
    valid = (
        res_a.valid_fraction >= MIN_VALID_FRACTION
        and res_b.valid_fraction >= MIN_VALID_FRACTION
    )
    return KsReport(
        test=name,
        params=params,
        n1=len(res_a.samples),
        n2=len(res_b.samples),
        statistic=stat,
        p_value=p,
        discarded={
            "ensemble_a": res_a.discards,
            "ensemble_b": res_b.discards,
        },
        seeds={
            "master_seed": res_a.master_seed,
            "offset_a": res_a.seed_offset,
            "offset_b": res_b.seed_offset,
        },
        valid=valid,
    )


def test_reversal_degenerate(
    kappa: float,
    rho: float,
    side: int = 1,
    n_paths: int = 2000,
    r0: float = 1.0,
    master_seed: int = 0,
    *,
    escape_factor: float = DEFAULT_ESCAPE_FACTOR,
    stage_steps: int = DEFAULT_STAGE_STEPS,
    threads: int = 1,
    return_ensembles: bool = False,
) -> KsReport:
    """Reversal check for the single-force process seeded at its force.

    The law is scale invariant, so the reversed trace is again the same
    process: first-crossing angles at radius 1 must match last-crossing
    angles at radius ``r0`` of an independent forward ensemble.  Returns
    the KS report; low valid fractions flag it invalid rather than raise.
    """
    base = dict(
        process="kappa_rho", kappa=kappa, rho=rho, side=side,
        escape_factor=escape_factor, stage_steps=stage_steps,
    )
    spec_a = EnsembleSpec(statistic="first_crossing", radius=1.0, **base)
    spec_b = EnsembleSpec(statistic="last_crossing", radius=r0, **base)
    res_a = run_crossing_ensemble(
        spec_a, n_paths, master_seed, seed_offset=0, threads=threads
    )
    res_b = run_crossing_ensemble(
        spec_b, n_paths, master_seed, seed_offset=n_paths, threads=threads
    )
    report = _ks_report(
        "reversal_degenerate",
        {
            "kappa": kappa, "rho": rho, "side": side, "r0": r0,
            "n_paths": n_paths, "escape_factor": escape_factor,
            "stage_steps": stage_steps,
        },
        res_a, res_b,
    )
    if return_ensembles:
        return report, res_a, res_b
    return report


def test_reversal_generic(
    kappa: float,
    rho: float,
    b0: float = 1.0,
    n_paths: int = 2000,
    r: float = 0.5,
    master_seed: int = 0,
    *,
    escape_factor: float = DEFAULT_ESCAPE_FACTOR,
    stage_steps: int = DEFAULT_STAGE_STEPS,
    threads: int = 1,
    return_ensembles: bool = False,
) -> KsReport:
    """Reversal check for the single-force process with force at ``b0``.

    Its reversal is the two-force process with the near force at the seed
    and the far force at ``1/b0``.  No scale invariance here: radii must
    be matched reciprocally, first crossings at ``r`` of the two-force
    process against last crossings at ``1/r`` of the forward ensemble.
    """
    if not b0 > 0.0:
        raise ParameterError("b0 must be positive")
    if not 0.0 < r < 1.0 / b0:
        raise ParameterError("r must lie inside (0, 1/b0)")
    spec_a = EnsembleSpec(
        process="intermediate", kappa=kappa, rho=rho,
        statistic="first_crossing", radius=r, far_point=1.0 / b0,
        escape_factor=escape_factor, stage_steps=stage_steps,
    )
    spec_b = EnsembleSpec(
        process="kappa_rho", kappa=kappa, rho=rho,
        statistic="last_crossing", radius=1.0 / r, force_point=b0,
        escape_factor=escape_factor, stage_steps=stage_steps,
    )
    res_a = run_crossing_ensemble(
        spec_a, n_paths, master_seed, seed_offset=0, threads=threads
    )
    res_b = run_crossing_ensemble(
        spec_b, n_paths, master_seed, seed_offset=n_paths, threads=threads
    )
    report = _ks_report(
        "reversal_generic",
        {
            "kappa": kappa, "rho": rho, "b0": b0, "r": r,
            "n_paths": n_paths, "escape_factor": escape_factor,
            "stage_steps": stage_steps,
        },
        res_a, res_b,
    )
    if return_ensembles:
        return report, res_a, res_b
    return report


# ---------------------------------------------------------------------------
# transience


def _transience_path_task(task: dict) -> dict:
    spec: EnsembleSpec = task["spec"]
    T = task["horizon"]
    try:
        driver, truncated = _integrate_ladder(task, 4.0 * T)
        if truncated:
            return {"ok": False, "reason": "collision"}
        n = driver.n_steps
        ks = np.unique(np.append(np.arange(4, n + 1, 4), n))
        mods = np.abs(tips_at(driver, ks))
        t_at = driver.times[ks]
        maxima = [float(mods[t_at <= h].max()) for h in (T, 2.0 * T, 4.0 * T)]
        return {"ok": True, "maxima": maxima}
    except GeometryError:
        return {"ok": False, "reason": "geometry"}


def transience_report(
    kind: str,
    kappa: float,
    rho: float,
    *,
    T: float = 1.0,
    n_paths: int = 1000,
    master_seed: int = 0,
    far_point: float = 1.0,
    stage_steps: int = DEFAULT_STAGE_STEPS,
    threads: int = 1,
) -> dict:
    """Median max-modulus growth across horizons T, 2T, 4T.

    Pathwise prefix maxima are monotone, so the ensemble medians must be
    strictly increasing; for the scale-invariant seed-forced process the
    capacity quadrupling doubles lengths, so median(4T)/median(T) must be
    close to 2.  Both facts are reported as flags, not raised.
    """
    if kind not in ("degenerate", "intermediate"):
        raise ParameterError(f"unknown transience ensemble kind {kind!r}")
    if not T > 0.0:
        raise ParameterError("horizon T must be positive")
    if n_paths < 2:
        raise ParameterError("n_paths must be at least 2")
    process = "kappa_rho" if kind == "degenerate" else "intermediate"
    spec = EnsembleSpec(
        process=process, kappa=kappa, rho=rho,
        statistic="first_crossing", radius=2.0 * math.sqrt(T),
        far_point=far_point if process == "intermediate" else None,
        stage_steps=stage_steps,
    )
    threads = resolve_threads(threads)
    table = (
        KernelTable(HypParams(kappa, rho))
        if process == "intermediate"
        else None
    )
    tasks = [
        {
            "spec": spec,
            "index": i,
            "master_seed": master_seed,
            "seed_offset": 0,
            "table": table,
            "horizon": T,
        }
        for i in range(n_paths)
    ]
    results = run_tasks(_transience_path_task, tasks, threads)
    maxima = np.array([r["maxima"] for r in results if r["ok"]])
    discards: dict[str, int] = {}
    for r_ in results:
        if not r_["ok"]:
            discards[r_["reason"]] = discards.get(r_["reason"], 0) + 1
    if maxima.shape[0] < 2:
        raise GeometryError("too few valid transience paths to take medians")
    medians = np.median(maxima, axis=0)
    ratio = float(medians[2] / medians[0])
    return {
        "kind": kind,
        "kappa": kappa,
        "rho": rho,
        "far_point": far_point if process == "intermediate" else None,
        "horizons": [T, 2.0 * T, 4.0 * T],
        "medians": [float(m) for m in medians],
        "strictly_increasing": bool(
            medians[0] < medians[1] < medians[2]
        ),
        "ratio_4T_over_T": ratio,
        "ratio_within_10pct": bool(abs(ratio / 2.0 - 1.0) <= 0.10),
        "n_paths": n_paths,
        "n_valid": int(maxima.shape[0]),
        "discards": discards,
        "master_seed": master_seed,
        "stage_steps": stage_steps,
    }


# ---------------------------------------------------------------------------
# escape-threshold stability


def _stability_path_task(task: dict) -> dict:
    spec: EnsembleSpec = task["spec"]
    r = spec.radius
    f_lo = spec.escape_factor
    try:
        t_cert_hi = 0.5 * (2.0 * f_lo * r) ** 2
        driver, truncated = _integrate_ladder(task, t_cert_hi)
        if truncated:
            return {"ok": False, "reason": "collision"}
        n = driver.n_steps
        fine_cap = FINE_CAPACITY_FACTOR * r * r
        ks = np.nonzero(
            (driver.times[1:] <= fine_cap)
            | (np.arange(1, n + 1) % TAIL_DECIMATION == 0)
        )[0] + 1
        if ks.size == 0 or ks[-1] != n:
            ks = np.append(ks, n)
        pts = np.concatenate(([driver.xi[0] + 0.0j], tips_at(driver, ks)))
        t_at = np.concatenate(([0.0], driver.times[ks]))
        cut = int(np.searchsorted(t_at, 0.5 * (f_lo * r) ** 2, side="right"))
        lo = last_crossing_angle(pts[:cut], r, f_lo, certified=True)
        hi = last_crossing_angle(pts, r, 2.0 * f_lo, certified=True)
        if lo is None or hi is None:
            return {"ok": False, "reason": "no_crossing"}
        return {"ok": True, "changed": abs(lo.angle - hi.angle) > 1e-12}
    except (ParameterError, GeometryError):
        return {"ok": False, "reason": "degenerate"}


def escape_stability(
    spec: EnsembleSpec,
    n_paths: int,
    master_seed: int,
    *,
    threads: int = 1,
) -> dict:
    """Fraction of paths whose last-crossing angle moves when the escape
    horizon doubles.  Transience predicts this fraction is tiny; it bounds
    the truncation error of every last-crossing ensemble empirically."""
    if spec.statistic != "last_crossing":
        raise ParameterError("escape stability applies to last crossings")
    threads = resolve_threads(threads)
    table = (
        KernelTable(HypParams(spec.kappa, spec.rho))
        if spec.process == "intermediate"
        else None
    )
    tasks = [
        {
            "spec": spec,
            "index": i,
            "master_seed": master_seed,
            "seed_offset": 0,
            "table": table,
        }
        for i in range(n_paths)
    ]
    results = run_tasks(_stability_path_task, tasks, threads)
    flags = [r["changed"] for r in results if r["ok"]]
    discards: dict[str, int] = {}
    for r_ in results:
        if not r_["ok"]:
            discards[r_["reason"]] = discards.get(r_["reason"], 0) + 1
    if not flags:
        raise GeometryError("no valid stability paths")
    return {
        "n_paths": n_paths,
        "n_valid": len(flags),
        "n_changed": int(sum(flags)),
        "changed_fraction": float(sum(flags) / len(flags)),
        "discards": discards,
        "escape_factor": spec.escape_factor,
        "master_seed": master_seed,
    }
