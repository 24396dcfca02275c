"""Two-trace coupling laboratory: joint welding grids and the explicit
two-time mean-one functional built on them.

Two chordal traces grow toward each other from real seeds ``x1 < x2``.
Trace 1 is driven past a near force just to its right (weight ``rho``)
and a far force at ``x2`` (weight ``kappa - 6 - rho``); trace 2 is the
mirror image, with its near force just to its left and far force at
``x1``.  For cut-off times ``(t1, t2)`` whose hulls have disjoint
closures, welding trace 2's image under trace 1's map (and vice versa)
produces real jets at the opposite driver and near-force positions.
From those jets, the force-point gaps, and the hypergeometric kernel an
explicit functional ``M(t1, t2)`` is assembled that equals 1 whenever
either time is zero and whose expectation at stopped times is exactly 1.
Because every layer of the stack enters at once -- SDE driver, forward
maps, welding, jets, kernel -- the sample mean of ``M`` is a sharp
end-to-end correctness probe.

Grid evaluation is amortized: with one trace's cut-off fixed, a single
welding of the other trace's mapped prefix yields jets at *every*
requested cut-off of the second axis in one sweep (snapshots of
:func:`slelab.loewner.jet_sweep`), so an ``m x m`` grid costs ``O(m)``
weldings instead of ``O(m^2)``.

Conventions
-----------
* Evaluation is grid-native: requested times snap down to the driver's
  sample lattice, and stopping rules are expressed in sample indices
  (each such rule remains a valid stopping time, so stopped means are
  exactly 1 in expectation).
* Grid cells on the axes (``t1 == 0`` or ``t2 == 0``) are filled through
  the continuous-extension form of ``M``, whose factors cancel to 1;
  interior cells use the direct product formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .drivers import (
    COLLISION_TOL_FACTOR,
    GAP_TRIGGER_FACTOR,
    integrate_kappa_rho,
    startup_offset,
)
from .parallel import resolve_threads as _resolve_threads
from .parallel import run_tasks as _run_tasks
from .errors import (
    DomainError,
    GeometryError,
    IntegrationAbort,
    ParameterError,
)
from .hypergeometric import HypParams, g0, u0, v0
from .loewner import (
    DrivingPath,
    Jet3,
    SlitChain,
    Trace,
    chain_from_driver,
    chain_prefix,
    jet_sweep,
    map_curve,
    trace_from_driver,
    unzip_curve,
)
from .rng import path_rng

__all__ = [
    "CouplingExponents",
    "coupling_exponents",
    "HullPolygon",
    "polygons_disjoint",
    "PairSetup",
    "simulate_pair",
    "ExitTime",
    "polygon_exit",
    "CouplingGrid",
    "evaluate_grid",
    "eval_A",
    "CouplingCell",
    "eval_cell",
    "q_drift",
    "boundary_deviation",
    "factorization_deviation",
    "ordering_fraction",
    "grid_table",
    "GRID_COLUMNS",
    "martingale_mc_test",
    "drift_regression",
]

EXIT_BISECTIONS = 60
HORIZON_MARGIN = 1.05  # simulate slightly past the capacity exit bound
DEFAULT_GRID_CELLS = 64
DEFAULT_STEPS = 256
MIN_VALID_FRACTION = 0.8
MEAN_TOL_FLOOR = 1e-12  # absolute floor under the 3-sigma mean band


# ---------------------------------------------------------------------------
# exponents


class CouplingExponents(NamedTuple):
    """Exponents entering the two-time functional for given (kappa, rho).

    ``a_p``, ``a_q``, ``a_pq``, ``a_phi`` are the exponents of the
    near-gap, far-gap, force-separation, and map-derivative factors of
    the single-trace weight ``r_j``; ``rk`` is ``rho/kappa``, the
    exponent tying the reduced functional to the near-gap ratios.
    """

    alpha: float
    lam: float
    tau: float
    delta: float
    a_p: float
    a_q: float
    a_pq: float
    a_phi: float
    rk: float


def coupling_exponents(kappa: float, rho: float) -> CouplingExponents:
    return CouplingExponents(
        alpha=(6.0 - kappa) / (2.0 * kappa),
        lam=(8.0 - 3.0 * kappa) * (6.0 - kappa) / (2.0 * kappa),
        tau=(rho + 2.0) * (kappa - 6.0 - rho) / (2.0 * kappa),
        delta=-rho * (kappa - 4.0 - rho) / (4.0 * kappa),
        a_p=-rho / kappa,
        a_q=-(kappa - 6.0 - rho) / kappa,
        a_pq=-rho * (kappa - 6.0 - rho) / (2.0 * kappa),
        a_phi=(rho + 2.0) * (kappa - 6.0 - rho) / (4.0 * kappa),
        rk=rho / kappa,
    )


# ---------------------------------------------------------------------------
# stopping hulls


def _cross(o: complex, a: complex, b: complex) -> float:
    return (a.real - o.real) * (b.imag - o.imag) - (a.imag - o.imag) * (
        b.real - o.real
    )


def _on_segment(a: complex, b: complex, c: complex) -> bool:
    """Whether collinear point c lies within the bounding box of [a, b]."""
    return (
        min(a.real, b.real) <= c.real <= max(a.real, b.real)
        and min(a.imag, b.imag) <= c.imag <= max(a.imag, b.imag)
    )


def _segments_touch(p: complex, q: complex, r: complex, s: complex) -> bool:
    """Closed-segment intersection test (shared endpoints count)."""
    d1 = _cross(r, s, p)
    d2 = _cross(r, s, q)
    d3 = _cross(p, q, r)
    d4 = _cross(p, q, s)
    if (
        d1 != 0.0
        and d2 != 0.0
        and d3 != 0.0
        and d4 != 0.0
        and (d1 > 0) != (d2 > 0)
        and (d3 > 0) != (d4 > 0)
    ):
        return True  # proper crossing
    if d1 == 0.0 and _on_segment(r, s, p):
        return True
    if d2 == 0.0 and _on_segment(r, s, q):
        return True
    if d3 == 0.0 and _on_segment(p, q, r):
        return True
    if d4 == 0.0 and _on_segment(p, q, s):
        return True
    return False


@dataclass(frozen=True)
class HullPolygon:
    """Simple polygon in the closed upper half-plane, implicitly closed.

    Serves as a stopping hull: a trace is stopped at its first sample
    outside the polygon.  Vertices are listed once (the edge from the
    last vertex back to the first is implicit); the interior test uses
    the even-odd rule and is strict, so boundary points count as
    outside.
    """

    vertices: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=complex)
        if v.ndim != 1 or v.size < 3:
            raise ParameterError("polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise ParameterError("polygon vertices must be finite")
        if np.any(v.imag < 0.0):
            raise ParameterError(
                "polygon must lie in the closed upper half-plane"
            )
        if np.any(v == np.roll(v, -1)):
            raise ParameterError("repeated consecutive polygon vertex")
        n = v.size
        w = np.roll(v, -1)
        for i in range(n):
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue  # edges sharing the closing vertex
                if _segments_touch(v[i], w[i], v[j], w[j]):
                    raise ParameterError("polygon edges cross: not simple")
        object.__setattr__(self, "vertices", v)

    def contains_many(self, zs) -> np.ndarray:
        """Strict even-odd interior test, vectorized over points."""
        zs = np.asarray(zs, dtype=complex)
        x = zs.real[..., None]
        y = zs.imag[..., None]
        v = self.vertices
        ax, ay = v.real[None, :], v.imag[None, :]
        bx, by = np.roll(v.real, -1)[None, :], np.roll(v.imag, -1)[None, :]
        straddle = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_int = ax + (y - ay) * (bx - ax) / (by - ay)
        hits = straddle & (x < x_int)
        return np.sum(hits, axis=-1) % 2 == 1

    def contains(self, z: complex) -> bool:
        return bool(self.contains_many(np.asarray([z]))[0])

    def radius_about(self, x: float) -> float:
        """Largest vertex distance from the real point ``x``.

        Any hull grown from ``x`` inside the polygon stays in the
        half-disk of this radius, whose half-plane capacity is
        ``radius**2``; with capacity ``2t`` at time ``t``, the trace must
        leave the polygon by ``t = radius**2 / 2``, so simulating past
        that bound guarantees the exit is observed.
        """
        return float(np.max(np.abs(self.vertices - x)))

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.abs(v[:, None] - v[None, :])))

    @staticmethod
    def half_disk(center: float, radius: float, n_arc: int = 12) -> "HullPolygon":
        """Regular polygon inscribed in the half-disk about a real center."""
        if radius <= 0.0:
            raise ParameterError("half-disk radius must be positive")
        if n_arc < 2:
            raise ParameterError("half-disk needs at least 2 arc segments")
        theta = math.pi * (1.0 - np.arange(n_arc + 1) / n_arc)
        pts = center + radius * np.exp(1j * theta)
        pts.imag[np.abs(pts.imag) < 1e-15 * radius] = 0.0
        return HullPolygon(pts)


def polygons_disjoint(h1: HullPolygon, h2: HullPolygon) -> bool:
    """Whether two simple polygons have disjoint closures."""
    v1, w1 = h1.vertices, np.roll(h1.vertices, -1)
    v2, w2 = h2.vertices, np.roll(h2.vertices, -1)
    for i in range(v1.size):
        for j in range(v2.size):
            if _segments_touch(v1[i], w1[i], v2[j], w2[j]):
                return False
    if bool(h1.contains_many(v2).any()) or bool(h2.contains_many(v1).any()):
        return False
    return True


# ---------------------------------------------------------------------------
# pair simulation


@dataclass(frozen=True)
class PairSetup:
    """Simulated two-trace state with aligned force-point paths.

    ``p1``/``q1`` are the near and far force paths of trace 1 (both to
    its right), ``p2``/``q2`` those of trace 2 (both to its left).
    Chains and traces are precomputed so grid evaluation can slice
    prefixes cheaply.
    """

    kappa: float
    rho: float
    x1: float
    x2: float
    driver1: DrivingPath
    p1: np.ndarray
    q1: np.ndarray
    trace1: Trace
    chain1: SlitChain
    driver2: DrivingPath
    p2: np.ndarray
    q2: np.ndarray
    trace2: Trace
    chain2: SlitChain
    eps1: float
    eps2: float

    @property
    def params(self) -> HypParams:
        return HypParams(self.kappa, self.rho)


def simulate_pair(
    kappa: float,
    rho: float,
    x1: float,
    x2: float,
    T1: float,
    n1: int,
    T2: float,
    n2: int,
    rng1,
    rng2,
) -> PairSetup:
    """Integrate the coupled pair of weighted two-force drivers.

    Trace 1 starts at ``x1`` with forces at ``x1 + eps`` (weight ``rho``)
    and ``x2`` (weight ``kappa - 6 - rho``); trace 2 mirrors it from
    ``x2``.  The two drivers use independent generators, so any joint
    functional of the pair sees two independent traces.  Raises
    :class:`IntegrationAbort` if either driver truncates or its force
    ordering breaks before the requested horizon.
    """
    HypParams(kappa, rho)  # validates kappa in (0,4), rho >= kappa/2 - 2
    if not (np.isfinite(x1) and np.isfinite(x2) and x1 < x2):
        raise ParameterError(f"seeds must satisfy x1 < x2, got ({x1}, {x2})")
    for label, T, n in (("1", T1, n1), ("2", T2, n2)):
        if not (np.isfinite(T) and T > 0.0):
            raise ParameterError(f"horizon T{label} must be positive")
        if n < 1:
            raise ParameterError(f"step count n{label} must be at least 1")
    eps1 = startup_offset(T1, n1)
    eps2 = startup_offset(T2, n2)
    if max(eps1, eps2) >= 0.25 * (x2 - x1):
        raise ParameterError(
            "startup offset comparable to the seed separation; "
            "refine the step size or separate the seeds"
        )
    scale = max(1.0, abs(x1), abs(x2))
    weights = [rho, kappa - 6.0 - rho]
    seg1 = integrate_kappa_rho(
        kappa, weights, x1, [x1 + eps1, x2], T1 / n1, n1, rng1,
        collision_tol=COLLISION_TOL_FACTOR * scale,
    )
    if seg1.truncation is not None:
        raise IntegrationAbort(f"trace 1 driver truncated: {seg1.truncation}")
    seg2 = integrate_kappa_rho(
        kappa, weights, x2, [x2 - eps2, x1], T2 / n2, n2, rng2,
        collision_tol=COLLISION_TOL_FACTOR * scale,
    )
    if seg2.truncation is not None:
        raise IntegrationAbort(f"trace 2 driver truncated: {seg2.truncation}")
    if not (
        np.all(seg1.xi < seg1.ps[0]) and np.all(seg1.ps[0] < seg1.ps[1])
    ):
        raise IntegrationAbort("trace 1 ordering xi < p < q violated")
    if not (
        np.all(seg2.xi > seg2.ps[0]) and np.all(seg2.ps[0] > seg2.ps[1])
    ):
        raise IntegrationAbort("trace 2 ordering xi > p > q violated")
    driver1 = DrivingPath(times=seg1.times, xi=seg1.xi)
    driver2 = DrivingPath(times=seg2.times, xi=seg2.xi)
    return PairSetup(
        kappa=kappa,
        rho=rho,
        x1=x1,
        x2=x2,
        driver1=driver1,
        p1=seg1.ps[0],
        q1=seg1.ps[1],
        trace1=trace_from_driver(driver1),
        chain1=chain_from_driver(driver1),
        driver2=driver2,
        p2=seg2.ps[0],
        q2=seg2.ps[1],
        trace2=trace_from_driver(driver2),
        chain2=chain_from_driver(driver2),
        eps1=eps1,
        eps2=eps2,
    )


# ---------------------------------------------------------------------------
# stopping times


class ExitTime(NamedTuple):
    """First exit of a sampled trace from a polygon hull."""

    index: int
    """First sample index whose trace point lies outside the polygon."""
    time: float
    """Bisection-refined crossing time within the offending segment."""
    point: complex
    """Refined crossing point on the polygon boundary."""


def polygon_exit(trace: Trace, poly: HullPolygon) -> ExitTime:
    """Locate the first sample outside the polygon, then refine by
    bisection on the segment from the last inside sample.

    Sample 0 (the real seed, a boundary point of the polygon) is
    skipped.  Raises :class:`GeometryError` if the trace never leaves
    the polygon within its horizon, or leaves on the very first step.
    """
    inside = poly.contains_many(trace.points[1:])
    outs = np.flatnonzero(~inside)
    if outs.size == 0:
        raise GeometryError(
            "trace never leaves the polygon within the simulated horizon"
        )
    m = int(outs[0]) + 1
    if m == 1:
        raise GeometryError(
            "trace leaves the polygon on its first step; "
            "hull too small for the step size"
        )
    a = trace.points[m - 1]
    b = trace.points[m]
    lo, hi = 0.0, 1.0
    for _ in range(EXIT_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if poly.contains(a + mid * (b - a)):
            lo = mid
        else:
            hi = mid
    t = trace.times[m - 1] + hi * (trace.times[m] - trace.times[m - 1])
    return ExitTime(m, float(t), complex(a + hi * (b - a)))


def _floor_index(times: np.ndarray, t: float) -> int:
    """Largest sample index whose time is <= t (clipped into range)."""
    i = int(np.searchsorted(times, t, side="right")) - 1
    return max(0, min(i, times.size - 1))


def _mark_indices(i_max: int, n_cells: int) -> np.ndarray:
    """Up to ``n_cells + 1`` distinct sample indices spanning [0, i_max]."""
    if i_max < 0:
        raise ParameterError("mark range must be non-negative")
    if n_cells < 1:
        raise ParameterError("need at least one grid cell")
    return np.unique(
        np.linspace(0.0, float(i_max), n_cells + 1).round().astype(np.int64)
    )


# ---------------------------------------------------------------------------
# grid evaluation


@dataclass
class CouplingGrid:
    """Coupling quantities on a ``marks1 x marks2`` grid of sample indices.

    Cell arrays are indexed ``[a, b]`` over ``(marks1, marks2)``; the
    A-jets carry a leading derivative-order axis of length 4.  ``M`` is
    filled on the cells selected by the evaluation mode (``nan``
    elsewhere); axis cells always carry the continuous extension, which
    collapses to 1.  ``Mtilde``/``L1``/``L2`` (the reduced functional
    and its near-gap difference-quotient factors) are only filled in
    ``mode="all"``.
    """

    kappa: float
    rho: float
    x1: float
    x2: float
    marks1: np.ndarray
    marks2: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    xi1: np.ndarray
    p1: np.ndarray
    q1: np.ndarray
    xi2: np.ndarray
    p2: np.ndarray
    q2: np.ndarray
    dphi1: np.ndarray
    dphi2: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    B10: np.ndarray
    Bt11: np.ndarray
    B20: np.ndarray
    Bt21: np.ndarray
    E10: np.ndarray
    E11: np.ndarray
    E12: np.ndarray
    E21: np.ndarray
    E22: np.ndarray
    C12: np.ndarray
    R: np.ndarray
    D: np.ndarray
    N: np.ndarray
    F: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    M: np.ndarray
    Mtilde: np.ndarray | None
    L1: np.ndarray | None
    L2: np.ndarray | None


def _check_marks(marks: np.ndarray, n_samples: int, label: str) -> np.ndarray:
    marks = np.asarray(marks, dtype=np.int64)
    if marks.ndim != 1 or marks.size == 0:
        raise ParameterError(f"marks{label} must be a non-empty 1-D sequence")
    if marks[0] != 0:
        raise ParameterError(f"marks{label} must start at sample 0")
    if np.any(np.diff(marks) <= 0):
        raise ParameterError(f"marks{label} must be strictly increasing")
    if marks[-1] >= n_samples:
        raise ParameterError(f"marks{label} exceed the simulated horizon")
    return marks


def _phi_jet_snapshots(
    chain_j: SlitChain,
    i_j: int,
    pts_k: np.ndarray,
    marks_k: np.ndarray,
    xs: list[float],
) -> list[list[Jet3]]:
    """Jets of the welded image of the other trace at real points ``xs``.

    Fixing trace ``j``'s cut-off at sample ``i_j``, maps the other
    trace's prefix through trace ``j``'s chain, welds the image, and
    returns one jet snapshot per entry of ``marks_k``.
    """
    prefix = chain_prefix(chain_j, int(i_j))
    img = map_curve(prefix, pts_k)
    res = unzip_curve(img, tip_convention="lift", validate=False)
    return jet_sweep(res.chain, xs, record_steps=res.markers[marks_k])


def evaluate_grid(
    setup: PairSetup,
    marks1,
    marks2,
    *,
    mode: str = "all",
) -> CouplingGrid:
    """Evaluate the coupling quantities on a grid of sample-index marks.

    ``marks1``/``marks2`` are strictly increasing sample indices starting
    at 0 (mark 0 supplies the axis cells and anchors the double
    quadrature of ``F``).  ``mode`` selects where the functional ``M``
    itself is assembled:

    * ``"all"`` -- every cell, plus the reduced functional ``Mtilde``
      and the difference-quotient factors ``L1``/``L2``;
    * ``"last_column"`` -- only the final ``marks2`` column (the hot
      path for stopped-mean estimation);
    * ``"none"`` -- skip ``M`` (jets and cell algebra only).

    Kernel evaluations are the dominant per-cell cost, so the modes
    differ only in how many cells call it.
    """
    if mode not in ("all", "last_column", "none"):
        raise ParameterError("mode must be 'all', 'last_column' or 'none'")
    marks1 = _check_marks(marks1, setup.driver1.times.size, "1")
    marks2 = _check_marks(marks2, setup.driver2.times.size, "2")
    m1 = marks1.size
    m2 = marks2.size
    exps = coupling_exponents(setup.kappa, setup.rho)
    hp = setup.params

    t1 = setup.driver1.times[marks1]
    t2 = setup.driver2.times[marks2]
    xi1 = setup.driver1.xi[marks1]
    p1 = setup.p1[marks1]
    q1 = setup.q1[marks1]
    xi2 = setup.driver2.xi[marks2]
    p2 = setup.p2[marks2]
    q2 = setup.q2[marks2]

    pts1 = setup.trace1.points[: int(marks1[-1]) + 1]
    pts2 = setup.trace2.points[: int(marks2[-1]) + 1]

    A1 = np.empty((4, m1, m2))
    B10 = np.empty((m1, m2))
    Bt11 = np.empty((m1, m2))
    for a, i1 in enumerate(marks1):
        snaps = _phi_jet_snapshots(
            setup.chain1, i1, pts2, marks2, [float(xi1[a]), float(p1[a])]
        )
        for b, (jet_xi, jet_p) in enumerate(snaps):
            A1[0, a, b] = jet_xi.value
            A1[1, a, b] = jet_xi.d1
            A1[2, a, b] = jet_xi.d2
            A1[3, a, b] = jet_xi.d3
            B10[a, b] = jet_p.value
            Bt11[a, b] = jet_p.d1

    A2 = np.empty((4, m1, m2))
    B20 = np.empty((m1, m2))
    Bt21 = np.empty((m1, m2))
    for b, i2 in enumerate(marks2):
        snaps = _phi_jet_snapshots(
            setup.chain2, i2, pts1, marks1, [float(xi2[b]), float(p2[b])]
        )
        for a, (jet_xi, jet_p) in enumerate(snaps):
            A2[0, a, b] = jet_xi.value
            A2[1, a, b] = jet_xi.d1
            A2[2, a, b] = jet_xi.d2
            A2[3, a, b] = jet_xi.d3
            B20[a, b] = jet_p.value
            Bt21[a, b] = jet_p.d1

    dphi1 = np.array(
        [s[0].d1 for s in jet_sweep(setup.chain1, [setup.x2], record_steps=marks1)]
    )
    dphi2 = np.array(
        [s[0].d1 for s in jet_sweep(setup.chain2, [setup.x1], record_steps=marks2)]
    )

    E10 = A1[0] - A2[0]
    E11 = A1[0] - B10
    E12 = A1[0] - B20
    E21 = A2[0] - B10
    E22 = A2[0] - B20
    C12 = B10 - B20
    denom = E12 * E21
    if np.any(denom == 0.0):
        raise GeometryError(
            "degenerate geometry: a driver image met the opposite "
            "near-force image (E12*E21 vanished)"
        )
    R = (E11 * E22) / denom
    D = (Bt11 * Bt21) / C12**2
    N = (A1[1] * A2[1]) / E10**2
    inner = cumulative_trapezoid(N, x=t2, axis=1, initial=0.0)
    F = np.exp(2.0 * cumulative_trapezoid(inner, x=t1, axis=0, initial=0.0))

    gap_p1 = p1 - xi1
    gap_q1 = q1 - xi1
    gap_pq1 = q1 - p1
    gap_p2 = xi2 - p2
    gap_q2 = xi2 - q2
    gap_pq2 = p2 - q2
    r1 = (
        gap_p1**exps.a_p
        * gap_q1**exps.a_q
        * gap_pq1**exps.a_pq
        * dphi1**exps.a_phi
    )
    r2 = (
        gap_p2**exps.a_p
        * gap_q2**exps.a_q
        * gap_pq2**exps.a_pq
        * dphi2**exps.a_phi
    )

    pref = (setup.x2 - setup.x1) ** exps.tau
    M = np.full((m1, m2), np.nan)
    # axis cells via the continuous extension: the reduced functional is
    # dphi^(-rho/kappa) while the difference-quotient factors contribute
    # dphi^(+rho/kappa), so the product collapses to 1 up to rounding
    M[0, :] = dphi2 ** (-exps.rk) * dphi2**exps.rk
    M[:, 0] = dphi1 ** (-exps.rk) * dphi1**exps.rk
    M[0, 0] = 1.0

    def _fill_column(b: int) -> None:
        if b == 0:
            return
        for a in range(1, m1):
            x = R[a, b]
            if not 0.0 < x < 1.0:
                raise DomainError(
                    f"cross-ratio {x} outside (0, 1) at interior cell "
                    f"({a}, {b}); hulls too close for a stable evaluation"
                )
            M[a, b] = (
                pref
                * r1[a]
                * r2[b]
                * D[a, b] ** exps.delta
                * v0(hp, float(x))
                * N[a, b] ** exps.alpha
                * F[a, b] ** (-exps.lam)
            )

    Mtilde = None
    L1 = None
    L2 = None
    if mode == "all":
        for b in range(m2):
            _fill_column(b)
        rt1 = r1 * gap_p1 ** (-exps.a_p)
        rt2 = r2 * gap_p2 ** (-exps.a_p)
        L1 = np.abs(E11) / gap_p1[:, None]
        L2 = np.abs(E22) / gap_p2[None, :]
        Mtilde = np.full((m1, m2), np.nan)
        for b in range(1, m2):
            for a in range(1, m1):
                x = R[a, b]
                Mtilde[a, b] = (
                    pref
                    * rt1[a]
                    * rt2[b]
                    * D[a, b] ** exps.delta
                    * abs(denom[a, b]) ** (-exps.rk)
                    * u0(hp, float(x))
                    * N[a, b] ** exps.alpha
                    * F[a, b] ** (-exps.lam)
                )
        # continuous extension on the axes
        Mtilde[0, :] = dphi2 ** (-exps.rk)
        Mtilde[:, 0] = dphi1 ** (-exps.rk)
        Mtilde[0, 0] = 1.0
        L1[0, :] = dphi2
        L2[0, :] = 1.0
        L1[:, 0] = 1.0
        L2[:, 0] = dphi1
        L1[0, 0] = 1.0
        L2[0, 0] = 1.0
    elif mode == "last_column":
        _fill_column(m2 - 1)

    return CouplingGrid(
        kappa=setup.kappa,
        rho=setup.rho,
        x1=setup.x1,
        x2=setup.x2,
        marks1=marks1,
        marks2=marks2,
        t1=t1,
        t2=t2,
        xi1=xi1,
        p1=p1,
        q1=q1,
        xi2=xi2,
        p2=p2,
        q2=q2,
        dphi1=dphi1,
        dphi2=dphi2,
        A1=A1,
        A2=A2,
        B10=B10,
        Bt11=Bt11,
        B20=B20,
        Bt21=Bt21,
        E10=E10,
        E11=E11,
        E12=E12,
        E21=E21,
        E22=E22,
        C12=C12,
        R=R,
        D=D,
        N=N,
        F=F,
        r1=r1,
        r2=r2,
        M=M,
        Mtilde=Mtilde,
        L1=L1,
        L2=L2,
    )


# ---------------------------------------------------------------------------
# pointwise operations


def _snap_pair(setup: PairSetup, t1: float, t2: float) -> tuple[int, int]:
    for label, t, times in (
        ("t1", t1, setup.driver1.times),
        ("t2", t2, setup.driver2.times),
    ):
        if not (np.isfinite(t) and 0.0 <= t <= times[-1]):
            raise ParameterError(
                f"{label}={t} outside the simulated horizon [0, {times[-1]}]"
            )
    return (
        _floor_index(setup.driver1.times, t1),
        _floor_index(setup.driver2.times, t2),
    )


def eval_A(setup: PairSetup, j: int, t1: float, t2: float) -> Jet3:
    """Jet of the opposite welded image at trace ``j``'s driver position.

    Times snap down to the sample lattice.  With the opposite cut-off at
    zero this is the identity jet at the driver value; with ``t_j = 0``
    the value equals the opposite far-force position (up to
    discretization), since both track the image of seed ``x_j``.
    """
    if j not in (1, 2):
        raise ParameterError("trace index j must be 1 or 2")
    i1, i2 = _snap_pair(setup, t1, t2)
    if j == 1:
        snaps = _phi_jet_snapshots(
            setup.chain1,
            i1,
            setup.trace2.points[: i2 + 1],
            np.array([i2]),
            [float(setup.driver1.xi[i1])],
        )
    else:
        snaps = _phi_jet_snapshots(
            setup.chain2,
            i2,
            setup.trace1.points[: i1 + 1],
            np.array([i1]),
            [float(setup.driver2.xi[i2])],
        )
    return snaps[0][0]


@dataclass(frozen=True)
class CouplingCell:
    """All coupling quantities of one grid cell (snapped times)."""

    t1: float
    t2: float
    A1: Jet3
    A2: Jet3
    B10: float
    Bt11: float
    B20: float
    Bt21: float
    E10: float
    E11: float
    E12: float
    E21: float
    E22: float
    C12: float
    R: float
    D: float
    N: float
    F: float
    r1: float
    r2: float
    M: float
    Mtilde: float
    L1: float
    L2: float
    Q1: float
    Q2: float


def eval_cell(
    setup: PairSetup, t1: float, t2: float, *, n_quad: int = 32
) -> CouplingCell:
    """Evaluate one cell of the coupling grid at snapped times.

    ``n_quad`` controls the quadrature resolution used for the
    double-integral factor ``F`` (cells per axis from 0 to the snapped
    time).  Interior cells carry the direct functional, the reduced
    functional with its difference-quotient factors, and both drift
    coefficients; on an axis the extension values are returned and the
    drift coefficients are ``nan``.
    """
    i1, i2 = _snap_pair(setup, t1, t2)
    marks1 = _mark_indices(i1, n_quad) if i1 > 0 else np.array([0])
    marks2 = _mark_indices(i2, n_quad) if i2 > 0 else np.array([0])
    grid = evaluate_grid(setup, marks1, marks2, mode="last_column")
    a = marks1.size - 1
    b = marks2.size - 1
    exps = coupling_exponents(setup.kappa, setup.rho)
    hp = setup.params
    interior = i1 > 0 and i2 > 0
    if interior:
        x = float(grid.R[a, b])
        gap_p1 = float(grid.p1[a] - grid.xi1[a])
        gap_p2 = float(grid.xi2[b] - grid.p2[b])
        rt1 = grid.r1[a] * gap_p1 ** (-exps.a_p)
        rt2 = grid.r2[b] * gap_p2 ** (-exps.a_p)
        mtilde = (
            (setup.x2 - setup.x1) ** exps.tau
            * rt1
            * rt2
            * grid.D[a, b] ** exps.delta
            * abs(grid.E12[a, b] * grid.E21[a, b]) ** (-exps.rk)
            * u0(hp, x)
            * grid.N[a, b] ** exps.alpha
            * grid.F[a, b] ** (-exps.lam)
        )
        l1 = abs(grid.E11[a, b]) / gap_p1
        l2 = abs(grid.E22[a, b]) / gap_p2
        q1v = q_drift(grid, 1, a, b)
        q2v = q_drift(grid, 2, a, b)
    elif i1 == 0 and i2 > 0:
        mtilde = float(grid.dphi2[b] ** (-exps.rk))
        l1, l2 = float(grid.dphi2[b]), 1.0
        q1v = q2v = float("nan")
    elif i2 == 0 and i1 > 0:
        mtilde = float(grid.dphi1[a] ** (-exps.rk))
        l1, l2 = 1.0, float(grid.dphi1[a])
        q1v = q2v = float("nan")
    else:
        mtilde, l1, l2 = 1.0, 1.0, 1.0
        q1v = q2v = float("nan")
    return CouplingCell(
        t1=float(grid.t1[a]),
        t2=float(grid.t2[b]),
        A1=Jet3(*(float(grid.A1[h, a, b]) for h in range(4))),
        A2=Jet3(*(float(grid.A2[h, a, b]) for h in range(4))),
        B10=float(grid.B10[a, b]),
        Bt11=float(grid.Bt11[a, b]),
        B20=float(grid.B20[a, b]),
        Bt21=float(grid.Bt21[a, b]),
        E10=float(grid.E10[a, b]),
        E11=float(grid.E11[a, b]),
        E12=float(grid.E12[a, b]),
        E21=float(grid.E21[a, b]),
        E22=float(grid.E22[a, b]),
        C12=float(grid.C12[a, b]),
        R=float(grid.R[a, b]),
        D=float(grid.D[a, b]),
        N=float(grid.N[a, b]),
        F=float(grid.F[a, b]),
        r1=float(grid.r1[a]),
        r2=float(grid.r2[b]),
        M=float(grid.M[a, b]),
        Mtilde=float(mtilde),
        L1=float(l1),
        L2=float(l2),
        Q1=float(q1v),
        Q2=float(q2v),
    )


def q_drift(grid: CouplingGrid, j: int, a: int, b: int) -> float:
    """Drift coefficient of the functional along time axis ``j`` at grid
    cell ``(a, b)``: the log-increment of ``M`` per unit standardized
    driver noise of trace ``j``.

    Well-defined at interior cells.  Its terms cancel to a finite limit
    toward the axes, but the direct evaluation there becomes a
    difference of diverging terms, so prefer interior cells.
    """
    if j not in (1, 2):
        raise ParameterError("trace index j must be 1 or 2")
    hp = HypParams(grid.kappa, grid.rho)
    a = int(np.arange(grid.marks1.size)[a])  # normalize negative indices
    b = int(np.arange(grid.marks2.size)[b])
    if j == 1:
        A = grid.A1[:, a, b]
        Ej0 = grid.E10[a, b]
        Ejj = grid.E11[a, b]
        Ejk = grid.E12[a, b]
        dxp = grid.xi1[a] - grid.p1[a]
        dxq = grid.xi1[a] - grid.q1[a]
    else:
        A = grid.A2[:, a, b]
        Ej0 = -grid.E10[a, b]
        Ejj = grid.E22[a, b]
        Ejk = grid.E21[a, b]
        dxp = grid.xi2[b] - grid.p2[b]
        dxq = grid.xi2[b] - grid.q2[b]
    x = float(grid.R[a, b])
    if not 0.0 <= x < 1.0:
        raise DomainError(f"cross-ratio {x} outside [0, 1) at cell ({a}, {b})")
    if Ejj == 0.0 or Ejk == 0.0 or Ej0 == 0.0:
        raise DomainError(
            f"drift coefficient undefined at an axis cell ({a}, {b})"
        )
    g = g0(hp, x)
    return float(
        (3.0 - grid.kappa / 2.0) * (A[2] / A[1] - 2.0 * A[1] / Ej0)
        + g * (A[1] / Ejj - A[1] / Ejk)
        - grid.rho / dxp
        - (grid.kappa - 6.0 - grid.rho) / dxq
    )


# ---------------------------------------------------------------------------
# grid diagnostics


def boundary_deviation(grid: CouplingGrid) -> float:
    """Largest absolute deviation of the axis cells of ``M`` from 1."""
    return float(
        max(np.max(np.abs(grid.M[0, :] - 1.0)), np.max(np.abs(grid.M[:, 0] - 1.0)))
    )


def factorization_deviation(grid: CouplingGrid) -> float:
    """Largest relative gap between the direct functional and its reduced
    factorization ``Mtilde * (L1 * L2)**(rho/kappa)`` over interior cells.

    The identity is algebraic, so the result measures accumulated
    floating-point divergence between the two code paths.
    """
    if grid.Mtilde is None:
        raise ParameterError("factorization requires a grid evaluated with mode='all'")
    if grid.M.shape[0] < 2 or grid.M.shape[1] < 2:
        return 0.0
    rk = coupling_exponents(grid.kappa, grid.rho).rk
    direct = grid.M[1:, 1:]
    factored = grid.Mtilde[1:, 1:] * (grid.L1[1:, 1:] * grid.L2[1:, 1:]) ** rk
    return float(np.max(np.abs(factored / direct - 1.0)))


def ordering_fraction(grid: CouplingGrid) -> float:
    """Fraction of cells with the image ordering A10 <= B10 < B20 <= A20."""
    ok = (
        (grid.A1[0] <= grid.B10)
        & (grid.B10 < grid.B20)
        & (grid.B20 <= grid.A2[0])
    )
    return float(np.mean(ok))


GRID_COLUMNS = (
    "t1", "t2",
    "A10", "A11", "A12", "A13",
    "A20", "A21", "A22", "A23",
    "B10", "Bt11", "B20", "Bt21",
    "E10", "E11", "E12", "E21", "E22", "C12",
    "R", "D", "N", "F", "r1", "r2", "M",
)


def grid_table(grid: CouplingGrid) -> np.ndarray:
    """Flatten a grid to rows matching :data:`GRID_COLUMNS` (row-major in
    ``(t1, t2)``)."""
    m1, m2 = grid.M.shape
    t1 = np.repeat(grid.t1, m2)
    t2 = np.tile(grid.t2, m1)
    cols = [
        t1, t2,
        grid.A1[0].ravel(), grid.A1[1].ravel(), grid.A1[2].ravel(), grid.A1[3].ravel(),
        grid.A2[0].ravel(), grid.A2[1].ravel(), grid.A2[2].ravel(), grid.A2[3].ravel(),
        grid.B10.ravel(), grid.Bt11.ravel(), grid.B20.ravel(), grid.Bt21.ravel(),
        grid.E10.ravel(), grid.E11.ravel(), grid.E12.ravel(),
        grid.E21.ravel(), grid.E22.ravel(), grid.C12.ravel(),
        grid.R.ravel(), grid.D.ravel(), grid.N.ravel(), grid.F.ravel(),
        np.repeat(grid.r1, m2), np.tile(grid.r2, m1),
        grid.M.ravel(),
    ]
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# stopped-mean Monte Carlo


def _mc_path_task(task: dict) -> dict:
    try:
        rng1 = path_rng(task["master_seed"], task["seed_offset"] + 2 * task["index"])
        rng2 = path_rng(
            task["master_seed"], task["seed_offset"] + 2 * task["index"] + 1
        )
        setup = simulate_pair(
            task["kappa"], task["rho"], task["x1"], task["x2"],
            task["T1"], task["n_steps"], task["T2"], task["n_steps"],
            rng1, rng2,
        )
        ex1 = polygon_exit(setup.trace1, task["poly1"])
        ex2 = polygon_exit(setup.trace2, task["poly2"])
        i2_stop = min(
            _floor_index(setup.driver2.times, task["t2_bar"]), ex2.index
        )
        u = np.minimum(task["grid_idx"], ex1.index)
        marks1 = np.unique(u)
        if i2_stop > 0:
            marks2 = _mark_indices(i2_stop, task["n_cells"])
        else:
            marks2 = np.array([0])
        grid = evaluate_grid(setup, marks1, marks2, mode="last_column")
        col = grid.M[:, -1]
        series = col[np.searchsorted(marks1, u)]
        return {
            "ok": True,
            "series": series,
            "u": u,
            "m_min": float(col.min()),
            "m_max": float(col.max()),
            "t1_exit": ex1.time,
            "t2_stop": float(setup.driver2.times[i2_stop]),
        }
    except IntegrationAbort:
        return {"ok": False, "reason": "integration"}
    except GeometryError:
        return {"ok": False, "reason": "geometry"}
    except DomainError:
        return {"ok": False, "reason": "domain"}


def martingale_mc_test(
    kappa: float,
    rho: float,
    x1: float,
    x2: float,
    poly1: HullPolygon,
    poly2: HullPolygon,
    t2_bar: float,
    n_paths: int = 5000,
    master_seed: int = 0,
    *,
    n_grid: int = DEFAULT_GRID_CELLS,
    n_cells: int = DEFAULT_GRID_CELLS,
    n_steps: int = DEFAULT_STEPS,
    seed_offset: int = 0,
    threads: int = 1,
) -> dict:
    """Stopped-mean estimate of the two-time functional over a path ensemble.

    Each path pair is stopped at the first sample outside its polygon
    hull; trace 2 is additionally capped at the deterministic time
    ``t2_bar``.  The functional is evaluated at every time of a common
    ``n_grid``-cell grid on trace 1's axis (frozen at the stopped value
    past the exit), always against trace 2's stopped time.  All stopping
    rules are sample-index measurable, so every per-time mean estimates
    exactly 1; deviations beyond the stderr band expose bias anywhere in
    the stack.

    Returns a report dict with per-time means, standard errors, the
    terminal mean, the observed value band, the lag-1 autocorrelation of
    live increments, and discard counts.  Paths that fail geometric or
    integration preconditions are discarded and counted; fewer than
    ``MIN_VALID_FRACTION`` valid flags the run as statistically invalid.
    """
    HypParams(kappa, rho)
    if not x1 < x2:
        raise ParameterError(f"seeds must satisfy x1 < x2, got ({x1}, {x2})")
    if not isinstance(poly1, HullPolygon) or not isinstance(poly2, HullPolygon):
        raise ParameterError("stopping hulls must be HullPolygon instances")
    probe = 1e-6 * (x2 - x1)
    if not poly1.contains(complex(x1, probe)):
        raise ParameterError("hull 1 does not contain a neighborhood of seed x1")
    if not poly2.contains(complex(x2, probe)):
        raise ParameterError("hull 2 does not contain a neighborhood of seed x2")
    if not polygons_disjoint(poly1, poly2):
        raise GeometryError("stopping hulls must have disjoint closures")
    if not (np.isfinite(t2_bar) and t2_bar > 0.0):
        raise ParameterError("t2_bar must be a positive time")
    if n_paths < 2:
        raise ParameterError("need at least 2 paths")
    if n_grid < 1 or n_cells < 1 or n_steps < n_grid:
        raise ParameterError(
            "need n_steps >= n_grid >= 1 and at least one quadrature cell"
        )

    r1 = poly1.radius_about(x1)
    r2 = poly2.radius_about(x2)
    T1 = HORIZON_MARGIN * r1 * r1 / 2.0
    T2 = HORIZON_MARGIN * r2 * r2 / 2.0
    grid_idx = (np.arange(n_grid + 1, dtype=np.int64) * n_steps) // n_grid
    t_grid = (T1 / n_steps) * grid_idx

    threads = _resolve_threads(threads)
    base = {
        "kappa": kappa, "rho": rho, "x1": x1, "x2": x2,
        "poly1": poly1, "poly2": poly2,
        "T1": T1, "T2": T2, "t2_bar": t2_bar,
        "n_steps": n_steps, "n_cells": n_cells,
        "grid_idx": grid_idx,
        "master_seed": master_seed, "seed_offset": seed_offset,
    }
    tasks = [dict(base, index=i) for i in range(n_paths)]
    results = _run_tasks(_mc_path_task, tasks, threads)

    discards: dict[str, int] = {}
    series, mins, maxs, t1_exits, t2_stops = [], [], [], [], []
    pair_x, pair_y = [], []
    for res in results:
        if not res["ok"]:
            discards[res["reason"]] = discards.get(res["reason"], 0) + 1
            continue
        series.append(res["series"])
        mins.append(res["m_min"])
        maxs.append(res["m_max"])
        t1_exits.append(res["t1_exit"])
        t2_stops.append(res["t2_stop"])
        d = np.diff(res["series"])
        live = np.diff(res["u"]) > 0
        keep = live[:-1] & live[1:]
        pair_x.append(d[:-1][keep])
        pair_y.append(d[1:][keep])

    n_valid = len(series)
    report: dict = {
        "kappa": kappa, "rho": rho, "x1": x1, "x2": x2,
        "t2_bar": t2_bar,
        "hull_radius_1": r1, "hull_radius_2": r2,
        "horizon_1": T1, "horizon_2": T2,
        "n_paths": n_paths, "n_valid": n_valid,
        "discards": discards,
        "n_grid": n_grid, "n_cells": n_cells, "n_steps": n_steps,
        "master_seed": master_seed, "seed_offset": seed_offset,
        "threads": threads,
        "t_grid": t_grid.tolist(),
    }
    if n_valid < 2:
        report.update(
            low_effective_n=True, passed=False, mean=[], stderr=[],
            terminal_mean=float("nan"), terminal_stderr=float("nan"),
        )
        return report

    mat = np.vstack(series)
    mean = mat.mean(axis=0)
    stderr = mat.std(axis=0, ddof=1) / math.sqrt(n_valid)
    dev_ok = np.abs(mean - 1.0) <= 3.0 * stderr + MEAN_TOL_FLOOR
    px = np.concatenate(pair_x) if pair_x else np.empty(0)
    py = np.concatenate(pair_y) if pair_y else np.empty(0)
    if px.size >= 2 and px.std() > 0 and py.std() > 0:
        lag1 = float(np.corrcoef(px, py)[0, 1])
        lag1_stderr = 1.0 / math.sqrt(px.size)
    else:
        lag1, lag1_stderr = float("nan"), float("nan")
    low_n = n_valid < MIN_VALID_FRACTION * n_paths
    report.update(
        mean=mean.tolist(),
        stderr=stderr.tolist(),
        terminal_mean=float(mean[-1]),
        terminal_stderr=float(stderr[-1]),
        max_stderr=float(stderr.max()),
        max_abs_deviation=float(np.max(np.abs(mean - 1.0))),
        mean_within_band_everywhere=bool(dev_ok.all()),
        m_min=float(min(mins)),
        m_max=float(max(maxs)),
        lag1_autocorr=lag1,
        lag1_stderr=lag1_stderr,
        n_lag_pairs=int(px.size),
        mean_t1_exit=float(np.mean(t1_exits)),
        mean_t2_stop=float(np.mean(t2_stops)),
        low_effective_n=bool(low_n),
        passed=bool(dev_ok.all() and not low_n),
    )
    return report


# ---------------------------------------------------------------------------
# drift-coefficient validation


def drift_regression(
    kappa: float,
    rho: float,
    x1: float,
    x2: float,
    *,
    T1: float,
    T2: float,
    n_steps: int,
    i1: int,
    di: int,
    i2: int,
    n_paths: int,
    master_seed: int = 0,
    seed_offset: int = 0,
    n_quad: int = 32,
) -> dict:
    """Ensemble regression of realized functional increments on the
    drift-coefficient prediction along trace 1's axis.

    For each path pair, the functional is evaluated at sample indices
    ``i1`` and ``i1 + di`` (trace 2 fixed at ``i2``), the trace-1
    standardized noise increment over the window is reconstructed from
    the driver path minus its explicit drift, and the realized increment
    ``M_hi - M_lo`` is regressed through the origin on the prediction
    ``M_lo * Q1 * dB / sqrt(kappa)``.  A slope of 1 within its standard
    error validates the drift coefficient.  Paths whose window hits the
    integrator's gap-refinement regime are skipped (the coarse
    reconstruction of ``dB`` is exact only on unrefined steps).
    """
    if not (0 < i1 and 0 < di and i1 + di <= n_steps and 0 < i2 <= n_steps):
        raise ParameterError("regression window outside the sample range")
    dt = T1 / n_steps
    trigger = GAP_TRIGGER_FACTOR * math.sqrt(kappa * dt)
    sqrtk = math.sqrt(kappa)
    xs, ys = [], []
    skipped = {"integration": 0, "geometry": 0, "domain": 0, "refined": 0}
    for i in range(n_paths):
        rng1 = path_rng(master_seed, seed_offset + 2 * i)
        rng2 = path_rng(master_seed, seed_offset + 2 * i + 1)
        try:
            setup = simulate_pair(
                kappa, rho, x1, x2, T1, n_steps, T2, n_steps, rng1, rng2
            )
        except IntegrationAbort:
            skipped["integration"] += 1
            continue
        ks = np.arange(i1, i1 + di)
        gap_near = setup.p1[ks] - setup.driver1.xi[ks]
        gap_far = setup.q1[ks] - setup.driver1.xi[ks]
        if np.min(gap_near) < trigger or np.min(gap_far) < trigger:
            skipped["refined"] += 1
            continue
        marks1 = np.unique(
            np.concatenate([_mark_indices(i1 + di, n_quad), [i1, i1 + di]])
        )
        marks2 = _mark_indices(i2, n_quad)
        try:
            grid = evaluate_grid(setup, marks1, marks2, mode="last_column")
        except (GeometryError, DomainError):
            skipped["geometry"] += 1
            continue
        a_lo = int(np.searchsorted(marks1, i1))
        a_hi = int(np.searchsorted(marks1, i1 + di))
        m_lo = grid.M[a_lo, -1]
        m_hi = grid.M[a_hi, -1]
        try:
            q1v = q_drift(grid, 1, a_lo, grid.marks2.size - 1)
        except DomainError:
            skipped["domain"] += 1
            continue
        xi = setup.driver1.xi
        drift = rho / (xi[ks] - setup.p1[ks]) + (kappa - 6.0 - rho) / (
            xi[ks] - setup.q1[ks]
        )
        dB = (xi[i1 + di] - xi[i1] - float(np.sum(drift)) * dt) / sqrtk
        xs.append(m_lo * q1v * dB / sqrtk)
        ys.append(m_hi - m_lo)
    n = len(xs)
    if n < 3:
        raise ParameterError("too few valid paths for the regression")
    x_arr = np.asarray(xs)
    y_arr = np.asarray(ys)
    sxx = float(np.dot(x_arr, x_arr))
    slope = float(np.dot(x_arr, y_arr)) / sxx
    resid = y_arr - slope * x_arr
    slope_stderr = math.sqrt(float(np.dot(resid, resid)) / ((n - 1) * sxx))
    return {
        "slope": slope,
        "stderr": slope_stderr,
        "n": n,
        "skipped": skipped,
        "window": [int(i1), int(i1 + di), int(i2)],
    }
