"""Chordal Loewner machinery on the upper half-plane.

Hulls are grown with vertical-slit elementary maps.  One step of capacity
increment ``dt`` at base point ``xi`` corresponds to the slit
``[xi, xi + 2i*sqrt(dt)]`` and the pair of maps

* forward (hull-removing):  ``w -> xi + sign(Re(w - xi)) * sqrt((w - xi)**2 + 4*dt)``
* inverse (hull-creating):  ``z -> xi + sqrt(z - xi - 2*sqrt(dt)) * sqrt(z - xi + 2*sqrt(dt))``

with principal square roots; both map the upper half-plane to itself on
their domains, and reals to the right (left) of the slit base stay to the
right (left).  A chain of such steps discretizes the chordal Loewner flow
of a piecewise-constant driving function; half-plane capacity is additive,
2*dt per step.

Conventions used throughout:

* A driving function sampled at ``times[0..n]`` produces ``n`` steps; step
  ``k`` (spanning ``(times[k-1], times[k]]``) uses the right-endpoint value
  ``xi[k]``.
* The trace point at ``times[k]`` is obtained by applying the inverse
  elementary maps of steps ``1..k`` (innermost last) to the lifted point
  ``xi[k] + 1j*sqrt(dt_k)``.
* Real-axis evaluation of the forward map refuses points whose flow enters
  the closed interval ``[xi_k - 2*sqrt(dt_k), xi_k + 2*sqrt(dt_k)]`` at any
  step; this is a conservative, per-step-exact notion of "swallowed".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, GeometryError, ParameterError

__all__ = [
    "DrivingPath",
    "Trace",
    "SlitChain",
    "Jet3",
    "UnzipResult",
    "chain_append",
    "chain_from_steps",
    "chain_from_driver",
    "chain_prefix",
    "forward_point",
    "inverse_point",
    "forward_jet",
    "jet_sweep",
    "trace_from_driver",
    "tips_at",
    "unzip_curve",
    "map_curve",
    "hcap_of_chain",
    "hcap_by_expansion",
    "swallowed_interval",
    "is_simple_polyline",
]

TURN_LIMIT = 0.2  # radians of chord slant tolerated per unzip step
_MAX_SUBDIV = 12  # cap on per-point unzip subdivisions


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class DrivingPath:
    """A sampled driving function with optional force-point paths.

    ``times`` are capacity times (hcap = 2t), strictly increasing from 0;
    ``xi`` are the driver samples; ``forces`` maps a name (e.g. ``"p1"``)
    to a real path sampled on the same grid.  ``truncation`` records why
    integration stopped early, if it did.
    """

    times: np.ndarray
    xi: np.ndarray
    forces: dict[str, np.ndarray] = field(default_factory=dict)
    truncation: str | None = None

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.xi, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "xi", x)
        if t.ndim != 1 or x.shape != t.shape:
            raise ParameterError("times and xi must be 1-d arrays of equal length")
        if t.size == 0 or t[0] != 0.0:
            raise ParameterError("times must start at 0")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ParameterError("times must be strictly increasing")
        clean = {}
        for name, path in self.forces.items():
            p = np.asarray(path, dtype=float)
            if p.shape != t.shape:
                raise ParameterError(f"force path {name!r} length mismatch")
            clean[name] = p
        object.__setattr__(self, "forces", clean)

    @property
    def n_steps(self) -> int:
        return self.times.size - 1


@dataclass(frozen=True)
class Trace:
    """A polyline in the closed upper half-plane with capacity timestamps."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.points, dtype=complex)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)
        if t.shape != p.shape or t.ndim != 1:
            raise ParameterError("times and points must be 1-d arrays of equal length")

    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.points)))


@dataclass(frozen=True)
class SlitChain:
    """An ordered sequence of vertical-slit steps (xi_k, dt_k > 0).

    ``reach[k] = 2*sqrt(dt[k])`` is both the slit height and the half-width
    of the real interval contracted onto the base point by step k's forward
    map.  Instances are immutable; prefixes share storage via array views.
    """

    xi: np.ndarray
    dt: np.ndarray
    reach: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        x = np.asarray(self.xi, dtype=float)
        d = np.asarray(self.dt, dtype=float)
        object.__setattr__(self, "xi", x)
        object.__setattr__(self, "dt", d)
        if x.shape != d.shape or x.ndim != 1:
            raise ParameterError("xi and dt must be 1-d arrays of equal length")
        if d.size and not np.all(d > 0.0):
            raise ParameterError("all step capacities dt must be positive")
        if self.reach is None:
            object.__setattr__(self, "reach", 2.0 * np.sqrt(d))

    @property
    def n_steps(self) -> int:
        return self.xi.size

    @property
    def total_capacity(self) -> float:
        return 2.0 * float(np.sum(self.dt))


class Jet3(NamedTuple):
    """Value and first three derivatives of a map at a real point."""

    value: float
    d1: float
    d2: float
    d3: float


class UnzipResult(NamedTuple):
    """Output of :func:`unzip_curve`.

    ``markers[j]`` is the number of chain steps consumed through input
    point ``j``, so ``chain_prefix(chain, markers[j])`` is the chain that
    welds exactly the sub-polyline ``points[0..j]``.
    """

    chain: SlitChain
    driver: DrivingPath
    markers: np.ndarray


# ---------------------------------------------------------------------------
# chain construction


def chain_from_steps(xi, dt) -> SlitChain:
    return SlitChain(np.asarray(xi, dtype=float), np.asarray(dt, dtype=float))


def chain_append(chain: SlitChain, xi: float, dt: float) -> SlitChain:
    """Return a new chain with one elementary step appended."""
    if not dt > 0.0:
        raise ParameterError("step capacity dt must be positive")
    return chain_from_steps(
        np.concatenate([chain.xi, [float(xi)]]),
        np.concatenate([chain.dt, [float(dt)]]),
    )


def chain_from_driver(driver: DrivingPath) -> SlitChain:
    """Discretize a sampled driver: step k uses the right-endpoint xi[k]."""
    if driver.n_steps == 0:
        return chain_from_steps([], [])
    return chain_from_steps(driver.xi[1:], np.diff(driver.times))


def chain_prefix(chain: SlitChain, n: int) -> SlitChain:
    """First ``n`` steps of a chain (shares storage)."""
    if not 0 <= n <= chain.n_steps:
        raise ParameterError("prefix length out of range")
    return SlitChain(chain.xi[:n], chain.dt[:n], chain.reach[:n])


# ---------------------------------------------------------------------------
# pointwise evaluation


def _forward_array(z: np.ndarray, xi: float, reach: float) -> np.ndarray:
    w = z - xi
    s = np.sqrt(w * w + reach * reach)
    return xi + np.where(w.real >= 0.0, s, -s)


def _inverse_inplace(w: np.ndarray, xi: float, reach_sq: float) -> None:
    """Apply one inverse slit map in place (single-sqrt branch form).

    Valid for points off the closed slit's base — everywhere the sweeps
    evaluate.  ``xi + sign(Re(z-xi)) * sqrt((z-xi)**2 - reach_sq)`` equals
    the branch-safe product ``xi + sqrt(z-xi-reach)*sqrt(z-xi+reach)`` on
    the open upper half-plane and on the real axis beyond the base.
    """
    np.subtract(w, xi, out=w)
    neg = w.real < 0.0
    np.multiply(w, w, out=w)
    np.subtract(w, reach_sq, out=w)
    np.sqrt(w, out=w)
    np.negative(w, where=neg, out=w)
    np.add(w, xi, out=w)


def _inverse_array(z: np.ndarray, xi: float, reach: float) -> np.ndarray:
    w = np.array(z, dtype=complex, copy=True)
    _inverse_inplace(w, xi, reach * reach)
    return w


def forward_point(chain: SlitChain, z):
    """Composed forward (hull-removing) map at complex point(s) z."""
    out = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    for k in range(chain.n_steps):
        out = _forward_array(out, chain.xi[k], chain.reach[k])
    return out[0] if np.isscalar(z) or np.asarray(z).ndim == 0 else out


def inverse_point(chain: SlitChain, z):
    """Composed inverse (hull-creating) map at complex point(s) z."""
    out = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    for k in range(chain.n_steps - 1, -1, -1):
        out = _inverse_array(out, chain.xi[k], chain.reach[k])
    return out[0] if np.isscalar(z) or np.asarray(z).ndim == 0 else out


def map_curve(chain: SlitChain, curve, check: bool = True):
    """Image of a polyline under the chain's forward map.

    Raises :class:`GeometryError` if the curve meets the chain's hull: an
    interior point whose image falls onto or below the real axis, or a real
    point inside a step's contracted base interval.
    """
    trace_in = isinstance(curve, Trace)
    pts = curve.points if trace_in else np.asarray(curve, dtype=complex)
    z = pts.astype(complex, copy=True)
    if chain.n_steps:
        scale = max(1.0, float(np.max(np.abs(z))), float(np.max(np.abs(chain.xi))))
        tol = 1e-12 * scale
        interior = z.imag > tol
        for k in range(chain.n_steps):
            xi_k = chain.xi[k]
            r_k = chain.reach[k]
            if check:
                on_axis = ~interior
                if np.any(on_axis & (np.abs(z.real - xi_k) < r_k)):
                    raise GeometryError(
                        f"curve meets the hull base at step {k} (xi={xi_k:g})"
                    )
            z = _forward_array(z, xi_k, r_k)
            if check and np.any(interior & (z.imag <= 0.0)):
                raise GeometryError(f"curve passes through the hull at step {k}")
    if trace_in:
        return Trace(curve.times, z)
    return z


# ---------------------------------------------------------------------------
# real-axis jets


def _jet_lists(chain: SlitChain) -> tuple[list[float], list[float]]:
    return chain.xi.tolist(), chain.reach.tolist()


def jet_sweep(
    chain: SlitChain,
    xs,
    record_steps=None,
) -> list[list[Jet3]]:
    """Forward jets at real points ``xs`` after selected chain prefixes.

    ``record_steps`` is an increasing sequence of prefix lengths (0..n);
    the result has one snapshot per requested prefix, each a list of one
    :class:`Jet3` per entry of ``xs``.  With ``record_steps=None`` a single
    snapshot at the full chain is returned.  Raises :class:`DomainError`
    if a point's flow enters a step's contracted base interval.
    """
    xs = [float(v) for v in np.atleast_1d(xs)]
    n = chain.n_steps
    if record_steps is None:
        record = [n]
    else:
        record = [int(r) for r in record_steps]
        if any(r < 0 or r > n for r in record):
            raise ParameterError("record_steps out of range")
        if any(b < a for a, b in zip(record, record[1:])):
            raise ParameterError("record_steps must be non-decreasing")
    xi_l, reach_l = _jet_lists(chain)
    m = len(xs)
    v = list(xs)
    g1 = [1.0] * m
    g2 = [0.0] * m
    g3 = [0.0] * m
    out: list[list[Jet3]] = []
    pos = 0
    while pos < len(record) and record[pos] == 0:
        out.append([Jet3(v[i], 1.0, 0.0, 0.0) for i in range(m)])
        pos += 1
    for k in range(n):
        xi_k = xi_l[k]
        r_k = reach_l[k]
        rsq = r_k * r_k
        for i in range(m):
            u = v[i] - xi_k
            if -r_k <= u <= r_k:
                raise DomainError(
                    f"real point {xs[i]:g} is swallowed at step {k} "
                    f"(flow value {v[i]:g} within reach {r_k:g} of base {xi_k:g})"
                )
            s = math.sqrt(u * u + rsq)
            if u < 0.0:
                s = -s
            f1 = u / s
            f2 = rsq / (s * s * s)
            f3 = -3.0 * f2 * u / (s * s)
            a1 = g1[i]
            a2 = g2[i]
            g3[i] = f3 * a1 * a1 * a1 + 3.0 * f2 * a1 * a2 + f1 * g3[i]
            g2[i] = f2 * a1 * a1 + f1 * a2
            g1[i] = f1 * a1
            v[i] = xi_k + s
        while pos < len(record) and record[pos] == k + 1:
            out.append([Jet3(v[i], g1[i], g2[i], g3[i]) for i in range(m)])
            pos += 1
    return out


def forward_jet(chain: SlitChain, x: float, order: int = 3) -> Jet3:
    """Value and derivatives (through ``order`` <= 3) of the forward map at
    a real point outside the swallowed set."""
    if not 0 <= order <= 3:
        raise ParameterError("jet order must be between 0 and 3")
    jet = jet_sweep(chain, [x])[0][0]
    if order < 3:
        parts = list(jet)
        for i in range(order + 1, 4):
            parts[i] = 0.0
        jet = Jet3(*parts)
    return jet


# ---------------------------------------------------------------------------
# traces


def trace_from_driver(driver: DrivingPath) -> Trace:
    """Discretized Loewner trace of a sampled driver.

    Point k is the image of the lifted right-endpoint driver value under
    the inverse maps of steps k..1; point 0 is xi(0).
    """
    n = driver.n_steps
    pts = np.empty(n + 1, dtype=complex)
    pts[0] = driver.xi[0]
    if n:
        dts = np.diff(driver.times)
        step_xi = driver.xi[1:]
        reach_sq = 4.0 * dts
        z = step_xi + 1j * np.sqrt(dts)
        for k in range(n - 1, -1, -1):
            _inverse_inplace(z[k:], step_xi[k], reach_sq[k])
        pts[1:] = z
    return Trace(driver.times, pts)


def tips_at(driver: DrivingPath, indices) -> np.ndarray:
    """Trace points at selected sample indices (1..n), without computing
    the whole trace.  ``indices`` must be strictly increasing."""
    ks = np.asarray(indices, dtype=np.int64)
    if ks.size == 0:
        return np.empty(0, dtype=complex)
    n = driver.n_steps
    if ks[0] < 1 or ks[-1] > n or np.any(np.diff(ks) <= 0):
        raise ParameterError("indices must be strictly increasing in 1..n_steps")
    dts = np.diff(driver.times)
    step_xi = driver.xi[1:]
    reach_sq = 4.0 * dts
    z = step_xi[ks - 1] + 1j * np.sqrt(dts[ks - 1])
    pos = ks.size
    for k in range(int(ks[-1]) - 1, -1, -1):
        while pos > 0 and ks[pos - 1] - 1 >= k:
            pos -= 1
        _inverse_inplace(z[pos:], step_xi[k], reach_sq[k])
    return z


# ---------------------------------------------------------------------------
# unzip (curve -> driver)


def unzip_curve(
    curve,
    turn_limit: float = TURN_LIMIT,
    tip_convention: str = "curve",
    validate: bool = True,
) -> UnzipResult:
    """Weld a simple polyline back to the real line, recovering its chain
    and driving function (capacity-parameterized).

    ``tip_convention`` selects how a consumed point of height ``h`` above
    the current base relates to its elementary slit:

    * ``"curve"`` — the points are samples of the curve itself; each point
      is the tip of its slit, so the step capacity is ``h**2 / 4``.  When
      the chord from the current base to the next image point slants more
      than ``turn_limit`` radians from vertical, the chord is consumed in
      halves (the slit map straightens the remainder toward vertical, so
      the subdivision terminates).
    * ``"lift"`` — the points were produced by :func:`trace_from_driver`,
      whose step-k point is the image of the lift ``xi_k + 1j*sqrt(dt_k)``
      and therefore sits at height ``sqrt(5*dt_k)`` over a slit of height
      ``2*sqrt(dt_k)``; the step capacity is ``h**2 / 5`` and consumption
      is exactly one step per sample.  This inverts trace_from_driver to
      machine precision, and the height-to-slit ratio is preserved to
      first order under conformal maps, so it is also the right choice
      for unzipping mapped traces.

    Points whose image grazes the real axis are skipped (recorded only in
    the markers); an image crossing below it raises :class:`GeometryError`.
    With ``validate=True`` a strict segment-crossing scan rejects
    self-intersecting input upfront; callers that already know the curve
    is simple may skip it.
    """
    if tip_convention not in ("curve", "lift"):
        raise ParameterError("tip_convention must be 'curve' or 'lift'")
    lift = tip_convention == "lift"
    pts = curve.points if isinstance(curve, Trace) else np.asarray(curve, dtype=complex)
    m = pts.size
    if m == 0:
        raise ParameterError("empty curve")
    scale = max(1.0, float(np.max(np.abs(pts))))
    if abs(pts[0].imag) > 1e-9 * scale:
        raise GeometryError("curve must start on the real line")
    if validate and not is_simple_polyline(pts):
        raise GeometryError("self-intersecting curve")
    z = pts.astype(complex, copy=True)
    seed = float(z[0].real)
    cross_tol = -1e-9 * scale
    skip_tol = 1e-6 * scale  # below this height a point carries no capacity
    xi_steps: list[float] = []
    dt_steps: list[float] = []
    markers = np.zeros(m, dtype=np.int64)
    base = seed
    for j in range(1, m):
        guard = 0
        while True:
            w = complex(z[j])
            y = w.imag
            if y < cross_tol:
                raise GeometryError(
                    f"curve point {j} crosses the welded boundary (Im={y:.3e})"
                )
            if y <= skip_tol:
                break  # no capacity left in this point
            if lift:
                final = True
                target = w
            else:
                slant = abs(math.atan2(y, w.real - base) - 0.5 * math.pi)
                final = slant <= turn_limit or guard >= _MAX_SUBDIV
                target = w if final else 0.5 * (base + w)
                guard += 0 if final else 1
            xi_k = target.real
            h = target.imag
            if lift:
                dt_k = 0.2 * h * h
                reach = 2.0 * math.sqrt(dt_k)
            else:
                # a slit of capacity h^2/4 has reach equal to its height
                dt_k = 0.25 * h * h
                reach = h
            start = j + 1 if final else j
            z[start:] = _forward_array(z[start:], xi_k, reach)
            xi_steps.append(xi_k)
            dt_steps.append(dt_k)
            base = xi_k
            if final:
                break
        markers[j] = len(xi_steps)
    chain = chain_from_steps(xi_steps, dt_steps)
    times = np.concatenate([[0.0], np.cumsum(dt_steps)]) if dt_steps else np.zeros(1)
    driver = DrivingPath(times=times, xi=np.concatenate([[seed], xi_steps]))
    return UnzipResult(chain, driver, markers)


# ---------------------------------------------------------------------------
# capacity & diagnostics


def hcap_of_chain(chain: SlitChain) -> float:
    """Half-plane capacity of the chain's hull: exactly 2 * sum(dt)."""
    return chain.total_capacity


def _hull_diameter_bound(chain: SlitChain) -> float:
    if chain.n_steps == 0:
        return 0.0
    lo = float(np.min(chain.xi - chain.reach))
    hi = float(np.max(chain.xi + chain.reach))
    return max(hi - lo, float(np.max(chain.reach)))


def hcap_by_expansion(chain: SlitChain, radius_factor: float = 1e3) -> float:
    """Independent capacity estimate from the large-|z| expansion
    forward(z) = z + hcap/z + O(1/z^2), fitted at z = i*R."""
    diam = max(_hull_diameter_bound(chain), math.sqrt(max(chain.total_capacity, 0.0)))
    if diam == 0.0:
        return 0.0
    R = radius_factor * diam
    z = complex(0.0, R)
    f = forward_point(chain, z)
    return float(((f - z) * z).real)


def _real_flow_swallowed(chain: SlitChain, x: float) -> bool:
    v = x
    for xi_k, r_k in zip(chain.xi.tolist(), chain.reach.tolist()):
        u = v - xi_k
        if -r_k <= u <= r_k:
            return True
        s = math.sqrt(u * u + r_k * r_k)
        v = xi_k + (s if u > 0.0 else -s)
    return False


def swallowed_interval(chain: SlitChain) -> tuple[float, float] | None:
    """Real interval refused by :func:`forward_jet`, found by bisection.

    Returns None for an empty chain.  The reported interval is the hull of
    the swallowed set; for continuously-sampled drivers the set is an
    interval and the report is exact to the bisection tolerance.
    """
    if chain.n_steps == 0:
        return None
    lo_bound = float(np.min(chain.xi - chain.reach))
    hi_bound = float(np.max(chain.xi + chain.reach))
    anchor = float(chain.xi[0])  # always swallowed (base of the first slit)
    span = max(hi_bound - lo_bound, 1.0)
    tol = 1e-12 * span

    lo, hi = lo_bound - 1e-9 * span, anchor
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _real_flow_swallowed(chain, mid):
            hi = mid
        else:
            lo = mid
    left = hi

    lo, hi = anchor, hi_bound + 1e-9 * span
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _real_flow_swallowed(chain, mid):
            lo = mid
        else:
            hi = mid
    right = lo
    return (left, right)


def is_simple_polyline(points) -> bool:
    """True if no two non-adjacent segments strictly cross (O(n^2),
    vectorized per row; endpoint touching does not count as a crossing)."""
    p = np.asarray(points, dtype=complex)
    a = p[:-1]
    b = p[1:]
    n = a.size

    def cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return u.real * v.imag - u.imag * v.real

    for i in range(n - 2):
        c = a[i + 2 :]
        d = b[i + 2 :]
        ab = b[i] - a[i]
        cd = d - c
        d1 = cross(ab, c - a[i])
        d2 = cross(ab, d - a[i])
        d3 = cross(cd, a[i] - c)
        d4 = cross(cd, b[i] - c)
        if np.any((d1 * d2 < 0.0) & (d3 * d4 < 0.0)):
            return False
    return True
