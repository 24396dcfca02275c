"""Stochastic driving functions for the chordal Loewner engine.

Three generators, all returning :class:`~slelab.loewner.DrivingPath` on a
uniform capacity grid:

* :func:`drive_standard` -- xi(t) = sqrt(kappa) * B(t);
* :func:`drive_kappa_rho` -- Euler--Maruyama for
  ``d xi = sqrt(kappa) dB + sum_m rho_m dt / (xi - p_m)``,
  ``d p_m = 2 dt / (p_m - xi)``, with finite, at-infinity, or degenerate
  (``x0 +- eps0``) force points;
* :func:`drive_intermediate` -- the one-sided two-force variant whose drift
  is the hypergeometric kernel ``J(p1 - xi, p2 - xi)`` from
  :mod:`slelab.hypergeometric`, including the degenerate ``p1 = 0+`` startup
  where the first global step integrates ``J = -rho/X1 + regular`` with the
  regular part given by :func:`~slelab.hypergeometric.drift_j_degenerate_limit`.

Scheme conventions (shared by all integrators):

* drift is evaluated at the left endpoint of each (sub)step;
* a global step is split into ``SUBSTEPS`` conditioned Brownian-bridge
  substeps whenever the smallest tracked gap is below
  ``GAP_TRIGGER_FACTOR * sqrt(kappa * dt)`` at the step start; the bridge
  increments sum to the global increment exactly, so integrations that never
  trigger refinement are bit-identical to unrefined ones;
* degenerate force points start at offset ``eps0 = EPS0_FACTOR * sqrt(T/n)``;
* a gap falling to or below ``COLLISION_TOL_FACTOR * scale`` (with
  ``scale = max(1, |x0|, |p_m(0)|)``) during a substepped global step
  truncates the path with a recorded reason (maximal-interval semantics);
  the same collapse within an unrefined global step raises
  :class:`~slelab.errors.IntegrationAbort`, since a gap that large cannot
  cross the tolerance in one step unless the step size is too coarse;
* randomness is drawn from a counter-based generator so that path ``i`` of an
  ensemble depends only on ``(master_seed, i)`` (see :mod:`slelab.rng`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, IntegrationAbort, ParameterError
from .hypergeometric import (
    HypParams,
    KernelTable,
    X_MAX,
    drift_j,
    g0,
)
from .loewner import DrivingPath
from .rng import path_rng

SUBSTEPS = 32
GAP_TRIGGER_FACTOR = 10.0
COLLISION_TOL_FACTOR = 1e-6
EPS0_FACTOR = 1e-2

FINITE = "finite"
AT_INFINITY = "at_infinity"
DEGENERATE_PLUS = "degenerate_plus"
DEGENERATE_MINUS = "degenerate_minus"
_KINDS = (FINITE, AT_INFINITY, DEGENERATE_PLUS, DEGENERATE_MINUS)


def startup_offset(T: float, n: int) -> float:
    """Initial gap ``eps0`` given to a degenerate force point."""
    return EPS0_FACTOR * math.sqrt(T / n)


@dataclass(frozen=True)
class ForceSpec:
    """Location of one force point (the weight ``rho`` lives alongside it).

    ``kind`` is one of ``"finite"`` (with a real ``point``),
    ``"at_infinity"`` (no drift contribution), ``"degenerate_plus"`` or
    ``"degenerate_minus"`` (starts at ``x0 +- eps0``).
    """

    kind: str
    point: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown force kind {self.kind!r}")
        if self.kind == FINITE:
            if self.point is None or not math.isfinite(self.point):
                raise ParameterError("finite force needs a finite point")
        elif self.point is not None:
            raise ParameterError(f"force kind {self.kind!r} takes no point")

    @staticmethod
    def finite(point: float) -> "ForceSpec":
        return ForceSpec(FINITE, float(point))

    @staticmethod
    def at_infinity() -> "ForceSpec":
        return ForceSpec(AT_INFINITY)

    @staticmethod
    def degenerate_plus() -> "ForceSpec":
        return ForceSpec(DEGENERATE_PLUS)

    @staticmethod
    def degenerate_minus() -> "ForceSpec":
        return ForceSpec(DEGENERATE_MINUS)


def _check_horizon(T: float, n: int) -> None:
    if not (math.isfinite(T) and T > 0.0):
        raise ParameterError(f"horizon T={T} must be positive and finite")
    if int(n) != n or n < 1:
        raise ParameterError(f"step count n={n} must be a positive integer")


@dataclass(frozen=True)
class SleConfig:
    """Configuration for :func:`drive_kappa_rho`.

    ``forces`` is a sequence of ``(rho_m, ForceSpec)`` pairs.  At most one
    degenerate force on each side; finite force points must differ from the
    seed ``x0``.  Weights are unrestricted here -- side-specific lower bounds
    belong to the statistical suites that need them.
    """

    kappa: float
    x0: float
    forces: tuple[tuple[float, ForceSpec], ...]
    T: float
    n: int
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.kappa < 4.0:
            raise ParameterError(f"kappa={self.kappa} outside (0, 4)")
        _check_horizon(self.T, self.n)
        object.__setattr__(
            self, "forces", tuple((float(r), s) for r, s in self.forces)
        )
        plus = minus = 0
        for _, spec in self.forces:
            if not isinstance(spec, ForceSpec):
                raise ParameterError("forces must pair a weight with a ForceSpec")
            if spec.kind == FINITE and spec.point == self.x0:
                raise ParameterError("finite force point coincides with x0")
            plus += spec.kind == DEGENERATE_PLUS
            minus += spec.kind == DEGENERATE_MINUS
        if plus > 1 or minus > 1:
            raise ParameterError("at most one degenerate force per side")


@dataclass(frozen=True)
class IntermediateConfig:
    """Configuration for :func:`drive_intermediate`.

    The driver starts at 0 with force points ``0 < p1 < p2`` to its right;
    ``p1 = None`` requests the degenerate ``0+`` start.  Requires
    ``rho >= kappa/2 - 2`` (enforced through the kernel parameter bundle).
    """

    kappa: float
    rho: float
    p1: float | None
    p2: float
    T: float
    n: int
    seed: int

    def __post_init__(self) -> None:
        HypParams(self.kappa, self.rho)  # validates kappa and rho ranges
        _check_horizon(self.T, self.n)
        if self.p1 is None:
            if not self.p2 > 0.0:
                raise ParameterError("degenerate p1 requires p2 > 0")
        elif not 0.0 < self.p1 < self.p2:
            raise ParameterError(f"need 0 < p1 < p2, got ({self.p1}, {self.p2})")

    @property
    def params(self) -> HypParams:
        return HypParams(self.kappa, self.rho)


@dataclass(frozen=True)
class SegmentResult:
    """Raw output of one integration segment (times relative to its start)."""

    times: np.ndarray          # length n_done + 1, starting at t0
    xi: np.ndarray
    ps: np.ndarray             # shape (n_forces, n_done + 1)
    truncation: str | None
    substepped_steps: int


@dataclass(frozen=True)
class DriveDiagnostics:
    """Integration diagnostics returned alongside a path on request."""

    substepped_steps: int


def _split_increment(dW: float, dt: float, m: int, rng) -> list[float]:
    """Split ``dW`` over ``dt`` into ``m`` conditioned bridge increments.

    Sequential conditional sampling: with ``k`` substeps remaining and
    remainder ``rem``, the next increment is
    ``rem/k + sqrt((dt/m) * (k-1)/k) * N(0,1)``; the last takes the
    floating-point remainder, so the increments sum back to ``dW`` up to a
    few ulps.
    """

    sub = dt / m
    out = []
    rem = dW
    for j in range(m - 1):
        k = m - j
        delta = rem / k + math.sqrt(sub * (k - 1) / k) * rng.standard_normal()
        out.append(delta)
        rem -= delta
    out.append(rem)
    return out


def integrate_kappa_rho(
    kappa: float,
    weights: Sequence[float],
    xi0: float,
    ps0: Sequence[float],
    dt: float,
    n: int,
    rng,
    *,
    collision_tol: float,
    t0: float = 0.0,
) -> SegmentResult:
    """Integrate one uniform-grid segment of the multi-force driver SDE.

    ``weights[m]`` multiplies ``dt/(xi - p_m)`` in the driver drift; every
    tracked force point also flows by ``2 dt / (p_m - xi)``.  Forces at
    infinity contribute nothing and must be dropped by the caller.  The
    generator ``rng`` supplies one upfront normal per global step plus lazy
    bridge draws for refined steps.
    """

    m_forces = len(weights)
    if len(ps0) != m_forces:
        raise ParameterError("weights and initial force points length mismatch")
    sqrtk = math.sqrt(kappa)
    trigger = GAP_TRIGGER_FACTOR * math.sqrt(kappa * dt)
    normals = rng.standard_normal(n)
    sq_dt = math.sqrt(dt)

    xi = float(xi0)
    ps = [float(p) for p in ps0]
    sides = [1.0 if p > xi else -1.0 for p in ps]
    xi_out = [xi]
    ps_out = [[p] for p in ps]
    truncation = None
    substepped = 0
    n_done = 0

    for k in range(n):
        dW = sq_dt * normals[k]
        gaps = [sides[m] * (ps[m] - xi) for m in range(m_forces)]
        refined = any(g < trigger for g in gaps)
        if refined:
            substepped += 1
            incs = _split_increment(dW, dt, SUBSTEPS, rng)
            sub = dt / SUBSTEPS
        else:
            incs = (dW,)
            sub = dt
        for dw in incs:
            drift = 0.0
            for m in range(m_forces):
                drift += weights[m] / (xi - ps[m])
            xi_new = xi + (sqrtk * dw + drift * sub)
            for m in range(m_forces):
                ps[m] += 2.0 * sub / (ps[m] - xi)
            xi = xi_new
            for m in range(m_forces):
                gap = sides[m] * (ps[m] - xi)
                if gap <= collision_tol:
                    if refined:
                        truncation = (
                            f"force point {m + 1} gap {gap:.3e} at or below "
                            f"collision tolerance {collision_tol:.3e} at "
                            f"t={t0 + (n_done + 1) * dt:.6g}"
                        )
                        break
                    raise IntegrationAbort(
                        f"gap {gap:.3e} collapsed below tolerance within one "
                        f"coarse step at t={t0 + (n_done + 1) * dt:.6g}; "
                        "step size too coarse"
                    )
            if truncation:
                break
        if truncation:
            break
        n_done += 1
        xi_out.append(xi)
        for m in range(m_forces):
            ps_out[m].append(ps[m])

    times = t0 + dt * np.arange(n_done + 1)
    return SegmentResult(
        times=times,
        xi=np.array(xi_out),
        ps=np.array(ps_out) if m_forces else np.empty((0, n_done + 1)),
        truncation=truncation,
        substepped_steps=substepped,
    )


def drive_standard(
    kappa: float, T: float, n: int, seed: int, *, x0: float = 0.0
) -> DrivingPath:
    """Driver of standard chordal SLE(kappa): ``sqrt(kappa)`` times Brownian."""

    if not (math.isfinite(kappa) and kappa > 0.0):
        raise ParameterError(f"kappa={kappa} must be positive")
    _check_horizon(T, n)
    rng = path_rng(seed, 0)
    dt = T / n
    increments = math.sqrt(kappa) * (math.sqrt(dt) * rng.standard_normal(n))
    xi = np.empty(n + 1)
    xi[0] = x0
    xi[1:] = x0 + np.cumsum(increments)
    return DrivingPath(times=dt * np.arange(n + 1), xi=xi)


def _config_scale(x0: float, points: Sequence[float]) -> float:
    return max(1.0, abs(x0), max((abs(p) for p in points), default=0.0))


def drive_kappa_rho(
    cfg: SleConfig, *, return_diagnostics: bool = False
) -> DrivingPath:
    """Euler--Maruyama driver for chordal SLE(kappa; rho_1, ..., rho_m)."""

    eps0 = startup_offset(cfg.T, cfg.n)
    weights: list[float] = []
    ps0: list[float] = []
    names: list[str] = []
    for idx, (rho, spec) in enumerate(cfg.forces):
        if spec.kind == AT_INFINITY:
            continue
        if spec.kind == FINITE:
            ps0.append(spec.point)
        elif spec.kind == DEGENERATE_PLUS:
            ps0.append(cfg.x0 + eps0)
        else:
            ps0.append(cfg.x0 - eps0)
        weights.append(rho)
        names.append(f"p{idx + 1}")

    seg = integrate_kappa_rho(
        cfg.kappa,
        weights,
        cfg.x0,
        ps0,
        cfg.T / cfg.n,
        cfg.n,
        path_rng(cfg.seed, 0),
        collision_tol=COLLISION_TOL_FACTOR * _config_scale(cfg.x0, ps0),
    )
    path = DrivingPath(
        times=seg.times,
        xi=seg.xi,
        forces={name: seg.ps[i] for i, name in enumerate(names)},
        truncation=seg.truncation,
    )
    if return_diagnostics:
        return path, DriveDiagnostics(seg.substepped_steps)
    return path


def integrate_intermediate(
    params: HypParams,
    table: KernelTable,
    xi0: float,
    p10: float,
    p20: float,
    dt: float,
    n: int,
    rng,
    *,
    collision_tol: float,
    degenerate_first_step: bool = False,
    t0: float = 0.0,
) -> SegmentResult:
    """Integrate one segment of the two-force intermediate driver SDE.

    The drift on the driver is ``J(X1, X2)`` with ``X_j = p_j - xi``,
    evaluated through the kernel table.  With ``degenerate_first_step`` the
    first global step replaces the table value by the exact decomposition
    ``-rho/X1 + regular(X2)``, whose regular part is the startup limit of
    ``J + rho/X1``; this keeps the singular term explicit while ``X1`` is
    still at its artificial offset.
    """

    kappa, rho = params.kappa, params.rho
    sqrtk = math.sqrt(kappa)
    trigger = GAP_TRIGGER_FACTOR * math.sqrt(kappa * dt)
    normals = rng.standard_normal(n)
    sq_dt = math.sqrt(dt)
    reg_coef = rho - kappa * params.a * params.b / params.c

    xi = float(xi0)
    p1 = float(p10)
    p2 = float(p20)
    xi_out = [xi]
    p1_out = [p1]
    p2_out = [p2]
    truncation = None
    substepped = 0
    n_done = 0

    for k in range(n):
        dW = sq_dt * normals[k]
        startup = degenerate_first_step and k == 0 and t0 == 0.0
        refined = min(p1 - xi, p2 - p1) < trigger or startup
        if refined:
            substepped += 1
            incs = _split_increment(dW, dt, SUBSTEPS, rng)
            sub = dt / SUBSTEPS
        else:
            incs = (dW,)
            sub = dt
        for dw in incs:
            x1 = p1 - xi
            x2 = p2 - xi
            if startup:
                drift = -rho / x1 + reg_coef / x2
            else:
                drift = table.drift_j(x1, x2)
            xi_new = xi + (sqrtk * dw + drift * sub)
            p1 += 2.0 * sub / x1
            p2 += 2.0 * sub / x2
            xi = xi_new
            gap1 = p1 - xi
            gap12 = p2 - p1
            if gap1 <= collision_tol or gap12 <= collision_tol:
                which = (
                    "driver-to-p1 gap" if gap1 <= collision_tol else "p1-to-p2 gap"
                )
                worst = min(gap1, gap12)
                if refined:
                    truncation = (
                        f"{which} {worst:.3e} at or below collision tolerance "
                        f"{collision_tol:.3e} at t={t0 + (n_done + 1) * dt:.6g}"
                    )
                    break
                raise IntegrationAbort(
                    f"{which} {worst:.3e} collapsed below tolerance within one "
                    f"coarse step at t={t0 + (n_done + 1) * dt:.6g}; "
                    "step size too coarse"
                )
        if truncation:
            break
        n_done += 1
        xi_out.append(xi)
        p1_out.append(p1)
        p2_out.append(p2)

    times = t0 + dt * np.arange(n_done + 1)
    return SegmentResult(
        times=times,
        xi=np.array(xi_out),
        ps=np.array([p1_out, p2_out]),
        truncation=truncation,
        substepped_steps=substepped,
    )


def drive_intermediate(
    cfg: IntermediateConfig,
    *,
    table: KernelTable | None = None,
    return_diagnostics: bool = False,
) -> DrivingPath:
    """Driver of the intermediate process with force points ``p1 < p2``.

    Passing a prebuilt ``table`` (for the same ``(kappa, rho)``) skips the
    Chebyshev construction, which matters when generating ensembles.
    """

    params = cfg.params
    if table is None:
        table = KernelTable(params)
    elif table.params != params:
        raise ParameterError("kernel table parameters do not match the config")
    degenerate = cfg.p1 is None
    p10 = startup_offset(cfg.T, cfg.n) if degenerate else cfg.p1

    seg = integrate_intermediate(
        params,
        table,
        0.0,
        p10,
        cfg.p2,
        cfg.T / cfg.n,
        cfg.n,
        path_rng(cfg.seed, 0),
        collision_tol=COLLISION_TOL_FACTOR * _config_scale(0.0, [p10, cfg.p2]),
        degenerate_first_step=degenerate,
    )
    path = DrivingPath(
        times=seg.times,
        xi=seg.xi,
        forces={"p1": seg.ps[0], "p2": seg.ps[1]},
        truncation=seg.truncation,
    )
    if return_diagnostics:
        return path, DriveDiagnostics(seg.substepped_steps)
    return path


def gap_log_drift(
    X1: float,
    X2: float,
    kappa: float,
    rho: float,
    *,
    table: KernelTable | None = None,
) -> float:
    """Analytic drift of ``ln(X2/X1)`` for the two-gap process; always <= 0.

    ``-(2 - kappa/2) (1/X1^2 - 1/X2^2) + (1/X1 - 1/X2) J(X1, X2)``.  The
    bound ``|J| <= (2 - kappa/2)(1/X1 + 1/X2)`` makes the sum non-positive,
    which the statistical suites use as a runtime sanity monitor.  A kernel
    table evaluates J quickly; without one the exact kernel is used.
    """

    if not 0.0 < X1 < X2:
        raise DomainError(f"need 0 < X1 < X2, got ({X1}, {X2})")
    if table is not None:
        J = table.drift_j(X1, X2)
    elif X1 / X2 > X_MAX:
        # nearly equal gaps: clamp the kernel argument as the table does;
        # both terms vanish there, so the clamp error is second order
        J = -(1.0 / X1 - 1.0 / X2) * g0(HypParams(kappa, rho), X_MAX)
    else:
        J = drift_j(HypParams(kappa, rho), X1, X2)
    inv1 = 1.0 / X1
    inv2 = 1.0 / X2
    return -(2.0 - kappa / 2.0) * (inv1 * inv1 - inv2 * inv2) + (inv1 - inv2) * J
