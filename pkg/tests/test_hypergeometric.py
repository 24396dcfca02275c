"""Kernel-level tests: frozen closed forms, independent references, invariants."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slelab.errors import DomainError, ParameterError
from slelab.hypergeometric import (
    X_MAX,
    HypParams,
    KernelTable,
    drift_j,
    drift_j_degenerate_limit,
    f0,
    f0_at_one_extrapolated,
    f0_limit_at_one,
    g0,
    g0_prime_at_zero,
    gauss_2f1,
    lanczos_gamma,
    u0,
    u0_d1,
    u0_d2,
    u0_limit_at_one,
    v0,
)

mpmath.mp.dps = 50

# Parameter sets exercised throughout: terminating, generic, integer c-a-b.
PARAM_SETS = [
    HypParams(2.0, 1.0),
    HypParams(2.0, -1.0),
    HypParams(3.0, 0.5),
    HypParams(3.5, 2.0),
    HypParams(8.0 / 3.0, 1.0),
]


def mp_2f1(a, b, c, x):
    return float(mpmath.hyp2f1(a, b, c, x))


def test_gauss_2f1_frozen_values():
    assert gauss_2f1(1.0, -1.0, 3.0, 0.5) == pytest.approx(1.0 - 0.5 / 3.0, abs=1e-15)
    assert gauss_2f1(-1.0, -1.0, 1.0, 0.7) == pytest.approx(1.7, abs=1e-15)
    assert gauss_2f1(0.3, 0.7, 1.9, 0.0) == 1.0


def test_gauss_2f1_against_mpmath():
    rng = np.random.default_rng(42)
    triples = [tuple(rng.uniform(-9.5, 9.5, size=3)) for _ in range(24)]
    triples += [(1.0 / 3.0, -1.0 / 3.0, 5.0 / 3.0), (0.75, -0.5, 2.25)]
    xs = [0.0, 0.11, 0.37, 0.5, 0.63, 0.88, 0.97, 0.999]
    for a, b, c in triples:
        if c <= 0.2:  # stay away from poles of c for the random batch
            c = abs(c) + 0.2
        for x in xs:
            got = gauss_2f1(a, b, c, x)
            want = mp_2f1(a, b, c, x)
            assert got == pytest.approx(want, rel=1e-10, abs=1e-12), (a, b, c, x)


def test_gauss_2f1_domain_and_parameter_errors():
    with pytest.raises(ParameterError):
        gauss_2f1(1.0, 1.0, -2.0, 0.3)
    with pytest.raises(DomainError):
        gauss_2f1(1.0, 1.0, 2.0, -0.1)
    with pytest.raises(DomainError):
        gauss_2f1(1.0, 1.0, 2.0, 1.0 - 1e-8)


def test_lanczos_gamma_accuracy():
    xs = np.linspace(0.05, 19.95, 399)
    rel = [abs(lanczos_gamma(float(x)) - math.gamma(float(x))) / math.gamma(float(x)) for x in xs]
    assert max(rel) < 1e-12
    for x in (-0.5, -3.3, -7.7):
        assert lanczos_gamma(x) == pytest.approx(math.gamma(x), rel=1e-11)
    with pytest.raises(DomainError):
        lanczos_gamma(0.0)
    with pytest.raises(DomainError):
        lanczos_gamma(-3.0)


def test_params_derived_and_validation():
    p = HypParams(2.0, 1.0)
    assert (p.a, p.b, p.c) == (1.0, -1.0, 3.0)
    with pytest.raises(ParameterError):
        HypParams(4.0, 1.0)
    with pytest.raises(ParameterError):
        HypParams(-1.0, 0.0)
    with pytest.raises(ParameterError):
        HypParams(2.0, -1.0 - 1e-9)


def test_u0_closed_forms_kappa_two():
    p_plus = HypParams(2.0, 1.0)
    p_minus = HypParams(2.0, -1.0)
    for x in np.linspace(0.0, 0.99, 100):
        x = float(x)
        assert u0(p_plus, x) == pytest.approx(1.0 - x / 3.0, abs=1e-12)
        assert u0(p_minus, x) == pytest.approx(1.0 + x, abs=1e-12)


def test_f0_g0_v0_frozen_kappa_two():
    p = HypParams(2.0, 1.0)
    assert f0(p, 0.5) == pytest.approx(-0.4, abs=1e-12)
    assert f0(p, 0.0) == pytest.approx(-1.0 / 3.0, abs=1e-15)
    assert g0(p, 0.5) == pytest.approx(0.6, abs=1e-12)
    assert g0(p, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert v0(p, 0.25) == pytest.approx(0.5 * (1.0 - 0.25 / 3.0), abs=1e-12)
    # closed form f0 = -1/(3-x) away from the frozen points as well
    for x in (0.1, 0.7, 0.95):
        assert f0(p, x) == pytest.approx(-1.0 / (3.0 - x), abs=1e-12)


def test_u0_limit_gamma_ratio():
    assert u0_limit_at_one(HypParams(2.0, 1.0)) == pytest.approx(2.0 / 3.0, abs=1e-13)
    assert u0_limit_at_one(HypParams(2.0, -1.0)) == pytest.approx(2.0, abs=1e-13)
    for p in PARAM_SETS:
        want = float(
            mpmath.gamma(p.c)
            * mpmath.gamma(p.c - p.a - p.b)
            / (mpmath.gamma(p.c - p.a) * mpmath.gamma(p.c - p.b))
        )
        assert u0_limit_at_one(p) == pytest.approx(want, rel=1e-11)


def test_u0_monotone_approach_to_limit():
    for p in PARAM_SETS:
        lim = u0_limit_at_one(p)
        xs = np.linspace(0.9, 0.9999, 60)
        gaps = [abs(u0(p, float(x)) - lim) for x in xs]
        assert all(g1 >= g2 - 1e-14 for g1, g2 in zip(gaps[:-1], gaps[1:]))


def test_u0_near_one_against_reference():
    # evaluator accuracy at the hard end of the domain (see ledger: the
    # literal limit-comparison at 0.999 is off by U0'(1)*1e-3 for any
    # correct implementation)
    for p in PARAM_SETS:
        want = mp_2f1(p.a, p.b, p.c, 0.999)
        assert abs(u0(p, 0.999) - want) < 1e-6
        want_max = mp_2f1(p.a, p.b, p.c, X_MAX)
        assert abs(u0(p, X_MAX) - want_max) < 1e-6


def test_f0_limits():
    for p in PARAM_SETS:
        assert f0_limit_at_one(p) == -p.a / 2.0
        assert f0_at_one_extrapolated(p) == pytest.approx(-p.a / 2.0, abs=1e-4)


def test_f0_g0_lower_bounds():
    for p in PARAM_SETS:
        for x in np.linspace(0.0, 0.99, 100):
            x = float(x)
            assert f0(p, x) >= p.b / (1.0 - x) + 1e-12 or p.a == 0.0
            bound = p.rho + (p.kappa - 4.0) * x / (1.0 - x)
            assert g0(p, x) >= bound - 1e-10


def test_g0_endpoint_values():
    # g0 equals rho at 0 and decays to 0 at 1- with exponent min(1, 8/kappa-2)
    for p in PARAM_SETS:
        assert g0(p, 0.0) == pytest.approx(p.rho, abs=1e-14)
        tail = [abs(g0(p, 1.0 - d)) for d in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)]
        assert all(t1 > t2 for t1, t2 in zip(tail[:-1], tail[1:]))
        rate = min(1.0, 8.0 / p.kappa - 2.0)
        # log factor covers the integer-exponent case (e.g. kappa = 8/3)
        assert tail[-1] < 3.0 * abs(p.rho) * (1e-6) ** rate * (1.0 - math.log(1e-6)) + 1e-9


def test_gauss_ode_residual():
    for p in PARAM_SETS:
        a, b, c = p.a, p.b, p.c
        for x in np.arange(0.0, 0.991, 0.01):
            x = float(x)
            val = u0(p, x)
            d1 = u0_d1(p, x)
            d2 = u0_d2(p, x)
            res = x * (x - 1.0) * d2 + ((a + b + 1.0) * x - c) * d1 + a * b * val
            assert abs(res) <= 1e-8 * max(1.0, abs(val)), (p, x, res)


def test_u0_positive():
    for p in PARAM_SETS:
        for x in np.linspace(0.0, 0.999, 250):
            assert u0(p, float(x)) > 0.0


def test_drift_j_frozen_and_bound():
    p = HypParams(2.0, 1.0)
    assert drift_j(p, 1.0, 2.0) == pytest.approx(-0.3, abs=1e-12)
    for q in PARAM_SETS:
        cap = 2.0 - q.kappa / 2.0
        for g1, g2 in [(0.5, 3.0), (1.0, 1.2), (0.01, 5.0), (2.0, 2.001)]:
            val = drift_j(q, g1, g2)
            assert val <= cap * (1.0 / g1 + 1.0 / g2) + 1e-12


@given(
    s=st.floats(min_value=0.01, max_value=100.0),
    g1=st.floats(min_value=0.05, max_value=0.9),
)
@settings(max_examples=40, deadline=None)
def test_drift_j_scaling(s, g1):
    p = HypParams(3.0, 0.5)
    base = drift_j(p, g1, 1.0)
    scaled = drift_j(p, s * g1, s * 1.0)
    assert scaled == pytest.approx(base / s, rel=1e-11, abs=1e-13)


def test_drift_j_degenerate_limit():
    p = HypParams(2.0, 1.0)
    assert drift_j_degenerate_limit(p, 1.0) == pytest.approx(5.0 / 3.0, abs=1e-13)
    assert drift_j_degenerate_limit(p, 2.0) == pytest.approx(5.0 / 6.0, abs=1e-13)
    # J + rho/gap1 converges to the regular part as gap1 -> 0
    for q in PARAM_SETS:
        lim = drift_j_degenerate_limit(q, 2.0)
        eps = 1e-7
        approx = drift_j(q, eps, 2.0) + q.rho / eps
        assert approx == pytest.approx(lim, rel=1e-5, abs=1e-6)


def test_rho_zero_kernels_vanish():
    p = HypParams(3.0, 0.0)
    for x in (0.0, 0.3, 0.8, 0.99):
        assert u0(p, x) == 1.0
        assert g0(p, x) == 0.0
    assert drift_j(p, 0.7, 1.9) == 0.0


def test_v0_log_derivative_identity():
    # x * v0'/v0 == g0/kappa
    for p in (HypParams(3.0, 0.5), HypParams(8.0 / 3.0, 1.0)):
        for x in (0.2, 0.6, 0.9):
            h = 1e-6 * x
            dv = (v0(p, x + h) - v0(p, x - h)) / (2.0 * h)
            lhs = x * dv / v0(p, x)
            assert lhs == pytest.approx(g0(p, x) / p.kappa, abs=1e-6)


def test_g0_prime_at_zero():
    for p in PARAM_SETS:
        want = g0_prime_at_zero(p)
        h = 1e-5
        est = (4.0 * g0(p, h) - g0(p, 2.0 * h) - 3.0 * g0(p, 0.0)) / (2.0 * h)
        assert est == pytest.approx(want, abs=1e-8, rel=1e-6)


def test_kernel_table_matches_exact():
    for p in PARAM_SETS:
        table = KernelTable(p)
        rng = np.random.default_rng(7)
        xs = np.concatenate([rng.uniform(0, 1, 200), 1.0 - 10.0 ** rng.uniform(-6, -1, 100)])
        for x in xs:
            x = float(min(x, X_MAX))
            assert table.g0(x) == pytest.approx(g0(p, x), abs=1e-10)
        # clamped drift stays finite arbitrarily close to equal gaps
        assert math.isfinite(table.drift_j(1.0, 1.0 + 1e-12))
        assert table.drift_j(1.0, 2.0) == pytest.approx(drift_j(p, 1.0, 2.0), abs=1e-10)


def test_v0_domain():
    p = HypParams(3.0, 0.5)
    with pytest.raises(DomainError):
        v0(p, 0.0)
    with pytest.raises(DomainError):
        drift_j(p, 2.0, 1.0)
    with pytest.raises(DomainError):
        drift_j(p, 1.0, 1.0)
