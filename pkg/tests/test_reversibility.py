"""Crossing-angle machinery, reversal statistics, transience."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import slelab.reversibility as rev
from slelab.errors import GeometryError, ParameterError
from slelab.loewner import Trace

# NOTE: the reversal entry points carry a test_ prefix as part of the
# public interface; they are reached through the module object so pytest
# does not try to collect them.


def ray(theta: float, radii) -> np.ndarray:
    return np.concatenate(
        ([0.0 + 0.0j], [r * np.exp(1j * theta) for r in radii])
    )


class TestCrossingSample:
    def test_valid_sample(self):
        s = rev.CrossingSample(3, 2.0, "first_crossing", 1.0)
        assert s.path_id == 3 and s.radius == 2.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(path_id=0, radius=1.0, kind="middle", angle=1.0),
            dict(path_id=0, radius=0.0, kind="first_crossing", angle=1.0),
            dict(path_id=0, radius=1.0, kind="first_crossing", angle=0.0),
            dict(path_id=0, radius=1.0, kind="first_crossing", angle=math.pi),
            dict(path_id=0, radius=1.0, kind="last_crossing", angle=-0.5),
        ],
    )
    def test_invalid_samples_rejected(self, kwargs):
        with pytest.raises(ParameterError):
            rev.CrossingSample(**kwargs)


class TestKsTwoSample:
    def test_identical_samples(self):
        a = np.linspace(0.1, 3.0, 50)
        stat, p = rev.ks_two_sample(a, a.copy())
        assert stat == 0.0
        assert p == 1.0

    def test_disjoint_samples(self):
        stat, p = rev.ks_two_sample(
            np.linspace(0.1, 1.0, 80), np.linspace(2.0, 3.0, 80)
        )
        assert stat == 1.0
        assert p < 1e-12

    def test_empty_sample_rejected(self):
        with pytest.raises(ParameterError, match="non-empty"):
            rev.ks_two_sample([], [1.0])


class TestSegmentCrossings:
    def test_single_crossing_midpoint(self):
        assert rev._segment_crossings(0.5 + 0j, 1.5 + 0j, 1.0) == (0.5,)

    def test_interior_segment_has_none(self):
        assert rev._segment_crossings(0.1 + 0.1j, 0.2 - 0.3j, 1.0) == ()

    def test_outside_dip_has_two_increasing(self):
        a = 2.0 * np.exp(0.3j)
        b = 2.0 * np.exp(1j * (math.pi - 0.3))
        roots = rev._segment_crossings(complex(a), complex(b), 1.0)
        assert len(roots) == 2 and roots[0] < roots[1]
        for s in roots:
            assert abs(a + s * (b - a)) == pytest.approx(1.0, abs=1e-12)

    def test_zero_length_segment_has_none(self):
        assert rev._segment_crossings(2.0 + 0j, 2.0 + 0j, 1.0) == ()


class TestFirstCrossing:
    def test_vertical_ray_crosses_at_half_pi(self):
        sample = rev.first_crossing_angle(ray(math.pi / 2, [0.4, 2.0]), 1.0)
        assert sample.angle == pytest.approx(math.pi / 2, abs=1e-15)
        assert sample.kind == "first_crossing"
        assert sample.radius == 1.0

    @pytest.mark.parametrize("theta", [0.2, 1.0, 2.5])
    def test_ray_crossing_angle_is_ray_angle(self, theta):
        sample = rev.first_crossing_angle(ray(theta, [0.3, 3.0]), 1.0)
        assert sample.angle == pytest.approx(theta, rel=1e-12)

    def test_reflection_equivariance(self):
        pts = np.array([0, 0.3 + 0.4j, -0.2 + 0.9j, 1.1 + 1.5j])
        mirrored = -np.conj(pts)
        a = rev.first_crossing_angle(pts, 1.0).angle
        b = rev.first_crossing_angle(mirrored, 1.0).angle
        assert a + b == pytest.approx(math.pi, abs=1e-14)

    def test_crossing_point_lies_on_circle(self):
        rng = np.random.default_rng(5)
        steps = rng.normal(0, 0.3, 40) + 1j * np.abs(rng.normal(0, 0.3, 40))
        pts = np.concatenate(([0.0 + 0.0j], np.cumsum(steps)))
        pts = pts[np.abs(pts) < 5.0]
        sample = rev.first_crossing_angle(pts, 1.0)
        if sample is not None:
            mods = np.abs(pts)
            k = int(np.nonzero(mods >= 1.0)[0][0])
            a, b = pts[k - 1], pts[k]
            s = rev._segment_crossings(complex(a), complex(b), 1.0)[0]
            assert sample.angle == pytest.approx(
                float(np.angle(a + s * (b - a))), abs=1e-14
            )

    def test_never_reaching_radius_returns_none(self):
        assert rev.first_crossing_angle(ray(1.0, [0.2, 0.5]), 1.0) is None

    def test_accepts_trace_objects(self):
        trace = Trace(times=[0.0, 1.0, 2.0], points=ray(1.2, [0.5, 2.0]))
        assert rev.first_crossing_angle(trace, 1.0).angle == pytest.approx(1.2)

    def test_start_outside_circle_rejected(self):
        with pytest.raises(GeometryError, match="outside"):
            rev.first_crossing_angle(np.array([2.0 + 1j, 3.0 + 1j]), 1.0)

    def test_nonpositive_radius_rejected(self):
        with pytest.raises(ParameterError, match="radius"):
            rev.first_crossing_angle(ray(1.0, [2.0]), 0.0)


class TestLastCrossing:
    def test_single_crossing_is_also_last(self):
        pts = ray(math.pi / 2, [0.4, 2.0])
        sample = rev.last_crossing_angle(pts, 1.0, certified=True)
        assert sample.angle == pytest.approx(math.pi / 2, abs=1e-15)
        assert sample.kind == "last_crossing"

    def test_uncertified_needs_escape_factor_reach(self):
        pts = ray(1.0, [0.4, 2.0])
        assert rev.last_crossing_angle(pts, 1.0, 100.0) is None
        escaped = ray(1.0, [0.4, 250.0])
        assert rev.last_crossing_angle(escaped, 1.0, 100.0) is not None

    def test_outside_outside_dip_is_found(self):
        # out through the circle, then a chord dipping back inside it
        a = 2.0 * np.exp(0.3j)
        b = 2.0 * np.exp(1j * (math.pi - 0.3))
        pts = np.array([0.0, 0.2j, a, b, 5.0j])
        sample = rev.last_crossing_angle(pts, 1.0, certified=True)
        s = rev._segment_crossings(complex(a), complex(b), 1.0)[-1]
        expected = float(np.angle(a + s * (b - a)))
        assert sample.angle == pytest.approx(expected, abs=1e-14)
        # sanity: the dip exit is later than the initial outward crossing
        assert expected > 0.3

    def test_outside_segment_without_dip_is_skipped(self):
        pts = np.array([0.0, 0.5j, 2.0j, 2.0 + 2.0j, 3.0 + 3.0j])
        sample = rev.last_crossing_angle(pts, 1.0, certified=True)
        assert sample.angle == pytest.approx(math.pi / 2, abs=1e-14)

    def test_short_trace_returns_none(self):
        assert rev.last_crossing_angle(np.array([0.0j]), 1.0, certified=True) is None

    def test_validation(self):
        pts = ray(1.0, [2.0])
        with pytest.raises(ParameterError, match="radius"):
            rev.last_crossing_angle(pts, -1.0)
        with pytest.raises(ParameterError, match="escape factor"):
            rev.last_crossing_angle(pts, 1.0, 1.0)


class TestInvertTrace:
    def zigzag(self):
        pts = np.array([0.0, 0.3 + 0.4j, -0.2 + 0.9j, 1.5j, 0.5 + 3.0j])
        return Trace(times=np.arange(pts.size, dtype=float), points=pts)

    def test_arguments_preserved(self):
        trace = self.zigzag()
        inv = rev.invert_trace(trace)
        original = np.sort(np.angle(trace.points[1:]))
        image = np.sort(np.angle(inv.points[1:]))
        assert np.allclose(original, image, atol=1e-14)

    def test_moduli_reciprocal_and_order_reversed(self):
        trace = self.zigzag()
        inv = rev.invert_trace(trace)
        expected = (1.0 / np.conj(trace.points[1:]))[::-1]
        assert np.allclose(inv.points[1:], expected, rtol=0, atol=1e-15)
        assert inv.points[0] == 0.0

    def test_involution(self):
        trace = self.zigzag()
        back = rev.invert_trace(rev.invert_trace(trace))
        assert np.allclose(back.points, trace.points, atol=1e-13)

    def test_times_are_capacity_parameterization(self):
        inv = rev.invert_trace(self.zigzag())
        times = np.asarray(inv.times)
        assert times[0] == 0.0
        assert np.all(np.diff(times) > 0.0)
        assert np.all(np.isfinite(times))

    def test_interior_center_point_rejected(self):
        trace = Trace(
            times=[0.0, 1.0, 2.0, 3.0],
            points=[0.0, 1.0j, 0.0, 2.0j],
        )
        with pytest.raises(GeometryError, match="center"):
            rev.invert_trace(trace)

    def test_single_point_rejected(self):
        with pytest.raises(ParameterError, match="two points"):
            rev.invert_trace(Trace(times=[0.0], points=[0.0j]))


class TestStageEdges:
    def test_geometric_ladder(self):
        assert rev._stage_edges(1.0, 20.0) == [0.0, 1.0, 4.0, 16.0, 20.0]

    def test_cap_below_first_stage(self):
        assert rev._stage_edges(1.0, 0.5) == [0.0, 0.5]

    def test_exact_final_edge(self):
        assert rev._stage_edges(1.0, 16.0) == [0.0, 1.0, 4.0, 16.0]

    @given(
        st.floats(min_value=1e-3, max_value=1e3),
        st.floats(min_value=1e-3, max_value=1e6),
    )
    def test_edges_increase_and_end_at_horizon(self, t0, t_end):
        edges = rev._stage_edges(t0, t_end)
        assert edges[0] == 0.0
        assert edges[-1] == t_end
        assert all(a < b for a, b in zip(edges, edges[1:]))


class TestEnsembleSpec:
    def base(self, **overrides):
        kwargs = dict(
            process="kappa_rho", kappa=2.0, rho=1.0,
            statistic="first_crossing", radius=1.0,
        )
        kwargs.update(overrides)
        return kwargs

    def test_valid_specs(self):
        rev.EnsembleSpec(**self.base())
        rev.EnsembleSpec(
            **self.base(process="intermediate", far_point=1.0)
        )
        rev.EnsembleSpec(**self.base(force_point=0.5))

    @pytest.mark.parametrize(
        "overrides",
        [
            dict(process="outbound"),
            dict(statistic="median_crossing"),
            dict(kappa=4.0),
            dict(kappa=0.0),
            dict(rho=-1.5),  # below kappa/2 - 2 = -1
            dict(radius=0.0),
            dict(escape_factor=1.0),
            dict(stage_steps=4),
            dict(side=2),
            dict(process="intermediate"),  # missing far_point
            dict(process="intermediate", far_point=-1.0),
            dict(process="intermediate", far_point=1.0, force_point=0.5),
            dict(force_point=0.0),
        ],
    )
    def test_invalid_specs_rejected(self, overrides):
        with pytest.raises(ParameterError):
            rev.EnsembleSpec(**self.base(**overrides))


BROWNIAN_FIRST = rev.EnsembleSpec(
    process="kappa_rho", kappa=2.0, rho=0.0,
    statistic="first_crossing", radius=1.0, stage_steps=64,
)


class TestRunCrossingEnsemble:
    def test_needs_two_paths(self):
        with pytest.raises(ParameterError, match="at least 2"):
            rev.run_crossing_ensemble(BROWNIAN_FIRST, 1, 0)

    def test_deterministic(self):
        a = rev.run_crossing_ensemble(BROWNIAN_FIRST, 6, master_seed=4)
        b = rev.run_crossing_ensemble(BROWNIAN_FIRST, 6, master_seed=4)
        assert a.samples == b.samples
        assert a.discards == b.discards

    def test_threads_do_not_change_results(self):
        a = rev.run_crossing_ensemble(BROWNIAN_FIRST, 6, 4, threads=1)
        b = rev.run_crossing_ensemble(BROWNIAN_FIRST, 6, 4, threads=2)
        assert a.samples == b.samples

    def test_seed_offsets_give_fresh_paths(self):
        a = rev.run_crossing_ensemble(BROWNIAN_FIRST, 6, 4, seed_offset=0)
        b = rev.run_crossing_ensemble(BROWNIAN_FIRST, 6, 4, seed_offset=6)
        assert a.angles.shape == b.angles.shape
        assert not np.array_equal(a.angles, b.angles)

    def test_master_seed_changes_samples(self):
        a = rev.run_crossing_ensemble(BROWNIAN_FIRST, 6, master_seed=4)
        b = rev.run_crossing_ensemble(BROWNIAN_FIRST, 6, master_seed=5)
        assert not np.array_equal(a.angles, b.angles)

    def test_sample_fields(self):
        res = rev.run_crossing_ensemble(BROWNIAN_FIRST, 6, 4)
        assert res.valid_fraction == 1.0
        assert res.discards == {}
        for sample in res.samples:
            assert sample.kind == "first_crossing"
            assert sample.radius == 1.0
            assert 0.0 < sample.angle < math.pi
        assert sorted(s.path_id for s in res.samples) == list(range(6))


@pytest.fixture(scope="module")
def degenerate_run():
    return rev.test_reversal_degenerate(
        2.0, 0.0, n_paths=24, master_seed=11, return_ensembles=True
    )


@pytest.fixture(scope="module")
def generic_run():
    return rev.test_reversal_generic(
        2.0, 1.0, b0=1.0, n_paths=16, master_seed=13, return_ensembles=True
    )


class TestReversalDegenerate:
    def test_report_structure(self, degenerate_run):
        report, res_a, res_b = degenerate_run
        assert report.test == "reversal_degenerate"
        assert report.n1 == report.n2 == 24
        assert 0.0 <= report.statistic <= 1.0
        assert 0.0 <= report.p_value <= 1.0
        assert report.valid
        assert report.seeds == {
            "master_seed": 11, "offset_a": 0, "offset_b": 24,
        }
        assert res_a.discards == {} and res_b.discards == {}

    def test_ensemble_statistics_and_radii(self, degenerate_run):
        _, res_a, res_b = degenerate_run
        assert {s.kind for s in res_a.samples} == {"first_crossing"}
        assert {s.kind for s in res_b.samples} == {"last_crossing"}
        assert {s.radius for s in res_a.samples} == {1.0}
        assert {s.radius for s in res_b.samples} == {1.0}

    def test_to_dict_keys(self, degenerate_run):
        report, _, _ = degenerate_run
        assert set(report.to_dict()) == {
            "test", "params", "n1", "n2", "ks_statistic", "p_value",
            "discarded", "seeds", "valid",
        }

    def test_same_ensemble_compares_equal(self, degenerate_run):
        _, res_a, _ = degenerate_run
        report = rev._ks_report("self", {}, res_a, res_a)
        assert report.statistic == 0.0
        assert report.p_value == 1.0


class TestReversalGeneric:
    def test_report_structure(self, generic_run):
        report, res_a, res_b = generic_run
        assert report.test == "reversal_generic"
        assert report.valid
        assert report.params["b0"] == 1.0 and report.params["r"] == 0.5

    def test_reciprocal_radii(self, generic_run):
        _, res_a, res_b = generic_run
        assert {s.radius for s in res_a.samples} == {0.5}
        assert {s.radius for s in res_b.samples} == {2.0}
        assert res_a.spec.process == "intermediate"
        assert res_b.spec.process == "kappa_rho"
        assert res_b.spec.force_point == 1.0

    def test_parameter_validation(self):
        with pytest.raises(ParameterError, match="b0"):
            rev.test_reversal_generic(2.0, 1.0, b0=0.0, n_paths=2)
        with pytest.raises(ParameterError, match="1/b0"):
            rev.test_reversal_generic(2.0, 1.0, b0=2.0, r=0.75, n_paths=2)


class TestResolutionInsensitivity:
    def test_halving_dt_preserves_first_crossing_law(self):
        # same law integrated at two stage resolutions; the KS comparison
        # must not resolve a difference at this sample size
        spec_coarse = rev.EnsembleSpec(
            process="kappa_rho", kappa=2.0, rho=1.0,
            statistic="first_crossing", radius=1.0, stage_steps=256,
        )
        spec_fine = rev.EnsembleSpec(
            process="kappa_rho", kappa=2.0, rho=1.0,
            statistic="first_crossing", radius=1.0, stage_steps=512,
        )
        a = rev.run_crossing_ensemble(spec_coarse, 60, master_seed=17)
        b = rev.run_crossing_ensemble(spec_fine, 60, master_seed=18)
        _, p = rev.ks_two_sample(a.angles, b.angles)
        assert p >= 0.01


class TestTransience:
    def test_degenerate_ratio_near_two(self):
        report = rev.transience_report(
            "degenerate", 2.0, 1.0, n_paths=48, master_seed=7,
        )
        assert report["horizons"] == [1.0, 2.0, 4.0]
        assert report["n_valid"] == 48
        assert report["strictly_increasing"]
        assert 1.6 <= report["ratio_4T_over_T"] <= 2.4

    def test_intermediate_medians_increase(self):
        report = rev.transience_report(
            "intermediate", 2.0, 1.0, n_paths=24, master_seed=7,
        )
        assert report["strictly_increasing"]
        assert len(report["medians"]) == 3
        assert report["far_point"] == 1.0

    def test_validation(self):
        with pytest.raises(ParameterError, match="kind"):
            rev.transience_report("sideways", 2.0, 1.0, n_paths=2)
        with pytest.raises(ParameterError, match="horizon"):
            rev.transience_report("degenerate", 2.0, 1.0, T=0.0, n_paths=2)
        with pytest.raises(ParameterError, match="n_paths"):
            rev.transience_report("degenerate", 2.0, 1.0, n_paths=1)


class TestEscapeStability:
    def test_doubling_horizon_rarely_moves_the_angle(self):
        spec = rev.EnsembleSpec(
            process="kappa_rho", kappa=2.0, rho=0.0,
            statistic="last_crossing", radius=1.0,
            escape_factor=25.0, stage_steps=128,
        )
        report = rev.escape_stability(spec, 8, master_seed=3)
        assert report["n_valid"] == 8
        assert report["changed_fraction"] <= 0.25
        assert report["escape_factor"] == 25.0

    def test_requires_last_crossing_spec(self):
        with pytest.raises(ParameterError, match="last crossing"):
            rev.escape_stability(BROWNIAN_FIRST, 4, 0)
