from __future__ import annotations

import math

import numpy as np
import pytest

from enclosure.api import forward, indicator
from enclosure.api.errors import ConsistencyError, InputError, ResolutionError
from enclosure.api.models import ConeSpec, DensitySpec, ObstacleCurve, Scene

N_RANGE = list(range(8, 25))


@pytest.fixture(scope="module")
def scene() -> Scene:
    return Scene(k=2.0, R=2.0, obstacles=[ObstacleCurve.disc(0.3, (0.5, 0.0))])


@pytest.fixture(scope="module")
def matrix(scene) -> forward.FarFieldMatrix:
    return forward.farfield_matrix(scene, 160)


# ---------- single values ----------

def test_matrix_and_field_space_pairings_agree(scene, matrix):
    spec = DensitySpec.build((-1.0, 0.0), (1.0, 0.0), 1, 4, 0.5, 2.0, 2.0)
    from_matrix = indicator.indicator_value(matrix, spec)
    from_scene = indicator.scene_indicator(scene, spec)
    assert abs(from_matrix) > 0.0
    assert from_scene == pytest.approx(from_matrix, rel=1e-3)
    assert indicator.indicator_noise_floor(matrix, spec) < 1e-6 * abs(from_matrix)


def test_indicator_value_needs_enough_nodes(scene):
    small = forward.farfield_matrix(scene, 16)
    spec = DensitySpec.build((-1.0, 0.0), (1.0, 0.0), 1, 8, 0.5, 2.0, 2.0)
    with pytest.raises(ResolutionError):
        indicator.indicator_value(small, spec)


def test_wave_number_mismatch(matrix):
    spec = DensitySpec.build((-1.0, 0.0), (1.0, 0.0), 1, 4, 0.5, 2.0, 3.0)
    with pytest.raises(ConsistencyError):
        indicator.indicator_value(matrix, spec)
    cone = ConeSpec(y=(-1.0, 0.0), omega=(1.0, 0.0), n=1)
    with pytest.raises(ConsistencyError):
        indicator.indicator_trace(matrix, cone, 0.5, 2.0, 3.0, N_RANGE)


def test_empty_scene_pairs_to_zero():
    spec = DensitySpec.build(0j, (1.0, 0.0), 1, 4, 0.5, 1.0, 1.0)
    assert indicator.scene_indicator(Scene(k=1.0, R=1.0), spec) == 0j


def test_normalization_against_point_source():
    for spec in indicator.random_specs(20, seed=1, R=2.0, k=2.0, n_values=(1,), N_values=range(4, 13)):
        assert indicator.normalization_check(spec) <= 1e-12


def test_normalization_for_narrow_cones_at_random_apexes():
    specs = indicator.random_specs(25, seed=7, R=1.0, k=2.0, n_values=(3,), N_values=(12,))
    assert max(indicator.normalization_check(spec) for spec in specs) <= 1e-12


def test_normalization_exposes_undersampled_rules():
    spec = DensitySpec.build((-0.5, 0.0), (1.0, 0.0), 1, 12, 0.5, 2.0, 2.0)
    assert indicator.normalization_check(spec) <= 1e-12
    assert indicator.normalization_check(spec, M=4) > 1e-3
    with pytest.raises(InputError):
        indicator.normalization_check(spec, M=-1)


# ---------- classification ----------

def test_classify_dead_band():
    Ns = list(range(8, 18))
    ok = [True] * len(Ns)
    assert indicator.classify(Ns, [math.exp(-0.3 * N) for N in Ns], ok)[1] == "Decay"
    assert indicator.classify(Ns, [math.exp(0.3 * N) for N in Ns], ok)[1] == "Growth"
    slope, verdict = indicator.classify(Ns, [math.exp(0.01 * N) for N in Ns], ok)
    assert verdict == "Indeterminate"
    assert slope == pytest.approx(0.01, rel=1e-8)


def test_classify_degenerate_traces():
    Ns = list(range(8, 18))
    slope, verdict = indicator.classify(Ns, [0.0] * len(Ns), [False] * len(Ns), all_zero=True)
    assert verdict == "Decay"
    assert slope == -math.inf
    usable = [True] * 8 + [False] * 2
    slope, verdict = indicator.classify(Ns, [1.0] * len(Ns), usable)
    assert verdict == "Indeterminate"
    assert math.isnan(slope)


def test_trace_needs_five_increasing_levels(matrix):
    cone = ConeSpec(y=(-1.0, 0.0), omega=(1.0, 0.0), n=1)
    with pytest.raises(InputError):
        indicator.indicator_trace(matrix, cone, 0.5, 2.0, 2.0, [8, 9, 10, 11])
    with pytest.raises(InputError):
        indicator.indicator_trace(matrix, cone, 0.5, 2.0, 2.0, [8, 9, 9, 10, 11])


def test_empty_scene_trace_is_decay():
    cone = ConeSpec(y=(0.0, 0.0), omega=(1.0, 0.0), n=1)
    trace = indicator.indicator_trace(Scene(k=1.0, R=1.0), cone, 0.5, 1.0, 1.0, range(4, 10))
    assert trace.classification == "Decay"
    assert all(trace.clamped)


# ---------- growth / decay dichotomy ----------

def test_cone_meeting_the_obstacle_grows(matrix):
    cone = ConeSpec(y=(-1.0, 0.0), omega=(1.0, 0.0), n=1)
    trace = indicator.indicator_trace(matrix, cone, 0.5, 2.0, 2.0, N_RANGE)
    assert trace.classification == "Growth"
    assert trace.slope > indicator.DEFAULT_DELTA
    assert trace.s_values == sorted(trace.s_values)


def test_cone_missing_the_obstacle_decays_on_the_matrix(matrix):
    cone = ConeSpec(y=(-1.0, 0.0), omega=(-1.0, 0.0), n=1)
    trace = indicator.indicator_trace(matrix, cone, 0.5, 2.0, 2.0, N_RANGE)
    assert trace.classification == "Decay"
    assert trace.slope < -indicator.DEFAULT_DELTA


def test_cone_missing_the_obstacle_decays_in_field_space(scene):
    cone = ConeSpec(y=(-1.0, 0.0), omega=(-1.0, 0.0), n=1)
    trace = indicator.indicator_trace(scene, cone, 0.5, 2.0, 2.0, N_RANGE)
    assert trace.classification == "Decay"
    assert not any(trace.unresolved)


def test_cone_meeting_the_obstacle_grows_in_field_space(scene):
    cone = ConeSpec(y=(-1.0, 0.0), omega=(1.0, 0.0), n=1)
    trace = indicator.indicator_trace(scene, cone, 0.5, 2.0, 2.0, N_RANGE)
    assert trace.classification == "Growth"


@pytest.mark.slow
def test_narrow_cone_missing_the_obstacle_never_grows(scene):
    # n = 2 decays only algebraically in τ here; the schedule keeps the slope inside the dead band
    cone = ConeSpec(y=(-1.0, 0.0), omega=(-1.0, 0.0), n=2)
    trace = indicator.indicator_trace(scene, cone, 0.5, 2.0, 2.0, N_RANGE)
    assert trace.classification != "Growth"
    assert math.isnan(trace.slope) or abs(trace.slope) < indicator.DEFAULT_DELTA


# ---------- surrogate ----------

def test_surrogate_ratio_is_bracketed(scene, matrix):
    specs = indicator.random_specs(10, seed=4, R=2.0, k=2.0, N_values=(4, 6))
    report = indicator.surrogate_check(matrix, scene, specs)
    assert len(report.ratios) + len(report.excluded) == 10
    assert report.minimum > 0.0
    assert report.passed


def test_surrogate_needs_a_single_obstacle(matrix):
    pair = Scene(k=2.0, R=2.0, obstacles=[ObstacleCurve.disc(0.2, (0.5, 0.0)), ObstacleCurve.disc(0.2, (-0.5, 0.0))])
    with pytest.raises(InputError):
        indicator.surrogate_check(matrix, pair, [])


# ---------- scan ----------

def test_scan_is_thread_independent(scene):
    F = forward.farfield_matrix(scene, 96)
    grid = (-1.5, -1.0, -0.5, 0.5, 2, 2)
    kwargs = dict(omega_count=4, n_list=(1,), N_values=range(8, 18))
    one = indicator.visible_scan(F, 2.0, 2.0, grid, threads=1, **kwargs)
    many = indicator.visible_scan(F, 2.0, 2.0, grid, threads=4, **kwargs)
    assert one.visible.shape == (2, 2)
    assert [(c.verdict, c.witness_omega, c.witness_n) for c in one.cells] == \
        [(c.verdict, c.witness_omega, c.witness_n) for c in many.cells]


def test_scan_grid_must_lie_inside_the_ball(matrix):
    with pytest.raises(InputError):
        indicator.visible_scan(matrix, 2.0, 2.0, (-2.5, 0.0, 0.0, 0.0, 2, 1))


def test_grid_points_row_major():
    points = indicator.grid_points((0.0, 1.0, 0.0, 2.0, 2, 3))
    assert points == [0j, 1 + 0j, 1j, 1 + 1j, 2j, 1 + 2j]
    assert np.allclose(indicator.grid_points((0.3, 0.9, -0.1, 0.5, 1, 1)), [0.3 - 0.1j])


def test_short_ranges_never_certify(matrix):
    cone = ConeSpec(y=(-1.0, 0.0), omega=(-1.0, 0.0), n=1)
    trace = indicator.indicator_trace(matrix, cone, 0.5, 2.0, 2.0, range(8, 14))
    assert trace.classification == "Indeterminate"
    assert math.isnan(trace.slope)


def test_scan_separates_the_obstacle_from_its_outside(matrix):
    result = indicator.visible_scan(matrix, 2.0, 2.0, (-1.0, 0.5, 0.0, 0.0, 2, 1),
                                    omega_count=4, n_list=(1,))
    outside, inside = result.cells
    assert outside.verdict == "Visible"
    assert outside.witness_omega == pytest.approx(-1.0, abs=1e-12)
    assert outside.witness_n == 1
    assert inside.verdict == "NotShownVisible"
    assert inside.witness_omega is None


def test_short_scan_leaves_the_obstacle_unshown(matrix):
    result = indicator.visible_scan(matrix, 2.0, 2.0, (0.5, 0.5, 0.0, 0.0, 1, 1),
                                    omega_count=4, n_list=(1,), N_values=range(8, 14))
    assert result.cells[0].verdict == "NotShownVisible"
