from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np
import pytest

from enclosure.api import forward
from enclosure.api.errors import InputError, MFSAccuracyError, RangeError
from enclosure.api.models import ObstacleCurve, Scene


def disc_oracle(a: float, k: float, obs_angle: float, inc_angle: float, orders: int = 60) -> complex:
    """Centered sound-hard disc far field summed over m = −orders..orders with mpmath Bessel functions."""
    with mpmath.workdps(30):
        ka = mpmath.mpf(k * a)
        total = mpmath.mpc(0)
        for m in range(-orders, orders + 1):
            jp = mpmath.besselj(m, ka, derivative=1)
            hp = (mpmath.hankel1(m - 1, ka) - mpmath.hankel1(m + 1, ka)) / 2
            total += jp / hp * mpmath.exp(1j * m * (obs_angle - inc_angle))
        pref = -mpmath.sqrt(2 / (mpmath.pi * k)) * mpmath.exp(-0.25j * mpmath.pi)
        return complex(pref * total)


def disc_scene(radius: float = 0.3, center=(0.5, 0.0), k: float = 2.0) -> Scene:
    return Scene(k=k, R=2.0, obstacles=[ObstacleCurve.disc(radius, center)])


# ---------- analytic disc ----------

@pytest.mark.parametrize("ka", [0.5, 2.0, 9.0])
def test_disc_series_matches_mpmath(ka):
    a, k = 0.5, 2.0 * ka
    for obs, inc in ((0.0, 0.0), (1.0, 2.5), (3.0, -0.4)):
        got = forward.disc_farfield(a, 0j, cmath.exp(1j * obs), cmath.exp(1j * inc), k)
        assert got == pytest.approx(disc_oracle(a, k, obs, inc), rel=1e-11)


def test_disc_translation_phase():
    a, k, c = 0.4, 3.0, 0.3 - 0.2j
    obs, inc = cmath.exp(0.8j), cmath.exp(-2.0j)
    centered = forward.disc_farfield(a, 0j, obs, inc, k)
    shifted = forward.disc_farfield(a, c, obs, inc, k)
    phase = cmath.exp(1j * k * (c.conjugate() * (inc - obs)).real)
    assert shifted == pytest.approx(centered * phase, rel=1e-13)


def test_disc_series_envelope():
    with pytest.raises(RangeError):
        forward.disc_farfield(1.0, 0j, 1.0, 1.0, 31.0)


def test_analytic_matrix_passes_consistency_checks():
    F = forward.farfield_matrix(disc_scene(), 64)
    assert F.provenance == "analytic"
    assert F.M == 64
    assert forward.reciprocity_residual(F) <= 1e-12
    assert forward.optical_theorem_residual(F) <= 1e-10
    assert forward.unitarity_residual(F) <= 1e-8


# ---------- MFS ----------

@pytest.mark.parametrize("ka", [1.0, 2.0, 4.0, 8.0])
def test_mfs_matches_disc_series(ka):
    a = 0.5
    scene = disc_scene(radius=a, center=(0.2, -0.1), k=ka / a)
    analytic = forward.farfield_matrix(scene, 16, method="analytic")
    mfs = forward.farfield_matrix(scene, 16, method="mfs")
    assert mfs.provenance == "mfs"
    assert mfs.diagnostics["residual"] <= forward.MFS_TOL
    err = np.max(np.abs(mfs.entries - analytic.entries)) / np.max(np.abs(analytic.entries))
    assert err <= 1e-4


def test_source_curves_follow_the_boundary():
    disc = ObstacleCurve.disc(0.3, (0.5, 0.0))
    assert forward.source_shifts(disc) == list(forward.MFS_SHIFTS)
    op = forward.mfs_operator(disc, 2.0)
    assert op.system.shifts[0] == pytest.approx(math.log(1.0 / 0.7))
    assert np.abs(op.system.sources - 0.5) == pytest.approx(0.21, abs=1e-12)
    kite = ObstacleCurve.kite(0.3)
    shifts = forward.source_shifts(kite)
    assert shifts and set(shifts) <= set(forward.MFS_SHIFTS)
    assert shifts[0] < forward.MFS_SHIFTS[0]
    for shift in shifts:
        assert np.all(kite.contains(kite.continued(np.linspace(0.0, 6.0, 50), shift)))


def test_mfs_kite_is_reciprocal():
    scene = Scene(k=2.0, R=2.0, obstacles=[ObstacleCurve.kite(0.3, (0.2, 0.1))])
    F = forward.farfield_matrix(scene, 32)
    assert F.provenance == "mfs"
    assert forward.reciprocity_residual(F) <= 1e-4
    assert forward.optical_theorem_residual(F) <= 1e-4


def test_mfs_two_obstacles_solve_as_one_system():
    scene = Scene(k=2.0, R=2.0, obstacles=[
        ObstacleCurve.disc(0.25, (0.6, 0.0)),
        ObstacleCurve.ellipse(0.3, 0.15, (-0.6, 0.4), rotation=0.5),
    ])
    F = forward.farfield_matrix(scene, 32)
    assert F.provenance == "mfs"
    single = forward.farfield_matrix(Scene(k=2.0, R=2.0, obstacles=scene.obstacles[:1]), 32)
    assert np.max(np.abs(F.entries - single.entries)) > 1e-3
    assert forward.reciprocity_residual(F) <= 1e-4


def test_mfs_result_independent_of_threads():
    curve = ObstacleCurve.ellipse(0.4, 0.25, (0.1, 0.0))
    inc = list(np.exp(2j * np.pi * np.arange(40) / 40))
    one = forward.mfs_solve(curve, 2.0, inc, threads=1)
    many = forward.mfs_solve(curve, 2.0, inc, threads=4)
    assert np.array_equal(one.farfield, many.farfield)


def test_mfs_reports_accuracy_failure(monkeypatch):
    monkeypatch.setattr(forward, "MFS_TOL", 0.0)
    with pytest.raises(MFSAccuracyError) as info:
        forward.mfs_operator(ObstacleCurve.disc(0.3), 2.0)
    assert info.value.residual > 0.0
    assert info.value.sources >= 64


# ---------- matrix assembly ----------

def test_farfield_matrix_input_checks():
    with pytest.raises(InputError):
        forward.farfield_matrix(disc_scene(), 33)
    with pytest.raises(InputError):
        forward.farfield_matrix(disc_scene(), 8)
    kite = Scene(k=2.0, R=2.0, obstacles=[ObstacleCurve.kite(0.3)])
    with pytest.raises(InputError):
        forward.farfield_matrix(kite, 32, method="analytic")
    with pytest.raises(InputError):
        forward.FarFieldMatrix(np.zeros((8, 8)), 1.0)


def test_empty_scene_has_zero_far_field():
    F = forward.farfield_matrix(Scene(k=1.0, R=1.0), 16)
    assert F.M == 16
    assert not np.any(F.entries)


# ---------- eigenvalue guard ----------

def test_neumann_zero_table():
    table = forward.neumann_zeros()
    values = [z for _, _, z in table]
    assert values == sorted(values)
    m, l, z = table[0]
    assert (m, l) == (1, 1)
    assert z == pytest.approx(1.8411837813406593, rel=1e-12)


def test_eigen_guard_flags_resonant_disc():
    z = 1.8411837813406593
    report = forward.neumann_eigen_guard(disc_scene(radius=z / 2.0, center=(0.0, 0.0), k=2.0))
    assert report.flagged
    assert (report.order, report.index) == (1, 1)
    assert not report.heuristic
    calm = forward.neumann_eigen_guard(disc_scene())
    assert not calm.flagged
    kite = forward.neumann_eigen_guard(Scene(k=2.0, R=2.0, obstacles=[ObstacleCurve.kite(0.3)]))
    assert kite.heuristic


# ---------- noise ----------

def test_add_noise_is_seeded():
    F = forward.farfield_matrix(disc_scene(), 16)
    a = forward.add_noise(F, 0.01, seed=3)
    b = forward.add_noise(F, 0.01, seed=3)
    assert np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, F.entries)
    assert a.diagnostics["noise"] == 0.01
    assert forward.add_noise(F, 0.0) is F
    with pytest.raises(InputError):
        forward.add_noise(F, -1.0)


def test_far_constant_matches_hankel_asymptotics():
    k, r = 3.0, 4000.0
    value = 0.25j * complex(mpmath.hankel1(0, k * r))
    expected = forward.far_constant(k) * cmath.exp(1j * k * r) / math.sqrt(r)
    assert value == pytest.approx(expected, rel=1e-4)
