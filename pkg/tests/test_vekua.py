from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np
import pytest

from enclosure.api import specfun, vekua
from enclosure.api.errors import ApexError, DomainError, MLRangeError
from enclosure.api.models import ConeSpec


def modified_oracle(n: int, z: complex, tau: float, k: float, terms: int = 160) -> complex:
    """Σ (τz)^m/Γ(m/n+1)·m!(2/(k|z|))^m J_m(k|z|) in extended precision."""
    with mpmath.workdps(50):
        zz = mpmath.mpc(z)
        a = k * abs(z)
        total = mpmath.mpf(0)
        for m in range(terms):
            jh = mpmath.factorial(m) * (2 / mpmath.mpf(a)) ** m * mpmath.besselj(m, a) if a else 1
            total += (tau * zz) ** m / mpmath.gamma(mpmath.mpf(m) / n + 1) * jh
        return complex(total)


# ---------- quadrature ----------

def test_graded_edges_cover_unit_interval():
    edges = vekua.graded_edges(1e-4)
    assert edges[0] == 0.0 and edges[-1] == 1.0
    assert np.all(np.diff(edges) > 0)
    assert np.diff(edges).min() == pytest.approx(1e-4)
    assert len(vekua.graded_edges(0.5)) == 5


def test_integrate_unit_polynomial_and_layer():
    assert vekua.integrate_unit(lambda w: w ** 5) == pytest.approx(1.0 / 6.0, rel=1e-14)
    value = vekua.integrate_unit(lambda w: 200.0 * np.exp(-200.0 * (1.0 - w)), delta_min=1e-4)
    assert value == pytest.approx(1.0 - math.exp(-200.0), rel=1e-11)


def test_layer_width_shrinks_with_scale():
    assert vekua.layer_width(1, 0.0) == 0.25
    assert vekua.layer_width(2, 50.0) < vekua.layer_width(2, 5.0) < vekua.layer_width(2, 0.5)


# ---------- Vekua transform ----------

@pytest.mark.parametrize("k", [1.0, 5.0])
@pytest.mark.parametrize("x", [0.3 + 0.2j, -1.1 + 0.7j, 1.4 - 1.3j])
def test_vekua_maps_plane_wave_pieces_to_plane_wave(k, x):
    phi = cmath.exp(0.7j)

    def v(z):
        return np.exp(0.5j * k * phi.conjugate() * z) + np.exp(0.5j * k * phi * np.conj(z)) - 1.0

    exact = cmath.exp(1j * k * (x.conjugate() * phi).real)
    assert vekua.vekua_transform(v, x, k) == pytest.approx(exact, rel=1e-8)


def test_vekua_is_identity_at_zero_wave_number():
    value = vekua.vekua_transform(lambda z: z ** 3 + 2.0, 0.4 - 0.9j, 0.0)
    assert value == pytest.approx((0.4 - 0.9j) ** 3 + 2.0, rel=1e-15)


def test_vekua_of_monomial_is_bessel_weighted():
    z, k = 0.8 + 0.5j, 3.0
    value = vekua.vekua_transform(lambda w: w ** 4, z, k)
    assert value == pytest.approx(z ** 4 * specfun.jhat(4, k * abs(z)), rel=1e-11)


# ---------- E_α^k ----------

@pytest.mark.parametrize("n,x,tau,k", [
    (1, 0.5 + 0.3j, 2.0, 2.0),
    (2, -0.4 + 0.6j, 3.0, 1.0),
    (3, 0.7 - 0.2j, 1.5, 4.0),
])
def test_ml_modified_matches_oracle(n, x, tau, k):
    ref = modified_oracle(n, x, tau, k)
    assert vekua.ml_modified_series(n, x, tau, k) == pytest.approx(ref, rel=1e-12)
    assert vekua.ml_modified_integral(n, x, tau, k) == pytest.approx(ref, rel=1e-9)
    assert vekua.ml_modified(n, x, tau, k) == pytest.approx(ref, rel=1e-9)


def test_ml_modified_reduces_to_mittag_leffler_when_k_vanishes():
    z = 0.6 + 0.4j
    assert vekua.ml_modified(2, z, 2.0, 0.0) == pytest.approx(specfun.mittag_leffler(2, 2.0 * z), rel=1e-12)
    assert vekua.ml_modified(2, 0j, 2.0, 3.0) == 1.0


def test_ml_modified_solves_helmholtz():
    n, tau, k, h = 2, 1.5, 2.0, 1e-3
    x = 0.4 + 0.3j

    def u(p):
        return vekua.ml_modified(n, p, tau, k)

    lap = (u(x + h) + u(x - h) + u(x + 1j * h) + u(x - 1j * h) - 4.0 * u(x)) / h ** 2
    assert abs(lap + k * k * u(x)) <= 1e-4 * abs(u(x))


def test_ml_modified_gradient_matches_finite_differences():
    n, tau, k, h = 2, 2.0, 1.5, 1e-5
    x = -0.3 + 0.5j
    g1, g2 = vekua.ml_modified_gradient(n, x, tau, k)
    d1 = (vekua.ml_modified(n, x + h, tau, k) - vekua.ml_modified(n, x - h, tau, k)) / (2 * h)
    d2 = (vekua.ml_modified(n, x + 1j * h, tau, k) - vekua.ml_modified(n, x - 1j * h, tau, k)) / (2 * h)
    assert g1 == pytest.approx(d1, rel=1e-6)
    assert g2 == pytest.approx(d2, rel=1e-6)


def test_series_gradient_matches_integral_gradient():
    n, tau, k = 1, 1.2, 2.0
    z = 0.5 - 0.4j
    series = vekua.bessel_series_gradient(n, z, tau, k)
    integral = vekua.ml_modified_gradient(n, z, tau, k)
    assert series[0] == pytest.approx(integral[0], rel=1e-9)
    assert series[1] == pytest.approx(integral[1], rel=1e-9)


def test_series_sum_scaling_and_envelope():
    total = vekua.bessel_series(2, 0.5 + 0.5j, 2.0, 1.0)
    assert total.resolve() == pytest.approx(vekua.ml_modified_series(2, 0.5 + 0.5j, 2.0, 1.0), rel=1e-15)
    assert total.loss >= 0.0
    with pytest.raises(MLRangeError):
        vekua.ml_modified_series(1, 1.0, 2.0e5, 1.0)


def test_directional_form_rotates_the_point():
    n, s, k = 2, 3.0, 2.0
    omega = cmath.exp(1.1j)
    x = 0.2 + 0.9j
    rotated = omega.conjugate() * x
    assert vekua.ml_directional(n, x, s, k, omega) == pytest.approx(
        vekua.ml_modified(n, rotated, s / 2.0, k), rel=1e-14)
    with pytest.raises(DomainError):
        vekua.ml_directional(n, x, s, k, 2.0)


def test_directional_gradient_matches_finite_differences():
    n, s, k, h = 2, 3.0, 2.0, 1e-5
    omega = cmath.exp(1.1j)
    x = 0.2 + 0.5j
    g1, g2 = vekua.ml_directional_gradient(n, x, s, k, omega)
    d1 = (vekua.ml_directional(n, x + h, s, k, omega) - vekua.ml_directional(n, x - h, s, k, omega)) / (2 * h)
    d2 = (vekua.ml_directional(n, x + 1j * h, s, k, omega) - vekua.ml_directional(n, x - 1j * h, s, k, omega)) / (2 * h)
    assert g1 == pytest.approx(d1, rel=1e-6)
    assert g2 == pytest.approx(d2, rel=1e-6)


# ---------- asymptotics ----------

def test_growth_inside_the_cone_follows_leading_exponential():
    n, k = 2, 2.0
    for tau in (8.0, 12.0):
        log_abs = vekua.ml_modified_log_abs(n, 1.0, tau, k)
        assert log_abs / tau ** 2 == pytest.approx(1.0, abs=0.05)
        leading = vekua.asymptotic_inside(n, 1.0, tau, k, log_scale=True)
        assert abs(log_abs - leading) / tau ** 2 < 0.05


def test_decay_outside_the_cone():
    n, k = 2, 2.0
    d3 = abs(vekua.ml_modified(n, -1.0, 1.0e3, k))
    d4 = abs(vekua.ml_modified(n, -1.0, 1.0e4, k))
    assert d4 < d3
    ratio = vekua.ml_modified(n, -1.0, 1.0e4, k) / vekua.asymptotic_outside(n, -1.0, 1.0e4, k)
    assert 0.5 < ratio.real < 1.5


@pytest.mark.parametrize("n", [1, 2, 3])
def test_modified_function_is_dominated_by_the_radial_value(n):
    rng = np.random.default_rng(5 + n)
    k = 2.0
    for _ in range(12):
        x = complex(*rng.uniform(-1.0, 1.0, size=2))
        tau = rng.uniform(0.5, 4.0)
        bound = specfun.mittag_leffler(n, tau * abs(x)).real
        assert abs(vekua.ml_modified(n, x, tau, k)) <= bound * (1 + 1e-10)


def test_growth_inside_and_decay_outside_the_cone():
    n, k = 2, 2.0
    inside = [vekua.ml_modified_log_abs(n, 0.6 + 0.1j, tau, k) for tau in (4.0, 6.0, 8.0, 10.0)]
    assert all(b > a for a, b in zip(inside, inside[1:]))
    outside = [abs(vekua.ml_modified(n, -0.8, tau, k)) for tau in (1.0e2, 1.0e3, 1.0e4)]
    assert all(b < a for a, b in zip(outside, outside[1:]))
    assert outside[-1] < 1e-2


def test_asymptotic_formulas_reject_wrong_region():
    with pytest.raises(DomainError):
        vekua.asymptotic_outside(2, 1.0, 10.0, 1.0)
    with pytest.raises(DomainError):
        vekua.asymptotic_inside(2, 1j, 10.0, 1.0)
    with pytest.raises(DomainError):
        vekua.asymptotic_outside(2, -5.0, 10.0, 1.0, radius=2.0)
    with pytest.raises(MLRangeError):
        vekua.asymptotic_inside(2, 1.0, 40.0, 1.0)


# ---------- cones ----------

def test_cone_membership():
    cone = ConeSpec(y=(0.0, 0.0), omega=(1.0, 0.0), n=2)
    assert vekua.in_cone(cone, (1.0, 0.5))
    assert not vekua.in_cone(cone, (1.0, 1.0))
    assert vekua.in_closed_cone(cone, (1.0, 1.0))
    assert not vekua.in_closed_cone(cone, (-1.0, 0.1))
    with pytest.raises(ApexError):
        vekua.in_cone(cone, (0.0, 0.0))


# ---------- remainder bounds ----------

@pytest.mark.parametrize("x", [(-0.5, 0.2), (0.1, 0.6)])
def test_remainder_within_bounds_for_exponential(x):
    report = vekua.remainder_check(np.exp, np.exp, x, 10.0, 2.0)
    assert report.passed
    assert report.bound > 0.0


def test_remainder_check_rejects_origin():
    with pytest.raises(DomainError):
        vekua.remainder_check(np.exp, np.exp, 0j, 10.0, 2.0)
