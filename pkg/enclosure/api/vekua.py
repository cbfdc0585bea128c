"""
Vekua transform and the modified Mittag-Leffler functions E_α^k, α = 1/n.

Notes:
- The Vekua integral is taken after t = 1 − w², which leaves an analytic
  integrand; composite Gauss–Legendre on panels graded toward both ends of
  [0, 1] resolves the boundary layers of E_α(τ t z) for large τ|x|.
- Normalized Bessel series Σ c_m ζ^m Ĵ_m(k|ζ|) are summed in log space with a
  common scale factor, which serves E_α^k, its directional form and the
  Herglotz closed form alike.
- Callables passed in (v, f, f') must accept numpy complex arrays and be safe
  to call from several threads.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable

import numpy as np
from scipy import special

from enclosure.api.errors import (
    ApexError,
    DomainError,
    MLRangeError,
    QuadratureError,
)
from enclosure.api.models import ConeSpec, as_complex
from enclosure.api.specfun import (
    EXP_MAX,
    jhat,
    jhat_orders,
    mittag_leffler,
    mittag_leffler_deriv,
)

logger = logging.getLogger("enclosure.vekua")

Holomorphic = Callable[[np.ndarray], np.ndarray]

QUAD_RTOL = 1.0e-11
GL_START = 16
GL_MAX = 256
SERIES_MAX_LOSS = math.log(1.0e4)
SERIES_MAX_W = 1.0e5


# ---------- Quadrature on [0, 1] ----------

@lru_cache(maxsize=16)
def _gauss_legendre(p: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(p)


def graded_edges(delta_min: float) -> np.ndarray:
    """Panel edges on [0, 1], geometric toward both ends down to delta_min."""
    if delta_min >= 0.25:
        return np.linspace(0.0, 1.0, 5)
    geo = []
    h = delta_min
    while h < 0.25:
        geo.append(h)
        h *= 2.0
    inner = [0.25, 0.5, 0.75]
    return np.array([0.0] + geo + inner + [1.0 - g for g in reversed(geo)] + [1.0])


def layer_width(n: int, scale: float) -> float:
    """Finest panel width for integrands E_{1/n}(τ t z) with scale = τ|z|."""
    if scale <= 0:
        return 0.25
    return min(1.0e-2 / (1.0 + scale), 0.1 / math.sqrt(n * scale ** n))


def integrate_unit(fn: Callable[[np.ndarray], np.ndarray], delta_min: float = 0.25,
                   rtol: float = QUAD_RTOL) -> complex:
    edges = graded_edges(delta_min)
    a, b = edges[:-1], edges[1:]
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    previous = None
    p = GL_START
    while p <= GL_MAX:
        x, w = _gauss_legendre(p)
        nodes = half[:, None] * x[None, :] + mid[:, None]
        weights = half[:, None] * w[None, :]
        values = np.asarray(fn(nodes.ravel()), dtype=complex).reshape(nodes.shape)
        if not np.all(np.isfinite(values)):
            raise QuadratureError("integrand produced a non-finite sample")
        total = complex(np.sum(weights * values))
        scale = float(np.sum(weights * np.abs(values)))
        if previous is not None and abs(total - previous) <= rtol * scale:
            return total
        previous = total
        p *= 2
    raise QuadratureError(f"Gauss-Legendre did not converge with {GL_MAX} nodes per panel "
                          f"({len(a)} panels)")


# ---------- Vekua transform ----------

def vekua_transform(v: Holomorphic, x: Any, k: float, layer: float = 0.25) -> complex:
    """
    u(x) = v(x) − (k|x|/2)∫₀¹ v(tx)J_1(k|x|√(1−t))dt/√(1−t).

    v is a function of the complex coordinate x1 + i x2 (vectorized).
    """
    if k < 0:
        raise DomainError("wave number must be nonnegative")
    z = as_complex(x)
    head = complex(np.asarray(v(np.array([z])), dtype=complex)[0])
    if not cmath.isfinite(head):
        raise QuadratureError("v(x) is not finite")
    a = k * abs(z)
    if a == 0:
        return head

    def integrand(w: np.ndarray) -> np.ndarray:
        return w * v((1.0 - w * w) * z) * jhat(1, a * w)

    return head - 0.5 * a * a * integrate_unit(integrand, layer)


def vekua_gradient(f: Holomorphic, fprime: Holomorphic, x: Any, tau: float, k: float,
                   layer: float | None = None) -> tuple[complex, complex]:
    """Gradient of the Vekua transform of f(τ(x1 + i x2)) for entire f."""
    z = as_complex(x)
    a = k * abs(z)
    if layer is None:
        layer = 0.25
    head = complex(np.asarray(fprime(np.array([tau * z])), dtype=complex)[0])
    if a == 0:
        return tau * head, 1j * tau * head

    def stacked(w: np.ndarray) -> np.ndarray:
        arg = tau * (1.0 - w * w) * z
        fv = f(arg)
        return np.stack([
            2.0 * w * (1.0 - w * w) * fprime(arg) * jhat(1, a * w),
            2.0 * w * fv * jhat(1, a * w),
            2.0 * w ** 3 * fv * jhat(2, a * w),
        ])

    A = integrate_unit(lambda w: stacked(w)[0], layer)
    B = integrate_unit(lambda w: stacked(w)[1], layer)
    C = integrate_unit(lambda w: stacked(w)[2], layer)
    quarter = (a / 2.0) ** 2
    out = []
    for j, xj in ((0, z.real), (1, z.imag)):
        unit = 1j ** j
        out.append(tau * unit * (head - quarter * A)
                   - 0.5 * k * k * xj * B
                   + (k / 2.0) ** 4 * abs(z) ** 2 * xj * C)
    return out[0], out[1]


# ---------- Normalized Bessel series ----------

@dataclass(frozen=True)
class SeriesSum:
    """Σ terms = value·e^{log_scale}; abs_sum carries the same scale."""
    value: complex
    log_scale: float
    abs_sum: float
    terms: int

    @property
    def loss(self) -> float:
        if self.abs_sum == 0:
            return 0.0
        if self.value == 0:
            return math.inf
        return math.log(self.abs_sum / abs(self.value))

    def resolve(self) -> complex:
        if self.value == 0:
            return 0j
        if self.log_scale + math.log(abs(self.value)) > EXP_MAX:
            raise MLRangeError("series value overflows double precision; use the log-scale form")
        return self.value * math.exp(self.log_scale)

    def log_abs(self) -> float:
        if self.value == 0:
            return -math.inf
        return self.log_scale + math.log(abs(self.value))


def series_stop(n: int, scale: float, start: int = 0) -> int:
    w = scale ** n
    return max(int(math.ceil(n * (w + 10.0 * math.sqrt(w) + 40.0))), start + 40 * n)


def bessel_series(n: int, zeta: complex, tau: float, k: float, omega: complex = 1.0 + 0j,
                  start: int = 0, stop: int | None = None) -> SeriesSum:
    """Σ_{m=start}^{stop} (τ ω̄ ζ)^m / Γ(m/n + 1) · Ĵ_m(k|ζ|); stop=None sums to negligible terms."""
    r = abs(zeta)
    if r == 0 or tau == 0:
        hit = start == 0 and (stop is None or stop >= 0)
        return SeriesSum(1.0 + 0j if hit else 0j, 0.0, 1.0 if hit else 0.0, 1 if hit else 0)
    scale = tau * r
    if stop is None:
        stop = series_stop(n, scale, start)
    if stop < start:
        return SeriesSum(0j, 0.0, 0.0, 0)
    phi = cmath.phase(zeta) - cmath.phase(omega)
    m = np.arange(start, stop + 1, dtype=float)
    logmag = m * math.log(scale) - special.gammaln(m / n + 1.0)
    shift = float(np.max(logmag))
    jh = jhat_orders(stop, k * r)[start:]
    mag = np.exp(logmag - shift) * jh
    re = math.fsum(mag * np.cos(m * phi))
    im = math.fsum(mag * np.sin(m * phi))
    return SeriesSum(complex(re, im), shift, float(np.sum(np.abs(mag))), len(m))


def bessel_series_gradient(n: int, zeta: complex, tau: float, k: float, omega: complex = 1.0 + 0j,
                           start: int = 0, stop: int | None = None) -> tuple[complex, complex]:
    """
    Gradient of bessel_series with respect to the point, from the ladder identities
    ∂_1(J_m e^{imθ}) = (k/2)(J_{m−1}e^{i(m−1)θ} − J_{m+1}e^{i(m+1)θ}) and
    ∂_2(J_m e^{imθ}) = (ik/2)(J_{m−1}e^{i(m−1)θ} + J_{m+1}e^{i(m+1)θ}).
    """
    r = abs(zeta)
    lo = max(start, 0)
    if r == 0:
        if lo <= 1 and (stop is None or stop >= 1):
            c1 = tau * omega.conjugate() / special.gamma(1.0 / n + 1.0)
            return complex(c1), complex(1j * c1)
        return 0j, 0j
    scale = tau * r
    if stop is None:
        stop = series_stop(n, scale, start)
    if stop < lo:
        return 0j, 0j
    arg_z, arg_w = cmath.phase(zeta), cmath.phase(omega)
    m = np.arange(lo, stop + 1, dtype=float)
    base = m * math.log(tau) - special.gammaln(m / n + 1.0)
    jh = jhat_orders(stop + 1, k * r)
    mp = m[m >= 1]
    log_a = base[m >= 1] + np.log(mp) + (mp - 1.0) * math.log(r)
    log_b = base + (m + 1.0) * math.log(r) - np.log(m + 1.0)
    shift = float(max(np.max(log_a) if log_a.size else -np.inf, np.max(log_b)))
    idx_a = mp.astype(int)
    idx_b = m.astype(int)
    term_a = np.exp(log_a - shift) * jh[idx_a - 1] * np.exp(1j * ((mp - 1.0) * arg_z - mp * arg_w))
    term_b = np.exp(log_b - shift) * jh[idx_b + 1] * np.exp(1j * ((m + 1.0) * arg_z - m * arg_w))
    A = complex(math.fsum(term_a.real), math.fsum(term_a.imag))
    B = complex(math.fsum(term_b.real), math.fsum(term_b.imag)) * (k / 2.0) ** 2
    factor = math.exp(shift)
    g1, g2 = (A - B) * factor, 1j * (A + B) * factor
    if lo == 0:
        # m = 0 steps down to J_{−1} = −J_1, which has no Ĵ form
        down = -(k / 2.0) ** 2 * zeta.conjugate() * jh[1]
        g1, g2 = g1 + down, g2 + 1j * down
    return g1, g2


# ---------- Modified Mittag-Leffler E_α^k ----------

def _series_loss_estimate(n: int, z: complex, tau: float) -> float:
    w = (tau * abs(z)) ** n
    return w - max(((tau * z) ** n).real, -math.log1p(w))


def ml_modified_series(n: int, x: Any, tau: float, k: float) -> complex:
    """E_α^k(x;τ) = Σ (τ(x1 + i x2))^m/Γ(m/n + 1)·Ĵ_m(k|x|)."""
    return ml_modified_series_sum(n, x, tau, k).resolve()


def ml_modified_series_sum(n: int, x: Any, tau: float, k: float) -> SeriesSum:
    z = as_complex(x)
    if (tau * abs(z)) ** n > SERIES_MAX_W:
        raise MLRangeError(f"(τ|x|)^n = {(tau * abs(z)) ** n:.3g} beyond the series envelope")
    result = bessel_series(n, z, tau, k)
    if result.loss > SERIES_MAX_LOSS:
        raise MLRangeError(f"series cancellation loses {result.loss / math.log(10):.1f} digits at x = {z}")
    return result


def ml_modified_integral(n: int, x: Any, tau: float, k: float) -> complex:
    """E_α(τ(x1 + i x2)) minus the Vekua integral term."""
    z = as_complex(x)
    if z == 0:
        return 1.0 + 0j
    return vekua_transform(lambda zz: mittag_leffler(n, tau * zz), z, k,
                           layer=layer_width(n, tau * abs(z)))


def ml_modified(n: int, x: Any, tau: float, k: float) -> complex:
    """Series where it is free of cancellation, integral representation elsewhere."""
    z = as_complex(x)
    if z == 0:
        return 1.0 + 0j
    if _series_loss_estimate(n, z, tau) <= SERIES_MAX_LOSS + 2.0:
        try:
            return ml_modified_series(n, z, tau, k)
        except MLRangeError:
            logger.debug("series rejected at x=%s tau=%s, using integral form", z, tau)
    return ml_modified_integral(n, z, tau, k)


def ml_modified_log_abs(n: int, x: Any, tau: float, k: float) -> float:
    """log|E_α^k(x;τ)|, valid beyond the double range inside the growth sector."""
    z = as_complex(x)
    if z == 0:
        return 0.0
    try:
        return ml_modified_series_sum(n, z, tau, k).log_abs()
    except MLRangeError:
        return math.log(abs(ml_modified_integral(n, z, tau, k)))


def ml_modified_gradient(n: int, x: Any, tau: float, k: float) -> tuple[complex, complex]:
    """∂_j E_α^k from the integral formula of the gradient (w-substituted)."""
    z = as_complex(x)
    return vekua_gradient(lambda zz: mittag_leffler(n, zz),
                          lambda zz: mittag_leffler_deriv(n, zz),
                          z, tau, k, layer=layer_width(n, tau * abs(z)))


def _rotated(x: Any, omega: Any) -> tuple[complex, complex]:
    w = as_complex(omega)
    if abs(abs(w) - 1.0) > 1.0e-8:
        raise DomainError(f"omega must be a unit vector, |ω| = {abs(w)}")
    w = w / abs(w)
    return w.conjugate() * as_complex(x), w


def ml_directional(n: int, x: Any, s: float, k: float, omega: Any) -> complex:
    """E_{1/n}(x; s, k, ω) = E^k_{1/n}((x·ω, x·ω^⊥); s/2)."""
    zr, _ = _rotated(x, omega)
    return ml_modified(n, zr, 0.5 * s, k)


def ml_directional_gradient(n: int, x: Any, s: float, k: float, omega: Any) -> tuple[complex, complex]:
    zr, w = _rotated(x, omega)
    g1, g2 = ml_modified_gradient(n, zr, 0.5 * s, k)
    return g1 * w.real - g2 * w.imag, g1 * w.imag + g2 * w.real


# ---------- Asymptotic reference formulas ----------

def _check_radius(z: complex, radius: float | None) -> None:
    if radius is not None and not (1.0 / radius <= abs(z) <= radius):
        raise DomainError(f"|x| = {abs(z):.4g} outside [{1.0 / radius:.4g}, {radius:.4g}]")


def asymptotic_outside(n: int, x: Any, tau: float, k: float, radius: float | None = None) -> complex:
    """Leading term (k|x|/2)²Ĵ_1(k|x|)/(x1 + i x2)·log τ/(τΓ(1 − α)) outside the closed cone."""
    z = as_complex(x)
    if z == 0 or abs(cmath.phase(z)) <= math.pi / (2 * n):
        raise DomainError(f"x = {z} is not outside the closed cone of half-aperture π/{2 * n}")
    _check_radius(z, radius)
    a = k * abs(z)
    return complex((a / 2.0) ** 2 * jhat(1, a) / z * special.rgamma(1.0 - 1.0 / n)
                   * math.log(tau) / tau)


def asymptotic_inside(n: int, x: Any, tau: float, k: float, epsilon: float = 0.1,
                      radius: float | None = None, log_scale: bool = False):
    """n·exp(τ^n (x1 + i x2)^n) where Re (x1 + i x2)^n ≥ ε."""
    z = as_complex(x)
    zn = z ** n
    if zn.real < epsilon:
        raise DomainError(f"Re z^n = {zn.real:.4g} below epsilon = {epsilon}")
    _check_radius(z, radius)
    exponent = tau ** n * zn
    if log_scale:
        return math.log(n) + exponent.real
    if exponent.real > EXP_MAX:
        raise MLRangeError("asymptotic value overflows; use log_scale=True")
    return n * cmath.exp(exponent)


# ---------- Cones ----------

def _cone_angle(c: ConeSpec, x: Any) -> float:
    d = as_complex(x) - c.y.z
    if d == 0:
        raise ApexError("cone membership is undefined at the apex")
    return abs(cmath.phase(c.omega_c.conjugate() * d))


def in_cone(c: ConeSpec, x: Any) -> bool:
    """Open cone (x − y)·ω > |x − y| cos(π/(2n))."""
    return _cone_angle(c, x) < math.pi / (2 * c.n)


def in_closed_cone(c: ConeSpec, x: Any) -> bool:
    return _cone_angle(c, x) <= math.pi / (2 * c.n)


# ---------- Remainder check ----------

@dataclass
class RemainderReport:
    x: complex
    tau: float
    k: float
    remainder: complex
    bound: float
    remainder_grad: tuple[complex, complex]
    bound_grad: tuple[float, float]

    @property
    def passed(self) -> bool:
        ok = abs(self.remainder) <= self.bound * (1 + 1e-9) + 1e-12
        for r, b in zip(self.remainder_grad, self.bound_grad):
            ok = ok and abs(r) <= b * (1 + 1e-9) + 1e-12
        return ok

    @property
    def ratios(self) -> tuple[float, float, float]:
        def ratio(r, b):
            return abs(r) / b if b > 0 else (0.0 if r == 0 else math.inf)
        return (ratio(self.remainder, self.bound),
                ratio(self.remainder_grad[0], self.bound_grad[0]),
                ratio(self.remainder_grad[1], self.bound_grad[1]))


def remainder_check(f: Holomorphic, fprime: Holomorphic, x: Any, tau: float, k: float,
                    n_hint: int = 1) -> RemainderReport:
    """
    Remainders R, R_j left after subtracting the principal parts built from
    (1/τ)∫₀^τ f(w z)dw, together with their quadrature bounds.
    """
    z = as_complex(x)
    if z == 0 or k == 0:
        raise DomainError("remainder check needs x ≠ 0 and k > 0")
    a = k * abs(z)
    quarter = (a / 2.0) ** 2
    layer = layer_width(n_hint, tau * abs(z))
    f_tz = complex(np.asarray(f(np.array([tau * z])))[0])
    fp_tz = complex(np.asarray(fprime(np.array([tau * z])))[0])
    u = vekua_transform(lambda zz: f(tau * zz), z, k, layer)
    grad = vekua_gradient(f, fprime, z, tau, k, layer)
    mean = integrate_unit(lambda t: f(tau * t * z), layer)
    w_abs = integrate_unit(lambda t: t * np.abs(f(tau * t * z)), layer).real
    w2_abs = tau * integrate_unit(lambda t: t * t * np.abs(fprime(tau * t * z)), layer).real
    j1, j2 = jhat(1, a), jhat(2, a)

    remainder = (u - f_tz) / quarter + j1 * mean
    bound = 0.5 * quarter * w_abs
    rem_grad, bnd_grad = [], []
    for j, xj in ((0, z.real), (1, z.imag)):
        principal = (-(-1j) ** j * j1 / z.conjugate() + (k / 2.0) ** 2 * xj * j2) * mean
        rj = (grad[j] - tau * 1j ** j * fp_tz) / quarter + 1j ** j * j1 * f_tz / z - principal
        bj = 0.5 * quarter * (w2_abs + 2.0 * abs(xj) / abs(z) ** 2 * (2.0 + quarter / 3.0) * w_abs)
        rem_grad.append(complex(rj))
        bnd_grad.append(float(bj))
    return RemainderReport(z, tau, k, complex(remainder), float(bound),
                         (rem_grad[0], rem_grad[1]), (bnd_grad[0], bnd_grad[1]))
