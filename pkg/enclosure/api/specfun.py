"""
Scalar special functions: Gamma, Bessel/Hankel, normalized Bessel Ĵ_m,
Mittag-Leffler E_{1/n} and its truncations, and the γ₀ root.

Notes:
- Ĵ_m(t) = (2/t)^m m! J_m(t); |Ĵ_m| ≤ 1 and Ĵ_m(0) = 1.
- E_{1/n} is evaluated exactly for n = 1, 2 and by compensated series or the
  Hankel-contour integral for n ≥ 3; a cancelled series is never returned.
- Everything here is a pure function; cached tables are immutable.
"""

from __future__ import annotations

import cmath
import logging
import math
from functools import lru_cache
from typing import Protocol

import numpy as np
from scipy import integrate, optimize, special

from enclosure.api.errors import (
    BesselRangeError,
    DomainError,
    MLRangeError,
    SingularityError,
)

logger = logging.getLogger("enclosure.specfun")

BESSEL_MAX_ORDER = 400
BESSEL_MAX_ARG = 1000.0
HANKEL_MAX_ORDER = 200
PARTIAL_MAX_TERMS = 4000
Z_MAX = 1.0e6
EXP_MAX = 700.0
SERIES_LOSS_MAX = 9.0
_JHAT_SERIES_TERMS = 60
_FACTORIALS = tuple(float(math.factorial(i)) for i in range(21))


class _Schedule(Protocol):
    gamma: float
    R: float
    n: int


def _check_order(n: int) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"Mittag-Leffler order n must be a positive integer, got {n!r}")
    return int(n)


# ---------- Gamma ----------

def gamma_fn(x: float) -> float:
    if not x > 0:
        raise DomainError(f"gamma_fn needs a positive argument, got {x!r}")
    if float(x).is_integer() and x <= 21:
        return _FACTORIALS[int(x) - 1]
    value = float(special.gamma(x))
    if not math.isfinite(value):
        raise MLRangeError(f"Gamma({x}) overflows double precision; use log_gamma")
    return value


def log_gamma(x):
    """log Γ(x) for positive x, vectorized."""
    return special.gammaln(x)


def log_gamma_ratio(a, b):
    """log Γ(a) − log Γ(b) without forming either Gamma value."""
    return log_gamma(a) - log_gamma(b)


# ---------- Bessel ----------

def _check_bessel(m: int, t: float, max_order: int = BESSEL_MAX_ORDER) -> None:
    if int(m) != m or m < 0:
        raise DomainError(f"Bessel order must be a nonnegative integer, got {m!r}")
    if m > max_order:
        raise BesselRangeError(f"Bessel order {m} exceeds envelope {max_order}")
    if np.any(np.asarray(t) < 0):
        raise DomainError("Bessel argument must be nonnegative")
    if np.any(np.asarray(t) > BESSEL_MAX_ARG):
        raise BesselRangeError(f"Bessel argument exceeds envelope {BESSEL_MAX_ARG}")


def bessel_j(m: int, t):
    _check_bessel(m, t)
    return special.jv(m, t)


def bessel_y(m: int, t):
    _check_bessel(m, t, HANKEL_MAX_ORDER)
    if np.any(np.asarray(t) == 0):
        raise SingularityError("Y_m is singular at t = 0")
    return special.yv(m, t)


def bessel_jp(m: int, t):
    _check_bessel(m, t)
    return special.jvp(m, t)


def bessel_h1(m: int, t):
    _check_bessel(m, t, HANKEL_MAX_ORDER)
    if np.any(np.asarray(t) == 0):
        raise SingularityError("H^(1)_m is singular at t = 0")
    return bessel_j(m, t) + 1j * bessel_y(m, t)


def bessel_h1p(m: int, t):
    _check_bessel(m, t, HANKEL_MAX_ORDER)
    if np.any(np.asarray(t) == 0):
        raise SingularityError("H^(1)'_m is singular at t = 0")
    return special.h1vp(m, t)


def _jhat_series(m: int, t: np.ndarray) -> np.ndarray:
    # Σ_j (−t²/4)^j m!/(j!(m+j)!), accurate while t² ≤ 16(m+1)
    q = -0.25 * t * t
    term = np.ones_like(t)
    total = np.ones_like(t)
    for j in range(1, _JHAT_SERIES_TERMS):
        term = term * q / (j * (m + j))
        total = total + term
    return total


def jhat(m: int, t):
    """Normalized Bessel function Ĵ_m(t), vectorized over t."""
    _check_bessel(m, t)
    t_arr = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t_arr)
    out = np.empty_like(flat)
    small = flat * flat <= 16.0 * (m + 1)
    if np.any(small):
        out[small] = _jhat_series(m, flat[small])
    big = ~small
    if np.any(big):
        tb = flat[big]
        out[big] = np.exp(special.gammaln(m + 1) + m * np.log(2.0 / tb)) * special.jv(m, tb)
    if t_arr.ndim == 0:
        return float(out[0])
    return out.reshape(t_arr.shape)


def jhat_orders(m_max: int, t) -> np.ndarray:
    """
    Table Ĵ_0..Ĵ_{m_max} at t (scalar or 1-d array), shape (m_max + 1, *t.shape).

    Downward recurrence Ĵ_{m−1} = Ĵ_m − t²/(4m(m+1))·Ĵ_{m+1}, started from the
    series at an order where the series is exact; J_m is the minimal solution
    so the recurrence is stable for any m_max.
    """
    if m_max < 0:
        raise DomainError("m_max must be nonnegative")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise DomainError("Bessel argument must be nonnegative")
    if np.any(t_arr > BESSEL_MAX_ARG):
        raise BesselRangeError(f"Bessel argument exceeds envelope {BESSEL_MAX_ARG}")
    t_top = float(t_arr.max()) if t_arr.size else 0.0
    top = max(m_max, int(math.ceil(t_top * t_top / 16.0))) + 1
    q = 0.25 * t_arr * t_arr
    table = np.empty((top + 2, t_arr.size))
    table[top + 1] = _jhat_series(top + 1, t_arr)
    table[top] = _jhat_series(top, t_arr)
    for m in range(top, 0, -1):
        table[m - 1] = table[m] - q / (m * (m + 1.0)) * table[m + 1]
    out = table[: m_max + 1]
    if np.ndim(t) == 0:
        return out[:, 0].copy()
    return out.reshape((m_max + 1,) + np.shape(t))


# ---------- γ₀ and the schedule ----------

@lru_cache(maxsize=1)
def gamma0_root() -> float:
    """Unique positive root of log t + t/e = 0."""
    return float(optimize.brentq(lambda t: math.log(t) + t / math.e, 0.1, 1.0,
                                 xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200))


def s_schedule(p: _Schedule, N: int) -> float:
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    return ((p.gamma / math.e) * N) ** (1.0 / p.n) / p.R


# ---------- Mittag-Leffler ----------

def _series_terms(n: int, z: complex, m_stop: int, deriv: bool) -> tuple[np.ndarray, np.ndarray]:
    m = np.arange(0, m_stop + 1, dtype=float)
    logr = math.log(abs(z))
    arg = cmath.phase(z)
    if deriv:
        m = m[1:]
        logmag = np.log(m) + (m - 1.0) * logr - special.gammaln(m / n + 1.0)
        phase = (m - 1.0) * arg
    else:
        logmag = m * logr - special.gammaln(m / n + 1.0)
        phase = m * arg
    mag = np.exp(logmag)
    return mag * np.cos(phase), mag * np.sin(phase)


def _series_stop(n: int, z: complex) -> int:
    w = abs(z) ** n
    return int(math.ceil(n * (w + 10.0 * math.sqrt(w) + 40.0)))


def _series(n: int, z: complex, deriv: bool = False) -> complex:
    if z == 0:
        return complex(1.0 / gamma_fn(1.0 / n + 1.0)) if deriv else 1.0 + 0.0j
    re, im = _series_terms(n, z, _series_stop(n, z), deriv)
    return complex(math.fsum(re), math.fsum(im))


def series_loss(n: int, z: complex) -> float:
    """Estimated log of the cancellation factor Σ|terms| / |E_{1/n}(z)|."""
    w = abs(z) ** n
    return w - max((z ** n).real, -math.log1p(w))


def _cquad(fn, a: float, b: float, points=None) -> complex:
    opts = dict(epsabs=1e-15, epsrel=1e-12, limit=400)
    if points:
        opts["points"] = points
    re, _ = integrate.quad(lambda v: fn(v).real, a, b, **opts)
    im, _ = integrate.quad(lambda v: fn(v).imag, a, b, **opts)
    return complex(re, im)


def _contour(n: int, z: complex, deriv: bool = False) -> complex:
    """E_{1/n}(z) (or E') from the Hankel-contour integral with pole residue."""
    alpha_pi = math.pi / n
    psi = abs(cmath.phase(z))
    r = abs(z)
    eps = 1.0 if r >= 2.0 else 0.5 * r
    if psi <= 0.8 * alpha_pi:
        delta, residue = alpha_pi, True
    else:
        delta, residue = 0.6 * alpha_pi, False
    power = 2 if deriv else 1
    decay = abs(math.cos(n * delta))
    rho_max = max((45.0 / decay) ** (1.0 / n), 2.0 * eps)
    up = cmath.exp(1j * delta)
    down = cmath.exp(-1j * delta)
    up_n = cmath.exp(1j * n * delta)
    down_n = cmath.exp(-1j * n * delta)

    def ray(rho: float) -> complex:
        a = cmath.exp(rho ** n * up_n) * up / (rho * up - z) ** power
        b = cmath.exp(rho ** n * down_n) * down / (rho * down - z) ** power
        return a - b

    def arc(phi: float) -> complex:
        zeta = eps * cmath.exp(1j * phi)
        return cmath.exp(zeta ** n) * zeta / (zeta - z) ** power

    points = [r] if eps < r < rho_max else None
    total = n / (2j * math.pi) * _cquad(ray, eps, rho_max, points)
    total += n / (2.0 * math.pi) * _cquad(arc, -delta, delta)
    if residue:
        zn = z ** n
        if zn.real > EXP_MAX:
            raise MLRangeError(f"E_1/{n}({z}) overflows (Re z^n = {zn.real:.1f})")
        if deriv:
            total += n * n * z ** (n - 1) * cmath.exp(zn)
        else:
            total += n * cmath.exp(zn)
    return total


def _ml_scalar(n: int, z: complex, deriv: bool) -> complex:
    if z == 0:
        return _series(n, 0j, deriv)
    if abs(z) > Z_MAX:
        raise MLRangeError(f"|z| = {abs(z):.3g} beyond envelope {Z_MAX:g}")
    if series_loss(n, z) <= SERIES_LOSS_MAX:
        return _series(n, z, deriv)
    return _contour(n, z, deriv)


def _check_growth(n: int, z: np.ndarray) -> None:
    zn = z ** n
    growth = np.abs(np.angle(z)) < math.pi / n
    if np.any(growth & (zn.real > EXP_MAX)):
        raise MLRangeError(f"E_1/{n} overflows: Re z^n exceeds {EXP_MAX:g} inside the growth sector")
    if np.any(np.abs(z) > Z_MAX):
        raise MLRangeError(f"|z| beyond envelope {Z_MAX:g}")


def _ml(n: int, z, deriv: bool):
    n = _check_order(n)
    z_arr = np.asarray(z, dtype=complex)
    _check_growth(n, np.atleast_1d(z_arr))
    if n == 1:
        out = np.exp(z_arr)
    elif n == 2:
        value = special.erfcx(-z_arr)
        out = 2.0 * z_arr * value + 2.0 / math.sqrt(math.pi) if deriv else value
    else:
        flat = [_ml_scalar(n, complex(v), deriv) for v in z_arr.ravel()]
        out = np.asarray(flat, dtype=complex).reshape(z_arr.shape)
    if not np.all(np.isfinite(out)):
        raise MLRangeError(f"E_1/{n} evaluation overflowed")
    if z_arr.ndim == 0:
        return complex(out)
    return out


def mittag_leffler(n: int, z):
    """E_{1/n}(z) = Σ z^m/Γ(m/n + 1); scalar or array argument."""
    return _ml(n, z, deriv=False)


def mittag_leffler_deriv(n: int, z):
    return _ml(n, z, deriv=True)


def mittag_leffler_partial(n: int, N: int, z: complex) -> complex:
    """Exact truncation Σ_{m=0}^{nN} z^m/Γ(m/n+1), compensated."""
    n = _check_order(n)
    if N < 0 or n * N > PARTIAL_MAX_TERMS:
        raise DomainError(f"nN = {n * N} outside 0..{PARTIAL_MAX_TERMS}")
    z = complex(z)
    if z == 0:
        return 1.0 + 0.0j
    re, im = _series_terms(n, z, n * N, deriv=False)
    return complex(math.fsum(re), math.fsum(im))


def mittag_leffler_partial_deriv(n: int, N: int, z: complex) -> complex:
    n = _check_order(n)
    z = complex(z)
    if N == 0:
        return 0j
    if z == 0:
        return complex(1.0 / gamma_fn(1.0 / n + 1.0))
    re, im = _series_terms(n, z, n * N, deriv=True)
    return complex(math.fsum(re), math.fsum(im))


def mittag_leffler_asymptotic(n: int, z: complex, terms: int = 6) -> complex:
    """
    Large-|z| expansion: n·e^{z^n}·[|arg z| < π/n] − Σ_{j≤terms} z^{−j}/Γ(1 − j/n).
    Only meaningful for |z| ≫ 1.
    """
    n = _check_order(n)
    z = complex(z)
    total = -sum(z ** (-j) * special.rgamma(1.0 - j / n) for j in range(1, terms + 1))
    if abs(cmath.phase(z)) < math.pi / n:
        total += n * cmath.exp(z ** n)
    return complex(total)


# ---------- truncation bounds ----------

def partial_tail_bound(n: int, N: int, z: complex) -> float:
    """Σ_{l=1}^n |z|^{nN+l}/Γ(N+1+l/n) · e^{|Re z^n|} bounding |E − E^{nN}|."""
    z = complex(z)
    if z == 0:
        return 0.0
    logr = math.log(abs(z))
    shift = abs((z ** n).real)
    return sum(
        math.exp((n * N + l) * logr - special.gammaln(N + 1 + l / n) + shift)
        for l in range(1, n + 1)
    )


def partial_tail_deriv_bound(n: int, N: int, z: complex) -> float:
    """n|z|^{n−1} Σ_{l=1}^n |z|^{n(N−1)+l}/Γ(N+l/n) · e^{|Re z^n|} bounding |(E − E^{nN})′|."""
    z = complex(z)
    if z == 0:
        return 0.0
    logr = math.log(abs(z))
    shift = abs((z ** n).real)
    return n * sum(
        math.exp((n - 1) * logr + (n * (N - 1) + l) * logr - special.gammaln(N + l / n) + shift)
        for l in range(1, n + 1)
    )
