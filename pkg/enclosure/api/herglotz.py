"""
Explicit Herglotz densities and their wave functions.

Notes:
- g_N(φ) = Σ_{m=0}^{nN} β_m φ^m with φ the unit complex number φ₁ + iφ₂; the
  probe at apex y multiplies by e^{−iky·φ}.
- The closed form Σ Γ(m+1)/Γ(m/n+1)(sω̄/k)^m J_m(kr)e^{imθ} is the reference
  evaluator. It is the truncation of E_{1/n}(x − y; s, k, ω) at m = nN, so the
  same log-space Bessel series serves both the field and its tail.
- Trapezoid quadrature on M equispaced nodes reproduces the closed form once
  M ≥ 2nN + 2⌈ekR⌉ + 32.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence, Union

import numpy as np
from scipy import special

from enclosure.api.errors import DensityOverflowError, DomainError, GeometryError, InputError
from enclosure.api.models import DensitySpec, ObstacleCurve, as_complex
from enclosure.api.specfun import EXP_MAX, log_gamma_ratio
from enclosure.api.vekua import bessel_series, bessel_series_gradient

logger = logging.getLogger("enclosure.herglotz")

ALIAS_TOL = 1.0e-10


def node_count(n: int, N: int, k: float, R: float) -> int:
    """Trapezoid node count resolving a degree-nN density against e^{ikx·φ} on |x| ≤ R."""
    return 2 * n * N + 2 * int(math.ceil(math.e * k * R)) + 32


def circle_nodes(M: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(M) / M)


# ---------- Coefficients ----------

@dataclass(frozen=True)
class DensityCoeffs:
    """
    β_0..β_{nN}. Coefficients built from a DensitySpec keep (n, s, ω) so the
    closed form is available; raw arrays only support the generic evaluator.
    """
    beta: np.ndarray
    k: float
    n: int | None = None
    s: float | None = None
    omega: complex = 1.0 + 0j
    factor: complex = 1.0 + 0j

    @classmethod
    def from_array(cls, beta: Sequence[complex], k: float) -> "DensityCoeffs":
        arr = np.asarray(beta, dtype=complex)
        if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
            raise InputError("density coefficients must be a non-empty finite sequence")
        return cls(beta=arr, k=float(k))

    @property
    def degree(self) -> int:
        return len(self.beta) - 1

    @property
    def closed(self) -> bool:
        return self.n is not None and self.s is not None

    def scaled(self, c: complex) -> "DensityCoeffs":
        return replace(self, beta=self.beta * c, factor=self.factor * c)


@dataclass(frozen=True)
class Density:
    """Coefficients attached to an apex y: φ ↦ e^{−iky·φ}Σβ_m φ^m."""
    coeffs: DensityCoeffs
    y: complex = 0j
    spec: DensitySpec | None = field(default=None, compare=False)

    @property
    def k(self) -> float:
        return self.coeffs.k

    def scaled(self, c: complex) -> "Density":
        return replace(self, coeffs=self.coeffs.scaled(c))

    def on_nodes(self, M: int) -> np.ndarray:
        return density_on_nodes(self.coeffs, self.y, self.k, M)

    def field(self, x: Any) -> complex:
        return herglotz_value(self, x)

    def gradient(self, x: Any) -> tuple[complex, complex]:
        return herglotz_value_gradient(self, x)


def density_coeffs(spec: DensitySpec) -> DensityCoeffs:
    """β_m = (1/2π)·Γ(m+1)/Γ(m/n+1)·(sω̄/(ik))^m, built in log space."""
    n, s, k = spec.n, spec.s, spec.k
    omega = spec.probe.omega_c
    m = np.arange(spec.degree + 1, dtype=float)
    logmag = log_gamma_ratio(m + 1.0, m / n + 1.0) + m * math.log(s / k) - math.log(2.0 * math.pi)
    peak = float(np.max(logmag))
    if peak > EXP_MAX:
        raise DensityOverflowError(f"log|β_m| reaches {peak:.1f} (n={n}, N={spec.N}, s={s:.4g}, k={k})")
    phase = m * (-cmath.phase(omega) - 0.5 * math.pi)
    beta = np.exp(logmag) * np.exp(1j * phase)
    beta[0] = 1.0 / (2.0 * math.pi)
    return DensityCoeffs(beta=beta, k=k, n=n, s=s, omega=omega)


def density_for(spec: DensitySpec) -> Density:
    return Density(coeffs=density_coeffs(spec), y=spec.probe.y.z, spec=spec)


def density_eval(c: DensityCoeffs, y: Any, k: float, phi: complex | np.ndarray) -> complex | np.ndarray:
    """
    e^{−iky·φ}Σβ_m φ^m at unit directions φ given as complex numbers φ1 + iφ2.

    A complex scalar gives a complex; an array gives an array of the same shape.
    """
    p = np.asarray(phi, dtype=complex)
    if np.any(np.abs(np.abs(p) - 1.0) > 1.0e-8):
        raise DomainError("density is evaluated on unit directions only")
    yc = as_complex(y)
    shift = np.exp(-1j * k * (np.conj(yc) * p).real)
    value = shift * np.polynomial.polynomial.polyval(p, c.beta)
    return complex(value) if np.ndim(value) == 0 else value


def density_on_nodes(c: DensityCoeffs, y: Any, k: float, M: int) -> np.ndarray:
    """Density at φ_j = e^{2πij/M}; coefficients are folded by m mod M before the FFT."""
    if M < 1:
        raise InputError("node count must be positive")
    folded = np.zeros(M, dtype=complex)
    np.add.at(folded, np.arange(len(c.beta)) % M, c.beta)
    values = M * np.fft.ifft(folded)
    phi = circle_nodes(M)
    yc = as_complex(y)
    return values * np.exp(-1j * k * (np.conj(yc) * phi).real)


# ---------- Herglotz wave function ----------

def _quadrature(c: DensityCoeffs, y: complex, k: float, z: complex, M: int) -> complex:
    phi = circle_nodes(M)
    g = density_on_nodes(c, y, k, M)
    kernel = np.exp(1j * k * (np.conj(z) * phi).real)
    return complex(np.sum(kernel * g) * (2.0 * math.pi / M))


def herglotz_quadrature(c: DensityCoeffs, y: Any, k: float, x: Any, M: int,
                        check: bool = True) -> complex:
    """∫ e^{ikx·φ} g(φ)dσ by the M-node trapezoid rule."""
    if M < 2 * c.degree + 2:
        logger.warning("M=%d below 2·degree+2=%d: density is aliased", M, 2 * c.degree + 2)
    yc, z = as_complex(y), as_complex(x)
    value = _quadrature(c, yc, k, z, M)
    if check:
        finer = _quadrature(c, yc, k, z, 2 * M)
        scale = float(np.sum(np.abs(c.beta))) * 2.0 * math.pi
        if abs(finer - value) > ALIAS_TOL * max(scale, abs(finer)):
            logger.warning("herglotz quadrature not converged at M=%d (change %.3g under doubling)",
                           M, abs(finer - value))
    return value


def herglotz_closed_form(spec: DensitySpec, x: Any) -> complex:
    """Hg(x) = Σ_{m≤nN} Γ(m+1)/Γ(m/n+1)(sω̄/k)^m J_m(kr)e^{imθ}, (r, θ) polar in x − y."""
    zeta = as_complex(x) - spec.probe.y.z
    return bessel_series(spec.n, zeta, spec.tau, spec.k, spec.probe.omega_c, 0, spec.degree).resolve()


def translated_identity(spec: DensitySpec, x: Any, M: int | None = None) -> float:
    """
    Relative gap between the apex-y quadrature at x and the apex-0 quadrature at
    x − y, both measured against the closed form.
    """
    c = density_coeffs(spec)
    y = spec.probe.y.z
    z = as_complex(x)
    M = M or node_count(spec.n, spec.N, spec.k, max(abs(z - y), spec.schedule.R))
    closed = herglotz_closed_form(spec, z)
    shifted = herglotz_quadrature(c, y, spec.k, z, M, check=False)
    centered = herglotz_quadrature(c, 0j, spec.k, z - y, M, check=False)
    scale = max(abs(closed), 1.0)
    return max(abs(shifted - closed), abs(centered - closed)) / scale


def herglotz_gradient(spec: DensitySpec, x: Any) -> tuple[complex, complex]:
    zeta = as_complex(x) - spec.probe.y.z
    return bessel_series_gradient(spec.n, zeta, spec.tau, spec.k, spec.probe.omega_c, 0, spec.degree)


def _fourier_bessel_terms(beta: np.ndarray, k: float, zeta: complex) -> tuple[np.ndarray, np.ndarray]:
    r, theta = abs(zeta), cmath.phase(zeta)
    m = np.arange(len(beta))
    weights = 2.0 * math.pi * beta * (1j ** m)
    return weights, special.jv(m, k * r) * np.exp(1j * m * theta)


def herglotz_from_coeffs(c: DensityCoeffs, y: Any, k: float, x: Any) -> complex:
    """Σ 2πβ_m i^m J_m(k|x − y|)e^{imθ} for arbitrary coefficients."""
    zeta = as_complex(x) - as_complex(y)
    weights, modes = _fourier_bessel_terms(c.beta, k, zeta)
    return complex(np.sum(weights * modes))


def herglotz_from_coeffs_gradient(c: DensityCoeffs, y: Any, k: float, x: Any) -> tuple[complex, complex]:
    zeta = as_complex(x) - as_complex(y)
    r, theta = abs(zeta), cmath.phase(zeta)
    m = np.arange(len(c.beta))
    weights = 2.0 * math.pi * c.beta * (1j ** m)
    lower = special.jv(m - 1, k * r) * np.exp(1j * (m - 1) * theta)
    upper = special.jv(m + 1, k * r) * np.exp(1j * (m + 1) * theta)
    d1 = 0.5 * k * np.sum(weights * (lower - upper))
    d2 = 0.5j * k * np.sum(weights * (lower + upper))
    return complex(d1), complex(d2)


def herglotz_value(density: Density, x: Any) -> complex:
    c = density.coeffs
    if not c.closed:
        return herglotz_from_coeffs(c, density.y, c.k, x)
    zeta = as_complex(x) - density.y
    return c.factor * bessel_series(c.n, zeta, 0.5 * c.s, c.k, c.omega, 0, c.degree).resolve()


def herglotz_value_gradient(density: Density, x: Any) -> tuple[complex, complex]:
    c = density.coeffs
    if not c.closed:
        return herglotz_from_coeffs_gradient(c, density.y, c.k, x)
    zeta = as_complex(x) - density.y
    g1, g2 = bessel_series_gradient(c.n, zeta, 0.5 * c.s, c.k, c.omega, 0, c.degree)
    return c.factor * g1, c.factor * g2


def residual_tail(spec: DensitySpec, x: Any) -> complex:
    """Σ_{m>nN} of the same series: E_{1/n}(x − y; s, k, ω) − Hg(x)."""
    zeta = as_complex(x) - spec.probe.y.z
    return bessel_series(spec.n, zeta, spec.tau, spec.k, spec.probe.omega_c, spec.degree + 1).resolve()


def residual_tail_gradient(spec: DensitySpec, x: Any) -> tuple[complex, complex]:
    zeta = as_complex(x) - spec.probe.y.z
    return bessel_series_gradient(spec.n, zeta, spec.tau, spec.k, spec.probe.omega_c, spec.degree + 1)


# ---------- Moments ----------

@dataclass
class MomentReport:
    M: int
    conjugate_error: float
    plain_error: float

    @property
    def passed(self) -> bool:
        return max(self.conjugate_error, self.plain_error) <= 1.0e-12


def moment_check(spec: DensitySpec, M: int | None = None) -> MomentReport:
    """∫φ̄^m g dσ = 2πβ_m (m ≤ nN) and ∫φ^m g dσ = 0 (1 ≤ m ≤ nN), relative to Σ2π|β_m|."""
    c = density_coeffs(spec)
    M = M or node_count(spec.n, spec.N, spec.k, spec.schedule.R)
    g = density_on_nodes(c, 0j, spec.k, M)
    phi = circle_nodes(M)
    scale = 2.0 * math.pi * float(np.sum(np.abs(c.beta)))
    m = np.arange(c.degree + 1)
    powers = phi[None, :] ** m[:, None]
    w = 2.0 * math.pi / M
    conj_moments = w * (np.conj(powers) @ g)
    plain_moments = w * (powers[1:] @ g)
    conj_err = float(np.max(np.abs(conj_moments - 2.0 * math.pi * c.beta))) / scale
    plain_err = float(np.max(np.abs(plain_moments))) / scale if c.degree else 0.0
    return MomentReport(M, conj_err, plain_err)


# ---------- Truncation error ----------

def _ml_tail(n: int, N: int, z: float, deriv: bool = False) -> float:
    """Σ_{m>nN} z^m/Γ(m/n+1) (or its z-derivative) for z > 0, summed in log space."""
    if z <= 0:
        return 0.0
    start = n * N + 1
    w = z ** n
    stop = max(int(math.ceil(n * (w + 10.0 * math.sqrt(w) + 40.0))), start + 40 * n)
    m = np.arange(start, stop + 1, dtype=float)
    if deriv:
        logs = np.log(m) + (m - 1.0) * math.log(z) - special.gammaln(m / n + 1.0)
    else:
        logs = m * math.log(z) - special.gammaln(m / n + 1.0)
    peak = float(np.max(logs))
    if peak > EXP_MAX:
        raise DensityOverflowError("truncation bound overflows")
    return float(math.exp(peak) * math.fsum(np.exp(logs - peak)))


def tail_bound(spec: DensitySpec, radius: float | None = None) -> float:
    """(E − E^{nN})(Rs): bounds |Hg − E_{1/n}| on |x − y| ≤ 2R."""
    R = spec.schedule.R if radius is None else radius
    return _ml_tail(spec.n, spec.N, R * spec.s)


def tail_gradient_bound(spec: DensitySpec, radius: float | None = None) -> float:
    """s(E − E^{nN})′(Rs) + k²R(E − E^{nN})(Rs)."""
    R = spec.schedule.R if radius is None else radius
    z = R * spec.s
    return spec.s * _ml_tail(spec.n, spec.N, z, deriv=True) + spec.k ** 2 * R * _ml_tail(spec.n, spec.N, z)


def envelope(N: int, gamma: float) -> float:
    return N ** 1.5 * math.exp(N * (gamma / math.e + math.log(gamma)))


@dataclass
class TruncationReport:
    N: int
    sup_error: float
    sup_gradient_error: float
    envelope: float
    bound: float
    gradient_bound: float

    @property
    def within_bound(self) -> bool:
        return self.sup_error <= self.bound * (1 + 1e-9) and self.sup_gradient_error <= self.gradient_bound * (1 + 1e-9)


def sample_disc(y: complex, radius: float, radial: int = 12, angular: int = 24) -> list[complex]:
    points = [complex(y)]
    for r in np.linspace(0.0, radius, radial + 1)[1:]:
        for t in np.linspace(0.0, 2.0 * np.pi, angular, endpoint=False):
            points.append(complex(y) + r * cmath.exp(1j * t))
    return points


def truncation_error(spec: DensitySpec, points: Iterable[Any] | None = None) -> TruncationReport:
    """Sup over |x − y| ≤ 2R of |Hg − E_{1/n}| and of its gradient, with bounds and envelope."""
    R = spec.schedule.R
    if points is None:
        points = sample_disc(spec.probe.y.z, 2.0 * R)
    sup_err = 0.0
    sup_grad = 0.0
    for x in points:
        sup_err = max(sup_err, abs(residual_tail(spec, x)))
        g1, g2 = residual_tail_gradient(spec, x)
        sup_grad = max(sup_grad, abs(g1), abs(g2))
    return TruncationReport(
        N=spec.N,
        sup_error=sup_err,
        sup_gradient_error=sup_grad,
        envelope=envelope(spec.N, spec.schedule.gamma),
        bound=tail_bound(spec),
        gradient_bound=tail_gradient_bound(spec),
    )



@dataclass
class TruncationSweep:
    reports: list[TruncationReport]
    constant: float
    slope: float
    predicted_slope: float

    @property
    def within_envelope(self) -> bool:
        return all(r.sup_error <= self.constant * r.envelope * (1 + 1e-6) for r in self.reports)

    @property
    def monotone(self) -> bool:
        errs = [r.sup_error for r in self.reports]
        return all(b < a for a, b in zip(errs, errs[1:]))


def truncation_sweep(n: int, gamma: float, R: float, k: float, N_values: Sequence[int],
                     y: Any = 0j, omega: Any = (1.0, 0.0),
                     points: Iterable[Any] | None = None) -> TruncationSweep:
    """Truncation errors over N; C fitted at the smallest N, slope of log error by least squares."""
    Ns = sorted(set(int(N) for N in N_values))
    if len(Ns) < 2:
        raise InputError("a sweep needs at least two truncation levels")
    pts = list(points) if points is not None else None
    reports = []
    for N in Ns:
        spec = DensitySpec.build(y, omega, n, N, gamma, R, k)
        reports.append(truncation_error(spec, pts))
        logger.debug("N=%d sup error %.3e", N, reports[-1].sup_error)
    constant = reports[0].sup_error / reports[0].envelope
    logs = np.log([max(r.sup_error, 1e-300) for r in reports])
    slope = float(np.polyfit(np.array(Ns, dtype=float), logs, 1)[0])
    return TruncationSweep(reports, constant, slope, gamma / math.e + math.log(gamma))


# ---------- Traces on obstacle boundaries ----------

@dataclass
class BoundaryTrace:
    t: np.ndarray
    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    speeds: np.ndarray
    normals: np.ndarray

    @property
    def l2_norm(self) -> float:
        h = 2.0 * math.pi / len(self.t)
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2 * self.speeds)) * h)

    @property
    def normal_derivative(self) -> np.ndarray:
        return self.gradients[:, 0] * self.normals.real + self.gradients[:, 1] * self.normals.imag


TraceSource = Union[DensitySpec, Density]


def boundary_trace(source: TraceSource, curve: ObstacleCurve, samples: int = 256) -> BoundaryTrace:
    """Hg and ∇Hg at equispaced parameter values on a closed curve."""
    if samples < 4:
        raise InputError("at least four trace samples are required")
    density = density_for(source) if isinstance(source, DensitySpec) else source
    t = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    pts = curve.points(t)
    speeds = curve.speed(t)
    if np.any(speeds <= 1e-12):
        raise GeometryError("curve has zero speed; trace is undefined")
    values = np.array([density.field(p) for p in pts], dtype=complex)
    grads = np.array([density.gradient(p) for p in pts], dtype=complex).reshape(samples, 2)
    return BoundaryTrace(t, pts, values, grads, speeds, curve.normal(t))


def sobolev_half_norm(trace: Sequence[complex] | BoundaryTrace) -> float:
    """Σ(1 + m²)^{1/2}|ĉ_m|² of the periodic parametrized trace (squared norm)."""
    values = trace.values if isinstance(trace, BoundaryTrace) else np.asarray(trace, dtype=complex)
    P = len(values)
    if P < 1 or P & (P - 1):
        raise InputError(f"trace sample count must be a power of two, got {P}")
    c = np.fft.fft(values) / P
    m = np.fft.fftfreq(P, d=1.0 / P)
    return float(np.sum(np.sqrt(1.0 + m * m) * np.abs(c) ** 2))
