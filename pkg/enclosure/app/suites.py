"""
Self-contained verification suites run by `enclosure verify`.

Each suite returns a SuiteResult with the measured quantities; the CLI prints
one JSON line per suite and exits 1 if any suite fails.
"""

from __future__ import annotations

import cmath
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from enclosure.api import forward, herglotz, indicator, specfun, vekua
from enclosure.api.errors import InputError
from enclosure.api.models import DensitySpec, ObstacleCurve, Scene

logger = logging.getLogger("enclosure.suites")


@dataclass(frozen=True)
class SuiteOptions:
    epsilon: float = 0.1
    uniform_radius: float = 2.0
    bracket: float = 1.0e4


@dataclass
class SuiteResult:
    name: str
    passed: bool
    measured: dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    def as_dict(self) -> dict[str, Any]:
        return {"suite": self.name, "passed": self.passed, "seconds": round(self.seconds, 3),
                **self.measured}


# ---------- suites ----------

def suite_jhat_bound(seed: int = 0, opts: SuiteOptions = SuiteOptions()) -> SuiteResult:
    t = np.round(np.arange(0.0, 50.0 + 1e-9, 0.1), 10)
    worst = 0.0
    for m in range(61):
        worst = max(worst, float(np.max(np.abs(specfun.jhat(m, t)))))
    return SuiteResult("jhat-bound", worst <= 1.0 + 1.0e-13, {"max_abs": worst})


def suite_vekua_plane_wave(seed: int = 0, opts: SuiteOptions = SuiteOptions()) -> SuiteResult:
    """Vekua transform of e^{ikφ̄z/2} + e^{ikφz̄/2} − 1 against e^{ikx·φ}."""
    worst = 0.0
    axis = np.linspace(-2.0 / math.sqrt(2.0), 2.0 / math.sqrt(2.0), 9)
    for k in (1.0, 2.0, 5.0):
        for j in range(8):
            phi = cmath.exp(2j * math.pi * j / 8)

            def v(z, phi=phi, k=k):
                return np.exp(0.5j * k * phi.conjugate() * z) + np.exp(0.5j * k * phi * np.conj(z)) - 1.0

            for a in axis:
                for b in axis:
                    z = complex(a, b)
                    exact = cmath.exp(1j * k * (z.conjugate() * phi).real)
                    got = vekua.vekua_transform(v, z, k)
                    worst = max(worst, abs(got - exact) / abs(exact))
    return SuiteResult("vekua-plane-wave", worst <= 1.0e-8, {"max_rel_error": worst})


def suite_herglotz_identity(seed: int = 0, opts: SuiteOptions = SuiteOptions()) -> SuiteResult:
    """Closed form + tail = directional E_{1/n} on |x − y| ≤ uniform_radius; closed form = trapezoid quadrature."""
    rng = np.random.default_rng(seed)
    R, k, gamma = 1.0, 2.0, 0.5
    worst_identity = 0.0
    worst_quadrature = 0.0
    for n in (1, 2, 3):
        for N in (4, 8, 16):
            y = complex(*rng.uniform(-0.3, 0.3, 2))
            omega = cmath.exp(2j * math.pi * rng.uniform())
            spec = DensitySpec.build(y, omega, n, N, gamma, R, k)
            coeffs = herglotz.density_coeffs(spec)
            M = herglotz.node_count(n, N, k, opts.uniform_radius)
            scale = 2.0 * math.pi * float(np.sum(np.abs(coeffs.beta)))
            for _ in range(25):
                x = y + opts.uniform_radius * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
                closed = herglotz.herglotz_closed_form(spec, x)
                tail = herglotz.residual_tail(spec, x)
                target = vekua.ml_directional(n, x - y, spec.s, k, (omega.real, omega.imag))
                worst_identity = max(worst_identity, abs(closed + tail - target) / max(abs(target), 1e-300))
                if scale <= 1.0e4:
                    # quadrature only resolves densities without heavy cancellation
                    quad = herglotz.herglotz_quadrature(coeffs, y, k, x, M, check=False)
                    worst_quadrature = max(worst_quadrature, abs(closed - quad) / max(abs(closed), 1.0))
    ok = worst_identity <= 1.0e-9 and worst_quadrature <= 1.0e-9
    return SuiteResult("herglotz-identity", ok,
                       {"identity_rel_error": worst_identity, "quadrature_rel_error": worst_quadrature})


def suite_truncation(seed: int = 0, opts: SuiteOptions = SuiteOptions()) -> SuiteResult:
    sweep = herglotz.truncation_sweep(1, 0.5, 1.0, 2.0, range(10, 31, 2))
    ok = sweep.within_envelope and sweep.monotone and sweep.slope < 0.0
    return SuiteResult("truncation", ok, {
        "slope": sweep.slope, "predicted_slope": sweep.predicted_slope,
        "constant": sweep.constant, "within_envelope": sweep.within_envelope,
        "monotone": sweep.monotone,
        "within_bound": all(r.within_bound for r in sweep.reports),
    })


def suite_ml_asymptotics(seed: int = 0, opts: SuiteOptions = SuiteOptions()) -> SuiteResult:
    log_abs = {tau: vekua.ml_modified_log_abs(2, (1.0, 0.0), tau, 2.0) for tau in (8.0, 12.0)}
    growth = {tau: value / tau ** 2 for tau, value in log_abs.items()}
    leading = max(abs(value - vekua.asymptotic_inside(2, (1.0, 0.0), tau, 2.0, epsilon=opts.epsilon,
                                                       log_scale=True)) / tau ** 2
                  for tau, value in log_abs.items())
    d3 = abs(vekua.ml_modified(2, (-1.0, 0.0), 1.0e3, 2.0))
    d4 = abs(vekua.ml_modified(2, (-1.0, 0.0), 1.0e4, 2.0))
    tau = 1.0e5
    ratio = (vekua.ml_modified(2, (-1.0, 0.0), tau, 2.0)
             / vekua.asymptotic_outside(2, (-1.0, 0.0), tau, 2.0))
    ok = (all(0.95 <= g <= 1.05 for g in growth.values()) and leading < 0.05 and d4 < d3
          and 0.8 <= ratio.real <= 1.2 and abs(ratio.imag) <= 0.2)
    return SuiteResult("ml-asymptotics", ok, {
        "growth_tau8": growth[8.0], "growth_tau12": growth[12.0], "inside_gap": leading,
        "decay_1e3": d3, "decay_1e4": d4, "outside_ratio": [ratio.real, ratio.imag],
    })


REMAINDER_POINTS = ((-0.5, 0.2), (-0.3, -0.4), (0.1, 0.6), (-0.6, 0.0), (0.2, -0.5))


def suite_remainder(seed: int = 0, opts: SuiteOptions = SuiteOptions()) -> SuiteResult:
    cases: list[tuple[str, Callable, Callable, int]] = [
        ("exp", np.exp, np.exp, 1),
        ("E_1/2", lambda z: specfun.mittag_leffler(2, z), lambda z: specfun.mittag_leffler_deriv(2, z), 2),
    ]
    worst = 0.0
    failures = []
    for name, f, fp, n in cases:
        for tau in (10.0, 100.0):
            for x in REMAINDER_POINTS:
                report = vekua.remainder_check(f, fp, x, tau, 2.0, n_hint=n)
                worst = max(worst, *report.ratios)
                if not report.passed:
                    failures.append(f"{name} tau={tau} x={x}")
    return SuiteResult("remainder", not failures, {"max_ratio": worst, "failures": failures})


def reference_scene() -> Scene:
    return Scene(k=2.0, R=2.0, obstacles=[ObstacleCurve.disc(0.3, (0.5, 0.0))])


def suite_reciprocity(seed: int = 0, opts: SuiteOptions = SuiteOptions()) -> SuiteResult:
    F = forward.farfield_matrix(reference_scene(), 64)
    rec = forward.reciprocity_residual(F)
    opt = forward.optical_theorem_residual(F)
    uni = forward.unitarity_residual(F)
    ok = rec <= 1.0e-10 and opt <= 1.0e-10 and uni <= 1.0e-8
    return SuiteResult("reciprocity", ok, {"reciprocity": rec, "optical": opt, "unitarity": uni})


def suite_normalization(seed: int = 0, opts: SuiteOptions = SuiteOptions()) -> SuiteResult:
    specs = indicator.random_specs(50, seed, R=1.0, k=2.0, n_values=(1, 2, 3), N_values=range(4, 13))
    worst = max(indicator.normalization_check(s) for s in specs)
    return SuiteResult("normalization", worst <= 1.0e-12, {"max_residual": worst})


def suite_surrogate(seed: int = 0, opts: SuiteOptions = SuiteOptions()) -> SuiteResult:
    """|(F g, g)| against the H^{1/2} norm of Hg on the boundary over 20 probes."""
    scene = reference_scene()
    F = forward.farfield_matrix(scene, 96)
    specs = indicator.random_specs(20, seed, R=scene.R, k=scene.k, N_values=(4, 6))
    report = indicator.surrogate_check(F, scene, specs, bracket=opts.bracket)
    return SuiteResult("surrogate", report.passed, {
        "min_ratio": report.minimum, "max_ratio": report.maximum, "spread": report.spread,
        "bracket": report.bracket, "excluded": len(report.excluded),
    })


SUITES: dict[str, Callable[[int, SuiteOptions], SuiteResult]] = {
    "jhat-bound": suite_jhat_bound,
    "vekua-plane-wave": suite_vekua_plane_wave,
    "herglotz-identity": suite_herglotz_identity,
    "truncation": suite_truncation,
    "ml-asymptotics": suite_ml_asymptotics,
    "remainder": suite_remainder,
    "reciprocity": suite_reciprocity,
    "normalization": suite_normalization,
    "surrogate": suite_surrogate,
}


def run_suites(names: list[str] | None = None, seed: int = 0,
               opts: SuiteOptions | None = None) -> list[SuiteResult]:
    opts = opts or SuiteOptions()
    selected = names or list(SUITES)
    unknown = [name for name in selected if name not in SUITES]
    if unknown:
        raise InputError(f"unknown suite(s) {unknown}; available: {sorted(SUITES)}")
    results = []
    for name in selected:
        started = time.perf_counter()
        try:
            result = SUITES[name](seed, opts)
        except Exception as e:  # a crashing suite is a failed suite
            logger.exception("suite %s raised", name)
            result = SuiteResult(name, False, {"error": f"{type(e).__name__}: {e}"})
        result.seconds = time.perf_counter() - started
        logger.info("suite %s: %s", name, "pass" if result.passed else "FAIL")
        results.append(result)
    return results
