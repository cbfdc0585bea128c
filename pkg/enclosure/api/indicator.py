"""
Indicator function I = (F g, g) over truncation levels, its growth/decay verdict
and the visible-part scan.

Notes:
- A probe is (y, ω, n); each N gives s = s(N) and the explicit density g.
- Data sources: a far-field matrix (double trapezoid quadrature) or a known
  scene (the same pairing computed in field space through the MFS sources).
- Densities with large coefficients make (F g, g) a sum with heavy
  cancellation. Every value carries a rounding floor; values within ten times
  the floor are flagged unresolved and kept out of the slope fit.
- Only Decay certifies visibility. Growth and Indeterminate certify nothing.
"""

from __future__ import annotations

import cmath
import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Literal, Protocol, Sequence, Union

import numpy as np

from enclosure.api.errors import ConsistencyError, InputError, ResolutionError
from enclosure.api.forward import FarFieldMatrix, MFSOperator, far_constant, mfs_operator
from enclosure.api.herglotz import (
    Density,
    boundary_trace,
    density_coeffs,
    density_for,
    node_count,
    sobolev_half_norm,
)
from enclosure.api.models import ConeSpec, DensitySpec, PlanePoint, ScheduleParams, Scene
from enclosure.app.util import ordered_map

logger = logging.getLogger("enclosure.indicator")

Classification = Literal["Decay", "Growth", "Indeterminate"]
Verdict = Literal["Visible", "NotShownVisible"]

CLAMP = 1.0e-300
FLOOR_FACTOR = 10.0
PROVENANCE_EPS = {"analytic": 1.0e-13, "mfs": 1.0e-8}
SCENE_EPS = 1.0e-10
DEFAULT_DELTA = 0.05
MIN_FIT_POINTS = 4


# ---------- Single values ----------

def _check_k(k_data: float, k_spec: float) -> None:
    if abs(k_data - k_spec) > 1.0e-12 * max(k_data, k_spec):
        raise ConsistencyError(f"wave number mismatch: data k={k_data}, probe k={k_spec}")


def _density(spec: DensitySpec | Density) -> tuple[Density, DensitySpec | None]:
    if isinstance(spec, Density):
        return spec, spec.spec
    return density_for(spec), spec


def indicator_value(F: FarFieldMatrix, spec: DensitySpec | Density) -> complex:
    """(2π/M)² Σ_i conj(g_i) Σ_j F_ij g_j on the matrix nodes."""
    density, dspec = _density(spec)
    _check_k(F.k, density.k)
    if dspec is not None:
        need = node_count(dspec.n, dspec.N, dspec.k, dspec.schedule.R)
        if F.M < need:
            raise ResolutionError(f"matrix has M={F.M} nodes, the density needs M ≥ {need}; "
                                  "regenerate the far-field matrix with more nodes")
    g = density.on_nodes(F.M)
    w = 2.0 * math.pi / F.M
    return complex(w * w * np.vdot(g, F.entries @ g))


def indicator_noise_floor(F: FarFieldMatrix, spec: DensitySpec | Density) -> float:
    """ε_F (2π/M)² |g|ᵀ|F||g| with ε_F set by the matrix provenance (or its noise level)."""
    density, _ = _density(spec)
    eps = PROVENANCE_EPS.get(F.provenance, 1.0e-8)
    eps = max(eps, float(F.diagnostics.get("noise", 0.0)))
    g = np.abs(density.on_nodes(F.M))
    w = 2.0 * math.pi / F.M
    return float(eps * w * w * (g @ (np.abs(F.entries) @ g)))


def _scene_pairing(op: MFSOperator | None, density: Density) -> tuple[complex, float]:
    if op is None:
        return 0j, 0.0
    s = op.system
    grads = np.array([density.gradient(p) for p in s.collocation], dtype=complex)
    b = -(grads[:, 0] * s.normals.real + grads[:, 1] * s.normals.imag)
    coef = op.solve(b)
    hg = np.array([density.field(z) for z in s.sources], dtype=complex)
    terms = far_constant(s.k) * coef * np.conj(hg)
    return complex(np.sum(terms)), float(np.sum(np.abs(terms)))


def scene_indicator(scene: Scene, spec: DensitySpec | Density,
                    operator: MFSOperator | None = None) -> complex:
    """
    (F g, g) without a matrix: solve the sound-hard problem for the incident
    field Hg and pair its far field with g, γ_∞ Σ_l c_l conj(Hg(z_l)).
    """
    density, _ = _density(spec)
    _check_k(scene.k, density.k)
    if not scene.obstacles:
        return 0j
    op = operator or mfs_operator(scene.obstacles, scene.k)
    return _scene_pairing(op, density)[0]


class IndicatorData(Protocol):
    k: float

    def evaluate(self, spec: DensitySpec) -> tuple[complex, float]:
        ...


class MatrixData:
    def __init__(self, F: FarFieldMatrix):
        self.F = F
        self.k = F.k

    def evaluate(self, spec: DensitySpec) -> tuple[complex, float]:
        density = density_for(spec)
        return indicator_value(self.F, density), indicator_noise_floor(self.F, density)


class SceneData:
    """Scene-backed evaluator; the MFS factorization is built once and shared across threads."""

    def __init__(self, scene: Scene, sources: int | None = None):
        self.scene = scene
        self.k = scene.k
        self._sources = sources
        self._op: MFSOperator | None = None
        self._lock = threading.Lock()

    @property
    def operator(self) -> MFSOperator | None:
        if not self.scene.obstacles:
            return None
        with self._lock:
            if self._op is None:
                self._op = mfs_operator(self.scene.obstacles, self.scene.k, self._sources)
        return self._op

    def evaluate(self, spec: DensitySpec) -> tuple[complex, float]:
        _check_k(self.k, spec.k)
        value, size = _scene_pairing(self.operator, density_for(spec))
        return value, SCENE_EPS * size


Source = Union[FarFieldMatrix, Scene, MatrixData, SceneData]


def as_indicator_data(source: Source) -> IndicatorData:
    if isinstance(source, FarFieldMatrix):
        return MatrixData(source)
    if isinstance(source, Scene):
        return SceneData(source)
    return source


# ---------- Traces ----------

@dataclass
class IndicatorTrace:
    probe: ConeSpec
    N_values: list[int]
    s_values: list[float]
    values: list[complex]
    magnitudes: list[float]
    floors: list[float]
    unresolved: list[bool]
    clamped: list[bool]
    slope: float
    classification: Classification
    delta: float = DEFAULT_DELTA

    @property
    def usable(self) -> list[bool]:
        return [not (u or c) for u, c in zip(self.unresolved, self.clamped)]


def classify(N_values: Sequence[int], magnitudes: Sequence[float], usable: Sequence[bool],
             delta: float = DEFAULT_DELTA, all_zero: bool = False) -> tuple[float, Classification]:
    """
    Least-squares slope of log|I| against N over the upper half of the range,
    dead band ±δ. Fewer than MIN_FIT_POINTS usable values give (NaN, Indeterminate).
    """
    if all_zero:
        return -math.inf, "Decay"
    half = len(N_values) // 2
    xs = [N for N, ok in zip(N_values[half:], usable[half:]) if ok]
    ys = [math.log(m) for m, ok in zip(magnitudes[half:], usable[half:]) if ok]
    if len(xs) < MIN_FIT_POINTS:
        return math.nan, "Indeterminate"
    slope = float(np.polyfit(np.array(xs, dtype=float), np.array(ys), 1)[0])
    if slope < -delta:
        return slope, "Decay"
    if slope > delta:
        return slope, "Growth"
    return slope, "Indeterminate"


def indicator_trace(source: Source, probe: ConeSpec, gamma: float, R: float, k: float,
                    N_values: Sequence[int], delta: float = DEFAULT_DELTA) -> IndicatorTrace:
    Ns = [int(N) for N in N_values]
    if len(Ns) < 5:
        raise InputError(f"an indicator trace needs at least 5 truncation levels, got {len(Ns)}")
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise InputError("truncation levels must be strictly increasing")
    data = as_indicator_data(source)
    _check_k(data.k, k)
    schedule = ScheduleParams(gamma=gamma, R=R, n=probe.n)
    values, mags, floors, unresolved, clamped, s_values = [], [], [], [], [], []
    for N in Ns:
        spec = DensitySpec(probe=probe, N=N, schedule=schedule, k=k)
        value, floor = data.evaluate(spec)
        mag = abs(value)
        values.append(value)
        s_values.append(spec.s)
        floors.append(floor)
        clamped.append(mag < CLAMP)
        mags.append(max(mag, CLAMP))
        unresolved.append(mag >= CLAMP and mag < FLOOR_FACTOR * floor)
    if any(clamped):
        logger.debug("probe y=%s ω=%s: %d values clamped at %g", probe.y.z, probe.omega_c, sum(clamped), CLAMP)
    if any(unresolved):
        logger.info("probe y=%s ω=%s n=%d: %d values at the rounding floor",
                    probe.y.z, probe.omega_c, probe.n, sum(unresolved))
    usable = [not (u or c) for u, c in zip(unresolved, clamped)]
    slope, verdict = classify(Ns, mags, usable, delta, all_zero=all(v == 0 for v in values))
    return IndicatorTrace(probe, Ns, s_values, values, mags, floors, unresolved, clamped,
                          slope, verdict, delta)


# ---------- Checks ----------

def normalization_check(spec: DensitySpec, M: int | None = None) -> float:
    """
    |(Φ_y, g)_{L²} − 1| for the M-node trapezoid rule, Φ_y(φ) = e^{−iky·φ}.

    The plane-wave factors cancel node by node, so the rule sums conj(Σβ_m φ^m)
    exactly: 2π·conj(Σ_{m ≡ 0 mod M} β_m). Undersampled rules pick up aliased
    coefficients.
    """
    M = M or node_count(spec.n, spec.N, spec.k, spec.schedule.R)
    if M < 1:
        raise InputError("node count must be positive")
    beta = density_coeffs(spec).beta
    aliased = beta[::M]
    value = 2.0 * math.pi * complex(math.fsum(aliased.real), -math.fsum(aliased.imag))
    return float(abs(value - 1.0))


@dataclass
class SurrogateReport:
    ratios: list[float]
    excluded: list[int]
    bracket: float
    notes: list[str] = field(default_factory=list)

    @property
    def minimum(self) -> float:
        return min(self.ratios) if self.ratios else math.nan

    @property
    def maximum(self) -> float:
        return max(self.ratios) if self.ratios else math.nan

    @property
    def spread(self) -> float:
        if not self.ratios or self.minimum <= 0:
            return math.inf
        return self.maximum / self.minimum

    @property
    def passed(self) -> bool:
        return bool(self.ratios) and self.spread <= self.bracket


def surrogate_check(source: Source, scene: Scene, specs: Sequence[DensitySpec | Density],
                    samples: int = 256, bracket: float = 1.0e4) -> SurrogateReport:
    """|(F g, g)| / ‖Hg|∂D‖²_{H^{1/2}} over a density family; bounded above and below on a fixed obstacle."""
    if len(scene.obstacles) != 1:
        raise InputError("the surrogate check needs a scene with exactly one obstacle")
    curve = scene.obstacles[0]
    data = as_indicator_data(source)
    report = SurrogateReport([], [], bracket)
    for idx, item in enumerate(specs):
        density, dspec = _density(item)
        if not np.any(density.coeffs.beta):
            report.excluded.append(idx)
            report.notes.append(f"probe {idx}: zero density")
            continue
        trace = boundary_trace(density, curve, samples)
        norm = sobolev_half_norm(trace)
        if norm <= 1.0e-14:
            report.excluded.append(idx)
            report.notes.append(f"probe {idx}: trace norm {norm:.2e} too small")
            continue
        if isinstance(data, MatrixData):
            value = indicator_value(data.F, density)
        else:
            _check_k(data.k, density.k)
            value = _scene_pairing(data.operator, density)[0]
        report.ratios.append(abs(value) / norm)
    return report


def random_specs(count: int, seed: int, R: float, k: float, n_values: Sequence[int] = (1,),
                 N_values: Sequence[int] = (4, 6, 8), gamma: float = 0.5,
                 radius: float | None = None) -> list[DensitySpec]:
    """Seeded probe family with apexes in |y| ≤ radius (default R/2)."""
    rng = np.random.default_rng(seed)
    radius = 0.5 * R if radius is None else radius
    out = []
    for _ in range(count):
        r = radius * math.sqrt(rng.uniform())
        y = r * cmath.exp(2j * math.pi * rng.uniform())
        omega = cmath.exp(2j * math.pi * rng.uniform())
        n = int(rng.choice(n_values))
        N = int(rng.choice(N_values))
        out.append(DensitySpec.build(y, omega, n, N, gamma, R, k))
    return out


# ---------- Visible-part scan ----------

@dataclass
class MapCell:
    point: complex
    verdict: Verdict
    witness_omega: complex | None = None
    witness_n: int | None = None


@dataclass
class VisibilityMap:
    cells: list[MapCell]
    nx: int
    ny: int

    @property
    def visible(self) -> np.ndarray:
        return np.array([c.verdict == "Visible" for c in self.cells]).reshape(self.ny, self.nx)


def grid_points(grid: Sequence[float]) -> list[complex]:
    x0, x1, y0, y1, nx, ny = grid
    nx, ny = int(nx), int(ny)
    xs = np.linspace(x0, x1, nx) if nx > 1 else np.array([x0])
    ys = np.linspace(y0, y1, ny) if ny > 1 else np.array([y0])
    return [complex(x, y) for y in ys for x in xs]


def visible_scan(source: Source, R: float, k: float, grid: Sequence[float], omega_count: int = 16,
                 n_list: Sequence[int] = (1, 2), gamma: float = 0.5,
                 N_values: Sequence[int] = tuple(range(8, 25)), delta: float = DEFAULT_DELTA,
                 threads: int = 1, progress: bool = False) -> VisibilityMap:
    """First Decay over (ω, n) marks a point Visible and records the witness."""
    points = grid_points(grid)
    if any(abs(p) >= R for p in points):
        raise InputError(f"grid must lie inside B_R (R = {R})")
    data = as_indicator_data(source)
    _check_k(data.k, k)
    if isinstance(data, SceneData):
        data.operator  # factorize once before the workers start
    omegas = [cmath.exp(2j * math.pi * i / omega_count) for i in range(omega_count)]
    done = [0]
    lock = threading.Lock()

    def probe_point(p: complex) -> MapCell:
        cell = MapCell(p, "NotShownVisible")
        for w in omegas:
            for n in n_list:
                cone = ConeSpec(y=PlanePoint(x1=p.real, x2=p.imag), omega=PlanePoint(x1=w.real, x2=w.imag), n=n)
                trace = indicator_trace(data, cone, gamma, R, k, N_values, delta)
                if trace.classification == "Decay":
                    cell = MapCell(p, "Visible", w, n)
                    break
            if cell.verdict == "Visible":
                break
        if progress:
            with lock:
                done[0] += 1
                if done[0] % max(1, len(points) // 10) == 0 or done[0] == len(points):
                    logger.info("scan progress %d/%d", done[0], len(points))
        return cell

    cells = ordered_map(probe_point, points, threads)
    _, _, _, _, nx, ny = grid
    return VisibilityMap(cells, int(nx), int(ny))
