"""
Far-field data for sound-hard obstacles.

Notes:
- Convention: scattered field w ∼ e^{ikr}F(x̂)/√r. The disc series is the
  executable definition; the MFS point-source far field γ_∞e^{−ikx̂·z} uses the
  same normalization.
- MFS: sources on each boundary parametrization continued to t + iη (a disc
  contracts by e^{−η} about its centre), collocation at twice the source
  count, one truncated-SVD pseudo-inverse shared by every incident
  direction. Several obstacles form one coupled system.
- Columns are solved in fixed-size chunks so results do not depend on the
  thread count.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Literal, Sequence

import numpy as np
from scipy import linalg, special

from enclosure.api.errors import (
    DomainError,
    GeometryError,
    InputError,
    MFSAccuracyError,
    RangeError,
)
from enclosure.api.models import ObstacleCurve, Scene, as_complex, polygon_self_intersects, unit_direction
from enclosure.api.specfun import bessel_h1p, bessel_jp
from enclosure.app.util import chunked, ordered_map

logger = logging.getLogger("enclosure.forward")

Provenance = Literal["analytic", "mfs"]
Method = Literal["auto", "analytic", "mfs"]

DISC_MAX_KA = 30.0
MFS_SHIFTS = (math.log(1.0 / 0.7), 0.25, 0.18, 0.12, 0.08)
MFS_GROWTH = (1, 2, 4)
MFS_MAX_SOURCES = 512
SOURCE_TEST_SAMPLES = 512
MFS_RCOND = 1.0e-12
MFS_TOL = 1.0e-6
COLUMN_CHUNK = 16
EIGEN_THRESHOLD = 1.0e-2
EIGEN_ORDERS = 20
EIGEN_ZEROS = 20


def far_constant(k: float) -> complex:
    # far field of (i/4)H_0^(1)(k|x − z|) is γ_∞ e^{−ikx̂·z}
    return 0.25j * math.sqrt(2.0 / (math.pi * k)) * cmath.exp(-0.25j * math.pi)


@dataclass
class FarFieldMatrix:
    """F[i][j] = F_D(φ_i; φ_j, k) with φ_j = 2πj/M."""
    entries: np.ndarray
    k: float
    provenance: Provenance = "analytic"
    diagnostics: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise InputError("far-field matrix must be square")
        if self.M < 16:
            raise InputError(f"far-field matrix needs M ≥ 16, got {self.M}")

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.M) / self.M

    @property
    def nodes(self) -> np.ndarray:
        return np.exp(1j * self.angles)


# ---------- Analytic disc ----------

def _disc_modes(a: float, k: float) -> np.ndarray:
    ka = k * a
    if not 0 < ka <= DISC_MAX_KA:
        raise RangeError(f"ka = {ka:.4g} outside the disc series envelope (0, {DISC_MAX_KA}]")
    m_max = int(math.ceil(ka + 10.0 * ka ** (1.0 / 3.0) + 20.0))
    return np.array([bessel_jp(m, ka) / bessel_h1p(m, ka) for m in range(m_max + 1)], dtype=complex)


def _disc_pattern(a: float, center: complex, k: float, obs: np.ndarray, inc: np.ndarray) -> np.ndarray:
    q = _disc_modes(a, k)
    delta = np.angle(obs)[:, None] - np.angle(inc)[None, :]
    m = np.arange(1, len(q))
    series = q[0] + 2.0 * np.tensordot(np.cos(delta[..., None] * m), q[1:], axes=([-1], [0]))
    base = -math.sqrt(2.0 / (math.pi * k)) * cmath.exp(-0.25j * math.pi) * series
    shift = np.exp(1j * k * (np.conj(center) * (inc[None, :] - obs[:, None])).real)
    return base * shift


def disc_farfield(a: float, center: Any, obs: Any, inc: Any, k: float) -> complex:
    if k <= 0 or a <= 0:
        raise DomainError("disc far field needs k > 0 and a > 0")
    o = np.array([unit_direction(obs)])
    d = np.array([unit_direction(inc)])
    return complex(_disc_pattern(a, as_complex(center), k, o, d)[0, 0])


# ---------- Method of fundamental solutions ----------

def default_sources(curve: ObstacleCurve, k: float) -> int:
    return max(64, int(math.ceil(2.0 * k * curve.length())) + 32)


def source_shifts(curve: ObstacleCurve) -> list[float]:
    """Entries of MFS_SHIFTS whose continued source curve is simple and inside the obstacle, largest first."""
    t = np.linspace(0.0, 2.0 * np.pi, SOURCE_TEST_SAMPLES, endpoint=False)
    out = []
    for shift in MFS_SHIFTS:
        z = curve.continued(t, shift)
        if np.all(curve.contains(z)) and not polygon_self_intersects(z):
            out.append(shift)
    return out


@dataclass
class MFSSystem:
    sources: np.ndarray          # source points (complex)
    collocation: np.ndarray      # boundary points
    normals: np.ndarray
    check_points: np.ndarray     # parameter midpoints
    check_normals: np.ndarray
    k: float
    shifts: tuple[float, ...]

    def neumann_matrix(self, pts: np.ndarray, nrm: np.ndarray) -> np.ndarray:
        diff = pts[:, None] - self.sources[None, :]
        rho = np.abs(diff)
        proj = (np.conj(nrm)[:, None] * diff).real
        return -0.25j * self.k * special.hankel1(1, self.k * rho) * proj / rho

    def rhs(self, pts: np.ndarray, nrm: np.ndarray, inc: np.ndarray) -> np.ndarray:
        # −∂_ν e^{ikx·d}
        phase = np.exp(1j * self.k * (np.conj(pts)[:, None] * inc[None, :]).real)
        nd = (np.conj(nrm)[:, None] * inc[None, :]).real
        return -1j * self.k * nd * phase


def _mfs_system(curves: Sequence[ObstacleCurve], k: float, shifts: Sequence[float],
                counts: Sequence[int]) -> MFSSystem:
    src, col, nrm, chk, chk_n = [], [], [], [], []
    for curve, shift, ns in zip(curves, shifts, counts):
        t_src = np.linspace(0.0, 2.0 * np.pi, ns, endpoint=False)
        t_col = np.linspace(0.0, 2.0 * np.pi, 2 * ns, endpoint=False)
        t_chk = t_col + np.pi / (2 * ns)
        src.append(curve.continued(t_src, shift))
        col.append(curve.points(t_col))
        nrm.append(curve.normal(t_col))
        chk.append(curve.points(t_chk))
        chk_n.append(curve.normal(t_chk))
    return MFSSystem(np.concatenate(src), np.concatenate(col), np.concatenate(nrm),
                     np.concatenate(chk), np.concatenate(chk_n), k, tuple(shifts))


@dataclass
class MFSSolution:
    farfield: np.ndarray         # (observation, incident)
    residual: float
    rank: int
    sources: int
    shifts: tuple[float, ...]


@dataclass
class MFSOperator:
    """Truncated SVD of the collocation matrix; solves any Neumann data on the same boundary."""
    system: MFSSystem
    U: np.ndarray
    sigma: np.ndarray
    Vh: np.ndarray
    check: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.sigma)

    @property
    def sources(self) -> int:
        return self.Vh.shape[1]

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=complex)
        flat = b.ndim == 1
        coef = self.Vh.conj().T @ ((self.U.conj().T @ b.reshape(len(b), -1)) / self.sigma[:, None])
        return coef[:, 0] if flat else coef

    def residual(self, coef: np.ndarray, b_check: np.ndarray) -> float:
        b_check = np.asarray(b_check, dtype=complex)
        scale = max(float(np.max(np.abs(b_check))), 1e-300)
        return float(np.max(np.abs(self.check @ coef - b_check))) / scale

    def farfield(self, obs: np.ndarray, coef: np.ndarray) -> np.ndarray:
        kernel = np.exp(-1j * self.system.k * (np.conj(obs)[:, None] * self.system.sources[None, :]).real)
        return far_constant(self.system.k) * (kernel @ coef)

    def plane_wave_residual(self, inc: np.ndarray) -> float:
        s = self.system
        coef = self.solve(s.rhs(s.collocation, s.normals, inc))
        return self.residual(coef, s.rhs(s.check_points, s.check_normals, inc))


def _truncated_svd(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    U, sigma, Vh = linalg.svd(A, full_matrices=False, lapack_driver="gesdd")
    keep = sigma > MFS_RCOND * sigma[0]
    return U[:, keep], sigma[keep], Vh[keep]


def _operator(system: MFSSystem) -> MFSOperator:
    A = system.neumann_matrix(system.collocation, system.normals)
    U, sigma, Vh = _truncated_svd(A)
    if len(sigma) < A.shape[1]:
        logger.debug("MFS system rank %d of %d sources", len(sigma), A.shape[1])
    return MFSOperator(system, U, sigma, Vh, system.neumann_matrix(system.check_points, system.check_normals))


def mfs_operator(curves: ObstacleCurve | Sequence[ObstacleCurve], k: float,
                 sources: int | None = None) -> MFSOperator:
    """
    Factorize the sound-hard MFS system.

    Sources sit on each boundary's parametrization continued to t + iη. Every
    obstacle walks down its own admissible shifts η; without an explicit
    source count the counts are doubled (up to MFS_MAX_SOURCES) when no shift
    reaches MFS_TOL on eight plane-wave directions.
    """
    if k <= 0:
        raise DomainError("MFS needs a positive wave number")
    if isinstance(curves, ObstacleCurve):
        curves = [curves]
    admissible = [source_shifts(curve) for curve in curves]
    for i, shifts in enumerate(admissible):
        if not shifts:
            raise GeometryError(f"obstacle {i}: no admissible MFS source curve inside the boundary")
    base = [sources or default_sources(curve, k) for curve in curves]
    growth = (1,) if sources else MFS_GROWTH
    probe = np.exp(2j * np.pi * np.arange(8) / 8)
    levels = max(len(s) for s in admissible)
    best: tuple[float, MFSOperator] | None = None
    tried: set[tuple[int, ...]] = set()
    for g in growth:
        counts = tuple(max(b, min(g * b, MFS_MAX_SOURCES)) for b in base)
        if counts in tried:
            continue
        tried.add(counts)
        for level in range(levels):
            shifts = [s[min(level, len(s) - 1)] for s in admissible]
            op = _operator(_mfs_system(curves, k, shifts, counts))
            res = op.plane_wave_residual(probe)
            logger.info("MFS shifts %s, %d sources: residual %.3e, rank %d",
                        ", ".join(f"{s:.3f}" for s in shifts), op.sources, res, op.rank)
            if best is None or res < best[0]:
                best = (res, op)
            if res <= MFS_TOL:
                return op
    raise MFSAccuracyError(f"MFS boundary residual {best[0]:.3e} above {MFS_TOL}",
                           residual=best[0], rank=best[1].rank, sources=best[1].sources)


def mfs_solve(curves: ObstacleCurve | Sequence[ObstacleCurve], k: float, incident: Sequence[Any],
              observation: Sequence[Any] | None = None, sources: int | None = None,
              threads: int = 1) -> MFSSolution:
    """Far-field samples F(x̂; d) for every incident d; several curves are solved as one scatterer."""
    op = mfs_operator(curves, k, sources)
    s = op.system
    inc = np.array([unit_direction(d) for d in incident], dtype=complex)
    obs = inc if observation is None else np.array([unit_direction(d) for d in observation], dtype=complex)

    def solve_chunk(cols: np.ndarray) -> tuple[np.ndarray, float]:
        coef = op.solve(s.rhs(s.collocation, s.normals, inc[cols]))
        res = op.residual(coef, s.rhs(s.check_points, s.check_normals, inc[cols]))
        return op.farfield(obs, coef), res

    results = ordered_map(solve_chunk, chunked(np.arange(len(inc)), COLUMN_CHUNK), threads)
    F = np.concatenate([r[0] for r in results], axis=1) if results else np.zeros((len(obs), 0), complex)
    residual = max((r[1] for r in results), default=0.0)
    if residual > MFS_TOL:
        raise MFSAccuracyError(f"MFS boundary residual {residual:.3e} above {MFS_TOL}",
                               residual=residual, rank=op.rank, sources=op.sources)
    return MFSSolution(F, residual, op.rank, op.sources, s.shifts)


# ---------- Far-field matrix ----------

def _is_disc(curve: ObstacleCurve) -> bool:
    return curve.kind == "disc" and curve.params is not None


def farfield_matrix(scene: Scene, M: int, method: Method = "auto", threads: int = 1,
                    sources: int | None = None) -> FarFieldMatrix:
    if M < 16 or M % 2:
        raise InputError(f"M must be even and at least 16, got {M}")
    wanted = max(2 * int(math.ceil(math.e * scene.k * scene.R)), 64)
    if M < wanted:
        logger.warning("M=%d below %d; the matrix will under-resolve densities for this k·R", M, wanted)
    nodes = np.exp(2j * np.pi * np.arange(M) / M)
    if not scene.obstacles:
        return FarFieldMatrix(np.zeros((M, M), complex), scene.k, "analytic")
    single_disc = len(scene.obstacles) == 1 and _is_disc(scene.obstacles[0])
    if method == "analytic" and not single_disc:
        raise InputError("analytic far field is available for a single disc only")
    guard = neumann_eigen_guard(scene)
    if guard.flagged:
        logger.warning("k² is within %.2e of a Neumann eigenvalue (ka=%.4f near j'_{%d,%d}=%.4f)",
                       guard.distance, guard.ka, guard.order, guard.index, guard.zero)
    if single_disc and method in ("auto", "analytic"):
        curve = scene.obstacles[0]
        F = _disc_pattern(curve.equivalent_radius(), as_complex(curve.params.get("center", (0.0, 0.0))),
                          scene.k, nodes, nodes)
        return FarFieldMatrix(F, scene.k, "analytic", {"eigen_distance": guard.distance})
    sol = mfs_solve(scene.obstacles, scene.k, list(nodes), sources=sources, threads=threads)
    return FarFieldMatrix(sol.farfield, scene.k, "mfs",
                          {"residual": sol.residual, "rank": sol.rank, "sources": sol.sources,
                           "shifts": list(sol.shifts), "eigen_distance": guard.distance})


# ---------- Neumann eigenvalue guard ----------

@lru_cache(maxsize=1)
def neumann_zeros() -> tuple[tuple[int, int, float], ...]:
    """(m, l, j'_{m,l}) for m ≤ 20 and the first 20 positive zeros of J_m′."""
    table = []
    for m in range(EIGEN_ORDERS + 1):
        positive = [float(z) for z in special.jnp_zeros(m, EIGEN_ZEROS + 1) if z > 1.0e-12]
        for l, z in enumerate(positive[:EIGEN_ZEROS], start=1):
            table.append((m, l, z))
    return tuple(sorted(table, key=lambda row: row[2]))


@dataclass
class EigenGuardReport:
    ka: float
    distance: float
    order: int
    index: int
    zero: float
    heuristic: bool
    threshold: float = EIGEN_THRESHOLD

    @property
    def flagged(self) -> bool:
        return self.distance < self.threshold


def _nearest_zero(ka: float) -> tuple[float, int, int, float]:
    best = (math.inf, -1, -1, math.nan)
    for m, l, z in neumann_zeros():
        d = abs(ka - z)
        if d < best[0]:
            best = (d, m, l, z)
    return best


def neumann_eigen_guard(scene: Scene, threshold: float = EIGEN_THRESHOLD) -> EigenGuardReport:
    """Distance from k·a to the disc Neumann zeros; non-disc obstacles use the equal-area radius."""
    worst: EigenGuardReport | None = None
    for curve in scene.obstacles:
        ka = scene.k * curve.equivalent_radius()
        d, m, l, z = _nearest_zero(ka)
        report = EigenGuardReport(ka, d, m, l, z, heuristic=not _is_disc(curve), threshold=threshold)
        if worst is None or report.distance < worst.distance:
            worst = report
    if worst is None:
        return EigenGuardReport(0.0, math.inf, -1, -1, math.nan, heuristic=False, threshold=threshold)
    return worst


# ---------- Consistency residuals ----------

def reciprocity_residual(F: FarFieldMatrix) -> float:
    """max |F(φ_i; φ_j) − F(−φ_j; −φ_i)| relative to max |F|."""
    if F.M % 2:
        raise InputError("reciprocity needs an even node count")
    E = F.entries
    idx = (np.arange(F.M) + F.M // 2) % F.M
    mirrored = E[np.ix_(idx, idx)].T
    scale = max(float(np.max(np.abs(E))), 1e-300)
    return float(np.max(np.abs(E - mirrored))) / scale


def optical_theorem_residual(F: FarFieldMatrix) -> float:
    """max_j |∫|F(·; d_j)|² + √(8π/k)Re(e^{iπ/4}F(d_j; d_j))|, relative."""
    E = F.entries
    energy = (2.0 * np.pi / F.M) * np.sum(np.abs(E) ** 2, axis=0)
    forward = math.sqrt(8.0 * math.pi / F.k) * (cmath.exp(0.25j * math.pi) * np.diag(E)).real
    scale = max(float(np.max(energy)), 1e-300)
    return float(np.max(np.abs(energy + forward))) / scale


def unitarity_residual(F: FarFieldMatrix) -> float:
    """‖S*S − I‖₂ with S = I + e^{iπ/4}√(k/2π)(2π/M)F."""
    c = cmath.exp(0.25j * math.pi) * math.sqrt(F.k / (2.0 * math.pi))
    S = np.eye(F.M) + c * (2.0 * np.pi / F.M) * F.entries
    return float(np.linalg.norm(S.conj().T @ S - np.eye(F.M), 2))


def add_noise(F: FarFieldMatrix, level: float, seed: int | None = None) -> FarFieldMatrix:
    """Complex Gaussian perturbation with standard deviation level·max|F| per entry."""
    if level < 0:
        raise InputError("noise level must be nonnegative")
    if level == 0:
        return F
    rng = np.random.default_rng(seed)
    scale = level * float(np.max(np.abs(F.entries))) / math.sqrt(2.0)
    noise = scale * (rng.standard_normal(F.entries.shape) + 1j * rng.standard_normal(F.entries.shape))
    diagnostics = dict(F.diagnostics, noise=level, seed=seed)
    return replace(F, entries=F.entries + noise, diagnostics=diagnostics)
