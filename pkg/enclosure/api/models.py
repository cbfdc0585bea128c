"""
Pydantic models for the enclosure toolkit.

Notes:
- Points and directions accept `[x1, x2]` lists in JSON and expose a complex view
  (x1 + i x2) for the numerics.
- ObstacleCurve is built either from `params` (disc, ellipse, kite) or from raw
  `fourier_coeffs`; both forms serialize back to the same JSON shape.
- Run configs mirror the CLI subcommands; paths are resolved before any work.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from enclosure.api.errors import GeometryError
from enclosure.api.specfun import gamma0_root, s_schedule

SIMPLICITY_SAMPLES = 512
MIN_GAP_FRACTION = 1.0e-3
MAX_TERMS = 4000


# ---------- Geometry primitives ----------

class PlanePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    x1: float
    x2: float

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)) and len(data) == 2:
            return {"x1": data[0], "x2": data[1]}
        if isinstance(data, complex):
            return {"x1": data.real, "x2": data.imag}
        return data

    @field_validator("x1", "x2")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("coordinates must be finite")
        return value

    @property
    def z(self) -> complex:
        return complex(self.x1, self.x2)

    @property
    def r(self) -> float:
        return math.hypot(self.x1, self.x2)

    @property
    def theta(self) -> float:
        return math.atan2(self.x2, self.x1)

    def as_list(self) -> list[float]:
        return [self.x1, self.x2]


def as_complex(x: Any) -> complex:
    """PlanePoint, complex, or (x1, x2) sequence to x1 + i x2."""
    if isinstance(x, PlanePoint):
        return x.z
    if isinstance(x, (complex, float, int)):
        return complex(x)
    x1, x2 = x
    return complex(float(x1), float(x2))


def unit_direction(value: Any) -> complex:
    w = as_complex(value)
    norm = abs(w)
    if norm == 0 or abs(norm - 1.0) > 1.0e-8:
        raise ValueError(f"direction must be a unit vector, |ω| = {norm}")
    return w / norm


class ConeSpec(BaseModel):
    """Apex y, axis ω (unit) and order n; half-aperture π/(2n)."""
    model_config = ConfigDict(frozen=True)

    y: PlanePoint
    omega: PlanePoint
    n: int = Field(ge=1)

    @field_validator("omega")
    @classmethod
    def _unit(cls, value: PlanePoint) -> PlanePoint:
        w = unit_direction(value)
        return PlanePoint(x1=w.real, x2=w.imag)

    @classmethod
    def from_angle(cls, y: Any, angle: float, n: int) -> "ConeSpec":
        return cls(y=PlanePoint.model_validate(y),
                   omega=PlanePoint(x1=math.cos(angle), x2=math.sin(angle)), n=n)

    @property
    def omega_c(self) -> complex:
        return self.omega.z


class ScheduleParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: float
    R: float = Field(gt=0)
    n: int = Field(ge=1)

    @field_validator("gamma")
    @classmethod
    def _below_root(cls, value: float) -> float:
        if not 0 < value < gamma0_root():
            raise ValueError(f"gamma must lie in (0, {gamma0_root():.6f}), got {value}")
        return value


class DensitySpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    probe: ConeSpec
    N: int = Field(ge=1)
    schedule: ScheduleParams
    k: float = Field(gt=0)

    @model_validator(mode="after")
    def _consistent(self) -> "DensitySpec":
        if self.schedule.n != self.probe.n:
            raise ValueError("schedule order n must match the probe order n")
        if self.probe.n * self.N > MAX_TERMS:
            raise ValueError(f"nN = {self.probe.n * self.N} exceeds {MAX_TERMS}")
        return self

    @property
    def n(self) -> int:
        return self.probe.n

    @property
    def s(self) -> float:
        return s_schedule(self.schedule, self.N)

    @property
    def tau(self) -> float:
        return 0.5 * self.s

    @property
    def degree(self) -> int:
        return self.probe.n * self.N

    @classmethod
    def build(cls, y: Any, omega: Any, n: int, N: int, gamma: float, R: float, k: float) -> "DensitySpec":
        w = unit_direction(omega)
        probe = ConeSpec(y=PlanePoint.model_validate(as_complex(y)), omega=PlanePoint(x1=w.real, x2=w.imag), n=n)
        return cls(probe=probe, N=N, schedule=ScheduleParams(gamma=gamma, R=R, n=n), k=k)


# ---------- Obstacles ----------

CurveKind = Literal["disc", "ellipse", "kite", "custom"]


def _rotate_shift(cx: list[float], sx: list[float], cy: list[float], sy: list[float],
                  angle: float, center: tuple[float, float]) -> dict[str, list[float]]:
    ca, sa = math.cos(angle), math.sin(angle)
    size = max(len(cx), len(cy))
    pad = lambda v: list(v) + [0.0] * (size - len(v))
    cx, sx, cy, sy = pad(cx), pad(sx), pad(cy), pad(sy)
    out_cx = [ca * a - sa * b for a, b in zip(cx, cy)]
    out_sx = [ca * a - sa * b for a, b in zip(sx, sy)]
    out_cy = [sa * a + ca * b for a, b in zip(cx, cy)]
    out_sy = [sa * a + ca * b for a, b in zip(sx, sy)]
    out_cx[0] += center[0]
    out_cy[0] += center[1]
    return {"x_cos": out_cx, "x_sin": out_sx, "y_cos": out_cy, "y_sin": out_sy}


class FourierCoeffs(BaseModel):
    """x1(t) = Σ_j x_cos[j] cos jt + x_sin[j] sin jt, same for x2; x_sin[0] is ignored."""
    x_cos: list[float]
    x_sin: list[float]
    y_cos: list[float]
    y_sin: list[float]


class ObstacleCurve(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: CurveKind = "custom"
    params: Optional[dict[str, Any]] = None
    fourier_coeffs: FourierCoeffs

    @model_validator(mode="before")
    @classmethod
    def _expand_params(cls, data: Any) -> Any:
        if not isinstance(data, dict) or data.get("fourier_coeffs") is not None:
            return data
        kind = data.get("kind", "custom")
        params = dict(data.get("params") or {})
        center = tuple(params.get("center", (0.0, 0.0)))
        angle = float(params.get("rotation", 0.0))
        if kind == "disc":
            a = float(params["radius"])
            coeffs = _rotate_shift([0.0, a], [0.0, 0.0], [0.0, 0.0], [0.0, a], 0.0, center)
        elif kind == "ellipse":
            a, b = float(params["a"]), float(params["b"])
            coeffs = _rotate_shift([0.0, a], [0.0, 0.0], [0.0, 0.0], [0.0, b], angle, center)
        elif kind == "kite":
            sc = float(params.get("scale", 1.0))
            coeffs = _rotate_shift([-0.65 * sc, sc, 0.65 * sc], [0.0, 0.0, 0.0],
                                   [0.0, 0.0, 0.0], [0.0, 1.5 * sc, 0.0], angle, center)
        else:
            raise ValueError(f"kind {kind!r} needs fourier_coeffs")
        return {**data, "fourier_coeffs": coeffs}

    @model_validator(mode="after")
    def _check_shape(self) -> "ObstacleCurve":
        t = np.linspace(0.0, 2.0 * np.pi, SIMPLICITY_SAMPLES, endpoint=False)
        speed = np.abs(self.derivative(t))
        scale = float(np.max(np.abs(self.points(t) - self.points(t).mean())))
        if speed.min() <= 1.0e-9 * max(scale, 1.0e-300):
            raise GeometryError("curve has a degenerate (zero-speed) point")
        if self.area() <= 0:
            raise GeometryError("curve must be positively oriented with positive area")
        if polygon_self_intersects(self.points(t)):
            raise GeometryError("curve self-intersects")
        if self.kind == "disc" and self.params is not None and float(self.params["radius"]) <= 0:
            raise GeometryError("disc radius must be positive")
        return self

    # factories

    @classmethod
    def disc(cls, radius: float, center: Any = (0.0, 0.0)) -> "ObstacleCurve":
        c = as_complex(center)
        return cls.model_validate({"kind": "disc", "params": {"radius": radius, "center": [c.real, c.imag]}})

    @classmethod
    def ellipse(cls, a: float, b: float, center: Any = (0.0, 0.0), rotation: float = 0.0) -> "ObstacleCurve":
        c = as_complex(center)
        return cls.model_validate({"kind": "ellipse",
                                   "params": {"a": a, "b": b, "center": [c.real, c.imag], "rotation": rotation}})

    @classmethod
    def from_fourier(cls, x_cos: Sequence[float], x_sin: Sequence[float],
                     y_cos: Sequence[float], y_sin: Sequence[float]) -> "ObstacleCurve":
        return cls(kind="custom", fourier_coeffs=FourierCoeffs(
            x_cos=list(x_cos), x_sin=list(x_sin), y_cos=list(y_cos), y_sin=list(y_sin)))

    @classmethod
    def kite(cls, scale: float = 1.0, center: Any = (0.0, 0.0), rotation: float = 0.0) -> "ObstacleCurve":
        c = as_complex(center)
        return cls.model_validate({"kind": "kite",
                                   "params": {"scale": scale, "center": [c.real, c.imag], "rotation": rotation}})

    # evaluation (complex x1 + i x2)

    def _series(self, t: np.ndarray, order: int) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        fc = self.fourier_coeffs
        out = np.zeros(t.shape, dtype=complex)
        for coords, unit in (((fc.x_cos, fc.x_sin), 1.0), ((fc.y_cos, fc.y_sin), 1.0j)):
            cos_c, sin_c = coords
            for j in range(max(len(cos_c), len(sin_c))):
                a = cos_c[j] if j < len(cos_c) else 0.0
                b = sin_c[j] if (j < len(sin_c) and j > 0) else 0.0
                if j == 0:
                    if order == 0:
                        out += unit * a
                    continue
                # d^p/dt^p of (a cos jt + b sin jt)
                phase = order * math.pi / 2
                out += unit * (j ** order) * (a * np.cos(j * t + phase) + b * np.sin(j * t + phase))
        return out

    def points(self, t) -> np.ndarray:
        return self._series(t, 0)

    def derivative(self, t) -> np.ndarray:
        return self._series(t, 1)

    def continued(self, t, shift: float) -> np.ndarray:
        """Parametrization at complex t + i·shift; shift > 0 moves a counterclockwise curve inward."""
        w = np.asarray(t, dtype=float) + 1j * shift
        fc = self.fourier_coeffs

        def coordinate(cos_c: list[float], sin_c: list[float]) -> np.ndarray:
            out = np.zeros(w.shape, dtype=complex)
            for j, a in enumerate(cos_c):
                out += a * np.cos(j * w)
            for j, b in enumerate(sin_c[1:], start=1):
                out += b * np.sin(j * w)
            return out

        return coordinate(fc.x_cos, fc.x_sin) + 1j * coordinate(fc.y_cos, fc.y_sin)

    def speed(self, t) -> np.ndarray:
        return np.abs(self.derivative(t))

    def normal(self, t) -> np.ndarray:
        """Unit outward normal (x2', −x1')/|x'| for a counterclockwise curve."""
        d = self.derivative(t)
        return -1j * d / np.abs(d)

    def area(self) -> float:
        t = np.linspace(0.0, 2.0 * np.pi, SIMPLICITY_SAMPLES, endpoint=False)
        p, d = self.points(t), self.derivative(t)
        return float(0.5 * np.mean(p.real * d.imag - p.imag * d.real) * 2.0 * np.pi)

    def length(self) -> float:
        t = np.linspace(0.0, 2.0 * np.pi, SIMPLICITY_SAMPLES, endpoint=False)
        return float(np.mean(self.speed(t)) * 2.0 * np.pi)

    def centroid(self) -> complex:
        t = np.linspace(0.0, 2.0 * np.pi, SIMPLICITY_SAMPLES, endpoint=False)
        p, d = self.points(t), self.derivative(t)
        cross = p.real * d.imag - p.imag * d.real
        area = self.area()
        cx = np.mean(p.real * cross) * 2.0 * np.pi / (3.0 * area)
        cy = np.mean(p.imag * cross) * 2.0 * np.pi / (3.0 * area)
        return complex(cx, cy)

    def contains(self, z) -> np.ndarray:
        """Winding-number interior test for points x1 + i x2."""
        t = np.linspace(0.0, 2.0 * np.pi, SIMPLICITY_SAMPLES, endpoint=False)
        poly = self.points(t)
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        rel = poly[None, :] - z[:, None]
        turn = np.angle(np.roll(rel, -1, axis=1) / rel)
        return np.abs(turn.sum(axis=1)) > np.pi

    def equivalent_radius(self) -> float:
        if self.kind == "disc" and self.params is not None:
            return float(self.params["radius"])
        return math.sqrt(self.area() / math.pi)


def polygon_self_intersects(p: np.ndarray) -> bool:
    a = p
    b = np.roll(p, -1)
    n = len(p)

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    d = b - a
    rel = a[None, :] - a[:, None]
    denom = cross(d[:, None], d[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        s = cross(rel, d[None, :]) / denom
        u = cross(rel, d[:, None]) / denom
    hit = (s > 0) & (s < 1) & (u > 0) & (u < 1) & (denom != 0)
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    near = (gap <= 1) | (gap >= n - 1)
    return bool(np.any(hit & ~near))


class Scene(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: float = Field(gt=0)
    R: float = Field(gt=0)
    obstacles: list[ObstacleCurve] = Field(default_factory=list)

    @model_validator(mode="after")
    def _inside_and_disjoint(self) -> "Scene":
        t = np.linspace(0.0, 2.0 * np.pi, SIMPLICITY_SAMPLES, endpoint=False)
        samples = [curve.points(t) for curve in self.obstacles]
        for pts in samples:
            if np.max(np.abs(pts)) >= self.R:
                raise GeometryError(f"obstacle leaves the enclosing disc of radius {self.R}")
        gap = MIN_GAP_FRACTION * self.R
        for i in range(len(samples)):
            for j in range(i + 1, len(samples)):
                dist = np.min(np.abs(samples[i][:, None] - samples[j][None, :]))
                if dist < gap or self.obstacles[i].contains(samples[j][0])[0] \
                        or self.obstacles[j].contains(samples[i][0])[0]:
                    raise GeometryError(f"obstacles {i} and {j} are not disjoint")
        return self

    def contains(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        inside = np.zeros(z.shape, dtype=bool)
        for curve in self.obstacles:
            inside |= curve.contains(z)
        return inside


# ---------- Run configurations (CLI) ----------

def _resolve(value: Optional[Path]) -> Optional[Path]:
    return None if value is None else Path(value).expanduser().resolve()


class RunConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="ignore")

    threads: int = Field(default=1, ge=1)
    seed: int = 0
    log_level: str = "INFO"


class ForwardConfig(RunConfig):
    scene: Path
    out: Path
    M: int = Field(default=160, ge=16)
    method: Literal["auto", "analytic", "mfs"] = "auto"
    noise: float = Field(default=0.0, ge=0.0)

    @field_validator("scene", "out")
    @classmethod
    def _resolve_paths(cls, value: Optional[Path]) -> Optional[Path]:
        return _resolve(value)

    @field_validator("M")
    @classmethod
    def _even(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"M must be even, got {value}")
        return value


class ProbeConfig(RunConfig):
    matrix: Optional[Path] = None
    scene: Optional[Path] = None
    out: Optional[Path] = None
    y: PlanePoint
    omega: PlanePoint
    n: int = Field(default=1, ge=1)
    N_min: int = Field(default=8, ge=1)
    N_max: int = Field(default=24, ge=1)
    gamma: float = 0.5
    R: float = Field(default=2.0, gt=0)
    k: Optional[float] = Field(default=None, gt=0)
    delta: float = Field(default=0.05, gt=0)

    @field_validator("matrix", "scene", "out")
    @classmethod
    def _resolve_paths(cls, value: Optional[Path]) -> Optional[Path]:
        return _resolve(value)

    @model_validator(mode="after")
    def _source_and_range(self) -> "ProbeConfig":
        if (self.matrix is None) == (self.scene is None):
            raise ValueError("exactly one of matrix or scene is required")
        if self.N_max - self.N_min + 1 < 5:
            raise ValueError("N range needs at least 5 values")
        unit_direction(self.omega.z)
        return self


class ScanConfig(RunConfig):
    matrix: Optional[Path] = None
    scene: Optional[Path] = None
    out_csv: Path
    out_pgm: Path
    R: float = Field(default=2.0, gt=0)
    k: Optional[float] = Field(default=None, gt=0)
    grid: tuple[float, float, float, float, int, int] = (-1.4, 1.4, -1.4, 1.4, 21, 21)
    omega_count: int = Field(default=16, ge=1)
    n_list: list[int] = Field(default_factory=lambda: [1, 2])
    N_min: int = Field(default=8, ge=1)
    N_max: int = Field(default=24, ge=1)
    gamma: float = 0.5
    delta: float = Field(default=0.05, gt=0)
    progress: bool = True

    @field_validator("matrix", "scene", "out_csv", "out_pgm")
    @classmethod
    def _resolve_paths(cls, value: Optional[Path]) -> Optional[Path]:
        return _resolve(value)

    @model_validator(mode="after")
    def _checks(self) -> "ScanConfig":
        if (self.matrix is None) == (self.scene is None):
            raise ValueError("exactly one of matrix or scene is required")
        if self.N_max - self.N_min + 1 < 5:
            raise ValueError("N range needs at least 5 values")
        x0, x1, y0, y1, nx, ny = self.grid
        if nx < 1 or ny < 1:
            raise ValueError("grid needs at least one point per axis")
        corners = [complex(a, b) for a in (x0, x1) for b in (y0, y1)]
        if max(abs(c) for c in corners) >= self.R:
            raise ValueError(f"grid must lie inside B_R (R = {self.R})")
        return self


class VerifyConfig(RunConfig):
    suites: list[str] = Field(default_factory=list)
    epsilon: float = Field(default=0.1, gt=0)
    uniform_radius: float = Field(default=2.0, gt=0)
    bracket: float = Field(default=1.0e4, ge=1)


class MLEvalConfig(RunConfig):
    n: int = Field(default=2, ge=1)
    x: PlanePoint
    tau: float = Field(default=1.0, gt=0)
    k: float = Field(default=1.0, gt=0)
    omega: PlanePoint = PlanePoint(x1=1.0, x2=0.0)
    N: int = Field(default=8, ge=1)
    gamma: float = 0.5
    R: float = Field(default=1.0, gt=0)
