"""
File formats: far-field matrices (FFM v1), scene JSON, trace/map CSV and PGM rasters.

FFM v1 layout:

    FFM v1
    M=<int> k=<float, 17 digits> provenance=<analytic|mfs>
    i j re im            (M² lines, row-major, floats with 17 significant digits)
    crc32=<8 hex digits> (CRC-32 of every byte before this line)

Reading checks the version, then the checksum, then the header, then the body.
"""

from __future__ import annotations

import csv
import logging
import math
import re
import zlib
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from enclosure.api.errors import (
    ChecksumError,
    DimensionMismatchError,
    MalformedHeaderError,
    MatrixFormatError,
    UnsupportedVersionError,
)
from enclosure.api.forward import FarFieldMatrix
from enclosure.api.models import Scene

if TYPE_CHECKING:
    from enclosure.api.indicator import IndicatorTrace, VisibilityMap

logger = logging.getLogger("enclosure.storage")

FFM_VERSION = "FFM v1"
_HEADER = re.compile(r"^M=(\d+) k=(\S+) provenance=(analytic|mfs)$")
_CRC = re.compile(r"^crc32=([0-9a-f]{8})$")


def _g17(x: float) -> str:
    return format(float(x), ".17g")


# ---------- Far-field matrices ----------

def dumps_matrix(F: FarFieldMatrix) -> bytes:
    lines = [FFM_VERSION, f"M={F.M} k={_g17(F.k)} provenance={F.provenance}"]
    E = F.entries
    for i in range(F.M):
        for j in range(F.M):
            lines.append(f"{i} {j} {_g17(E[i, j].real)} {_g17(E[i, j].imag)}")
    body = ("\n".join(lines) + "\n").encode("ascii")
    return body + f"crc32={zlib.crc32(body) & 0xFFFFFFFF:08x}\n".encode("ascii")


def loads_matrix(data: bytes) -> FarFieldMatrix:
    first = data.split(b"\n", 1)[0].decode("ascii", errors="replace").strip()
    if first != FFM_VERSION:
        raise UnsupportedVersionError(f"unsupported matrix file version {first!r}, expected {FFM_VERSION!r}")

    stripped = data.rstrip(b"\n")
    cut = stripped.rfind(b"\n")
    last = stripped[cut + 1:].decode("ascii", errors="replace").strip()
    match = _CRC.match(last)
    if cut < 0 or match is None:
        raise ChecksumError("checksum line missing (file truncated?)")
    body = stripped[:cut + 1]
    actual = zlib.crc32(body) & 0xFFFFFFFF
    if actual != int(match.group(1), 16):
        raise ChecksumError(f"checksum mismatch: file says {match.group(1)}, content gives {actual:08x}")

    try:
        lines = body.decode("ascii").splitlines()
    except UnicodeDecodeError as e:
        raise MatrixFormatError(f"non-ASCII byte at offset {e.start} of the matrix body") from e
    if len(lines) < 2:
        raise MalformedHeaderError("missing header line")
    header = _HEADER.match(lines[1].strip())
    if header is None:
        raise MalformedHeaderError(f"malformed header {lines[1]!r}")
    M = int(header.group(1))
    try:
        k = float(header.group(2))
    except ValueError as e:
        raise MalformedHeaderError(f"bad wave number {header.group(2)!r}") from e
    if not (math.isfinite(k) and k > 0):
        raise MalformedHeaderError(f"wave number must be positive, got {k}")

    rows = lines[2:]
    if len(rows) != M * M:
        raise DimensionMismatchError(f"expected {M * M} entries for M={M}, found {len(rows)}")
    entries = np.empty((M, M), dtype=complex)
    seen = np.zeros((M, M), dtype=bool)
    for line in rows:
        parts = line.split()
        if len(parts) != 4:
            raise DimensionMismatchError(f"bad entry line {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            value = complex(float(parts[2]), float(parts[3]))
        except ValueError as e:
            raise DimensionMismatchError(f"bad entry line {line!r}") from e
        if not (0 <= i < M and 0 <= j < M) or seen[i, j]:
            raise DimensionMismatchError(f"index ({i}, {j}) out of range or repeated for M={M}")
        seen[i, j] = True
        entries[i, j] = value
    return FarFieldMatrix(entries, k, header.group(3))


def save_matrix(F: FarFieldMatrix, destination: Path | str) -> Path:
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_matrix(F))
    logger.info("wrote %s (M=%d, k=%s, %s)", path, F.M, F.k, F.provenance)
    return path


def load_matrix(source: Path | str) -> FarFieldMatrix:
    return loads_matrix(Path(source).read_bytes())


# ---------- Scenes ----------

def load_scene(source: Path | str) -> Scene:
    return Scene.model_validate_json(Path(source).read_text())


def save_scene(scene: Scene, destination: Path | str) -> Path:
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(scene.model_dump_json(indent=2, exclude_none=True) + "\n")
    return path


# ---------- Traces and maps ----------

def write_trace_csv(trace: "IndicatorTrace", destination: Path | str) -> Path:
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["N", "s", "Re(I)", "Im(I)", "abs(I)"])
        for N, s, value, mag in zip(trace.N_values, trace.s_values, trace.values, trace.magnitudes):
            writer.writerow([N, _g17(s), _g17(value.real), _g17(value.imag), _g17(mag)])
    return path


def write_map_csv(vmap: "VisibilityMap", destination: Path | str) -> Path:
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x1", "x2", "verdict", "witness_omega", "witness_n"])
        for cell in vmap.cells:
            omega = "" if cell.witness_omega is None else f"{_g17(cell.witness_omega.real)};{_g17(cell.witness_omega.imag)}"
            n = "" if cell.witness_n is None else str(cell.witness_n)
            writer.writerow([_g17(cell.point.real), _g17(cell.point.imag), cell.verdict, omega, n])
    return path


def write_map_pgm(vmap: "VisibilityMap", destination: Path | str) -> Path:
    """Binary 8-bit PGM; raster rows follow the CSV lattice order (x fastest)."""
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = bytes(255 if cell.verdict == "Visible" else 0 for cell in vmap.cells)
    path.write_bytes(f"P5\n{vmap.nx} {vmap.ny}\n255\n".encode("ascii") + pixels)
    return path
