"""
Exception hierarchy shared by the library and the CLI.

Notes:
- InputError subclasses ValueError so library callers can keep catching ValueError.
- exit_code_for() is the single place that maps failures onto the CLI contract
  (0 ok, 1 verification failure, 2 input error, 3 consistency error).
"""

from __future__ import annotations

import json

from pydantic import ValidationError


class EnclosureError(Exception):
    """Base class for every error raised on purpose by the package."""


# ---------- Input errors (exit 2) ----------

class InputError(EnclosureError, ValueError):
    pass


class DomainError(InputError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(InputError):
    """Argument outside the supported numerical envelope."""


class BesselRangeError(RangeError):
    pass


class MLRangeError(RangeError):
    """Mittag-Leffler evaluation would lose all accuracy or overflow."""


class SingularityError(DomainError):
    pass


class ApexError(DomainError):
    """Cone membership asked at the apex itself."""


class GeometryError(InputError):
    pass


class ResolutionError(InputError):
    """Node count too small for the density; regenerate the far-field matrix."""


class MatrixFormatError(InputError):
    pass


class MalformedHeaderError(MatrixFormatError):
    pass


class DimensionMismatchError(MatrixFormatError):
    pass


class ChecksumError(MatrixFormatError):
    pass


class UnsupportedVersionError(MatrixFormatError):
    pass


# ---------- Consistency / numeric errors (exit 3) ----------

class ConsistencyError(EnclosureError):
    """Inputs are individually valid but disagree (e.g. wave numbers)."""


class QuadratureError(EnclosureError):
    pass


class MFSAccuracyError(EnclosureError):
    def __init__(self, message: str, residual: float, rank: int, sources: int):
        super().__init__(message)
        self.residual = residual
        self.rank = rank
        self.sources = sources


class DensityOverflowError(EnclosureError):
    pass


# ---------- Verification (exit 1) ----------

class VerificationError(EnclosureError):
    pass


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, VerificationError):
        return 1
    if isinstance(exc, (InputError, ValidationError, json.JSONDecodeError)):
        return 2
    try:
        import yaml
    except ModuleNotFoundError:
        yaml = None
    if yaml is not None and isinstance(exc, yaml.YAMLError):
        return 2
    if isinstance(exc, (FileNotFoundError, IsADirectoryError)):
        return 2
    return 3


def error_payload(exc: BaseException) -> str:
    return json.dumps(
        {
            "error": type(exc).__name__,
            "message": str(exc),
            "exit_code": exit_code_for(exc),
        }
    )
