"""
Command-line entry point.

    python -m enclosure [--config FILE] [--threads T] [--seed S] [--log-level L] <command> ...

Commands: forward, probe, scan, verify, ml-eval. Settings come from the
environment, then the config file, then flags. Failures print one JSON line
on stderr and map onto the exit codes in enclosure.api.errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from enclosure.api import forward, herglotz, indicator, specfun, storage, vekua
from enclosure.api.errors import VerificationError, error_payload, exit_code_for
from enclosure.api.models import (
    ConeSpec,
    DensitySpec,
    ForwardConfig,
    MLEvalConfig,
    ProbeConfig,
    ScanConfig,
    Scene,
    VerifyConfig,
)
from enclosure.app.config import load_runtime_settings
from enclosure.app.suites import SUITES, SuiteOptions, run_suites
from enclosure.app.util import resolve_threads, setup_logging

logger = logging.getLogger("enclosure.cli")


def _int_list(raw: str) -> list[int]:
    return [int(part) for part in raw.replace(" ", "").split(",") if part]


def _pair(value: Any) -> list[float]:
    return [float(v) for v in value]


def _cx(z: complex) -> list[float]:
    return [z.real, z.imag]


def _merge(settings: dict[str, Any], args: argparse.Namespace, keys: Sequence[str]) -> dict[str, Any]:
    out = {key: settings[key] for key in keys if key in settings}
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _source(matrix: Path | None, scene: Path | None):
    if matrix is not None:
        return storage.load_matrix(matrix)
    return storage.load_scene(scene)


# ---------- commands ----------

def cmd_forward(args: argparse.Namespace, settings: dict[str, Any]) -> int:
    data = _merge(settings, args, ("threads", "seed", "log_level", "M", "noise"))
    cfg = ForwardConfig(scene=args.scene, out=args.out, method=args.method, **data)
    scene = storage.load_scene(cfg.scene)
    F = forward.farfield_matrix(scene, cfg.M, method=cfg.method, threads=cfg.threads)
    if cfg.noise > 0:
        F = forward.add_noise(F, cfg.noise, cfg.seed)
    storage.save_matrix(F, cfg.out)
    guard = forward.neumann_eigen_guard(scene)
    print(json.dumps({
        "out": str(cfg.out),
        "M": F.M,
        "k": F.k,
        "provenance": F.provenance,
        "reciprocity_residual": forward.reciprocity_residual(F),
        "eigen_guard": {"ka": guard.ka, "distance": guard.distance, "flagged": guard.flagged,
                        "heuristic": guard.heuristic},
        **{key: F.diagnostics[key] for key in ("residual", "rank", "sources") if key in F.diagnostics},
    }))
    return 0


def cmd_probe(args: argparse.Namespace, settings: dict[str, Any]) -> int:
    data = _merge(settings, args, ("threads", "seed", "log_level", "gamma", "delta", "N_min", "N_max"))
    cfg = ProbeConfig(matrix=args.matrix, scene=args.scene, out=args.out, y=_pair(args.y),
                      omega=_pair(args.omega), n=args.n, R=args.R, k=args.k, **data)
    source = _source(cfg.matrix, cfg.scene)
    k = cfg.k if cfg.k is not None else source.k
    cone = ConeSpec(y=cfg.y, omega=cfg.omega, n=cfg.n)
    trace = indicator.indicator_trace(source, cone, cfg.gamma, cfg.R, k,
                                      range(cfg.N_min, cfg.N_max + 1), cfg.delta)
    if cfg.out is not None:
        storage.write_trace_csv(trace, cfg.out)
    unresolved = sum(trace.unresolved)
    print(f"{trace.classification} slope={trace.slope:.6g} unresolved={unresolved}")
    return 0


def cmd_scan(args: argparse.Namespace, settings: dict[str, Any]) -> int:
    data = _merge(settings, args, ("threads", "seed", "log_level", "gamma", "delta", "N_min", "N_max",
                                   "omega_count", "n_list", "progress"))
    if args.grid is not None:
        data["grid"] = tuple(args.grid)
    cfg = ScanConfig(matrix=args.matrix, scene=args.scene, out_csv=args.out_csv, out_pgm=args.out_pgm,
                     R=args.R, k=args.k, **data)
    source = _source(cfg.matrix, cfg.scene)
    k = cfg.k if cfg.k is not None else source.k
    vmap = indicator.visible_scan(source, cfg.R, k, cfg.grid, cfg.omega_count, cfg.n_list, cfg.gamma,
                                  range(cfg.N_min, cfg.N_max + 1), cfg.delta,
                                  threads=resolve_threads(cfg.threads), progress=cfg.progress)
    storage.write_map_csv(vmap, cfg.out_csv)
    storage.write_map_pgm(vmap, cfg.out_pgm)
    visible = [c.point for c in vmap.cells if c.verdict == "Visible"]
    summary = {"points": len(vmap.cells), "visible": len(visible),
               "csv": str(cfg.out_csv), "pgm": str(cfg.out_pgm)}
    if isinstance(source, Scene):
        # a Visible point inside an obstacle contradicts the enclosure
        inside = int(np.count_nonzero(source.contains(visible))) if visible else 0
        if inside:
            logger.warning("%d Visible points lie inside the scene obstacles", inside)
        summary["visible_inside_obstacles"] = inside
    print(json.dumps(summary))
    return 0


def cmd_verify(args: argparse.Namespace, settings: dict[str, Any]) -> int:
    if args.list:
        for name in SUITES:
            print(name)
        return 0
    data = _merge(settings, args, ("threads", "seed", "log_level", "epsilon", "uniform_radius", "bracket"))
    cfg = VerifyConfig(suites=args.suite or [], **data)
    opts = SuiteOptions(epsilon=cfg.epsilon, uniform_radius=cfg.uniform_radius, bracket=cfg.bracket)
    results = run_suites(cfg.suites or None, cfg.seed, opts)
    for result in results:
        print(json.dumps(result.as_dict(), default=str))
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise VerificationError(f"failed suites: {', '.join(failed)}")
    return 0


def cmd_ml_eval(args: argparse.Namespace, settings: dict[str, Any]) -> int:
    data = _merge(settings, args, ("threads", "seed", "log_level", "gamma"))
    cfg = MLEvalConfig(n=args.n, x=_pair(args.x), tau=args.tau, k=args.k, omega=_pair(args.omega),
                       N=args.N, R=args.R, **data)
    z = cfg.x.z
    spec = DensitySpec.build(0j, cfg.omega.z, cfg.n, cfg.N, cfg.gamma, cfg.R, cfg.k)
    grad = vekua.ml_directional_gradient(cfg.n, z, spec.s, cfg.k, cfg.omega.z)
    print(json.dumps({
        "E_alpha": _cx(complex(specfun.mittag_leffler(cfg.n, cfg.tau * z))),
        "E_alpha_k": _cx(vekua.ml_modified(cfg.n, z, cfg.tau, cfg.k)),
        "s": spec.s,
        "Hg": _cx(herglotz.herglotz_closed_form(spec, z)),
        "E_directional": _cx(vekua.ml_directional(cfg.n, z, spec.s, cfg.k, cfg.omega.z)),
        "E_directional_gradient": [_cx(g) for g in grad],
    }))
    return 0


# ---------- parser ----------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="enclosure", description="Enclosure-method probing of far-field data.")
    parser.add_argument("--config", type=Path, default=None, help="YAML/JSON settings file")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--log-level", dest="log_level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="simulate a far-field matrix for a scene")
    p.add_argument("--scene", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--M", dest="M", type=int, default=None)
    p.add_argument("--method", choices=["auto", "analytic", "mfs"], default="auto")
    p.add_argument("--noise", type=float, default=None)
    p.set_defaults(handler=cmd_forward)

    def probe_args(q: argparse.ArgumentParser) -> None:
        src = q.add_mutually_exclusive_group(required=True)
        src.add_argument("--matrix", type=Path)
        src.add_argument("--scene", type=Path)
        q.add_argument("--R", dest="R", type=float, default=2.0)
        q.add_argument("--k", type=float, default=None)
        q.add_argument("--gamma", type=float, default=None)
        q.add_argument("--delta", type=float, default=None)
        q.add_argument("--N-min", dest="N_min", type=int, default=None)
        q.add_argument("--N-max", dest="N_max", type=int, default=None)

    p = sub.add_parser("probe", help="indicator trace for one cone")
    probe_args(p)
    p.add_argument("--y", nargs=2, type=float, required=True, metavar=("X1", "X2"))
    p.add_argument("--omega", nargs=2, type=float, required=True, metavar=("W1", "W2"))
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(handler=cmd_probe)

    p = sub.add_parser("scan", help="visible-part map over a grid")
    probe_args(p)
    p.add_argument("--grid", nargs=6, type=float, default=None, metavar=("X0", "X1", "Y0", "Y1", "NX", "NY"))
    p.add_argument("--omega-count", dest="omega_count", type=int, default=None)
    p.add_argument("--n-list", dest="n_list", type=_int_list, default=None)
    p.add_argument("--out-csv", dest="out_csv", type=Path, required=True)
    p.add_argument("--out-pgm", dest="out_pgm", type=Path, required=True)
    p.add_argument("--no-progress", dest="progress", action="store_const", const=False, default=None)
    p.set_defaults(handler=cmd_scan)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", action="append", choices=sorted(SUITES))
    p.add_argument("--list", action="store_true")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("ml-eval", help="evaluate E_α, E_α^k and Hg at a point")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--x", nargs=2, type=float, required=True, metavar=("X1", "X2"))
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--omega", nargs=2, type=float, default=(1.0, 0.0), metavar=("W1", "W2"))
    p.add_argument("--N", dest="N", type=int, default=8)
    p.add_argument("--R", dest="R", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None)
    p.set_defaults(handler=cmd_ml_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_runtime_settings(args.config)
        setup_logging(args.log_level or settings.get("log_level", "INFO"))
        if args.threads is None:
            args.threads = resolve_threads(settings.get("threads"))
        return args.handler(args, settings)
    except Exception as e:
        logger.debug("command failed", exc_info=True)
        print(error_payload(e), file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
