"""Command line entry point: ``equisphere {param,diagnose,synth,stats}``.

Exit codes are the only success channel:

* 0  converged to tolerance / command succeeded
* 1  error (message on stderr)
* 2  iteration budget spent or progress stalled
* 3  energy oscillation detected
* 4  ``diagnose`` found an identity check above its threshold
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .errors import EquisphereError
from .mesh import TriMesh, load_mesh, normalize_area, read_arrays, save_mesh
from .synth import SHAPES, make_shape

log = logging.getLogger("equisphere")

EXIT_CODES = {"tolerance": 0, "max_iter": 2, "stagnation": 2, "quasi_periodic_suspected": 3}
CONFIG_KEYS = {
    "tol": float,
    "radius": float,
    "max_iter": int,
    "warmup": int,
    "init_bypass_path": str,
    "report_path": str,
    "snapshot_every": int,
}
DIAGNOSE_LIMIT = 5000


def read_config(path) -> dict:
    """Parse a ``key = value`` file (``#`` comments, blank lines ignored)."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key = value")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{n}: unknown key {key!r}")
        out[key] = CONFIG_KEYS[key](value)
    return out


def _axes(text: str) -> tuple[float, float, float]:
    parts = [float(t) for t in text.split(",")]
    if len(parts) != 3 or min(parts) <= 0:
        raise argparse.ArgumentTypeError("axes must be three positive numbers a,b,c")
    return tuple(parts)


def _sem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; command line flags take precedence")
    p.add_argument("--tol", type=float, default=None, help="energy change tolerance (default 1e-6)")
    p.add_argument("--radius", type=float, default=None, help="chart interior radius (default 1.1)")
    p.add_argument("--max-iter", type=int, default=None, help="iteration budget (default 500)")
    p.add_argument("--warmup", type=int, default=None, help="index fixing passes (default 3)")
    p.add_argument("--solver", choices=("direct", "minres"), default="direct")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="equisphere", description="Area-preserving spherical parameterization.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("param", help="map a genus-zero mesh onto the unit sphere")
    p.add_argument("input")
    p.add_argument("-o", "--output", default=None, help="output OBJ (default <input>.sphere.obj)")
    p.add_argument("--report", default=None, help="JSON convergence report")
    p.add_argument("--init", default=None, help="OBJ with unit-sphere vertices used instead of the conformal start")
    p.add_argument("--snapshot-every", type=int, default=None, help="write intermediate maps every N sweeps")
    _sem_args(p)

    p = sub.add_parser("diagnose", help="check the convergence identities on a small mesh")
    p.add_argument("input")
    p.add_argument("-o", "--outdir", default=".", help="directory for the CSV series")
    p.add_argument("--window", type=int, default=60, help="iterations used for the rate estimate")
    p.add_argument("--k-max", type=int, default=10, help="last iteration with a transfer bundle")
    p.add_argument("--force", action="store_true", help=f"allow meshes over {DIAGNOSE_LIMIT} vertices")
    _sem_args(p)

    p = sub.add_parser("synth", help="write a synthetic genus-zero benchmark mesh")
    p.add_argument("shape", choices=SHAPES)
    p.add_argument("-o", "--output", default=None, help="output OFF (default <shape>.off)")
    p.add_argument("--level", type=int, default=3)
    p.add_argument("--axes", type=_axes, default=(1.0, 1.0, 1.5))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=0.3)
    p.add_argument("--bumps", type=int, default=3)

    p = sub.add_parser("stats", help="stretch statistics of a mesh and its sphere map")
    p.add_argument("mesh")
    p.add_argument("sphere")
    p.add_argument("--json", action="store_true", help="print JSON instead of text")
    return parser


def _sem_config(args):
    from .sem import SEMConfig

    conf = read_config(args.config) if args.config else {}
    for key in ("tol", "radius", "max_iter", "warmup"):
        value = getattr(args, key)
        if value is not None:
            conf[key] = value
    sem = SEMConfig(**{k: conf[k] for k in ("tol", "radius", "max_iter", "warmup") if k in conf})
    sem.solver = args.solver
    return sem, conf


def _load_init(path, mesh: TriMesh) -> np.ndarray:
    v, _ = read_arrays(path)
    if v.shape != (mesh.n_vertices, 3):
        raise EquisphereError(f"{path}: init has {len(v)} vertices, mesh has {mesh.n_vertices}")
    norms = np.linalg.norm(v, axis=1)
    if np.max(np.abs(norms - 1.0)) > 1e-6:
        raise EquisphereError(f"{path}: init vertices are not on the unit sphere")
    return v / norms[:, None]


def cmd_param(args) -> int:
    from .sem import run_sem

    cfg, conf = _sem_config(args)
    mesh = normalize_area(load_mesh(args.input))
    out = Path(args.output or Path(args.input).with_suffix(".sphere.obj"))
    report_path = args.report or conf.get("report_path")
    init_path = args.init or conf.get("init_bypass_path")
    every = args.snapshot_every or conf.get("snapshot_every")
    init = _load_init(init_path, mesh) if init_path else None

    def snapshot(state):
        if state.k % every == 0:
            save_mesh(out.with_name(f"{out.stem}.{state.k:05d}{out.suffix}"), state.f, mesh.faces)

    state, report = run_sem(mesh, cfg, init=init, callback=snapshot if every else None)
    save_mesh(out, state.f, mesh.faces)
    if report_path:
        Path(report_path).write_text(report.to_json())
    fin = report.final
    log.info(
        "%s after %d iterations: mean sigma %.6f, std %.3e, energy %.6f, folds %d",
        report.termination_reason, report.iterations, fin["mean"], fin["std"], fin["energy"], fin["folded_faces"],
    )
    return EXIT_CODES[report.termination_reason]


def cmd_diagnose(args) -> int:
    from .diagnostics import THRESHOLDS, diagnose_snapshots, write_csv
    from .sem import run_sem

    cfg, _ = _sem_config(args)
    mesh = normalize_area(load_mesh(args.input))
    if mesh.n_vertices > DIAGNOSE_LIMIT and not args.force:
        print(
            f"error: {mesh.n_vertices} vertices exceeds the dense diagnostics limit of {DIAGNOSE_LIMIT}; "
            "use a coarser mesh or pass --force",
            file=sys.stderr,
        )
        return 1
    snaps: list = []
    state, report = run_sem(mesh, cfg, snapshots=snaps)
    if len(snaps) < 4:
        print("error: need at least 3 iterations for the transfer checks", file=sys.stderr)
        return 1
    run = diagnose_snapshots(mesh, state.partition, snaps, k_max=args.k_max, window=args.window)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "spectral.csv", ("k", "max_abs", "spectral_radius"), run.spectral)
    write_csv(outdir / "rates.csv", ("k", "rate_B2", "rate_I2"), run.rates)
    write_csv(outdir / "residuals.csv", ("k", "residual_lemma", "residual_H", "residual_recursion"), run.residuals)
    worst = run.worst()
    checks = run.checks()
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}: max residual {worst[name]:.3e} (threshold {THRESHOLDS[name]:.0e})")
    return 0 if all(checks.values()) else 4


def cmd_synth(args) -> int:
    v, f = make_shape(args.shape, args.level, axes=args.axes, seed=args.seed, amplitude=args.amplitude, n_bumps=args.bumps)
    TriMesh.from_arrays(v, f)
    save_mesh(args.output or f"{args.shape}.off", v, f)
    return 0


def cmd_stats(args) -> int:
    from .laplacian import stretch_stats

    mesh = normalize_area(load_mesh(args.mesh))
    v, _ = read_arrays(args.sphere)
    if len(v) != mesh.n_vertices:
        raise EquisphereError("sphere map and mesh have different vertex counts")
    summary = stretch_stats(mesh, v).summary()
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        for key, value in summary.items():
            print(f"{key:>13}: {value}")
    return 0


COMMANDS = {"param": cmd_param, "diagnose": cmd_diagnose, "synth": cmd_synth, "stats": cmd_stats}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    threads = os.environ.get("SEM_THREADS")
    try:
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=int(threads)):
                return COMMANDS[args.command](args)
        return COMMANDS[args.command](args)
    except (EquisphereError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
