"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 blowup signal, 3 failed verdict.
Every command writes ``manifest.json`` into the output directory, which is
``--output-dir``, else ``$MQG_OUTPUT_DIR``, else ``./mqg_output``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, initial_field, load_config
from .diagnostics import blowup_monitor, scaling_check
from .ensemble import h1, random_field
from .grid import GridSpec, inverse_transform
from .io import write_csv, write_k_estimate, write_probe, write_series, write_snapshot
from .littlewood_paley import build_partition, existence_time_estimate, k_curve, k_limit
from .probes import PROBES, probe_inequality
from .solver import BlowupError, integrate, picard_iterate
from .spectral import dealias, nonlinear_term, nonlinear_term_oracle

EXIT_OK, EXIT_INVALID, EXIT_BLOWUP, EXIT_VERDICT = 0, 1, 2, 3
ORACLE_TOL = 1e-12
MANIFEST = "manifest.json"

log = logging.getLogger("mqg")


class Manifest:
    def __init__(self, command: str, out_dir: Path):
        self.out_dir = out_dir
        self.data = {
            "command": command,
            "version": __version__,
            "config": {},
            "seed": None,
            "start_time": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "end_time": None,
            "outputs": [],
            "exit_status": None,
            "errors": [],
            "notes": {},
        }

    def add(self, path: Path):
        self.data["outputs"].append(path.name)

    def finish(self, status: int) -> int:
        self.data["exit_status"] = status
        self.data["end_time"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        self.data["outputs"] = [
            {"path": name, "size": (self.out_dir / name).stat().st_size}
            for name in self.data["outputs"]
        ]
        (self.out_dir / MANIFEST).write_text(json.dumps(self.data, indent=2, default=str) + "\n")
        return status


def output_dir(arg: str | None) -> Path:
    d = Path(arg or os.environ.get("MQG_OUTPUT_DIR") or "mqg_output")
    d.mkdir(parents=True, exist_ok=True)
    return d


def check_manifest(out_dir: Path) -> int:
    path = out_dir / MANIFEST
    if not path.exists():
        print(f"no manifest in {out_dir}", file=sys.stderr)
        return EXIT_INVALID
    data = json.loads(path.read_text())
    bad = []
    for entry in data.get("outputs", []):
        f = out_dir / entry["path"]
        if not f.exists() or f.stat().st_size != entry["size"]:
            bad.append(entry["path"])
    for name in bad:
        print(f"missing or resized: {name}", file=sys.stderr)
    print(f"manifest check: {len(data.get('outputs', [])) - len(bad)} ok, {len(bad)} bad")
    return EXIT_INVALID if bad else EXIT_OK


def _load(args, manifest: Manifest) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    manifest.data["config"] = cfg.echo()
    manifest.data["seed"] = cfg.seed
    return cfg


def _write_trajectory(traj, out: Path, manifest: Manifest):
    manifest.add(write_series(out / "series.csv", traj.records))
    for i, snap in enumerate(traj.snapshots):
        manifest.add(write_snapshot(out / f"snapshot_{i:05d}.mqg", inverse_transform(snap)))


def cmd_run(args, out: Path, manifest: Manifest) -> int:
    if args.check_manifest:
        return check_manifest(out)
    cfg = _load(args, manifest)
    theta0 = initial_field(cfg, Path(args.config).parent if args.config else None)
    scfg = cfg.solver_config()
    if scfg.classical_limit:
        manifest.data["notes"]["alpha_classical_limit"] = True
    try:
        traj = integrate(theta0, scfg)
    except BlowupError as exc:
        _write_trajectory(exc.trajectory, out, manifest)
        report = blowup_monitor(exc.trajectory)
        manifest.data["errors"].append(str(exc))
        manifest.data["notes"].update(
            failing_step=exc.step_index,
            failing_time=exc.t,
            blowup_verdict=report.verdict,
            blowup_exponent=report.exponent,
        )
        return EXIT_BLOWUP
    _write_trajectory(traj, out, manifest)
    manifest.data["notes"]["blowup_verdict"] = blowup_monitor(traj).verdict
    return EXIT_OK


def _parse_params(items) -> dict:
    params = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            params[k] = json.loads(v)
        except json.JSONDecodeError:
            params[k] = v
        if isinstance(params[k], list):
            params[k] = tuple(params[k])
    return params


def cmd_probe(args, out: Path, manifest: Manifest) -> int:
    params = _parse_params(args.param)
    manifest.data["config"] = {"name": args.name, "n": args.n, "ensemble_size": args.samples, "params": params}
    manifest.data["seed"] = args.seed
    report = probe_inequality(args.name, GridSpec(args.n), args.samples, args.seed, args.threshold, **params)
    manifest.add(write_probe(out / f"probe_{args.name}.csv", report))
    manifest.data["notes"].update(summary=report.summary, spread=report.spread, verdict=report.verdict)
    print(f"{args.name}: {report.summary} verdict={'bounded' if report.verdict else 'unbounded'}")
    return EXIT_OK if report.verdict else EXIT_VERDICT


def cmd_existence_time(args, out: Path, manifest: Manifest) -> int:
    cfg = _load(args, manifest)
    theta0 = initial_field(cfg, Path(args.config).parent if args.config else None)
    p = build_partition(theta0.grid)
    eps = args.epsilon if args.epsilon is not None else 0.5 * k_limit(theta0, cfg.alpha, args.nu, 1.0, p)
    T_grid = np.geomspace(args.t_min, args.t_max, args.points)
    est = k_curve(theta0, cfg.alpha, args.nu, 2.0, 1.0, T_grid, p)
    manifest.add(write_k_estimate(out / "k_estimate.csv", est))
    T = existence_time_estimate(theta0, cfg.alpha, args.nu, eps, p) if eps > 0 else math.inf
    manifest.data["notes"].update(nu=args.nu, epsilon=eps, existence_time=T)
    print(f"existence time estimate: {T!r}")
    return EXIT_OK


def cmd_scaling_check(args, out: Path, manifest: Manifest) -> int:
    cfg = _load(args, manifest)
    theta0 = initial_field(cfg, Path(args.config).parent if args.config else None)
    rep = scaling_check(theta0, args.lam, cfg.solver_config())
    rows = [(t, d, d / rep.scale if rep.scale else d) for t, d in zip(rep.times, rep.differences)]
    manifest.add(write_csv(out / "scaling.csv", ["t", "sup_difference", "relative"], rows))
    manifest.data["notes"]["max_relative_difference"] = rep.max_relative_difference
    print(f"scaling check lambda={args.lam}: max relative difference {rep.max_relative_difference:.3e}")
    return EXIT_OK


def cmd_compare_oracle(args, out: Path, manifest: Manifest) -> int:
    manifest.data["config"] = {"n": args.n, "alpha": args.alpha, "variant": args.variant, "samples": args.samples}
    manifest.data["seed"] = args.seed
    g = GridSpec(args.n)
    rows = []
    for i in range(args.samples):
        theta = random_field(g, args.seed + i, decay=1.0, band=args.n / 3)
        a = nonlinear_term(theta, args.alpha, args.variant, dealias_on=True)
        b = dealias(nonlinear_term_oracle(theta, args.alpha, args.variant))
        rows.append((args.seed + i, float(np.abs(a.coefficients - b.coefficients).max())))
    manifest.add(write_csv(out / "oracle.csv", ["sample_seed", "max_difference"], rows))
    worst = max(r[1] for r in rows)
    manifest.data["notes"]["max_difference"] = worst
    print(f"max coefficient difference {worst:.3e}")
    return EXIT_OK if worst <= ORACLE_TOL else EXIT_VERDICT


def cmd_picard(args, out: Path, manifest: Manifest) -> int:
    cfg = _load(args, manifest)
    theta0 = initial_field(cfg, Path(args.config).parent if args.config else None)
    if args.h1 is not None:
        theta0 = theta0 * (args.h1 / h1(theta0))
    rep = picard_iterate(theta0, cfg.solver_config(), args.k_max, args.tol)
    manifest.add(write_csv(out / "picard.csv", ["k", "radius", "increment", "ratio"], rep.rows()))
    manifest.data["notes"].update(converged=rep.converged, contractive=rep.contractive)
    print(f"picard: {rep.iterations} iterations, converged={rep.converged}, contractive={rep.contractive}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mqg", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("config", nargs="?", help="key = value run config")
        p.add_argument("--output-dir")
        return p

    p = common(sub.add_parser("run", help="integrate the dynamics"))
    p.add_argument("--check-manifest", action="store_true", help="verify outputs listed in the manifest")
    p.set_defaults(func=cmd_run)

    p = common(sub.add_parser("probe", help="inequality probe over a random ensemble"), config=False)
    p.add_argument("name", choices=PROBES)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=1e3)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_probe)

    p = common(sub.add_parser("existence-time", help="K functional and existence-time estimate"))
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--t-min", type=float, default=1e-3)
    p.add_argument("--t-max", type=float, default=1e2)
    p.add_argument("--points", type=int, default=21)
    p.set_defaults(func=cmd_existence_time)

    p = common(sub.add_parser("scaling-check", help="check the lambda-rescaling symmetry"))
    p.add_argument("--lam", type=int, default=2)
    p.set_defaults(func=cmd_scaling_check)

    p = common(sub.add_parser("compare-oracle", help="pseudo-spectral vs direct convolution"), config=False)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--variant", default="MQG")
    p.add_argument("--samples", type=int, default=1)
    p.set_defaults(func=cmd_compare_oracle)

    p = common(sub.add_parser("picard", help="Picard iteration report"))
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--h1", type=float, help="rescale the initial data to this H^1 norm")
    p.set_defaults(func=cmd_picard)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    out = output_dir(args.output_dir)
    manifest = Manifest(args.command, out)
    try:
        status = args.func(args, out, manifest)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        manifest.data["errors"].append(str(exc))
        status = EXIT_INVALID
    if args.command == "run" and args.check_manifest:
        return status
    return manifest.finish(status)


if __name__ == "__main__":
    sys.exit(main())
