"""Command-line driver: every verification and evaluator as a subcommand.

Reports are emitted as a flat JSON array or a CSV table with snake_case
keys, one record per check (or per density point).  Exit codes: 0 when all
verdicts pass, 1 on input errors, 2 when any statistical check fails, so CI
can gate directly on the identities.

The default seed is 0 and can be overridden with the ``BOUGEROL_SEED``
environment variable (a single integer); an explicit ``--seed`` wins.  The
same configuration, seed included, reproduces byte-identical output files
for a given build of the package.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from ._backend import backend_name
from .closedform import density_A, mellin_A
from .rng import RngStream
from .sde import em_strong_error, explicit_residual_convergence, sample_em_endpoints
from .stats import (
    SampleSet,
    TestReport,
    ks_two_sample,
    verify_bdy,
    verify_boug,
    verify_main,
    verify_reversal,
    verify_second,
)

SEED_ENV_VAR = "BOUGEROL_SEED"
COMMANDS = (
    "verify-boug",
    "verify-bdy",
    "verify-main",
    "verify-second",
    "verify-reversal",
    "density",
    "mellin",
    "sde-check",
)
_SDE_STEP_COUNTS = (256, 1024, 4096)


class CliError(Exception):
    """Input error carrying one message per invalid flag."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class RunConfig:
    """Fully resolved invocation; a pure value that determines the output."""

    command: str
    t: float = 1.0
    x: float = 0.0
    n_mc: int = 100_000
    n_steps: int = 4096
    seed: int = 0
    output_format: str = "json"
    output_path: str = "-"
    threads: int = 1
    v_min: float = 0.1
    v_max: float = 5.0
    points: int = 100
    tol: float = 1e-8
    nu: float = 1.5


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); input errors are exit 1
        raise CliError([message])


def _build_parser() -> _Parser:
    parser = _Parser(prog="bougerol", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help=f"RNG seed (default: ${SEED_ENV_VAR} or 0)")
        p.add_argument("--format", dest="output_format", choices=("json", "csv"),
                       default="json", help="report format")
        p.add_argument("--output", dest="output_path", default="-",
                       help="output file, '-' for stdout")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for sample generation")

    def mc(p, with_x=False):
        p.add_argument("--t", type=float, default=1.0, help="time horizon")
        if with_x:
            p.add_argument("--x", type=float, default=0.0,
                           help="level parameter (hyperbolic coordinate)")
        p.add_argument("--n-mc", type=int, default=100_000, help="sample size")
        p.add_argument("--n-steps", type=int, default=4096,
                       help="path grid resolution (power of two)")

    for name, with_x in (
        ("verify-boug", False),
        ("verify-bdy", False),
        ("verify-main", True),
        ("verify-second", True),
        ("verify-reversal", False),
    ):
        p = sub.add_parser(name)
        mc(p, with_x)
        common(p)

    p = sub.add_parser("density")
    p.add_argument("--t", type=float, default=1.0, help="time horizon")
    p.add_argument("--v-min", type=float, default=0.1)
    p.add_argument("--v-max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)
    common(p)

    p = sub.add_parser("mellin")
    p.add_argument("--nu", type=float, default=1.5, help="Mellin order (> 1/2)")
    mc(p)
    common(p)

    p = sub.add_parser("sde-check")
    mc(p, with_x=True)
    common(p)
    return parser


def parse_flags(argv) -> RunConfig:
    """Parse and validate; raises :class:`CliError` listing every bad value."""
    parser = _build_parser()
    ns = parser.parse_args(list(argv))
    if ns.command is None:
        raise CliError([f"missing command; choose from: {', '.join(COMMANDS)}"])

    if ns.seed is None:
        raw = os.environ.get(SEED_ENV_VAR, "0")
        try:
            ns.seed = int(raw)
        except ValueError:
            raise CliError([f"${SEED_ENV_VAR} must be an integer, got {raw!r}"]) from None

    cfg = RunConfig(command=ns.command)
    for f in fields(RunConfig):
        if hasattr(ns, f.name):
            setattr(cfg, f.name, getattr(ns, f.name))

    errors = []
    if not (math.isfinite(cfg.t) and cfg.t > 0):
        errors.append(f"--t must be > 0, got {cfg.t}")
    if cfg.command in ("verify-boug", "verify-bdy", "verify-main", "verify-second",
                       "verify-reversal", "mellin", "sde-check"):
        if cfg.n_mc < 100:
            errors.append(f"--n-mc must be >= 100, got {cfg.n_mc}")
        if cfg.n_steps < 1 or (cfg.n_steps & (cfg.n_steps - 1)):
            errors.append(f"--n-steps must be a power of two, got {cfg.n_steps}")
    if cfg.threads < 1:
        errors.append(f"--threads must be >= 1, got {cfg.threads}")
    if cfg.command == "density":
        if not (cfg.v_min > 0):
            errors.append(f"--v-min must be > 0, got {cfg.v_min}")
        if not (cfg.v_max > cfg.v_min):
            errors.append(f"--v-max must exceed --v-min, got {cfg.v_max}")
        if cfg.points < 1:
            errors.append(f"--points must be >= 1, got {cfg.points}")
        if not (cfg.tol > 0):
            errors.append(f"--tol must be > 0, got {cfg.tol}")
    if cfg.command == "mellin" and not (cfg.nu > 0.5):
        errors.append(f"--nu must be > 1/2, got {cfg.nu}")
    if errors:
        raise CliError(errors)
    return cfg


def _core_fields(cfg: RunConfig) -> dict:
    rec = {
        "command": cfg.command,
        "seed": cfg.seed,
        "version": __version__,
        "backend": backend_name(),
    }
    if cfg.command != "density":
        rec.update({"t": cfg.t, "n_mc": cfg.n_mc, "n_steps": cfg.n_steps})
    else:
        rec.update({"t": cfg.t, "v_min": cfg.v_min, "v_max": cfg.v_max,
                    "points": cfg.points, "tol": cfg.tol})
    if cfg.command in ("verify-main", "verify-second", "sde-check"):
        rec["x"] = cfg.x
    return rec


def _report_records(cfg: RunConfig, reports) -> list[dict]:
    core = _core_fields(cfg)
    return [{**core, **r.to_record()} for r in reports]


def _density_records(cfg: RunConfig) -> list[dict]:
    core = _core_fields(cfg)
    vs = np.linspace(cfg.v_min, cfg.v_max, cfg.points)
    records = []
    for v in vs:
        ev = density_A(cfg.t, float(v), cfg.tol)
        records.append({
            **core,
            "v": float(v),
            "density": ev.value,
            "err_estimate": ev.abs_error_estimate,
            "nodes_used": ev.nodes_used,
            "flags": ";".join(ev.flags),
        })
    return records


def _mellin_records(cfg: RunConfig) -> list[dict]:
    check = mellin_A(cfg.t, cfg.nu, cfg.n_mc, RngStream(cfg.seed),
                     n_steps=cfg.n_steps, n_workers=cfg.threads)
    # 3 standard errors, with an absolute floor for the exact nu = 1 case
    gap = abs(check.lhs - check.rhs)
    threshold = 3.0 * check.mc_se + 1e-12
    rec = {
        **_core_fields(cfg),
        "test_name": "mellin_fractional_moment",
        "nu": check.nu,
        "lhs": check.lhs,
        "rhs": check.rhs,
        "mc_se": check.mc_se,
        "statistic": gap,
        "threshold_or_pvalue": threshold,
        "n1": check.n_mc,
        "n2": check.n_mc,
        "verdict": "pass" if gap <= threshold else "fail",
    }
    return [rec]


def _sde_records(cfg: RunConfig) -> list[dict]:
    rng = RngStream(cfg.seed)
    core = _core_fields(cfg)
    n_paths = min(cfg.n_mc, 4000)

    strong = em_strong_error(cfg.t, cfg.x, n_paths, _SDE_STEP_COUNTS, rng.child(0))
    order_ok = abs(strong.order - 0.5) <= 0.1
    records = [{
        **core,
        "test_name": "sde:em_strong_order",
        "statistic": strong.order,
        "threshold_or_pvalue": 0.5,
        "n1": n_paths, "n2": n_paths,
        "verdict": "pass" if order_ok else "fail",
        "rms_errors": ";".join(f"{e:.6e}" for e in strong.rms),
        "step_counts": ";".join(str(c) for c in strong.step_counts),
    }]

    resid = explicit_residual_convergence(cfg.t, cfg.x, n_paths, _SDE_STEP_COUNTS, rng.child(1))
    decreasing = all(a > b for a, b in zip(resid.rms, resid.rms[1:]))
    records.append({
        **core,
        "test_name": "sde:explicit_residual_convergence",
        "statistic": resid.order,
        "threshold_or_pvalue": 0.5,
        "n1": n_paths, "n2": n_paths,
        "verdict": "pass" if decreasing else "fail",
        "rms_errors": ";".join(f"{e:.6e}" for e in resid.rms),
        "step_counts": ";".join(str(c) for c in resid.step_counts),
    })

    ends = sample_em_endpoints(cfg.t, cfg.x, cfg.n_mc, _SDE_STEP_COUNTS[-1], rng.child(2))
    z = rng.child(3).generator().standard_normal(cfg.n_mc)
    exact = np.sinh(cfg.x + math.sqrt(cfg.t) * z)
    ks = ks_two_sample(SampleSet(ends, "em_endpoints"), SampleSet(exact, "closed_form"))
    records.append({**core, **ks.to_record(), "test_name": "sde:em_law:" + ks.test_name})
    return records


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    rng = RngStream(cfg.seed)
    kw = dict(n_steps=cfg.n_steps, n_workers=cfg.threads)
    if cfg.command == "verify-boug":
        records = _report_records(cfg, [verify_boug(cfg.t, cfg.n_mc, rng, **kw)])
    elif cfg.command == "verify-bdy":
        records = _report_records(cfg, verify_bdy(cfg.t, cfg.n_mc, rng, **kw))
    elif cfg.command == "verify-main":
        records = _report_records(cfg, verify_main(cfg.t, cfg.x, cfg.n_mc, rng, **kw))
    elif cfg.command == "verify-second":
        records = _report_records(cfg, verify_second(cfg.t, cfg.x, cfg.n_mc, rng, **kw))
    elif cfg.command == "verify-reversal":
        records = _report_records(cfg, verify_reversal(cfg.t, cfg.n_mc, rng, **kw))
    elif cfg.command == "density":
        records = _density_records(cfg)
    elif cfg.command == "mellin":
        records = _mellin_records(cfg)
    elif cfg.command == "sde-check":
        records = _sde_records(cfg)
    else:  # pragma: no cover - parse_flags rejects unknown commands
        raise CliError([f"unknown command {cfg.command!r}"])

    _write_records(records, cfg)
    verdicts = [r["verdict"] for r in records if "verdict" in r]
    n_fail = sum(v == "fail" for v in verdicts)
    if verdicts:
        print(f"{cfg.command}: {len(verdicts) - n_fail}/{len(verdicts)} checks passed",
              file=sys.stderr)
    return 2 if n_fail else 0


def _write_records(records: list[dict], cfg: RunConfig) -> None:
    if cfg.output_format == "json":
        text = json.dumps(records, indent=2, sort_keys=True) + "\n"
    else:
        columns: list[str] = []
        for rec in records:
            for key in rec:
                if key not in columns:
                    columns.append(key)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, restval="", lineterminator="\n")
        writer.writeheader()
        writer.writerows(records)
        text = buf.getvalue()
    if cfg.output_path == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None) -> int:
    try:
        cfg = parse_flags(sys.argv[1:] if argv is None else argv)
    except CliError as exc:
        for msg in exc.errors:
            print(f"error: {msg}", file=sys.stderr)
        print("run 'bougerol --help' for usage", file=sys.stderr)
        return 1
    try:
        return run(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
