"""Command-line front end: ``sample``, ``exact``, ``verify``, ``couple``, ``bench``.

Exit codes: 0 success, 1 verification failure, 2 usage, parse or domain error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bench import CSV_HEADER, bench_dynconn, bench_glauber
from .coupling import GSWCoupler, RCLiftCoupler, estimate_coupling_independence, verify_sw_rc_convolution
from .exact import (
    DegenerateSystemError,
    EnumerationCapError,
    Report,
    enumerate_distribution,
    exact_sample_masks,
    ids_of,
    influence_matrix,
    verify_partition_identity,
)
from .field import (
    SamplerReport,
    Schedule,
    round_components,
    sample_rc_many,
    schedule_paper,
    schedule_practical,
    timer,
    uses_brute_force,
)
from .glauber import transition_matrix
from .model import (
    DomainError,
    Graph,
    InvalidInputError,
    IsingParams,
    ParseError,
    RCParams,
    beta_to_p,
    rc_to_sw,
    read_instance,
)
from .suites import SUITES, run_suites

WORKERS_ENV = "ISINGFIELD_WORKERS"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    instance: Path | None = None
    model: str = "rc"
    eps: float = 0.1
    seed: int = 0
    mode: str = "practical"
    theta: float | None = None
    t_fd: int | None = None
    t_gd: int | None = None
    replicas: int = 1
    out: Path | None = None
    suites: list[str] = field(default_factory=list)
    timings: bool = False

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise UsageError("--eps must lie in (0, 1)")
        if self.replicas < 1:
            raise UsageError("--replicas must be >= 1")
        overrides = (self.theta, self.t_fd, self.t_gd)
        if self.mode == "paper" and any(x is not None for x in overrides):
            raise UsageError("--theta/--tfd/--tgd are only accepted with --mode practical")


# ------------------------------------------------------------------ helpers


def _workers(jobs: int) -> int:
    raw = os.environ.get(WORKERS_ENV)
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer") from None
    return max(1, min(cap, jobs))


def _load(cfg: RunConfig):
    inst = read_instance(cfg.instance)
    if cfg.model == "ising":
        return inst.graph, IsingParams(inst.values, inst.lam)
    return inst.graph, RCParams(inst.values, inst.lam)


def _rc_view(params) -> tuple[RCParams, bool]:
    """RC parameters that drive the sampler, and whether fields were inverted."""
    if isinstance(params, IsingParams):
        flip = bool(params.lam.size and np.all(params.lam > 1))
        lam = 1.0 / params.lam if flip else params.lam
        return RCParams(beta_to_p(params.beta), lam), flip
    return params, False


def _schedule(cfg: RunConfig, g: Graph, rc: RCParams) -> Schedule:
    if cfg.mode == "paper":
        p_min = float(rc.p.min()) if rc.p.size else 0.5
        return schedule_paper(cfg.eps, p_min, rc.lambda_max, max(g.n, 2), g.m)
    return schedule_practical(
        cfg.eps, g.m, theta=0.5 if cfg.theta is None else cfg.theta, t_fd=cfg.t_fd, t_gd=cfg.t_gd
    )


def _format_config(ids) -> str:
    return " ".join(str(i) for i in sorted(ids))


def _write(cfg: RunConfig, lines: list[str]) -> None:
    text = "".join(line + "\n" for line in lines)
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        Path(cfg.out).write_text(text)


def _replica(job) -> frozenset:
    g, rc, eps, sched, flip, is_ising, seq = job
    rng = np.random.default_rng(seq)
    x = sample_rc_many(g, rc, eps, sched, rng, 1)[0]
    if not is_ising:
        return x
    s = round_components(g, rc.lam, x, rng)
    return frozenset(range(g.n)) - s if flip else s


# ----------------------------------------------------------------- commands


def cmd_sample(cfg: RunConfig) -> int:
    phases: dict[str, float] = {}
    with timer(phases, "setup"):
        g, params = _load(cfg)
        rc, flip = _rc_view(params)
        sched = _schedule(cfg, g, rc)
        brute = uses_brute_force(g, sched)
        seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.replicas)
        is_ising = cfg.model == "ising"
    with timer(phases, "sample"):
        if brute:
            dist = enumerate_distribution(g, rc)
            samples = []
            for seq in seqs:
                rng = np.random.default_rng(seq)
                x = ids_of(int(exact_sample_masks(dist, rng, 1)[0]))
                if is_ising:
                    s = round_components(g, rc.lam, x, rng)
                    x = frozenset(range(g.n)) - s if flip else s
                samples.append(x)
        else:
            jobs = [(g, rc, cfg.eps, sched, flip, is_ising, seq) for seq in seqs]
            workers = _workers(len(jobs))
            if workers == 1:
                samples = [_replica(job) for job in jobs]
            else:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    samples = list(pool.map(_replica, jobs))
    report = SamplerReport(cfg.replicas, cfg.seed, sched, brute, phases)
    lines = [_format_config(s) for s in samples]
    lines.append(f"# model {cfg.model} eps {cfg.eps!r}")
    lines.extend("# " + line for line in report.lines(timings=cfg.timings))
    _write(cfg, lines)
    return EXIT_OK


def cmd_exact(cfg: RunConfig, table: bool = False) -> int:
    g, params = _load(cfg)
    dist = enumerate_distribution(g, params)
    lines = [f"# model {cfg.model} n {g.n} m {g.m}", f"log_z {dist.log_z!r}", f"z {dist.z!r}"]
    if table:
        for mask, prob in enumerate(dist.probs):
            lines.append(f"{_format_config(ids_of(mask))}\t{float(prob)!r}")
    _write(cfg, lines)
    return EXIT_OK


def instance_report(g: Graph, params) -> Report:
    """Identity checks for a single instance file."""
    report = Report()
    if isinstance(params, IsingParams):
        if params.lam.size and np.all(params.lam <= 1):
            report.extend(verify_partition_identity(g, params, label="instance"))
        rc, _ = _rc_view(params)
    else:
        rc = params
    if g.m <= 6 and g.m > 0:
        pi = enumerate_distribution(g, rc).probs
        P = transition_matrix(g, rc)
        flow = pi[:, None] * P
        report.add("detailed_balance[instance]", float(np.abs(flow - flow.T).max()), 0.0, 1e-12, relative=False)
    if 0 < g.m <= 10 and rc.lambda_max < 1:
        inf = influence_matrix(enumerate_distribution(g, rc))
        report.add_bound("influence_row[instance]", inf.norm_inf, 2.0 * (1.0 - rc.lambda_max) ** -2)
    if g.m <= 10 and rc.lam.size and np.all(rc.lam <= 1):
        report.extend(verify_sw_rc_convolution(g, rc, label="instance"))
    return report


def cmd_verify(cfg: RunConfig) -> int:
    unknown = [s for s in cfg.suites if s not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    lines: list[str] = []
    ok = True
    if cfg.instance is not None:
        g, params = _load(cfg)
        report = instance_report(g, params)
        lines.extend(report.lines())
        ok &= report.passed
    if cfg.instance is None or cfg.suites:
        for name, report in run_suites(cfg.suites or None, seed=cfg.seed).items():
            lines.extend(report.lines())
            lines.append(f"# suite {name} {'PASS' if report.passed else 'FAIL'} {len(report.checks)} checks")
            ok &= report.passed
    lines.append(f"# overall {'PASS' if ok else 'FAIL'}")
    _write(cfg, lines)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_couple(cfg: RunConfig, vertex: int | None, edge: int | None, runs: int) -> int:
    if (vertex is None) == (edge is None):
        raise UsageError("give exactly one of --vertex and --edge")
    if runs < 1:
        raise UsageError("--runs must be >= 1")
    g, params = _load(cfg)
    rc, _ = _rc_view(params)
    sw = rc_to_sw(rc)
    rng = np.random.default_rng(cfg.seed)
    if vertex is not None:
        if not 0 <= vertex < g.n:
            raise UsageError(f"vertex {vertex} out of range")
        coupler = GSWCoupler(g, sw)
        mean, stderr = estimate_coupling_independence(
            g, sw, -1, runs, rng, coupler=lambda r: coupler.couple(vertex, r)
        )
        bound = 1.0 / (4.0 * float(sw.eta.min()) ** 2)
        what = f"vertex {vertex} subgraph-world"
    else:
        if not 0 <= edge < g.m:
            raise UsageError(f"edge {edge} out of range")
        mean, stderr = estimate_coupling_independence(g, rc, edge, runs, rng, coupler=RCLiftCoupler(g, rc, edge))
        bound = 2.0 * (1.0 - rc.lambda_max) ** -2
        what = f"edge {edge} random-cluster"
    margin = 3.0 * stderr if math.isfinite(stderr) else 0.0
    ok = mean <= bound + margin
    lines = [
        f"# coupling {what} runs {runs} seed {cfg.seed}",
        f"mean {mean!r}",
        f"stderr {stderr!r}",
        f"bound {bound!r}",
        f"{'PASS' if ok else 'FAIL'} mean <= bound + 3 stderr",
    ]
    _write(cfg, lines)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bench(cfg: RunConfig, sizes: Sequence[int], ops: int, target: str, warmup: int) -> int:
    lines = [f"# bench {target} seed {cfg.seed} warmup {warmup}", CSV_HEADER]
    fn = bench_dynconn if target == "dynconn" else bench_glauber
    for i, n in enumerate(sizes):
        if n < 2:
            raise UsageError("bench sizes must be >= 2")
        rng = np.random.default_rng([cfg.seed, i])
        lines.append(fn(n, ops, rng, warmup=warmup).csv())
    _write(cfg, lines)
    return EXIT_OK


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isingfield", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, instance: str = "required"):
        if instance == "required":
            p.add_argument("instance", type=Path)
        elif instance == "optional":
            p.add_argument("instance", type=Path, nargs="?")
        p.add_argument("--model", choices=["ising", "rc"], default="rc")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=Path)

    p = sub.add_parser("sample", help="draw configurations from an instance")
    common(p)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--mode", choices=["paper", "practical"], default="practical")
    p.add_argument("--theta", type=float)
    p.add_argument("--tfd", type=int)
    p.add_argument("--tgd", type=int)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--timings", action="store_true", help="append wall-clock phases to the footer")

    p = sub.add_parser("exact", help="partition function by enumeration")
    common(p)
    p.add_argument("--table", action="store_true", help="dump every configuration with its probability")

    p = sub.add_parser("verify", help="run exact identity suites")
    common(p, "optional")
    p.add_argument("--suite", action="append", default=[], help=f"one of {', '.join(SUITES)}; repeatable")

    p = sub.add_parser("couple", help="Monte Carlo coupling discrepancy")
    common(p)
    p.add_argument("--vertex", type=int)
    p.add_argument("--edge", type=int)
    p.add_argument("--runs", type=int, default=10000)

    p = sub.add_parser("bench", help="per-operation timings on sparse random graphs (CSV)")
    p.add_argument("--sizes", type=int, nargs="+", default=[1000, 10000, 100000])
    p.add_argument("--ops", type=int, default=20000)
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--target", choices=["dynconn", "glauber"], default="glauber")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = RunConfig(
            command=args.command,
            instance=getattr(args, "instance", None),
            model=getattr(args, "model", "rc"),
            eps=getattr(args, "eps", 0.1),
            seed=args.seed,
            mode=getattr(args, "mode", "practical"),
            theta=getattr(args, "theta", None),
            t_fd=getattr(args, "tfd", None),
            t_gd=getattr(args, "tgd", None),
            replicas=getattr(args, "replicas", 1),
            out=args.out,
            suites=getattr(args, "suite", []),
            timings=getattr(args, "timings", False),
        )
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "exact":
            return cmd_exact(cfg, args.table)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "couple":
            return cmd_couple(cfg, args.vertex, args.edge, args.runs)
        return cmd_bench(cfg, args.sizes, args.ops, args.target, args.warmup)
    except ParseError as exc:
        print(f"isingfield: parse error: {exc}", file=sys.stderr)
    except (UsageError, InvalidInputError, DomainError, EnumerationCapError, DegenerateSystemError) as exc:
        print(f"isingfield: {type(exc).__name__}: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"isingfield: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
