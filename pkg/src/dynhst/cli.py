"""Command-line harness.

    dynhst embed POINTS            static labels and a distortion report
    dynhst dynamic TRACE --app A   stream a trace, feed an application, checkpoint
    dynhst mpc POINTS --local-space S
    dynhst oracle-check SUITE      randomized cross-checks against the oracles

Exit codes: 0 ok, 1 input error, 2 invariant violation, 3 capacity fault.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from .dynamic import DynamicConfig, DynamicEmbedding
from .embedding import LabelTable, compute_labels, evaluate_distortion
from .geometry import InputError, JLMap, Point, PointSet, Rng, diameter_bound, dist, make_schedule
from .grid_hash import GridHash
from .hst import PreconditionError
from .kmedian import TreeKMedian
from .matching import BLUE, RED, TreeMatching
from .mpc import CapacityError, run_embedding_mpc
from .traces import Op, TraceError, parse_trace, read_points
from .transport import TreeTransport
from .verification import SUITES, run_suite

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT, EXIT_CAPACITY = 0, 1, 2, 3


def _open(path: str):
    if path == "-":
        return sys.stdin
    try:
        return open(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True)


def _labels_json(table: LabelTable) -> dict[str, list[list[int]]]:
    return {str(p): [[lab.priority, lab.owner] for lab in table[p]] for p in table.ids()}


def _config(args, dim: int, coords: list[Sequence[float]]) -> DynamicConfig:
    """Fill --dim / --delta-max defaults from the input."""
    if args.dim is not None and args.dim != dim and coords:
        raise InputError(f"--dim {args.dim} does not match the input dimension {dim}")
    dim = args.dim or dim or 1
    delta = args.delta_max
    if delta is None:
        pts = coords
        if args.jl_dim and coords:
            pts = JLMap.sample(dim, args.jl_dim, Rng(args.seed)).apply(np.array(coords))
        delta = max(1.0, math.ceil(diameter_bound(pts)))
    return DynamicConfig(dim=dim, delta_max=float(delta), gamma=args.gamma, seed=args.seed,
                         jl_dim=args.jl_dim, rebuild_floor=args.rebuild_floor)


def _static_setup(args, points: list[Point]):
    """Config, (possibly projected) point set, schedule, grid and priority stream."""
    dim = points[0].dim if points else 0
    cfg = _config(args, dim, [p.coords for p in points])
    rng = Rng(cfg.seed)
    coords = np.array([p.coords for p in points], dtype=np.float64).reshape(len(points), cfg.dim)
    if cfg.jl_dim:
        coords = JLMap.sample(cfg.dim, cfg.jl_dim, rng).apply(coords).reshape(len(points), cfg.jl_dim)
    pts = PointSet([p.id for p in points], coords)
    schedule = make_schedule(cfg.delta_max, cfg.gamma, rng)
    grid = GridHash.sample(schedule, cfg.embed_dim, rng)
    return cfg, pts, schedule, grid, rng


def _manifest(command: str, cfg: DynamicConfig, schedule, grid) -> dict:
    return {
        "command": command,
        "config": {"dim": cfg.dim, "delta_max": cfg.delta_max, "gamma": cfg.gamma, "seed": cfg.seed,
                   "jl_dim": cfg.jl_dim, "rebuild_floor": cfg.rebuild_floor},
        "m": schedule.m,
        "beta": schedule.beta,
        "grid": grid.manifest(),
    }


# -- embed -----------------------------------------------------------------------------


def cmd_embed(args) -> int:
    with _open(args.input) as fh:
        points = read_points(fh)
    cfg, pts, schedule, grid, rng = _static_setup(args, points)
    table = compute_labels(pts, schedule, grid, rng.child("priority"), threads=args.threads)
    report = None
    if len(pts) >= 2 and args.trials > 0:
        report = evaluate_distortion(pts, cfg.delta_max, cfg.gamma, args.trials, rng.child("distortion"))
    if args.format == "tsv":
        print("# id\t" + "\t".join(f"owner{i}" for i in range(1, schedule.m + 1)))
        for p in table.ids():
            print(f"{p}\t" + "\t".join(str(lab.owner) for lab in table[p]))
        if report is not None:
            print(f"# distortion\tmin={report.min_ratio!r}\tmean={report.mean_ratio!r}"
                  f"\tmax={report.max_ratio!r}\tviolations={report.violations}")
    else:
        out = {"manifest": _manifest("embed", cfg, schedule, grid), "labels": _labels_json(table),
               "distortion": None if report is None else json.loads(report.to_json())}
        print(_dump(out))
    if report is not None and report.violations:
        return EXIT_INVARIANT
    return EXIT_OK


# -- dynamic ---------------------------------------------------------------------------


class _App:
    """Feeds trace operations to one tree application and reports on it."""

    kinds: tuple[str, ...] = ("I", "D")

    def __init__(self, emb: DynamicEmbedding):
        self.emb = emb

    def apply(self, op: Op) -> None:
        if op.kind == "I":
            self.emb.insert(op.points()[0])
        elif op.kind == "D":
            self.emb.delete(op.ids[0])

    def sync(self) -> None:
        pass

    def report(self) -> dict:
        return {}

    def check(self) -> None:
        self.emb.check_registration()


class _KMedianApp(_App):
    def __init__(self, emb, k: int):
        super().__init__(emb)
        self.km = TreeKMedian(emb.store, k=k)

    def sync(self) -> None:
        self.km.sync()

    def report(self) -> dict:
        active = self.emb.store.active_points()
        if not active:
            return {"k": self.km.k, "centers": [], "tree_cost": 0.0, "euclidean_cost": 0.0}
        centers = self.km.centers()
        orig = self.emb.original
        euclid = math.fsum(min(dist(orig[p], orig[c]) for c in centers) for p in active)
        return {"k": self.km.k, "centers": centers, "tree_cost": self.km.solution_cost(),
                "euclidean_cost": euclid}


class _BipartiteApp(_App):
    kinds = ("IP", "DP")

    def __init__(self, emb):
        super().__init__(emb)
        self.bm = TreeMatching(emb.store, "bipartite")

    def apply(self, op: Op) -> None:
        a, b = op.ids
        if op.kind == "IP":
            if a == b:
                raise InputError("a pair needs two distinct ids")
            pa, pb = op.points()
            self.emb.insert(pa)
            self.emb.insert(pb)
            self.bm.bm_insert(a, RED)
            self.bm.bm_insert(b, BLUE)
        else:
            for p in (a, b):
                if p not in self.bm.color:
                    raise InputError(f"point {p} is not in the matching instance")
            self.bm.bm_delete(a)
            self.bm.bm_delete(b)
            self.emb.delete(a)
            self.emb.delete(b)

    def sync(self) -> None:
        self.bm.sync()

    def report(self) -> dict:
        orig = self.emb.original
        pairs = sorted({(min(a, b), max(a, b)) for a, b in self.bm.mate.items()})
        return {"pairs": len(pairs), "tree_cost": self.bm.matching_cost(),
                "euclidean_cost": math.fsum(dist(orig[a], orig[b]) for a, b in pairs),
                "unmatched": len(self.bm.unmatched())}

    def check(self) -> None:
        super().check()
        self.bm.check_invariants()


class _GeneralApp(_App):
    def __init__(self, emb):
        super().__init__(emb)
        self.gm = TreeMatching(emb.store, "general")

    def apply(self, op: Op) -> None:
        if op.kind == "I":
            self.emb.insert(op.points()[0])
            self.gm.gm_insert(op.ids[0])
        else:
            self.emb.delete(op.ids[0])
            self.gm.gm_delete(op.ids[0])

    def sync(self) -> None:
        self.gm.sync()

    def report(self) -> dict:
        orig = self.emb.original
        pairs = sorted({(min(a, b), max(a, b)) for a, b in self.gm.mate.items()})
        return {"pairs": len(pairs), "tree_cost": self.gm.matching_cost(),
                "euclidean_cost": math.fsum(dist(orig[a], orig[b]) for a, b in pairs),
                "unmatched": len(self.gm.unmatched())}

    def check(self) -> None:
        super().check()
        self.gm.check_invariants()


class _TransportApp(_App):
    kinds = ("I", "D", "W")

    def __init__(self, emb):
        super().__init__(emb)
        self.tr = TreeTransport(emb.store)

    def apply(self, op: Op) -> None:
        if op.kind == "W":
            if op.ids[0] not in self.emb.active:
                raise InputError(f"point {op.ids[0]} is not active")
            self.tr.set_weight(op.ids[0], op.weight)
        elif op.kind == "D":
            self.emb.delete(op.ids[0])
            self.tr.set_weight(op.ids[0], 0)
        else:
            super().apply(op)

    def sync(self) -> None:
        self.tr.sync()

    def report(self) -> dict:
        balanced = self.tr.total == 0
        return {"total_weight": self.tr.total, "balanced": balanced,
                "tree_cost": self.tr.transport_cost() if balanced else None}

    def check(self) -> None:
        super().check()
        if self.tr.recompute_cost() != self.tr.cost:
            raise AssertionError("maintained transport cost drifted from a full recomputation")


def _make_app(name: str, emb: DynamicEmbedding) -> _App:
    if name == "none":
        return _App(emb)
    if name.startswith("kmedian"):
        _, _, k = name.partition(":")
        try:
            kk = int(k or "1")
        except ValueError:
            raise InputError(f"bad k in --app {name!r}") from None
        return _KMedianApp(emb, kk)
    if name == "emd":
        return _BipartiteApp(emb)
    if name == "match":
        return _GeneralApp(emb)
    if name == "transport":
        return _TransportApp(emb)
    raise InputError(f"unknown application {name!r}")


def cmd_dynamic(args) -> int:
    with _open(args.input) as fh:
        ops = list(parse_trace(fh))
    coords = [c for op in ops for c in op.coords]
    dims = {len(c) for c in coords}
    if len(dims) > 1:
        raise InputError("trace mixes point dimensions")
    cfg = _config(args, dims.pop() if dims else 0, coords)
    emb = DynamicEmbedding(cfg)
    app = _make_app(args.app, emb)
    events_out = None
    if args.events:
        emb.store.subscribe("event-log")
        events_out = open(args.events, "w")
    checkpoints = []

    def checkpoint(t: int) -> None:
        if args.check:
            app.check()
        row = {"update": t, "active": len(emb), "events": emb.stats.events, "epoch": emb.epoch}
        row.update(app.report())
        checkpoints.append(row)

    try:
        for t, op in enumerate(ops, start=1):
            if op.kind not in app.kinds:
                raise TraceError(op.line, f"operation {op.kind} is not valid for --app {args.app}")
            try:
                app.apply(op)
                app.sync()
            except TraceError:
                raise
            except InputError as exc:
                raise TraceError(op.line, str(exc)) from None
            if events_out is not None:
                for e in emb.store.drain("event-log"):
                    events_out.write(e.format() + "\n")
            if args.checkpoint_every and t % args.checkpoint_every == 0:
                checkpoint(t)
        if not checkpoints or checkpoints[-1]["update"] != len(ops):
            checkpoint(len(ops))
    finally:
        if events_out is not None:
            events_out.close()

    manifest = _manifest("dynamic", cfg, emb.schedule, emb.grid)
    manifest.update({"app": args.app, "epoch": emb.epoch})
    if args.format == "tsv":
        cols = list(checkpoints[0])
        print("\t".join(cols))
        for row in checkpoints:
            print("\t".join(_dump(row[c]) for c in cols))
    else:
        out = {"manifest": manifest, "checkpoints": checkpoints, "recourse": emb.stats.as_dict()}
        if args.labels:
            out["labels"] = _labels_json(emb.label_table())
        print(_dump(out))
    return EXIT_OK


# -- mpc ---------------------------------------------------------------------------------


def cmd_mpc(args) -> int:
    with _open(args.input) as fh:
        points = read_points(fh)
    cfg, pts, schedule, grid, rng = _static_setup(args, points)
    table, log = run_embedding_mpc(pts, schedule, grid, args.local_space, rng.child("priority"),
                                   slack=args.slack)
    want = compute_labels(pts, schedule, grid, rng.child("priority"), threads=args.threads)
    n = len(pts)
    machines = math.ceil(n / args.local_space) if n else 0
    bound = 8 * math.log(n) / math.log(args.local_space) if n > 1 else 0.0
    equal = table == want
    out = {"manifest": _manifest("mpc", cfg, schedule, grid), "n": n, "local_space": args.local_space,
           "machines": machines, "round_log": json.loads(log.to_json()), "round_bound": bound,
           "labels_equal": equal}
    if args.format == "tsv":
        print("n\tlocal_space\tmachines\trounds\tmax_load\ttotal_space\tlabels_equal")
        print(f"{n}\t{args.local_space}\t{machines}\t{log.rounds}\t{log.max_load}\t{log.total_space}\t{int(equal)}")
    else:
        print(_dump(out))
    return EXIT_OK if equal else EXIT_INVARIANT


# -- oracle-check ------------------------------------------------------------------------


def cmd_oracle_check(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = [run_suite(name, args.seed) for name in names]
    if args.format == "json":
        print(_dump([{"suite": r.name, "seed": r.seed, "checks": r.checks, "failures": r.failures,
                      "passed": r.passed, "detail": r.detail} for r in results]))
    else:
        for r in results:
            print(r.summary())
            for line in r.detail:
                print(f"  {line}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


# -- entry point ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gamma", type=float, default=2.0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--dim", type=int, default=None, help="input dimension (default: inferred)")
    common.add_argument("--delta-max", type=float, default=None,
                        help="diameter bound (default: bounding-box diagonal of the input)")
    common.add_argument("--jl-dim", type=int, default=0, help="random projection target, 0 disables")
    common.add_argument("--rebuild-floor", type=int, default=64)
    common.add_argument("--format", choices=("json", "tsv"), default="json")

    parser = argparse.ArgumentParser(prog="dynhst", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", parents=[common], help="static labels and distortion report")
    p.add_argument("input")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("dynamic", parents=[common], help="run an update trace")
    p.add_argument("input")
    p.add_argument("--app", default="none", help="none | kmedian:k | emd | match | transport")
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--events", default=None, help="write the event log to this file")
    p.add_argument("--labels", action="store_true", help="include the final label table")
    p.add_argument("--check", action="store_true", help="verify invariants at every checkpoint")
    p.set_defaults(func=cmd_dynamic)

    p = sub.add_parser("mpc", parents=[common], help="simulated parallel labels")
    p.add_argument("input")
    p.add_argument("--local-space", type=int, required=True)
    p.add_argument("--slack", type=float, default=4.0, help="multiplier on the per-round word cap")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_mpc)

    p = sub.add_parser("oracle-check", help="randomized cross-checks against brute force")
    p.add_argument("suite", help="one of: all, " + ", ".join(SUITES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "tsv"), default="tsv")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "checkpoint_every", 0) < 0:
            raise InputError("--checkpoint-every must be >= 0")
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity fault: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AssertionError, PreconditionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
