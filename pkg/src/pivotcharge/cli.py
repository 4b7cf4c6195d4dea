"""Command-line front end: ``pivotcharge {gen,run,sweep,report}``.

Exit codes for ``run``: 0 complete, 2 stalled, 1 usage or input error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io
from .config import RunConfig
from .engine import SCHEMES, SUMMARY_FIELDS, SchemeSpec, run_id_for, run_scheme, summarize
from .model import Scenario
from .stage2 import COMPLETE

log = logging.getLogger("pivotcharge")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seeds(values):
    out = []
    for v in values:
        if ".." in v:
            a, b = v.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(v))
    return out


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if getattr(args, "sample_every", None) is not None:
        cfg = cfg.replace("output", sample_every=args.sample_every)
    return cfg


def cmd_gen(args):
    sc = Scenario.generate(args.n, args.area, args.seed)
    io.save_scenario(args.out, sc)
    print(f"wrote {args.n} nodes to {args.out}")
    return 0


def cmd_run(args):
    if not Path(args.scenario).is_file():
        raise UsageError(f"scenario file not found: {args.scenario}")
    sc = io.load_scenario(args.scenario)
    res = run_scheme(sc, SchemeSpec(args.scheme, _config(args)))
    io.write_run_artifacts(res, args.out)
    print(f"{res.run_id}: {res.status} t_total={res.t_total:.4f}s "
          f"(stage1 {res.t_stage1:.4f}s, stage2 {res.t_stage2:.4f}s)")
    return 0 if res.status == COMPLETE else 2


def _sweep_job(job):
    scheme, n, seed, area, cfg_dict, out, artifacts = job
    sc = Scenario.generate(n, area, seed)
    res = run_scheme(sc, SchemeSpec(scheme, RunConfig.from_dict(cfg_dict)))
    runs = Path(out) / "runs"
    if artifacts:
        io.write_run_artifacts(res, runs / res.run_id)
    io.write_atomic(runs / f"{res.run_id}.json", io.dumps_json(res.summary()))
    return res.run_id


def _load_records(paths):
    return [json.loads(Path(p).read_text()) for p in paths]


def cmd_sweep(args):
    cfg = _config(args)
    out = Path(args.out)
    seeds = _seeds(args.seeds)
    grid = list(itertools.product(args.scheme, args.n, seeds))
    todo = [(s, n, sd) for s, n, sd in grid
            if not (out / "runs" / f"{run_id_for(s, n, sd)}.json").is_file()]
    if len(todo) < len(grid):
        log.info("resuming: %d of %d runs already done", len(grid) - len(todo), len(grid))
    jobs = [(s, n, sd, args.area, cfg.to_dict(), str(out), args.artifacts) for s, n, sd in todo]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            for rid in ex.map(_sweep_job, jobs):
                log.info("done %s", rid)
    else:
        for j in jobs:
            log.info("done %s", _sweep_job(j))
    records = _load_records(out / "runs" / f"{run_id_for(s, n, sd)}.json" for s, n, sd in grid)
    groups = [(s, n) for s in args.scheme for n in args.n]
    rows = summarize(records, groups=groups)
    io.write_summary_table(rows, out, SUMMARY_FIELDS)
    print(f"{len(grid)} runs, {len(rows)} summary rows -> {out}")
    return 0


def cmd_report(args):
    out = Path(args.out)
    paths = sorted((out / "runs").glob("*.json"))
    if not paths:
        raise UsageError(f"no run records under {out / 'runs'}")
    records = sorted(_load_records(paths), key=lambda r: (r["scheme"], r["n_nodes"], r["seed"]))
    rows = summarize(records)
    io.write_summary_table(rows, out, SUMMARY_FIELDS)
    for r in rows:
        print(f"{r['scheme']:8s} N={r['n_nodes']:4d} runs={r['n_runs']:3d} "
              f"t_total mean={r['t_total_mean']:.3f}s complete={r['completion_rate']:.2f}")
    return 0


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="pivotcharge", description="Two-stage RF charging simulator.",
                formatter_class=fmt)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a random scenario file", formatter_class=fmt)
    g.add_argument("--n", type=int, required=True, help="number of nodes")
    g.add_argument("--area", type=float, default=100.0, help="square side in meters")
    g.add_argument("--seed", type=int, default=0, help="PCG64 placement seed")
    g.add_argument("--out", required=True, help="scenario JSON path")
    g.set_defaults(func=cmd_gen)

    def common(q):
        q.add_argument("--config", default=None, help="run configuration JSON (defaults if omitted)")
        q.add_argument("--sample-every", type=int, default=None,
                       help="steps between series samples (config default 100)")

    r = sub.add_parser("run", help="run one scheme on one scenario", formatter_class=fmt)
    r.add_argument("--scenario", required=True, help="scenario JSON path")
    r.add_argument("--scheme", choices=SCHEMES, default="pivot", help="charging scheme")
    r.add_argument("--out", required=True, help="output directory")
    common(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a (scheme x n x seed) grid", formatter_class=fmt)
    s.add_argument("--scheme", nargs="+", choices=SCHEMES, default=list(SCHEMES),
                   help="schemes to run")
    s.add_argument("--n", nargs="+", type=int, default=[100, 150, 200], help="node counts")
    s.add_argument("--seeds", nargs="+", default=["1..5"], help="seeds; 'a..b' is inclusive")
    s.add_argument("--area", type=float, default=100.0, help="square side in meters")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    s.add_argument("--artifacts", action="store_true", help="also write per-run CSV/JSON artifacts")
    common(s)
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="re-aggregate run records in a sweep directory",
                        formatter_class=fmt)
    rp.add_argument("--out", required=True, help="sweep output directory")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"pivotcharge: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
