"""Command-line front end.

    routine-miner mine --input log.jsonl --output-dir out [--threshold T | --sweep lo:hi:step] [--svg]
    routine-miner sweep --input log.jsonl --output-dir out
    routine-miner baseline --input log.jsonl --output-dir out [--eps E --min-pts M --time-weight W]
    routine-miner synth --seed 3 --output-dir out   (or --spec spec.json)
    routine-miner eval --found out/patterns.json --truth out/truth.json
    routine-miner histogram --patterns out/patterns.json [--svg]
    routine-miner timeline --patterns out/patterns.json --grid out/grid.json

Every command writes ``manifest.json`` (the only file carrying timestamps)
and ``config.txt`` (the effective configuration) next to its outputs.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import platform
import sys
import time
from pathlib import Path

from . import __version__
from .baseline import BaselineConfig, baseline_patterns
from .config import ConfigError, format_config, load_config, resolve
from .distance import distance_matrix
from .errors import RoutineMinerError
from .mds import embed
from .miner import MinerConfig, PatternSet, mine
from .model import IngestConfig, NodeGrid, build_nodes, parse_concept_log, write_concept_log
from .report import histogram_svg, sweep_svg, timeline_svg, write_histogram_csv
from .scoring import score_patterns, sweep_threshold, write_sweep_csv
from .synth import SynthSpec, GroundTruth, dump_truth, evaluate, generate, random_spec


def _versions() -> dict:
    import matplotlib
    import numpy
    import scipy

    return {
        "routine_miner": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
    }


class Run:
    """Bookkeeping for one command: outputs, timings, manifest."""

    def __init__(self, command: str, out_dir: Path, cfg: dict, inputs: dict):
        self.command = command
        self.out = out_dir
        self.cfg = cfg
        self.inputs = inputs
        self.outputs: list[str] = []
        self.timings: dict[str, float] = {}
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat()
        self._t0 = time.perf_counter()
        out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def write_text(self, name: str, text: str) -> Path:
        p = self.path(name)
        p.write_text(text)
        return p

    def timed(self, label: str, fn, *a, **kw):
        t = time.perf_counter()
        res = fn(*a, **kw)
        self.timings[label] = time.perf_counter() - t
        return res

    def finish(self) -> None:
        self.write_text("config.txt", format_config(self.cfg))
        self.timings["total"] = time.perf_counter() - self._t0
        cfg = {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in self.cfg.items()}
        manifest = {
            "command": self.command,
            "inputs": self.inputs,
            "config": cfg,
            "versions": _versions(),
            "outputs": sorted(set(self.outputs)) + ["manifest.json"],
            "started_at": self.started,
            "timings_s": self.timings,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _read_log(path: str):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input not found: {p}")
    with p.open() as fh:
        return parse_concept_log(fh)


def _read_json(path: str, what: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise RoutineMinerError(f"{p}: invalid JSON ({exc})") from None


def _grid(cfg: dict, path: str) -> NodeGrid:
    ingest = IngestConfig(
        slot_minutes=cfg["slot_minutes"],
        object_min_count=cfg["object_min_count"],
        object_conf_min=cfg["object_conf_min"],
        frq=cfg["frq"],
    )
    return build_nodes(_read_log(path), ingest)


def _miner_config(cfg: dict) -> MinerConfig:
    lo, hi, step = cfg["sweep"]
    return MinerConfig(
        K=cfg["K"],
        sigma=cfg["sigma"],
        T=cfg["threshold"],
        sweep_range=(lo, hi),
        sweep_step=step,
        min_pattern_nodes=cfg["min_pattern_nodes"],
        min_pattern_days=cfg["min_pattern_days"],
        min_silhouette=cfg["min_silhouette"],
        max_patterns=cfg["max_patterns"],
        frq=cfg["frq"],
        reembed=cfg["reembed"],
    )


def cmd_mine(args, cfg: dict, force_sweep: bool = False) -> int:
    run = Run(args.command, Path(args.output_dir), cfg, {"input": args.input})
    grid = run.timed("ingest", _grid, cfg, args.input)
    D = run.timed("distance", distance_matrix, grid)
    E = run.timed("embed", embed, D)
    mcfg = _miner_config(cfg)

    if mcfg.T is None or force_sweep:
        res = run.timed("sweep", sweep_threshold, grid, D, E, mcfg)
        ps, report, table = res.patterns, res.report, res.table
    else:
        ps = run.timed("mine", mine, grid, D, E, mcfg)
        report = score_patterns(ps, grid, D, mcfg.frq)
        table = [(mcfg.T, report.sc)]
        report.sweep = table

    run.write_text("grid.json", json.dumps(grid.to_json(), indent=2, sort_keys=True) + "\n")
    run.write_text("patterns.json", ps.dumps())
    run.write_text("scores.json", report.dumps())
    with run.path("sweep.csv").open("w") as fh:
        write_sweep_csv(table, fh)
    with run.path("histogram.csv").open("w") as fh:
        write_histogram_csv(ps, fh)
    if cfg["svg"]:
        timeline_svg(ps, grid, run.path("timeline.svg"))
        histogram_svg(ps, run.path("histogram.svg"))
        sweep_svg(table, run.path("sweep.svg"), report.threshold)
    run.finish()
    print(f"T={report.threshold} patterns={len(ps.patterns)} unassigned={len(ps.unassigned)} "
          f"sl={report.silhouette:.4f} t_rpr={report.t_rpr:.4f} sc={report.sc:.4f}")
    return 0


def cmd_sweep(args, cfg: dict) -> int:
    cfg = dict(cfg, threshold=None)
    return cmd_mine(args, cfg, force_sweep=True)


def cmd_baseline(args, cfg: dict) -> int:
    run = Run("baseline", Path(args.output_dir), cfg, {"input": args.input})
    grid = run.timed("ingest", _grid, cfg, args.input)
    D = distance_matrix(grid)
    bcfg = BaselineConfig(eps=cfg["eps"], min_pts=cfg["min_pts"], time_weight=cfg["time_weight"])
    ps = run.timed("dbscan", baseline_patterns, grid, bcfg)
    report = score_patterns(ps, grid, D, cfg["frq"])
    run.write_text("grid.json", json.dumps(grid.to_json(), indent=2, sort_keys=True) + "\n")
    run.write_text("patterns.json", ps.dumps())
    run.write_text("scores.json", report.dumps())
    with run.path("histogram.csv").open("w") as fh:
        write_histogram_csv(ps, fh)
    if cfg["svg"]:
        timeline_svg(ps, grid, run.path("timeline.svg"))
        histogram_svg(ps, run.path("histogram.svg"))
    run.finish()
    print(f"eps={bcfg.eps} min_pts={bcfg.min_pts} patterns={len(ps.patterns)} "
          f"unassigned={len(ps.unassigned)} sl={report.silhouette:.4f}")
    return 0


def cmd_synth(args, cfg: dict) -> int:
    if args.spec:
        spec = SynthSpec.from_json(_read_json(args.spec, "spec"))
    else:
        spec = random_spec(cfg["seed"])
    run = Run("synth", Path(args.output_dir), cfg, {"spec": args.spec})
    records, truth = run.timed("generate", generate, spec)
    with run.path("log.jsonl").open("w") as fh:
        write_concept_log(records, fh)
    run.write_text("truth.json", dump_truth(truth))
    run.write_text("spec.json", json.dumps(spec.to_json(), indent=2, sort_keys=True) + "\n")
    run.finish()
    print(f"records={len(records)} planted={len(spec.planted)} days={spec.n_days}")
    return 0


def cmd_eval(args, cfg: dict) -> int:
    found = PatternSet.from_json(_read_json(args.found, "pattern file"))
    truth = GroundTruth.from_json(_read_json(args.truth, "truth file"))
    rep = evaluate(found, truth)
    text = json.dumps(rep.to_json(), indent=2, sort_keys=True) + "\n"
    if args.output_dir:
        run = Run("eval", Path(args.output_dir), cfg, {"found": args.found, "truth": args.truth})
        run.write_text("eval.json", text)
        run.finish()
    print(f"macro_f1={rep.macro_f1:.4f}")
    return 0


def cmd_histogram(args, cfg: dict) -> int:
    ps = PatternSet.from_json(_read_json(args.patterns, "pattern file"))
    out = Path(args.output_dir or Path(args.patterns).parent)
    run = Run("histogram", out, cfg, {"patterns": args.patterns})
    with run.path("histogram.csv").open("w") as fh:
        write_histogram_csv(ps, fh)
    if cfg["svg"]:
        histogram_svg(ps, run.path("histogram.svg"))
    run.finish()
    return 0


def cmd_timeline(args, cfg: dict) -> int:
    ps = PatternSet.from_json(_read_json(args.patterns, "pattern file"))
    if args.grid:
        grid = NodeGrid.from_json(_read_json(args.grid, "grid file"))
    elif args.input:
        grid = _grid(cfg, args.input)
    else:
        raise ConfigError("timeline needs --grid or --input")
    out = Path(args.output_dir or Path(args.patterns).parent)
    run = Run("timeline", out, cfg, {"patterns": args.patterns, "grid": args.grid, "input": args.input})
    timeline_svg(ps, grid, run.path("timeline.svg"))
    run.finish()
    return 0


def _sweep_arg(s: str):
    from .config import _sweep

    try:
        return _sweep(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--output-dir", "-o", help="directory for outputs")
    common.add_argument("--svg", action="store_const", const=True, default=None, help="also render SVG figures")

    ingest = argparse.ArgumentParser(add_help=False)
    ingest.add_argument("--input", "-i", required=True, help="concept log (JSON lines)")
    ingest.add_argument("--slot-minutes", type=int)
    ingest.add_argument("--frq", type=float, help="camera frames per minute")

    mining = argparse.ArgumentParser(add_help=False)
    mining.add_argument("--sigma", type=float)
    mining.add_argument("--K", type=float, help="variance cap for growth")
    mining.add_argument("--min-pattern-nodes", type=int)
    mining.add_argument("--min-pattern-days", type=int)
    mining.add_argument("--min-silhouette", type=float)
    mining.add_argument("--max-patterns", type=int)

    p = argparse.ArgumentParser(prog="routine-miner", description="Discover routine patterns in concept-labelled lifelogs.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mine", parents=[common, ingest, mining], help="mine patterns")
    g = m.add_mutually_exclusive_group()
    g.add_argument("--threshold", type=float, help="fixed first-derivative threshold")
    g.add_argument("--sweep", type=_sweep_arg, help="pick the threshold over lo:hi:step")

    s = sub.add_parser("sweep", parents=[common, ingest, mining], help="threshold sweep")
    s.add_argument("--sweep", type=_sweep_arg, help="lo:hi:step")

    b = sub.add_parser("baseline", parents=[common, ingest], help="DBSCAN comparison")
    b.add_argument("--eps", type=float)
    b.add_argument("--min-pts", type=int)
    b.add_argument("--time-weight", type=float)

    y = sub.add_parser("synth", parents=[common], help="generate a synthetic log")
    y.add_argument("--spec", help="SynthSpec JSON; omitted means a random spec from --seed")
    y.add_argument("--seed", type=int)

    e = sub.add_parser("eval", parents=[common], help="score patterns against ground truth")
    e.add_argument("--found", required=True)
    e.add_argument("--truth", required=True)

    h = sub.add_parser("histogram", parents=[common], help="days-of-occurrence per pattern")
    h.add_argument("--patterns", required=True)

    t = sub.add_parser("timeline", parents=[common], help="day x slot pattern map (SVG)")
    t.add_argument("--patterns", required=True)
    t.add_argument("--grid", help="grid.json written by mine")
    t.add_argument("--input", help="concept log, used when --grid is absent")
    t.add_argument("--slot-minutes", type=int)
    return p


COMMANDS = {
    "mine": cmd_mine,
    "sweep": cmd_sweep,
    "baseline": cmd_baseline,
    "synth": cmd_synth,
    "eval": cmd_eval,
    "histogram": cmd_histogram,
    "timeline": cmd_timeline,
}

NEEDS_OUTPUT = {"mine", "sweep", "baseline", "synth"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in NEEDS_OUTPUT and not args.output_dir:
            raise ConfigError(f"{args.command} needs --output-dir")
        cli = {k: v for k, v in vars(args).items() if v is not None}
        cfg = resolve(cli, load_config(args.config))
        if "sweep" in cli:
            cfg["threshold"] = None
        return COMMANDS[args.command](args, cfg)
    except (RoutineMinerError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
