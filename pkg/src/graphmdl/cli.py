"""Command line entry point.

Subcommands: aggregate, tune, eval, synth, sample, pipeline. Every run
writes a manifest next to its output; ``--check-manifest FILE`` replays a
run into a scratch directory and compares output hashes.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver
timeout (heuristic output still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .aggregate import VARIANTS, AggregationConfig, build_problem, materialize
from .exceptions import ConfigError, DataError, SolverTimeoutError
from .graph import Graph
from .io import (
    dumps_json,
    get_dialect,
    graph_to_dict,
    parse_samples,
    read_graph,
    read_graphs,
    read_samples,
    sampleset_from_dict,
    write_graph,
    write_samples,
)
from .llm import ChatSampler, PromptSpec, SamplerConfig
from .metrics import TASKS, evaluate, evaluate_corpus
from .pipeline import PipelineConfig, run_pipeline, summarize, write_csv
from .pool import build_pool
from .solver import solve, to_lp_format
from .synth import NoiseModel, corrupt, generate_truth
from .tuning import LabeledInstance, parse_grid, score_surface_csv, tune

logger = logging.getLogger("graphmdl")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_TIMEOUT = 0, 2, 3, 4
MANIFEST_NAME = "manifest.json"


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """Collects inputs and outputs of one command for its manifest."""

    def __init__(self):
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}

    def input(self, path):
        p = Path(path)
        if p.is_dir():
            for f in sorted(p.rglob("*")):
                if f.is_file() and f.name != MANIFEST_NAME:
                    self.inputs[str(f.resolve())] = sha256_file(f)
        else:
            self.inputs[str(p.resolve())] = sha256_file(p)
        return path

    def output(self, role: str, path):
        self.outputs[role] = str(path)
        return path


def _load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _agg_config(args) -> AggregationConfig:
    return AggregationConfig(
        lambda1=args.lambda1, lambda2=args.lambda2, variant=args.variant,
        dag_constraints=not args.no_dag, jaccard_threshold=args.jaccard_threshold,
        seed=args.seed, engine=args.engine, time_limit=args.time_limit,
    )


def _read_sample_input(path, dialect):
    data = _load_json(path)
    if isinstance(data, dict) and "scripts" in data:
        return parse_samples(data["scripts"], get_dialect(dialect), data.get("meta"))
    return sampleset_from_dict(data)


# --- commands -----------------------------------------------------------------

def cmd_aggregate(args, run: Run) -> int:
    cfg = _agg_config(args)
    samples = _read_sample_input(run.input(args.samples), args.dialect)
    pool = build_pool(samples, cfg.jaccard_threshold)
    problem = build_problem(pool, cfg)
    if args.dump_pool:
        Path(run.output("dump_pool", args.dump_pool)).write_text(dumps_json(pool.to_dict()), encoding="utf-8")
    if args.dump_ilp:
        Path(run.output("dump_ilp", args.dump_ilp)).write_text(to_lp_format(problem), encoding="utf-8")
    code = EXIT_OK
    try:
        sel = solve(problem, cfg.engine, time_limit=cfg.time_limit)
    except SolverTimeoutError as exc:
        logger.warning("solver timed out; writing heuristic selection")
        sel, code = exc.selection, EXIT_TIMEOUT
    graph = materialize(pool, sel, cfg)
    graph.meta["rejected_samples"] = len(samples.rejects)
    write_graph(graph, run.output("out", args.out))
    logger.info("aggregate: %d nodes, %d edges, objective %.6f (%s)",
                len(graph.nodes), len(graph.edges), sel.objective, sel.certificate)
    return code


def _load_training_dir(path, run: Run) -> list[LabeledInstance]:
    root = Path(path)
    if not root.is_dir():
        raise DataError(f"{root} is not a directory")
    instances = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        gold = next((sub / n for n in ("gold.json", "truth.json") if (sub / n).exists()), None)
        if gold is None or not (sub / "samples.json").exists():
            logger.warning("skipping %s: needs samples.json and gold.json/truth.json", sub)
            continue
        instances.append(LabeledInstance(read_samples(run.input(sub / "samples.json")),
                                         read_graph(run.input(gold))))
    return instances


def cmd_tune(args, run: Run) -> int:
    instances = _load_training_dir(args.train, run)
    cfg = AggregationConfig(variant=args.variant, dag_constraints=not args.no_dag,
                            jaccard_threshold=args.jaccard_threshold, engine=args.engine)
    result = tune(instances, parse_grid(args.grid), args.metric, cfg)
    Path(run.output("out", args.out)).write_text(dumps_json(result.to_dict()), encoding="utf-8")
    if args.surface_csv:
        score_surface_csv(result, run.output("surface_csv", args.surface_csv))
    logger.info("tune: lambda1=%s lambda2=%s score=%.4f", result.best_lambda1, result.best_lambda2,
                result.best_score)
    return EXIT_OK


def cmd_eval(args, run: Run) -> int:
    preds = read_graphs(run.input(args.pred))
    golds = read_graphs(run.input(args.gold))
    kwargs = dict(typed_r50=not args.r50_untyped, overlap_denominator=args.overlap_denominator,
                  ged_mode=args.ged_mode)
    if len(preds) == 1 and len(golds) == 1:
        report = evaluate(preds[0], golds[0], args.task, **kwargs)
    else:
        report = evaluate_corpus(preds, golds, args.task, **kwargs)
    out = {"task": args.task, **report.to_dict()}
    Path(run.output("out", args.out)).write_text(dumps_json(out), encoding="utf-8")
    return EXIT_OK


def cmd_synth(args, run: Run) -> int:
    noise = NoiseModel.from_dict(_load_json(run.input(args.noise))) if args.noise else NoiseModel()
    noise = replace(noise, seed=args.seed, allow_cycles=args.allow_cycles or noise.allow_cycles)
    truth = generate_truth(args.nodes, args.density, args.seed)
    samples = corrupt(truth, noise, args.t)
    out = Path(run.output("out", args.out))
    out.mkdir(parents=True, exist_ok=True)
    write_graph(truth, out / "truth.json")
    write_samples(samples, out / "samples.json")
    return EXIT_OK


def cmd_sample(args, run: Run) -> int:
    spec = PromptSpec.from_dict(_load_json(run.input(args.prompt_spec)))
    cfg = SamplerConfig.from_dict(_load_json(run.input(args.config)))
    samples = ChatSampler(cfg).sample_graphs(spec, args.dialect)
    write_samples(samples, run.output("out", args.out))
    logger.info("sample: %d parsed, %d rejected", samples.T, len(samples.rejects))
    return EXIT_OK


def cmd_pipeline(args, run: Run) -> int:
    cfg = PipelineConfig.from_dict(_load_json(run.input(args.config)))
    rows = run_pipeline(cfg, n_jobs=args.jobs)
    out = Path(run.output("out", args.out))
    out.mkdir(parents=True, exist_ok=True)
    write_csv(rows, out / "results.csv", ["variant", "T", "seed", "metric", "value"])
    write_csv(summarize(rows), out / "summary.csv", ["variant", "T", "metric", "mean", "std", "n"])
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def _add_agg_flags(p, with_lambdas=True):
    if with_lambdas:
        p.add_argument("--lambda1", type=float, default=0.7)
        p.add_argument("--lambda2", type=float, default=0.7)
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.add_argument("--no-dag", action="store_true", help="drop the acyclicity constraint")
    p.add_argument("--jaccard-threshold", type=float, default=0.5)
    p.add_argument("--engine", choices=["lazy", "closure"], default="lazy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphmdl", description="MDL consensus of graph samples")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--check-manifest", metavar="FILE",
                        help="replay the run recorded in FILE and verify output hashes")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("aggregate", help="consensus graph of a sample file")
    p.add_argument("--samples", required=True)
    _add_agg_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=None, help="seconds for branch and bound")
    p.add_argument("--dialect", default=None, help="builtin name or JSON file, for script samples")
    p.add_argument("--dump-pool", default=None)
    p.add_argument("--dump-ilp", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("tune", help="leave-one-out selection of lambda1/lambda2")
    p.add_argument("--train", required=True, help="directory of instance subdirectories")
    p.add_argument("--grid", default="0:1:0.1")
    p.add_argument("--metric", choices=["edge_f1", "c_f1", "r50_f1"], default="edge_f1")
    _add_agg_flags(p, with_lambdas=False)
    p.add_argument("--surface-csv", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("eval", help="score predictions against gold graphs")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--r50-untyped", action="store_true", help="R50 ignores relation type")
    p.add_argument("--overlap-denominator", choices=["gold", "pred", "union"], default="gold")
    p.add_argument("--ged-mode", choices=["auto", "exact", "greedy"], default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="synthetic truth DAG and noisy samples")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--noise", default=None, help="JSON noise model")
    p.add_argument("--t", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-cycles", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="draw graph samples from a chat-completion endpoint")
    p.add_argument("--prompt-spec", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--dialect", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("pipeline", help="synth -> aggregate -> eval sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


# --- manifests ----------------------------------------------------------------

def _output_hashes(outputs: dict[str, str]) -> dict[str, dict[str, str]]:
    hashes = {}
    for role, path in outputs.items():
        p = Path(path)
        if p.is_dir():
            hashes[role] = {str(f.relative_to(p)): sha256_file(f) for f in sorted(p.rglob("*"))
                            if f.is_file() and f.name != MANIFEST_NAME}
        elif p.exists():
            hashes[role] = {p.name: sha256_file(p)}
    return hashes


def _manifest_path(args) -> Path:
    out = Path(args.out)
    if out.is_dir():
        return out / MANIFEST_NAME
    return out.with_name(out.name + ".manifest.json")


def _config_snapshot(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "check_manifest", "verbose")}


def write_manifest(args, run: Run, started: float, code: int) -> Path:
    manifest = {
        "command": args.command,
        "config": _config_snapshot(args),
        "inputs": run.inputs,
        "outputs": {role: str(Path(p).resolve()) for role, p in run.outputs.items()},
        "output_hashes": _output_hashes(run.outputs),
        "exit_code": code,
        "tool_version": __version__,
        "seed": getattr(args, "seed", None),
        "wall_time_s": round(time.time() - started, 3),
    }
    path = _manifest_path(args)
    path.write_text(dumps_json(manifest), encoding="utf-8")
    return path


def check_manifest(path) -> bool:
    """Re-run the recorded command with outputs in a scratch directory and
    compare every output hash. Inputs must be unchanged."""
    manifest = _load_json(path)
    for inp, digest in manifest["inputs"].items():
        if not Path(inp).exists() or sha256_file(inp) != digest:
            logger.error("input changed or missing: %s", inp)
            return False
    parser = build_parser()
    args = argparse.Namespace(**manifest["config"])
    args.func = parser._subparsers._group_actions[0].choices[manifest["command"]].get_default("func")
    with tempfile.TemporaryDirectory() as tmp:
        for role, orig in manifest["outputs"].items():
            setattr(args, role, str(Path(tmp) / role / Path(orig).name))
            (Path(tmp) / role).mkdir()
        run = Run()
        args.func(args, run)
        replayed = _output_hashes(run.outputs)
    ok = replayed == manifest["output_hashes"]
    if not ok:
        for role in manifest["output_hashes"]:
            if replayed.get(role) != manifest["output_hashes"][role]:
                logger.error("output %r differs on replay", role)
    return ok


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.check_manifest:
            ok = check_manifest(args.check_manifest)
            logger.info("manifest replay %s", "matches" if ok else "DIFFERS")
            return EXIT_OK if ok else EXIT_DATA
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_CONFIG
        started = time.time()
        run = Run()
        code = args.func(args, run)
        write_manifest(args, run, started, code)
        return code
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        logger.error("data error: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
