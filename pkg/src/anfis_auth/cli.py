"""Command line entry point.

Every subcommand writes into ``--out`` and prints nothing but the paths it
wrote, so reruns with the same inputs leave byte-identical files behind.
Failures exit with status 1 and a ``[stage]`` tagged message on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .anfis import load_model, save_model
from .config import Experiment, load_experiment
from .events import generate_trace, read_trace, write_trace
from .harness import (
    StageError,
    evaluate,
    graft_attack,
    report_json,
    run_experiment,
    summarize_log,
    train_model,
    training_sets,
)
from .pipeline import Mode, format_decision_log, parse_decision_log, run_trace

PROG = "anfis-auth"


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _experiment(args) -> Experiment:
    exp = _stage("config", load_experiment, args.config) if args.config else Experiment()
    if args.seed is not None:
        exp = replace(exp, profile=replace(exp.profile, seed=args.seed),
                      attacks=tuple(replace(a, seed=a.seed + args.seed) for a in exp.attacks))
    return exp


def _trace(args, exp: Experiment):
    path = args.trace or exp.trace_path
    if path:
        return _stage("ingest", read_trace, path)
    return _stage("generate", generate_trace, exp.profile)


def _write(out_dir, name, text) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise StageError("args", ValueError("missing " + ", ".join("--" + n for n in missing)))


def _splits(exp: Experiment, trace):
    origin = exp.origin(trace)
    return (origin, origin + int(exp.train_start_day * 86_400),
            origin + int(exp.test_start_day * 86_400))


def cmd_gen(args) -> list[str]:
    exp = _experiment(args)
    trace = _stage("generate", generate_trace, exp.profile)
    path = os.path.join(args.out, "trace.txt")
    os.makedirs(args.out, exist_ok=True)
    _stage("write", write_trace, trace, path)
    return [path]


def cmd_graft(args) -> list[str]:
    exp = _experiment(args)
    trace = _trace(args, exp)
    origin = exp.origin(trace)
    params = exp.pipeline.rank_params
    paths = []
    for entry in exp.attacks:
        grafted = _stage("graft", graft_attack, trace, entry.spec(origin), params)
        path = os.path.join(args.out, f"graft_{entry.name}.txt")
        os.makedirs(args.out, exist_ok=True)
        _stage("write", write_trace, grafted, path)
        paths.append(path)
    if not paths:
        raise StageError("graft", ValueError("config defines no [attack.*] sections"))
    return paths


def cmd_train(args) -> list[str]:
    exp = _experiment(args)
    trace = _trace(args, exp)
    origin, train_start, test_start = _splits(exp, trace)
    config = exp.pipeline
    sus, adv = _stage("graft", training_sets, config, trace, exp.attacks_for("train", origin))
    model, report, samples = _stage("train", train_model, config,
                                    (trace, train_start - 1, test_start - 1), sus, adv)
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.txt")
    _stage("write", save_model, model, model_path)
    counts = {str(k): sum(s.target == k for s in samples) for k in (1, 0, -1)}
    doc = {"final_rmse": report.final_rmse, "epochs_run": report.epochs_run,
           "converged": report.converged, "class_counts": counts}
    return [model_path, _write(args.out, "train.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")]


def cmd_run(args) -> list[str]:
    _need(args, "model")
    exp = _experiment(args)
    trace = _trace(args, exp)
    model = _stage("load", load_model, args.model)
    config = replace(exp.pipeline, mode=Mode.Deployment)
    windows, decisions = _stage("run", run_trace, config, trace, model)
    return [_write(args.out, "decisions.log", format_decision_log(windows, decisions))]


def cmd_eval(args) -> list[str]:
    _need(args, "model")
    exp = _experiment(args)
    trace = _trace(args, exp)
    origin, _, test_start = _splits(exp, trace)
    model = _stage("load", load_model, args.model)
    report = _stage("evaluate", evaluate, exp.pipeline, model, trace,
                    exp.attacks_for("test", origin), test_start)
    return [_write(args.out, "report.json", report_json(report))]


def cmd_report(args) -> list[str]:
    _need(args, "log")
    with open(args.log, encoding="utf-8") as fh:
        rows = _stage("report", parse_decision_log, fh.read())
    summary = _stage("report", summarize_log, rows)
    return [_write(args.out, "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")]


def cmd_experiment(args) -> list[str]:
    exp = _experiment(args)
    if args.trace:
        exp = replace(exp, trace_path=args.trace)
    run_experiment(exp, args.out)
    return [os.path.join(args.out, "report.json")]


COMMANDS = {
    "gen": (cmd_gen, "synthesize an owner trace"),
    "graft": (cmd_graft, "inject every configured attack into a trace"),
    "train": (cmd_train, "fit the ANFIS model on the training split"),
    "run": (cmd_run, "deployment replay producing a decision log"),
    "eval": (cmd_eval, "recognition rate and detection delay on the test split"),
    "report": (cmd_report, "summarize a decision log"),
    "experiment": (cmd_experiment, "train and evaluate end to end"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="experiment INI file")
        p.add_argument("--seed", type=int, help="profile seed; attack seeds are shifted by the same amount")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--trace", help="event trace to use instead of synthesizing one")
        p.add_argument("--model", help="trained model file")
        if name == "report":
            p.add_argument("--log", help="decision log to summarize")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        paths = COMMANDS[args.command][0](args)
    except StageError as exc:
        print(f"{PROG} {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG} {args.command}: [io] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0
