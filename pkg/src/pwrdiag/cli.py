"""Command-line entry points: simulate, train, diagnose, evaluate, serve.

Every subcommand is a thin shell over the library: it parses arguments,
moves files, and prints results; numerical work stays in the library
modules.  Exit codes: 0 success, 1 any error, 2 training finished
without reaching its error goal (the model file is still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import pipeline, plantsim, rbfn
from .errors import PwrDiagError
from .plantsim import FaultLabel

_TRAIN_CONFIG_KEYS = {
    "mse_goal", "spread", "max_neurons", "neurons_per_step", "max_epochs",
    "ridge", "half_response_spread",
}
_PIPELINE_CONFIG_KEYS = {"variance_cutoff", "split_seed", "fractions"}


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _cmd_simulate(args: argparse.Namespace) -> int:
    try:
        spec = plantsim.load_scenario(args.scenario)
    except FileNotFoundError:
        return _fail(f"scenario file not found: {args.scenario}")
    except json.JSONDecodeError as exc:
        return _fail(f"{args.scenario}: invalid JSON ({exc})")
    except PwrDiagError as exc:
        return _fail(str(exc))
    if args.seed is not None:
        spec = replace(spec, rng_seed=args.seed)
    try:
        record = plantsim.run_scenario(spec)
        plantsim.write_record_csv(record, args.output)
    except PwrDiagError as exc:
        return _fail(str(exc))
    print(f"wrote {record.n_frames} frames "
          f"({spec.fault_kind.value}, {spec.severity_percent:g}%) "
          f"to {args.output}")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _split_train_config(doc: dict) -> tuple[rbfn.RbfnConfig, dict]:
    unknown = set(doc) - _TRAIN_CONFIG_KEYS - _PIPELINE_CONFIG_KEYS
    if unknown:
        raise PwrDiagError(f"unknown training config keys: {sorted(unknown)}")
    net = {k: v for k, v in doc.items() if k in _TRAIN_CONFIG_KEYS}
    rest = {k: v for k, v in doc.items() if k in _PIPELINE_CONFIG_KEYS}
    if "fractions" in rest:
        rest["fractions"] = tuple(rest["fractions"])
    cfg = rbfn.RbfnConfig(**net)
    cfg.validate()
    return cfg, rest


def _cmd_train(args: argparse.Namespace) -> int:
    try:
        corpus = plantsim.read_corpus_csv(args.corpus)
    except FileNotFoundError:
        return _fail(f"corpus file not found: {args.corpus}")
    except PwrDiagError as exc:
        return _fail(str(exc))

    cfg = None
    extra: dict = {}
    if args.config is not None:
        try:
            cfg, extra = _split_train_config(_load_json(args.config))
        except FileNotFoundError:
            return _fail(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            return _fail(f"{args.config}: invalid JSON ({exc})")
        except (PwrDiagError, TypeError) as exc:
            return _fail(str(exc))
    if args.seed is not None:
        extra["split_seed"] = args.seed

    try:
        model = pipeline.train_diagnoser(corpus, cfg, **extra)
    except PwrDiagError as exc:
        return _fail(str(exc))

    pipeline.save_model(model, args.output)
    metrics_path = Path(args.output).with_suffix(".metrics.json")
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(pipeline.metrics_to_json(model.metrics), fh, indent=2)
        fh.write("\n")

    trace = model.trace
    print(f"stop_reason {trace.stop_reason.value}: "
          f"mse {trace.final_mse:.6g} with {model.network.hidden_count} "
          f"hidden neurons in {trace.wall_time_s:.2f} s "
          f"({len(trace.steps) - 1} growth steps)")
    print(f"regression_r {model.metrics.regression_r}")
    print(f"wrote {args.output} and {metrics_path}")
    if trace.stop_reason is not rbfn.StopReason.GOAL_MET:
        print(f"warning: error goal {trace.final_mse:.3g} > "
              f"{(cfg or rbfn.RbfnConfig()).mse_goal:g} not reached "
              f"({trace.stop_reason.value})", file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------

def _cmd_diagnose(args: argparse.Namespace) -> int:
    try:
        model = pipeline.load_model(args.model)
    except FileNotFoundError:
        return _fail(f"model file not found: {args.model}")
    except PwrDiagError as exc:
        return _fail(str(exc))
    try:
        telemetry = plantsim.read_corpus_csv(args.telemetry)
    except FileNotFoundError:
        return _fail(f"telemetry file not found: {args.telemetry}")
    except PwrDiagError as exc:
        return _fail(str(exc))

    if tuple(telemetry.channel_order) != tuple(model.channel_order):
        theirs = set(telemetry.channel_order)
        ours = set(model.channel_order)
        print("error: telemetry channel order does not match the model",
              file=sys.stderr)
        if theirs - ours:
            print(f"  unexpected channels: {sorted(theirs - ours)}",
                  file=sys.stderr)
        if ours - theirs:
            print(f"  missing channels: {sorted(ours - theirs)}",
                  file=sys.stderr)
        if theirs == ours:
            print("  same channels, different order", file=sys.stderr)
        return 1

    frames = telemetry.features
    if args.window is not None:
        frames = frames[-args.window:]
    try:
        decision = pipeline.diagnose(model, frames)
    except PwrDiagError as exc:
        return _fail(str(exc))

    print(json.dumps({
        "size_percent": decision.size_percent,
        "location_code": decision.location_code,
        "location_name": decision.location_name,
        "raw_output": [float(x) for x in decision.raw_output],
        "window_frames": decision.window_frames,
    }))
    print(f"{decision.location_name}: size {decision.size_percent:.2f}% "
          f"over {decision.window_frames} frames "
          f"(raw {decision.raw_output[0]:.3f}, {decision.raw_output[1]:.3f})")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def _cases_from_corpus(ds) -> list[tuple[np.ndarray, FaultLabel]]:
    cases = []
    for run in np.unique(ds.scenario_ids):
        mask = ds.scenario_ids == run
        label = FaultLabel(float(ds.label_size[mask][0]),
                          int(ds.label_loc[mask][0]))
        cases.append((ds.features[mask], label))
    return cases


def _cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        model = pipeline.load_model(args.model)
        corpus = plantsim.read_corpus_csv(args.corpus)
    except FileNotFoundError as exc:
        return _fail(f"file not found: {exc.filename}")
    except PwrDiagError as exc:
        return _fail(str(exc))
    try:
        metrics, rows = pipeline.evaluate(model, _cases_from_corpus(corpus))
    except PwrDiagError as exc:
        return _fail(str(exc))
    print(pipeline.case_table(rows))
    print(json.dumps(pipeline.metrics_to_json(metrics)))
    return 0


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def _cmd_serve(args: argparse.Namespace) -> int:
    model = None
    if args.model is not None:
        try:
            model = pipeline.load_model(args.model)
        except FileNotFoundError:
            return _fail(f"model file not found: {args.model}")
        except PwrDiagError as exc:
            return _fail(str(exc))
    try:
        import uvicorn

        from .service import create_app
    except ImportError as exc:
        return _fail(f"serving needs fastapi and uvicorn installed ({exc})")
    app = create_app(model=model, default_speed=args.speed)
    try:
        uvicorn.run(app, host=args.host, port=args.port,
                    log_level=args.log_level)
    except (OSError, SystemExit) as exc:
        return _fail(f"server failed to start: {exc}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwrdiag",
        description="Simulate plant transients, train the diagnoser, and "
                    "serve live diagnosis.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario to a CSV file")
    sim.add_argument("scenario", help="scenario JSON file")
    sim.add_argument("output", help="output CSV path")
    sim.add_argument("--seed", type=int, default=None,
                     help="override the scenario's rng_seed")
    sim.set_defaults(func=_cmd_simulate)

    tr = sub.add_parser("train", help="fit a diagnosis model on a corpus CSV")
    tr.add_argument("corpus", help="labelled corpus CSV")
    tr.add_argument("output", help="model JSON path")
    tr.add_argument("--config", default=None,
                    help="training config JSON (network and split settings)")
    tr.add_argument("--seed", type=int, default=None,
                    help="override the train/val/test split seed")
    tr.set_defaults(func=_cmd_train)

    di = sub.add_parser("diagnose", help="diagnose a telemetry CSV window")
    di.add_argument("model", help="model JSON file")
    di.add_argument("telemetry", help="telemetry CSV (corpus format)")
    di.add_argument("--window", type=int, default=None,
                    help="use only the last N frames")
    di.set_defaults(func=_cmd_diagnose)

    ev = sub.add_parser("evaluate", help="score a model on a labelled corpus")
    ev.add_argument("model", help="model JSON file")
    ev.add_argument("corpus", help="labelled corpus CSV")
    ev.set_defaults(func=_cmd_evaluate)

    sv = sub.add_parser("serve", help="run the HTTP/WebSocket service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--model", default=None, help="model JSON to preload")
    sv.add_argument("--speed", type=int, default=5,
                    help="default time compression factor for new sessions")
    sv.add_argument("--log-level", default="warning")
    sv.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
