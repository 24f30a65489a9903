"""Command-line interface: run benchmarks, the iteration ablation, the
demo-sensitivity sweep, inspect saved trajectories, and re-render reports.

Options may also come from a JSON or YAML config file (--config); explicit
command-line flags win over file values. The live backend reads its
endpoint and key from OPENAI_BASE_URL / OPENAI_API_KEY.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import polish as polish_mod
from .evaluation import (
    RunConfig,
    RunReport,
    ablation_iterations,
    parse_method,
    render_report,
    run_benchmark,
    sensitivity_sweep,
)
from .polish import ConsistencyConfig, PolishConfig


def _int_list(text: str) -> list[int]:
    """Parse "1,2,3" or a range like "2..6"."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part.strip()]


def _load_config_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        if path.endswith((".yaml", ".yml")):
            import yaml

            return yaml.safe_load(fh) or {}
        return json.load(fh)


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON/YAML file with defaults for these options")
    parser.add_argument("--dataset", help="gsm8k|aqua|svamp|multiarith|mathqa|gsmic_2step|gsmic_mstep")
    parser.add_argument("--data", dest="data_path", help="path to the dataset file")
    parser.add_argument("--method", default=None, help="standard|cot|ltm, with optional +sp")
    parser.add_argument("--k-shots", type=int, default=None, help="solve-demo shot count")
    parser.add_argument("--refine-shots", type=int, default=None, help="refine-demo shot count")
    parser.add_argument("--refine-mode", choices=["zero_shot", "in_context"], default=None)
    parser.add_argument("--max-refine", type=int, default=None, help="iteration budget K")
    parser.add_argument("--selection", choices=list(polish_mod.SELECTIONS), default=None)
    parser.add_argument(
        "--convergence-excludes-first",
        action="store_true",
        help="do not let the original problem's answer participate in convergence",
    )
    parser.add_argument("--backend", choices=["scripted", "live"], default=None)
    parser.add_argument("--fixture", dest="fixture_path", help="scripted fixture JSONL")
    parser.add_argument("--cache", dest="cache_path", help="response cache JSONL")
    parser.add_argument("--model", dest="model_id", default=None)
    parser.add_argument("--n", default=None, help='sample size per restart, or "all"')
    parser.add_argument("--restarts", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--parallelism", type=int, default=None)
    parser.add_argument("--max-tokens", type=int, default=None)
    parser.add_argument("--sc-paths", type=int, default=None, help="self-consistency path count")
    parser.add_argument("--sc-temperature", type=float, default=None)
    parser.add_argument("--sc-scope", choices=["solve_only", "full_pipeline"], default=None)
    parser.add_argument("--out", dest="out_dir", help="output directory (reports, checkpoints)")


_DEFAULTS = {
    "dataset": None,
    "data_path": None,
    "method": "standard",
    "k_shots": None,
    "refine_shots": None,
    "refine_mode": "zero_shot",
    "max_refine": 3,
    "selection": "last",
    "convergence_excludes_first": False,
    "backend": "scripted",
    "fixture_path": None,
    "cache_path": None,
    "model_id": "scripted",
    "n": "all",
    "restarts": 1,
    "seed": 0,
    "parallelism": 4,
    "max_tokens": 512,
    "sc_paths": None,
    "sc_temperature": 0.7,
    "sc_scope": "full_pipeline",
    "out_dir": None,
}


def _merged_options(args: argparse.Namespace) -> dict:
    options = dict(_DEFAULTS)
    if getattr(args, "config", None):
        file_values = _load_config_file(args.config)
        unknown = set(file_values) - set(options)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        options.update(file_values)
    for key in options:
        value = getattr(args, key, None)
        if value not in (None, False):
            options[key] = value
    return options


def _build_run_config(options: dict) -> RunConfig:
    if not options["dataset"]:
        raise SystemExit("--dataset is required")
    method, self_polish = parse_method(options["method"])
    sc = None
    if options["sc_paths"]:
        sc = ConsistencyConfig(
            n_paths=int(options["sc_paths"]),
            temperature=float(options["sc_temperature"]),
            scope=options["sc_scope"],
        )
    polish = PolishConfig(
        max_refinements=int(options["max_refine"]),
        refine_mode=options["refine_mode"],
        selection=options["selection"],
        convergence_includes_first_answer=not options["convergence_excludes_first"],
        max_tokens=int(options["max_tokens"]),
        sc=sc,
    )
    n = options["n"]
    if isinstance(n, str) and n != "all":
        n = int(n)
    return RunConfig(
        dataset=options["dataset"],
        data_path=options["data_path"],
        method=method,
        self_polish=self_polish,
        polish=polish,
        k_shots=options["k_shots"],
        refine_shots=options["refine_shots"],
        n=n,
        restarts=int(options["restarts"]),
        seed=int(options["seed"]),
        backend=options["backend"],
        fixture_path=options["fixture_path"],
        cache_path=options["cache_path"],
        model_id=options["model_id"],
        parallelism=int(options["parallelism"]),
        max_tokens=int(options["max_tokens"]),
        out_dir=options["out_dir"],
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_run_config(_merged_options(args))
    report = run_benchmark(config)
    sys.stdout.write(render_report(report, "table_text").decode("utf-8"))
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    options = _merged_options(args)
    config = _build_run_config(options)
    rows = ablation_iterations(config, _int_list(args.k_values), args.strategies.split(","))
    for row in rows:
        shares = " ".join(f"{s}={v:.4f}" for s, v in row["strategy_share"].items())
        print(
            f"K={row['k']} mean={row['mean_accuracy']:.4f}"
            f" converged={row['converged_count']} ({row['converged_share']:.4f})"
            f" exhausted={row['exhausted_count']} {shares} calls={row['total_calls']}"
        )
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    options = _merged_options(args)
    options["refine_mode"] = "in_context"
    config = _build_run_config(options)
    rows = sensitivity_sweep(
        config, _int_list(args.shots), args.sets, args.orders, config.seed
    )
    for row in rows:
        print(f"shots={row['shots']} mean={row['mean']:.4f} order_deviation={row['order_deviation']:.4f}")
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    import os

    path = os.path.join(args.out_dir, "records.jsonl")
    target = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec["id"] == args.trajectory and rec["restart"] == args.restart:
                target = rec
                break
    if target is None:
        print(f"no trajectory for id={args.trajectory} restart={args.restart}", file=sys.stderr)
        return 1
    for i, (version, answer) in enumerate(zip(target["versions"], target["answers"])):
        print(f"V{i}: {version}")
        print(f"A{i}: {answer.get('value', answer.get('raw', ''))}")
    print(f"stop_reason: {target['stop_reason']}")
    selected = target["selected"]
    print(f"selected: {selected.get('value', selected.get('raw', ''))}")
    print(f"correct: {target['correct']}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    import os

    with open(os.path.join(args.out_dir, "report.json"), "r", encoding="utf-8") as fh:
        report = RunReport.from_dict(json.load(fh))
    fmt = "table_text" if args.format == "table" else args.format
    sys.stdout.buffer.write(render_report(report, fmt))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="selfpolish", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one benchmark configuration")
    _add_run_options(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_ablate = sub.add_parser("ablate", help="ablation over iteration budgets")
    _add_run_options(p_ablate)
    p_ablate.add_argument("--k-values", default="1,2,3")
    p_ablate.add_argument("--strategies", default="last,first,vote")
    p_ablate.set_defaults(func=_cmd_ablate)

    p_sweep = sub.add_parser("sweep", help="refine-demo count and order sensitivity")
    _add_run_options(p_sweep)
    p_sweep.add_argument("--shots", default="2..6")
    p_sweep.add_argument("--sets", type=int, default=5)
    p_sweep.add_argument("--orders", type=int, default=5)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_inspect = sub.add_parser("inspect", help="print one trajectory (V0..Vk / A0..Ak)")
    p_inspect.add_argument("--out", dest="out_dir", required=True)
    p_inspect.add_argument("--trajectory", required=True, help="problem id")
    p_inspect.add_argument("--restart", type=int, default=0)
    p_inspect.set_defaults(func=_cmd_inspect)

    p_report = sub.add_parser("report", help="re-render a saved report")
    p_report.add_argument("--out", dest="out_dir", required=True)
    p_report.add_argument(
        "--format", choices=["table", "table_text", "csv", "structured"], default="table_text"
    )
    p_report.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
