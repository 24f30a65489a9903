"""Benchmark orchestration: configured runs over method x dataset x backend,
accuracy scoring with option-matching fallback, the iteration-count ablation,
the demonstration-sensitivity sweep, and report rendering.

Runs are resumable: every finished problem is checkpointed to a JSONL file
and skipped on rerun, so interrupted runs never repeat backend calls. At
temperature 0 a run is a pure function of (fixture/cache, config, seed).
"""

from __future__ import annotations

import csv
import io
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from statistics import pstdev
from typing import Sequence

from . import datasets as datasets_mod
from . import polish as polish_mod
from . import prompting, solver as solver_mod
from .answers import CanonicalAnswer, answers_equal, parse_number_token, _NUMBER_RE
from .backend import Backend, CachingBackend, LiveBackend, ResponseCache, ScriptedBackend
from .datasets import Problem
from .polish import PolishConfig
from .solver import Solver

METHODS = ("standard", "cot", "ltm")

RECORDS_FILE = "records.jsonl"
REPORT_FILE = "report.json"


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    data_path: str | None = None
    method: str = "standard"
    self_polish: bool = False
    polish: PolishConfig = field(default_factory=PolishConfig)
    k_shots: int | None = None
    refine_shots: int | None = None
    demo_set_id: str | None = None
    demo_order_id: str | None = None
    n: int | str = "all"
    restarts: int = 1
    seed: int = 0
    backend: str = "scripted"
    fixture_path: str | None = None
    cache_path: str | None = None
    model_id: str = "scripted"
    parallelism: int = 4
    max_tokens: int = 512
    out_dir: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def parse_method(spec: str) -> tuple[str, bool]:
    """Split a CLI-style method spec like "cot+sp" into (method, self_polish)."""
    parts = [p.strip().lower() for p in spec.split("+") if p.strip()]
    if not parts:
        raise ValueError("empty method spec")
    method = parts[0]
    extras = set(parts[1:])
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if not extras <= {"sp"}:
        raise ValueError(f"unknown method modifiers in {spec!r}")
    return method, "sp" in extras


def score(predicted: CanonicalAnswer, problem: Problem) -> tuple[bool, bool]:
    """Grade a prediction against the problem's gold answer.

    Returns (correct, option_fallback_used). On choice tasks a numeric
    prediction is resolved to an option letter when exactly one option's
    text parses to an equal number; the record is flagged so graded-via-
    fallback outcomes stay auditable.
    """
    gold = problem.gold
    if problem.task == "choice":
        if predicted.kind == "choice":
            return predicted.choice_letter == gold.choice_letter, False
        if predicted.kind == "numeric" and problem.options:
            matches = []
            for letter, text in problem.options:
                m = _NUMBER_RE.search(text)
                if m:
                    value = parse_number_token(m.group(0))
                    if value is not None and value == predicted.numeric_value:
                        matches.append(letter)
            if len(matches) == 1:
                return matches[0] == gold.choice_letter, True
        return False, False
    return answers_equal(predicted, gold), False


def build_backend(config: RunConfig) -> Backend:
    if config.backend == "scripted":
        if not config.fixture_path:
            raise ValueError("scripted backend requires fixture_path")
        backend: Backend = ScriptedBackend.from_file(config.fixture_path, model_id=config.model_id)
        if config.cache_path:
            backend = CachingBackend(backend, ResponseCache(config.cache_path))
        return backend
    if config.backend == "live":
        live = LiveBackend(model_id=config.model_id, max_parallel=config.parallelism)
        cache_path = config.cache_path
        if cache_path is None and config.out_dir:
            cache_path = os.path.join(config.out_dir, "cache.jsonl")
        return CachingBackend(live, ResponseCache(cache_path))
    raise ValueError(f"unknown backend {config.backend!r}")


def resolve_demos(config: RunConfig):
    """Bundled solve demos for the configured method (and refine demos when
    in-context refining is on)."""
    if config.method == "ltm":
        solve_demos = (
            prompting.load_demos(config.dataset, prompting.LTM_REDUCE),
            prompting.load_demos(config.dataset, prompting.LTM_SOLVE),
        )
    else:
        solve_demos = prompting.load_demos(config.dataset, config.method, config.k_shots)
    refine_demos = None
    if config.self_polish and config.polish.refine_mode == polish_mod.IN_CONTEXT:
        refine_demos = prompting.load_demos(config.dataset, prompting.REFINE, config.refine_shots)
    return solve_demos, refine_demos


def make_solver(config: RunConfig, solve_demos) -> Solver:
    if config.method == "standard":
        return solver_mod.standard_solver(solve_demos, config.max_tokens)
    if config.method == "cot":
        return solver_mod.cot_solver(solve_demos, config.max_tokens)
    reduce_demos, ltm_solve_demos = solve_demos
    return solver_mod.ltm_solver(reduce_demos, ltm_solve_demos, config.max_tokens)


def _evaluate_one(
    problem: Problem,
    restart: int,
    config: RunConfig,
    solver: Solver,
    backend: Backend,
    refine_demos,
) -> dict:
    record = {"restart": restart, "id": problem.id, "gold": problem.gold.to_dict(), "error": None}
    try:
        if config.self_polish:
            traj = polish_mod.run(problem, solver, backend, config.polish, refine_demos)
            selected = traj.selected
            record.update(
                {
                    "stop_reason": traj.stop_reason,
                    "versions_used": len(traj.versions),
                    "calls_used": traj.calls_used,
                    "answers": [a.to_dict() for a in traj.answers],
                    "versions": list(traj.versions),
                    "digests": list(traj.digests),
                    "warnings": list(traj.warnings),
                }
            )
            if traj.path_answers is not None:
                record["path_answers"] = [a.to_dict() for a in traj.path_answers]
        else:
            sc = config.polish.sc
            if sc is not None and sc.n_paths > 1:
                result = solver_mod.solve_with_consistency(
                    solver, problem, backend, sc.n_paths, sc.temperature
                )
            else:
                result = solver(problem, backend, 0.0, 0)
            selected = result.answer
            record.update(
                {
                    "stop_reason": None,
                    "versions_used": 1,
                    "calls_used": result.calls_used,
                    "answers": [result.answer.to_dict()],
                    "versions": [problem.statement()],
                    "digests": list(result.prompt_digests),
                    "warnings": list(result.warnings),
                }
            )
        correct, flagged = score(selected, problem)
        record.update({"selected": selected.to_dict(), "correct": correct, "flagged": flagged})
    except Exception as exc:  # per-problem failures count as incorrect
        partial = getattr(exc, "partial_trajectory", None) or {}
        record.update(
            {
                "selected": CanonicalAnswer.unparsed("").to_dict(),
                "correct": False,
                "flagged": False,
                "stop_reason": None,
                "versions_used": len(partial.get("versions", [])),
                "calls_used": partial.get("calls_used", 0),
                "answers": partial.get("answers", []),
                "versions": partial.get("versions", []),
                "digests": partial.get("digests", []),
                "warnings": [],
                "error": f"{type(exc).__name__}: {exc}",
            }
        )
    return record


@dataclass
class RunReport:
    config: dict
    restart_accuracies: list[float]
    mean_accuracy: float
    records: list[dict]
    convergence: dict
    totals: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "restart_accuracies": self.restart_accuracies,
            "mean_accuracy": self.mean_accuracy,
            "records": self.records,
            "convergence": self.convergence,
            "totals": self.totals,
        }

    @staticmethod
    def from_dict(d: dict) -> "RunReport":
        return RunReport(
            config=d["config"],
            restart_accuracies=list(d["restart_accuracies"]),
            mean_accuracy=d["mean_accuracy"],
            records=list(d["records"]),
            convergence=d["convergence"],
            totals=d["totals"],
        )


def _convergence_stats(records: list[dict]) -> dict:
    by_iterations: dict[str, dict] = {}
    converged = converged_correct = 0
    for rec in records:
        if rec.get("stop_reason") is None:
            continue
        iterations = max(rec["versions_used"] - 1, 0)
        row = by_iterations.setdefault(
            str(iterations), {"problems": 0, "converged": 0, "converged_correct": 0}
        )
        row["problems"] += 1
        if rec["stop_reason"] == polish_mod.CONVERGED:
            row["converged"] += 1
            converged += 1
            if rec["correct"]:
                row["converged_correct"] += 1
                converged_correct += 1
    return {
        "by_iterations": dict(sorted(by_iterations.items())),
        "converged": converged,
        "converged_correct": converged_correct,
    }


def _assemble_report(config: RunConfig, records: list[dict], backend: Backend) -> RunReport:
    records = sorted(records, key=lambda r: (r["restart"], r["id"]))
    restarts = sorted({r["restart"] for r in records})
    accuracies = []
    for restart in restarts:
        rows = [r for r in records if r["restart"] == restart]
        accuracies.append(sum(1 for r in rows if r["correct"]) / len(rows))
    mean = sum(accuracies) / len(accuracies)
    totals = {
        "calls": sum(r["calls_used"] for r in records),
        "tokens": getattr(backend, "tokens_used", 0),
    }
    return RunReport(
        config=config.to_dict(),
        restart_accuracies=accuracies,
        mean_accuracy=mean,
        records=records,
        convergence=_convergence_stats(records),
        totals=totals,
    )


def run_benchmark(
    config: RunConfig,
    backend: Backend | None = None,
    problems: Sequence[Problem] | None = None,
    solve_demos=None,
    refine_demos=None,
) -> RunReport:
    """Execute one configured benchmark run and return its report.

    Objects passed explicitly (backend, problems, demos) override what the
    config would resolve; the sweep and ablation drivers rely on this.
    """
    if problems is None:
        if not config.data_path:
            raise ValueError("config has no data_path and no problems were passed")
        problems = datasets_mod.load(config.dataset, config.data_path)
    if solve_demos is None:
        resolved_solve, resolved_refine = resolve_demos(config)
        solve_demos = resolved_solve
        if refine_demos is None:
            refine_demos = resolved_refine
    if backend is None:
        backend = build_backend(config)
    solver = make_solver(config, solve_demos)

    splits = datasets_mod.sample(problems, config.n, config.seed, config.restarts)

    done: dict[tuple[int, str], dict] = {}
    records_path = None
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        records_path = os.path.join(config.out_dir, RECORDS_FILE)
        if os.path.exists(records_path):
            with open(records_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        rec = json.loads(line)
                        done[(rec["restart"], rec["id"])] = rec

    pending = [
        (restart, problem)
        for restart, split in splits
        for problem in split
        if (restart, problem.id) not in done
    ]

    write_lock = threading.Lock()

    def _work(item):
        restart, problem = item
        record = _evaluate_one(problem, restart, config, solver, backend, refine_demos)
        if records_path:
            with write_lock:
                with open(records_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")
                    fh.flush()
        return record

    if pending:
        if config.parallelism == 1:
            fresh = [_work(item) for item in pending]
        else:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                fresh = list(pool.map(_work, pending))
    else:
        fresh = []

    report = _assemble_report(config, list(done.values()) + fresh, backend)
    if config.out_dir:
        with open(os.path.join(config.out_dir, REPORT_FILE), "wb") as fh:
            fh.write(render_report(report, "structured"))
    return report


def _reselect(record: dict, strategy: str) -> CanonicalAnswer:
    answers = [CanonicalAnswer.from_dict(a) for a in record["answers"]]
    return polish_mod.select_final(answers, strategy)


def ablation_iterations(
    config: RunConfig,
    k_values: Sequence[int],
    strategies: Sequence[str] = polish_mod.SELECTIONS,
    backend: Backend | None = None,
    problems: Sequence[Problem] | None = None,
    solve_demos=None,
    refine_demos=None,
) -> list[dict]:
    """One run per iteration budget K, reusing a shared response cache.

    At temperature 0 trajectories for a larger K extend those of a smaller
    K, so rerunning only pays for the new suffix. Each row reports the
    accuracy contributed by converged problems and, for the problems that
    exhausted the budget, the contribution each selection strategy would
    have made.
    """
    if not config.self_polish:
        raise ValueError("the iteration ablation requires self-polish to be enabled")
    if problems is None:
        if not config.data_path:
            raise ValueError("config has no data_path and no problems were passed")
        problems = datasets_mod.load(config.dataset, config.data_path)
    if backend is None:
        backend = build_backend(config)
    problem_by_id = {p.id: p for p in problems}

    rows = []
    for k in k_values:
        run_config = replace(
            config,
            polish=replace(config.polish, max_refinements=k),
            out_dir=os.path.join(config.out_dir, f"k{k}") if config.out_dir else None,
        )
        report = run_benchmark(
            run_config,
            backend=backend,
            problems=problems,
            solve_demos=solve_demos,
            refine_demos=refine_demos,
        )
        records = report.records
        total = len(records)
        converged = [r for r in records if r.get("stop_reason") == polish_mod.CONVERGED]
        exhausted = [r for r in records if r.get("stop_reason") == polish_mod.BUDGET_EXHAUSTED]
        strategy_share = {}
        for strategy in strategies:
            correct = 0
            for rec in exhausted:
                selected = _reselect(rec, strategy)
                ok, _ = score(selected, problem_by_id[rec["id"]])
                if ok:
                    correct += 1
            strategy_share[strategy] = correct / total if total else 0.0
        rows.append(
            {
                "k": k,
                "mean_accuracy": report.mean_accuracy,
                "converged_count": len(converged),
                "converged_share": (
                    sum(1 for r in converged if r["correct"]) / total if total else 0.0
                ),
                "exhausted_count": len(exhausted),
                "strategy_share": strategy_share,
                "total_calls": report.totals["calls"],
            }
        )
    return rows


def order_statistics(cells: dict[str, dict[str, float]]) -> tuple[float, float]:
    """Aggregate a {set_id: {order_id: accuracy}} grid.

    Returns (mean over all cells, order deviation), where order deviation is
    the mean over sets of the population standard deviation across that
    set's orders.
    """
    all_accuracies = [acc for per_set in cells.values() for acc in per_set.values()]
    deviations = [pstdev(list(per_set.values())) for per_set in cells.values()]
    return sum(all_accuracies) / len(all_accuracies), sum(deviations) / len(deviations)


def sensitivity_sweep(
    config: RunConfig,
    shot_values: Sequence[int],
    n_sets: int,
    n_orders: int,
    seed: int,
    backend: Backend | None = None,
    problems: Sequence[Problem] | None = None,
    solve_demos=None,
    pool: list[prompting.Demo] | None = None,
) -> list[dict]:
    """Accuracy as a function of refine-demo count and order.

    For each shot count: sample n_sets demo subsets, evaluate each in
    n_orders orders, then report the mean accuracy over all cells and the
    order deviation (mean over sets of the population standard deviation
    across that set's orders).
    """
    if not config.self_polish or config.polish.refine_mode != polish_mod.IN_CONTEXT:
        raise ValueError("the sensitivity sweep requires self-polish with in-context refining")
    if pool is None:
        pool = prompting.load_demo_file(
            prompting._asset_path(config.dataset, prompting.REFINE)
        )
    if problems is None:
        if not config.data_path:
            raise ValueError("config has no data_path and no problems were passed")
        problems = datasets_mod.load(config.dataset, config.data_path)
    if backend is None:
        backend = build_backend(config)

    rows = []
    for shots in shot_values:
        variants = prompting.demo_variants(pool, shots, n_sets, n_orders, seed)
        cells: dict[str, dict[str, float]] = {}
        for demo_set in variants:
            run_config = replace(
                config,
                refine_shots=shots,
                demo_set_id=demo_set.set_id,
                demo_order_id=demo_set.order_id,
                out_dir=(
                    os.path.join(config.out_dir, f"shots{shots}_{demo_set.set_id}_{demo_set.order_id}")
                    if config.out_dir
                    else None
                ),
            )
            report = run_benchmark(
                run_config,
                backend=backend,
                problems=problems,
                solve_demos=solve_demos,
                refine_demos=demo_set,
            )
            cells.setdefault(demo_set.set_id, {})[demo_set.order_id] = report.mean_accuracy
        mean, order_deviation = order_statistics(cells)
        rows.append(
            {"shots": shots, "mean": mean, "order_deviation": order_deviation, "cells": cells}
        )
    return rows


_CSV_COLUMNS = (
    "restart",
    "id",
    "correct",
    "selected",
    "gold",
    "stop_reason",
    "versions_used",
    "calls_used",
    "flagged",
    "error",
)


def render_report(report: RunReport, format: str) -> bytes:
    """Deterministic rendering; the structured form round-trips losslessly."""
    if format == "structured":
        return (
            json.dumps(report.to_dict(), sort_keys=True, ensure_ascii=False, indent=2) + "\n"
        ).encode("utf-8")
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for rec in report.records:
            writer.writerow(
                [
                    rec["restart"],
                    rec["id"],
                    int(rec["correct"]),
                    rec["selected"].get("value", rec["selected"].get("raw", "")),
                    rec["gold"].get("value", ""),
                    rec.get("stop_reason") or "",
                    rec["versions_used"],
                    rec["calls_used"],
                    int(rec.get("flagged", False)),
                    rec.get("error") or "",
                ]
            )
        return buf.getvalue().encode("utf-8")
    if format == "table_text":
        lines = []
        cfg = report.config
        lines.append(
            f"dataset={cfg['dataset']} method={cfg['method']}"
            f"{'+sp' if cfg['self_polish'] else ''} n={cfg['n']} seed={cfg['seed']}"
        )
        for restart, acc in enumerate(report.restart_accuracies):
            lines.append(f"  restart {restart}: accuracy {acc:.4f}")
        lines.append(f"  mean accuracy: {report.mean_accuracy:.4f}")
        conv = report.convergence
        lines.append(
            f"  converged: {conv['converged']} (correct: {conv['converged_correct']})"
        )
        for iterations, row in conv["by_iterations"].items():
            lines.append(
                f"    iterations={iterations}: problems={row['problems']}"
                f" converged={row['converged']} converged_correct={row['converged_correct']}"
            )
        lines.append(
            f"  totals: calls={report.totals['calls']} tokens={report.totals['tokens']}"
        )
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {format!r}")
