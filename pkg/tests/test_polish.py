from decimal import Decimal

import pytest

from conftest import (
    StubSolver,
    entry_key,
    make_problem,
    numeric,
    refine_queue_backend,
    script_standard_sp,
)
from selfpolish.answers import CanonicalAnswer
from selfpolish.backend import ScriptedBackend
from selfpolish.errors import NoGeneratedProblem
from selfpolish.polish import (
    BUDGET_EXHAUSTED,
    CONVERGED,
    ConsistencyConfig,
    PolishConfig,
    Trajectory,
    refine,
    run,
    select_final,
)
from selfpolish.prompting import (
    Demo,
    DemoSet,
    build_incontext_refine_prompt,
    build_standard_prompt,
    build_zero_shot_refine_prompt,
)
from selfpolish.solver import standard_solver

STANDARD_DEMOS = DemoSet((Demo(style="standard", original_problem="P1", answer="6"),))
REFINE_DEMOS = DemoSet(
    (Demo(style="refine", original_problem="O1", new_problem="N1"),)
)


def run_scripted(values, k=3, selection="last", include_first=True):
    solver = StubSolver([numeric(v) for v in values])
    backend = refine_queue_backend(k)
    config = PolishConfig(
        max_refinements=k,
        selection=selection,
        convergence_includes_first_answer=include_first,
    )
    return run(make_problem(), solver, backend, config), solver, backend


class TestRun:
    def test_immediate_convergence(self):
        traj, solver, backend = run_scripted([9, 9])
        assert traj.stop_reason == CONVERGED
        assert traj.selected.numeric_value == Decimal("9")
        assert len(traj.versions) == 2
        assert solver.calls == 2
        assert backend.calls == 1  # one refine

    def test_convergence_at_final_iteration(self):
        traj, _, _ = run_scripted([3, 5, 8, 8], k=3)
        assert traj.stop_reason == CONVERGED
        assert traj.selected.numeric_value == Decimal("8")
        assert len(traj.versions) == 4

    @pytest.mark.parametrize(
        "selection,expected", [("last", "4"), ("first", "2"), ("vote", "2")]
    )
    def test_budget_exhausted_selection(self, selection, expected):
        traj, _, _ = run_scripted([1, 2, 3, 4], k=3, selection=selection)
        assert traj.stop_reason == BUDGET_EXHAUSTED
        assert traj.selected.numeric_value == Decimal(expected)

    def test_exclude_first_answer_from_convergence(self):
        # A1 == A0 but the pair (A1, A0) is not compared when excluded.
        traj, _, _ = run_scripted([7, 7, 9, 9], k=3, include_first=False)
        assert traj.stop_reason == CONVERGED
        assert len(traj.versions) == 4  # stopped at i=3, not i=1

    def test_budget_bounds(self):
        traj, solver, backend = run_scripted([1, 2, 3, 4], k=3)
        assert solver.calls == 4  # K+1 solves
        assert backend.calls == 3  # K refines

    def test_v0_never_mutated(self):
        problem = make_problem(question="Original question?")
        solver = StubSolver([numeric(1), numeric(2), numeric(2)])
        traj = run(problem, solver, refine_queue_backend(3), PolishConfig())
        assert traj.versions[0] == "Original question?"

    def test_calls_used_matches_counter_delta(self):
        problem = make_problem(question="T?")
        entries = script_standard_sp(problem, STANDARD_DEMOS, 3, ["1", "2", "3", "4"])
        backend = ScriptedBackend(entries=entries)
        solver = standard_solver(STANDARD_DEMOS)
        traj = run(problem, solver, backend, PolishConfig())
        assert traj.calls_used == backend.calls == 7  # 4 solves + 3 refines

    def test_unparsed_answers_converge_only_when_identical(self):
        a = CanonicalAnswer.unparsed("garbage one")
        b = CanonicalAnswer.unparsed("garbage two")
        solver = StubSolver([a, b, b])
        traj = run(make_problem(), solver, refine_queue_backend(3), PolishConfig(max_refinements=2))
        assert traj.stop_reason == CONVERGED  # b == b at i=2
        assert len(traj.versions) == 3

    def test_trajectory_round_trip(self):
        traj, _, _ = run_scripted([1, 2, 3, 4])
        again = Trajectory.from_dict(traj.to_dict())
        assert again.to_dict() == traj.to_dict()

    def test_in_context_requires_demos(self):
        config = PolishConfig(refine_mode="in_context")
        with pytest.raises(ValueError):
            run(make_problem(), StubSolver([numeric(1)]), refine_queue_backend(), config)

    def test_error_carries_partial_trajectory(self):
        from selfpolish.errors import FixtureMiss

        # queue holds a single rewrite, so the second refine call dies
        solver = StubSolver([numeric(1), numeric(2), numeric(3), numeric(4)])
        backend = refine_queue_backend(1)
        with pytest.raises(FixtureMiss) as err:
            run(make_problem(), solver, backend, PolishConfig(max_refinements=3))
        partial = err.value.partial_trajectory
        assert len(partial["versions"]) == 2  # V0 plus one successful rewrite
        assert [a["value"] for a in partial["answers"]] == ["1", "2"]
        assert partial["calls_used"] == 3  # 2 solves + 1 refine before the failure


class TestRefineOp:
    def test_parses_new_problem(self):
        problem = make_problem(question="P")
        backend = ScriptedBackend(queue=[("*", "New problem: P prime.")])
        outcome = refine(problem, "zero_shot", backend)
        assert outcome.version.question == "P prime."
        assert not outcome.warned

    def test_empty_reply_keeps_version_with_warning(self):
        problem = make_problem(question="P")
        backend = ScriptedBackend(queue=[("*", "")])
        outcome = refine(problem, "zero_shot", backend)
        assert outcome.version.question == "P"
        assert outcome.warned

    def test_choice_options_reappended(self):
        problem = make_problem(question="Pick.", options=(("A", "1"), ("B", "2")), gold="A")
        backend = ScriptedBackend(
            queue=[("*", "New problem: Pick better.\nAnswer Choices: (A) 999 (B) 888")]
        )
        outcome = refine(problem, "zero_shot", backend)
        # the echoed (and corrupted) option block is discarded; the real one survives
        assert outcome.version.options == (("A", "1"), ("B", "2"))
        assert outcome.version.statement().endswith("Answer Choices: (A) 1 (B) 2")
        assert outcome.version.question == "Pick better."

    def test_in_context_mode_uses_demo_prompt(self):
        problem = make_problem(question="P")
        prompt = build_incontext_refine_prompt(REFINE_DEMOS, problem)
        backend = ScriptedBackend(entries={entry_key(prompt): "New problem: P2"})
        outcome = refine(problem, "in_context", backend, demos=REFINE_DEMOS)
        assert outcome.version.question == "P2"

    def test_conditions_on_most_recent_version_only(self):
        problem = make_problem(question="P0")
        v1 = problem.with_text("P1 text")
        prompt = build_zero_shot_refine_prompt(v1)
        assert "P1 text" in prompt
        assert "P0" not in prompt


class TestSelectFinal:
    def test_vote_excludes_original_answer(self):
        answers = [numeric(1), numeric(2), numeric(2), numeric(5)]
        assert select_final(answers, "vote").numeric_value == Decimal("2")

    def test_single_generated_degenerates(self):
        answers = [numeric(1), numeric(2)]
        assert select_final(answers, "first").numeric_value == Decimal("2")
        assert select_final(answers, "last").numeric_value == Decimal("2")
        assert select_final(answers, "vote").numeric_value == Decimal("2")

    def test_requires_generated_problem(self):
        with pytest.raises(NoGeneratedProblem):
            select_final([numeric(1)], "last")


class TestSelfConsistencyScopes:
    def test_full_pipeline_votes_over_path_finals(self):
        # Path answers: path0 -> 3, path1 -> 5, path2 -> 5 (each converges
        # immediately); winner must be 5 and calls must cover all paths.
        per_path = {0: "3", 1: "5", 2: "5"}
        problem = make_problem(question="T?")
        entries = {}
        for path, value in per_path.items():
            version = problem
            for i in range(2):
                prompt = build_standard_prompt(STANDARD_DEMOS, version)
                entries[entry_key(prompt, temperature=0.7, sample_index=path)] = (
                    f"The answer is {value}."
                )
                if i == 0:
                    core = f"rewrite for path {path}"
                    rp = build_zero_shot_refine_prompt(version)
                    entries[entry_key(rp, temperature=0.7, sample_index=path)] = (
                        f"New problem: {core}"
                    )
                    version = version.with_text(core)
        backend = ScriptedBackend(entries=entries)
        config = PolishConfig(
            max_refinements=3,
            sc=ConsistencyConfig(n_paths=3, temperature=0.7, scope="full_pipeline"),
        )
        traj = run(problem, standard_solver(STANDARD_DEMOS), backend, config)
        assert traj.selected.numeric_value == Decimal("5")
        assert traj.path_answers is not None
        assert [a.text for a in traj.path_answers] == ["3", "5", "5"]
        assert traj.calls_used == backend.calls == 9  # 3 paths x (2 solves + 1 refine)

    def test_solve_only_wraps_each_solve(self):
        problem = make_problem(question="T?")
        entries = {}
        version = problem
        for i in range(2):  # two versions: converges at i=1 (both vote to 4)
            prompt = build_standard_prompt(STANDARD_DEMOS, version)
            for path in range(3):
                entries[entry_key(prompt, temperature=0.7, sample_index=path)] = (
                    "The answer is 4."
                )
            if i == 0:
                rp = build_zero_shot_refine_prompt(version)
                entries[entry_key(rp)] = "New problem: rewritten"
                version = version.with_text("rewritten")
        backend = ScriptedBackend(entries=entries)
        config = PolishConfig(
            sc=ConsistencyConfig(n_paths=3, temperature=0.7, scope="solve_only")
        )
        traj = run(problem, standard_solver(STANDARD_DEMOS), backend, config)
        assert traj.stop_reason == CONVERGED
        assert traj.selected.numeric_value == Decimal("4")
        # refine ran greedy (temperature 0, shared sample index): 2 solves x 3 paths + 1 refine
        assert traj.calls_used == backend.calls == 7


class TestConfigValidation:
    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            PolishConfig(max_refinements=0)

    def test_selection_validated(self):
        with pytest.raises(ValueError):
            PolishConfig(selection="best")

    def test_sc_paths_validated(self):
        with pytest.raises(ValueError):
            ConsistencyConfig(n_paths=0)
