import json

import pytest

from conftest import script_standard_sp, write_fixture_file
from selfpolish.cli import _int_list, main
from selfpolish.prompting import Demo, DemoSet, build_cot_prompt

COT_DEMOS = DemoSet(
    tuple(
        Demo(style="cot", original_problem=p, rationale=r, answer=a)
        for p, r, a in [
            ("There are 15 trees in the grove. Grove workers will plant trees in the grove today. After they are done, there will be 21 trees. How many trees did the grove workers plant today?", "There are 15 trees originally. Then there were 21 trees after some more were planted. So there must have been 21 - 15 = 6.", "6"),
        ]
    )
)


def gsm8k_file(tmp_path):
    # two tiny problems in the published jsonl schema
    path = tmp_path / "gsm8k.jsonl"
    records = [
        {"question": "Q one?", "answer": "r\n#### 4"},
        {"question": "Q two?", "answer": "r\n#### 7"},
    ]
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    return path


def scripted_fixture(tmp_path, problems, plan):
    from selfpolish.prompting import load_demos

    demos = load_demos("gsm8k", "cot", 8)
    entries = {}
    for p in problems:
        script_standard_sp(p, demos, 3, plan[p.id], entries=entries, prompt_builder=build_cot_prompt)
    path = tmp_path / "fixture.jsonl"
    write_fixture_file(entries, path)
    return path


class TestIntList:
    def test_comma_list(self):
        assert _int_list("1,2,3") == [1, 2, 3]

    def test_range(self):
        assert _int_list("2..6") == [2, 3, 4, 5, 6]


class TestRunCommand:
    def _run_args(self, tmp_path):
        from selfpolish.datasets import load

        data = gsm8k_file(tmp_path)
        problems = load("gsm8k", str(data))
        plan = {
            problems[0].id: ["4", "4", "4", "4"],  # converges, correct
            problems[1].id: ["1", "2", "3", "5"],  # exhausted, last=5, gold 7: wrong
        }
        fixture = scripted_fixture(tmp_path, problems, plan)
        out = tmp_path / "out"
        return [
            "run",
            "--dataset", "gsm8k",
            "--data", str(data),
            "--method", "cot+sp",
            "--k-shots", "8",
            "--max-refine", "3",
            "--selection", "last",
            "--backend", "scripted",
            "--fixture", str(fixture),
            "--n", "all",
            "--restarts", "1",
            "--seed", "3",
            "--out", str(out),
        ], out

    def test_run_writes_report_and_prints_summary(self, tmp_path, capsys):
        args, out = self._run_args(tmp_path)
        assert main(args) == 0
        printed = capsys.readouterr().out
        assert "mean accuracy: 0.5000" in printed
        assert (out / "report.json").exists()
        assert (out / "records.jsonl").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["mean_accuracy"] == 0.5
        assert report["config"]["seed"] == 3  # full provenance

    def test_inspect_prints_versions_and_answers(self, tmp_path, capsys):
        args, out = self._run_args(tmp_path)
        main(args)
        capsys.readouterr()
        code = main(["inspect", "--out", str(out), "--trajectory", "gsm8k-0000"])
        assert code == 0
        printed = capsys.readouterr().out
        assert "V0: Q one?" in printed
        assert "A0: 4" in printed
        assert "stop_reason: converged" in printed

    def test_inspect_missing_trajectory(self, tmp_path, capsys):
        args, out = self._run_args(tmp_path)
        main(args)
        capsys.readouterr()
        assert main(["inspect", "--out", str(out), "--trajectory", "nope"]) == 1

    def test_report_csv(self, tmp_path, capsys):
        args, out = self._run_args(tmp_path)
        main(args)
        capsys.readouterr()
        assert main(["report", "--out", str(out), "--format", "csv"]) == 0
        printed = capsys.readouterr().out
        assert printed.splitlines()[0].startswith("restart,id,correct")
        assert len(printed.strip().splitlines()) == 3

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        args, out = self._run_args(tmp_path)
        # move everything except --seed into a config file; flag overrides file
        options = {}
        it = iter(args[1:])
        for flag in it:
            options[flag.lstrip("-").replace("-", "_")] = next(it)
        options["max_refine"] = int(options["max_refine"])
        options["k_shots"] = int(options["k_shots"])
        options["restarts"] = int(options["restarts"])
        options["seed"] = 99
        options["data_path"] = options.pop("data")
        options["fixture_path"] = options.pop("fixture")
        options["out_dir"] = options.pop("out")
        config_path = tmp_path / "run.json"
        config_path.write_text(json.dumps(options))
        assert main(["run", "--config", str(config_path), "--seed", "3"]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["seed"] == 3

    def test_unknown_config_key_rejected(self, tmp_path):
        config_path = tmp_path / "run.json"
        config_path.write_text(json.dumps({"bogus": 1}))
        with pytest.raises(SystemExit):
            main(["run", "--config", str(config_path)])

    def test_dataset_required(self):
        with pytest.raises(SystemExit):
            main(["run", "--method", "standard"])
