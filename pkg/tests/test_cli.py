import json
import subprocess
import sys

import pytest

from pruneplan.cli import main

from conftest import FIXTURES


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


MODEL = str(FIXTURES / "resnet18.json")
STATS = str(FIXTURES / "resnet18.stats.json")


class TestFlops:
    def test_resnet50(self, capsys):
        code, out, _ = run_cli(capsys, "flops", str(FIXTURES / "resnet50.json"))
        assert code == 0
        assert "4089184256" in out
        assert "4.09G" in out

    def test_file_not_found(self, capsys):
        code, _, err = run_cli(capsys, "flops", "missing.json")
        assert code == 4
        assert "error[not-found]" in err

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        code, _, err = run_cli(capsys, "flops", str(bad))
        assert code == 3
        assert "error[parse]" in err

    def test_graph_error(self, tmp_path, capsys):
        doc = json.loads((FIXTURES / "resnet18.json").read_text())
        doc["layers"][1]["predecessors"] = ["ghost"]
        bad = tmp_path / "dangling.json"
        bad.write_text(json.dumps(doc))
        code, _, err = run_cli(capsys, "flops", str(bad))
        assert code == 3
        assert "error[graph]" in err


class TestGroups:
    def test_dump_structure(self, capsys):
        code, out, _ = run_cli(capsys, "groups", MODEL)
        assert code == 0
        doc = json.loads(out)
        assert doc["n_groups"] == 4
        assert doc["groups"][0]["total_channels"] == 320
        assert any("conv1" in cls for cls in doc["coupling_classes"])


class TestPlan:
    def test_plan_within_budget(self, capsys):
        code, out, _ = run_cli(
            capsys, "plan", MODEL, "--stats", STATS, "--target-flops", "1.04e9", "--lambda", "0.8"
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["achieved_flops"] <= 1_040_000_000
        assert doc["request"]["lambda"] == 0.8
        assert set(doc) == {
            "request",
            "backbone_multiplier",
            "backbone_flops",
            "pool",
            "rounds",
            "final_config",
            "achieved_flops",
            "surplus_flops",
        }

    def test_flops_suffix_accepted(self, capsys):
        code, out, _ = run_cli(
            capsys, "plan", MODEL, "--stats", STATS, "--target-flops", "1.04G"
        )
        assert code == 0
        assert json.loads(out)["request"]["target_flops"] == 1_040_000_000

    def test_lambda_out_of_range_is_a_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["plan", MODEL, "--stats", STATS, "--target-flops", "1G", "--lambda", "1.5"])
        assert exc.value.code == 2

    def test_infeasible_budget_exit_code(self, capsys):
        code, _, err = run_cli(
            capsys, "plan", MODEL, "--stats", STATS, "--target-flops", "1M"
        )
        assert code == 5
        assert "error[infeasible]" in err

    def test_criterion_mismatch(self, capsys):
        code, _, err = run_cli(
            capsys,
            "plan", MODEL, "--stats", STATS,
            "--target-flops", "1.04G", "--criterion", "filter_norm",
        )
        assert code == 3
        assert "error[criterion]" in err

    def test_stats_model_mismatch(self, capsys):
        code, _, err = run_cli(
            capsys,
            "plan", str(FIXTURES / "resnet50.json"), "--stats", STATS,
            "--target-flops", "2.2G",
        )
        assert code == 3
        assert "error[coverage]" in err

    def test_identical_invocations_are_byte_identical(self, tmp_path, capsys):
        outputs = []
        for i in range(2):
            out_path = tmp_path / f"plan{i}.json"
            code, _, _ = run_cli(
                capsys,
                "plan", MODEL, "--stats", STATS,
                "--target-flops", "1.33G", "--policy", "random", "--seed", "7",
                "--out", str(out_path),
            )
            assert code == 0
            outputs.append(out_path.read_bytes())
        assert outputs[0] == outputs[1]


class TestComparePolicies:
    def test_table_lists_all_policies(self, capsys):
        code, out, _ = run_cli(
            capsys, "compare-policies", MODEL, "--stats", STATS, "--target-flops", "1.04G"
        )
        assert code == 0
        for policy in ("importance_guided", "winner_take_all", "uniform", "random"):
            assert policy in out


class TestEntrypoint:
    def test_console_script_runs(self):
        result = subprocess.run(
            [sys.executable, "-m", "pruneplan.cli", "--version"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "pruneplan" in result.stdout

    def test_help_mentions_subcommands(self):
        result = subprocess.run(
            [sys.executable, "-m", "pruneplan.cli", "--help"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        for sub in ("flops", "groups", "plan", "compare-policies"):
            assert sub in result.stdout
