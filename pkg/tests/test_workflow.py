import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from decoherence_studio.cli import (
    EXIT_FAILURE,
    EXIT_INVARIANT_VIOLATION,
    EXIT_OK,
    build_parser,
    main,
)
from decoherence_studio.data.trajectory_files import (
    read_summary_json,
    read_trajectory_csv,
    summary_path_for,
)
from decoherence_studio.quantum.dynamics import TRAJECTORY_COLUMNS, InvariantViolationError
from decoherence_studio.settings import build_scenario_config, preset_scenario_config
from decoherence_studio.workflow import run_scenario


def smoke_config(output: Path, scenario: str = "fig1"):
    return build_scenario_config(
        preset_scenario_config(scenario),
        env_dim=20,
        n_steps=40,
        record_every=4,
        stop_ratio=0.0,
        output=str(output),
    )


class ScenarioRunTests(unittest.TestCase):
    """缩小环境维度的端到端冒烟运行。"""

    def test_smoke_run_writes_trajectory_and_summary(self) -> None:
        with tempfile.TemporaryDirectory() as temp_dir:
            csv_path = Path(temp_dir) / "fig1.csv"

            result = run_scenario(smoke_config(csv_path), jobs=1)

            self.assertEqual(len(result.records), 11)
            self.assertTrue(csv_path.exists())
            self.assertEqual(result.summary_path, summary_path_for(csv_path))
            header = csv_path.read_text(encoding="utf-8").splitlines()[0]
            self.assertEqual(header, ",".join(TRAJECTORY_COLUMNS))
            self.assertEqual(read_trajectory_csv(csv_path), result.records)

            summary = read_summary_json(result.summary_path)
            self.assertEqual(summary["record_count"], 11)
            self.assertEqual(summary["steps_completed"], 40)
            self.assertFalse(summary["stopped_early"])
            self.assertEqual(summary["seeds"], {"seed": 7, "env_seed": 11})
            self.assertAlmostEqual(summary["initial"]["q_d"], 1 / 224, places=12)
            self.assertIn(summary["q_d_decay_fit"]["verdict"], {"Exponential", "Gaussian", "Inconclusive"})
            self.assertGreaterEqual(summary["finite_bath_floor"], 1 / 20 - 1e-12)
            self.assertLessEqual(summary["finite_bath_floor"], 1.0)
            self.assertLess(max(record.trace_err for record in result.records), 1e-10)

    def test_same_seeds_give_byte_identical_csv(self) -> None:
        with tempfile.TemporaryDirectory() as temp_dir:
            first = Path(temp_dir) / "first.csv"
            second = Path(temp_dir) / "second.csv"

            run_scenario(smoke_config(first), jobs=1)
            run_scenario(smoke_config(second), jobs=2)

            self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_renewed_bath_preset_runs(self) -> None:
        with tempfile.TemporaryDirectory() as temp_dir:
            csv_path = Path(temp_dir) / "fig2.csv"
            config = build_scenario_config(smoke_config(csv_path, "fig2"), n_steps=8, record_every=2, renew_every=2)

            result = run_scenario(config, jobs=1)

            self.assertEqual(len(result.records), 5)
            self.assertEqual(result.summary["config"]["bath"], "renewed")
            self.assertIsNone(result.summary["finite_bath_floor"])


class CliTests(unittest.TestCase):
    def test_parser_accepts_scenario_overrides(self) -> None:
        args = build_parser().parse_args(["run", "--scenario", "fig2", "--env-dim", "20", "--steps", "40", "--jobs", "auto"])

        self.assertEqual(args.scenario, "fig2")
        self.assertEqual(args.env_dim, 20)
        self.assertEqual(args.steps, 40)
        self.assertEqual(args.jobs, "auto")

    def test_show_config_prints_resolved_values(self) -> None:
        with patch("builtins.print") as mock_print:
            code = main(["show-config", "--scenario", "fig2", "--env-dim", "25"])

        rendered = "\n".join(" ".join(str(part) for part in call.args) for call in mock_print.call_args_list)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("bath = renewed", rendered)
        self.assertIn("env_dim = 25", rendered)

    def test_run_command_succeeds(self) -> None:
        with tempfile.TemporaryDirectory() as temp_dir:
            csv_path = Path(temp_dir) / "cli.csv"
            with patch("builtins.print"):
                code = main(
                    ["run", "--scenario", "fig1", "--env-dim", "20", "--steps", "8", "--record-every", "4", "--out", str(csv_path)]
                )

            self.assertEqual(code, EXIT_OK)
            self.assertTrue(summary_path_for(csv_path).exists())

    def test_invariant_violation_exit_code(self) -> None:
        error = InvariantViolationError("drift", step=3, trace_err=2e-6, herm_err=0.0)
        with patch("decoherence_studio.cli.run_scenario", side_effect=error), patch("builtins.print"):
            code = main(["run", "--scenario", "fig1"])

        self.assertEqual(code, EXIT_INVARIANT_VIOLATION)

    def test_bad_config_exit_code(self) -> None:
        with patch("builtins.print"):
            code = main(["run", "--config", str(Path(tempfile.gettempdir()) / "decoherence-studio-missing.cfg")])

        self.assertEqual(code, EXIT_FAILURE)

    def test_invalid_override_exit_code(self) -> None:
        with patch("builtins.print"):
            code = main(["show-config", "--scenario", "fig1", "--steps", "0"])

        self.assertEqual(code, EXIT_FAILURE)

    def test_validate_command_reports_failure_on_perturbation(self) -> None:
        with patch("builtins.print"):
            passed = main(["validate", "--trials", "8"])
            failed = main(["validate", "--trials", "8", "--perturbation", "1e-3"])

        self.assertEqual(passed, EXIT_OK)
        self.assertEqual(failed, EXIT_FAILURE)


if __name__ == "__main__":
    unittest.main()
