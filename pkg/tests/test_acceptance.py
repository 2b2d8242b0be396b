import os
import tempfile
import unittest
from pathlib import Path

import numpy as np

from decoherence_studio.config import ENV_PREFIX
from decoherence_studio.settings import build_scenario_config, preset_scenario_config
from decoherence_studio.workflow import ScenarioRunResult, run_scenario


FULL_SCALE = os.getenv(f"{ENV_PREFIX}ACCEPTANCE") == "1"


def run_preset(name: str) -> ScenarioRunResult:
    with tempfile.TemporaryDirectory() as temp_dir:
        config = build_scenario_config(preset_scenario_config(name), output=str(Path(temp_dir) / f"{name}.csv"))
        return run_scenario(config, jobs=1)


@unittest.skipUnless(FULL_SCALE, f"默认规模的场景运行需要设置 {ENV_PREFIX}ACCEPTANCE=1")
class DefaultScaleScenarioTests(unittest.TestCase):
    """按预设口径完整运行，检查各场景的定性结论。"""

    def test_finite_bath_decay_is_gaussian_down_to_its_floor(self) -> None:
        result = run_preset("fig1")
        records = result.records
        initial = records[0]
        ratios = np.array([record.q_d for record in records]) / initial.q_d
        floor = result.summary["finite_bath_floor"]

        self.assertEqual(result.decay_fit.verdict, "Gaussian")
        self.assertIsNotNone(result.decay_fit.plateau_ratio)
        self.assertLessEqual(float(ratios.min()), 1.5 * floor)
        tail = ratios[-len(ratios) // 4 :]
        self.assertGreater(float(np.median(tail)), 0.5 * floor)
        self.assertLess(float(np.median(tail)), 2.0 * floor)
        # 剩余相干只能撑起 min(N_1, N_2) 个偏转置负本征值，且都比初值浅
        self.assertGreater(records[-1].min_pt_eig, 0.5 * initial.min_pt_eig)
        self.assertTrue(all(record.neg_count <= 7 for record in records))
        self.assertLess(max(record.trace_err for record in records), 1e-10)

    def test_renewed_bath_decay_is_exponential(self) -> None:
        result = run_preset("fig2")
        records = result.records

        self.assertEqual(result.decay_fit.verdict, "Exponential")
        self.assertGreaterEqual(result.decay_fit.exp_r2, 0.98)
        self.assertLessEqual(records[-1].q_d, 0.1 * records[0].q_d)

    def test_relative_entropy_to_equimixed_state_drops_below_nearest_separable(self) -> None:
        records = run_preset("fig3").records

        self.assertGreater(records[0].s_rel_zero, records[0].s_rel_star)
        self.assertLess(min(record.s_rel_star for record in records[1:]), records[0].s_rel_star)
        self.assertLess(records[-1].s_rel_zero, records[-1].s_rel_star)

    def test_dephasing_moves_only_the_nearest_separable_distance(self) -> None:
        records = run_preset("fig4b").records
        initial, final = records[0], records[-1]

        self.assertAlmostEqual(initial.bures_zero, 2 - 2 * np.sqrt(1 / 28 + 1 / 32), places=8)
        self.assertAlmostEqual(initial.bures_star, 2 - np.sqrt(2), places=8)
        self.assertLess(final.bures_star, 0.1 * initial.bures_star)
        self.assertLess(abs(final.bures_zero - initial.bures_zero), 0.2 * initial.bures_zero)


if __name__ == "__main__":
    unittest.main()
