"""解析结果与数值结果的对照校验套件。

每项检查都用随机但可复现的参数跑一批样本，记录最大误差和容差，
汇总成一张通过/失败表。任何一项失败时 CLI 返回非零退出码。
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from time import perf_counter

import numpy as np
import pandas as pd
from loguru import logger

from decoherence_studio.quantum.measures import (
    correlation_split,
    nearest_separable_derivative,
    partial_transpose_spectrum,
    q_decoherence,
    random_product_state,
    relative_entropy,
)
from decoherence_studio.quantum.qspace import eigenvalues_descending
from decoherence_studio.quantum.states import (
    PureMixedParams,
    WeightVector,
    analytic_pt_spectrum,
    analytic_spectrum,
    build_nearest_separable,
    build_pure_mixed,
    collapsed_determinant,
    collapsed_kernel_vector,
    collapsed_matrix,
    expected_rank,
    pure_mixed_params,
    purify,
    random_pure_mixed_params,
    reduce_purification,
)
from decoherence_studio.settings import DENSITY_MIN_EIGEN_TOL, PT_NEGATIVE_TOL


VALIDATION_COLUMNS = ["Check", "Passed", "Trials", "MaxError", "Tolerance", "Detail"]
SOLVABLE_DEGENERACIES = (1, 2, 4, 8, 16)


@dataclass(frozen=True)
class ValidationReport:
    table: pd.DataFrame
    seed: int

    @property
    def passed(self) -> bool:
        return bool(self.table["Passed"].all())

    @property
    def failing_checks(self) -> list[str]:
        return self.table.loc[~self.table["Passed"], "Check"].tolist()


def _row(check: str, trials: int, max_error: float, tolerance: float, passed: bool, detail: str = "") -> dict[str, object]:
    return {
        "Check": check,
        "Passed": bool(passed),
        "Trials": int(trials),
        "MaxError": float(max_error),
        "Tolerance": float(tolerance),
        "Detail": detail,
    }


def _random_two_sector_params(rng: np.random.Generator, uniform: bool = False, max_dim: int = 12) -> PureMixedParams:
    sizes = rng.integers(1, max_dim + 1, size=2)
    return random_pure_mixed_params(rng, sizes, uniform_weights=uniform)


def check_spectrum_counts(rng: np.random.Generator, trials: int) -> dict[str, object]:
    """非零本征值个数为 N_1+N_2−1，一般权重的解析谱与数值谱一致。"""
    worst = 0.0
    mismatches = 0
    for _ in range(trials):
        params = _random_two_sector_params(rng)
        numeric = eigenvalues_descending(build_pure_mixed(params))
        n_1, n_2 = params.layout.sector_dims
        if np.count_nonzero(numeric > 1e-10) != n_1 + n_2 - 1 or expected_rank(params) != n_1 + n_2 - 1:
            mismatches += 1
        worst = max(worst, float(np.max(np.abs(numeric - analytic_spectrum(params)))))
    return _row("spectrum_counts", trials, worst, 1e-10, mismatches == 0 and worst <= 1e-10, f"秩不符 {mismatches} 次")


def check_uniform_spectrum(rng: np.random.Generator, trials: int) -> dict[str, object]:
    worst = 0.0
    for _ in range(trials):
        params = _random_two_sector_params(rng, uniform=True)
        numeric = eigenvalues_descending(build_pure_mixed(params))
        worst = max(worst, float(np.max(np.abs(numeric - analytic_spectrum(params)))))
    return _row("uniform_spectrum_values", trials, worst, 1e-10, worst <= 1e-10)


def _check_pt(rng: np.random.Generator, trials: int, sector_count: int) -> dict[str, object]:
    worst = 0.0
    wrong_counts = 0
    expected_negatives = sector_count * (sector_count - 1) // 2
    for _ in range(trials):
        sizes = rng.integers(1, 13 if sector_count == 2 else 7, size=sector_count)
        params = random_pure_mixed_params(rng, sizes)
        numeric = partial_transpose_spectrum(build_pure_mixed(params), params.layout)
        if np.count_nonzero(numeric < -PT_NEGATIVE_TOL) != expected_negatives:
            wrong_counts += 1
        worst = max(worst, float(np.max(np.abs(numeric - analytic_pt_spectrum(params)))))
    return _row(
        f"pt_spectrum_k{sector_count}",
        trials,
        worst,
        1e-10,
        wrong_counts == 0 and worst <= 1e-10,
        f"负本征值个数不为 {expected_negatives} 的样本 {wrong_counts} 个",
    )


def uniform_quantum_part(params: PureMixedParams) -> float:
    """均匀权重下 s(ρ|ρ*) 的闭式。

    记 a_k = |c_k|²/N_k，则 s = −a_1 ln a_1 − a_2 ln a_2 + (a_1+a_2) ln(a_1+a_2)。
    """
    n_1, n_2 = params.layout.sector_dims
    prob_1, prob_2 = params.probabilities
    terms = [prob_1 / n_1, prob_2 / n_2]
    combined = sum(terms)
    return float(combined * np.log(combined) - sum(value * np.log(value) for value in terms if value > 0))


def check_solvable_case() -> dict[str, object]:
    """c_1=c_2=1/√2 的均匀权重：量子部分为 ln2/N，经典部分恒为 ln2。"""
    amplitude = 1 / np.sqrt(2)
    cases = [(size, size) for size in SOLVABLE_DEGENERACIES] + [(7, 8)]
    worst = 0.0
    for sizes in cases:
        params = pure_mixed_params((amplitude, amplitude), sizes)
        rho = build_pure_mixed(params)
        quantum = relative_entropy(rho, build_nearest_separable(params))
        split = correlation_split(rho, params.layout)
        expected = uniform_quantum_part(params)
        if sizes[0] == sizes[1]:
            worst = max(worst, abs(expected - np.log(2) / sizes[0]))
        worst = max(worst, abs(quantum - expected), abs(split.quantum - expected), abs(split.classical - np.log(2)))
    return _row("solvable_relative_entropy", len(cases), worst, 1e-9, worst <= 1e-9, "含 N_1=7, N_2=8 与纯-纯极限")


def check_derivative_positivity(rng: np.random.Generator, param_count: int = 20, sigma_count: int = 50) -> dict[str, object]:
    """ρ* 沿任意乘积纯态方向的单侧导数非负。"""
    minimum = np.inf
    for index in range(param_count):
        params = _random_two_sector_params(rng, max_dim=6)
        if index == 0:
            amplitude = 1 / np.sqrt(2)
            params = PureMixedParams(amplitudes=(amplitude, amplitude), weights=params.weights, layout=params.layout)
        for _ in range(sigma_count):
            sigma = random_product_state(rng, params.layout)
            minimum = min(minimum, nearest_separable_derivative(params, sigma))
    trials = param_count * sigma_count
    return _row("nearest_separable_derivative", trials, max(0.0, -minimum), 1e-6, minimum >= -1e-6, f"最小导数 {minimum:.6g}")


def check_collapsed_kernel(rng: np.random.Generator, trials: int) -> dict[str, object]:
    worst = 0.0
    for _ in range(trials):
        params = _random_two_sector_params(rng)
        residual = collapsed_matrix(params) @ collapsed_kernel_vector(params)
        worst = max(worst, float(np.max(np.abs(residual))), abs(collapsed_determinant(params)))
    return _row("collapsed_kernel", trials, worst, 1e-12, worst <= 1e-12)


def check_purification(rng: np.random.Generator, trials: int) -> dict[str, object]:
    worst = 0.0
    for _ in range(trials):
        params = _random_two_sector_params(rng)
        vector = purify(params)
        reduced = reduce_purification(vector, params.layout)
        worst = max(
            worst,
            abs(float(np.linalg.norm(vector)) - 1.0),
            float(np.max(np.abs(reduced - build_pure_mixed(params).entries))),
        )
    return _row("purification", trials, worst, 1e-12, worst <= 1e-12)


def check_nearest_separable_q_d(rng: np.random.Generator, trials: int, perturbation: float = 0.0) -> dict[str, object]:
    """ρ* 的 Q_D 严格为零；perturbation 用于故障注入。"""
    worst = 0.0
    for _ in range(trials):
        params = _random_two_sector_params(rng)
        rho_star = np.array(build_nearest_separable(params).entries)
        if perturbation:
            layout = params.layout
            row = layout.sa_indices(0, 0)[0]
            column = layout.sa_indices(1, 1)[0]
            rho_star[row, column] += perturbation
            rho_star[column, row] += np.conj(perturbation)
        worst = max(worst, q_decoherence(rho_star, params.layout))
    return _row("nearest_separable_q_d", trials, worst, 0.0, worst == 0.0, f"注入扰动 {perturbation:g}" if perturbation else "")


def check_positivity(rng: np.random.Generator, trials: int) -> dict[str, object]:
    minimum = np.inf
    for index in range(trials):
        sector_count = 2 if index % 2 == 0 else 3
        params = random_pure_mixed_params(rng, rng.integers(1, 9, size=sector_count))
        minimum = min(minimum, float(eigenvalues_descending(build_pure_mixed(params))[-1]))
    return _row(
        "positivity",
        trials,
        max(0.0, -minimum),
        DENSITY_MIN_EIGEN_TOL,
        minimum >= -DENSITY_MIN_EIGEN_TOL,
        f"最小本征值 {minimum:.3e}",
    )


def validate_suite(seed: int = 0, trials: int = 200, perturbation: float = 0.0) -> ValidationReport:
    """按固定种子依次运行全部检查。"""
    rng = np.random.default_rng(seed)
    small_trials = max(1, trials // 4)
    checks: list[tuple[str, Callable[[], dict[str, object]]]] = [
        ("spectrum_counts", lambda: check_spectrum_counts(rng, trials)),
        ("uniform_spectrum_values", lambda: check_uniform_spectrum(rng, trials)),
        ("pt_spectrum_k2", lambda: _check_pt(rng, trials, 2)),
        ("pt_spectrum_k3", lambda: _check_pt(rng, small_trials, 3)),
        ("solvable_relative_entropy", check_solvable_case),
        ("nearest_separable_derivative", lambda: check_derivative_positivity(rng)),
        ("collapsed_kernel", lambda: check_collapsed_kernel(rng, small_trials)),
        ("purification", lambda: check_purification(rng, small_trials)),
        ("nearest_separable_q_d", lambda: check_nearest_separable_q_d(rng, small_trials, perturbation)),
        ("positivity", lambda: check_positivity(rng, trials)),
    ]
    rows: list[dict[str, object]] = []
    for name, check in checks:
        started_at = perf_counter()
        row = check()
        logger.info(
            "[validate] {} passed={} max_error={:.3e} elapsed={:.2f}s",
            name,
            row["Passed"],
            row["MaxError"],
            perf_counter() - started_at,
        )
        rows.append(row)
    return ValidationReport(table=pd.DataFrame(rows, columns=VALIDATION_COLUMNS), seed=seed)
