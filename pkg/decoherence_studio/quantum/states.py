"""纯-混合纠缠态族。

系统本征态 |s_k⟩ 与仪器第 k 个指针扇区里的混合态相关联：

    ρ = Σ_k |c_k|² |s_k⟩⟨s_k| ⊗ diag(w_k)
        + Σ_{i≠j} c_i c_j* |s_i⟩⟨s_j| ⊗ w_i w_jᵀ

这里负责构造 ρ、最近可分态 ρ*、等混合经典态 ρ₀、两扇区纯化，以及
它们的解析谱，供度量模块和校验套件对照数值结果。
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from decoherence_studio.quantum.qspace import DensityMatrix, SpaceLayout, kron
from decoherence_studio.settings import WEIGHT_SUM_TOL, WeightProfile


class StateValidationError(ValueError):
    """权重或振幅不满足归一化约束。"""


class UnsupportedSectorCountError(ValueError):
    """调用了只对两扇区成立的构造。"""


@dataclass(frozen=True)
class WeightVector:
    """非负且和为 1 的权重向量。"""

    entries: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(item) for item in self.entries)
        object.__setattr__(self, "entries", values)
        if not values:
            raise StateValidationError("权重向量不能为空")
        if any(item < 0 or not np.isfinite(item) for item in values):
            raise StateValidationError(f"权重必须是非负有限值，当前为 {values}")
        total = float(np.sum(values))
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise StateValidationError(f"权重之和必须为 1，当前偏差 {total - 1.0:.3e}；请在调用方归一化")

    def __len__(self) -> int:
        return len(self.entries)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    @property
    def square_sum(self) -> float:
        values = self.as_array()
        return float(values @ values)

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.as_array() == self.entries[0]))

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.as_array() > 0))


@dataclass(frozen=True)
class PureMixedParams:
    """振幅 c_k 与每个扇区的权重向量。

    布局只描述 S ⊗ A；环境维度在演化时另外挂上。
    """

    amplitudes: tuple[complex, ...]
    weights: tuple[WeightVector, ...]
    layout: SpaceLayout

    def __post_init__(self) -> None:
        amplitudes = tuple(complex(item) for item in self.amplitudes)
        weights = tuple(item if isinstance(item, WeightVector) else WeightVector(tuple(item)) for item in self.weights)
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "weights", weights)
        sector_count = self.layout.sector_count
        if len(amplitudes) != sector_count:
            raise StateValidationError(f"振幅数量 {len(amplitudes)} 与扇区数 {sector_count} 不一致")
        if len(weights) != sector_count:
            raise StateValidationError(f"权重向量数量 {len(weights)} 与扇区数 {sector_count} 不一致")
        for index, (weight, expected) in enumerate(zip(weights, self.layout.sector_dims)):
            if len(weight) != expected:
                raise StateValidationError(f"第 {index + 1} 个权重向量长度 {len(weight)} 与扇区维度 {expected} 不一致")
        check_amplitudes(amplitudes)

    @classmethod
    def from_arrays(
        cls,
        amplitudes: Sequence[complex],
        weights: Sequence[Sequence[float]],
    ) -> PureMixedParams:
        layout = SpaceLayout(d_s=len(amplitudes), sector_dims=tuple(len(item) for item in weights))
        return cls(
            amplitudes=tuple(amplitudes),
            weights=tuple(WeightVector(tuple(item)) for item in weights),
            layout=layout,
        )

    @property
    def sector_count(self) -> int:
        return self.layout.sector_count

    @property
    def probabilities(self) -> np.ndarray:
        """测量统计 |c_k|²。"""
        return np.abs(np.asarray(self.amplitudes)) ** 2

    @property
    def is_uniform(self) -> bool:
        return all(item.is_uniform for item in self.weights)


def check_amplitudes(amplitudes: Sequence[complex]) -> None:
    total = float(np.sum(np.abs(np.asarray(amplitudes, dtype=complex)) ** 2))
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise StateValidationError(f"振幅模方和必须为 1，当前偏差 {total - 1.0:.3e}")


def _require_two_sectors(params: PureMixedParams, operation: str) -> None:
    if params.sector_count != 2:
        raise UnsupportedSectorCountError(f"{operation} 只对两扇区成立，当前扇区数为 {params.sector_count}")


def _branch_vector(params: PureMixedParams) -> np.ndarray:
    """u = ⊕_k c_k w_k，放在 (s_k, 扇区 k) 的位置上。"""
    layout = params.layout
    vector = np.zeros(layout.sa_dim, dtype=complex)
    for index, (amplitude, weight) in enumerate(zip(params.amplitudes, params.weights)):
        vector[layout.sa_indices(index, index)] = amplitude * weight.as_array()
    return vector


def build_pure_mixed(params: PureMixedParams) -> DensityMatrix:
    """构造纯-混合纠缠态 ρ。"""
    layout = params.layout
    vector = _branch_vector(params)
    # 外积给出全部非对角块，对角块再替换成扇区内的混合态。
    matrix = np.outer(vector, vector.conj())
    for index, (probability, weight) in enumerate(zip(params.probabilities, params.weights)):
        indices = layout.sa_indices(index, index)
        matrix[np.ix_(indices, indices)] = probability * np.diag(weight.as_array())
    return DensityMatrix(matrix, layout.sa_dims).validate()


def build_nearest_separable(params: PureMixedParams) -> DensityMatrix:
    """去掉所有系统非对角块后的 ρ*。"""
    layout = params.layout
    diagonal = np.zeros(layout.sa_dim)
    for index, (probability, weight) in enumerate(zip(params.probabilities, params.weights)):
        diagonal[layout.sa_indices(index, index)] = probability * weight.as_array()
    return DensityMatrix(np.diag(diagonal).astype(complex), layout.sa_dims).validate()


def build_equimixed_classical(layout: SpaceLayout, amplitudes: Sequence[complex]) -> DensityMatrix:
    """ρ₀ = Σ_k |c_k|² |s_k⟩⟨s_k| ⊗ (扇区 k 的均匀混合)。"""
    if len(amplitudes) != layout.sector_count:
        raise StateValidationError(f"振幅数量 {len(amplitudes)} 与扇区数 {layout.sector_count} 不一致")
    check_amplitudes(amplitudes)
    probabilities = np.abs(np.asarray(amplitudes, dtype=complex)) ** 2
    diagonal = np.zeros(layout.sa_dim)
    for index, (probability, size) in enumerate(zip(probabilities, layout.sector_dims)):
        diagonal[layout.sa_indices(index, index)] = probability / size
    return DensityMatrix(np.diag(diagonal).astype(complex), layout.sa_dims).validate()


def purify(params: PureMixedParams) -> np.ndarray:
    """两扇区纯化 |ψ⟩ ∈ S ⊗ A ⊗ H，辅助空间维度 N_1·N_2。

    辅助基 e_{lk} 的下标为 l·N_2 + k。取 P = p、Q = q：
    α_i 在 e_{ik} 上的分量为 √q_k，β_j 在 e_{lj} 上的分量为 √p_l，
    于是 ⟨β_j|α_i⟩ = √p_i √q_j，迹掉 H 后正好还原 ρ。
    """
    _require_two_sectors(params, "纯化")
    layout = params.layout
    n_1, n_2 = layout.sector_dims
    aux_dim = n_1 * n_2
    c_1, c_2 = params.amplitudes
    p = params.weights[0].as_array()
    q = params.weights[1].as_array()
    sqrt_p = np.sqrt(p)
    sqrt_q = np.sqrt(q)

    amplitudes = np.zeros((layout.sa_dim, aux_dim), dtype=complex)
    for i, row in enumerate(layout.sa_indices(0, 0)):
        alpha = np.zeros(aux_dim)
        alpha[i * n_2 : (i + 1) * n_2] = sqrt_q
        amplitudes[row] = c_1 * sqrt_p[i] * alpha
    for j, row in enumerate(layout.sa_indices(1, 1)):
        beta = np.zeros(aux_dim)
        beta[np.arange(n_1) * n_2 + j] = sqrt_p
        amplitudes[row] = c_2 * sqrt_q[j] * beta
    return amplitudes.reshape(-1)


def reduce_purification(vector: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    """Tr_H |ψ⟩⟨ψ|，辅助空间维度由向量长度推出。"""
    matrix = np.asarray(vector).reshape(layout.sa_dim, -1)
    return matrix @ matrix.conj().T


def expected_rank(params: PureMixedParams) -> int:
    """ρ 的秩。

    ρ = |u⟩⟨u| + Σ_k |c_k|² (diag w_k − w_k w_kᵀ)，每个协方差块的秩是支撑数减一，
    u 不落在它们的值域里，因此再加一。
    """
    probabilities = params.probabilities
    rank = sum(weight.support_size - 1 for probability, weight in zip(probabilities, params.weights) if probability > 0)
    return int(rank + 1)


def analytic_spectrum(params: PureMixedParams) -> np.ndarray:
    """ρ 的本征值，降序并补零到 S ⊗ A 的维度。

    均匀权重时直接用闭式；一般权重只保证非零个数，数值由塌缩矩阵求解给出，
    多出来的最小本征值按秩公式置零。
    """
    _require_two_sectors(params, "解析谱")
    layout = params.layout
    n_1, n_2 = layout.sector_dims
    prob_1, prob_2 = params.probabilities
    if params.is_uniform:
        nonzero = np.concatenate(
            (
                np.full(n_1 - 1, prob_1 / n_1),
                np.full(n_2 - 1, prob_2 / n_2),
                [(n_1 - prob_1 * (n_1 - n_2)) / (n_1 * n_2)],
            )
        )
    else:
        collapsed = la.eigvalsh(collapsed_matrix(params))[::-1]
        nonzero = collapsed[: expected_rank(params)]
    spectrum = np.zeros(layout.sa_dim)
    spectrum[: nonzero.size] = nonzero
    return np.sort(spectrum)[::-1]


def analytic_pt_spectrum(params: PureMixedParams) -> np.ndarray:
    """对系统偏转置后的本征值，升序。

    对角块 |c_k|² w_k(m) 原样保留；每对扇区 (k, l) 的秩一非对角块
    c_k c_l* w_k w_lᵀ 换位后贡献 ±|c_k||c_l|‖w_k‖‖w_l‖。
    """
    layout = params.layout
    moduli = np.abs(np.asarray(params.amplitudes))
    norms = np.array([np.sqrt(weight.square_sum) for weight in params.weights])
    values: list[float] = []
    for probability, weight in zip(params.probabilities, params.weights):
        values.extend(probability * weight.as_array())
    for k in range(params.sector_count):
        for l in range(k + 1, params.sector_count):
            pair = moduli[k] * moduli[l] * norms[k] * norms[l]
            values.extend((pair, -pair))
    spectrum = np.zeros(layout.sa_dim)
    spectrum[: len(values)] = values
    return np.sort(spectrum)


def collapsed_matrix(params: PureMixedParams) -> np.ndarray:
    """去掉恒为零的行列后剩下的 (N_1+N_2) 阶矩阵。"""
    _require_two_sectors(params, "塌缩矩阵")
    layout = params.layout
    keep = np.concatenate((layout.sa_indices(0, 0), layout.sa_indices(1, 1)))
    return build_pure_mixed(params).entries[np.ix_(keep, keep)]


def collapsed_determinant(params: PureMixedParams) -> complex:
    return complex(la.det(collapsed_matrix(params)))


def collapsed_kernel_vector(params: PureMixedParams) -> np.ndarray:
    """塌缩矩阵的零空间向量：前 N_1 个分量为 c_1c_2*，其余为 −|c_1|²。"""
    _require_two_sectors(params, "塌缩矩阵零向量")
    n_1, n_2 = params.layout.sector_dims
    c_1, c_2 = params.amplitudes
    return np.concatenate((np.full(n_1, c_1 * np.conj(c_2)), np.full(n_2, -abs(c_1) ** 2, dtype=complex)))


def weight_profile(kind: WeightProfile, size: int) -> WeightVector:
    """场景预设使用的扇区权重：均匀、按 n − m 线性递减，或全部集中在首个态上。

    peaked 让 ρ₀ 成为纯态，ρ* 只剩两个投影，两者的 Bures 距离取到解析值。
    """
    if size < 1:
        raise StateValidationError(f"扇区维度必须为正整数，当前为 {size}")
    if kind == "uniform":
        return WeightVector(tuple(np.full(size, 1.0 / size)))
    if kind == "linear":
        raw = np.arange(size, 0, -1, dtype=float)
        return WeightVector(tuple(raw / raw.sum()))
    if kind == "peaked":
        raw = np.zeros(size)
        raw[0] = 1.0
        return WeightVector(tuple(raw))
    raise StateValidationError(f"未知权重形状: {kind}")


def pure_mixed_params(
    amplitudes: Sequence[complex],
    sector_dims: Sequence[int],
    profile: WeightProfile = "uniform",
) -> PureMixedParams:
    weights = tuple(weight_profile(profile, int(size)) for size in sector_dims)
    layout = SpaceLayout(d_s=len(amplitudes), sector_dims=tuple(int(size) for size in sector_dims))
    return PureMixedParams(amplitudes=tuple(amplitudes), weights=weights, layout=layout)


def pure_pure_params(amplitudes: Sequence[complex]) -> PureMixedParams:
    """每个扇区只有一个态时退化为纯-纯 Schmidt 形式。"""
    return pure_mixed_params(amplitudes, (1,) * len(amplitudes))


def random_pure_mixed_params(
    rng: np.random.Generator,
    sector_dims: Sequence[int],
    uniform_weights: bool = False,
) -> PureMixedParams:
    """可复现的随机合法参数，用于性质校验。"""
    sizes = tuple(int(size) for size in sector_dims)
    if uniform_weights:
        weights = tuple(weight_profile("uniform", size) for size in sizes)
    else:
        weights = []
        for size in sizes:
            raw = rng.uniform(0.05, 1.0, size)
            weights.append(WeightVector(tuple(raw / raw.sum())))
        weights = tuple(weights)
    probabilities = rng.uniform(0.1, 0.9, len(sizes))
    probabilities = probabilities / probabilities.sum()
    phases = rng.uniform(0.0, 2 * np.pi, len(sizes))
    amplitudes = tuple(np.sqrt(probabilities) * np.exp(1j * phases))
    layout = SpaceLayout(d_s=len(sizes), sector_dims=sizes)
    return PureMixedParams(amplitudes=amplitudes, weights=weights, layout=layout)


def product_density(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """|α⟩⟨α| ⊗ |β⟩⟨β|。"""
    return kron(np.outer(alpha, np.conj(alpha)), np.outer(beta, np.conj(beta)))
