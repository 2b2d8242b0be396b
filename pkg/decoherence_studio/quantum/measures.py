"""标量诊断量。

熵、相对熵、保真度与 Bures 距离、退相干指标 Q_D、弛豫指标 Q_R、
偏转置最小本征值、关联拆分，以及最近可分态的数值导数证书。
所有熵都以自然对数计，单位 nats。
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from decoherence_studio.quantum.qspace import (
    DensityMatrix,
    LayoutError,
    SpaceLayout,
    as_matrix,
    check_density_matrix,
    diagonalize,
    eigenvalues_descending,
    hermitian_fn,
    kron,
    partial_trace,
    partial_transpose,
)
from decoherence_studio.quantum.states import (
    PureMixedParams,
    build_nearest_separable,
    build_pure_mixed,
    product_density,
)
from decoherence_studio.settings import (
    DERIVATIVE_MAX_STEP,
    DERIVATIVE_STEP,
    EIGEN_FLOOR,
    MEASURE_INPUT_TOL,
    PT_NEGATIVE_TOL,
)


class NonProductStateError(ValueError):
    """导数证书要求 σ 是 |α⟩⟨α| ⊗ |β⟩⟨β| 形式的乘积纯态。"""


@dataclass(frozen=True)
class CorrelationSplit:
    """总关联及其量子、经典部分。"""

    total: float
    quantum: float
    classical: float


@dataclass(frozen=True)
class PartialTransposeMinimum:
    min_eigenvalue: float
    negative_count: int


@dataclass(frozen=True, eq=False)
class ProductState:
    """S 与 A 上各自归一化的分量向量。"""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self) -> None:
        alpha = np.asarray(self.alpha, dtype=complex).reshape(-1)
        beta = np.asarray(self.beta, dtype=complex).reshape(-1)
        for name, vector in (("alpha", alpha), ("beta", beta)):
            norm = float(np.linalg.norm(vector))
            if abs(norm - 1.0) > 1e-10:
                raise NonProductStateError(f"{name} 必须归一化，当前范数为 {norm:.12f}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    def density_matrix(self) -> np.ndarray:
        return product_density(self.alpha, self.beta)


def _checked(matrix: np.ndarray | DensityMatrix) -> np.ndarray:
    entries = as_matrix(matrix)
    check_density_matrix(entries, MEASURE_INPUT_TOL, MEASURE_INPUT_TOL, MEASURE_INPUT_TOL)
    # 轨迹上的约化态只在宽松容差内厄米，这里先对称化再交给本征求解。
    return (entries + entries.conj().T) / 2


def _checked_pair(rho: np.ndarray | DensityMatrix, sigma: np.ndarray | DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    left = _checked(rho)
    right = _checked(sigma)
    if left.shape != right.shape:
        raise LayoutError(f"两个密度矩阵维度不一致: {left.shape} 与 {right.shape}")
    return left, right


def _require_sa(matrix: np.ndarray, layout: SpaceLayout, two_sectors: bool = False) -> None:
    if matrix.shape[0] != layout.sa_dim:
        raise LayoutError(f"需要 S ⊗ A 上的矩阵（维度 {layout.sa_dim}），当前维度为 {matrix.shape[0]}")
    if two_sectors and layout.d_s != 2:
        raise LayoutError(f"该指标只对两能级系统定义，当前系统维度为 {layout.d_s}")


def vn_entropy(rho: np.ndarray | DensityMatrix, floor: float = EIGEN_FLOOR) -> float:
    """−Σ λ ln λ，只累加大于 floor 的本征值。"""
    eigenvalues = eigenvalues_descending(_checked(rho))
    kept = eigenvalues[eigenvalues > floor]
    return float(-np.sum(kept * np.log(kept)))


def relative_entropy(
    rho: np.ndarray | DensityMatrix,
    sigma: np.ndarray | DensityMatrix,
    floor: float = EIGEN_FLOOR,
) -> float:
    """s(ρ|σ) = Tr ρ(ln ρ − ln σ)。

    σ 的本征值先截断到 floor 再取对数；ρ 的支撑落在 σ 的支撑内时结果是精确的。
    """
    if floor <= 0:
        raise ValueError(f"相对熵的本征值下限必须为正，当前为 {floor}")
    left, right = _checked_pair(rho, sigma)
    rho_values = eigenvalues_descending(left)
    kept = rho_values[rho_values > floor]
    rho_log_rho = float(np.sum(kept * np.log(kept)))

    spectrum = diagonalize(right)
    vectors = spectrum.eigenvectors
    # ⟨v_k|ρ|v_k⟩
    overlaps = np.real(np.einsum("ik,ij,jk->k", vectors.conj(), left, vectors))
    rho_log_sigma = float(np.sum(np.log(np.maximum(spectrum.eigenvalues, floor)) * overlaps))
    return rho_log_rho - rho_log_sigma


def fidelity(rho: np.ndarray | DensityMatrix, sigma: np.ndarray | DensityMatrix) -> float:
    """F = (Tr|√ρ √σ|)²，即 √ρ√σ 奇异值之和的平方。"""
    left, right = _checked_pair(rho, sigma)
    product = hermitian_fn(left, "sqrt") @ hermitian_fn(right, "sqrt")
    value = float(np.sum(la.svdvals(product)) ** 2)
    return float(np.clip(value, 0.0, 1.0))


def bures_distance(rho: np.ndarray | DensityMatrix, sigma: np.ndarray | DensityMatrix) -> float:
    return 2.0 - 2.0 * np.sqrt(fidelity(rho, sigma))


def q_decoherence(rho: np.ndarray | DensityMatrix, layout: SpaceLayout) -> float:
    """系统非对角块 (s_1 扇区 1, s_2 扇区 2) 的模方和。

    只取上三角那一块；厄米性保证下三角的共轭块贡献相同。
    """
    matrix = as_matrix(rho)
    _require_sa(matrix, layout, two_sectors=True)
    block = matrix[np.ix_(layout.sa_indices(0, 0), layout.sa_indices(1, 1))]
    return float(np.sum(np.abs(block) ** 2))


def _relaxation(matrix: np.ndarray, layout: SpaceLayout, targets: tuple[float, float]) -> float:
    total = 0.0
    for index, target in enumerate(targets):
        diagonal = np.real(np.diag(matrix)[layout.sa_indices(index, index)])
        total += float(np.sum((target - diagonal) ** 2))
    return total


def q_relaxation(rho: np.ndarray | DensityMatrix, layout: SpaceLayout) -> float:
    """扇区对角元相对 1/N_k 的平方偏差之和。"""
    matrix = as_matrix(rho)
    _require_sa(matrix, layout, two_sectors=True)
    n_1, n_2 = layout.sector_dims
    return _relaxation(matrix, layout, (1.0 / n_1, 1.0 / n_2))


def q_relaxation_weighted(
    rho: np.ndarray | DensityMatrix,
    layout: SpaceLayout,
    amplitudes: tuple[complex, ...],
) -> float:
    """同 q_relaxation，但目标值取 |c_k|²/N_k，在 ρ₀ 处严格为零。"""
    matrix = as_matrix(rho)
    _require_sa(matrix, layout, two_sectors=True)
    if len(amplitudes) != 2:
        raise LayoutError(f"需要两个振幅，当前为 {len(amplitudes)} 个")
    n_1, n_2 = layout.sector_dims
    prob_1, prob_2 = (abs(complex(item)) ** 2 for item in amplitudes)
    return _relaxation(matrix, layout, (prob_1 / n_1, prob_2 / n_2))


def block_diagonal_truncation(rho: np.ndarray | DensityMatrix, layout: SpaceLayout) -> np.ndarray:
    """Σ_s |s⟩⟨s| ⊗ ⟨s|ρ|s⟩，即去掉系统指标不同的所有块。"""
    matrix = as_matrix(rho)
    _require_sa(matrix, layout)
    d_s, n_a = layout.sa_dims
    tensor = np.array(matrix, dtype=complex).reshape(d_s, n_a, d_s, n_a)
    mask = np.eye(d_s, dtype=bool)[:, None, :, None]
    return np.where(mask, tensor, 0.0).reshape(layout.sa_dim, layout.sa_dim)


def partial_transpose_spectrum(rho: np.ndarray | DensityMatrix, layout: SpaceLayout) -> np.ndarray:
    """偏转置的本征值，升序。"""
    matrix = as_matrix(rho)
    _require_sa(matrix, layout)
    return eigenvalues_descending(partial_transpose(matrix, layout))[::-1].copy()


def min_pt_eigenvalue(
    rho: np.ndarray | DensityMatrix,
    layout: SpaceLayout,
    tol: float = PT_NEGATIVE_TOL,
) -> PartialTransposeMinimum:
    spectrum = partial_transpose_spectrum(_checked(rho), layout)
    return PartialTransposeMinimum(
        min_eigenvalue=float(spectrum[0]),
        negative_count=int(np.count_nonzero(spectrum < -tol)),
    )


def coherence_singular_values(rho: np.ndarray | DensityMatrix, layout: SpaceLayout) -> np.ndarray:
    """相干块 (s_1 扇区 1, s_2 扇区 2) 的奇异值，降序。

    ρ 只有两个系统对角块和这一块相干块时，偏转置的负本征值恰好是这些奇异值取负，
    负本征值个数因此不超过 min(N_1, N_2)。
    """
    matrix = as_matrix(rho)
    _require_sa(matrix, layout, two_sectors=True)
    block = matrix[np.ix_(layout.sa_indices(0, 0), layout.sa_indices(1, 1))]
    return la.svdvals(block)


def correlation_split(
    rho: np.ndarray | DensityMatrix,
    layout: SpaceLayout,
    floor: float = EIGEN_FLOOR,
) -> CorrelationSplit:
    """总关联 s(ρ|ρ_S*⊗ρ_A*) 拆成量子部分 s(ρ|ρ*) 与经典部分 s(ρ*|ρ_S*⊗ρ_A*)。"""
    matrix = _checked(rho)
    _require_sa(matrix, layout)
    truncated = block_diagonal_truncation(matrix, layout)
    reduced_s = partial_trace(truncated, layout.sa_dims, keep=["system"])
    reduced_a = partial_trace(truncated, layout.sa_dims, keep=["apparatus"])
    marginals = kron(reduced_s, reduced_a)
    return CorrelationSplit(
        total=relative_entropy(matrix, marginals, floor),
        quantum=relative_entropy(matrix, truncated, floor),
        classical=relative_entropy(truncated, marginals, floor),
    )


def product_state_from_matrix(matrix: np.ndarray | DensityMatrix, layout: SpaceLayout) -> ProductState:
    """从秩一且可分解的密度矩阵里取回 (α, β)，否则报错。"""
    entries = as_matrix(matrix)
    _require_sa(entries, layout)
    spectrum = diagonalize(entries)
    if abs(spectrum.eigenvalues[0] - 1.0) > 1e-8 or np.any(np.abs(spectrum.eigenvalues[1:]) > 1e-8):
        raise NonProductStateError("σ 不是纯态，无法写成 |α⟩⟨α| ⊗ |β⟩⟨β|")
    vector = spectrum.eigenvectors[:, 0].reshape(layout.sa_dims)
    left, singular_values, right = la.svd(vector)
    if singular_values.size > 1 and singular_values[1] > 1e-8:
        raise NonProductStateError(f"σ 在 S 与 A 之间存在纠缠，第二奇异值为 {singular_values[1]:.3e}")
    return ProductState(alpha=left[:, 0], beta=right[0] / np.linalg.norm(right[0]))


def random_product_state(rng: np.random.Generator, layout: SpaceLayout) -> ProductState:
    alpha = rng.standard_normal(layout.d_s) + 1j * rng.standard_normal(layout.d_s)
    beta = rng.standard_normal(layout.n_a) + 1j * rng.standard_normal(layout.n_a)
    return ProductState(alpha=alpha / np.linalg.norm(alpha), beta=beta / np.linalg.norm(beta))


def nearest_separable_derivative(
    params: PureMixedParams,
    sigma: ProductState | np.ndarray | DensityMatrix,
    h: float = DERIVATIVE_STEP,
    floor: float = EIGEN_FLOOR,
) -> float:
    """f(x) = s(ρ | (1−x)ρ* + xσ) 在 x=0 处的单侧差商 [f(h) − f(0)]/h。

    原样返回差商，不做截断；ρ* 是局部最近可分态时结果应非负。
    """
    if not 0 < h <= DERIVATIVE_MAX_STEP:
        raise ValueError(f"差商步长必须落在 (0, {DERIVATIVE_MAX_STEP}]，当前为 {h}")
    layout = params.layout
    product = sigma if isinstance(sigma, ProductState) else product_state_from_matrix(sigma, layout)
    sigma_matrix = product.density_matrix()
    if sigma_matrix.shape[0] != layout.sa_dim:
        raise LayoutError(f"σ 的维度 {sigma_matrix.shape[0]} 与 S ⊗ A 维度 {layout.sa_dim} 不一致")
    rho = build_pure_mixed(params).entries
    rho_star = build_nearest_separable(params).entries
    start = relative_entropy(rho, rho_star, floor)
    shifted = relative_entropy(rho, (1.0 - h) * rho_star + h * sigma_matrix, floor)
    return (shifted - start) / h
