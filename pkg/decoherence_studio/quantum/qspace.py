"""张量积空间的线性代数底座。

基矢顺序固定为“系统指标在最外层，其次是按扇区拼接的仪器指标，环境指标在最内层”。
Q_D、Q_R 以及所有按行列号描述的公式都依赖这一顺序，因此这里是唯一定义它的地方。
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from functools import reduce
from typing import Literal

import numpy as np
import scipy.linalg as la

from decoherence_studio.settings import (
    DENSITY_HERMITIAN_TOL,
    DENSITY_MIN_EIGEN_TOL,
    DENSITY_TRACE_TOL,
    EIGEN_FLOOR,
    HERMITIAN_SYMMETRIZE_TOL,
)


Subsystem = Literal["system", "apparatus", "environment"]
SUBSYSTEM_ORDER: tuple[str, ...] = ("system", "apparatus", "environment")
MatrixFunction = Callable[[np.ndarray], np.ndarray] | Literal["log", "sqrt", "exp", "identity"]

_NAMED_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "log": np.log,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "identity": lambda values: values,
}


class LayoutError(ValueError):
    """矩阵维度与空间布局不一致。"""


class HermiticityError(ValueError):
    """输入矩阵偏离厄米性超出对称化阈值。"""


class DensityMatrixError(ValueError):
    """矩阵不满足密度矩阵的厄米、单位迹或半正定约束。"""


@dataclass(frozen=True)
class SpaceLayout:
    """S ⊗ A ⊗ E 的维度与扇区结构。

    仪器空间由 K 个指针扇区拼接而成，K 必须等于系统维度：每个被测系统本征态
    对应一个指针扇区。环境维度为 1 时布局退化为 S ⊗ A。
    """

    d_s: int
    sector_dims: tuple[int, ...]
    n_e: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "sector_dims", tuple(int(item) for item in self.sector_dims))
        if self.d_s < 2:
            raise LayoutError(f"系统维度至少为 2，当前为 {self.d_s}")
        if len(self.sector_dims) != self.d_s:
            raise LayoutError(f"扇区数 {len(self.sector_dims)} 必须等于系统维度 {self.d_s}")
        if any(item < 1 for item in self.sector_dims):
            raise LayoutError(f"扇区维度必须为正整数，当前为 {self.sector_dims}")
        if self.n_e < 1:
            raise LayoutError(f"环境维度必须为正整数，当前为 {self.n_e}")

    @property
    def sector_count(self) -> int:
        return len(self.sector_dims)

    @property
    def n_a(self) -> int:
        return sum(self.sector_dims)

    @property
    def sa_dim(self) -> int:
        return self.d_s * self.n_a

    @property
    def total_dim(self) -> int:
        return self.sa_dim * self.n_e

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.d_s, self.n_a, self.n_e)

    @property
    def sa_dims(self) -> tuple[int, int]:
        return (self.d_s, self.n_a)

    @property
    def sector_offsets(self) -> tuple[int, ...]:
        offsets = np.concatenate(([0], np.cumsum(self.sector_dims)[:-1]))
        return tuple(int(item) for item in offsets)

    def sector_slice(self, sector: int) -> slice:
        """仪器空间内第 `sector` 个扇区的下标范围。"""
        start = self.sector_offsets[sector]
        return slice(start, start + self.sector_dims[sector])

    def sa_indices(self, system: int, sector: int) -> np.ndarray:
        """|s_system⟩ ⊗ (扇区 sector) 在 S ⊗ A 基矢里的行号。"""
        apparatus = np.arange(self.n_a)[self.sector_slice(sector)]
        return system * self.n_a + apparatus

    def with_environment(self, n_e: int) -> SpaceLayout:
        return SpaceLayout(d_s=self.d_s, sector_dims=self.sector_dims, n_e=n_e)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """带布局信息的只读密度矩阵。"""

    entries: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        matrix = np.array(self.entries, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise LayoutError(f"密度矩阵必须是方阵，当前形状为 {matrix.shape}")
        if int(np.prod(self.dims)) != matrix.shape[0]:
            raise LayoutError(f"矩阵维度 {matrix.shape[0]} 与子系统维度 {self.dims} 不一致")
        matrix.flags.writeable = False
        object.__setattr__(self, "entries", matrix)
        object.__setattr__(self, "dims", tuple(int(item) for item in self.dims))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def validate(
        self,
        hermitian_tol: float = DENSITY_HERMITIAN_TOL,
        trace_tol: float = DENSITY_TRACE_TOL,
        eigen_tol: float = DENSITY_MIN_EIGEN_TOL,
    ) -> DensityMatrix:
        check_density_matrix(self.entries, hermitian_tol, trace_tol, eigen_tol)
        return self


@dataclass(frozen=True, eq=False)
class HermitianSpectrum:
    """按降序排列的本征值与对应的本征向量列。"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


def as_matrix(value: np.ndarray | DensityMatrix) -> np.ndarray:
    if isinstance(value, DensityMatrix):
        return value.entries
    return np.asarray(value)


def check_density_matrix(
    matrix: np.ndarray | DensityMatrix,
    hermitian_tol: float = DENSITY_HERMITIAN_TOL,
    trace_tol: float = DENSITY_TRACE_TOL,
    eigen_tol: float = DENSITY_MIN_EIGEN_TOL,
) -> None:
    """按给定容差校验厄米、单位迹和半正定。"""
    m = as_matrix(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DensityMatrixError(f"密度矩阵必须是方阵，当前形状为 {m.shape}")
    asymmetry = hermitian_error(m)
    if asymmetry > hermitian_tol:
        raise DensityMatrixError(f"密度矩阵不是厄米矩阵: max|M - M†| = {asymmetry:.3e}")
    trace_error = abs(np.trace(m) - 1.0)
    if trace_error > trace_tol:
        raise DensityMatrixError(f"密度矩阵的迹偏离 1: |Tr - 1| = {trace_error:.3e}")
    min_eigenvalue = float(la.eigvalsh(_symmetrize(m))[0])
    if min_eigenvalue < -eigen_tol:
        raise DensityMatrixError(f"密度矩阵存在负本征值: λ_min = {min_eigenvalue:.3e}")


def hermitian_error(matrix: np.ndarray) -> float:
    m = np.asarray(matrix)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def ensure_hermitian(matrix: np.ndarray | DensityMatrix, tol: float = HERMITIAN_SYMMETRIZE_TOL) -> np.ndarray:
    """在阈值内对称化；偏差更大说明上游有 bug，直接报错。"""
    m = as_matrix(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LayoutError(f"需要方阵，当前形状为 {m.shape}")
    asymmetry = hermitian_error(m)
    if asymmetry > tol:
        raise HermiticityError(f"矩阵偏离厄米性 {asymmetry:.3e}，超过对称化阈值 {tol:.0e}")
    return _symmetrize(m)


def kron(*matrices: np.ndarray) -> np.ndarray:
    """多个因子的 Kronecker 积，按参数顺序对应张量积因子顺序。"""
    if not matrices:
        raise ValueError("kron 至少需要一个矩阵")
    return reduce(np.kron, (np.asarray(item) for item in matrices))


def diagonalize(matrix: np.ndarray | DensityMatrix) -> HermitianSpectrum:
    """厄米矩阵本征分解，本征值降序排列。"""
    symmetric = ensure_hermitian(matrix)
    eigenvalues, eigenvectors = la.eigh(symmetric)
    return HermitianSpectrum(eigenvalues=eigenvalues[::-1].copy(), eigenvectors=eigenvectors[:, ::-1].copy())


def eigenvalues_descending(matrix: np.ndarray | DensityMatrix) -> np.ndarray:
    symmetric = ensure_hermitian(matrix)
    return la.eigvalsh(symmetric)[::-1].copy()


def hermitian_fn(
    matrix: np.ndarray | DensityMatrix,
    fn: MatrixFunction,
    floor: float | None = None,
) -> np.ndarray:
    """在本征基里作用标量函数：V f(Λ) V†。

    `log` 在零点发散，本征值先截断到 floor（默认 1e-12，必须为正）；
    `sqrt` 在零点连续，floor 默认为 0 且允许取 0，只负责吸收数值噪声造成的微小负值：
    正的下限会把零本征值抬成 √floor，纯态的保真度就不再精确。
    |λ| ≤ dim·eps·max|λ| 的本征值落在本征求解的舍入噪声内，直接视为零。
    传入自定义函数时只有显式给出 floor 才截断。
    """
    if isinstance(fn, str):
        if fn not in _NAMED_FUNCTIONS:
            raise ValueError(f"未知矩阵函数: {fn}")
        scalar_fn = _NAMED_FUNCTIONS[fn]
        if fn == "log":
            floor = EIGEN_FLOOR if floor is None else floor
            if floor <= 0:
                raise ValueError(f"log 需要正的本征值下限，当前为 {floor}")
        elif fn == "sqrt":
            floor = 0.0 if floor is None else floor
            if floor < 0:
                raise ValueError(f"sqrt 的本征值下限不能为负，当前为 {floor}")
    else:
        scalar_fn = fn

    spectrum = diagonalize(matrix)
    values = spectrum.eigenvalues
    if fn == "sqrt":
        # 低于本征求解舍入噪声的本征值按零处理，否则开方后会放大成 1e-8 量级的误差。
        noise = values.size * np.finfo(float).eps * np.max(np.abs(values), initial=0.0)
        values = np.where(np.abs(values) <= noise, 0.0, values)
    if floor is not None:
        values = np.maximum(values, floor)
    mapped = np.asarray(scalar_fn(values))
    vectors = spectrum.eigenvectors
    return (vectors * mapped) @ vectors.conj().T


def _resolve_dims(layout: SpaceLayout | Sequence[int], matrix_dim: int) -> tuple[int, ...]:
    if isinstance(layout, SpaceLayout):
        if matrix_dim == layout.total_dim:
            return layout.dims
        if matrix_dim == layout.sa_dim:
            return layout.sa_dims
        raise LayoutError(
            f"矩阵维度 {matrix_dim} 既不等于全空间维度 {layout.total_dim} 也不等于 S-A 维度 {layout.sa_dim}"
        )
    dims = tuple(int(item) for item in layout)
    if int(np.prod(dims)) != matrix_dim:
        raise LayoutError(f"矩阵维度 {matrix_dim} 与子系统维度 {dims} 不一致")
    return dims


def _resolve_keep(keep: Iterable[Subsystem | int], factor_count: int) -> list[int]:
    indices: list[int] = []
    for item in keep:
        index = SUBSYSTEM_ORDER.index(item) if isinstance(item, str) else int(item)
        if not 0 <= index < factor_count:
            raise LayoutError(f"子系统 {item} 超出当前布局的 {factor_count} 个因子")
        indices.append(index)
    if not indices:
        raise LayoutError("至少需要保留一个子系统")
    return sorted(set(indices))


def partial_trace(
    rho: np.ndarray | DensityMatrix,
    layout: SpaceLayout | Sequence[int],
    keep: Iterable[Subsystem | int],
) -> np.ndarray:
    """对未保留的子系统求偏迹，保留因子按原顺序排列。"""
    matrix = as_matrix(rho)
    dims = _resolve_dims(layout, matrix.shape[0])
    kept = _resolve_keep(keep, len(dims))
    count = len(dims)
    tensor = matrix.reshape(dims + dims)

    # 用 einsum 下标一次性收缩所有被迹掉的因子。
    row_labels = list(range(count))
    col_labels = [count + index if index in kept else index for index in range(count)]
    output_labels = [index for index in kept] + [count + index for index in kept]
    reduced = np.einsum(tensor, row_labels + col_labels, output_labels)
    kept_dim = int(np.prod([dims[index] for index in kept]))
    return reduced.reshape(kept_dim, kept_dim)


def partial_transpose(
    rho: np.ndarray | DensityMatrix,
    layout: SpaceLayout | Sequence[int],
) -> np.ndarray:
    """对系统因子做偏转置：⟨s_i,α|ρ^PT|s_j,β⟩ = ⟨s_j,α|ρ|s_i,β⟩。"""
    matrix = as_matrix(rho)
    if isinstance(layout, SpaceLayout):
        if matrix.shape[0] != layout.sa_dim:
            raise LayoutError(
                f"偏转置只定义在 S ⊗ A 上，矩阵维度 {matrix.shape[0]} 不等于 {layout.sa_dim}；请先迹掉环境"
            )
        dims = layout.sa_dims
    else:
        dims = tuple(int(item) for item in layout)
        if len(dims) != 2:
            raise LayoutError(f"偏转置需要两因子划分，当前为 {dims}")
        if dims[0] * dims[1] != matrix.shape[0]:
            raise LayoutError(f"矩阵维度 {matrix.shape[0]} 与两因子划分 {dims} 不一致")
    d_left, d_right = dims
    tensor = matrix.reshape(d_left, d_right, d_left, d_right)
    return tensor.transpose(2, 1, 0, 3).reshape(d_left * d_right, d_left * d_right)
