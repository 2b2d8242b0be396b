"""三体哈密顿量与系综演化。

H = H_S⊗I⊗I + I⊗H_A⊗I + I⊗I⊗H_E + λ I_S⊗V_{A-E}

混合初态先分解成纯态系综，再与随机环境纯态做张量积。哈密顿量只对角化一次，
系综成员的系数一直保存在本征基里，每一步只乘相位；需要记录或更新环境时
才变换回计算基，求约化态 ρ^{S-A}(t)。
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, fields

import numpy as np
from loguru import logger

from decoherence_studio.quantum.measures import (
    bures_distance,
    min_pt_eigenvalue,
    q_decoherence,
    q_relaxation,
    q_relaxation_weighted,
    relative_entropy,
)
from decoherence_studio.quantum.qspace import (
    DensityMatrix,
    HermitianSpectrum,
    LayoutError,
    SpaceLayout,
    as_matrix,
    diagonalize,
    ensure_hermitian,
    hermitian_error,
    kron,
)
from decoherence_studio.quantum.states import (
    PureMixedParams,
    build_equimixed_classical,
    build_nearest_separable,
    build_pure_mixed,
)
from decoherence_studio.settings import (
    DIAGNOSTIC_ABORT_TOL,
    DIAGNOSTIC_WARN_TOL,
    EIGEN_FLOOR,
    ENSEMBLE_WEIGHT_THRESHOLD,
    FALLBACK_TIME_STEP,
    PHASE_BUDGET,
    TRAJECTORY_NEGATIVE_TOL,
    BathKind,
    CouplingKind,
)


class InvariantViolationError(RuntimeError):
    """约化态的迹或厄米性漂移超过中止阈值。"""

    def __init__(self, message: str, step: int, trace_err: float, herm_err: float) -> None:
        super().__init__(message)
        self.step = step
        self.trace_err = trace_err
        self.herm_err = herm_err


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """三体哈密顿量的参数。

    H_A 由扇区能量按扇区维度重复得到，指针态能量在扇区内简并。
    `seed` 决定耦合矩阵的随机抽样。
    """

    h_s: np.ndarray
    sector_energies: tuple[float, ...]
    h_e_spectrum: tuple[float, ...]
    coupling: CouplingKind = "random"
    coupling_strength: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        h_s = ensure_hermitian(np.atleast_2d(np.asarray(self.h_s)))
        if np.iscomplexobj(h_s) and not np.any(np.imag(h_s)):
            h_s = np.real(h_s)
        object.__setattr__(self, "h_s", h_s)
        object.__setattr__(self, "sector_energies", tuple(float(item) for item in self.sector_energies))
        object.__setattr__(self, "h_e_spectrum", tuple(float(item) for item in self.h_e_spectrum))
        if self.coupling not in ("random", "nondemolition"):
            raise ValueError(f"未知耦合类型: {self.coupling}")
        if self.coupling_strength < 0:
            raise ValueError(f"耦合强度不能为负，当前为 {self.coupling_strength}")
        if not self.h_e_spectrum:
            raise ValueError("环境能谱不能为空")

    @property
    def env_dim(self) -> int:
        return len(self.h_e_spectrum)


@dataclass(frozen=True)
class BathMode:
    """有限环境，或每隔 `every` 步换一个新的随机环境态。"""

    kind: BathKind = "finite"
    every: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("finite", "renewed"):
            raise ValueError(f"未知环境模式: {self.kind}")
        if self.every < 1:
            raise ValueError(f"环境更新间隔至少为 1 步，当前为 {self.every}")

    @classmethod
    def finite(cls) -> BathMode:
        return cls("finite", 1)

    @classmethod
    def renewed(cls, every: int = 1) -> BathMode:
        return cls("renewed", every)

    @property
    def renews(self) -> bool:
        return self.kind == "renewed"


@dataclass(frozen=True)
class TrajectoryRecord:
    t: float
    q_d: float
    q_r: float
    s_rel_star: float
    s_rel_zero: float
    bures_star: float
    bures_zero: float
    min_pt_eig: float
    neg_count: int
    trace_err: float
    herm_err: float

    def as_row(self) -> tuple[float | int, ...]:
        return astuple(self)


TRAJECTORY_COLUMNS: tuple[str, ...] = tuple(item.name for item in fields(TrajectoryRecord))


@dataclass(frozen=True, eq=False)
class EnsembleMember:
    weight: float
    vector: np.ndarray


def uniform_env_spectrum(low: float, high: float, n_e: int) -> tuple[float, ...]:
    """在 [low, high] 上均匀铺开的环境能级。"""
    if n_e == 1:
        return ((low + high) / 2,)
    return tuple(float(item) for item in np.linspace(low, high, n_e))


def _generator(seed: int | np.random.Generator) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_hermitian(dim: int, seed: int | np.random.Generator) -> np.ndarray:
    """GOE 风格的实对称随机矩阵，按 1/√dim 缩放，谱半径约为 2。

    非对角元方差为 1，对角元方差为 2。
    """
    if dim < 1:
        raise ValueError(f"矩阵维度至少为 1，当前为 {dim}")
    rng = _generator(seed)
    raw = rng.standard_normal((dim, dim))
    return (raw + raw.T) / np.sqrt(2.0) / np.sqrt(dim)


def haar_random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar 随机纯态：复高斯向量归一化。"""
    vector = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return vector / np.linalg.norm(vector)


def apparatus_hamiltonian(spec: HamiltonianSpec, layout: SpaceLayout) -> np.ndarray:
    if len(spec.sector_energies) != layout.sector_count:
        raise LayoutError(f"扇区能量数量 {len(spec.sector_energies)} 与扇区数 {layout.sector_count} 不一致")
    return np.diag(np.repeat(spec.sector_energies, layout.sector_dims))


def build_coupling(spec: HamiltonianSpec, layout: SpaceLayout) -> np.ndarray:
    """A ⊗ E 上的耦合算符 V（不含 λ）。"""
    rng = np.random.default_rng(spec.seed)
    if spec.coupling == "random":
        return random_hermitian(layout.n_a * layout.n_e, rng)
    # 非破坏测量型耦合与 H_A 对易，不会在扇区之间搬运布居。
    return kron(apparatus_hamiltonian(spec, layout), random_hermitian(layout.n_e, rng))


def coupling_norm(coupling: np.ndarray) -> float:
    """厄米算符的谱范数 max|eig|。"""
    spectrum = diagonalize(coupling)
    return float(np.max(np.abs(spectrum.eigenvalues)))


def default_time_step(spec: HamiltonianSpec, layout: SpaceLayout, coupling: np.ndarray | None = None) -> float:
    """取 dt 使 λ‖V‖dt 不超过相位预算；无耦合时退回固定步长。

    已经构造好的 V 可以直接传入，省掉一次重复抽样。
    """
    if spec.coupling_strength == 0:
        return FALLBACK_TIME_STEP
    norm = coupling_norm(build_coupling(spec, layout) if coupling is None else coupling)
    if norm == 0:
        return FALLBACK_TIME_STEP
    return PHASE_BUDGET / (spec.coupling_strength * norm)


def build_hamiltonian(spec: HamiltonianSpec, layout: SpaceLayout, coupling: np.ndarray | None = None) -> np.ndarray:
    """组装 S ⊗ A ⊗ E 上的总哈密顿量；`coupling` 为空时按种子重新抽样 V。"""
    if spec.h_s.shape != (layout.d_s, layout.d_s):
        raise LayoutError(f"H_S 形状 {spec.h_s.shape} 与系统维度 {layout.d_s} 不一致")
    if spec.env_dim != layout.n_e:
        raise LayoutError(f"环境能级数 {spec.env_dim} 与布局环境维度 {layout.n_e} 不一致")
    identity_s = np.eye(layout.d_s)
    identity_a = np.eye(layout.n_a)
    identity_e = np.eye(layout.n_e)
    h_a = apparatus_hamiltonian(spec, layout)
    h_e = np.diag(spec.h_e_spectrum)

    hamiltonian = (
        kron(spec.h_s, identity_a, identity_e)
        + kron(identity_s, h_a, identity_e)
        + kron(identity_s, identity_a, h_e)
    )
    if spec.coupling_strength:
        if coupling is None:
            coupling = build_coupling(spec, layout)
        hamiltonian = hamiltonian + spec.coupling_strength * kron(identity_s, coupling)
    return hamiltonian


def propagator(h: np.ndarray | HermitianSpectrum, dt: float) -> np.ndarray:
    """U = V exp(−iΛdt) V†；传入已有的本征分解时不再重复对角化。"""
    if dt <= 0:
        raise ValueError(f"时间步长必须为正，当前为 {dt}")
    spectrum = h if isinstance(h, HermitianSpectrum) else diagonalize(h)
    vectors = spectrum.eigenvectors
    return (vectors * np.exp(-1j * spectrum.eigenvalues * dt)) @ vectors.conj().T


def ensemble_decompose(
    rho: np.ndarray | DensityMatrix,
    threshold: float = ENSEMBLE_WEIGHT_THRESHOLD,
) -> list[EnsembleMember]:
    """按本征分解拆成纯态系综，丢掉权重不超过阈值的成员后重新归一。"""
    spectrum = diagonalize(rho)
    keep = spectrum.eigenvalues > threshold
    weights = spectrum.eigenvalues[keep]
    if weights.size == 0:
        raise ValueError("密度矩阵没有超过阈值的本征值，无法构造系综")
    weights = weights / weights.sum()
    vectors = spectrum.eigenvectors[:, keep]
    return [EnsembleMember(weight=float(weight), vector=vectors[:, index].copy()) for index, weight in enumerate(weights)]


def reduce_ensemble(
    weights: Sequence[float],
    vectors: Iterable[np.ndarray],
    layout: SpaceLayout,
) -> np.ndarray:
    """ρ^{S-A} = Σ w_k Tr_E |ψ_k⟩⟨ψ_k|，按成员顺序累加。"""
    rho = np.zeros((layout.sa_dim, layout.sa_dim), dtype=complex)
    for weight, vector in zip(weights, vectors):
        block = np.asarray(vector).reshape(layout.sa_dim, layout.n_e)
        rho += weight * (block @ block.conj().T)
    return rho


def _apply(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """实矩阵乘复向量时拆成实部和虚部两次实数乘法，避免整块矩阵升格成复数。"""
    if np.iscomplexobj(matrix) or not np.iscomplexobj(vector):
        return matrix @ vector
    return matrix @ vector.real + 1j * (matrix @ vector.imag)


def ensemble_energy(hamiltonian: np.ndarray, weights: Sequence[float], vectors: Iterable[np.ndarray]) -> float:
    return float(sum(weight * np.real(np.vdot(vector, hamiltonian @ vector)) for weight, vector in zip(weights, vectors)))


class EnsembleEvolution:
    """S-A-E 纯态系综的逐步演化。

    参考态 ρ* 与 ρ₀ 由初始参数确定，整个轨迹都对照同一组参考态计算度量。
    """

    def __init__(
        self,
        initial_sa: PureMixedParams,
        spec: HamiltonianSpec,
        dt: float | None,
        bath: BathMode,
        env_seed: int,
        jobs: int = 1,
        eigen_floor: float = EIGEN_FLOOR,
    ) -> None:
        self.params = initial_sa
        self.spec = spec
        self.bath = bath
        self.jobs = max(1, int(jobs))
        self.eigen_floor = eigen_floor
        self.sa_layout = initial_sa.layout
        self.layout = initial_sa.layout.with_environment(spec.env_dim)
        coupling = build_coupling(spec, self.layout) if spec.coupling_strength else None
        self.dt = default_time_step(spec, self.layout, coupling) if dt is None else float(dt)
        if self.dt <= 0:
            raise ValueError(f"时间步长必须为正，当前为 {self.dt}")

        logger.debug("对角化总哈密顿量: dim={}", self.layout.total_dim)
        self.spectrum = diagonalize(build_hamiltonian(spec, self.layout, coupling))
        basis = self.spectrum.eigenvectors
        self._basis = basis
        self._basis_adjoint = basis.conj().T if np.iscomplexobj(basis) else basis.T
        self._step_phases = np.exp(-1j * self.spectrum.eigenvalues * self.dt)
        self._env_rng = np.random.default_rng(env_seed)
        self._executor: ThreadPoolExecutor | None = None

        self.rho_star = build_nearest_separable(initial_sa).entries
        self.rho_zero = build_equimixed_classical(self.sa_layout, initial_sa.amplitudes).entries
        self.step = 0
        self.weights: np.ndarray = np.zeros(0)
        self.environment_populations: np.ndarray = np.zeros(0)
        self._coefficients: list[np.ndarray] = []
        self._attach_environment(build_pure_mixed(initial_sa).entries)

    @property
    def time(self) -> float:
        return self.step * self.dt

    @property
    def member_count(self) -> int:
        return len(self._coefficients)

    def _map(self, fn: Callable[[np.ndarray], np.ndarray], items: Sequence[np.ndarray]) -> list[np.ndarray]:
        if self._executor is None:
            return [fn(item) for item in items]
        return list(self._executor.map(fn, items))

    def _to_eigenbasis(self, vector: np.ndarray) -> np.ndarray:
        return _apply(self._basis_adjoint, vector)

    def _to_product_basis(self, coefficients: np.ndarray) -> np.ndarray:
        return _apply(self._basis, coefficients)

    def _attach_environment(self, rho_sa: np.ndarray) -> None:
        """ρ^{S-A} 拆成系综后与新的随机环境态做张量积。"""
        members = ensemble_decompose(rho_sa)
        environment = haar_random_state(self.layout.n_e, self._env_rng)
        self.environment_populations = np.abs(environment) ** 2
        self.weights = np.array([member.weight for member in members])
        vectors = [np.kron(member.vector, environment) for member in members]
        self._coefficients = self._map(self._to_eigenbasis, vectors)

    def advance(self, steps: int = 1) -> None:
        """推进若干步，等价于连续作用 steps 次单步传播子。"""
        if steps < 1:
            return
        phases = self._step_phases if steps == 1 else np.exp(-1j * self.spectrum.eigenvalues * (self.dt * steps))
        self._coefficients = [coefficients * phases for coefficients in self._coefficients]
        self.step += steps

    def member_vectors(self) -> list[np.ndarray]:
        return self._map(self._to_product_basis, self._coefficients)

    def reduced_state(self) -> np.ndarray:
        return reduce_ensemble(self.weights, self.member_vectors(), self.layout)

    def energy(self) -> float:
        return float(
            sum(
                weight * np.sum(np.abs(coefficients) ** 2 * self.spectrum.eigenvalues)
                for weight, coefficients in zip(self.weights, self._coefficients)
            )
        )

    def renew_environment(self, rho_sa: np.ndarray | None = None) -> None:
        self._attach_environment(self.reduced_state() if rho_sa is None else rho_sa)

    def record(self, rho_sa: np.ndarray | None = None) -> TrajectoryRecord:
        rho = self.reduced_state() if rho_sa is None else rho_sa
        trace_err = float(abs(np.trace(rho) - 1.0))
        herm_err = hermitian_error(rho)
        self._check_diagnostics(trace_err, herm_err)
        symmetric = (rho + rho.conj().T) / 2
        layout = self.sa_layout
        pt_minimum = min_pt_eigenvalue(symmetric, layout, tol=TRAJECTORY_NEGATIVE_TOL)
        record = TrajectoryRecord(
            t=self.time,
            q_d=q_decoherence(symmetric, layout),
            q_r=q_relaxation(symmetric, layout),
            s_rel_star=relative_entropy(symmetric, self.rho_star, self.eigen_floor),
            s_rel_zero=relative_entropy(symmetric, self.rho_zero, self.eigen_floor),
            bures_star=bures_distance(symmetric, self.rho_star),
            bures_zero=bures_distance(symmetric, self.rho_zero),
            min_pt_eig=pt_minimum.min_eigenvalue,
            neg_count=pt_minimum.negative_count,
            trace_err=trace_err,
            herm_err=herm_err,
        )
        logger.debug(
            "step={} t={:.6g} q_d={:.6e} q_r={:.6e} q_r_weighted={:.6e} min_pt={:.6e}",
            self.step,
            record.t,
            record.q_d,
            record.q_r,
            q_relaxation_weighted(symmetric, layout, self.params.amplitudes),
            record.min_pt_eig,
        )
        return record

    def _check_diagnostics(self, trace_err: float, herm_err: float) -> None:
        worst = max(trace_err, herm_err)
        if worst > DIAGNOSTIC_ABORT_TOL:
            raise InvariantViolationError(
                f"约化态数值漂移超过中止阈值: step={self.step} trace_err={trace_err:.3e} herm_err={herm_err:.3e}",
                step=self.step,
                trace_err=trace_err,
                herm_err=herm_err,
            )
        if worst > DIAGNOSTIC_WARN_TOL:
            logger.warning("约化态数值漂移偏大: step={} trace_err={:.3e} herm_err={:.3e}", self.step, trace_err, herm_err)

    def run(self, n_steps: int, record_every: int = 1, stop_ratio: float = 0.0) -> list[TrajectoryRecord]:
        """演化 n_steps 步，每 record_every 步记录一次（含第 0 步）。

        stop_ratio > 0 时，一旦记录到的 Q_D 低于 stop_ratio·Q_D(0) 就提前结束。
        """
        if n_steps < 1:
            raise ValueError(f"演化步数至少为 1，当前为 {n_steps}")
        if record_every < 1:
            raise ValueError(f"记录间隔至少为 1，当前为 {record_every}")

        executor = ThreadPoolExecutor(max_workers=self.jobs) if self.jobs > 1 else None
        self._executor = executor
        try:
            records = [self.record()]
            initial_q_d = records[0].q_d
            target = self.step + n_steps
            while self.step < target:
                next_stop = self._next_event(target, record_every)
                self.advance(next_stop - self.step)
                recording = self.step % record_every == 0
                renewing = self.bath.renews and self.step % self.bath.every == 0
                if not recording and not renewing:
                    continue
                rho_sa = self.reduced_state()
                if recording:
                    record = self.record(rho_sa)
                    records.append(record)
                    if stop_ratio > 0 and initial_q_d > 0 and record.q_d < stop_ratio * initial_q_d:
                        logger.info("Q_D 已低于初值的 {:.0e}，在 step={} 提前结束", stop_ratio, self.step)
                        break
                if renewing:
                    self.renew_environment(rho_sa)
            return records
        finally:
            self._executor = None
            if executor is not None:
                executor.shutdown(wait=True)

    def _next_event(self, target: int, record_every: int) -> int:
        """下一个需要离开本征基的步数：记录、更新环境或终点。"""
        candidates = [target, (self.step // record_every + 1) * record_every]
        if self.bath.renews:
            candidates.append((self.step // self.bath.every + 1) * self.bath.every)
        return min(candidates)


def evolve(
    initial_sa: PureMixedParams,
    spec: HamiltonianSpec,
    dt: float | None,
    n_steps: int,
    bath: BathMode,
    env_seed: int,
    record_every: int = 1,
    stop_ratio: float = 0.0,
    jobs: int = 1,
    eigen_floor: float = EIGEN_FLOOR,
) -> list[TrajectoryRecord]:
    """从 (ρ 的系综) ⊗ |e₀⟩ 出发演化并返回轨迹记录。"""
    evolution = EnsembleEvolution(
        initial_sa=initial_sa,
        spec=spec,
        dt=dt,
        bath=bath,
        env_seed=env_seed,
        jobs=jobs,
        eigen_floor=eigen_floor,
    )
    return evolution.run(n_steps=n_steps, record_every=record_every, stop_ratio=stop_ratio)


def density_drift(initial: np.ndarray, current: np.ndarray) -> float:
    """两个约化态对角元的最大偏差。"""
    return float(np.max(np.abs(np.real(np.diag(as_matrix(initial))) - np.real(np.diag(as_matrix(current))))))


def coherence_floor(environment_populations: Sequence[float]) -> float:
    """弱耦合有限环境下 Q_D(t)/Q_D(0) 的长时平台 Σ_e P_e²。

    λ‖V‖ 远小于 H_E 能级间距时各环境能级近似守恒，相干块退化为
    Σ_e P_e U_{1,e} C U_{2,e}†，不同能级之间的交叉项随时间平均为零。
    """
    populations = np.asarray(environment_populations, dtype=float)
    return float(populations @ populations)
