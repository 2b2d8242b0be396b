"""数值实验运行配置。

这里集中存放会同时影响 CLI、场景工作流、数值内核和测试的默认值。
容差、阈值和图像场景预设都只在这里维护一份，避免不同模块各自
硬编码同一组魔法数字。
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields, replace
from typing import Literal

from decoherence_studio.config import DEFAULT_OUTPUT_DIR, ENV_PREFIX


ScenarioName = Literal["fig1", "fig1b", "fig2", "fig3", "fig4a", "fig4b", "fig5", "custom"]
CouplingKind = Literal["random", "nondemolition"]
BathKind = Literal["finite", "renewed"]
WeightProfile = Literal["uniform", "linear", "peaked"]

SCENARIO_NAMES: tuple[str, ...] = ("fig1", "fig1b", "fig2", "fig3", "fig4a", "fig4b", "fig5", "custom")
COUPLING_KINDS: tuple[str, ...] = ("random", "nondemolition")
BATH_KINDS: tuple[str, ...] = ("finite", "renewed")
WEIGHT_PROFILES: tuple[str, ...] = ("uniform", "linear", "peaked")

# 数值容差
EIGEN_FLOOR = 1e-12
HERMITIAN_SYMMETRIZE_TOL = 1e-10
DENSITY_HERMITIAN_TOL = 1e-12
DENSITY_TRACE_TOL = 1e-12
DENSITY_MIN_EIGEN_TOL = 1e-10
WEIGHT_SUM_TOL = 1e-12
MEASURE_INPUT_TOL = 1e-6
PT_NEGATIVE_TOL = 1e-10
TRAJECTORY_NEGATIVE_TOL = 1e-8
ENSEMBLE_WEIGHT_THRESHOLD = 1e-14
DERIVATIVE_STEP = 1e-6
DERIVATIVE_MAX_STEP = 1e-3
DIAGNOSTIC_WARN_TOL = 1e-8
DIAGNOSTIC_ABORT_TOL = 1e-6
PHASE_BUDGET = 0.05
FALLBACK_TIME_STEP = 1.0

# 衰减形状拟合
FIT_WINDOW_RATIO = 1e-2
FIT_VERDICT_GAP = 0.02
FIT_MIN_POINTS = 10
# 尾部平台：最后四分之一的中位数不低于前一个四分之一的 FIT_PLATEAU_FLATNESS 倍时视为平台，
# 拟合窗口截到首次低于 FIT_PLATEAU_FACTOR 倍平台值之前
FIT_PLATEAU_FACTOR = 5.0
FIT_PLATEAU_FLATNESS = 0.8

# 默认物理参数
DEFAULT_SECTOR_DIMS = (7, 8)
DEFAULT_ENV_DIM = 60
DEFAULT_SECTOR_ENERGIES = (200.0, 400.0)
DEFAULT_H_S_ENTRY = 0.5e-6
DEFAULT_ENV_ENERGY_RANGE = (190.0, 410.0)
DEFAULT_RANDOM_COUPLING = 0.005
DEFAULT_NONDEMOLITION_COUPLING = 0.0001

DEFAULT_STEPS = 1200
DEFAULT_RECORD_EVERY = 4
DEFAULT_STOP_RATIO = 1e-2
RENEWED_BATH_INTERVAL = 120
RENEWED_BATH_STEPS = 6000
RENEWED_BATH_RECORD_EVERY = 40
DEFAULT_SEED = 7
DEFAULT_ENV_SEED = 11
DEFAULT_JOBS = 1
DEFAULT_LOG_LEVEL = "INFO"


class ScenarioConfigError(ValueError):
    """场景配置字段缺失、类型错误或相互矛盾时中止运行。"""


@dataclass(frozen=True)
class ScenarioConfig:
    """单次轨迹实验的完整口径。

    字段一一对应配置文件里的键；`dt=None` 表示按相位预算自动选步长，
    `output=None` 表示写到默认输出目录下的 `<scenario>.csv`。
    """

    scenario: ScenarioName = "fig1"
    sector_dims: tuple[int, ...] = DEFAULT_SECTOR_DIMS
    env_dim: int = DEFAULT_ENV_DIM
    amplitudes: tuple[complex, ...] = (complex(1 / math.sqrt(2)), complex(1 / math.sqrt(2)))
    weight_profile: WeightProfile = "uniform"
    sector_energies: tuple[float, ...] = DEFAULT_SECTOR_ENERGIES
    h_s: tuple[float, ...] = (DEFAULT_H_S_ENTRY,) * 4
    env_energy_min: float = DEFAULT_ENV_ENERGY_RANGE[0]
    env_energy_max: float = DEFAULT_ENV_ENERGY_RANGE[1]
    coupling: CouplingKind = "random"
    coupling_strength: float = DEFAULT_RANDOM_COUPLING
    bath: BathKind = "finite"
    renew_every: int = 1
    dt: float | None = None
    n_steps: int = DEFAULT_STEPS
    record_every: int = DEFAULT_RECORD_EVERY
    stop_ratio: float = DEFAULT_STOP_RATIO
    seed: int = DEFAULT_SEED
    env_seed: int = DEFAULT_ENV_SEED
    eigen_floor: float = EIGEN_FLOOR
    output: str | None = None

    @property
    def system_dim(self) -> int:
        return len(self.sector_dims)

    def output_path(self) -> str:
        """返回轨迹 CSV 的目标路径。"""
        if self.output:
            return self.output
        return os.path.join(load_runtime_settings().output_dir, f"{self.scenario}.csv")


def scenario_field_names() -> tuple[str, ...]:
    return tuple(item.name for item in fields(ScenarioConfig))


def preset_scenario_config(name: str) -> ScenarioConfig:
    """返回场景预设口径。

    所有预设共用同一组默认物理参数；fig3/fig4a 额外使用线性权重，
    否则 ρ* 与 ρ₀ 重合，相对熵交叉无从观察。fig4b 用集中在首个态上的
    权重，此时 ρ₀ 是纯态，D(ρ*,ρ₀) 远大于剩余相干对 D(ρ,ρ₀) 的贡献，
    退相干前后 D(ρ,ρ₀) 基本不变。fig2 每 120 步更新一次环境：相邻两次
    更新之间 Q_D 只掉约 15%，包络按指数衰减，约 3400 步到 1%。
    """
    if name not in SCENARIO_NAMES:
        raise ScenarioConfigError(f"未知场景: {name}，可选值为 {', '.join(SCENARIO_NAMES)}")
    base = ScenarioConfig(scenario=name)
    if name == "fig1b":
        return replace(base, coupling="nondemolition", coupling_strength=DEFAULT_NONDEMOLITION_COUPLING)
    if name == "fig2":
        return replace(
            base,
            bath="renewed",
            renew_every=RENEWED_BATH_INTERVAL,
            n_steps=RENEWED_BATH_STEPS,
            record_every=RENEWED_BATH_RECORD_EVERY,
        )
    if name in {"fig3", "fig4a"}:
        return replace(base, weight_profile="linear")
    if name == "fig4b":
        return replace(
            base,
            weight_profile="peaked",
            coupling="nondemolition",
            coupling_strength=DEFAULT_NONDEMOLITION_COUPLING,
        )
    return base


def build_scenario_config(base: ScenarioConfig, **overrides: object) -> ScenarioConfig:
    """基于预设叠加显式覆盖值，`None` 表示沿用预设。"""
    known = set(scenario_field_names())
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ScenarioConfigError(f"未知配置键: {', '.join(unknown)}")
    effective = {key: value for key, value in overrides.items() if value is not None}
    config = replace(base, **effective)
    validate_scenario_config(config)
    return config


def validate_scenario_config(config: ScenarioConfig) -> None:
    """检查配置字段之间的一致性。"""
    d_s = config.system_dim
    if config.scenario not in SCENARIO_NAMES:
        raise ScenarioConfigError(f"未知场景: {config.scenario}")
    if d_s < 2:
        raise ScenarioConfigError(f"sector_dims 至少需要两个扇区，当前为 {config.sector_dims}")
    if any(int(item) < 1 for item in config.sector_dims):
        raise ScenarioConfigError(f"sector_dims 必须都是正整数，当前为 {config.sector_dims}")
    if len(config.amplitudes) != d_s:
        raise ScenarioConfigError(f"amplitudes 数量 {len(config.amplitudes)} 与扇区数 {d_s} 不一致")
    if len(config.sector_energies) != d_s:
        raise ScenarioConfigError(f"sector_energies 数量 {len(config.sector_energies)} 与扇区数 {d_s} 不一致")
    if len(config.h_s) != d_s * d_s:
        raise ScenarioConfigError(f"h_s 需要 {d_s * d_s} 个按行展开的元素，当前为 {len(config.h_s)}")
    if config.env_dim < 1:
        raise ScenarioConfigError(f"env_dim 必须是正整数，当前为 {config.env_dim}")
    if config.env_energy_max < config.env_energy_min:
        raise ScenarioConfigError("env_energy_max 不能小于 env_energy_min")
    if config.coupling not in COUPLING_KINDS:
        raise ScenarioConfigError(f"coupling 必须是 {', '.join(COUPLING_KINDS)} 之一，当前为 {config.coupling}")
    if config.bath not in BATH_KINDS:
        raise ScenarioConfigError(f"bath 必须是 {', '.join(BATH_KINDS)} 之一，当前为 {config.bath}")
    if config.weight_profile not in WEIGHT_PROFILES:
        raise ScenarioConfigError(f"weight_profile 必须是 {', '.join(WEIGHT_PROFILES)} 之一")
    if config.coupling_strength < 0:
        raise ScenarioConfigError("coupling_strength 不能为负")
    if config.renew_every < 1:
        raise ScenarioConfigError("renew_every 至少为 1")
    if config.dt is not None and config.dt <= 0:
        raise ScenarioConfigError(f"dt 必须为正，当前为 {config.dt}")
    if config.n_steps < 1:
        raise ScenarioConfigError("n_steps 至少为 1")
    if config.record_every < 1:
        raise ScenarioConfigError("record_every 至少为 1")
    if not 0 <= config.stop_ratio < 1:
        raise ScenarioConfigError("stop_ratio 必须落在 [0, 1) 区间")
    if config.seed < 0 or config.env_seed < 0:
        raise ScenarioConfigError("随机种子必须是非负整数")
    if config.eigen_floor <= 0:
        raise ScenarioConfigError("eigen_floor 必须为正")


@dataclass(frozen=True)
class RuntimeSettings:
    """与具体场景无关的进程级配置。"""

    jobs: int = DEFAULT_JOBS
    log_level: str = DEFAULT_LOG_LEVEL
    output_dir: str = DEFAULT_OUTPUT_DIR


def load_runtime_settings() -> RuntimeSettings:
    """从环境变量加载运行配置。"""
    return RuntimeSettings(
        jobs=max(1, int(os.getenv(f"{ENV_PREFIX}JOBS", str(DEFAULT_JOBS)))),
        log_level=os.getenv(f"{ENV_PREFIX}LOG_LEVEL", DEFAULT_LOG_LEVEL),
        output_dir=os.getenv(f"{ENV_PREFIX}OUTPUT_DIR", DEFAULT_OUTPUT_DIR),
    )
