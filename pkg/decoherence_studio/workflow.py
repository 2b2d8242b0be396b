"""场景工作流编排层。

这里负责把“配置 -> 初态与哈密顿量 -> 系综演化 -> 衰减拟合 -> 落盘”
组织成可直接被 CLI 调用的高层流程。
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from time import perf_counter

import numpy as np
from loguru import logger

from decoherence_studio.data.config_files import config_to_payload
from decoherence_studio.data.trajectory_files import summary_path_for, write_summary_json, write_trajectory_csv
from decoherence_studio.quantum.dynamics import (
    BathMode,
    EnsembleEvolution,
    HamiltonianSpec,
    TrajectoryRecord,
    coherence_floor,
    uniform_env_spectrum,
)
from decoherence_studio.quantum.fitting import DecayFit, fit_decay
from decoherence_studio.quantum.measures import q_relaxation_weighted
from decoherence_studio.quantum.states import PureMixedParams, build_pure_mixed, pure_mixed_params
from decoherence_studio.settings import ScenarioConfig, load_runtime_settings, validate_scenario_config


@dataclass(frozen=True)
class ScenarioRunResult:
    config: ScenarioConfig
    records: list[TrajectoryRecord]
    decay_fit: DecayFit
    summary: dict[str, object]
    csv_path: Path
    summary_path: Path


def build_initial_params(config: ScenarioConfig) -> PureMixedParams:
    return pure_mixed_params(config.amplitudes, config.sector_dims, config.weight_profile)


def build_hamiltonian_spec(config: ScenarioConfig) -> HamiltonianSpec:
    d_s = config.system_dim
    return HamiltonianSpec(
        h_s=np.asarray(config.h_s, dtype=float).reshape(d_s, d_s),
        sector_energies=config.sector_energies,
        h_e_spectrum=uniform_env_spectrum(config.env_energy_min, config.env_energy_max, config.env_dim),
        coupling=config.coupling,
        coupling_strength=config.coupling_strength,
        seed=config.seed,
    )


def build_bath_mode(config: ScenarioConfig) -> BathMode:
    return BathMode(kind=config.bath, every=config.renew_every)


def run_scenario(config: ScenarioConfig, jobs: int | None = None) -> ScenarioRunResult:
    """执行单个场景并写出轨迹 CSV 与 JSON 摘要。"""
    validate_scenario_config(config)
    started_at = perf_counter()
    effective_jobs = max(1, int(jobs if jobs is not None else load_runtime_settings().jobs))

    logger.info(
        "[1/3] 构造初态与哈密顿量: scenario={} sectors={} env_dim={} coupling={} bath={}",
        config.scenario,
        config.sector_dims,
        config.env_dim,
        config.coupling,
        config.bath,
    )
    params = build_initial_params(config)
    evolution = EnsembleEvolution(
        initial_sa=params,
        spec=build_hamiltonian_spec(config),
        dt=config.dt,
        bath=build_bath_mode(config),
        env_seed=config.env_seed,
        jobs=effective_jobs,
        eigen_floor=config.eigen_floor,
    )
    initial_weighted_q_r = q_relaxation_weighted(build_pure_mixed(params), params.layout, params.amplitudes)
    logger.info(
        "[1/3] 初始化完成: total_dim={} members={} dt={:.6g}",
        evolution.layout.total_dim,
        evolution.member_count,
        evolution.dt,
    )

    logger.info("[2/3] 开始演化: n_steps={} record_every={} jobs={}", config.n_steps, config.record_every, effective_jobs)
    records = evolution.run(n_steps=config.n_steps, record_every=config.record_every, stop_ratio=config.stop_ratio)
    final_weighted_q_r = q_relaxation_weighted(evolution.reduced_state(), params.layout, params.amplitudes)
    decay_fit = fit_decay([(record.t, record.q_d) for record in records])
    logger.info(
        "[2/3] 演化结束: records={} final_q_d={:.6e} verdict={}",
        len(records),
        records[-1].q_d,
        decay_fit.verdict,
    )

    csv_path = Path(config.output_path())
    summary_path = summary_path_for(csv_path)
    elapsed = perf_counter() - started_at
    summary: dict[str, object] = {
        "scenario": config.scenario,
        "config": config_to_payload(config),
        "seeds": {"seed": config.seed, "env_seed": config.env_seed},
        "dt": evolution.dt,
        "steps_completed": evolution.step,
        "stopped_early": evolution.step < config.n_steps,
        "ensemble_members": evolution.member_count,
        "record_count": len(records),
        "initial": asdict(records[0]),
        "final": asdict(records[-1]),
        "q_d_decay_fit": asdict(decay_fit),
        "q_r_weighted": {"initial": initial_weighted_q_r, "final": final_weighted_q_r},
        # 有限环境下 Q_D/Q_D(0) 的长时平台，更新环境时没有这个平台
        "finite_bath_floor": coherence_floor(evolution.environment_populations) if config.bath == "finite" else None,
        "wall_clock_seconds": elapsed,
        "trajectory_csv": str(csv_path),
    }
    logger.info("[3/3] 写出轨迹与摘要: csv={} summary={}", csv_path, summary_path)
    write_trajectory_csv(records, csv_path)
    write_summary_json(summary, summary_path)
    return ScenarioRunResult(
        config=config,
        records=records,
        decay_fit=decay_fit,
        summary=summary,
        csv_path=csv_path,
        summary_path=summary_path,
    )
