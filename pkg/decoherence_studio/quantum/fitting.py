"""衰减形状拟合：指数还是高斯。"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import stats

from decoherence_studio.settings import (
    FIT_MIN_POINTS,
    FIT_PLATEAU_FACTOR,
    FIT_PLATEAU_FLATNESS,
    FIT_VERDICT_GAP,
    FIT_WINDOW_RATIO,
)


DecayVerdict = Literal["Exponential", "Gaussian", "Inconclusive"]


@dataclass(frozen=True)
class DecayFit:
    exp_rate: float
    exp_r2: float
    gauss_rate: float
    gauss_r2: float
    verdict: DecayVerdict
    window_points: int = 0
    diagnostics: str = ""
    # 尾部平台相对初值的比例；没有检测到平台时为 None
    plateau_ratio: float | None = None


def _inconclusive(reason: str, window_points: int = 0) -> DecayFit:
    return DecayFit(
        exp_rate=0.0,
        exp_r2=0.0,
        gauss_rate=0.0,
        gauss_r2=0.0,
        verdict="Inconclusive",
        window_points=window_points,
        diagnostics=reason,
    )


def tail_plateau(
    values: np.ndarray,
    flatness: float = FIT_PLATEAU_FLATNESS,
    min_points: int = FIT_MIN_POINTS,
) -> float | None:
    """尾部平台值：最后四分之一的中位数，且它不低于前一个四分之一中位数的 flatness 倍。

    点数不够分出两段，或者尾部仍在下降时返回 None。
    """
    quarter = values.size // 4
    if quarter < min_points:
        return None
    last = float(np.median(values[-quarter:]))
    previous = float(np.median(values[-2 * quarter : -quarter]))
    if previous <= 0 or last < flatness * previous:
        return None
    return last


def fit_window(
    times: np.ndarray,
    values: np.ndarray,
    ratio: float = FIT_WINDOW_RATIO,
    plateau_factor: float = FIT_PLATEAU_FACTOR,
) -> tuple[np.ndarray, np.ndarray]:
    """从第一个点开始，截到序列首次低于 ratio·初值之前。

    尾部存在远低于初值的平台时，窗口改为截到首次低于 plateau_factor 倍平台值之前，
    平台本身不参与拟合。
    """
    cutoff = ratio * values[0]
    plateau = tail_plateau(values)
    if plateau is not None and plateau_factor * plateau < values[0]:
        cutoff = max(cutoff, plateau_factor * plateau)
    below = np.flatnonzero(values < cutoff)
    end = int(below[0]) if below.size else values.size
    return times[:end], values[:end]


def fit_decay(
    series: Sequence[tuple[float, float]],
    ratio: float = FIT_WINDOW_RATIO,
    min_points: int = FIT_MIN_POINTS,
) -> DecayFit:
    """对 ln(value) 分别关于 t 和 t² 做最小二乘直线拟合。

    斜率取负即衰减率；r² 更高的模型领先超过阈值才给出结论。
    窗口的截断规则见 fit_window。
    """
    if len(series) == 0:
        return _inconclusive("序列为空")
    data = np.asarray(series, dtype=float)
    times, values = data[:, 0], data[:, 1]
    if not np.all(np.isfinite(data)):
        return _inconclusive("序列包含非有限值")
    if values[0] <= 0:
        return _inconclusive(f"初值必须为正，当前为 {values[0]:.6g}")

    plateau = tail_plateau(values)
    plateau_ratio = None
    if plateau is not None and FIT_PLATEAU_FACTOR * plateau < values[0]:
        plateau_ratio = plateau / float(values[0])
    times, values = fit_window(times, values, ratio)
    if times.size < min_points:
        return _inconclusive(f"拟合窗口内只有 {times.size} 个点，至少需要 {min_points} 个", times.size)
    logs = np.log(values)
    if np.ptp(logs) == 0:
        return _inconclusive("拟合窗口内序列没有变化", times.size)

    exponential = stats.linregress(times, logs)
    gaussian = stats.linregress(times**2, logs)
    exp_r2 = float(exponential.rvalue**2)
    gauss_r2 = float(gaussian.rvalue**2)
    if exp_r2 - gauss_r2 > FIT_VERDICT_GAP:
        verdict: DecayVerdict = "Exponential"
    elif gauss_r2 - exp_r2 > FIT_VERDICT_GAP:
        verdict = "Gaussian"
    else:
        verdict = "Inconclusive"
    return DecayFit(
        exp_rate=float(-exponential.slope),
        exp_r2=exp_r2,
        gauss_rate=float(-gaussian.slope),
        gauss_r2=gauss_r2,
        verdict=verdict,
        window_points=int(times.size),
        diagnostics="" if verdict != "Inconclusive" else f"两种模型 r² 差距不超过 {FIT_VERDICT_GAP}",
        plateau_ratio=plateau_ratio,
    )
