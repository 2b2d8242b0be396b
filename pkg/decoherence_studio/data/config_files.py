"""扁平 `key = value` 场景配置文件。

格式约定：
- 每行一个键，`#` 之后是注释
- 列表值用逗号分隔，例如 `sector_dims = 7, 8`
- 振幅按 Python `complex()` 的写法解析，实数直接写小数
- `dt = auto` 表示按相位预算自动选步长，`output` 留空表示默认路径

优先级：场景预设 < 配置文件 < 命令行参数。
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import fields
from pathlib import Path

from decoherence_studio.config import DEFAULT_SCENARIO
from decoherence_studio.settings import (
    ScenarioConfig,
    ScenarioConfigError,
    build_scenario_config,
    preset_scenario_config,
    scenario_field_names,
)


_AUTO_VALUES = {"", "auto", "none"}


def _parse_int_tuple(raw: str) -> tuple[int, ...]:
    return tuple(int(item) for item in _split_list(raw))


def _parse_float_tuple(raw: str) -> tuple[float, ...]:
    return tuple(float(item) for item in _split_list(raw))


def _parse_complex_tuple(raw: str) -> tuple[complex, ...]:
    return tuple(complex(item.replace(" ", "")) for item in _split_list(raw))


def _parse_optional_float(raw: str) -> float | None:
    return None if raw.strip().lower() in _AUTO_VALUES else float(raw)


def _parse_optional_str(raw: str) -> str | None:
    return None if raw.strip().lower() in {"", "none"} else raw.strip()


def _split_list(raw: str) -> list[str]:
    items = [item.strip() for item in raw.split(",")]
    return [item for item in items if item]


_PARSERS: dict[str, Callable[[str], object]] = {
    "scenario": str.strip,
    "sector_dims": _parse_int_tuple,
    "env_dim": int,
    "amplitudes": _parse_complex_tuple,
    "weight_profile": str.strip,
    "sector_energies": _parse_float_tuple,
    "h_s": _parse_float_tuple,
    "env_energy_min": float,
    "env_energy_max": float,
    "coupling": str.strip,
    "coupling_strength": float,
    "bath": str.strip,
    "renew_every": int,
    "dt": _parse_optional_float,
    "n_steps": int,
    "record_every": int,
    "stop_ratio": float,
    "seed": int,
    "env_seed": int,
    "eigen_floor": float,
    "output": _parse_optional_str,
}


def parse_config_text(text: str) -> dict[str, object]:
    """把配置文本解析成字段字典，未出现的键不会出现在结果里。"""
    values: dict[str, object] = {}
    known = set(scenario_field_names())
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioConfigError(f"第 {line_number} 行缺少 `=`: {raw_line.strip()}")
        key, raw_value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ScenarioConfigError(f"第 {line_number} 行出现未知配置键: {key}")
        if key in values:
            raise ScenarioConfigError(f"第 {line_number} 行重复定义配置键: {key}")
        try:
            values[key] = _PARSERS[key](raw_value)
        except ValueError as exc:
            raise ScenarioConfigError(f"第 {line_number} 行 {key} 的取值无法解析: {raw_value}") from exc
    return values


def read_config_file(path: str | Path) -> dict[str, object]:
    file_path = Path(path)
    if not file_path.exists():
        raise ScenarioConfigError(f"配置文件不存在: {file_path}")
    return parse_config_text(file_path.read_text(encoding="utf-8"))


def _format_complex(value: complex) -> str:
    number = complex(value)
    return repr(number.real) if number.imag == 0 else repr(number)


def _format_value(key: str, value: object) -> str:
    if value is None:
        return "auto" if key == "dt" else ""
    if key == "amplitudes":
        return ", ".join(_format_complex(item) for item in value)  # type: ignore[union-attr]
    if isinstance(value, tuple):
        return ", ".join(repr(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_scenario_config(config: ScenarioConfig) -> str:
    """导出为配置文件文本，再解析回来与原配置逐字段相等。"""
    lines = [f"# decoherence-studio 场景配置: {config.scenario}"]
    for item in fields(ScenarioConfig):
        lines.append(f"{item.name} = {_format_value(item.name, getattr(config, item.name))}".rstrip())
    return "\n".join(lines) + "\n"


def config_to_payload(config: ScenarioConfig) -> dict[str, object]:
    """JSON 友好的配置字典，振幅写成与配置文件相同的字符串。"""
    payload: dict[str, object] = {}
    for item in fields(ScenarioConfig):
        value = getattr(config, item.name)
        if item.name == "amplitudes":
            payload[item.name] = [_format_complex(amplitude) for amplitude in value]
        elif isinstance(value, tuple):
            payload[item.name] = list(value)
        else:
            payload[item.name] = value
    return payload


def resolve_scenario_config(
    scenario: str | None = None,
    file_values: Mapping[str, object] | None = None,
    overrides: Mapping[str, object] | None = None,
) -> ScenarioConfig:
    """按“预设 < 文件 < 命令行”的顺序合成最终配置。

    预设名优先取显式传入的 scenario，其次取文件里的 scenario 键。
    """
    file_values = dict(file_values or {})
    preset_name = scenario or str(file_values.get("scenario") or DEFAULT_SCENARIO)
    file_values["scenario"] = preset_name
    config = build_scenario_config(preset_scenario_config(preset_name), **file_values)
    return build_scenario_config(config, **dict(overrides or {}))
