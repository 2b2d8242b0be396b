"""轨迹 CSV 与 JSON 摘要的落盘。

浮点数统一按 17 位有效数字写出，读回时用 round_trip 解析，保证与内存中的
记录逐位一致。所有文件先写同目录临时文件再原子替换。
"""

from __future__ import annotations

import json
import os
import tempfile
from collections.abc import Mapping, Sequence
from pathlib import Path

import pandas as pd

from decoherence_studio.quantum.dynamics import TRAJECTORY_COLUMNS, TrajectoryRecord


CSV_FLOAT_FORMAT = "%.17g"


def summary_path_for(csv_path: str | Path) -> Path:
    """`<stem>.summary.json`，与轨迹 CSV 放在同一目录。"""
    path = Path(csv_path)
    return path.with_name(f"{path.stem}.summary.json")


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    descriptor, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(descriptor, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.remove(temp_name)
        raise


def records_to_frame(records: Sequence[TrajectoryRecord]) -> pd.DataFrame:
    frame = pd.DataFrame([record.as_row() for record in records], columns=list(TRAJECTORY_COLUMNS))
    return frame.astype({"neg_count": "int64"})


def write_trajectory_csv(records: Sequence[TrajectoryRecord], path: str | Path) -> Path:
    target = Path(path)
    text = records_to_frame(records).to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    _atomic_write_text(target, text)
    return target


def read_trajectory_csv(path: str | Path) -> list[TrajectoryRecord]:
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [column for column in TRAJECTORY_COLUMNS if column not in frame.columns]
    if missing:
        raise ValueError(f"轨迹文件缺少列: {', '.join(missing)}")
    records: list[TrajectoryRecord] = []
    for row in frame[list(TRAJECTORY_COLUMNS)].to_dict("records"):
        values: dict[str, float | int] = {key: float(row[key]) for key in TRAJECTORY_COLUMNS}
        values["neg_count"] = int(row["neg_count"])
        records.append(TrajectoryRecord(**values))
    return records


def write_summary_json(payload: Mapping[str, object], path: str | Path) -> Path:
    target = Path(path)
    _atomic_write_text(target, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")
    return target


def read_summary_json(path: str | Path) -> dict[str, object]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
