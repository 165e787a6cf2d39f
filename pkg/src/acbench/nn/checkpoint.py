"""JSON weight dumps with shapes and layer metadata."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

FORMAT = "acbench-weights-1"


def dump_state(state: Mapping[str, np.ndarray], meta: Mapping | None = None) -> str:
    tensors = {name: {"shape": list(np.shape(v)), "data": np.asarray(v, dtype=np.float64).ravel().tolist()}
               for name, v in sorted(state.items())}
    return json.dumps({"format": FORMAT, "meta": dict(meta or {}), "tensors": tensors}, sort_keys=True)


def load_state(text: str) -> tuple[dict[str, np.ndarray], dict]:
    obj = json.loads(text)
    if obj.get("format") != FORMAT:
        raise ValueError(f"not an {FORMAT} checkpoint")
    state = {name: np.asarray(t["data"], dtype=np.float64).reshape(t["shape"]) for name, t in obj["tensors"].items()}
    return state, obj["meta"]


def save_checkpoint(path: str | Path, state: Mapping[str, np.ndarray], meta: Mapping | None = None) -> None:
    Path(path).write_text(dump_state(state, meta) + "\n")


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    return load_state(Path(path).read_text())
