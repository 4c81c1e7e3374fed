"""Checkpoint archive: format version, config tree, named parameter tensors."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import torch

from .errors import CheckpointError

FORMAT_VERSION = "poke2vid-ckpt-1"


def save_checkpoint(
    path: str | Path,
    config: dict[str, Any],
    params: dict[str, dict],
    extra: dict[str, Any] | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "format_version": FORMAT_VERSION,
            "config": config,
            "params": params,
            "extra": extra or {},
        },
        path,
    )
    return path


def load_checkpoint(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"could not read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format_version") != FORMAT_VERSION:
        found = payload.get("format_version") if isinstance(payload, dict) else type(payload)
        raise CheckpointError(
            f"{path}: expected format {FORMAT_VERSION!r}, found {found!r}"
        )
    for key in ("config", "params"):
        if key not in payload:
            raise CheckpointError(f"{path}: checkpoint missing {key!r}")
    return payload


def load_module_params(module: torch.nn.Module, state: dict, label: str) -> None:
    """Strict state-dict load; shape or key mismatches become checkpoint errors."""
    try:
        module.load_state_dict(state, strict=True)
    except Exception as exc:
        raise CheckpointError(f"checkpoint params for {label!r} do not match config: {exc}") from exc
