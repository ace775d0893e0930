"""Canonical report and trajectory serialization.

Every diagnostic in the package funnels through ``finalize_report`` so
that two runs with the same seed and config produce byte-identical JSON.
Floats are emitted with Python repr (shortest round-trip form), keys are
sorted, and the wall-clock fields are nulled unless the caller opts out
of deterministic mode.
"""

from __future__ import annotations

import datetime
import json
import time

import numpy as np

from .evolution import Trajectory, energy_balance
from .spectral import SpectralField, l2_norm, sobolev_norm

__all__ = [
    "TOOL_VERSION",
    "canonical",
    "canonical_json",
    "finalize_report",
    "trajectory_csv",
]

TOOL_VERSION = "0.1.0"


def canonical(obj):
    """Recursively convert numpy scalars/arrays to plain Python values."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [canonical(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def finalize_report(payload: dict, config: dict, deterministic: bool = True,
                    started_at: float | None = None) -> dict:
    """Attach the standard provenance block to a report payload."""
    out = dict(payload)
    out["tool_version"] = TOOL_VERSION
    out["config"] = canonical(config)
    if deterministic or started_at is None:
        out["started_at"] = None
        out["wall_seconds"] = None
    else:
        stamp = datetime.datetime.fromtimestamp(started_at, tz=datetime.timezone.utc)
        out["started_at"] = stamp.isoformat()
        out["wall_seconds"] = time.time() - started_at
    return canonical(out)


def trajectory_csv(traj: Trajectory, s: float = 0.0) -> str:
    """CSV dump of stored frames: t, L2 norm, H^s norm, energy residual.

    The centered-difference residual is undefined at the first and last
    stored frames; those cells are left empty.
    """
    residual = [""] * traj.n_frames
    if traj.n_frames >= 3:
        for i, r in enumerate(energy_balance(traj)):
            residual[i + 1] = repr(float(r))
    lines = ["t,l2_norm,hs_norm,energy_residual"]
    for i in range(traj.n_frames):
        u = SpectralField(traj.grid, traj.states[i])
        lines.append(
            f"{float(traj.times[i])!r},{l2_norm(u)!r},{sobolev_norm(u, s)!r},{residual[i]}"
        )
    return "\n".join(lines) + "\n"
