"""JSON persistence of fitted models.

The architecture is not stored in full: it is rebuilt from the config and
the number of cubes, which is deterministic. Floats are written with
``repr`` precision, so a reloaded model predicts bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .architecture import LnnConfig, build_architecture
from .bands import Flag
from .binary import ConvergenceRecord, FittedBinary, LinkSpec
from .regress import FittedRegression

__all__ = [
    "FORMAT_VERSION",
    "INDEX_ORDER",
    "architecture_to_dict",
    "architecture_from_dict",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "load_metadata",
]

FORMAT_VERSION = 1
# ordering of the multi-indices that the coefficient vectors follow
INDEX_ORDER = "graded-lex-descending"


def _floats(arr):
    return [[None if not np.isfinite(v) else float(v) for v in row] for row in np.atleast_2d(arr)]


def _unfloats(rows):
    return np.array([[np.nan if v is None else v for v in row] for row in rows], dtype=float)


def architecture_to_dict(arch) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "index_order": INDEX_ORDER,
        "config": arch.config.to_dict(),
        "M": arch.M,
        "h": arch.h,
        "multi_indices": arch.idx.array.tolist(),
        "gamma": arch.gamma.tolist(),
        "beta": arch.beta.tolist(),
        "W": arch.W.tolist(),
        "D": arch.D.tolist(),
    }


def architecture_from_dict(data: dict):
    """Rebuild from the config and check the stored quantities match exactly."""
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {data.get('format_version')!r}")
    if data.get("index_order") != INDEX_ORDER:
        raise ValueError(f"unknown coefficient ordering {data.get('index_order')!r}")
    arch = build_architecture(LnnConfig.from_dict(data["config"]), M=int(data["M"]))
    if arch.idx.array.tolist() != data["multi_indices"]:
        raise ValueError("stored multi-indices do not match the rebuilt architecture")
    for key in ("gamma", "beta", "W", "D"):
        if key in data and not np.array_equal(getattr(arch, key), np.array(data[key], dtype=float)):
            raise ValueError(f"stored {key} does not match the rebuilt architecture")
    return arch


def model_to_dict(model) -> dict:
    arch = model.arch
    out = {
        **architecture_to_dict(arch),
        "kind": "bin" if isinstance(model, FittedBinary) else "reg",
        "thetas": _floats(model.thetas),
        "counts": [int(c) for c in model.counts],
    }
    if isinstance(model, FittedBinary):
        out["link"] = model.link.kind
        out["convergence"] = [
            {
                "iterations": r.iterations,
                "grad_norm": r.grad_norm,
                "status": Flag(r.status).name.lower(),
                "loglik": r.loglik,
                "n_clamped": r.n_clamped,
            }
            for r in model.records
        ]
    else:
        out["flags"] = [Flag(int(f)).name.lower() for f in model.flags]
        out["sigma_eps2"] = model.sigma_eps2
    return out


def model_from_dict(data: dict):
    arch = architecture_from_dict(data)
    thetas = _unfloats(data["thetas"])
    counts = np.array(data["counts"], dtype=int)
    if data["kind"] == "bin":
        records = tuple(
            ConvergenceRecord(r["iterations"], r["grad_norm"], Flag[r["status"].upper()], r["loglik"],
                              n_clamped=r.get("n_clamped", 0))
            for r in data["convergence"]
        )
        return FittedBinary(arch, thetas, records, LinkSpec(data["link"]), counts)
    flags = np.array([int(Flag[f.upper()]) for f in data["flags"]])
    return FittedRegression(arch, thetas, counts, flags, float(data["sigma_eps2"]))


def save_model(model, path, metadata: dict | None = None) -> None:
    """Write the model; ``metadata`` (column names, normalization record) is stored alongside."""
    out = model_to_dict(model)
    if metadata is not None:
        out["data"] = metadata
    Path(path).write_text(json.dumps(out, indent=1) + "\n")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))


def load_metadata(path) -> dict:
    return json.loads(Path(path).read_text()).get("data", {})
