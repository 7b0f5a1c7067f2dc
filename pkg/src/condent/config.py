"""Experiment configuration files: loading, input resolution and validation.

A config is a YAML (or JSON) mapping::

    experiment: entropy_table      # one of EXPERIMENTS
    output_dir: out/entropy        # optional
    seed: 7                        # optional master seed
    units: nats                    # or bits
    inputs: {...}                  # experiment-specific, see REQUIRED

Relative paths inside a config resolve against the config's directory.

Space files hold ``weights`` and optional ``labels``. Partition references
are a path to a partition text file (one block per line, comma-separated
outcome indices), an inline list of blocks, or ``points`` / ``trivial``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from condent.partition import Partition, parse_partition, point_partition, trivial_partition
from condent.space import FiniteSpace, make_space

EXPERIMENTS = (
    "entropy_table",
    "martin_report",
    "approximation_table",
    "limit_diagnostic",
    "martingale_check",
    "uniform_convergence",
    "wald_consistency",
    "dirac_demo",
)

REQUIRED = {
    "entropy_table": ("space", "pairs"),
    "martin_report": ("space", "levels"),
    "approximation_table": ("space", "levels"),
    "limit_diagnostic": ("model", "depths"),
    "martingale_check": ("model", "thetas", "n_max"),
    "uniform_convergence": ("n_list", "replicates"),
    "wald_consistency": ("model", "grid", "eps_ball", "n_max", "replicates", "tol"),
    "dirac_demo": (),
}

OUTPUT_ENV = "CONDENT_OUTPUT_DIR"
PARTITION_KEYWORDS = ("points", "trivial")


class ConfigError(Exception):
    """Unreadable or malformed config file."""


@dataclass
class ExperimentConfig:
    experiment: str
    inputs: dict[str, Any]
    output_dir: Path
    seed: int = 0
    units: str = "nats"
    base_dir: Path = field(default_factory=Path.cwd)
    raw: dict[str, Any] = field(default_factory=dict)


def load_raw(path: str | os.PathLike) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed config: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def resolve(base: Path, ref: str) -> Path:
    p = Path(ref)
    return p if p.is_absolute() else base / p


def load_space(ref, base: Path) -> FiniteSpace:
    data = ref
    if isinstance(ref, str):
        data = yaml.safe_load(resolve(base, ref).read_text())
    if not isinstance(data, dict) or "weights" not in data:
        raise ValueError("space description needs a 'weights' field")
    return make_space(data["weights"], data.get("labels"))


def load_partition(ref, base: Path, n: int) -> Partition:
    if isinstance(ref, str) and ref in PARTITION_KEYWORDS:
        return point_partition(n) if ref == "points" else trivial_partition(n)
    if isinstance(ref, str):
        return parse_partition(resolve(base, ref).read_text(), n=n)
    return Partition(ref, n=n)


# Validation ------------------------------------------------------------------


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_file(ref, base: Path, name: str, out: list[str]) -> None:
    if isinstance(ref, str) and ref not in PARTITION_KEYWORDS:
        p = resolve(base, ref)
        if not p.is_file():
            out.append(f"{name}: file not found: {p}")


def _check_range(inputs, key, out, *, lo=None, hi=None, integer=False, lo_open=False, label=None):
    if key not in inputs:
        return
    v = inputs[key]
    label = label or key
    if integer and not _is_int(v):
        out.append(f"{label} must be an integer")
        return
    if not _is_num(v):
        out.append(f"{label} must be a number")
        return
    if lo is not None and (v <= lo if lo_open else v < lo):
        out.append(f"{label} {'>' if lo_open else '≥'} {lo:g}")
    if hi is not None and v > hi:
        out.append(f"{label} ≤ {hi:g}")


def validate_raw(data: dict, base: Path) -> list[str]:
    """Every violated constraint, as one message each. Empty means runnable."""
    out: list[str] = []
    exp = data.get("experiment")
    if exp not in EXPERIMENTS:
        out.append(f"experiment must be one of {', '.join(EXPERIMENTS)}")
        return out
    inputs = data.get("inputs", {})
    if inputs is None:
        inputs = {}
    if not isinstance(inputs, dict):
        return out + ["inputs must be a mapping"]
    if "seed" in data and not (_is_int(data["seed"]) and data["seed"] >= 0):
        out.append("seed must be a nonnegative integer")
    if data.get("units", "nats") not in ("nats", "bits"):
        out.append("units must be 'nats' or 'bits'")
    if "output_dir" in data and not isinstance(data["output_dir"], str):
        out.append("output_dir must be a path string")
    for key in REQUIRED[exp]:
        if key not in inputs:
            out.append(f"inputs.{key} is required")

    if "space" in inputs:
        if isinstance(inputs["space"], str):
            _check_file(inputs["space"], base, "space", out)
        elif not isinstance(inputs["space"], dict):
            out.append("space must be a file path or a mapping with 'weights'")
    for i, pair in enumerate(inputs.get("pairs") or []):
        if not isinstance(pair, dict) or "xi" not in pair or "eta" not in pair:
            out.append(f"pairs[{i}] needs 'xi' and 'eta'")
            continue
        _check_file(pair["xi"], base, f"pairs[{i}].xi", out)
        _check_file(pair["eta"], base, f"pairs[{i}].eta", out)
    levels = inputs.get("levels")
    if levels is not None:
        if not isinstance(levels, list) or not levels:
            out.append("levels must be a nonempty list")
        else:
            for i, ref in enumerate(levels):
                _check_file(ref, base, f"levels[{i}]", out)
    if "a" in inputs:
        _check_file(inputs["a"], base, "a", out)

    _check_range(inputs, "replicates", out, lo=1, integer=True, label="replicates")
    _check_range(inputs, "n_max", out, lo=1, integer=True)
    _check_range(inputs, "depth", out, lo=1, hi=12, integer=True)
    _check_range(inputs, "tol", out, lo=0, lo_open=True)
    _check_range(inputs, "eps_ball", out, lo=0, lo_open=True)
    _check_range(inputs, "ceiling", out, lo=0)
    for key in ("eps",):
        vals = inputs.get(key)
        if vals is not None:
            if not isinstance(vals, list) or not all(_is_num(v) and 0 < v <= 1 for v in vals):
                out.append("eps values must lie in (0, 1]")
    for key in ("depths", "n_list"):
        vals = inputs.get(key)
        if vals is None:
            continue
        if not isinstance(vals, list) or not vals or not all(_is_int(v) and v >= (1 if key == "depths" else 0) for v in vals):
            out.append(f"{key} must be a nonempty list of {'positive' if key == 'depths' else 'nonnegative'} integers")
        elif key == "depths" and any(b <= a for a, b in zip(vals, vals[1:])):
            out.append("depths must be strictly increasing")
    model = inputs.get("model")
    if model is not None and not (isinstance(model, dict) and "name" in model):
        out.append("model must be a mapping with a 'name'")
    return out


def validate_file(path: str | os.PathLike) -> list[str]:
    path = Path(path)
    return validate_raw(load_raw(path), path.resolve().parent)


def build_config(
    path: str | os.PathLike,
    *,
    seed: int | None = None,
    output_dir: str | None = None,
    units: str | None = None,
) -> tuple[ExperimentConfig | None, list[str]]:
    """Load and validate; flag overrides win over the file."""
    path = Path(path)
    data = load_raw(path)
    if seed is not None:
        data["seed"] = seed
    if units is not None:
        data["units"] = units
    base = path.resolve().parent
    violations = validate_raw(data, base)
    if violations:
        return None, violations
    if output_dir is not None:
        out = Path(output_dir)
    elif "output_dir" in data:
        out = resolve(base, data["output_dir"])
    elif os.environ.get(OUTPUT_ENV):
        out = Path(os.environ[OUTPUT_ENV]) / data["experiment"]
    else:
        out = Path.cwd() / "runs" / data["experiment"]
    cfg = ExperimentConfig(
        experiment=data["experiment"],
        inputs=data.get("inputs") or {},
        output_dir=out,
        seed=int(data.get("seed", 0)),
        units=data.get("units", "nats"),
        base_dir=base,
        raw=data,
    )
    return cfg, []
