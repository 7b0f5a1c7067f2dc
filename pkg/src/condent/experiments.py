"""Named experiments: each reads a validated config and writes CSV and text outputs."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from collections.abc import Iterable
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from condent import __version__
from condent.approximation import uniform_level, worst_case_error
from condent.config import ExperimentConfig, load_partition, load_space
from condent.entropy import (
    LN2,
    cond_entropy,
    entropy_limit_diagnostic,
    geometric_model,
    heavy_tail_model,
    martin_condition_report,
    point_mass_model,
    points_rule,
    threshold_rule,
    trivial_rule,
)
from condent.martingale import (
    bernoulli_posterior_family,
    beta_bernoulli_sampler,
    check_martingale,
    dirac_entropy_demo,
    exact_expectation,
    likelihood_ratio_family,
    uniform_convergence_diag,
    wald_mle_experiment,
)
from condent.models import bernoulli_model, exponential_field, tilted_model
from condent.partition import Filtration


def fmt(x) -> str:
    """12 significant digits, '.' separator; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x + 0.0, ".12g")


def csv_text(header: list[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def block_str(blocks) -> str:
    return "|".join(",".join(map(str, b)) for b in blocks)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Outputs:
    def __init__(self, directory: Path):
        self.directory = directory
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        _atomic_write(self.directory / name, text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()


def _unit(cfg: ExperimentConfig):
    return (1.0, "nats") if cfg.units == "nats" else (1.0 / LN2, "bits")


def _space_and_levels(cfg: ExperimentConfig):
    inp = cfg.inputs
    space = load_space(inp["space"], cfg.base_dir)
    levels = [load_partition(ref, cfg.base_dir, space.size) for ref in inp["levels"]]
    a = load_partition(inp["a"], cfg.base_dir, space.size) if "a" in inp else None
    filtration = Filtration(levels, a)
    return space, filtration, filtration.limit


# Experiments -----------------------------------------------------------------


def run_entropy_table(cfg: ExperimentConfig, out: Outputs) -> None:
    scale, unit = _unit(cfg)
    space = load_space(cfg.inputs["space"], cfg.base_dir)
    rows = []
    for i, pair in enumerate(cfg.inputs["pairs"], start=1):
        xi = load_partition(pair["xi"], cfg.base_dir, space.size)
        eta = load_partition(pair["eta"], cfg.base_dir, space.size)
        rep = cond_entropy(space, xi, eta)
        rows.append([i, block_str(xi.blocks), block_str(eta.blocks), rep.value * scale,
                     " ".join(fmt(b * scale) for b in rep.by_block)])
    out.write("entropy_table.csv", csv_text(["pair", "xi", "eta", f"entropy_{unit}", f"by_block_{unit}"], rows))


def run_martin_report(cfg: ExperimentConfig, out: Outputs) -> None:
    scale, unit = _unit(cfg)
    space, filtration, a = _space_and_levels(cfg)
    report = martin_condition_report(space, filtration, a)
    rows = [[n, v * scale] for n, v in enumerate(report.values, start=1)]
    out.write("martin_report.csv", csv_text(["level", f"max_cond_entropy_{unit}"], rows))
    out.write(
        "martin_summary.txt",
        f"verdict: {report.verdict}\nlevel: {report.level}\nbound_{unit}: {fmt(report.bound * scale)}\n",
    )


def run_approximation_table(cfg: ExperimentConfig, out: Outputs) -> None:
    space, filtration, a = _space_and_levels(cfg)
    rows = []
    for n, level in enumerate(filtration.levels, start=1):
        wc = worst_case_error(space, a, level)
        rows.append([n, wc.error, "{" + ",".join(map(str, wc.blocks)) + "}"])
    out.write("approximation_table.csv", csv_text(["level", "worst_case_error", "achieved_by"], rows))
    lines = []
    for eps in cfg.inputs.get("eps", [0.5, 0.1, 0.01]):
        level = uniform_level(space, filtration, a, eps)
        lines.append(f"eps={fmt(eps)} level={'none' if level is None else level}")
    out.write("approximation_summary.txt", "\n".join(lines) + "\n")


def _truncated_model(desc: dict):
    name = desc["name"]
    if name == "geometric":
        return geometric_model(float(desc.get("p", 0.5)))
    if name == "heavy_tail":
        return heavy_tail_model()
    if name == "point_mass":
        return point_mass_model()
    raise ValueError(f"unknown truncated model {name!r}")


def _eta_rule(desc):
    if desc in (None, "trivial"):
        return trivial_rule
    if desc == "points":
        return points_rule
    if isinstance(desc, dict) and "threshold" in desc:
        return threshold_rule(int(desc["threshold"]))
    raise ValueError(f"unknown eta rule {desc!r}")


def run_limit_diagnostic(cfg: ExperimentConfig, out: Outputs) -> None:
    scale, unit = _unit(cfg)
    inp = cfg.inputs
    diag = entropy_limit_diagnostic(
        _truncated_model(inp["model"]),
        _eta_rule(inp.get("eta")),
        inp["depths"],
        tol=float(inp.get("tol", 1e-4)),
        ceiling=inp.get("ceiling"),
    )
    rows = [
        [d, v * scale, None if inc is None else inc * scale, verdict]
        for d, v, inc, verdict in diag.rows()
    ]
    out.write("limit_diagnostic.csv", csv_text(["depth", f"entropy_{unit}", "increment", "verdict"], rows))
    out.write(
        "limit_summary.txt",
        f"verdict: {diag.verdict}\nnondecreasing: {fmt(diag.nondecreasing)}\n",
    )


def _parametric_model(desc: dict):
    name = desc["name"]
    if name == "bernoulli":
        return bernoulli_model(float(desc.get("theta0", 0.5)))
    if name == "tilted":
        return tilted_model(int(desc.get("k", 3)), float(desc.get("theta0", 0.0)))
    if name == "exponential_field":
        return exponential_field(
            m=int(desc.get("m", 5)),
            length_scale=float(desc.get("length_scale", 0.3)),
            log_variance0=float(desc.get("theta0", 0.0)),
        )
    raise ValueError(f"unknown model {name!r}")


def run_martingale_check(cfg: ExperimentConfig, out: Outputs) -> None:
    inp = cfg.inputs
    model = _parametric_model(inp["model"])
    family = likelihood_ratio_family(model)
    n_max = int(inp["n_max"])
    tol = float(inp.get("tol", 1e-12))
    rows = []
    for theta in inp["thetas"]:
        chk = check_martingale(family, model, theta, n_max=n_max, tol=tol)
        mean_err = abs(exact_expectation(family, model, theta, n_max) - 1.0)
        rows.append([theta, n_max, chk.max_violation, mean_err, chk.passed and mean_err < tol])
    out.write(
        "martingale_check.csv",
        csv_text(["theta", "n_max", "max_violation", "expectation_error", "passed"], rows),
    )


def run_uniform_convergence(cfg: ExperimentConfig, out: Outputs) -> None:
    inp = cfg.inputs
    prior = inp.get("prior", [1.0, 1.0])
    family = bernoulli_posterior_family(*prior)
    if "theta0" in inp:
        sampler = bernoulli_model(float(inp["theta0"])).sample
    else:
        sampler = beta_bernoulli_sampler(*prior)
    rows = []
    for size in inp.get("grid_sizes", [11, 101]):
        grid = np.linspace(0.0, 1.0, int(size))
        table = uniform_convergence_diag(
            family, grid, sampler, inp["n_list"], int(inp["replicates"]), cfg.seed,
            n_ref=inp.get("n_ref"),
        )
        rows += [[size, n, m, mx, l1] for n, m, mx, l1 in table.rows()]
    out.write(
        "uniform_convergence.csv",
        csv_text(["grid_size", "n", "mean_sup_dev", "max_sup_dev", "l1_dev"], rows),
    )


def _grid(desc) -> list:
    if isinstance(desc, dict):
        start, stop, step = (float(desc[k]) for k in ("start", "stop", "step"))
        count = int(round((stop - start) / step)) + 1
        return np.round(start + step * np.arange(count), 12).tolist()
    return desc


def run_wald_consistency(cfg: ExperimentConfig, out: Outputs) -> None:
    inp = cfg.inputs
    model = _parametric_model(inp["model"])
    rep = wald_mle_experiment(
        model,
        _grid(inp["grid"]),
        float(inp["eps_ball"]),
        int(inp["n_max"]),
        int(inp["replicates"]),
        cfg.seed,
        float(inp["tol"]),
        record=inp.get("record"),
    )
    p = rep.grid.shape[1]
    dev = rep.deviation
    rows = []
    for r in range(rep.estimates.shape[0]):
        for j, n in enumerate(rep.n_values):
            rows.append([r, n, *rep.estimates[r, j], rep.log_sup_ratio[r, j], dev[r, j]])
    theta_cols = ["theta_hat"] if p == 1 else [f"theta_hat_{i + 1}" for i in range(p)]
    out.write("wald_results.csv", csv_text(["replicate", "n", *theta_cols, "log_sup_ratio", "sup_dev"], rows))
    agg = [
        [n, rep.sup_ratio_outside_ball[:, j].mean(), rep.log_sup_ratio[:, j].mean(), dev[:, j].mean()]
        for j, n in enumerate(rep.n_values)
    ]
    out.write("wald_aggregate.csv", csv_text(["n", "mean_sup_ratio", "mean_log_sup_ratio", "mean_dev"], agg))
    out.write(
        "wald_summary.txt",
        f"success_fraction: {fmt(rep.success_fraction)}\n"
        f"tol: {fmt(rep.tol)}\neps_ball: {fmt(rep.eps_ball)}\n"
        f"grid_spacing: {fmt(rep.grid_spacing)} (estimates maximize over the grid only)\n",
    )


def run_dirac_demo(cfg: ExperimentConfig, out: Outputs) -> None:
    inp = cfg.inputs
    demo = dirac_entropy_demo(int(inp.get("depth", 5)), inp.get("thetas", (0.5, 1.0, 2.0)))
    out.write("dirac_martingale.csv", csv_text(["theta", "n", "value_at_y"], demo.martingale_table))
    out.write(
        "dirac_summary.txt",
        f"depth: {demo.depth}\nentropy: {fmt(demo.entropy_value)}\n"
        f"constant_after_first: {fmt(demo.constant_after_first)}\n",
    )


RUNNERS = {
    "entropy_table": run_entropy_table,
    "martin_report": run_martin_report,
    "approximation_table": run_approximation_table,
    "limit_diagnostic": run_limit_diagnostic,
    "martingale_check": run_martingale_check,
    "uniform_convergence": run_uniform_convergence,
    "wald_consistency": run_wald_consistency,
    "dirac_demo": run_dirac_demo,
}


def run(cfg: ExperimentConfig) -> dict:
    """Run one experiment, then write ``manifest.json`` listing every output."""
    out = Outputs(cfg.output_dir)
    RUNNERS[cfg.experiment](cfg, out)
    manifest = {
        "artifact_version": __version__,
        "config": cfg.raw,
        "experiment": cfg.experiment,
        "master_seed": cfg.seed,
        "outputs": dict(sorted(out.files.items())),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    _atomic_write(cfg.output_dir / "manifest.json", json.dumps(manifest, indent=2, default=str) + "\n")
    return manifest
