"""SVG line charts rendered from the harness CSVs."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import DataError, read_csv  # noqa: E402

# schema name -> columns that identify it
SCHEMAS = {
    "curves": {"psi_kind", "p", "replicate", "s", "mse_rel", "pe_rel"},
    "summary": {"psi_kind", "p", "mse_rel_opt", "pe_rel_opt"},
    "illustrative": {"method", "s", "pred_err", "est_err"},
    "sequential": {"step", "mse", "pe"},
    "sequential_data": {"step", "auc"},
    "bound": {"psi_kind", "p", "lambda", "bound"},
}


def detect_schema(header) -> str:
    cols = set(header)
    matches = [k for k, need in SCHEMAS.items() if need <= cols]
    if not matches:
        raise DataError(f"unknown schema with columns {sorted(cols)}")
    # the most specific match wins
    return max(matches, key=lambda k: len(SCHEMAS[k]))


def _load(path) -> tuple[str, dict[str, list[str]]]:
    header, body = read_csv(path)
    if not body:
        raise DataError("no data rows")
    cols = {h: [row[j] for row in body] for j, h in enumerate(header)}
    return detect_schema(header), cols


def _floats(v) -> np.ndarray:
    return np.array([float(x) for x in v])


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def _curves(cols, out: Path, stem: str) -> list[Path]:
    s = _floats(cols["s"])
    p = np.array([int(x) for x in cols["p"]])
    kinds = cols["psi_kind"]
    files = []
    for kind in dict.fromkeys(kinds):
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.6), sharex=True)
        for metric, ax in zip(("mse_rel", "pe_rel"), axes):
            vals = _floats(cols[metric])
            for pv in sorted(set(p[[k == kind for k in kinds]])):
                mask = (p == pv) & np.array([k == kind for k in kinds])
                acc = defaultdict(list)
                for si, vi in zip(s[mask], vals[mask]):
                    acc[si].append(vi)
                xs = sorted(acc)
                ax.plot(xs, [np.mean(acc[x]) for x in xs], label=f"p={pv}")
            ax.set_xlabel("s")
            ax.set_ylabel(metric)
        axes[0].legend(fontsize=7)
        fig.suptitle(kind)
        files.append(_save(fig, out / f"{stem}_{kind}.svg"))
    return files


def _summary(cols, out: Path, stem: str) -> list[Path]:
    p = _floats(cols["p"])
    kinds = cols["psi_kind"]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6), sharex=True)
    for metric, ax in zip(("mse_rel_opt", "pe_rel_opt"), axes):
        vals = _floats(cols[metric])
        for kind in dict.fromkeys(kinds):
            mask = np.array([k == kind for k in kinds])
            order = np.argsort(p[mask])
            ax.plot(p[mask][order], vals[mask][order], marker="o", label=kind)
        ax.set_xscale("log")
        ax.set_xlabel("p")
        ax.set_ylabel(metric)
    axes[0].legend(fontsize=7)
    return [_save(fig, out / f"{stem}.svg")]


def _illustrative(cols, out: Path, stem: str) -> list[Path]:
    s = _floats(cols["s"])
    methods = cols["method"]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6), sharex=True)
    for metric, ax in zip(("pred_err", "est_err"), axes):
        vals = _floats(cols[metric])
        for m in dict.fromkeys(methods):
            mask = np.array([x == m for x in methods])
            ax.plot(s[mask], vals[mask], label=m)
        ax.set_xlabel("s")
        ax.set_ylabel(metric)
        ax.set_yscale("log")
    axes[0].legend()
    return [_save(fig, out / f"{stem}.svg")]


def _by_step(cols, out: Path, stem: str, metrics) -> list[Path]:
    step = _floats(cols["step"])
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for metric in metrics:
        ax.plot(step, _floats(cols[metric]), marker="o", label=metric)
    ax.set_xlabel("step")
    ax.set_xticks(step)
    ax.legend()
    return [_save(fig, out / f"{stem}.svg")]


def _bound(cols, out: Path, stem: str) -> list[Path]:
    p = _floats(cols["p"])
    b = _floats(cols["bound"])
    kinds = cols["psi_kind"]
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for kind in dict.fromkeys(kinds):
        mask = np.array([k == kind for k in kinds])
        ax.plot(p[mask], b[mask], marker="o", label=kind)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("p")
    ax.set_ylabel("bound")
    ax.legend(fontsize=7)
    return [_save(fig, out / f"{stem}.svg")]


def emit_plots(csv_path: str | Path, kind: str | None = None, out_dir: str | Path | None = None) -> list[Path]:
    """Renders the CSV at ``csv_path``; ``kind`` defaults to the detected schema."""
    csv_path = Path(csv_path)
    detected, cols = _load(csv_path)
    if kind is not None and kind != detected:
        if kind not in SCHEMAS:
            raise DataError(f"unknown schema {kind!r}")
        if not SCHEMAS[kind] <= set(cols):
            raise DataError(f"{csv_path.name} does not match the {kind} schema")
        detected = kind
    out = Path(out_dir) if out_dir is not None else csv_path.parent
    out.mkdir(parents=True, exist_ok=True)
    stem = csv_path.stem
    if detected == "curves":
        return _curves(cols, out, stem)
    if detected == "summary":
        return _summary(cols, out, stem)
    if detected == "illustrative":
        return _illustrative(cols, out, stem)
    if detected == "sequential":
        return _by_step(cols, out, stem, ("mse", "pe"))
    if detected == "sequential_data":
        return _by_step(cols, out, stem, ("auc",))
    return _bound(cols, out, stem)
