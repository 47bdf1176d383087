"""SVG plots derived from experiment CSVs.

The CSV is always the source of truth; these figures are for eyeballing.
SVG output is made reproducible by pinning matplotlib's hash salt and
dropping the date metadata.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .errors import InputError

KINDS = ("calls", "metrics", "gap", "scan", "sweeps")


def read_csv(path) -> tuple[list[str], dict[str, np.ndarray]]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if len(rows) < 2:
        raise InputError(f"{path} has no data rows")
    header, body = rows[0], rows[1:]
    if any(len(r) != len(header) for r in body):
        raise InputError(f"{path} has rows of unequal length")
    cols = {}
    for k, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[k]) if r[k] != "" else np.nan for r in body])
        except ValueError:
            raise InputError(f"column {name!r} of {path} is not numeric") from None
    return header, cols


def detect_kind(header: list[str]) -> str:
    if "classical_calls" in header:
        return "calls"
    if "min_gap" in header:
        return "gap"
    if header[:2] == ["s", "gap"]:
        return "scan"
    if header and header[0] == "sweeps":
        return "sweeps"
    if any(h.endswith("_mean") for h in header):
        return "metrics"
    raise InputError(f"cannot tell which plot fits columns {header}")


def _band(ax, x, cols, name, label):
    mean, var = cols[f"{name}_mean"], cols[f"{name}_var"]
    sd = np.sqrt(np.nan_to_num(var))
    ax.plot(x, mean, marker="o", label=label)
    ax.fill_between(x, mean - sd, mean + sd, alpha=0.25)


def emit_plot(csv_path, kind: str | None = None, out_path=None) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, cols = read_csv(csv_path)
    kind = kind or detect_kind(header)
    if kind not in KINDS:
        raise InputError(f"unknown plot kind {kind!r}; expected one of {', '.join(KINDS)}")
    out_path = out_path or os.path.splitext(str(csv_path))[0] + ".svg"
    x = cols[header[0]]
    try:
        if kind == "calls":
            fig, ax = plt.subplots(figsize=(6, 4))
            ax.plot(x, cols["classical_calls"], marker="o", label="classical calls")
            ax.plot(x, cols["quantum_calls"], marker="s", label="sampler calls")
            ax.axhline(cols["classical_baseline"][0], color="k", ls="--", label="classical only")
            ax.set_xlabel("budget")
            ax.set_ylabel("calls")
            ax.set_yscale("log")
            ax.legend()
        elif kind == "metrics":
            names = [h[:-5] for h in header if h.endswith("_mean") and not h.startswith("baseline_")
                     and h != "abs_delta_v_mean"]
            fig, axes = plt.subplots(len(names), 1, figsize=(6, 2.5 * len(names)), sharex=True, squeeze=False)
            for ax, name in zip(axes[:, 0], names):
                _band(ax, x, cols, name, "sampler")
                if f"baseline_{name}_mean" in cols:
                    _band(ax, x, cols, f"baseline_{name}", "random")
                ax.set_ylabel(name)
                ax.legend()
            axes[-1, 0].set_xlabel(header[0])
        elif kind == "gap":
            fig, ax = plt.subplots(figsize=(6, 4))
            y = cols["min_gap"]
            ax.loglog(x, y, "o", label="minimum gap")
            slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
            ax.loglog(x, np.exp(intercept) * x ** slope, "--", label=f"fit, exponent {slope:.3f}")
            ax.set_xlabel("qubits")
            ax.set_ylabel("minimum gap")
            ax.legend()
        elif kind == "scan":
            fig, ax = plt.subplots(figsize=(6, 4))
            ax.plot(x, cols["gap"])
            ax.set_xlabel("s")
            ax.set_ylabel("gap")
        else:
            fig, axes = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
            _band(axes[0], x, cols, "p0", "sampler")
            _band(axes[0], x, cols, "baseline_p0", "random")
            axes[0].set_ylabel("p0")
            axes[0].legend()
            _band(axes[1], x, cols, "min_energy", "sampler")
            _band(axes[1], x, cols, "baseline_min_energy", "random")
            axes[1].set_ylabel("lowest energy")
            axes[1].set_xlabel("sweeps")
            axes[1].set_xscale("log")
    except KeyError as exc:
        raise InputError(f"{csv_path} lacks column {exc.args[0]!r} needed for a {kind} plot") from None
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "hybridbb"}):
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path
