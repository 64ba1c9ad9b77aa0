"""Deterministic figure renderers over the published CSV schemas."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schemas import load_rows

FIGURE_IDS = (
    "beam_direction_3d",
    "matching_error",
    "beam_gain_vs_freq",
    "footprints",
    "active_ratio_vs_K",
    "throughput_vs_K",
    "throughput_vs_bandwidth",
    "allocation_comparison",
    "runtime",
)

_STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "legend.fontsize": 8,
}


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    input_dir: Path
    output_path: Path


def _mean_by(rows, keys, value):
    groups: dict = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r[value])
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


def _series_label(parts) -> str:
    return "/".join(str(int(p)) if isinstance(p, float) and p.is_integer() else str(p) for p in parts)


def render(spec: FigureSpec) -> Path:
    """Render one figure id from its input CSVs; returns the output path."""
    if spec.figure_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure id {spec.figure_id!r}")
    spec.output_path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(_STYLE):
        fig = _RENDERERS[spec.figure_id](spec.input_dir)
        fig.savefig(spec.output_path)
        plt.close(fig)
    return spec.output_path


def _fig_beam_direction_3d(indir: Path):
    rows = [r for r in load_rows(indir / "beam_metrics.csv", "beam_metrics.csv") if r["variant"] == "jpta"]
    mappings = sorted({r["mapping"] for r in rows})
    fig = plt.figure(figsize=(6.4, 3.4))
    for i, mapping in enumerate(mappings, start=1):
        ax = fig.add_subplot(1, len(mappings), i, projection="3d")
        sel = [r for r in rows if r["mapping"] == mapping]
        f = np.array([r["frequency_hz"] for r in sel]) / 1e9
        u = np.array([r["measured_u"] for r in sel])
        v = np.array([r["measured_v"] for r in sel])
        ax.scatter(u, v, f, c=f, cmap="rainbow", s=4)
        ax.plot(
            [r["desired_u"] for r in sel], [r["desired_v"] for r in sel], f, color="0.4", lw=0.5
        )
        ax.set_xlabel("u")
        ax.set_ylabel("v")
        ax.set_zlabel("f [GHz]")
        ax.set_title(f"mapping: {mapping}", fontsize=9)
    fig.suptitle("measured beam direction per subcarrier")
    return fig


def _fig_matching_error(indir: Path):
    rows = load_rows(indir / "beam_metrics.csv", "beam_metrics.csv")
    fig, ax = plt.subplots()
    for mapping in sorted({r["mapping"] for r in rows}):
        for variant in sorted({r["variant"] for r in rows}):
            sel = [r for r in rows if r["mapping"] == mapping and r["variant"] == variant]
            if not sel:
                continue
            sel.sort(key=lambda r: r["frequency_hz"])
            ax.plot(
                [r["frequency_hz"] / 1e9 for r in sel],
                [r["matching_error"] for r in sel],
                label=f"{mapping}/{variant}",
            )
    ax.set_xlabel("subcarrier frequency [GHz]")
    ax.set_ylabel("beam direction matching error (UV)")
    ax.set_title("pointing error per subcarrier")
    ax.legend()
    return fig


def _fig_beam_gain_vs_freq(indir: Path):
    rows = load_rows(indir / "beam_metrics.csv", "beam_metrics.csv")
    fig, ax = plt.subplots()
    for mapping in sorted({r["mapping"] for r in rows}):
        for variant in sorted({r["variant"] for r in rows}):
            sel = [r for r in rows if r["mapping"] == mapping and r["variant"] == variant]
            if not sel:
                continue
            sel.sort(key=lambda r: r["frequency_hz"])
            gains = np.maximum([r["gain_at_desired"] for r in sel], 1e-9)
            ax.plot(
                [r["frequency_hz"] / 1e9 for r in sel],
                10 * np.log10(gains),
                label=f"{mapping}/{variant}",
            )
    ax.set_xlabel("subcarrier frequency [GHz]")
    ax.set_ylabel("gain at desired direction [dB]")
    ax.set_title("beam gain toward the desired direction")
    ax.legend()
    return fig


def _fig_footprints(indir: Path):
    rows = load_rows(indir / "footprints.csv", "footprints.csv")
    schemes = sorted({r["scheme"] for r in rows})
    fig, axes = plt.subplots(1, len(schemes), figsize=(3.2 * len(schemes), 3.4), squeeze=False)
    for ax, scheme in zip(axes[0], schemes):
        sel = [r for r in rows if r["scheme"] == scheme]
        f = np.array([r["frequency_hz"] for r in sel])
        ax.scatter(
            [r["ground_x_km"] for r in sel],
            [r["ground_y_km"] for r in sel],
            c=f,
            cmap="rainbow",
            s=2,
        )
        ax.set_title(scheme, fontsize=9)
        ax.set_xlabel("x [km]")
        ax.set_ylabel("y [km]")
        ax.set_aspect("equal")
    fig.suptitle("half-power beam footprints on the ground")
    return fig


def _fig_active_ratio_vs_K(indir: Path):
    rows = load_rows(indir / "active_ratio.csv", "active_ratio.csv")
    mean = _mean_by(rows, ("scheme", "allocator", "users"), "active_user_ratio")
    fig, ax = plt.subplots()
    series = sorted({(s, a) for s, a, _ in mean})
    for scheme, alloc in series:
        ks = sorted({k for s, a, k in mean if (s, a) == (scheme, alloc)})
        ax.plot(ks, [mean[(scheme, alloc, k)] for k in ks], marker="o", label=f"{scheme}/{alloc}")
    ax.set_xlabel("number of users K")
    ax.set_ylabel("mean active user ratio")
    ax.set_ylim(0, 1.05)
    ax.set_title("active user ratio vs user count")
    ax.legend()
    return fig


def _fig_throughput_vs_K(indir: Path):
    rows = load_rows(indir / "throughput_vs_K.csv", "throughput_vs_K.csv")
    mean = _mean_by(rows, ("scheme", "allocator", "power_rule", "users"), "throughput_bps")
    fig, ax = plt.subplots()
    series = sorted({key[:3] for key in mean})
    for key in series:
        ks = sorted({k for *head, k in mean if tuple(head) == key})
        ax.plot(
            ks,
            [mean[key + (k,)] / 1e9 for k in ks],
            marker="o",
            label=_series_label(key),
        )
    ax.set_xlabel("number of users K")
    ax.set_ylabel("throughput [Gb/s]")
    ax.set_title("uplink throughput vs user count")
    ax.legend()
    return fig


def _fig_throughput_vs_bandwidth(indir: Path):
    rows = load_rows(indir / "throughput_vs_bandwidth.csv", "throughput_vs_bandwidth.csv")
    mean = _mean_by(rows, ("scheme", "allocator", "power_rule", "bandwidth_hz"), "throughput_bps")
    fig, ax = plt.subplots()
    series = sorted({key[:3] for key in mean})
    for key in series:
        bws = sorted({b for *head, b in mean if tuple(head) == key})
        ax.plot(
            [b / 1e9 for b in bws],
            [mean[key + (b,)] / 1e9 for b in bws],
            marker="o",
            label=_series_label(key),
        )
    ax.set_xlabel("bandwidth [GHz]")
    ax.set_ylabel("throughput [Gb/s]")
    ax.set_title("uplink throughput vs bandwidth")
    ax.legend()
    return fig


def _fig_allocation_comparison(indir: Path):
    rows = load_rows(indir / "throughput_vs_K.csv", "throughput_vs_K.csv")
    schemes = sorted({r["scheme"] for r in rows})
    scheme = "rainbow" if "rainbow" in schemes else schemes[0]
    sel = [r for r in rows if r["scheme"] == scheme]
    mean = _mean_by(sel, ("allocator", "power_rule"), "throughput_bps")
    fig, ax = plt.subplots()
    labels = [_series_label(key) for key in mean]
    ax.bar(labels, [v / 1e9 for v in mean.values()], color="tab:blue")
    ax.set_ylabel("mean throughput [Gb/s]")
    ax.set_title(f"allocator and power-rule comparison ({scheme})")
    return fig


def _fig_runtime(indir: Path):
    rows = load_rows(indir / "runtime.csv", "runtime.csv")
    fig, ax = plt.subplots()
    series = sorted({(r["impl"], r["n_rx"]) for r in rows})
    for impl, n_rx in series:
        sel = sorted(
            (r for r in rows if r["impl"] == impl and r["n_rx"] == n_rx),
            key=lambda r: r["subcarriers"],
        )
        ax.loglog(
            [r["subcarriers"] for r in sel],
            [r["mean_seconds"] for r in sel],
            marker="o",
            label=f"{impl}, n_rx={int(n_rx)}",
        )
    ax.set_xlabel("subcarriers M")
    ax.set_ylabel("optimizer wall time [s]")
    ax.set_title("optimizer runtime scaling")
    ax.legend()
    return fig


_RENDERERS = {
    "beam_direction_3d": _fig_beam_direction_3d,
    "matching_error": _fig_matching_error,
    "beam_gain_vs_freq": _fig_beam_gain_vs_freq,
    "footprints": _fig_footprints,
    "active_ratio_vs_K": _fig_active_ratio_vs_K,
    "throughput_vs_K": _fig_throughput_vs_K,
    "throughput_vs_bandwidth": _fig_throughput_vs_bandwidth,
    "allocation_comparison": _fig_allocation_comparison,
    "runtime": _fig_runtime,
}
