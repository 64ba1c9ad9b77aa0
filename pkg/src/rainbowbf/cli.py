"""Command-line front end: optimize / run / bench / witness.

Every output file is a pure function of the config plus the master seed.
Errors exit nonzero with one machine-readable line on stderr:
`error: code=<kind> key=<field> message=<text>`.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import allocation, evaluation
from .beamformer import (
    infeasibility_witness,
    load_beamformer,
    objective_value,
    optimize_rainbow,
    save_beamformer,
)
from .config import ConfigError, ScenarioConfig, parse_config
from .evaluation import (
    STREAM_ALLOC,
    STREAM_WITNESS,
    beam_metrics,
    bh_beamformer,
    footprint_3db,
    run_scenario,
    runtime_benchmark,
    scenario_rng,
)
from .kernels import HAVE_COMPILED, IMPL_AUTO, IMPL_COMPILED, IMPL_PYTHON

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4

FLOAT_FMT = "{:.9g}"


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return FLOAT_FMT.format(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _load_config(args) -> ScenarioConfig:
    if args.config:
        config = parse_config(args.config)
    else:
        config = ScenarioConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    out = args.out or os.environ.get("RAINBOWBF_OUT")
    if out:
        updates["output_dir"] = out
    if updates:
        from dataclasses import replace

        config = replace(config, **updates)
    return config


def _out_dir(config: ScenarioConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_optimize(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    mapping = config.build_mapping()
    plan = config.plan(config.bandwidth_hz[0])
    bf, trace = optimize_rainbow(
        mapping, plan, config.geom(), config.optimizer_settings(), args.impl
    )
    save_beamformer(bf, out / "beamformer.json")
    _write_csv(
        out / "f_trace.csv",
        ["iteration", "objective"],
        [(i + 1, f) for i, f in enumerate(trace.f_values)],
    )
    reloaded = load_beamformer(out / "beamformer.json")
    check = objective_value(reloaded, mapping)
    print(
        f"optimize: M={plan.m_subcarriers} n_rx={config.geom().n_rx} "
        f"F={trace.terminal_objective:.6f} (reloaded {check:.6f}) "
        f"iterations={trace.iterations} converged={trace.converged} "
        f"wall={trace.wall_time_s:.3f}s"
    )
    return EXIT_OK


def _run_case(payload):
    case, rainbow = payload
    return case.case_index, case.rep, run_scenario(case, rainbow=rainbow)


def cmd_run(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    cases = config.expand()
    geom = config.geom()
    settings = config.optimizer_settings()

    rainbow_by_bw = {}
    if "rainbow" in config.schemes:
        for bw in config.bandwidth_hz:
            rainbow_by_bw[bw] = optimize_rainbow(
                config.build_mapping(), config.plan(bw), geom, settings, args.impl
            )

    payloads = [(case, rainbow_by_bw.get(case.bandwidth_hz)) for case in cases]
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs, mp_context=get_context("spawn")) as pool:
            results = list(pool.map(_run_case, payloads))
    else:
        results = [_run_case(p) for p in payloads]
    reports = {(case_index, rep): report for case_index, rep, report in results}

    throughput_rows = []
    active_rows = []
    for case in cases:
        report = reports[(case.case_index, case.rep)]
        for tag in config.schemes:
            sm = report.schemes[tag]
            throughput_rows.append(
                (
                    tag,
                    case.allocator,
                    case.power_rule,
                    case.k_users,
                    case.bandwidth_hz,
                    case.rep,
                    sm.realized_throughput_bps,
                    sm.approx_throughput_bps,
                )
            )
            for slot in range(report.l_slots):
                active_rows.append(
                    (
                        tag,
                        case.allocator,
                        case.power_rule,
                        case.k_users,
                        case.bandwidth_hz,
                        case.rep,
                        slot,
                        sm.active_ratio_per_slot[slot],
                        sm.mean_footprint_user_fraction,
                    )
                )

    header = [
        "scheme",
        "allocator",
        "power_rule",
        "users",
        "bandwidth_hz",
        "rep",
        "throughput_bps",
        "approx_throughput_bps",
    ]
    first_bw = config.bandwidth_hz[0]
    first_k = config.users[0]
    _write_csv(
        out / "throughput_vs_K.csv",
        header,
        [r for r in throughput_rows if r[4] == first_bw],
    )
    _write_csv(
        out / "throughput_vs_bandwidth.csv",
        header,
        [r for r in throughput_rows if r[3] == first_k],
    )
    _write_csv(
        out / "active_ratio.csv",
        [
            "scheme",
            "allocator",
            "power_rule",
            "users",
            "bandwidth_hz",
            "rep",
            "slot",
            "active_user_ratio",
            "footprint_user_fraction",
        ],
        active_rows,
    )

    _emit_beam_metrics(config, out, args.impl)
    _emit_footprints(config, out, cases[0], rainbow_by_bw.get(first_bw))
    _emit_allocation_sample(config, cases[0], out, rainbow_by_bw.get(first_bw))
    print(f"run: {len(cases)} case(s), outputs in {out}")
    return EXIT_OK


def _emit_beam_metrics(config: ScenarioConfig, out: Path, impl: str) -> None:
    from .beamformer import OptimizerSettings

    plan = config.plan(config.bandwidth_hz[0])
    geom = config.geom()
    u_max = config.resolved_u_max()
    stride = config.beam_stride or max(1, config.subcarriers // 256)
    rows = []
    for kind in ("spiral", "lines"):
        from dataclasses import replace

        mapping = replace(config, mapping_kind=kind).build_mapping()
        for variant, settings in (
            ("jpta", config.optimizer_settings()),
            ("pa", OptimizerSettings(
                tau_max_s=0.0,
                grid_step_s=config.grid_step_s,
                convergence_tol=config.convergence_tol,
                max_iterations=config.max_iterations,
            )),
        ):
            bf, _ = optimize_rainbow(mapping, plan, geom, settings, impl)
            rows.extend(
                beam_metrics(
                    bf.weights_matrix(),
                    mapping,
                    plan,
                    geom,
                    grid_points=config.beam_grid_points,
                    stride=stride,
                    variant=variant,
                    mapping_kind=kind,
                )
            )
    _write_csv(
        out / "beam_metrics.csv",
        [
            "variant",
            "mapping",
            "subcarrier",
            "frequency_hz",
            "desired_u",
            "desired_v",
            "measured_u",
            "measured_v",
            "matching_error",
            "gain_at_desired",
            "peak_gain",
        ],
        [
            (
                r.variant,
                r.mapping_kind,
                r.subcarrier,
                r.frequency_hz,
                r.desired_u,
                r.desired_v,
                r.measured_u,
                r.measured_v,
                r.matching_error,
                r.gain_at_desired,
                r.peak_gain,
            )
            for r in rows
        ],
    )


def _emit_footprints(config: ScenarioConfig, out: Path, first_case, rainbow) -> None:
    plan = config.plan(config.bandwidth_hz[0])
    geom = config.geom()
    sat = config.sat()
    users = evaluation.build_users(first_case)
    target = users[0].direction
    samples = np.linspace(1, config.subcarriers, min(config.footprint_samples, config.subcarriers))
    samples = sorted(set(int(round(s)) for s in samples))
    rows = []
    weight_sets = {}
    if rainbow is not None:
        weight_sets["rainbow"] = rainbow[0].weights_matrix()
    weight_sets["bh_squint"] = bh_beamformer(target, plan, geom, squint=True)
    weight_sets["bh_no_squint"] = bh_beamformer(target, plan, geom, squint=False)
    for tag, weights in weight_sets.items():
        if tag not in config.schemes:
            continue
        for m in samples:
            points = footprint_3db(
                weights, plan, m, geom, sat, grid_points=config.footprint_grid_points
            )
            freq = plan.frequency(m)
            rows.extend((tag, m, freq, x / 1e3, y / 1e3) for x, y in points)
    _write_csv(
        out / "footprints.csv",
        ["scheme", "subcarrier", "frequency_hz", "ground_x_km", "ground_y_km"],
        rows,
    )


def _emit_allocation_sample(config, first_case, out: Path, rainbow) -> None:
    plan = first_case.plan()
    geom = config.geom()
    users = evaluation.build_users(first_case)
    sigma2 = evaluation.noise_power(plan, config.link())
    tag = config.schemes[0]
    us = np.array([u.direction.u for u in users])
    vs = np.array([u.direction.v for u in users])
    eta = np.stack([u.eta for u in users])
    budgets = np.array([u.power_budget_w for u in users])
    if tag == "rainbow" and rainbow is not None:
        gains = evaluation.beam_gains_for_users(rainbow[0].weights_matrix(), plan, geom, us, vs)
    elif tag == "beam_sharing":
        w = evaluation.beam_sharing_beamformer([u.direction for u in users], plan, geom)
        gains = evaluation.beam_gains_for_users(w, plan, geom, us, vs)
    else:
        gains = evaluation.bh_gain_matrix(
            plan, geom, users[0].direction, us, vs, squint=tag == "bh_squint"
        )
    gamma = eta * gains / (geom.n_rx * sigma2)
    rng = scenario_rng(config.seed, first_case.case_index, first_case.rep, STREAM_ALLOC, 0)
    if first_case.allocator == "jspa":
        alloc = allocation.jspa_greedy(gamma, budgets, rng)
    else:
        alloc = allocation.maxch_allocate(gamma, budgets)
    allocation.write_allocation_csv(
        alloc, out / "allocation_assign.csv", out / "allocation_watts.csv"
    )


def cmd_bench(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    if args.impl == "both":
        impls = [IMPL_PYTHON] + ([IMPL_COMPILED] if HAVE_COMPILED else [])
    else:
        impls = [args.impl]
    rows = runtime_benchmark(
        m_values=tuple(args.m_values),
        n_rx_values=tuple(args.n_values),
        runs=args.runs,
        iterations=args.iterations,
        impls=tuple(impls),
        settings=config.optimizer_settings(),
    )
    _write_csv(
        out / "runtime.csv",
        [
            "impl",
            "subcarriers",
            "n_rx",
            "grid_points",
            "iterations",
            "runs",
            "mean_seconds",
            "std_seconds",
        ],
        [
            (
                r.impl,
                r.m_subcarriers,
                r.n_rx,
                r.grid_points,
                r.iterations,
                r.runs,
                r.mean_seconds,
                r.std_seconds,
            )
            for r in rows
        ],
    )
    for r in rows:
        print(
            f"bench impl={r.impl} M={r.m_subcarriers} n_rx={r.n_rx}: "
            f"{r.mean_seconds:.4f}s +/- {r.std_seconds:.4f}s over {r.runs} runs"
        )
    return EXIT_OK


def cmd_witness(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    results = []
    for i in range(args.count):
        rng = scenario_rng(config.seed, 0, i, STREAM_WITNESS)
        report = infeasibility_witness(args.m, rng)
        results.append(
            {
                "seed_index": i,
                "m_subcarriers": report.m_subcarriers,
                "n_rx": report.n_rx,
                "objective": report.objective,
                "objective_bound": report.objective_bound,
                "residual": report.residual,
                "converged": report.converged,
                "epsilon_lattice_integer": report.epsilon_lattice_integer,
                "epsilon_half_in_lattice": report.epsilon_half_in_lattice,
            }
        )
    doc = {
        "m_subcarriers": args.m,
        "count": args.count,
        "min_residual": min(r["residual"] for r in results),
        "results": results,
    }
    with open(out / "witness_report.json", "w") as fh:
        json.dump(doc, fh, indent=1)
    print(
        f"witness: M={args.m} over {args.count} mapping(s), "
        f"min residual {doc['min_residual']:.6g}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rainbowbf",
        description="Wideband LEO uplink simulator: rainbow beamforming and resource allocation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, impl_choices=(IMPL_AUTO, IMPL_COMPILED, IMPL_PYTHON), impl_default=IMPL_AUTO):
        p.add_argument("--config", help="config file (flat dotted keys); omitted = defaults")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", help="output directory (fallback: $RAINBOWBF_OUT, then config)")
        p.add_argument(
            "--impl",
            default=impl_default,
            choices=list(impl_choices),
            help="line-search kernel lane",
        )

    p = sub.add_parser("optimize", help="optimize a rainbow beamformer, write JSON + F trace")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("run", help="run the scenario sweep, write evaluation CSVs")
    common(p)
    p.add_argument("--jobs", type=int, default=0, help="worker processes (0 = all cores)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="time the optimizer across (M, n_rx); write runtime.csv")
    common(p, impl_choices=(IMPL_AUTO, IMPL_COMPILED, IMPL_PYTHON, "both"), impl_default="both")
    p.add_argument("--m-values", type=int, nargs="+", default=[128, 256, 512, 1024])
    p.add_argument("--n-values", type=int, nargs="+", default=[16, 64, 256])
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--iterations", type=int, default=8)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("witness", help="steering-infeasibility residual report")
    common(p)
    p.add_argument("--m", type=int, default=3, help="number of subcarriers")
    p.add_argument("--count", type=int, default=1, help="number of random mappings")
    p.set_defaults(func=cmd_witness)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: code=config key={exc.key} message={exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, IndexError) as exc:
        print(f"error: code=validation key=- message={exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: code=io key=- message={exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
