"""Command-line surface tying the pipeline together.

Subcommands: asymptotic, simulate-dr, optimize, compare, ingest, empirical,
rv-critical. Every report command writes delimited tables (and, unless
--no-plots, the matching figures) into the output directory. Exit codes:
0 success, 2 config error, 3 data error, 4 numerical degeneracy.

The output directory resolves as: --out flag, then the CATPOOL_OUTPUT_DIR
environment variable, then the config file's output_dir.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import plotting
from .config import ExperimentConfig, load_config
from .distributions import frechet_quantile, frechet_sample
from .errors import ConfigError, DataError, DegeneratePoolError, EstimationError
from .evt import drop_nonpositive, hill_estimate, pooled_tail_estimate, scale_estimate
from .ingest import aggregate_monthly, parse_claims, persist_series, read_series, series_matrix
from .montecarlo import build_pool_sample, dr_empirical, dr_simulated
from .optimize import (OptimizerConfig, compare_optimizers, minimize,
                       pool_objective)
from .pool import FeasibleBox, LayerSpec, distance_to_box, feasible_box
from .stattests import (format_critical_values, load_critical_values,
                        rv_test_statistic, tabulate_critical_values,
                        tail_equivalence_test)

INF_TOKEN = "inf"


def write_csv(path, fieldnames, rows) -> None:
    """Write rows with a fixed schema; floats keep repr precision."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames,
                                lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_csv(path):
    """Read one of this module's own CSV outputs back as dict rows."""
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def _format_value(value):
    if isinstance(value, float):
        value = float(value)
        if value == float("inf"):
            return INF_TOKEN
        return repr(value)
    return value


def _rows_formatted(rows):
    return [{k: _format_value(v) for k, v in row.items()} for row in rows]


def _resolve_output_dir(args, config: ExperimentConfig) -> Path:
    if getattr(args, "out", None):
        out = Path(args.out)
    elif os.environ.get("CATPOOL_OUTPUT_DIR"):
        out = Path(os.environ["CATPOOL_OUTPUT_DIR"])
    else:
        out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args) -> ExperimentConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = [args.seed]
    if getattr(args, "threads", None) is not None:
        overrides["threads"] = args.threads
    if getattr(args, "m", None) is not None:
        overrides["m"] = args.m
    if getattr(args, "no_plots", False):
        overrides["plots"] = False
    return load_config(getattr(args, "config", None), overrides)


def _require_model(config: ExperimentConfig):
    if config.model is None:
        raise ConfigError("model: this command needs a model section")
    return config.model


def _box_lower_lambdas(config: ExperimentConfig, box: FeasibleBox) -> np.ndarray:
    if config.lambda_policy == "explicit":
        return np.asarray(config.lambdas, dtype=float)
    return box.lower.copy()


def cmd_asymptotic(args) -> int:
    config = _load_config(args)
    model_spec = _require_model(config)
    out = _resolve_output_dir(args, config)

    rows = []
    for xi in config.resolve_xi(model_spec.alpha1):
        model = model_spec.tail_model(xi)
        box = feasible_box(model)
        a1 = model.alphas[0]
        for i in range(model.n):
            rows.append({
                "xi": xi,
                "i": i + 1,
                "lambda_lower": float(box.lower[i]),
                "lambda_upper": float(box.upper[i]),
                "dr_min": min(xi ** (a1 / model.alphas[i]), 1.0),
            })
    write_csv(out / "asymptotic.csv",
              ["xi", "i", "lambda_lower", "lambda_upper", "dr_min"],
              _rows_formatted(rows))
    if config.plots:
        plotting.asymptotic_figure(rows, out / "asymptotic.png")
    print(f"wrote {out / 'asymptotic.csv'}")
    return 0


def _simulate_dr_cell(config, frechet, xi, seed):
    model = config.model.tail_model(xi)
    box = feasible_box(model)
    lambdas = _box_lower_lambdas(config, box)
    a1 = model.alphas[0]
    losses = np.column_stack([
        frechet_sample(params, config.m, seed=[seed, i])
        for i, params in enumerate(frechet)])
    rows = []
    for p in config.p_grid:
        specs = []
        for i, params in enumerate(frechet):
            attach = xi ** (a1 / model.alphas[i]) * frechet_quantile(params, p)
            specs.append(LayerSpec(attach, lambdas[i] * attach))
        report = dr_simulated(build_pool_sample(losses, specs), frechet, p)
        for i in range(len(frechet)):
            rows.append({
                "xi": xi, "p": p, "i": i + 1,
                "dr": float(report.dr[i]),
                "retained": float(report.retained_ratio[i]),
                "share": float(report.share_ratio[i]),
                "seed": seed,
            })
    return rows


def cmd_simulate_dr(args) -> int:
    config = _load_config(args)
    model_spec = _require_model(config)
    if config.lambda_policy not in ("box_lower", "explicit"):
        raise ConfigError(
            "lambda_policy: simulate-dr supports box_lower or explicit")
    frechet = model_spec.require_frechet()
    out = _resolve_output_dir(args, config)

    cells = [(xi, seed) for xi in config.resolve_xi(model_spec.alpha1)
             for seed in config.seeds]
    rows = []
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        futures = [pool.submit(_simulate_dr_cell, config, frechet, xi, seed)
                   for xi, seed in cells]
        for future in futures:
            rows.extend(future.result())
    write_csv(out / "dr_curves.csv",
              ["xi", "p", "i", "dr", "retained", "share", "seed"],
              _rows_formatted(rows))
    if config.plots:
        plotting.dr_curves_figure(rows, out / "dr_curves.png")
    print(f"wrote {out / 'dr_curves.csv'} ({len(rows)} rows)")
    return 0


def _optimize_cell(config, frechet, model_spec, xi, p, seed, algorithm):
    model = model_spec.tail_model(xi)
    box = feasible_box(model)
    search = FeasibleBox(
        lower=np.full(model.n, 1.0 + 1e-6),
        upper=box.lower + config.search_cap)
    objective = pool_objective(frechet, config.m, seed, model, p)
    run = minimize(objective, OptimizerConfig(
        bounds=search, algorithm=algorithm, seed=seed,
        stall_limit=config.stall_limit,
        max_iterations=config.max_iterations))
    row = {
        "xi": xi, "p": p, "seed": seed, "algorithm": algorithm,
    }
    for i, value in enumerate(run.best_point):
        row[f"lambda_{i + 1}"] = float(value)
    row.update({
        "objective": run.best_value,
        "pi_distance": distance_to_box(run.best_point, box),
        "time_seconds": run.wall_time,
        "converged": run.converged,
    })
    return row


def cmd_optimize(args) -> int:
    config = _load_config(args)
    model_spec = _require_model(config)
    if config.lambda_policy != "optimize":
        raise ConfigError("lambda_policy: cmd optimize requires 'optimize'")
    frechet = model_spec.require_frechet()
    out = _resolve_output_dir(args, config)

    cells = [(xi, p, seed, algorithm)
             for xi in config.resolve_xi(model_spec.alpha1)
             for p in config.p_grid
             for seed in config.seeds
             for algorithm in config.algorithms]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        futures = [pool.submit(_optimize_cell, config, frechet, model_spec,
                               *cell) for cell in cells]
        rows = [future.result() for future in futures]

    n = model_spec.n
    fields = (["xi", "p", "seed", "algorithm"]
              + [f"lambda_{i + 1}" for i in range(n)]
              + ["objective", "pi_distance", "time_seconds", "converged"])
    write_csv(out / "optimize.csv", fields, _rows_formatted(rows))
    if config.plots:
        plotting.pi_distance_figure(rows, out / "optimize_pi.png")
    print(f"wrote {out / 'optimize.csv'} ({len(rows)} rows)")
    return 0


def cmd_compare(args) -> int:
    config = _load_config(args)
    model_spec = _require_model(config)
    if len(config.algorithms) < 2:
        raise ConfigError("algorithms: compare needs at least two")
    frechet = model_spec.require_frechet()
    out = _resolve_output_dir(args, config)

    xi = config.resolve_xi(model_spec.alpha1)[0]
    p = config.p_grid[0]
    model = model_spec.tail_model(xi)
    box = feasible_box(model)
    search = FeasibleBox(lower=np.full(model.n, 1.0 + 1e-6),
                         upper=box.lower + config.search_cap)
    problems = [pool_objective(frechet, config.m, seed, model, p)
                for seed in config.seeds]
    names = [f"sample_{seed}" for seed in config.seeds]
    report = compare_optimizers(
        problems, config.algorithms,
        OptimizerConfig(bounds=search, seed=config.seeds[0],
                        stall_limit=config.stall_limit,
                        max_iterations=config.max_iterations),
        problem_names=names)

    report.write_csv(out / "comparison.csv")
    report.write_json(out / "comparison.json")
    for metric, filename in (("time", "ecdf_time.csv"),
                             ("error", "ecdf_error.csv")):
        rows = []
        for algorithm in report.algorithms:
            x, f = report.ecdf_points(metric, algorithm)
            rows.extend({"algorithm": algorithm, "x": float(xv), "F": float(fv)}
                        for xv, fv in zip(x, f))
        write_csv(out / filename, ["algorithm", "x", "F"],
                  _rows_formatted(rows))
    if config.plots:
        plotting.ecdf_figure(report, "time", out / "ecdf_time.png")
        plotting.ecdf_figure(report, "error", out / "ecdf_error.png")
        plotting.box_figure(report, "time", out / "times_box.png")
        plotting.box_figure(report, "error", out / "errors_box.png")
    print(f"wrote {out / 'comparison.csv'}")
    return 0


def cmd_ingest(args) -> int:
    config = _load_config(args)
    out = _resolve_output_dir(args, config)
    options = config.ingest
    states = tuple(args.states.split(",")) if args.states else options.states

    rejects = []
    records = parse_claims(args.claims, schema=options.schema or None,
                           rejects=rejects)
    result = aggregate_monthly(records, states, options.window)
    persist_series(result.series, out / "aggregated_monthly.csv")
    write_csv(out / "rejects.csv", ["row_number", "reason"],
              [{"row_number": r.row_number, "reason": r.reason}
               for r in rejects])
    print(f"wrote {out / 'aggregated_monthly.csv'} "
          f"({result.accepted} claims accepted, {len(rejects)} rejected, "
          f"{result.out_of_window} outside window, "
          f"{result.out_of_state} outside state filter)")
    return 0


def cmd_empirical(args) -> int:
    config = _load_config(args)
    out = _resolve_output_dir(args, config)
    options = config.empirical
    states = tuple(args.states.split(",")) if args.states else options.states
    if len(states) < 2:
        raise ConfigError("empirical.states: need at least two states")

    series = read_series(args.data)
    data = series_matrix(series, states)
    m = data.shape[0]
    k_default = options.k or max(2, int(0.1 * m))
    sweep_max = options.k_sweep_max or max(k_default + 1, int(0.3 * m))

    cleaned = {}
    for j, state in enumerate(states):
        sample, excluded = drop_nonpositive(data[:, j])
        cleaned[state] = sample
        if excluded:
            print(f"{state}: excluded {excluded} nonpositive observations "
                  "from tail estimation")

    # Hill sweeps plus the pooled estimate of the first two states.
    hill_rows = []
    for state in states:
        sample = cleaned[state]
        for k in range(2, min(sweep_max, sample.size - 1) + 1):
            hill_rows.append({"state": state, "k": k,
                              "alpha_hat": hill_estimate(sample, k).alpha})
    pair = states[:2]
    pooled_label = "-".join(pair)
    for k in range(2, min(sweep_max,
                          min(cleaned[s].size for s in pair) - 1) + 1):
        pooled = pooled_tail_estimate(
            [hill_estimate(cleaned[s], k) for s in pair])
        hill_rows.append({"state": pooled_label, "k": k,
                          "alpha_hat": pooled.alpha_pool})
    write_csv(out / "hill.csv", ["state", "k", "alpha_hat"],
              _rows_formatted(hill_rows))

    alphas_at_k = {}
    for state in states:
        alphas_at_k[state] = hill_estimate(cleaned[state], k_default).alpha
    pooled_at_k = pooled_tail_estimate(
        [hill_estimate(cleaned[s], k_default) for s in pair]).alpha_pool

    # Scale estimates of every other state against the reference state.
    h_default = options.h or max(1, int(0.1 * m))
    theta_rows = []
    reference = data[:, 0]
    for j, state in enumerate(states[1:], start=1):
        for h in range(1, sweep_max + 1):
            theta_rows.append({
                "state": state, "h": h,
                "theta_hat": scale_estimate(data[:, j], reference, h)})
    write_csv(out / "theta.csv", ["state", "h", "theta_hat"],
              _rows_formatted(theta_rows))

    # Regular-variation and tail-equivalence tests across k.
    critical = load_critical_values()[options.rv_significance]["critical_value"]
    test_rows = []
    for state in states:
        sample = cleaned[state]
        for k in range(5, min(sweep_max, sample.size - 1) + 1, 5):
            test_rows.append({
                "test": f"rv:{state}", "k": k,
                "statistic": rv_test_statistic(sample, k),
                "critical_or_p": critical,
            })
    for a in range(len(states)):
        for b in range(a + 1, len(states)):
            sa, sb = states[a], states[b]
            upper = min(sweep_max, cleaned[sa].size - 1,
                        cleaned[sb].size - 1)
            for k in range(5, upper + 1, 5):
                result = tail_equivalence_test(
                    (cleaned[sa], cleaned[sb]), (k, k))
                test_rows.append({
                    "test": f"tail_equivalence:{sa}-{sb}", "k": k,
                    "statistic": result.statistic,
                    "critical_or_p": result.p_value,
                })
    write_csv(out / "tests.csv", ["test", "k", "statistic", "critical_or_p"],
              _rows_formatted(test_rows))

    # Empirical DR curves with lambda at the feasible lower bound.
    use_pooled = len(states) == 2 and args.pooled_alpha
    if use_pooled:
        alphas = np.full(len(states), pooled_at_k)
    else:
        alphas = np.array([alphas_at_k[s] for s in states])
    a1 = alphas[0]
    dr_rows = []
    for xi in config.resolve_xi(a1):
        lambdas = xi ** (-a1 / alphas)
        if config.lambda_policy == "explicit":
            lambdas = np.asarray(config.lambdas, dtype=float)
        for p in config.p_grid:
            if not 0.8 < p < 1:
                continue
            report = dr_empirical(data, alphas, xi, lambdas, p)
            for j, state in enumerate(states):
                dr_rows.append({
                    "xi": xi, "p": p, "state": state,
                    "dr": float(report.dr[j]),
                    "retained": float(report.retained_ratio[j]),
                    "share": float(report.share_ratio[j]),
                })
    write_csv(out / "empirical_dr.csv",
              ["xi", "p", "state", "dr", "retained", "share"],
              _rows_formatted(dr_rows))

    if config.plots:
        plotting.hill_figure(hill_rows, out / "hill.png")
        plotting.theta_figure(theta_rows, out / "theta.png")
        plotting.tests_figure(test_rows, out / "tests.png",
                              options.rv_significance)
        plotting.dr_curves_figure(dr_rows, out / "empirical_dr.png",
                                  label_key="state")
    print(f"wrote hill/theta/tests/empirical_dr tables to {out}")
    print("alpha at k={}: {}; pooled({}): {:.3f}".format(
        k_default,
        ", ".join(f"{s}={alphas_at_k[s]:.3f}" for s in states),
        pooled_label, pooled_at_k))
    print(f"theta at h={h_default}: " + ", ".join(
        f"{s}={scale_estimate(data[:, j], reference, h_default):.4f}"
        for j, s in enumerate(states[1:], start=1)))
    return 0


def cmd_rv_critical(args) -> int:
    config = _load_config(args)
    out = _resolve_output_dir(args, config)
    entries = tabulate_critical_values(
        args.significance, grid=args.grid, replications=args.replications,
        seed=args.seed if args.seed is not None else 20250901)
    path = Path(args.table) if args.table else out / "rv_critical_values.txt"
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_critical_values(entries))
    for entry in entries:
        print(f"significance={entry['significance']:g} "
              f"critical_value={entry['critical_value']:.6f}")
    print(f"wrote {path}; copy over src/catpool/data/rv_critical_values.txt "
          "to refresh the packaged table")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catpool",
        description="Pareto-optimal catastrophe risk pooling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, compute=True):
        p.add_argument("--config", type=Path, default=None,
                       help="YAML config file")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (overrides env and config)")
        p.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")
        if compute:
            p.add_argument("--seed", type=int, default=None,
                           help="replace the config seed list with one seed")
            p.add_argument("--threads", type=int, default=None,
                           help="worker threads for independent cells")
            p.add_argument("--m", type=int, default=None,
                           help="sample size override")

    p_asym = sub.add_parser("asymptotic",
                            help="feasible boxes and minimal limit DR per xi")
    add_common(p_asym)
    p_asym.set_defaults(func=cmd_asymptotic)

    p_sim = sub.add_parser("simulate-dr",
                           help="simulated DR curves over the (xi, p) grid")
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate_dr)

    p_opt = sub.add_parser("optimize",
                           help="metaheuristic search for the practical optimum")
    add_common(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_cmp = sub.add_parser("compare",
                           help="fairness-controlled optimizer comparison")
    add_common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_ing = sub.add_parser("ingest",
                           help="aggregate a claims export to monthly series")
    add_common(p_ing, compute=False)
    p_ing.add_argument("--claims", type=Path, required=True,
                       help="delimited claims export with a header row")
    p_ing.add_argument("--states", type=str, default=None,
                       help="comma-separated state filter (overrides config)")
    p_ing.set_defaults(func=cmd_ingest)

    p_emp = sub.add_parser("empirical",
                           help="estimation and testing pipeline on a series file")
    add_common(p_emp)
    p_emp.add_argument("--data", type=Path, required=True,
                       help="canonical aggregated series CSV")
    p_emp.add_argument("--states", type=str, default=None,
                       help="comma-separated pool states, heaviest tail first")
    p_emp.add_argument("--pooled-alpha", action="store_true",
                       help="use the pooled tail estimate for a 2-state pool")
    p_emp.set_defaults(func=cmd_empirical)

    p_rvc = sub.add_parser("rv-critical",
                           help="regenerate the critical-value table")
    add_common(p_rvc, compute=False)
    p_rvc.add_argument("--significance", type=float, nargs="+",
                       default=[0.01, 0.05, 0.10])
    p_rvc.add_argument("--grid", type=int, default=10_000)
    p_rvc.add_argument("--replications", type=int, default=100_000)
    p_rvc.add_argument("--seed", type=int, default=None)
    p_rvc.add_argument("--table", type=Path, default=None,
                       help="output file (default <out>/rv_critical_values.txt)")
    p_rvc.set_defaults(func=cmd_rv_critical)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (DegeneratePoolError, EstimationError) as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
