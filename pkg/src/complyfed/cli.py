"""Command-line runner: run experiment configs, compare runs, score profiles.

    complyfed run [CONFIG] --out DIR [--preset NAME] [--seed N]
    complyfed compare DIR_A DIR_B [...] [--csv PATH]
    complyfed score PROFILE [--catalog PATH] [--json]

`run` writes, per (strategy, seed): a per-round CSV, a summary JSON, and a
manifest.json that reproduces the whole run byte-for-byte when passed back
to `run`. Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .aggregation import AggregationStrategy
from .compliance import (
    ComplianceError,
    NoisePolicy,
    catalog_from_dict,
    default_catalog,
    eligible,
    load_profiles,
    noise_multiplier,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    build_data,
    config_to_dict,
    resolve_config,
)
from .federation import ExperimentResult, run_experiment


class MissingRunError(RuntimeError):
    pass


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_columns(dp_mode: str) -> list[str]:
    if dp_mode == "none":
        return ["round", "client_id", "local_loss",
                "accuracy", "precision", "recall", "f1"]
    return ["round", "client_id", "S_c", "eta", "local_loss",
            "accuracy", "precision", "recall", "f1"]


def write_round_csv(path: Path, result: ExperimentResult, dp_mode: str) -> None:
    columns = _csv_columns(dp_mode)
    lines = [",".join(columns)]
    for record in result.records:
        m = record.global_metrics
        for pc in record.per_client:
            row = {
                "round": record.round,
                "client_id": pc.client_id,
                "S_c": pc.score,
                "eta": pc.noise_multiplier,
                "local_loss": pc.local_loss,
                "accuracy": m.accuracy,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
            }
            lines.append(",".join(_fmt(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def summarize(result: ExperimentResult, exp: ExperimentConfig,
              strategy: AggregationStrategy, seed: int) -> dict:
    records = result.records
    final = records[-1].global_metrics if records else None
    best_round, best_acc = None, None
    for r in records:
        if best_acc is None or r.global_metrics.accuracy > best_acc:
            best_acc, best_round = r.global_metrics.accuracy, r.round
    return {
        "experiment": exp.name,
        "strategy": strategy.name,
        "seed": seed,
        "dp_mode": exp.dp_mode,
        "rounds": exp.rounds,
        "clients": exp.total_clients(),
        "final": None if final is None else {
            "accuracy": final.accuracy,
            "precision": final.precision,
            "recall": final.recall,
            "f1": final.f1,
        },
        "best": {"round": best_round, "accuracy": best_acc},
        "runtime_sec": sum(r.wall_time for r in records),
    }


def attach_profiles(exp: ExperimentConfig, profile_file: str | None,
                    catalog_file: str | None = None) -> ExperimentConfig:
    """Resolve a profile file into explicit (client_id, score) pairs."""
    if profile_file is None or exp.profile_clients is not None:
        return exp
    catalog = default_catalog()
    if catalog_file:
        catalog = catalog_from_dict(
            json.loads(Path(catalog_file).read_text(encoding="utf-8"))
        )
    profiles = load_profiles(profile_file, catalog)
    if not profiles:
        raise ConfigError(f"profile_file {profile_file!r} lists no clients")
    pairs = tuple((p.client_id, p.score) for p in profiles)
    return dataclasses.replace(
        exp,
        profile_clients=pairs,
        compliant_clients=len(pairs),
        noncompliant_clients=0,
    )


def run_config(doc: dict, out_dir: str | Path) -> list[Path]:
    """Run every (strategy, seed) combination of a config; returns CSV paths."""
    exp, profile_file = resolve_config(doc)
    exp = attach_profiles(exp, profile_file, doc.get("catalog_file"))
    if exp.total_clients() > exp.dataset.partition_clients:
        raise ConfigError(
            f"{exp.total_clients()} clients exceed dataset.partition_clients="
            f"{exp.dataset.partition_clients}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = config_to_dict(exp)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written = []
    for seed in exp.seeds:
        data = build_data(exp, seed)
        for strategy in exp.strategies:
            cfg = exp.federation_config(strategy, seed)
            result = run_experiment(cfg, exp, data)
            stem = f"{exp.name}_{strategy.name}_seed{seed}"
            csv_path = out_dir / f"{stem}.csv"
            write_round_csv(csv_path, result, exp.dp_mode)
            (out_dir / f"{stem}_summary.json").write_text(
                json.dumps(summarize(result, exp, strategy, seed),
                           indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
            written.append(csv_path)
    return written


def _load_run_dir(run_dir: Path) -> dict[str, dict[int, float]]:
    """strategy -> {seed: final accuracy} from a run directory's summaries."""
    summaries = sorted(run_dir.glob("*_summary.json"))
    if not summaries:
        raise MissingRunError(f"{run_dir} contains no run summaries")
    table: dict[str, dict[int, float]] = {}
    for path in summaries:
        doc = json.loads(path.read_text(encoding="utf-8"))
        if doc.get("final") is None:
            continue
        strategy, seed = doc["strategy"], int(doc["seed"])
        per_seed = table.setdefault(strategy, {})
        if seed in per_seed:
            raise MissingRunError(
                f"{run_dir} has multiple summaries for strategy {strategy!r} seed {seed}"
            )
        per_seed[seed] = float(doc["final"]["accuracy"])
    if not table:
        raise MissingRunError(f"{run_dir} has no completed runs")
    return table


def compare_dirs(run_dirs: list[str | Path]) -> list[dict]:
    """Per-strategy accuracy deltas of the first run against each other run."""
    import statistics

    dirs = [Path(d) for d in run_dirs]
    tables = [_load_run_dir(d) for d in dirs]
    base_dir, base = dirs[0], tables[0]
    rows = []
    for other_dir, other in zip(dirs[1:], tables[1:]):
        shared = sorted(set(base) & set(other))
        if not shared:
            raise MissingRunError(
                f"{base_dir} and {other_dir} share no strategies"
            )
        for strategy in shared:
            seeds = sorted(set(base[strategy]) & set(other[strategy]))
            if seeds:
                deltas = [base[strategy][s] - other[strategy][s] for s in seeds]
                delta_mean = statistics.mean(deltas)
                delta_std = statistics.pstdev(deltas) if len(deltas) > 1 else 0.0
                mean_a = statistics.mean(base[strategy][s] for s in seeds)
                mean_b = statistics.mean(other[strategy][s] for s in seeds)
            else:
                mean_a = statistics.mean(base[strategy].values())
                mean_b = statistics.mean(other[strategy].values())
                delta_mean, delta_std = mean_a - mean_b, float("nan")
            rows.append({
                "strategy": strategy,
                "baseline": base_dir.name,
                "other": other_dir.name,
                "baseline_mean": mean_a,
                "other_mean": mean_b,
                "delta_mean": delta_mean,
                "delta_std": delta_std,
                "n_seeds": len(seeds),
            })
    return rows


def _comparison_text(rows: list[dict]) -> str:
    header = f"{'strategy':<12} {'baseline':>10} {'other':>10} {'delta':>10} {'std':>9} {'n':>3}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r['strategy']:<12} {r['baseline_mean']:>10.4f} {r['other_mean']:>10.4f} "
            f"{r['delta_mean']:>+10.4f} {r['delta_std']:>9.4f} {r['n_seeds']:>3}"
        )
    return "\n".join(lines)


def _comparison_csv(rows: list[dict]) -> str:
    columns = ["strategy", "baseline", "other", "baseline_mean", "other_mean",
               "delta_mean", "delta_std", "n_seeds"]
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) for c in columns))
    return "\n".join(lines) + "\n"


def score_profiles(profile_path: str | Path, catalog_path: str | Path | None = None,
                   policy: NoisePolicy = NoisePolicy()) -> list[dict]:
    catalog = default_catalog()
    if catalog_path:
        catalog = catalog_from_dict(
            json.loads(Path(catalog_path).read_text(encoding="utf-8"))
        )
    profiles = load_profiles(profile_path, catalog)
    return [
        {
            "client_id": p.client_id,
            "score": p.score,
            "noise_multiplier": noise_multiplier(p.score, policy),
            "eligible": eligible(p, policy),
        }
        for p in profiles
    ]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="complyfed",
        description="Compliance-aware federated learning simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config or preset")
    run_p.add_argument("config", nargs="?", help="path to a config JSON file")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--preset", help="preset name (exp1..exp6, dataquality)")
    run_p.add_argument("--seed", type=int, help="override seeds with a single seed")

    cmp_p = sub.add_parser("compare", help="compare completed run directories")
    cmp_p.add_argument("dirs", nargs="+", help="two or more run directories")
    cmp_p.add_argument("--csv", help="also write the comparison as CSV to this path")

    score_p = sub.add_parser("score", help="print S_c and noise multiplier per client")
    score_p.add_argument("profile", help="profile JSON file")
    score_p.add_argument("--catalog", help="catalog JSON file (default: bundled catalog)")
    score_p.add_argument("--threshold", type=float, default=0.5)
    score_p.add_argument("--min-noise", type=float, default=1e-10)
    score_p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            if args.config is None and args.preset is None:
                print("error: provide a config file or --preset", file=sys.stderr)
                return 2
            doc: dict = {}
            if args.config is not None:
                try:
                    doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
                except (OSError, json.JSONDecodeError) as exc:
                    print(f"error: cannot read config: {exc}", file=sys.stderr)
                    return 2
            if args.preset is not None:
                doc["preset"] = args.preset
            if args.seed is not None:
                doc["seeds"] = [args.seed]
            paths = run_config(doc, args.out)
            print(f"wrote {len(paths)} runs to {args.out}")
            return 0

        if args.command == "compare":
            if len(args.dirs) < 2:
                print("error: compare needs at least two run directories", file=sys.stderr)
                return 2
            rows = compare_dirs(args.dirs)
            print(_comparison_text(rows))
            if args.csv:
                Path(args.csv).write_text(_comparison_csv(rows), encoding="utf-8")
            return 0

        if args.command == "score":
            policy = NoisePolicy(
                min_noise_multiplier=args.min_noise,
                participation_threshold=args.threshold,
            )
            rows = score_profiles(args.profile, args.catalog, policy)
            if args.json:
                print(json.dumps(rows, indent=2, sort_keys=True))
            else:
                print(f"{'client_id':<16} {'S_c':>12} {'eta':>14} {'eligible':>9}")
                for r in rows:
                    print(
                        f"{r['client_id']:<16} {r['score']:>12.6f} "
                        f"{r['noise_multiplier']:>14.6e} {str(r['eligible']):>9}"
                    )
            return 0
    except (ConfigError, ComplianceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any runtime failure exits 3
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
