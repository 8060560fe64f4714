"""Command-line entry point: dataset ingestion, experiment runs over
parameter sweeps and seeds, and cross-seed report aggregation.

Subcommands:

    ingest   raw check-in TSV -> dataset snapshot (CSV + JSON sidecar)
    run      JSON config -> per-region CSVs, summary.csv, manifest.json
    report   run directory -> cross-seed mean/min/max table (CSV or JSON)

Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
All outputs are byte-deterministic for a fixed config and seed list,
including under parallel execution.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import __version__
from .belief import ProfitModel
from .evaluation import (
    DEFAULT_STRATEGIES,
    MetricsReport,
    RegionOutcome,
    default_grid_box,
    evaluate,
)
from .geo import Region, make_grid
from .ingest import (
    LA_BOX,
    LatLongBox,
    filter_and_sample,
    load_snapshot,
    open_checkin_file,
    parse_checkins,
    save_snapshot,
)
from .marketplace import PricingParams
from .strategies import StrategyConfig, fmc_strategy_id

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "run_experiment", "main"]

SUMMARY_COLUMNS = [
    "strategy",
    "sweep_param",
    "sweep_value",
    "seed",
    "arp",
    "mrp",
    "recall",
    "regions",
    "positives",
    "total_spent",
]

REGION_COLUMNS = [
    "region_id",
    "x_min",
    "y_min",
    "side",
    "true_n",
    "strategy",
    "decision",
    "spent",
    "purchases",
    "realized_profit",
]

SWEEPABLE_PARAMS = (
    "beta",
    "min_users",
    "privacy_scale",
    "region_side",
    "start_price",
    "increment",
    "sigma_scale",
    "terminal_k",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; `field` names the offender."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"config field '{field}': {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description; defaults match the benchmark defaults.

    The fixed cost is never configured directly: it is always derived as
    beta * min_users.  candidate_margin defaults to twice the region side
    when left null.  strategies defaults to all built-ins plus one FMC
    variant per configured fraction.
    """

    dataset_path: str
    beta: float = 100.0
    min_users: float = 400.0
    privacy_scale: float = 3.0
    region_side: float = 5_000.0
    start_price: float = 0.001
    increment: float = 2.0
    sigma_scale: float = 20.0
    terminal_k: float = 2.0
    candidate_margin: float | None = None
    fmc_fractions: tuple[float, ...] = (0.001, 0.01, 0.02)
    strategies: tuple[str, ...] | None = None
    seeds: tuple[int, ...] = (0,)
    sweep: dict | None = None

    def validate(self) -> None:
        for name in SWEEPABLE_PARAMS:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not value > 0:
                raise ConfigError(name, f"must be a positive number, got {value!r}")
        if not self.increment > 1:
            raise ConfigError("increment", "must exceed 1")
        if self.candidate_margin is not None and self.candidate_margin < 0:
            raise ConfigError("candidate_margin", "must be nonnegative")
        if not self.fmc_fractions or any(not f > 0 for f in self.fmc_fractions):
            raise ConfigError("fmc_fractions", "must be positive fractions")
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        if self.sweep is not None:
            if set(self.sweep) != {"param", "values"}:
                raise ConfigError("sweep", "expected keys 'param' and 'values'")
            if self.sweep["param"] not in SWEEPABLE_PARAMS:
                raise ConfigError("sweep", f"unsupported parameter {self.sweep['param']!r}")
            if not self.sweep["values"]:
                raise ConfigError("sweep", "value list is empty")

    def resolved(self, **overrides) -> "ExperimentConfig":
        """Apply overrides, then fill derived defaults (margin, strategies)."""
        cfg = dataclasses.replace(self, **overrides) if overrides else self
        margin = cfg.candidate_margin
        if margin is None:
            margin = 2.0 * cfg.region_side
        strategies = cfg.strategies
        if strategies is None:
            strategies = tuple(DEFAULT_STRATEGIES) + tuple(
                fmc_strategy_id(f) for f in cfg.fmc_fractions
            )
        return dataclasses.replace(cfg, candidate_margin=margin, strategies=strategies)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["fmc_fractions"] = list(self.fmc_fractions)
        out["strategies"] = None if self.strategies is None else list(self.strategies)
        out["seeds"] = list(self.seeds)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        if "dataset_path" not in raw:
            raise ConfigError("dataset_path", "is required")
        data = dict(raw)
        for name in ("fmc_fractions", "strategies", "seeds"):
            if data.get(name) is not None:
                data[name] = tuple(data[name])
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def profit_model(self) -> ProfitModel:
        return ProfitModel.from_threshold(self.beta, self.min_users)

    def pricing(self) -> PricingParams:
        return PricingParams(self.sigma_scale)

    def strategy_config(self) -> StrategyConfig:
        if self.candidate_margin is None:
            raise ValueError("resolve the config before building a StrategyConfig")
        return StrategyConfig(
            start_price=self.start_price,
            increment=self.increment,
            terminal_k=self.terminal_k,
            candidate_margin=self.candidate_margin,
        )


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    return ExperimentConfig.from_dict(raw)


def _fmt_currency(value: float) -> str:
    return f"{value:.6f}"


def _fmt_value(value) -> str:
    return f"{value:g}"


def write_region_csv(
    path: Path, grid: Sequence[Region], outcomes: Sequence[RegionOutcome]
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REGION_COLUMNS)
        for o in sorted(outcomes, key=lambda o: (o.region_id, o.strategy_id)):
            region = grid[o.region_id]
            writer.writerow(
                [
                    o.region_id,
                    _fmt_value(region.x_min),
                    _fmt_value(region.y_min),
                    _fmt_value(region.side),
                    o.true_n,
                    o.strategy_id,
                    o.decision.value,
                    _fmt_currency(o.spent),
                    o.purchases,
                    _fmt_currency(o.realized_profit),
                ]
            )


def run_experiment(
    config: ExperimentConfig, out_dir: str | Path, *, workers: int = 1
) -> Path:
    """Execute the configured runs and write all result files into out_dir.

    One parameter sweeps at a time (all others at their defaults); without a
    sweep a single pass labelled 'default' is run.  Returns the directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.validate()

    dataset_path = Path(config.dataset_path)
    if not dataset_path.exists():
        raise ConfigError("dataset_path", f"no such file: {dataset_path}")
    dataset = load_snapshot(dataset_path)

    if config.sweep is None:
        sweep_param = "none"
        sweep_values: list = ["default"]
    else:
        sweep_param = config.sweep["param"]
        sweep_values = list(config.sweep["values"])

    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", newline="") as fh:
        csv.writer(fh).writerow(SUMMARY_COLUMNS)

    for value in sweep_values:
        overrides = {} if value == "default" else {sweep_param: value}
        resolved = config.resolved(**overrides)
        grid = make_grid(default_grid_box(dataset), resolved.region_side)
        if not grid:
            raise ConfigError("region_side", "no grid cells fit the dataset extent")
        model = resolved.profit_model()
        pricing = resolved.pricing()
        cfg = resolved.strategy_config()
        label = value if value == "default" else f"{value:g}"
        for seed in resolved.seeds:
            outcomes, reports = evaluate(
                dataset,
                grid,
                resolved.strategies,
                model,
                pricing,
                cfg,
                seed,
                valuation_scale=resolved.privacy_scale,
                workers=workers,
            )
            write_region_csv(out_dir / f"regions_{label}_{seed}.csv", grid, outcomes)
            _append_summary(summary_path, reports, outcomes, sweep_param, label, seed)

    manifest = {
        "config": config.resolved().to_dict(),
        "seeds": list(config.seeds),
        "dataset_checksum": hashlib.sha256(dataset_path.read_bytes()).hexdigest(),
        "version": __version__,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def _append_summary(
    path: Path,
    reports: Sequence[MetricsReport],
    outcomes: Sequence[RegionOutcome],
    sweep_param: str,
    sweep_value: str,
    seed: int,
) -> None:
    spent_by_strategy: dict[str, float] = {}
    for o in outcomes:
        spent_by_strategy[o.strategy_id] = spent_by_strategy.get(o.strategy_id, 0.0) + o.spent
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        for report in sorted(reports, key=lambda r: r.strategy_id):
            writer.writerow(
                [
                    report.strategy_id,
                    sweep_param,
                    sweep_value,
                    seed,
                    _fmt_currency(report.arp),
                    _fmt_currency(report.mrp),
                    f"{report.recall:.6f}",
                    report.region_count,
                    report.positives,
                    _fmt_currency(spent_by_strategy.get(report.strategy_id, 0.0)),
                ]
            )


def aggregate_report(run_dir: str | Path) -> list[dict]:
    """Cross-seed mean/min/max of ARP, MRP and recall per strategy and sweep
    value, read back from a run directory's summary.csv."""
    summary = Path(run_dir) / "summary.csv"
    if not summary.exists():
        raise FileNotFoundError(f"no summary.csv in {run_dir}")
    groups: dict[tuple[str, str, str], list[dict]] = {}
    with open(summary, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["strategy"], row["sweep_param"], row["sweep_value"])
            groups.setdefault(key, []).append(row)
    out = []
    for (strategy, param, value), rows in sorted(groups.items()):
        entry: dict = {
            "strategy": strategy,
            "sweep_param": param,
            "sweep_value": value,
            "seeds": len(rows),
        }
        for metric in ("arp", "mrp", "recall"):
            series = [float(r[metric]) for r in rows]
            entry[f"{metric}_mean"] = statistics.fmean(series)
            entry[f"{metric}_min"] = min(series)
            entry[f"{metric}_max"] = max(series)
        out.append(entry)
    return out


def _cmd_ingest(args: argparse.Namespace) -> int:
    try:
        stream = open_checkin_file(args.input)
    except OSError as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return 2
    with stream:
        result = parse_checkins(stream)
    box = LatLongBox(*args.bbox) if args.bbox else LA_BOX
    dataset = filter_and_sample(result.records, box, args.seed)
    if not dataset.users:
        print("error: zero users after filtering", file=sys.stderr)
        return 2
    dataset.provenance["source"] = str(args.input)
    dataset.provenance["malformed"] = result.malformed
    save_snapshot(dataset, args.output)
    print(f"{len(dataset.users)} users -> {args.output}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
        run_experiment(config, args.out, workers=args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"results written to {args.out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        rows = aggregate_report(args.in_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.format == "json":
        print(json.dumps(rows, indent=2, sort_keys=True))
        return 0
    writer = csv.writer(sys.stdout)
    if rows:
        header = list(rows[0])
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[k] for k in header])
    return 0


def _parse_bbox(text: str) -> tuple[float, float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected south,west,north,east")
    return tuple(parts)  # type: ignore[return-value]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geomarket", description="Location-data marketplace simulation harness."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="build a dataset snapshot from raw check-ins")
    p_ingest.add_argument("--input", required=True, help="raw check-in TSV (optionally .gz)")
    p_ingest.add_argument(
        "--bbox",
        type=_parse_bbox,
        default=None,
        help="filter box as south,west,north,east degrees (default: Los Angeles)",
    )
    p_ingest.add_argument("--seed", type=int, default=0, help="per-user sampling seed")
    p_ingest.add_argument("--output", required=True, help="snapshot CSV path")
    p_ingest.set_defaults(func=_cmd_ingest)

    p_run = sub.add_parser("run", help="run the configured experiment")
    p_run.add_argument("--config", required=True, help="experiment config JSON")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--workers", type=int, default=1, help="parallel region runs")
    p_run.set_defaults(func=_cmd_run)

    p_report = sub.add_parser("report", help="aggregate a run directory across seeds")
    p_report.add_argument("--in", dest="in_dir", required=True, help="run output directory")
    p_report.add_argument("--format", choices=("csv", "json"), default="csv")
    p_report.set_defaults(func=_cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure contract: exit 3
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())
