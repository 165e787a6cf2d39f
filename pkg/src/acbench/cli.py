"""Command-line entry point: curate, pairs, split, train, twin, eval, report.

Each stage reads the previous stage's files from the output directory and
writes plain CSV/JSON artifacts stamped with the run-config digest.
Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from acbench import __version__
from acbench.chem.smiles import SmilesError
from acbench.config import ConfigError, RunConfig, load_config
from acbench.curation import (
    SchemaError, curate, load_activity_csv, load_curated_csv, write_curated_csv, write_log_jsonl,
)
from acbench.evalbench import (
    TWIN_SUFFIX, BenchmarkConfig, build_report, evaluate_trial, make_tasks, predict_trials,
    write_plots, write_results_json, write_results_long,
)
from acbench.mmp import build_mmps, read_mmp_csv, summarize, write_mmp_csv
from acbench.splitting import make_plans, read_manifest, write_manifest

log = logging.getLogger("acbench")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class DataError(Exception):
    """Missing or malformed input artifacts."""


class UsageParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise DataError(f"missing {path}; run `acbench {stage}` first")
    return path


def _stamp(cfg: RunConfig) -> str:
    return f"config_digest={cfg.digest()}"


def _curated(out: Path):
    return load_curated_csv(_require(out / "curated.csv", "curate"))


def _mmps(out: Path):
    return read_mmp_csv(_require(out / "mmps.csv", "pairs"))


def _plans(out: Path, mmps):
    split_dir = _require(out / "splits", "split")
    files = sorted(split_dir.glob("trial_i*_j*.json"))
    if not files:
        raise DataError(f"no split manifests in {split_dir}; run `acbench split` first")
    cores = {p.mmp_id: p.core_key for p in mmps}
    return [read_manifest(f, cores) for f in files]


# -- stages ----------------------------------------------------------------------

def cmd_curate(cfg: RunConfig, args) -> int:
    src = args.input or cfg.dataset
    if src is None:
        raise ConfigError("no input CSV given (positional argument or `dataset` in the config)")
    if not Path(src).is_file():
        raise DataError(f"input file {src} does not exist")
    raw, errors = load_activity_csv(src)
    if not raw and not errors:
        raise DataError(f"{src}: no data rows")
    result = curate(raw, errors)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_curated_csv(out / "curated.csv", result.curated, _stamp(cfg))
    digest = cfg.digest()
    write_log_jsonl(out / "curation_log.jsonl", ({**e, "config_digest": digest} for e in result.load_errors + result.log))
    print(json.dumps(result.counts(), sort_keys=True))
    return EXIT_OK


def cmd_pairs(cfg: RunConfig, args) -> int:
    out = Path(cfg.out_dir)
    compounds = _curated(out)
    mmps = build_mmps(compounds, jobs=cfg.jobs)
    write_mmp_csv(out / "mmps.csv", mmps, _stamp(cfg))
    summary = {"compounds": len(compounds), **summarize(mmps)}
    _write_json(out / "pair_summary.json", {**summary, "config_digest": cfg.digest()})
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_split(cfg: RunConfig, args) -> int:
    out = Path(cfg.out_dir)
    compounds = _curated(out)
    mmps = _mmps(out)
    plans = make_plans([c.id for c in compounds], mmps, cfg.k, cfg.m, cfg.master_seed)
    split_dir = out / "splits"
    split_dir.mkdir(exist_ok=True)
    for old in split_dir.glob("trial_i*_j*.json"):
        old.unlink()
    rows = []
    for plan in plans:
        write_manifest(split_dir / f"trial_i{plan.i}_j{plan.j}.json", plan, {"config_digest": cfg.digest()})
        n = len(plan.m_train) + len(plan.m_inter) + len(plan.m_test)
        rows.append({"i": plan.i, "j": plan.j, "d_train": len(plan.d_train), "d_test": len(plan.d_test),
                     "m_train": len(plan.m_train), "m_inter": len(plan.m_inter), "m_test": len(plan.m_test),
                     "m_cores": len(plan.m_cores),
                     "fractions": [len(s) / n if n else 0.0 for s in (plan.m_train, plan.m_inter, plan.m_test)]})
    _write_json(split_dir / "summary.json", {"config_digest": cfg.digest(), "trials": rows})
    print(json.dumps({"trials": len(plans)}))
    return EXIT_OK


def _train(cfg: RunConfig, models: list[str]) -> int:
    out = Path(cfg.out_dir)
    compounds = _curated(out)
    mmps = _mmps(out)
    plans = _plans(out, mmps)
    bench = BenchmarkConfig(tuple(models), cfg.k, cfg.m, cfg.master_seed, cfg.d_crit, cfg.budget,
                            cfg.grid_dict(), cfg.twin_schedule, cfg.jobs)
    tasks = make_tasks(compounds, mmps, plans, bench)
    outputs = predict_trials(tasks, cfg.jobs)
    stamp = _stamp(cfg)
    for task, (preds, info) in zip(tasks, outputs):
        d = out / "predictions" / task.model
        d.mkdir(parents=True, exist_ok=True)
        tag = f"i{task.plan.i}_j{task.plan.j}"
        with open(d / f"trial_{tag}.csv", "w", newline="") as fh:
            fh.write(f"# {stamp}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("id", "a", "prediction"))
            for cid in sorted(preds):
                w.writerow((cid, repr(task.labels[cid]), repr(preds[cid])))
        _write_json(d / f"params_{tag}.json", {"config_digest": cfg.digest(), "params": info["params"]})
        with open(d / f"tuning_{tag}.csv", "w", newline="") as fh:
            fh.write(f"# {stamp}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("index", "val_mae", "error", "params"))
            for t in info["tuning"]:
                w.writerow((t["index"], repr(t["val_mae"]), t["error"], json.dumps(t["params"], sort_keys=True)))
    print(json.dumps({"models": models, "trials": len(plans)}))
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    return _train(cfg, list(cfg.models))


def cmd_twin(cfg: RunConfig, args) -> int:
    models = [m + TWIN_SUFFIX for m in cfg.twin.get("models", [])]
    if not models:
        raise ConfigError("no twin models configured (twin.models)")
    return _train(cfg, models)


def _read_predictions(path: Path) -> dict[str, float]:
    with open(path, newline="") as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        return {r["id"]: float(r["prediction"]) for r in rows}


def cmd_eval(cfg: RunConfig, args) -> int:
    out = Path(cfg.out_dir)
    compounds = _curated(out)
    mmps = _mmps(out)
    plans = _plans(out, mmps)
    pred_root = _require(out / "predictions", "train")
    labels = {c.id: c.a for c in compounds}
    records = []
    model_dirs = sorted(p for p in pred_root.iterdir() if p.is_dir())
    if not model_dirs:
        raise DataError(f"no predictions under {pred_root}; run `acbench train` first")
    for d in model_dirs:
        for plan in plans:
            tag = f"i{plan.i}_j{plan.j}"
            preds = _read_predictions(_require(d / f"trial_{tag}.csv", "train"))
            params_file = d / f"params_{tag}.json"
            params = json.loads(params_file.read_text())["params"] if params_file.exists() else {}
            records.append(evaluate_trial(plan, d.name, labels, preds, mmps, cfg.d_crit, params))
    report = build_report(records, cfg.result_fields(), cfg.digest())
    write_results_json(out / "results.json", report)
    write_results_long(out / "results_long.csv", report)
    print(json.dumps({"models": [d.name for d in model_dirs], "records": len(records)}))
    return EXIT_OK


def cmd_report(cfg: RunConfig, args) -> int:
    out = Path(cfg.out_dir)
    report = json.loads(_require(out / "results.json", "eval").read_text())
    write_results_long(out / "results_long.csv", report)
    written = []
    if cfg.plots and not args.no_plots:
        written = [str(p) for p in write_plots(out / "plots", report)]
    for name, entry in sorted(report["aggregate"].items()):
        sens = {k: entry["sets"][k]["ac_sensitivity"]["mean"] for k in ("inter", "test", "cores")}
        print(f"{name}: qsar_mae={entry['qsar_mae']['mean']:.3f} ac_sensitivity={sens}")
    if written:
        print(f"wrote {len(written)} plots to {out / 'plots'}")
    return EXIT_OK


COMMANDS = {"curate": cmd_curate, "pairs": cmd_pairs, "split": cmd_split, "train": cmd_train,
            "twin": cmd_twin, "eval": cmd_eval, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(prog="acbench", description="Activity-cliff benchmark for QSAR regressors.")
    parser.add_argument("--version", action="version", version=f"acbench {__version__}")
    common = UsageParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", dest="out_dir", help="output directory (default from config)")
    common.add_argument("--jobs", type=int, help="parallel worker processes (1 = bitwise reproducible)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageParser)

    p = sub.add_parser("curate", parents=[common], help="standardize, desalt and deduplicate an activity CSV")
    p.add_argument("input", nargs="?", help="CSV with id,smiles,activity_value,activity_unit")
    sub.add_parser("pairs", parents=[common], help="build matched molecular pairs and AC labels")
    p = sub.add_parser("split", parents=[common], help="repeated k-fold molecule splits and MMP sets")
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", dest="master_seed", type=int)
    for name, text in (("train", "tune and fit the QSAR models on every trial"),
                       ("twin", "train the network models with the twin pair loss")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--models", nargs="+", help="model names or 'all'")
        p.add_argument("--budget", type=int, help="tuning budget (sampled configs)")
        p.add_argument("--grid", help="YAML grid overriding the default grid")
    p = sub.add_parser("eval", parents=[common], help="AC/PD classification metrics -> results.json")
    p.add_argument("--d-crit", dest="d_crit", type=float, help="AC threshold on predicted differences")
    p = sub.add_parser("report", parents=[common], help="long CSV and SVG plots from results.json")
    p.add_argument("--no-plots", action="store_true")
    return parser


OVERRIDE_KEYS = ("out_dir", "jobs", "k", "m", "master_seed", "budget", "grid", "d_crit")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k, None) for k in OVERRIDE_KEYS}
    models = getattr(args, "models", None)
    if models:
        overrides["models"] = "all" if models == ["all"] else models
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"acbench: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SchemaError, SmilesError, FileNotFoundError) as exc:
        print(f"acbench: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure with its message
        log.debug("runtime failure", exc_info=True)
        print(f"acbench: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
