"""QSAR models as AC and potency-direction classifiers: per-trial metrics and aggregation."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from acbench.mmp import AC, FIRST_MORE_ACTIVE, NON_AC, PD_TIE, SECOND_MORE_ACTIVE, MmpRecord
from acbench.splitting import SplitPlan

log = logging.getLogger(__name__)

D_CRIT = 1.5
SET_KINDS = ("inter", "test", "cores")
SET_METRICS = ("ac_mcc", "ac_sensitivity", "ac_precision", "pd_accuracy", "pd_accuracy_on_predicted_acs")
SCHEMA_VERSION = 1
TWIN_SUFFIX = "_twin"
LONG_COLUMNS = ("i", "j", "model", "set", "metric", "value")


# -- decision rules ------------------------------------------------------------

def classify_ac_inter(a_known: float, f_pred: float, d_crit: float = D_CRIT) -> str:
    """AC iff |a_known - f_pred| > d_crit (known label of one compound, prediction for the other)."""
    if d_crit <= 0:
        raise ValueError("d_crit must be positive")
    return AC if abs(a_known - f_pred) > d_crit else NON_AC


def classify_ac_test(f1: float, f2: float, d_crit: float = D_CRIT) -> str:
    if d_crit <= 0:
        raise ValueError("d_crit must be positive")
    return AC if abs(f1 - f2) > d_crit else NON_AC


def classify_pd(f1: float, f2: float) -> str:
    """Direction of the larger value; an exact tie yields ``tie``, which never counts as correct."""
    if f1 > f2:
        return FIRST_MORE_ACTIVE
    if f2 > f1:
        return SECOND_MORE_ACTIVE
    return PD_TIE


# -- metrics -------------------------------------------------------------------

@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @classmethod
    def from_labels(cls, truth: Sequence[str], predicted: Sequence[str], positive: str = AC) -> "Confusion":
        if len(truth) != len(predicted):
            raise ValueError("truth and predictions differ in length")
        tp = fp = fn = tn = 0
        for t, p in zip(truth, predicted):
            if p == positive:
                tp += t == positive
                fp += t != positive
            else:
                fn += t == positive
                tn += t != positive
        return cls(tp, fp, fn, tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def mcc(c: Confusion) -> float:
    """Matthews correlation; 0 when there are no positive predictions or the denominator vanishes."""
    if c.total == 0:
        raise ValueError("empty confusion matrix")
    if c.tp + c.fp == 0:
        return 0.0
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def sensitivity(c: Confusion) -> float | None:
    """TP / (TP + FN); None when the set holds no actual positives."""
    return c.tp / (c.tp + c.fn) if c.tp + c.fn else None


def precision(c: Confusion) -> float | None:
    """TP / (TP + FP); None (ill-defined) without positive predictions."""
    return c.tp / (c.tp + c.fp) if c.tp + c.fp else None


def accuracy(correct: Sequence[bool]) -> float:
    if len(correct) == 0:
        raise ValueError("accuracy of an empty prediction set")
    return sum(bool(x) for x in correct) / len(correct)


def mae(truth: Sequence[float], pred: Sequence[float]) -> float:
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if truth.size == 0 or truth.shape != pred.shape:
        raise ValueError("mae needs two non-empty arrays of equal shape")
    return float(np.mean(np.abs(truth - pred)))


# -- per-trial evaluation -------------------------------------------------------

@dataclass
class AcDecision:
    mmp_id: str
    set_kind: str
    predicted: str
    truth: str
    pd_predicted: str
    pd_truth: str


@dataclass
class SetResult:
    n: int
    confusion: Confusion | None
    metrics: dict[str, float | None]
    pd_ties: int = 0
    mcc_zeroed: bool = False

    def to_json(self) -> dict:
        c = self.confusion
        return {"n": self.n, "tp": c.tp if c else 0, "fp": c.fp if c else 0, "fn": c.fn if c else 0,
                "tn": c.tn if c else 0, "pd_ties": self.pd_ties, "mcc_zeroed": self.mcc_zeroed,
                "metrics": self.metrics}


def decide(p: MmpRecord, set_kind: str, labels: Mapping[str, float], preds: Mapping[str, float],
           d_train: frozenset[str], d_crit: float) -> AcDecision:
    """AC and PD decision for one MMP; only a training compound may contribute its true label."""
    if set_kind == "inter":
        if p.id_1 in d_train:
            v1, v2 = labels[p.id_1], preds[p.id_2]
            ac = classify_ac_inter(v1, v2, d_crit)
        else:
            v1, v2 = preds[p.id_1], labels[p.id_2]
            ac = classify_ac_inter(v2, v1, d_crit)
    else:
        v1, v2 = preds[p.id_1], preds[p.id_2]
        ac = classify_ac_test(v1, v2, d_crit)
    return AcDecision(p.mmp_id, set_kind, ac, p.ac_class, classify_pd(v1, v2), p.pd)


def summarize_decisions(decisions: Sequence[AcDecision]) -> SetResult:
    nan_metrics = {k: None for k in SET_METRICS}
    if not decisions:
        return SetResult(0, None, nan_metrics)
    conf = Confusion.from_labels([d.truth for d in decisions], [d.predicted for d in decisions])
    # pairs with identical measured activities have no direction to recover
    directed = [d for d in decisions if d.pd_truth != PD_TIE]
    ties = sum(1 for d in directed if d.pd_predicted == PD_TIE)
    on_acs = [d for d in directed if d.predicted == AC]
    metrics = {
        "ac_mcc": mcc(conf),
        "ac_sensitivity": sensitivity(conf),
        "ac_precision": precision(conf),
        "pd_accuracy": accuracy([d.pd_predicted == d.pd_truth for d in directed]) if directed else None,
        "pd_accuracy_on_predicted_acs":
            accuracy([d.pd_predicted == d.pd_truth for d in on_acs]) if on_acs else None,
    }
    return SetResult(len(decisions), conf, metrics, ties, conf.tp + conf.fp == 0)


@dataclass
class TrialRecord:
    i: int
    j: int
    model: str
    qsar_mae: float
    sets: dict[str, SetResult]
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"i": self.i, "j": self.j, "model": self.model, "qsar_mae": self.qsar_mae,
                "params": self.params, "sets": {k: v.to_json() for k, v in self.sets.items()}}


def evaluate_trial(plan: SplitPlan, model: str, labels: Mapping[str, float], preds: Mapping[str, float],
                   mmps: Sequence[MmpRecord], d_crit: float = D_CRIT, params: Mapping | None = None) -> TrialRecord:
    """Metrics of one trial from test-set predictions; ``preds`` must cover d_test."""
    missing = [cid for cid in plan.d_test if cid not in preds]
    if missing:
        raise ValueError(f"trial ({plan.i},{plan.j}) {model}: no prediction for {len(missing)} test compounds")
    test_ids = sorted(plan.d_test)
    qsar = mae([labels[c] for c in test_ids], [preds[c] for c in test_ids])
    # only test-set predictions are visible to the decision rules
    visible = {c: preds[c] for c in test_ids}
    by_id = {p.mmp_id: p for p in mmps}
    members = {"inter": plan.m_inter, "test": plan.m_test, "cores": plan.m_cores}
    sets = {}
    for kind in SET_KINDS:
        decisions = [decide(by_id[x], kind, labels, visible, plan.d_train, d_crit) for x in sorted(members[kind])]
        result = summarize_decisions(decisions)
        if result.pd_ties:
            log.info("trial (%d,%d) %s %s: %d predicted potency ties counted as errors",
                     plan.i, plan.j, model, kind, result.pd_ties)
        sets[kind] = result
    return TrialRecord(plan.i, plan.j, model, qsar, sets, dict(params or {}))


# -- aggregation ---------------------------------------------------------------

def mean_std(values: Iterable[float | None]) -> dict:
    """Mean and sample standard deviation over defined values."""
    vals = [v for v in values if v is not None]
    if not vals:
        return {"mean": None, "std": None, "n": 0}
    arr = np.asarray(vals, dtype=np.float64)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std, "n": len(vals)}


def aggregate(records: Sequence[TrialRecord]) -> dict:
    models = sorted({r.model for r in records})
    out = {}
    for name in models:
        rs = sorted((r for r in records if r.model == name), key=lambda r: (r.i, r.j))
        entry = {"trials": len(rs), "qsar_mae": mean_std(r.qsar_mae for r in rs), "sets": {}}
        for kind in SET_KINDS:
            s = {metric: mean_std(r.sets[kind].metrics[metric] for r in rs) for metric in SET_METRICS}
            s["ill_defined_precision_trials"] = sum(1 for r in rs if r.sets[kind].metrics["ac_precision"] is None)
            s["mcc_zeroed_trials"] = sum(1 for r in rs if r.sets[kind].mcc_zeroed)
            s["pd_ties"] = sum(r.sets[kind].pd_ties for r in rs)
            entry["sets"][kind] = s
        out[name] = entry
    return out


def build_report(records: Sequence[TrialRecord], config: Mapping, config_digest: str) -> dict:
    records = sorted(records, key=lambda r: (r.model, r.i, r.j))
    return {
        "schema_version": SCHEMA_VERSION,
        "config_digest": config_digest,
        "config": dict(config),
        "trials": [r.to_json() for r in records],
        "aggregate": aggregate(records),
    }


def write_results_json(path: str | Path, report: Mapping) -> None:
    Path(path).write_text(json.dumps(report, indent=1, sort_keys=True, allow_nan=False) + "\n")


def long_rows(report: Mapping) -> list[tuple]:
    rows = []
    for t in report["trials"]:
        rows.append((t["i"], t["j"], t["model"], "qsar", "mae", t["qsar_mae"]))
        for kind in SET_KINDS:
            for metric in SET_METRICS:
                rows.append((t["i"], t["j"], t["model"], kind, metric, t["sets"][kind]["metrics"][metric]))
    return rows


def write_results_long(path: str | Path, report: Mapping) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_digest={report['config_digest']}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LONG_COLUMNS)
        for row in long_rows(report):
            w.writerow([*row[:5], "" if row[5] is None else repr(float(row[5]))])


def write_plots(out_dir: str | Path, report: Mapping) -> list[Path]:
    """SVG scatter plots: set metric (x) against QSAR MAE (y), +-2 std error bars, one point per model."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    agg = report["aggregate"]
    with matplotlib.rc_context({"svg.hashsalt": "acbench", "svg.fonttype": "none"}):
        for metric in SET_METRICS:
            fig, axes = plt.subplots(1, len(SET_KINDS), figsize=(4 * len(SET_KINDS), 3.6), sharey=True)
            for ax, kind in zip(axes, SET_KINDS):
                for name, entry in sorted(agg.items()):
                    x, y = entry["sets"][kind][metric], entry["qsar_mae"]
                    if x["mean"] is None:
                        continue
                    ax.errorbar(x["mean"], y["mean"], xerr=2 * x["std"], yerr=2 * y["std"], fmt="o", capsize=3,
                                label=name)
                ax.set_title(f"M_{kind}")
                ax.set_xlabel(metric)
            axes[0].set_ylabel("QSAR MAE")
            handles, labels = axes[0].get_legend_handles_labels()
            if handles:
                fig.legend(handles, labels, loc="center right", fontsize="small")
            fig.tight_layout(rect=(0, 0, 0.82, 1))
            path = out_dir / f"{metric}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            written.append(path)
    return written


# -- benchmark driver -------------------------------------------------------------

@dataclass
class BenchmarkConfig:
    models: tuple[str, ...]
    k: int = 2
    m: int = 3
    master_seed: int = 0
    d_crit: float = D_CRIT
    budget: int = 10
    grid: dict | None = None
    twin: dict | None = None
    jobs: int = 1

    def to_json(self) -> dict:
        return {"models": list(self.models), "k": self.k, "m": self.m, "master_seed": self.master_seed,
                "d_crit": self.d_crit, "budget": self.budget, "grid": self.grid, "twin": self.twin}


@dataclass
class TrialTask:
    plan: SplitPlan
    model: str
    ids: list[str]
    labels: dict[str, float]
    features: Any
    mmps: list[MmpRecord]
    config: BenchmarkConfig


def default_fit_predict(task: TrialTask) -> tuple[dict[str, float], dict]:
    """Tune on d_train, refit, predict d_test (twin-trained when the model name ends in ``_twin``).

    Returns (test predictions by id, info with the chosen params and the tuning log).
    """
    from acbench.models.common import derive_seed
    from acbench.models.grids import default_grid
    from acbench.models.registry import model_space, take
    from acbench.models.tune import tune

    cfg, plan = task.config, task.plan
    row = {cid: r for r, cid in enumerate(task.ids)}
    train_ids = sorted(plan.d_train)
    tr = [row[c] for c in train_ids]
    te = [row[c] for c in sorted(plan.d_test)]
    y = np.array([task.labels[c] for c in train_ids])
    seed = derive_seed(cfg.master_seed, plan.i, plan.j, task.model)
    base_name = task.model.removesuffix(TWIN_SUFFIX)
    space = model_space(base_name, cfg.grid or default_grid())
    f_tr = take(task.features, tr)
    result = tune(base_name, space, f_tr, y, cfg.budget, seed)
    model = result.model
    if task.model.endswith(TWIN_SUFFIX):
        from acbench.twin import TwinSchedule, twin_fit

        pos = {cid: k for k, cid in enumerate(train_ids)}
        by_id = {p.mmp_id: p for p in task.mmps}
        pairs = [(pos[by_id[x].id_1], pos[by_id[x].id_2], by_id[x].delta_log) for x in sorted(plan.m_train)]
        twin_fit(model.regressor, f_tr, y, pairs, TwinSchedule(**(cfg.twin or {})), seed=seed)
    pred = model.predict_features(take(task.features, te))
    info = {"params": result.best_params,
            "tuning": [{"index": t.index, "params": t.params, "val_mae": t.val_mae, "error": t.error}
                       for t in result.trials]}
    return {task.ids[r]: float(v) for r, v in zip(te, pred)}, info


def _run_task(task: TrialTask, fit_predict: Callable) -> tuple[dict[str, float], dict]:
    from threadpoolctl import threadpool_limits

    try:
        # one BLAS thread keeps floating-point reductions in a fixed order
        with threadpool_limits(1):
            return fit_predict(task)
    except Exception as exc:
        raise RuntimeError(f"trial ({task.plan.i},{task.plan.j}) model {task.model} failed: {exc}") from exc


def predict_trials(tasks: Sequence[TrialTask], jobs: int = 1,
                   fit_predict: Callable = default_fit_predict) -> list[tuple[dict[str, float], dict]]:
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_task, tasks, [fit_predict] * len(tasks)))
    return [_run_task(t, fit_predict) for t in tasks]


def make_tasks(compounds: Sequence, mmps: Sequence[MmpRecord], plans: Sequence[SplitPlan], config: BenchmarkConfig,
               features: dict[str, Any] | None = None) -> list[TrialTask]:
    """One task per (model, trial) in (model, i, j) order; features are computed once per representation."""
    from acbench.models.registry import featurize, split_name

    ids = [c.id for c in compounds]
    labels = {c.id: c.a for c in compounds}
    features = features if features is not None else {}
    tasks = []
    for name in config.models:
        rep = split_name(name.removesuffix(TWIN_SUFFIX))[0]
        if rep not in features:
            features[rep] = featurize(rep, compounds)
        for plan in sorted(plans, key=lambda p: (p.i, p.j)):
            tasks.append(TrialTask(plan, name, ids, labels, features[rep], list(mmps), config))
    return tasks


def run_benchmark(compounds: Sequence, mmps: Sequence[MmpRecord], plans: Sequence[SplitPlan], config: BenchmarkConfig,
                  config_digest: str = "", fit_predict: Callable = default_fit_predict) -> dict:
    """Fit every model on every trial and return the full report dict."""
    tasks = make_tasks(compounds, mmps, plans, config)
    outputs = predict_trials(tasks, config.jobs, fit_predict)
    labels = {c.id: c.a for c in compounds}
    records = [evaluate_trial(t.plan, t.model, labels, preds, mmps, config.d_crit, info.get("params"))
               for t, (preds, info) in zip(tasks, outputs)]
    return build_report(records, config.to_json(), config_digest)
