# Episode aggregation, metrics and report writers
import csv
import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from .. import __version__
from ..config import settings
from ..exceptions import MetricError
from ..schemas import (FoldMetrics, HistogramBin, LanguageGroup, LanguageRow, MetricsReport,
                       MetricSummary, PredictionRecord)
from ..utils.helpers import ensure_dir, mean_and_std, read_jsonl, write_jsonl
from ..utils.validators import has_both_classes, is_probability
from .corpus import group_language

logger = logging.getLogger(__name__)

METRICS = ("auc", "f1_scripted", "f1_spontaneous", "accuracy")


def aggregate(scores: Sequence[float], mode: str = "median") -> float:
    """Reduce snippet scores to one episode score"""
    if len(scores) == 0:
        raise MetricError("cannot aggregate an empty score list")
    values = np.asarray(scores, dtype=np.float64)
    if mode == "median":
        return float(np.median(values))
    if mode == "mean":
        return float(values.mean())
    raise MetricError(f"unknown aggregation '{mode}'")


def roc_auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Mann-Whitney AUC with half credit for ties; label 1 is scripted"""
    labels = np.asarray(labels, dtype=int)
    if not has_both_classes(labels):
        raise MetricError("undefined AUC: both classes must be present")
    ranks = rankdata(np.asarray(scores, dtype=np.float64), method="average")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _f1(tp: int, fp: int, fn: int) -> float:
    denominator = 2 * tp + fp + fn
    return 0.0 if denominator == 0 else 2.0 * tp / denominator


def f1_per_class(labels: Sequence[int], scores: Sequence[float], threshold: float = 0.5) -> Tuple[float, float]:
    """(F1_scripted, F1_spontaneous), predicting scripted iff score >= threshold"""
    if not is_probability(threshold):
        raise MetricError(f"threshold {threshold} outside [0, 1]")
    labels = np.asarray(labels, dtype=int)
    predicted = (np.asarray(scores, dtype=np.float64) >= threshold).astype(int)
    tp = int(np.sum((predicted == 1) & (labels == 1)))
    tn = int(np.sum((predicted == 0) & (labels == 0)))
    fp = int(np.sum((predicted == 1) & (labels == 0)))
    fn = int(np.sum((predicted == 0) & (labels == 1)))
    return _f1(tp, fp, fn), _f1(tn, fn, fp)


def accuracy(labels: Sequence[int], scores: Sequence[float], threshold: float = 0.5) -> float:
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        return 0.0
    predicted = (np.asarray(scores, dtype=np.float64) >= threshold).astype(int)
    return float(np.mean(predicted == labels))


def _labels_scores(records: Sequence[PredictionRecord]) -> Tuple[np.ndarray, np.ndarray]:
    labels = np.array([r.label.positive for r in records], dtype=int)
    scores = np.array([r.episode_score for r in records], dtype=np.float64)
    return labels, scores


def fold_metrics(fold: int, labels: Sequence[int], scores: Sequence[float]) -> FoldMetrics:
    try:
        auc = roc_auc(labels, scores)
    except MetricError:
        logger.warning("fold %d: AUC undefined (single class)", fold)
        auc = None
    f1_scripted, f1_spontaneous = f1_per_class(labels, scores)
    return FoldMetrics(fold=fold, n_episodes=len(labels), auc=auc, f1_scripted=f1_scripted,
                       f1_spontaneous=f1_spontaneous, accuracy=accuracy(labels, scores))


def metrics_by_fold(records: Sequence[PredictionRecord]) -> List[FoldMetrics]:
    by_fold: Dict[int, List[PredictionRecord]] = defaultdict(list)
    for record in records:
        by_fold[record.fold].append(record)
    return [fold_metrics(fold, *_labels_scores(by_fold[fold])) for fold in sorted(by_fold)]


def summarize(values: Sequence[Optional[float]]) -> MetricSummary:
    """Mean and population std over the defined values"""
    defined = [v for v in values if v is not None]
    if not defined:
        return MetricSummary()
    mean, std = mean_and_std(defined)
    return MetricSummary(mean=mean, std=std)


def majority_baseline(records: Sequence[PredictionRecord]) -> List[FoldMetrics]:
    """Metrics of always predicting spontaneous (constant score 0)"""
    by_fold: Dict[int, List[int]] = defaultdict(list)
    for record in records:
        by_fold[record.fold].append(record.label.positive)
    return [fold_metrics(fold, labels, np.zeros(len(labels))) for fold, labels in sorted(by_fold.items())]


# === HISTOGRAMS ===
def score_histogram(records: Sequence[PredictionRecord], bin_width: float = None) -> List[HistogramBin]:
    """Episode score counts by true class over fixed [0, 1] bins"""
    width = bin_width or settings.histogram_bin_width
    n_bins = int(round(1.0 / width))
    scripted = np.zeros(n_bins, dtype=int)
    spontaneous = np.zeros(n_bins, dtype=int)
    for record in records:
        index = min(int(np.floor(record.episode_score / width)), n_bins - 1)
        if record.label.positive:
            scripted[index] += 1
        else:
            spontaneous[index] += 1
    return [HistogramBin(bin_start=round(i * width, 10), count_scripted=int(scripted[i]),
                         count_spontaneous=int(spontaneous[i])) for i in range(n_bins)]


def format_histograms(records: Sequence[PredictionRecord], bin_width: float = None) -> Dict[str, List[HistogramBin]]:
    by_format: Dict[str, List[PredictionRecord]] = defaultdict(list)
    for record in records:
        by_format[record.format or "unknown"].append(record)
    return {name: score_histogram(group, bin_width) for name, group in sorted(by_format.items())}


# === LANGUAGES ===
def _grouped(records: Sequence[PredictionRecord], rules: LanguageGroup) -> Dict[str, List[PredictionRecord]]:
    groups: Dict[str, List[PredictionRecord]] = defaultdict(list)
    for record in records:
        group = group_language(record.language, rules)
        if group is not None:
            groups[group].append(record)
    return groups


def per_language_auc(records: Sequence[PredictionRecord], rules: LanguageGroup,
                     folds: Optional[int] = None) -> List[LanguageRow]:
    """AUC per language group, per fold and pooled over folds"""
    fold_ids = list(range(folds)) if folds else sorted({r.fold for r in records})
    rows = []
    for group, members in sorted(_grouped(records, rules).items()):
        fold_auc = []
        for fold in fold_ids:
            subset = [r for r in members if r.fold == fold]
            try:
                fold_auc.append(roc_auc(*_labels_scores(subset)))
            except MetricError:
                fold_auc.append(None)
        try:
            pooled = roc_auc(*_labels_scores(members))
        except MetricError:
            pooled = None
        rows.append(LanguageRow(group=group, n_episodes=len(members), fold_auc=fold_auc,
                                mean_auc=summarize(fold_auc).mean, pooled_auc=pooled))
    return rows


def language_distribution(records: Sequence[PredictionRecord], rules: LanguageGroup) -> Dict[str, Dict[str, int]]:
    distribution = {}
    for group, members in sorted(_grouped(records, rules).items()):
        scripted = sum(r.label.positive for r in members)
        distribution[group] = {"scripted": scripted, "spontaneous": len(members) - scripted}
    return distribution


# === REPORTS ===
def cross_val_report(folds: List[FoldMetrics], records: Sequence[PredictionRecord] = (),
                     rules: Optional[LanguageGroup] = None, aggregation: str = "median",
                     seed: int = 0, schema_id: str = "") -> MetricsReport:
    """Cross-fold mean/std plus baseline, language and histogram data"""
    summary = {name: summarize([getattr(f, name) for f in folds]) for name in METRICS}
    report = MetricsReport(tool_version=__version__, schema_id=schema_id, seed=seed,
                           aggregation=aggregation, folds=folds, summary=summary)
    if records:
        baseline = majority_baseline(records)
        report.baseline = {name: summarize([getattr(f, name) for f in baseline]) for name in METRICS}
        report.histogram = score_histogram(records)
        report.format_histogram = format_histograms(records)
        if rules is not None:
            report.per_language = per_language_auc(records, rules, len(folds))
            report.language_distribution = language_distribution(records, rules)
    return report


def model_spread_report(per_model: List[Tuple[np.ndarray, np.ndarray]], aggregation: str = "median",
                        seed: int = 0, schema_id: str = "") -> MetricsReport:
    """Score one external corpus with each fold model; mean/std over the models"""
    folds = [fold_metrics(i, labels, scores) for i, (labels, scores) in enumerate(per_model)]
    return cross_val_report(folds, aggregation=aggregation, seed=seed, schema_id=schema_id)


def _fmt(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.4f}"


def _fmt_summary(summary: MetricSummary) -> str:
    if summary.mean is None:
        return "undefined"
    return f"{summary.mean:.4f} ± {summary.std:.4f}"


def format_report(report: MetricsReport) -> str:
    lines = [f"speechstyle {report.tool_version}  schema={report.schema_id or '-'}  "
             f"seed={report.seed}  aggregation={report.aggregation}", ""]
    lines.append(f"{'fold':>4}  {'n':>5}  {'AUC':>9}  {'F1 scr':>9}  {'F1 spo':>9}  {'acc':>9}")
    for f in report.folds:
        lines.append(f"{f.fold:>4}  {f.n_episodes:>5}  {_fmt(f.auc):>9}  {_fmt(f.f1_scripted):>9}  "
                     f"{_fmt(f.f1_spontaneous):>9}  {_fmt(f.accuracy):>9}")
    lines.append("")
    for name in METRICS:
        lines.append(f"{name:<15} {_fmt_summary(report.summary[name])}")
    if report.baseline:
        lines += ["", "majority baseline (always spontaneous)"]
        for name in METRICS:
            lines.append(f"{name:<15} {_fmt_summary(report.baseline[name])}")
    if report.per_language:
        lines += ["", f"{'language group':<22} {'n':>5}  {'mean AUC':>9}  {'pooled':>9}  per fold"]
        for row in report.per_language:
            per_fold = " ".join(_fmt(v) for v in row.fold_auc)
            lines.append(f"{row.group:<22} {row.n_episodes:>5}  {_fmt(row.mean_auc):>9}  "
                         f"{_fmt(row.pooled_auc):>9}  {per_fold}")
    if report.language_distribution:
        lines += ["", f"{'language group':<22} {'scripted':>9} {'spontaneous':>12}"]
        for group, counts in report.language_distribution.items():
            lines.append(f"{group:<22} {counts['scripted']:>9} {counts['spontaneous']:>12}")
    return "\n".join(lines) + "\n"


def report_records(report: MetricsReport) -> List[Dict]:
    """Line-delimited view of a report"""
    rows = [{"type": "fold", **f.model_dump()} for f in report.folds]
    rows += [{"type": "summary", "metric": name, **s.model_dump()} for name, s in report.summary.items()]
    rows += [{"type": "baseline", "metric": name, **s.model_dump()} for name, s in report.baseline.items()]
    rows += [{"type": "language", **row.model_dump()} for row in report.per_language]
    for row in rows:
        row.update(seed=report.seed, schema_id=report.schema_id, tool_version=report.tool_version)
    return rows


def write_histogram_csv(bins: List[HistogramBin], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["bin_start", "count_scripted", "count_spontaneous"])
        for b in bins:
            writer.writerow([f"{b.bin_start:.2f}", b.count_scripted, b.count_spontaneous])


def write_report(report: MetricsReport, out_dir: str, name: str = "report") -> Path:
    """report.txt, report.jsonl, report.json and histogram csv files"""
    directory = ensure_dir(out_dir)
    (directory / f"{name}.txt").write_text(format_report(report), encoding="utf-8")
    (directory / f"{name}.json").write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    write_jsonl(report_records(report), str(directory / f"{name}.jsonl"))
    if report.histogram:
        write_histogram_csv(report.histogram, str(directory / "histogram.csv"))
    for format_name, bins in report.format_histogram.items():
        slug = "".join(c if c.isalnum() else "-" for c in format_name.lower())
        write_histogram_csv(bins, str(directory / f"histogram.{slug}.csv"))
    return directory / f"{name}.txt"


def read_report(path: str) -> MetricsReport:
    return MetricsReport.model_validate_json(Path(path).read_text(encoding="utf-8"))


def write_predictions(records: Sequence[PredictionRecord], path: str) -> None:
    write_jsonl([r.model_dump(mode="json") for r in records], path)


def read_predictions(path: str) -> List[PredictionRecord]:
    return [PredictionRecord.model_validate(row) for row in read_jsonl(path)]
