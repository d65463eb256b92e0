"""Write experiment results to a report directory.

Everything is emitted deterministically (sorted keys, repr floats) so two
runs with the same config and seed produce byte-identical files.
"""

from __future__ import annotations

import json
import os

from .evaluate import AepExperimentResult, AspExperimentResult

AEP_METRIC_FIELDS = ("scope", "model", "precision", "recall", "f1", "support")
ASP_METRIC_FIELDS = ("scope", "model", "precision", "recall", "f1", "accuracy", "support")
EXPANSION_FIELDS = (
    "scope",
    "n_triples",
    "n_expansions",
    "n_expansion_correct",
    "expansion_ratio",
    "n_expansion_pred",
    "n_expansions_long_tail",
    "expansion_ratio_long_tail",
    "n_expansions_trunk",
    "expansion_ratio_trunk",
)
AEP_PREDICTION_FIELDS = (
    "news_id",
    "entity_id",
    "year",
    "label",
    "confidence",
    "pred_full",
    "pred_salience",
    "pred_title",
)
ASP_PREDICTION_FIELDS = (
    "news_id",
    "entity_id",
    "year",
    "triple",
    "class_id",
    "true_slot",
    "pred_full",
    "pred_cosine",
    "pred_modal",
    "covered",
    "expansion_true",
    "expansion_pred",
)


def _cell(value) -> str:
    if value is None:
        return ""  # absent ratio (no expansion triples in scope)
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ";".join(value)
    return str(value)


def _write_csv(path, fields, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(fields) + "\n")
        for row in rows:
            get = row.get if isinstance(row, dict) else lambda f: getattr(row, f)
            fh.write(",".join(_cell(get(f)) for f in fields) + "\n")


def report_to_dict(result) -> dict:
    """The JSON-facing summary of either experiment kind."""
    if isinstance(result, AepExperimentResult):
        return {
            "kind": "aep",
            "config": result.config,
            "train_year": result.train_year,
            "test_years": result.test_years,
            "counters": result.counters,
            "metrics": result.metrics,
            "kappa": result.kappa,
            "p_value_vs_salience": result.p_value_vs_salience,
            "pr_curve": [list(point) for point in result.pr_points],
        }
    if isinstance(result, AspExperimentResult):
        return {
            "kind": "asp",
            "config": result.config,
            "train_year": result.train_year,
            "test_years": result.test_years,
            "counters": result.counters,
            "metrics": result.metrics,
            "kappa": result.kappa,
            "per_class": result.per_class,
            "expansion": result.expansion,
        }
    raise TypeError(f"unsupported result type {type(result).__name__}")


def emit_report(out_dir, result) -> dict:
    """Write report.json plus CSV views; returns the report dict."""
    os.makedirs(out_dir, exist_ok=True)
    report = report_to_dict(result)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
    if report["kind"] == "aep":
        _write_csv(
            os.path.join(out_dir, "metrics.csv"), AEP_METRIC_FIELDS, result.metrics
        )
        _write_csv(
            os.path.join(out_dir, "pr_curve.csv"),
            ("threshold", "precision", "recall"),
            [
                {"threshold": t, "precision": p, "recall": r}
                for t, p, r in result.pr_points
            ],
        )
        _write_csv(
            os.path.join(out_dir, "predictions.csv"),
            AEP_PREDICTION_FIELDS,
            result.predictions,
        )
    else:
        _write_csv(
            os.path.join(out_dir, "metrics.csv"), ASP_METRIC_FIELDS, result.metrics
        )
        _write_csv(
            os.path.join(out_dir, "per_class.csv"),
            AEP_METRIC_FIELDS,
            result.per_class,
        )
        _write_csv(
            os.path.join(out_dir, "expansion.csv"), EXPANSION_FIELDS, result.expansion
        )
        _write_csv(
            os.path.join(out_dir, "predictions.csv"),
            ASP_PREDICTION_FIELDS,
            result.predictions,
        )
    return report


def load_report(report_dir) -> dict:
    with open(os.path.join(report_dir, "report.json"), encoding="utf-8") as fh:
        return json.load(fh)
