"""
Report output and console summaries.
"""
import json
import os
from typing import Any, Dict, Iterable, List

import pandas as pd

from . import config
from .meta_mss import RunReport


def _ensure_parent(path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def save_report_json(output_path: str, payload: Dict[str, Any]) -> None:
    """
    Save a report as indented, key-sorted JSON.

    Args:
        output_path: Path to save the JSON file
        payload: Report mapping; a schema version is added if missing
    """
    payload = dict(payload)
    payload.setdefault("schema", config.SCHEMA_VERSION)
    _ensure_parent(output_path)
    with open(output_path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
    print(f"Report saved to {output_path}")


def save_runs_csv(output_path: str, rows: List[Dict[str, Any]]) -> None:
    """Save one row per run as a flat CSV."""
    _ensure_parent(output_path)
    pd.DataFrame(rows).to_csv(output_path, index=False)
    print(f"Runs saved to {output_path}")


def format_structure(terms: Iterable[Any]) -> str:
    """Join terms, or their printed forms, with ' + '."""
    return " + ".join(str(term) for term in terms) or "(empty)"


def display_model_summary(report: RunReport, max_trace: int = 5) -> None:
    """
    Print a summary of a run.

    Args:
        report: Run report
        max_trace: Number of trailing fitness values to show
    """
    print(f"- Method: {report.method}")
    print(f"  Terms ({report.n_terms}):")
    for term, value in zip(report.structure, report.theta):
        print(f"    {value:+.6f}  {term}")
    print(f"  Fitness: {report.fitness:.6g}  (penalty {report.penalty:.6g})")
    if report.rrse is not None:
        print(f"  RRSE (free run): {report.rrse:.6g}")
    if report.one_step_rrse is not None:
        print(f"  RRSE (one step): {report.one_step_rrse:.6g}")
    if report.rms_error is not None:
        print(f"  RMS error: {report.rms_error:.6g}")
    if report.accuracy is not None:
        print(f"  Test accuracy: {report.accuracy:.4f}")
    if report.biserial is not None:
        print(f"  Biserial r: {report.biserial:.4f}")
    print(f"  Redundant regressors: {report.n_redundant}")
    if report.n_insignificant:
        print(f"  Insignificant regressors kept: {report.n_insignificant}")
    if report.trace:
        tail = ", ".join(f"{v:.4g}" for v in report.trace[-max_trace:])
        print(f"  Fitness trace (last {min(max_trace, len(report.trace))}): {tail}")
    print(f"  Elapsed: {report.elapsed_ms:.1f} ms  (seed {report.seed})")
    print("")
