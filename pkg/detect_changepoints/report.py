#! /usr/bin/env python3
"""
This module serializes detection results to JSON reports and statistic curve
CSVs, and parses the reports back. Change-points are reported as the last
index of the left segment, with the first index of the new regime echoed
alongside.

"""
import json
from typing import Dict, List, Optional, Union

import pandas as pd

from .detect import ChangePointRecord, ChangePointSet, SingleResult
from .metric import DataError
from .scan import PROFILE_COLUMNS, ScanProfile
from .utilities import CSV_FLOAT_FORMAT, ensure_parent_dir


Result = Union[SingleResult, ChangePointSet]

SINGLE_KIND = "single"
WBS_KIND = "wbs"

CURVE_COLUMNS = ["s", "e", *PROFILE_COLUMNS]

SINGLE_FIELDS = ("tau_hat", "m_n", "threshold", "p_value", "rejected",
                 "permutations", "alpha", "calibration")


def _single_to_dict(result: SingleResult, n: int) -> Dict:
    details = []
    if result.rejected:
        details.append({
            "tau": result.tau_hat,
            "new_regime_start": result.tau_hat + 1,
            "segment": [1, n],
            "statistic": result.m_n,
            "threshold": result.threshold,
            "p_value": result.p_value,
        })
    report = {
        "kind": SINGLE_KIND,
        "locations": [result.tau_hat] if result.rejected else [],
        "details": details,
    }
    report.update({key: getattr(result, key) for key in SINGLE_FIELDS})
    return report


def _record_to_dict(record: ChangePointRecord) -> Dict:
    return {
        "tau": record.tau,
        "new_regime_start": record.tau + 1,
        "segment": list(record.segment),
        "interval": list(record.interval),
        "statistic": record.statistic,
        "threshold": record.threshold,
        "p_value": record.p_value,
        "order": record.order,
    }


def _set_to_dict(result: ChangePointSet) -> Dict:
    return {
        "kind": WBS_KIND,
        "locations": result.locations,
        "details": [_record_to_dict(r) for r in result.records],
    }


def report_dict(result: Result, config: Dict, n: int,
                runtime_seconds: Optional[float] = None) -> Dict:
    """
    Builds the report: {"config", "locations", "details", "runtime_seconds"}
    plus the single test fields for single change-point results.

    Args:
        result (SingleResult or ChangePointSet): The detection result.
        config (dict): The configuration echo.
        n (int): The number of observations analyzed.
        runtime_seconds (float, optional): Wall time, when timing is on.

    Returns:
        dict

    """
    if isinstance(result, SingleResult):
        body = _single_to_dict(result, n)
        echo = dict(config)
    else:
        body = _set_to_dict(result)
        echo = {**config, **result.config}
    return {"config": echo, "n": n, **body,
            "runtime_seconds": runtime_seconds}


def report_json(result: Result, config: Dict, n: int,
                runtime_seconds: Optional[float] = None) -> str:
    return json.dumps(report_dict(result, config, n, runtime_seconds),
                      indent=2) + "\n"


def curves_frame(profiles: List[ScanProfile]) -> pd.DataFrame:
    """
    Stacks statistic profiles into one table, one block per analyzed
    segment.

    """
    frames = []
    for profile in profiles:
        frame = profile.to_frame()
        frame.insert(0, "e", profile.e)
        frame.insert(0, "s", profile.s)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=CURVE_COLUMNS)
    return pd.concat(frames, ignore_index=True)[CURVE_COLUMNS]


def result_profiles(result: Result) -> List[ScanProfile]:
    if isinstance(result, SingleResult):
        return [] if result.profile is None else [result.profile]
    return result.profiles


def emit_report(result: Result, config: Dict, n: int,
                output_file: Optional[str] = None,
                curve_file: Optional[str] = None,
                runtime_seconds: Optional[float] = None) -> str:
    """
    Writes the JSON report, and the statistic curves when requested.

    Args:
        result (SingleResult or ChangePointSet): The detection result.
        config (dict): The configuration echo.
        n (int): The number of observations analyzed.
        output_file (str, optional): The report destination.
        curve_file (str, optional): The curve CSV destination.
        runtime_seconds (float, optional): Wall time, when timing is on.

    Returns:
        str: The JSON text.

    Raises:
        DataError

    """
    text = report_json(result, config, n, runtime_seconds)
    try:
        if output_file is not None:
            ensure_parent_dir(output_file)
            with open(output_file, "w") as fh:
                fh.write(text)
        if curve_file is not None:
            ensure_parent_dir(curve_file)
            curves_frame(result_profiles(result)).to_csv(
                curve_file, index=False, float_format=CSV_FLOAT_FORMAT)
    except OSError as e:
        raise DataError(f"Cannot write report: {e}")
    return text


def parse_report(report: Dict) -> Result:
    """
    Rebuilds the in-memory result from a report dictionary.

    Raises:
        DataError

    """
    try:
        if report["kind"] == SINGLE_KIND:
            return SingleResult(**{key: report[key]
                                   for key in SINGLE_FIELDS})
        records = [ChangePointRecord(
            tau=d["tau"], segment=tuple(d["segment"]),
            interval=tuple(d["interval"]), statistic=d["statistic"],
            threshold=d["threshold"], p_value=d["p_value"],
            order=d["order"]) for d in report["details"]]
        config = {key: report["config"][key]
                  for key in ("intervals", "permutations", "alpha", "seed")}
        return ChangePointSet(records, config)
    except (KeyError, TypeError) as e:
        raise DataError(f"Malformed report: missing {e}")


def load_report(file_path: str) -> Result:
    """
    Reads a JSON report written by emit_report.

    Raises:
        DataError

    """
    try:
        with open(file_path) as fh:
            report = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"Cannot read report {file_path}: {e}")
    return parse_report(report)
