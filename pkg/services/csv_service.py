import json
import re
from pathlib import Path
from typing import Iterable, List

import pandas as pd

from config.settings import METRICS_COLUMNS
from models.errors import ConfigError

SUMMARY_COLUMNS = [
    "strategy",
    "devices",
    "final_accuracy_mean",
    "final_accuracy_min",
    "final_accuracy_max",
    "total_bytes",
    "engagement_rate",
]


def metrics_to_dataframe(rows: List[dict]) -> pd.DataFrame:
    """Convert metric rows to a DataFrame with the documented column order."""
    df = pd.DataFrame(rows, columns=METRICS_COLUMNS)
    if df.empty:
        return df
    return df.astype({
        "sim_time_s": "float64",
        "encounter_idx": "int64",
        "device_id": "int64",
        "strategy": "object",
        "goal_accuracy": "float64",
        "alpha": "float64",
        "gamma_size": "int64",
        "bytes_sent": "int64",
        "engaged": "bool",
    })


def generate_csv_bytes(df: pd.DataFrame) -> bytes:
    """Generate CSV content as bytes from a DataFrame."""
    return df.to_csv(index=False, float_format="%.10g").encode("utf-8")


def generate_filename(name: str) -> str:
    """Generate a metrics file name for a scenario or strategy."""
    slug = re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")
    return f"metrics_{slug}.csv"


def read_metrics(path) -> pd.DataFrame:
    """Load a metrics CSV; a missing or extra column is a schema mismatch."""
    try:
        df = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as err:
        raise ConfigError(f"{path} is not a readable metrics CSV: {err}") from err
    if list(df.columns) != METRICS_COLUMNS:
        raise ConfigError(
            f"{path} does not have the metrics schema: expected {METRICS_COLUMNS}, "
            f"got {list(df.columns)}"
        )
    return df


def summarize_metrics(df: pd.DataFrame) -> pd.DataFrame:
    """Per-strategy final accuracy spread, byte total and engagement rate.

    Final accuracy is each device's last row by simulated time.
    """
    if df.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    ordered = df.sort_values(["device_id", "sim_time_s", "encounter_idx"], kind="stable")
    finals = ordered.groupby(["strategy", "device_id"], sort=True).tail(1)

    rows = []
    for strategy, group in df.groupby("strategy", sort=True):
        final = finals[finals["strategy"] == strategy]["goal_accuracy"]
        rows.append({
            "strategy": strategy,
            "devices": int(group["device_id"].nunique()),
            "final_accuracy_mean": float(final.mean()),
            "final_accuracy_min": float(final.min()),
            "final_accuracy_max": float(final.max()),
            "total_bytes": int(group["bytes_sent"].sum()),
            "engagement_rate": float(group["engaged"].astype(bool).mean()),
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def sessions_to_jsonl(reports: Iterable) -> bytes:
    lines = [json.dumps(report.to_dict(), sort_keys=True) for report in reports]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def list_runs(runs_dir) -> List[Path]:
    """Run directories (those holding at least one metrics file), newest name last."""
    root = Path(runs_dir)
    if not root.is_dir():
        return []
    return sorted(p for p in root.iterdir() if p.is_dir() and any(p.glob("metrics_*.csv")))
