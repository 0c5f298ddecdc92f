from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import streamlit as st


@dataclass
class ViewerInputs:
    run_dir: Path
    metrics_file: Optional[Path]


def render_sidebar(runs: List[Path]) -> ViewerInputs:
    """Render run and metrics-file selection and return the choice."""
    with st.sidebar:
        st.header("Runs")

        run_dir = st.selectbox(
            "Run directory",
            options=runs,
            format_func=lambda p: p.name,
            help="Directories under OPPFL_RUNS_DIR that hold a metrics file",
        )

        files = sorted(run_dir.glob("metrics_*.csv"))
        metrics_file = None
        if files:
            metrics_file = st.selectbox(
                "Metrics file",
                options=files,
                format_func=lambda p: p.name,
            )

        return ViewerInputs(run_dir=run_dir, metrics_file=metrics_file)
