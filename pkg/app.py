import json
from pathlib import Path

import streamlit as st

from config.settings import APP_ICON, APP_LAYOUT, APP_TITLE, RUNS_DIR
from components.sidebar import render_sidebar
from components.results_table import render_data_table, render_statistics
from components.export_controls import render_export_controls
from services.csv_service import list_runs, read_metrics
from models.errors import ConfigError

st.set_page_config(
    layout=APP_LAYOUT,
    page_title=APP_TITLE,
    page_icon=APP_ICON,
)

st.markdown(
    """
<style>
    .stApp { max-width: 1400px; margin: 0 auto; }
</style>
""",
    unsafe_allow_html=True,
)

st.title(f"{APP_ICON} {APP_TITLE}")
st.markdown(
    "Browse the metrics, manifests and session logs written by `python cli.py run`."
)


def _load_manifest(run_dir: Path) -> dict:
    path = run_dir / "manifest.json"
    if not path.exists():
        return {}
    return json.loads(path.read_text(encoding="utf-8"))


def main() -> None:
    runs = list_runs(RUNS_DIR)
    if not runs:
        st.info(
            f"No runs found under `{RUNS_DIR}`. Run a scenario first, e.g.\n\n"
            "`python cli.py run --config scenarios/controlled-synthetic.json`\n\n"
            "or point `OPPFL_RUNS_DIR` at a directory of runs."
        )
        return

    inputs = render_sidebar(runs)
    if inputs.metrics_file is None:
        st.warning("The selected run has no metrics file.")
        return

    try:
        df = read_metrics(inputs.metrics_file)
    except ConfigError as e:
        st.error(f"Cannot read metrics: {e}")
        return

    manifest = _load_manifest(inputs.run_dir)
    if manifest:
        with st.expander("Run Manifest", expanded=False):
            st.markdown(f"- **Scenario hash:** `{manifest.get('scenario_hash', '')}`")
            st.markdown(f"- **Seed:** {manifest.get('seed', '')}")
            st.markdown(f"- **Workers:** {manifest.get('workers', '')}")
            st.markdown(f"- **Wall clock:** {manifest.get('wall_clock_s', '')} s")
            for note in manifest.get("notes", []):
                st.markdown(f"- {note}")

    tab_stats, tab_table, tab_export = st.tabs(["Summary", "Metrics Table", "Export"])

    with tab_stats:
        render_statistics(df)

    with tab_table:
        render_data_table(df)

    with tab_export:
        render_export_controls(inputs.run_dir, inputs.metrics_file)


if __name__ == "__main__":
    main()
