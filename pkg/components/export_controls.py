from pathlib import Path

import streamlit as st


def render_export_controls(run_dir: Path, metrics_file: Path) -> None:
    """Render download buttons for the run's metrics, manifest and session log."""
    col1, col2, col3 = st.columns(3)

    with col1:
        st.download_button(
            label="Download Metrics CSV",
            data=metrics_file.read_bytes(),
            file_name=metrics_file.name,
            mime="text/csv",
            use_container_width=True,
        )

    manifest = run_dir / "manifest.json"
    with col2:
        if manifest.exists():
            st.download_button(
                label="Download Manifest",
                data=manifest.read_bytes(),
                file_name=manifest.name,
                mime="application/json",
                use_container_width=True,
            )
        else:
            st.caption("No manifest in this run.")

    sessions = run_dir / "sessions.jsonl"
    with col3:
        if sessions.exists():
            st.download_button(
                label="Download Session Log",
                data=sessions.read_bytes(),
                file_name=sessions.name,
                mime="application/x-ndjson",
                use_container_width=True,
            )
        else:
            st.caption("No session log in this run.")
