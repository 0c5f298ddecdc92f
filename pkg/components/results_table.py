import pandas as pd
import streamlit as st

from services.csv_service import summarize_metrics


def render_statistics(df: pd.DataFrame) -> None:
    """Render per-strategy summary metrics."""
    summary = summarize_metrics(df)

    col1, col2, col3, col4 = st.columns(4)
    col1.metric("Rows", len(df))
    col2.metric("Devices", int(df["device_id"].nunique()))
    col3.metric("Total Bytes", f"{int(df['bytes_sent'].sum()):,}")
    col4.metric("Engaged Rows", int(df["engaged"].sum()))

    st.markdown("**Per-strategy summary:**")
    st.dataframe(summary, use_container_width=True, hide_index=True)


def _color_engaged(row: pd.Series) -> list:
    if row.get("engaged", False):
        return ["background-color: #dcfce7"] * len(row)
    return [""] * len(row)


def render_data_table(df: pd.DataFrame) -> None:
    """Render the filterable metrics table."""
    col1, col2, col3, col4 = st.columns(4)
    with col1:
        strategy_options = sorted(df["strategy"].unique().tolist())
        strategy_filter = st.multiselect(
            "Filter by Strategy",
            options=strategy_options,
            default=strategy_options,
        )
    with col2:
        device_options = sorted(df["device_id"].unique().tolist())
        device_filter = st.multiselect(
            "Filter by Device",
            options=device_options,
            default=device_options,
        )
    with col3:
        engaged_only = st.checkbox("Engaged rows only", value=False)
    with col4:
        min_accuracy = st.slider(
            "Min Goal Accuracy",
            min_value=0.0,
            max_value=1.0,
            value=0.0,
            step=0.05,
        )

    filtered = df[
        (df["strategy"].isin(strategy_filter))
        & (df["device_id"].isin(device_filter))
        & (df["goal_accuracy"] >= min_accuracy)
    ]
    if engaged_only:
        filtered = filtered[filtered["engaged"]]

    st.write(f"Showing {len(filtered)} of {len(df)} rows")

    styled = filtered.style.apply(_color_engaged, axis=1)
    st.dataframe(
        styled,
        use_container_width=True,
        height=600,
    )
