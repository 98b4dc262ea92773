"""Sweep Results Tab - Best control costs and accuracy curves of a sweep."""

from pathlib import Path

import streamlit as st

from oscillating_grasp import get_config, select_best
from oscillating_grasp.bench import read_results, summarize, summary_table
from oscillating_grasp.plotting import accuracy_figure, distance_figure

CONDITIONS = [
    "none",
    "low/position",
    "medium/position",
    "high/position",
    "low/orientation",
    "medium/orientation",
    "high/orientation",
]


def render() -> None:
    """Render the sweep results tab."""
    st.header("📊 Sweep Results: Control Cost Selection")
    st.markdown("Load a results CSV written by `oscillating-grasp sweep`.")

    config = get_config()
    col1, col2 = st.columns(2)

    with col1:
        results_path = st.text_input("Results File", value="results.csv")
        threshold = st.slider(
            "Required Accuracy",
            min_value=0.5,
            max_value=1.0,
            value=config.required_accuracy,
            step=0.01,
        )

    with col2:
        condition = st.selectbox(
            "Selection Condition",
            options=["configured per method", *CONDITIONS],
            help="Oscillation condition under which the accuracy must be met",
        )

    if st.button("Load Results", type="primary", use_container_width=True):
        try:
            st.session_state.sweep_rows = read_results(Path(results_path))
        except Exception as e:
            st.error(f"❌ Error: {str(e)}")

    if not st.session_state.get("sweep_rows"):
        return

    rows = st.session_state.sweep_rows
    conditions = None if condition == "configured per method" else condition
    selected = select_best(rows, threshold, conditions)

    st.subheader("🏆 Best Control Cost")
    columns = st.columns(len(selected))
    for column, (method, rho) in zip(columns, selected.items(), strict=True):
        with column:
            st.metric(
                method.value,
                "none qualifies" if rho is None else f"ρ = {rho:+.1f}",
                help=f"{len(rows)} episodes loaded",
            )

    st.divider()
    st.subheader("📋 Summary")
    st.code(summary_table(rows, selected), language=None)

    st.divider()
    st.subheader("📈 Accuracy and Travel")
    points = summarize(rows)
    col_a, col_b = st.columns(2)
    with col_a:
        method = st.selectbox("Method", options=[m.value for m in selected])
    with col_b:
        group = st.radio("Oscillation", options=["position", "orientation"], horizontal=True)

    selection = [p for p in points if p.method.value == method and p.group in (group, "none")]
    title = f"{method}, {group} oscillation"
    st.plotly_chart(accuracy_figure(selection, title, threshold), use_container_width=True)
    st.plotly_chart(distance_figure(selection, title), use_container_width=True)


if __name__ == "__main__":
    render()
