"""Episode Viewer Tab - Run one controller against an oscillating target."""

import numpy as np
import plotly.graph_objects as go
import streamlit as st

from oscillating_grasp import (
    AmplitudeLevel,
    Axis,
    CostSpec,
    EpisodeConfig,
    Method,
    OscillationSpec,
    SystemModel,
    default_plan,
    evaluate,
    get_config,
    prepare,
    run_episode,
)
from oscillating_grasp.plotting import POSE_LABELS, episode_figure
from oscillating_grasp.sim import latency_ticks_from_ms


def render() -> None:
    """Render the episode viewer tab."""
    st.header("🎯 Episode Viewer: Single Closed-Loop Run")
    st.markdown("Execute a controller from the nominal start against one goal pose.")

    # Validate prerequisite data
    if "model" not in st.session_state:
        st.warning(
            """
            ⚠️ **No Model**

            Fit or load a model in the **Model Setup** tab first.
            """
        )
        return

    bundle = st.session_state.model
    config = get_config()
    plan = default_plan()

    col1, col2 = st.columns(2)

    with col1:
        st.subheader("Controller")
        method = st.selectbox(
            "Method",
            options=[m.value for m in Method],
            index=2,
            help="InfLQR, SingleLQR or DualLQR",
        )
        rho = st.select_slider(
            "Control Cost ρ",
            options=list(plan.rhos),
            value=0.0,
            help="R = I · 10^ρ; higher values mean gentler control",
        )
        goal_index = st.selectbox(
            "Goal Pose",
            options=list(range(len(plan.goal_poses))),
            format_func=lambda i: "Central goal" if i == 0 else f"Variant {i}",
        )
        use_latency = st.checkbox(
            f"Sensing Latency ({config.latency_ms:.0f} ms)",
            value=False,
            help="The controller sees the target pose delayed by the latency",
        )

    with col2:
        st.subheader("Target Oscillation")
        axis = st.selectbox("Axis", options=[a.value for a in Axis], index=0)
        level = st.selectbox(
            "Amplitude Level", options=[lv.value for lv in AmplitudeLevel], index=0
        )
        frequency = st.number_input(
            "Frequency (Hz)",
            min_value=0.05,
            max_value=5.0,
            value=config.oscillation_frequency,
            step=0.05,
            format="%.2f",
        )
        decay = st.number_input(
            "Decay Rate (1/s)",
            min_value=0.0,
            max_value=5.0,
            value=0.0,
            step=0.1,
            format="%.2f",
            help="0 for a steady oscillation",
        )

    if st.button("Run Episode", type="primary", use_container_width=True):
        try:
            oscillation = OscillationSpec(
                axis=Axis(axis),
                amplitude=plan.amplitude_for(Axis(axis), AmplitudeLevel(level)),
                frequency=frequency,
                decay=decay,
            )
            controller = prepare(
                Method(method),
                bundle.joint,
                CostSpec(rho=rho),
                SystemModel(dt=plan.dt),
                bundle.horizon,
            )
            episode = EpisodeConfig(
                start_pose=plan.start_pose,
                goal_pose=plan.goal_poses[goal_index],
                controller=controller,
                oscillation=oscillation,
                dt=plan.dt,
                horizon=plan.horizon,
                latency_ticks=latency_ticks_from_ms(config.latency_ms, plan.dt)
                if use_latency
                else 0,
            )
            with st.spinner("Simulating..."):
                log = run_episode(episode)
            st.session_state.episode_log = log
            st.session_state.episode_metrics = evaluate(log)
        except Exception as e:
            st.error(f"❌ Error: {str(e)}")

    if "episode_log" not in st.session_state:
        return

    log = st.session_state.episode_log
    metrics = st.session_state.episode_metrics

    # Display key metrics
    st.divider()
    st.subheader("📏 Episode Metrics")
    col_a, col_b, col_c, col_d = st.columns(4)

    with col_a:
        passed = metrics.final_approach_accuracy >= config.required_accuracy
        st.metric(
            "Final Approach Accuracy",
            f"{metrics.final_approach_accuracy:.1%}",
            delta="Meets requirement" if passed else "Below requirement",
            delta_color="normal" if passed else "inverse",
            help=f"{metrics.approach_tick_count} ticks in the approach zone",
        )
        if metrics.never_arrived:
            st.caption("⚠️ Never reached the approach zone")

    with col_b:
        st.metric("Translation", f"{metrics.translation_m:.3f} m")

    with col_c:
        st.metric("Rotation", f"{metrics.rotation_rad:.3f} rad")

    with col_d:
        grasp = "-" if metrics.grasp_time_s is None else f"{metrics.grasp_time_s:.2f} s"
        st.metric("Grasp Time", grasp, help="First contact with the target")

    st.plotly_chart(episode_figure(log), use_container_width=True)

    # Fusion weights
    weights = [d.weights for d in log.diagnostics if d is not None and d.weights is not None]
    if weights:
        st.subheader("⚖️ DualLQR Fusion Weights")
        end_weight = np.array([w[1] for w in weights])
        fig = go.Figure()
        for d, label in enumerate(POSE_LABELS):
            fig.add_trace(
                go.Scatter(
                    x=log.times[: len(end_weight)],
                    y=end_weight[:, d],
                    mode="lines",
                    name=label.split(" ")[0],
                )
            )
        fig.update_layout(
            xaxis_title="Time (s)",
            yaxis_title="End-frame weight",
            yaxis_range=[0, 1],
            height=350,
        )
        st.plotly_chart(fig, use_container_width=True)


if __name__ == "__main__":
    render()
