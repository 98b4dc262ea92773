"""Model Setup Tab - Generate demonstrations and fit the mixture model."""

from pathlib import Path

import plotly.graph_objects as go
import streamlit as st

from oscillating_grasp import fit_model, get_config, load_model, save_model, synth_demos


def render() -> None:
    """Render the model setup tab."""
    st.header("🧠 Model Setup: Demonstrations and Mixture Model")
    st.markdown("Generate a synthetic demonstration set and fit the task-parameterized model.")

    config = get_config()
    col1, col2 = st.columns(2)

    with col1:
        st.subheader("Synthetic Demonstrations")
        n_demos = st.number_input(
            "Number of Demonstrations",
            min_value=2,
            max_value=200,
            value=config.n_demos,
            step=1,
            help="Demonstrations drawn around the central goal",
        )
        synth_seed = st.number_input(
            "Generator Seed", min_value=0, value=config.synth_seed, step=1
        )

    with col2:
        st.subheader("Mixture Model")
        n_components = st.number_input(
            "Gaussian Components",
            min_value=1,
            max_value=20,
            value=config.n_components,
            step=1,
            help="Number of components K of the joint model",
        )
        fit_seed = st.number_input("EM Seed", min_value=0, value=config.fit_seed, step=1)

    if st.button("Generate and Fit", type="primary", use_container_width=True):
        try:
            with st.spinner("Fitting..."):
                demos = synth_demos(int(n_demos), int(synth_seed))
                bundle = fit_model(demos, int(n_components), int(fit_seed))
            st.session_state.model = bundle
            st.session_state.demos = demos
            st.success("✅ Model fitted!")
        except Exception as e:
            st.error(f"❌ Error: {str(e)}")

    with st.expander("Load or save a model file"):
        model_path = st.text_input("Model File", value="model.json")
        col_load, col_save = st.columns(2)
        with col_load:
            if st.button("Load Model"):
                try:
                    st.session_state.model = load_model(Path(model_path))
                    st.session_state.pop("demos", None)
                    st.success(f"✅ Loaded {model_path}")
                except Exception as e:
                    st.error(f"❌ Error: {str(e)}")
        with col_save:
            if st.button("Save Model", disabled="model" not in st.session_state):
                save_model(st.session_state.model, Path(model_path))
                st.success(f"✅ Saved {model_path}")

    if "model" not in st.session_state:
        return

    bundle = st.session_state.model
    joint = bundle.joint

    st.divider()
    st.subheader("📋 Fitted Model")
    col_a, col_b, col_c, col_d = st.columns(4)
    with col_a:
        st.metric("Components", joint.n_components)
    with col_b:
        st.metric("Frames", joint.n_frames)
    with col_c:
        st.metric("EM Iterations", len(joint.log_likelihood))
        if not joint.converged:
            st.caption("⚠️ Stopped at the iteration cap")
    with col_d:
        final_ll = joint.log_likelihood[-1] if joint.log_likelihood else float("nan")
        st.metric("Log-Likelihood / Sample", f"{final_ll:.3f}")

    col_e, col_f = st.columns(2)

    with col_e:
        if "demos" in st.session_state:
            fig = go.Figure()
            for demo in st.session_state.demos.demonstrations:
                fig.add_trace(
                    go.Scatter(
                        x=demo.global_trajectory[:, 0],
                        y=demo.global_trajectory[:, 1],
                        mode="lines",
                        line=dict(width=1, color="#1f77b4"),
                        showlegend=False,
                    )
                )
            fig.update_layout(
                title="Demonstrations (top view)",
                xaxis_title="x (m)",
                yaxis_title="y (m)",
                height=400,
            )
            st.plotly_chart(fig, use_container_width=True)

    with col_f:
        if joint.log_likelihood:
            fig = go.Figure(
                go.Scatter(
                    y=joint.log_likelihood,
                    mode="lines+markers",
                    line=dict(color="#2ca02c", width=2),
                )
            )
            fig.update_layout(
                title="EM Convergence",
                xaxis_title="Iteration",
                yaxis_title="Mean log-likelihood",
                height=400,
            )
            st.plotly_chart(fig, use_container_width=True)


if __name__ == "__main__":
    render()
