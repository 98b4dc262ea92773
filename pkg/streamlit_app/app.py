"""Oscillating Grasp - Streamlit App.

Main entrypoint with three tabs: model setup, single episodes and sweep results.
"""

import streamlit as st

# Page configuration
st.set_page_config(
    page_title="Oscillating Grasp",
    page_icon="🍎",
    layout="wide",
    initial_sidebar_state="expanded",
)

# Main title
st.title("🍎 Oscillating Grasp")
st.markdown(
    """
    Learn a grasp approach from demonstrations and execute it against a moving target:
    - Fit a task-parameterized mixture model to start- and end-frame demonstrations
    - Run InfLQR, SingleLQR or DualLQR against an oscillating goal
    - Inspect benchmark sweeps and the best control cost per method
    """
)

# Sidebar
with st.sidebar:
    st.header("Configuration")
    st.markdown(
        """
        **Controllers**

        - **InfLQR:** fused frame model, one-step gain every tick
        - **SingleLQR:** finite-horizon LQR in the end frame
        - **DualLQR:** one finite-horizon LQR per frame, fused by precision

        **Control cost:** R = I · 10^ρ

        **Accuracy:** share of final-approach ticks (end-frame Y < 5 cm)
        within 3 cm in X, 10 cm in Z and 0.07 rad per angle
        """
    )

# Create tabs
tab1, tab2, tab3 = st.tabs([
    "🧠 Model Setup",
    "🎯 Episode Viewer",
    "📊 Sweep Results",
])

# Import and render tab pages
with tab1:
    from pages import model_setup as model_page
    model_page.render()

with tab2:
    from pages import episode_viewer as episode_page
    episode_page.render()

with tab3:
    from pages import sweep_results as sweep_page
    sweep_page.render()
