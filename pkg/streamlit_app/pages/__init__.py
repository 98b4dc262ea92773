"""Tab pages of the Streamlit app."""
