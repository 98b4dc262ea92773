"""Streamlit app for the oscillating-grasp controllers."""
