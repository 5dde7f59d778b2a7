import streamlit as st
import sys
import os

# Add the project root to sys.path to allow absolute imports
project_root = os.path.dirname(os.path.abspath(__file__))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from ebgev.logging_setup import configure_logging
from ebgev.config.config import Config
from ebgev.ui.streamlit_app import render_dashboard

# Page Config
st.set_page_config(
    page_title="EB-GEV",
    page_icon="🌀",
    layout="wide"
)


def main():
    configure_logging(Config.LOG_LEVEL)
    render_dashboard()


if __name__ == "__main__":
    main()
