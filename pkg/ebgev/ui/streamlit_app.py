import streamlit as st
import os
from pathlib import Path

from ebgev.config.config import Config, RunConfig
from ebgev.exceptions import EbgevError
from ebgev.orchestration.graph import run_fit_pipeline
from ebgev.ui import figures
from ebgev.utils.outputs import (
    CHAIN_TRACE_COLUMNS,
    DENSITY_GRID_COLUMNS,
    RETURN_CURVE_COLUMNS,
    read_csv,
    read_json,
)


def load_fit_outputs(run_dir):
    """Read the files a fit run wrote; missing optional files come back as None."""
    run_dir = Path(run_dir)
    outputs = {
        "summary": read_json(run_dir / "summary.json"),
        "return_curve": read_csv(run_dir / "return_curve.csv", RETURN_CURVE_COLUMNS),
        "density_grid": read_csv(run_dir / "density_grid.csv", DENSITY_GRID_COLUMNS),
        "trace": None,
        "maxima": None,
    }
    if (run_dir / "chain_trace.csv").exists():
        outputs["trace"] = read_csv(run_dir / "chain_trace.csv", CHAIN_TRACE_COLUMNS)
    if (run_dir / "annual_maxima.csv").exists():
        outputs["maxima"] = read_csv(run_dir / "annual_maxima.csv")
    return outputs


def load_study_outputs(study_dir):
    study_dir = Path(study_dir)
    return {
        "concentration": read_csv(study_dir / "concentration.csv"),
        "coverage": read_csv(study_dir / "coverage.csv"),
        "manifest": read_json(study_dir / "manifest.json"),
    }


def render_fit_tab():
    """Runs or reloads a fit and shows its summaries."""
    st.header("Posterior fit")

    with st.form("fit_form"):
        input_path = st.text_input("Input series (CSV year,value or HURDAT2)", value=str(Config.HURDAT_PATH or ""))
        input_format = st.selectbox("Format", ["csv", "hurdat"])
        block_size = st.number_input("Observations per block (m)", min_value=1, value=1)
        col1, col2 = st.columns(2)
        n_iter = col1.number_input("Iterations", min_value=100, value=8000, step=1000)
        burn_in = col2.number_input("Burn-in", min_value=0, value=5000, step=1000)
        run_dir = st.text_input("Output directory", value=str(Config.OUTPUT_DIR / "fit"))
        submitted = st.form_submit_button("Run fit")

    if submitted:
        config = RunConfig().with_overrides(
            input_path=Path(input_path),
            input_format=input_format,
            block_size=int(block_size),
            n_iter=int(n_iter),
            burn_in=int(burn_in),
            output_dir=Path(run_dir),
        )
        with st.spinner("Sampling the posterior..."):
            try:
                run_fit_pipeline(config)
                st.success(f"Fit written to {run_dir}")
            except EbgevError as e:
                st.error(f"Fit failed: {e}")

    if not os.path.exists(os.path.join(run_dir, "summary.json")):
        st.info("No fit outputs in this directory yet.")
        return

    try:
        outputs = load_fit_outputs(run_dir)
    except EbgevError as e:
        st.error(f"Error loading fit outputs: {e}")
        return

    summary = outputs["summary"]
    col1, col2, col3 = st.columns(3)
    col1.metric("Block maxima (k)", summary["k"])
    col2.metric("Acceptance rate", f"{summary['chain']['accept_rate']:.3f}")
    col3.metric("Retained draws", summary["chain"]["n_draws"])

    st.subheader("Estimates")
    st.dataframe(figures.summary_table(summary))

    st.subheader("Marginal posteriors")
    for name in ("gamma", "mu", "sigma"):
        st.plotly_chart(figures.marginal_density_figure(outputs["density_grid"], name, summary["mle"][name]))

    st.subheader("Return levels")
    st.plotly_chart(figures.return_level_figure(outputs["return_curve"]))

    st.subheader("Predictive density")
    st.plotly_chart(figures.predictive_density_figure(outputs["density_grid"], outputs["maxima"]))

    if outputs["trace"] is not None:
        st.subheader("Chain traces")
        column = st.selectbox("Trace", ["gamma", "mu", "sigma", "log_post", "kappa"])
        st.plotly_chart(figures.trace_figure(outputs["trace"], column))


def render_study_tab():
    """Shows the concentration and coverage tables of a simulation study."""
    st.header("Simulation study")
    study_dir = st.text_input("Study directory", value=str(Config.OUTPUT_DIR / "study"))

    if not os.path.exists(os.path.join(study_dir, "manifest.json")):
        st.info("Run `python -m ebgev simulate` to produce a study.")
        return

    try:
        study = load_study_outputs(study_dir)
    except EbgevError as e:
        st.error(f"Error loading study outputs: {e}")
        return

    scenarios = study["manifest"].get("scenarios", [])
    aborted = [s for s in scenarios if s.get("status") != "ok"]
    col1, col2 = st.columns(2)
    col1.metric("Scenarios", len(scenarios))
    col2.metric("Aborted", len(aborted))

    st.subheader("Concentration")
    st.dataframe(study["concentration"])
    if not study["concentration"].empty:
        st.plotly_chart(figures.concentration_figure(study["concentration"]))

    st.subheader("Coverage")
    coverage = study["coverage"]
    if coverage.empty:
        st.info("No coverage rows.")
        return
    model = st.selectbox("Model", sorted(coverage["model"].unique()))
    st.plotly_chart(figures.coverage_figure(coverage, model))
    st.dataframe(coverage[coverage["model"] == model])


def render_dashboard():
    st.title("Empirical-Bayes Extreme Values")

    with st.sidebar:
        st.header("Settings")
        st.caption(f"Output root: {Config.OUTPUT_DIR}")
        st.caption(f"Default seed: {Config.DEFAULT_SEED}")

    tab1, tab2 = st.tabs(["Fit", "Simulation Study"])
    with tab1:
        render_fit_tab()
    with tab2:
        render_study_tab()
