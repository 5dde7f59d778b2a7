"""Plotly figures for fit and study outputs. Pure functions of the written tables."""

import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

PARAM_LABELS = {"gamma": "shape γ", "mu": "location μ", "sigma": "scale σ"}


def summary_table(summary: dict) -> pd.DataFrame:
    """Point estimate, posterior mean and both intervals per parameter."""
    rows = []
    for name, entry in summary["parameters"].items():
        rows.append({
            "parameter": PARAM_LABELS.get(name, name),
            "mle": summary["mle"][name],
            "posterior_mean": entry["mean"],
            "sd": entry["sd"],
            "a_ci": f"[{entry['a_ci'][0]:.3f}, {entry['a_ci'][1]:.3f}]",
            "s_ci": f"[{entry['s_ci'][0]:.3f}, {entry['s_ci'][1]:.3f}]",
        })
    for entry in summary.get("return_levels", []):
        rows.append({
            "parameter": f"return level T={entry['period']:g}",
            "mle": entry.get("mle"),
            "posterior_mean": entry["mean"],
            "sd": entry["sd"],
            "a_ci": f"[{entry['a_ci'][0]:.3f}, {entry['a_ci'][1]:.3f}]",
            "s_ci": f"[{entry['s_ci'][0]:.3f}, {entry['s_ci'][1]:.3f}]",
        })
    return pd.DataFrame(rows)


def marginal_density_figure(density_grid: pd.DataFrame, quantity: str, mle: float | None = None) -> go.Figure:
    frame = density_grid[density_grid["quantity"] == quantity]
    fig = px.line(frame, x="x", y="density", title=f"Posterior density: {PARAM_LABELS.get(quantity, quantity)}")
    if mle is not None:
        fig.add_vline(x=mle, line_dash="dash", annotation_text="MLE")
    return fig


def return_level_figure(curve: pd.DataFrame) -> go.Figure:
    """Posterior-mean return levels on a log period axis with both credible bands."""
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=curve["period"], y=curve["a_upper"], line=dict(width=0), showlegend=False))
    fig.add_trace(go.Scatter(x=curve["period"], y=curve["a_lower"], fill="tonexty", line=dict(width=0),
                             name="A-CI", fillcolor="rgba(31,119,180,0.2)"))
    fig.add_trace(go.Scatter(x=curve["period"], y=curve["s_lower"], line=dict(dash="dot"), name="S-CI lower"))
    fig.add_trace(go.Scatter(x=curve["period"], y=curve["s_upper"], line=dict(dash="dot"), name="S-CI upper"))
    fig.add_trace(go.Scatter(x=curve["period"], y=curve["posterior_mean"], name="posterior mean"))
    fig.add_trace(go.Scatter(x=curve["period"], y=curve["predictive_quantile"], line=dict(dash="dash"),
                             name="predictive quantile"))
    if "mle" in curve.columns:
        fig.add_trace(go.Scatter(x=curve["period"], y=curve["mle"], line=dict(dash="dashdot"), name="MLE"))
    fig.update_xaxes(type="log", title="return period T")
    fig.update_yaxes(title="return level")
    fig.update_layout(title="Return-level curve")
    return fig


def predictive_density_figure(density_grid: pd.DataFrame, maxima: pd.DataFrame | None = None) -> go.Figure:
    frame = density_grid[density_grid["quantity"] == "predictive"]
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=frame["x"], y=frame["band_upper"], line=dict(width=0), showlegend=False))
    fig.add_trace(go.Scatter(x=frame["x"], y=frame["band_lower"], fill="tonexty", line=dict(width=0),
                             name="pointwise band", fillcolor="rgba(255,127,14,0.2)"))
    fig.add_trace(go.Scatter(x=frame["x"], y=frame["density"], name="predictive density"))
    if maxima is not None and len(maxima):
        fig.add_trace(go.Histogram(x=maxima["value"], histnorm="probability density", opacity=0.3,
                                   name="observed maxima"))
    fig.update_layout(title="Posterior predictive density")
    return fig


def trace_figure(trace: pd.DataFrame, column: str) -> go.Figure:
    return px.line(trace, x="iter", y=column, title=f"Chain trace: {PARAM_LABELS.get(column, column)}")


def coverage_figure(coverage: pd.DataFrame, model: str | None = None) -> go.Figure:
    """Coverage against k, one line per target and interval type."""
    frame = coverage if model is None else coverage[coverage["model"] == model]
    frame = frame.assign(series=frame["target"] + " " + frame["type"])
    fig = px.line(frame, x="k", y="coverage", color="series", markers=True,
                  title=f"Frequentist coverage{'' if model is None else ': ' + model}")
    return fig


def concentration_figure(concentration: pd.DataFrame) -> go.Figure:
    return px.line(concentration, x="k", y="P_k", color="model", markers=True,
                   title="Posterior mass in the shrinking neighbourhood")
