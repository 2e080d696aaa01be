"""JSON report documents.  Every number is written as ``{"value", "unit"}``."""

from __future__ import annotations

from datetime import datetime, timezone

from . import __version__
from .cavity import linewidth_metrics, scattering_metrics
from .files import quantity, sig6


def provenance(inputs, timestamp: bool = True) -> dict:
    block = {"inputs": [str(p) for p in inputs], "tool": "onfcavity",
             "tool_version": __version__}
    if timestamp:
        block["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return block


def fit_document(fit, inputs=(), timestamp=True) -> dict:
    kappa, q = linewidth_metrics(fit.lambda0, fit.delta_lambda)
    sigma = fit.uncertainties
    units = {"lambda0": "nm", "delta_lambda": "nm", "r0": "dimensionless",
             "background": "dimensionless"}
    return {
        "kind": "lorentzian_dip_fit",
        "resonance": {name: quantity(getattr(fit, name), unit) for name, unit in units.items()},
        "uncertainties": {name: quantity(sigma[name], unit) for name, unit in units.items()},
        "kappa": quantity(kappa, "GHz"),
        "q": quantity(q, "dimensionless"),
        "residual_rms": quantity(fit.residual_rms, "dimensionless"),
        "iterations": quantity(fit.iterations, "count"),
        "converged": fit.converged,
        "window": {"lower": quantity(fit.window[0], "nm"),
                   "upper": quantity(fit.window[1], "nm")},
        "provenance": provenance(inputs, timestamp),
    }


def coupling_document(coupling, inputs=(), timestamp=True) -> dict:
    return {
        "kind": "coupling_fit",
        "kappa_sc": quantity(coupling.kappa_sc, "GHz"),
        "kappa_sc_uncertainty": quantity(coupling.kappa_sc_uncertainty, "GHz"),
        "residual_rms": quantity(coupling.residual_rms, "dimensionless"),
        "points": [{"kappa": quantity(p.kappa, "GHz"),
                    "r0_observed": quantity(p.r0_observed, "dimensionless"),
                    "r0_predicted": quantity(p.r0_predicted, "dimensionless"),
                    "regime": p.regime.value} for p in coupling.points],
        "provenance": provenance(inputs, timestamp),
    }


def value_of(field):
    return field["value"] if isinstance(field, dict) else field


def analysis_document(kappa_sc, lambda0, length, *, mode="x", kappa_sc_uncertainty=None,
                      resonance=None, coupling=None, inputs=(), timestamp=True) -> dict:
    """Loss-rate and figures-of-merit summary for one mode.

    ``resonance`` is an optional ``(lambda0, delta_lambda, r0)`` triple; when
    present the loaded linewidth and Q are reported alongside.
    """
    q_sc, finesse, loss = scattering_metrics(kappa_sc, lambda0, length)
    entry = {
        "kappa_sc": quantity(kappa_sc, "GHz"),
        "cavity_length": quantity(length, "um"),
        "figures_of_merit": {
            "q_sc": quantity(q_sc, "dimensionless"),
            "finesse_sc": quantity(finesse, "dimensionless"),
            "loss_one_pass": quantity(100.0 * loss, "%"),
        },
    }
    if kappa_sc_uncertainty is not None:
        entry["kappa_sc_uncertainty"] = quantity(kappa_sc_uncertainty, "GHz")
    if resonance is not None:
        lam0, width, r0 = resonance
        kappa, q = linewidth_metrics(lam0, width)
        entry["resonance"] = {"lambda0": quantity(lam0, "nm"),
                              "delta_lambda": quantity(width, "nm"),
                              "r0": quantity(r0, "dimensionless")}
        entry["figures_of_merit"]["kappa"] = quantity(kappa, "GHz")
        entry["figures_of_merit"]["q"] = quantity(q, "dimensionless")
    else:
        entry["resonance"] = {"lambda0": quantity(lambda0, "nm")}
    if coupling is not None:
        entry["coupling"] = {
            "kappa_sc": coupling["kappa_sc"],
            "kappa_sc_uncertainty": coupling["kappa_sc_uncertainty"],
            "points": quantity(len(coupling.get("points", [])), "count"),
        }
    return {"kind": "analysis_report", "modes": {mode: entry},
            "provenance": provenance(inputs, timestamp)}


__all__ = ["analysis_document", "coupling_document", "fit_document", "provenance",
           "sig6", "value_of"]
