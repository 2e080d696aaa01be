"""Design sweeps: simulate, fit and derive metrics for a series of gratings."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .cavity import CouplingRegime, linewidth_metrics
from .errors import CavityError, DidNotConverge, InsufficientData, InvalidRange
from .fitting import fit_kappa_sc, fit_lorentzian_dip, locate_dip
from .grating import GratingDesign, simulate_spectrum

SWEEP_HALF_WIDTH = 4.0   # nm either side of the Bragg wavelength
SWEEP_POINTS = 4001


@dataclass(frozen=True)
class SweepRow:
    n_in: int
    n_out: int
    polarization: str
    tuning_position: float
    lambda0: float
    delta_lambda: float
    r0: float
    kappa: float
    q: float
    regime: CouplingRegime | None
    fit_converged: bool
    t0: float = math.nan


@dataclass(frozen=True)
class CriticalPoint:
    n_in: int
    n_out: int
    kappa: float
    r0: float
    regime: CouplingRegime | None
    index: int


def _slat_counts(start, stop, step):
    if any(int(v) != v for v in (start, stop, step)):
        raise InvalidRange("range bounds and step must be integers")
    if step < 1:
        raise InvalidRange(f"step must be >= 1, got {step}")
    if start < 0 or stop < start:
        raise InvalidRange(f"need 0 <= start <= stop, got {start}..{stop}")
    return list(range(int(start), int(stop) + 1, int(step)))


def evaluate_design(design: GratingDesign, polarization: str = "x",
                    tuning_position: float = 0.0, *,
                    half_width: float = SWEEP_HALF_WIDTH,
                    points: int = SWEEP_POINTS) -> SweepRow:
    """One sweep row: spectrum around the Bragg wavelength, dip fit, metrics.

    Fit failures are reported through ``fit_converged=False`` and NaN fields.
    """
    centre = design.bragg_wavelength(polarization, tuning_position)
    spectrum = simulate_spectrum(design, polarization, centre - half_width,
                                 centre + half_width, points, tuning_position)
    common = dict(n_in=design.n_in_slats, n_out=design.n_out_slats,
                  polarization=spectrum.polarization, tuning_position=float(tuning_position))
    try:
        guess = locate_dip(spectrum)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DidNotConverge)
            fit = fit_lorentzian_dip(spectrum, guess)
        kappa, q = linewidth_metrics(fit.lambda0, fit.delta_lambda)
    except CavityError:
        nan = math.nan
        return SweepRow(**common, lambda0=nan, delta_lambda=nan, r0=nan, kappa=nan,
                        q=nan, regime=None, fit_converged=False)
    t0 = float(np.interp(fit.lambda0, spectrum.wavelength, spectrum.transmittance))
    return SweepRow(**common, lambda0=fit.lambda0, delta_lambda=fit.delta_lambda,
                    r0=fit.r0, kappa=kappa, q=q, regime=None,
                    fit_converged=fit.converged, t0=t0)


def _run_rows(jobs, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: evaluate_design(*job), jobs))
    return [evaluate_design(*job) for job in jobs]


def classify_rows(rows: list[SweepRow]) -> list[SweepRow]:
    """Attach regime labels using one loss rate fitted to the rows' own (kappa, R0)."""
    usable = [i for i, r in enumerate(rows) if r.fit_converged and math.isfinite(r.kappa)]
    if not usable:
        return list(rows)
    try:
        coupling = fit_kappa_sc([(rows[i].kappa, min(max(rows[i].r0, 0.0), 1.0))
                                 for i in usable])
    except CavityError:
        return list(rows)
    out = list(rows)
    for i, point in zip(usable, coupling.points):
        out[i] = replace(rows[i], regime=point.regime)
    return out


def sweep_input_slats(design: GratingDesign, start: int = 70, stop: int = 240,
                      step: int = 10, polarization: str = "x", *,
                      workers: int | None = None) -> list[SweepRow]:
    """Vary the input-mirror slat count at the design's output count."""
    jobs = [(replace(design, n_in_slats=n), polarization, 0.0)
            for n in _slat_counts(start, stop, step)]
    return classify_rows(_run_rows(jobs, workers))


def sweep_output_slats(design: GratingDesign, start: int = 150, stop: int = 400,
                       step: int = 10, polarization: str = "x", *,
                       workers: int | None = None) -> list[SweepRow]:
    """Vary the output-mirror slat count at the design's input count."""
    jobs = [(replace(design, n_out_slats=n), polarization, 0.0)
            for n in _slat_counts(start, stop, step)]
    return classify_rows(_run_rows(jobs, workers))


def tuning_scan(design: GratingDesign, positions, polarization: str = "x", *,
                workers: int | None = None) -> list[SweepRow]:
    """One row per mounting position along a chirped grating (um)."""
    positions = [float(p) for p in positions]
    if not positions:
        raise InvalidRange("no tuning positions given")
    for p in positions:
        design.local_period(p)  # raises TuningOutOfRange
    jobs = [(design, polarization, p) for p in positions]
    return classify_rows(_run_rows(jobs, workers))


def find_critical_coupling(rows: list[SweepRow]) -> CriticalPoint:
    """Row with the lowest fitted R0; ties go to the larger input slat count."""
    usable = [(i, r) for i, r in enumerate(rows) if r.fit_converged and math.isfinite(r.r0)]
    if len(usable) < 3:
        raise InsufficientData(f"need at least 3 converged rows, got {len(usable)}")
    i, best = min(usable, key=lambda item: (item[1].r0, -item[1].n_in))
    return CriticalPoint(best.n_in, best.n_out, best.kappa, best.r0, best.regime, i)
