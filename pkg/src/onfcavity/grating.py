"""1D effective-index transfer-matrix model of a defect-mode grating on a nanofiber.

The slat-covered fiber segments are treated as layers of index
``base_index + index_contrast`` (plus an absorptive part standing in for slat
scattering) and the bare segments as ``base_index``.  Waves are scalar and at
normal incidence; the bare fiber continues on both sides as the ambient medium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import (InvalidDesign, InvalidInput, NoBandFound, NumericalOverflow,
                     SingularStack, TuningOutOfRange)

POLARIZATIONS = ("x", "y")

DEFAULT_BRAGG_WAVELENGTH = 640.0   # nm, centre of the simulated reflection band
DEFAULT_PERIOD = 252.0             # nm
DEFAULT_DUTY_CYCLE = 0.2
# Calibrated so that the linewidth falls from ~400 GHz to ~80 GHz between
# N_in = 100 and 220 slats.
DEFAULT_INDEX_CONTRAST = 0.022
# Calibrated so the loss floor of the x mode sits near 43 GHz.
DEFAULT_SLAT_LOSS = 3.0e-4
DEFAULT_Y_LOSS_MULTIPLIER = 1.25
DEFAULT_SPECTRUM_RANGE = (600.0, 700.0)
DEFAULT_SPECTRUM_POINTS = 4001
MIN_GRID_WAVELENGTH = 400.0
MAX_GRID_WAVELENGTH = 1000.0


def calibrate_base_index(target_bragg_wavelength: float, period: float,
                         duty_cycle: float = 0.0, index_contrast: float = 0.0) -> float:
    """Bare-segment index that puts the first-order Bragg band at the target.

    With the default zero contrast this is simply ``lambda_B / (2 period)``.
    Passing the design's duty cycle and contrast subtracts the slat
    contribution so that the period-averaged index meets the Bragg condition.
    """
    if not (target_bragg_wavelength > 0 and period > 0):
        raise InvalidInput("target wavelength and period must be > 0")
    if not (0.0 <= duty_cycle < 1.0) or index_contrast < 0:
        raise InvalidInput("duty_cycle must lie in [0, 1) and index_contrast be >= 0")
    return target_bragg_wavelength / (2.0 * period) - duty_cycle * index_contrast


DEFAULT_BASE_INDEX = calibrate_base_index(
    DEFAULT_BRAGG_WAVELENGTH, DEFAULT_PERIOD, DEFAULT_DUTY_CYCLE, DEFAULT_INDEX_CONTRAST)
# y-mode index offset reproducing a 1.05 nm x/y dip separation at 640 nm
DEFAULT_BIREFRINGENT_SPLIT = (DEFAULT_BRAGG_WAVELENGTH / (2 * DEFAULT_PERIOD)) * 1.05 / 640.0


@dataclass(frozen=True)
class GratingDesign:
    """Grating and nanofiber parameters.

    Lengths are in nm except ``grating_length`` (um); ``chirp_rate`` is nm of
    period change per um along the grating.  ``defect_width`` of ``None``
    means 1.5 periods.
    """

    fiber_diameter: float = 510.0
    period: float = DEFAULT_PERIOD
    duty_cycle: float = DEFAULT_DUTY_CYCLE
    n_in_slats: int = 120
    n_out_slats: int = 420
    base_index: float = DEFAULT_BASE_INDEX
    index_contrast: float = DEFAULT_INDEX_CONTRAST
    birefringent_split: float = DEFAULT_BIREFRINGENT_SPLIT
    slat_loss: float = DEFAULT_SLAT_LOSS
    y_loss_multiplier: float = DEFAULT_Y_LOSS_MULTIPLIER
    chirp_rate: float = 0.02
    grating_length: float = 500.0
    defect_width: float | None = None

    def __post_init__(self):
        def bad(name, why):
            err = InvalidDesign(f"{name}: {why} (got {getattr(self, name)!r})")
            err.field = name
            raise err

        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                bad(f.name, "must be a number")
            if not math.isfinite(value):
                bad(f.name, "must be finite")
        for name in ("n_in_slats", "n_out_slats"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                bad(name, "must be a non-negative integer")
            object.__setattr__(self, name, int(value))
        if self.fiber_diameter <= 0:
            bad("fiber_diameter", "must be > 0")
        if self.period <= 0:
            bad("period", "must be > 0")
        if not 0 < self.duty_cycle < 1:
            bad("duty_cycle", "must lie strictly between 0 and 1")
        if self.base_index <= 1:
            bad("base_index", "must be > 1")
        if self.index_contrast < 0:
            bad("index_contrast", "must be >= 0")
        if self.slat_loss < 0:
            bad("slat_loss", "must be >= 0")
        if self.y_loss_multiplier < 0:
            bad("y_loss_multiplier", "must be >= 0")
        if self.grating_length <= 0:
            bad("grating_length", "must be > 0")
        if self.defect_width is not None and self.defect_width <= 0:
            bad("defect_width", "must be > 0")

    @property
    def slat_width(self) -> float:
        return self.duty_cycle * self.period

    @property
    def resolved_defect_width(self) -> float:
        return 1.5 * self.period if self.defect_width is None else self.defect_width

    def local_period(self, tuning_position: float = 0.0) -> float:
        half = 0.5 * self.grating_length
        if not math.isfinite(tuning_position) or abs(tuning_position) > half:
            raise TuningOutOfRange(
                f"tuning position {tuning_position} um lies outside +/-{half} um")
        local = self.period + self.chirp_rate * tuning_position
        if local <= 0:
            raise InvalidDesign(f"local period {local} nm is not positive")
        return local

    def mode_index(self, polarization: str = "x") -> float:
        pol = _check_polarization(polarization)
        return self.base_index + (self.birefringent_split if pol == "y" else 0.0)

    def mode_loss(self, polarization: str = "x") -> float:
        pol = _check_polarization(polarization)
        return self.slat_loss * (self.y_loss_multiplier if pol == "y" else 1.0)

    def mean_index(self, polarization: str = "x") -> float:
        return self.mode_index(polarization) + self.duty_cycle * self.index_contrast

    def bragg_wavelength(self, polarization: str = "x", tuning_position: float = 0.0) -> float:
        """First-order Bragg wavelength ``2 * n_mean * period_local``, nm."""
        return 2.0 * self.mean_index(polarization) * self.local_period(tuning_position)

    def with_(self, **changes) -> "GratingDesign":
        return replace(self, **changes)


def _check_polarization(polarization):
    pol = str(polarization).lower()
    if pol not in POLARIZATIONS:
        raise InvalidInput(f"polarization must be 'x' or 'y', got {polarization!r}")
    return pol


@dataclass(frozen=True)
class LayerStack:
    """Finite layers between semi-infinite media.

    Light enters from ``ambient_index`` and leaves into ``exit_index``, which
    defaults to the ambient medium.
    """

    thickness: np.ndarray
    index: np.ndarray
    ambient_index: float
    polarization: str = "x"
    tuning_position: float = 0.0
    local_period: float | None = None
    exit_index: float | None = None

    def __post_init__(self):
        thickness = np.asarray(self.thickness, dtype=float)
        index = np.asarray(self.index, dtype=complex)
        if thickness.shape != index.shape or thickness.ndim != 1:
            raise InvalidInput("thickness and index must be 1-D arrays of equal length")
        if np.any(thickness <= 0) or not np.all(np.isfinite(thickness)):
            raise SingularStack("every layer thickness must be finite and > 0")
        object.__setattr__(self, "thickness", thickness)
        object.__setattr__(self, "index", index)

    def __len__(self):
        return self.thickness.size


def build_stack(design: GratingDesign, polarization: str = "x",
                tuning_position: float = 0.0) -> LayerStack:
    """Lay out input mirror, defect and output mirror as explicit layers.

    Each unit cell is a slat followed by a bare gap; every length scales with
    the local period at ``tuning_position``.
    """
    pol = _check_polarization(polarization)
    period = design.local_period(tuning_position)
    scale = period / design.period
    n_low = design.mode_index(pol)
    n_slat = n_low + design.index_contrast + 1j * design.mode_loss(pol)

    cell_t = [design.duty_cycle * period, (1.0 - design.duty_cycle) * period]
    cell_n = [n_slat, n_low]
    thickness = (cell_t * design.n_in_slats + [design.resolved_defect_width * scale]
                 + cell_t * design.n_out_slats)
    index = cell_n * design.n_in_slats + [n_low] + cell_n * design.n_out_slats
    return LayerStack(np.array(thickness), np.array(index, dtype=complex),
                      ambient_index=n_low, polarization=pol,
                      tuning_position=float(tuning_position), local_period=period)


def stack_response(stack: LayerStack, wavelength):
    """Complex ``(r, t)`` amplitudes for light incident from the first layer side.

    Uses the normal-incidence characteristic-matrix method.  ``wavelength`` may
    be a scalar or an array (nm); the outputs have the same shape.  The power
    transmittance is ``exit_index / ambient_index * |t|**2``.
    """
    lam = np.asarray(wavelength, dtype=float)
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise InvalidInput("wavelengths must be finite and > 0")
    flat = lam.reshape(-1)
    k0 = 2.0 * np.pi / flat

    m11 = np.ones(flat.shape, complex)
    m12 = np.zeros(flat.shape, complex)
    m21 = np.zeros(flat.shape, complex)
    m22 = np.ones(flat.shape, complex)
    # identical consecutive layers are common, so cache per (n, d)
    cache = {}
    for n, d in zip(stack.index, stack.thickness):
        key = (n, d)
        if key not in cache:
            delta = k0 * n * d
            cos, sin = np.cos(delta), np.sin(delta)
            cache[key] = (cos, -1j * sin / n, -1j * n * sin)
        cos, a12, a21 = cache[key]
        m11, m12, m21, m22 = (m11 * cos + m12 * a21, m11 * a12 + m12 * cos,
                              m21 * cos + m22 * a21, m21 * a12 + m22 * cos)

    eta = stack.ambient_index
    eta_exit = eta if stack.exit_index is None else stack.exit_index
    b = m11 + m12 * eta_exit
    cc = m21 + m22 * eta_exit
    denom = eta * b + cc
    if not np.all(np.isfinite(denom)) or np.any(denom == 0):
        raise NumericalOverflow("characteristic matrix lost finiteness")
    r = (eta * b - cc) / denom
    t = 2.0 * eta / denom
    if lam.ndim == 0:
        return complex(r[0]), complex(t[0])
    return r.reshape(lam.shape), t.reshape(lam.shape)


@dataclass(frozen=True)
class Spectrum:
    """Reflectivity (and optionally transmittance) on a strictly increasing grid, nm."""

    wavelength: np.ndarray
    reflectivity: np.ndarray
    transmittance: np.ndarray | None = None
    polarization: str | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.wavelength, dtype=float)
        refl = np.asarray(self.reflectivity, dtype=float)
        if lam.ndim != 1 or lam.shape != refl.shape:
            raise InvalidInput("wavelength and reflectivity must be 1-D and equally long")
        if lam.size and (not np.all(np.isfinite(lam)) or np.any(np.diff(lam) <= 0)):
            raise InvalidInput("wavelength grid must be finite and strictly increasing")
        refl = _unit_interval(refl, "reflectivity")
        trans = self.transmittance
        if trans is not None:
            trans = _unit_interval(np.asarray(trans, dtype=float), "transmittance")
            if trans.shape != lam.shape:
                raise InvalidInput("transmittance must match the wavelength grid")
            if np.any(refl + trans > 1.0 + 1e-9):
                raise InvalidInput("R + T exceeds 1")
        object.__setattr__(self, "wavelength", lam)
        object.__setattr__(self, "reflectivity", refl)
        object.__setattr__(self, "transmittance", trans)

    def __len__(self):
        return self.wavelength.size

    def window(self, lo: float, hi: float) -> "Spectrum":
        sel = (self.wavelength >= lo) & (self.wavelength <= hi)
        trans = None if self.transmittance is None else self.transmittance[sel]
        return Spectrum(self.wavelength[sel], self.reflectivity[sel], trans, self.polarization)


def _unit_interval(values, name, slack=1e-9):
    if not np.all(np.isfinite(values)):
        raise InvalidInput(f"{name} contains non-finite values")
    if np.any(values < -slack) or np.any(values > 1 + slack):
        raise InvalidInput(f"{name} outside [0, 1]")
    return np.clip(values, 0.0, 1.0)


def simulate_spectrum(design: GratingDesign, polarization: str = "x",
                      start: float = DEFAULT_SPECTRUM_RANGE[0],
                      stop: float = DEFAULT_SPECTRUM_RANGE[1],
                      points: int = DEFAULT_SPECTRUM_POINTS,
                      tuning_position: float = 0.0) -> Spectrum:
    if not (MIN_GRID_WAVELENGTH <= start < stop <= MAX_GRID_WAVELENGTH):
        raise InvalidInput(
            f"grid must satisfy {MIN_GRID_WAVELENGTH} <= start < stop <= {MAX_GRID_WAVELENGTH} nm")
    if int(points) != points or points < 2:
        raise InvalidInput("a spectrum needs at least 2 points")
    stack = build_stack(design, polarization, tuning_position)
    lam = np.linspace(start, stop, int(points))
    r, t = stack_response(stack, lam)
    refl = np.abs(r) ** 2
    trans = np.abs(t) ** 2
    return Spectrum(lam, refl, trans, stack.polarization,
                    metadata={"tuning_position": stack.tuning_position,
                              "local_period": stack.local_period})


@dataclass(frozen=True)
class StopBand:
    center: float
    edges: tuple[float, float]

    @property
    def width(self) -> float:
        return self.edges[1] - self.edges[0]


_MAX_FLICKER_GAP = 2   # grid points
_MIN_RUN_POINTS = 3


def _runs(mask):
    """(start, stop) index pairs of contiguous True runs, stop inclusive."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    change = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b) - 1) for a, b in zip(change[::2], change[1::2])]


def locate_stopband(spectrum: Spectrum, threshold: float = 0.5) -> StopBand:
    """Widest high-reflectivity interval, with ``R >= threshold * max(R)``.

    Gaps of up to two grid points are closed and runs shorter than three
    points dropped, so noise near the threshold does not fragment the band.
    A resonance dip splits the band into two halves; adjacent runs are
    rejoined when the gap between them is narrower than both neighbours and
    both neighbours peak above the midpoint of threshold and maximum, which
    keeps side lobes out of the band.
    """
    if not 0 < threshold < 1:
        raise InvalidInput("threshold must lie in (0, 1)")
    lam, refl = spectrum.wavelength, spectrum.reflectivity
    if refl.size == 0 or refl.max() < 0.05:
        raise NoBandFound("peak reflectivity below 0.05")
    peak = refl.max()
    runs = _runs(refl >= threshold * peak)
    # debounce noise flicker at the threshold crossings
    closed = [runs[0]]
    for a, b in runs[1:]:
        if a - closed[-1][1] <= _MAX_FLICKER_GAP + 1:
            closed[-1] = (closed[-1][0], b)
        else:
            closed.append((a, b))
    runs = [run for run in closed if run[1] - run[0] + 1 >= _MIN_RUN_POINTS] or closed
    strong = 0.5 * (1.0 + threshold) * peak

    merged = True
    while merged and len(runs) > 1:
        merged = False
        for i in range(len(runs) - 1):
            (a0, a1), (b0, b1) = runs[i], runs[i + 1]
            gap = lam[b0] - lam[a1]
            both_strong = refl[a0:a1 + 1].max() >= strong and refl[b0:b1 + 1].max() >= strong
            if both_strong and gap < min(lam[a1] - lam[a0], lam[b1] - lam[b0]):
                runs[i:i + 2] = [(a0, b1)]
                merged = True
                break

    lo, hi = max(runs, key=lambda run: lam[run[1]] - lam[run[0]])
    edges = (float(lam[lo]), float(lam[hi]))
    return StopBand(0.5 * (edges[0] + edges[1]), edges)
