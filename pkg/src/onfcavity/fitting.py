"""Resonance extraction: Lorentzian dip fits and loss-rate fits to R0 series."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .cavity import (DEFAULT_CRITICAL_TOLERANCE, CouplingRegime, classify_regime,
                     reflectivity_curve)
from .errors import (DegenerateFit, DegenerateWindow, DidNotConverge, EmptyInput,
                     InvalidInput, NoDipFound)
from .grating import Spectrum, locate_stopband

PARAM_NAMES = ("lambda0", "delta_lambda", "r0", "background")
INSTRUMENT_RESOLUTION = 0.05  # nm, spectrum-analyzer boxcar
# The fit window is clipped to the flat top of the band; the half-maximum
# band includes the steep roll-off, which a flat background cannot follow.
FIT_BAND_THRESHOLD = 0.9
_BOXCAR_SAMPLES = 11
_EDGE_RUN = 5   # consecutive points below the level that mark a band edge


@dataclass(frozen=True)
class DipGuess:
    lambda0: float
    delta_lambda: float
    r0: float
    background: float

    def as_array(self):
        return np.array([self.lambda0, self.delta_lambda, self.r0, self.background])


@dataclass(frozen=True)
class LorentzianDipFit:
    lambda0: float
    delta_lambda: float
    r0: float
    background: float
    uncertainties: dict
    residual_rms: float
    converged: bool
    iterations: int
    window: tuple[float, float] = (math.nan, math.nan)
    objective_history: tuple = field(default=(), repr=False, compare=False)

    @property
    def params(self) -> np.ndarray:
        return np.array([self.lambda0, self.delta_lambda, self.r0, self.background])

    def model(self, wavelength):
        return lorentzian_dip(wavelength, *self.params)


@dataclass(frozen=True)
class CouplingPoint:
    kappa: float
    r0_observed: float
    r0_predicted: float
    regime: CouplingRegime


@dataclass(frozen=True)
class CouplingFit:
    kappa_sc: float
    kappa_sc_uncertainty: float
    points: tuple[CouplingPoint, ...]
    residual_rms: float


def lorentzian_dip(wavelength, lambda0, delta_lambda, r0, background):
    """``bg - (bg - r0) * h**2 / ((x - x0)**2 + h**2)`` with ``h`` the half width.

    Evaluated as ``r0 + (bg - r0) * u**2 / (u**2 + h**2)`` so that the value
    at ``x0`` is exactly ``r0``.
    """
    x = np.asarray(wavelength, dtype=float)
    h2 = (0.5 * delta_lambda) ** 2
    u2 = (x - lambda0) ** 2
    return r0 + (background - r0) * u2 / (u2 + h2)


def _jacobian(x, p):
    lambda0, width, r0, bg = p
    h = 0.5 * width
    u = x - lambda0
    denom = u * u + h * h
    shape = h * h / denom
    depth = bg - r0
    jac = np.empty((x.size, 4))
    jac[:, 0] = -depth * h * h * 2.0 * u / denom**2
    # d(shape)/dh = 2 h u^2 / denom^2, and dh/dwidth = 1/2
    jac[:, 1] = -depth * h * u * u / denom**2
    jac[:, 2] = shape
    jac[:, 3] = 1.0 - shape
    return jac


def _boxcar_offsets(resolution):
    """Gauss-Legendre nodes and weights for averaging over a boxcar."""
    if not resolution:
        return None
    nodes, weights = np.polynomial.legendre.leggauss(_BOXCAR_SAMPLES)
    return 0.5 * resolution * nodes, 0.5 * weights


def _model_and_jacobian(x, p, offsets):
    if offsets is None:
        return lorentzian_dip(x, *p), _jacobian(x, p)
    nodes, weights = offsets
    xs = (x[:, None] + nodes[None, :]).ravel()
    values = lorentzian_dip(xs, *p).reshape(x.size, -1) @ weights
    jac = np.einsum("ijk,j->ik", _jacobian(xs, p).reshape(x.size, -1, 4), weights)
    return values, jac


def locate_dip(spectrum: Spectrum, search_window: tuple[float, float] | None = None) -> DipGuess:
    """Initial guess for the deepest dip inside the band (or an explicit window)."""
    if search_window is None:
        band = locate_stopband(spectrum)
        lo, hi = band.edges
    else:
        lo, hi = sorted(map(float, search_window))
    lam, refl = spectrum.wavelength, spectrum.reflectivity
    inside = np.flatnonzero((lam >= lo) & (lam <= hi))
    if inside.size < 16:
        raise DegenerateWindow(f"only {inside.size} points between {lo} and {hi} nm")
    lam_w, refl_w = lam[inside], refl[inside]

    # Deepest interior local minimum: the roll-off at the band edges is
    # monotone towards the window boundary and must not count as the dip.
    interior = np.flatnonzero((refl_w[1:-1] <= refl_w[:-2]) & (refl_w[1:-1] <= refl_w[2:])) + 1
    if interior.size:
        i_min = int(interior[np.argmin(refl_w[interior])])
    else:
        i_min = int(np.argmin(refl_w))
    lambda0 = float(lam_w[i_min])
    r0 = float(refl_w[i_min])
    quarter = 0.125 * (lam_w[-1] - lam_w[0])
    outer = np.abs(lam_w - lambda0) > quarter
    background = float(np.median(refl_w[outer] if outer.any() else refl_w))
    if r0 > 0.95 * background:
        raise NoDipFound(f"minimum reflectivity {r0:.4g} is not below 95% of "
                         f"background {background:.4g}")

    half = 0.5 * (background + r0)
    left = _half_crossing(lam_w, refl_w, i_min, half, -1)
    right = _half_crossing(lam_w, refl_w, i_min, half, +1)
    step = float(np.median(np.diff(lam_w)))
    if left is None and right is None:
        width = 2.0 * step
    elif left is None:
        width = 2.0 * (right - lambda0)
    elif right is None:
        width = 2.0 * (lambda0 - left)
    else:
        width = right - left
    return DipGuess(lambda0, max(width, step), r0, background)


def _half_crossing(lam, refl, start, level, direction):
    i = start
    while 0 <= i + direction < lam.size:
        j = i + direction
        if refl[j] >= level:
            frac = (level - refl[i]) / (refl[j] - refl[i])
            return float(lam[i] + frac * (lam[j] - lam[i]))
        i = j
    return None


def _flat_top(lam, refl, guess, threshold):
    """Interval around the dip where the band stays above ``threshold * background``.

    Walks outward from the dip centre; an edge needs several consecutive
    points below the level, so noise cannot cut the interval short.
    """
    level = threshold * guess.background
    centre = int(np.clip(np.searchsorted(lam, guess.lambda0), 0, lam.size - 1))
    edges = []
    for direction, end in ((-1, 0), (1, lam.size - 1)):
        i = centre
        while i != end and refl[i] < level:
            i += direction
        last_high, run = i, 0
        while i != end and run < _EDGE_RUN:
            i += direction
            if refl[i] >= level:
                last_high, run = i, 0
            else:
                run += 1
        edges.append(lam[last_high] if run >= _EDGE_RUN else lam[end])
    return edges[0], edges[1]


def fit_lorentzian_dip(spectrum: Spectrum, guess: DipGuess | None = None, *,
                       max_iterations: int = 200,
                       relative_step_tolerance: float = 1e-8,
                       resolution: float | None = None,
                       band: tuple[float, float] | None = None,
                       band_threshold: float = FIT_BAND_THRESHOLD) -> LorentzianDipFit:
    """Damped least-squares fit of a Lorentzian dip on a flat background.

    The fit window is ``lambda0 +/- max(5 * width, 10 grid steps)`` around the
    guess, clipped to ``band``.  When ``band`` is not given it is the interval
    around the dip where R stays above ``band_threshold`` of the background.
    ``resolution`` (nm) convolves the model with an instrument boxcar.
    Uncertainties come from the Jacobian covariance scaled by the residual
    variance.  If the iteration cap is hit a :class:`DidNotConverge` warning
    is issued and the best iterate is returned with ``converged=False``.
    """
    if guess is None:
        guess = locate_dip(spectrum)
    p = guess.as_array().astype(float)
    if not np.all(np.isfinite(p)) or p[1] <= 0:
        raise InvalidInput(f"invalid initial guess {guess}")

    lam, refl = spectrum.wavelength, spectrum.reflectivity
    if lam.size < 2:
        raise DegenerateWindow("spectrum has fewer than 2 points")
    step = float(np.median(np.diff(lam)))
    half_window = max(5.0 * p[1], 10.0 * step)
    lo, hi = p[0] - half_window, p[0] + half_window
    if band is None:
        band = _flat_top(lam, refl, guess, band_threshold)
    lo, hi = max(lo, band[0]), min(hi, band[1])
    sel = (lam >= lo) & (lam <= hi)
    x, y = lam[sel], refl[sel]
    if x.size < 8:
        raise DegenerateWindow(f"fit window [{lo:.4f}, {hi:.4f}] nm holds {x.size} points")

    offsets = _boxcar_offsets(resolution)
    # Work in window-centred coordinates so that relative steps on lambda0
    # are not swamped by its absolute size.
    origin = p[0]
    x_c = x - origin
    q = p.copy()
    q[0] -= origin

    def evaluate(params):
        model, jac = _model_and_jacobian(x_c, params, offsets)
        resid = y - model
        return float(resid @ resid), resid, jac

    cost, resid, jac = evaluate(q)
    history = [cost]
    damping = 1e-3
    converged = False
    iterations = 0
    scale = np.maximum(np.abs(q), [step, step, 1e-3, 1e-3])

    for iterations in range(1, max_iterations + 1):
        jtj = jac.T @ jac
        grad = jac.T @ resid
        diag = np.diag(jtj).copy()
        diag[diag <= 0] = 1e-12
        accepted = False
        while damping < 1e12:
            try:
                delta = np.linalg.solve(jtj + damping * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            trial = q + delta
            trial[1] = abs(trial[1])
            trial[2] = max(trial[2], 0.0)
            if trial[1] == 0:
                damping *= 10.0
                continue
            new_cost, new_resid, new_jac = evaluate(trial)
            if new_cost <= cost:
                accepted = True
                break
            damping *= 10.0
        if not accepted:
            # no descent direction left at any damping: we are at the minimum
            converged = True
            break
        change = np.abs(trial - q)
        q, cost, resid, jac = trial, new_cost, new_resid, new_jac
        history.append(cost)
        damping = max(damping / 10.0, 1e-12)
        scale = np.maximum(np.abs(q), [step, step, 1e-3, 1e-3])
        if np.all(change <= relative_step_tolerance * scale):
            converged = True
            break

    if not converged:
        warnings.warn(f"Lorentzian fit stopped after {iterations} iterations",
                      DidNotConverge, stacklevel=2)

    dof = max(x.size - 4, 1)
    variance = cost / dof
    try:
        cov = np.linalg.pinv(jac.T @ jac) * variance
        sigma = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        sigma = np.full(4, np.inf)

    params = q.copy()
    params[0] += origin
    return LorentzianDipFit(
        lambda0=float(params[0]), delta_lambda=float(params[1]),
        r0=float(params[2]), background=float(params[3]),
        uncertainties=dict(zip(PARAM_NAMES, map(float, sigma))),
        residual_rms=math.sqrt(cost / x.size),
        converged=converged, iterations=iterations,
        window=(float(x[0]), float(x[-1])),
        objective_history=tuple(history),
    )


def synthesize_dip(lambda0: float, delta_lambda: float, r0: float, background: float,
                   wavelength, noise_sigma: float = 0.0, seed: int | None = 0) -> Spectrum:
    """Sample the Lorentzian dip model on a grid, with optional Gaussian noise.

    Noise comes from a private generator seeded by ``seed``; values are
    clipped to [0, 1].
    """
    if not (lambda0 > 0 and delta_lambda > 0):
        raise InvalidInput("lambda0 and delta_lambda must be > 0")
    if not 0 <= r0 <= background <= 1:
        raise InvalidInput("need 0 <= r0 <= background <= 1")
    if noise_sigma < 0:
        raise InvalidInput("noise_sigma must be >= 0")
    lam = np.asarray(wavelength, dtype=float)
    values = lorentzian_dip(lam, lambda0, delta_lambda, r0, background)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        values = values + rng.normal(0.0, noise_sigma, size=lam.shape)
    return Spectrum(lam, np.clip(values, 0.0, 1.0))


def _coupling_objective(kappa_sc, kappa, r0, weights):
    resid = r0 - reflectivity_curve(kappa, kappa_sc)
    return float(np.sum(weights * resid * resid))


def fit_kappa_sc(points, weights=None, *, branch: str = "over",
                 grid_points: int = 2000, xtol: float = 1e-7,
                 tolerance: float = DEFAULT_CRITICAL_TOLERANCE) -> CouplingFit:
    """Fit the single loss rate shared by a series of (kappa, R0) points.

    The objective is scanned on a log-spaced grid over ``(0, max kappa]``,
    every local minimum is refined, and the lowest is kept.  Exact ties (a
    single point has an over- and an under-coupled root) go to the smaller
    ``kappa_sc`` for ``branch="over"`` and to the larger for ``"under"``.
    """
    data = np.asarray(list(points), dtype=float)
    if data.size == 0:
        raise EmptyInput("no (kappa, r0) points given")
    if data.ndim != 2 or data.shape[1] != 2:
        raise InvalidInput("points must be (kappa, r0) pairs")
    kappa, r0 = data[:, 0], data[:, 1]
    if np.any(~np.isfinite(data)) or np.any(kappa <= 0):
        raise InvalidInput("every kappa must be finite and > 0")
    if weights is None:
        w = np.ones_like(kappa)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != kappa.shape or np.any(w < 0) or not np.any(w > 0):
            raise InvalidInput("weights must be non-negative, one per point")
        # uniform weights of any size collapse to exactly 1.0
        w = w / w.mean()
    if np.all(r0 == 1.0):
        raise DegenerateFit("all R0 equal 1; the loss rate is unconstrained")
    if branch not in ("over", "under"):
        raise InvalidInput("branch must be 'over' or 'under'")

    k_max = float(kappa.max())
    grid = np.geomspace(k_max * 1e-6, k_max, grid_points)
    resid = r0[None, :] - reflectivity_curve(kappa[None, :], grid[:, None])
    objective = (w[None, :] * resid * resid).sum(axis=1)
    if np.ptp(objective) <= 1e-15 * max(objective.max(), 1.0):
        raise DegenerateFit("objective is flat over the search range")

    candidates = []
    for i in range(grid.size):
        left = objective[i - 1] if i > 0 else np.inf
        right = objective[i + 1] if i + 1 < grid.size else np.inf
        if objective[i] <= left and objective[i] <= right:
            lo = grid[max(i - 1, 0)]
            hi = grid[min(i + 1, grid.size - 1)]
            res = minimize_scalar(_coupling_objective, bounds=(lo, hi), method="bounded",
                                  args=(kappa, r0, w), options={"xatol": xtol})
            best_x, best_f = (res.x, res.fun) if res.fun <= objective[i] else (grid[i], objective[i])
            candidates.append((float(best_f), float(best_x)))

    f_min = min(f for f, _ in candidates)
    tied = [x for f, x in candidates if f <= f_min + 1e-12 * max(1.0, f_min) + 1e-20]
    kappa_sc = min(tied) if branch == "over" else max(tied)
    f_best = _coupling_objective(kappa_sc, kappa, r0, w)

    # Gauss-Newton polish below the bracketing tolerance; steps only kept if they help
    for _ in range(5):
        res = r0 - reflectivity_curve(kappa, kappa_sc)
        slope = 4.0 / kappa * (1.0 - 2.0 * kappa_sc / kappa)
        denom = float(np.sum(w * slope * slope))
        if denom <= 0:
            break
        trial = kappa_sc - float(np.sum(w * slope * res)) / denom
        if not 0 < trial <= k_max:
            break
        f_trial = _coupling_objective(trial, kappa, r0, w)
        if f_trial >= f_best:
            break
        kappa_sc, f_best = trial, f_trial

    # Gauss-Newton curvature of the objective at the optimum
    derivative = -4.0 / kappa * (1.0 - 2.0 * kappa_sc / kappa)
    curvature = float(np.sum(w * derivative * derivative))
    n = kappa.size
    variance = f_best / (n - 1) if n > 1 else 0.0
    if variance == 0.0:
        sigma = 0.0
    else:
        sigma = math.sqrt(variance / curvature) if curvature > 0 else math.inf

    predicted = reflectivity_curve(kappa, kappa_sc)
    records = tuple(
        CouplingPoint(float(k), float(obs), float(pred), classify_regime(k, kappa_sc, tolerance))
        for k, obs, pred in zip(kappa, r0, predicted))
    rms = math.sqrt(float(np.mean((r0 - predicted) ** 2)))
    return CouplingFit(kappa_sc, sigma, records, rms)
