"""One-sided cavity input-output model.

All rates are ordinary frequencies in GHz (not angular), wavelengths are in nm
and cavity lengths in micrometres.  With these units the linewidth relation
``kappa = c * delta_lambda / lambda0**2`` reproduces tabulated values directly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import InvalidInput, InvalidRates

# c in nm*GHz (numerically equal to c in m/s), so c * nm / nm**2 -> GHz
C_NM_GHZ = SPEED_OF_LIGHT
# c in um*GHz
C_UM_GHZ = SPEED_OF_LIGHT * 1e-3

DEFAULT_CRITICAL_TOLERANCE = 0.05


@dataclass(frozen=True)
class CavityRates:
    """Port and loss rates of a one-sided cavity, GHz.

    ``kappa_out`` is leakage through the back mirror; it is zero for an ideal
    one-sided cavity.  The total linewidth ``kappa`` is derived.
    """

    kappa_in: float
    kappa_sc: float
    kappa_out: float = 0.0

    def __post_init__(self):
        for name in ("kappa_in", "kappa_sc", "kappa_out"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidRates(f"{name} must be finite and >= 0, got {value!r}")
        if self.kappa <= 0:
            raise InvalidRates("total linewidth kappa must be > 0")

    @property
    def kappa(self) -> float:
        return self.kappa_in + self.kappa_sc + self.kappa_out

    @property
    def kappa_loss(self) -> float:
        """Everything that does not return through the input port."""
        return self.kappa_sc + self.kappa_out


@dataclass(frozen=True)
class Resonance:
    lambda0: float
    delta_lambda: float
    r0: float

    def __post_init__(self):
        if not self.lambda0 > 0 or not self.delta_lambda > 0:
            raise InvalidInput("lambda0 and delta_lambda must be > 0")
        if not 0.0 <= self.r0 <= 1.0:
            raise InvalidInput(f"r0 must lie in [0, 1], got {self.r0!r}")


@dataclass(frozen=True)
class FiguresOfMerit:
    kappa: float
    q: float
    q_sc: float
    finesse_sc: float
    loss_one_pass: float


class CouplingRegime(str, enum.Enum):
    OVER = "OverCoupled"
    CRITICAL = "Critical"
    UNDER = "UnderCoupled"


def reflection_amplitude(rates: CavityRates, detuning):
    """Complex reflection amplitude seen from the input port.

    ``detuning`` may be a scalar or an array, in the same units as the rates.
    Back-mirror leakage is folded into the loss channel.
    """
    delta = np.asarray(detuning, dtype=float)
    if not np.all(np.isfinite(delta)):
        raise InvalidInput("detuning must be finite")
    k_in = rates.kappa_in
    k_loss = rates.kappa_loss
    r = (0.5 * (k_in - k_loss) - 1j * delta) / (0.5 * (k_in + k_loss) + 1j * delta)
    return r if r.ndim else complex(r)


def _check_kappa_pair(kappa, kappa_sc):
    if not (math.isfinite(kappa) and kappa > 0):
        raise InvalidRates(f"kappa must be > 0, got {kappa!r}")
    if not (math.isfinite(kappa_sc) and kappa_sc >= 0):
        raise InvalidRates(f"kappa_sc must be >= 0, got {kappa_sc!r}")


def reflectivity_curve(kappa, kappa_sc):
    """``|1 - 2 kappa_sc / kappa|**2`` without range checks; accepts arrays."""
    return (1.0 - 2.0 * np.asarray(kappa_sc) / np.asarray(kappa)) ** 2


def on_resonance_reflectivity(kappa: float, kappa_sc: float) -> float:
    _check_kappa_pair(kappa, kappa_sc)
    if kappa_sc > kappa:
        raise InvalidRates(f"kappa_sc ({kappa_sc}) exceeds kappa ({kappa})")
    return float(reflectivity_curve(kappa, kappa_sc))


def classify_regime(kappa: float, kappa_sc: float,
                    tolerance: float = DEFAULT_CRITICAL_TOLERANCE) -> CouplingRegime:
    """Label a (kappa, kappa_sc) pair as over-, critically or under-coupled.

    The critical band is ``kappa/2`` within ``kappa_sc * (1 +/- tolerance)``.
    """
    _check_kappa_pair(kappa, kappa_sc)
    if not 0 < tolerance < 0.5:
        raise InvalidInput(f"tolerance must lie in (0, 0.5), got {tolerance!r}")
    half = 0.5 * kappa
    if half > kappa_sc * (1 + tolerance):
        return CouplingRegime.OVER
    if half < kappa_sc * (1 - tolerance):
        return CouplingRegime.UNDER
    return CouplingRegime.CRITICAL


def kappa_sc_from_r0(r0: float, kappa: float, branch: str) -> float:
    """Invert the on-resonance reflectivity for the loss rate.

    ``branch`` is ``"over"`` (kappa_sc < kappa/2) or ``"under"``; R0 alone
    cannot tell the two roots apart.
    """
    if not (math.isfinite(r0) and 0.0 <= r0 <= 1.0):
        raise InvalidInput(f"r0 must lie in [0, 1], got {r0!r}")
    if not (math.isfinite(kappa) and kappa > 0):
        raise InvalidInput(f"kappa must be > 0, got {kappa!r}")
    b = str(branch).lower()
    root = math.sqrt(r0)
    if b in ("over", "overcoupled"):
        return 0.5 * kappa * (1.0 - root)
    if b in ("under", "undercoupled"):
        return 0.5 * kappa * (1.0 + root)
    raise InvalidInput(f"branch must be 'over' or 'under', got {branch!r}")


def linewidth_metrics(lambda0: float, delta_lambda: float) -> tuple[float, float]:
    """Return ``(kappa [GHz], Q)`` from a dip centre and FWHM in nm."""
    if not (lambda0 > 0 and delta_lambda > 0):
        raise InvalidInput("lambda0 and delta_lambda must be > 0")
    kappa = C_NM_GHZ * delta_lambda / lambda0**2
    return kappa, lambda0 / delta_lambda


def scattering_metrics(kappa_sc: float, lambda0: float,
                       cavity_length: float) -> tuple[float, float, float]:
    """Scattering-limited Q, finesse and one-pass power loss.

    Parameters
    ----------
    kappa_sc : float
        Loss rate, GHz.
    lambda0 : float
        Resonance wavelength, nm.
    cavity_length : float
        Effective cavity length, um.

    Returns
    -------
    (q_sc, finesse_sc, loss_one_pass)
        The loss is the exact ``1 - exp(-2 pi kappa_sc l / c)``, as a fraction.
    """
    if not (kappa_sc > 0 and lambda0 > 0 and cavity_length > 0):
        raise InvalidInput("kappa_sc, lambda0 and cavity_length must all be > 0")
    q_sc = C_NM_GHZ / (lambda0 * kappa_sc)
    finesse_sc = C_UM_GHZ / (2.0 * cavity_length * kappa_sc)
    loss = -math.expm1(-2.0 * math.pi * kappa_sc * cavity_length / C_UM_GHZ)
    return q_sc, finesse_sc, loss


def figures_of_merit(resonance: Resonance, kappa_sc: float,
                     cavity_length: float) -> FiguresOfMerit:
    kappa, q = linewidth_metrics(resonance.lambda0, resonance.delta_lambda)
    q_sc, finesse_sc, loss = scattering_metrics(kappa_sc, resonance.lambda0, cavity_length)
    return FiguresOfMerit(kappa=kappa, q=q, q_sc=q_sc, finesse_sc=finesse_sc,
                          loss_one_pass=loss)


def guided_fraction(rates: CavityRates) -> tuple[float, float, float]:
    """Share of the cavity decay leaving through each channel."""
    k = rates.kappa
    return rates.kappa_in / k, rates.kappa_sc / k, rates.kappa_out / k
