"""Design and analysis of one-sided composite photonic-crystal cavities on nanofibers."""

__version__ = "0.1.0"

from .cavity import (CavityRates, CouplingRegime, FiguresOfMerit, Resonance,
                     classify_regime, figures_of_merit, guided_fraction,
                     kappa_sc_from_r0, linewidth_metrics, on_resonance_reflectivity,
                     reflection_amplitude, scattering_metrics)
from .errors import CavityError
from .fitting import (CouplingFit, LorentzianDipFit, fit_kappa_sc, fit_lorentzian_dip,
                      locate_dip, synthesize_dip)
from .grating import (GratingDesign, LayerStack, Spectrum, build_stack,
                      calibrate_base_index, locate_stopband, simulate_spectrum,
                      stack_response)
from .sweep import (SweepRow, find_critical_coupling, sweep_input_slats,
                    sweep_output_slats, tuning_scan)

__all__ = [
    "CavityError", "CavityRates", "CouplingFit", "CouplingRegime", "FiguresOfMerit",
    "GratingDesign", "LayerStack", "LorentzianDipFit", "Resonance", "Spectrum", "SweepRow",
    "build_stack", "calibrate_base_index", "classify_regime", "figures_of_merit",
    "find_critical_coupling", "fit_kappa_sc", "fit_lorentzian_dip", "guided_fraction",
    "kappa_sc_from_r0", "linewidth_metrics", "locate_dip", "locate_stopband",
    "on_resonance_reflectivity", "reflection_amplitude", "scattering_metrics",
    "simulate_spectrum", "stack_response", "sweep_input_slats", "sweep_output_slats",
    "synthesize_dip", "tuning_scan",
]
