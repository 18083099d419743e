"""Quantum Fraunhofer diffraction simulator.

Maps incident optical-field states through apertures via the
characteristic-function transform law and computes diffraction patterns,
photon-number correlations, entanglement quantities, and ghost-diffraction
coincidence patterns, each cross-checked against a brute-force truncated
Fock-space engine.
"""

from .apertures import (Aperture, ApertureError, Disk, DoubleSlit,
                        FactorTable, ModeGrid, Rectangle, SingleSlit,
                        UnionOfRectangles, diffraction_factor,
                        diffraction_factor_quadrature,
                        diffraction_factor_table, normalization_defect,
                        transmissivity)
from .diffraction import (DilationError, ModeMap, OffGridError,
                          build_mode_map, diffracted_char, dilate_contraction,
                          isometric_dilation)
from .entanglement import (GaussianFormError, GaussianNormalForm,
                           QuadratureError, ThermalPairForm, marginal_form,
                           overlap_gaussian, overlap_quadrature, product_form,
                           schlienz_mahler_fock, schlienz_mahler_thermal,
                           symmetric_gamma, thermal_diffraction_form,
                           thermal_form, thermal_overlap_terms)
from .observables import (CorrelationReport, GhostResult, PatternNullError,
                          PatternResult, correlation_report, ghost_g2,
                          h_factor, mean_photon_pattern, number_correlation,
                          residual_variance)
from .states import (BeamSplitterFock, Coherent, FockState, ModeMismatchError,
                     MultiModeInputState, PhotonMoments, ProductState,
                     SPDCPair, SingleModeState, Thermal, UndefinedMomentError,
                     beam_splitter_transform, normal_char_multi,
                     normal_char_single, photon_moments)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
