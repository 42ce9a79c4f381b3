"""noonlab: exact simulation and fringe analysis for multiport phase
super-resolution interferometry.

The package covers the whole desk-scale pipeline: Fock-sector bookkeeping,
multiport unitary construction, permanent-based multiphoton evolution
(time-forward and time-reversed), the classical coherent-light experiment
with Poisson counting, product-of-sinusoids fringe fitting, and the
super-sensitivity resource accounting.
"""

from .fock import (FockState, FockVector, SectorMismatchError, SectorSizeError,
                   basis_vector, enumerate_sector, fidelity, inner_product,
                   noon_state, sector_dimension)
from .multiport import (Beamsplitter, ModeSwap, ModeUnitary, NotUnitaryError,
                        OpticalElement, PhaseShifter, asymmetric_multiport,
                        complete_unitary, compose, load_multiport,
                        multiport_from_spec, phase_shifter_unitary,
                        polarization_input, symmetric_multiport)
from .quantum import (HeraldError, HeraldedState, PermanentSizeError,
                      all_ones_input, forward_probability, forward_scan,
                      herald_noon, kappa_scheme_i, kappa_scheme_ii,
                      noon_fidelity, permanent, reversed_probability,
                      reversed_scan, scheme_i_state, transition_amplitude)
from .classical import (FringeDataset, SaturationWarning, ScanConfig,
                        classical_input, coincidence_probability,
                        read_dataset_csv, simulate_counts,
                        singles_probabilities, singles_scan,
                        write_dataset_csv)
from .fringefit import (DegenerateDataError, FitConvergenceError, ProductFit,
                        SinusoidFit, extract_singles_overlay,
                        fit_product_fringes, fit_single_sinusoid,
                        poisson_sigma, product_model, sinusoid_model)
from .metrology import (SensitivityInput, SensitivityReport, Verdict,
                        beats_classical, classical_limit,
                        equivalent_wavelength, fringe_slope,
                        multi_exposure_visibility,
                        nondeterministic_supersensitivity_possible,
                        phase_uncertainty, preparation_efficiency,
                        required_efficiency, sensitivity_report,
                        threshold_visibility)

__version__ = "0.1.0"
