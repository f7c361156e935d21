"""2D droplet wetting by diffusion-generated motion of a signed distance
function, with a front-tracking oracle for the underlying geometric flows."""

from .errors import (ConfigurationError, CurveCollapseError, DomainError,
                     GeometryError, GridMismatchError, InterfaceLostError,
                     MeasurementError, SolverError, VolumeInfeasibleError,
                     WetsimError)
from .grid import (GridSpec, ScalarField, SimConfig, SubstratePattern,
                   cos_theta_at, field_inf_diff, make_grid)
from .levelset import (CircularCap, Contour, SignedDistanceField,
                       area_above_level, cap_from_contact_halfspan,
                       cap_radius_from_volume, err_inf_to_cap, extract_contour,
                       init_cap_sdf, measure_contact_angles, wetting_energy,
                       write_contour_csv)
from .heat import HeatSystem, assemble, equ_solver
from .redistance import redist
from .volume import correct_volume, estimate_delta_by_count
from .geomflow import (Curve, Theorem1Report, cap_curve, curve_area,
                       curve_energy, curve_length, evolve_constant, evolve_mcf,
                       integral_kappa_squared, measure_constant_rates,
                       measure_mcf_rates, perturbed_cap_curve,
                       stretched_cap_curve, verify_theorem1)
from .driver import (T_UNIT, HysteresisRow, IterationRecord, RunResult,
                     StudyRow, convergence_study, count_stick_intervals,
                     hysteresis_config, hysteresis_pattern, hysteresis_sweep,
                     run_algorithm1, semicircle_initial, study_ladder,
                     write_hysteresis_csv, write_iterations_csv)

__version__ = "0.1.0"
