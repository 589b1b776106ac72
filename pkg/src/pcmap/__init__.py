"""Piecewise continuous interval maps: connections, empirical invariant
measures and interval-exchange semi-conjugacies."""
from .connections import (CONNECTED, NO_CONNECTION, UNDECIDED, ConnectionReport, Witness,
                          avoidance_radius, breakpoint_mass, check_no_connections)
from .core import (LEFT, RIGHT, AffineBranch, ExprBranch, LateralLimit, PiecewiseMap, PolyBranch,
                   ValidationReport, affine_map, critical_set, evaluate, evaluate_many,
                   lateral_limits, piece_index, step, validate_map)
from .errors import (BasePointError, DomainError, InjectivityError, MapSpecSyntaxError,
                     MapValidationError, MeasureMismatchError, PcmapError, ResourceBudgetError)
from .fixtures import list_fixtures, load_fixture
from .mapspec import load_map, parse_map_spec, serialize_map
from .measure import (EmpiricalMeasure, TestFunction, cdf_eval, cdf_left, choose_base_point,
                      convergence_diag, empirical_measure, invariance_bound, invariance_residual,
                      largest_atom, max_local_mass, wasserstein1)
from .orbits import (Orbit, PeriodicOrbitRecord, detect_cycle, find_periodic_affine,
                     iterate_orbit, iterate_points, itinerary_word)
from .scalar import EXACT, FLOAT
from .semiconj import (ATOMIC_FACTOR, DEGENERATE, ConjugacyDefect, IETData, MonotoneFactor,
                       build_h, conjugacy_defect, extract_iet, iet_as_map, iet_evaluate,
                       isometry_defect)
from .sweep import SweepConfig, SweepResult, run_sweep

__version__ = "0.1.0"
