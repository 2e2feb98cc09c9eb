"""Placement optimisation and MUSIC validation for movable-antenna sensing arrays."""
from .array import (Geometry1D, Geometry2D, PositionStats, Region, SensingScene, SpatialAngles,
                    centering_matrix, channel, position_stats, steering_vector_1d,
                    steering_vector_2d)
from .baselines import generate_baseline, ula_full, ula_half, upa_full, upa_half
from .crb import (CrbReport, RegionBounds, crb_1d, crb_2d, enclosing_circles, minmax_crb,
                  minmax_delta, region_bounds)
from .errors import (DegenerateInputError, GeometryError, InfeasibleError, MALabError,
                     PerturbationRequired, UnsupportedConfiguration)
from .estimation import (CorrelationMap, MusicSpectrum, SnapshotBlock, SubspaceDecomposition,
                         TrialBatch, correlation, correlation_map, decompose, monte_carlo_mse,
                         music_1d, music_2d, synthesize)
from .geometry1d import Segment1D, adjustment_sweep, min_crb_1d, optimal_apv_1d, p_closed_form
from .geometry2d import (ScaConfig, ScaTrace, build_subproblem_x, build_subproblem_y,
                         circular_optimal, optimize_2d)
from .kernels import BACKEND
from .socp import ConicProgram, SolveResult, feasibility_phase, solve

__version__ = "0.1.0"
