"""Eigenmodes of the heterogeneous Helmholtz problem -Lap psi = E Sigma psi.

The lowest modes are reached by repeatedly applying the inverse operator
``sqrt(Sigma) G sqrt(Sigma)`` built from the homogeneous Green kernel, with
Rayleigh-Ritz matrices in the Laplacian eigenbasis as an independent route.
"""

__version__ = "0.1.0"

from .accel import ShanksTable, shanks_once, shanks_table
from .basis import (BC, BoundaryCondition, GreenKernel, Interval, Mode, Rectangle,
                    green_closed_1d, green_gamma_nn_1d, green_regularized_1d, mode, sorted_modes)
from .density import Constant, Custom, Oscillating, Parabolic, Separable2D, parse_density
from .errors import *  # noqa: F401,F403
from .operators import (Engine, OperatorContext, apply_inverse, apply_inverse_regularized,
                        build_spectral_matrix, density_overlap, project_out_zero_mode)
from .solvers import (SolveReport, block_iterate, lanczos_iterate, matrix_power_method,
                      power_iterate, rr_matrix_solve)
