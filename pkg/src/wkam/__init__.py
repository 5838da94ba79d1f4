"""Discrete weak KAM theory on the flat torus.

Lax-Oleinik semigroups as min-plus operators, critical values, weak KAM
solutions, Peierls barriers, Aubry sets and alpha functions, plus a
verification suite for Poisson-commuting pairs of Hamiltonians.
"""

__version__ = "0.1.0"

from .model import (HamiltonianModel, NonTonelliError, TorusGrid, ValidationReport,
                    compose_convex, make_mechanical, make_momentum_only, poisson_bracket,
                    shift_cohomology, torus_distance, validate_tonelli)
from .transform import (LagrangianTable, MomentumWindowError, biconjugate_check, legendre,
                        reverse_lagrangian)
from .kernel import (ActionKernel, BandOverflowError, build_kernel, commutation_residual,
                     dense_kernel, identity_kernel, lax_oleinik, minplus_apply, minplus_power,
                     minplus_product, set_threads)
from .weakkam import (PairedSolutions, WeakKamResult, check_subsolution, critical_value,
                      critical_value_karp, pair_solutions, project_subsolution, solve_weak_kam)
from .structures import (AlphaTable, AubrySetApprox, BarrierMatrix, aubry_from_pairs,
                         aubry_from_peierls, compare_flats, hausdorff_nodes, mather_alpha,
                         peierls_barrier)
from .commute import PairReport, run_pair_suite, semigroup_commutation_on_function
from .regularize import RegularizationSchedule, lasry_lions, smoothness_profile
