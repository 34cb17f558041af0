"""Pseudospectral time-dependent Hartree-Fock on finite-rank density matrices."""

from .grid import (Grid, GridMismatchError, apply_multiplier, coulomb_solve, gradient, kinetic_phase,
                   make_grid, transform_forward, transform_inverse)
from .state import (DensityMatrix, FactorizedOperator, LinearDependenceError, NonHermitianError,
                    NormReport, apply_state, kinetic_energy, new_state, norm_report,
                    particle_density, recompress, rediagonalize, reorthonormalize,
                    trace_norm_distance)
from .meanfield import (MeanFieldPack, StalePackError, apply_exchange, apply_hamiltonian,
                        build_pack, hartree_potential, nonlinear_rhs, potential_energies)
from .propagate import (PropagatorConfig, StepSizeError, Trajectory, WindowTooLargeError,
                        free_evolve, picard_solve, run_orbital, strang_step)
from .diagnostics import (AuditSummary, EnergyReport, LiebThirringCheck, annotate,
                          conservation_audit, density_energy_identity, energy_report,
                          hartree_energy_identity, kinetic_bound_check, lieb_thirring_scan)

__version__ = "0.1.0"
