"""Time evolution: free group, orbital Strang splitting, Duhamel/Picard.

Two independent routes to the same dynamics are provided.  The orbital
route evolves each eigenfunction with the self-consistent Hamiltonian while
the occupations stay fixed.  The operator route solves the integral
equation ``rho(t) = G0(t) rho_I + int_0^t G0(t - s) F(rho(s)) ds`` by fixed
point iteration on short windows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import kinetic_phase
from .meanfield import build_pack, nonlinear_rhs
from .state import DensityMatrix, FactorizedOperator, recompress, reorthonormalize, trace_norm_distance

log = logging.getLogger(__name__)

SCHEMES = ("strang_orbital", "picard_operator")


class StepSizeError(RuntimeError):
    """The truncated exponential series did not converge for this step."""


class WindowTooLargeError(RuntimeError):
    """Picard iteration failed to contract even after window halving."""


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float
    t_final: float
    scheme: str = "strang_orbital"
    picard_max_iter: int = 50
    picard_tol: float = 1e-11
    quadrature_nodes_per_step: int = 4
    reorthonormalize_every: int = 100
    coupling: float = 1.0
    sample_stride: int = 1
    max_window_halvings: int = 4

    def __post_init__(self):
        if not self.dt > 0 or not self.t_final > 0:
            raise ValueError("dt and t_final must be positive")
        if self.t_final < self.dt * (1 - 1e-12):
            raise ValueError("t_final must be >= dt")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max_iter < 1 or self.quadrature_nodes_per_step < 1:
            raise ValueError("picard_max_iter and quadrature_nodes_per_step must be >= 1")
        if self.reorthonormalize_every < 0 or self.sample_stride < 1:
            raise ValueError("invalid reorthonormalize_every or sample_stride")

    @property
    def num_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    coupling: float = 1.0
    picard_log: list = field(default_factory=list)

    def append(self, t: float, rho: DensityMatrix):
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must be strictly increasing")
        self.times.append(float(t))
        self.states.append(rho)

    @property
    def initial(self) -> DensityMatrix:
        return self.states[0]

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]

    def __len__(self):
        return len(self.times)


def free_evolve(rho: DensityMatrix, t: float) -> DensityMatrix:
    """G0(t) rho = exp(-i H0 t) rho exp(i H0 t)."""
    if t == 0 or rho.rank == 0:
        return rho
    g = rho.grid
    return rho.with_orbitals(np.array([kinetic_phase(g, phi, t) for phi in rho.orbitals]))


def _exp_series(pack, phi: np.ndarray, dt: float, order: int = 4) -> np.ndarray:
    """exp(-i dt W) phi by the truncated Taylor series."""
    out = phi.copy()
    term = phi
    prev = np.linalg.norm(phi)
    for m in range(1, order + 1):
        term = (-1j * dt / m) * pack.apply_potential(term)
        size = np.linalg.norm(term)
        if size > prev and size > 1e-14 * np.linalg.norm(phi):
            raise StepSizeError(
                f"exponential series terms grow (order {m}: {size:.3e} > {prev:.3e}); reduce dt")
        prev = size
        out = out + term
    return out


def _potential_substep(rho: DensityMatrix, dt: float, coupling: float) -> DensityMatrix:
    if coupling == 0 or rho.rank == 0:
        return rho
    # predictor to the midpoint of the substep, then freeze W there
    pack = build_pack(rho, coupling)
    mid = rho.with_orbitals(np.array([_exp_series(pack, phi, 0.5 * dt) for phi in rho.orbitals]))
    pack = build_pack(mid, coupling)
    return rho.with_orbitals(np.array([_exp_series(pack, phi, dt) for phi in rho.orbitals]))


def strang_step(rho: DensityMatrix, dt: float, coupling: float = 1.0) -> DensityMatrix:
    """Half kinetic phase, interaction substep, half kinetic phase."""
    rho = free_evolve(rho, 0.5 * dt)
    rho = _potential_substep(rho, dt, coupling)
    return free_evolve(rho, 0.5 * dt)


def run_orbital(rho_init: DensityMatrix, config: PropagatorConfig) -> Trajectory:
    traj = Trajectory(coupling=config.coupling)
    traj.append(0.0, rho_init)
    rho = rho_init
    for step in range(1, config.num_steps + 1):
        rho = strang_step(rho, config.dt, config.coupling)
        if config.reorthonormalize_every and step % config.reorthonormalize_every == 0:
            rho = reorthonormalize(rho)
        if step % config.sample_stride == 0:
            if not np.all(np.isfinite(rho.orbitals)):
                raise PropagationError(
                    f"non-finite orbitals at step {step} (t={step * config.dt:.6g}); "
                    f"last good sample t={traj.times[-1]:.6g}, state {traj.final!r}")
            traj.append(step * config.dt, rho)
    return traj


def _gauss_collocation(m: int, h: float):
    """Gauss-Legendre nodes on [0, h], cumulative integration matrix, weights.

    ``S[i, j] = int_0^{tau_i} l_j(s) ds`` for the Lagrange basis ``l_j`` on
    the nodes.
    """
    x, w = np.polynomial.legendre.leggauss(m)
    tau = 0.5 * h * (x + 1)
    weights = 0.5 * h * w
    S = np.empty((m, m))
    for j in range(m):
        others = np.delete(tau, j)
        basis = np.poly1d(np.poly(others) / np.prod(tau[j] - others)) if m > 1 else np.poly1d([1.0])
        integral = np.polyint(basis)
        S[:, j] = integral(tau) - integral(0.0)
    return tau, S, weights


def _combine(rho0: DensityMatrix, integrands: list, coeffs) -> FactorizedOperator:
    op = rho0.as_factorized()
    for c, sigma in zip(coeffs, integrands):
        if c != 0 and sigma.rank:
            op = op + sigma.scaled(c)
    return op


def picard_window(rho0: DensityMatrix, h: float, config: PropagatorConfig):
    """Solve the Duhamel equation on ``[0, h]`` by Picard iteration.

    Returns ``(final_state, info)``; ``info`` holds the iterate-to-iterate
    trace-norm distances and their ratios.  The zeroth iterate is the free
    evolution; iterates are represented at Gauss-Legendre nodes and
    integrated with the collocation matrix in the interaction picture.
    """
    m = config.quadrature_nodes_per_step
    tau, S, weights = _gauss_collocation(m, h)
    budget = 2 * rho0.rank
    nodes = [free_evolve(rho0, t) for t in tau]
    end = free_evolve(rho0, h)
    distances = []
    converged = False
    for _ in range(config.picard_max_iter):
        # sigma_j = G0(-tau_j) F(rho(tau_j))
        integrands = [
            nonlinear_rhs(x, config.coupling).conjugated_by(lambda f, t=t: kinetic_phase(rho0.grid, f, -t))
            for x, t in zip(nodes, tau)]
        new_nodes = [free_evolve(recompress(_combine(rho0, integrands, S[i]), budget), t)
                     for i, t in enumerate(tau)]
        new_end = free_evolve(recompress(_combine(rho0, integrands, weights), budget), h)
        d = max([trace_norm_distance(a, b) for a, b in zip(new_nodes, nodes)]
                + [trace_norm_distance(new_end, end)])
        distances.append(d)
        nodes, end = new_nodes, new_end
        if d < config.picard_tol:
            converged = True
            break
        if len(distances) >= 3 and distances[-1] >= distances[-2] >= distances[-3]:
            break
    ratios = [b / a for a, b in zip(distances, distances[1:]) if a > 0]
    return end, {"window": h, "distances": distances, "ratios": ratios, "converged": converged}


def picard_solve(rho_init: DensityMatrix, t_final: float, config: PropagatorConfig) -> Trajectory:
    """Chain Picard windows of length ``config.dt`` up to ``t_final``.

    A window that fails to contract is retried as two halves, down to
    ``config.max_window_halvings`` levels; beyond that
    :class:`WindowTooLargeError` is raised.
    """
    traj = Trajectory(coupling=config.coupling)
    traj.append(0.0, rho_init)
    num_windows = int(round(t_final / config.dt))
    rho = rho_init
    for k in range(1, num_windows + 1):
        rho = _solve_span(rho, config.dt, config, traj.picard_log, 0)
        if not np.all(np.isfinite(rho.orbitals)):
            raise PropagationError(f"non-finite state after window {k}")
        if k % config.sample_stride == 0:
            traj.append(k * config.dt, rho)
    return traj


def _solve_span(rho, h, config, picard_log, level):
    end, info = picard_window(rho, h, config)
    if info["converged"]:
        picard_log.append(info)
        return end
    if level >= config.max_window_halvings:
        raise WindowTooLargeError(
            f"Picard iteration did not contract on a window of length {h:.3g} "
            f"(distances {info['distances'][-3:]}); the local solution interval is smaller")
    log.info("Picard window %.3g did not contract, halving", h)
    mid = _solve_span(rho, 0.5 * h, config, picard_log, level + 1)
    return _solve_span(mid, 0.5 * h, config, picard_log, level + 1)


def run(rho_init: DensityMatrix, config: PropagatorConfig) -> Trajectory:
    if config.scheme == "strang_orbital":
        return run_orbital(rho_init, config)
    return picard_solve(rho_init, config.t_final, config)
