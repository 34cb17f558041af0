"""Hartree potential, exchange operator and the nonlinear commutator.

All interaction terms carry a ``coupling`` factor (1 for the physical
model, 0 to switch interactions off).  The Hamiltonian is
``H = H0 + V_H - V_HF`` with repulsive Hartree and subtracted exchange.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, apply_multiplier, coulomb_solve
from .state import DensityMatrix, FactorizedOperator, particle_density


class StalePackError(RuntimeError):
    pass


def hartree_potential(rho: DensityMatrix, coupling: float = 1.0) -> np.ndarray:
    if coupling == 0 or rho.rank == 0:
        return np.zeros(rho.grid.shape)
    return coupling * coulomb_solve(rho.grid, particle_density(rho)).real


def apply_exchange(rho: DensityMatrix, f: np.ndarray, coupling: float = 1.0) -> np.ndarray:
    """(V_HF f)(x) = sum_j lambda_j phi_j(x) * Coulomb[conj(phi_j) f](x)."""
    g = rho.grid
    f = g.check(f)
    out = np.zeros(g.shape, dtype=complex)
    if coupling == 0:
        return out
    for lam, phi in zip(rho.occupations, rho.orbitals):
        if lam != 0:
            out += lam * phi * coulomb_solve(g, phi.conj() * f)
    return coupling * out


@dataclass(frozen=True, eq=False)
class MeanFieldPack:
    """Mean-field data derived from one state; refuses to act on another."""

    state: DensityMatrix
    hartree_potential: np.ndarray
    coupling: float
    fingerprint: str

    @property
    def grid(self) -> Grid:
        return self.state.grid

    def check_fresh(self, rho: DensityMatrix | None = None):
        current = self.state.fingerprint() if rho is None else rho.fingerprint()
        if current != self.fingerprint:
            raise StalePackError("mean-field pack does not match the state it is used with")

    def apply_potential(self, f: np.ndarray) -> np.ndarray:
        """W f = V_H f - V_HF f (the interaction part of H)."""
        if self.coupling == 0:
            return np.zeros(self.grid.shape, dtype=complex)
        return self.hartree_potential * f - apply_exchange(self.state, f, self.coupling)


def build_pack(rho: DensityMatrix, coupling: float = 1.0) -> MeanFieldPack:
    return MeanFieldPack(rho, hartree_potential(rho, coupling), float(coupling), rho.fingerprint())


def apply_hamiltonian(pack: MeanFieldPack, f: np.ndarray, rho: DensityMatrix | None = None) -> np.ndarray:
    """H f = -Laplacian(f)/2 + V_H f - V_HF f.

    If ``rho`` is given the pack is checked against it and
    :class:`StalePackError` raised on mismatch.
    """
    if rho is not None:
        pack.check_fresh(rho)
    g = pack.grid
    return apply_multiplier(g, f, g.kinetic_multiplier) + pack.apply_potential(f)


def nonlinear_rhs(rho: DensityMatrix, coupling: float = 1.0,
                  pack: MeanFieldPack | None = None) -> FactorizedOperator:
    """F(rho) = -i [V_H - V_HF, rho] in factorized form.

    Left/right factors are ``(W phi_j, phi_j)`` with coefficient
    ``-i lambda_j`` and ``(phi_j, W phi_j)`` with ``+i lambda_j``.
    """
    if pack is None:
        pack = build_pack(rho, coupling)
    else:
        pack.check_fresh(rho)
    w_phi = np.array([pack.apply_potential(phi) for phi in rho.orbitals]).reshape(rho.orbitals.shape)
    lam = rho.occupations
    return FactorizedOperator(
        rho.grid,
        np.concatenate([-1j * lam, 1j * lam]),
        np.concatenate([w_phi, rho.orbitals]),
        np.concatenate([rho.orbitals, w_phi]))


def potential_energies(rho: DensityMatrix, coupling: float = 1.0,
                       pack: MeanFieldPack | None = None) -> tuple:
    """(E_H, E_x) with E_H = 1/2 int V_H n and E_x = 1/2 Tr(rho V_HF)."""
    g = rho.grid
    if coupling == 0 or rho.rank == 0:
        return 0.0, 0.0
    if pack is None:
        pack = build_pack(rho, coupling)
    e_h = 0.5 * float(g.integrate(pack.hartree_potential * particle_density(rho)))
    e_x = 0.0
    for lam, phi in zip(rho.occupations, rho.orbitals):
        if lam != 0:
            e_x += lam * g.inner(phi, apply_exchange(rho, phi, coupling)).real
    return e_h, 0.5 * e_x
