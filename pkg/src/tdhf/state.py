"""Finite-rank Hermitian density matrices and low-rank operator algebra.

A density matrix is stored in diagonal form,
``rho(x, y) = sum_j occupations[j] * orbitals[j](x) * conj(orbitals[j](y))``.
General low-rank kernels ``sum_m c_m l_m(x) conj(r_m(y))`` (commutators,
``H0 rho``, Duhamel integrands) are :class:`FactorizedOperator`.  Every norm
is computed by projecting onto an orthonormal basis of the factor span,
which costs O(rank**2 * nodes) instead of O(nodes**2).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridMismatchError, apply_multiplier

ORTHO_TOL = 1e-10
HERMITIAN_TOL = 1e-8
SINGULAR_TOL = 1e-12


class LinearDependenceError(ValueError):
    pass


class NonHermitianError(ValueError):
    pass


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


class DensityMatrix:
    """Immutable finite-rank state in diagonal representation.

    Use :func:`new_state` to build one from arbitrary raw orbitals.  The bare
    constructor trusts its input and is what the propagators use, so the
    orbitals of an evolved state may drift slightly from orthonormality;
    :attr:`gram_defect` measures that drift.
    """

    def __init__(self, grid: Grid, occupations, orbitals):
        occupations = np.asarray(occupations, dtype=float).reshape(-1)
        orbitals = np.asarray(orbitals, dtype=complex)
        if orbitals.shape != (occupations.size,) + grid.shape:
            raise GridMismatchError(
                f"orbitals shape {orbitals.shape} does not match "
                f"{occupations.size} orbitals on grid {grid.shape}")
        if not np.all(np.isfinite(occupations)):
            raise ValueError("occupations must be finite")
        self.grid = grid
        self.occupations = _frozen(occupations)
        self.orbitals = _frozen(orbitals)

    @property
    def rank(self) -> int:
        return self.occupations.size

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.occupations >= 0))

    def gram(self) -> np.ndarray:
        flat = self.orbitals.reshape(self.rank, -1)
        return self.grid.cell_volume * (flat.conj() @ flat.T)

    @property
    def gram_defect(self) -> float:
        if self.rank == 0:
            return 0.0
        return float(np.max(np.abs(self.gram() - np.eye(self.rank))))

    def fingerprint(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(repr(self.grid.spec()).encode())
        h.update(self.occupations.tobytes())
        h.update(self.orbitals.tobytes())
        return h.hexdigest()

    def as_factorized(self) -> FactorizedOperator:
        return FactorizedOperator(self.grid, self.occupations, self.orbitals, self.orbitals)

    def kernel(self) -> np.ndarray:
        """Dense kernel matrix ``rho[a, b]`` over flattened nodes (small grids only)."""
        return self.as_factorized().kernel()

    def scaled(self, c: float) -> DensityMatrix:
        return DensityMatrix(self.grid, c * self.occupations, self.orbitals)

    def with_orbitals(self, orbitals) -> DensityMatrix:
        return DensityMatrix(self.grid, self.occupations, orbitals)

    def __repr__(self):
        return f"DensityMatrix(rank={self.rank}, occupations={self.occupations.tolist()})"


class FactorizedOperator:
    """Low-rank operator with kernel ``sum_m c_m left_m(x) conj(right_m(y))``."""

    def __init__(self, grid: Grid, coefficients, left, right):
        coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)
        left = np.asarray(left, dtype=complex)
        right = np.asarray(right, dtype=complex)
        expected = (coefficients.size,) + grid.shape
        if left.shape != expected or right.shape != expected:
            raise GridMismatchError(
                f"factor shapes {left.shape}, {right.shape} do not match {expected}")
        self.grid = grid
        self.coefficients = coefficients
        self.left = left
        self.right = right

    @property
    def rank(self) -> int:
        return self.coefficients.size

    def __add__(self, other: FactorizedOperator) -> FactorizedOperator:
        if other.grid != self.grid:
            raise GridMismatchError("operators live on different grids")
        return FactorizedOperator(
            self.grid,
            np.concatenate([self.coefficients, other.coefficients]),
            np.concatenate([self.left, other.left]),
            np.concatenate([self.right, other.right]))

    def __sub__(self, other: FactorizedOperator) -> FactorizedOperator:
        return self + other.scaled(-1.0)

    def scaled(self, c) -> FactorizedOperator:
        return FactorizedOperator(self.grid, c * self.coefficients, self.left, self.right)

    def adjoint(self) -> FactorizedOperator:
        return FactorizedOperator(self.grid, self.coefficients.conj(), self.right, self.left)

    def conjugated_by(self, unitary) -> FactorizedOperator:
        """``U K U^*`` for a unitary ``U`` given as a function on fields."""
        return FactorizedOperator(
            self.grid, self.coefficients,
            np.array([unitary(f) for f in self.left]),
            np.array([unitary(f) for f in self.right]))

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = self.grid.check(f)
        out = np.zeros(self.grid.shape, dtype=complex)
        for c, l, r in zip(self.coefficients, self.left, self.right):
            out += c * self.grid.inner(r, f) * l
        return out

    def trace(self) -> complex:
        g = self.grid
        return complex(sum(c * g.inner(r, l)
                           for c, l, r in zip(self.coefficients, self.left, self.right)))

    def factor_norm(self) -> float:
        g = self.grid
        return float(sum(abs(c) * g.norm(l) * g.norm(r)
                         for c, l, r in zip(self.coefficients, self.left, self.right)))

    def kernel(self) -> np.ndarray:
        L = self.left.reshape(self.rank, -1)
        R = self.right.reshape(self.rank, -1)
        return (L.T * self.coefficients) @ R.conj()

    def compressed(self, rel_tol: float = 1e-14):
        """Orthonormal basis ``Q`` of the factor span and ``A = Q^* K Q``.

        ``Q`` has shape ``(p,) + grid.shape``; the operator equals
        ``sum_ab A[a, b] Q_a conj(Q_b)`` exactly on the span.
        """
        g = self.grid
        if self.rank == 0:
            return np.zeros((0,) + g.shape, dtype=complex), np.zeros((0, 0), dtype=complex)
        w = np.sqrt(g.cell_volume)
        X = np.concatenate([self.left, self.right]).reshape(2 * self.rank, -1).T * w
        U, s, _ = np.linalg.svd(X, full_matrices=False)
        if s[0] == 0:
            return np.zeros((0,) + g.shape, dtype=complex), np.zeros((0, 0), dtype=complex)
        U = U[:, s > rel_tol * s[0]]
        Lc = U.conj().T @ (self.left.reshape(self.rank, -1).T * w)
        Rc = U.conj().T @ (self.right.reshape(self.rank, -1).T * w)
        A = (Lc * self.coefficients) @ Rc.conj().T
        Q = (U.T / w).reshape((U.shape[1],) + g.shape)
        return Q, A

    def singular_values(self) -> np.ndarray:
        _, A = self.compressed()
        if A.size == 0:
            return np.zeros(0)
        return np.linalg.svd(A, compute_uv=False)

    def trace_norm(self) -> float:
        return float(np.sum(self.singular_values()))

    def hermiticity_defect(self) -> float:
        _, A = self.compressed()
        if A.size == 0:
            return 0.0
        return float(np.max(np.abs(A - A.conj().T)))

    def __repr__(self):
        return f"FactorizedOperator(rank={self.rank})"


@dataclass(frozen=True)
class NormReport:
    trace: float
    trace_norm: float
    z_norm: float
    y_norm: float
    kinetic_energy: float
    kinetic_energy_abs: float
    hilbert_schmidt_norm: float


def new_state(grid: Grid, occupations, raw_orbitals) -> DensityMatrix:
    """Build a state from arbitrary linearly independent orbitals.

    Each orbital is normalized, then the set is Löwdin (symmetrically)
    orthonormalized so the occupations are exactly the spectrum.
    """
    occupations = np.asarray(occupations, dtype=float).reshape(-1)
    raw = np.asarray(raw_orbitals, dtype=complex)
    if raw.shape == grid.shape and occupations.size == 1:
        raw = raw[None]
    if raw.shape[0] != occupations.size:
        raise ValueError(f"{occupations.size} occupations but {raw.shape[0]} orbitals")
    if raw.shape[1:] != grid.shape:
        raise GridMismatchError(f"orbital shape {raw.shape[1:]} does not match grid {grid.shape}")
    if occupations.size == 0:
        return DensityMatrix(grid, occupations, raw)
    norms = np.array([grid.norm(f) for f in raw])
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise ValueError("orbitals must be nonzero and finite")
    raw = raw / norms.reshape((-1,) + (1,) * grid.dim)
    orbitals = lowdin(grid, raw)
    return DensityMatrix(grid, occupations, orbitals)


def lowdin(grid: Grid, orbitals: np.ndarray) -> np.ndarray:
    """Symmetric orthonormalization ``phi S**(-1/2)``."""
    n = orbitals.shape[0]
    flat = orbitals.reshape(n, -1)
    S = grid.cell_volume * (flat.conj() @ flat.T)
    evals, evecs = np.linalg.eigh(S)
    if evals[0] <= SINGULAR_TOL * max(evals[-1], 1.0):
        raise LinearDependenceError(
            f"orbitals are linearly dependent (smallest Gram eigenvalue {evals[0]:.3e})")
    S_inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.conj().T
    return (S_inv_sqrt.T @ flat).reshape(orbitals.shape)


def reorthonormalize(rho: DensityMatrix) -> DensityMatrix:
    if rho.rank == 0:
        return rho
    return rho.with_orbitals(lowdin(rho.grid, rho.orbitals))


def particle_density(rho: DensityMatrix) -> np.ndarray:
    """n(x) = sum_j lambda_j |phi_j(x)|**2, as a real array."""
    n = np.zeros(rho.grid.shape)
    for lam, phi in zip(rho.occupations, rho.orbitals):
        n += lam * (phi.real ** 2 + phi.imag ** 2)
    return n


def apply_state(rho: DensityMatrix, f: np.ndarray) -> np.ndarray:
    return rho.as_factorized().apply(f)


def _h0_orbitals(rho: DensityMatrix, multiplier: np.ndarray) -> np.ndarray:
    g = rho.grid
    return np.array([apply_multiplier(g, phi, multiplier) for phi in rho.orbitals]).reshape(
        rho.orbitals.shape)


def kinetic_energy(rho: DensityMatrix, absolute: bool = False) -> float:
    """Tr(H0^(1/2) rho H0^(1/2)) = 1/2 sum_j lambda_j ||grad phi_j||**2.

    With ``absolute=True`` the occupations enter with absolute value.
    """
    g = rho.grid
    lam = np.abs(rho.occupations) if absolute else rho.occupations
    total = 0.0
    for l, phi in zip(lam, rho.orbitals):
        coeffs = np.fft.fftn(phi, norm="ortho")
        total += l * np.sum(g.kinetic_multiplier * np.abs(coeffs) ** 2)
    return float(total * g.cell_volume)


def norm_report(rho: DensityMatrix) -> NormReport:
    spectrum = rediagonalize(rho)[0]
    trace_norm = float(np.sum(np.abs(spectrum)))
    sqrt_half = _h0_orbitals(rho, rho.grid.kinetic_sqrt_multiplier)
    weighted = FactorizedOperator(rho.grid, rho.occupations, sqrt_half, sqrt_half)
    h0_rho = FactorizedOperator(rho.grid, rho.occupations,
                                _h0_orbitals(rho, rho.grid.kinetic_multiplier), rho.orbitals)
    return NormReport(
        trace=float(np.sum(particle_density(rho)) * rho.grid.cell_volume),
        trace_norm=trace_norm,
        z_norm=trace_norm + weighted.trace_norm(),
        y_norm=trace_norm + h0_rho.trace_norm(),
        kinetic_energy=kinetic_energy(rho),
        kinetic_energy_abs=kinetic_energy(rho, absolute=True),
        hilbert_schmidt_norm=float(np.sqrt(np.sum(spectrum ** 2))),
    )


def rediagonalize(op, hermitian_tol: float = HERMITIAN_TOL):
    """Eigen-decomposition of a Hermitian low-rank operator.

    Accepts a :class:`DensityMatrix` (whose orbitals need not be exactly
    orthonormal) or a :class:`FactorizedOperator`.  Returns
    ``(occupations, orbitals)`` with occupations sorted descending and
    orthonormal orbitals.  Zero eigenvalues on the factor span are kept.
    """
    if isinstance(op, DensityMatrix):
        op = op.as_factorized()
    Q, A = op.compressed()
    if A.size == 0:
        return np.zeros(0), Q
    scale = max(np.max(np.abs(A)), 1e-300)
    defect = np.max(np.abs(A - A.conj().T))
    if defect > hermitian_tol * max(scale, 1.0):
        raise NonHermitianError(f"operator is not Hermitian (defect {defect:.3e})")
    evals, evecs = np.linalg.eigh(0.5 * (A + A.conj().T))
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    p = Q.shape[0]
    orbitals = (evecs.T @ Q.reshape(p, -1)).reshape(Q.shape)
    return evals, orbitals


def recompress(op, rank_budget: int | None = None, threshold: float = 1e-12) -> DensityMatrix:
    """Rediagonalize and keep eigenpairs with |eigenvalue| > threshold.

    At most ``rank_budget`` pairs of largest magnitude are kept; the result
    is again sorted descending.
    """
    grid = op.grid
    evals, orbitals = rediagonalize(op)
    keep = np.flatnonzero(np.abs(evals) > threshold)
    if rank_budget is not None and keep.size > rank_budget:
        keep = keep[np.argsort(np.abs(evals[keep]))[::-1][:rank_budget]]
        keep.sort()
    return DensityMatrix(grid, evals[keep], orbitals[keep])


def trace_norm_distance(a, b) -> float:
    """Trace norm of ``a - b`` for states or factorized operators."""
    if isinstance(a, DensityMatrix):
        a = a.as_factorized()
    if isinstance(b, DensityMatrix):
        b = b.as_factorized()
    return (a - b).trace_norm()
