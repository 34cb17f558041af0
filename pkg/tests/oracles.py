"""Brute-force references, independent of the FFT/factorized code paths.

Everything here assembles explicit matrices or evaluates sums directly:
explicit DFT matrices instead of FFTs, node-by-node kernels instead of
spectral convolution, Ewald sums instead of spectral Poisson solves.
"""

import numpy as np
from scipy import integrate, special


class DenseModel:
    """Dense-matrix version of a 1D soft-Coulomb grid model.

    Operators act on node values; an integral operator with kernel
    ``K[a, b]`` has matrix ``K * dx``.
    """

    def __init__(self, n, box_length, a=1.0):
        self.n = n
        self.L = box_length
        self.dx = box_length / n
        self.x = -box_length / 2 + self.dx * np.arange(n)
        k = 2 * np.pi / box_length * np.array([j if j < n // 2 else j - n for j in range(n)])
        self.k = k
        self.dft = np.exp(-1j * np.outer(k, self.x)) / np.sqrt(n)
        d = self.x[:, None] - self.x[None, :]
        d = d - box_length * np.round(d / box_length)
        self.w = 1.0 / np.sqrt(d ** 2 + a ** 2)

    def h0(self):
        return self.dft.conj().T @ np.diag(0.5 * self.k ** 2) @ self.dft

    def h0_sqrt(self):
        return self.dft.conj().T @ np.diag(np.abs(self.k) / np.sqrt(2)) @ self.dft

    def kernel(self, occupations, orbitals):
        return sum(l * np.outer(p, p.conj()) for l, p in zip(occupations, orbitals))

    def density(self, K):
        return np.diag(K).real

    def hartree(self, K, coupling=1.0):
        return coupling * (self.w @ self.density(K)) * self.dx

    def exchange_op(self, K, coupling=1.0):
        return coupling * self.w * K * self.dx

    def mean_field_op(self, K, coupling=1.0):
        return np.diag(self.hartree(K, coupling)) - self.exchange_op(K, coupling)

    def commutator_kernel(self, K, coupling=1.0):
        W = self.mean_field_op(K, coupling)
        R = K * self.dx
        return -1j * (W @ R - R @ W) / self.dx

    def trace_norm(self, op_matrix):
        return np.sum(np.linalg.svd(op_matrix, compute_uv=False))

    def exchange_energy_double_sum(self, K, coupling=1.0):
        """1/2 sum_ab w(x_a - x_b) |K_ab|**2 dx**2."""
        return 0.5 * coupling * np.sum(self.w * np.abs(K) ** 2) * self.dx ** 2

    def hartree_energy_double_sum(self, K, coupling=1.0):
        n = self.density(K)
        return 0.5 * coupling * n @ self.w @ n * self.dx ** 2


def gaussian_free_potential(r, sigma):
    """Free-space (1/4 pi |x|) * n for a unit-mass Gaussian of std sigma, by radial quadrature."""
    dens = lambda s: np.exp(-s * s / (2 * sigma ** 2)) / (2 * np.pi * sigma ** 2) ** 1.5
    inner = integrate.quad(lambda s: 4 * np.pi * s * s * dens(s), 0, r, epsabs=1e-15)[0]
    outer = integrate.quad(lambda s: 4 * np.pi * s * dens(s), r, np.inf, epsabs=1e-15)[0]
    return (inner / r + outer) / (4 * np.pi)


def ewald_green(rvec, L, eta=0.3, n_real=3, k_max=12):
    """Zero-mean periodic Green's function of -Laplacian in a cube of side L."""
    rvec = np.asarray(rvec, dtype=float)
    V = L ** 3
    total = 0.0
    rng = range(-n_real, n_real + 1)
    for a in rng:
        for b in rng:
            for c in rng:
                d = np.linalg.norm(rvec + L * np.array([a, b, c]))
                total += special.erfc(eta * d) / (4 * np.pi * d)
    m = np.arange(-k_max, k_max + 1)
    k = 2 * np.pi / L * np.stack(np.meshgrid(m, m, m, indexing="ij"))
    k2 = (k ** 2).sum(0)
    mask = k2 > 0
    phase = np.tensordot(rvec, k, axes=1)
    recip = np.sum(np.exp(-k2[mask] / (4 * eta ** 2)) / k2[mask] * np.cos(phase[mask])) / V
    return total + recip - 1 / (4 * eta ** 2 * V)


def periodic_gaussian_potential(r, sigma, L):
    """Potential of a unit Gaussian charge plus neutralizing background at (r, 0, 0).

    Free-space radial quadrature plus the periodic-image correction of a
    point charge; the Gaussian's own images are point-like at distance >= L/2
    for sigma << L.  The constant restores zero mean over the cell.
    """
    g = ewald_green([r, 0.0, 0.0], L)
    return gaussian_free_potential(r, sigma) + (g - 1 / (4 * np.pi * r)) + sigma ** 2 / (2 * L ** 3)


def free_gaussian_variance(sigma, t):
    """Per-axis <x**2>(t) of a free Gaussian packet with initial density std sigma."""
    return sigma ** 2 + t ** 2 / (4 * sigma ** 2)
