"""Periodic-box discretization with unitary FFTs and spectral multipliers.

Fields are plain numpy arrays of shape ``grid.shape`` (complex by default).
Fourier coefficients use numpy's native FFT ordering and the unitary
(``norm="ortho"``) convention, so ``sum(|f|**2) == sum(|fhat|**2)`` exactly.
Integrals use the rectangle rule, ``integral(f) = cell_volume * f.sum()``,
which is spectrally accurate for smooth periodic functions.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

SOFT_COULOMB_A = 1.0


class GridMismatchError(ValueError):
    """Raised when a field does not live on the expected grid."""


class Grid:
    """Uniform periodic grid on ``[-L/2, L/2)**dim``.

    In three dimensions the interaction kernel is the Newtonian potential
    ``1/(4 pi |x|)`` solved spectrally (zero mode dropped, i.e. a uniform
    neutralizing background).  In one and two dimensions it is the soft
    Coulomb kernel ``1/sqrt(|x|**2 + a**2)`` applied as a periodic
    convolution of the sampled kernel.
    """

    def __init__(self, dim: int, points_per_axis: int, box_length: float,
                 soft_coulomb_a: float = SOFT_COULOMB_A):
        if dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
        n = int(points_per_axis)
        if n != points_per_axis or n < 8 or n & (n - 1):
            raise ValueError(
                f"points_per_axis must be a power of two >= 8, got {points_per_axis}")
        if not np.isfinite(box_length) or box_length <= 0:
            raise ValueError(f"box_length must be positive, got {box_length}")
        if soft_coulomb_a <= 0:
            raise ValueError("soft_coulomb_a must be positive")
        self.dim = dim
        self.n = n
        self.box_length = float(box_length)
        self.soft_coulomb_a = float(soft_coulomb_a)
        self.shape = (n,) * dim
        self.spacing = self.box_length / n
        self.cell_volume = self.spacing ** dim
        self.volume = self.box_length ** dim
        self.axis = -0.5 * self.box_length + self.spacing * np.arange(n)
        self.axis_wavevectors = 2 * np.pi * np.fft.fftfreq(n, d=self.spacing)

    def __repr__(self):
        return f"Grid(dim={self.dim}, points_per_axis={self.n}, box_length={self.box_length})"

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self.spec() == other.spec()

    def __hash__(self):
        return hash(tuple(self.spec().items()))

    def spec(self) -> dict:
        return {"dim": self.dim, "points_per_axis": self.n,
                "box_length": self.box_length, "soft_coulomb_a": self.soft_coulomb_a}

    @property
    def num_nodes(self) -> int:
        return self.n ** self.dim

    @cached_property
    def coords(self) -> tuple:
        """Node coordinates, one array of ``shape`` per axis."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def wavevectors(self) -> tuple:
        return tuple(np.meshgrid(*([self.axis_wavevectors] * self.dim), indexing="ij"))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(k ** 2 for k in self.wavevectors)

    @cached_property
    def kinetic_multiplier(self) -> np.ndarray:
        """Symbol of H0 = -Laplacian/2."""
        return 0.5 * self.k_squared

    @cached_property
    def kinetic_sqrt_multiplier(self) -> np.ndarray:
        """Symbol of H0**(1/2), i.e. |k|/sqrt(2)."""
        return np.sqrt(self.k_squared / 2)

    @cached_property
    def coulomb_multiplier(self) -> np.ndarray:
        if self.dim == 3:
            k2 = self.k_squared
            mult = np.zeros_like(k2)
            nonzero = k2 > 0
            mult[nonzero] = 1.0 / k2[nonzero]
            return mult
        # minimum-image distances; symmetric so the transform is real
        r2 = sum(self._min_image(x) ** 2 for x in self.coords)
        kernel = 1.0 / np.sqrt(r2 + self.soft_coulomb_a ** 2)
        kernel = np.roll(kernel, shift=[-(self.n // 2)] * self.dim, axis=tuple(range(self.dim)))
        return (np.fft.fftn(kernel) * self.cell_volume).real

    def _min_image(self, x):
        return x - self.box_length * np.round(x / self.box_length)

    def interaction_kernel(self, displacement: np.ndarray) -> np.ndarray:
        """Real-space pair kernel for displacement components (last axis = dim).

        Only defined for the soft-Coulomb (dim < 3) grids; it is the
        kernel whose periodic convolution ``coulomb_solve`` performs.
        """
        if self.dim == 3:
            raise ValueError("the 3D periodic Coulomb kernel has no closed form; use coulomb_solve")
        d = self._min_image(np.asarray(displacement, dtype=float))
        r2 = np.sum(d ** 2, axis=-1)
        return 1.0 / np.sqrt(r2 + self.soft_coulomb_a ** 2)

    def check(self, field: np.ndarray) -> np.ndarray:
        field = np.asarray(field)
        if field.shape != self.shape:
            raise GridMismatchError(f"field shape {field.shape} does not match grid {self.shape}")
        return field

    def integrate(self, field: np.ndarray):
        return self.cell_volume * np.sum(field)

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """Quadrature inner product, conjugate-linear in ``f``."""
        return self.cell_volume * np.vdot(f, g)

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(self.inner(f, f).real))


def make_grid(dim: int, points_per_axis: int, box_length: float) -> Grid:
    return Grid(dim, points_per_axis, box_length)


def transform_forward(grid: Grid, field: np.ndarray) -> np.ndarray:
    return np.fft.fftn(grid.check(field), norm="ortho")


def transform_inverse(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(grid.check(coeffs), norm="ortho")


def apply_multiplier(grid: Grid, field: np.ndarray, mult: np.ndarray) -> np.ndarray:
    """Multiply ``field`` by ``mult`` in Fourier space."""
    mult = grid.check(mult)
    return np.fft.ifftn(mult * np.fft.fftn(grid.check(field)))


def kinetic_phase(grid: Grid, field: np.ndarray, t: float) -> np.ndarray:
    """Apply exp(-i H0 t); unitary for any real t."""
    if t == 0:
        return np.array(grid.check(field), dtype=complex)
    return apply_multiplier(grid, field, np.exp(-1j * t * grid.kinetic_multiplier))


def gradient(grid: Grid, field: np.ndarray) -> list:
    coeffs = np.fft.fftn(grid.check(field))
    return [np.fft.ifftn(1j * k * coeffs) for k in grid.wavevectors]


def coulomb_solve(grid: Grid, source: np.ndarray) -> np.ndarray:
    """Solve -Laplacian(u) = source - mean(source) on a 3D grid.

    ``u`` is the periodic analogue of ``(1/(4 pi |x|)) * source``.  On 1D/2D
    grids this is instead the periodic convolution with the soft-Coulomb
    kernel.  Real sources give real output (up to round-off); complex
    sources are handled linearly.
    """
    return apply_multiplier(grid, source, grid.coulomb_multiplier)
