"""
Hartree potential of a Gaussian charge cloud
============================================

The spectral Poisson solve on the periodic box is compared with the
free-space potential erf(r / (sqrt(2) sigma)) / (4 pi r).  Far from the
cloud the two differ by the periodic images and the neutralizing background.
"""

import numpy as np
from scipy.special import erf

from tdhf import make_grid, new_state
from tdhf.meanfield import hartree_potential
from tdhf.runner import gaussian_orbital

L, sigma = 20.0, 0.5
grid = make_grid(3, 64, L)
# |phi|**2 has standard deviation sigma
rho = new_state(grid, [1.0], [gaussian_orbital(grid, (0, 0, 0), sigma)])
v = hartree_potential(rho)

i = grid.n // 2
print(f"{'r':>6} {'periodic':>12} {'free space':>12}")
for step in (2, 4, 8, 16, 24):
    r = step * grid.spacing
    free = erf(r / (np.sqrt(2) * sigma)) / (4 * np.pi * r)
    print(f"{r:6.3f} {v[i + step, i, i]:12.6f} {free:12.6f}")
