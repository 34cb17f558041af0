"""
Free spreading of a Gaussian wave packet
========================================

With interactions off a single orbital evolves by the kinetic phase alone.
The position variance of |phi|**2 grows as sigma**2 + t**2 / (4 sigma**2).
"""

import numpy as np

from tdhf import make_grid, new_state, free_evolve, particle_density
from tdhf.runner import gaussian_orbital

grid = make_grid(3, 32, 20.0)
sigma = 1.0
rho = new_state(grid, [1.0], [gaussian_orbital(grid, (0, 0, 0), sigma)])
x = grid.coords[0]

print(f"{'t':>5} {'<x^2> grid':>12} {'analytic':>12}")
for t in np.linspace(0, 3, 7):
    n = particle_density(free_evolve(rho, t))
    print(f"{t:5.2f} {grid.integrate(x ** 2 * n):12.6f} {sigma ** 2 + t ** 2 / (4 * sigma ** 2):12.6f}")
