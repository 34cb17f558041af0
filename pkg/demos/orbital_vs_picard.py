"""
Two formulations of the same dynamics
=====================================

A rank-2 state on a 1D soft-Coulomb grid is propagated with the orbital
split-step scheme and with Picard iteration on the operator equation.
"""

import numpy as np

from tdhf import make_grid, new_state, PropagatorConfig, run_orbital, picard_solve
from tdhf.runner import gaussian_orbital
from tdhf.state import trace_norm_distance

grid = make_grid(1, 128, 30.0)
rho = new_state(grid, [0.6, 0.4], [gaussian_orbital(grid, (-1.5,), 1.0),
                                   gaussian_orbital(grid, (1.5,), 0.8, (0.7,))])

T = 0.2
picard = picard_solve(rho, T, PropagatorConfig(dt=0.05, t_final=T, scheme="picard_operator"))
for w, info in enumerate(picard.picard_log):
    print(f"window {w}: iterate distances", np.array2string(np.array(info["distances"]), precision=2))

for dt in (1e-2, 1e-3, 1e-4):
    orbital = run_orbital(rho, PropagatorConfig(dt=dt, t_final=T, sample_stride=int(round(T / dt))))
    print(f"dt = {dt:.0e}: |||rho_orbital - rho_picard|||_1 = {trace_norm_distance(orbital.final, picard.final):.2e}")
