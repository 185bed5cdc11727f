"""Discrete area minimisation of a jittered disk.

The interior of a flat disk is jittered along the normal and the solver pulls
it back. The boundary stays on the sphere and the centre vertex stays pinned.
"""

import math

from ballbound import SolverConfig, minimize, perturbed_disk_problem

y = [0.0, 0.0, 0.6]
target = math.pi * 0.64
for rings in (8, 16, 32):
    res = minimize(perturbed_disk_problem(y, rings), SolverConfig(remesh=True))
    print(
        f"{rings:2d} rings: area {res.area:.8f} (rel err {(res.area - target) / target:+.2e}), "
        f"{res.iterations} iterations, {res.flips} flips, monotone={res.monotone()}"
    )
