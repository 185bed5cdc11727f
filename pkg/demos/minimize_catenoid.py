"""From a cylinder to the catenoid.

Two boundary circles on the sphere are joined by a cylinder through the
pinned waist point; minimisation relaxes it to the catenoid piece.
"""

from ballbound import CatenoidPiece, SolverConfig, catenoid_problem, minimize

c = 0.5
exact = CatenoidPiece(c).area()
start = catenoid_problem(c, 8)
res = minimize(start, SolverConfig(max_iterations=4000, relaxation=1.8))
print(f"start area {res.area_history[0]:.6f}")
print(f"final area {res.area:.6f}  exact {exact:.6f}  rel err {(res.area - exact) / exact:+.2e}")
print(f"converged={res.converged} after {res.iterations} iterations")
