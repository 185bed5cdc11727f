"""A tour of the calibration field W.

Evaluates W at a few points, checks that it vanishes on the unit sphere,
compares the closed-form trace with finite differences, and shows how close
the leading term is near y.
"""

import numpy as np

from ballbound import CalibrationField, TangentFrame, asymptotic_leading, deficit, divergence_trace, eval_W
from ballbound.field import divergence_trace_fd

y = np.array([0.0, 0.0, 0.6])
field = CalibrationField(y, k=2)

print("W at the origin-centred example:", eval_W(CalibrationField(np.zeros(3), 2), [0.5, 0, 0]))

# W is zero on the sphere, which kills the outer boundary term
rng = np.random.default_rng(0)
sphere = rng.standard_normal((1000, 3))
sphere /= np.linalg.norm(sphere, axis=1)[:, None]
print("max |W| on the sphere:", np.abs(eval_W(field, sphere)).max())

# tangential divergence on two planes through the same point
x = np.array([0.3, 0.1, 0.6])
flat = TangentFrame([[1, 0, 0], [0, 1, 0]])
tilted = TangentFrame.from_vectors([[1, 0, 0.4], [0, 1, 0]])
for name, frame in (("plane orthogonal to y", flat), ("tilted plane", tilted)):
    tr = divergence_trace(field, x, frame)
    fd = divergence_trace_fd(field, x, frame, 1e-5)
    print(f"{name}: trace {tr:.12f}  fd {fd:.12f}  deficit {deficit(field, x, frame):.3e}")

# near y, W looks like the leading term; the ratio drifts like t log(1/t) for k = 2
d = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
for t in (1e-2, 1e-3, 1e-4, 1e-5):
    w, lead = eval_W(field, y + t * d), asymptotic_leading(field, y + t * d)
    print(f"t={t:.0e}  |W|/|lead| = {np.linalg.norm(w) / np.linalg.norm(lead):.6f}")
