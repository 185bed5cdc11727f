"""Area against the bound for the analytic test surfaces.

The flat disk orthogonal to y attains the bound. A disk through y in another
direction, the catenoid and the cone exceed it.
"""

import math

import numpy as np

from ballbound import CalibrationField, CatenoidPiece, FlatDisk, MinimalCone
from ballbound.verify import check_bound

cases = [
    ("flat disk orthogonal to y", FlatDisk.orthogonal_to([0, 0, 0.6]), [0, 0, 0.6]),
    ("disk through y and the origin", FlatDisk.containing([0.6, 0, 0], [0, 1, 0]), [0.6, 0, 0]),
    ("catenoid c=0.5", CatenoidPiece(0.5), [0.5, 0, 0]),
    ("Clifford cone, apex", MinimalCone(), np.zeros(4)),
]
for name, surf, y in cases:
    b = check_bound(surf, CalibrationField(y, surf.k))
    print(f"{name:32s} area {b.area:.10f}  bound {b.bound:.10f}  margin {b.margin:.10f}")

print("0.36 pi          =", 0.36 * math.pi)
print("2pi^2/3 - 4pi/3  =", 2 * math.pi**2 / 3 - 4 * math.pi / 3)

# the catenoid only fits for waists below 1
for c in (0.2, 0.5, 0.9, 0.99):
    cat = CatenoidPiece(c)
    print(f"c={c}: rim height z1={cat.z1:.8f}, area {cat.area():.8f}")
