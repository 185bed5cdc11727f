"""Full verification reports, analytic and on a solved mesh.

Each report holds the bound margin, the divergence identity on Sigma minus a
small ball, the flux ladder and its extrapolated limit, and the rigidity
check. The cone fails the flux-limit verdict: its apex is not a smooth point.
"""

import numpy as np

from ballbound import CalibrationField, CatenoidPiece, FlatDisk, MinimalCone, minimize, perturbed_disk_problem, verify

for name, surf, y in (
    ("equality disk", FlatDisk.orthogonal_to([0, 0, 0.6]), [0, 0, 0.6]),
    ("catenoid", CatenoidPiece(0.5), [0.5, 0, 0]),
    ("cone", MinimalCone(), np.zeros(4)),
):
    rep = verify(surf, CalibrationField(y, surf.k))
    print(f"{name}: margin {rep.margin:.6g}, flux limit {rep.flux_limit_extrapolated:.8f} "
          f"vs {rep.flux_limit_target:.8f}, verdicts {rep.verdicts}")

mesh = minimize(perturbed_disk_problem([0, 0, 0.6], 16)).mesh
rep = verify(mesh, CalibrationField([0, 0, 0.6], 2))
print("solved mesh:", rep.verdicts, rep.notes)
print(rep.flux_csv())
