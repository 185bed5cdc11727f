"""Random search for a violation of the trace inequality div W <= 1.

Runs the seeded fuzzer over the default dimension grid and prints the worst
case found. Set BALLBOUND_MAX_WORKERS to spread the groups over threads; the
result does not depend on it.
"""

import time

from ballbound import fuzz

start = time.perf_counter()
res = fuzz(100_000, seed=1)
print(f"{res.samples} samples in {time.perf_counter() - start:.2f} s")
print(f"min deficit            {res.min_deficit:.3e}")
print(f"near-equality min      {res.near_equality_min_deficit:.3e}")
print(f"FD checks / max rel    {res.fd_checked} / {res.fd_max_rel_err:.2e}")
for g in res.groups:
    print(f"  k={g.k} n={g.n}: {g.samples:6d} samples, min deficit {g.min_deficit:.3e}")
print("passed" if res.passed() else "FAILED")
