"""Smoothing a critical subsolution by alternating Lax-Oleinik steps.

The seed is the distance to x = 1/2, a subsolution of H = p^2/2 at level 1/2
with a convex kink at 1/2 and a concave one at 0.  Each round applies the
negative semigroup for time e and the positive one for e/2; with kernels
built at those times the curvature of the output is of order 1/e and the
subsolution inequality is kept.

Run with ``python3 demos/regularize_subsolution.py``.
"""

import warnings

from wkam.kernel import build_kernel
from wkam.model import TorusGrid, torus_distance
from wkam.registry import build_model
from wkam.regularize import RegularizationSchedule, lasry_lions, smoothness_profile
from wkam.transform import legendre
from wkam.weakkam import check_subsolution

warnings.simplefilter("ignore")

n, tau, level = 256, 0.01, 0.5
grid = TorusGrid.regular(n)
L = legendre(build_model("quadratic"), grid)
Km, Kp = build_kernel(L, tau), build_kernel(L, tau, "positive")
u0 = torus_distance(grid, [0.5])

print("seed       lip %.3f  semi_cc %7.1f  semi_cv %7.1f" % smoothness_profile(u0))
for steps in ((16, 8, 4), (8, 4, 2), (4, 2, 1)):
    S = RegularizationSchedule(steps)
    for mode, table in (("composed", None), ("direct", L)):
        u = lasry_lions(u0, Km, Kp, level, S, table=table)
        lip, cc, cv = smoothness_profile(u)
        print(f"{str(steps):<11s}{mode:<9s} lip {lip:.3f}  semi_cc {cc:7.1f}  semi_cv {cv:7.1f}  "
              f"violation {check_subsolution(u, Km, level):.1e}")
