"""Commuting versus non-commuting Hamiltonians on the circle.

G is the pendulum and H = phi(G) with phi(h) = (h + 1) + (h + 1)^2 / 2, so
{G, H} = 0; the control replaces H by p^2/2 + cos(4 pi x).  For each pair the
suite measures, along a refinement ladder, how far the two Lax-Oleinik
semigroups, their weak KAM solutions, Peierls barriers and Aubry sets are
from agreeing, and turns each series into a verdict.

Run with ``python3 demos/commuting_pair.py``.
"""

import warnings

import numpy as np

from wkam.commute import run_pair_suite
from wkam.registry import build_model

warnings.simplefilter("ignore")

G = build_model("pendulum(1)")
for partner in ("composed(pendulum(1),quad(1))", "pendulum(1,2)"):
    rep = run_pair_suite(G, build_model(partner), c_nodes=np.linspace(-2, 2, 17), flat_level=0)
    print(rep.text())
    print()
