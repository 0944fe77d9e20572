"""
Switching the feedback off
==========================

With ``alpha = 0`` the loss is the probability that a Brownian motion
started at ``Y0`` has hit zero, which for a point mass at 1 is
``2 Phi(-1/sqrt(t))``. The bridge scheme reproduces it without bias;
the plain scheme only looks at mesh points and misses crossings
between them.
"""

import math

import numpy as np

from mvparticles import ModelParams, build_uniform_mesh, make_ensemble, simulate
from mvparticles.model import Dirac

###############################################################################
# One ensemble, both schemes
# --------------------------
mesh = build_uniform_mesh(256, 1.0)
ens = make_ensemble(Dirac(1.0), mesh, 100_000, seed=3)
params = ModelParams(alpha=0.0, horizon=1.0)

bridge, _ = simulate(params, ens, "bridge")
plain, _ = simulate(params, ens, "plain")

###############################################################################
# Compare with the closed form
# ----------------------------
exact = np.array([math.erfc(1 / math.sqrt(2 * t)) if t > 0 else 0.0 for t in mesh.times])
for t in (0.25, 0.5, 1.0):
    i = int(np.searchsorted(mesh.times, t))
    print(f"t={t:4.2f}  exact {exact[i]:.5f}  bridge {bridge.values[i]:.5f}  plain {plain.values[i]:.5f}")

se = math.sqrt(exact[-1] * (1 - exact[-1]) / ens.N)
print(f"bridge error at T: {abs(bridge.values[-1] - exact[-1]) / se:.1f} standard errors")
print(f"plain error at T:  {(exact[-1] - plain.values[-1]) / se:.1f} standard errors (always low)")
