"""
A jump in the loss
==================

For large feedback the loss jumps: losses push surviving particles
towards zero, which produces more losses within the same instant. The
discrete schemes smooth the jump over a few steps, and pointwise errors
stop being meaningful. The distances d1 (L1 between curves), d2 (jump
times) and d3 (L1 between generalised inverses) still show convergence.
"""

import numpy as np

from mvparticles.analysis import detect_jump, fit_order
from mvparticles.config import parse_config
from mvparticles.experiments import blowup_metrics

CONFIG = """
scheme = "plain"
N = 20000
seed = 500
n_seeds = 4
[model]
alpha = 1.5
horizon = 0.008
[law]
kind = "gamma"
shape = 1.5
scale = 0.5
[mesh]
n_list = [100, 200, 400, 800, 1600]
"""

###############################################################################
# Jumps and paired distances
# --------------------------
ns, metrics, jumps, curves = blowup_metrics(parse_config(CONFIG))
for c in curves:
    j = detect_jump(c)
    print(f"n={c.mesh.n:5d}  jump of {j.size:.3f} at t={j.time:.5f}, median step {np.median(np.diff(c.values)):.1e}")

for name, values in metrics.items():
    rep = fit_order(ns, values)
    print(f"{name}: " + " ".join(f"{v:.2e}" for v in values) + f"  order {rep.fitted_order:.2f}")
