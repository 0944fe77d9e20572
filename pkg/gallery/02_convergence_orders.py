"""
Convergence in the number of time steps
=======================================

Paired runs share Brownian paths across meshes with ``n`` and ``2n``
steps, so ``|L^{2n}_T - L^n_T|`` isolates the time discretisation
error. With a smooth loss the plain scheme converges at order about
1/2 and the bridge scheme at about 1.

This is a reduced version of ``configs/lipschitz_*.toml``; expect wide
confidence intervals at this particle count.
"""

from mvparticles.analysis import fit_order
from mvparticles.config import parse_config
from mvparticles.experiments import paired_errors

CONFIG = """
N = 20000
seed = 100
n_seeds = 8
[model]
alpha = 0.8
horizon = 2.0
[law]
kind = "reciprocal_exp"
rate = 1.0
[mesh]
n_list = [50, 100, 200, 400, 800]
"""

###############################################################################
# Paired errors and fitted order per scheme
# -----------------------------------------
for scheme in ("plain", "bridge"):
    cfg = parse_config(f'scheme = "{scheme}"\n' + CONFIG)
    ns, errs, _ = paired_errors(cfg)
    rep = fit_order(ns, errs)
    print(scheme)
    for n, e in zip(ns, errs):
        print(f"  n={n:4d}  |L^2n - L^n| = {e:.2e}")
    print(f"  order {rep.fitted_order:.2f}  95% CI ({rep.ci95[0]:.2f}, {rep.ci95[1]:.2f})")
