"""
How long the estimates hold
===========================

The error bounds hold up to a horizon ``T*`` where
``alpha B [sqrt(2T/pi) + alpha B_tilde T^((1+beta)/2)]^beta = 1``.
Larger constants or stronger feedback shrink it.
"""

from mvparticles.model import TheoryConstants
from mvparticles.theory import check_extension_condition, extension_lhs, solve_T_star

###############################################################################
# T* as the feedback grows
# ------------------------
consts = TheoryConstants(beta=1.0, B=1.0, B_hat=1.0, B_tilde=1.0)
for alpha in (0.25, 0.5, 1.0, 2.0):
    T = solve_T_star(alpha, consts)
    print(
        f"alpha={alpha:4.2f}  T*={T:.6f}  extension lhs {extension_lhs(alpha, consts, T):.3f}"
        f"  extends: {check_extension_condition(alpha, consts, T)}"
    )
