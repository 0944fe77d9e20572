"""Horizon up to which the convergence analysis applies, and its extension test.

Both take the bounds ``B``, ``B_hat`` (and ``B_tilde``) as inputs. Larger,
more conservative constants give a smaller ``T*``.
"""

from __future__ import annotations

import math

from .model import TheoryConstants

__all__ = ["t_star_lhs", "solve_T_star", "check_extension_condition", "extension_lhs"]


def t_star_lhs(T: float, alpha: float, consts: TheoryConstants) -> float:
    """``alpha B [sqrt(2T/pi) + alpha B_tilde T^((1+beta)/2)]^beta``; increasing in ``T``."""
    b = consts.beta
    return alpha * consts.B * (math.sqrt(2 * T / math.pi) + alpha * consts.B_tilde * T ** ((1 + b) / 2)) ** b


def solve_T_star(alpha: float, consts: TheoryConstants, eps: float = 1e-300) -> float:
    """Root of ``t_star_lhs(T) = 1`` by bisection.

    The upper end of the bracket starts at 1 and doubles until the left side
    exceeds 1. Bisection runs until the bracket cannot shrink in floating
    point; the endpoint with the smaller residual is returned.
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha!r}")

    def g(T):
        return t_star_lhs(T, alpha, consts) - 1.0

    lo = eps
    if g(lo) >= 0:
        raise ArithmeticError("left side already exceeds 1 at T ~ 0")
    hi = 1.0
    while g(hi) <= 0:
        hi *= 2.0
        if not math.isfinite(hi) or not math.isfinite(g(hi)):
            raise OverflowError("could not bracket T*: left side overflowed")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return lo if abs(g(lo)) <= abs(g(hi)) else hi


def extension_lhs(alpha: float, consts: TheoryConstants, T_star: float) -> float:
    """``2 alpha (B_hat T*^(-(1-beta)/2) + 1/sqrt(T*))``."""
    if not (math.isfinite(T_star) and T_star > 0):
        raise ValueError(f"T_star must be positive, got {T_star!r}")
    return 2 * alpha * (consts.B_hat * T_star ** (-(1 - consts.beta) / 2) + 1 / math.sqrt(T_star))


def check_extension_condition(alpha: float, consts: TheoryConstants, T_star: float) -> bool:
    """Whether the convergence result extends past ``T*`` (strict inequality ``< 1``)."""
    return extension_lhs(alpha, consts, T_star) < 1.0
