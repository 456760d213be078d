"""Finite-length reference curves.

* ``ppv_bec``: normal approximation to the best word error probability on
  the BEC at length n and rate R.
* ``shannon_sphere_bound``: Shannon's 1959 approximation for optimal
  spherical codes on the AWGN channel, with the cone half-angle from
  ``shannon_cone_angle``.

Both are approximations and are labelled as such in emitted metadata.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

log = logging.getLogger(__name__)

PPV_NAME = "PPV normal approximation (BEC)"
SHANNON_NAME = "Shannon 1959 sphere-packing approximation (AWGN)"


class NoRoot(ArithmeticError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class BoundPoint:
    channel_param: float
    p_ew: float
    meta: dict = field(default_factory=dict)


def q_func(x):
    """Gaussian tail probability P(N(0,1) > x)."""
    return special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0)) / 2.0


def _clamp(p: float, what: str) -> float:
    if p > 1.0:
        log.info("clamping %s value %.6g to 1", what, p)
        return 1.0
    return p


def ppv_bec(n: int, R: float, eps: float) -> BoundPoint:
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie strictly between 0 and 1")
    arg = (1.0 - eps - R) / math.sqrt(eps * (1.0 - eps)) * math.sqrt(n)
    p = float(q_func(arg))
    return BoundPoint(eps, _clamp(p, "PPV"), {"n": n, "R": R, "bound": PPV_NAME})


def _cone_equation(theta: float, n: int, R: float) -> float:
    """log RHS - log LHS of 2^{nR} = sqrt(2 pi n) sin(t) cos(t) / sin(t)^n."""
    s = math.sin(theta)
    return 0.5 * math.log(2 * math.pi * n) + math.log(s) + math.log(math.cos(theta)) - n * math.log(s) - n * R * math.log(2.0)


def shannon_cone_angle(n: int, R: float, iters: int = 200) -> float:
    """Cone half-angle theta_0 in (0, pi/2), by bisection in the log domain.

    The log equation is strictly decreasing in theta for n > 1, going from
    +inf at 0 to -inf at pi/2.
    """
    if not 0 < R < 1:
        raise ValueError("rate must lie in (0, 1)")
    if n < 8:
        raise ValueError("n must be at least 8")
    lo, hi = 1e-300, math.pi / 2 - 1e-15
    f_lo, f_hi = _cone_equation(lo, n, R), _cone_equation(hi, n, R)
    if not (f_lo > 0 > f_hi):
        raise NoRoot(f"cone-angle equation not bracketed for n={n}, R={R}")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _cone_equation(mid, n, R) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cone_residual(theta: float, n: int, R: float) -> float:
    return abs(_cone_equation(theta, n, R))


def shannon_log_pew(n: int, R: float, ebn0_db: float, theta0: float | None = None) -> float:
    """Natural log of the sphere-packing word error approximation."""
    if theta0 is None:
        theta0 = shannon_cone_angle(n, R)
    snr = R * 10.0 ** (ebn0_db / 10.0)  # R Eb/N0
    A = math.sqrt(2.0 * snr)
    s, c = math.sin(theta0), math.cos(theta0)
    G = 0.5 * (A * c + math.sqrt(A * A * c * c + 4.0))
    denom = A * G * s * s - c
    if denom <= 0:
        raise DomainError(f"approximation invalid at {ebn0_db} dB (denominator {denom:.3g} <= 0)")
    return (
        -0.5 * math.log(n * math.pi)
        - 0.5 * math.log1p(G * G)
        - math.log(s)
        + n * (math.log(G * s) - snr + 0.5 * A * G * c)
        - math.log(denom)
    )


def shannon_sphere_bound(n: int, R: float, ebn0_db: float, theta0: float | None = None) -> BoundPoint:
    p = math.exp(shannon_log_pew(n, R, ebn0_db, theta0))
    return BoundPoint(ebn0_db, _clamp(p, "sphere-packing"), {"n": n, "R": R, "bound": SHANNON_NAME})


def shannon_curve(n: int, R: float, ebn0_grid) -> list[BoundPoint]:
    theta0 = shannon_cone_angle(n, R)
    return [shannon_sphere_bound(n, R, float(x), theta0) for x in ebn0_grid]


def ppv_curve(n: int, R: float, eps_grid) -> list[BoundPoint]:
    return [ppv_bec(n, R, float(e)) for e in eps_grid]
