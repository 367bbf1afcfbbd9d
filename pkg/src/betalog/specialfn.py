"""Real special functions in double precision.

Everything here accepts a float or a numpy array and returns the same shape.
The β-dependent constants (``c_beta``, ``r_coeff``, ``c_tilde``) describe the
large-N behaviour of sums of log-gamma values over arithmetic progressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "SpecialConstants",
    "CONSTANTS",
    "log_gamma",
    "digamma",
    "trigamma",
    "log_barnes_g",
    "stirling_remainder",
    "stirling_bound_constant",
    "c_beta",
    "c_beta_partial",
    "r_coeff",
    "c_tilde",
]


@dataclass(frozen=True)
class SpecialConstants:
    euler_gamma: float
    zeta_prime_minus1: float
    log_2pi: float


# zeta'(-1) = 1/12 - log A, A = 1.2824271291006226368753425688697917277677 (Glaisher-Kinkelin)
CONSTANTS = SpecialConstants(
    euler_gamma=0.57721566490153286060651209008240243,
    zeta_prime_minus1=1.0 / 12.0 - 0.24875447703378426527730750909922365,
    log_2pi=1.8378770664093454835606594728112353,
)

_GAMMA = CONSTANTS.euler_gamma
_HALF_LOG_2PI = 0.5 * CONSTANTS.log_2pi

# B_2, B_4, ..., B_20
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
)

_ASYMPTOTIC_FROM = 12.0


def _zeta_minus_one(k: int) -> float:
    """ζ(k) − 1 for integer k ≥ 2 by Euler–Maclaurin with cutoff 20."""
    cut = 20
    s = math.fsum(n ** -float(k) for n in range(2, cut))
    s += cut ** (1.0 - k) / (k - 1) + 0.5 * cut ** -float(k)
    rising = float(k)  # (k)_{2j-1}
    fact = 2.0  # (2j)!
    for j, b in enumerate(_BERNOULLI[:8], start=1):
        s += b / fact * rising * cut ** (-k - 2.0 * j + 1.0)
        rising *= (k + 2 * j - 1) * (k + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return s


# log Γ(2+ε) = (1−γ)ε + Σ_{k≥2} (−1)^k (ζ(k)−1) ε^k / k, |ε| ≤ 1/2
_LG2_COEFFS = np.array(
    [0.0, 1.0 - _GAMMA] + [(-1) ** k * _zeta_minus_one(k) / k for k in range(2, 42)]
)


def _as_positive_array(x, lower: float = 0.0, name: str = "x") -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if lower == 0.0:
        if np.any(arr <= 0.0):
            raise ValueError(f"{name} must be positive")
    elif np.any(arr < lower):
        raise ValueError(f"{name} must be >= {lower}")
    return arr, scalar


def _wrap(out: np.ndarray, scalar: bool):
    return float(out[0]) if scalar else out


def _lgamma_two_plus(eps: np.ndarray) -> np.ndarray:
    # Horner in ε; constant term is zero so the result is relative-accurate near ε=0
    acc = np.zeros_like(eps)
    for c in _LG2_COEFFS[:0:-1]:
        acc = acc * eps + c
    return acc * eps


def _lgamma_stirling(x: np.ndarray) -> np.ndarray:
    inv = 1.0 / x
    inv2 = inv * inv
    series = np.zeros_like(x)
    for k in range(8, 0, -1):
        b = _BERNOULLI[k - 1]
        series = series * inv2 + b / (2 * k * (2 * k - 1))
    return (x - 0.5) * np.log(x) - x + _HALF_LOG_2PI + series * inv


def log_gamma(x):
    """log Γ(x) for x > 0, relative error below 1e-13."""
    x, scalar = _as_positive_array(x)
    out = np.empty_like(x)

    tiny = x < 0.5
    if tiny.any():
        t = x[tiny]
        out[tiny] = _lgamma_two_plus(t) - np.log(t) - np.log1p(t)

    low = (x >= 0.5) & (x < 1.5)
    if low.any():
        t = x[low]
        out[low] = _lgamma_two_plus(t - 1.0) - np.log1p(t - 1.0)

    mid = (x >= 1.5) & (x <= 2.5)
    if mid.any():
        out[mid] = _lgamma_two_plus(x[mid] - 2.0)

    up = (x > 2.5) & (x < _ASYMPTOTIC_FROM)
    if up.any():
        t = x[up]
        m = np.ceil(t - 2.5)
        base = t - m
        prod = np.ones_like(t)
        for i in range(1, int(m.max()) + 1):
            prod = np.where(i <= m, prod * (t - i), prod)
        out[up] = _lgamma_two_plus(base - 2.0) + np.log(prod)

    big = x >= _ASYMPTOTIC_FROM
    if big.any():
        out[big] = _lgamma_stirling(x[big])
    return _wrap(out, scalar)


def _shift_up(x: np.ndarray):
    """Return (x + m, m) with x + m >= _ASYMPTOTIC_FROM elementwise."""
    m = np.maximum(np.ceil(_ASYMPTOTIC_FROM - x), 0.0)
    return x + m, m


def digamma(x):
    """ψ(x) = d/dx log Γ(x) for x > 0."""
    x, scalar = _as_positive_array(x)
    z, m = _shift_up(x)
    shift = np.zeros_like(x)
    for i in range(int(m.max()) if m.size else 0):
        shift += np.where(i < m, 1.0 / (x + i), 0.0)
    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    for k in range(8, 0, -1):
        series = series * inv2 + _BERNOULLI[k - 1] / (2 * k)
    out = np.log(z) - 0.5 / z - series * inv2 - shift
    return _wrap(out, scalar)


def trigamma(x):
    """ψ′(x) for x > 0."""
    x, scalar = _as_positive_array(x)
    z, m = _shift_up(x)
    shift = np.zeros_like(x)
    for i in range(int(m.max()) if m.size else 0):
        shift += np.where(i < m, 1.0 / (x + i) ** 2, 0.0)
    inv = 1.0 / z
    inv2 = inv * inv
    series = np.zeros_like(z)
    for k in range(8, 0, -1):
        series = series * inv2 + _BERNOULLI[k - 1]
    out = inv + 0.5 * inv2 + series * inv2 * inv + shift
    return _wrap(out, scalar)


def _log_barnes_g_asymptotic(z: float) -> float:
    """log G(z) from the large-argument expansion, after shifting z up to >= 30."""
    shift = 0.0
    zz = float(z)
    if zz < 30.0:
        m = int(math.ceil(30.0 - zz))
        shift = math.fsum(log_gamma(zz + np.arange(m)))
        zz += m
    w = zz - 1.0
    lw = math.log(w)
    terms = [
        0.5 * w * w * lw,
        -0.75 * w * w,
        w * _HALF_LOG_2PI,
        -lw / 12.0,
        CONSTANTS.zeta_prime_minus1,
    ]
    inv2 = 1.0 / (w * w)
    p = inv2
    for k in range(1, 9):
        terms.append(_BERNOULLI[k] / (4 * k * (k + 1)) * p)
        p *= inv2
    return math.fsum(terms) - shift


def log_barnes_g(z) -> float:
    """log G(z) for real z >= 1.

    Integer arguments use the product G(1+N) = Π_{j=1}^{N-1} Γ(1+j); other
    arguments go through the asymptotic expansion.
    """
    z = float(z)
    if not math.isfinite(z) or z < 1.0:
        raise ValueError("log_barnes_g requires finite z >= 1")
    if z == math.floor(z) and z < 1e7:
        n = int(z) - 1
        if n <= 1:
            return 0.0
        return math.fsum(log_gamma(np.arange(2, n + 1, dtype=float)))
    return _log_barnes_g_asymptotic(z)


def _stirling_series_remainder(z: np.ndarray) -> np.ndarray:
    # terms k >= 2 of the Stirling series, i.e. everything after 1/(12 z)
    inv = 1.0 / z
    inv2 = inv * inv
    series = np.zeros_like(z)
    for k in range(8, 1, -1):
        series = series * inv2 + _BERNOULLI[k - 1] / (2 * k * (2 * k - 1))
    return series * inv2 * inv


def stirling_remainder(z):
    """r(z) = log Γ(1+z) − [(z+½)log z − z + ½ log 2π + 1/(12z)].

    For z >= 12 the value comes from the tail of the Stirling series, which
    avoids the cancellation in the defining difference.
    """
    z, scalar = _as_positive_array(z, name="z")
    out = np.empty_like(z)
    big = z >= _ASYMPTOTIC_FROM
    if big.any():
        out[big] = _stirling_series_remainder(z[big])
    small = ~big
    if small.any():
        t = z[small]
        bracket = (t + 0.5) * np.log(t) - t + _HALF_LOG_2PI + 1.0 / (12.0 * t)
        out[small] = log_gamma(1.0 + t) - bracket
    return _wrap(out, scalar)


@lru_cache(maxsize=None)
def stirling_bound_constant(z_min: float = 5.0) -> float:
    """Empirical sup of |r(z)| z² over z >= z_min (log-spaced grid up to 1e8)."""
    z = np.geomspace(z_min, 1e8, 4001)
    return float(np.max(np.abs(stirling_remainder(z)) * z * z))


def _hurwitz_zeta(s: int, a: float) -> float:
    """ζ(s, a) for integer s >= 2 and a >= 10 by Euler–Maclaurin."""
    terms = [a ** (1.0 - s) / (s - 1), 0.5 * a ** -float(s)]
    rising = float(s)
    fact = 2.0
    for j, b in enumerate(_BERNOULLI[:6], start=1):
        terms.append(b / fact * rising * a ** (-s - 2.0 * j + 1.0))
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return math.fsum(terms)


def c_beta_partial(beta: float, m: int) -> float:
    """C_M(β): the defining sum truncated after M terms."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if beta == 2.0:
        return 0.0
    j = np.arange(1, m + 1, dtype=float)
    terms = stirling_remainder(beta * j / 2.0) - (beta / 2.0) * stirling_remainder(j)
    return math.fsum(terms) - (beta / 2.0 - 2.0 / beta) * _GAMMA / 12.0


@lru_cache(maxsize=256)
def _c_beta_cached(beta: float, tol: float) -> tuple[float, int]:
    # r(z) = -1/(360 z^3) + θ/(1260 z^5), θ ∈ (0,1): sum M terms, add the z^-3 tail
    # exactly, and pick M so the z^-5 envelope of what is left is below tol
    amp5 = (2.0 / beta) ** 5 + beta / 2.0
    m = int(math.ceil((amp5 / (1260.0 * 4.0 * tol)) ** 0.25))
    m = max(m, int(math.ceil(24.0 / beta)), 24)
    head = c_beta_partial(beta, m)
    tail3 = -((2.0 / beta) ** 3 - beta / 2.0) / 360.0 * _hurwitz_zeta(3, m + 1.0)
    return head + tail3, m


def c_beta(beta: float, tol: float = 1e-12) -> float:
    """C(β) = lim_M C_M(β), certified to within ``tol``. Exactly 0 at β = 2."""
    if beta <= 0 or tol <= 0:
        raise ValueError("beta and tol must be positive")
    if beta == 2.0:
        return 0.0
    return _c_beta_cached(float(beta), float(tol))[0]


def r_coeff(beta: float) -> float:
    """Coefficient of log N in the expansion of log Z^Her: β/24 + 1/4 + 1/(6β)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return beta / 24.0 + 0.25 + 1.0 / (6.0 * beta)


def c_tilde(beta: float, printed_form: bool = False) -> float:
    """Constant term of log Z^Her_N(β).

    The default multiplies ζ′(−1) by β/2, which is what the Barnes G expansion
    of (β/2) Σ log Γ(1+j) produces; ``printed_form=True`` keeps the bare ζ′(−1).
    Both coincide at β = 2.
    """
    zeta_term = CONSTANTS.zeta_prime_minus1
    if not printed_form:
        zeta_term *= beta / 2.0
    return c_beta(beta) + 0.25 * (1.0 + beta / 2.0) * CONSTANTS.log_2pi + zeta_term
