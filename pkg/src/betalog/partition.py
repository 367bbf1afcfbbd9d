"""Selberg-product partition functions and the exact cumulants they generate.

log Z for the Hermite, Circular, Laguerre and Jacobi ensembles is a finite sum
of log-gamma terms whose arguments are affine in the parameters, so its
derivatives are finite sums of digamma and trigamma values.  Two directions
are exposed:

* the plain β-derivative at fixed α, μ, ν;
* the *tempering* derivative along P ↦ P^t, i.e. β → tβ together with
  (α−1, μ−1, ν−1) → t·(α−1, μ−1, ν−1).  log Z(t) is the cumulant generating
  function of log P + log Z, so its first two t-derivatives at t=1 give the
  exact mean and variance of the log-density.  For Hermite and Circular the
  two coincide up to the factors β and β².

Interaction sums follow the ordered-pair convention Σ_{i≠j}.  Closed forms
printed with the unordered convention are available with ``printed_form=True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import EnsembleSpec, Kind, UnsupportedKindError
from .specialfn import (
    CONSTANTS,
    c_tilde,
    digamma,
    log_gamma,
    r_coeff,
    trigamma,
)

__all__ = [
    "PartitionEvaluation",
    "AsymptoticCoefficients",
    "log_z_exact",
    "clt_variance",
    "entropy_constant",
    "expected_x_stat",
    "exact_y_variance",
    "centering_constant",
    "asymptotic_coefficients",
    "log_z_asymptotic",
    "ground_state_energy",
    "HERMITE_ENERGY",
]

HERMITE_ENERGY = -0.75


class _Jet:
    """Value with first and second derivative along one parameter direction."""

    __slots__ = ("v", "d1", "d2")

    def __init__(self, v, d1=0.0, d2=0.0):
        self.v, self.d1, self.d2 = v, d1, d2

    def __add__(self, other):
        if isinstance(other, _Jet):
            return _Jet(self.v + other.v, self.d1 + other.d1, self.d2 + other.d2)
        return _Jet(self.v + other, self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self):
        return _Jet(-self.v, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, _Jet):
            return _Jet(
                self.v * other.v,
                self.d1 * other.v + self.v * other.d1,
                self.d2 * other.v + 2 * self.d1 * other.d1 + self.v * other.d2,
            )
        return _Jet(self.v * other, self.d1 * other, self.d2 * other)

    __rmul__ = __mul__

    def __truediv__(self, other: float):
        return _Jet(self.v / other, self.d1 / other, self.d2 / other)


def _jlog(u: _Jet) -> _Jet:
    return _Jet(np.log(u.v), u.d1 / u.v, u.d2 / u.v - (u.d1 / u.v) ** 2)


def _jlgamma(u: _Jet) -> _Jet:
    psi = digamma(u.v)
    return _Jet(log_gamma(u.v), psi * u.d1, trigamma(u.v) * u.d1**2 + psi * u.d2)


def _jsum(u: _Jet) -> _Jet:
    def total(a):
        return math.fsum(np.ravel(a)) if np.ndim(a) else float(a)

    return _Jet(total(u.v), total(u.d1), total(u.d2))


@dataclass(frozen=True)
class PartitionEvaluation:
    """log Z_N and its analytic derivatives.

    ``dlog_z_dt``/``d2log_z_dt2`` are the tempering derivatives (see module
    docstring); they equal β·∂_β and β²·∂²_β for Hermite and Circular.
    """

    n: int
    log_z: float
    dlog_z_dbeta: float
    d2log_z_dbeta2: float
    dlog_z_dt: float
    d2log_z_dt2: float


@dataclass(frozen=True)
class AsymptoticCoefficients:
    e0: float
    f0: float
    r: float
    c_tilde: float


def _log_z_jet(kind: Kind, n: int, beta: _Jet, alpha=None, mu=None, nu=None) -> _Jet:
    N = float(n)
    half_beta = beta / 2.0
    if kind is Kind.HERMITE:
        j = np.arange(1, n + 1, dtype=float)
        exponent = (N / 2.0) * ((N - 1.0) / 2.0 * beta + 1.0)
        out = N / 2.0 * CONSTANTS.log_2pi - exponent * _jlog(half_beta * N)
        out = out + _jsum(_jlgamma(half_beta * j + 1.0))
        return out - N * _jlgamma(half_beta + 1.0)
    if kind is Kind.CIRCULAR:
        out = N * CONSTANTS.log_2pi + _jlgamma(half_beta * N + 1.0)
        return out - N * _jlgamma(half_beta + 1.0)
    j = np.arange(0, n, dtype=float)
    common = _jsum(_jlgamma(half_beta * (j + 1.0) + 1.0)) - N * _jlgamma(half_beta + 1.0)
    if kind is Kind.LAGUERRE:
        exponent = N * (N - 1.0) / 2.0 * beta + alpha * N
        out = common - exponent * _jlog(beta * N)
        return out + _jsum(_jlgamma(half_beta * j + alpha))
    if kind is Kind.JACOBI:
        exponent = N * (N - 1.0) / 2.0 * beta + N * (mu + nu - 1.0)
        out = common + exponent * math.log(2.0)
        out = out + _jsum(_jlgamma(half_beta * j + mu)) + _jsum(_jlgamma(half_beta * j + nu))
        return out - _jsum(_jlgamma(half_beta * (N + j - 1.0) + (mu + nu)))
    raise UnsupportedKindError(f"no closed-form partition function for {kind.value}")


def _jets(spec: EnsembleSpec, n: int, direction: str) -> _Jet:
    b = spec.beta
    if direction == "beta":
        beta = _Jet(b, 1.0)
        extra = {
            name: _Jet(getattr(spec, name), 0.0)
            for name in ("alpha", "mu", "nu")
            if getattr(spec, name) is not None
        }
    else:
        beta = _Jet(b, b)
        extra = {
            name: _Jet(getattr(spec, name), getattr(spec, name) - 1.0)
            for name in ("alpha", "mu", "nu")
            if getattr(spec, name) is not None
        }
    return _log_z_jet(spec.kind, n, beta, **extra)


def _require_closed_form(spec: EnsembleSpec) -> None:
    if not spec.closed_form:
        raise UnsupportedKindError(
            "general potentials have no closed-form partition function"
        )


def log_z_exact(spec: EnsembleSpec, n: int) -> PartitionEvaluation:
    """Exact log Z_N with its β- and tempering derivatives."""
    _require_closed_form(spec)
    if n < 1:
        raise ValueError("n must be >= 1")
    along_beta = _jets(spec, n, "beta")
    tempered = _jets(spec, n, "tempered")
    return PartitionEvaluation(
        n=n,
        log_z=float(along_beta.v),
        dlog_z_dbeta=float(along_beta.d1),
        d2log_z_dbeta2=float(along_beta.d2),
        dlog_z_dt=float(tempered.d1),
        d2log_z_dt2=float(tempered.d2),
    )


def clt_variance(beta: float) -> float:
    """Limiting variance of N^{-1/2}(log P + N E_β): β/2 − (β²/4) ψ′(1+β/2)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return float(beta / 2.0 - beta * beta / 4.0 * trigamma(1.0 + beta / 2.0))


def _entropy_hermite(beta: float) -> float:
    x = 1.0 + beta / 2.0
    return float(CONSTANTS.log_2pi - log_gamma(x) + beta / 2.0 * digamma(x) - beta / 2.0 - 0.5)


def entropy_constant(spec: EnsembleSpec, printed_form: bool = False) -> float:
    """Almost-sure limit of X_N = −log P_N / N for the classical ensembles.

    Hermite and Circular have a single closed form.  For Laguerre and Jacobi
    the default is the limit of the exact cumulant oracle (independent of α,
    μ, ν at fixed parameters); ``printed_form=True`` returns the
    parameter-dependent closed forms exactly as printed.
    """
    if spec.kind is Kind.GENERAL:
        raise UnsupportedKindError("use equilibrium.entropy_constant_general for general potentials")
    b = spec.beta
    her = _entropy_hermite(b)
    cir = her + 0.5
    if spec.kind is Kind.HERMITE:
        return her
    if spec.kind is Kind.CIRCULAR:
        return cir
    if spec.kind is Kind.LAGUERRE:
        if printed_form:
            a = spec.alpha
            return cir + a * math.log(b * b / 2.0) - a - b * math.log(b)
        return cir - 1.0 - math.log(2.0)
    if printed_form:
        return cir - (spec.mu + spec.nu) * math.log(2.0)
    return cir - 2.0 * math.log(2.0)


def expected_x_stat(spec: EnsembleSpec, n: int) -> float:
    """Exact E[X_N] = (log Z − φ′(1)) / N, φ the tempered log-partition function."""
    ev = log_z_exact(spec, n)
    return (ev.log_z - ev.dlog_z_dt) / n


def exact_y_variance(spec: EnsembleSpec, n: int) -> float:
    """Exact Var(Y_N) = φ″(1) / N (equals β² ∂²_β log Z / N for Hermite, Circular)."""
    ev = log_z_exact(spec, n)
    return ev.d2log_z_dt2 / n


def _printed_centering(spec: EnsembleSpec, n: int) -> float:
    N = float(n)
    b = spec.beta
    psi = digamma(1.0 + b / 2.0)
    nlogn = N * math.log(N)
    if spec.kind is Kind.HERMITE:
        return 3.0 / 8.0 * N * N - 0.5 * nlogn + (-0.5 * math.log(b / 2.0) - 0.25 + 0.5 * psi) * N
    if spec.kind is Kind.CIRCULAR:
        return -0.5 * nlogn - (0.5 * math.log(b / 2.0) - 0.5 * psi) * N
    if spec.kind is Kind.LAGUERRE:
        return (0.75 + math.log(2.0) / 2.0) * N * N - 0.5 * nlogn - (1.0 + math.log(b) - psi) / 2.0 * N
    return math.log(2.0) / 2.0 * (N - 2.0) * N - 0.5 * nlogn + (-0.5 * math.log(b / 2.0) + 0.5 * psi) * N


def centering_constant(spec: EnsembleSpec, n: int, printed_form: bool = False) -> float:
    """Exact E[H_N], with H_N normalised so that P = e^{−βH/2}/Z.

    For Laguerre and Jacobi H_N carries the β-independent log-weight divided
    by β/2, so E[H_N] = −(2/β) φ′(1).  ``printed_form=True`` returns the
    closed-form centering constants as printed (unordered pair convention,
    about half the ordered-pair value).
    """
    _require_closed_form(spec)
    if printed_form:
        return _printed_centering(spec, n)
    ev = log_z_exact(spec, n)
    return -2.0 / spec.beta * ev.dlog_z_dt


def asymptotic_coefficients(spec: EnsembleSpec, printed_form: bool = False) -> AsymptoticCoefficients:
    if spec.kind is not Kind.HERMITE:
        raise UnsupportedKindError("asymptotic expansion implemented for the Hermite ensemble only")
    b = spec.beta
    f0 = (
        CONSTANTS.log_2pi
        - log_gamma(1.0 + b / 2.0)
        + b / 2.0 * math.log(b / 2.0)
        - 0.5 * (1.0 + b / 2.0)
    )
    return AsymptoticCoefficients(
        e0=HERMITE_ENERGY, f0=f0, r=r_coeff(b), c_tilde=c_tilde(b, printed_form=printed_form)
    )


def log_z_asymptotic(spec: EnsembleSpec, n: int, printed_form: bool = False) -> float:
    """(β/2)N²E₀ + (βN/2) log N + N f₀(β) + R(β) log N + C̃(β)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    co = asymptotic_coefficients(spec, printed_form=printed_form)
    b = spec.beta
    N = float(n)
    logn = math.log(N)
    return math.fsum(
        [b / 2.0 * N * N * co.e0, b * N / 2.0 * logn, N * co.f0, co.r * logn, co.c_tilde]
    )


def ground_state_energy(spec: EnsembleSpec, n: int, printed_form: bool = False) -> float:
    """Minimum of H_N (ordered pairs) for Hermite and Circular.

    ``printed_form=True`` gives the unordered-pair values, half of these.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    N = float(n)
    if spec.kind is Kind.HERMITE:
        j = np.arange(1, n + 1, dtype=float)
        value = N * (N - 1.0) / 2.0 * (math.log(N) + 1.0) - math.fsum(j * np.log(j))
    elif spec.kind is Kind.CIRCULAR:
        value = -N * math.log(N)
    else:
        raise UnsupportedKindError("ground state known in closed form for Hermite and Circular only")
    return value / 2.0 if printed_form else value
