"""Potential energy, log-density and the normalized statistics X_N, Y_N, W_N."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import EnsembleSpec, Kind
from .sampler import Configuration, DegenerateConfigurationError

__all__ = ["StatValues", "pair_log_sum", "potential_energy", "statistics"]


@dataclass(frozen=True)
class StatValues:
    h: float
    log_p: float
    x_stat: float
    y_stat: float
    w_stat: float


def pair_log_sum(values, circular: bool = False) -> float:
    """Σ_{i≠j} log|λ_i − λ_j| (ordered pairs), compensated.

    On the circle the chord length |e^{iθ_i} − e^{iθ_j}| = |2 sin((θ_i − θ_j)/2)| is used.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 2:
        return 0.0
    i, j = np.triu_indices(n, k=1)
    diff = x[j] - x[i]
    dist = np.abs(2.0 * np.sin(0.5 * diff)) if circular else np.abs(diff)
    if np.any(dist == 0.0):
        raise DegenerateConfigurationError("coincident points")
    return 2.0 * math.fsum(np.log(dist))


def _field_terms(x: np.ndarray, spec: EnsembleSpec) -> np.ndarray:
    """Per-particle one-body terms whose sum is the external part of H_N."""
    n = x.size
    beta = spec.beta
    if spec.kind is Kind.CIRCULAR:
        return np.zeros(0)
    if spec.kind is Kind.LAGUERRE:
        return 2.0 * n * x - (2.0 / beta) * (spec.alpha - 1.0) * np.log(x)
    if spec.kind is Kind.JACOBI:
        return -(2.0 / beta) * ((spec.mu - 1.0) * np.log1p(-x) + (spec.nu - 1.0) * np.log1p(x))
    return n * spec.external_potential()(x)


def potential_energy(config, spec: EnsembleSpec) -> float:
    """H_N = Σ_i (one-body field) − Σ_{i≠j} log|λ_i − λ_j|.

    For real-line ensembles the field is N·V(λ_i).  Laguerre and Jacobi fold
    their weights in so that log P = −(β/2)·H_N − log Z holds exactly.
    Accepts a Configuration or any sequence of values (order is irrelevant).
    """
    if isinstance(config, Configuration):
        x = config.values
    else:
        x = Configuration.from_unsorted(config, spec.domain).values
    field = math.fsum(_field_terms(x, spec))
    return field - pair_log_sum(x, circular=spec.kind is Kind.CIRCULAR)


def statistics(
    config,
    spec: EnsembleSpec,
    n: int,
    log_z: float,
    e_beta: float,
    centering: float,
) -> StatValues:
    """X_N = −log P/N, Y_N = (log P + N·E_β)/√N and W_N = (H_N − centering)/√N."""
    h = potential_energy(config, spec)
    log_p = -0.5 * spec.beta * h - log_z
    root = math.sqrt(n)
    return StatValues(
        h=h,
        log_p=log_p,
        x_stat=-log_p / n,
        y_stat=(log_p + n * e_beta) / root,
        w_stat=(h - centering) / root,
    )
