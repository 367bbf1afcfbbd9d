"""Samplers for beta ensembles.

Hermite configurations come from the tridiagonal matrix model; every other
ensemble (and Hermite, for cross-checks) can be sampled with a single-site
Metropolis chain on the log-gas.  Randomness is drawn from numpy generators
seeded by ``(seed, stream)`` through ``SeedSequence``, so each replica owns an
independent, reproducible stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._jit import njit
from .ensembles import Domain, EnsembleSpec, Kind

__all__ = [
    "Configuration",
    "DegenerateConfigurationError",
    "RngSeed",
    "McmcParams",
    "EigenConvergenceError",
    "chi_sample",
    "eigen_tridiag",
    "tridiag_scale",
    "sample_hermite_tridiag",
    "sample_hermite_tridiag_batch",
    "sample_mcmc",
    "mcmc_chain",
]

TWO_PI = 2.0 * math.pi


class DegenerateConfigurationError(ValueError):
    """Two points coincide (or a point left its domain)."""


class EigenConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Configuration:
    values: np.ndarray
    domain: Domain

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("configuration must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise DegenerateConfigurationError("non-finite coordinate")
        if v.size > 1 and not np.all(np.diff(v) > 0):
            raise DegenerateConfigurationError("values must be strictly increasing")
        domain = Domain(self.domain)
        if domain is Domain.CIRCLE and (v[0] < 0 or v[-1] >= TWO_PI):
            raise DegenerateConfigurationError("circle angles must lie in [0, 2π)")
        if domain is Domain.HALF_LINE and v[0] <= 0:
            raise DegenerateConfigurationError("half-line values must be positive")
        if domain is Domain.INTERVAL and (v[0] <= -1 or v[-1] >= 1):
            raise DegenerateConfigurationError("interval values must lie in (-1, 1)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "domain", domain)

    @classmethod
    def from_unsorted(cls, values, domain: Domain) -> "Configuration":
        v = np.asarray(values, dtype=float)
        if Domain(domain) is Domain.CIRCLE:
            v = np.mod(v, TWO_PI)
        return cls(np.sort(v), domain)

    @property
    def n(self) -> int:
        return self.values.size

    def to_csv_row(self) -> str:
        return ",".join(repr(float(x)) for x in self.values)


@dataclass(frozen=True)
class RngSeed:
    """Seed plus stream index; ``tag`` separates families of streams (the harness uses n)."""

    seed: int
    stream: int = 0
    tag: int = 0

    def __post_init__(self):
        for name in ("seed", "stream", "tag"):
            value = getattr(self, name)
            if not 0 <= value < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        key = (self.stream,) if self.tag == 0 else (self.stream, self.tag)
        seq = np.random.SeedSequence(self.seed, spawn_key=key)
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class McmcParams:
    """Metropolis settings.

    ``burn_in=None`` means ``max(min_burn_in, burn_in_per_particle * n)`` sweeps.
    Started from quantiles of the limiting density, the mean energy of the
    chain settles within a few dozen sweeps at n <= 200, so the default of
    2n sweeps leaves a wide margin.
    """

    burn_in: Optional[int] = None
    thinning: int = 10
    step_scale: float = 1.0
    target_acceptance: float = 0.44
    burn_in_per_particle: float = 2.0
    min_burn_in: int = 100
    adapt_every: int = 10

    def __post_init__(self):
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.step_scale <= 0:
            raise ValueError("step_scale must be positive")
        if not 0 < self.target_acceptance < 1:
            raise ValueError("target_acceptance must be in (0, 1)")

    def burn_in_sweeps(self, n: int) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return max(self.min_burn_in, int(math.ceil(self.burn_in_per_particle * n)))


def chi_sample(k, rng: np.random.Generator, size=None):
    """χ_k draws (k > 0, not necessarily integer) as sqrt of 2·Gamma(k/2)."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("degrees of freedom must be positive")
    return np.sqrt(2.0 * rng.standard_gamma(k / 2.0, size=size))


# ---------------------------------------------------------------------------
# implicit-shift QL for symmetric tridiagonal matrices

_EPS = np.finfo(float).eps


@njit
def _tql1(d, e, max_iter):
    n = d.shape[0]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if it >= max_iter:
                return l
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


def eigen_tridiag(diagonal, offdiagonal, max_iter: int = 50) -> np.ndarray:
    """Ascending eigenvalues of the symmetric tridiagonal matrix (diagonal, offdiagonal)."""
    d = np.array(diagonal, dtype=float).ravel()
    n = d.size
    if n == 0:
        raise ValueError("empty matrix")
    off = np.asarray(offdiagonal, dtype=float).ravel()
    if off.size != n - 1:
        raise ValueError("offdiagonal must have length n - 1")
    e = np.zeros(n)
    e[: n - 1] = off
    failed = _tql1(d, e, max_iter)
    if failed >= 0:
        raise EigenConvergenceError(f"QL iteration did not converge for eigenvalue {failed}")
    d.sort()
    return d


def tridiag_scale(n: int, beta: float) -> float:
    """Factor mapping the unit-variance tridiagonal model onto weight e^{-βNλ²/4}."""
    return math.sqrt(2.0 / (beta * n))


def sample_hermite_tridiag(n: int, beta: float, seed: RngSeed) -> Configuration:
    """Hermite β-ensemble with weight e^{-βNλ²/4} via the tridiagonal model.

    The unscaled matrix has N(0,1) diagonal and χ_{βk}/√2 off-diagonal
    entries (k = n−1, …, 1), whose eigenvalues have density ∝ |Δ|^β e^{-Σλ²/2};
    multiplying by sqrt(2/(βn)) gives the target weight.
    """
    if n < 1 or beta <= 0:
        raise ValueError("need n >= 1 and beta > 0")
    return Configuration.from_unsorted(_tridiag_draw(n, beta, seed.generator()), Domain.REAL_LINE)


def _tridiag_draw(n: int, beta: float, rng: np.random.Generator) -> np.ndarray:
    diag = rng.standard_normal(n)
    k = np.arange(n - 1, 0, -1, dtype=float)
    off = chi_sample(beta * k, rng) / math.sqrt(2.0) if n > 1 else np.empty(0)
    return eigen_tridiag(diag, off) * tridiag_scale(n, beta)


def sample_hermite_tridiag_batch(n: int, beta: float, seed: RngSeed, count: int) -> np.ndarray:
    """``count`` tridiagonal-model draws from one stream, as a (count, n) array of sorted rows."""
    if n < 1 or beta <= 0 or count < 0:
        raise ValueError("need n >= 1, beta > 0 and count >= 0")
    rng = seed.generator()
    out = np.empty((count, n))
    for r in range(count):
        out[r] = _tridiag_draw(n, beta, rng)
    return out


# ---------------------------------------------------------------------------
# Metropolis log-gas

_REAL, _CIRCLE, _HALF, _INTERVAL = 0, 1, 2, 3


@njit
def _log_dist(kind, a, b):
    if kind == _CIRCLE:
        return math.log(abs(2.0 * math.sin(0.5 * (a - b))))
    return math.log(abs(a - b))


@njit
def _poly(coeffs, x):
    acc = 0.0
    for k in range(coeffs.shape[0] - 1, -1, -1):
        acc = acc * x + coeffs[k]
    return acc


@njit
def _log_weight(kind, x, n, beta, coeffs, p1, p2):
    """β-independent-of-pairs part of log P for one particle (up to constants)."""
    if kind == _REAL:
        return -0.5 * beta * n * _poly(coeffs, x)
    if kind == _CIRCLE:
        return 0.0
    if kind == _HALF:
        return (p1 - 1.0) * math.log(x) - beta * n * x
    return (p1 - 1.0) * math.log(1.0 - x) + (p2 - 1.0) * math.log(1.0 + x)


@njit
def _pair_table(kind, x, logs, rowsum):
    n = x.shape[0]
    for i in range(n):
        logs[i, i] = 0.0
        for j in range(i + 1, n):
            v = _log_dist(kind, x[i], x[j])
            logs[i, j] = v
            logs[j, i] = v
    for i in range(n):
        s = 0.0
        for j in range(n):
            if j != i:
                s += logs[i, j]
        rowsum[i] = s


@njit
def _metropolis(kind, x, logs, rowsum, beta, coeffs, p1, p2, step, normals, uniforms, scratch):
    n = x.shape[0]
    sweeps = normals.shape[0]
    accepted = 0
    for s in range(sweeps):
        for i in range(n):
            y = x[i] + step * normals[s, i]
            if kind == _CIRCLE:
                y = y % (2.0 * math.pi)
            elif kind == _HALF:
                if y <= 0.0:
                    continue
            elif kind == _INTERVAL:
                if y <= -1.0 or y >= 1.0:
                    continue
            total = 0.0
            tie = False
            for j in range(n):
                if j == i:
                    scratch[j] = 0.0
                    continue
                diff = y - x[j]
                if diff == 0.0:
                    tie = True
                    break
                v = _log_dist(kind, y, x[j])
                if not math.isfinite(v):
                    tie = True
                    break
                scratch[j] = v
                total += v
            if tie:
                continue
            delta = beta * (total - rowsum[i])
            delta += _log_weight(kind, y, n, beta, coeffs, p1, p2)
            delta -= _log_weight(kind, x[i], n, beta, coeffs, p1, p2)
            if math.log(uniforms[s, i]) < delta:
                for j in range(n):
                    if j != i:
                        rowsum[j] += scratch[j] - logs[i, j]
                        logs[i, j] = scratch[j]
                        logs[j, i] = scratch[j]
                rowsum[i] = total
                x[i] = y
                accepted += 1
    return accepted


def _kind_code(spec: EnsembleSpec) -> int:
    return {
        Kind.HERMITE: _REAL,
        Kind.GENERAL: _REAL,
        Kind.CIRCULAR: _CIRCLE,
        Kind.LAGUERRE: _HALF,
        Kind.JACOBI: _INTERVAL,
    }[spec.kind]


def _quantile_points(density, lo: float, hi: float, n: int) -> np.ndarray:
    grid = np.linspace(lo, hi, 20001)
    mid = 0.5 * (grid[1:] + grid[:-1])
    mass = np.maximum(density(mid), 0.0) * np.diff(grid)
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    cdf /= cdf[-1]
    targets = (np.arange(n) + 0.5) / n
    return np.interp(targets, cdf, grid)


def _initial_state(spec: EnsembleSpec, n: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Start at quantiles of the limiting density; return (state, typical spacing)."""
    if spec.kind is Kind.CIRCULAR:
        x = np.mod(rng.uniform(0.0, TWO_PI) + TWO_PI * np.arange(n) / n, TWO_PI)
        return x, TWO_PI / n
    if spec.kind is Kind.HERMITE:
        x = _quantile_points(lambda t: np.sqrt(np.clip(4.0 - t * t, 0.0, None)), -2.0, 2.0, n)
        return x, 4.0 / n
    if spec.kind is Kind.LAGUERRE:
        x = _quantile_points(lambda t: np.sqrt(np.clip((2.0 - t) / t, 0.0, None)), 0.0, 2.0, n)
        return np.maximum(x, 1e-12), 2.0 / n
    if spec.kind is Kind.JACOBI:
        x = -np.cos(math.pi * (np.arange(n) + 0.5) / n)
        return x, 2.0 / n
    from .equilibrium import solve_equilibrium, suggest_box

    box = suggest_box(spec.potential)
    measure = solve_equilibrium(spec.potential, grid_points=400, box_halfwidth=box, tol=1e-6)
    cdf = np.concatenate([[0.0], np.cumsum(measure.weights)])
    edges = np.concatenate([measure.grid - measure.cell_width / 2, [measure.grid[-1] + measure.cell_width / 2]])
    x = np.interp((np.arange(n) + 0.5) / n, cdf / cdf[-1], edges)
    width = sum(b - a for a, b in measure.support)
    return x, width / n


class _Chain:
    """Mutable chain state for one replica."""

    def __init__(self, spec: EnsembleSpec, n: int, params: McmcParams, seed: RngSeed):
        self.spec = spec
        self.n = n
        self.params = params
        self.rng = seed.generator()
        self.kind = _kind_code(spec)
        pot = spec.external_potential()
        self.coeffs = np.asarray(pot.coefficients if pot is not None else (0.0,), dtype=float)
        if spec.kind is Kind.LAGUERRE:
            self.p1, self.p2 = float(spec.alpha), 0.0
        elif spec.kind is Kind.JACOBI:
            self.p1, self.p2 = float(spec.mu), float(spec.nu)
        else:
            self.p1 = self.p2 = 0.0
        self.x, spacing = _initial_state(spec, n, self.rng)
        self.x = np.ascontiguousarray(self.x, dtype=float)
        self.step = params.step_scale * spacing
        self.logs = np.zeros((n, n))
        self.rowsum = np.zeros(n)
        self.scratch = np.zeros(n)
        _pair_table(self.kind, self.x, self.logs, self.rowsum)
        self.acceptance = float("nan")

    def run(self, sweeps: int) -> int:
        if sweeps <= 0:
            return 0
        normals = self.rng.standard_normal((sweeps, self.n))
        uniforms = self.rng.random((sweeps, self.n))
        return _metropolis(
            self.kind, self.x, self.logs, self.rowsum, float(self.spec.beta), self.coeffs,
            self.p1, self.p2, float(self.step), normals, uniforms, self.scratch,
        )

    def burn_in(self) -> None:
        total = self.params.burn_in_sweeps(self.n)
        block = max(1, self.params.adapt_every)
        done = 0
        while done < total:
            sweeps = min(block, total - done)
            rate = self.run(sweeps) / (sweeps * self.n)
            self.step *= math.exp(rate - self.params.target_acceptance)
            done += sweeps
        # rebuild the pair table to shed accumulated rounding in the row sums
        _pair_table(self.kind, self.x, self.logs, self.rowsum)

    def sample(self) -> Configuration:
        sweeps = self.params.thinning
        self.acceptance = self.run(sweeps) / (sweeps * self.n)
        return Configuration.from_unsorted(self.x.copy(), self.spec.domain)


def sample_mcmc(spec: EnsembleSpec, n: int, params: McmcParams, seed: RngSeed) -> Configuration:
    """One configuration after burn-in (with step adaptation) and one thinning interval."""
    if n < 1:
        raise ValueError("n must be >= 1")
    chain = _Chain(spec, n, params, seed)
    chain.burn_in()
    return chain.sample()


def mcmc_chain(
    spec: EnsembleSpec, n: int, params: McmcParams, seed: RngSeed, n_samples: int
) -> list[Configuration]:
    """Successive thinned configurations from one chain, step size frozen after burn-in."""
    chain = _Chain(spec, n, params, seed)
    chain.burn_in()
    return [chain.sample() for _ in range(n_samples)]
