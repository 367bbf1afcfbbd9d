"""Equilibrium measures for polynomial external fields.

The measure maximizing ∫∫ log|x−y| dμ dμ − ∫V dμ is approximated by a
piecewise-constant density on a uniform grid of cells.  The log-kernel is
integrated exactly over pairs of cells, which keeps the discrete problem
concave (the cell-averaged log kernel is conditionally negative definite),
so a KKT point is the global maximizer.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .ensembles import EnsembleSpec, Potential
from .partition import entropy_constant

__all__ = [
    "EquilibriumMeasure",
    "NonGenericMeasureError",
    "SEMICIRCLE_ENTROPY",
    "check_box",
    "suggest_box",
    "cell_kernel",
    "project_simplex",
    "solve_equilibrium",
    "measure_from_density",
    "log_potential",
    "el_residual",
    "energy",
    "detect_support",
    "edge_exponents",
    "entropy_functional",
    "entropy_constant_general",
    "log_z_one_cut",
    "semicircle_reference",
]

SEMICIRCLE_ENTROPY = -0.5
_SUPPORT_THRESHOLD = 1e-6
_INTERIOR_ZERO = 1e-3
_PINCH_GAP = 0.01


class NonGenericMeasureError(ValueError):
    """The density vanishes inside its support (or is otherwise not one-cut generic)."""


@dataclass(frozen=True)
class EquilibriumMeasure:
    grid: np.ndarray
    weights: np.ndarray
    density: np.ndarray
    support: tuple[tuple[float, float], ...]
    lagrange_l: float
    el_residual: float
    converged: bool = True
    status: str = "converged"
    iterations: int = 0
    energy: float = float("nan")
    method: str = "active_set"
    edge_generic: tuple[bool, ...] = field(default=())
    box: Optional[float] = None

    @property
    def cell_width(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def box_halfwidth(self) -> float:
        if self.box is not None:
            return self.box
        return float(self.grid[-1] + self.cell_width / 2)

    @property
    def edges(self) -> np.ndarray:
        h = self.cell_width
        return np.concatenate([self.grid - h / 2, [self.grid[-1] + h / 2]])

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "density", "weight"])
            for row in zip(self.grid, self.density, self.weights):
                writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# set-up


def _minimum_value(v: Potential) -> float:
    crit = np.roots(list(reversed(v.derivative().coefficients))) if v.degree > 1 else np.array([])
    real = crit[np.abs(crit.imag) < 1e-9].real if crit.size else np.array([0.0])
    return float(min(v(real).min(), v(0.0)))


def check_box(v: Potential, box_halfwidth: float, margin: float = 0.5) -> None:
    """Reject non-confining V, or a box where V(±box) − 2 log(2·box) is not above min V + margin."""
    v.check_confining()
    if box_halfwidth <= 0:
        raise ValueError("box half-width must be positive")
    floor = _minimum_value(v) + margin
    for end in (-box_halfwidth, box_halfwidth):
        if v(end) - 2.0 * math.log(2.0 * box_halfwidth) <= floor:
            raise ValueError(
                f"box half-width {box_halfwidth} too small to confine the potential"
            )


def suggest_box(v: Potential, margin: float = 2.0) -> float:
    """Smallest half-width on a geometric ladder passing ``check_box`` with the given margin."""
    v.check_confining()
    box = 1.0
    for _ in range(200):
        try:
            check_box(v, box, margin)
            return box
        except ValueError:
            box *= 1.05
    raise ValueError("could not find a confining box")


def _primitive2(u):
    """Second primitive of log|u|: u²/2·log|u| − 3u²/4, continuous at 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    nz = u != 0
    out[nz] = 0.5 * u[nz] ** 2 * np.log(np.abs(u[nz])) - 0.75 * u[nz] ** 2
    return out


def _primitive1(u):
    """Primitive of log|u|: u·log|u| − u."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    nz = u != 0
    out[nz] = u[nz] * np.log(np.abs(u[nz])) - u[nz]
    return out


def _kernel_row(n: int, h: float) -> np.ndarray:
    d = np.arange(n) * h
    return (_primitive2(d + h) - 2.0 * _primitive2(d) + _primitive2(d - h)) / h**2


def cell_kernel(n: int, h: float) -> np.ndarray:
    """K_ij = mean of log|x−y| over cell i × cell j (Toeplitz, diagonal log h − 3/2)."""
    row = _kernel_row(n, h)
    idx = np.arange(n)
    return row[np.abs(idx[:, None] - idx[None, :])]


def _cells(grid_points: int, box_halfwidth: float):
    h = 2.0 * box_halfwidth / grid_points
    x = -box_halfwidth + h * (np.arange(grid_points) + 0.5)
    return x, h


def project_simplex(y) -> np.ndarray:
    """Euclidean projection onto {w ≥ 0, Σw = 1}."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


# ---------------------------------------------------------------------------
# diagnostics


def _cell_potential(weights, h, kernel=None) -> np.ndarray:
    """Cell averages of 2∫log|x−y|dμ(y) for a piecewise-constant measure."""
    if kernel is None:
        kernel = cell_kernel(weights.size, h)
    return 2.0 * kernel @ weights


def log_potential(measure: EquilibriumMeasure, x) -> np.ndarray:
    """∫ log|x−y| dμ(y) at arbitrary points, exact for the piecewise-constant density."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    e = measure.edges
    rho = measure.density
    out = np.empty_like(x)
    for k, xi in enumerate(x):
        out[k] = np.dot(rho, _primitive1(xi - e[:-1]) - _primitive1(xi - e[1:]))
    return out


def _residual_from_g(g, support_mask) -> tuple[float, float]:
    if not support_mask.any():
        return float("nan"), float("inf")
    l = float(np.mean(g[support_mask]))
    on = np.abs(g[support_mask] - l)
    off = g[~support_mask] - l
    worst = max(on.max(initial=0.0), off.max(initial=0.0))
    return l, float(worst)


def el_residual(measure: EquilibriumMeasure, v: Potential, kernel=None) -> float:
    """Largest Euler–Lagrange violation over the cells.

    With g = 2∫log|x−y|dμ − V (cell averages) and l the mean of g over the
    support, this is max(|g − l| on the support, (g − l)_+ off it).
    """
    h = measure.cell_width
    e = measure.edges
    g = _cell_potential(measure.weights, h, kernel) - v.cell_average(e[:-1], e[1:])
    mask = _support_mask(measure.density)
    return _residual_from_g(g, mask)[1]


def energy(measure: EquilibriumMeasure, v: Potential, kernel=None) -> float:
    """∫∫ log|x−y| dμ dμ − ∫V dμ for the piecewise-constant measure."""
    w = measure.weights
    h = measure.cell_width
    if kernel is None:
        kernel = cell_kernel(w.size, h)
    e = measure.edges
    return float(w @ kernel @ w - v.cell_average(e[:-1], e[1:]) @ w)


def _support_mask(density: np.ndarray, threshold: float = _SUPPORT_THRESHOLD) -> np.ndarray:
    mask = density > threshold * density.max()
    # bridge single-cell gaps
    gap = ~mask[1:-1] & mask[:-2] & mask[2:]
    mask[1:-1] |= gap
    return mask


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate([[False], mask, [False]]).astype(int)
    diff = np.diff(padded)
    starts = np.flatnonzero(diff == 1)
    stops = np.flatnonzero(diff == -1)
    return list(zip(starts, stops))


def detect_support(grid, density, threshold: float = _SUPPORT_THRESHOLD):
    grid = np.asarray(grid, dtype=float)
    h = grid[1] - grid[0]
    mask = _support_mask(np.asarray(density, dtype=float), threshold)
    return tuple(
        (float(grid[a] - h / 2), float(grid[b - 1] + h / 2)) for a, b in _runs(mask)
    )


def edge_exponents(measure: EquilibriumMeasure, near: int = 10, far: int = 80) -> list[float]:
    """Growth exponent of the mass near each support endpoint.

    A square-root edge gives mass ∝ d^{3/2}; the exponent is read off the
    mass within ``near`` and ``far`` cells of the edge.
    """
    w = measure.weights
    out = []
    for a, b in _runs(_support_mask(measure.density)):
        if b - a < 2 * far:
            out.extend([float("nan"), float("nan")])
            continue
        for seg in (w[a:b], w[a:b][::-1]):
            m_near = seg[:near].sum()
            m_far = seg[:far].sum()
            out.append(math.log(m_far / m_near) / math.log(far / near))
    return out


def _edge_flags(measure: EquilibriumMeasure) -> tuple[bool, ...]:
    return tuple(bool(abs(p - 1.5) < 0.2) for p in edge_exponents(measure))


# ---------------------------------------------------------------------------
# solvers


def _active_set(kernel, vbar, max_iter, tol):
    n = vbar.size
    active = np.ones(n, dtype=bool)
    w = np.full(n, 1.0 / n)
    l = 0.0
    for it in range(1, max_iter + 1):
        ids = np.flatnonzero(active)
        m = ids.size
        a = np.zeros((m + 1, m + 1))
        a[:m, :m] = 2.0 * kernel[np.ix_(ids, ids)]
        a[:m, m] = -1.0
        a[m, :m] = 1.0
        sol = np.linalg.solve(a, np.concatenate([vbar[ids], [1.0]]))
        neg = sol[:m] < 0
        if neg.any():
            active[ids[neg]] = False
            continue
        w = np.zeros(n)
        w[ids] = sol[:m]
        l = sol[m]
        g = 2.0 * kernel @ w - vbar - l
        violators = ~active & (g > tol)
        if violators.any():
            active |= violators
            continue
        return w, it, True
    return w, max_iter, False


def _projected_gradient(kernel, vbar, max_iter, tol):
    n = vbar.size
    w = np.full(n, 1.0 / n)
    kw = kernel @ w
    f = w @ kw - vbar @ w
    step = 1.0
    for it in range(1, max_iter + 1):
        grad = 2.0 * kw - vbar
        _, res = _residual_from_g(grad, w > 0)
        if res <= tol:
            return w, it, True
        while True:
            trial = project_simplex(w + step * grad)
            kt = kernel @ trial
            ft = trial @ kt - vbar @ trial
            if ft >= f + 1e-4 * grad @ (trial - w) or step < 1e-14:
                break
            step *= 0.5
        w, kw, f = trial, kt, ft
        step *= 2.0
    return w, max_iter, False


def measure_from_density(grid, weights, v: Optional[Potential] = None, **extra) -> EquilibriumMeasure:
    """Wrap cell masses on a uniform grid as an EquilibriumMeasure (diagnostics filled in if V is given)."""
    grid = np.asarray(grid, dtype=float)
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    w = w / math.fsum(w)
    h = grid[1] - grid[0]
    density = w / h
    support = detect_support(grid, density)
    l, res = float("nan"), float("nan")
    en = float("nan")
    if v is not None:
        kernel = cell_kernel(w.size, h)
        e = np.concatenate([grid - h / 2, [grid[-1] + h / 2]])
        vbar = v.cell_average(e[:-1], e[1:])
        g = _cell_potential(w, h, kernel) - vbar
        l, res = _residual_from_g(g, _support_mask(density))
        en = float(w @ kernel @ w - vbar @ w)
    m = EquilibriumMeasure(
        grid=grid, weights=w, density=density, support=support,
        lagrange_l=l, el_residual=res, energy=en, **extra,
    )
    return _with_flags(m)


def _with_flags(m: EquilibriumMeasure) -> EquilibriumMeasure:
    object.__setattr__(m, "edge_generic", _edge_flags(m))
    for arr in (m.grid, m.weights, m.density):
        arr.setflags(write=False)
    return m


def solve_equilibrium(
    v: Potential,
    grid_points: int = 2000,
    box_halfwidth: float = 3.0,
    tol: float = 1e-3,
    method: str = "active_set",
    max_iter: Optional[int] = None,
) -> EquilibriumMeasure:
    """Maximize the discrete energy over the probability simplex.

    ``method="active_set"`` solves the KKT system on a working set of cells,
    dropping cells with negative mass and adding cells whose effective
    potential exceeds the multiplier.  ``method="projected_gradient"`` runs
    Armijo-backtracked projected ascent (capped at 50,000 iterations).  A run
    that stops early returns its best iterate with ``converged=False``.
    """
    if grid_points < 200:
        raise ValueError("grid_points must be >= 200")
    if tol <= 0:
        raise ValueError("tol must be positive")
    check_box(v, box_halfwidth)
    x, h = _cells(grid_points, box_halfwidth)
    kernel = cell_kernel(grid_points, h)
    e = np.concatenate([x - h / 2, [x[-1] + h / 2]])
    vbar = v.cell_average(e[:-1], e[1:])
    if method == "active_set":
        w, it, ok = _active_set(kernel, vbar, max_iter or 500, 1e-12)
    elif method == "projected_gradient":
        w, it, ok = _projected_gradient(kernel, vbar, max_iter or 50_000, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    w = np.clip(w, 0.0, None)
    w /= math.fsum(w)
    density = w / h
    g = 2.0 * kernel @ w - vbar
    mask = _support_mask(density)
    l, res = _residual_from_g(g, mask)
    status = "converged"
    if not ok:
        status = "iteration cap reached"
    elif res > tol:
        ok, status = False, "residual above tolerance"
    if mask[0] or mask[-1]:
        ok, status = False, "support reaches the box edge"
    m = EquilibriumMeasure(
        grid=x,
        weights=w,
        density=density,
        support=detect_support(x, density),
        lagrange_l=l,
        el_residual=res,
        converged=ok,
        status=status,
        iterations=it,
        energy=float(w @ kernel @ w - vbar @ w),
        method=method,
        box=float(box_halfwidth),
    )
    return _with_flags(m)


# ---------------------------------------------------------------------------
# entropy


def _sqrt_panel(mass: float, width: float) -> float:
    """∫ρ log ρ over a panel of given width and mass when ρ = c√(distance to edge)."""
    c = 1.5 * mass / width**1.5
    return mass * math.log(c) + 0.5 * mass * (math.log(width) - 2.0 / 3.0)


def entropy_functional(measure: EquilibriumMeasure, edge_cells: int = 2) -> float:
    """S[ρ] = ∫ρ log ρ − 1 + log 2π.

    Interior cells use the midpoint rule on the piecewise-constant density;
    the ``edge_cells`` cells at each end of a support interval are replaced by
    a panel with square-root profile.  Raises NonGenericMeasureError when the
    density drops to (near) zero strictly inside a support interval, or when
    two intervals are separated by a sliver under 1% of the total span.
    """
    w = measure.weights
    rho = measure.density
    h = measure.cell_width
    peak = rho.max()
    total = []
    runs = _runs(_support_mask(rho))
    span = runs[-1][1] - runs[0][0] if runs else 0
    for (_, b), (a, _) in zip(runs, runs[1:]):
        # a gap this narrow is a zero of one interval, not a true cut
        if a - b < _PINCH_GAP * span:
            raise NonGenericMeasureError("density pinches to zero inside the support")
    for a, b in runs:
        length = b - a
        inner = rho[a:b]
        margin = max(edge_cells, int(0.02 * length))
        if length > 2 * margin and inner[margin : length - margin].min() < _INTERIOR_ZERO * peak:
            raise NonGenericMeasureError("density vanishes inside the support")
        seg = w[a:b]
        if edge_cells > 0 and length > 4 * edge_cells:
            core = seg[edge_cells : length - edge_cells]
            core = core[core > 0]
            total.append(math.fsum(core * np.log(core / h)))
            width = edge_cells * h
            total.append(_sqrt_panel(seg[:edge_cells].sum(), width))
            total.append(_sqrt_panel(seg[-edge_cells:].sum(), width))
        else:
            pos = seg[seg > 0]
            total.append(math.fsum(pos * np.log(pos / h)))
    return math.fsum(total) - 1.0 + math.log(2.0 * math.pi)


@functools.lru_cache(maxsize=16)
def _reference_semicircle_entropy(grid_points: int, box_halfwidth: float) -> float:
    """S of the discrete semicircle solved on cells of the same width.

    The box is widened (by whole cells) to at least 3 when needed, so that
    V = x²/2 on an identical grid reproduces its own value bit for bit.
    """
    if box_halfwidth >= 3.0:
        m = solve_equilibrium(Potential.gaussian(), grid_points, box_halfwidth, 1e-6)
        return entropy_functional(m)
    h = 2.0 * box_halfwidth / grid_points
    cells = int(math.ceil(3.0 / h))
    m = solve_equilibrium(Potential.gaussian(), 2 * cells, cells * h, 1e-6)
    return entropy_functional(m)


def semicircle_reference(measure: EquilibriumMeasure) -> float:
    """Discrete counterpart of S[ρ_sc] = −1/2 at the resolution of ``measure``."""
    return _reference_semicircle_entropy(measure.grid.size, measure.box_halfwidth)


def entropy_constant_general(v: Potential, beta: float, measure: EquilibriumMeasure) -> tuple[float, float]:
    """(raw, normalized) limits of X_N for the field V.

    raw = E^Her_β − S[ρ^V].  normalized = E^Her_β − (S[ρ^V] − S[ρ_sc]) with
    S[ρ_sc] evaluated at the same resolution, so V = x²/2 on the same grid
    returns E^Her_β exactly and raw − normalized = −S[ρ_sc] ≈ 1/2.
    """
    v.check_confining()
    e_her = entropy_constant(EnsembleSpec.hermite(beta))
    s = entropy_functional(measure)
    return e_her - s, e_her - (s - semicircle_reference(measure))


def log_z_one_cut(v: Potential, beta: float, n: int, measure: EquilibriumMeasure) -> float:
    """Leading terms of log Z_N for a one-cut field, dropping the O(1) remainder.

    log Z^Her_N + (βN²/2)(E[V] − E₀) + N(β/2 − 1)(S[ρ^V] − S[ρ_sc]); exact
    up to O(1) and reduces to log Z^Her_N for V = x²/2.
    """
    from .partition import HERMITE_ENERGY, log_z_exact

    base = log_z_exact(EnsembleSpec.hermite(beta), n).log_z
    s = entropy_functional(measure) - semicircle_reference(measure)
    return math.fsum(
        [base, beta * n * n / 2.0 * (measure.energy - HERMITE_ENERGY), n * (beta / 2.0 - 1.0) * s]
    )
