"""Ensemble descriptions shared by every module."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

__all__ = ["Kind", "Domain", "Potential", "EnsembleSpec", "UnsupportedKindError"]


class UnsupportedKindError(ValueError):
    """Raised when an operation has no closed form for the requested ensemble."""


class Kind(str, enum.Enum):
    HERMITE = "hermite"
    CIRCULAR = "circular"
    LAGUERRE = "laguerre"
    JACOBI = "jacobi"
    GENERAL = "general"

    @classmethod
    def parse(cls, value) -> "Kind":
        if isinstance(value, Kind):
            return value
        key = str(value).strip().lower()
        aliases = {"generalpotential": "general", "general_potential": "general", "her": "hermite", "cir": "circular"}
        return cls(aliases.get(key, key))


class Domain(str, enum.Enum):
    REAL_LINE = "real_line"
    CIRCLE = "circle"
    HALF_LINE = "half_line"
    INTERVAL = "interval"


@dataclass(frozen=True)
class Potential:
    """Polynomial external field V(λ) = Σ c_k λ^k, constant term first."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs)
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("potential coefficients must be finite")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_confining(self) -> bool:
        return self.degree >= 2 and self.degree % 2 == 0 and self.coefficients[-1] > 0

    def check_confining(self) -> None:
        if not self.is_confining():
            raise ValueError(
                "potential must have even degree >= 2 and a positive leading coefficient"
            )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c in reversed(self.coefficients):
            out = out * x + c
        return out if out.ndim else float(out)

    def derivative(self) -> "Potential":
        c = self.coefficients
        if len(c) == 1:
            return Potential((0.0,))
        return Potential(tuple(k * c[k] for k in range(1, len(c))))

    def antiderivative(self) -> "Potential":
        c = self.coefficients
        return Potential((0.0,) + tuple(c[k] / (k + 1) for k in range(len(c))))

    def cell_average(self, left, right):
        """Mean of V over [left, right], exact for polynomials."""
        prim = self.antiderivative()
        left = np.asarray(left, dtype=float)
        right = np.asarray(right, dtype=float)
        return (prim(right) - prim(left)) / (right - left)

    def shifted(self, c: float) -> "Potential":
        coeffs = list(self.coefficients)
        coeffs[0] += c
        return Potential(tuple(coeffs))

    @classmethod
    def gaussian(cls) -> "Potential":
        return cls((0.0, 0.0, 0.5))

    @classmethod
    def from_file(cls, path) -> "Potential":
        values = []
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                values.append(float(line))
        if not values:
            raise ValueError(f"no coefficients in {path}")
        return cls(tuple(values))

    def to_file(self, path) -> None:
        Path(path).write_text("".join(f"{c!r}\n" for c in self.coefficients))


@dataclass(frozen=True)
class EnsembleSpec:
    kind: Kind
    beta: float
    alpha: Optional[float] = None
    mu: Optional[float] = None
    nu: Optional[float] = None
    potential: Optional[Potential] = field(default=None, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError("beta must be positive and finite")
        if self.kind is Kind.LAGUERRE and not (self.alpha is not None and self.alpha > 0):
            raise ValueError("Laguerre ensemble requires alpha > 0")
        if self.kind is Kind.JACOBI and not (
            self.mu is not None and self.nu is not None and self.mu > 0 and self.nu > 0
        ):
            raise ValueError("Jacobi ensemble requires mu > 0 and nu > 0")
        if self.kind is Kind.GENERAL:
            if self.potential is None:
                raise ValueError("general-potential ensemble requires a Potential")
            if not isinstance(self.potential, Potential):
                object.__setattr__(self, "potential", Potential(tuple(self.potential)))
            self.potential.check_confining()

    @classmethod
    def hermite(cls, beta: float) -> "EnsembleSpec":
        return cls(Kind.HERMITE, beta)

    @classmethod
    def circular(cls, beta: float) -> "EnsembleSpec":
        return cls(Kind.CIRCULAR, beta)

    @classmethod
    def laguerre(cls, beta: float, alpha: float) -> "EnsembleSpec":
        return cls(Kind.LAGUERRE, beta, alpha=alpha)

    @classmethod
    def jacobi(cls, beta: float, mu: float, nu: float) -> "EnsembleSpec":
        return cls(Kind.JACOBI, beta, mu=mu, nu=nu)

    @classmethod
    def general(cls, beta: float, coefficients: Sequence[float] | Potential) -> "EnsembleSpec":
        pot = coefficients if isinstance(coefficients, Potential) else Potential(tuple(coefficients))
        return cls(Kind.GENERAL, beta, potential=pot)

    @property
    def domain(self) -> Domain:
        return {
            Kind.HERMITE: Domain.REAL_LINE,
            Kind.GENERAL: Domain.REAL_LINE,
            Kind.CIRCULAR: Domain.CIRCLE,
            Kind.LAGUERRE: Domain.HALF_LINE,
            Kind.JACOBI: Domain.INTERVAL,
        }[self.kind]

    @property
    def closed_form(self) -> bool:
        return self.kind is not Kind.GENERAL

    def external_potential(self) -> Optional[Potential]:
        """V in the e^{-βN V/2} weight, for real-line ensembles."""
        if self.kind is Kind.HERMITE:
            return Potential.gaussian()
        if self.kind is Kind.GENERAL:
            return self.potential
        return None

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "beta": self.beta}
        for name in ("alpha", "mu", "nu"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        if self.potential is not None:
            out["potential"] = list(self.potential.coefficients)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleSpec":
        pot = data.get("potential")
        return cls(
            Kind.parse(data["kind"]),
            float(data["beta"]),
            alpha=data.get("alpha"),
            mu=data.get("mu"),
            nu=data.get("nu"),
            potential=Potential(tuple(pot)) if pot is not None else None,
        )
