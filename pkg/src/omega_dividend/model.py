"""Model parameters, characteristic exponents and the classical de Finetti solution.

Everything here is closed form. Functions accept scalars or numpy arrays for
the spatial argument and return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidParameters(ValueError):
    """Raised when model inputs fall outside the supported domain."""


@dataclass(frozen=True)
class ModelParams:
    mu: float  # drift per unit time
    sigma: float  # volatility per sqrt-time
    r: float  # base discount rate
    q: float  # omega-clock penalty rate

    def __post_init__(self) -> None:
        for name in ("mu", "sigma", "r", "q"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise InvalidParameters(f"{name} must be a finite number, got {value!r}")
            if value <= 0:
                raise InvalidParameters(f"{name} must be strictly positive, got {value!r}")
        # normalise ints so that serialisation round-trips exactly
        for name in ("mu", "sigma", "r", "q"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def rq(self) -> float:
        return self.r + self.q

    def rate(self, tag: str) -> float:
        """Discount rate for a rate tag ``"r"`` or ``"r+q"``."""
        if tag == "r":
            return self.r
        if tag == "r+q":
            return self.r + self.q
        raise ValueError(f"unknown rate tag {tag!r}")

    def as_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "r": self.r, "q": self.q}


REFERENCE_PARAMS = ModelParams(mu=0.1, sigma=0.1, r=0.02, q=0.1)


@dataclass(frozen=True)
class Exponents:
    gamma1: float
    gamma2: float
    rho: float

    @property
    def spread(self) -> float:
        return self.gamma1 - self.gamma2


def _check_rate(rho: float) -> float:
    if not math.isfinite(rho) or rho <= 0:
        raise InvalidParameters(f"discount rate must be strictly positive, got {rho!r}")
    return float(rho)


def exponents(params: ModelParams, rho: float) -> Exponents:
    """Roots of 0.5*sigma^2*g^2 + mu*g - rho = 0, ordered gamma2 < 0 < gamma1."""
    rho = _check_rate(rho)
    s2 = params.sigma**2
    a = params.mu / s2
    disc = math.sqrt(a * a + 2.0 * rho / s2)
    gamma2 = -disc - a
    # gamma1 via the product of the roots; avoids cancellation when mu^2/sigma^4 >> rho/sigma^2
    gamma1 = (-2.0 * rho / s2) / gamma2
    return Exponents(gamma1=gamma1, gamma2=gamma2, rho=rho)


def basis(params: ModelParams, rho: float, x):
    """psi, phi and their first two derivatives at ``x``.

    psi(x) = exp(gamma1 x), phi(x) = exp(gamma2 x) for the exponents at ``rho``.
    """
    ex = exponents(params, rho)
    x = np.asarray(x, dtype=float)
    psi = np.exp(ex.gamma1 * x)
    phi = np.exp(ex.gamma2 * x)
    return (
        psi,
        phi,
        ex.gamma1 * psi,
        ex.gamma2 * phi,
        ex.gamma1**2 * psi,
        ex.gamma2**2 * phi,
    )


def delta_fn(params: ModelParams, y):
    """delta(y) = psi_{r+q}(y) - phi_{r+q}(y) with first and second derivatives."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("delta is defined for y >= 0")
    psi, phi, dpsi, dphi, d2psi, d2phi = basis(params, params.rq, y)
    return psi - phi, dpsi - dphi, d2psi - d2phi


def eta_fn(params: ModelParams, y, b):
    """eta(y; b) = psi_r'(b) phi_r(y) - phi_r'(b) psi_r(y) and its derivative in y."""
    y = np.asarray(y, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(y < 0) or np.any(b < 0):
        raise ValueError("eta is defined for y, b >= 0")
    psi_y, phi_y, dpsi_y, dphi_y, _, _ = basis(params, params.r, y)
    _, _, dpsi_b, dphi_b, _, _ = basis(params, params.r, b)
    eta = dpsi_b * phi_y - dphi_b * psi_y
    deta = dpsi_b * dphi_y - dphi_b * dpsi_y
    return eta, deta


@dataclass(frozen=True)
class ClassicalSolution:
    """Optimal barrier and value for a constant discount rate ``rho``."""

    params: ModelParams
    rho: float
    barrier: float
    exponents: Exponents
    normalizer: float

    @property
    def value_at_barrier(self) -> float:
        return float(classical_value(self, self.barrier))


def classical_barrier(params: ModelParams, rho: float) -> float:
    ex = exponents(params, rho)
    return math.log(ex.gamma2**2 / ex.gamma1**2) / ex.spread


def classical_solve(params: ModelParams, rho: float) -> ClassicalSolution:
    ex = exponents(params, rho)
    b = classical_barrier(params, rho)
    norm = ex.gamma1 * math.exp(ex.gamma1 * b) - ex.gamma2 * math.exp(ex.gamma2 * b)
    return ClassicalSolution(params=params, rho=ex.rho, barrier=b, exponents=ex, normalizer=norm)


def _nonneg(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("surplus argument must be non-negative")
    return x


def _below(x: np.ndarray, point: float, side: str) -> np.ndarray:
    """Mask of points evaluated with the formula of the segment left of ``point``."""
    if side == "left":
        return x <= point
    if side == "right":
        return x < point
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def classical_value(sol: ClassicalSolution, x, side: str = "right"):
    x = _nonneg(x)
    ex, b = sol.exponents, sol.barrier
    xb = np.minimum(x, b)
    below = (np.exp(ex.gamma1 * xb) - np.exp(ex.gamma2 * xb)) / sol.normalizer
    above = sol.params.mu / sol.rho + (x - b)
    out = np.where(_below(x, b, side), below, above)
    return out[()] if out.ndim == 0 else out


def classical_deriv(sol: ClassicalSolution, x, side: str = "right"):
    x = _nonneg(x)
    ex, b = sol.exponents, sol.barrier
    xb = np.minimum(x, b)
    below = (ex.gamma1 * np.exp(ex.gamma1 * xb) - ex.gamma2 * np.exp(ex.gamma2 * xb)) / sol.normalizer
    out = np.where(_below(x, b, side), below, 1.0)
    return out[()] if out.ndim == 0 else out


def classical_second(sol: ClassicalSolution, x, side: str = "right"):
    x = _nonneg(x)
    ex, b = sol.exponents, sol.barrier
    xb = np.minimum(x, b)
    below = (
        ex.gamma1**2 * np.exp(ex.gamma1 * xb) - ex.gamma2**2 * np.exp(ex.gamma2 * xb)
    ) / sol.normalizer
    out = np.where(_below(x, b, side), below, 0.0)
    return out[()] if out.ndim == 0 else out
