"""Two-photon source model.

The dimensionless parameter gamma fixes the whole mode decomposition: the
coefficients C_mn, the Schmidt number K, and how many modes carry appreciable
weight. gamma can be given directly or derived from pump/crystal parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

__all__ = [
    "TRUNCATION_HARD_CAP",
    "SourceParams",
    "SchmidtModel",
    "coefficient_ratio",
    "gamma_from_physical",
    "schmidt_coeff",
    "schmidt_number",
    "choose_truncation",
]

TRUNCATION_HARD_CAP = 2000


@dataclass(frozen=True)
class SourceParams:
    """Physical source settings; all lengths in meters.

    The Schmidt waist is carried only for unit conversion of separations; it
    is an experimental tuning input, not derived from the other parameters.
    """

    pump_waist: float
    crystal_length: float
    pump_wavelength: float
    schmidt_waist: float | None = None

    def __post_init__(self):
        for name in ("pump_waist", "crystal_length", "pump_wavelength"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if self.schmidt_waist is not None and not self.schmidt_waist > 0:
            raise ValueError("schmidt_waist must be strictly positive when given")


def gamma_from_physical(params: SourceParams) -> float:
    """gamma = sqrt(L * lambda_p / (2 pi)) / sigma_p."""
    return math.sqrt(
        params.crystal_length * params.pump_wavelength / (2.0 * math.pi)
    ) / params.pump_waist


def _check_gamma(gamma: float) -> None:
    if not (isinstance(gamma, (int, float)) and math.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma must be a finite positive number, got {gamma!r}")


def coefficient_ratio(gamma: float) -> float:
    """Amplitude decay r = |1-gamma| / (1+gamma) per unit of total mode order."""
    _check_gamma(gamma)
    return abs(1.0 - gamma) / (1.0 + gamma)


def schmidt_coeff(m, n, gamma):
    """Mode coefficient C_mn = (4 gamma / (1+gamma)^2) * r^(m+n).

    Evaluated in log space so large m+n underflows gracefully. Accepts scalar
    or array indices; with gamma = 1 only C_00 survives.
    """
    _check_gamma(gamma)
    ma = np.asarray(m)
    na = np.asarray(n)
    if np.any(ma < 0) or np.any(na < 0):
        raise ValueError("mode indices must be non-negative")
    scalar = ma.ndim == 0 and na.ndim == 0
    r = coefficient_ratio(gamma)
    if r == 0.0:
        out = np.where((ma == 0) & (na == 0), 1.0, 0.0)
    else:
        log_c00 = math.log(4.0 * gamma) - 2.0 * math.log1p(gamma)
        out = np.exp(log_c00 + (ma + na) * math.log(r))
    return float(out) if scalar else out


def schmidt_number(gamma: float) -> float:
    """Effective number of entangled mode pairs, K = (gamma + 1/gamma)^2 / 4."""
    _check_gamma(gamma)
    half = 0.5 * (gamma + 1.0 / gamma)
    return half * half


def choose_truncation(
    gamma: float, mass_deficit: float, hard_cap: int = TRUNCATION_HARD_CAP
) -> tuple[int, int]:
    """Smallest symmetric truncation (max_m, max_l) with sum C_mn^2 >= 1 - mass_deficit."""
    _check_gamma(gamma)
    if not 0.0 < mass_deficit < 1.0:
        raise ValueError(f"mass_deficit must lie in (0, 1), got {mass_deficit!r}")
    q = coefficient_ratio(gamma) ** 2
    one_minus_q = 4.0 * gamma / (1.0 + gamma) ** 2
    row_sum = 0.0
    power = 1.0
    for order in range(hard_cap + 1):
        row_sum += power
        power *= q
        if (one_minus_q * row_sum) ** 2 >= 1.0 - mass_deficit:
            return order, order
    raise NumericalError(
        f"truncation for gamma={gamma} exceeds the hard cap of {hard_cap} modes"
    )


@dataclass(frozen=True)
class SchmidtModel:
    """Immutable source description consumed by the probability models."""

    gamma: float
    q: float
    max_m: int
    max_l: int
    mass_deficit: float

    @classmethod
    def from_gamma(
        cls,
        gamma: float,
        mass_deficit: float = 1e-9,
        hard_cap: int = TRUNCATION_HARD_CAP,
    ) -> "SchmidtModel":
        max_m, max_l = choose_truncation(gamma, mass_deficit, hard_cap)
        return cls(
            gamma=float(gamma),
            q=coefficient_ratio(gamma) ** 2,
            max_m=max_m,
            max_l=max_l,
            mass_deficit=mass_deficit,
        )

    @classmethod
    def from_physical(cls, params: SourceParams, mass_deficit: float = 1e-9) -> "SchmidtModel":
        return cls.from_gamma(gamma_from_physical(params), mass_deficit)

    def coeff(self, m, n):
        return schmidt_coeff(m, n, self.gamma)

    @property
    def schmidt_number(self) -> float:
        return schmidt_number(self.gamma)

    def captured_mass(self) -> float:
        """Coefficient mass sum C_mn^2 inside the (max_m, max_l) truncation."""
        m = np.arange(self.max_m + 1)
        l = np.arange(self.max_l + 1)
        c = schmidt_coeff(m[:, None], l[None, :], self.gamma)
        return float(np.sum(c * c))
