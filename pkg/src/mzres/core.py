"""Gas model, free-stream conditions, state conversions and residual norms.

States are stored per node as primitive vectors ``w = (p', u, v, T)`` where
``p' = p - p_inf`` is the gauge pressure.  Residuals are dimensional and
carry different units per equation, so norms are always kept per equation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NEQ = 4
EQUATION_NAMES = ("continuity", "x-momentum", "y-momentum", "energy")
VARIABLE_NAMES = ("p_gauge", "u", "v", "T")


class NonPhysicalStateError(ValueError):
    """Raised when a state has non-positive temperature or pressure."""


@dataclass(frozen=True)
class GasModel:
    """Calorically perfect gas with constant viscosity."""

    gamma: float = 1.4
    gas_constant: float = 287.05
    viscosity: float = 0.0
    prandtl: float = 0.72

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if not self.gas_constant > 0.0:
            raise ValueError(f"gas constant must be positive, got {self.gas_constant}")
        if not self.viscosity >= 0.0:
            raise ValueError(f"viscosity must be non-negative, got {self.viscosity}")

    @property
    def cp(self) -> float:
        return self.gamma * self.gas_constant / (self.gamma - 1.0)

    @property
    def conductivity(self) -> float:
        return self.viscosity * self.cp / self.prandtl

    def with_viscosity(self, mu: float) -> "GasModel":
        return GasModel(self.gamma, self.gas_constant, mu, self.prandtl)


@dataclass(frozen=True)
class FreestreamConditions:
    mach: float
    angle_of_attack: float = 0.0  # degrees
    p_inf: float = 101325.0
    T_inf: float = 288.15
    reynolds: float = 0.0  # per reference length; 0 means inviscid
    reference_length: float = 1.0
    gas: GasModel = field(default_factory=GasModel)

    def __post_init__(self):
        if not self.p_inf > 0.0:
            raise ValueError(f"p_inf must be positive, got {self.p_inf}")
        if not self.T_inf > 0.0:
            raise ValueError(f"T_inf must be positive, got {self.T_inf}")
        if not self.mach >= 0.0:
            raise ValueError(f"mach must be non-negative, got {self.mach}")

    @property
    def rho_inf(self) -> float:
        return self.p_inf / (self.gas.gas_constant * self.T_inf)

    @property
    def a_inf(self) -> float:
        return math.sqrt(self.gas.gamma * self.gas.gas_constant * self.T_inf)

    @property
    def speed(self) -> float:
        return self.mach * self.a_inf

    @property
    def velocity(self) -> tuple[float, float]:
        alpha = math.radians(self.angle_of_attack)
        q = self.speed
        return q * math.cos(alpha), q * math.sin(alpha)

    @property
    def w_inf(self) -> np.ndarray:
        u, v = self.velocity
        return np.array([0.0, u, v, self.T_inf])

    def viscosity_from_reynolds(self) -> float:
        """Constant viscosity matching ``reynolds`` over ``reference_length``."""
        if self.reynolds <= 0.0:
            return 0.0
        return self.rho_inf * self.speed * self.reference_length / self.reynolds

    def viscous_gas(self) -> GasModel:
        return self.gas.with_viscosity(self.viscosity_from_reynolds())

    def scaled(self, length_factor: float) -> "FreestreamConditions":
        """Same flow with the reference length multiplied by ``length_factor``."""
        return FreestreamConditions(
            self.mach, self.angle_of_attack, self.p_inf, self.T_inf,
            self.reynolds, self.reference_length * length_factor, self.gas,
        )


def check_physical(w, p_inf, where="state"):
    w = np.asarray(w, dtype=float).reshape(-1, NEQ)
    bad = np.flatnonzero((w[:, 3] <= 0.0) | (w[:, 0] + p_inf <= 0.0) | ~np.isfinite(w).all(axis=1))
    if bad.size:
        j = int(bad[0])
        raise NonPhysicalStateError(
            f"non-physical {where} at node {j}: p'={w[j, 0]!r}, T={w[j, 3]!r} "
            f"({bad.size} bad node(s))"
        )


def primitive_to_conservative(w, gas: GasModel, p_inf: float) -> np.ndarray:
    """Map primitive ``(p', u, v, T)`` rows to ``(rho, rho u, rho v, rho E)``."""
    w = np.asarray(w, dtype=float)
    check_physical(w, p_inf)
    pg, u, v, T = np.moveaxis(w, -1, 0)
    p = p_inf + pg
    rho = p / (gas.gas_constant * T)
    rhoE = p / (gas.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
    return np.stack([rho, rho * u, rho * v, rhoE], axis=-1)


def conservative_to_primitive(U, gas: GasModel, p_inf: float) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    rho, mx, my, rhoE = np.moveaxis(U, -1, 0)
    u = mx / rho
    v = my / rho
    p = (gas.gamma - 1.0) * (rhoE - 0.5 * rho * (u * u + v * v))
    T = p / (rho * gas.gas_constant)
    w = np.stack([p - p_inf, u, v, T], axis=-1)
    check_physical(w, p_inf, where="conservative state")
    return w


def conservative_jacobian(w, gas: GasModel, p_inf: float) -> np.ndarray:
    """dU/dw per node, shape (N, 4, 4)."""
    w = np.asarray(w, dtype=float).reshape(-1, NEQ)
    pg, u, v, T = w.T
    R = gas.gas_constant
    p = p_inf + pg
    rho = p / (R * T)
    q2 = u * u + v * v
    M = np.zeros((w.shape[0], 4, 4))
    drho_dp = 1.0 / (R * T)
    drho_dT = -rho / T
    M[:, 0, 0] = drho_dp
    M[:, 0, 3] = drho_dT
    M[:, 1, 0] = drho_dp * u
    M[:, 1, 1] = rho
    M[:, 1, 3] = drho_dT * u
    M[:, 2, 0] = drho_dp * v
    M[:, 2, 2] = rho
    M[:, 2, 3] = drho_dT * v
    M[:, 3, 0] = 1.0 / (gas.gamma - 1.0) + 0.5 * q2 * drho_dp
    M[:, 3, 1] = rho * u
    M[:, 3, 2] = rho * v
    M[:, 3, 3] = 0.5 * q2 * drho_dT
    return M


def l1_norms(res) -> np.ndarray:
    """Per-equation mean absolute value over nodes."""
    res = np.asarray(res)
    if res.ndim != 2 or res.shape[0] < 1:
        raise ValueError("residual field must have shape (N>=1, neq)")
    a = np.abs(res)
    if a.dtype.kind == "f":
        # correctly rounded column sums keep the norm independent of node order
        return np.array([math.fsum(col) for col in a.T]) / res.shape[0]
    return a.sum(axis=0) / res.shape[0]


@dataclass
class ResidualField:
    values: np.ndarray  # (N, 4)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        self._norms = None

    @property
    def norms(self) -> np.ndarray:
        if self._norms is None:
            self._norms = l1_norms(self.values)
        return self._norms

    def __sub__(self, other: "ResidualField") -> "ResidualField":
        return ResidualField(self.values - other.values)
