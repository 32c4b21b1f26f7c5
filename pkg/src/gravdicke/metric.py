"""Weak-field background: constants, linearized metric, redshift and volume factors.

The background is a static gravity gradient along z, written with a single
parameter ``a = 2 g / c^2`` so that clock rates and mode frequencies scale as
``x -> x * (1 + a * dz / 2)`` between heights.  All operations are pure
functions of value inputs and are safe for concurrent use.

Two unit regimes run through the same code paths: CODATA SI values (the
default) and an order-unity "scaled" regime in which the Earth-like
``a ~ 2e-16 1/m`` is replaced by something whose square is resolvable in
double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LinearizationError, PhysicsDomainError

__all__ = [
    "PhysicalConstants",
    "WeakFieldMetric",
    "surface_param_a",
    "h_factor",
    "redshift",
    "quantization_volume",
    "momentum_measure_factor",
    "proper_time_shift",
    "check_linearization",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants; fully overridable for scaled/natural-unit work."""

    c: float = 299_792_458.0          # speed of light, m/s
    hbar: float = 1.054_571_817e-34   # reduced Planck constant, J s
    eps0: float = 8.854_187_8128e-12  # vacuum permittivity, F/m
    G_newton: float = 6.674_30e-11    # gravitational constant, m^3/(kg s^2)

    def __post_init__(self) -> None:
        for name in ("c", "hbar", "eps0", "G_newton"):
            if not getattr(self, name) > 0.0:
                raise PhysicsDomainError(f"constant {name!r} must be strictly positive")

    @classmethod
    def scaled(cls) -> "PhysicalConstants":
        """Order-unity regime (c = hbar = eps0 = G = 1) used by numerical checks."""
        return cls(c=1.0, hbar=1.0, eps0=1.0, G_newton=1.0)


@dataclass(frozen=True)
class WeakFieldMetric:
    """Linearized static metric g_00 = 1 + a (z - z0), g_zz = -(1 - a (z - z0)).

    ``a`` is the gravity-gradient parameter (1/m) and ``z0`` the reference
    height where the metric is exactly Minkowskian.  ``r_s`` is an optional
    Schwarzschild radius used only by the lapse-factor diagnostic ``h``.
    """

    a: float = 0.0
    z0: float = 0.0
    r_s: float | None = None

    def __post_init__(self) -> None:
        if self.a < 0.0:
            raise PhysicsDomainError("gravity-gradient parameter a must be >= 0")
        if self.r_s is not None and self.r_s <= 0.0:
            raise PhysicsDomainError("Schwarzschild radius r_s must be positive when given")

    def delta(self, z):
        """Height offset from the reference plane."""
        return np.asarray(z, dtype=float) - self.z0

    def h(self, z):
        """Lapse factor 1 - r_s/z, restricted to the far-field domain z > 100 r_s."""
        if self.r_s is None:
            raise PhysicsDomainError("metric has no r_s configured")
        z = np.asarray(z, dtype=float)
        if np.any(z <= 100.0 * self.r_s):
            raise PhysicsDomainError(
                "lapse diagnostic requested below the far-field domain z > 100 r_s"
            )
        return h_factor(z, self.r_s)


def check_linearization(a: float, dz) -> None:
    """Raise if |a * dz| >= 1 anywhere; silent extrapolation is never allowed."""
    if np.any(np.abs(a * np.asarray(dz, dtype=float)) >= 1.0):
        raise LinearizationError(
            f"|a * dz| >= 1 leaves the linearized-metric domain (a={a!r})"
        )


def surface_param_a(g: float, constants: PhysicalConstants) -> float:
    """Gravity-gradient parameter 2 g / c^2 for free-fall acceleration g."""
    if g < 0.0:
        raise PhysicsDomainError("free-fall acceleration g must be >= 0")
    return 2.0 * g / constants.c**2


def h_factor(z, r_s: float):
    """Schwarzschild lapse 1 - r_s/z for z > 0 (raw formula, no far-field guard)."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0.0):
        raise PhysicsDomainError("h_factor requires z > 0")
    out = 1.0 - r_s / z
    return float(out) if out.ndim == 0 else out


def redshift(x, z, a: float):
    """Apply the first-order gravitational shift x -> x * (1 + a z / 2).

    Used uniformly for mode frequencies, the atomic transition frequency and
    the spontaneous decay rate; exact at z = 0 and linear in x for all a.
    """
    out = np.asarray(x, dtype=float) * (1.0 + 0.5 * a * np.asarray(z, dtype=float))
    return float(out) if out.ndim == 0 else out


def quantization_volume(L: float, Z: float, metric: WeakFieldMetric) -> float:
    """Proper volume of an L-cube centred at height Z: L^3 (1 - a (Z - z0) / 2)."""
    if L <= 0.0:
        raise PhysicsDomainError("box edge L must be positive")
    dz = Z - metric.z0
    check_linearization(metric.a, dz)
    return L**3 * (1.0 - 0.5 * metric.a * dz)


def momentum_measure_factor(Z: float, metric: WeakFieldMetric) -> float:
    """Prefactor (1 + a (Z - z0) / 2) on the mode-sum -> momentum-integral measure.

    Together with :func:`quantization_volume` the product deviates from the flat
    L^3 only at second order in a.
    """
    dz = Z - metric.z0
    check_linearization(metric.a, dz)
    return 1.0 + 0.5 * metric.a * dz


def proper_time_shift(t, z_at: float, z: float, a: float):
    """Reference-frame change of a time interval: t -> t (1 + a (z_at - z) / 2)."""
    out = np.asarray(t, dtype=float) * (1.0 + 0.5 * a * (z_at - z))
    return float(out) if out.ndim == 0 else out
