"""Gravitationally perturbed plane-wave eigenmodes of the electromagnetic field.

Each mode is a flat-space plane wave (wavevector k, one of two transverse
polarizations) corrected to first order in the gravity gradient a:

* amplitude picks up a height-linear factor,
* the phase acquires a term quadratic in height,
* the local wavevector tilts with height,
* the E polarization mixes its transverse components with the vertical one,
* the H polarization follows from the local wavevector by a metric-weighted
  cross product.

Every correction carries a 1/k_z pole, so grazing modes (|k_z| below a small
guard fraction of |k|) are rejected outright rather than extrapolated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import PhysicsDomainError
from .metric import PhysicalConstants, WeakFieldMetric, check_linearization

__all__ = [
    "ModeIndex",
    "PerturbedMode",
    "PerturbationTerm",
    "flat_polarization_basis",
    "mode_amplitude",
    "mode_phase",
    "local_wavevector",
    "gauss_law_constant",
    "perturbation_M",
    "polarization_E",
    "polarization_H",
    "electric_field_eigenmode",
    "mode_field_first_order",
    "dump_mode_vectors",
]

_ZHAT = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ModeIndex:
    """Wavevector plus polarization label, with the grazing-mode guard baked in."""

    k: np.ndarray
    s: int
    kz_guard: float = 1e-6

    def __post_init__(self) -> None:
        k = np.array(self.k, dtype=float).reshape(3)
        object.__setattr__(self, "k", k)
        if self.s not in (1, 2):
            raise PhysicsDomainError("polarization label s must be 1 or 2")
        norm = float(np.linalg.norm(k))
        if norm == 0.0:
            raise PhysicsDomainError("zero wavevector")
        if abs(k[2]) <= self.kz_guard * norm:
            raise PhysicsDomainError(
                f"grazing mode rejected: |k_z| <= {self.kz_guard:g} |k|"
            )

    @property
    def knorm(self) -> float:
        return float(np.linalg.norm(self.k))


def flat_polarization_basis(k) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal transverse pair for wavevector k.

    Convention: f1 along z x k when that is nondegenerate, else f1 = x;
    f2 = khat x f1.
    """
    k = np.asarray(k, dtype=float).reshape(3)
    norm = np.linalg.norm(k)
    if norm == 0.0:
        raise PhysicsDomainError("zero wavevector has no transverse basis")
    khat = k / norm
    zxk = np.cross(_ZHAT, khat)
    cross_norm = np.linalg.norm(zxk)
    if cross_norm < 1e-12:
        f1 = np.array([1.0, 0.0, 0.0])
    else:
        f1 = zxk / cross_norm
    f2 = np.cross(khat, f1)
    return f1, f2


@dataclass(frozen=True)
class PerturbedMode:
    """A field eigenmode bound to a metric, a quantization volume and constants."""

    index: ModeIndex
    metric: WeakFieldMetric
    constants: PhysicalConstants
    volume: float
    basis: tuple[np.ndarray, np.ndarray]

    @classmethod
    def build(
        cls,
        index: ModeIndex,
        metric: WeakFieldMetric,
        constants: PhysicalConstants,
        volume: float,
    ) -> "PerturbedMode":
        if volume <= 0.0:
            raise PhysicsDomainError("quantization volume must be positive")
        return cls(index, metric, constants, float(volume), flat_polarization_basis(index.k))

    @property
    def k(self) -> np.ndarray:
        return self.index.k

    @property
    def omega(self) -> float:
        """Flat dispersion c |k|."""
        return self.constants.c * self.index.knorm

    @property
    def f0(self) -> np.ndarray:
        """Flat polarization vector selected by the label s."""
        return self.basis[self.index.s - 1]

    @property
    def flat_amplitude(self) -> float:
        """Single-photon field normalization sqrt(hbar w / 2 eps0 V0)."""
        cst = self.constants
        return math.sqrt(cst.hbar * self.omega / (2.0 * cst.eps0 * self.volume))


def _delta_z(mode: PerturbedMode, z):
    dz = np.asarray(z, dtype=float) - mode.metric.z0
    check_linearization(mode.metric.a, dz)
    return dz


def mode_amplitude(mode: PerturbedMode, z):
    """Height-dependent amplitude: flat value times (1 + a dz (kx^2+ky^2)/(4 kz^2))."""
    kx, ky, kz = mode.k
    dz = _delta_z(mode, z)
    corr = mode.metric.a * dz * (kx * kx + ky * ky) / (4.0 * kz * kz)
    out = mode.flat_amplitude * (1.0 + corr)
    return float(out) if np.ndim(out) == 0 else out


def mode_phase(mode: PerturbedMode, t, r):
    """Eigenmode phase: plane wave plus a (kx^2+ky^2+2kz^2)/(4 kz) (z - z0)^2."""
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    kx, ky, kz = mode.k
    dz = _delta_z(mode, z)
    flat = mode.omega * np.asarray(t, dtype=float) - kx * x - ky * y - kz * z
    quad = mode.metric.a * (kx * kx + ky * ky + 2.0 * kz * kz) / (4.0 * kz) * dz * dz
    out = flat + quad
    return float(out) if np.ndim(out) == 0 else out


def local_wavevector(mode: PerturbedMode, z):
    """Local wave 4-vector (c|k|, -kx, -ky, -kz + a (kx^2+ky^2+2kz^2) dz / (2 kz)).

    The spatial entries are the covariant components, i.e. the gradient of the
    eigenmode phase.
    """
    kx, ky, kz = mode.k
    dz = _delta_z(mode, z)
    kz_local = -kz + mode.metric.a * (kx * kx + ky * ky + 2.0 * kz * kz) * dz / (2.0 * kz)
    parts = np.broadcast_arrays(
        np.asarray(mode.omega, dtype=float), -kx, -ky, kz_local
    )
    out = np.stack(parts, axis=-1)
    return out if np.ndim(dz) else out.reshape(4)


def gauss_law_constant(mode: PerturbedMode) -> complex:
    """Constant phase offset -i (kx^2+ky^2)/(4 kz^3) on the vertical E component.

    Fixed by the curved-space divergence constraint; dropping it degrades the
    Gauss-law residual from O(a^2) to O(a).
    """
    kx, ky, kz = mode.k
    return -1j * (kx * kx + ky * ky) / (4.0 * kz**3)


class PerturbationTerm(NamedTuple):
    """First-order correction for one field component.

    ``product_form`` is True when the flat polarization component vanishes and
    only the product f0_j * M_j is physical; ``value`` then holds that product.
    """

    value: complex
    product_form: bool


def _m_common(mode: PerturbedMode, dz):
    kx, ky, kz = mode.k
    ksq_t = kx * kx + ky * ky
    return dz * ksq_t / (4.0 * kz * kz) + 1j * dz * dz * (ksq_t + 2.0 * kz * kz) / (4.0 * kz)


def perturbation_M(mode: PerturbedMode, j: int, z: float) -> PerturbationTerm:
    """Per-component first-order perturbation M_j(z), integration constants included.

    The real part reproduces the amplitude correction, the imaginary part
    (minus the constant on j = 3) the quadratic phase correction; the leftover
    on j in {1, 2} is the polarization mixing term.
    """
    if j not in (1, 2, 3):
        raise PhysicsDomainError("component index j must be 1, 2 or 3")
    dz = float(_delta_z(mode, z))
    common = _m_common(mode, dz)
    if j == 3:
        return PerturbationTerm(complex(common + gauss_law_constant(mode)), False)
    kx, ky, kz = mode.k
    f0 = mode.f0
    kj = kx if j == 1 else ky
    mix = kj * dz * f0[2] / (2.0 * kz)
    f0j = f0[j - 1]
    if f0j == 0.0:
        return PerturbationTerm(complex(f0j * common + mix), True)
    return PerturbationTerm(complex(common + mix / f0j), False)


def polarization_E(mode: PerturbedMode, z):
    """Covariant E polarization: transverse components tilt toward the vertical one.

    Reduces to the flat basis vector exactly whenever its vertical component
    vanishes, and at the reference height for any mode.
    """
    kx, ky, kz = mode.k
    dz = _delta_z(mode, z)
    f0 = mode.f0
    tilt = mode.metric.a * dz / (2.0 * kz) * f0[2]
    parts = np.broadcast_arrays(f0[0] + tilt * kx, f0[1] + tilt * ky, f0[2] + 0.0 * tilt)
    out = np.stack(parts, axis=-1).astype(complex)
    return out if np.ndim(dz) else out.reshape(3)


def polarization_H(mode: PerturbedMode, z: float) -> np.ndarray:
    """Contravariant H polarization to first order in a.

    Equals the metric-weighted cross product of the local wavevector with the
    E polarization, normalized by the invariant wavevector magnitude, with
    wavelength-proportional (post-geometrical-optics) terms dropped.  Flat
    limit: khat x f0 exactly.
    """
    dz = float(_delta_z(mode, z))
    a = mode.metric.a
    kvec = mode.k
    kx, ky, kz = kvec
    knorm = mode.index.knorm
    f0 = mode.f0
    p0 = np.cross(kvec, f0) / knorm
    # polarization tilt and wavevector tilt, each per unit a
    df = (dz * f0[2] / (2.0 * kz)) * np.array([kx, ky, 0.0])
    kappa = dz * (kx * kx + ky * ky + 2.0 * kz * kz) / (2.0 * kz)
    corr = dz * np.cross(kvec, f0) + np.cross(kvec, df) - kappa * np.cross(_ZHAT, f0)
    return (p0 + (a / knorm) * corr).astype(complex)


def _polarization_E_array(mode: PerturbedMode, z: np.ndarray) -> np.ndarray:
    kx, ky, kz = mode.k
    dz = z - mode.metric.z0
    f0 = mode.f0
    tilt = mode.metric.a * dz / (2.0 * kz) * f0[2]
    out = np.empty(z.shape + (3,), dtype=complex)
    out[..., 0] = f0[0] + tilt * kx
    out[..., 1] = f0[1] + tilt * ky
    out[..., 2] = f0[2]
    return out


def electric_field_eigenmode(mode: PerturbedMode, t, r) -> np.ndarray:
    """Negative-frequency E eigenfunction amplitude(z) * polarization(z) * e^{i phase}.

    Accepts a single point (r of shape (3,)) or a batch ((n, 3) with scalar or
    (n,) t); the modal amplitude factor of the field operator is the caller's
    responsibility.
    """
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    pts = np.atleast_2d(r)
    z = pts[:, 2]
    _delta_z(mode, z)
    amp = mode.flat_amplitude * (
        1.0
        + mode.metric.a
        * (z - mode.metric.z0)
        * (mode.k[0] ** 2 + mode.k[1] ** 2)
        / (4.0 * mode.k[2] ** 2)
    )
    fvec = _polarization_E_array(mode, z)
    phase = mode_phase(mode, t, pts)
    field = amp[:, None] * fvec * np.exp(1j * np.asarray(phase))[:, None]
    return field[0] if single else field


def mode_field_first_order(
    mode: PerturbedMode,
    t,
    r,
    *,
    include_gauss_constant: bool = True,
    zero_axis_correction: int | None = None,
) -> np.ndarray:
    """Eigenmode in the explicit first-order form: flat carrier times (1 + a M_j).

    This is the form the residual verifier consumes: it keeps the constant
    phase offset on the vertical component (``include_gauss_constant``) that
    the geometrical-optics product form drops, and it exposes ablation hooks
    (zero the whole O(a) correction of one component) so scaling tests can
    prove each term is needed.  Agrees with
    :func:`electric_field_eigenmode` + Gauss constant to O(a^2).
    """
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    pts = np.atleast_2d(r)
    z = pts[:, 2]
    dz = z - mode.metric.z0
    check_linearization(mode.metric.a, dz)
    a = mode.metric.a
    kx, ky, kz = mode.k
    f0 = mode.f0

    common = _m_common(mode, dz)  # shared amplitude + quadratic-phase correction
    c3 = gauss_law_constant(mode) if include_gauss_constant else 0.0
    mix1 = kx * dz * f0[2] / (2.0 * kz)
    mix2 = ky * dz * f0[2] / (2.0 * kz)

    comp = np.empty((len(z), 3), dtype=complex)
    comp[:, 0] = f0[0] * (1.0 + a * common) + a * mix1
    comp[:, 1] = f0[1] * (1.0 + a * common) + a * mix2
    comp[:, 2] = f0[2] * (1.0 + a * (common + c3))
    if zero_axis_correction is not None:
        if zero_axis_correction not in (1, 2, 3):
            raise PhysicsDomainError("zero_axis_correction must be 1, 2 or 3")
        comp[:, zero_axis_correction - 1] = f0[zero_axis_correction - 1]

    flat_phase = (
        mode.omega * np.asarray(t, dtype=float)
        - kx * pts[:, 0]
        - ky * pts[:, 1]
        - kz * pts[:, 2]
    )
    carrier = mode.flat_amplitude * np.exp(1j * flat_phase)
    field = np.asarray(carrier).reshape(-1, 1) * comp
    return field[0] if single else field


def dump_mode_vectors(path, modes, z_values) -> None:
    """Serialize reference mode values to CSV for cross-implementation comparison."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "kx", "ky", "kz", "s", "z",
                "amplitude",
                "f_re_x", "f_re_y", "f_re_z",
                "p_re_x", "p_re_y", "p_re_z",
                "ktilde_z",
            ]
        )
        for mode in modes:
            for z in z_values:
                f = polarization_E(mode, z)
                p = polarization_H(mode, z)
                kt = local_wavevector(mode, z)
                writer.writerow(
                    [repr(float(v)) for v in mode.k]
                    + [mode.index.s, repr(float(z)), repr(float(mode_amplitude(mode, z)))]
                    + [repr(float(v.real)) for v in f]
                    + [repr(float(v.real)) for v in p]
                    + [repr(float(kt[3]))]
                )
