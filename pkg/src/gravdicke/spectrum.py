"""Angular/spectral distribution of the re-emitted photon, three independent ways.

The directional structure lives entirely in k_z (the transverse components are
pinned to the absorbed photon's).  This module computes the k_z distribution

* analytically: a one-sided exponential kernel with a hard cutoff at the
  incoming k0z and decay constant Gamma/(a nu),
* by direct numerical quadrature of the height integral the kernel came from,
* by Monte Carlo over explicit random atom ensembles,

plus the closed-form spread measures and the flat-space structure factor.
Each route is an oracle for the others; nothing here reuses another route's
algebra.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .emission import (
    Box,
    Ensemble,
    FCorrectionParams,
    TimedDickeState,
    curved_timed_dicke,
    sample_ensemble,
)
from .errors import PhysicsDomainError, QuadratureError
from .metric import PhysicalConstants, WeakFieldMetric
from .quadrature import complex_quad_semi_infinite, fourier_complex_quad

__all__ = [
    "SpectrumParams",
    "AngularSpectrum",
    "g_kernel",
    "kernel_area",
    "kernel_decay_constant",
    "wavevector_spread",
    "frequency_spread",
    "z_integral_oracle",
    "quadrature_spectrum",
    "analytic_spectrum",
    "monte_carlo_spectrum",
    "replicated_mc_spectrum",
    "structure_factor",
    "structure_factor_expectation",
    "flat_delta_limit",
]

_COS_GUARD = 1e-6


@dataclass(frozen=True)
class SpectrumParams:
    """Emission geometry: absorbed wavevector, atomic line, metric, mode reference height."""

    k0: np.ndarray
    nu: float
    gamma: float
    metric: WeakFieldMetric
    Z: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants.scaled)

    def __post_init__(self) -> None:
        k0 = np.array(self.k0, dtype=float).reshape(3)
        object.__setattr__(self, "k0", k0)
        knorm = float(np.linalg.norm(k0))
        target = self.nu / self.constants.c
        if abs(knorm - target) > 1e-8 * target:
            raise PhysicsDomainError(
                "absorbed photon must be resonant: |k0| = nu / c "
                f"(got |k0|={knorm!r}, nu/c={target!r})"
            )
        if not 0.0 < self.gamma < 2e-2 * self.nu:
            raise PhysicsDomainError("need 0 < gamma << nu (weak-coupling guard at 2e-2)")

    def require_directional(self) -> None:
        """Guard for the k_z-resolved operations: grazing k0 is excluded there.

        The spread formulas themselves are fine at theta0 = pi/2 (they return
        zero); only the directional kernel and the atom sums, which sample
        modes around k0z, need cos(theta0) bounded away from zero.
        """
        if abs(self.cos_theta0) <= _COS_GUARD:
            raise PhysicsDomainError("k0 too close to horizontal: cos(theta0) under guard")

    @classmethod
    def from_angles(
        cls,
        nu: float,
        gamma: float,
        metric: WeakFieldMetric,
        Z: float,
        theta0: float,
        phi: float = 0.0,
        constants: PhysicalConstants | None = None,
    ) -> "SpectrumParams":
        constants = constants or PhysicalConstants.scaled()
        knorm = nu / constants.c
        k0 = knorm * np.array(
            [math.sin(theta0) * math.cos(phi), math.sin(theta0) * math.sin(phi), math.cos(theta0)]
        )
        return cls(k0, nu, gamma, metric, Z, constants)

    @property
    def k0z(self) -> float:
        return float(self.k0[2])

    @property
    def cos_theta0(self) -> float:
        return self.k0z / float(np.linalg.norm(self.k0))

    @property
    def theta0(self) -> float:
        return math.acos(self.cos_theta0)


@dataclass
class AngularSpectrum:
    """Emitted-photon amplitude sampled on a k_z grid, with provenance."""

    kz_grid: np.ndarray
    amplitude: np.ndarray
    method: str
    mc_stderr: np.ndarray | None = None
    seed: int | tuple[int, ...] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.kz_grid = np.asarray(self.kz_grid, dtype=float)
        self.amplitude = np.asarray(self.amplitude, dtype=complex)
        if self.method not in ("analytic", "quadrature", "montecarlo"):
            raise PhysicsDomainError(f"unknown spectrum method {self.method!r}")
        if self.kz_grid.ndim != 1 or np.any(np.diff(self.kz_grid) <= 0.0):
            raise PhysicsDomainError("kz grid must be 1-D and strictly increasing")
        if self.amplitude.shape != self.kz_grid.shape:
            raise PhysicsDomainError("amplitude array must match the grid")
        if self.mc_stderr is not None and np.asarray(self.mc_stderr).shape != self.kz_grid.shape:
            raise PhysicsDomainError("stderr array must match the grid")

    @property
    def probability(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2


# ---------------------------------------------------------------------------
# closed-form kernel and spread measures
# ---------------------------------------------------------------------------

def g_kernel(k_z, params: SpectrumParams):
    """One-sided emission kernel (-i/(a nu)) exp(-(k0z - kz) Gamma/(a nu)) theta(k0z - kz).

    The step function takes the value 1 at the cutoff itself, so the kernel
    attains its peak on-grid.  Raises in flat space, where the distribution
    collapses to a delta spike: use :func:`flat_delta_limit` for that regime.
    """
    params.require_directional()
    a = params.metric.a
    if a <= 0.0:
        raise PhysicsDomainError("kernel undefined at a = 0; use flat_delta_limit")
    q = params.k0z - np.asarray(k_z, dtype=float)
    scale = a * params.nu
    out = np.where(q >= 0.0, (-1j / scale) * np.exp(-np.clip(q, 0.0, None) * params.gamma / scale), 0.0j)
    return complex(out) if out.ndim == 0 else out


def kernel_area(params: SpectrumParams, *, tol: float = 1e-12) -> complex:
    """Adaptive quadrature of the kernel over kz <= k0z (expected: -i/Gamma, any a)."""
    a = params.metric.a
    if a <= 0.0:
        raise PhysicsDomainError("kernel undefined at a = 0")
    decay = a * params.nu / params.gamma  # e-folding scale in kz
    lo = params.k0z - 300.0 * decay       # truncation error ~ e^-300
    val_im, err = integrate.quad(
        lambda kz: g_kernel(kz, params).imag, lo, params.k0z,
        epsabs=tol / max(params.gamma, 1e-300), epsrel=1e-13, limit=300,
    )
    if err > 100.0 * tol / params.gamma + 1e-300:
        raise QuadratureError(f"kernel area quadrature error {err!r} above tolerance")
    return complex(0.0, val_im)


def kernel_decay_constant(params: SpectrumParams) -> float:
    """Literal e-folding scale a nu / Gamma of |kernel| in (k0z - kz)."""
    return params.metric.a * params.nu / params.gamma


def wavevector_spread(params: SpectrumParams) -> float:
    """Quoted wavevector spread (a nu / Gamma) cos(theta0).

    This is the radial (|k|, hence frequency) spread; the kernel's own decay
    scale in k_z carries no angle factor, see :func:`kernel_decay_constant`.
    Neither quantity substitutes for the other.
    """
    return kernel_decay_constant(params) * params.cos_theta0


def frequency_spread(params: SpectrumParams) -> float:
    """Frequency width a c nu cos(theta0) / Gamma of the emitted wave-packet mix."""
    return (
        params.metric.a * params.constants.c * params.nu * params.cos_theta0 / params.gamma
    )


# ---------------------------------------------------------------------------
# direct quadrature of the height integral
# ---------------------------------------------------------------------------

def _omega_for(params: SpectrumParams, kz: float, dispersion: str) -> float:
    if dispersion == "resonant":
        return params.nu
    if dispersion == "exact":
        kx, ky = params.k0[0], params.k0[1]
        return params.constants.c * math.sqrt(kx * kx + ky * ky + kz * kz)
    raise PhysicsDomainError(f"unknown dispersion {dispersion!r}")


def z_integral_oracle(
    k_z: float,
    params: SpectrumParams,
    z_range: tuple[float, float],
    quadrature_tol: float = 1e-9,
    *,
    dispersion: str = "resonant",
    tails: str = "rotated",
    include_volume_weight: bool = False,
) -> complex:
    """Numerically integrate dz e^{i (k0z - kz) z} / [(w - nu + i G/2) + (a/2) w (Z - z)].

    This is the height integral the emission kernel was extracted from, and it
    is evaluated without using that extraction: the denominator is never
    factored, only integration paths are chosen.

    tails="rotated" evaluates the infinite-extent integral: outside [z_lo, z_hi]
    the path is turned into the complex half-plane where the oscillatory factor
    decays (legitimate because the integrand's only pole lies inside the window
    strip), which removes hard-window ringing entirely; the result is then
    window independent.  tails="none" integrates the literal finite window,
    which is what a finite atom slab physically produces.

    dispersion picks the mode frequency entering the denominator: "resonant"
    locks it to nu (the regime in which the closed-form kernel is derived),
    "exact" uses c |k| with the transverse components pinned to k0's (matching
    the Monte Carlo sum).

    The returned value omits the common modal prefactor, like the kernel it is
    compared against.
    """
    params.require_directional()
    z_lo, z_hi = float(z_range[0]), float(z_range[1])
    if not z_hi > z_lo:
        raise PhysicsDomainError("z_range must be increasing")
    a = params.metric.a
    if a <= 0.0:
        raise PhysicsDomainError("height integral degenerates at a = 0")
    if tails not in ("rotated", "none"):
        raise PhysicsDomainError(f"unknown tails mode {tails!r}")

    q = params.k0z - float(k_z)
    omega = _omega_for(params, float(k_z), dispersion)
    b = 0.5 * a * omega
    c0 = (omega - params.nu) + 0.5j * params.gamma + b * params.Z  # denominator = c0 - b z
    z0_ref = params.metric.z0

    if include_volume_weight:
        def f(z):
            return (1.0 - 0.5 * a * (z - z0_ref)) / (c0 - b * z)
    else:
        def f(z):
            return 1.0 / (c0 - b * z)

    peak_scale = 2.0 * math.pi / b
    epsabs = quadrature_tol * peak_scale / 8.0

    mid, err = fourier_complex_quad(f, q, z_lo, z_hi, epsabs=epsabs)

    if tails == "rotated":
        pole_re = (c0 / b).real
        if q > 0.0 and not z_lo < pole_re < z_hi:
            raise QuadratureError(
                "window must horizontally contain the resonance pole "
                f"(pole at z={pole_re!r}, window=({z_lo!r}, {z_hi!r}))"
            )
        if q == 0.0:
            # exact tail pair: the antiderivative's log arguments stay in the
            # upper half-plane for all real z, so principal branches are safe
            tail = -(
                1j * math.pi + np.log(c0 - b * z_lo) - np.log(c0 - b * z_hi)
            ) / b
            terr = 0.0
        else:
            sgn = 1.0 if q > 0.0 else -1.0

            def vertical(tau):
                zr = z_hi + 1j * sgn * tau
                zl = z_lo + 1j * sgn * tau
                return np.exp(1j * q * zr) * f(zr) - np.exp(1j * q * zl) * f(zl)

            tail, terr = complex_quad_semi_infinite(
                lambda tau: 1j * sgn * vertical(tau), epsabs=epsabs
            )
        total = mid + tail
        err = err + terr
    else:
        total = mid

    if err > quadrature_tol * peak_scale:
        raise QuadratureError(
            f"height-integral quadrature error {err!r} exceeds tolerance "
            f"{quadrature_tol!r} x peak scale {peak_scale!r}"
        )
    return complex(total)


def quadrature_spectrum(
    kz_grid,
    params: SpectrumParams,
    z_range: tuple[float, float],
    quadrature_tol: float = 1e-9,
    **oracle_kwargs,
) -> AngularSpectrum:
    """Height-integral oracle evaluated over a whole grid."""
    kz = np.asarray(kz_grid, dtype=float)
    amps = np.array(
        [z_integral_oracle(k, params, z_range, quadrature_tol, **oracle_kwargs) for k in kz]
    )
    return AngularSpectrum(
        kz, amps, "quadrature",
        meta={"z_range": tuple(map(float, z_range)), **{k: str(v) for k, v in oracle_kwargs.items()}},
    )


def analytic_spectrum(kz_grid, params: SpectrumParams) -> AngularSpectrum:
    """Closed-form kernel sampled over a grid."""
    kz = np.asarray(kz_grid, dtype=float)
    return AngularSpectrum(kz, g_kernel(kz, params), "analytic", meta={"a": params.metric.a})


# ---------------------------------------------------------------------------
# Monte Carlo over explicit ensembles
# ---------------------------------------------------------------------------

def monte_carlo_spectrum(
    ensemble: Ensemble,
    state: TimedDickeState,
    kz_grid,
    params: SpectrumParams,
    *,
    use_volume_weights: bool = True,
    n_batches: int = 16,
) -> AngularSpectrum:
    """Coherent atom sum amplitude(kz) = sum_j c_j w_j e^{-i k . r_j} / D_j(kz).

    D_j is the detuning denominator with the mode frequency shifted to the
    atom's height; k keeps k0's transverse components, so a global x/y
    translation of the ensemble cancels exactly.  The standard error is
    estimated by splitting the atoms into batches.
    """
    params.require_directional()
    if state.n != ensemble.n:
        raise PhysicsDomainError("state and ensemble must share atom ordering")
    kz = np.asarray(kz_grid, dtype=float)
    if kz.ndim != 1 or kz.size == 0:
        raise PhysicsDomainError("kz grid must be a nonempty 1-D array")
    kx, ky = params.k0[0], params.k0[1]
    c = params.constants.c
    a = params.metric.a
    pos = ensemble.positions
    w = ensemble.weights if use_volume_weights else np.ones(ensemble.n)

    base = state.amplitudes * w * np.exp(-1j * (kx * pos[:, 0] + ky * pos[:, 1]))
    zs = pos[:, 2]
    n_batches = int(min(n_batches, ensemble.n))
    bounds = np.linspace(0, ensemble.n, n_batches + 1).astype(int)

    amps = np.empty(kz.shape, dtype=complex)
    stderr = np.empty(kz.shape)
    for i, kzi in enumerate(kz):
        omega = c * math.sqrt(kx * kx + ky * ky + kzi * kzi)
        den = (omega - params.nu) + 0.5j * params.gamma + 0.5 * a * omega * (params.Z - zs)
        terms = base * np.exp(-1j * kzi * zs) / den
        amps[i] = terms.sum()
        batch_sums = np.add.reduceat(terms, bounds[:-1])
        spread = batch_sums - batch_sums.mean()
        var = np.sum(spread.real**2 + spread.imag**2) / max(n_batches - 1, 1)
        stderr[i] = math.sqrt(var * n_batches)
    return AngularSpectrum(
        kz, amps, "montecarlo", mc_stderr=stderr, seed=ensemble.seed_key,
        meta={"n_atoms": ensemble.n, "n_batches": n_batches,
              "volume_weights": bool(use_volume_weights)},
    )


def replicated_mc_spectrum(
    params: SpectrumParams,
    kz_grid,
    n_atoms: int,
    box: Box,
    n_replicas: int,
    base_seed: int,
    *,
    fparams: FCorrectionParams | None = None,
    use_volume_weights: bool = True,
    threads: int = 1,
    dipole=(1.0, 0.0, 0.0),
) -> AngularSpectrum:
    """Monte Carlo spectrum averaged over independent seeded ensembles.

    Replica r draws its atoms from the child stream (base_seed, r), so serial
    and threaded execution produce bit-identical results: work is farmed out
    by replica index and merged back in index order.
    """
    if n_replicas < 1:
        raise PhysicsDomainError("need at least one replica")
    kz = np.asarray(kz_grid, dtype=float)

    def one(r: int) -> np.ndarray:
        ens = sample_ensemble(
            n_atoms, box, (base_seed, r), params.nu, params.gamma, dipole,
            metric=params.metric if use_volume_weights else None,
        )
        state = curved_timed_dicke(ens, params.k0, params.metric, fparams)
        return monte_carlo_spectrum(
            ens, state, kz, params, use_volume_weights=use_volume_weights
        ).amplitude

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(one, range(n_replicas)))
    else:
        reps = [one(r) for r in range(n_replicas)]
    reps = np.array(reps)  # (R, n_kz)

    mean_amp = reps.mean(axis=0)
    if n_replicas > 1:
        dev = reps - mean_amp
        var = np.sum(dev.real**2 + dev.imag**2, axis=0) / (n_replicas - 1)
        amp_stderr = np.sqrt(var / n_replicas)
        prob = np.abs(reps) ** 2
        prob_stderr = prob.std(axis=0, ddof=1) / math.sqrt(n_replicas)
    else:
        amp_stderr = np.zeros(kz.shape)
        prob_stderr = np.zeros(kz.shape)
    return AngularSpectrum(
        kz, mean_amp, "montecarlo", mc_stderr=amp_stderr, seed=base_seed,
        meta={
            "n_atoms": n_atoms,
            "replicas": n_replicas,
            "probability_mean": (np.abs(reps) ** 2).mean(axis=0),
            "probability_stderr": prob_stderr,
            "volume_weights": bool(use_volume_weights),
        },
    )


# ---------------------------------------------------------------------------
# flat-space structure factor and the delta limit
# ---------------------------------------------------------------------------

def structure_factor(positions, delta_k) -> float:
    """Normalized random-phasor power |mean_j e^{i dk . r_j}|^2, in [0, 1]."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    dk = np.asarray(delta_k, dtype=float).reshape(3)
    phasor = np.exp(1j * (pos @ dk)).mean()
    return float(np.abs(phasor) ** 2)


def structure_factor_expectation(n: int, box_size, delta_k) -> float:
    """Ensemble expectation 1/N + (1 - 1/N) prod_i sinc^2(dk_i L_i / 2) for a uniform box."""
    size = np.asarray(box_size, dtype=float).reshape(3)
    dk = np.asarray(delta_k, dtype=float).reshape(3)
    arg = 0.5 * dk * size
    sinc = np.sinc(arg / np.pi)  # sin(x)/x; numpy's sinc is the normalized one
    coherent = float(np.prod(sinc) ** 2)
    return 1.0 / n + (1.0 - 1.0 / n) * coherent


def flat_delta_limit(kz_grid, params: SpectrumParams, a_values=None) -> list[AngularSpectrum]:
    """Kernel sampled at a sequence of shrinking gravity gradients.

    Demonstrates the flat limit: the measured decay scale halves with a, the
    peak doubles, and the quadrature area stays -i/Gamma throughout, i.e. the
    distribution contracts to a delta spike at k0z of fixed weight.
    """
    if a_values is None:
        base = params.metric.a
        if base <= 0.0:
            raise PhysicsDomainError("need a starting a > 0 for the delta-limit sweep")
        a_values = [base, base / 2.0, base / 4.0, base / 8.0]
    kz = np.asarray(kz_grid, dtype=float)
    out = []
    for a in a_values:
        p = SpectrumParams(
            params.k0, params.nu, params.gamma,
            WeakFieldMetric(a=float(a), z0=params.metric.z0),
            params.Z, params.constants,
        )
        spec = analytic_spectrum(kz, p)
        mask = (params.k0z - kz) > 0.0
        q = params.k0z - kz[mask]
        mag = np.abs(spec.amplitude[mask])
        slope = np.polyfit(q, np.log(mag), 1)[0]  # = -Gamma/(a nu) on exact samples
        spec.meta.update(
            a=float(a),
            area=kernel_area(p),
            peak=float(np.max(np.abs(spec.amplitude))),
            decay_scale=float(-1.0 / slope),
        )
        out.append(spec)
    return out
