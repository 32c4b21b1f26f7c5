"""Adaptive quadrature helpers for complex integrands.

Thin wrappers around QUADPACK: complex-valued integrands are split into real
and imaginary parts, and Fourier-type integrals use the oscillatory (QAWO)
weights so the subdivision does not have to resolve every oscillation.
Each helper returns (value, error_estimate); callers decide what tolerance
failure means.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import integrate

__all__ = ["complex_quad", "fourier_complex_quad", "complex_quad_semi_infinite"]


def complex_quad(f: Callable, lo: float, hi: float, *, epsabs: float = 1e-12,
                 limit: int = 200) -> tuple[complex, float]:
    re, re_err = integrate.quad(lambda z: f(z).real, lo, hi, epsabs=epsabs,
                                epsrel=1e-12, limit=limit)
    im, im_err = integrate.quad(lambda z: f(z).imag, lo, hi, epsabs=epsabs,
                                epsrel=1e-12, limit=limit)
    return complex(re, im), re_err + im_err


def fourier_complex_quad(f: Callable, q: float, lo: float, hi: float, *,
                         epsabs: float = 1e-12, limit: int = 400) -> tuple[complex, float]:
    """Integral of f(z) e^{i q z} over [lo, hi] with oscillatory weights.

    f may be complex-valued; q = 0 falls back to plain adaptive quadrature
    (QUADPACK rejects a zero oscillation frequency).
    """
    if q == 0.0:
        return complex_quad(f, lo, hi, epsabs=epsabs, limit=limit)
    parts = {}
    err = 0.0
    for name, g in (("re", lambda z: f(z).real), ("im", lambda z: f(z).imag)):
        for weight in ("cos", "sin"):
            val, e = integrate.quad(g, lo, hi, weight=weight, wvar=q,
                                    epsabs=epsabs, epsrel=1e-12, limit=limit)
            parts[f"{name}_{weight}"] = val
            err += e
    value = complex(
        parts["re_cos"] - parts["im_sin"],
        parts["re_sin"] + parts["im_cos"],
    )
    return value, err


def complex_quad_semi_infinite(f: Callable, *, epsabs: float = 1e-12,
                               limit: int = 200) -> tuple[complex, float]:
    """Integral of a decaying complex integrand over (0, inf)."""
    re, re_err = integrate.quad(lambda u: f(u).real, 0.0, np.inf, epsabs=epsabs,
                                epsrel=1e-12, limit=limit)
    im, im_err = integrate.quad(lambda u: f(u).imag, 0.0, np.inf, epsabs=epsabs,
                                epsrel=1e-12, limit=limit)
    return complex(re, im), re_err + im_err
