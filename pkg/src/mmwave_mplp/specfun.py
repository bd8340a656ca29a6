"""Special functions and quadrature used by the closed-form coverage results.

Everything here is pure and reentrant. Domain violations raise ``ValueError``;
a quadrature that cannot reach its tolerance raises :class:`QuadratureError`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _integrate
from scipy import special as _special


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be > 0, got {self.abs_tol}")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


class QuadratureError(RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget.

    The partial estimate and its error bound are kept on the exception.
    """

    def __init__(self, message, estimate, error_bound):
        super().__init__(f"{message} (estimate={estimate!r}, bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound


def gamma_fn(x: float) -> float:
    """Euler gamma function for positive real arguments."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma_fn is only defined here for x > 0, got {x}")
    return math.gamma(x)


def bessel_k1(mu):
    """Modified Bessel function of the second kind, order one.

    Accepts scalars or arrays; every element must be positive. Values
    underflow to 0 for ``mu`` beyond roughly 700.
    """
    arr = np.asarray(mu, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("bessel_k1 requires mu > 0")
    out = _special.k1(arr)
    return float(out) if out.ndim == 0 else out


def sinc(x):
    """Normalized sinc, sin(pi x) / (pi x), equal to 1 at the origin."""
    out = np.sinc(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def integrate(f: Callable[[float], float], a: float, b: float,
              spec: QuadratureSpec = DEFAULT_QUAD, *, points=None) -> float:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    ``b`` may be ``numpy.inf``; the semi-infinite range is mapped onto a
    finite one by QUADPACK's algebraic transform. Raises
    :class:`QuadratureError` if the error bound cannot be brought below
    ``max(abs_tol, rel_tol * |result|)``.
    """
    if b < a:
        return -integrate(f, b, a, spec, points=points)
    if a == b:
        return 0.0
    kwargs = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                  limit=int(spec.max_subdivisions), full_output=1)
    if points is not None and np.isfinite(b):
        kwargs["points"] = points
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        out = _integrate.quad(f, a, b, **kwargs)
    value, err = out[0], out[1]
    if len(out) > 3 and err > max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise QuadratureError("integral did not converge", value, err)
    return float(value)


def integrate_semi_infinite(f: Callable[[float], float], a: float, scale: float,
                            spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integral of ``f`` over ``[a, inf)`` split at ``a + scale``.

    The split keeps the finite panel, where fast-decaying integrands put
    almost all of their mass, away from the infinite-range transform.
    """
    mid = a + scale
    return integrate(f, a, mid, spec) + integrate(f, mid, np.inf, spec)


def _varrho_scalar(t: float, alpha_L: float, spec: QuadratureSpec) -> float:
    if t == 0.0:
        return 0.0
    # mu = 1/v maps [1, inf) onto (0, 1]; the v**(alpha_L - 2) endpoint
    # behaviour is handled exactly by the algebraic-weight rule.
    kwargs = dict(weight="alg", wvar=(alpha_L - 2.0, 0.0), epsabs=spec.abs_tol,
                  epsrel=spec.rel_tol, limit=int(spec.max_subdivisions),
                  full_output=1)

    def body(v):
        return t / (t * v ** alpha_L + 1.0)

    # The integrand switches from ~t to ~v**-alpha_L near v = t**(-1/alpha_L);
    # splitting there keeps both panels smooth for large t.
    knee = t ** (-1.0 / alpha_L)
    total = 0.0
    if 0.0 < knee < 1.0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", _integrate.IntegrationWarning)
            out = _integrate.quad(body, 0.0, knee, **kwargs)
            tail = _integrate.quad(lambda v: t * v ** (alpha_L - 2.0) / (t * v ** alpha_L + 1.0),
                                   knee, 1.0, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                   limit=int(spec.max_subdivisions), full_output=1)
        parts = (out, tail)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", _integrate.IntegrationWarning)
            parts = (_integrate.quad(body, 0.0, 1.0, **kwargs),)
    err = 0.0
    failed = False
    for part in parts:
        total += part[0]
        err += part[1]
        failed |= len(part) > 3
    if failed and err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        raise QuadratureError("varrho quadrature did not converge", total, err)
    return total


def varrho(t, alpha_L: float, spec: QuadratureSpec = DEFAULT_QUAD):
    """Interference integral  int_1^inf dmu / (1 + mu**alpha_L / t).

    Vectorized over ``t``. Requires ``alpha_L > 1`` (the integral diverges
    otherwise) and ``t >= 0``.
    """
    alpha_L = float(alpha_L)
    if not alpha_L > 1.0:
        raise ValueError(f"varrho diverges for alpha_L <= 1 (got {alpha_L})")
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr >= 0)):
        raise ValueError("varrho requires t >= 0")
    if arr.ndim == 0:
        return _varrho_scalar(float(arr), alpha_L, spec)
    flat = [_varrho_scalar(float(v), alpha_L, spec) for v in arr.ravel()]
    return np.array(flat).reshape(arr.shape)
