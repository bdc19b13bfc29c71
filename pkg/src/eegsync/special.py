"""Special functions backing every p-value in the package.

Everything reduces to the regularized incomplete beta function
I_x(a, b), evaluated with the modified Lentz continued fraction
(Numerical Recipes betacf with the usual symmetry switch at
x = (a+1)/(a+b+2)). The implementation is vectorized over x so that
million-cell p-value tensors stay cheap; a and b are scalar because the
t-distribution tails used here always have fixed (df/2, 1/2) shape.

Accuracy: |error| < 1e-13 over the tested (a, b, x) range, comfortably
inside the 1e-10 contract of the correlation p-values.
"""

from __future__ import annotations

import math

import numpy as np

_LENTZ_EPS = 1e-15
_LENTZ_TINY = 1e-300
_LENTZ_MAX_ITER = 500


def log_beta(a: float, b: float) -> float:
    """ln B(a, b) via log-gamma."""
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a: float, b: float, x: np.ndarray) -> np.ndarray:
    """Continued fraction for I_x(a, b), vectorized over x.

    Converges fast only for x < (a+1)/(a+b+2); callers are responsible
    for the symmetry switch.
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0

    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    np.copyto(d, _LENTZ_TINY, where=np.abs(d) < _LENTZ_TINY)
    d = 1.0 / d
    h = d.copy()

    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _LENTZ_MAX_ITER + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d_new = 1.0 + aa * d
        c_new = 1.0 + aa / c
        np.copyto(d_new, _LENTZ_TINY, where=np.abs(d_new) < _LENTZ_TINY)
        np.copyto(c_new, _LENTZ_TINY, where=np.abs(c_new) < _LENTZ_TINY)
        d_new = 1.0 / d_new
        h_new = h * d_new * c_new
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d2 = 1.0 + aa * d_new
        c2 = 1.0 + aa / c_new
        np.copyto(d2, _LENTZ_TINY, where=np.abs(d2) < _LENTZ_TINY)
        np.copyto(c2, _LENTZ_TINY, where=np.abs(c2) < _LENTZ_TINY)
        d2 = 1.0 / d2
        delta = d2 * c2

        # freeze entries that already converged so late noise cannot drift them
        h = np.where(active, h_new * delta, h)
        c = np.where(active, c2, c)
        d = np.where(active, d2, d)
        active &= np.abs(delta - 1.0) >= _LENTZ_EPS
        if not active.any():
            break
    else:
        raise FloatingPointError(
            f"incomplete beta continued fraction did not converge "
            f"(a={a}, b={b}, {int(active.sum())} stragglers)"
        )
    return h


def betainc_reg(a: float, b: float, x) -> np.ndarray | float:
    """Regularized incomplete beta I_x(a, b) for scalar a, b > 0 and x in [0, 1].

    Accepts a scalar or ndarray x; returns the same shape. NaN inputs
    propagate to NaN outputs.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"betainc_reg requires a, b > 0, got a={a}, b={b}")
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(np.isfinite(xa) & ((xa < 0.0) | (xa > 1.0))):
        raise ValueError("betainc_reg requires x in [0, 1]")

    out = np.full(xa.shape, np.nan)
    finite = np.isfinite(xa)
    out[finite & (xa == 0.0)] = 0.0
    out[finite & (xa == 1.0)] = 1.0

    interior = finite & (xa > 0.0) & (xa < 1.0)
    if interior.any():
        xi = xa[interior]
        lbeta = log_beta(a, b)
        # front factor x^a (1-x)^b / (a or b * B(a,b)), in log space
        lfront = a * np.log(xi) + b * np.log1p(-xi) - lbeta
        direct = xi < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xi)
        if direct.any():
            xd = xi[direct]
            res[direct] = np.exp(lfront[direct]) * _betacf(a, b, xd) / a
        if (~direct).any():
            xc = xi[~direct]
            res[~direct] = 1.0 - np.exp(lfront[~direct]) * _betacf(b, a, 1.0 - xc) / b
        out[interior] = np.clip(res, 0.0, 1.0)

    return float(out[0]) if scalar else out


def t_sf(t, df: float) -> np.ndarray | float:
    """Upper tail P(T > t) of Student's t with df degrees of freedom."""
    if df <= 0:
        raise ValueError(f"t_sf requires df > 0, got {df}")
    ta = np.asarray(t, dtype=np.float64)
    scalar = ta.ndim == 0
    ta = np.atleast_1d(ta)
    x = df / (df + ta * ta)
    x[np.isinf(ta)] = 0.0
    half_two_sided = 0.5 * np.asarray(betainc_reg(0.5 * df, 0.5, x))
    out = np.where(ta >= 0.0, half_two_sided, 1.0 - half_two_sided)
    out[np.isnan(ta)] = np.nan
    # sign convention at +/-inf
    out[np.isinf(ta) & (ta > 0)] = 0.0
    out[np.isinf(ta) & (ta < 0)] = 1.0
    return float(out[0]) if scalar else out


def t_two_sided_p(t, df: float) -> np.ndarray | float:
    """Two-sided tail P(|T| >= |t|) of Student's t."""
    if df <= 0:
        raise ValueError(f"t_two_sided_p requires df > 0, got {df}")
    ta = np.asarray(t, dtype=np.float64)
    scalar = ta.ndim == 0
    ta = np.atleast_1d(ta)
    x = df / (df + ta * ta)
    x[np.isinf(ta)] = 0.0
    out = np.asarray(betainc_reg(0.5 * df, 0.5, x))
    out[np.isnan(ta)] = np.nan
    return float(out[0]) if scalar else out


def pearson_r_two_sided_p(r, n: int) -> np.ndarray | float:
    """Two-sided p-value of Pearson's r under the exact null distribution.

    Uses the identity P(|T| >= |t|) = I_{1-r^2}(df/2, 1/2) with
    t = r sqrt(df / (1 - r^2)) and df = n - 2, which avoids forming an
    infinite t at |r| = 1.
    """
    if n < 3:
        raise ValueError(f"pearson p-value needs n >= 3, got n={n}")
    ra = np.asarray(r, dtype=np.float64)
    scalar = ra.ndim == 0
    ra = np.atleast_1d(ra)
    if np.any(np.abs(ra[np.isfinite(ra)]) > 1.0 + 1e-12):
        raise ValueError("|r| must be <= 1")
    x = np.clip(1.0 - ra * ra, 0.0, 1.0)
    x[~np.isfinite(ra)] = np.nan
    out = np.asarray(betainc_reg(0.5 * (n - 2), 0.5, x))
    return float(out[0]) if scalar else out


def normal_sf(z: float) -> float:
    """Upper tail of the standard normal, via erfc."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))
