"""Exact inverse-transform sampling of the path-length laws.

Every law's CDF is inverted analytically or semi-analytically:

  classical   s = -ln(1 - xi) / sigma_t
  diffusion   s = invert_f(1 - xi) / (sqrt(3) sigma_t)
  sp2         s = 0 for xi <= 4/9, else invert_f((9/5)(1 - xi)) / L_hat
  sp3         s = F^{-1}(xi) / sigma_t via a tabulated quantile grid refined
              by Newton iteration on the analytic CDF

where f(z) = (1 + z) e^{-z} is the shared survival shape. invert_f uses a
safeguarded Newton iteration (bracketing bisection fallback); the identity
z = -1 - W_{-1}(-y / e) with the lower Lambert-W branch is an independent
cross-check oracle used in the tests, not the production path.

Sampling is a pure function of (model, xi); all randomness is supplied by
the caller, normally via :class:`~nonclassical_mc.rng.RandomStream`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import SP2_ATOM, SP2_LAMBDA, SQRT3, ModelKind, PathLengthModel, _decay
from .rng import RandomStream

__all__ = [
    "invert_f",
    "sample_path",
    "QuantileTable",
    "MomentReport",
    "empirical_check",
    "RandomStream",
]

_TABLE_KNOTS = 2048
_TABLE_XI_MAX = 1.0 - 1e-12


def _bracketed_newton(value, slope, target, z0, lo, hi, increasing, tol=1e-13, max_iter=200):
    """Solve value(z) = target elementwise with a safeguarded Newton iteration.

    lo/hi bracket the root (hi is grown by doubling if it does not yet);
    steps that leave the bracket or hit a zero derivative fall back to
    bisection, so convergence is guaranteed for monotone value().
    """
    target = np.asarray(target, dtype=float)
    tol = np.broadcast_to(np.asarray(tol, dtype=float), target.shape)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    sign = 1.0 if increasing else -1.0
    # ensure value(hi) is on the far side of the target
    for _ in range(80):
        short = sign * (value(hi) - target) < 0.0
        if not np.any(short):
            break
        hi[short] = np.maximum(hi[short] * 2.0, 1.0)
    z = np.clip(np.broadcast_to(np.asarray(z0, dtype=float), target.shape), lo, hi)
    done = np.zeros(target.shape, dtype=bool)
    for _ in range(max_iter):
        err = value(z) - target
        done |= np.abs(err) <= tol
        if done.all():
            break
        below = sign * err < 0.0  # z is left of the root
        lo = np.where(below & ~done, z, lo)
        hi = np.where(~below & ~done, z, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = err / slope(z)
        z_new = z - step
        bad = ~np.isfinite(z_new) | (z_new <= lo) | (z_new >= hi)
        z_new = np.where(bad, 0.5 * (lo + hi), z_new)
        z = np.where(done, z, z_new)
    return z


def _f_value(z):
    return _decay(z)


def _f_slope(z):
    return -z * np.exp(-z)


def invert_f(y):
    """Invert f(z) = (1 + z) e^{-z} on z >= 0 for y in (0, 1].

    Returns z with |f(z) - y| <= 1e-12. Initial guesses: the small-z
    expansion z0 = sqrt(2 (1 - y)) for y > 1/2 and the tail asymptote
    z0 = -ln y + ln(1 - ln y) for y <= 1/2.
    """
    arr = np.asarray(y, dtype=float)
    scalar = np.ndim(y) == 0
    arr = np.atleast_1d(arr)
    if np.any((arr <= 0.0) | (arr > 1.0)):
        raise ValueError("invert_f requires 0 < y <= 1")
    z0 = np.empty_like(arr)
    near = arr > 0.5
    z0[near] = np.sqrt(2.0 * (1.0 - arr[near]))
    t = -np.log(arr[~near])
    z0[~near] = t + np.log1p(t)
    # tolerance relative to y, so the deep tail stays accurate too
    z = _bracketed_newton(
        _f_value, _f_slope, arr, z0,
        lo=0.0, hi=np.maximum(2.0 * z0, 2.0), increasing=False,
        tol=np.maximum(1e-13 * arr, 1e-280),
    )
    return float(z[0]) if scalar else z


@dataclass(frozen=True)
class QuantileTable:
    """Monotone (xi, z) knots of a law's quantile function, z = sigma_t * s.

    Knots are spaced uniformly in -ln(1 - xi) so the exponential tail is
    resolved as well as the bulk; the grid covers xi in [atom, 1 - 1e-12].
    sigma_t scales out of every law, so one table per kind serves all media.
    """

    kind: ModelKind
    xi: np.ndarray
    z: np.ndarray

    @property
    def knots(self) -> int:
        return self.xi.size


def _sp3_cdf_z(z, k):
    return 1.0 - (
        k.A_plus / k.lambda_plus**2 * _decay(k.lambda_plus * z)
        + k.A_minus / k.lambda_minus**2 * _decay(k.lambda_minus * z)
    )


def _sp3_pdf_z(z, k):
    return z * (k.A_plus * np.exp(-k.lambda_plus * z) + k.A_minus * np.exp(-k.lambda_minus * z))


_SP3_TABLE: QuantileTable | None = None


def _sp3_table(k) -> QuantileTable:
    # built once on first use; a duplicate build under a race is identical
    global _SP3_TABLE
    if _SP3_TABLE is None:
        t = np.linspace(0.0, -math.log(1.0 - _TABLE_XI_MAX), _TABLE_KNOTS)
        xi = -np.expm1(-t)
        z = _bracketed_newton(
            lambda u: _sp3_cdf_z(u, k), lambda u: _sp3_pdf_z(u, k),
            xi, z0=t / k.lambda_minus, lo=0.0, hi=np.maximum(2.0 * t, 4.0),
            increasing=True, tol=1e-14,
        )
        z[0] = 0.0
        if np.any(np.diff(xi) <= 0.0) or np.any(np.diff(z) <= 0.0):
            raise ArithmeticError("quantile table knots are not strictly increasing")
        _SP3_TABLE = QuantileTable(kind=ModelKind.SP3, xi=xi, z=z)
    return _SP3_TABLE


def _sp3_quantile(xi, k):
    table = _sp3_table(k)
    n = table.knots
    i = np.clip(np.searchsorted(table.xi, xi, side="right"), 1, n - 1)
    z0 = np.interp(xi, table.xi, table.z)
    return _bracketed_newton(
        lambda u: _sp3_cdf_z(u, k), lambda u: _sp3_pdf_z(u, k),
        xi, z0, lo=table.z[i - 1], hi=table.z[i], increasing=True, tol=1e-13,
    )


def sample_path(model: PathLengthModel, xi):
    """Map unit-interval variates to path lengths by inverting the CDF.

    Pure function: all randomness comes in through xi (scalar or array,
    each value in [0, 1)). For the sp2 law, xi <= 4/9 returns exactly 0.0,
    which is how the atom at s = 0 is realized.
    """
    arr = np.asarray(xi, dtype=float)
    scalar = np.ndim(xi) == 0
    arr = np.atleast_1d(arr)
    if np.any((arr < 0.0) | (arr >= 1.0)):
        raise ValueError("xi must lie in [0, 1)")
    st = model.xs.sigma_t
    if model.kind is ModelKind.CLASSICAL:
        s = -np.log1p(-arr) / st
    elif model.kind is ModelKind.DIFFUSION:
        s = invert_f(1.0 - arr) / (SQRT3 * st)
    elif model.kind is ModelKind.SP2:
        s = np.zeros_like(arr)
        moved = arr > SP2_ATOM
        if np.any(moved):
            s[moved] = invert_f(1.8 * (1.0 - arr[moved])) / (SP2_LAMBDA * st)
    else:
        s = _sp3_quantile(arr, model.sp3) / st
    return float(s[0]) if scalar else s


@dataclass(frozen=True)
class MomentReport:
    """Sampling statistics from empirical_check, with standard errors."""

    n: int
    mean: float
    mean_se: float
    second_moment: float
    second_moment_se: float
    max_cdf_gap: float
    max_cdf_gap_se: float
    max_cdf_gap_at: float
    zero_fraction: float
    zero_fraction_se: float


def empirical_check(model: PathLengthModel, n: int, stream: RandomStream) -> MomentReport:
    """Draw n samples and compare empirical statistics to the analytic law.

    Reports the sample mean and second moment, the largest |empirical CDF -
    analytic CDF| over a fixed probe grid (101 points on [0, 10] mean free
    paths), and the fraction of exact zeros, each with a standard error.
    """
    if n < 10_000:
        raise ValueError("empirical_check needs n >= 1e4 for stable error estimates")
    xi = stream.uniform(n)
    s = sample_path(model, xi)
    s2 = s * s
    root_n = math.sqrt(n)
    probes = np.linspace(0.0, 10.0, 101) / model.xs.sigma_t
    ecdf = np.searchsorted(np.sort(s), probes, side="right") / n
    gaps = np.abs(ecdf - model.cdf(probes))
    j = int(np.argmax(gaps))
    f_at_j = float(model.cdf(probes[j]))
    p_zero = float(np.mean(s == 0.0))
    return MomentReport(
        n=n,
        mean=float(s.mean()),
        mean_se=float(s.std(ddof=1) / root_n),
        second_moment=float(s2.mean()),
        second_moment_se=float(s2.std(ddof=1) / root_n),
        max_cdf_gap=float(gaps[j]),
        max_cdf_gap_se=math.sqrt(max(f_at_j * (1.0 - f_at_j), 0.0) / n),
        max_cdf_gap_at=float(probes[j]),
        zero_fraction=p_zero,
        zero_fraction_se=math.sqrt(max(p_zero * (1.0 - p_zero), 0.0) / n),
    )
