"""Path-length distribution families for infinite-medium transport.

Four distance-to-collision laws are supported. Writing z = sigma_t * s
(every law depends on s only through z), the continuous densities are

    classical   p(s) = sigma_t e^{-z}
    diffusion   p(s) = 3 sigma_t z e^{-sqrt(3) z}
    sp2         p(s) = (5/9) L sigma_t u e^{-u} + (4/9) delta(s),
                u = L_hat s = sqrt(5/3) z
    sp3         p(s) = sigma_t z (A+ e^{-l+ z} + A- e^{-l- z})

The sp2 law carries a finite probability mass (atom) at s = 0: with
probability 4/9 a particle "collides" again without moving. The atom is
never folded into the continuous density; it is reported separately as
``PathLengthModel.atom_at_zero``.

The sp3 constants (l+, l-, a+, a-, A+, A-) are solved fresh from their
defining equations at model construction and verified against those
equations, never hard-coded from rounded decimals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelKind",
    "CrossSectionSpec",
    "SP3Constants",
    "PathLengthModel",
    "solve_sp3_constants",
    "make_model",
]

SQRT3 = math.sqrt(3.0)
SP2_LAMBDA = math.sqrt(5.0 / 3.0)
SP2_ATOM = 4.0 / 9.0


class ModelKind(str, enum.Enum):
    """Which distance-to-collision law a model follows."""

    CLASSICAL = "classical"
    DIFFUSION = "diffusion"
    SP2 = "sp2"
    SP3 = "sp3"


@dataclass(frozen=True)
class CrossSectionSpec:
    """Macroscopic cross sections of the homogeneous medium (1/length).

    sigma_a and the scattering ratio c are derived, never stored, so
    sigma_a + sigma_s == sigma_t holds exactly.
    """

    sigma_t: float
    sigma_s: float

    def __post_init__(self):
        if not (self.sigma_t > 0.0 and math.isfinite(self.sigma_t)):
            raise ValueError(f"sigma_t must be positive and finite, got {self.sigma_t}")
        if not (0.0 <= self.sigma_s < self.sigma_t):
            raise ValueError(
                f"need 0 <= sigma_s < sigma_t, got sigma_s={self.sigma_s}, sigma_t={self.sigma_t}"
            )

    @property
    def sigma_a(self) -> float:
        return self.sigma_t - self.sigma_s

    @property
    def c(self) -> float:
        """Scattering ratio (probability a collision is a scatter)."""
        return self.sigma_s / self.sigma_t


@dataclass(frozen=True)
class SP3Constants:
    """Constants of the two-exponential (sp3) law, all dimensionless."""

    lambda_plus: float
    lambda_minus: float
    a_plus: float
    a_minus: float
    A_plus: float
    A_minus: float

    def verify(self, tol: float = 1e-12) -> None:
        """Check the defining equations; raises if any residual exceeds tol."""
        for lam in (self.lambda_plus, self.lambda_minus):
            res = 3.0 * lam**4 - 30.0 * lam**2 + 35.0
            if abs(res) > tol:
                raise ArithmeticError(f"quartic residual {res:.3e} at lambda={lam!r}")
        for lam, a in ((self.lambda_plus, self.a_plus), (self.lambda_minus, self.a_minus)):
            if abs(a - 14.0 / (35.0 - 9.0 * lam**2)) > tol:
                raise ArithmeticError(f"coupling coefficient off at lambda={lam!r}")
        if abs(self.A_plus * self.a_plus + self.A_minus * self.a_minus + 14.0 / 9.0) > tol:
            raise ArithmeticError("amplitude system row 1 violated")
        if abs(self.A_plus + self.A_minus - 55.0 / 9.0) > tol:
            raise ArithmeticError("amplitude system row 2 violated")
        norm = self.A_plus / self.lambda_plus**2 + self.A_minus / self.lambda_minus**2
        if abs(norm - 1.0) > tol:
            raise ArithmeticError(f"density normalization {norm!r} != 1")


def solve_sp3_constants() -> SP3Constants:
    """Solve for the sp3 law constants from their defining equations.

    lambda^2 are the roots of 3 x^2 - 30 x + 35 (quadratic formula),
    a+- couple the second moment equation, and A+- solve the 2x2 linear
    system fixed by the point-source normalization.
    """
    half_gap = 2.0 * math.sqrt(10.0 / 3.0)
    lam2_plus = 5.0 + half_gap
    lam2_minus = 5.0 - half_gap
    lam_plus = math.sqrt(lam2_plus)
    lam_minus = math.sqrt(lam2_minus)
    a_plus = 14.0 / (35.0 - 9.0 * lam2_plus)
    a_minus = 14.0 / (35.0 - 9.0 * lam2_minus)
    # A+ a+ + A- a- = -14/9 and A+ + A- = 55/9
    A_plus = (-14.0 / 9.0 - (55.0 / 9.0) * a_minus) / (a_plus - a_minus)
    A_minus = 55.0 / 9.0 - A_plus
    constants = SP3Constants(lam_plus, lam_minus, a_plus, a_minus, A_plus, A_minus)
    constants.verify()
    return constants


def _decay(u):
    """Survival shape f(u) = (1 + u) e^{-u}; the shared building block."""
    return (1.0 + u) * np.exp(-u)


def _as_path_lengths(s, allow_zero: bool):
    arr = np.asarray(s, dtype=float)
    bad = (arr < 0.0) if allow_zero else (arr <= 0.0)
    if np.any(bad):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"path length must be {bound}")
    return arr, np.ndim(s) == 0


def _maybe_scalar(out, scalar: bool):
    return float(out) if scalar else out


@dataclass(frozen=True)
class PathLengthModel:
    """One distance-to-collision law with its medium and precomputed constants.

    Immutable after construction; safe to share across threads/processes.
    Use :func:`make_model` to build one.
    """

    kind: ModelKind
    xs: CrossSectionSpec
    atom_at_zero: float
    sp3: SP3Constants | None = field(default=None, repr=False)

    def density(self, s):
        """Continuous part of p(s) (1/length); the sp2 atom is excluded.

        Accepts scalars or arrays; s must be >= 0.
        """
        z, scalar = _as_path_lengths(s, allow_zero=True)
        st = self.xs.sigma_t
        z = st * z
        if self.kind is ModelKind.CLASSICAL:
            out = st * np.exp(-z)
        elif self.kind is ModelKind.DIFFUSION:
            out = 3.0 * st * z * np.exp(-SQRT3 * z)
        elif self.kind is ModelKind.SP2:
            u = SP2_LAMBDA * z
            out = (5.0 / 9.0) * SP2_LAMBDA * st * u * np.exp(-u)
        else:
            k = self.sp3
            out = st * z * (
                k.A_plus * np.exp(-k.lambda_plus * z)
                + k.A_minus * np.exp(-k.lambda_minus * z)
            )
        return _maybe_scalar(out, scalar)

    def survival(self, s):
        """P(path length > s), excluding nothing: survival(0) = 1 - atom_at_zero."""
        z, scalar = _as_path_lengths(s, allow_zero=True)
        z = self.xs.sigma_t * z
        if self.kind is ModelKind.CLASSICAL:
            out = np.exp(-z)
        elif self.kind is ModelKind.DIFFUSION:
            out = _decay(SQRT3 * z)
        elif self.kind is ModelKind.SP2:
            out = (5.0 / 9.0) * _decay(SP2_LAMBDA * z)
        else:
            k = self.sp3
            out = (
                k.A_plus / k.lambda_plus**2 * _decay(k.lambda_plus * z)
                + k.A_minus / k.lambda_minus**2 * _decay(k.lambda_minus * z)
            )
        return _maybe_scalar(out, scalar)

    def cdf(self, s):
        """Cumulative distribution, atom included: cdf(0) = atom_at_zero."""
        z, scalar = _as_path_lengths(s, allow_zero=True)
        return _maybe_scalar(1.0 - self.survival(z), scalar)

    def hazard(self, s):
        """Path-length dependent collision rate at s > 0 (1/length).

        The sp2 atom contributes a distributional spike at s = 0 that has no
        finite value; query ``atom_at_zero`` instead of calling hazard(0).
        For the sp3 law the ratio is evaluated with the fast exponential
        factored out, so it stays finite far beyond the underflow point of
        the naive numerator/denominator form.
        """
        z, scalar = _as_path_lengths(s, allow_zero=False)
        st = self.xs.sigma_t
        z = st * z
        if self.kind is ModelKind.CLASSICAL:
            out = np.full_like(z, st)
        elif self.kind is ModelKind.DIFFUSION:
            out = 3.0 * st * z / (1.0 + SQRT3 * z)
        elif self.kind is ModelKind.SP2:
            u = SP2_LAMBDA * z
            out = SP2_LAMBDA * st * u / (1.0 + u)
        else:
            k = self.sp3
            # rescaled by e^{+lambda_minus z}: numerator and denominator both
            # stay O(1) for large z instead of underflowing around z ~ 700
            gap = np.exp(-(k.lambda_plus - k.lambda_minus) * z)
            num = st * z * (k.A_plus * gap + k.A_minus)
            den = (
                k.A_plus * (1.0 + k.lambda_plus * z) / k.lambda_plus**2 * gap
                + k.A_minus * (1.0 + k.lambda_minus * z) / k.lambda_minus**2
            )
            out = num / den
        return _maybe_scalar(out, scalar)

    def moment(self, k: int) -> float:
        """Closed-form k-th moment of the path length, k in {1, 2}.

        The second moment is 2/sigma_t^2 for every law, matching the
        classical exponential exactly.
        """
        st = self.xs.sigma_t
        if k == 1:
            if self.kind is ModelKind.CLASSICAL:
                return 1.0 / st
            if self.kind is ModelKind.DIFFUSION:
                return 2.0 / (SQRT3 * st)
            if self.kind is ModelKind.SP2:
                return math.sqrt(20.0 / 27.0) / st
            sp3 = self.sp3
            return (
                2.0 * sp3.A_plus / sp3.lambda_plus**3
                + 2.0 * sp3.A_minus / sp3.lambda_minus**3
            ) / st
        if k == 2:
            return 2.0 / st**2
        raise ValueError(f"moment order must be 1 or 2, got {k}")


def make_model(kind: ModelKind | str, xs: CrossSectionSpec) -> PathLengthModel:
    """Build a path-length model for the given law and medium.

    The sp3 constants are solved (and verified) here; the sp2 law gets its
    4/9 atom at s = 0; the other laws have no atom.
    """
    kind = ModelKind(kind)
    if not isinstance(xs, CrossSectionSpec):
        raise TypeError("xs must be a CrossSectionSpec")
    atom = SP2_ATOM if kind is ModelKind.SP2 else 0.0
    sp3 = solve_sp3_constants() if kind is ModelKind.SP3 else None
    return PathLengthModel(kind=kind, xs=xs, atom_at_zero=atom, sp3=sp3)
