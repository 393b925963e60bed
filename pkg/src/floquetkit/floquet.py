"""Floquet multipliers of planar periodic linear systems and stability.

The multipliers of x' = P(t) x with T-periodic P are the eigenvalues of
the monodromy matrix Phi(T) (fundamental matrix with Phi(0) = I).  This
module computes them numerically, builds normal solutions phi(t+T) =
lambda phi(t) from a periodic solution of the associated scalar Riccati
equation, and classifies stability from the multiplier moduli.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ivp import fundamental_matrix
from .periodic import PeriodicFn

__all__ = [
    "PlanarPeriodicSystem", "MultiplierPair", "Stability", "StabilityVerdict",
    "NormalSolution", "eigenvalues_2x2", "monodromy_matrix",
    "monodromy_multipliers", "liouville_product_check",
    "normal_solution_from_sigma", "classify_stability",
    "classify_nonlinear_dfe", "stability_from_monodromy", "swap_orientation",
]

DEFAULT_MODULUS_TOL = 1e-7


@dataclass(frozen=True)
class PlanarPeriodicSystem:
    """u' = p11 u + p12 v, v' = p21 u + p22 v with shared period T."""

    p11: PeriodicFn
    p12: PeriodicFn
    p21: PeriodicFn
    p22: PeriodicFn

    def __post_init__(self):
        T = self.p11.period
        for name in ("p12", "p21", "p22"):
            other = getattr(self, name).period
            if abs(other - T) > 1e-12 * T:
                raise ValueError(f"{name} has period {other}, expected {T}")

    @property
    def period(self) -> float:
        return self.p11.period

    @classmethod
    def from_expressions(cls, p11: str, p12: str, p21: str, p22: str,
                         period: float) -> "PlanarPeriodicSystem":
        return cls(PeriodicFn(p11, period), PeriodicFn(p12, period),
                   PeriodicFn(p21, period), PeriodicFn(p22, period))

    def entries(self):
        return ((self.p11, self.p12), (self.p21, self.p22))

    def matrix(self, t: float) -> np.ndarray:
        return np.array([[self.p11.scalar(t), self.p12.scalar(t)],
                         [self.p21.scalar(t), self.p22.scalar(t)]])

    def trace_integral(self) -> float:
        return self.p11.integrate_period() + self.p22.integrate_period()


def swap_orientation(sys: PlanarPeriodicSystem) -> PlanarPeriodicSystem:
    """Relabel the states (u, v) -> (v, u); the multiplier set is unchanged."""
    return PlanarPeriodicSystem(p11=sys.p22, p12=sys.p21, p21=sys.p12, p22=sys.p11)


@dataclass
class MultiplierPair:
    """A multiplier pair with provenance.

    ``method`` is one of ``monodromy`` (eigenvalues of Phi(T)),
    ``semianalytic`` (exponential integral formulas through a certified
    periodic Riccati solution sigma) or ``explicit`` (formulas needing no
    sigma).  Sorted by descending modulus, ties by descending real part.
    """

    lam1: complex
    lam2: complex
    method: str
    sigma: object | None = None
    liouville_defect: float | None = None
    semisimple: bool | None = None

    @property
    def moduli(self) -> tuple[float, float]:
        return (abs(self.lam1), abs(self.lam2))

    def multiplicities(self, tol: float = DEFAULT_MODULUS_TOL) -> tuple[int, int]:
        """Largest-Jordan-block sizes; coincident values without a
        semisimplicity witness are conservatively reported defective."""
        scale = max(abs(self.lam1), abs(self.lam2), 1.0)
        if abs(self.lam1 - self.lam2) <= tol * scale:
            if self.semisimple:
                return (1, 1)
            return (2, 2)
        return (1, 1)

    def as_dict(self) -> dict:
        out = {
            "method": self.method,
            "lambda1": {"re": self.lam1.real, "im": self.lam1.imag},
            "lambda2": {"re": self.lam2.real, "im": self.lam2.imag},
            "moduli": list(self.moduli),
            "liouville_defect": self.liouville_defect,
        }
        if self.semisimple is not None:
            out["semisimple"] = self.semisimple
        return out


def _sort_pair(lam1: complex, lam2: complex) -> tuple[complex, complex]:
    key = lambda z: (abs(z), z.real)
    a, b = sorted((complex(lam1), complex(lam2)), key=key, reverse=True)
    return a, b


def eigenvalues_2x2(m: np.ndarray) -> tuple[complex, complex]:
    """Eigenvalues of a real 2x2 matrix from the trace/determinant quadratic.

    Complex pair when the discriminant is negative.  The smaller real root
    is recovered as det/root to avoid cancellation.  Sorted by descending
    modulus, ties by descending real part.
    """
    tr = float(m[0, 0] + m[1, 1])
    det = float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    disc = tr * tr - 4.0 * det
    if disc < 0.0:
        s = math.sqrt(-disc)
        lam1 = complex(0.5 * tr, 0.5 * s)
        lam2 = complex(0.5 * tr, -0.5 * s)
    else:
        s = math.sqrt(disc)
        big = 0.5 * (tr + s) if tr >= 0.0 else 0.5 * (tr - s)
        if big == 0.0:
            lam1, lam2 = complex(0.5 * (tr + s)), complex(0.5 * (tr - s))
        else:
            lam1, lam2 = complex(big), complex(det / big)
    return _sort_pair(lam1, lam2)


def monodromy_matrix(sys: PlanarPeriodicSystem, rel_tol: float = 1e-10,
                     abs_tol: float = 1e-12) -> np.ndarray:
    return fundamental_matrix(sys.entries(), sys.period, rel_tol, abs_tol)


def monodromy_multipliers(sys: PlanarPeriodicSystem, rel_tol: float = 1e-10,
                          abs_tol: float = 1e-12,
                          tol: float = DEFAULT_MODULUS_TOL) -> MultiplierPair:
    """Multipliers as eigenvalues of the numerically integrated Phi(T)."""
    phi = monodromy_matrix(sys, rel_tol, abs_tol)
    lam1, lam2 = eigenvalues_2x2(phi)
    semisimple = None
    scale = max(abs(lam1), abs(lam2), 1.0)
    if abs(lam1 - lam2) <= tol * scale:
        # coincident pair: semisimple iff Phi is (numerically) lambda * I
        lam = 0.5 * (lam1 + lam2)
        semisimple = bool(np.max(np.abs(phi - lam.real * np.eye(2))) <= tol * scale)
    pair = MultiplierPair(lam1, lam2, "monodromy", semisimple=semisimple)
    pair.liouville_defect = liouville_product_check(sys, pair)
    return pair


def liouville_product_check(sys: PlanarPeriodicSystem,
                            pair: MultiplierPair) -> float:
    """Relative defect |lam1 lam2 - exp(int trace)| / |exp(int trace)|."""
    expected = math.exp(sys.trace_integral())
    return abs(pair.lam1 * pair.lam2 - expected) / abs(expected)


# ---------------------------------------------------------------------------
# Normal solutions from a periodic Riccati solution

@dataclass
class NormalSolution:
    """phi = (u, v) with v(t) = exp int_k^t (p21 sigma + p22), u = sigma v.

    ``multiplier`` is v(k+T)/v(k) = exp of the whole-period integral of
    p21 sigma + p22; the solution satisfies phi(t+T) = multiplier phi(t).
    """

    sys: PlanarPeriodicSystem
    sigma: object                      # periodic interpolant, callable
    k: float
    multiplier: float
    ts: np.ndarray
    us: np.ndarray
    vs: np.ndarray
    residual_sup: float
    _mean_g: float = field(repr=False, default=0.0)
    _gtilde: object = field(repr=False, default=None)

    def v(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(self._mean_g * (t - self.k)
                      + self._gtilde(t) - self._gtilde(self.k))

    def u(self, t):
        return self.sigma_periodic(t) * self.v(t)

    def sigma_periodic(self, t):
        return self.sigma(np.asarray(t, dtype=float))


def normal_solution_from_sigma(sys: PlanarPeriodicSystem, cert, k: float = 0.0,
                               n_periods: int = 1,
                               samples_per_period: int = 256) -> NormalSolution:
    """Build the normal solution carried by a certified periodic sigma.

    ``cert`` is a :class:`~floquetkit.riccati.PeriodicSolutionCertificate`
    for the Riccati problem associated with ``sys``.  The exponential
    integral is evaluated through the same interpolant the verifier
    checked, not a re-solve.
    """
    from .periodic import TrigInterp  # local import keeps module load order flat

    if cert is None or getattr(cert, "sigma", None) is None:
        raise ValueError("a verified periodic-solution certificate is required")
    T = sys.period
    sigma = cert.sigma
    m = max(256, getattr(sigma, "m", 256))
    grid = np.linspace(0.0, T, m, endpoint=False)
    g_vals = sys.p21(grid) * sigma(grid) + sys.p22(grid)
    g_interp = TrigInterp(g_vals, T)
    mean_g = g_interp.mean()
    gtilde = g_interp.antiderivative_periodic()

    multiplier = math.exp(mean_g * T)
    ts = np.linspace(k, k + n_periods * T, n_periods * samples_per_period + 1)
    sol = NormalSolution(sys=sys, sigma=sigma, k=k, multiplier=multiplier,
                         ts=ts, us=np.empty(0), vs=np.empty(0),
                         residual_sup=0.0, _mean_g=mean_g, _gtilde=gtilde)
    sol.vs = sol.v(ts)
    sol.us = sol.sigma_periodic(ts) * sol.vs
    sol.residual_sup = _normal_solution_residual(sys, cert, sol, ts)
    return sol


def _normal_solution_residual(sys, cert, sol, ts) -> float:
    """sup over samples of the planar-system residual, scaled by state norm.

    v' = (p21 sigma + p22) v holds identically for the constructed v, so
    the only honest measurement is on the u equation, through the
    interpolant derivative of sigma.
    """
    sig = sol.sigma_periodic(ts)
    dsig = cert.sigma.derivative(np.asarray(ts, dtype=float))
    v = sol.v(ts)
    u = sig * v
    p11 = sys.p11(ts)
    p12 = sys.p12(ts)
    p21 = sys.p21(ts)
    p22 = sys.p22(ts)
    du = (dsig + sig * (p21 * sig + p22)) * v
    res_u = np.abs(du - p11 * u - p12 * v)
    scale = 1.0 + np.hypot(u, v)
    return float(np.max(res_u / scale))


# ---------------------------------------------------------------------------
# Stability classification

class Stability(str, Enum):
    UNIFORMLY_ASYMPTOTICALLY_STABLE = "uniformly_asymptotically_stable"
    UNIFORMLY_STABLE = "uniformly_stable"
    UNSTABLE = "unstable"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class StabilityVerdict:
    classification: Stability
    rationale: str
    moduli: tuple

    def as_dict(self) -> dict:
        return {"classification": self.classification.value,
                "rationale": self.rationale,
                "moduli": list(self.moduli)}


def classify_stability(moduli, multiplicities=None,
                       tol: float = DEFAULT_MODULUS_TOL) -> StabilityVerdict:
    """Stability of the linear periodic system from multiplier moduli.

    All moduli < 1 - tol: uniformly asymptotically stable.  Any modulus
    > 1 + tol: unstable.  All within the closed unit disk up to tol, with
    every modulus inside the [1-tol, 1+tol] band simple: uniformly stable.
    Anything else (band modulus with multiplicity > 1, or straddling)
    is reported indeterminate rather than silently resolved.

    This is a pure function: permuting the inputs never changes the verdict.
    """
    moduli = [float(m) for m in moduli]
    if multiplicities is None:
        multiplicities = [1] * len(moduli)
    multiplicities = [int(m) for m in multiplicities]
    if len(multiplicities) != len(moduli):
        raise ValueError("moduli and multiplicities must have equal length")
    if any(m < 0 for m in moduli):
        raise ValueError("moduli must be nonnegative")

    mods = tuple(sorted(moduli, reverse=True))
    if all(m < 1.0 - tol for m in moduli):
        return StabilityVerdict(Stability.UNIFORMLY_ASYMPTOTICALLY_STABLE,
                                f"all moduli < 1 - {tol:g}", mods)
    if any(m > 1.0 + tol for m in moduli):
        return StabilityVerdict(Stability.UNSTABLE,
                                f"a modulus exceeds 1 + {tol:g}", mods)
    band = [mult for m, mult in zip(moduli, multiplicities)
            if 1.0 - tol <= m <= 1.0 + tol]
    if all(mult == 1 for mult in band):
        return StabilityVerdict(Stability.UNIFORMLY_STABLE,
                                "all moduli <= 1 within tolerance and every "
                                "modulus on the unit circle is simple", mods)
    return StabilityVerdict(Stability.INDETERMINATE,
                            "a modulus lies on the unit circle (within "
                            "tolerance) with multiplicity > 1", mods)


def classify_nonlinear_dfe(linear: StabilityVerdict) -> Stability:
    """Lift the linear verdict to the nonlinear system at the equilibrium.

    Valid when the nonlinear remainder vanishes faster than |X| uniformly
    in t (caller-asserted).  Linearization transfers uniform asymptotic
    stability and instability; it is silent otherwise.
    """
    if linear.classification is Stability.UNIFORMLY_ASYMPTOTICALLY_STABLE:
        return Stability.UNIFORMLY_ASYMPTOTICALLY_STABLE
    if linear.classification is Stability.UNSTABLE:
        return Stability.UNSTABLE
    return Stability.INDETERMINATE


def stability_from_monodromy(sys: PlanarPeriodicSystem,
                             tol: float = DEFAULT_MODULUS_TOL) -> StabilityVerdict:
    pair = monodromy_multipliers(sys, tol=tol)
    return classify_stability(pair.moduli, pair.multiplicities(tol), tol)
