"""Periodic solutions of the scalar Riccati equation and the multiplier
formulas built on them.

The planar system u' = p11 u + p12 v, v' = p21 u + p22 v is associated with

    x' = c(t) + b(t) x + a(t) x**2,   a = -p21, b = p11 - p22, c = p12,

whose T-periodic solutions sigma yield multipliers as exponential integrals.
Two independent solvers are provided: Picard iteration of the Green-kernel
integral operator (valid under the kernel contraction condition) and a
Poincare-map shooting search (valid whenever a periodic solution exists at
all).  Every returned solution carries a numerically verified certificate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .conditions import ConditionLedger
from .expressions import BinOp, Neg
from .floquet import MultiplierPair, PlanarPeriodicSystem, _sort_pair
from .ivp import DivergenceError, IvpSpec, integrate
from .periodic import PeriodicFn, TrigInterp, golden_max, integrate_callable

__all__ = [
    "RiccatiProblem", "GreenKernel", "SchauderData",
    "PeriodicSolutionCertificate", "KernelUndefinedError",
    "NonConvergenceError", "OmegaEscapeError", "HypothesisError",
    "riccati_from_planar", "green_kernel", "schauder_constants",
    "check_fixed_point_conditions", "check_ball_conditions",
    "check_explicit_conditions", "picard_solve", "shooting_solve",
    "poincare_displacement", "multipliers_from_solution",
    "explicit_multipliers",
]

ZERO_MEAN_GAP_TOL = 1e-9      # |int b| below this leaves the kernel undefined
ZERO_INTEGRAL_RTOL = 1e-9     # scaled tolerance for "this integral is zero"
BORDERLINE_RTOL = 1e-6


class KernelUndefinedError(ValueError):
    """int_0^T b = 0 (within tolerance): the periodic Green kernel needs
    a nonzero mean."""


class NonConvergenceError(RuntimeError):
    """Picard iteration did not reach the tolerance; carries the last
    sup-norm change between iterates."""

    def __init__(self, message: str, last_change: float):
        self.last_change = last_change
        super().__init__(f"{message} (last sup-change {last_change:.3e})")


class OmegaEscapeError(NonConvergenceError):
    """An iterate left the candidate ball |phi - psi| <= N by more than 10%."""


class HypothesisError(ValueError):
    """A multiplier formula was invoked with failing hypotheses; carries
    the condition ledger."""

    def __init__(self, ledger: ConditionLedger):
        self.ledger = ledger
        failed = ", ".join(c.name for c in ledger.checks if not c.passed)
        super().__init__(f"hypotheses not satisfied: {failed}")


# ---------------------------------------------------------------------------
# Problem type

@dataclass(frozen=True)
class RiccatiProblem:
    """x' = c(t) + b(t) x + a(t) x^2 with a, b, c sharing period T."""

    a: PeriodicFn
    b: PeriodicFn
    c: PeriodicFn

    def __post_init__(self):
        T = self.a.period
        for name in ("b", "c"):
            other = getattr(self, name).period
            if abs(other - T) > 1e-12 * T:
                raise ValueError(f"{name} has period {other}, expected {T}")

    @property
    def period(self) -> float:
        return self.a.period

    def rhs(self):
        a, b, c = self.a.scalar, self.b.scalar, self.c.scalar
        def fn(t, y):
            x = y[0]
            return np.array([c(t) + b(t) * x + a(t) * x * x])
        return fn

    def residual_values(self, sigma: TrigInterp, ts: np.ndarray) -> np.ndarray:
        """sigma' - c - b sigma - a sigma^2 at the given times, using the
        interpolant's own (spectral) derivative."""
        s = sigma(ts)
        ds = sigma.derivative(ts)
        return ds - self.c(ts) - self.b(ts) * s - self.a(ts) * s * s


def riccati_from_planar(sys: PlanarPeriodicSystem) -> RiccatiProblem:
    """Associate the scalar Riccati problem: a = -p21, b = p11 - p22, c = p12."""
    T = sys.period
    count = max(sys.p11.sample_count, sys.p22.sample_count,
                sys.p21.sample_count, sys.p12.sample_count)
    return RiccatiProblem(
        a=PeriodicFn(Neg(sys.p21.expr), T, count),
        b=PeriodicFn(BinOp("-", sys.p11.expr, sys.p22.expr), T, count),
        c=PeriodicFn(sys.p12.expr, T, count),
    )


# ---------------------------------------------------------------------------
# Green kernel for x' - b(t) x on T-periodic functions

class GreenKernel:
    """Two-branch kernel G(t, s) inverting x' - b(t) x on T-periodic data.

    With B(t) = int_0^t b and E = exp(B(T)) (requires E != 1):

        G(t, s) = exp(B(t) - B(s)) / (1 - E)        for 0 <= s <= t <= T,
        G(t, s) = E exp(B(t) - B(s)) / (1 - E)      for 0 <= t <= s <= T,

    and x(t) = int_0^T G(t, s) f(s) ds solves x' = b x + f periodically.
    B is carried spectrally: B(t) = mean(b) t + Btilde(t) with Btilde the
    periodic antiderivative of the oscillating part of b.
    """

    def __init__(self, b: PeriodicFn, grid: int = 4096):
        self.b = b
        self.period = b.period
        self.m = int(grid)
        ts = np.linspace(0.0, self.period, self.m, endpoint=False)
        b_interp = TrigInterp(b(ts), self.period)
        self.mean_b = b_interp.mean()
        self.gap = self.mean_b * self.period          # int_0^T b
        if abs(self.gap) <= ZERO_MEAN_GAP_TOL:
            raise KernelUndefinedError(
                f"int b over one period is {self.gap:.3e}; the periodic "
                "kernel requires a nonzero mean")
        self.E = math.exp(self.gap)
        self._btilde = b_interp.antiderivative_periodic()
        self.grid_ts = ts
        self._exp_neg_btilde = np.exp(-self._btilde.samples)
        self._exp_btilde = np.exp(self._btilde.samples)

    def B(self, t):
        """Cumulative integral of b from 0 (vectorized)."""
        t = np.asarray(t, dtype=float)
        return self.mean_b * t + self._btilde(t)

    def __call__(self, t, s):
        """Kernel values; the branch is chosen by s <= t (broadcasting)."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        core = np.exp(self.B(t) - self.B(s)) / (1.0 - self.E)
        return np.where(s <= t, core, self.E * core)

    def branch_values(self, t):
        """One-sided limits at the diagonal: (lim s->t-, lim s->t+).

        Their difference is 1 for every t, the defining jump of a Green
        function for x' - b x.
        """
        t = np.asarray(t, dtype=float)
        lower = np.full(t.shape, 1.0 / (1.0 - self.E))
        return lower, self.E * lower

    def branch_jump(self, t):
        lower, upper = self.branch_values(t)
        return lower - upper

    def sup_abs(self, scan: int = 8192) -> float:
        """sup over the closed square of |G|, by grid scan plus local polish.

        |G| factorizes through exp(B(t) - B(s)), so each branch's sup
        reduces to the prefix/suffix extrema of B along the diagonal
        constraint; the polish refines the B extrema.
        """
        n = int(scan)
        ts = np.linspace(0.0, self.period, n + 1)
        B = np.empty(n + 1)
        B[:n] = self.mean_b * ts[:n] + self._btilde.resample(n)
        B[n] = self.mean_b * self.period  # Btilde(T) = Btilde(0) = 0
        prefix_min = np.minimum.accumulate(B)
        suffix_min = np.minimum.accumulate(B[::-1])[::-1]

        best = -math.inf
        candidates = []
        i1 = int(np.argmax(B - prefix_min))
        candidates.append((i1, int(np.argmin(B[: i1 + 1])), 0.0))
        i2 = int(np.argmax(B - suffix_min))
        candidates.append((i2, i2 + int(np.argmin(B[i2:])), math.log(abs(self.E))))

        h = self.period / n
        Bf = lambda t: float(self.B(float(np.clip(t, 0.0, self.period))))
        for it, js, log_factor in candidates:
            value = B[it] - B[min(js, n)] + log_factor
            t_pol, bt = golden_max(Bf, ts[it] - h, ts[it] + h)
            s_pol, bs_neg = golden_max(lambda s: -Bf(s), ts[js] - h, ts[js] + h)
            feasible = (s_pol <= t_pol) if log_factor == 0.0 else (t_pol <= s_pol)
            if feasible:
                value = max(value, bt + bs_neg + log_factor)
            best = max(best, value)
        return math.exp(best) / abs(1.0 - self.E)

    def sup_abs_upper(self) -> float:
        from .periodic import SUP_ROUNDING
        return self.sup_abs() * (1.0 + SUP_ROUNDING)

    def solve_periodic(self, f_samples: np.ndarray) -> TrigInterp:
        """The unique T-periodic solution of y' = b(t) y + f(t).

        ``f_samples`` are values of f on ``grid_ts``.  Writing
        h = exp(-Btilde) f and expanding h in harmonics h_k, the periodic
        solution is exp(Btilde(t)) * sum_k h_k e^{i w k t} / (i w k - mean b),
        evaluated here by FFT (spectrally accurate for smooth data).
        """
        f_samples = np.asarray(f_samples, dtype=float)
        if f_samples.shape != (self.m,):
            raise ValueError(f"expected {self.m} samples on grid_ts")
        h = self._exp_neg_btilde * f_samples
        hk = np.fft.rfft(h) / self.m
        kidx = np.arange(hk.size)
        omega = 2.0 * math.pi / self.period
        dk = hk / (1j * omega * kidx - self.mean_b)
        y_wave = np.fft.irfft(dk * self.m, n=self.m)
        return TrigInterp(self._exp_btilde * y_wave, self.period)


def green_kernel(b: PeriodicFn, grid: int = 4096) -> GreenKernel:
    return GreenKernel(b, grid)


@dataclass
class SchauderData:
    """Constants of the kernel fixed-point condition.

    M = sup |G|, N = sup |psi| with psi(t) = int_0^T G(t,s) c(s) ds (the
    periodic solution of psi' = b psi + c).  The upper variants are the
    upward-rounded values used by condition checkers.
    """

    kernel: GreenKernel
    M: float
    N: float
    psi: TrigInterp
    M_upper: float
    N_upper: float

    @property
    def contraction_bound(self) -> float:
        """1/(4 M N) with the conservative (rounded) constants."""
        denom = 4.0 * self.M_upper * self.N_upper
        return math.inf if denom == 0.0 else 1.0 / denom


def schauder_constants(prob: RiccatiProblem, grid: int = 4096) -> SchauderData:
    kernel = GreenKernel(prob.b, grid)
    psi = kernel.solve_periodic(prob.c(kernel.grid_ts))
    from .periodic import SUP_ROUNDING
    M = kernel.sup_abs()
    N = psi.sup_abs()
    return SchauderData(kernel=kernel, M=M, N=N, psi=psi,
                        M_upper=M * (1.0 + SUP_ROUNDING),
                        N_upper=N * (1.0 + SUP_ROUNDING))


# ---------------------------------------------------------------------------
# Certificates

@dataclass
class PeriodicSolutionCertificate:
    """A candidate T-periodic Riccati solution with measured defects.

    ``residual`` is sup |sigma' - c - b sigma - a sigma^2| measured via the
    interpolant's spectral derivative on a doubled grid.  Orthogonality
    defects are reported, never asserted: a found fixed point need not be
    the particular solution whose existence theory guarantees.
    ``membership_defect`` is max(0, |sigma - psi|_inf - N) when the kernel
    exists, else None.
    """

    problem: RiccatiProblem
    sigma: TrigInterp
    x0: float
    residual: float
    residual_tol: float
    periodicity_defect: float
    sup_norm: float
    orthogonality_defect_a: float
    orthogonality_defect_c: float
    psi_distance: float | None
    membership_defect: float | None
    provenance: str

    @property
    def verified(self) -> bool:
        return (self.residual <= self.residual_tol
                and self.periodicity_defect <= self.residual_tol * 10.0)

    def as_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "x0": self.x0,
            "residual": self.residual,
            "residual_tol": self.residual_tol,
            "periodicity_defect": self.periodicity_defect,
            "sup_norm": self.sup_norm,
            "orthogonality_defect_a": self.orthogonality_defect_a,
            "orthogonality_defect_c": self.orthogonality_defect_c,
            "psi_distance": self.psi_distance,
            "membership_defect": self.membership_defect,
            "verified": self.verified,
        }


def _measure_certificate(prob: RiccatiProblem, sigma: TrigInterp, x0: float,
                         periodicity_defect: float, residual_tol: float,
                         provenance: str,
                         schauder: SchauderData | None) -> PeriodicSolutionCertificate:
    T = prob.period
    ts2 = np.linspace(0.0, T, 2 * sigma.m, endpoint=False)
    residual = float(np.max(np.abs(prob.residual_values(sigma, ts2))))
    sup_norm = sigma.sup_abs()
    quad_tol = 1e-12 * T * (1.0 + sup_norm)
    orth_a = abs(integrate_callable(lambda u: prob.a(u) * sigma(u), 0.0, T, quad_tol))
    orth_c = abs(integrate_callable(lambda u: prob.c(u) * sigma(u), 0.0, T, quad_tol))
    psi_distance = None
    membership = None
    if schauder is not None:
        diff = np.abs(sigma(schauder.kernel.grid_ts)
                      - schauder.psi(schauder.kernel.grid_ts))
        psi_distance = float(np.max(diff))
        membership = max(0.0, psi_distance - schauder.N)
    return PeriodicSolutionCertificate(
        problem=prob, sigma=sigma, x0=float(x0), residual=residual,
        residual_tol=residual_tol, periodicity_defect=float(periodicity_defect),
        sup_norm=sup_norm, orthogonality_defect_a=orth_a,
        orthogonality_defect_c=orth_c, psi_distance=psi_distance,
        membership_defect=membership, provenance=provenance)


def _schauder_or_none(prob: RiccatiProblem) -> SchauderData | None:
    try:
        return schauder_constants(prob)
    except KernelUndefinedError:
        return None


# ---------------------------------------------------------------------------
# Condition checkers

def _zero_integral_check(ledger: ConditionLedger, name: str, value: float,
                         period: float, scale: float, note: str = ""):
    bound = ZERO_INTEGRAL_RTOL * period * (1.0 + scale)
    ledger.add(name=name, passed=abs(value) <= bound, value=abs(value),
               bound=bound, comparator="<=", slack=bound - abs(value), note=note)


def check_fixed_point_conditions(sys: PlanarPeriodicSystem) -> ConditionLedger:
    """Hypotheses of the kernel fixed-point multiplier route.

    (i) the diagonal gap p11 - p22 has nonzero mean (the kernel exists);
    (ii) int |p21| <= 1/(4 M N) with upward-rounded M, N, so a numeric
    pass implies the true inequality up to the rounding heuristic.  A
    failure within 1e-6 relative of the bound is flagged borderline.
    """
    ledger = ConditionLedger("fixed-point route")
    prob = riccati_from_planar(sys)
    gap = prob.b.integrate_period()
    ledger.add(name="nonzero_mean_gap", passed=abs(gap) > ZERO_MEAN_GAP_TOL,
               value=abs(gap), bound=ZERO_MEAN_GAP_TOL, comparator=">",
               slack=abs(gap) - ZERO_MEAN_GAP_TOL,
               note="int (p11 - p22) over one period")
    coupling = sys.p21.integrate_abs()
    ledger.context["coupling_integral"] = coupling
    if not ledger.check("nonzero_mean_gap").passed:
        ledger.add(name="coupling_within_bound", passed=False, value=coupling,
                   note="kernel undefined: zero-mean diagonal gap")
        return ledger
    data = schauder_constants(prob)
    bound = data.contraction_bound
    ledger.context.update(M=data.M, N=data.N, M_upper=data.M_upper,
                          N_upper=data.N_upper, contraction_bound=bound)
    passed = coupling <= bound
    borderline = (not passed) and coupling <= bound * (1.0 + BORDERLINE_RTOL)
    ledger.add(name="coupling_within_bound", passed=passed, value=coupling,
               bound=bound, comparator="<=", slack=bound - coupling,
               borderline=borderline, note="int |p21| vs 1/(4MN)")
    return ledger


def check_ball_conditions(prob: RiccatiProblem) -> ConditionLedger:
    """Zero-mean/positive-gap hypotheses giving a solution ball.

    Requires int a = 0 and int c = 0 (both to a scaled 1e-9 tolerance) and
    b bounded below by a positive constant.  Reports the ball radius
    b_lower / (2 A) with A = sup |a| (infinite when a vanishes).
    """
    ledger = ConditionLedger("solution-ball route")
    T = prob.period
    A = prob.a.sup_abs()
    _zero_integral_check(ledger, "zero_mean_a", prob.a.integrate_period(), T, A)
    _zero_integral_check(ledger, "zero_mean_c", prob.c.integrate_period(), T,
                         prob.c.sup_abs())
    b_lower = prob.b.min_on_period()
    ledger.add(name="positive_gap", passed=b_lower > 0.0, value=b_lower,
               bound=0.0, comparator=">", slack=b_lower,
               note="min of b over one period")
    radius = math.inf if A == 0.0 else max(b_lower, 0.0) / (2.0 * A)
    ledger.context.update(A=A, b_lower=b_lower, radius=radius)
    if A == 0.0:
        ledger.context["radius_note"] = "a vanishes: ball unconstrained"
    return ledger


def check_explicit_conditions(sys: PlanarPeriodicSystem) -> ConditionLedger:
    """Hypotheses of the sigma-free explicit multiplier formulas.

    Both off-diagonal coefficients must have zero mean and the diagonal
    gap p11 - p22 must be bounded away from zero with a definite sign.
    A negative-definite gap is accepted too: relabeling the two states
    swaps the formulas but leaves the multiplier set unchanged; the
    ledger records which orientation holds.
    """
    ledger = ConditionLedger("explicit route")
    T = sys.period
    _zero_integral_check(ledger, "zero_mean_p21", sys.p21.integrate_period(),
                         T, sys.p21.sup_abs())
    _zero_integral_check(ledger, "zero_mean_p12", sys.p12.integrate_period(),
                         T, sys.p12.sup_abs())
    gap = PeriodicFn(BinOp("-", sys.p11.expr, sys.p22.expr), T)
    lo, hi = gap.min_on_period(), gap.max_on_period()
    if lo > 0.0:
        orientation, margin = "standard", lo
    elif hi < 0.0:
        orientation, margin = "swapped", -hi
    else:
        orientation, margin = "indefinite", 0.0
    ledger.add(name="sign_definite_gap", passed=margin > 0.0, value=margin,
               bound=0.0, comparator=">",
               slack=margin, note=f"orientation: {orientation}")
    ledger.context.update(gap_min=lo, gap_max=hi, orientation=orientation,
                          off_diagonal_sup=sys.p21.sup_abs())
    return ledger


# ---------------------------------------------------------------------------
# Picard iteration of the kernel operator

def picard_solve(prob: RiccatiProblem, max_iter: int = 200, tol: float = 1e-9,
                 grid: int = 4096) -> PeriodicSolutionCertificate:
    """Fixed point of S(phi)(t) = int_0^T G(t,s) [a phi^2 + c](s) ds.

    Seeded with psi and iterated on a uniform grid; each application of S
    is the periodic solve y' = b y + (a phi^2 + c).  Convergence is
    declared when the algebraic residual bound |a| |phi_new + phi_old|
    |phi_new - phi_old| drops below tol/4 (the certificate then measures
    the true residual independently).  A violated contraction condition
    only warns: the iteration may still converge.
    """
    data = schauder_constants(prob, grid)
    kernel = data.kernel
    ts = kernel.grid_ts
    a_vals = prob.a(ts)
    c_vals = prob.c(ts)
    coupling = prob.a.integrate_abs()
    if coupling > data.contraction_bound:
        warnings.warn(
            f"contraction condition violated: int |a| = {coupling:.4g} > "
            f"1/(4MN) = {data.contraction_bound:.4g}; iterating anyway",
            stacklevel=2)

    phi = data.psi.samples.copy()
    last_change = math.inf
    for _ in range(max_iter):
        nxt = kernel.solve_periodic(a_vals * phi * phi + c_vals)
        phi_new = nxt.samples
        last_change = float(np.max(np.abs(phi_new - phi)))
        residual_bound = float(np.max(np.abs(a_vals) * np.abs(phi_new + phi)
                                      * np.abs(phi_new - phi)))
        escape = float(np.max(np.abs(phi_new - data.psi.samples)))
        if data.N > 0.0 and escape > 1.1 * data.N:
            raise OmegaEscapeError(
                f"iterate left the ball: |phi - psi| reached {escape:.4g} "
                f"> 1.1 N = {1.1 * data.N:.4g}", last_change)
        phi = phi_new
        if residual_bound <= 0.25 * tol:
            sigma = TrigInterp(phi, prob.period)
            cert = _measure_certificate(prob, sigma, float(sigma(0.0)),
                                        periodicity_defect=0.0,
                                        residual_tol=tol,
                                        provenance="picard", schauder=data)
            return cert
    raise NonConvergenceError(
        f"no fixed point after {max_iter} iterations", last_change)


# ---------------------------------------------------------------------------
# Shooting via the Poincare map

def poincare_displacement(prob: RiccatiProblem, x0: float,
                          rel_tol: float = 1e-10,
                          abs_tol: float = 1e-12) -> float:
    """x(T; x0) - x0; escapes map to +-inf by their blow-up direction.

    The signed convention keeps the scalar-flow monotonicity usable by
    bisection: the set escaping to +inf is up-closed in x0, the set
    escaping to -inf down-closed, so a sign change still brackets either
    a fixed point or a boundary orbit.
    """
    spec = IvpSpec(dimension=1, rhs=prob.rhs(), t0=0.0, t1=prob.period,
                   y0=np.array([float(x0)]), rel_tol=rel_tol, abs_tol=abs_tol)
    try:
        traj = integrate(spec)
    except DivergenceError as exc:
        direction = 1.0 if (exc.state is None or exc.state[0] >= 0.0) else -1.0
        return direction * math.inf
    return float(traj.final[0]) - float(x0)


def shooting_solve(prob: RiccatiProblem, interval: tuple | None = None,
                   grid: int = 64, residual_tol: float = 1e-9,
                   certificate_samples: int = 512) -> list[PeriodicSolutionCertificate]:
    """All periodic solutions found by a Poincare fixed-point search.

    The displacement map g(x0) = x(T; x0) - x0 is scanned on a uniform
    grid over ``interval`` (default: the solution ball [-r, r] when the
    ball conditions provide a finite radius, else [-10, 10]).  Escaped
    orbits are data, not failures: they carry the sign of their blow-up
    direction, so a periodic orbit that is isolated inside an escape
    basin (both neighbours blow up, in opposite directions) is still
    bracketed.  Brackets are bisected, then polished by secant steps at
    tightened integration tolerances.  Roots are deduplicated at spacing
    1e-6, sorted ascending, and certified.  An empty list is a legal
    outcome: no periodic solution in the window.
    """
    if interval is None:
        ball = check_ball_conditions(prob)
        r = ball.context.get("radius", math.inf)
        interval = (-r, r) if (ball.passed and math.isfinite(r)) else (-10.0, 10.0)
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError("need lo < hi")

    xs = np.linspace(lo, hi, int(grid))
    gs = [poincare_displacement(prob, x) for x in xs]

    roots: list[float] = []
    for x, g in zip(xs, gs):
        if g == 0.0:
            roots.append(float(x))
    for i in range(len(xs) - 1):
        g0, g1 = gs[i], gs[i + 1]
        if g0 == 0.0 or g1 == 0.0:
            continue
        if (g0 < 0.0) == (g1 < 0.0):
            continue
        root = _refine_root(prob, float(xs[i]), float(xs[i + 1]), g0, g1)
        if root is not None:
            roots.append(root)

    roots.sort()
    deduped: list[float] = []
    for r in roots:
        if not deduped or r - deduped[-1] > 1e-6:
            deduped.append(r)

    schauder = _schauder_or_none(prob)
    return [_certify_shooting_root(prob, r, residual_tol,
                                   certificate_samples, schauder)
            for r in deduped]


def _refine_root(prob: RiccatiProblem, lo: float, hi: float,
                 g_lo: float, g_hi: float) -> float | None:
    """Bisection on the signed displacement (escapes carry their sign).

    Returns None when the bracket collapses onto escaping orbits on both
    sides (a sliver between opposite escape basins, nothing certifiable).
    The returned position is accurate to about the integration tolerance;
    certification polishes further in the contracting time direction.
    """
    neg = g_lo < 0.0
    mid = 0.5 * (lo + hi)
    g_mid = math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-13 * (1.0 + abs(mid)):
            break
        g_mid = poincare_displacement(prob, mid)
        if g_mid == 0.0:
            return mid
        if (g_mid < 0.0) == neg:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    if not (math.isfinite(g_lo) or math.isfinite(g_hi) or math.isfinite(g_mid)):
        return None
    return mid


WRAP_TARGET = 1e-10


def _orbit_samples(prob: RiccatiProblem, x0: float, m: int,
                   backward: bool) -> tuple[np.ndarray, float] | None:
    """Uniform samples of the orbit through x0 plus its wrap x(T) - x(0).

    Backward integration certifies forward-expanding orbits: it runs the
    contracting direction, so sample errors shrink instead of amplifying.
    Returns None when the orbit escapes (x0 was not accurate enough).
    """
    T = prob.period
    nodes = np.linspace(0.0, T, m, endpoint=False)
    f = prob.rhs()
    if backward:
        rhs = lambda tau, z: -f(T - tau, z)
    else:
        rhs = f
    spec = IvpSpec(dimension=1, rhs=rhs, t0=0.0, t1=T, y0=np.array([x0]),
                   rel_tol=1e-12, abs_tol=1e-14)
    try:
        traj = integrate(spec, checkpoints=nodes[1:])
    except DivergenceError:
        return None
    node_idx = np.searchsorted(traj.ts, nodes)
    path = traj.ys[node_idx, 0]
    if backward:
        # z(tau) = x(T - tau): sample j>0 of x is z at tau = T(m-j)/m
        vals = np.empty(m)
        vals[0] = float(traj.final[0])
        vals[1:] = path[1:][::-1]
        wrap = x0 - float(traj.final[0])
    else:
        vals = path
        wrap = float(traj.final[0]) - x0
    return vals, wrap


def _polish_backward(prob: RiccatiProblem, x0: float) -> float | None:
    """Secant refinement of the backward displacement (slope ~ 1/mu - 1,
    well conditioned for forward-expanding orbits)."""
    T = prob.period
    f = prob.rhs()
    rhs = lambda tau, z: -f(T - tau, z)

    def disp(x):
        spec = IvpSpec(dimension=1, rhs=rhs, t0=0.0, t1=T, y0=np.array([x]),
                       rel_tol=1e-12, abs_tol=1e-14)
        try:
            return float(integrate(spec).final[0]) - x
        except DivergenceError:
            return None

    delta = 1e-7 * (1.0 + abs(x0))
    x_prev, x_cur = x0, x0 + delta
    g_prev, g_cur = disp(x_prev), disp(x_cur)
    if g_cur is None:
        x_cur = x0 - delta
        g_cur = disp(x_cur)
    if g_prev is None or g_cur is None:
        return None
    best_x, best_g = (x_prev, abs(g_prev)) if abs(g_prev) < abs(g_cur) \
        else (x_cur, abs(g_cur))
    for _ in range(20):
        if best_g <= 1e-13 * (1.0 + abs(best_x)):
            break
        denom = g_cur - g_prev
        if denom == 0.0:
            break
        x_next = x_cur - g_cur * (x_cur - x_prev) / denom
        if not math.isfinite(x_next) or abs(x_next - x0) > 1e6 * delta:
            break
        g_next = disp(x_next)
        if g_next is None:
            break
        x_prev, g_prev, x_cur, g_cur = x_cur, g_cur, x_next, g_next
        if abs(g_cur) < best_g:
            best_x, best_g = x_cur, abs(g_cur)
    return best_x


def _certify_shooting_root(prob: RiccatiProblem, x0: float, residual_tol: float,
                           samples: int,
                           schauder: SchauderData | None) -> PeriodicSolutionCertificate:
    """Certificate for a located fixed point, in whichever time direction
    measures the orbit accurately."""
    T = prob.period

    def build(vals, wrap, x_start):
        # periodize: remove the linear ramp carrying the wrap jump before
        # fitting the trigonometric interpolant
        nodes = np.linspace(0.0, T, len(vals), endpoint=False)
        fixed = vals - wrap * (nodes / T)
        sigma = TrigInterp(fixed, T)
        return _measure_certificate(prob, sigma, x_start,
                                    periodicity_defect=abs(wrap),
                                    residual_tol=residual_tol,
                                    provenance="shooting", schauder=schauder)

    cert = None
    forward = _orbit_samples(prob, x0, samples, backward=False)
    if forward is not None:
        cert = build(*forward, x0)
        if cert.periodicity_defect <= WRAP_TARGET and cert.residual <= residual_tol:
            return cert
    x0b = _polish_backward(prob, x0)
    if x0b is not None:
        backward = _orbit_samples(prob, x0b, samples, backward=True)
        if backward is not None:
            cert_b = build(*backward, x0b)
            if cert is None or cert_b.periodicity_defect < cert.periodicity_defect:
                return cert_b
    if cert is None:
        raise NonConvergenceError(
            f"orbit through x0={x0!r} could not be certified in either "
            "time direction", math.inf)
    return cert


# ---------------------------------------------------------------------------
# Multiplier formulas

def multipliers_from_solution(sys: PlanarPeriodicSystem,
                              cert: PeriodicSolutionCertificate) -> MultiplierPair:
    """lam1 = exp int (p22 + p21 sigma), lam2 = exp int (p11 - p21 sigma).

    ``cert`` must be a verified certificate for the Riccati problem
    associated with ``sys``; the integrals reuse the certified interpolant.
    """
    expected = riccati_from_planar(sys)
    got = cert.problem
    if (got.a.expr, got.b.expr, got.c.expr) != (expected.a.expr, expected.b.expr,
                                                expected.c.expr):
        raise ValueError("certificate was computed for a different system")
    if not cert.verified:
        raise ValueError(
            f"certificate not verified: residual {cert.residual:.3e} vs "
            f"tolerance {cert.residual_tol:.3e}")
    T = sys.period
    sigma = cert.sigma
    tol = 1e-13 * T * (1.0 + cert.sup_norm)
    i1 = integrate_callable(lambda u: sys.p22(u) + sys.p21(u) * sigma(u),
                            0.0, T, tol)
    i2 = integrate_callable(lambda u: sys.p11(u) - sys.p21(u) * sigma(u),
                            0.0, T, tol)
    lam1, lam2 = _sort_pair(complex(math.exp(i1)), complex(math.exp(i2)))
    pair = MultiplierPair(lam1, lam2, "semianalytic", sigma=cert)
    expected_product = math.exp(sys.trace_integral())
    pair.liouville_defect = abs(pair.lam1 * pair.lam2 - expected_product) \
        / abs(expected_product)
    return pair


def explicit_multipliers(sys: PlanarPeriodicSystem) -> MultiplierPair:
    """lam1 = exp int p11, lam2 = exp int p22, valid under the explicit-route
    ledger (zero-mean off-diagonals, sign-definite diagonal gap).

    Raises :class:`HypothesisError` carrying the ledger when a hypothesis
    fails.
    """
    ledger = check_explicit_conditions(sys)
    if not ledger.passed:
        raise HypothesisError(ledger)
    lam1, lam2 = _sort_pair(complex(math.exp(sys.p11.integrate_period())),
                            complex(math.exp(sys.p22.integrate_period())))
    pair = MultiplierPair(lam1, lam2, "explicit")
    expected_product = math.exp(sys.trace_integral())
    pair.liouville_defect = abs(pair.lam1 * pair.lam2 - expected_product) \
        / abs(expected_product)
    return pair
