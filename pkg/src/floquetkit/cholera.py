"""Seasonal cholera model with phage dynamics: DFE stability pipeline.

State (S, I, B, P): susceptible and infectious humans, vibrio and phage
concentrations.  Contact rate d(t), shedding rate e(t) and vibrio death
rate m(t) are positive T-periodic functions; the remaining parameters are
constants.  The disease-free equilibrium is (H, 0, 0, 0); its stability is
decided by four multipliers: exp(-nT), exp(-nu T) and the pair of the
2x2 infection subsystem, computed here both by monodromy and (when the
seasonal conditions hold) through a certified periodic Riccati solution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .conditions import ConditionCheck, ConditionLedger
from .expressions import BinOp, Neg, Num
from .floquet import (MultiplierPair, PlanarPeriodicSystem, Stability,
                      StabilityVerdict, classify_nonlinear_dfe,
                      classify_stability, monodromy_multipliers)
from .ivp import IvpSpec, Trajectory, fundamental_matrix, integrate
from .periodic import PeriodicFn
from .riccati import (KernelUndefinedError, NonConvergenceError,
                      PeriodicSolutionCertificate, multipliers_from_solution,
                      picard_solve, riccati_from_planar, schauder_constants,
                      shooting_solve)

__all__ = [
    "CholeraParams", "NegativeStateError", "DfeStabilityReport",
    "SimulationResult", "rhs_full", "rhs_callable", "linearization_matrix",
    "subsystem", "check_seasonal_conditions", "dfe_stability", "simulate",
    "full_monodromy",
]

SOFT_NEGATIVE = -1e-9
HARD_NEGATIVE = -1e-6


class NegativeStateError(ValueError):
    """A state component dropped below the hard negativity threshold."""


@dataclass(frozen=True)
class CholeraParams:
    """Model parameters; r = n + gamma is the removal rate of infecteds.

    All constants are strictly positive except the birth/death rate n,
    which may be zero (no demography; the susceptible direction then
    carries the multiplier exp(0) = 1).
    """

    H: float
    n: float
    gamma: float
    K: float
    K_tilde: float
    delta: float
    kappa: float
    xi: float
    nu: float
    d: PeriodicFn
    e: PeriodicFn
    m: PeriodicFn

    def __post_init__(self):
        positives = {"H": self.H, "gamma": self.gamma, "K": self.K,
                     "K_tilde": self.K_tilde, "delta": self.delta,
                     "kappa": self.kappa, "xi": self.xi, "nu": self.nu}
        for name, value in positives.items():
            if not value > 0.0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.n < 0.0:
            raise ValueError(f"n must be nonnegative, got {self.n}")
        T = self.d.period
        for name in ("e", "m"):
            if abs(getattr(self, name).period - T) > 1e-12 * T:
                raise ValueError("d, e, m must share one period")
        for name in ("d", "e", "m"):
            if getattr(self, name).min_on_period() <= 0.0:
                raise ValueError(f"seasonal rate {name}(t) must stay positive")

    @property
    def r(self) -> float:
        return self.n + self.gamma

    @property
    def period(self) -> float:
        return self.d.period

    @classmethod
    def from_config(cls, cfg: dict, period: float) -> "CholeraParams":
        kwargs = {k: float(cfg[k]) for k in
                  ("H", "n", "gamma", "K", "K_tilde", "delta", "kappa",
                   "xi", "nu")}
        for name in ("d", "e", "m"):
            kwargs[name] = PeriodicFn(cfg[name], period)
        return cls(**kwargs)

    def dfe(self) -> np.ndarray:
        return np.array([self.H, 0.0, 0.0, 0.0])


def rhs_full(params: CholeraParams, state, t: float) -> np.ndarray:
    """Time derivative of (S, I, B, P).

    States slightly below zero (above -1e-9) are tolerated silently,
    below that a warning is issued, and below -1e-6 the call fails: the
    invariant-region claim is monitored, never patched by clamping.
    """
    S, I, B, P = (float(x) for x in state)
    low = min(S, I, B, P)
    if low < HARD_NEGATIVE:
        raise NegativeStateError(f"state component {low!r} below {HARD_NEGATIVE}")
    if low < SOFT_NEGATIVE:
        warnings.warn(f"state component {low!r} slightly negative at t={t!r}",
                      stacklevel=2)
    d = params.d.scalar(t)
    e = params.e.scalar(t)
    m = params.m.scalar(t)
    contact = d * B / (params.K + B) * S
    predation = B / (params.K_tilde + B) * P
    return np.array([
        params.n * (params.H - S) - contact,
        contact - params.r * I,
        e * I - m * B - params.delta * predation,
        params.xi * I + params.kappa * predation - params.nu * P,
    ])


def rhs_callable(params: CholeraParams):
    return lambda t, y: rhs_full(params, y, t)


def _const(value: float, period: float) -> PeriodicFn:
    if value < 0.0:
        return PeriodicFn(Neg(Num(-value)), period)
    return PeriodicFn(Num(value), period)


def _scaled(fn: PeriodicFn, factor: float) -> PeriodicFn:
    return PeriodicFn(BinOp("*", Num(factor), fn.expr), fn.period,
                      fn.sample_count)


def _negated(fn: PeriodicFn) -> PeriodicFn:
    return PeriodicFn(Neg(fn.expr), fn.period, fn.sample_count)


def linearization_matrix(params: CholeraParams):
    """4x4 periodic coefficient matrix of the linearization at the DFE.

    Rows act on (H - S, I, B, P); only the contact column couples the
    infection block to the two decoupled rate directions, so exp(-nT)
    and exp(-nu T) are always among the monodromy eigenvalues.
    """
    T = params.period
    zero = _const(0.0, T)
    contact = _scaled(params.d, params.H / params.K)
    return [
        [_const(-params.n, T), zero, contact, zero],
        [zero, _const(-params.r, T), contact, zero],
        [zero, params.e, _negated(params.m), zero],
        [zero, _const(params.xi, T), zero, _const(-params.nu, T)],
    ]


def subsystem(params: CholeraParams) -> PlanarPeriodicSystem:
    """The 2x2 infection block: rows (-r, d H/K), (e, -m)."""
    T = params.period
    return PlanarPeriodicSystem(
        p11=_const(-params.r, T),
        p12=_scaled(params.d, params.H / params.K),
        p21=params.e,
        p22=_negated(params.m),
    )


def check_seasonal_conditions(params: CholeraParams) -> ConditionLedger:
    """The seasonal smallness conditions guaranteeing DFE stability.

    With A = max d, E = max e, m1 = min m and M, N the kernel constants of
    the subsystem's Riccati problem (b = -r + m(t), c = d(t) H/K):

      * contact_bound:    2 E M A T H/K < min(m1, r)
      * shedding_bound:   int_0^T e     <= 1/(4 M N)
      * removal_vs_mean_m: r != (1/T) int m  (else the kernel is undefined)

    Inequalities are evaluated with the upward-rounded extrema so a
    numeric pass is conservative.
    """
    ledger = ConditionLedger("seasonal DFE conditions")
    T = params.period
    A = params.d.max_on_period()
    E = params.e.max_on_period()
    m1 = params.m.min_on_period()
    mean_m = params.m.mean()
    r = params.r
    ledger.context.update(A=A, E=E, m1=m1, r=r, mean_m=mean_m, period=T)

    rel_gap = abs(r - mean_m) / max(abs(r), abs(mean_m), 1.0)
    mean_ok = rel_gap > 1e-9
    ledger.add(name="removal_vs_mean_m", passed=mean_ok, value=rel_gap,
               bound=1e-9, comparator=">", slack=rel_gap - 1e-9,
               note="relative gap between r and the mean of m")

    prob = riccati_from_planar(subsystem(params))
    if not mean_ok:
        ledger.add(name="contact_bound", passed=False, value=math.nan,
                   note="kernel undefined: r equals the mean of m")
        ledger.add(name="shedding_bound", passed=False, value=math.nan,
                   note="kernel undefined: r equals the mean of m")
        return ledger

    data = schauder_constants(prob)
    ledger.context.update(M=data.M, N=data.N, M_upper=data.M_upper,
                          N_upper=data.N_upper,
                          kernel_regime="mean_gap_positive" if data.kernel.gap > 0
                          else "mean_gap_negative")

    sigma_bound = 2.0 * data.M_upper * params.d.max_upper() * T * params.H / params.K
    contact_value = params.e.max_upper() * sigma_bound
    contact_limit = min(params.m.min_lower(), r)
    ledger.context["sigma_sup_bound"] = sigma_bound
    ledger.add(name="contact_bound", passed=contact_value < contact_limit,
               value=contact_value, bound=contact_limit, comparator="<",
               slack=contact_limit - contact_value,
               note="2 E M A T H/K vs min(m1, r)")

    shedding = params.e.integrate_period()
    bound = data.contraction_bound
    ledger.add(name="shedding_bound", passed=shedding <= bound,
               value=shedding, bound=bound, comparator="<=",
               slack=bound - shedding, note="int e vs 1/(4MN)")
    return ledger


@dataclass
class DfeStabilityReport:
    """Everything the DFE pipeline produced, ledger through verdicts."""

    ledger: ConditionLedger
    subsystem_multipliers: dict
    free_multipliers: tuple
    certificate: PeriodicSolutionCertificate | None
    certificate_note: str
    sigma_bound_check: ConditionCheck | None
    sign_checks: list
    moduli: tuple
    linear_verdict: StabilityVerdict
    nonlinear_verdict: Stability

    def as_dict(self) -> dict:
        return {
            "ledger": self.ledger.as_dict(),
            "subsystem_multipliers": {k: v.as_dict()
                                      for k, v in self.subsystem_multipliers.items()},
            "free_multipliers": list(self.free_multipliers),
            "certificate": None if self.certificate is None
            else self.certificate.as_dict(),
            "certificate_note": self.certificate_note,
            "sigma_bound_check": None if self.sigma_bound_check is None
            else self.sigma_bound_check.as_dict(),
            "sign_checks": [c.as_dict() for c in self.sign_checks],
            "moduli": list(self.moduli),
            "linear_verdict": self.linear_verdict.as_dict(),
            "nonlinear_verdict": self.nonlinear_verdict.value,
        }


def dfe_stability(params: CholeraParams, tol: float = 1e-7) -> DfeStabilityReport:
    """Full stability pipeline for the disease-free equilibrium.

    Monodromy multipliers of the infection subsystem are always computed;
    when the seasonal ledger passes, a periodic Riccati solution is
    certified (Picard first, shooting as fallback) and the semianalytic
    multiplier formulas plus the pointwise sign conditions are evaluated.
    The final verdicts follow the multiplier moduli and, for the
    nonlinear model, the linearization transfer (the quadratic remainder
    of the model vanishes faster than the state uniformly in t).
    """
    ledger = check_seasonal_conditions(params)
    sub = subsystem(params)
    T = params.period
    pairs = {"monodromy": monodromy_multipliers(sub, tol=tol)}

    cert = None
    cert_note = ""
    sigma_bound_check = None
    sign_checks: list[ConditionCheck] = []
    if ledger.passed:
        prob = riccati_from_planar(sub)
        try:
            cert = picard_solve(prob)
        except (NonConvergenceError, KernelUndefinedError) as exc:
            cert_note = f"picard failed ({exc}); trying shooting"
            found = shooting_solve(prob)
            cert = found[0] if found else None
        if cert is None:
            cert_note = cert_note or "no periodic solution found"
        else:
            bound = ledger.context.get("sigma_sup_bound", math.inf)
            sigma_bound_check = ConditionCheck(
                name="sigma_sup_within_bound", passed=cert.sup_norm <= bound,
                value=cert.sup_norm, bound=bound, comparator="<=",
                slack=bound - cert.sup_norm, note="|sigma| vs 2 M A T H/K")
            sign_checks = _sigma_sign_checks(params, cert)
            pairs["semianalytic"] = multipliers_from_solution(sub, cert)
    else:
        cert_note = "seasonal ledger failed: monodromy-only verdict path"

    free = (math.exp(-params.n * T), math.exp(-params.nu * T))
    mono = pairs["monodromy"]
    moduli = list(mono.moduli) + list(free)
    mults = list(mono.multiplicities(tol)) + [1, 1]
    # coincidences across decoupled directions are conservatively defective
    for i in (2, 3):
        for j in range(len(moduli)):
            if j != i and abs(moduli[j] - moduli[i]) <= tol * max(1.0, moduli[i]):
                mults[i] = max(mults[i], 2)
    verdict = classify_stability(moduli, mults, tol)
    nonlinear = classify_nonlinear_dfe(verdict)
    return DfeStabilityReport(
        ledger=ledger, subsystem_multipliers=pairs, free_multipliers=free,
        certificate=cert, certificate_note=cert_note,
        sigma_bound_check=sigma_bound_check, sign_checks=sign_checks,
        moduli=tuple(sorted(moduli, reverse=True)), linear_verdict=verdict,
        nonlinear_verdict=nonlinear)


def _sigma_sign_checks(params: CholeraParams,
                       cert: PeriodicSolutionCertificate) -> list[ConditionCheck]:
    """Pointwise sign conditions -r - e sigma < 0 and -m + e sigma < 0."""
    ts = np.linspace(0.0, params.period, 2048, endpoint=False)
    sig = cert.sigma(ts)
    e_vals = params.e(ts)
    m_vals = params.m(ts)
    first = -params.r - e_vals * sig
    second = -m_vals + e_vals * sig
    return [
        ConditionCheck(name="growth_rate_first_negative",
                       passed=bool(np.all(first < 0.0)),
                       value=float(np.max(first)), bound=0.0, comparator="<",
                       slack=float(-np.max(first)),
                       note="max over grid of -r - e(t) sigma(t)"),
        ConditionCheck(name="growth_rate_second_negative",
                       passed=bool(np.all(second < 0.0)),
                       value=float(np.max(second)), bound=0.0, comparator="<",
                       slack=float(-np.max(second)),
                       note="max over grid of -m(t) + e(t) sigma(t)"),
    ]


def full_monodromy(params: CholeraParams, rel_tol: float = 1e-10,
                   abs_tol: float = 1e-12) -> np.ndarray:
    """Monodromy matrix of the full 4-D linearization (oracle for the
    block-structure spectral claims)."""
    return fundamental_matrix(linearization_matrix(params), params.period,
                              rel_tol, abs_tol)


@dataclass
class SimulationResult:
    trajectory: Trajectory
    invariant_violations: list

    @property
    def final(self) -> np.ndarray:
        return self.trajectory.final


def simulate(params: CholeraParams, initial_state, horizon: float,
             rel_tol: float = 1e-10, abs_tol: float = 1e-12) -> SimulationResult:
    """Integrate the nonlinear model and monitor the invariant region.

    Requires a nonnegative initial state with S(0) <= H.  Every accepted
    step is checked against S, I, B, P >= -1e-8 and S + I <= H + 1e-8;
    violations are recorded (with times), not clamped away.
    """
    y0 = np.asarray(initial_state, dtype=float)
    if y0.shape != (4,):
        raise ValueError("initial state must be (S, I, B, P)")
    if np.any(y0 < 0.0):
        raise ValueError("initial state must be nonnegative")
    if y0[0] > params.H:
        raise ValueError("S(0) must not exceed H")
    spec = IvpSpec(dimension=4, rhs=rhs_callable(params), t0=0.0,
                   t1=float(horizon), y0=y0, rel_tol=rel_tol, abs_tol=abs_tol)
    traj = integrate(spec)
    violations = []
    low = traj.ys.min(axis=1)
    si = traj.ys[:, 0] + traj.ys[:, 1]
    for idx in np.nonzero(low < -1e-8)[0]:
        violations.append((float(traj.ts[idx]),
                           f"component {low[idx]!r} below -1e-8"))
    for idx in np.nonzero(si > params.H + 1e-8)[0]:
        violations.append((float(traj.ts[idx]),
                           f"S + I = {si[idx]!r} above H + 1e-8"))
    return SimulationResult(trajectory=traj, invariant_violations=violations)
