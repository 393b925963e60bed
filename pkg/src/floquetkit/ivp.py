"""Deterministic initial-value-problem integration.

An explicit Dormand-Prince 5(4) pair with PI step control and the classic
quartic dense-output interpolant.  This is the independent numerical oracle
behind the analytic multiplier formulas: everything here is a pure function
of its inputs, so identical specs give bit-identical trajectories on one
platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "IvpSpec", "Trajectory", "DivergenceError", "StepLimitError",
    "integrate", "fundamental_matrix",
]

BLOWUP_NORM = 1e12


class DivergenceError(RuntimeError):
    """State norm exceeded the blow-up threshold; carries the escape time
    and the last state (whose signs give the escape direction)."""

    def __init__(self, escape_time: float, norm: float, state=None):
        self.escape_time = escape_time
        self.norm = norm
        self.state = state
        super().__init__(f"solution escaped (norm {norm:.3e} > {BLOWUP_NORM:.0e}) "
                         f"near t={escape_time!r}")


class StepLimitError(RuntimeError):
    """Step budget exhausted before reaching t1."""


@dataclass
class IvpSpec:
    """Problem description for :func:`integrate`.

    ``rhs(t, y) -> dy/dt`` must accept a float and an ndarray of length
    ``dimension`` and return an array of the same length.
    """

    dimension: int
    rhs: Callable[[float, np.ndarray], np.ndarray]
    t0: float
    t1: float
    y0: np.ndarray
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 10_000_000
    dense: bool = False

    def __post_init__(self):
        self.y0 = np.asarray(self.y0, dtype=float)
        if self.dimension < 1 or self.y0.shape != (self.dimension,):
            raise ValueError("initial state must be a vector of length `dimension`")
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if not self.t0 < self.t1:
            raise ValueError("need t0 < t1")


# Dormand-Prince 5(4) tableau
_C = (1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = tuple(np.asarray(row) for row in (
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
))
# embedded error coefficients: y5 - y4 = h * sum(E_i k_i)
_E = np.asarray((71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
                 22 / 525, -1 / 40))
# dense-output weights for the quartic continuous extension
_D = np.asarray((-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
                 -10690763975 / 1880347072, 701980252875 / 199316789632,
                 -1453857185 / 822651844, 69997945 / 29380423))

_SAFETY = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - _BETA * 0.75
_FAC_MIN = 0.2   # max step shrink per step
_FAC_MAX = 10.0  # max step growth per step


@dataclass
class Trajectory:
    """Accepted step points plus (optionally) dense-output coefficients."""

    ts: np.ndarray
    ys: np.ndarray
    dense: bool = False
    _cont: np.ndarray | None = field(default=None, repr=False)

    @property
    def t0(self) -> float:
        return float(self.ts[0])

    @property
    def t1(self) -> float:
        return float(self.ts[-1])

    @property
    def final(self) -> np.ndarray:
        return self.ys[-1]

    def at(self, t):
        """Dense-output evaluation at times inside [t0, t1] (vectorized)."""
        if not self.dense or self._cont is None:
            raise ValueError("trajectory was integrated without dense output")
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t_arr < self.ts[0] - 1e-12) or np.any(t_arr > self.ts[-1] + 1e-12):
            raise ValueError("dense evaluation outside the integrated span")
        idx = np.clip(np.searchsorted(self.ts, t_arr, side="right") - 1, 0,
                      len(self.ts) - 2)
        h = self.ts[idx + 1] - self.ts[idx]
        theta = np.clip((t_arr - self.ts[idx]) / h, 0.0, 1.0)[:, None]
        r1, r2, r3, r4, r5 = (self._cont[idx, i, :] for i in range(5))
        out = r1 + theta * (r2 + (1.0 - theta) * (r3 + theta * (r4 + (1.0 - theta) * r5)))
        return out[0] if np.isscalar(t) else out


def _hinit(rhs, t0, y0, f0, t1, rel_tol, abs_tol):
    """Hairer's starting-step heuristic for explicit RK of order 5."""
    sc = abs_tol + rel_tol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / sc) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / sc) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t1 - t0)
    y1 = y0 + h0 * f0
    f1 = np.asarray(rhs(t0 + h0, y1), dtype=float)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / sc) ** 2))) / h0
    dm = max(d1, d2)
    h1 = (0.01 / dm) ** 0.2 if dm > 1e-15 else max(1e-6, h0 * 1e-3)
    return min(100.0 * h0, h1, t1 - t0)


def integrate(spec: IvpSpec, checkpoints: Sequence[float] | None = None) -> Trajectory:
    """Integrate the IVP; local error per step is bounded by the tolerances.

    ``checkpoints`` forces step endpoints at the given interior times, so
    their states carry node accuracy rather than dense-output accuracy.
    Raises :class:`DivergenceError` when the state norm passes 1e12 (the
    escape time is reported because the shooting solver consumes it) and
    :class:`StepLimitError` when ``max_steps`` is exhausted.
    """
    rhs = spec.rhs
    t, t_end = spec.t0, spec.t1
    y = spec.y0.copy()
    n = spec.dimension

    marks: list[float] = []
    if checkpoints is not None:
        marks = sorted({float(c) for c in checkpoints if spec.t0 < c < spec.t1})
    mark_idx = 0

    f = np.asarray(rhs(t, y), dtype=float)
    h = _hinit(rhs, t, y, f, t_end, spec.rel_tol, spec.abs_tol)
    facold = 1e-4
    rejected = False
    bad_rejections = 0

    ts = [t]
    ys = [y.copy()]
    cont: list[np.ndarray] = []
    k = np.empty((7, n))

    steps = 0
    while t < t_end:
        if steps >= spec.max_steps:
            raise StepLimitError(f"no convergence within {spec.max_steps} steps "
                                 f"(t={t!r}, h={h!r})")
        steps += 1
        # land exactly on the next checkpoint / endpoint
        limit = marks[mark_idx] if mark_idx < len(marks) else t_end
        clipped = t + h >= limit
        if clipped:
            h = limit - t

        k[0] = f
        for i in range(6):
            yi = y + h * (k[: i + 1].T @ _A[i])
            k[i + 1] = rhs(t + _C[i] * h, yi)
        y_new = yi  # stage 7 carries the order-5 weights (FSAL structure)
        f_new = k[6]

        err_vec = h * (k.T @ _E)
        sc = spec.abs_tol + spec.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(invalid="ignore", over="ignore"):
            err = math.sqrt(float(np.mean((err_vec / sc) ** 2)))

        if not math.isfinite(err):
            bad_rejections += 1
            if bad_rejections > 100:
                raise DivergenceError(t, math.inf, y.copy())
            h *= _FAC_MIN
            rejected = True
            continue
        bad_rejections = 0

        if err <= 1.0:
            # accept
            if spec.dense:
                ydiff = y_new - y
                bspl = h * k[0] - ydiff
                r5 = h * (k.T @ _D)
                cont.append(np.stack([y, ydiff, bspl, ydiff - h * f_new - bspl, r5]))
            t = limit if clipped else t + h
            y = y_new
            f = f_new
            ts.append(t)
            ys.append(y.copy())
            norm = float(np.max(np.abs(y)))
            if not math.isfinite(norm) or norm > BLOWUP_NORM:
                raise DivergenceError(t, norm, y.copy())
            while mark_idx < len(marks) and t >= marks[mark_idx]:
                mark_idx += 1
            # PI controller (uses the previous accepted error through facold)
            if err == 0.0:
                factor = _FAC_MAX
            else:
                fac = (err ** _EXPO1) / (facold ** _BETA)
                factor = min(_FAC_MAX, max(_FAC_MIN, _SAFETY / fac))
            if rejected:
                factor = min(1.0, factor)  # no growth directly after a rejection
            facold = max(err, 1e-4)
            rejected = False
            h = h * factor
        else:
            h = h * max(_FAC_MIN, _SAFETY / (err ** _EXPO1))
            rejected = True

    traj = Trajectory(np.asarray(ts), np.asarray(ys), dense=spec.dense,
                      _cont=np.asarray(cont) if spec.dense else None)
    return traj


def fundamental_matrix(entries, period: float, rel_tol: float = 1e-10,
                       abs_tol: float = 1e-12) -> np.ndarray:
    """Monodromy matrix of x' = P(t) x: integrate P' = P(t) Phi, Phi(0) = I.

    ``entries`` is an n-by-n nested sequence whose elements are PeriodicFn
    (or any object with a fast ``.scalar(t)`` method, or a plain callable).
    All columns are advanced in one pass so they share a step sequence,
    which keeps determinant checks deterministic.
    """
    rows = [list(r) for r in entries]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("entries must form a square matrix")

    fns = [[_entry_callable(rows[i][j]) for j in range(n)] for i in range(n)]

    def rhs(t, yflat):
        p = np.empty((n, n))
        for i in range(n):
            fi = fns[i]
            for j in range(n):
                p[i, j] = fi[j](t)
        return (p @ yflat.reshape(n, n)).ravel()

    spec = IvpSpec(dimension=n * n, rhs=rhs, t0=0.0, t1=float(period),
                   y0=np.eye(n).ravel(), rel_tol=rel_tol, abs_tol=abs_tol)
    traj = integrate(spec)
    return traj.final.reshape(n, n).copy()


def _entry_callable(entry):
    scalar = getattr(entry, "scalar", None)
    if callable(scalar):
        return scalar
    if callable(entry):
        return entry
    value = float(entry)
    return lambda t: value
