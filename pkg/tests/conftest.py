import math
from pathlib import Path

import numpy as np
import pytest

from floquetkit.floquet import PlanarPeriodicSystem
from floquetkit.periodic import PeriodicFn

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
TWO_PI = 2.0 * math.pi


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def random_trig_expr(rng, mean_range=(-0.75, 0.75), max_harmonics=3,
                     amp=2.0, decay=0.6) -> str:
    """Random trig polynomial source text with <= max_harmonics harmonics.

    Every amplitude is bounded by ``amp``; higher harmonics are damped by
    ``decay**k`` (still within the bound) to keep the systems desk-scale.
    """
    terms = [fmt(rng.uniform(*mean_range))]
    n = int(rng.integers(0, max_harmonics + 1))
    for k in range(1, n + 1):
        ak = rng.uniform(-amp, amp) * decay ** (k - 1)
        bk = rng.uniform(-amp, amp) * decay ** (k - 1)
        karg = "t" if k == 1 else f"{k}*t"
        terms.append(f"{fmt(ak)}*cos({karg})")
        terms.append(f"{fmt(bk)}*sin({karg})")
    return "+".join(terms).replace("+-", "-")


def random_planar_system(rng, **kwargs) -> PlanarPeriodicSystem:
    return PlanarPeriodicSystem.from_expressions(
        random_trig_expr(rng, **kwargs), random_trig_expr(rng, **kwargs),
        random_trig_expr(rng, **kwargs), random_trig_expr(rng, **kwargs),
        TWO_PI)


def fixed_point_friendly_system(rng) -> PlanarPeriodicSystem:
    """A random system tuned until the fixed-point route ledger passes.

    The diagonal gap gets a definite nonzero mean and the coupling p21 is
    rescaled below the kernel contraction bound; the multiplier-agreement
    assertions under test are untouched by this construction.
    """
    from floquetkit.riccati import check_fixed_point_conditions

    gap_mean = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
    p11 = f"{fmt(gap_mean / 2)}+{fmt(rng.uniform(-0.3, 0.3))}*cos(t)"
    p22 = f"{fmt(-gap_mean / 2)}+{fmt(rng.uniform(-0.3, 0.3))}*sin(t)"
    p12 = random_trig_expr(rng, mean_range=(-0.5, 0.5), amp=1.0)
    p21_raw = random_trig_expr(rng, mean_range=(-0.2, 0.2), amp=1.0)
    scale = 1.0
    for _ in range(8):
        sys = PlanarPeriodicSystem.from_expressions(
            p11, p12, f"{fmt(scale)}*({p21_raw})", p22, TWO_PI)
        ledger = check_fixed_point_conditions(sys)
        if ledger.passed:
            return sys
        coupling = ledger.context["coupling_integral"]
        bound = ledger.context.get("contraction_bound", 0.0)
        if coupling == 0.0 or bound == 0.0:
            scale *= 0.1
        else:
            scale *= 0.5 * bound / coupling
    raise AssertionError("could not tune a condition-passing system")


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def make_fn(src: str, period: float = TWO_PI) -> PeriodicFn:
    return PeriodicFn(src, period)
