import math

import numpy as np
import pytest

from floquetkit.periodic import (NonFiniteSampleError, PeriodicFn,
                                 PeriodicityError, TrigInterp, golden_max,
                                 integrate_callable)

TWO_PI = 2.0 * math.pi


# -- construction -------------------------------------------------------------

def test_declared_periodicity_is_checked():
    PeriodicFn("sin(t)", TWO_PI)                 # fine
    PeriodicFn("sin(t)", 3 * TWO_PI)             # integer multiple also fine
    with pytest.raises(PeriodicityError):
        PeriodicFn("t", TWO_PI)
    with pytest.raises(PeriodicityError):
        PeriodicFn("sin(t)", math.pi)            # half the true period


def test_invalid_period_rejected():
    with pytest.raises(ValueError):
        PeriodicFn("sin(t)", -1.0)
    with pytest.raises(ValueError):
        PeriodicFn("sin(t)", 0.0)


# -- quadrature ---------------------------------------------------------------

def test_whole_period_integrals():
    assert abs(PeriodicFn("sin(t)", TWO_PI).integrate_period()) <= 1e-10
    a41 = PeriodicFn("(0.5+1)*sin(t)/(2+cos(t))", TWO_PI)
    assert abs(a41.integrate_period()) <= 1e-10
    g = PeriodicFn("0.1+0.2*cos(t)", TWO_PI)
    assert g.integrate_period() == pytest.approx(0.2 * math.pi, abs=1e-12)


def test_integral_additivity():
    f = PeriodicFn("exp(0.3*cos(t))*sin(2*t)+0.25", TWO_PI)
    a, b, c = 0.3, 2.1, 5.9
    whole = f.integrate(a, c)
    split = f.integrate(a, b) + f.integrate(b, c)
    assert split == pytest.approx(whole, rel=1e-11, abs=1e-13)


def test_integral_multi_period_reduction():
    f = PeriodicFn("0.5+sin(t)", TWO_PI)
    # 3 whole periods plus a wrapped remainder
    val = f.integrate(1.0, 1.0 + 3 * TWO_PI + 2.5)
    direct = integrate_callable(f, 1.0, 1.0 + 3 * TWO_PI + 2.5, 1e-12)
    assert val == pytest.approx(direct, rel=1e-11)
    assert f.integrate(5.0, 2.0) == pytest.approx(-f.integrate(2.0, 5.0))


def test_quadrature_halving_gains_order():
    # composite order-10 panels: halving the panel width must cut the
    # error by far more than 8x on a smooth integrand (until the floor)
    from floquetkit.periodic import _fixed_panels
    fn = lambda ts: np.exp(np.sin(ts))
    exact = integrate_callable(fn, 0.0, TWO_PI, 1e-15)
    errs = [abs(_fixed_panels(fn, 0.0, TWO_PI, n) - exact) for n in (2, 4, 8)]
    for coarse, fine in zip(errs, errs[1:]):
        if coarse > 1e-14:
            assert fine <= coarse / 8.0


def test_non_finite_sample_reports_location():
    f = PeriodicFn("sin(t)", TWO_PI)
    bad = PeriodicFn.__new__(PeriodicFn)  # bypass ctor to plant a pole
    with pytest.raises(NonFiniteSampleError) as err:
        integrate_callable(lambda ts: 1.0 / (ts - 1.0), 0.0, 2.0, 1e-10)
    assert 0.0 <= err.value.t <= 2.0
    del bad, f


def test_integrate_abs_splits_at_zeros():
    f = PeriodicFn("sin(t)", TWO_PI)
    assert f.integrate_abs() == pytest.approx(4.0, abs=1e-11)
    # |a(t)| for the seasonal quotient: 2*log(3) by substitution
    a41 = PeriodicFn("sin(t)/(2+cos(t))", TWO_PI)
    assert a41.integrate_abs() == pytest.approx(2.0 * math.log(3.0), abs=1e-10)


# -- extrema ------------------------------------------------------------------

def brute_force_sup_abs(fn, period, n=1_000_000):
    ts = np.linspace(0.0, period, n, endpoint=False)
    return float(np.max(np.abs(fn(ts))))


def test_sup_abs_examples():
    assert PeriodicFn("sin(t)", TWO_PI).sup_abs() == pytest.approx(1.0, abs=1e-8)
    assert PeriodicFn("3.5", TWO_PI).sup_abs() == 3.5
    f = PeriodicFn("sin(t)/(2+cos(t))", TWO_PI)
    oracle = brute_force_sup_abs(f, TWO_PI)
    assert f.sup_abs() == pytest.approx(oracle, abs=1e-8)
    assert f.sup_abs() >= oracle - 1e-12  # polish never loses to the grid


def test_sup_abs_dominates_grid_samples_exactly():
    f = PeriodicFn("exp(sin(3*t))*cos(t)", TWO_PI)
    sup = f.sup_abs()
    ts = np.linspace(0.0, TWO_PI, f.sample_count + 1)
    assert np.all(np.abs(f(ts)) <= sup)


def test_min_on_period_examples():
    assert PeriodicFn("0.1+0.2*cos(t)", TWO_PI).min_on_period() == pytest.approx(-0.1, abs=1e-10)
    assert PeriodicFn("sin(t)", TWO_PI).min_on_period() == pytest.approx(-1.0, abs=1e-10)
    m = PeriodicFn("2+0.2*sin(t)+0.05*cos(3*t)", TWO_PI)
    ts = np.linspace(0.0, TWO_PI, 1_000_000, endpoint=False)
    oracle = float(np.min(m(ts)))
    assert m.min_on_period() == pytest.approx(oracle, abs=1e-8)


def test_rounded_variants_bracket_raw_values():
    f = PeriodicFn("1.5+sin(t)", TWO_PI)
    assert f.sup_abs_upper() > f.sup_abs()
    assert f.min_lower() < f.min_on_period()
    assert f.max_upper() > f.max_on_period()


def test_golden_max_refines_peak():
    x, v = golden_max(lambda t: -(t - 1.2345) ** 2, 1.0, 1.5)
    assert x == pytest.approx(1.2345, abs=1e-9)
    assert v == pytest.approx(0.0, abs=1e-15)


# -- caching / concurrency contract -------------------------------------------

def test_period_integral_cache_idempotent():
    f = PeriodicFn("0.3+sin(t)", TWO_PI)
    first = f.integrate_period()
    assert f.integrate_period() == first  # cached value identical


# -- trig interpolation --------------------------------------------------------

def test_trig_interp_spectral_accuracy():
    fn = lambda ts: np.exp(0.3 * np.sin(ts)) * np.cos(2 * ts)
    interp = TrigInterp.from_function(fn, TWO_PI, 128)
    ts = np.linspace(0.0, TWO_PI, 731)
    assert np.max(np.abs(interp(ts) - fn(ts))) < 1e-12
    h = 1e-6
    dfd = (fn(ts + h) - fn(ts - h)) / (2 * h)
    assert np.max(np.abs(interp.derivative(ts) - dfd)) < 1e-8


def test_trig_interp_integral_and_antiderivative():
    interp = TrigInterp.from_function(lambda ts: 0.7 + np.sin(ts), TWO_PI, 64)
    assert interp.integral_over_period() == pytest.approx(0.7 * TWO_PI, abs=1e-12)
    anti = interp.antiderivative_periodic()
    # antiderivative of sin (mean removed) = -cos + const, vanishing at 0
    ts = np.linspace(0.0, TWO_PI, 101)
    assert np.max(np.abs(anti(ts) - (1.0 - np.cos(ts)))) < 1e-12


def test_trig_interp_resample_roundtrip():
    samples = np.exp(np.sin(np.linspace(0, TWO_PI, 64, endpoint=False)))
    interp = TrigInterp(samples, TWO_PI)
    assert np.allclose(interp.resample(64), samples, atol=1e-14)
    up = interp.resample(256)
    ts = np.linspace(0.0, TWO_PI, 256, endpoint=False)
    assert np.max(np.abs(up - np.exp(np.sin(ts)))) < 1e-10
