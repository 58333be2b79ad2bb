import math

import numpy as np
import pytest

from conesolve import (Nonlinearity, UnitDisk, build_grid, ratio_curve,
                       single_range, system_ranges)
from conesolve.errors import ConditionCViolation, NonpositiveM

RHO = 15 * math.pi / 64
MU1_DISK = 5.783185962946785        # square of the first zero of J0
UPPER_1 = 4 * RHO / (math.sqrt(RHO) + math.tan(RHO))
UPPER_2 = 4 / RHO


def reference_system():
    return Nonlinearity.from_strings(
        ["sqrt(max(u1,u2)) + tan(max(u1,u2))", "max(u1,u2)^2"], (RHO, RHO))


def scalar_sqrt_tan():
    return Nonlinearity.from_strings(["sqrt(s) + tan(s)"],
                                     (math.pi / 2 - 1e-6,))


def test_system_ranges_reference_uppers(disk_grid):
    ranges = system_ranges(reference_system(), (RHO, RHO), 0, 10.0,
                           0.25, MU1_DISK, disk_grid)
    assert ranges[0].upper == pytest.approx(UPPER_1, rel=1e-12)
    assert ranges[1].upper == pytest.approx(UPPER_2, rel=1e-12)
    assert ranges[0].upper == pytest.approx(1.669, abs=5e-3)
    assert ranges[1].upper == pytest.approx(5.432, abs=5e-3)
    assert ranges[0].lower == pytest.approx(MU1_DISK / 10.0)
    assert ranges[1].lower == 0.0
    assert not ranges[0].empty and not ranges[1].empty


def test_system_ranges_empty_for_small_delta(disk_grid):
    # delta = 1 is valid (tan s >= s) but gives mu1 / 1 > upper_1
    ranges = system_ranges(reference_system(), (RHO, RHO), 0, 1.0,
                           0.25, MU1_DISK, disk_grid)
    assert ranges[0].lower == pytest.approx(MU1_DISK)
    assert ranges[0].empty
    assert not ranges[1].empty
    # a larger validated delta reopens the interval
    again = system_ranges(reference_system(), (RHO, RHO), 0, 10.0,
                          0.25, MU1_DISK, disk_grid)
    assert not again[0].empty
    assert again[0].lower == pytest.approx(0.5783185962946785, rel=1e-12)


def test_linear_scalar_system_range_empty(disk_grid):
    nl = Nonlinearity.from_strings(["u1"], (1.0,))
    ranges = system_ranges(nl, (1.0,), 0, 1.0, 0.25, MU1_DISK, disk_grid)
    assert ranges[0].upper == pytest.approx(4.0)
    assert ranges[0].lower == pytest.approx(MU1_DISK)
    assert ranges[0].empty


def test_condition_c_violation(disk_grid):
    nl = Nonlinearity.from_strings(["u1", "0"], (1.0, 1.0))
    with pytest.raises(ConditionCViolation):
        system_ranges(nl, (1.0, 1.0), 0, 1.0, 0.25, MU1_DISK, disk_grid)


def test_x_dependent_m_gets_safety_factor():
    grid = build_grid(UnitDisk(), 1 / 8)
    nl = Nonlinearity.from_strings(["u1", "(x1^2 + x2^2)*u2 + 1"],
                                   (1.0, 1.0))
    plain = system_ranges(nl, (1.0, 1.0), 0, 10.0, 0.25, MU1_DISK, grid,
                          m_safety=1.0)
    inflated = system_ranges(nl, (1.0, 1.0), 0, 10.0, 0.25, MU1_DISK, grid,
                             m_safety=1.01)
    # only the x-dependent component shrinks
    assert inflated[0].upper == plain[0].upper
    assert inflated[1].upper == pytest.approx(plain[1].upper / 1.01)


def test_m_homogeneity_keeps_upper_invariant(disk_grid):
    # for f(u) = u the maximum is homogeneous of degree 1 in beta, so the
    # upper bound beta / (m(beta) |K1|) does not depend on beta at all
    nl = Nonlinearity.from_strings(["u1"], (4.0,))
    r1 = system_ranges(nl, (1.0,), 0, 1.0, 0.25, MU1_DISK, disk_grid)
    r2 = system_ranges(nl, (2.0,), 0, 1.0, 0.25, MU1_DISK, disk_grid)
    assert r1[0].upper == pytest.approx(r2[0].upper, rel=1e-12)
    # for constant f the maximum is degree 0 and the upper bound doubles
    nl_const = Nonlinearity.from_strings(["1"], (4.0,))
    c1 = system_ranges(nl_const, (1.0,), 0, 1.0, 0.25, MU1_DISK, disk_grid)
    c2 = system_ranges(nl_const, (2.0,), 0, 1.0, 0.25, MU1_DISK, disk_grid)
    assert c2[0].upper == pytest.approx(2.0 * c1[0].upper, rel=1e-12)


def test_single_range_reference_sup():
    rng = single_range(scalar_sqrt_tan(), math.pi / 2 - 1e-6, 1.0, 0.7,
                       0.25, MU1_DISK, grid_points=1000)
    assert rng.upper == pytest.approx(1.66924, abs=1e-3)
    assert rng.upper == pytest.approx(1.6692395899937982, abs=1e-6)
    assert rng.lower == pytest.approx(MU1_DISK)
    assert not rng.lower_strict and rng.upper_strict


def test_single_range_linear_ratio_constant():
    nl = Nonlinearity.from_strings(["s"], (1.0,))
    rng = single_range(nl, 1.0, 1.0, 0.5, 0.25, MU1_DISK)
    assert rng.upper == pytest.approx(4.0, rel=1e-9)
    assert rng.empty     # mu1 > 4


def test_single_range_constant_f_sup_at_rho():
    nl = Nonlinearity.from_strings(["1"], (0.8,))
    rng = single_range(nl, 0.8, 8.0, 0.4, 0.25, MU1_DISK)
    assert rng.upper == pytest.approx(4 * 0.8, rel=1e-9)


def test_single_range_refinement_stable():
    base = single_range(scalar_sqrt_tan(), math.pi / 2 - 1e-6, 1.0, 0.7,
                        0.25, MU1_DISK, grid_points=1000)
    fine = single_range(scalar_sqrt_tan(), math.pi / 2 - 1e-6, 1.0, 0.7,
                        0.25, MU1_DISK, grid_points=2000)
    assert abs(base.upper - fine.upper) < 1e-6


def test_nonpositive_m_detected():
    nl = Nonlinearity.from_strings(["0"], (1.0,))
    with pytest.raises(NonpositiveM):
        single_range(nl, 1.0, 1.0, 0.5, 0.25, MU1_DISK)


def test_ratio_curve_shape():
    s, ratios = ratio_curve(scalar_sqrt_tan(), math.pi / 2 - 1e-6, 0.25,
                            500)
    assert len(s) == len(ratios) == 500
    assert s[0] == pytest.approx((math.pi / 2 - 1e-6) * 1e-8)
    assert ratios.max() <= 1.6692395899937982 + 1e-9


def test_range_describe_mentions_emptiness(disk_grid):
    nl = Nonlinearity.from_strings(["u1"], (1.0,))
    rng = system_ranges(nl, (1.0,), 0, 1.0, 0.25, MU1_DISK, disk_grid)[0]
    text = rng.describe()
    assert "EMPTY" in text and "mu1" in text


def test_contains_respects_strictness(disk_grid):
    ranges = system_ranges(reference_system(), (RHO, RHO), 0, 10.0,
                           0.25, MU1_DISK, disk_grid)
    r0 = ranges[0]
    assert not r0.contains(r0.lower)        # lower bound is open
    assert r0.contains(r0.upper)            # upper bound is closed
    assert r0.contains(1.6)
    assert not r0.contains(5.0)
