"""Shared fixtures: canonical limit sets and seeded generators."""

from __future__ import annotations

import numpy as np
import pytest

from jolt import spline_core as sc

# Arm-scale limit set used throughout: velocity pi rad/s, acceleration
# 20 rad/s^2, jerk 500 rad/s^3, with a non-binding 2*pi position bound.
ARM_POS, ARM_VEL, ARM_ACC, ARM_JERK = 2.0 * np.pi, np.pi, 20.0, 500.0


@pytest.fixture(scope="session")
def arm_limit():
    return sc.JointLimits(ARM_POS, ARM_VEL, ARM_ACC, ARM_JERK)


@pytest.fixture(scope="session")
def arm_limits6(arm_limit):
    return (arm_limit,) * 6


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)


def admissible_state(rng, limits, n, toward=None, frac=0.8):
    """Random BoundaryState inside the limits with braking headroom.

    |v0| stays below vel_max - a0^2/(2*jerk_max) so the admissible
    jerk-coefficient band contains braking segments (the bracket search
    can still miss them for ~1% of draws); ``toward`` biases velocity
    sign to point at a target position array (the replanning-style
    distribution).
    """
    p = rng.uniform(-np.pi, np.pi, n)
    a = rng.uniform(-0.5, 0.5, n) * limits.acc_max
    cap = limits.vel_max - a * a / (2.0 * limits.jerk_max)
    if toward is None:
        v = rng.uniform(-1.0, 1.0, n) * cap * frac
    else:
        sign = np.where(toward >= p, 1.0, -1.0)
        v = sign * rng.uniform(0.0, frac, n) * cap
    return sc.BoundaryState(p, v, a)
