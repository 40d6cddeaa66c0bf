"""Steering controller: bearing/modulation math, escape interpolation, state
transitions, and side classification against an independent sign oracle."""

import math

import numpy as np
import pytest

import antnav.cx as cx_mod
from antnav.cx import CXState, SteeringController, goal_bearing, modulation
from antnav.mb import MBONOutput
from antnav.scene import Pose, wrap_angle


def test_goal_bearing_axes():
    assert goal_bearing(Pose(0, 0, 0.3), (1, 0)) == 0.0
    assert goal_bearing(Pose(0, 0, 0.3), (0, 1)) == pytest.approx(math.pi / 2)
    assert goal_bearing(Pose(2, 2, 0.7), (2, 2)) == pytest.approx(0.7)  # degenerate


def test_modulation_paper_values():
    assert modulation(MBONOutput(1.0, 1.0)) == 0.0
    assert modulation(MBONOutput(1.0, 0.0)) == pytest.approx(math.pi)
    assert modulation(MBONOutput(0.4, 0.9)) == pytest.approx(-0.5 * math.pi)


def test_modulation_antisymmetric():
    rng = np.random.default_rng(0)
    for _ in range(200):
        zl, zr = rng.uniform(0, 1, 2)
        assert modulation(MBONOutput(zl, zr)) == pytest.approx(-modulation(MBONOutput(zr, zl)))


def test_desired_rotation_composition():
    cx = SteeringController()
    z0 = MBONOutput(1.0, 1.0)
    assert cx.desired_rotation(Pose(0, 0, 0.0), (1.0, 1.0), z0, 0) == pytest.approx(math.pi / 4)
    # full-left urge when the right side is fully depressed and bearing is dead ahead
    assert cx.desired_rotation(Pose(0, 0, 0.0), (1.0, 0.0), MBONOutput(1.0, 0.0), 0) == pytest.approx(math.pi)


def test_desired_rotation_wraps():
    # theta - sigma = 3*pi/2 before wrapping -> -pi/2
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    cx = SteeringController()
    # heading pi with bearing pi/2 is the same equivalence class (mod 2*pi)
    pose = Pose(0, 0, math.pi)
    ds = cx.desired_rotation(pose, (0, 1), MBONOutput(1, 1), 0)
    assert ds == pytest.approx(-math.pi / 2)


def test_desired_rotation_always_wrapped():
    cx = SteeringController()
    rng = np.random.default_rng(1)
    for _ in range(500):
        pose = Pose(*rng.uniform(-5, 5, 2), rng.uniform(-10, 10))
        goal = tuple(rng.uniform(-5, 5, 2))
        z = MBONOutput(*rng.uniform(0, 1, 2))
        ds = cx.desired_rotation(pose, goal, z, 0)
        assert -math.pi < ds <= math.pi


def test_on_collision_side_oracle():
    rng = np.random.default_rng(2)
    for _ in range(500):
        cx = SteeringController()
        heading = rng.uniform(-math.pi, math.pi)
        gamma = rng.uniform(-math.pi, math.pi)
        side = cx.on_collision(gamma, heading, 0, goal_dir=0.0)
        # oracle: obstacle direction is gamma + pi; left iff its signed
        # relative angle lies strictly inside (0, pi)
        rel = wrap_angle((gamma + math.pi) - heading)
        assert side == ("left" if 0 < rel < math.pi else "right")


def test_on_collision_examples():
    cx = SteeringController()
    # obstacle slightly to the left of dead ahead
    side = cx.on_collision(math.pi + 0.1, 0.0, 3, goal_dir=0.0)
    assert side == "left"
    # dead ahead exactly resolves right by the tie rule
    cx = SteeringController()
    assert cx.on_collision(math.pi, 0.0, 3, goal_dir=0.0) == "right"


def test_recollision_restarts_window():
    cx = SteeringController(tau_c=10)
    cx.on_collision(math.pi, 0.0, 5, goal_dir=0.0)
    assert cx.state.t_c == 5
    cx.on_collision(math.pi / 2, 0.0, 9, goal_dir=0.0)
    assert cx.state.t_c == 9
    assert cx.escaping


def test_escape_target_interpolation():
    cx = SteeringController(tau_c=20)
    gamma = 0.3
    # goal to the left of gamma -> left perpendicular chosen
    cx.on_collision(gamma, heading=gamma - math.pi, t=100, goal_dir=gamma + 1.0)
    assert cx.escape_target(100) == pytest.approx(gamma)
    assert cx.escape_target(110) == pytest.approx(gamma + math.pi / 4)
    assert cx.escape_target(120) == pytest.approx(gamma + math.pi / 2)
    # goal to the right -> right perpendicular
    cx = SteeringController(tau_c=20)
    cx.on_collision(gamma, heading=gamma - math.pi, t=0, goal_dir=gamma - 1.0)
    assert cx.escape_target(20) == pytest.approx(gamma - math.pi / 2)


def test_escape_perpendicular_tie_goes_left():
    cx = SteeringController(tau_c=4)
    gamma = 0.0
    cx.on_collision(gamma, heading=math.pi, t=0, goal_dir=math.pi)  # both perps equidistant
    assert cx.state.perp_sign == 1
    assert cx.escape_target(4) == pytest.approx(math.pi / 2)


def test_escape_target_contract_violations():
    cx = SteeringController(tau_c=10)
    with pytest.raises(RuntimeError):
        cx.escape_target(0)  # not escaping
    cx.on_collision(0.0, 0.0, 10, goal_dir=0.0)
    with pytest.raises(RuntimeError):
        cx.escape_target(9)  # before the window
    with pytest.raises(RuntimeError):
        cx.escape_target(21)  # past the window


def test_escape_completion_emits_opposite_reward():
    cx = SteeringController(tau_c=5)
    side = cx.on_collision(math.pi + 0.2, 0.0, t=7, goal_dir=0.0)
    assert side == "left"
    for t in range(8, 12):
        assert cx.check_escape_complete(t) is None
    assert cx.check_escape_complete(12) == "right"
    assert cx.state.mode == cx_mod.MODE_GOAL
    # no double trigger
    assert cx.check_escape_complete(13) is None


def test_modulation_suppressed_during_escape(monkeypatch):
    cx = SteeringController(tau_c=10)
    calls = []
    orig = cx_mod.modulation
    monkeypatch.setattr(cx_mod, "modulation", lambda z: calls.append(1) or orig(z))
    cx.on_collision(math.pi, 0.0, 0, goal_dir=0.0)
    for t in range(1, 10):
        cx.desired_rotation(Pose(0, 0, 0), (1, 0), MBONOutput(0.3, 0.9), t)
    assert cx.escaping
    assert calls == []  # never consulted while escaping
    cx.check_escape_complete(10)
    cx.desired_rotation(Pose(0, 0, 0), (1, 0), MBONOutput(0.3, 0.9), 10)
    assert calls  # consulted again in goal mode


def test_escape_invariant_window_bound():
    cx = SteeringController(tau_c=6)
    cx.on_collision(1.0, 0.0, 3, goal_dir=0.0)
    for t in range(3, 30):
        done = cx.check_escape_complete(t)
        if cx.escaping:
            assert t - cx.state.t_c <= cx.tau_c
        if done:
            break
    assert not cx.escaping


def test_tau_c_validation():
    with pytest.raises(ValueError):
        SteeringController(tau_c=0)


def test_state_defaults():
    s = CXState()
    assert s.mode == cx_mod.MODE_GOAL
    assert s.perp_sign == 1
