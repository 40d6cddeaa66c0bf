"""Robot kinematics in two regimes, disc-vs-grid collision handling with
sliding, and the multiplicative steering perturbation.

Discrete regime: one of {forward 0.25 m, turn +/-10 deg} per frame, motion
resolved instantly; a blocked forward step slides along the contact tangent
and reports the collision direction as the vector from the anticipated to the
actual position (pointing away from the obstacle).

Continuous regime: normalized (v, omega) commands at the control rate drive
first-order-lagged actuators integrated at the physics rate with unicycle
kinematics; contact push-outs within one control tick are summed into a
reaction-force analog whose direction gives the collision direction.

Angle convention: headings are counterclockwise radians; a positive omega
command turns clockwise (the controller maps a desired rotation d to
(v, omega) = (cos d, -sin d), so positive desired rotations produce left
turns through the sign flip in the heading integration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .scene import FREE, Pose, Scene, wrap_angle

DiscreteAction = Literal["forward", "turn_left", "turn_right"]

TURN_STEP = math.radians(10.0)
CONTACT_EPS = 1e-9  # anticipated/actual deviation that counts as a collision
FORCE_THRESHOLD = 1e-4  # m of summed push-out per control tick


@dataclass(frozen=True)
class RobotSpec:
    footprint_diameter: float
    v_max: float  # m/frame (discrete) or m/s (continuous)
    omega_max: float  # rad/frame (discrete) or rad/s (continuous)
    regime: str = "discrete"
    control_hz: int = 30
    physics_hz: int = 120
    actuator_tau: float = 0.1  # s, first-order lag toward commanded speeds

    @property
    def radius(self) -> float:
        return self.footprint_diameter / 2.0

    @classmethod
    def discrete(cls) -> "RobotSpec":
        return cls(footprint_diameter=0.2, v_max=0.25, omega_max=TURN_STEP, regime="discrete")

    @classmethod
    def continuous(cls) -> "RobotSpec":
        return cls(
            footprint_diameter=0.1677,
            v_max=2.133,
            omega_max=11.469,
            regime="continuous",
        )


@dataclass(frozen=True)
class Perturbation:
    """Steering disturbance: omega_motor = clip((omega + b_omega) * n, -1, 1)
    with n drawn Lognormal(0, sigma^2) once per control tick."""

    b_omega: float = 0.0
    sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not -1.0 < self.b_omega < 1.0:
            raise ValueError("b_omega must be in (-1, 1)")
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")


@dataclass
class CollisionEvent:
    frame: int
    gamma: float  # direction pointing away from the contacted obstacle
    side: str = ""  # filled by the steering controller


@dataclass
class ContinuousState:
    pose: Pose
    v_act: float = 0.0  # actuated linear speed, m/s
    omega_act: float = 0.0  # actuated angular speed, rad/s (clockwise positive)


def lognormal_draw(rng: np.random.Generator, sigma: float) -> float:
    """Multiplicative noise sample exp(N(0, sigma^2)); exactly 1 at sigma = 0."""
    return float(math.exp(sigma * rng.standard_normal()))


def controller_map(delta_sigma: float, regime: str):
    """Desired rotation -> actuation: a turn/forward action (discrete, 10 deg
    threshold) or normalized (v, omega) = (cos, -sin) (continuous)."""
    if regime == "discrete":
        if abs(delta_sigma) >= TURN_STEP:
            return "turn_left" if delta_sigma > 0 else "turn_right"
        return "forward"
    if regime == "continuous":
        return math.cos(delta_sigma), -math.sin(delta_sigma)
    raise ValueError(f"unknown regime {regime!r}")


# ---------------------------------------------------------------------------
# Disc-vs-grid contact resolution

_MAX_RESOLVE_ITERS = 16


def _resolve_disc(scene: Scene, p: np.ndarray, radius: float) -> np.ndarray:
    """Push a disc center out of any overlapping wall cells (deepest first).

    Mutates p in place; returns the summed push-out vector (zero when no
    contact).  Residual penetration after resolution is at floating-point
    scale, far below the 1e-6 m tolerance.
    """
    cell = scene.cell_size
    grid = scene.grid
    rows, cols = grid.shape
    total = np.zeros(2)
    for _ in range(_MAX_RESOLVE_ITERS):
        r_lo = max(0, int((p[1] - radius) // cell))
        r_hi = min(rows - 1, int((p[1] + radius) // cell))
        c_lo = max(0, int((p[0] - radius) // cell))
        c_hi = min(cols - 1, int((p[0] + radius) // cell))
        best_depth = 0.0
        best_push = None
        for r in range(r_lo, r_hi + 1):
            for c in range(c_lo, c_hi + 1):
                if grid[r, c] == FREE:
                    continue
                cx = min(max(p[0], c * cell), (c + 1) * cell)
                cy = min(max(p[1], r * cell), (r + 1) * cell)
                dx = p[0] - cx
                dy = p[1] - cy
                d = math.hypot(dx, dy)
                depth = radius - d
                if depth > best_depth + 1e-15:
                    if d > 0.0:
                        best_push = (dx / d * depth, dy / d * depth)
                    else:  # center exactly on the cell surface; push back arbitrarily
                        best_push = (0.0, -depth)
                    best_depth = depth
        if best_push is None:
            break
        p[0] += best_push[0]
        p[1] += best_push[1]
        total[0] += best_push[0]
        total[1] += best_push[1]
    return total


def _sweep_move(scene: Scene, start: np.ndarray, direction: np.ndarray, dist: float, radius: float) -> np.ndarray:
    """Move a disc by substeps no longer than radius/2, resolving contacts as
    it goes (produces tangential sliding)."""
    n_sub = max(1, math.ceil(dist / (radius / 2.0)))
    step = dist / n_sub
    p = start.astype(float).copy()
    for _ in range(n_sub):
        p += direction * step
        _resolve_disc(scene, p, radius)
    return p


def step_discrete(
    scene: Scene,
    pose: Pose,
    action: DiscreteAction,
    robot: RobotSpec | None = None,
) -> tuple[Pose, CollisionEvent | None]:
    """Advance one discrete frame.  Turns always succeed; a forward step that
    deviates from its anticipated endpoint (sliding) emits a collision event."""
    robot = robot or RobotSpec.discrete()
    if action == "turn_left":
        return Pose(pose.x, pose.y, wrap_angle(pose.heading + robot.omega_max)), None
    if action == "turn_right":
        return Pose(pose.x, pose.y, wrap_angle(pose.heading - robot.omega_max)), None
    if action != "forward":
        raise ValueError(f"unknown action {action!r}")
    direction = np.array([math.cos(pose.heading), math.sin(pose.heading)])
    start = np.array([pose.x, pose.y])
    anticipated = start + robot.v_max * direction
    actual = _sweep_move(scene, start, direction, robot.v_max, robot.radius)
    new_pose = Pose(actual[0], actual[1], pose.heading)
    residual = anticipated - actual
    dev = math.hypot(residual[0], residual[1])
    if dev > CONTACT_EPS:
        gamma = math.atan2(-residual[1], -residual[0])  # actual - anticipated
        return new_pose, CollisionEvent(frame=0, gamma=gamma)
    return new_pose, None


def step_continuous(
    scene: Scene,
    state: ContinuousState,
    control: tuple[float, float],
    perturbation: Perturbation | None = None,
    rng: np.random.Generator | None = None,
    robot: RobotSpec | None = None,
) -> tuple[ContinuousState, CollisionEvent | None]:
    """Advance one control tick (physics_hz/control_hz substeps).

    The angular command is perturbed once per tick, actuator speeds follow a
    first-order lag toward the commanded values, and a collision is emitted
    when the summed contact push-out exceeds the force threshold, with gamma
    set to the direction of the sum.
    """
    robot = robot or RobotSpec.continuous()
    pert = perturbation or Perturbation()
    v_cmd = min(1.0, max(-1.0, control[0]))
    w_cmd = min(1.0, max(-1.0, control[1]))
    if pert.sigma > 0.0:
        if rng is None:
            raise ValueError("perturbation with sigma > 0 requires an rng")
        noise = lognormal_draw(rng, pert.sigma)
    else:
        noise = 1.0
    w_motor = min(1.0, max(-1.0, (w_cmd + pert.b_omega) * noise))
    v_target = v_cmd * robot.v_max
    w_target = w_motor * robot.omega_max

    dt = 1.0 / robot.physics_hz
    n_sub = robot.physics_hz // robot.control_hz
    decay = math.exp(-dt / robot.actuator_tau)
    v_act = state.v_act
    w_act = state.omega_act
    heading = state.pose.heading
    p = np.array([state.pose.x, state.pose.y])
    force = np.zeros(2)
    for _ in range(n_sub):
        v_act = v_target + (v_act - v_target) * decay
        w_act = w_target + (w_act - w_target) * decay
        heading = wrap_angle(heading - w_act * dt)
        p[0] += v_act * math.cos(heading) * dt
        p[1] += v_act * math.sin(heading) * dt
        force += _resolve_disc(scene, p, robot.radius)
    new_state = ContinuousState(Pose(p[0], p[1], heading), v_act, w_act)
    magnitude = math.hypot(force[0], force[1])
    if magnitude >= FORCE_THRESHOLD:
        return new_state, CollisionEvent(frame=0, gamma=math.atan2(force[1], force[0]))
    return new_state, None
