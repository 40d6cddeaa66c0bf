"""Steering control: desired rotation from goal bearing, memory modulation,
and the post-collision escape maneuver.

The controller is a two-state machine.  In goal mode the target direction is
the bearing to the goal, shifted by the memory modulation signal.  A collision
switches to escape mode: the target starts at the collision direction (which
points away from the obstacle) and rotates linearly to its perpendicular over
a fixed number of frames, after which control returns to goal mode and the
release is signalled as a reward.  Modulation is never applied while escaping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .mb import MBONOutput, Side, opposite
from .scene import Pose, wrap_angle

MODE_GOAL = "goal"
MODE_ESCAPE = "escape"

DEFAULT_TAU_C = 20  # escape duration in frames


def goal_bearing(pose: Pose, goal: tuple[float, float]) -> float:
    """World-frame direction from the pose to the goal; degenerate pose-on-goal
    keeps the current heading."""
    dx = goal[0] - pose.x
    dy = goal[1] - pose.y
    if dx == 0.0 and dy == 0.0:
        return pose.heading
    return math.atan2(dy, dx)


def modulation(z: MBONOutput) -> float:
    """Memory steering shift: pi * (z_left - z_right), positive turns left."""
    return math.pi * (z.z_left - z.z_right)


@dataclass
class CXState:
    mode: str = MODE_GOAL
    t_c: int = -1  # collision frame
    gamma_c: float = 0.0  # collision direction (away from obstacle)
    collision_side: Side = "right"
    perp_sign: int = 1  # +1: rotate toward gamma_c + pi/2, -1: toward - pi/2


@dataclass
class SteeringController:
    tau_c: int = DEFAULT_TAU_C
    state: CXState = field(default_factory=CXState)

    def __post_init__(self):
        if self.tau_c < 1:
            raise ValueError("tau_c must be >= 1")

    @property
    def escaping(self) -> bool:
        return self.state.mode == MODE_ESCAPE

    def on_collision(self, gamma: float, heading: float, t: int, goal_dir: float) -> Side:
        """Enter (or restart) escape mode; returns the side to punish.

        The obstacle lies opposite the collision direction; it counts as a left
        collision when the obstacle direction falls in (0, pi) of the heading in
        signed relative angle (dead ahead resolves to right).  The perpendicular
        the escape rotates toward is whichever is angularly closer to the goal
        bearing at collision time, ties toward left.
        """
        rel = wrap_angle(gamma + math.pi - heading)
        side: Side = "left" if 0.0 < rel < math.pi else "right"
        d_left = abs(wrap_angle(gamma + math.pi / 2 - goal_dir))
        d_right = abs(wrap_angle(gamma - math.pi / 2 - goal_dir))
        self.state = CXState(
            mode=MODE_ESCAPE,
            t_c=t,
            gamma_c=gamma,
            collision_side=side,
            perp_sign=1 if d_left <= d_right else -1,
        )
        return side

    def check_escape_complete(self, t: int) -> Side | None:
        """Escape -> goal transition once the window has elapsed; returns the
        reward side (opposite the collision side) exactly once per escape."""
        if self.escaping and t - self.state.t_c >= self.tau_c:
            side = self.state.collision_side
            self.state = CXState()
            return opposite(side)
        return None

    def escape_target(self, t: int) -> float:
        """Escape-mode target direction at frame t: the collision direction at
        t_c, rotating linearly to its perpendicular at t_c + tau_c."""
        s = self.state
        if not self.escaping:
            raise RuntimeError("escape_target called outside escape mode")
        if not s.t_c <= t <= s.t_c + self.tau_c:
            raise RuntimeError("escape_target called outside the escape window")
        frac = (t - s.t_c) / self.tau_c
        return wrap_angle(s.gamma_c + s.perp_sign * (math.pi / 2) * frac)

    def desired_rotation(self, pose: Pose, goal: tuple[float, float], z: MBONOutput, t: int) -> float:
        """Rotation command in (-pi, pi]: target minus heading plus modulation
        (modulation suppressed during escape)."""
        if self.escaping:
            theta = self.escape_target(t)
            phi = 0.0
        else:
            theta = goal_bearing(pose, goal)
            phi = modulation(z)
        return wrap_angle(theta - pose.heading + phi)
