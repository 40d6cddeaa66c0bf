"""2D occupancy-grid scenes: procedural generation, text-file I/O, and the
grid-geodesic distance oracle used by SPL and difficulty scoring.

Grid convention: ``grid[row, col]`` with 0 = free, 1 = wall.  World
coordinates are metric, ``x = col * cell_size`` increasing eastward and
``y = row * cell_size`` increasing with row index.  The boundary ring is
always walled, so the world is closed and every ray terminates.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

WALL = 1
FREE = 0

SCENE_KINDS = ("open", "convex_obstacle", "concave_obstacle", "corridor", "cluttered")

DEFAULT_CELL_SIZE = 0.25  # m, matches the discrete forward-step quantum
DEFAULT_CATCHMENT = 0.2  # m


class SceneFormatError(ValueError):
    """Raised when a scene file does not parse."""


class SceneGenerationError(RuntimeError):
    """Raised when procedural generation cannot produce a connected scene."""


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    a = math.remainder(a, math.tau)
    if a <= -math.pi:
        a += math.tau
    return a


@dataclass(frozen=True)
class Pose:
    """Robot pose: position in meters, heading in radians (ccw from +x)."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(eq=False)
class Scene:
    grid: np.ndarray  # (rows, cols) uint8, 0 free / 1 wall
    cell_size: float = DEFAULT_CELL_SIZE
    texture_seed: int = 0
    name: str = ""

    def __post_init__(self):
        self.grid = np.ascontiguousarray(self.grid, dtype=np.uint8)
        if self.grid.ndim != 2 or self.grid.shape[0] < 3 or self.grid.shape[1] < 3:
            raise ValueError("scene grid must be at least 3x3")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        border = np.concatenate(
            [self.grid[0], self.grid[-1], self.grid[:, 0], self.grid[:, -1]]
        )
        if not (border == WALL).all():
            raise ValueError("boundary not closed")
        self.grid.flags.writeable = False  # scenes are immutable once built

    @property
    def n_rows(self) -> int:
        return self.grid.shape[0]

    @property
    def n_cols(self) -> int:
        return self.grid.shape[1]

    @property
    def width(self) -> float:
        return self.n_cols * self.cell_size

    @property
    def height(self) -> float:
        return self.n_rows * self.cell_size

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the cell containing a world point."""
        return int(y // self.cell_size), int(x // self.cell_size)

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.width and 0.0 <= y < self.height

    def is_wall(self, row: int, col: int) -> bool:
        if not (0 <= row < self.n_rows and 0 <= col < self.n_cols):
            return True  # outside counts as solid
        return self.grid[row, col] == WALL

    def is_free_point(self, x: float, y: float) -> bool:
        if not self.in_bounds(x, y):
            return False
        r, c = self.cell_of(x, y)
        return self.grid[r, c] == FREE

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (col + 0.5) * self.cell_size, (row + 0.5) * self.cell_size


@dataclass
class EpisodeSpec:
    """One point-goal task: fixed scene, start pose, and goal position."""

    scene: Scene
    start_pose: Pose
    goal: tuple[float, float]
    catchment_radius: float = DEFAULT_CATCHMENT
    name: str = ""
    geodesic: float = field(default=math.nan, repr=False)  # cached start->goal distance

    def __post_init__(self):
        if math.isnan(self.geodesic):
            self.geodesic = geodesic_distance(
                self.scene, (self.start_pose.x, self.start_pose.y), self.goal
            )

    def validate(self) -> None:
        """Raise if the episode is ill-posed (blocked start/goal, unreachable goal)."""
        if self.catchment_radius <= 0:
            raise ValueError("catchment_radius must be positive")
        if not self.scene.is_free_point(self.start_pose.x, self.start_pose.y):
            raise ValueError("start position is not in a free cell")
        if not self.scene.is_free_point(*self.goal):
            raise ValueError("goal position is not in a free cell")
        if math.isinf(self.geodesic):
            raise ValueError("goal is unreachable from start")

    @property
    def euclidean(self) -> float:
        return math.hypot(self.goal[0] - self.start_pose.x, self.goal[1] - self.start_pose.y)


# ---------------------------------------------------------------------------
# Geodesic oracle


def geodesic_field(scene: Scene, source: tuple[int, int]) -> np.ndarray:
    """Shortest-path distance (meters) from a source cell to every free cell.

    Uniform-cost search over free cells with 8-connected moves; diagonal
    moves cost sqrt(2) * cell_size and are blocked when either orthogonal
    neighbour is a wall (no corner cutting).  Unreachable cells are +inf.
    """
    grid = scene.grid
    rows, cols = grid.shape
    dist = np.full((rows, cols), np.inf)
    sr, sc = source
    if grid[sr, sc] == WALL:
        return dist
    dist[sr, sc] = 0.0
    heap = [(0.0, sr, sc)]
    straight = scene.cell_size
    diagonal = math.sqrt(2.0) * scene.cell_size
    while heap:
        d, r, c = heapq.heappop(heap)
        if d > dist[r, c]:
            continue
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                nr, nc = r + dr, c + dc
                if not (0 <= nr < rows and 0 <= nc < cols):
                    continue
                if grid[nr, nc] == WALL:
                    continue
                if dr != 0 and dc != 0:
                    if grid[r + dr, c] == WALL or grid[r, c + dc] == WALL:
                        continue
                    nd = d + diagonal
                else:
                    nd = d + straight
                if nd < dist[nr, nc]:
                    dist[nr, nc] = nd
                    heapq.heappush(heap, (nd, nr, nc))
    return dist


def geodesic_distance(scene: Scene, a: tuple[float, float], b: tuple[float, float]) -> float:
    """Grid-geodesic distance in meters between two world points.

    Returns +inf when no free path exists.  Points in the same cell use the
    straight-line distance; otherwise the value is the uniform-cost path
    length between the cell centers (symmetric in a and b).
    """
    for p in (a, b):
        if not scene.in_bounds(p[0], p[1]):
            raise ValueError(f"point {p} outside the scene")
    ca = scene.cell_of(*a)
    cb = scene.cell_of(*b)
    if scene.grid[ca] == WALL or scene.grid[cb] == WALL:
        return math.inf
    if ca == cb:
        return math.hypot(b[0] - a[0], b[1] - a[1])
    return float(geodesic_field(scene, ca)[cb])


def complexity_ratio(spec: EpisodeSpec) -> float:
    """Geodesic / Euclidean distance of the episode; 1.0 for the degenerate
    start-on-goal case."""
    eu = spec.euclidean
    if eu == 0.0:
        return 1.0
    if math.isinf(spec.geodesic):
        raise ValueError("goal is unreachable; complexity ratio undefined")
    return spec.geodesic / eu


# ---------------------------------------------------------------------------
# Procedural generation

_KIND_IDS = {kind: i for i, kind in enumerate(SCENE_KINDS)}


def _canonical_slant(kind: str, size: int) -> int:
    """Row offset of the canonical start/goal from the midline.

    Convex episodes run on a slanted beeline so the obstacle face is met
    obliquely and the goal's lateral line clears the obstacle extent; a
    dead-centered pair would leave a pure slider in a head-on equilibrium.
    """
    return max(2, size // 8) if kind == "convex_obstacle" else 0


def _canonical_cells(size: int, slant: int = 0) -> tuple[tuple[int, int], tuple[int, int]]:
    """Default start/goal cells for a generated scene: west-middle to east-middle."""
    margin = max(2, round(0.12 * size))
    mid = size // 2
    return (mid - slant, margin), (mid + slant, size - 1 - margin)


def _blank(size: int) -> np.ndarray:
    grid = np.zeros((size, size), dtype=np.uint8)
    grid[0, :] = WALL
    grid[-1, :] = WALL
    grid[:, 0] = WALL
    grid[:, -1] = WALL
    return grid


def _gen_convex(grid: np.ndarray, size: int, rng: np.random.Generator) -> None:
    # Solid block across the canonical (slanted) beeline.  Its lower edge stops
    # just past the midline so the goal's lateral line stays clear: a pure
    # slider keeps tangential pull all the way around the near corner.
    mid = size // 2
    w = max(2, round(0.18 * size) + int(rng.integers(0, 3)))
    h = max(3, min(round(0.28 * size) + int(rng.integers(-1, 2)), size // 2 - 2))
    bottom = min(size - 2, mid + 1 + int(rng.integers(0, 2)))
    top = max(1, bottom - h + 1)
    c0 = max(2, mid - 2 - int(rng.integers(0, 2)))
    grid[top : bottom + 1, c0 : min(c0 + w, size - 2)] = WALL


def _gen_concave(grid: np.ndarray, size: int, rng: np.random.Generator) -> None:
    # U-shaped trap straddling the canonical beeline, mouth facing the start (west)
    mid = size // 2
    a = max(1, round(0.09 * size)) + int(rng.integers(0, 2))
    depth = max(2, round(0.12 * size)) + int(rng.integers(0, 2))
    back = min(size - 4, mid + max(1, round(0.06 * size)) + int(rng.integers(-1, 2)))
    # the mouth must stay east of the canonical start so the pocket never
    # seals against the west boundary on small grids
    margin = max(2, round(0.12 * size))
    depth = max(1, min(depth, back - margin - 1))
    top = max(1, mid - a)
    bot = min(size - 2, mid + a)
    grid[top : bot + 1, back] = WALL
    grid[top, max(1, back - depth) : back + 1] = WALL
    grid[bot, max(1, back - depth) : back + 1] = WALL


def _gen_corridor(grid: np.ndarray, size: int, rng: np.random.Generator) -> None:
    # Doorway wall partway east, then a walled corridor running to the east edge.
    mid = size // 2
    x_door = min(size - 5, max(4, round(0.55 * size) + int(rng.integers(-1, 2))))
    grid[1 : size - 1, x_door] = WALL
    grid[mid - 1 : mid + 2, x_door] = FREE
    r_n = mid - 2
    r_s = mid + 2
    grid[r_n, x_door : size - 1] = WALL
    grid[r_s, x_door : size - 1] = WALL


def _gen_cluttered(grid: np.ndarray, size: int, rng: np.random.Generator) -> bool:
    """Place random blocks; returns False when start/goal get disconnected."""
    (sr, sc), (gr, gc) = _canonical_cells(size)
    n_blocks = max(3, round(size * size / 64))
    for _ in range(n_blocks):
        h = int(rng.integers(1, 4))
        w = int(rng.integers(1, 4))
        r0 = int(rng.integers(1, size - 1 - h))
        c0 = int(rng.integers(1, size - 1 - w))
        # keep a clear pocket around the canonical start and goal
        if abs(r0 + h / 2 - sr) < h / 2 + 2.5 and abs(c0 + w / 2 - sc) < w / 2 + 2.5:
            continue
        if abs(r0 + h / 2 - gr) < h / 2 + 2.5 and abs(c0 + w / 2 - gc) < w / 2 + 2.5:
            continue
        grid[r0 : r0 + h, c0 : c0 + w] = WALL
    probe = Scene(grid.copy(), name="_probe")
    field = geodesic_field(probe, (sr, sc))
    return bool(np.isfinite(field[gr, gc]))


def generate_scene(
    kind: str, seed: int, size: int = 32, cell_size: float = DEFAULT_CELL_SIZE
) -> Scene:
    """Deterministically generate a walled square scene of the given kind."""
    if kind not in SCENE_KINDS:
        raise ValueError(f"unknown scene kind {kind!r}; expected one of {SCENE_KINDS}")
    if size < 8:
        raise ValueError("size must be at least 8 cells")
    name = f"{kind}-{seed}-{size}"
    if kind == "cluttered":
        for attempt in range(100):
            rng = np.random.default_rng([_KIND_IDS[kind], seed, attempt])
            grid = _blank(size)
            if _gen_cluttered(grid, size, rng):
                return Scene(grid, cell_size, texture_seed=seed, name=name)
        raise SceneGenerationError(
            f"cluttered generation failed to connect start and goal after 100 retries (seed {seed})"
        )
    rng = np.random.default_rng([_KIND_IDS[kind], seed])
    grid = _blank(size)
    if kind == "convex_obstacle":
        _gen_convex(grid, size, rng)
    elif kind == "concave_obstacle":
        _gen_concave(grid, size, rng)
    elif kind == "corridor":
        _gen_corridor(grid, size, rng)
    return Scene(grid, cell_size, texture_seed=seed, name=name)


def make_episode(
    kind: str,
    seed: int,
    size: int = 32,
    cell_size: float = DEFAULT_CELL_SIZE,
    catchment_radius: float = DEFAULT_CATCHMENT,
) -> EpisodeSpec:
    """Generate a scene plus its canonical start/goal episode.

    The canonical pair runs west to east through the middle of the scene;
    for convex obstacles the pair is slanted a couple of cells so the beeline
    meets the obstacle face obliquely rather than dead-on.
    """
    scene = generate_scene(kind, seed, size, cell_size)
    (sr, sc), (gr, gc) = _canonical_cells(size, _canonical_slant(kind, size))
    sx, sy = scene.cell_center(sr, sc)
    gx, gy = scene.cell_center(gr, gc)
    spec = EpisodeSpec(
        scene=scene,
        start_pose=Pose(sx, sy, 0.0),
        goal=(gx, gy),
        catchment_radius=catchment_radius,
        name=scene.name,
    )
    spec.validate()
    return spec


# ---------------------------------------------------------------------------
# File I/O

_GLYPHS = {"#": WALL, ".": FREE}
_GLYPHS_INV = {WALL: "#", FREE: "."}


def save_scene(scene: Scene, path: str | Path) -> None:
    """Write a scene as text (header + glyph rows) with a JSON sidecar for
    name and texture seed."""
    path = Path(path)
    lines = [f"cell_size={scene.cell_size!r}"]
    for row in scene.grid:
        lines.append("".join(_GLYPHS_INV[int(v)] for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    sidecar = {"name": scene.name, "texture_seed": scene.texture_seed}
    Path(str(path) + ".json").write_text(json.dumps(sidecar), encoding="utf-8")


def load_scene(path: str | Path) -> Scene:
    """Parse a scene file written by :func:`save_scene`."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("cell_size="):
        raise SceneFormatError("missing cell_size header")
    try:
        cell_size = float(lines[0].split("=", 1)[1])
    except ValueError as e:
        raise SceneFormatError(f"bad cell_size value: {e}") from e
    rows = lines[1:]
    if not rows:
        raise SceneFormatError("scene has no grid rows")
    width = len(rows[0])
    grid = np.empty((len(rows), width), dtype=np.uint8)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise SceneFormatError(f"inconsistent row length at line {i + 2}")
        for j, g in enumerate(row):
            if g not in _GLYPHS:
                raise SceneFormatError(f"unknown cell glyph {g!r} at line {i + 2}")
            grid[i, j] = _GLYPHS[g]
    border = np.concatenate([grid[0], grid[-1], grid[:, 0], grid[:, -1]])
    if not (border == WALL).all():
        raise SceneFormatError("boundary not closed")
    name = path.stem
    texture_seed = 0
    sidecar = Path(str(path) + ".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        name = meta.get("name", name)
        texture_seed = int(meta.get("texture_seed", 0))
    return Scene(grid, cell_size, texture_seed=texture_seed, name=name)
