"""Forward-facing view synthesis and visual preprocessing.

One ray is cast per image column across the field of view (grid DDA
traversal); a wall hit paints a vertical band whose height shrinks with hit
distance, shaded by a per-cell procedural texture.  Band edges use fractional
pixel coverage and the texture interpolates toward the neighbouring wall cell
across face positions, so the image varies smoothly with pose; without that,
the downstream sparse codes churn so hard under 10-degree turns that memory
marks cannot generalize between consecutive frames.  The preprocessing stage
applies a difference-of-Gaussians filter and a per-frame min-max rescale,
producing the bounded activation vector consumed by the memory network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .scene import Pose, Scene

SKY_SHADE = 0.75
FLOOR_SHADE = 0.5
UNTEXTURED_WALL_SHADE = 0.25

DOG_SIGMA_NARROW = 1.0  # px
DOG_SIGMA_WIDE = 2.0  # px


@dataclass(frozen=True)
class CameraConfig:
    fov: float = math.pi / 2  # horizontal, radians
    columns: int = 33
    rows: int = 33
    max_range: float = 20.0  # m; misses render as background
    wall_height: float = 0.4  # apparent wall size in m (band fills frame at this range)

    @property
    def n_pixels(self) -> int:
        return self.rows * self.columns


DEFAULT_CAMERA = CameraConfig()


def _hash01(row: int, col: int, seed: int) -> float:
    """Deterministic per-cell hash in [0, 1) (splitmix64 finalizer)."""
    mask = (1 << 64) - 1
    x = (col * 0x9E3779B97F4A7C15 + row * 0xBF58476D1CE4E5B9 + seed * 0x94D049BB133111EB) & mask
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & mask
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & mask
    x ^= x >> 31
    return x / 2**64


def _cast_ray(scene: Scene, x: float, y: float, angle: float, max_range: float):
    """DDA grid traversal.

    Returns (distance, (row, col), axis) for the nearest wall hit, where axis
    is 0 when the ray entered through a vertical (constant-x) face and 1 for a
    horizontal face, or None when nothing is hit within max_range.
    """
    cell = scene.cell_size
    grid = scene.grid
    rows, cols = grid.shape
    dx = math.cos(angle)
    dy = math.sin(angle)
    col = int(x // cell)
    row = int(y // cell)
    step_c = 1 if dx > 0 else -1
    step_r = 1 if dy > 0 else -1
    # parametric distance to the next vertical / horizontal grid line
    if dx != 0.0:
        t_max_x = (((col + (step_c > 0)) * cell) - x) / dx
        t_delta_x = cell / abs(dx)
    else:
        t_max_x = math.inf
        t_delta_x = math.inf
    if dy != 0.0:
        t_max_y = (((row + (step_r > 0)) * cell) - y) / dy
        t_delta_y = cell / abs(dy)
    else:
        t_max_y = math.inf
        t_delta_y = math.inf
    while True:
        if t_max_x < t_max_y:
            t = t_max_x
            t_max_x += t_delta_x
            col += step_c
            axis = 0
        else:
            t = t_max_y
            t_max_y += t_delta_y
            row += step_r
            axis = 1
        if t > max_range:
            return None
        if not (0 <= row < rows and 0 <= col < cols):
            return None  # unreachable for closed scenes; guards malformed grids
        if grid[row, col]:
            return t, (row, col), axis


def cast_rays(scene: Scene, pose: Pose, camera: CameraConfig = DEFAULT_CAMERA):
    """Per-column hits, left to right: (distances, wall cells, entry axes).

    Distance is +inf and cell/axis None for columns with no hit in range.
    """
    dists = np.full(camera.columns, np.inf)
    cells: list[tuple[int, int] | None] = [None] * camera.columns
    axes: list[int | None] = [None] * camera.columns
    for c in range(camera.columns):
        angle = pose.heading + camera.fov / 2 - (c + 0.5) * camera.fov / camera.columns
        hit = _cast_ray(scene, pose.x, pose.y, angle, camera.max_range)
        if hit is not None:
            dists[c], cells[c], axes[c] = hit
    return dists, cells, axes


def _face_texture(scene: Scene, pose: Pose, angle: float, d: float,
                  cell_rc: tuple[int, int], axis: int) -> float:
    """Texture value at a hit point: the hit cell's hashed value blended toward
    the neighbouring cell along the struck face (continuous across faces)."""
    r, c = cell_rc
    if axis == 0:  # vertical face: position along the face varies with y
        u = (pose.y + d * math.sin(angle)) / scene.cell_size - (r + 0.5)
        nr, nc = (r + 1, c) if u >= 0 else (r - 1, c)
    else:  # horizontal face: varies with x
        u = (pose.x + d * math.cos(angle)) / scene.cell_size - (c + 0.5)
        nr, nc = (r, c + 1) if u >= 0 else (r, c - 1)
    w = min(abs(u), 0.5)
    own = _hash01(r, c, scene.texture_seed)
    other = _hash01(nr, nc, scene.texture_seed)
    return (1.0 - w) * own + w * other


def render_view(
    scene: Scene,
    pose: Pose,
    camera: CameraConfig = DEFAULT_CAMERA,
    textured: bool = True,
) -> np.ndarray:
    """Grayscale (rows, columns) view in [0, 1], deterministic for fixed inputs."""
    if not scene.is_free_point(pose.x, pose.y):
        raise ValueError("camera pose is not inside a free cell")
    dists, cells, axes = cast_rays(scene, pose, camera)
    rows_idx = np.arange(camera.rows)
    mid = camera.rows / 2.0
    background = np.where(rows_idx < mid, SKY_SHADE, FLOOR_SHADE)
    img = np.empty((camera.rows, camera.columns))
    for c in range(camera.columns):
        if cells[c] is None:
            img[:, c] = background
            continue
        d = dists[c]
        half = min(1.0, camera.wall_height / max(d, 1e-9)) * mid
        cover = np.clip(np.minimum(rows_idx + 1.0, mid + half) - np.maximum(rows_idx, mid - half), 0.0, 1.0)
        if textured:
            angle = pose.heading + camera.fov / 2 - (c + 0.5) * camera.fov / camera.columns
            base = 0.05 + 0.4 * _face_texture(scene, pose, angle, d, cells[c], axes[c])
        else:
            base = UNTEXTURED_WALL_SHADE
        shade = base / (1.0 + 0.2 * d)
        img[:, c] = background * (1.0 - cover) + shade * cover
    return img


def band_heights(img: np.ndarray) -> np.ndarray:
    """Per-column count of pixels carrying any wall shading (not pure sky or
    floor), a geometry probe used by tests."""
    return ((img != SKY_SHADE) & (img != FLOOR_SHADE)).sum(axis=0)


def dog_filter(raw: np.ndarray) -> np.ndarray:
    """Difference-of-Gaussians response (narrow minus wide, reflective borders)."""
    raw = np.asarray(raw, dtype=float)
    if not np.isfinite(raw).all():
        raise ValueError("image contains non-finite pixels")
    return gaussian_filter(raw, DOG_SIGMA_NARROW, mode="reflect") - gaussian_filter(
        raw, DOG_SIGMA_WIDE, mode="reflect"
    )


def preprocess(raw: np.ndarray) -> np.ndarray:
    """Filtered view flattened row-major into a [0, 1] activation vector.

    Per-frame min-max normalization; featureless (constant-response) frames
    map to the all-0.5 vector so downstream activity stays bounded.
    """
    response = dog_filter(raw)
    lo = response.min()
    hi = response.max()
    if hi - lo < 1e-12:
        return np.full(response.size, 0.5)
    return ((response - lo) / (hi - lo)).ravel()


def save_pgm(img: np.ndarray, path) -> None:
    """Debug dump of a raw view as ASCII PGM (P2), one file per frame."""
    levels = 255
    pixels = np.clip(np.rint(np.asarray(img) * levels), 0, levels).astype(int)
    rows = [" ".join(str(v) for v in row) for row in pixels]
    header = f"P2\n{img.shape[1]} {img.shape[0]}\n{levels}\n"
    with open(path, "w", encoding="ascii") as f:
        f.write(header + "\n".join(rows) + "\n")
