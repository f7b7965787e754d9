"""View-sphere cameras and a software face-ID rasterizer.

Every covered pixel stores the index of the nearest face along its ray, so
the visible pixel count of a face inside a bounding box is an exact integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMesh
from .mesh import TriMesh

EMPTY = -1


@dataclass(frozen=True)
class Camera:
    """Perspective pinhole looking from position toward look_at."""

    position: np.ndarray
    look_at: np.ndarray
    up: np.ndarray
    fov_y: float  # degrees
    image_size: tuple[int, int] = (512, 512)

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        object.__setattr__(self, "look_at", np.asarray(self.look_at, dtype=np.float64))
        object.__setattr__(self, "up", np.asarray(self.up, dtype=np.float64))
        if not np.any(self.position != self.look_at):
            raise ValueError("camera position coincides with look_at")
        if not 0.0 < self.fov_y < 180.0:
            raise ValueError(f"fov_y must be in (0, 180), got {self.fov_y}")
        w, h = self.image_size
        if w < 16 or h < 16:
            raise ValueError(f"image_size must be at least 16x16, got {self.image_size}")

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Right-handed (right, up, forward) with forward pointing at look_at."""
        forward = self.look_at - self.position
        forward = forward / np.linalg.norm(forward)
        right = np.cross(forward, self.up)
        n = np.linalg.norm(right)
        if n < 1e-12:
            # view axis parallel to up: fall back to an arbitrary perpendicular
            alt = np.array([0.0, 1.0, 0.0]) if abs(forward[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
            right = np.cross(forward, alt)
            n = np.linalg.norm(right)
        right = right / n
        true_up = np.cross(right, forward)
        return right, true_up, forward


@dataclass
class FaceIdBuffer:
    """Per-pixel face indices (EMPTY = background) and camera-space depths."""

    view_index: int
    pixels: np.ndarray  # (h, w) int32
    depth: np.ndarray  # (h, w) float64, +inf at EMPTY

    @property
    def image_size(self) -> tuple[int, int]:
        h, w = self.pixels.shape
        return w, h


def _fibonacci_directions(count: int) -> np.ndarray:
    i = np.arange(count, dtype=np.float64)
    z = 1.0 - 2.0 * (i + 0.5) / count
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    while np.linalg.norm(q) < 1e-12:
        q = rng.normal(size=4)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def make_view_sphere(
    view_count: int,
    mesh: TriMesh,
    seed: int,
    image_size: tuple[int, int] = (512, 512),
    radius_scale: float = 2.5,
    fov_margin: float = 1.15,
) -> list[Camera]:
    """Cameras on a Fibonacci lattice around the mesh, rotated by a seeded jitter.

    The sphere is centered at the bounding-box center with radius
    radius_scale x the bounding-sphere radius; fov_y is chosen so every
    vertex fits in frame from every viewpoint.
    """
    if view_count < 1:
        raise ValueError("view_count must be >= 1")
    radius = mesh.bounding_radius()
    if radius <= 0.0:
        raise DegenerateMesh("mesh has zero spatial extent")
    center = mesh.bbox_center()
    directions = _fibonacci_directions(view_count)
    rot = _random_rotation(np.random.default_rng(seed))
    directions = directions @ rot.T

    distance = radius_scale * radius
    half = math.asin(min(1.0, fov_margin * radius / distance))
    w, h = image_size
    aspect = w / h
    if aspect < 1.0:
        # portrait frames: widen the vertical field so the sphere still fits horizontally
        half = math.atan(math.tan(half) / aspect)
    fov_y = math.degrees(2.0 * half)

    cameras = []
    for d in directions:
        up = np.array([0.0, 0.0, 1.0])
        if abs(float(np.dot(d, up))) > 0.999:
            up = np.array([0.0, 1.0, 0.0])
        cameras.append(
            Camera(
                position=center + distance * d,
                look_at=center.copy(),
                up=up,
                fov_y=fov_y,
                image_size=image_size,
            )
        )
    return cameras


def _clip_near(tri_cam: np.ndarray, near: float) -> np.ndarray:
    """Sutherland-Hodgman clip of one camera-space triangle against z >= near.

    Returns an (n, 3) polygon with n in {0, 3, 4}.
    """
    out: list[np.ndarray] = []
    for k in range(3):
        cur, nxt = tri_cam[k], tri_cam[(k + 1) % 3]
        cur_in, nxt_in = cur[2] >= near, nxt[2] >= near
        if cur_in:
            out.append(cur)
        if cur_in != nxt_in:
            t = (near - cur[2]) / (nxt[2] - cur[2])
            out.append(cur + t * (nxt - cur))
    return np.array(out) if len(out) >= 3 else np.empty((0, 3))


def rasterize(mesh: TriMesh, camera: Camera, view_index: int = 0) -> FaceIdBuffer:
    """Render the mesh into a face-ID buffer with a z-buffer.

    Pixel-center sampling, no anti-aliasing, no back-face culling; on exact
    depth ties the lower face index (drawn first) wins.
    """
    w, h = camera.image_size
    right, up, forward = camera.basis()
    basis = np.stack([right, up, forward], axis=1)
    cam_pts = (mesh.vertices - camera.position) @ basis

    half_y = math.tan(math.radians(camera.fov_y) / 2.0)
    half_x = half_y * (w / h)
    near = 1e-6 * max(float(np.linalg.norm(camera.look_at - camera.position)), 1e-12)

    ids = np.full((h, w), EMPTY, dtype=np.int32)
    invz = np.zeros((h, w), dtype=np.float64)

    tri_cam_all = cam_pts[mesh.faces]
    zmin = tri_cam_all[:, :, 2].min(axis=1)
    zmax = tri_cam_all[:, :, 2].max(axis=1)

    for fi in range(mesh.face_count):
        if zmax[fi] < near:
            continue
        tri_cam = tri_cam_all[fi]
        if zmin[fi] >= near:
            polys = (tri_cam,)
        else:
            poly = _clip_near(tri_cam, near)
            if len(poly) == 0:
                continue
            polys = tuple(
                np.stack([poly[0], poly[k], poly[k + 1]]) for k in range(1, len(poly) - 1)
            )
        for tri in polys:
            z = tri[:, 2]
            sx = (tri[:, 0] / z / half_x + 1.0) * 0.5 * w
            sy = (1.0 - tri[:, 1] / z / half_y) * 0.5 * h
            tiz = 1.0 / z
            _fill_triangle(ids, invz, fi, sx, sy, tiz, w, h)

    depth = np.full((h, w), np.inf)
    covered = ids != EMPTY
    depth[covered] = 1.0 / invz[covered]
    return FaceIdBuffer(view_index=view_index, pixels=ids, depth=depth)


def _fill_triangle(ids, invz, face_index, sx, sy, tiz, w, h):
    area2 = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sy[1] - sy[0]) * (sx[2] - sx[0])
    if area2 == 0.0:
        return
    x0 = max(0, int(math.ceil(sx.min() - 0.5)))
    x1 = min(w, int(math.floor(sx.max() - 0.5)) + 1)
    y0 = max(0, int(math.ceil(sy.min() - 0.5)))
    y1 = min(h, int(math.floor(sy.max() - 0.5)) + 1)
    if x0 >= x1 or y0 >= y1:
        return
    px = np.arange(x0, x1, dtype=np.float64) + 0.5
    py = np.arange(y0, y1, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(px, py)

    w0 = (sx[2] - sx[1]) * (gy - sy[1]) - (sy[2] - sy[1]) * (gx - sx[1])
    w1 = (sx[0] - sx[2]) * (gy - sy[2]) - (sy[0] - sy[2]) * (gx - sx[2])
    w2 = (sx[1] - sx[0]) * (gy - sy[0]) - (sy[1] - sy[0]) * (gx - sx[0])
    if area2 > 0.0:
        inside = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)
    else:
        inside = (w0 <= 0.0) & (w1 <= 0.0) & (w2 <= 0.0)
    if not inside.any():
        return

    pix_invz = (w0 * tiz[0] + w1 * tiz[1] + w2 * tiz[2]) / area2
    window_z = invz[y0:y1, x0:x1]
    window_id = ids[y0:y1, x0:x1]
    # strict > keeps the first (lowest-index) writer on exact depth ties
    write = inside & (pix_invz > window_z)
    window_z[write] = pix_invz[write]
    window_id[write] = face_index


def bbox_pixel_range(bbox, w: int, h: int) -> tuple[int, int, int, int]:
    """Integer pixel window (x0, x1, y0, y1) whose centers fall inside bbox.

    A pixel (px, py) counts iff x_min <= px+0.5 < x_max and likewise in y;
    for integer bboxes this is plain inclusive-exclusive indexing.
    """
    bx0, by0, bx1, by1 = (float(v) for v in bbox)
    x0 = max(0, int(math.ceil(bx0 - 0.5)))
    x1 = min(w, int(math.ceil(bx1 - 0.5)))
    y0 = max(0, int(math.ceil(by0 - 0.5)))
    y1 = min(h, int(math.ceil(by1 - 0.5)))
    return x0, max(x0, x1), y0, max(y0, y1)


def visible_pixel_count(buffer: FaceIdBuffer, face_index: int, bbox) -> int:
    """V(i, bbox): pixels inside bbox owned by face_index."""
    w, h = buffer.image_size
    x0, x1, y0, y1 = bbox_pixel_range(bbox, w, h)
    if x0 >= x1 or y0 >= y1:
        return 0
    return int(np.count_nonzero(buffer.pixels[y0:y1, x0:x1] == face_index))


def bbox_face_counts(buffer: FaceIdBuffer, bbox, face_count: int) -> np.ndarray:
    """V(i, bbox) for every face at once, as an (f,) int64 vector."""
    w, h = buffer.image_size
    x0, x1, y0, y1 = bbox_pixel_range(bbox, w, h)
    counts = np.zeros(face_count, dtype=np.int64)
    if x0 >= x1 or y0 >= y1:
        return counts
    window = buffer.pixels[y0:y1, x0:x1]
    visible = window[window != EMPTY]
    if visible.size:
        counts += np.bincount(visible, minlength=face_count)
    return counts


def buffer_to_png(buffer: FaceIdBuffer, path) -> None:
    """Debug dump: hash face ids into RGB and write a PNG."""
    from PIL import Image

    ids = buffer.pixels.astype(np.int64)
    rgb = np.zeros((*ids.shape, 3), dtype=np.uint8)
    covered = ids != EMPTY
    # +1 keeps face 0 from hashing to black, the background color
    mixed = ((ids[covered] + 1) * np.int64(2654435761)) & np.int64(0xFFFFFF)
    rgb[covered, 0] = (mixed >> 16) & 0xFF
    rgb[covered, 1] = (mixed >> 8) & 0xFF
    rgb[covered, 2] = mixed & 0xFF
    Image.fromarray(rgb).save(path)
