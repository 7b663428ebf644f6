"""Heisenberg chart, 2-D scatter rasters and point-cloud files."""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PoleSingularity
from .hermitian import BoundaryPoint

POLE_TOL = 1e-12
PLANES = {"hx-hy": (0, 1), "hx-ht": (0, 2), "hy-ht": (1, 2)}
CSV_HEADER = "z1re,z1im,z2re,z2im,hx,hy,ht"


def heisenberg(p: BoundaryPoint | tuple[complex, complex]) -> tuple[float, float, float]:
    """(hx, hy, ht) with hx + i hy = z2 / (1 + z1) and ht = Im((1 - z1) / (1 + z1)).

    The pole is z1 = -1. Off the pole Re((1 - z1)/(1 + z1)) = |hx + i hy|^2,
    so the chart is injective.
    """
    z1, z2 = p.s3 if isinstance(p, BoundaryPoint) else p
    d = 1 + complex(z1)
    if abs(d) < POLE_TOL:
        raise PoleSingularity(f"point ({z1}, {z2}) is at the chart pole")
    w = complex(z2) / d
    return w.real, w.imag, ((1 - complex(z1)) / d).imag


def heisenberg_array(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized chart: returns (coords (M, 3), mask of kept rows); pole rows are dropped."""
    z = np.asarray(z, dtype=complex).reshape(-1, 2)
    d = 1 + z[:, 0]
    ok = np.abs(d) >= POLE_TOL
    d = d[ok]
    w = z[ok, 1] / d
    t = ((1 - z[ok, 0]) / d).imag
    return np.stack([w.real, w.imag, t], axis=1), ok


def project(h: np.ndarray, plane: str) -> np.ndarray:
    try:
        i, j = PLANES[plane]
    except KeyError:
        raise ValueError(f"plane must be one of {sorted(PLANES)}") from None
    return h[:, [i, j]]


@dataclass(frozen=True)
class RasterSpec:
    width: int = 512
    height: int = 512
    plane: str = "hx-hy"
    window: tuple[float, float, float, float] | None = None  # xmin, xmax, ymin, ymax
    point_radius: int = 0

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("raster must be at least 16x16")
        if self.plane not in PLANES:
            raise ValueError(f"plane must be one of {sorted(PLANES)}")
        if self.point_radius < 0:
            raise ValueError("point_radius must be >= 0")


def auto_window(pts: np.ndarray, margin: float = 0.05) -> tuple[float, float, float, float]:
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = hi - lo
    pad = np.where(span > 0, margin * span, 0.5)
    return float(lo[0] - pad[0]), float(hi[0] + pad[0]), float(lo[1] - pad[1]), float(hi[1] + pad[1])


def render_ppm(points: np.ndarray, spec: RasterSpec = RasterSpec()) -> bytes:
    """Binary PPM: white background, black points; y grows upwards."""
    w, h = spec.width, spec.height
    img = np.full((h, w), 255, dtype=np.uint8)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    pts = pts[np.isfinite(pts).all(axis=1)]
    if not len(pts):
        warnings.warn("no points to render; writing a blank image", stacklevel=2)
    else:
        x0, x1, y0, y1 = spec.window or auto_window(pts)
        px = np.floor((pts[:, 0] - x0) / (x1 - x0) * w).astype(np.int64)
        py = np.floor((y1 - pts[:, 1]) / (y1 - y0) * h).astype(np.int64)
        r = spec.point_radius
        offs = [(dx, dy) for dx in range(-r, r + 1) for dy in range(-r, r + 1) if dx * dx + dy * dy <= r * r]
        for dx, dy in offs:
            qx, qy = px + dx, py + dy
            ok = (qx >= 0) & (qx < w) & (qy >= 0) & (qy < h)
            img[qy[ok], qx[ok]] = 0
    rgb = np.repeat(img[:, :, None], 3, axis=2)
    return f"P6\n{w} {h}\n255\n".encode() + rgb.tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    """Inverse of :func:`render_ppm` for our own files: (h, w, 3) uint8."""
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError("not an 8-bit P6 image")
    w, h = map(int, dims.split())
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)


@dataclass(frozen=True)
class WriteResult:
    rows: int
    dropped: int  # points at the chart pole


def _points_of(cloud) -> np.ndarray:
    z = cloud.points if hasattr(cloud, "points") else cloud
    return np.asarray(z, dtype=complex).reshape(-1, 2)


def cloud_table(cloud) -> tuple[np.ndarray, int]:
    z = _points_of(cloud)
    hz, ok = heisenberg_array(z)
    zr = np.ascontiguousarray(z[ok]).view(np.float64).reshape(-1, 4)
    return np.concatenate([zr, hz], axis=1), int((~ok).sum())


def write_cloud(cloud, path: str | Path, fmt: str | None = None) -> WriteResult:
    """CSV (S^3 and Heisenberg columns, 17 significant digits) or ASCII PLY."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    table, dropped = cloud_table(cloud)
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(CSV_HEADER + "\n")
        np.savetxt(buf, table, fmt="%.17g", delimiter=",")
    elif fmt == "ply":
        buf.write(
            "ply\nformat ascii 1.0\n"
            f"element vertex {len(table)}\n"
            "property float x\nproperty float y\nproperty float z\nend_header\n"
        )
        np.savetxt(buf, table[:, 4:], fmt="%.9g", delimiter=" ")
    else:
        raise ValueError(f"unknown cloud format {fmt!r}")
    path.write_text(buf.getvalue())
    return WriteResult(len(table), dropped)


def read_cloud_csv(path: str | Path) -> np.ndarray:
    """S^3 points (N, 2) from a CSV written by :func:`write_cloud`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        body = fh.read()
    if not body.strip():
        return np.empty((0, 2), dtype=complex)
    data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    return data[:, 0:4:2] + 1j * data[:, 1:4:2]
