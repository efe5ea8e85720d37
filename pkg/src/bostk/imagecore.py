"""Image and displacement-field containers plus bit-exact file I/O.

Intensities live as normalized float64 in [0, 1]; quantization happens only
at the file boundary (8-bit PNG/PGM). Displacement fields hold float32
components so the Middlebury-style flow file round trip is the bitwise
identity.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

FLO_MAGIC = 202021.25  # little-endian float32, bytes spell "PIEH"

LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114


class ImageFormatError(ValueError):
    """Unsupported or corrupt image file."""


class FlowFormatError(ValueError):
    """Malformed flow file (bad magic, truncated payload, bad dims)."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class GrayImage:
    """2-D scalar intensity raster, values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"GrayImage needs a 2-D raster, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("GrayImage intensities must be finite")
        if a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("GrayImage intensities must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(a))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class RgbImage:
    """Row-major RGB raster, channel values in [0, 1], shape (h, w, 3)."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError(f"RgbImage needs shape (h, w, 3), got {a.shape}")
        if not np.all(np.isfinite(a)) or a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("RgbImage channels must be finite and in [0, 1]")
        object.__setattr__(self, "data", _freeze(a))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class DisplacementField:
    """Per-grid-point (u, v) displacement vectors in pixels.

    u is horizontal (+x right), v vertical (+y down), float32 components.
    ``grid_step`` is the stride between grid points in source-image pixels
    (1 for dense fields) and ``origin_x``/``origin_y`` locate grid point
    (0, 0) in source-image coordinates. ``valid`` flags usable vectors and
    ``peak`` carries correlation peak heights where the producer has them;
    both default to None (fully valid / not applicable).
    """

    u: np.ndarray
    v: np.ndarray
    grid_step: int = 1
    origin_x: int = 0
    origin_y: int = 0
    valid: np.ndarray | None = None
    peak: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float32)
        v = np.asarray(self.v, dtype=np.float32)
        if u.ndim != 2 or u.shape != v.shape:
            raise ValueError(f"u/v must be matching 2-D arrays, got {u.shape} vs {v.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("displacement components must be finite")
        if self.grid_step < 1:
            raise ValueError("grid_step must be >= 1")
        object.__setattr__(self, "u", _freeze(u))
        object.__setattr__(self, "v", _freeze(v))
        if self.valid is not None:
            m = np.asarray(self.valid, dtype=bool)
            if m.shape != u.shape:
                raise ValueError("valid mask shape must match u/v")
            object.__setattr__(self, "valid", _freeze(m))
        if self.peak is not None:
            p = np.asarray(self.peak, dtype=np.float64)
            if p.shape != u.shape:
                raise ValueError("peak array shape must match u/v")
            object.__setattr__(self, "peak", _freeze(p))

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def height(self) -> int:
        return self.u.shape[0]

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u.astype(np.float64), self.v.astype(np.float64))


# ---------------------------------------------------------------------------
# sampling


def bilinear(data: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear interpolation with clamp-to-edge, vectorized over coordinates.

    Exact at integer lattice points; coordinates outside the raster clamp to
    the nearest edge pixel.
    """
    h, w = data.shape[:2]
    xs = np.clip(np.asarray(xs, dtype=np.float64), 0.0, w - 1.0)
    ys = np.clip(np.asarray(ys, dtype=np.float64), 0.0, h - 1.0)
    x0 = np.minimum(np.floor(xs).astype(np.intp), w - 2) if w > 1 else np.zeros_like(xs, dtype=np.intp)
    y0 = np.minimum(np.floor(ys).astype(np.intp), h - 2) if h > 1 else np.zeros_like(ys, dtype=np.intp)
    fx = xs - x0
    fy = ys - y0
    p00 = data[y0, x0]
    p01 = data[y0, x0 + 1] if w > 1 else p00
    p10 = data[y0 + 1, x0] if h > 1 else p00
    p11 = data[y0 + 1, x0 + 1] if (w > 1 and h > 1) else p00
    top = p00 + (p01 - p00) * fx
    bot = p10 + (p11 - p10) * fx
    return top + (bot - top) * fy


def sample_bilinear(img: GrayImage, x: float, y: float) -> float:
    """Intensity at real-valued pixel coordinate (x, y), clamp-to-edge."""
    return float(bilinear(img.data, np.float64(x), np.float64(y)))


# ---------------------------------------------------------------------------
# image file I/O


def _to_gray(arr: np.ndarray) -> np.ndarray:
    if arr.ndim == 2:
        return arr
    return LUMA_R * arr[:, :, 0] + LUMA_G * arr[:, :, 1] + LUMA_B * arr[:, :, 2]


def _read_pgm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if raw[:2] != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval, separated by whitespace/comments
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{path}: corrupt PGM header")
        fields.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: corrupt PGM header") from exc
    if w < 1 or h < 1:
        raise ImageFormatError(f"{path}: non-positive PGM dimensions {w}x{h}")
    if maxval != 255:
        raise ImageFormatError(f"{path}: only maxval 255 PGM supported, got {maxval}")
    pixels = raw[pos : pos + w * h]
    if len(pixels) < w * h:
        raise ImageFormatError(f"{path}: truncated PGM payload")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w).astype(np.float64)


def load_image(path: str | Path) -> GrayImage:
    """Load an 8-bit grayscale/RGB PNG or binary PGM as a GrayImage.

    RGB collapses to luma (0.299 R + 0.587 G + 0.114 B); bytes scale to
    [0, 1] by division by 255.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"image file not found: {path}")
    if path.suffix.lower() == ".pgm":
        arr = _read_pgm(path)
    else:
        try:
            with Image.open(path) as im:
                if im.format != "PNG":
                    raise ImageFormatError(f"{path}: unsupported format {im.format!r} (PNG or PGM only)")
                if im.mode not in ("L", "RGB"):
                    raise ImageFormatError(f"{path}: unsupported PNG mode {im.mode!r} (8-bit gray or RGB only)")
                arr = np.asarray(im, dtype=np.float64)
        except ImageFormatError:
            raise
        except Exception as exc:
            raise ImageFormatError(f"{path}: cannot decode image ({exc})") from exc
        arr = _to_gray(arr)
    return GrayImage(arr / 255.0)


def _quantize_u8(a: np.ndarray) -> np.ndarray:
    # round-half-up so 0.5 -> 128, then clamp
    return np.clip(np.floor(a * 255.0 + 0.5), 0, 255).astype(np.uint8)


def save_image(img: GrayImage | RgbImage, path: str | Path) -> None:
    """Write an 8-bit PNG, or binary PGM when the path ends in .pgm."""
    path = Path(path)
    q = _quantize_u8(img.data)
    if path.suffix.lower() == ".pgm":
        if q.ndim != 2:
            raise ValueError("PGM output supports grayscale images only")
        with open(path, "wb") as fh:
            fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
            fh.write(q.tobytes())
        return
    mode = "L" if q.ndim == 2 else "RGB"
    Image.fromarray(q, mode=mode).save(path, format="PNG")


# ---------------------------------------------------------------------------
# flow file I/O (Middlebury-style .flo + sparse sidecar)


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta")


def write_flow(fld: DisplacementField, path: str | Path) -> None:
    """Write a little-endian .flo file; sparse fields get a text sidecar.

    Layout: float32 202021.25, int32 width, int32 height, then row-major
    interleaved (u, v) float32 pairs.
    """
    path = Path(path)
    h, w = fld.u.shape
    payload = np.empty((h, w, 2), dtype="<f4")
    payload[:, :, 0] = fld.u
    payload[:, :, 1] = fld.v
    with open(path, "wb") as fh:
        fh.write(struct.pack("<f", FLO_MAGIC))
        fh.write(struct.pack("<ii", w, h))
        fh.write(payload.tobytes())
    if fld.grid_step > 1 or fld.origin_x or fld.origin_y:
        _sidecar_path(path).write_text(
            f"grid_step={fld.grid_step}\norigin_x={fld.origin_x}\norigin_y={fld.origin_y}\n",
            encoding="utf-8",
        )


def read_flow(path: str | Path) -> DisplacementField:
    """Inverse of :func:`write_flow`; restores sidecar metadata if present."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 12:
        raise FlowFormatError(f"{path}: truncated flow header")
    (magic,) = struct.unpack_from("<f", raw, 0)
    if magic != FLO_MAGIC:
        raise FlowFormatError(f"{path}: bad magic number {magic!r} (expected {FLO_MAGIC})")
    w, h = struct.unpack_from("<ii", raw, 4)
    if w <= 0 or h <= 0:
        raise FlowFormatError(f"{path}: non-positive dimensions {w}x{h}")
    need = 12 + 8 * w * h
    if len(raw) < need:
        raise FlowFormatError(f"{path}: truncated payload ({len(raw)} bytes, need {need})")
    data = np.frombuffer(raw, dtype="<f4", count=2 * w * h, offset=12).reshape(h, w, 2)
    grid_step, ox, oy = 1, 0, 0
    sidecar = _sidecar_path(path)
    if sidecar.is_file():
        kv = {}
        for line in sidecar.read_text(encoding="utf-8").splitlines():
            if "=" in line:
                k, _, val = line.partition("=")
                kv[k.strip()] = int(val)
        grid_step = kv.get("grid_step", 1)
        ox = kv.get("origin_x", 0)
        oy = kv.get("origin_y", 0)
    return DisplacementField(u=data[:, :, 0], v=data[:, :, 1], grid_step=grid_step, origin_x=ox, origin_y=oy)
