"""The two image effects: Steerable (region steering) and Chemical (strokes).

Steerable: encode the source and target regions (colorsvd), train controls
that steer one encoding into the other (control), then evolve the paste
region's own encoding to the requested time t and decode it back into the
paste geometry.  Chemical: resample a stroke into disk samples, average each
disk's hue/lightness onto a qubit direction, push groups of four qubits
through a window of recorded VQE circuits, and write the evolved angles back.

Pixels outside the paste geometry / stroke disks are never touched.  Region,
stroke and parameter JSON shapes parsed here are the single schema shared by
the CLI and the HTTP service.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image

from . import control as ctl
from .colorsvd import RegionTooSmallError, SvdEncoding, decode, encode
from .statevec import Statevector, apply_rotation, reduced_bloch
from .vqe import CircuitFamily, DuccAnsatz

MIN_REGION_PIXELS = 4
AZIMUTH_EPS = 1e-9  # below this squared transverse norm the hue is undefined


class RegionError(ValueError):
    """Invalid or degenerate region geometry."""


class SelfIntersectingPolygonError(RegionError):
    """Lasso polygons must not self-intersect."""


class SchemaError(ValueError):
    """A shared-schema JSON document is malformed; ``field`` names the offender."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"field {field_name!r}: {message}")
        self.field = field_name


# ---------------------------------------------------------------------------
# Canvas
# ---------------------------------------------------------------------------


@dataclass
class CanvasImage:
    """RGBA raster, row-major uint8 of shape (height, width, 4)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 4 or arr.dtype != np.uint8:
            raise ValueError("canvas needs a (h, w, 4) uint8 array")
        self.pixels = arr

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def copy(self) -> "CanvasImage":
        return CanvasImage(self.pixels.copy())

    @classmethod
    def from_png(cls, data: bytes) -> "CanvasImage":
        with Image.open(io.BytesIO(data)) as img:
            return cls(np.asarray(img.convert("RGBA"), dtype=np.uint8).copy())

    @classmethod
    def open(cls, path) -> "CanvasImage":
        with open(path, "rb") as fh:
            return cls.from_png(fh.read())

    def to_png(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.pixels, mode="RGBA").save(buf, format="PNG")
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_png())


# ---------------------------------------------------------------------------
# Regions and strokes
# ---------------------------------------------------------------------------


def _segments_properly_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        val = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(val) < 1e-12 else (1 if val > 0 else -1)

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


@dataclass(frozen=True)
class Region:
    """Lasso polygon, circle, or point (used for paste placement)."""

    kind: str  # "lasso-polygon" | "circle" | "point"
    vertices: tuple[tuple[float, float], ...] = ()
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    point: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.kind == "lasso-polygon":
            if len(self.vertices) < 3:
                raise RegionError("lasso polygon needs at least 3 vertices")
            edges = list(self.vertices)
            k = len(edges)
            for i in range(k):
                a1, a2 = edges[i], edges[(i + 1) % k]
                for j in range(i + 1, k):
                    if j == i or (j + 1) % k == i or (i + 1) % k == j:
                        continue  # adjacent edges share an endpoint
                    b1, b2 = edges[j], edges[(j + 1) % k]
                    if _segments_properly_intersect(a1, a2, b1, b2):
                        raise SelfIntersectingPolygonError(
                            f"edges {i} and {j} of the lasso polygon cross"
                        )
        elif self.kind == "circle":
            if self.radius <= 0:
                raise RegionError("circle radius must be positive")
        elif self.kind != "point":
            raise RegionError(f"unknown region kind {self.kind!r}")

    @classmethod
    def lasso(cls, vertices) -> "Region":
        return cls("lasso-polygon", vertices=tuple((float(x), float(y)) for x, y in vertices))

    @classmethod
    def circle(cls, center, radius) -> "Region":
        return cls("circle", center=(float(center[0]), float(center[1])), radius=float(radius))

    @classmethod
    def at_point(cls, xy) -> "Region":
        return cls("point", point=(float(xy[0]), float(xy[1])))

    def mask(self, width: int, height: int) -> np.ndarray:
        """Boolean membership of pixel centers; point regions have no area."""
        if self.kind == "point":
            return np.zeros((height, width), dtype=bool)
        xs = np.arange(width) + 0.5
        ys = np.arange(height) + 0.5
        if self.kind == "circle":
            cx, cy = self.center
            return (xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2 <= self.radius**2
        v = np.asarray(self.vertices, dtype=float)
        x1, y1 = v[:, 0], v[:, 1]
        x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
        mask = np.zeros((height, width), dtype=bool)
        for row, yc in enumerate(ys):
            crossing = (y1 <= yc) != (y2 <= yc)
            if not crossing.any():
                continue
            xc = x1[crossing] + (yc - y1[crossing]) * (x2[crossing] - x1[crossing]) / (
                y2[crossing] - y1[crossing]
            )
            mask[row] = (xs[None, :] < xc[:, None]).sum(axis=0) % 2 == 1
        return mask

    def pixel_coords(self, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
        """(rows, cols) of member pixels in scan order."""
        return np.nonzero(self.mask(width, height))

    def barycenter(self, width: int, height: int) -> tuple[int, int]:
        """Integer-rounded centroid (col, row) of the rasterized region."""
        rows, cols = self.pixel_coords(width, height)
        if rows.size == 0:
            raise RegionError("region covers no pixels")
        return int(round(cols.mean())), int(round(rows.mean()))


@dataclass(frozen=True)
class Stroke:
    """Polyline with a thickness radius, both in pixels."""

    points: tuple[tuple[float, float], ...]
    radius: float

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise RegionError("a stroke needs at least 2 points")
        if self.radius < 1:
            raise RegionError("stroke radius must be >= 1 pixel")


# ---------------------------------------------------------------------------
# Shared JSON schemas (regions, strokes, effect parameters)
# ---------------------------------------------------------------------------


def _require_pair(doc, name) -> tuple[float, float]:
    value = doc.get(name)
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(c, (int, float)) for c in value)
    ):
        raise SchemaError(name, "expected [x, y]")
    return float(value[0]), float(value[1])


def parse_region(doc) -> Region:
    if not isinstance(doc, dict):
        raise SchemaError("region", "expected an object")
    kind = doc.get("kind")
    try:
        if kind == "lasso-polygon":
            vertices = doc.get("vertices")
            if not isinstance(vertices, list) or len(vertices) < 3:
                raise SchemaError("vertices", "expected a list of at least 3 [x, y] pairs")
            for v in vertices:
                if not isinstance(v, (list, tuple)) or len(v) != 2:
                    raise SchemaError("vertices", "entries must be [x, y] pairs")
            return Region.lasso(vertices)
        if kind == "circle":
            center = _require_pair(doc, "center")
            radius = doc.get("radius")
            if not isinstance(radius, (int, float)) or radius <= 0:
                raise SchemaError("radius", "expected a positive number")
            return Region.circle(center, radius)
        if kind == "point":
            return Region.at_point(_require_pair(doc, "point"))
    except RegionError as err:
        raise SchemaError("region", str(err)) from err
    raise SchemaError("kind", f"unknown region kind {kind!r}")


def region_to_dict(region: Region) -> dict:
    if region.kind == "lasso-polygon":
        return {"kind": region.kind, "vertices": [list(v) for v in region.vertices]}
    if region.kind == "circle":
        return {"kind": region.kind, "center": list(region.center), "radius": region.radius}
    return {"kind": region.kind, "point": list(region.point)}


def parse_stroke(doc, radius_override: float | None = None) -> Stroke:
    if not isinstance(doc, dict):
        raise SchemaError("stroke", "expected an object")
    points = doc.get("points")
    if not isinstance(points, list) or len(points) < 2:
        raise SchemaError("points", "expected a list of at least 2 [x, y] pairs")
    for p in points:
        if not isinstance(p, (list, tuple)) or len(p) != 2:
            raise SchemaError("points", "entries must be [x, y] pairs")
    radius = radius_override if radius_override is not None else doc.get("radius")
    if not isinstance(radius, (int, float)) or radius < 1:
        raise SchemaError("radius", "expected a number >= 1")
    try:
        return Stroke(tuple((float(x), float(y)) for x, y in points), float(radius))
    except RegionError as err:
        raise SchemaError("stroke", str(err)) from err


@dataclass(frozen=True)
class SteerableParams:
    t: float
    timestep: int = 25
    controls: int = 2
    source_equals_paste: bool = False
    show_source_target: bool = False
    boundary_color: tuple[int, int, int, int] = (255, 0, 0, 255)
    boundary_thickness: int = 1

    def __post_init__(self) -> None:
        if self.t < 0:
            raise SchemaError("t", "must be >= 0")
        if self.timestep < 1:
            raise SchemaError("timestep", "must be >= 1")
        if self.controls not in (2, 3, 4):
            raise SchemaError("controls", "must be 2, 3 or 4")
        if self.boundary_thickness < 1:
            raise SchemaError("boundary_thickness", "must be >= 1")


@dataclass(frozen=True)
class ChemicalParams:
    bond_distance: float
    repetitions: int = 0
    radius: float | None = None  # overrides the stroke radius when set

    def __post_init__(self) -> None:
        if not 0.725 <= self.bond_distance <= 2.5:
            raise SchemaError("bond_distance", "must lie in [0.725, 2.5]")
        if not 0 <= self.repetitions <= 100:
            raise SchemaError("repetitions", "must lie in [0, 100]")
        if self.radius is not None and self.radius < 1:
            raise SchemaError("radius", "must be >= 1")


def parse_steerable_params(doc) -> SteerableParams:
    if not isinstance(doc, dict):
        raise SchemaError("params", "expected an object")
    if "t" not in doc or not isinstance(doc["t"], (int, float)):
        raise SchemaError("t", "expected a number")
    color = doc.get("boundary_color", [255, 0, 0, 255])
    if not isinstance(color, (list, tuple)) or len(color) != 4:
        raise SchemaError("boundary_color", "expected [r, g, b, a]")

    def _int(name, default):
        value = doc.get(name, default)
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaError(name, "expected an integer")
        return value

    def _bool(name, default):
        value = doc.get(name, default)
        if not isinstance(value, bool):
            raise SchemaError(name, "expected a boolean")
        return value

    return SteerableParams(
        t=float(doc["t"]),
        timestep=_int("timestep", 25),
        controls=_int("controls", 2),
        source_equals_paste=_bool("source_equals_paste", False),
        show_source_target=_bool("show_source_target", False),
        boundary_color=tuple(int(c) for c in color),
        boundary_thickness=_int("boundary_thickness", 1),
    )


def parse_chemical_params(doc) -> ChemicalParams:
    if not isinstance(doc, dict):
        raise SchemaError("params", "expected an object")
    if "bond_distance" not in doc or not isinstance(doc["bond_distance"], (int, float)):
        raise SchemaError("bond_distance", "expected a number")
    reps = doc.get("repetitions", 0)
    if not isinstance(reps, int) or isinstance(reps, bool):
        raise SchemaError("repetitions", "expected an integer")
    radius = doc.get("radius")
    if radius is not None and not isinstance(radius, (int, float)):
        raise SchemaError("radius", "expected a number")
    return ChemicalParams(
        bond_distance=float(doc["bond_distance"]),
        repetitions=reps,
        radius=None if radius is None else float(radius),
    )


# ---------------------------------------------------------------------------
# HSL color space (vectorized); hue in degrees, s/l in [0, 1]
# ---------------------------------------------------------------------------


def rgb_to_hsl(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rgb = np.asarray(rgb, dtype=float) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = np.max(rgb, axis=-1)
    minc = np.min(rgb, axis=-1)
    l = (maxc + minc) / 2.0
    d = maxc - minc
    chromatic = d > 1e-12
    s = np.zeros_like(l)
    denom = 1.0 - np.abs(2.0 * l - 1.0)
    np.divide(d, denom, out=s, where=chromatic & (denom > 1e-12))

    h = np.zeros_like(l)
    with np.errstate(invalid="ignore", divide="ignore"):
        h_r = np.mod((g - b) / d, 6.0)
        h_g = (b - r) / d + 2.0
        h_b = (r - g) / d + 4.0
    h = np.select(
        [chromatic & (maxc == r), chromatic & (maxc == g), chromatic & (maxc == b)],
        [h_r, h_g, h_b],
        default=0.0,
    )
    return 60.0 * h, np.clip(s, 0.0, 1.0), l


def hsl_to_rgb(h: np.ndarray, s: np.ndarray, l: np.ndarray) -> np.ndarray:
    h = np.mod(np.asarray(h, dtype=float), 360.0)
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    l = np.clip(np.asarray(l, dtype=float), 0.0, 1.0)
    c = (1.0 - np.abs(2.0 * l - 1.0)) * s
    hp = h / 60.0
    x = c * (1.0 - np.abs(np.mod(hp, 2.0) - 1.0))
    zero = np.zeros_like(c)
    sextant = np.floor(hp).astype(int) % 6
    r = np.select([sextant == k for k in range(6)], [c, x, zero, zero, x, c])
    g = np.select([sextant == k for k in range(6)], [x, c, c, x, zero, zero])
    b = np.select([sextant == k for k in range(6)], [zero, zero, x, c, c, x])
    m = l - c / 2.0
    rgb = np.stack([r + m, g + m, b + m], axis=-1)
    return np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Stroke aggregation (Chemical front half)
# ---------------------------------------------------------------------------


def _resample_polyline(points: np.ndarray, spacing: float) -> np.ndarray:
    """Points along the polyline at arclength 0, spacing, 2*spacing, ..."""
    deltas = np.diff(points, axis=0)
    seg_lens = np.hypot(deltas[:, 0], deltas[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_lens)])
    total = cum[-1]
    targets = np.arange(0.0, total + 1e-9, spacing)
    if targets.size == 0:
        targets = np.array([0.0])
    xs = np.interp(targets, cum, points[:, 0])
    ys = np.interp(targets, cum, points[:, 1])
    return np.column_stack([xs, ys])


def _disk_coords(center, radius, width, height):
    cx, cy = center
    x_lo = max(0, int(math.floor(cx - radius - 1)))
    x_hi = min(width, int(math.ceil(cx + radius + 1)))
    y_lo = max(0, int(math.floor(cy - radius - 1)))
    y_hi = min(height, int(math.ceil(cy + radius + 1)))
    if x_lo >= x_hi or y_lo >= y_hi:
        return np.array([], dtype=int), np.array([], dtype=int)
    xs = np.arange(x_lo, x_hi) + 0.5
    ys = np.arange(y_lo, y_hi) + 0.5
    inside = (xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2 <= radius**2
    rows, cols = np.nonzero(inside)
    return rows + y_lo, cols + x_lo


@dataclass(frozen=True)
class StrokeSample:
    center: tuple[float, float]
    phi: float  # circular-mean hue, radians in [0, 2pi)
    theta: float  # pi * (1 - mean lightness), in [0, pi]


def stroke_samples(image: CanvasImage, stroke: Stroke) -> list[StrokeSample]:
    """Disk samples along the stroke; empty-intersection samples are dropped."""
    centers = _resample_polyline(np.asarray(stroke.points, dtype=float), stroke.radius)
    samples: list[StrokeSample] = []
    for cx, cy in centers:
        rows, cols = _disk_coords((cx, cy), stroke.radius, image.width, image.height)
        if rows.size == 0:
            continue
        block = image.pixels[rows, cols].astype(float)
        hue, _, lightness = rgb_to_hsl(block[:, :3])
        angles = np.deg2rad(hue)
        vec = np.array([np.cos(angles).mean(), np.sin(angles).mean()])
        phi = 0.0 if np.hypot(*vec) < 1e-12 else float(np.mod(math.atan2(vec[1], vec[0]), 2 * math.pi))
        theta = math.pi * (1.0 - float(lightness.mean()))
        samples.append(StrokeSample((float(cx), float(cy)), phi, theta))
    return samples


def aggregate_stroke(image: CanvasImage, stroke: Stroke) -> list[tuple[float, float]]:
    """(phi, theta) angular encoding per resampled disk along the stroke."""
    return [(s.phi, s.theta) for s in stroke_samples(image, stroke)]


# ---------------------------------------------------------------------------
# Steerable effect
# ---------------------------------------------------------------------------


def _region_pixels(image: CanvasImage, region: Region, label: str):
    rows, cols = region.pixel_coords(image.width, image.height)
    if rows.size < MIN_REGION_PIXELS:
        raise RegionTooSmallError(
            f"{label} region covers {rows.size} pixels; at least {MIN_REGION_PIXELS} are needed"
        )
    return rows, cols


def _translated_coords(rows, cols, delta_col, delta_row, width, height):
    new_rows = rows + delta_row
    new_cols = cols + delta_col
    keep = (new_rows >= 0) & (new_rows < height) & (new_cols >= 0) & (new_cols < width)
    return new_rows[keep], new_cols[keep]


def draw_region_outline(pixels: np.ndarray, region: Region, color, thickness: int) -> None:
    """Stamp the region boundary onto the canvas in place."""
    height, width = pixels.shape[:2]
    if region.kind == "lasso-polygon":
        pts = list(region.vertices) + [region.vertices[0]]
        path = []
        for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
            steps = max(2, int(math.hypot(x2 - x1, y2 - y1) * 2))
            path.append(
                np.column_stack([np.linspace(x1, x2, steps), np.linspace(y1, y2, steps)])
            )
        outline = np.vstack(path)
    elif region.kind == "circle":
        cx, cy = region.center
        n = max(16, int(2 * math.pi * region.radius * 2))
        ang = np.linspace(0, 2 * math.pi, n)
        outline = np.column_stack([cx + region.radius * np.cos(ang), cy + region.radius * np.sin(ang)])
    else:
        outline = np.array([region.point])

    mask = np.zeros((height, width), dtype=bool)
    stamp_radius = max(0.71, thickness / 2.0)
    for x, y in outline:
        rows, cols = _disk_coords((x, y), stamp_radius, width, height)
        mask[rows, cols] = True
    pixels[mask] = np.array(color, dtype=np.uint8)


@dataclass(frozen=True)
class SteerableApplication:
    """Trained steering bound to a base canvas; re-evaluates at any t."""

    base: CanvasImage
    source: Region
    target: Region
    paste_rows: np.ndarray = field(repr=False)
    paste_cols: np.ndarray = field(repr=False)
    paste_encoding: SvdEncoding = field(repr=False)
    trained: ctl.TrainedSteering
    params: SteerableParams

    def evaluate(self, t: float) -> CanvasImage:
        evolved = ctl.propagate(
            self.trained.problem, self.trained.controller, float(t),
            initial=self.paste_encoding.state,
        )
        decoded = decode(self.paste_encoding, evolved)
        out = self.base.copy()
        out.pixels[self.paste_rows, self.paste_cols] = np.round(decoded).astype(np.uint8)
        if self.params.show_source_target:
            for region in (self.source, self.target):
                draw_region_outline(
                    out.pixels, region, self.params.boundary_color, self.params.boundary_thickness
                )
        return out


def prepare_steerable(
    image: CanvasImage,
    source: Region,
    target: Region,
    paste: Region | None,
    params: SteerableParams,
    train_config: ctl.TrainConfig = ctl.TrainConfig(),
    progress=None,
) -> SteerableApplication:
    """Train the steering and bind it to the paste geometry (no evaluation yet)."""
    src_rows, src_cols = _region_pixels(image, source, "source")
    tgt_rows, tgt_cols = _region_pixels(image, target, "target")

    if params.source_equals_paste or paste is None:
        paste_rows, paste_cols = src_rows, src_cols
    elif paste.kind == "point":
        bx, by = source.barycenter(image.width, image.height)
        px, py = paste.point
        paste_rows, paste_cols = _translated_coords(
            src_rows, src_cols, int(round(px)) - bx, int(round(py)) - by,
            image.width, image.height,
        )
        if paste_rows.size < MIN_REGION_PIXELS:
            raise RegionError("paste point places the source shape outside the canvas")
    else:
        paste_rows, paste_cols = _region_pixels(image, paste, "paste")

    n = params.controls
    enc_source = encode(image.pixels[src_rows, src_cols].astype(float), n)
    enc_target = encode(image.pixels[tgt_rows, tgt_cols].astype(float), n)
    problem = ctl.SteeringProblem(
        ctl.ControlSystem.build(n), enc_source.state, enc_target.state, n_steps=params.timestep
    )
    trained = ctl.train(problem, train_config, progress=progress)
    enc_paste = encode(image.pixels[paste_rows, paste_cols].astype(float), n)
    return SteerableApplication(
        image.copy(), source, target, paste_rows, paste_cols, enc_paste, trained, params
    )


def apply_steerable(
    image: CanvasImage,
    source: Region,
    target: Region,
    paste: Region | None,
    params: SteerableParams,
    train_config: ctl.TrainConfig = ctl.TrainConfig(),
) -> tuple[CanvasImage, ctl.TrainedSteering]:
    """Full effect at params.t; returns the new canvas and the trained steering."""
    app = prepare_steerable(image, source, target, paste, params, train_config)
    return app.evaluate(params.t), app.trained


# ---------------------------------------------------------------------------
# Chemical effect
# ---------------------------------------------------------------------------


def _encode_group(samples: list[StrokeSample]) -> Statevector:
    """Product state: qubit q carries R_Z(phi_q) R_Y(theta_q) |0> (R_Y first)."""
    n = len(samples)
    state = Statevector.zero(n)
    for q, sample in enumerate(samples):
        state = apply_rotation(state, "Y", q, sample.theta)
        state = apply_rotation(state, "Z", q, sample.phi)
    return state


def _paint_disk(pixels: np.ndarray, center, radius, hue_deg: float, lightness: float) -> None:
    rows, cols = _disk_coords(center, radius, pixels.shape[1], pixels.shape[0])
    if rows.size == 0:
        return
    block = pixels[rows, cols]
    _, s, _ = rgb_to_hsl(block[:, :3])
    rgb = hsl_to_rgb(np.full_like(s, hue_deg), s, np.full_like(s, lightness))
    pixels[rows, cols, :3] = rgb  # alpha untouched


def apply_chemical(
    image: CanvasImage,
    stroke: Stroke,
    params: ChemicalParams,
    family: CircuitFamily,
) -> CanvasImage:
    """Replay the family's circuits along the stroke, evolving disk colors.

    Samples are chunked into groups of family.n_qubits consecutive qubits;
    group j receives the circuit window eta_{idx(j)-R} .. eta_{idx(j)} with
    idx(j) = floor(j*M/G), so any stroke length replays the whole recorded
    trajectory and neighbouring groups share most of their window when
    repetitions > 0.  A trailing partial group is left unchanged.
    """
    if params.radius is not None and params.radius != stroke.radius:
        stroke = replace(stroke, radius=params.radius)
    samples = stroke_samples(image, stroke)
    n = family.n_qubits
    n_groups = len(samples) // n
    out = image.copy()
    if n_groups == 0:
        warnings.warn("stroke shorter than one qubit group; nothing to paint", stacklevel=2)
        return out

    ansatz = DuccAnsatz()
    m = family.size
    for j in range(n_groups):
        group = samples[j * n : (j + 1) * n]
        state = _encode_group(group)
        idx = (j * m) // n_groups
        for w in range(max(0, idx - params.repetitions), idx + 1):
            state = ansatz.apply(np.asarray(family.parameters[w]), state)
        for q, sample in enumerate(group):
            x, y, z = reduced_bloch(state, q)
            theta = math.acos(min(1.0, max(-1.0, z)))
            if x * x + y * y < AZIMUTH_EPS:
                phi = sample.phi  # azimuth undefined at the poles
            else:
                phi = math.atan2(y, x) % (2 * math.pi)
            _paint_disk(
                out.pixels, sample.center, stroke.radius,
                math.degrees(phi), 1.0 - theta / math.pi,
            )
    return out
