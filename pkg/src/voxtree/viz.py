"""Auto transfer functions, overlap previews and slice composites.

3D rendering is out of scope here: node previews are maximum-intensity
projections of per-voxel overlap counts, and bookmark visuals are 2D slice
composites. Every pixel of both has a direct brute-force recount, which keeps
the whole module testable.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy.ndimage import binary_erosion

from .volume import AXES, ScalarVolume, slice_extract

# red-yellow-blue diverging table, warm to cool, 11 entries
DIVERGING_PALETTE = np.array([
    (165, 0, 38), (215, 48, 39), (244, 109, 67), (253, 174, 97),
    (254, 224, 144), (255, 255, 191), (224, 243, 248), (171, 217, 233),
    (116, 173, 209), (69, 117, 180), (49, 54, 149),
], dtype=np.float64)

OVERLAP_LOW = np.array((0.0, 0.0, 255.0))      # count 1
OVERLAP_HIGH = np.array((255.0, 165.0, 0.0))   # max count

OPACITY_FLOOR = 0.05
OPACITY_CEIL = 0.8

RENDER_MODES = ("flat", "tf1d", "surface-outline")


@dataclass
class Polyline1D:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=np.float64)
        self.ys = np.asarray(self.ys, dtype=np.float64)
        if self.xs.shape != self.ys.shape or self.xs.ndim != 1:
            raise ValueError("polyline xs and ys must be 1D and equally long")
        if len(self.xs) > 1 and not np.all(np.diff(self.xs) > 0):
            raise ValueError("polyline x values must be strictly increasing")
        if np.any(self.ys < 0):
            raise ValueError("polyline y values must be >= 0")

    def __len__(self):
        return len(self.xs)


@dataclass
class TransferFunction1D:
    control_points: list               # (scalar, (r, g, b), opacity)
    domain: tuple[float, float]

    def __post_init__(self):
        if len(self.control_points) < 2:
            raise ValueError("a transfer function needs at least 2 control points")
        scalars = [p[0] for p in self.control_points]
        if not all(a < b for a, b in zip(scalars, scalars[1:])):
            raise ValueError("control point scalars must be strictly increasing")
        for _, _, opacity in self.control_points:
            if not 0 <= opacity <= 1:
                raise ValueError("opacity must lie in [0, 1]")

    def evaluate(self, values: np.ndarray):
        """Piecewise-linear color and opacity; clamped outside the domain."""
        values = np.asarray(values, dtype=np.float64)
        xs = np.array([p[0] for p in self.control_points])
        cols = np.array([p[1] for p in self.control_points], dtype=np.float64)
        ops = np.array([p[2] for p in self.control_points])
        rgb = np.stack([np.interp(values, xs, cols[:, c]) for c in range(3)], axis=-1)
        return rgb, np.interp(values, xs, ops)

    def to_dict(self) -> dict:
        return {
            "domain": [float(self.domain[0]), float(self.domain[1])],
            "control_points": [
                {"scalar": float(s), "color": [int(c) for c in col],
                 "opacity": float(o)}
                for s, col, o in self.control_points
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransferFunction1D":
        pts = [(p["scalar"], tuple(p["color"]), p["opacity"])
               for p in d["control_points"]]
        return cls(control_points=pts, domain=tuple(d["domain"]))


@dataclass
class Bookmark:
    id: int
    name: str
    selections: list = field(default_factory=list)   # (instance_id, [region ids])
    render_mode: str = "flat"
    color: tuple = (255, 0, 0)
    opacity: float = 1.0
    transfer_function: TransferFunction1D | None = None
    supervoxel_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))

    def __post_init__(self):
        if self.render_mode not in RENDER_MODES:
            raise ValueError(f"render_mode must be one of {RENDER_MODES}")
        self.supervoxel_ids = np.asarray(self.supervoxel_ids, dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "selections": [[inst, list(regions)] for inst, regions in self.selections],
            "render_mode": self.render_mode,
            "color": [int(c) for c in self.color],
            "opacity": float(self.opacity),
            "transfer_function": (self.transfer_function.to_dict()
                                  if self.transfer_function else None),
            "supervoxel_ids": self.supervoxel_ids.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Bookmark":
        tf = d.get("transfer_function")
        return cls(
            id=int(d["id"]),
            name=d.get("name", ""),
            selections=[(s[0], list(s[1])) for s in d.get("selections", [])],
            render_mode=d.get("render_mode", "flat"),
            color=tuple(d.get("color", (255, 0, 0))),
            opacity=float(d.get("opacity", 1.0)),
            transfer_function=TransferFunction1D.from_dict(tf) if tf else None,
            supervoxel_ids=np.array(d.get("supervoxel_ids", []), dtype=np.int64),
        )


def _run_lengths(ys) -> list:
    """RLE of equal consecutive values: (start, end_exclusive, value)."""
    runs = []
    start = 0
    for i in range(1, len(ys) + 1):
        if i == len(ys) or ys[i] != ys[start]:
            runs.append((start, i, ys[start]))
            start = i
    return runs


def _min_cancellable_pair(ys, threshold):
    """Adjacent interior extrema pair with the smallest persistence below
    threshold, leftmost on ties. Returns sample index ranges or None."""
    runs = _run_lengths(ys)
    R = len(runs)
    if R < 4:
        # at most one interior extremum; nothing can be cancelled
        return None
    chain = [0]
    for j in range(1, R - 1):
        d1 = runs[j][2] - runs[j - 1][2]
        d2 = runs[j][2] - runs[j + 1][2]
        if (d1 > 0 and d2 > 0) or (d1 < 0 and d2 < 0):
            chain.append(j)
    chain.append(R - 1)
    best = None
    for t in range(len(chain) - 1):
        i, j = chain[t], chain[t + 1]
        if i == 0 or j == R - 1:
            continue
        p = abs(runs[i][2] - runs[j][2])
        if p < threshold and (best is None or p < best[0]):
            best = (p, runs[i], runs[j])
    if best is None:
        return None
    return best[1], best[2]


def persistence_simplify(curve: Polyline1D, threshold: float) -> Polyline1D:
    """Cancel extrema pairs with persistence below threshold, smallest first.

    Cancellation removes both extremal sample runs and re-links the
    neighbours; endpoints are never removed, monotone curves pass through
    unchanged, and the result is a fixpoint.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    xs = list(curve.xs)
    ys = list(curve.ys)
    while True:
        pair = _min_cancellable_pair(ys, threshold)
        if pair is None:
            break
        (s1, e1, _), (s2, e2, _) = pair
        keep = [i for i in range(len(ys)) if not (s1 <= i < e1 or s2 <= i < e2)]
        xs = [xs[i] for i in keep]
        ys = [ys[i] for i in keep]
    return Polyline1D(np.array(xs), np.array(ys))


def _sample_palette(positions: np.ndarray, palette_size: int) -> np.ndarray:
    """Colors at positions in [0, 1] from the diverging table resampled to
    palette_size entries."""
    base = np.linspace(0.0, 1.0, len(DIVERGING_PALETTE))
    levels = np.linspace(0.0, 1.0, palette_size)
    table = np.stack(
        [np.interp(levels, base, DIVERGING_PALETTE[:, c]) for c in range(3)], axis=1
    )
    idx = np.clip(np.round(positions * (palette_size - 1)).astype(int), 0,
                  palette_size - 1)
    return table[idx]


def auto_transfer_function(vol: ScalarVolume, footprint, labeling,
                           palette_size: int = 11,
                           persistence_fraction: float = 0.05) -> TransferFunction1D:
    """Initial transfer function for a feature: histogram of the footprint's
    voxels, persistence-simplified, colored along a diverging palette."""
    footprint = np.asarray(footprint, dtype=np.int64)
    if footprint.size == 0:
        raise ValueError("footprint must be non-empty")
    mask = np.isin(labeling.labels, footprint)
    values = vol.data[mask].astype(np.float64)
    vmin, vmax = float(values.min()), float(values.max())
    if vmax == vmin:
        colors = _sample_palette(np.array([0.0, 1.0]), palette_size)
        pts = [
            (vmin - 0.5, tuple(int(c) for c in colors[0]), OPACITY_CEIL),
            (vmin + 0.5, tuple(int(c) for c in colors[1]), OPACITY_CEIL),
        ]
        return TransferFunction1D(control_points=pts, domain=(vmin - 0.5, vmin + 0.5))

    counts, edges = np.histogram(values, bins=64, range=(vmin, vmax))
    centers = (edges[:-1] + edges[1:]) / 2.0
    poly = Polyline1D(centers, counts.astype(np.float64))
    simplified = persistence_simplify(poly, persistence_fraction * counts.max())

    ymax = simplified.ys.max()
    opacities = OPACITY_FLOOR + (simplified.ys / ymax) * (OPACITY_CEIL - OPACITY_FLOOR)
    n = len(simplified)
    positions = np.linspace(0.0, 1.0, n) if n > 1 else np.array([0.0])
    colors = _sample_palette(positions, palette_size)
    pts = [
        (float(x), tuple(int(round(c)) for c in col), float(o))
        for x, col, o in zip(simplified.xs, colors, opacities)
    ]
    return TransferFunction1D(control_points=pts, domain=(vmin, vmax))


def _slice3(arr3: np.ndarray, axis: str, index: int) -> np.ndarray:
    if axis == "z":
        return arr3[index, :, :]
    if axis == "y":
        return arr3[:, index, :]
    return arr3[:, :, index]


def render_overlap_preview(node, labeling, axis: str = "z") -> np.ndarray:
    """MIP of per-voxel overlap counts, blue (1) to orange (max), black
    background. Returns an (H, W, 3) uint8 array."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    lut = np.zeros(labeling.count, dtype=np.float64)
    lut[node.footprint] = node.overlap_counts
    counts3 = lut[labeling.labels].reshape(labeling.as_3d().shape)
    mip = counts3.max(axis={"z": 0, "y": 1, "x": 2}[axis])
    maxc = float(node.overlap_counts.max())
    frac = np.zeros_like(mip)
    covered = mip >= 1
    if maxc > 1:
        frac[covered] = (mip[covered] - 1.0) / (maxc - 1.0)
    rgb = OVERLAP_LOW[None, None, :] + frac[..., None] * (OVERLAP_HIGH - OVERLAP_LOW)
    rgb[~covered] = 0.0
    return np.round(rgb).astype(np.uint8)


def render_composite_slice(vol: ScalarVolume, labeling, bookmarks, axis: str,
                           index: int, background_window) -> np.ndarray:
    """Windowed grayscale slice with bookmark overlays, later over earlier."""
    lo, hi = background_window
    if hi <= lo:
        raise ValueError("background_window must satisfy lo < hi")
    sl = slice_extract(vol, axis, index)
    gray = np.clip((sl - lo) / (hi - lo), 0.0, 1.0) * 255.0
    img = np.repeat(gray[..., None], 3, axis=-1)
    lab_sl = _slice3(labeling.as_3d(), axis, index)

    for bm in bookmarks:
        mask = np.isin(lab_sl, bm.supervoxel_ids)
        if bm.render_mode == "surface-outline":
            mask = mask & ~binary_erosion(mask)
        if not mask.any():
            continue
        if bm.render_mode == "tf1d" and bm.transfer_function is not None:
            rgb, alpha = bm.transfer_function.evaluate(sl[mask])
            img[mask] = (1.0 - alpha[:, None]) * img[mask] + alpha[:, None] * rgb
        else:
            color = np.asarray(bm.color, dtype=np.float64)
            a = float(bm.opacity)
            img[mask] = (1.0 - a) * img[mask] + a * color
    return np.round(np.clip(img, 0, 255)).astype(np.uint8)


def encode_png(rgb: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def window_to_u8(sl: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi <= lo:
        raise ValueError("window must satisfy lo < hi")
    return np.round(np.clip((sl - lo) / (hi - lo), 0.0, 1.0) * 255.0).astype(np.uint8)
