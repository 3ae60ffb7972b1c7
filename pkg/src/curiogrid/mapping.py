"""Bayesian belief maps: the IR occupancy grid and the camera object map.

Both maps accumulate evidence as log odds against a uniform 0.5 prior, which
realizes the standard recursive Bayesian filter: fusing an observation with
inverse-model probability p adds log(p / (1 - p)) to the cell. Saturation is
applied when converting back to probability, so the accumulated evidence is
order-invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import numpy as np

from .sensor import CameraObservation, IrScan
from .world import Cell, grid_ray

LOG_ODDS_CAP = 20.0
_EV_MIN = 1.0 / (1.0 + math.exp(LOG_ODDS_CAP))
_EV_MAX = 1.0 - _EV_MIN


class Label(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


@dataclass(frozen=True)
class MappingConfig:
    """Inverse sensor model constants and label thresholds.

    p_hit / p_miss are the IR occupied/free evidence probabilities; p_miss_cam
    is the camera miss evidence for cells swept without a detection. Object
    probabilities are classified free below lambda1 and pass through above
    lambda2, with everything between snapped back to the 0.5 unknown prior.
    """

    p_hit: float = 0.7
    p_miss: float = 0.35
    p_miss_cam: float = 0.3
    p_free_max: float = 0.35
    p_occ_min: float = 0.65
    lambda1: float = 0.10
    lambda2: float = 0.95

    def __post_init__(self):
        for name in ("p_hit", "p_miss", "p_miss_cam", "p_free_max", "p_occ_min",
                     "lambda1", "lambda2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")
        if self.lambda1 >= self.lambda2:
            raise ValueError("lambda1 must be below lambda2")
        if self.p_free_max > self.p_occ_min:
            raise ValueError("p_free_max must not exceed p_occ_min")


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def probabilities_from_log_odds(log_odds: np.ndarray) -> np.ndarray:
    clipped = np.clip(log_odds, -LOG_ODDS_CAP, LOG_ODDS_CAP)
    return 1.0 / (1.0 + np.exp(-clipped))


def classify_object_probabilities(p: np.ndarray, lambda1: float, lambda2: float) -> np.ndarray:
    """Snap raw object probabilities into the free / unknown / pass-through view."""
    out = np.asarray(p, dtype=float).copy()
    out[out < lambda1] = 0.0
    out[(out >= lambda1) & (out <= lambda2)] = 0.5
    return out


class OccupancyMap:
    """Free/occupied/unknown belief over the lattice, built from IR scans."""

    def __init__(self, width: int, height: int, cell_size: float,
                 cfg: MappingConfig = MappingConfig()):
        self.width = width
        self.height = height
        self.cell_size = cell_size
        self.cfg = cfg
        self.log_odds = np.zeros((height, width), dtype=float)

    def _beam_cells(self, ox: float, oy: float, angle: float,
                    length: float) -> tuple[list[Cell], Optional[Cell]]:
        """Cells a beam of the given length passes through.

        Returns (passed, end): passed are cells entered strictly before
        `length`; end is the cell entered at the measured endpoint itself
        (None when the beam ends mid-cell or outside the lattice).
        """
        tol = 1e-9
        passed: list[Cell] = []
        end: Optional[Cell] = None
        for cx, cy, t in grid_ray(ox, oy, angle, self.cell_size):
            if t > length + tol:
                break
            if not (0 <= cx < self.width and 0 <= cy < self.height):
                break
            if t >= length - tol:
                end = (cx, cy)
                break
            passed.append((cx, cy))
        return passed, end

    def integrate_scan(self, scan: IrScan) -> None:
        """Fuse one IR scan; each cell receives at most one evidence bump."""
        free: set[Cell] = set()
        hits: set[Cell] = set()
        for beam in scan.beams:
            passed, end = self._beam_cells(scan.origin.x, scan.origin.y,
                                           beam.angle, beam.distance)
            free.update(passed)
            if beam.hit and end is not None:
                hits.add(end)
        free -= hits
        lo_miss = logit(self.cfg.p_miss)
        lo_hit = logit(self.cfg.p_hit)
        for cx, cy in free:
            self.log_odds[cy, cx] += lo_miss
        for cx, cy in hits:
            self.log_odds[cy, cx] += lo_hit

    def probabilities(self) -> np.ndarray:
        return probabilities_from_log_odds(self.log_odds)

    def classify(self) -> np.ndarray:
        """Label array: FREE below p_free_max, OCCUPIED above p_occ_min, else UNKNOWN."""
        p = self.probabilities()
        out = np.full(p.shape, Label.UNKNOWN, dtype=np.int8)
        out[p < self.cfg.p_free_max] = Label.FREE
        out[p > self.cfg.p_occ_min] = Label.OCCUPIED
        return out

    def free_mask(self) -> np.ndarray:
        return self.probabilities() < self.cfg.p_free_max

    def copy(self) -> "OccupancyMap":
        dup = OccupancyMap(self.width, self.height, self.cell_size, self.cfg)
        dup.log_odds = self.log_odds.copy()
        return dup


class ObjectMap:
    """Per-cell probability that the target object occupies the cell."""

    def __init__(self, width: int, height: int, cell_size: float,
                 cfg: MappingConfig = MappingConfig()):
        self.width = width
        self.height = height
        self.cell_size = cell_size
        self.cfg = cfg
        self.log_odds = np.zeros((height, width), dtype=float)

    def integrate_observation(self, obs: CameraObservation) -> None:
        """Fuse one camera sweep.

        Cells seen free without a detection accumulate miss evidence; a
        detected cell fuses the detection confidence as evidence. Blocked
        cells carry no object evidence either way.
        """
        det = obs.detection
        det_cell = det.cell if det is not None else None
        lo_miss = logit(self.cfg.p_miss_cam)
        for cell in obs.seen_free:
            if cell != det_cell:
                self.log_odds[cell[1], cell[0]] += lo_miss
        if det is not None:
            ev = min(max(det.conf, _EV_MIN), _EV_MAX)
            self.log_odds[det_cell[1], det_cell[0]] += logit(ev)

    def raw_probabilities(self) -> np.ndarray:
        return probabilities_from_log_odds(self.log_odds)

    def classified(self) -> np.ndarray:
        """The free / unknown / pass-through view consumed by curiosity scoring."""
        return classify_object_probabilities(self.raw_probabilities(),
                                             self.cfg.lambda1, self.cfg.lambda2)

    def copy(self) -> "ObjectMap":
        dup = ObjectMap(self.width, self.height, self.cell_size, self.cfg)
        dup.log_odds = self.log_odds.copy()
        return dup


def to_pgm(values: np.ndarray) -> bytes:
    """Serialize probabilities as binary PGM (P5), byte = round(p * 255)."""
    arr = np.asarray(values, dtype=float)
    quantized = np.floor(np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    height, width = arr.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + quantized.tobytes()


def from_pgm(data: bytes) -> np.ndarray:
    """Parse a binary PGM produced by to_pgm back into byte values."""
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5":
        raise ValueError("not a P5 PGM produced by to_pgm")
    width, height = (int(v) for v in parts[1].split())
    if parts[2] != b"255":
        raise ValueError("unsupported maxval")
    raster = np.frombuffer(parts[3], dtype=np.uint8, count=width * height)
    return raster.reshape((height, width))


def quantize(values: np.ndarray) -> np.ndarray:
    """The byte quantization shared by PGM output and ASCII glyph mapping."""
    return np.floor(np.clip(np.asarray(values, dtype=float), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def occupancy_glyphs(byte_values: np.ndarray, cfg: MappingConfig) -> str:
    """ASCII view of occupancy bytes: '.' free, '#' occupied, '?' unknown."""
    p = byte_values.astype(float) / 255.0
    rows = []
    for row in range(p.shape[0]):
        chars = []
        for col in range(p.shape[1]):
            v = p[row, col]
            if v < cfg.p_free_max:
                chars.append(".")
            elif v > cfg.p_occ_min:
                chars.append("#")
            else:
                chars.append("?")
        rows.append("".join(chars))
    return "\n".join(rows) + "\n"


def object_glyphs(byte_values: np.ndarray) -> str:
    """ASCII view of classified object bytes: '.' free, '?' unknown, '*' object."""
    rows = []
    for row in range(byte_values.shape[0]):
        chars = []
        for col in range(byte_values.shape[1]):
            b = int(byte_values[row, col])
            if b < 128:
                chars.append(".")
            elif b == 128:
                chars.append("?")
            else:
                chars.append("*")
        rows.append("".join(chars))
    return "\n".join(rows) + "\n"
