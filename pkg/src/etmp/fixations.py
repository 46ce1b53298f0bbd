"""Fixation identification from raw gaze samples.

Each sample is taken to cover the interval up to the next sample's timestamp;
the last sample of a trace covers one nominal sample period (the median
inter-sample interval).  A fixation built from samples ``i..k`` therefore runs
from ``t[i]`` to the end of sample ``k``, so 30 samples at 10 ms last 300 ms.

Invalid samples terminate a candidate window; no gap interpolation is done.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Fixation, GazeSample, GazeTrace, first_order_violation


class TraceOrderError(ValueError):
    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"sample {index}: {message}")


@dataclass(frozen=True)
class IdtParams:
    dispersion_threshold_px: float = 60.0
    min_duration_ms: int = 100

    def __post_init__(self):
        if not (self.dispersion_threshold_px > 0 and self.min_duration_ms > 0):
            raise ValueError("dispersion threshold and minimum duration must be positive")


@dataclass(frozen=True)
class IvtParams:
    # ~30 deg/s at 65 cm from a 33-in 2560x1440 display
    velocity_threshold_px_per_s: float = 1200.0
    min_duration_ms: int = 100

    def __post_init__(self):
        if not (self.velocity_threshold_px_per_s > 0 and self.min_duration_ms > 0):
            raise ValueError("velocity threshold and minimum duration must be positive")


def pixels_per_degree(
    viewing_distance_cm: float = 65.0,
    diagonal_in: float = 33.0,
    resolution_px: tuple[int, int] = (2560, 1440),
) -> float:
    """Screen pixels subtended by one degree of visual angle at the screen centre."""
    w, h = resolution_px
    px_per_cm = math.hypot(w, h) / (diagonal_in * 2.54)
    return 2 * viewing_distance_cm * math.tan(math.radians(0.5)) * px_per_cm


def _as_trace(samples: GazeTrace | Sequence[GazeSample]) -> GazeTrace:
    if isinstance(samples, GazeTrace):
        return samples
    return GazeTrace.from_samples(samples)


def nominal_period_ms(timestamps: np.ndarray) -> int:
    step = np.diff(np.asarray(timestamps, dtype=np.int64))
    step = step[step > 0]
    return int(round(float(np.median(step)))) if len(step) else 0


def sample_ends(timestamps: np.ndarray) -> np.ndarray:
    t = np.asarray(timestamps, dtype=np.int64)
    if len(t) == 0:
        return t.copy()
    return np.append(t[1:], t[-1] + nominal_period_ms(t))


def _make_fixation(t, ends, x, y, i, k) -> Fixation:
    n = k - i + 1
    return Fixation(
        start_ms=t[i],
        end_ms=ends[k],
        centroid_x_px=math.fsum(x[i:k + 1]) / n,
        centroid_y_px=math.fsum(y[i:k + 1]) / n,
        first_sample=i,
        last_sample=k,
    )


def detect_fixations_idt(samples: GazeTrace | Sequence[GazeSample], params: IdtParams = IdtParams()) -> list[Fixation]:
    """Dispersion-threshold identification (I-DT).

    A window is opened over the fewest samples spanning ``min_duration_ms``;
    if its dispersion ``(max x - min x) + (max y - min y)`` is within the
    threshold it is grown sample by sample until the next sample would exceed
    it, and the grown window becomes a fixation.  Otherwise the window start
    advances by one sample.
    """
    trace = _as_trace(samples)
    bad = first_order_violation(trace.timestamp_ms)
    if bad is not None:
        raise TraceOrderError(bad, "timestamp earlier than the previous sample")
    n = len(trace)
    if n == 0:
        return []
    t = trace.timestamp_ms.tolist()
    ends = sample_ends(trace.timestamp_ms).tolist()
    x = trace.x_px.tolist()
    y = trace.y_px.tolist()
    v = trace.valid.tolist()
    thr = params.dispersion_threshold_px
    min_dur = params.min_duration_ms

    out = []
    i = 0
    j = 0
    while i < n:
        if not v[i]:
            i += 1
            continue
        # smallest window [i..j] reaching the minimum duration
        j = max(j, i)
        while j < n and v[j] and ends[j] - t[i] < min_dur:
            j += 1
        if j >= n:
            break
        if not v[j]:
            i = j + 1
            continue
        xs = x[i:j + 1]
        ys = y[i:j + 1]
        x_lo, x_hi, y_lo, y_hi = min(xs), max(xs), min(ys), max(ys)
        if (x_hi - x_lo) + (y_hi - y_lo) > thr:
            i += 1
            continue
        k = j + 1
        while k < n and v[k]:
            nx_lo, nx_hi = min(x_lo, x[k]), max(x_hi, x[k])
            ny_lo, ny_hi = min(y_lo, y[k]), max(y_hi, y[k])
            if (nx_hi - nx_lo) + (ny_hi - ny_lo) > thr:
                break
            x_lo, x_hi, y_lo, y_hi = nx_lo, nx_hi, ny_lo, ny_hi
            k += 1
        out.append(_make_fixation(t, ends, x, y, i, k - 1))
        i = k
    return out


def detect_fixations_ivt(samples: GazeTrace | Sequence[GazeSample], params: IvtParams = IvtParams()) -> list[Fixation]:
    """Velocity-threshold identification (I-VT).

    Consecutive valid samples joined by a point-to-point speed below the
    threshold are merged into runs; runs lasting ``min_duration_ms`` or more
    become fixations.
    """
    trace = _as_trace(samples)
    bad = first_order_violation(trace.timestamp_ms, strict=True)
    if bad is not None:
        raise TraceOrderError(bad, "timestamp not later than the previous sample (velocity undefined)")
    n = len(trace)
    if n == 0:
        return []
    t_arr = trace.timestamp_ms
    valid = trace.valid
    with np.errstate(invalid="ignore"):
        dist = np.hypot(np.diff(trace.x_px), np.diff(trace.y_px))
        speed = dist / (np.diff(t_arr) / 1000.0)
        joined = valid[:-1] & valid[1:] & (speed < params.velocity_threshold_px_per_s)

    t = t_arr.tolist()
    ends = sample_ends(t_arr).tolist()
    x = trace.x_px.tolist()
    y = trace.y_px.tolist()
    v = valid.tolist()
    link = joined.tolist()

    out = []
    i = 0
    while i < n:
        if not v[i]:
            i += 1
            continue
        k = i
        while k < n - 1 and link[k]:
            k += 1
        if ends[k] - t[i] >= params.min_duration_ms:
            out.append(_make_fixation(t, ends, x, y, i, k))
        i = k + 1
    return out


def detect_fixations(samples, detector: str = "idt", params=None) -> list[Fixation]:
    if detector == "idt":
        return detect_fixations_idt(samples, params or IdtParams())
    if detector == "ivt":
        return detect_fixations_ivt(samples, params or IvtParams())
    raise ValueError(f"unknown detector {detector!r}; expected 'idt' or 'ivt'")


def data_loss_ratio(samples: GazeTrace | Sequence[GazeSample]) -> float:
    """Fraction of samples the tracker flagged invalid."""
    trace = _as_trace(samples)
    if len(trace) == 0:
        raise ValueError("data loss ratio is undefined for an empty trace")
    return int(np.count_nonzero(~trace.valid)) / len(trace)
