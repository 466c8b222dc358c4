"""Stationary-interval partitioning of the array by two adaptive criteria.

Criterion 1 (correlation): a reference window of m elements anchors each
interval; a test window slides element by element and the interval ends at
the first window whose correlation matrix distance from the reference
exceeds a threshold.  The reference-anchored scan (rather than adjacent-pair
comparison) accumulates slow drift, so intervals shrink where the channel
geometry changes faster.

Criterion 2 (characteristic slope): the smoothed per-element slope of a
channel statistic marks boundaries where it stays above a threshold, and
each resulting interval is additionally held to a uniform-power bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .analysis import ChannelStats
from .synth import ChannelFrequencyResponse

DEFAULT_WINDOW_M = 4
DEFAULT_CMD_THRESHOLD = 0.2
DEFAULT_SMOOTHING_W = 5
DEFAULT_UNIFORM_POWER_DB = 3.0
# Per-parameter slope thresholds (per element): dB, seconds, radians.
DEFAULT_SLOPE_THRESHOLDS = {
    "power_db": 0.5,
    "delay_spread_s": 0.5e-9,
    "aod_rad": math.radians(1.0),
}


class StationarityError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationMatrix:
    """Frequency-averaged spatial correlation of one element window."""

    matrix: np.ndarray
    window: tuple[int, int]  # 1-based inclusive element range
    m: int

    def __post_init__(self):
        r = np.asarray(self.matrix, dtype=np.complex128)
        if r.shape != (self.m, self.m):
            raise ValueError(f"matrix must be {self.m}x{self.m}")
        object.__setattr__(self, "matrix", r)


@dataclass(frozen=True)
class StationaryPartition:
    """Ordered disjoint element intervals covering 1..n_elements."""

    intervals: tuple[tuple[int, int], ...]
    criterion: str
    thresholds: tuple[tuple[str, float], ...]
    boundary_scores: tuple[float, ...]
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        last_end = 0
        for start, end in self.intervals:
            if start != last_end + 1 or end < start:
                raise ValueError(f"intervals must be contiguous and ordered, got {self.intervals}")
            last_end = end

    @property
    def n_elements(self) -> int:
        return self.intervals[-1][1]

    @property
    def n_intervals(self) -> int:
        return len(self.intervals)

    def boundaries(self) -> tuple[int, ...]:
        """First element of every interval after the first."""
        return tuple(start for start, _ in self.intervals[1:])


def uniform_partition(n_elements: int, n_intervals: int,
                      criterion: str = "uniform") -> StationaryPartition:
    """n_intervals near-equal contiguous intervals (helper, not adaptive)."""
    if not 1 <= n_intervals <= n_elements:
        raise ValueError("need 1 <= n_intervals <= n_elements")
    edges = [round(i * n_elements / n_intervals) for i in range(n_intervals + 1)]
    intervals = tuple((edges[i] + 1, edges[i + 1]) for i in range(n_intervals))
    return StationaryPartition(intervals=intervals, criterion=criterion,
                               thresholds=(), boundary_scores=())


def singleton_partition(n_elements: int) -> StationaryPartition:
    return uniform_partition(n_elements, n_elements, criterion="singleton")


# ---------------------------------------------------------------------------
# Correlation machinery
# ---------------------------------------------------------------------------

def correlation_matrix(cfr: ChannelFrequencyResponse, window: tuple[int, int]) -> CorrelationMatrix:
    """Frequency-averaged outer-product correlation over an element window.

    ``R = (1/n_points) * sum_f h_f h_f^H`` with ``h_f`` the window's element
    responses at frequency f; Hermitian positive semidefinite by
    construction.
    """
    start, end = window
    m = end - start + 1
    if m < 2:
        raise StationarityError(f"window must span >= 2 elements, got {window}")
    if start < 1 or end > cfr.n_elements:
        raise StationarityError(f"window {window} outside 1..{cfr.n_elements}")
    x = cfr.values[start - 1:end, :]
    r = (x @ x.conj().T) / cfr.sweep.n_points
    r = 0.5 * (r + r.conj().T)  # enforce exact Hermitian symmetry
    return CorrelationMatrix(matrix=r, window=(start, end), m=m)


def correlation_matrix_distance(r1: CorrelationMatrix | np.ndarray,
                                r2: CorrelationMatrix | np.ndarray) -> float:
    """Correlation matrix distance 1 - Re tr(R1 R2) / (||R1||_F ||R2||_F).

    0 for proportional matrices, 1 for matrices with orthogonal support;
    clamped to [0, 1].
    """
    m1 = r1.matrix if isinstance(r1, CorrelationMatrix) else np.asarray(r1)
    m2 = r2.matrix if isinstance(r2, CorrelationMatrix) else np.asarray(r2)
    if m1.shape != m2.shape:
        raise StationarityError(f"matrix shapes differ: {m1.shape} vs {m2.shape}")
    n1 = float(np.linalg.norm(m1, "fro"))
    n2 = float(np.linalg.norm(m2, "fro"))
    if n1 == 0.0 or n2 == 0.0:
        raise StationarityError("correlation matrix distance undefined for a zero matrix")
    inner = float(np.real(np.trace(m1 @ m2)))
    return min(1.0, max(0.0, 1.0 - inner / (n1 * n2)))


def pearson_profiles(cfr: ChannelFrequencyResponse) -> np.ndarray:
    """Pearson correlation of per-frequency magnitude profiles, all pairs.

    Entries involving a zero-variance profile are NaN.
    """
    if cfr.sweep.n_points < 2:
        raise StationarityError("need >= 2 frequency points")
    mags = np.abs(cfr.values)
    centered = mags - mags.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    out = np.full((cfr.n_elements, cfr.n_elements), np.nan)
    ok = norms > 0
    if np.any(ok):
        c = centered[ok] / norms[ok][:, None]
        out[np.ix_(ok, ok)] = c @ c.T
    return np.clip(out, -1.0, 1.0)  # NaN entries (zero-variance rows) pass through


def cmd_map(cfr: ChannelFrequencyResponse, m: int = DEFAULT_WINDOW_M) -> np.ndarray:
    """Pairwise CMD between all m-element windows (heat-map data).

    Entry (i, j) is the distance between the windows starting at elements
    i+1 and j+1.
    """
    n_windows = cfr.n_elements - m + 1
    if n_windows < 1:
        raise StationarityError(f"array shorter than one window of {m}")
    mats = [correlation_matrix(cfr, (s, s + m - 1)) for s in range(1, n_windows + 1)]
    out = np.zeros((n_windows, n_windows))
    for i in range(n_windows):
        for j in range(i + 1, n_windows):
            try:
                d = correlation_matrix_distance(mats[i], mats[j])
            except StationarityError:
                d = 1.0
            out[i, j] = out[j, i] = d
    return out


# ---------------------------------------------------------------------------
# Partitioners
# ---------------------------------------------------------------------------

def _merge_short_intervals(intervals: list[list[int]], scores: list[float],
                           min_si: int) -> tuple[list[list[int]], list[float]]:
    """Fold intervals shorter than min_si into a neighbor (following first)."""
    i = 0
    while i < len(intervals):
        start, end = intervals[i]
        if end - start + 1 >= min_si or len(intervals) == 1:
            i += 1
            continue
        if i + 1 < len(intervals):
            intervals[i + 1][0] = start
            del intervals[i]
            del scores[i]
        else:
            intervals[i - 1][1] = end
            del intervals[i]
            del scores[i - 1]
    return intervals, scores


def partition_by_cmd(cfr: ChannelFrequencyResponse, m: int = DEFAULT_WINDOW_M,
                     tau: float = DEFAULT_CMD_THRESHOLD,
                     min_si: int | None = None) -> StationaryPartition:
    """Greedy reference-anchored correlation-distance partition.

    The reference window is the first m elements of the current interval; a
    test window slides element by element and the first one with distance
    above ``tau`` starts a new interval at its first element.  Intervals
    shorter than ``min_si`` are folded into their neighbors, and a trailing
    leftover shorter than ``min_si`` is absorbed by the last interval.
    """
    if m < 2:
        raise StationarityError(f"window size must be >= 2, got {m}")
    if not 0.0 < tau < 1.0:
        raise StationarityError(f"threshold must lie in (0, 1), got {tau}")
    if min_si is None:
        min_si = m
    n = cfr.n_elements
    thresholds = (("m", float(m)), ("tau", float(tau)), ("min_si", float(min_si)))

    warnings: list[str] = []
    if n < 2 * m:
        return StationaryPartition(intervals=((1, n),), criterion="cmd",
                                   thresholds=thresholds, boundary_scores=(),
                                   warnings=(f"array of {n} elements shorter than two windows of {m}",))
    if not np.any(np.abs(cfr.values) > 0):
        return StationaryPartition(intervals=((1, n),), criterion="cmd",
                                   thresholds=thresholds, boundary_scores=(),
                                   warnings=("all-zero response",))

    boundaries: list[int] = []
    scores: list[float] = []
    si_start = 1
    while si_start + m - 1 <= n:
        reference = correlation_matrix(cfr, (si_start, si_start + m - 1))
        tripped = False
        for t in range(si_start + 1, n - m + 2):
            test = correlation_matrix(cfr, (t, t + m - 1))
            try:
                d = correlation_matrix_distance(reference, test)
            except StationarityError:
                d = 1.0  # zero-power window is maximally different
            if d > tau:
                boundaries.append(t)
                scores.append(d)
                si_start = t
                tripped = True
                break
        if not tripped:
            break

    edges = [1] + boundaries + [n + 1]
    intervals = [[edges[i], edges[i + 1] - 1] for i in range(len(edges) - 1)]
    intervals, scores = _merge_short_intervals(intervals, scores, min_si)
    return StationaryPartition(intervals=tuple((s, e) for s, e in intervals),
                               criterion="cmd", thresholds=thresholds,
                               boundary_scores=tuple(scores), warnings=tuple(warnings))


def characteristic_slope(s: np.ndarray, w: int = DEFAULT_SMOOTHING_W) -> np.ndarray:
    """Per-element slope of a statistic: smooth, then centered difference.

    A centered moving average of odd width ``w`` (shrinking at the array
    ends) precedes the difference; ends use one-sided differences.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or s.shape[0] < 3:
        raise ValueError("need a 1-D array of length >= 3")
    if w < 1 or w % 2 == 0:
        raise ValueError(f"smoothing width must be odd and >= 1, got {w}")
    n = s.shape[0]
    half = w // 2
    padded = np.concatenate([np.zeros(1), np.cumsum(s)])
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half + 1, n)
    smoothed = (padded[hi] - padded[lo]) / (hi - lo)
    k = np.empty(n)
    k[1:-1] = 0.5 * (smoothed[2:] - smoothed[:-2])
    k[0] = smoothed[1] - smoothed[0]
    k[-1] = smoothed[-1] - smoothed[-2]
    return k


def _slope_boundaries(k: np.ndarray, threshold: float) -> tuple[list[int], list[float]]:
    """Boundaries at the steepest point of every run of >= 2 hot elements."""
    hot = np.abs(k) > threshold
    boundaries: list[int] = []
    scores: list[float] = []
    n = len(k)
    i = 0
    while i < n:
        if not hot[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and hot[j + 1]:
            j += 1
        if j - i + 1 >= 2:
            run = np.abs(k[i:j + 1])
            peak = run.max()
            peak_positions = np.flatnonzero(run >= peak - 1e-12) + i
            split = int(round(float(np.median(peak_positions)))) + 1  # 1-based
            if split > 1:
                boundaries.append(split)
                scores.append(float(peak))
        i = j + 1
    return boundaries, scores


def _uniform_power_splits(power_db: np.ndarray, start: int, end: int,
                          gamma_db: float) -> list[int]:
    """Left-scan split points keeping max-min power within gamma per piece."""
    splits: list[int] = []
    lo = hi = power_db[start - 1]
    for el in range(start + 1, end + 1):
        p = power_db[el - 1]
        lo, hi = min(lo, p), max(hi, p)
        if hi - lo > gamma_db:
            splits.append(el)
            lo = hi = p
    return splits


def partition_by_slope(stats: ChannelStats, parameter: str = "power_db",
                       k_threshold: float | None = None,
                       w: int = DEFAULT_SMOOTHING_W,
                       gamma_db: float = DEFAULT_UNIFORM_POWER_DB,
                       min_si: int = DEFAULT_WINDOW_M) -> StationaryPartition:
    """Characteristic-slope partition with a uniform-power check.

    Boundaries form where the smoothed slope of the selected statistic stays
    above ``k_threshold`` for at least 2 consecutive elements (placed at the
    steepest point of the run); every resulting interval is then split
    wherever its internal received-power range exceeds ``gamma_db``.
    """
    values = getattr(stats, parameter, None)
    if values is None:
        raise StationarityError(f"statistic {parameter!r} not populated")
    values = np.asarray(values, dtype=float)
    if k_threshold is None:
        try:
            k_threshold = DEFAULT_SLOPE_THRESHOLDS[parameter]
        except KeyError:
            raise StationarityError(f"no default slope threshold for {parameter!r}; pass k_threshold") from None
    n = len(values)
    thresholds = (("parameter_threshold", float(k_threshold)), ("w", float(w)),
                  ("gamma_db", float(gamma_db)), ("min_si", float(min_si)))

    k = characteristic_slope(values, w=w)
    boundaries, scores = _slope_boundaries(k, k_threshold)

    edges = [1] + boundaries + [n + 1]
    intervals = [[edges[i], edges[i + 1] - 1] for i in range(len(edges) - 1)]

    # Uniform-power criterion: split any interval whose spread breaches gamma.
    refined: list[list[int]] = []
    refined_scores: list[float] = []
    for idx, (start, end) in enumerate(intervals):
        splits = _uniform_power_splits(stats.power_db, start, end, gamma_db)
        pieces = [start] + splits + [end + 1]
        for j in range(len(pieces) - 1):
            refined.append([pieces[j], pieces[j + 1] - 1])
            if j < len(pieces) - 2:
                refined_scores.append(float("nan"))  # uniform-power split
        if idx < len(intervals) - 1:
            refined_scores.append(scores[idx])

    refined, refined_scores = _merge_short_intervals(refined, refined_scores, min_si)
    return StationaryPartition(intervals=tuple((s, e) for s, e in refined),
                               criterion="slope", thresholds=thresholds,
                               boundary_scores=tuple(refined_scores))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def export_partition_csv(partitions: list[StationaryPartition], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["interval_index", "start", "end", "criterion", "boundary_score"])
        for partition in partitions:
            scores = ("",) + tuple(repr(float(s)) for s in partition.boundary_scores)
            for i, ((start, end), score) in enumerate(zip(partition.intervals, scores)):
                writer.writerow([i, start, end, partition.criterion, score])


def export_cmd_map_csv(dmap: np.ndarray, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "D"])
        for i in range(dmap.shape[0]):
            for j in range(dmap.shape[1]):
                writer.writerow([i + 1, j + 1, repr(float(dmap[i, j]))])
