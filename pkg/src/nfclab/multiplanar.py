"""Multiplanar-wave approximation: one planar wavefront per stationary interval.

Each interval is represented by a planar patch anchored at its center
element: the patch stores the exact reference distance, the axis angle seen
from the reference, and the de-propagated complex line-of-sight gain.  The
reconstruction extends the reference response by first-order planar
propagation, so it is exact at every reference element and its error grows
with the interval extent; refining the partition can only reduce the error.

The reconstruction is LOS-only; multipath content is assessed only through
the complex correlation metric.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .constants import C_M_PER_S
from .scene import Scene, true_geometry
from .stationarity import StationaryPartition
from .synth import ChannelFrequencyResponse, knife_edge_loss, los_path, make_cfr

FULL_BLOCKAGE_DB = 80.0
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PlanarPatch:
    """Planar wavefront parameters for one stationary interval.

    ``gain_ref`` is the reference element's LOS response with the propagation
    factor exp(-j 2 pi f r_ref / c) divided out, so re-applying planar
    propagation reproduces the reference response exactly.
    """

    interval: tuple[int, int]
    ref_element: int
    theta_si: float
    r_ref: float
    gain_ref: np.ndarray
    flagged: bool = False

    def __post_init__(self):
        start, end = self.interval
        if not start <= self.ref_element <= end:
            raise ValueError(f"reference {self.ref_element} outside interval {self.interval}")
        if not 0.0 <= self.theta_si <= math.pi:
            raise ValueError(f"theta_si must lie in [0, pi], got {self.theta_si}")


@dataclass(frozen=True)
class MultiplanarError:
    """Phase RMSE (wrapped, radians) and complex field correlation in [0, 1]."""

    phase_rmse: float
    complex_correlation: float
    per_element_phase_dev: np.ndarray

    def __post_init__(self):
        if self.phase_rmse < 0:
            raise ValueError("phase_rmse must be >= 0")
        if self.complex_correlation > 1.0 + 1e-12:
            raise ValueError("correlation must not exceed 1")


def _los_gain(scene: Scene, element: int, freqs: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """De-propagated LOS gain per frequency, its path length, and a block flag."""
    path = los_path(scene, element)
    lam = C_M_PER_S / freqs
    gain = lam / (4.0 * math.pi * path.length)
    if path.edge_factors:
        loss_db = np.zeros_like(freqs)
        for geo in path.edge_factors:
            loss_db += knife_edge_loss(geo / np.sqrt(lam))
        gain = gain * 10.0 ** (-loss_db / 20.0)
    return gain, path.length, path.blockage_db > FULL_BLOCKAGE_DB


def build_multiplanar_model(scene: Scene, partition: StationaryPartition) -> list[PlanarPatch]:
    """One planar patch per interval, parameters from exact geometry.

    The reference is the interval center ``floor((start+end)/2)``.  If the
    reference's direct path is fully absorbed (> 80 dB blockage) the patch is
    flagged and its parameters come from the nearest unblocked element in the
    interval (ties resolved toward lower indices).
    """
    freqs = scene.sweep.frequencies()
    rx = scene.rx
    patches: list[PlanarPatch] = []
    for start, end in partition.intervals:
        ref = (start + end) // 2
        gain, _, blocked = _los_gain(scene, ref, freqs)
        flagged = False
        if blocked:
            flagged = True
            for offset in range(1, end - start + 1):
                for candidate in (ref - offset, ref + offset):
                    if start <= candidate <= end:
                        gain_c, _, blocked_c = _los_gain(scene, candidate, freqs)
                        if not blocked_c:
                            ref, gain = candidate, gain_c
                            blocked = False
                            break
                if not blocked:
                    break
        r_ref, theta_si = true_geometry(scene, ref, rx)
        patches.append(PlanarPatch(interval=(start, end), ref_element=ref,
                                   theta_si=theta_si, r_ref=r_ref,
                                   gain_ref=gain, flagged=flagged))
    return patches


def build_multiplanar_model_from_cfr(cfr: ChannelFrequencyResponse,
                                     partition: StationaryPartition,
                                     spacing_d: float) -> list[PlanarPatch]:
    """Data-only patch construction: parameters estimated from the response.

    The angle per interval comes from the adjacent-pair phase of the gated
    strongest tap at the reference, the reference distance from the tap's
    delay bin (aliased modulo the sweep's unambiguous range), and the gain
    from the de-propagated gated response.  Estimates are approximate by
    nature (delay-bin quantization, gate truncation); use the scene-driven
    builder whenever geometry is available.
    """
    from .analysis import _window, gated_los_rows  # analysis sits above synth

    rows, taps, valid = gated_los_rows(cfr, None)
    n = cfr.sweep.n_points
    freqs = cfr.sweep.frequencies()
    center = (n - 1) // 2
    f_eval = freqs[center]
    lam = C_M_PER_S / f_eval

    # Undo the gate's Hann taper and 1/f equalization; notch the band edges
    # where the taper is too small to invert stably.
    taper = _window("hann", n) * freqs / f_eval
    invertible = taper >= 0.05 * taper.max()
    detaper = np.where(invertible, 1.0 / np.where(invertible, taper, 1.0), 0.0)

    spectra = np.abs(np.fft.ifft(cfr.values, axis=1)) ** 2
    k0 = np.argmax(spectra, axis=1)
    tau = k0 * (n - 1) / (n * cfr.sweep.bandwidth)
    r_los = tau * C_M_PER_S

    dphi = -np.angle(taps[1:] * np.conj(taps[:-1]))
    ratio = np.clip(-lam * dphi / (TWO_PI * spacing_d), -1.0, 1.0)
    theta_mid = np.arccos(ratio)
    el_pos = np.arange(1, cfr.n_elements + 1, dtype=float)
    theta = np.interp(el_pos, np.arange(1, cfr.n_elements) + 0.5, theta_mid)

    patches: list[PlanarPatch] = []
    for start, end in partition.intervals:
        ref = (start + end) // 2
        flagged = not bool(valid[ref - 1])
        if flagged:
            candidates = [c for offset in range(1, end - start + 1)
                          for c in (ref - offset, ref + offset)
                          if start <= c <= end and valid[c - 1]]
            if candidates:
                ref = candidates[0]
        gain = (rows[ref - 1] * detaper
                * np.exp(1j * TWO_PI * freqs * r_los[ref - 1] / C_M_PER_S))
        patches.append(PlanarPatch(interval=(start, end), ref_element=ref,
                                   theta_si=float(theta[ref - 1]),
                                   r_ref=float(r_los[ref - 1]),
                                   gain_ref=gain, flagged=flagged))
    return patches


def synthesize_multiplanar_cfr(patches: list[PlanarPatch], scene: Scene) -> ChannelFrequencyResponse:
    """Planar reconstruction: H(n,f) = gain_ref(f) e^{-j2pi f (r_ref - dx cos(theta_si))/c}.

    ``dx`` is the along-axis offset of element n from the patch reference;
    at the reference itself the reconstruction equals the reference LOS
    response exactly.
    """
    covered = sorted(patch.interval for patch in patches)
    expected = 1
    for start, end in covered:
        if start != expected:
            raise ValueError("patches must cover the array contiguously")
        expected = end + 1
    n_el = scene.array.n_elements
    if expected != n_el + 1:
        raise ValueError(f"patches cover 1..{expected - 1}, array has {n_el} elements")

    freqs = scene.sweep.frequencies()
    d = scene.array.spacing_d
    out = np.empty((n_el, len(freqs)), dtype=np.complex128)
    for patch in patches:
        start, end = patch.interval
        cos_theta = math.cos(patch.theta_si)
        for n in range(start, end + 1):
            dx = (n - patch.ref_element) * d
            length = patch.r_ref - dx * cos_theta
            out[n - 1] = patch.gain_ref * np.exp(-1j * TWO_PI * freqs * length / C_M_PER_S)
    return make_cfr(out, scene.sweep)


def multiplanar_error(truth: ChannelFrequencyResponse,
                      approx: ChannelFrequencyResponse) -> MultiplanarError:
    """Wrapped phase RMSE and complex correlation between two responses.

    For the phase metric the truth should be the LOS-gated (LOS-only)
    spherical response, since the planar reconstruction models only the
    direct wavefront; the correlation metric is meaningful against the full
    response as well.
    """
    if truth.values.shape != approx.values.shape:
        raise ValueError(f"shape mismatch: {truth.values.shape} vs {approx.values.shape}")
    diff = np.angle(truth.values * np.conj(approx.values))
    phase_rmse = float(np.sqrt(np.mean(diff * diff)))
    per_element = np.sqrt(np.mean(diff * diff, axis=1))
    denom = float(np.linalg.norm(approx.values) * np.linalg.norm(truth.values))
    corr = 0.0
    if denom > 0:
        corr = float(abs(np.vdot(approx.values, truth.values)) / denom)
    return MultiplanarError(phase_rmse=phase_rmse,
                            complex_correlation=min(corr, 1.0),
                            per_element_phase_dev=per_element)


def export_mw_error_csv(rows: list[tuple[str, int, float, float]], path) -> None:
    """Rows of (partition id, interval count, phase rmse, correlation)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k_or_partition_id", "n_intervals", "phase_rmse_rad", "correlation"])
        for name, n_intervals, rmse, corr in rows:
            writer.writerow([name, n_intervals, repr(float(rmse)), repr(float(corr))])
