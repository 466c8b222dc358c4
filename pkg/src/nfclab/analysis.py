"""Per-element channel characteristics extracted from a swept response.

Covers power delay profiles, received power, RMS delay spread, the
delay-gated line-of-sight phase, and a phase-difference angle-of-departure
estimate.  Phases follow the path-difference convention used by the
wavefront model: the reported LOS phase grows with path length, so it equals
``(2*pi/lambda)*(r_n - r_1)`` for a clean direct path.

All operations are pure per element.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .constants import C_M_PER_S
from .scene import Scene
from .synth import ChannelFrequencyResponse, los_path, noise_sigma

LOS_GATE_HALF_WIDTH = 2  # delay bins kept on each side of the LOS tap
DEFAULT_DS_THRESHOLD_DB = 20.0


class AnalysisError(ValueError):
    """Raised when a profile carries no usable signal."""


@dataclass(frozen=True)
class PowerDelayProfile:
    """Linear power per delay bin; bin k maps to delay k * bin_width."""

    powers: np.ndarray
    bin_width: float
    n_bins: int
    element: int | None = None

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=float)
        if p.ndim != 1 or p.shape[0] != self.n_bins:
            raise ValueError("powers must be a vector of length n_bins")
        if np.any(p < 0):
            raise ValueError("powers must be nonnegative")
        object.__setattr__(self, "powers", p)

    def delays(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_width


@dataclass(frozen=True)
class ChannelStats:
    """Per-element summary statistics of one swept measurement.

    ``angular_spread``, ``shadow_fading`` and ``k_factor`` are housed for
    interface completeness but not populated by this package.
    """

    power_db: np.ndarray
    delay_spread_s: np.ndarray
    los_phase_rad: np.ndarray
    aod_rad: np.ndarray
    tau_los_s: np.ndarray
    los_valid: np.ndarray
    aod_valid: np.ndarray
    angular_spread: None = None
    shadow_fading: None = None
    k_factor: None = None

    @property
    def n_elements(self) -> int:
        return len(self.power_db)


def _window(name: str, n: int) -> np.ndarray:
    if name == "rectangular":
        w = np.ones(n)
    elif name == "hann":
        w = np.hanning(n)
    else:
        raise ValueError(f"unknown window {name!r}; use 'rectangular' or 'hann'")
    return w / w.mean()  # unit coherent gain


def compute_pdp(cfr_row: np.ndarray, bandwidth_hz: float, window: str = "hann",
                element: int | None = None) -> PowerDelayProfile:
    """Power delay profile of one element's swept response.

    Squared magnitude of the inverse DFT of the windowed row, scaled so the
    rectangular-window profile satisfies sum(PDP) == sum(|H|^2).
    """
    row = np.asarray(cfr_row, dtype=np.complex128)
    if row.ndim != 1 or row.shape[0] < 2:
        raise ValueError("cfr_row must be a vector of length >= 2")
    n = row.shape[0]
    taps = np.fft.ifft(row * _window(window, n))
    powers = n * np.abs(taps) ** 2
    return PowerDelayProfile(powers=powers, bin_width=1.0 / bandwidth_hz,
                             n_bins=n, element=element)


def pdp_matrix(cfr: ChannelFrequencyResponse, window: str = "hann") -> list[PowerDelayProfile]:
    b = cfr.sweep.bandwidth
    return [compute_pdp(cfr.values[i], b, window=window, element=cfr.elements[i])
            for i in range(cfr.n_elements)]


def received_power(x) -> float:
    """Mean received power in dB relative to the transmit reference.

    Accepts a PowerDelayProfile or a complex frequency row; both reduce to
    ``10*log10(sum|H|^2 / n_points)``.
    """
    if isinstance(x, PowerDelayProfile):
        total = float(np.sum(x.powers))
        n = x.n_bins
    else:
        row = np.asarray(x)
        if row.size == 0:
            raise ValueError("empty input")
        total = float(np.sum(np.abs(row) ** 2))
        n = row.size
    if total <= 0.0:
        return -math.inf
    return 10.0 * math.log10(total / n)


def received_power_db(cfr: ChannelFrequencyResponse) -> np.ndarray:
    return np.array([received_power(cfr.values[i]) for i in range(cfr.n_elements)])


def rms_delay_spread(pdp: PowerDelayProfile, threshold_db: float = DEFAULT_DS_THRESHOLD_DB) -> float:
    """Second central moment of the thresholded profile, in seconds.

    Bins more than ``threshold_db`` below the peak are zeroed first.
    """
    p = pdp.powers
    peak = float(p.max(initial=0.0))
    if peak <= 0.0:
        raise AnalysisError("all-noise profile: no bin above the threshold")
    keep = p >= peak * 10.0 ** (-threshold_db / 10.0)
    weights = np.where(keep, p, 0.0)
    total = float(weights.sum())
    tau = pdp.delays()
    mean = float((weights * tau).sum()) / total
    second = float((weights * tau * tau).sum()) / total
    return math.sqrt(max(second - mean * mean, 0.0))


# ---------------------------------------------------------------------------
# LOS tap gating
# ---------------------------------------------------------------------------

def _los_bin_indices(cfr: ChannelFrequencyResponse, scene: Scene | None) -> np.ndarray:
    """Delay-grid bin of the LOS tap per element (geometric when possible)."""
    n = cfr.sweep.n_points
    if scene is not None:
        # The IDFT grid spacing is 1/(n*df); delays alias modulo (n-1)/B.
        scale = cfr.sweep.bandwidth * n / (n - 1)
        bins = []
        for element in cfr.elements:
            tau = los_path(scene, element).length / C_M_PER_S
            bins.append(int(round(tau * scale)) % n)
        return np.array(bins, dtype=int)
    spectra = np.abs(np.fft.ifft(cfr.values, axis=1)) ** 2
    return np.argmax(spectra, axis=1).astype(int)


def gated_los_rows(cfr: ChannelFrequencyResponse, scene: Scene | None = None,
                   gate_half_width: int = LOS_GATE_HALF_WIDTH
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Delay-gated LOS content of every row, plus center taps and validity.

    The row is equalized by f/f_center (flattening the free-space 1/f
    amplitude), shaped by a symmetric Hann window (suppressing leakage from
    other taps), transformed to the delay domain, zeroed outside
    +-gate_half_width bins around the LOS delay, and transformed back.
    Returns ``(gated_rows, center_taps, valid)`` where ``center_taps`` is the
    gated value at the center-frequency grid point and ``valid`` flags gate
    energy above the expected noise level.

    For a single path the extracted center-frequency phase is exact: the
    equalized amplitude is constant and any real window symmetric about the
    center sample turns every retained delay bin into the same unit phasor
    times a real coefficient.
    """
    values = cfr.values
    n = cfr.sweep.n_points
    freqs = cfr.sweep.frequencies()
    center = (n - 1) // 2
    taper = _window("hann", n)
    equalized = values * (taper * freqs / freqs[center])[None, :]
    spectra = np.fft.ifft(equalized, axis=1)

    k0 = _los_bin_indices(cfr, scene)
    offsets = np.arange(-gate_half_width, gate_half_width + 1)
    gated_spectra = np.zeros_like(spectra)
    gate_power = np.empty(cfr.n_elements)
    for i in range(cfr.n_elements):
        idx = (k0[i] + offsets) % n
        gated_spectra[i, idx] = spectra[i, idx]
        gate_power[i] = float(np.sum(np.abs(spectra[i, idx]) ** 2)) * n

    rows = np.fft.fft(gated_spectra, axis=1)
    taps = rows[:, center]

    if scene is not None and scene.noise_floor_dbm is not None:
        # Windowing scales the in-gate noise by mean(w^2) (w has unit mean).
        noise_in_gate = (noise_sigma(scene.noise_floor_dbm) ** 2 * len(offsets)
                         * float(np.mean(taper ** 2)))
        valid = gate_power > 10.0 * noise_in_gate
    else:
        valid = gate_power > 0.0
    return rows, taps, valid


def gated_los_taps(cfr: ChannelFrequencyResponse, scene: Scene | None = None,
                   gate_half_width: int = LOS_GATE_HALF_WIDTH) -> tuple[np.ndarray, np.ndarray]:
    """Complex LOS tap per element at the sweep center frequency."""
    _, taps, valid = gated_los_rows(cfr, scene, gate_half_width)
    return taps, valid


def los_phase(cfr: ChannelFrequencyResponse, scene: Scene | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Unwrapped LOS phase along the array, referenced to element 1 = 0.

    Returns (phase_rad, valid).  The phase is the delay-gated tap's
    path-length phase at the center frequency, so it matches the closed-form
    wavefront model directly.
    """
    taps, valid = gated_los_taps(cfr, scene)
    if not valid[0]:
        raise AnalysisError("LOS gate on the reference element carries no energy")
    with np.errstate(invalid="ignore"):
        raw = -np.angle(taps)
    unwrapped = np.unwrap(raw)
    return unwrapped - unwrapped[0], valid


def estimate_aod(cfr: ChannelFrequencyResponse, scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    """Azimuth angle of departure per element from adjacent-pair LOS phases.

    For each adjacent pair the wrapped tap phase difference gives
    ``cos(theta) = -lambda_c * dphi / (2 pi d)``; the arccos is assigned to
    the pair midpoint and linearly interpolated back to the elements.
    Returns (theta_rad, valid); pairs whose |cos| exceeds 1 (aliasing or
    occlusion) are clamped and flagged invalid.
    """
    if cfr.n_elements < 2:
        raise ValueError("need at least 2 elements to estimate angles")
    taps, tap_valid = gated_los_taps(cfr, scene)
    n = cfr.sweep.n_points
    freqs = cfr.sweep.frequencies()
    f_eval = freqs[(n - 1) // 2]
    lam = C_M_PER_S / f_eval
    d = scene.array.spacing_d

    # Delay-phase difference of adjacent taps, wrapped to (-pi, pi].
    dphi = -np.angle(taps[1:] * np.conj(taps[:-1]))
    ratio = -lam * dphi / (2.0 * math.pi * d)
    pair_valid = (np.abs(ratio) <= 1.0) & tap_valid[1:] & tap_valid[:-1]
    theta_mid = np.arccos(np.clip(ratio, -1.0, 1.0))

    mid_pos = np.arange(1, cfr.n_elements) + 0.5
    el_pos = np.arange(1, cfr.n_elements + 1, dtype=float)
    theta = np.interp(el_pos, mid_pos, theta_mid)

    valid = np.empty(cfr.n_elements, dtype=bool)
    valid[0] = pair_valid[0]
    valid[-1] = pair_valid[-1]
    for i in range(1, cfr.n_elements - 1):
        valid[i] = pair_valid[i - 1] & pair_valid[i]
    return theta, valid


def compute_stats(cfr: ChannelFrequencyResponse, scene: Scene,
                  ds_threshold_db: float = DEFAULT_DS_THRESHOLD_DB,
                  window: str = "hann") -> ChannelStats:
    """Full per-element statistics table for one synthesized measurement."""
    power = received_power_db(cfr)
    pdps = pdp_matrix(cfr, window=window)
    ds = np.array([rms_delay_spread(p, threshold_db=ds_threshold_db) for p in pdps])
    phase, los_valid = los_phase(cfr, scene)
    aod, aod_valid = estimate_aod(cfr, scene)
    tau = np.array([los_path(scene, el).length / C_M_PER_S for el in cfr.elements])
    return ChannelStats(power_db=power, delay_spread_s=ds, los_phase_rad=phase,
                        aod_rad=aod, tau_los_s=tau,
                        los_valid=los_valid, aod_valid=aod_valid)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def export_stats_csv(stats: ChannelStats, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["element", "power_db", "ds_ns", "phase_rad", "aod_deg", "tau_ns"])
        for i in range(stats.n_elements):
            writer.writerow([
                i + 1,
                repr(float(stats.power_db[i])),
                repr(float(stats.delay_spread_s[i] * 1e9)),
                repr(float(stats.los_phase_rad[i])),
                repr(float(math.degrees(stats.aod_rad[i]))),
                repr(float(stats.tau_los_s[i] * 1e9)),
            ])


def export_pdp_csv(pdps: list[PowerDelayProfile], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["element", "bin", "delay_ns", "power_db"])
        for pdp in pdps:
            delays_ns = pdp.delays() * 1e9
            for k in range(pdp.n_bins):
                p = pdp.powers[k]
                power_db = repr(10.0 * math.log10(p)) if p > 0 else "-inf"
                writer.writerow([pdp.element, k, repr(float(delays_ns[k])), power_db])
