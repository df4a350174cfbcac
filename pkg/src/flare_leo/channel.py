"""Fading channel generation, array responses, SINR, and effective rate.

Small-scale fading is Rician with independent gaussian real/imaginary parts;
large-scale fading follows the free-space link budget with the spot-beam gain.
All random draws go through an explicit numpy Generator so realizations are
reproducible and independently seedable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import SLOT_DURATION_S, SYMBOL_DURATION_S


@dataclass(frozen=True)
class ChannelParams:
    """Small-scale fading and array parameters for one scenario."""

    rician_factor: float = 10.0          # linear LoS-to-scatter power ratio
    power_norm: float = 1.0              # mean squared small-scale gain
    wavelength_m: float = 0.15           # carrier wavelength
    element_spacing: float = 0.5         # antenna spacing in wavelengths
    ue_gain: float = 1.0                 # user terminal gain, linear

    def __post_init__(self):
        if self.rician_factor < 0:
            raise ValueError("rician factor must be nonnegative")
        if self.power_norm <= 0:
            raise ValueError("power normalization must be positive")
        if not (0.0 < self.element_spacing <= 1.0):
            raise ValueError("element spacing must lie in (0, 1] wavelengths")

    @property
    def los_mean(self) -> float:
        """Mean of each gaussian component of the small-scale gain."""
        k = self.rician_factor
        return math.sqrt(k * self.power_norm / (2.0 * (k + 1.0)))

    @property
    def component_var(self) -> float:
        """Variance of each gaussian component of the small-scale gain."""
        return self.power_norm / (2.0 * (self.rician_factor + 1.0))


@dataclass(frozen=True)
class InterferenceModel:
    """Aggregate interference-plus-noise spectral density seen inside one beam.

    ``leakage`` is the dimensionless product of the inter-beam attenuation
    factor and the free-space path term, applied to the adjacent beams'
    accumulated power density.
    """

    leakage: float
    adjacent_density_w_hz: float
    noise_density_w_hz: float

    def __post_init__(self):
        if self.aggregate_density <= 0:
            raise ValueError("aggregate interference density must be positive")

    @property
    def aggregate_density(self) -> float:
        return self.leakage * self.adjacent_density_w_hz + self.noise_density_w_hz

    @staticmethod
    def handover(models: list["InterferenceModel"]) -> float:
        """Aggregate density during joint transmission: both satellites leak."""
        if not models:
            raise ValueError("need at least one per-satellite model")
        leak = sum(m.leakage * m.adjacent_density_w_hz for m in models)
        return leak + models[0].noise_density_w_hz


@dataclass(frozen=True)
class RateParams:
    """Slot timing and bandwidth determining the effective transmission time."""

    slot_s: float
    csi_s: float
    processing_s: float
    total_bandwidth_hz: float

    def __post_init__(self):
        if self.csi_s + self.processing_s >= self.slot_s:
            raise ValueError("estimation plus processing exceeds the slot")
        if not (0.0 < self.time_fraction <= 1.0):
            raise ValueError("effective time fraction must lie in (0, 1]")

    @property
    def time_fraction(self) -> float:
        return 1.0 - (self.csi_s + self.processing_s) / self.slot_s

    @classmethod
    def lte(cls, n_beams: int, bandwidth_hz: float, estimated_satellites: int = 1) -> "RateParams":
        """LTE framing: one symbol of CSI per estimated satellite, one per beam to process."""
        return cls(
            slot_s=SLOT_DURATION_S,
            csi_s=estimated_satellites * SYMBOL_DURATION_S,
            processing_s=n_beams * SYMBOL_DURATION_S,
            total_bandwidth_hz=bandwidth_hz,
        )


def array_response(aod: float, n_elements: int, element_spacing: float = 0.5) -> np.ndarray:
    """Uniform linear array steering vector with unit-modulus entries."""
    if n_elements < 1:
        raise ValueError("need at least one antenna element")
    idx = np.arange(n_elements)
    return np.exp(2j * math.pi * element_spacing * idx * aod)


def rician_gain(params: ChannelParams, rng: np.random.Generator, size=None):
    """Sample complex small-scale gains; mean squared magnitude is power_norm."""
    mu, sigma = params.los_mean, math.sqrt(params.component_var)
    re = rng.normal(mu, sigma, size=size)
    im = rng.normal(mu, sigma, size=size)
    return re + 1j * im


def large_scale(beam_gain: float, params: ChannelParams, n_beams: int, slant_km: float) -> float:
    """Free-space large-scale power gain of the satellite-user link."""
    if slant_km <= 0:
        raise ValueError("slant distance must be positive")
    d_m = slant_km * 1000.0
    return beam_gain * params.ue_gain * n_beams * params.wavelength_m**2 / (4.0 * math.pi * d_m) ** 2


def channel_vector(
    beam_gain: float,
    params: ChannelParams,
    n_beams: int,
    slant_km: float,
    aod: float,
    n_elements: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Full downlink channel: sqrt(large-scale) * small-scale * steering vector."""
    beta = large_scale(beam_gain, params, n_beams, slant_km)
    g = rician_gain(params, rng)
    return math.sqrt(beta) * g * array_response(aod, n_elements, params.element_spacing)


def temporal_evolve(
    prev: np.ndarray, rho: float, params: ChannelParams, rng: np.random.Generator
) -> np.ndarray:
    """One step of the first-order gain recursion with correlation rho in [0, 1]."""
    if not (0.0 <= rho <= 1.0):
        raise ValueError("correlation coefficient must lie in [0, 1]")
    prev = np.asarray(prev, dtype=complex)
    innovation = rician_gain(params, rng, size=prev.shape)
    return math.sqrt(rho) * prev + math.sqrt(1.0 - rho) * innovation


def sinr(h, w, interferer_pairs, aggregate_density: float, bandwidth_hz: float) -> float:
    """Received SINR: |h^H w|^2 over in-group interference plus density * bandwidth.

    ``interferer_pairs`` is a sequence of (channel, precoder) pairs, each
    contributing |h_i^H w_i|^2 to the denominator.
    """
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    h = np.asarray(h, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if h.shape != w.shape:
        raise ValueError(f"channel/precoder shape mismatch: {h.shape} vs {w.shape}")
    signal = abs(np.vdot(h, w)) ** 2
    interference = 0.0
    for hi, wi in interferer_pairs:
        hi = np.asarray(hi, dtype=complex)
        wi = np.asarray(wi, dtype=complex)
        if hi.shape != wi.shape:
            raise ValueError("interferer channel/precoder shape mismatch")
        interference += abs(np.vdot(hi, wi)) ** 2
    return float(signal / (interference + aggregate_density * bandwidth_hz))


def sinr_imperfect(
    h,
    w,
    interferer_pairs,
    error_var: float,
    all_precoders,
    aggregate_density: float,
    bandwidth_hz: float,
) -> float:
    """SINR with channel-estimation error: adds error_var * sum ||w_k'||^2 to the denominator."""
    if error_var < 0:
        raise ValueError("error variance must be nonnegative")
    base = sinr(h, w, interferer_pairs, aggregate_density, bandwidth_hz)
    if error_var == 0.0:
        return base
    h = np.asarray(h, dtype=complex)
    w = np.asarray(w, dtype=complex)
    signal = abs(np.vdot(h, w)) ** 2
    denom = signal / base
    penalty = error_var * sum(float(np.vdot(wk, wk).real) for wk in all_precoders)
    return float(signal / (denom + penalty))


def effective_rate(bandwidth_hz: float, time_fraction: float, min_sinr: float) -> float:
    """Group rate in bit/s: time_fraction * bandwidth * log2(1 + worst SINR)."""
    if bandwidth_hz < 0 or min_sinr < 0:
        raise ValueError("bandwidth and SINR must be nonnegative")
    return time_fraction * bandwidth_hz * math.log2(1.0 + min_sinr)
