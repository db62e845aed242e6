"""Synthetic uniform-linear-array data for overlapping multi-tone sources.

Sensors sit at half-wavelength spacing, so a source arriving at angle phi
(degrees, upper half-space) has spatial frequency omega = pi*cos(phi) and
steering vector v_d = exp(j*omega*d), d = 1..D.  Each source is a band of
unit (or linearly decayed) amplitudes over on-bin DFT tones; the band layout
is controlled by the overlap ratio between consecutive sources.

Frequency-domain generation is the default path; the time-domain model plus
the per-bin Fourier reduction is kept for round-trip checks, since on-bin
tones make the two statistically identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ArrayScenario",
    "TimeData",
    "FreqData",
    "steering_vector",
    "steering_matrix",
    "doa_to_omega",
    "amplitude_matrix",
    "default_doas",
    "default_scenario",
    "noise_variances",
    "synth_freq",
    "synth_time",
    "fft_reduce",
]


@dataclass(frozen=True)
class ArrayScenario:
    """Full description of one synthetic data draw."""

    d: int                 # sensor count
    k_true: int            # number of sources (0 allowed: pure noise)
    m: int                 # tone / FFT-bin count
    n: int                 # time samples (tones sit on the N-point DFT grid)
    doa_deg: tuple         # K_true arrival angles in [0, 180)
    overlap: float = 0.0   # band overlap ratio in [0, 1]
    decay: float = 0.0     # linear amplitude decay ratio in [0, 1]
    snr_db: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("need at least one sensor")
        if self.m > self.n:
            raise ValueError(f"tone count M={self.m} exceeds time samples N={self.n}")
        if self.k_true < 0 or len(self.doa_deg) != self.k_true:
            raise ValueError("doa_deg length must equal k_true")
        for phi in self.doa_deg:
            if not 0.0 <= phi < 180.0:
                raise ValueError(f"DOA {phi} outside [0, 180)")
        if not (0.0 <= self.overlap <= 1.0 and 0.0 <= self.decay <= 1.0):
            raise ValueError("overlap and decay must lie in [0, 1]")


@dataclass(frozen=True)
class TimeData:
    x: np.ndarray          # complex D x N sensor output


@dataclass(frozen=True)
class FreqData:
    y: np.ndarray          # complex D x M normalized DFT output
    noise_var_freq: float  # per-entry complex noise variance in y


def doa_to_omega(phi_deg):
    """Spatial frequency omega = pi*cos(phi), mapped into [-pi, pi)."""
    phi = np.asarray(phi_deg, dtype=float)
    if np.any(phi < 0.0) or np.any(phi >= 180.0):
        raise ValueError("arrival angle must lie in [0, 180)")
    omega = np.pi * np.cos(np.deg2rad(phi))
    omega = np.where(omega >= np.pi, omega - 2 * np.pi, omega)
    if omega.ndim == 0:
        return float(omega)
    return omega


def steering_vector(omega, d):
    """Array response v_d = exp(j*omega*d), d = 1..D; squared norm is D."""
    if d < 1:
        raise ValueError("need at least one sensor")
    return np.exp(1j * omega * np.arange(1, d + 1))


def steering_matrix(doa_deg, d):
    """D x K steering matrix for arrival angles in degrees."""
    angles = np.atleast_1d(np.asarray(doa_deg, dtype=float))
    omegas = np.pi * np.cos(np.deg2rad(angles))
    omegas = np.where(omegas >= np.pi, omegas - 2 * np.pi, omegas)
    return np.exp(1j * np.outer(np.arange(1, d + 1), omegas))


def default_doas(k):
    """Equally separated angles 10 + (k-1)*floor(170/K) degrees."""
    if k == 0:
        return ()
    step = math.floor(170.0 / k)
    return tuple(10.0 + i * step for i in range(k))


def default_scenario(d, k, m, n, overlap=0.0, decay=0.0, snr_db=20.0, seed=0):
    """Scenario with the default equally-spaced DOAs and banded amplitudes."""
    return ArrayScenario(
        d=d, k_true=k, m=m, n=n, doa_deg=default_doas(k),
        overlap=overlap, decay=decay, snr_db=snr_db, seed=seed,
    )


def amplitude_matrix(scenario: ArrayScenario):
    """True K x M amplitudes: banded indicators with linear decay.

    Band k (1-based) covers bins [m_k, m_k + BW] inclusive with
    BW = floor(M/K) and m_k = 1 + (k-1)*ceil((1-overlap)*BW); the entry value
    is 1 - decay*(k-1)/K.
    """
    k, m = scenario.k_true, scenario.m
    a = np.zeros((k, m))
    if k == 0:
        return a
    bw = m // k
    offset = math.ceil((1.0 - scenario.overlap) * bw)
    for i in range(k):
        start = i * offset            # 0-based index of bin m_k
        stop = min(start + bw + 1, m)  # band inclusive of m_k + BW
        a[i, start:stop] = 1.0 - scenario.decay * i / k
    return a


def noise_variances(scenario: ArrayScenario, amps=None):
    """Per-entry frequency-domain noise variance implied by the target SNR.

    SNR is max-source power per tone over the projected noise variance
    sigma0^2 = sigma^2/D; inverting gives sigma^2 = D * max_k(|a_k|^2/M)
    * 10^(-SNR/10).  A pure-noise scenario uses unit reference power.
    """
    if amps is None:
        amps = amplitude_matrix(scenario)
    if scenario.k_true > 0:
        peak_power = float(np.max(np.sum(np.abs(amps) ** 2, axis=1)) / scenario.m)
    else:
        peak_power = 1.0
    sigma0_sq = peak_power * 10.0 ** (-scenario.snr_db / 10.0)
    return scenario.d * sigma0_sq


def _complex_awgn(rng, shape, var):
    scale = math.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synth_freq(scenario: ArrayScenario, rng=None):
    """Frequency-domain data Y = V A + Z with circular complex AWGN Z."""
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    amps = amplitude_matrix(scenario)
    var = noise_variances(scenario, amps)
    z = _complex_awgn(rng, (scenario.d, scenario.m), var)
    if scenario.k_true == 0:
        return FreqData(y=z, noise_var_freq=var)
    v = steering_matrix(scenario.doa_deg, scenario.d)
    return FreqData(y=v @ amps.astype(complex) + z, noise_var_freq=var)


def _tone_matrix(tone_freqs, n):
    """M x N matrix of on-grid tones w_{m,t} = exp(j*gamma_m*t), t = 1..N."""
    t = np.arange(1, n + 1)
    return np.exp(1j * np.outer(np.asarray(tone_freqs, dtype=float), t))


def tone_grid(m, n):
    """Default DFT-bin tone frequencies gamma_m = 2*pi*(m-1)/N, m = 1..M."""
    return 2 * np.pi * np.arange(m) / n


def synth_time(scenario: ArrayScenario, rng=None):
    """Time-domain data X = V A W + E with AWGN of power N*sigma^2."""
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    amps = amplitude_matrix(scenario)
    var_freq = noise_variances(scenario, amps)
    w = _tone_matrix(tone_grid(scenario.m, scenario.n), scenario.n)
    e = _complex_awgn(rng, (scenario.d, scenario.n), scenario.n * var_freq)
    if scenario.k_true == 0:
        return TimeData(x=e)
    v = steering_matrix(scenario.doa_deg, scenario.d)
    return TimeData(x=v @ (amps.astype(complex) @ w) + e)


def fft_reduce(data: TimeData, tone_freqs, noise_var_time=0.0):
    """Project time data onto the tone bins: Y = X W^H / N.

    With on-bin tones W W^H = N*I, so a noiseless round trip through
    synth_time reproduces V A exactly.
    """
    n = data.x.shape[1]
    w = _tone_matrix(tone_freqs, n)
    y = data.x @ w.conj().T / n
    return FreqData(y=y, noise_var_freq=noise_var_time / n)
