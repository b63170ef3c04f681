"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's own transform code paths:
brute-force mode sums, trapezoid/Simpson integrals written from the
definitions, and a double-convolution model of detector jitter.  Tests
compare the package against these, never against itself.
"""

import math

import numpy as np
import pytest

from twophoton import ModeComb, Shape, SpectralAmplitude

TWO_PI = 2.0 * math.pi


def make_comb(
    n_side_modes=10,
    linewidth_frac=0.01,
    shape=Shape.LORENTZIAN,
    round_trip=1.0,
    phases=(),
    pump_frequency=None,
    center=0.0,
):
    spacing = TWO_PI / round_trip
    return ModeComb(
        n_side_modes=n_side_modes,
        mode_spacing=spacing,
        pump_frequency=pump_frequency if pump_frequency is not None else 800.0 * spacing,
        single_mode=SpectralAmplitude(
            shape=shape, halfwidth=linewidth_frac * spacing, center=center
        ),
        mode_phases=phases,
    )


@pytest.fixture
def comb10():
    return make_comb(10, 0.01)


def brute_force_comb_sum(comb, omega):
    """Joint spectral amplitude by an explicit per-mode loop (no vectorized path)."""
    total = 0.0 + 0.0j
    for k, m in enumerate(range(-comb.n_side_modes, comb.n_side_modes + 1)):
        u = omega + m * comb.mode_spacing - comb.single_mode.center
        hw = comb.single_mode.halfwidth
        if comb.single_mode.shape is Shape.LORENTZIAN:
            line = 1.0 / (1.0 - 1j * u / hw)
        elif comb.single_mode.shape is Shape.GAUSSIAN:
            line = math.exp(-(u**2) / (2.0 * hw**2))
        else:
            line = 1.0 if abs(u) <= hw else 0.0
        total += np.exp(1j * comb.mode_phases[k]) * line
    return total


def pair_profile(s, u):
    """Exchange-symmetrized line profile, written out per shape."""
    if s.shape is Shape.LORENTZIAN:
        return 1.0 / (1.0 + (u / s.halfwidth) ** 2)
    if s.shape is Shape.GAUSSIAN:
        return np.exp(-(u**2) / (2.0 * s.halfwidth**2))
    return np.where(np.abs(u) <= s.halfwidth, 1.0, 0.0)


def intensity_profile(s, u):
    if s.shape is Shape.LORENTZIAN:
        return 1.0 / (1.0 + (u / s.halfwidth) ** 2)
    if s.shape is Shape.GAUSSIAN:
        return np.exp(-(u**2) / (s.halfwidth**2))
    return np.where(np.abs(u) <= s.halfwidth, 1.0, 0.0)


def transform_oracle(profile, s, tau, span_halfwidths=2000.0, n=2_000_001):
    """Normalized cosine transform by trapezoid on a very wide, fine grid."""
    if s.shape is Shape.RECTANGULAR:
        span = s.halfwidth
    else:
        span = span_halfwidths * s.halfwidth
    u = np.linspace(-span, span, n)
    f = profile(s, u)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    vals = np.empty(tau.shape)
    for i, t in enumerate(tau):
        vals[i] = np.trapezoid(f * np.cos(u * t), u)
    return vals / np.trapezoid(f, u)


def dirichlet_oracle(tau, n_side, spacing):
    """Comb factor by the explicit cosine sum."""
    tau = np.asarray(tau, dtype=float)
    total = np.ones_like(tau)
    for m in range(1, n_side + 1):
        total = total + 2.0 * np.cos(m * spacing * tau)
    return total


def moving_average_oracle(samples, window):
    """Reflective-pad windowed mean by direct slicing."""
    n = samples.size
    pad_l = (window - 1) // 2
    pad_r = window - 1 - pad_l
    padded = np.concatenate([samples[1 : pad_l + 1][::-1], samples, samples[n - pad_r - 1 : n - 1][::-1]])
    out = np.empty(n)
    for i in range(n):
        out[i] = padded[i : i + window].mean()
    return out


def jitter_convolution_oracle(trace_tau, trace_dens, resolution_time, edges):
    """Expected bin probabilities after two independent rectangular jitters.

    Zero-pads the density, convolves twice with a unit-area rectangle of the
    resolution width, and integrates the result over the histogram bins.
    """
    dt = trace_tau[1] - trace_tau[0]
    pad = int(round((resolution_time + abs(edges).max() * 0.1) / dt)) + 4
    dens = np.concatenate([np.zeros(pad), trace_dens, np.zeros(pad)])
    tau = np.concatenate(
        [
            trace_tau[0] - dt * np.arange(pad, 0, -1),
            trace_tau,
            trace_tau[-1] + dt * np.arange(1, pad + 1),
        ]
    )
    if resolution_time > 0:
        k = int(round(resolution_time / dt))
        k = k + 1 if k % 2 == 0 else k
        kern = np.full(k, 1.0 / k)
        dens = np.convolve(np.convolve(dens, kern, mode="same"), kern, mode="same")
    mass = 0.5 * (dens[1:] + dens[:-1]) * dt
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    cdf = cdf / cdf[-1]
    probs = np.interp(edges[1:], tau, cdf) - np.interp(edges[:-1], tau, cdf)
    return probs
