"""Time-domain correlation functions of the mode-locked pair source.

The two-photon correlation factorizes into a slow pair envelope (Fourier
transform of the single-line pair spectrum) and a fast comb factor (the
Dirichlet kernel of 2N+1 equally spaced modes, period one cavity round
trip).  First-order coherence carries the same comb factor on top of the
transform of the line intensity.

Every envelope has both a closed form and a Simpson-quadrature route; the
quadrature serves as an independent cross-check and handles custom spectra.
Quadrature sums use numpy's pairwise summation, so results do not depend on
evaluation order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import sici

from .errors import GridError, NyquistError, WindowError
from .spectral import ModeComb, Shape, SpectralAmplitude, TimeGrid

#: half-span of the quadrature window in units of the halfwidth
QUAD_SPAN_HALFWIDTHS = 50.0
QUAD_POINTS = 100_001


class TraceKind(str, enum.Enum):
    AMPLITUDE = "amplitude"
    INTENSITY = "intensity"


@dataclass(frozen=True)
class CorrelationTrace:
    """Sampled correlation function on a uniform delay grid.

    ``normalization`` records the scale divided out of the raw transform;
    ``round_trip_time`` travels with comb-derived traces so detector
    averaging can check its window against the comb period.
    """

    grid: TimeGrid
    samples: np.ndarray
    kind: TraceKind
    normalization: float = 1.0
    round_trip_time: float | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.shape != (self.grid.n_points,):
            raise ValueError(
                f"samples length {samples.shape} != grid n_points {self.grid.n_points}"
            )
        if self.kind is TraceKind.INTENSITY:
            if np.iscomplexobj(samples):
                scale = float(np.max(np.abs(samples))) or 1.0
                if float(np.max(np.abs(samples.imag))) > 1e-10 * scale:
                    raise ValueError("intensity trace has non-negligible imaginary part")
                samples = samples.real
            if samples.size and float(samples.min()) < 0.0:
                raise ValueError("intensity trace has negative samples")
        object.__setattr__(self, "samples", samples)


def dirichlet_F(tau, n_side_modes: int, mode_spacing: float):
    """Comb factor sin[(2N+1)x]/sin(x) with x = mode_spacing*tau/2.

    Continuous everywhere: within 1e-6 of a removable singularity the ratio
    is evaluated from the reduced angle, giving 2N+1 at every multiple of
    the round-trip time.
    """
    if n_side_modes < 0:
        raise ValueError("n_side_modes must be >= 0")
    if not mode_spacing > 0:
        raise ValueError("mode_spacing must be > 0")
    n_modes = 2 * n_side_modes + 1
    x = np.asarray(tau, dtype=float) * (mode_spacing / 2.0)
    u = x - np.round(x / math.pi) * math.pi
    near_pole = np.abs(u) < 1e-6
    den = np.sin(x)
    den_safe = np.where(near_pole, 1.0, den)
    direct = np.sin(n_modes * x) / den_safe
    # exact identity: sin((2N+1)x)/sin(x) = sin((2N+1)u)/sin(u) for x = k*pi + u
    reduced = n_modes * np.sinc(n_modes * u / math.pi) / np.sinc(u / math.pi)
    out = np.where(near_pole, reduced, direct)
    return out if out.ndim else float(out)


def generalized_F(tau, comb: ModeComb):
    """Phase-resolved comb factor; reduces to dirichlet_F for a locked comb."""
    if comb.is_locked:
        f = dirichlet_F(tau, comb.n_side_modes, comb.mode_spacing)
        return np.asarray(f, dtype=complex) if np.ndim(tau) else complex(f)
    tau = np.asarray(tau, dtype=float)
    # m-th mode carries e^{-i m dOm tau}: build by recurrence from the m = -N edge
    step_down = np.exp(-1j * comb.mode_spacing * tau)
    carrier = np.exp(1j * comb.n_side_modes * comb.mode_spacing * tau)
    out = np.zeros(tau.shape, dtype=complex)
    for phi in comb.mode_phases:
        out = out + np.exp(1j * phi) * carrier
        carrier = carrier * step_down
    return out if out.ndim else complex(out)


def envelope_support(s: SpectralAmplitude, intensity_eps: float = 1e-12) -> float:
    """Delay beyond which the envelope intensity stays below intensity_eps."""
    hw = s.halfwidth
    if s.shape is Shape.LORENTZIAN:
        return -math.log(intensity_eps) / (2.0 * hw)
    if s.shape is Shape.GAUSSIAN:
        return math.sqrt(-math.log(intensity_eps)) / hw
    # sinc envelope: |g| <= 1/(hw*tau)
    return 1.0 / (hw * math.sqrt(intensity_eps))


def _simpson_weights(n: int, h: float) -> np.ndarray:
    if n < 3 or n % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of nodes >= 3")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def _lorentzian_tail(hw: float, a: float, tau: np.ndarray) -> np.ndarray:
    """2 * int_a^inf hw^2/(hw^2+u^2) cos(u tau) du, by asymptotic series.

    Two terms of the large-u expansion; relative error ~(hw/a)^6 of the tail.
    """
    t = np.abs(tau)
    out = np.empty_like(t)
    zero = t == 0.0
    out[zero] = 2.0 * (hw**2 / a - hw**4 / (3.0 * a**3))
    tz = t[~zero]
    si, _ = sici(a * tz)
    rest = math.pi / 2.0 - si
    i2 = np.cos(a * tz) / a - tz * rest
    i4 = (
        np.cos(a * tz) / (3.0 * a**3)
        - tz * np.sin(a * tz) / (6.0 * a**2)
        - tz**2 * np.cos(a * tz) / (6.0 * a)
        + tz**3 * rest / 6.0
    )
    out[~zero] = 2.0 * (hw**2 * i2 - hw**4 * i4)
    return out


def _cosine_transform_quadrature(
    shape: Shape,
    hw: float,
    power: int,
    tau: np.ndarray,
    span_halfwidths: float,
    n_points: int,
) -> np.ndarray:
    """int f(u) e^{-iu tau} du for the even line profile f (amplitude or intensity).

    ``power`` selects the pair amplitude profile (1) or the line intensity
    profile (2); both are even and real, so the transform is a real cosine
    transform.  The heavy Lorentzian tail outside the Simpson window is added
    back analytically.
    """
    if shape is Shape.RECTANGULAR:
        a = hw  # compact support
    else:
        a = span_halfwidths * hw
    n = n_points if n_points % 2 == 1 else n_points + 1
    u = np.linspace(-a, a, n)
    if shape is Shape.LORENTZIAN:
        f = 1.0 / (1.0 + (u / hw) ** 2)  # same profile for amplitude and intensity
    elif shape is Shape.GAUSSIAN:
        f = np.exp(-power * u**2 / (2.0 * hw**2))
    else:
        f = np.ones_like(u)
    w = _simpson_weights(n, u[1] - u[0]) * f
    out = np.array([np.sum(w * np.cos(u * t)) for t in np.atleast_1d(tau)])
    if shape is Shape.LORENTZIAN:
        out = out + _lorentzian_tail(hw, a, np.atleast_1d(tau))
    return out


def _closed_cosine_transform(shape: Shape, hw: float, power: int, tau: np.ndarray):
    """Closed forms of the cosine transforms, with their tau=0 scale."""
    t = np.abs(np.asarray(tau, dtype=float))
    if shape is Shape.LORENTZIAN:
        return math.pi * hw * np.exp(-hw * t), math.pi * hw
    if shape is Shape.GAUSSIAN:
        sigma = hw / math.sqrt(power)
        scale = math.sqrt(2.0 * math.pi) * sigma
        return scale * np.exp(-(sigma**2) * t**2 / 2.0), scale
    return 2.0 * hw * np.sinc(hw * t / math.pi), 2.0 * hw


def pair_envelope(
    s: SpectralAmplitude,
    tau,
    method: str = "closed",
    span_halfwidths: float = QUAD_SPAN_HALFWIDTHS,
    quad_points: int = QUAD_POINTS,
):
    """Normalized pair envelope g(tau): transform of the pair spectrum, g(0)=1.

    A line centered off zero contributes the carrier e^{-i*center*tau}.
    """
    tau = np.asarray(tau, dtype=float)
    if method == "closed":
        core, scale = _closed_cosine_transform(s.shape, s.halfwidth, 1, tau)
    elif method == "quadrature":
        core = _cosine_transform_quadrature(
            s.shape, s.halfwidth, 1, tau, span_halfwidths, quad_points
        )
        scale = float(
            _cosine_transform_quadrature(
                s.shape, s.halfwidth, 1, np.zeros(1), span_halfwidths, quad_points
            )[0]
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    return (core / scale) * np.exp(-1j * s.center * tau)


def coherence_envelope(
    s: SpectralAmplitude,
    tau,
    method: str = "closed",
    span_halfwidths: float = QUAD_SPAN_HALFWIDTHS,
    quad_points: int = QUAD_POINTS,
):
    """Normalized field-coherence envelope G(tau): transform of the line intensity."""
    tau = np.asarray(tau, dtype=float)
    if method == "closed":
        core, scale = _closed_cosine_transform(s.shape, s.halfwidth, 2, tau)
    elif method == "quadrature":
        core = _cosine_transform_quadrature(
            s.shape, s.halfwidth, 2, tau, span_halfwidths, quad_points
        )
        scale = float(
            _cosine_transform_quadrature(
                s.shape, s.halfwidth, 2, np.zeros(1), span_halfwidths, quad_points
            )[0]
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    return (core / scale) * np.exp(1j * s.center * tau)


def _check_nyquist(s: SpectralAmplitude, grid: TimeGrid, span_halfwidths: float):
    # highest detuning carried by the transform: the quadrature span, which for
    # the compactly supported rectangle is just the halfwidth itself
    span = s.halfwidth if s.shape is Shape.RECTANGULAR else span_halfwidths * s.halfwidth
    limit = math.pi / (10.0 * span)
    if grid.spacing >= limit:
        raise NyquistError(
            f"grid spacing {grid.spacing:.3e} s undersamples the spectrum: "
            f"needs < {limit:.3e} s for spectral content out to {span:.3e} rad/s"
        )


def envelope_g(
    s: SpectralAmplitude,
    grid: TimeGrid,
    method: str = "closed",
    span_halfwidths: float = QUAD_SPAN_HALFWIDTHS,
    quad_points: int = QUAD_POINTS,
) -> CorrelationTrace:
    """Pair envelope sampled on a grid, normalized to g(0) = 1."""
    _check_nyquist(s, grid, span_halfwidths)
    vals = pair_envelope(s, grid.values, method, span_halfwidths, quad_points)
    _, scale = _closed_cosine_transform(s.shape, s.halfwidth, 1, np.zeros(1))
    return CorrelationTrace(grid, vals, TraceKind.AMPLITUDE, normalization=scale)


def envelope_G(
    s: SpectralAmplitude,
    grid: TimeGrid,
    method: str = "closed",
    span_halfwidths: float = QUAD_SPAN_HALFWIDTHS,
    quad_points: int = QUAD_POINTS,
) -> CorrelationTrace:
    """Field-coherence envelope sampled on a grid, normalized to G(0) = 1."""
    _check_nyquist(s, grid, span_halfwidths)
    vals = coherence_envelope(s, grid.values, method, span_halfwidths, quad_points)
    _, scale = _closed_cosine_transform(s.shape, s.halfwidth, 2, np.zeros(1))
    return CorrelationTrace(grid, vals, TraceKind.AMPLITUDE, normalization=scale)


def _check_peak_resolution(comb: ModeComb, grid: TimeGrid, samples_per_peak: int = 8):
    peak_width = comb.round_trip_time / comb.n_modes
    if grid.spacing > peak_width / samples_per_peak:
        raise GridError(
            f"grid spacing {grid.spacing:.3e} s cannot resolve comb peaks of width "
            f"{peak_width:.3e} s (need >= {samples_per_peak} samples per peak)"
        )


def gamma2_mode_locked(comb: ModeComb, grid: TimeGrid, method: str = "closed") -> CorrelationTrace:
    """Two-photon correlation |g(tau) F(tau)|^2.

    Peak-normalized: a locked comb gives (2N+1)^2 at tau = 0 and full revivals
    at every round trip, with the envelope decay on top.
    """
    _check_peak_resolution(comb, grid)
    tau = grid.values
    g = pair_envelope(comb.single_mode, tau, method)
    F = generalized_F(tau, comb)
    samples = np.abs(g * F) ** 2
    return CorrelationTrace(
        grid,
        samples,
        TraceKind.INTENSITY,
        round_trip_time=comb.round_trip_time,
    )


def gamma2_detector_averaged(trace: CorrelationTrace, resolution_time: float) -> CorrelationTrace:
    """Moving average of an intensity trace over the detector resolving time.

    Models a slow detector: with the window spanning several round trips, the
    comb washes out and only the envelope contour A|g(tau)|^2 survives.
    Reflective padding avoids spurious decay at the grid edges.
    """
    if trace.kind is not TraceKind.INTENSITY:
        raise ValueError("detector averaging applies to intensity traces")
    t_r = trace.round_trip_time
    if t_r is None:
        raise ValueError("trace carries no round_trip_time; cannot check the averaging regime")
    if resolution_time < 3.0 * t_r:
        raise WindowError(
            f"resolution_time {resolution_time:.3e} s < 3 round trips "
            f"({3.0 * t_r:.3e} s); the averaging regime does not apply"
        )
    dt = trace.grid.spacing
    w = max(1, int(round(resolution_time / dt)))
    if w >= trace.grid.n_points:
        raise WindowError("averaging window exceeds the trace length")
    if w == 1:
        return replace(trace)
    pad_left = (w - 1) // 2
    pad_right = w - 1 - pad_left
    padded = np.pad(trace.samples, (pad_left, pad_right), mode="reflect")
    averaged = np.convolve(padded, np.full(w, 1.0 / w), mode="valid")
    return replace(trace, samples=averaged)


def gamma1_coherence(comb: ModeComb, grid: TimeGrid, method: str = "closed") -> CorrelationTrace:
    """First-order coherence e^{i w_p tau/2} G(tau) F(tau), unit modulus at tau = 0.

    Its modulus sets the single-detector fringe visibility; for a locked comb
    it revives at full round trips only.
    """
    _check_peak_resolution(comb, grid)
    tau = grid.values
    G = coherence_envelope(comb.single_mode, tau, method)
    F = generalized_F(tau, comb)
    f0 = abs(complex(generalized_F(0.0, comb)))
    if f0 < 1e-12 * comb.n_modes:
        raise ValueError("comb phases make the zero-delay coherence vanish; cannot normalize")
    samples = np.exp(1j * comb.pump_frequency * tau / 2.0) * G * F / f0
    return CorrelationTrace(
        grid,
        samples,
        TraceKind.AMPLITUDE,
        normalization=f0,
        round_trip_time=comb.round_trip_time,
    )
