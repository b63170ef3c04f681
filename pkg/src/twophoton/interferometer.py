"""Unbalanced Mach-Zehnder / Hong-Ou-Mandel interferometer model.

The pair enters one port, splits, recombines after an arm imbalance Delta,
and is detected in coincidence.  Three amplitudes interfere: both photons
short, both long (pump-phase sensitive), and one-each (the HOM route).  For
a comb source the HOM route revives whenever the two delayed copies of the
comb correlation overlap, i.e. every half round trip.

The pump phase ``w_p * Delta`` is carried as an explicit config field,
reduced mod 2pi, so phase scans decouple from the coarse delay (an optical
period is ~1e-15 s while the delay grid moves in picoseconds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .correlation import (
    coherence_envelope,
    envelope_support,
    generalized_F,
    pair_envelope,
)
from .errors import GridError, ResolutionError
from .spectral import ModeComb

MAX_QUAD_POINTS = 4_194_305
SUPPORT_INTENSITY_EPS = 1e-14


@dataclass(frozen=True)
class InterferometerConfig:
    comb: ModeComb
    delay: float                      # arm imbalance Delta, seconds
    resolution_time: float            # detector resolving time T_R, seconds
    pump_phase: float = 0.0           # w_p*Delta mod 2pi, radians
    mode_match: float = 1.0           # scales all cross-delay interference
    splitter_ratios: tuple = (0.5, 0.5)

    def __post_init__(self):
        if not self.resolution_time > 0:
            raise ValueError(f"resolution_time must be > 0, got {self.resolution_time}")
        if self.delay < 0:
            raise ValueError(f"delay must be >= 0, got {self.delay}")
        if not 0.0 < self.mode_match <= 1.0:
            raise ValueError(f"mode_match must be in (0, 1], got {self.mode_match}")
        t, r = self.splitter_ratios
        if not (0.0 < t < 1.0 and 0.0 < r < 1.0):
            raise ValueError(f"splitter_ratios must lie in (0, 1), got {self.splitter_ratios}")
        if abs(t + r - 1.0) > 1e-9:
            raise ValueError(f"splitter_ratios must sum to 1, got {self.splitter_ratios}")


@dataclass
class ScanResult:
    abscissa: np.ndarray
    coincidence: np.ndarray
    singles_1: np.ndarray
    singles_2: np.ndarray
    metadata: dict

    def __post_init__(self):
        n = len(self.abscissa)
        for name in ("coincidence", "singles_1", "singles_2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} length {arr.shape} != abscissa length {n}")
            if arr.size and arr.min() < 0:
                raise ValueError(f"{name} must be nonnegative")
            setattr(self, name, arr)
        self.abscissa = np.asarray(self.abscissa, dtype=float)


@dataclass(frozen=True)
class CoincidenceResult:
    rate: float
    r0: float            # integrated pair correlation over the resolving window
    visibility: float    # overlap V(Delta), mode-match included
    cross_integral: float


def bs_two_photon_state(transmission: float = 0.5) -> np.ndarray:
    """Amplitudes over {|2,0>, |0,2>, |1,1>} after a pair hits one splitter port.

    Built by applying the transformed creation operator twice to vacuum in the
    two-mode Fock space (not hard-coded): a+ -> sqrt(T) a+ + sqrt(1-T) b+.
    A 50:50 splitter gives (1/2, 1/2, sqrt(2)/2).
    """
    if not 0.0 <= transmission <= 1.0:
        raise ValueError(f"transmission must be in [0, 1], got {transmission}")
    basis = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    index = {s: i for i, s in enumerate(basis)}
    dim = len(basis)
    a_dag = np.zeros((dim, dim))
    b_dag = np.zeros((dim, dim))
    for (na, nb), i in index.items():
        if (na + 1, nb) in index:
            a_dag[index[(na + 1, nb)], i] = math.sqrt(na + 1)
        if (na, nb + 1) in index:
            b_dag[index[(na, nb + 1)], i] = math.sqrt(nb + 1)
    out_op = math.sqrt(transmission) * a_dag + math.sqrt(1.0 - transmission) * b_dag
    vac = np.zeros(dim)
    vac[index[(0, 0)]] = 1.0
    state = out_op @ (out_op @ vac)
    state = state / np.linalg.norm(state)
    return np.array([state[index[(2, 0)]], state[index[(0, 2)]], state[index[(1, 1)]]])


def _comb_amplitude(tau, comb: ModeComb, method: str = "closed"):
    """Pair time amplitude X(tau) = g(tau) F(tau)."""
    return pair_envelope(comb.single_mode, tau, method) * generalized_F(tau, comb)


def _route_amplitudes(cfg: InterferometerConfig):
    t, r = cfg.splitter_ratios
    a = t - r * np.exp(1j * cfg.pump_phase)          # short-short minus long-long
    b = math.sqrt(t * r) * np.exp(1j * cfg.pump_phase / 2.0)  # HOM route
    return a, b, t * r


def gamma12(tau, cfg: InterferometerConfig, method: str = "closed"):
    """Two-detector correlation at delay tau between the detections.

    All three interference terms are evaluated pointwise, including the cross
    term that vanishes once integrated over the resolving window.  mode_match
    scales every product of amplitudes taken at different delays.
    """
    a, b, tr_prod = _route_amplitudes(cfg)
    m = cfg.mode_match
    tau = np.asarray(tau, dtype=float)
    x0 = _comb_amplitude(tau, cfg.comb, method)
    xp = _comb_amplitude(tau + cfg.delay, cfg.comb, method)
    xm = _comb_amplitude(tau - cfg.delay, cfg.comb, method)
    term_ss_ll = np.abs(a) ** 2 * np.abs(x0) ** 2
    term_hom = tr_prod * (
        np.abs(xp) ** 2 + np.abs(xm) ** 2 - 2.0 * m * np.real(xp * np.conj(xm))
    )
    term_cross = 2.0 * m * np.real(np.conj(a) * b * np.conj(x0) * (xp - xm))
    out = term_ss_ll + term_hom + term_cross
    return out if np.ndim(out) else float(out)


def _quad_grid(cfg: InterferometerConfig, samples_per_peak: int):
    comb = cfg.comb
    t_r = comb.round_trip_time
    support = envelope_support(comb.single_mode, SUPPORT_INTENSITY_EPS)
    half = min(cfg.resolution_time / 2.0, abs(cfg.delay) + support)
    dt_target = t_r / (comb.n_modes * samples_per_peak)
    n = int(math.ceil(2.0 * half / dt_target)) + 1
    if n % 2 == 0:
        n += 1
    if n > MAX_QUAD_POINTS:
        raise GridError(
            f"coincidence quadrature needs {n} samples "
            f"(window {2 * half:.3e} s at {dt_target:.3e} s); "
            f"cap is {MAX_QUAD_POINTS}"
        )
    n = max(n, 3)
    tau = np.linspace(-half, half, n)
    h = tau[1] - tau[0]
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return tau, w * (h / 3.0)


@dataclass(frozen=True)
class _WindowIntegrals:
    r0: float
    r_plus: float
    r_minus: float
    overlap: float        # Re int X(tau+D) X*(tau-D) dtau
    cross: float


def _window_integrals(
    cfg: InterferometerConfig, method: str = "closed", samples_per_peak: int = 16
) -> _WindowIntegrals:
    tau, w = _quad_grid(cfg, samples_per_peak)
    comb = cfg.comb
    x0 = _comb_amplitude(tau, comb, method)
    xp = _comb_amplitude(tau + cfg.delay, comb, method)
    xm = _comb_amplitude(tau - cfg.delay, comb, method)
    a, b, _ = _route_amplitudes(cfg)
    r0 = float(np.sum(w * np.abs(x0) ** 2))
    r_plus = float(np.sum(w * np.abs(xp) ** 2))
    r_minus = float(np.sum(w * np.abs(xm) ** 2))
    overlap = float(np.sum(w * np.real(xp * np.conj(xm))))
    cross = float(np.sum(w * np.real(np.conj(a) * b * np.conj(x0) * (xp - xm))))
    return _WindowIntegrals(r0, r_plus, r_minus, overlap, cross)


def coincidence_rate(
    cfg: InterferometerConfig, method: str = "closed", samples_per_peak: int = 16
) -> CoincidenceResult:
    """Coincidence rate integrated over the detector resolving window.

    Returns the rate together with the baseline R0 and the overlap visibility
    V(Delta).  The pointwise cross term must integrate away; this is asserted
    against 1e-6 * R0.
    """
    if cfg.resolution_time < cfg.delay:
        raise ResolutionError(
            f"resolution_time {cfg.resolution_time:.3e} s is shorter than the "
            f"delay {cfg.delay:.3e} s; the integrated-rate model does not apply"
        )
    ints = _window_integrals(cfg, method, samples_per_peak)
    a, _, tr_prod = _route_amplitudes(cfg)
    m = cfg.mode_match
    v = m * ints.overlap / ints.r0
    cross_int = 2.0 * m * ints.cross
    assert abs(cross_int) < 1e-6 * ints.r0, (
        f"cross term {cross_int:.3e} did not integrate away (R0 = {ints.r0:.3e})"
    )
    rate = (
        float(np.abs(a) ** 2) * ints.r0
        + tr_prod * (ints.r_plus + ints.r_minus)
        - 2.0 * tr_prod * v * ints.r0
        + cross_int
    )
    if rate < -1e-9 * ints.r0:
        raise ArithmeticError(f"negative coincidence rate {rate:.3e}; quadrature inconsistent")
    return CoincidenceResult(max(rate, 0.0), ints.r0, v, cross_int)


def dither_averaged_rate(
    cfg: InterferometerConfig, method: str = "closed", samples_per_peak: int = 16
) -> CoincidenceResult:
    """Coincidence rate with the pump phase dithered uniformly.

    The phase-sensitive route averages to a constant floor, so the deepest
    possible dip is half the far-from-dip rate: the 50% visibility ceiling.
    """
    if cfg.resolution_time < cfg.delay:
        raise ResolutionError(
            f"resolution_time {cfg.resolution_time:.3e} s is shorter than the "
            f"delay {cfg.delay:.3e} s; the integrated-rate model does not apply"
        )
    ints = _window_integrals(cfg, method, samples_per_peak)
    t, r = cfg.splitter_ratios
    v = cfg.mode_match * ints.overlap / ints.r0
    rate = (t**2 + r**2) * ints.r0 + 2.0 * t * r * ints.r0 * (1.0 - v)
    if rate < -1e-9 * ints.r0:
        raise ArithmeticError(f"negative coincidence rate {rate:.3e}; quadrature inconsistent")
    return CoincidenceResult(max(rate, 0.0), ints.r0, v, 0.0)


def singles_fringe_visibility(cfg: InterferometerConfig, method: str = "closed") -> float:
    """Single-detector fringe visibility |gamma(Delta)|, mode match included."""
    comb = cfg.comb
    g1 = coherence_envelope(comb.single_mode, np.array([cfg.delay]), method)[0]
    f_d = complex(generalized_F(cfg.delay, comb))
    f_0 = complex(generalized_F(0.0, comb))
    return cfg.mode_match * abs(g1 * f_d) / abs(f_0)


def _fit_sinusoid(phase: np.ndarray, y: np.ndarray):
    """Least-squares fit y ~ a0 + b_c cos + b_s sin; returns (offset, amplitude)."""
    design = np.column_stack([np.ones_like(phase), np.cos(phase), np.sin(phase)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[0]), float(np.hypot(coef[1], coef[2]))


def phase_fringe_scan(
    cfg: InterferometerConfig,
    phase_points,
    method: str = "closed",
    samples_per_peak: int = 16,
) -> ScanResult:
    """Scan the pump phase at fixed arm delay.

    Single-detector counts fringe in anti-phase with visibility |gamma(Delta)|;
    the coincidence follows the integrated two-detector rate with the
    phase-sensitive term scanned.
    """
    phase = np.asarray(phase_points, dtype=float)
    ints = _window_integrals(cfg, method, samples_per_peak)
    t, r = cfg.splitter_ratios
    v = cfg.mode_match * ints.overlap / ints.r0
    a_abs_sq = t**2 + r**2 - 2.0 * t * r * np.cos(phase)
    coincidence = a_abs_sq * ints.r0 + 2.0 * t * r * ints.r0 * (1.0 - v)
    s_vis = singles_fringe_visibility(cfg, method)
    singles_1 = 1.0 + s_vis * np.cos(phase)
    singles_2 = 1.0 - s_vis * np.cos(phase)
    fits = {}
    for name, y in (("coincidence", coincidence), ("singles_1", singles_1), ("singles_2", singles_2)):
        offset, amp = _fit_sinusoid(phase, y)
        fits[name] = amp / offset if offset else float("nan")
    return ScanResult(
        abscissa=phase,
        coincidence=coincidence,
        singles_1=singles_1,
        singles_2=singles_2,
        metadata={
            "kind": "phase_fringe",
            "delay": cfg.delay,
            "r0": ints.r0,
            "visibility_v": v,
            "singles_visibility": s_vis,
            "fitted_visibility": fits,
        },
    )


def delay_scan(
    cfg: InterferometerConfig,
    delay_points,
    dithered: bool = True,
    method: str = "closed",
    samples_per_peak: int = 16,
) -> ScanResult:
    """Scan the arm imbalance and normalize to the wings.

    Normalization emulates stitching separate runs together: the baseline is
    the mean rate over points with negligible overlap (|V| < 0.01); if the
    scan has no such wings the analytic far-from-dip rate is used.
    """
    delays = np.asarray(delay_points, dtype=float)
    t, r = cfg.splitter_ratios
    rates = np.empty_like(delays)
    vis = np.empty_like(delays)
    r0 = None
    for i, d in enumerate(delays):
        point = replace(cfg, delay=float(d))
        res = (
            dither_averaged_rate(point, method, samples_per_peak)
            if dithered
            else coincidence_rate(point, method, samples_per_peak)
        )
        rates[i] = res.rate
        vis[i] = res.visibility
        r0 = res.r0
    if dithered:
        analytic_baseline = (t**2 + r**2 + 2.0 * t * r) * r0
    else:
        a, _, _ = _route_amplitudes(cfg)
        analytic_baseline = (float(np.abs(a) ** 2) + 2.0 * t * r) * r0
    wings = np.abs(vis) < 0.01
    # the wings mean emulates stitching runs together; the overlap's side
    # lobes leave it a few permil off the analytic far-from-dip rate
    baseline = float(rates[wings].mean()) if wings.any() else analytic_baseline
    if dithered:
        singles_1 = np.ones_like(delays)
        singles_2 = np.ones_like(delays)
    else:
        s_vis = np.array(
            [singles_fringe_visibility(replace(cfg, delay=float(d)), method) for d in delays]
        )
        singles_1 = 1.0 + s_vis * math.cos(cfg.pump_phase)
        singles_2 = 1.0 - s_vis * math.cos(cfg.pump_phase)
    return ScanResult(
        abscissa=delays,
        coincidence=rates / baseline,
        singles_1=singles_1,
        singles_2=singles_2,
        metadata={
            "kind": "delay_scan",
            "dithered": dithered,
            "baseline": baseline,
            "analytic_baseline": analytic_baseline,
            "n_wing_points": int(wings.sum()),
            "visibility": vis,
        },
    )


def find_dip_delays(scan: ScanResult, min_depth: float = 0.10) -> np.ndarray:
    """Locations of coincidence dips in a normalized delay scan.

    A dip is a local minimum (endpoints included) at least ``min_depth`` below
    the unit baseline.  The depth floor matters: the comb-overlap visibility
    has Dirichlet-kernel side lobes a few percent deep on the flanks of every
    revival, which are real local minima of the model but not revivals.
    Runs of equal values collapse to their first index.
    """
    y = scan.coincidence
    n = y.size
    candidates = []
    for i in range(n):
        left = y[i - 1] if i > 0 else np.inf
        right = y[i + 1] if i < n - 1 else np.inf
        if y[i] <= left and y[i] <= right and (1.0 - y[i]) >= min_depth:
            if candidates and candidates[-1] == i - 1 and y[i] == y[i - 1]:
                continue
            candidates.append(i)
    return scan.abscissa[np.array(candidates, dtype=int)] if candidates else np.array([])
