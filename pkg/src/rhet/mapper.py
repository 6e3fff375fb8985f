"""Filter-phase maps: the filtered spectrum as a function of theta.

The slow ("exact") path reruns the estimator at every theta. The fast path
exploits that theta enters the spectrum only through the scalar phase
e^{-i 2 theta} on one complex row:

    S(theta, w) = c0 * P0(w) + c1 * Re[e^{-i 2 theta} G(w)]

P0 and G are theta-independent and come from the same demodulated streams
the estimator uses, so for the tbar variant the fast path reproduces the
exact path to floating-point rounding; for t0 it keeps the filter's
fundamental only (the exact path samples the true square wave), which
agrees to a couple percent on band-limited spectra. Rows are assembled with
one (n_theta x 2) @ (2 x n_freq) product, fixed-order and bit-identical for
any worker count.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from scipy import fft as sfft

from .analytic import filter_coefficients
from .core import PhaseSeries, Spectrum, ThetaMap, TimeTrace
from .estimator import _segment_views, _spectrum_grid, rhet_spectrum
from .parallel import resolve_workers


def _theta_grid(n_theta: int) -> np.ndarray:
    if n_theta < 2:
        raise ValueError("n_theta must be >= 2")
    return np.linspace(0.0, np.pi, n_theta, endpoint=False)


def _band_mask(freqs: np.ndarray, band) -> np.ndarray:
    if band is None:
        return np.ones(freqs.size, dtype=bool)
    lo, hi = band
    if not (hi > lo):
        raise ValueError("band must be (lo, hi) with hi > lo")
    m = (freqs >= lo) & (freqs <= hi)
    if not np.any(m):
        raise ValueError("band selects no frequency bins")
    return m


def theta_map_exact(trace: TimeTrace, epsilon: float, n_theta: int = 800,
                    variant: str = "tbar", segments: int = 1,
                    band=None, phase_correction: Optional[PhaseSeries] = None,
                    workers=None) -> ThetaMap:
    """Reference map: one full estimator run per theta row."""
    thetas = _theta_grid(n_theta)
    rows = []
    freqs = None
    mask = None
    for th in thetas:
        spec = rhet_spectrum(trace, epsilon, th, variant=variant,
                             segments=segments,
                             phase_correction=phase_correction,
                             workers=workers)
        if freqs is None:
            mask = _band_mask(spec.freqs, band)
            freqs = spec.freqs[mask]
        rows.append(spec.values[mask])
    return ThetaMap(thetas=thetas, freqs=freqs, spectra=np.array(rows),
                    meta={"variant": variant, "epsilon": float(epsilon),
                          "segments": segments, "path": "exact"})


def _segment_streams(seg, dt, omega_beat, t_off, variant, dyn, workers):
    """theta-independent rows for one segment: (P0, G) on the shifted grid.

    P0 is the plain Welch row; G is the complex correlation row such that
    the filtered spectrum is c0*P0 + c1*Re[e^{-i phi0} G].
    """
    n = seg.size
    t_abs = np.arange(n) * dt + t_off
    f_i = sfft.fft(seg, workers=workers)
    p0 = (dt / n) * np.abs(f_i) ** 2
    if dyn is None:
        x = np.exp(-2j * omega_beat * t_abs) * seg
        y = seg.astype(complex)
    else:
        dv = dyn.sample_at(t_abs)
        x = np.exp(-1j * (2.0 * omega_beat * t_abs - 0.5 * dv)) * seg
        y = np.exp(-0.5j * dv) * seg
    c1s = sfft.ifft(np.conj(sfft.fft(x, workers=workers))
                    * sfft.fft(y, workers=workers), workers=workers) / n
    if variant == "tbar":
        tau = np.where(np.arange(n) <= n // 2,
                       np.arange(n), np.arange(n) - n) * dt
        w = np.exp(1j * omega_beat * tau) * c1s
    else:
        w = c1s
    d = sfft.fft(w, workers=workers)
    g = dt * (d + d[(-np.arange(n)) % n])
    return np.fft.fftshift(p0), np.fft.fftshift(g)


def theta_map_fast(trace: TimeTrace, epsilon: float, n_theta: int = 800,
                   variant: str = "tbar", segments: int = 1,
                   band=None, phase_correction: Optional[PhaseSeries] = None,
                   workers=None) -> ThetaMap:
    """Stream-synthesized map; see module docstring for the contract."""
    if variant not in ("t0", "tbar"):
        raise ValueError("variant must be 't0' or 'tbar'")
    workers = resolve_workers(workers)
    thetas = _theta_grid(n_theta)
    dyn = None
    if phase_correction is not None:
        # same anchor as rhet_spectrum: nominal phase, not the series start
        dyn = PhaseSeries(
            times=phase_correction.times,
            theta=-2.0 * (phase_correction.theta - trace.theta_nominal))
    n_seg = trace.n // segments
    freqs = _spectrum_grid(n_seg, trace.dt)
    mask = _band_mask(freqs, band)
    p0_acc = None
    g_acc = None
    for t_off, seg in _segment_views(trace, segments):
        p0, g = _segment_streams(seg, trace.dt, trace.omega_beat, t_off,
                                 variant, dyn, workers)
        p0 = p0[mask]
        g = g[mask]
        if p0_acc is None:
            p0_acc, g_acc = p0, g
        else:
            p0_acc = p0_acc + p0
            g_acc = g_acc + g
    p0_acc = p0_acc / segments
    g_acc = g_acc / segments
    c0 = filter_coefficients(epsilon, 0)
    c1 = filter_coefficients(epsilon, 1)
    phi0 = 2.0 * thetas
    # Re[e^{-i phi0} G] = cos(phi0) Re G + sin(phi0) Im G, as one matmul
    coeff = np.stack((np.cos(phi0), np.sin(phi0)), axis=1) * c1
    parts = np.stack((g_acc.real, g_acc.imag), axis=0)
    rows = coeff @ parts
    rows += c0 * p0_acc[None, :]
    return ThetaMap(thetas=thetas, freqs=freqs[mask], spectra=rows,
                    meta={"variant": variant, "epsilon": float(epsilon),
                          "segments": segments, "path": "fast"})


def normalize_map(m: ThetaMap, reference_peak: float) -> ThetaMap:
    """Scale the map so reference_peak maps to 1. The applied factor
    accumulates in `normalization` so the operation is invertible."""
    if not (reference_peak > 0):
        raise ValueError("reference_peak must be positive")
    return ThetaMap(thetas=m.thetas, freqs=m.freqs,
                    spectra=m.spectra / reference_peak,
                    normalization=m.normalization * reference_peak,
                    meta=dict(m.meta))


def _window_bins(freqs, center, halfwidth):
    mask = np.abs(freqs - center) <= halfwidth
    if np.count_nonzero(mask) < 3:
        raise ValueError("peak window holds fewer than 3 bins")
    return mask


def _quad_vertex(x, v):
    """Quadratic fit; returns (x*, v*) at the extremum, clamped to the
    window. Falls back to the extreme sample when the fit degenerates."""
    c = np.polyfit(x, v, 2)
    if c[0] != 0.0:
        xs = -c[1] / (2.0 * c[0])
        if x.min() <= xs <= x.max():
            return xs, float(np.polyval(c, xs))
    k = int(np.argmax(np.abs(v - np.median(v))))
    return float(x[k]), float(v[k])


def peak_amplitude(spectrum: Spectrum, center: float, halfwidth: float,
                   subtract_baseline: bool = False,
                   baseline_halfwidth: Optional[float] = None) -> float:
    """Signed feature amplitude near `center` from a local quadratic fit
    (robust to the bin grid straddling the true peak).

    With subtract_baseline, the median of the surrounding bins (between
    halfwidth and baseline_halfwidth, default 4x) is removed first, which
    turns "height" into "height above the local background".
    """
    mask = _window_bins(spectrum.freqs, center, halfwidth)
    x = spectrum.freqs[mask] - center
    v = np.real(spectrum.values[mask]).astype(float)
    base = 0.0
    if subtract_baseline:
        bhw = 4.0 * halfwidth if baseline_halfwidth is None else baseline_halfwidth
        ring = (np.abs(spectrum.freqs - center) > halfwidth) \
            & (np.abs(spectrum.freqs - center) <= bhw)
        if np.count_nonzero(ring) < 3:
            raise ValueError("baseline ring holds fewer than 3 bins")
        base = float(np.median(np.real(spectrum.values[ring])))
    _, amp = _quad_vertex(x, v - base)
    return amp


def peak_location(spectrum: Spectrum, center: float, halfwidth: float) -> float:
    """Frequency of the extremum of the local quadratic fit near `center`.

    The vertex of the fit is used whether the feature points up or down, so
    negative-going correlation peaks resolve to the same location as their
    positive mirror.
    """
    mask = _window_bins(spectrum.freqs, center, halfwidth)
    x = spectrum.freqs[mask] - center
    v = np.real(spectrum.values[mask]).astype(float)
    xs, _ = _quad_vertex(x, v)
    return center + xs


def zero_contour(m: ThetaMap, band=None):
    """Trace theta*(w), the first zero crossing of each map column.

    Returns (omegas, theta_star, slope) where slope is the least-squares
    d theta*/d omega over the band. Columns without a sign change raise:
    the contour only exists where the correlation term actually crosses
    zero inside theta in [0, pi).
    """
    mask = _band_mask(m.freqs, band)
    omegas = m.freqs[mask]
    cols = m.spectra[:, mask]
    dth = m.thetas[1] - m.thetas[0]
    theta_star = np.empty(omegas.size)
    for j in range(omegas.size):
        v = cols[:, j]
        sign_change = np.nonzero((v[:-1] == 0.0) | (np.sign(v[:-1]) != np.sign(v[1:])))[0]
        if sign_change.size == 0:
            raise ValueError(
                f"no zero crossing at omega/2pi = {omegas[j] / (2 * np.pi):.6g} Hz")
        k = int(sign_change[0])
        v0, v1 = v[k], v[k + 1]
        frac = 0.0 if v0 == v1 else v0 / (v0 - v1)
        theta_star[j] = m.thetas[k] + dth * frac
    slope = float(np.polyfit(omegas, theta_star, 1)[0]) if omegas.size >= 2 else 0.0
    return omegas, theta_star, slope
