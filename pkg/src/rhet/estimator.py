"""Filtered-autocorrelation estimators and spectra.

The central object is the periodically weighted autocorrelation

    A(tau) = < F_eps(t*) i(t) i(t+tau) >,

where F_eps is the square filter of FilterSpec and t* is either the first
sample time (variant "t0") or the midpoint t + tau/2 (variant "tbar").
For eps = +1 the filter is identically 1 and A is the plain autocorrelation,
so the spectrum reduces to the ordinary Welch PSD; for eps = -1 the
heterodyne background cancels and only the beat-synchronous correlations
survive.

Implementation notes.

* t0 uses the literal filter samples: A(m) = (1/N) sum_n F(t_n) i_n i_{n+m},
  evaluated with one cross-correlation FFT. This is the defining sum, with
  one discretization caveat: when the sampling is commensurate with the
  filter period and a discontinuity lands exactly on the sample grid, the
  discrete filter's mean shifts by +-(1-eps)/M (M samples per filter
  period), which leaks that fraction of the heterodyne background into
  eps < 1 spectra. Incommensurate sampling or generic phase offsets make
  the leakage O(1/N).

* tbar expands the filter in its Fourier series. The k-th harmonic becomes
  a demodulated cross-correlation stream x_k = e^{-i k 2 Om t} i(t) against
  y_k = i(t); midpoint evaluation contributes the closed-form phase
  e^{i k Om tau}. Only odd harmonics are nonzero, and for stationary input
  every term beyond k = 1 demodulates current content at 2k Om where there
  is none, so the default keeps k <= 1 (`harmonics` raises the cap; the
  extra streams add noise, not signal).

* Autocorrelations are stored on lags 0..n/2 with circularly-even
  symmetrized values. This is exact (a no-op) for eps = +1 and for tbar,
  and for t0 it equals keeping the real part of the spectrum, which is what
  the PSD uses anyway.

* All spectra are two-sided on ascending angular-frequency grids,
  S = dt * Re FFT(A), so Parseval reads sum(S) dw = 2 pi A(0).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft as sfft

from .analytic import filter_coefficients
from .core import TWO_PI, FilterSpec, PhaseSeries, Spectrum, TimeTrace
from .parallel import resolve_workers

_WINDOWS = ("rect", "hann", "bartlett")


@dataclass(eq=False)
class Autocorrelation:
    """Symmetrized filtered autocorrelation on lags 0..n_fft//2.

    values[m] estimates A(m dt); n_fft is the segment length the circular
    transform ran on (needed to place the spectrum on the right grid).
    """

    lags: np.ndarray
    values: np.ndarray
    variant: str
    filter: FilterSpec
    dt: float
    n_fft: int
    meta: dict = field(default_factory=dict)


def eval_filter(f: FilterSpec, t) -> np.ndarray:
    """Square filter samples F_eps(t).

    F = +1 where mod(psi + pi/2, 2 pi) <= pi with
    psi = 2*omega_beat*t - phase_offset - d(t), epsilon elsewhere. Boundary
    samples belong to the +1 half-cycle. d(t) is the dynamic offset series
    (linearly interpolated, clamped outside its support).
    """
    t = np.asarray(t, dtype=float)
    psi = 2.0 * f.omega_beat * t - f.phase_offset
    if f.dynamic_offset is not None:
        psi = psi - f.dynamic_offset.sample_at(t)
    wrapped = np.mod(psi + 0.5 * np.pi, TWO_PI)
    return np.where(wrapped <= np.pi, 1.0, f.epsilon)


def _xcorr_circ_real(x, y, n, workers):
    fx = sfft.rfft(x, workers=workers)
    fy = sfft.rfft(y, workers=workers)
    return sfft.irfft(np.conj(fx) * fy, n=n, workers=workers)


def _xcorr_circ_cplx(x, y, workers):
    fx = sfft.fft(x, workers=workers)
    fy = sfft.fft(y, workers=workers)
    return sfft.ifft(np.conj(fx) * fy, workers=workers)


def _xcorr_lin(x, y, n, n_lag, workers):
    """Zero-padded (linear) cross-correlation, lags -n_lag..n_lag.

    Returns (pos, neg): pos[m] = sum_n conj(x_n) y_{n+m}, m = 0..n_lag, and
    neg[m] the same at lag -m.
    """
    nf = sfft.next_fast_len(n + n_lag + 1)
    if np.isrealobj(x) and np.isrealobj(y):
        fx = sfft.rfft(x, nf, workers=workers)
        fy = sfft.rfft(y, nf, workers=workers)
        raw = sfft.irfft(np.conj(fx) * fy, n=nf, workers=workers)
    else:
        fx = sfft.fft(x, nf, workers=workers)
        fy = sfft.fft(y, nf, workers=workers)
        raw = sfft.ifft(np.conj(fx) * fy, workers=workers)
    pos = raw[: n_lag + 1]
    neg = np.concatenate((raw[:1], raw[nf - n_lag:][::-1]))
    return pos, neg


def _signed_lags(n, dt):
    m = np.arange(n)
    return np.where(m <= n // 2, m, m - n) * dt


def _symmetrize_half(full, n):
    """Fold a full circular lag array onto 0..n//2 as 0.5*(A(m)+A(-m))."""
    half = n // 2
    out = full[: half + 1].copy()
    out[1:] += full[n - np.arange(1, half + 1)]
    out[1:] *= 0.5
    out[0] = full[0]
    return out


def _dyn_values(f: FilterSpec, t_abs):
    if f.dynamic_offset is None:
        return None
    return f.dynamic_offset.sample_at(t_abs)


def _tbar_half(cur, dt, f, phi0, t_abs, n_lag, mode, harmonics, workers):
    """tbar autocorrelation via harmonic streams, already symmetrized."""
    n = cur.size
    c0 = filter_coefficients(f.epsilon, 0)
    d = _dyn_values(f, t_abs)
    ks = [k for k in range(1, harmonics + 1, 2)
          if filter_coefficients(f.epsilon, k) != 0.0]
    if mode == "circular":
        a_full = c0 * _xcorr_circ_real(cur, cur, n, workers)
        tau = _signed_lags(n, dt)
        for k in ks:
            ck = filter_coefficients(f.epsilon, k)
            if d is None:
                x = np.exp(-1j * k * 2.0 * f.omega_beat * t_abs) * cur
                y = cur.astype(complex)
            else:
                x = np.exp(-1j * k * (2.0 * f.omega_beat * t_abs - 0.5 * d)) * cur
                y = np.exp(-0.5j * k * d) * cur
            ck_rot = ck * np.exp(-1j * k * phi0)
            c_k = _xcorr_circ_cplx(x, y, workers)
            a_full = a_full + 2.0 * np.real(
                ck_rot * np.exp(1j * k * f.omega_beat * tau) * c_k)
        return _symmetrize_half(a_full / n, n)
    # linear mode
    pos0, neg0 = _xcorr_lin(cur, cur, n, n_lag, workers)
    acc = c0 * 0.5 * (pos0 + neg0)
    tau = np.arange(n_lag + 1) * dt
    for k in ks:
        ck = filter_coefficients(f.epsilon, k)
        if d is None:
            x = np.exp(-1j * k * 2.0 * f.omega_beat * t_abs) * cur
            y = cur.astype(complex)
        else:
            x = np.exp(-1j * k * (2.0 * f.omega_beat * t_abs - 0.5 * d)) * cur
            y = np.exp(-0.5j * k * d) * cur
        ck_rot = ck * np.exp(-1j * k * phi0)
        pos, neg = _xcorr_lin(x, y, n, n_lag, workers)
        term = (np.real(ck_rot * np.exp(1j * k * f.omega_beat * tau) * pos)
                + np.real(ck_rot * np.exp(-1j * k * f.omega_beat * tau) * neg))
        acc = acc + term
    return acc / n


def filtered_autocorr(trace: TimeTrace, f: FilterSpec,
                      max_lag: Optional[float] = None, variant: str = "tbar",
                      mode: str = "circular", t_offset: float = 0.0,
                      harmonics: int = 1, workers=None) -> Autocorrelation:
    """Filtered autocorrelation of a trace (or of one segment of one:
    t_offset is the absolute start time, which keeps the filter phase global
    across segments).

    max_lag is in seconds; None keeps the full circular range n//2 (the
    default: spectra built from truncated lags trade variance for bias, and
    the exact identities hold only on the full range). mode "circular" uses
    the seam-wrapped estimator, "linear" the zero-padded one normalized by
    1/N (biased but seam-free).
    """
    if variant not in ("t0", "tbar"):
        raise ValueError("variant must be 't0' or 'tbar'")
    if mode not in ("circular", "linear"):
        raise ValueError("mode must be 'circular' or 'linear'")
    if abs(f.omega_beat - trace.omega_beat) > 1e-9 * trace.omega_beat:
        raise ValueError("filter and trace disagree on omega_beat")
    if harmonics < 1:
        raise ValueError("harmonics must be >= 1")
    workers = resolve_workers(workers)
    n = trace.n
    dt = trace.dt
    if max_lag is None:
        n_lag = n // 2
    else:
        if not (0 < max_lag < trace.duration):
            raise ValueError("max_lag must lie in (0, duration)")
        n_lag = min(int(round(max_lag / dt)), n // 2)
    t_abs = np.arange(n) * dt + t_offset
    cur = trace.samples
    if variant == "t0":
        w = eval_filter(f, t_abs) * cur
        if mode == "circular":
            full = _xcorr_circ_real(w, cur, n, workers) / n
            half = _symmetrize_half(full, n)
        else:
            pos, neg = _xcorr_lin(w, cur, n, n_lag, workers)
            half = 0.5 * (pos + neg) / n
    else:
        phi0 = f.phase_offset
        half = _tbar_half(cur, dt, f, phi0, t_abs, n_lag, mode, harmonics,
                          workers)
    half = half[: n_lag + 1]
    lags = np.arange(n_lag + 1) * dt
    return Autocorrelation(
        lags=lags, values=np.asarray(half, dtype=float), variant=variant,
        filter=f, dt=dt, n_fft=n,
        meta={"mode": mode, "t_offset": float(t_offset),
              "harmonics": int(harmonics)})


def _lag_window(name: str, n_keep: int) -> np.ndarray:
    if name == "rect":
        return np.ones(n_keep + 1)
    m = np.arange(n_keep + 1)
    if name == "hann":
        return 0.5 * (1.0 + np.cos(np.pi * m / n_keep))
    if name == "bartlett":
        return 1.0 - m / n_keep
    raise ValueError(f"unknown window {name!r}; choose from {_WINDOWS}")


def _spectrum_grid(n_fft: int, dt: float) -> np.ndarray:
    return TWO_PI * np.fft.fftshift(np.fft.fftfreq(n_fft, dt))


def _spectra_from_halves(halves, n_fft, dt, window, max_lag, workers):
    """Rows of symmetrized half-lag arrays -> two-sided PSD rows (shifted,
    full n_fft grid regardless of lag truncation)."""
    halves = np.atleast_2d(halves)
    if max_lag is None:
        n_keep = halves.shape[1] - 1
    else:
        n_keep = min(int(round(max_lag / dt)), halves.shape[1] - 1)
        if n_keep < 1:
            raise ValueError("max_lag below one sample")
    rows = halves[:, : n_keep + 1]
    if window != "rect":
        rows = rows * _lag_window(window, n_keep)
    full = np.zeros((rows.shape[0], n_fft))
    full[:, : n_keep + 1] = rows
    full[:, n_fft - n_keep:] = rows[:, 1:][:, ::-1]
    spec = dt * np.real(sfft.fft(full, axis=1, workers=workers))
    return np.fft.fftshift(spec, axes=1)


def psd_from_autocorr(ac: Autocorrelation, window: str = "rect",
                      max_lag: Optional[float] = None,
                      workers=None) -> Spectrum:
    """Two-sided PSD from a symmetrized autocorrelation:
    S = dt * Re FFT of the circularly-even extension, optionally truncated
    to max_lag with a lag window. The grid keeps the full n_fft resolution
    regardless of truncation, so spectra at different max_lag stay
    comparable bin by bin.
    """
    workers = resolve_workers(workers)
    row = _spectra_from_halves(ac.values, ac.n_fft, ac.dt, window, max_lag,
                               workers)[0]
    meta = dict(ac.meta)
    meta.update({"kind": "rhet", "variant": ac.variant,
                 "epsilon": ac.filter.epsilon, "window": window,
                 "max_lag": max_lag, "n_fft": ac.n_fft, "dt": ac.dt})
    return Spectrum(freqs=_spectrum_grid(ac.n_fft, ac.dt), values=row,
                    meta=meta)


def _segment_views(trace: TimeTrace, segments: int):
    if segments < 1:
        raise ValueError("segments must be >= 1")
    n_seg = trace.n // segments
    if n_seg < 16:
        raise ValueError("segments too short")
    for s in range(segments):
        sl = slice(s * n_seg, (s + 1) * n_seg)
        yield s * n_seg * trace.dt, trace.samples[sl]


def standard_psd(trace: TimeTrace, segments: int = 1, window: str = "boxcar",
                 workers=None) -> Spectrum:
    """Plain Welch PSD, two-sided, segment-averaged:
    S = mean_s dt/N |FFT(w * i_s)|^2 / (sum w^2 / N).
    window "boxcar" or "hann". Variance is the across-segment sample
    variance of the mean (ddof=1, divided by the segment count).
    """
    workers = resolve_workers(workers)
    n_seg = trace.n // segments
    if window == "boxcar":
        w = None
        norm = 1.0
    elif window == "hann":
        w = np.hanning(n_seg)
        norm = float(np.sum(w * w) / n_seg)
    else:
        raise ValueError("window must be 'boxcar' or 'hann'")
    mat = trace.samples[: segments * n_seg].reshape(segments, n_seg)
    if w is not None:
        mat = mat * w
    rows = np.abs(sfft.fft(mat, axis=1, workers=workers)) ** 2
    rows *= trace.dt / (n_seg * norm)
    rows = np.fft.fftshift(rows, axes=1)
    values = np.mean(rows, axis=0)
    variance = None
    if segments > 1:
        variance = np.var(rows, axis=0, ddof=1) / segments
    return Spectrum(freqs=_spectrum_grid(n_seg, trace.dt), values=values,
                    variance=variance,
                    meta={"kind": "welch", "segments": segments,
                          "window": window, "n_fft": n_seg, "dt": trace.dt})


def rhet_spectrum(trace: TimeTrace, epsilon: float, theta: float,
                  variant: str = "tbar", segments: int = 1,
                  max_lag: Optional[float] = None, window: str = "rect",
                  phase_correction: Optional[PhaseSeries] = None,
                  mode: str = "circular", harmonics: int = 1,
                  workers=None) -> Spectrum:
    """Filtered spectrum of a trace: segment-averaged PSD of the filtered
    autocorrelation with filter phase offset phi0 = 2*theta.

    phase_correction, when given, is the measured LO phase series theta_hat
    (from rhet.lockin.demodulate); the filter then tracks the drift via the
    dynamic offset d(t) = -2 (theta_hat(t) - theta_nominal), which keeps
    the correlation term coherent over the whole record. Anchoring at the
    trace's nominal phase (not the first series sample) keeps theta's
    meaning independent of where the series happens to start.

    The filter phase is global: segment s at absolute offset s*N_seg*dt sees
    the same F(t) as an unsegmented run, so segment averages converge to the
    same expectation.
    """
    workers = resolve_workers(workers)
    dyn = None
    if phase_correction is not None:
        dyn = PhaseSeries(
            times=phase_correction.times,
            theta=-2.0 * (phase_correction.theta - trace.theta_nominal))
    fspec = FilterSpec(epsilon=epsilon, omega_beat=trace.omega_beat,
                       phase_offset=2.0 * theta, dynamic_offset=dyn)
    halves = []
    n_fft = trace.n // segments
    for t_off, seg in _segment_views(trace, segments):
        seg_trace = TimeTrace(samples=seg, dt=trace.dt,
                              omega_beat=trace.omega_beat,
                              theta_nominal=trace.theta_nominal)
        ac = filtered_autocorr(seg_trace, fspec, max_lag=max_lag,
                               variant=variant, mode=mode, t_offset=t_off,
                               harmonics=harmonics, workers=workers)
        halves.append(ac.values)
    rows = _spectra_from_halves(np.array(halves), n_fft, trace.dt, window,
                                max_lag, workers)
    values = np.mean(rows, axis=0)
    variance = None
    if segments > 1:
        variance = np.var(rows, axis=0, ddof=1) / segments
    return Spectrum(
        freqs=_spectrum_grid(n_fft, trace.dt), values=values,
        variance=variance,
        meta={"kind": "rhet", "variant": variant, "epsilon": float(epsilon),
              "theta": float(theta), "segments": segments, "window": window,
              "max_lag": max_lag, "mode": mode, "harmonics": harmonics,
              "corrected": phase_correction is not None,
              "omega_beat": trace.omega_beat, "n_fft": n_fft,
              "dt": trace.dt})


def complex_corr_spectrum(trace: TimeTrace, omega_beat: Optional[float] = None,
                          segments: int = 1, workers=None) -> Spectrum:
    """Cross-spectrum between the down- and up-rotated currents:

        C(w) = (dt/N) conj(FFT[i e^{-i Om t}]) FFT[i e^{+i Om t}]

    For a trace recorded at LO phase theta0, E[C(w)] = e^{-2i theta0}
    s_aa(w): the anomalous field correlation up to the fixed LO rotation.
    Returned values are complex; variance is the total (real plus imaginary)
    across-segment variance of the mean.
    """
    workers = resolve_workers(workers)
    om = trace.omega_beat if omega_beat is None else float(omega_beat)
    n_seg = trace.n // segments
    rows = []
    for t_off, seg in _segment_views(trace, segments):
        t_abs = np.arange(seg.size) * trace.dt + t_off
        u = seg * np.exp(1j * om * t_abs)
        v = seg * np.exp(-1j * om * t_abs)
        c = (trace.dt / seg.size) * np.conj(sfft.fft(v, workers=workers)) \
            * sfft.fft(u, workers=workers)
        rows.append(np.fft.fftshift(c))
    rows = np.array(rows)
    values = np.mean(rows, axis=0)
    variance = None
    if segments > 1:
        variance = (np.var(rows.real, axis=0, ddof=1)
                    + np.var(rows.imag, axis=0, ddof=1)) / segments
    return Spectrum(freqs=_spectrum_grid(n_seg, trace.dt), values=values,
                    variance=variance,
                    meta={"kind": "complex_corr", "segments": segments,
                          "omega_beat": om, "n_fft": n_seg, "dt": trace.dt})
