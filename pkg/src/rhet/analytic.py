"""Closed-form field spectra and filtered-spectrum predictions.

The model is a classical Gaussian-noise description of a driven cavity with
thermally occupied mechanical modes read out in reflection:

    chi_c(nu)   = 1 / (kappa - i (Delta + nu))          cavity response
    chibar_m    = omega_m / (omega_m^2 - nu^2 - i gamma nu)   (dimensionless)
    P_q(nu)     = (nbar+1) L(nu+omega_m) + nbar L(nu-omega_m)
                  with L(u) = gamma / (u^2 + gamma^2/4)

Each mode contributes 2 kappa g^2 |chi_c|^2 P_q to the field's normal
spectrum s_adaga and -2 kappa g^2 chi_c(nu) chi_c(-nu) sqrt(P_q(nu) P_q(-nu))
to the anomalous spectrum s_aa. The white imprecision floor enters through
the reflection response R = 2 kappa chi_c - 1 and, when backaction_weight
w > 0, through the radiation-pressure loop V = sum_j 4i kappa w g_j^2 chi_c
chibar_m_j, which correlates the floor with itself across +-nu and produces
phase-dependent (squeezing-like) features. By construction the three spectra
form a valid Gram family, so |s_aa(nu)|^2 <= s_adaga(nu) s_adaga(-nu)
pointwise and the synthesizer can realize them exactly.

Frequency convention: s_X(w) = Int e^{+i w tau} <X+(t) X(t+tau)> dtau, so a
field component ~ e^{-i w0 t} carries s_adaga weight at +w0. Current
convention: i(t) = X cos(Om t + theta) + Y sin(Om t + theta) with X = 2 Re a,
Y = 2 Im a, giving S_het(w) = s_aadag(w + Om) + s_adaga(w - Om).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (TWO_PI, ExperimentConfig, GridError, MechMode,
                   PhysicalityError, Spectrum)


def mech_susceptibility(omega, mode: MechMode):
    """Mass-weighted mechanical susceptibility 1/(m (omega_m^2 - w^2 - i gamma w))."""
    omega = np.asarray(omega, dtype=float)
    om, gam = mode.omega_m, mode.gamma
    return 1.0 / (mode.mass * (om * om - omega * omega - 1j * gam * omega))


def cavity_susceptibility(omega, kappa: float, detuning: float):
    """Cavity field response 1/(kappa - i(detuning + omega)).

    At detuning 0 and omega = kappa the phase is +pi/4.
    """
    omega = np.asarray(omega, dtype=float)
    return 1.0 / (kappa - 1j * (detuning + omega))


def _chibar(nu, mode: MechMode):
    # dimensionless mechanical response, unit DC gain
    om, gam = mode.omega_m, mode.gamma
    return om / (om * om - nu * nu - 1j * gam * nu)


def _lorentz(u, gam):
    return gam / (u * u + 0.25 * gam * gam)


def _model_rows(cfg: ExperimentConfig, nu: np.ndarray):
    """Return (s_adaga(nu), s_aa(nu)) for an array of angular frequencies."""
    cc = cavity_susceptibility(nu, cfg.kappa, cfg.detuning)
    ccm = cavity_susceptibility(-nu, cfg.kappa, cfg.detuning)
    content = np.zeros(nu.shape, dtype=float)
    corr = np.zeros(nu.shape, dtype=complex)
    V = np.zeros(nu.shape, dtype=complex)
    Vm = np.zeros(nu.shape, dtype=complex)
    w = cfg.backaction_weight
    for mode, g in zip(cfg.modes, cfg.coupling):
        gam, om, nb = mode.gamma, mode.omega_m, mode.nbar
        pq = (nb + 1) * _lorentz(nu + om, gam) + nb * _lorentz(nu - om, gam)
        pqm = (nb + 1) * _lorentz(-nu + om, gam) + nb * _lorentz(-nu - om, gam)
        k2 = 2.0 * cfg.kappa * g * g
        content += k2 * np.abs(cc) ** 2 * pq
        corr -= k2 * cc * ccm * np.sqrt(pq * pqm)
        if w != 0.0:
            V += 4j * cfg.kappa * w * g * g * cc * _chibar(nu, mode)
            Vm += 4j * cfg.kappa * w * g * g * ccm * _chibar(-nu, mode)
    R = 2.0 * cfg.kappa * cc - 1.0
    Rm = 2.0 * cfg.kappa * ccm - 1.0
    alpha = V * cc + R
    beta = V * np.conj(ccm)
    alpham = Vm * ccm + Rm
    betam = Vm * np.conj(cc)
    half = 0.5 * cfg.shot_floor
    s_adaga = content + (np.abs(alpha) ** 2 + np.abs(beta) ** 2) * half
    s_aa = corr + (alpham * beta + alpha * betam) * half
    return s_adaga, s_aa


@dataclass(eq=False)
class FieldSpectra:
    """Normal and anomalous field spectra on a common grid.

    s_aadag(nu) = s_adaga(-nu) holds exactly for stationary fields and is
    built in. `config` records the generating model; operations that need values off
    the grid (heterodyne shifting) re-evaluate the model exactly when it is
    present and fall back to interpolation otherwise.
    """

    freqs: np.ndarray
    s_aadag: np.ndarray
    s_adaga: np.ndarray
    s_aa: np.ndarray
    config: Optional[ExperimentConfig] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=np.float64)
        n = self.freqs.shape
        for name in ("s_aadag", "s_adaga", "s_aa"):
            a = np.asarray(getattr(self, name))
            if a.shape != n:
                raise ValueError(f"{name} shape mismatch")
            setattr(self, name, a)


def field_spectra(cfg: ExperimentConfig, freqs) -> FieldSpectra:
    """Evaluate the model on an arbitrary grid (rad/s, need not be uniform
    or symmetric). Raises PhysicalityError if the Cauchy-Schwarz bound
    |s_aa(nu)|^2 <= s_adaga(nu) s_adaga(-nu) fails, which signals broken
    model inputs (NaN parameters and the like); the construction satisfies
    it identically otherwise.
    """
    nu = np.asarray(freqs, dtype=float)
    s_adaga, s_aa = _model_rows(cfg, nu)
    s_aadag, _ = _model_rows(cfg, -nu)  # s_aadag(nu) = s_adaga(-nu)
    bound = s_adaga * s_aadag
    bad = np.abs(s_aa) ** 2 > bound * (1.0 + 1e-9) + 1e-300
    if np.any(bad):
        k = int(np.argmax(bad))
        raise PhysicalityError(
            f"anomalous spectrum exceeds Cauchy-Schwarz bound at "
            f"nu/2pi = {nu[k] / TWO_PI:.6g} Hz"
        )
    return FieldSpectra(freqs=nu, s_aadag=s_aadag, s_adaga=s_adaga, s_aa=s_aa,
                        config=cfg)


def _values_at(fs: FieldSpectra, nu: np.ndarray):
    """(s_adaga, s_aa) at arbitrary frequencies: exact re-evaluation when the
    config is attached, linear interpolation on the stored grid otherwise."""
    if fs.config is not None:
        return _model_rows(fs.config, nu)
    lo, hi = fs.freqs[0], fs.freqs[-1]
    if np.min(nu) < lo or np.max(nu) > hi:
        raise GridError(
            "field-spectra grid does not cover the shifted frequencies; "
            "evaluate on a wider grid or attach a config"
        )
    s_ad = np.interp(nu, fs.freqs, fs.s_adaga)
    s_aa = (np.interp(nu, fs.freqs, fs.s_aa.real)
            + 1j * np.interp(nu, fs.freqs, fs.s_aa.imag))
    return s_ad, s_aa


def homodyne_psd(fs: FieldSpectra, theta: float) -> Spectrum:
    """PSD of the theta quadrature: s_aadag + s_adaga + 2 Re[e^{-2i theta} s_aa]."""
    vals = (fs.s_aadag + fs.s_adaga
            + 2.0 * np.real(np.exp(-2j * theta) * fs.s_aa))
    return Spectrum(freqs=fs.freqs, values=vals,
                    meta={"kind": "homodyne", "theta": float(theta)})


def heterodyne_psd(fs: FieldSpectra, omega_beat: float) -> Spectrum:
    """Beat-frequency PSD: S(w) = s_aadag(w + Om) + s_adaga(w - Om).

    Each field sideband appears twice, displaced by +-Om, and the
    anomalous correlations drop out entirely.
    """
    up, _ = _values_at(fs, -(fs.freqs + omega_beat))  # s_aadag(x) = s_adaga(-x)
    dn, _ = _values_at(fs, fs.freqs - omega_beat)
    return Spectrum(freqs=fs.freqs, values=up + dn,
                    meta={"kind": "heterodyne", "omega_beat": float(omega_beat)})


def filter_coefficients(epsilon: float, k):
    """Fourier coefficient c_k of the square filter: c_0 = (1+eps)/2,
    c_k = (1-eps) sin(k pi/2) / (k pi) for k >= 1 (so even k vanish and
    odd k alternate in sign)."""
    k = np.asarray(k)
    # sin(k pi/2) for integer k, without the float dust at even k
    quadrant = np.mod(k, 4)
    sin_half = np.where(quadrant == 1, 1.0, np.where(quadrant == 3, -1.0, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ck = np.where(
            k == 0,
            (1.0 + epsilon) / 2.0,
            (1.0 - epsilon) * sin_half / np.where(k == 0, 1, k) / np.pi,
        )
    if ck.ndim == 0:
        return float(ck)
    return ck.astype(float)


def rhet_prediction(fs: FieldSpectra, omega_beat: float, theta: float,
                    epsilon: float, variant: str = "tbar",
                    include_harmonics: bool = False) -> Spectrum:
    """Expected filtered spectrum.

    tbar:  c0 S_het(w) + 2 c1 Re[e^{-2i theta} s_aa(w)]
    t0:    c0 S_het(w) + c1 (Re[e^{-2i theta} s_aa(w - Om)]
                             + Re[e^{-2i theta} s_aa(-w - Om)])

    theta is the total quadrature angle in the field frame. When comparing
    with an estimate from a trace recorded at LO phase theta0 and filtered
    with phase parameter theta_f, pass theta = theta_f + theta0.

    include_harmonics keeps the k >= 3 filter harmonics in the sum. They
    demodulate current content at 2k Om, which a stationary field does not
    have, so their expected contribution is identically zero; the flag
    exists for symmetry with the estimator and does not change the result.
    """
    if variant not in ("t0", "tbar"):
        raise ValueError("variant must be 't0' or 'tbar'")
    c0 = filter_coefficients(epsilon, 0)
    c1 = filter_coefficients(epsilon, 1)
    het = heterodyne_psd(fs, omega_beat).values
    rot = np.exp(-2j * theta)
    if variant == "tbar":
        corr = 2.0 * c1 * np.real(rot * fs.s_aa)
    else:
        _, up = _values_at(fs, fs.freqs - omega_beat)
        _, dn = _values_at(fs, -fs.freqs - omega_beat)
        corr = c1 * (np.real(rot * up) + np.real(rot * dn))
    del include_harmonics  # expectation of k >= 3 terms vanishes; see docstring
    vals = c0 * het + corr
    return Spectrum(freqs=fs.freqs, values=vals,
                    meta={"kind": "rhet_prediction", "variant": variant,
                          "epsilon": float(epsilon), "theta": float(theta),
                          "omega_beat": float(omega_beat)})


def sign_convention_calibration() -> dict:
    """Self-test pinning the sign conventions by direct measurement.

    Builds a deterministic two-tone field with a known anomalous-correlation
    phase chi, modulates it at a known LO phase theta0, and scans the filter
    phase offset. The response must peak at phi0 = chi - 2 theta0, which
    fixes both senses used across the package:

      theta_sense = +1 : the filter phase parameter adds to the LO phase
                         (effective quadrature angle theta_f + theta0)
      corr_sign   = +1 : the correlation term enters the filtered spectrum
                         as +2 c1 Re[e^{-i(phi0 + 2 theta0)} s_aa]

    Returns the record with the measured peak offset error (radians). Raises
    PhysicalityError if the measured offset disagrees with the convention by
    more than 0.1 rad, which would mean the build is internally inconsistent.
    """
    from .estimator import filtered_autocorr
    from .core import FilterSpec, TimeTrace

    omega = TWO_PI * 1.0e4
    om_m = 2.5 * omega
    chi = 0.6
    theta0 = 0.35
    # incommensurate sampling so the square filter's discrete coefficients
    # match the continuous ones (see estimator notes)
    dt = (TWO_PI / omega) / 24.6180339887
    n = 40000
    t = np.arange(n) * dt
    a = 0.5 * (np.exp(-1j * om_m * t) + np.exp(1j * (om_m * t + chi)))
    ph = omega * t + theta0
    cur = 2 * np.real(a) * np.cos(ph) + 2 * np.imag(a) * np.sin(ph)
    trace = TimeTrace(samples=cur, dt=dt, omega_beat=omega, theta_nominal=theta0)
    lags = np.arange(0, 30)
    phis = np.linspace(0.0, TWO_PI, 96, endpoint=False)
    resp = np.empty(phis.size)
    for i, p in enumerate(phis):
        f = FilterSpec(epsilon=-1.0, omega_beat=omega, phase_offset=p)
        ac = filtered_autocorr(trace, f, variant="tbar")
        # project the lag profile on cos(om_m tau): isolates the correlation
        resp[i] = np.mean(ac.values[lags] * np.cos(om_m * lags * dt))
    # quadratic-free estimate of the peak location via the fundamental phase
    z = np.sum(resp * np.exp(1j * phis)) / phis.size
    measured = float(np.angle(z)) % TWO_PI
    expected = (chi - 2.0 * theta0) % TWO_PI
    err = (measured - expected + np.pi) % TWO_PI - np.pi
    if abs(err) > 0.1:
        raise PhysicalityError(
            f"sign-convention self-test failed: peak at {measured:.3f} rad, "
            f"expected {expected:.3f} rad"
        )
    return {"theta_sense": +1, "corr_sign": +1, "offset_error_rad": float(err)}
