"""Shared value types and configuration validation.

Every other module passes these objects around. They are plain dataclasses;
array payloads are treated as immutable by convention: nothing in the package
mutates a trace, spectrum, or map after construction, which is also the
concurrency contract (parallel workers only ever read them).

Units: angular frequencies (rad/s) everywhere in memory. File formats use Hz
and convert on the way in/out (see rhet.io).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

TWO_PI = 2.0 * np.pi


class ConfigError(ValueError):
    """Invalid experiment configuration or config-file schema."""


class PhysicalityError(ValueError):
    """A model output violates a physical bound."""


class TraceFormatError(IOError):
    """Binary trace file is malformed or truncated."""


class GridError(ValueError):
    """Frequency grid does not cover what an operation needs."""


@dataclass(frozen=True)
class MechMode:
    """One mechanical resonance.

    omega_m : angular resonance frequency (rad/s)
    gamma   : FWHM damping rate (rad/s)
    mass    : effective mass (kg); only unit-carrying queries use it
    nbar    : mean thermal occupancy (dimensionless)
    """

    omega_m: float
    gamma: float
    mass: float
    nbar: float


@dataclass(frozen=True)
class PhaseDriftSpec:
    """Slow local-oscillator phase drift riding on theta0.

    kind "sine": theta0 + amplitude*sin(2*pi*freq_hz*t)
    kind "walk": random walk scaled so the std of the endpoint drift over the
    trace duration equals `amplitude` (needs the synthesis seed).
    """

    amplitude: float = 0.0
    freq_hz: float = 25.0
    kind: str = "sine"


@dataclass(frozen=True)
class ExperimentConfig:
    """Cavity + mechanics + detection settings for the analytic model and
    the synthesizer.

    kappa             : cavity amplitude decay rate (rad/s); the cavity
                        response used throughout is 1/(kappa - i(detuning+omega))
    detuning          : laser-cavity detuning (rad/s)
    modes             : tuple of MechMode
    coupling          : per-mode measurement-rate-like coupling g (rad/s);
                        thermal peak height above the floor scales as
                        2*kappa*g^2*|chi_c|^2 * 4*nbar/gamma
    omega_beat        : heterodyne beat frequency Omega (rad/s)
    theta0            : nominal LO phase (rad)
    drift             : PhaseDriftSpec
    shot_floor        : white imprecision floor in PSD units (1.0 = shot units)
    backaction_weight : 0 disables the radiation-pressure feedback loop,
                        1 enables it at full strength (correlated backaction)
    """

    kappa: float
    detuning: float
    modes: tuple
    coupling: tuple
    omega_beat: float
    theta0: float = 0.0
    drift: PhaseDriftSpec = field(default_factory=PhaseDriftSpec)
    shot_floor: float = 1.0
    backaction_weight: float = 0.0


@dataclass(eq=False)
class TimeTrace:
    """Sampled photocurrent plus the metadata needed to process it."""

    samples: np.ndarray
    dt: float
    omega_beat: float
    theta_nominal: float = 0.0
    label: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise ValueError("trace must be a 1-d array with at least 2 samples")
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        if not (self.omega_beat > 0):
            raise ValueError("omega_beat must be positive")

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.n * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt


@dataclass(eq=False)
class PhaseSeries:
    """Sampled phase-vs-time record (lock-in output, drift injection...).

    Contract: times strictly increasing, theta continuous in the unwrapped
    sense (no jump above pi between adjacent points).
    """

    times: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.times.ndim != 1 or self.times.shape != self.theta.shape:
            raise ValueError("times and theta must be 1-d arrays of equal length")
        if self.times.size < 2:
            raise ValueError("phase series needs at least 2 points")
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("theta contains non-finite values")
        if np.max(np.abs(np.diff(self.theta))) > np.pi:
            raise ValueError("theta jumps by more than pi between samples; unwrap first")

    def sample_at(self, t: np.ndarray) -> np.ndarray:
        """Linear interpolation, clamped at the ends."""
        return np.interp(t, self.times, self.theta)


@dataclass(eq=False)
class FilterSpec:
    """Periodic square weight applied to the autocorrelation.

    F = +1 where mod(psi + pi/2, 2*pi) <= pi and epsilon elsewhere, with
    psi = 2*omega_beat*t - phase_offset - d(t). The boundary samples belong
    to the +1 half-cycle (closed interval). d(t) is the optional
    dynamic_offset series added to the phase offset.
    """

    epsilon: float
    omega_beat: float
    phase_offset: float = 0.0
    dynamic_offset: Optional[PhaseSeries] = None

    def __post_init__(self):
        if not (-1.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in [-1, 1]")
        if not (self.omega_beat > 0):
            raise ValueError("omega_beat must be positive")


@dataclass(eq=False)
class Spectrum:
    """One-dimensional spectrum on an ascending angular-frequency grid.

    values may be real (PSD-like) or complex (cross-correlation spectra).
    variance, when present, is the per-bin estimator variance (already
    divided by the number of averaged segments).
    """

    freqs: np.ndarray
    values: np.ndarray
    variance: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=np.float64)
        self.values = np.asarray(self.values)
        if self.freqs.ndim != 1 or self.values.shape != self.freqs.shape:
            raise ValueError("freqs and values must be 1-d arrays of equal length")
        if self.freqs.size >= 2 and not np.all(np.diff(self.freqs) > 0):
            raise ValueError("freqs must be strictly ascending")
        if self.variance is not None:
            self.variance = np.asarray(self.variance, dtype=np.float64)
            if self.variance.shape != self.freqs.shape:
                raise ValueError("variance shape mismatch")

    def band(self, lo: float, hi: float) -> np.ndarray:
        """Boolean mask selecting lo <= freq <= hi (rad/s, signed)."""
        return (self.freqs >= lo) & (self.freqs <= hi)


@dataclass(eq=False)
class ThetaMap:
    """Stack of spectra versus filter phase theta (rows: theta, cols: freq)."""

    thetas: np.ndarray
    freqs: np.ndarray
    spectra: np.ndarray
    normalization: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=np.float64)
        self.freqs = np.asarray(self.freqs, dtype=np.float64)
        self.spectra = np.asarray(self.spectra, dtype=np.float64)
        if self.spectra.shape != (self.thetas.size, self.freqs.size):
            raise ValueError("spectra must have shape (n_theta, n_freq)")
        if not (self.normalization > 0):
            raise ValueError("normalization must be positive")


def validate_config(cfg: ExperimentConfig, dt: Optional[float] = None) -> list:
    """Return a list of 'error: ...' / 'warning: ...' strings; empty means
    the config satisfies every hard invariant and sits inside the method's
    operating regime. Passing dt also checks the sampling covers the
    modulated signal band.
    """
    out = []
    err = out.append
    if not (cfg.kappa > 0):
        err("error: kappa must be positive")
    if not (cfg.omega_beat > 0):
        err("error: omega_beat must be positive")
    if not (cfg.shot_floor > 0):
        err("error: shot_floor must be positive")
    if cfg.backaction_weight < 0:
        err("error: backaction_weight must be >= 0")
    if len(cfg.modes) == 0:
        err("error: at least one mechanical mode required")
    if len(cfg.coupling) != len(cfg.modes):
        err("error: coupling must have one entry per mode")
    for k, mode in enumerate(cfg.modes):
        tag = f"mode {k}"
        if not (mode.omega_m > 0):
            err(f"error: {tag}: omega_m must be positive")
        if not (mode.gamma > 0):
            err(f"error: {tag}: gamma must be positive")
        elif mode.omega_m > 0 and mode.gamma >= mode.omega_m:
            err(f"error: {tag}: gamma must be below omega_m (underdamped)")
        if not (mode.mass > 0):
            err(f"error: {tag}: mass must be positive")
        if mode.nbar < 0:
            err(f"error: {tag}: nbar must be >= 0")
        # operating regime of the method: gamma << Omega << omega_m
        if cfg.omega_beat > 0 and mode.gamma > 0 and mode.omega_m > 0:
            if cfg.omega_beat < 5.0 * mode.gamma or cfg.omega_beat > mode.omega_m / 5.0:
                err(
                    f"warning: {tag}: omega_beat outside the gamma << Omega << "
                    f"omega_m operating regime (want 5*gamma <= Omega <= omega_m/5)"
                )
    for k, g in enumerate(cfg.coupling):
        if g < 0:
            err(f"error: coupling {k} must be >= 0")
    d = cfg.drift
    if d.amplitude < 0:
        err("error: drift amplitude must be >= 0")
    if d.kind not in ("sine", "walk"):
        err(f"error: unknown drift kind {d.kind!r}")
    if d.amplitude > 0 and d.kind == "sine" and not (d.freq_hz > 0):
        err("error: drift freq_hz must be positive for sine drift")
    if dt is not None and len(cfg.modes) and cfg.omega_beat > 0:
        top = max(m.omega_m for m in cfg.modes if m.omega_m > 0) + cfg.omega_beat
        nyq = np.pi / dt
        if nyq <= top:
            err("error: sampling too slow, Nyquist below the upper sideband")
        elif nyq < 2.0 * top:
            err("warning: Nyquist under 2x the upper sideband; tails will fold")
    return out


def default_thermal_config(detuning: float = -TWO_PI * 1.0e5) -> ExperimentConfig:
    """Two-mode membrane-style configuration used by the test suite and the
    demos. Occupancies and couplings put the thermal peaks roughly 13x and
    5x above the unit floor.
    """
    modes = (
        MechMode(omega_m=TWO_PI * 378.16e3, gamma=TWO_PI * 4.56e3, mass=300e-12, nbar=1.65e7),
        MechMode(omega_m=TWO_PI * 544.78e3, gamma=TWO_PI * 8.44e3, mass=180e-12, nbar=1.145e7),
    )
    return ExperimentConfig(
        kappa=TWO_PI * 1.3e6,
        detuning=detuning,
        modes=modes,
        coupling=(TWO_PI * 25.0, TWO_PI * 25.0),
        omega_beat=TWO_PI * 1.0e4,
        theta0=0.0,
        shot_floor=1.0,
        backaction_weight=0.0,
    )
