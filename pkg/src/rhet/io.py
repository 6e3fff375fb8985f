"""File formats and comparison reports.

Traces: packed binary, little-endian, 72-byte header then f64 samples.
Header layout '<4sIdddQ32x': magic "RHTR", format version, dt, omega_beat
(rad/s), theta_nominal (rad), sample count, 32 reserved bytes. Binary
because traces are large (80 MB for 2 s at 5 MS/s) and bit-exactness
matters; everything else is text.

Config: JSON, schema-versioned, unknown keys rejected (a typo in a physics
parameter must fail loudly, not silently default). Frequencies in Hz,
masses in ng in the file; converted to rad/s and kg in memory.

Spectra and maps: CSV with '#' metadata comments, numbers at %.17g so
every written double parses back to the same double. The frequency column
is in Hz; the in-memory unit is rad/s, so a round trip preserves values
bit-for-bit and frequencies to the unit conversion's rounding (one ulp).
Maps can also be written as .npz when the full grid would make CSV
impractically large.

All writers are atomic: temp file in the target directory, then rename.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from .core import (TWO_PI, ConfigError, ExperimentConfig, GridError,
                   MechMode, PhaseDriftSpec, Spectrum, ThetaMap, TimeTrace,
                   TraceFormatError)

TRACE_MAGIC = b"RHTR"
TRACE_VERSION = 1
CONFIG_SCHEMA_VERSION = 1
_HEADER = struct.Struct("<4sIdddQ32x")


def _atomic_write(path, payload_writer, binary=True):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".rhet-tmp-")
    try:
        with os.fdopen(fd, "wb" if binary else "w") as fh:
            payload_writer(fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_trace(path, trace: TimeTrace) -> None:
    header = _HEADER.pack(TRACE_MAGIC, TRACE_VERSION, trace.dt,
                          trace.omega_beat, trace.theta_nominal, trace.n)
    data = np.ascontiguousarray(trace.samples, dtype="<f8")

    def _write(fh):
        fh.write(header)
        fh.write(data.tobytes())

    _atomic_write(path, _write)


def read_trace(path) -> TimeTrace:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise TraceFormatError(f"{path}: truncated header")
        magic, version, dt, omega_beat, theta_nominal, n = _HEADER.unpack(head)
        if magic != TRACE_MAGIC:
            raise TraceFormatError(f"{path}: bad magic {magic!r}")
        if version != TRACE_VERSION:
            raise TraceFormatError(f"{path}: unsupported trace version {version}")
        payload = fh.read()
    expected = 8 * n
    if len(payload) != expected:
        raise TraceFormatError(
            f"{path}: payload holds {len(payload)} bytes, header promises {expected}")
    samples = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    try:
        return TimeTrace(samples=samples, dt=dt, omega_beat=omega_beat,
                         theta_nominal=theta_nominal,
                         label=os.path.basename(os.fspath(path)))
    except ValueError as e:
        raise TraceFormatError(f"{path}: {e}") from e


# ---------------------------------------------------------------- config

_TOP_KEYS = {"schema_version", "kappa_hz", "detuning_hz", "omega_beat_hz",
             "theta0_rad", "shot_floor", "backaction_weight", "drift",
             "modes"}
_MODE_KEYS = {"omega_m_hz", "gamma_hz", "mass_ng", "nbar", "coupling_hz"}
_DRIFT_KEYS = {"amplitude_rad", "freq_hz", "kind"}


def _reject_unknown(d, allowed, where):
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _need(d, key, where):
    if key not in d:
        raise ConfigError(f"missing key {key!r} in {where}")
    return d[key]


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config")
    ver = _need(doc, "schema_version", "config")
    if ver != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {ver}")
    modes_doc = _need(doc, "modes", "config")
    if not isinstance(modes_doc, list) or not modes_doc:
        raise ConfigError("modes must be a non-empty list")
    modes = []
    coupling = []
    for k, md in enumerate(modes_doc):
        where = f"modes[{k}]"
        if not isinstance(md, dict):
            raise ConfigError(f"{where} must be an object")
        _reject_unknown(md, _MODE_KEYS, where)
        modes.append(MechMode(
            omega_m=TWO_PI * float(_need(md, "omega_m_hz", where)),
            gamma=TWO_PI * float(_need(md, "gamma_hz", where)),
            mass=1e-12 * float(_need(md, "mass_ng", where)),
            nbar=float(_need(md, "nbar", where))))
        coupling.append(TWO_PI * float(_need(md, "coupling_hz", where)))
    drift = PhaseDriftSpec()
    if "drift" in doc:
        dd = doc["drift"]
        if not isinstance(dd, dict):
            raise ConfigError("drift must be an object")
        _reject_unknown(dd, _DRIFT_KEYS, "drift")
        drift = PhaseDriftSpec(
            amplitude=float(dd.get("amplitude_rad", 0.0)),
            freq_hz=float(dd.get("freq_hz", 25.0)),
            kind=str(dd.get("kind", "sine")))
    return ExperimentConfig(
        kappa=TWO_PI * float(_need(doc, "kappa_hz", "config")),
        detuning=TWO_PI * float(doc.get("detuning_hz", 0.0)),
        modes=tuple(modes),
        coupling=tuple(coupling),
        omega_beat=TWO_PI * float(_need(doc, "omega_beat_hz", "config")),
        theta0=float(doc.get("theta0_rad", 0.0)),
        drift=drift,
        shot_floor=float(doc.get("shot_floor", 1.0)),
        backaction_weight=float(doc.get("backaction_weight", 0.0)))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "kappa_hz": cfg.kappa / TWO_PI,
        "detuning_hz": cfg.detuning / TWO_PI,
        "omega_beat_hz": cfg.omega_beat / TWO_PI,
        "theta0_rad": cfg.theta0,
        "shot_floor": cfg.shot_floor,
        "backaction_weight": cfg.backaction_weight,
        "drift": {"amplitude_rad": cfg.drift.amplitude,
                  "freq_hz": cfg.drift.freq_hz, "kind": cfg.drift.kind},
        "modes": [
            {"omega_m_hz": m.omega_m / TWO_PI, "gamma_hz": m.gamma / TWO_PI,
             "mass_ng": m.mass / 1e-12, "nbar": m.nbar,
             "coupling_hz": g / TWO_PI}
            for m, g in zip(cfg.modes, cfg.coupling)],
    }


def read_config(path) -> ExperimentConfig:
    try:
        with open(path, "r") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    return config_from_dict(doc)


def write_config(path, cfg: ExperimentConfig) -> None:
    text = json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"
    _atomic_write(path, lambda fh: fh.write(text), binary=False)


# ---------------------------------------------------------------- spectra

def _fmt(x) -> str:
    return format(float(x), ".17g")


def _meta_lines(meta: dict):
    for key in sorted(meta):
        val = meta[key]
        if val is None or isinstance(val, (bool, int, float, str)):
            yield f"# {key} = {val!r}\n"


def _parse_meta_value(text: str):
    import ast
    text = text.strip()
    try:
        v = ast.literal_eval(text)
        if v is None or isinstance(v, (bool, int, float, str)):
            return v
    except (ValueError, SyntaxError):
        pass
    return text


def write_spectrum(path, spec: Spectrum) -> None:
    complex_vals = np.iscomplexobj(spec.values)
    has_err = spec.variance is not None

    def _write(fh):
        fh.write("# rhet spectrum v1\n")
        for line in _meta_lines(spec.meta):
            fh.write(line)
        cols = ["freq_hz"]
        cols += ["re", "im"] if complex_vals else ["value"]
        if has_err:
            cols.append("stderr")
        fh.write(",".join(cols) + "\n")
        err = np.sqrt(spec.variance) if has_err else None
        for k in range(spec.freqs.size):
            row = [_fmt(spec.freqs[k] / TWO_PI)]
            if complex_vals:
                row += [_fmt(spec.values[k].real), _fmt(spec.values[k].imag)]
            else:
                row.append(_fmt(spec.values[k]))
            if has_err:
                row.append(_fmt(err[k]))
            fh.write(",".join(row) + "\n")

    _atomic_write(path, _write, binary=False)


def read_spectrum(path) -> Spectrum:
    meta = {}
    header = None
    rows = []
    with open(path, "r") as fh:
        first = fh.readline()
        if not first.startswith("# rhet spectrum"):
            raise TraceFormatError(f"{path}: not a spectrum file")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    key, _, val = line[1:].partition("=")
                    meta[key.strip()] = _parse_meta_value(val)
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(x) if x else np.nan for x in line.split(",")])
    if header is None or not rows:
        raise TraceFormatError(f"{path}: no data rows")
    mat = np.array(rows)
    if mat.shape[1] != len(header):
        raise TraceFormatError(f"{path}: ragged rows")
    freqs = mat[:, 0] * TWO_PI
    if "re" in header:
        values = mat[:, header.index("re")] + 1j * mat[:, header.index("im")]
    else:
        values = mat[:, header.index("value")]
    variance = None
    if "stderr" in header:
        variance = mat[:, header.index("stderr")] ** 2
    return Spectrum(freqs=freqs, values=values, variance=variance, meta=meta)


# ------------------------------------------------------------------ maps

def write_map(path, m: ThetaMap, fmt: str = "csv") -> None:
    if fmt == "npz":
        def _write(fh):
            np.savez(fh, thetas=m.thetas, freqs_hz=m.freqs / TWO_PI,
                     spectra=m.spectra,
                     normalization=np.float64(m.normalization),
                     meta=json.dumps(m.meta, sort_keys=True))
        _atomic_write(path, _write)
        return
    if fmt != "csv":
        raise ValueError("fmt must be 'csv' or 'npz'")

    def _write(fh):
        fh.write("# rhet theta map v1\n")
        fh.write(f"# normalization = {_fmt(m.normalization)}\n")
        for line in _meta_lines(m.meta):
            fh.write(line)
        fh.write("theta_rad," + ",".join(_fmt(f / TWO_PI) for f in m.freqs) + "\n")
        for k in range(m.thetas.size):
            fh.write(_fmt(m.thetas[k]) + ","
                     + ",".join(_fmt(v) for v in m.spectra[k]) + "\n")

    _atomic_write(path, _write, binary=False)


def read_map(path) -> ThetaMap:
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"PK":  # zip container: npz
        with np.load(path, allow_pickle=False) as z:
            return ThetaMap(
                thetas=z["thetas"], freqs=z["freqs_hz"] * TWO_PI,
                spectra=z["spectra"],
                normalization=float(z["normalization"]),
                meta=json.loads(str(z["meta"])))
    meta = {}
    norm = 1.0
    header = None
    thetas = []
    rows = []
    with open(path, "r") as fh:
        first = fh.readline()
        if not first.startswith("# rhet theta map"):
            raise TraceFormatError(f"{path}: not a map file")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                key = key.strip()
                if key == "normalization":
                    norm = float(val)
                elif val:
                    meta[key] = _parse_meta_value(val)
                continue
            parts = line.split(",")
            if header is None:
                header = np.array([float(x) for x in parts[1:]]) * TWO_PI
                continue
            thetas.append(float(parts[0]))
            rows.append([float(x) for x in parts[1:]])
    if header is None or not rows:
        raise TraceFormatError(f"{path}: no data rows")
    return ThetaMap(thetas=np.array(thetas), freqs=header,
                    spectra=np.array(rows), normalization=norm, meta=meta)


# ------------------------------------------------------------- comparison

def _vertex_peak(f, v):
    """Largest-magnitude feature read by a quadratic fit around the extremum.

    Fitting a window (band/12 wide) instead of quoting the raw argmax bin
    removes the upward extreme-value bias a noisy estimate picks up when the
    most extreme fluctuation on a broad feature is selected. Falls back to
    the raw bin when the fit is degenerate or the vertex leaves the window.
    """
    k = int(np.argmax(np.abs(v)))
    w = max(3, v.size // 12)
    a = max(0, k - w)
    b = min(v.size, k + w + 1)
    ff = f[a:b] - f[k]
    vv = v[a:b]
    if ff.size < 5 or np.ptp(ff) == 0.0:
        return float(f[k]), float(v[k])
    c2, c1, c0 = np.polyfit(ff, vv, 2)
    if c2 == 0.0:
        return float(f[k]), float(v[k])
    x = -c1 / (2.0 * c2)
    if not ff[0] <= x <= ff[-1]:
        return float(f[k]), float(v[k])
    return float(f[k] + x), float(c0 - c1 * c1 / (4.0 * c2))


def compare_spectra(a: Spectrum, b: Spectrum, band=None,
                    max_rel_err: float = 0.15,
                    min_pearson: float = 0.95) -> dict:
    """Peak and shape agreement between two spectra.

    b is resampled onto a's grid by linear interpolation over the overlap;
    disjoint grids raise GridError. Peak amplitudes and locations come from
    a quadratic fit around the largest-magnitude bin in the band (raw bin
    when degenerate). The report is JSON-ready.
    """
    lo = max(a.freqs[0], b.freqs[0])
    hi = min(a.freqs[-1], b.freqs[-1])
    if band is not None:
        lo = max(lo, band[0])
        hi = min(hi, band[1])
    sel = (a.freqs >= lo) & (a.freqs <= hi)
    if np.count_nonzero(sel) < 8:
        raise GridError("grids share fewer than 8 bins in the requested band")
    fa = a.freqs[sel]
    va = np.real(a.values[sel]).astype(float)
    vb = np.interp(fa, b.freqs, np.real(b.values).astype(float))
    freq_a, peak_a = _vertex_peak(fa, va)
    freq_b, peak_b = _vertex_peak(fa, vb)
    denom = max(abs(peak_a), abs(peak_b), 1e-300)
    rel_err = abs(peak_a - peak_b) / denom
    if np.std(va) == 0.0 or np.std(vb) == 0.0:
        pearson = 1.0 if np.allclose(va, vb) else 0.0
    else:
        pearson = float(np.corrcoef(va, vb)[0, 1])
    report = {
        "band_hz": [lo / TWO_PI, hi / TWO_PI],
        "n_bins": int(np.count_nonzero(sel)),
        "peak_a": peak_a,
        "peak_b": peak_b,
        "peak_freq_a_hz": freq_a / TWO_PI,
        "peak_freq_b_hz": freq_b / TWO_PI,
        "peak_rel_err": float(rel_err),
        "peak_freq_err_hz": abs(freq_a - freq_b) / TWO_PI,
        "pearson": pearson,
        "rms_rel_diff": float(np.sqrt(np.mean((va - vb) ** 2))
                              / max(np.sqrt(np.mean(va ** 2)), 1e-300)),
        "thresholds": {"max_rel_err": max_rel_err, "min_pearson": min_pearson},
    }
    report["pass"] = bool(rel_err <= max_rel_err and pearson >= min_pearson)
    return report
