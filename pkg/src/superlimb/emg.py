"""Surface-EMG processing chain.

Raw electrode traces are band-pass filtered (zero-phase biquad, default
20-450 Hz), rectified, and reduced to a causal moving-RMS envelope.  The
envelope, normalized by an MVC reference, drives first-order activation
dynamics; a reduced Hill model (activation x maximal force x constant
length/velocity factors) yields the muscle-force estimate.  A Schmitt
trigger on the shank yaw angle gates the final map from muscle force to an
upward equilibrium-point shift, so electrode activity alone can never move
the limb.

File formats
------------
Traces are CSV with header ``t,ch1[,ch2,...]`` (seconds, millivolts);
motion streams are CSV ``t,yaw_rad``.  Streams are merged on the trace
timestamps with zero-order hold of the slower stream.  Pipeline output is
CSV ``t,envelope,activation,force_n,gate,dxeq_m``.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, filtfilt

from .errors import (
    BadBand,
    BadWindow,
    DimensionMismatch,
    MissingFile,
    NonFinite,
    ValidationError,
)

DEFAULT_BAND = (20.0, 450.0)
DEFAULT_FS = 1000.0
DEFAULT_WINDOW = 0.1


@dataclass(frozen=True)
class EmgTrace:
    """Uniformly sampled multi-channel sEMG segment.

    channels is a tuple of (name, samples-in-mV); all channels share the
    sampling rate fs and the segment start time t0.
    """

    fs: float
    channels: tuple[tuple[str, np.ndarray], ...]
    t0: float = 0.0

    def __post_init__(self):
        if not (self.fs > 0.0 and np.isfinite(self.fs)):
            raise ValidationError(f"fs must be positive, got {self.fs}")
        chans = []
        length = None
        for name, samples in self.channels:
            s = np.asarray(samples, dtype=float)
            if s.ndim != 1:
                raise DimensionMismatch(f"channel {name!r} must be 1-D")
            if length is None:
                length = s.size
            elif s.size != length:
                raise DimensionMismatch("all channels must have equal length")
            if s.size and not np.all(np.isfinite(s)):
                raise NonFinite(f"channel {name!r} contains NaN/Inf")
            chans.append((str(name), s))
        if not chans:
            raise ValidationError("trace needs at least one channel")
        object.__setattr__(self, "channels", tuple(chans))

    @property
    def n_samples(self) -> int:
        return self.channels[0][1].size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_samples) / self.fs


@dataclass(frozen=True)
class HillParams:
    """Reduced Hill-model parameters; the length/velocity factors are
    constant scalars because no fascicle measurements exist to drive them."""

    f_max: float = 300.0
    act_tau_rise: float = 0.05
    act_tau_fall: float = 0.08
    fl_factor: float = 1.0
    fv_factor: float = 1.0
    mvc_reference: float = 1.0

    def __post_init__(self):
        if not (self.f_max > 0.0):
            raise ValidationError("f_max must be > 0")
        if not (self.act_tau_rise > 0.0 and self.act_tau_fall > 0.0):
            raise ValidationError("activation time constants must be > 0")
        if not (self.mvc_reference > 0.0):
            raise ValidationError("mvc_reference must be > 0")
        for name in ("fl_factor", "fv_factor"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.5):
                raise ValidationError(f"{name} must be in (0, 1.5], got {v}")


@dataclass(frozen=True)
class MotionSample:
    """One yaw measurement of the instrumented shank."""

    t: float
    yaw: float


def _map_channels(trace: EmgTrace, fn) -> EmgTrace:
    return EmgTrace(
        fs=trace.fs,
        channels=tuple((name, fn(s)) for name, s in trace.channels),
        t0=trace.t0,
    )


def bandpass(trace: EmgTrace, f_lo: float, f_hi: float) -> EmgTrace:
    """Zero-phase band-pass: one second-order (biquad) Butterworth section
    applied forward and backward.  Rejects DC exactly."""
    if not (0.0 < f_lo < f_hi < trace.fs / 2.0):
        raise BadBand(
            f"need 0 < f_lo < f_hi < fs/2, got ({f_lo}, {f_hi}) at fs={trace.fs}"
        )
    b, a = butter(1, [f_lo, f_hi], btype="bandpass", fs=trace.fs)
    pad = 3 * (max(len(a), len(b)) - 1)
    if trace.n_samples <= pad:
        raise ValidationError(
            f"trace too short to filter ({trace.n_samples} samples)"
        )
    return _map_channels(trace, lambda s: filtfilt(b, a, s))


def rectify(trace: EmgTrace) -> EmgTrace:
    """Full-wave rectification (samplewise absolute value)."""
    return _map_channels(trace, np.abs)


def envelope(trace: EmgTrace, window: float) -> EmgTrace:
    """Causal moving-RMS envelope with the given window in seconds.

    Leading samples use the partial window that is available, so the output
    has the same length as the input.
    """
    if window < 2.0 / trace.fs:
        raise BadWindow(
            f"window {window} s shorter than two samples at fs={trace.fs}"
        )
    n = int(round(window * trace.fs))

    def rms(s: np.ndarray) -> np.ndarray:
        c = np.concatenate([[0.0], np.cumsum(s * s)])
        counts = np.minimum(np.arange(1, s.size + 1), n)
        lo = np.maximum(np.arange(1, s.size + 1) - n, 0)
        acc = c[1:] - c[lo]
        return np.sqrt(np.maximum(acc / counts, 0.0))

    return _map_channels(trace, rms)


def activation(
    envelope_value: float, params: HillParams, prev_a: float, dt: float
) -> float:
    """One step of first-order activation dynamics.

    The envelope is normalized by mvc_reference and clamped to [0, 1] to
    form the drive u; activation relaxes towards u with the rise constant
    when increasing and the fall constant otherwise.
    """
    if not (dt > 0.0):
        raise ValidationError(f"dt must be > 0, got {dt}")
    u = min(max(float(envelope_value) / params.mvc_reference, 0.0), 1.0)
    tau = params.act_tau_rise if u > prev_a else params.act_tau_fall
    a = prev_a + (dt / tau) * (u - prev_a)
    return min(max(a, 0.0), 1.0)


def activation_series(
    env: np.ndarray, params: HillParams, fs: float, a0: float = 0.0
) -> np.ndarray:
    """Run the activation dynamics over a whole envelope array."""
    dt = 1.0 / fs
    out = np.empty(env.size)
    a = a0
    for i, e in enumerate(env):
        a = activation(e, params, a, dt)
        out[i] = a
    return out


def hill_force(a: float, params: HillParams) -> float:
    """Muscle force F = a * f_max * fl_factor * fv_factor."""
    if not (0.0 <= a <= 1.0):
        raise ValidationError(f"activation must be in [0,1], got {a}")
    return a * params.f_max * params.fl_factor * params.fv_factor


def motion_gate(
    yaw: float, threshold: float, hysteresis: float, prev: bool = False
) -> bool:
    """Schmitt trigger on |yaw|: turns on at >= threshold, off at
    <= threshold - hysteresis, holds the previous state in between."""
    if not (threshold > hysteresis >= 0.0):
        raise ValidationError(
            f"need threshold > hysteresis >= 0, got ({threshold}, {hysteresis})"
        )
    mag = abs(yaw)
    if mag >= threshold:
        return True
    if mag <= threshold - hysteresis:
        return False
    return prev


def gate_series(
    yaws: np.ndarray, threshold: float, hysteresis: float, initial: bool = False
) -> np.ndarray:
    """Replay the Schmitt trigger over a yaw sequence."""
    out = np.empty(len(yaws), dtype=bool)
    state = initial
    for i, y in enumerate(yaws):
        state = motion_gate(float(y), threshold, hysteresis, state)
        out[i] = state
    return out


def map_to_equilibrium(f_muscle: float, gate: bool, gain: float) -> float:
    """Upward equilibrium-point shift commanded by the muscle force; zero
    whenever the motion gate is off."""
    if gain < 0.0:
        raise ValidationError(f"gain must be >= 0, got {gain}")
    if not gate:
        return 0.0
    return gain * float(f_muscle)


def zero_order_hold(
    t_query: np.ndarray, t: np.ndarray, values: np.ndarray, initial: float = 0.0
) -> np.ndarray:
    """Sample a piecewise-constant stream at the query times; queries before
    the first stream sample get ``initial``."""
    tq = np.asarray(t_query, dtype=float)
    ts = np.asarray(t, dtype=float)
    vs = np.asarray(values, dtype=float)
    if ts.size == 0:
        return np.full(tq.shape, initial)
    idx = np.searchsorted(ts, tq, side="right") - 1
    out = np.where(idx >= 0, vs[np.clip(idx, 0, vs.size - 1)], initial)
    return out


# --- whole-trace pipeline -----------------------------------------------------


@dataclass(frozen=True)
class PipelineResult:
    """Per-sample pipeline outputs at the trace timestamps."""

    t: np.ndarray
    envelope: np.ndarray
    activation: np.ndarray
    force: np.ndarray
    gate: np.ndarray
    dxeq: np.ndarray


def run_pipeline(
    trace: EmgTrace,
    hill: HillParams,
    gate_threshold: float,
    gate_hysteresis: float,
    gain: float,
    motion: tuple[np.ndarray, np.ndarray] | None = None,
    band: tuple[float, float] = DEFAULT_BAND,
    window: float = DEFAULT_WINDOW,
) -> PipelineResult:
    """Process one trace end to end.

    ``motion`` is an optional (t, yaw) stream; without one the gate is held
    open, i.e. the pipeline runs ungated.  Multi-channel traces are reduced
    by averaging the per-channel envelopes.
    """
    filtered = envelope(rectify(bandpass(trace, *band)), window)
    env = np.mean([s for _, s in filtered.channels], axis=0)
    act = activation_series(env, hill, trace.fs)
    force = act * hill.f_max * hill.fl_factor * hill.fv_factor
    t = trace.times
    if motion is None:
        gate = np.ones(t.size, dtype=bool)
    else:
        yaw = zero_order_hold(t, motion[0], motion[1], initial=0.0)
        gate = gate_series(yaw, gate_threshold, gate_hysteresis)
    dxeq = np.where(gate, gain * force, 0.0)
    return PipelineResult(
        t=t, envelope=env, activation=act, force=force, gate=gate, dxeq=dxeq
    )


# --- CSV interfaces -----------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def load_trace_csv(path: str) -> EmgTrace:
    """Read a trace CSV with header ``t,ch1[,ch2,...]``; the sampling rate
    is inferred from the (required uniform) time column."""
    if not os.path.isfile(path):
        raise MissingFile(f"trace file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "t" or len(header) < 2:
            raise ValidationError(f"{path}: expected header 't,ch1[,ch2,...]'")
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) < 2:
        raise ValidationError(f"{path}: need at least two samples")
    data = np.asarray(rows, dtype=float)
    t = data[:, 0]
    dts = np.diff(t)
    dt = float(np.median(dts))
    if dt <= 0.0 or np.max(np.abs(dts - dt)) > 1e-6 * max(dt, 1e-12):
        raise ValidationError(f"{path}: time column must be uniformly increasing")
    names = [h.strip() for h in header[1:]]
    return EmgTrace(
        fs=1.0 / dt,
        channels=tuple((n, data[:, i + 1]) for i, n in enumerate(names)),
        t0=float(t[0]),
    )


def write_trace_csv(path: str, trace: EmgTrace):
    t = trace.times
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(n for n, _ in trace.channels) + "\n")
        cols = [s for _, s in trace.channels]
        for i in range(trace.n_samples):
            fh.write(
                _fmt(t[i]) + "," + ",".join(_fmt(c[i]) for c in cols) + "\n"
            )


def load_motion_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read a motion CSV with header ``t,yaw_rad``; time must be
    nondecreasing."""
    if not os.path.isfile(path):
        raise MissingFile(f"motion file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or [h.strip() for h in header[:2]] != ["t", "yaw_rad"]:
            raise ValidationError(f"{path}: expected header 't,yaw_rad'")
        rows = [[float(v) for v in row[:2]] for row in reader if row]
    if not rows:
        raise ValidationError(f"{path}: empty motion stream")
    data = np.asarray(rows, dtype=float)
    t, yaw = data[:, 0], data[:, 1]
    if np.any(np.diff(t) < 0.0):
        raise ValidationError(f"{path}: time column must be nondecreasing")
    return t, yaw


def write_pipeline_csv(path: str, result: PipelineResult):
    with open(path, "w", newline="") as fh:
        fh.write("t,envelope,activation,force_n,gate,dxeq_m\n")
        for i in range(result.t.size):
            fh.write(
                ",".join(
                    [
                        _fmt(result.t[i]),
                        _fmt(result.envelope[i]),
                        _fmt(result.activation[i]),
                        _fmt(result.force[i]),
                        str(int(result.gate[i])),
                        _fmt(result.dxeq[i]),
                    ]
                )
                + "\n"
            )
