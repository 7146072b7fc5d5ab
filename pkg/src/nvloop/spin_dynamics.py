"""Two-level spin dynamics for an optically read out electron spin.

Covers the resonance frequencies of the m_s = 0 to m_s = +/-1
transitions under a bias field, Rabi oscillations (single spin and
ensemble averaged), pulsed ODMR contrast, XY8 decoupling sequences,
Bloch-vector propagation in the rotating frame, and synchronized-
readout detection of an AC field, where the photoluminescence record
oscillates at the difference between the signal frequency and the
sequence's central frequency 1/(2 tau).

Convention: the polarized, bright (m_s = 0) state is the Bloch south
pole (0, 0, -1); contrast maps bloch_z affinely with a configurable
depth.  A run addresses one of the two transitions at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import PreconditionError, PulseOverlapError
from .signal_analysis import TimeSeries

ZERO_FIELD_SPLITTING = 2.87e9   # Hz
GYROMAGNETIC_RATIO = 2.8024e10  # Hz per tesla (2.8024 MHz per gauss)

XY8_PHASES = (0.0, math.pi / 2, 0.0, math.pi / 2,
              math.pi / 2, 0.0, math.pi / 2, 0.0)


@dataclass(frozen=True)
class NVConstants:
    zero_field_splitting: float = ZERO_FIELD_SPLITTING
    gyromagnetic_ratio: float = GYROMAGNETIC_RATIO
    t2_envelope: float | None = None  # seconds; None disables coherence decay

    def __post_init__(self):
        if not self.zero_field_splitting > 0:
            raise PreconditionError("zero_field_splitting must be > 0")
        if not self.gyromagnetic_ratio > 0:
            raise PreconditionError("gyromagnetic_ratio must be > 0")
        if self.t2_envelope is not None and not self.t2_envelope > 0:
            raise PreconditionError("t2_envelope must be > 0 when set")


DEFAULT_CONSTANTS = NVConstants()


@dataclass(frozen=True)
class EsrFrequencies:
    f_minus: float
    f_plus: float


def esr_frequencies(b0: float, constants: NVConstants = DEFAULT_CONSTANTS) -> EsrFrequencies:
    """Transition frequencies at bias field ``b0`` (tesla, along the spin axis)."""
    if b0 < 0:
        raise PreconditionError("b0 must be >= 0")
    zeeman = constants.gyromagnetic_ratio * b0
    return EsrFrequencies(
        f_minus=abs(constants.zero_field_splitting - zeeman),
        f_plus=constants.zero_field_splitting + zeeman,
    )


def rabi_population(t, f1: float, detuning: float = 0.0):
    """Population transferred out of the polarized state after drive time t.

    Generalized two-level result: (f1^2 / (f1^2 + d^2)) * sin^2(pi * O * t)
    with O = sqrt(f1^2 + d^2).  Accepts scalar or array t.
    """
    if f1 < 0:
        raise PreconditionError("f1 must be >= 0")
    omega_sq = f1 * f1 + detuning * detuning
    if omega_sq == 0.0:
        return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
    s = np.sin(np.pi * math.sqrt(omega_sq) * np.asarray(t, dtype=float))
    out = (f1 * f1 / omega_sq) * s * s
    return out if np.ndim(t) else float(out)


def odmr_spectrum(drive_freqs, f0: float, f1: float, pulse_duration: float,
                  contrast_depth: float = 0.03) -> np.ndarray:
    """PL contrast versus drive frequency for a fixed-length pulse.

    contrast(f) = 1 - depth * <rabi_population(t, f1, f - f0)>_t with the
    average taken over the pulse.  For pulses much longer than 1/f1 this
    tends to the Lorentzian-like dip 1 - depth * f1^2 / (2 (f1^2 + d^2)).
    """
    if not pulse_duration > 0:
        raise PreconditionError("pulse_duration must be > 0")
    if f1 < 0:
        raise PreconditionError("f1 must be >= 0")
    delta = np.asarray(drive_freqs, dtype=float) - f0
    omega_sq = f1 * f1 + delta * delta
    omega = np.sqrt(omega_sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = 0.5 - np.sin(2.0 * np.pi * omega * pulse_duration) / (4.0 * np.pi * omega * pulse_duration)
        weight = np.where(omega_sq > 0.0, f1 * f1 / np.where(omega_sq > 0.0, omega_sq, 1.0), 0.0)
        avg = np.where(omega > 0.0, avg, 0.0)
    return 1.0 - contrast_depth * weight * avg


def ensemble_rabi(f1_samples, times) -> TimeSeries:
    """Resonant Rabi signal averaged over a set of local drive strengths.

    Spatial spread of the drive field dephases the ensemble average,
    damping the oscillation and broadening its spectral line.
    """
    f1s = np.asarray(f1_samples, dtype=float)
    t = np.asarray(times, dtype=float)
    if f1s.size == 0:
        raise PreconditionError("f1_samples must be nonempty")
    if t.size < 2:
        raise PreconditionError("times must hold at least 2 samples")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise PreconditionError("times must be uniformly spaced")
    s = np.sin(np.pi * f1s[:, None] * t[None, :])
    pop = np.mean(s * s, axis=0)
    return TimeSeries(samples=pop, sample_period=float(dt[0]), t0=float(t[0]))


class EventKind(str, Enum):
    MW_PULSE = "mw_pulse"
    FREE_EVOLUTION = "free_evolution"
    READOUT_MARKER = "readout_marker"


@dataclass(frozen=True)
class PulseEvent:
    kind: EventKind
    duration: float = 0.0
    rabi_rate: float = 0.0    # Hz, mw pulses only
    phase_axis: float = 0.0   # radians in the equatorial plane, mw pulses only

    def __post_init__(self):
        if self.duration < 0:
            raise PreconditionError("event duration must be >= 0")


def mw_pulse(duration: float, rabi_rate: float, phase_axis: float = 0.0) -> PulseEvent:
    return PulseEvent(EventKind.MW_PULSE, duration, rabi_rate, phase_axis)


def free_evolution(duration: float) -> PulseEvent:
    return PulseEvent(EventKind.FREE_EVOLUTION, duration)


def readout_marker() -> PulseEvent:
    return PulseEvent(EventKind.READOUT_MARKER)


@dataclass(frozen=True)
class PulseSequence:
    events: tuple[PulseEvent, ...]

    @property
    def duration(self) -> float:
        return sum(ev.duration for ev in self.events)


@dataclass(frozen=True)
class ACSignal:
    """Sinusoidal test field given directly as its projection on the spin axis."""

    amplitude: float       # tesla
    frequency: float       # Hz
    phase: float = 0.0     # radians at t = 0

    def __post_init__(self):
        if self.amplitude < 0:
            raise PreconditionError("amplitude must be >= 0")


@dataclass
class TwoLevelState:
    bloch: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))

    def __post_init__(self):
        self.bloch = np.asarray(self.bloch, dtype=float)
        if self.bloch.shape != (3,):
            raise PreconditionError("bloch must be a 3-vector")
        if np.linalg.norm(self.bloch) > 1.0 + 1e-9:
            raise PreconditionError("bloch vector must have norm <= 1")

    @classmethod
    def polarized(cls) -> "TwoLevelState":
        return cls()


def make_xy8(n_repeats: int, f_casr: float, f1: float, include_pi2: bool = True,
             readout_quadrature: str = "sin") -> PulseSequence:
    """XY8 train of 8*n_repeats pi pulses with centers spaced tau = 1/(2 f_casr).

    Pulses have finite duration 1/(2 f1) and must fit inside half an
    inter-pulse interval, which requires f1 > 2 f_casr.  When
    ``include_pi2`` is set, pi/2 pulses open and close the sequence; the
    closing axis selects whether the readout is the sine (default,
    linear in small accumulated phase) or cosine quadrature.
    """
    if n_repeats < 1:
        raise PreconditionError("n_repeats must be >= 1")
    if not f_casr > 0:
        raise PreconditionError("f_casr must be > 0")
    if readout_quadrature not in ("sin", "cos"):
        raise PreconditionError("readout_quadrature must be 'sin' or 'cos'")
    if not f1 > 2.0 * f_casr:
        raise PulseOverlapError(
            f"pulses overlap: pi-pulse duration 1/(2 f1) must be below half the "
            f"inter-pulse delay, which needs f1 > 2 f_casr (got f1={f1!r}, f_casr={f_casr!r})")
    tau = 1.0 / (2.0 * f_casr)
    t_pi = 1.0 / (2.0 * f1)
    events: list[PulseEvent] = []
    if include_pi2:
        events.append(mw_pulse(t_pi / 2.0, f1, 0.0))
    events.append(free_evolution(tau / 2.0 - t_pi / 2.0))
    n_pulses = 8 * n_repeats
    for k in range(n_pulses):
        events.append(mw_pulse(t_pi, f1, XY8_PHASES[k % 8]))
        if k < n_pulses - 1:
            events.append(free_evolution(tau - t_pi))
    events.append(free_evolution(tau / 2.0 - t_pi / 2.0))
    if include_pi2:
        axis = math.pi / 2 if readout_quadrature == "sin" else 0.0
        events.append(mw_pulse(t_pi / 2.0, f1, axis))
    events.append(readout_marker())
    return PulseSequence(tuple(events))


def _equatorial_rotation(phase_axis: float, angle: float) -> np.ndarray:
    # rotation about the in-plane axis (cos a, sin a, 0) by the given angle
    ux, uy = math.cos(phase_axis), math.sin(phase_axis)
    c, s = math.cos(angle), math.sin(angle)
    omc = 1.0 - c
    return np.array([
        [c + ux * ux * omc, ux * uy * omc, uy * s],
        [ux * uy * omc, c + uy * uy * omc, -ux * s],
        [-uy * s, ux * s, c],
    ])


def _signal_phase(signal: ACSignal | None, t0: float, t1: float, gamma: float) -> float:
    """Precession angle 2 pi gamma * integral of the signal over [t0, t1]."""
    if signal is None or signal.amplitude == 0.0:
        return 0.0
    f = signal.frequency
    if f == 0.0:
        return 2.0 * math.pi * gamma * signal.amplitude * math.sin(signal.phase) * (t1 - t0)
    w = 2.0 * math.pi * f
    return (gamma * signal.amplitude / f) * (math.cos(w * t0 + signal.phase)
                                             - math.cos(w * t1 + signal.phase))


def propagate(state: TwoLevelState, seq: PulseSequence, signal: ACSignal | None = None,
              constants: NVConstants = DEFAULT_CONSTANTS, start_time: float = 0.0) -> np.ndarray:
    """Bloch trajectory through a pulse sequence in the rotating frame.

    Microwave pulses rotate the Bloch vector about their equatorial
    phase axis by 2 pi * rabi_rate * duration; free evolution applies a
    z rotation equal to the signal phase integrated analytically over
    the interval; readout markers leave the state untouched (sample
    bloch_z there).  Returns an array of shape (n_events + 1, 3) with
    the state before the first event and after every event.
    """
    v = np.array(state.bloch, dtype=float)
    traj = np.empty((len(seq.events) + 1, 3))
    traj[0] = v
    t = start_time
    t2 = constants.t2_envelope
    for i, ev in enumerate(seq.events):
        if ev.kind is EventKind.MW_PULSE:
            angle = 2.0 * math.pi * ev.rabi_rate * ev.duration
            v = _equatorial_rotation(ev.phase_axis, angle) @ v
        elif ev.kind is EventKind.FREE_EVOLUTION:
            theta = _signal_phase(signal, t, t + ev.duration, constants.gyromagnetic_ratio)
            c, s = math.cos(theta), math.sin(theta)
            v = np.array([c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]])
        if t2 is not None and ev.duration > 0:
            decay = math.exp(-ev.duration / t2)
            v[0] *= decay
            v[1] *= decay
        t += ev.duration
        traj[i + 1] = v
    return traj


@dataclass(frozen=True)
class ReadoutModel:
    """Affine map from bloch_z to PL contrast, plus optional white noise."""

    contrast_depth: float = 0.03
    noise_std: float = 0.0
    seed: int = 0
    quadrature: str = "sin"

    def __post_init__(self):
        if not 0.0 <= self.contrast_depth <= 1.0:
            raise PreconditionError("contrast_depth must lie in [0, 1]")
        if self.noise_std < 0:
            raise PreconditionError("noise_std must be >= 0")
        if self.quadrature not in ("sin", "cos"):
            raise PreconditionError("quadrature must be 'sin' or 'cos'")

    def contrast(self, bloch_z):
        return 1.0 - self.contrast_depth * (1.0 + bloch_z) / 2.0


@dataclass(frozen=True)
class BlockTiming:
    """Dead time appended to each sequence block before the next one starts.

    The defaults are a 2 us post-sequence delay, a 20 us repolarizing
    laser pulse, and a 1 us settling delay.  With
    ``lock_to_sequence_clock`` the block period is rounded up to the
    next multiple of 1/f_casr so every block starts phase-coherent with
    the decoupling clock; this is what pins the PL oscillation at the
    exact difference frequency.
    """

    post_sequence_delay: float = 2e-6
    aom_duration: float = 20e-6
    post_aom_delay: float = 1e-6
    lock_to_sequence_clock: bool = True

    def __post_init__(self):
        for name in ("post_sequence_delay", "aom_duration", "post_aom_delay"):
            if getattr(self, name) < 0:
                raise PreconditionError(f"{name} must be >= 0")

    @property
    def dead_time(self) -> float:
        return self.post_sequence_delay + self.aom_duration + self.post_aom_delay


def casr_block_period(seq_duration: float, f_casr: float, timing: BlockTiming) -> float:
    period = seq_duration + timing.dead_time
    if timing.lock_to_sequence_clock:
        grid = 1.0 / f_casr
        period = math.ceil(period / grid - 1e-9) * grid
    return period


def _batched_run(seq: PulseSequence, starts: np.ndarray, signal: ACSignal,
                 constants: NVConstants) -> np.ndarray:
    """Final bloch_z for many identical blocks starting at ``starts``.

    Pulses are the same rotation in every block, so they are applied as
    one matrix product; free-evolution z angles differ per block through
    the absolute-time signal integral.  Matches running ``propagate``
    block by block with a freshly polarized state.
    """
    n = starts.size
    gamma = constants.gyromagnetic_ratio
    t2 = constants.t2_envelope
    states = np.tile(np.array([0.0, 0.0, -1.0]), (n, 1))
    t = starts.astype(float).copy()
    w = 2.0 * math.pi * signal.frequency
    for ev in seq.events:
        if ev.kind is EventKind.MW_PULSE:
            angle = 2.0 * math.pi * ev.rabi_rate * ev.duration
            states = states @ _equatorial_rotation(ev.phase_axis, angle).T
        elif ev.kind is EventKind.FREE_EVOLUTION and signal.amplitude != 0.0:
            if signal.frequency != 0.0:
                scale = gamma * signal.amplitude / signal.frequency
                theta = scale * (np.cos(w * t + signal.phase)
                                 - np.cos(w * (t + ev.duration) + signal.phase))
            else:
                theta = np.full(n, 2.0 * math.pi * gamma * signal.amplitude
                                * math.sin(signal.phase) * ev.duration)
            c, s = np.cos(theta), np.sin(theta)
            x = c * states[:, 0] - s * states[:, 1]
            y = s * states[:, 0] + c * states[:, 1]
            states[:, 0] = x
            states[:, 1] = y
        if t2 is not None and ev.duration > 0:
            states[:, :2] *= math.exp(-ev.duration / t2)
        t += ev.duration
    return states[:, 2]


def casr_run(total_time: float, f_signal: float, signal_amp: float,
             f_casr: float = 30e6, n_repeats: int = 6, f1: float = 136.3e6,
             readout: ReadoutModel = ReadoutModel(), timing: BlockTiming = BlockTiming(),
             constants: NVConstants = DEFAULT_CONSTANTS,
             signal_phase: float = 0.0, generator_offset_ppm: float = 0.0) -> TimeSeries:
    """Synchronized-readout detection of an AC field.

    Repeats [XY8 block + readout + repolarization dead time] back to
    back for ``total_time`` and returns one PL contrast sample per
    block.  The PL record oscillates at |f_signal - 1/(2 tau)| where
    tau is the constructed inter-pulse delay.  ``generator_offset_ppm``
    models a miscalibrated signal source by scaling f_signal.
    """
    seq = make_xy8(n_repeats, f_casr, f1, include_pi2=True,
                   readout_quadrature=readout.quadrature)
    period = casr_block_period(seq.duration, f_casr, timing)
    n_blocks = int(total_time / period + 1e-12)
    if n_blocks < 2:
        raise PreconditionError("total_time must cover at least two block periods")
    f_actual = f_signal * (1.0 + generator_offset_ppm * 1e-6)
    signal = ACSignal(amplitude=signal_amp, frequency=f_actual, phase=signal_phase)
    starts = np.arange(n_blocks) * period
    bz = _batched_run(seq, starts, signal, constants)
    pl = readout.contrast(bz)
    if readout.noise_std > 0:
        rng = np.random.default_rng(readout.seed)
        pl = pl + rng.normal(0.0, readout.noise_std, n_blocks)
    return TimeSeries(samples=pl, sample_period=period, t0=0.0)
