"""One-port model of the microwave chain that drives the loop antenna.

The source (50 ohm) feeds the loop inductor in series with a blocking
capacitor, a fixed-length 50 ohm line, and an open-ended phase shifter.
The open branch presents a pure reactance -i*Z0*cot(phi + phi0) that
sweeps through all values as the shifter phase is scanned, so the
total input impedance can be tuned to zero and the loop current
maximized.  A fixed 50 ohm termination can replace the shifter branch
for baseline comparisons.

All quantities are SI; phases are radians.  The lossless model is
periodic in pi, so optima are reported in [0, pi).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

from scipy.optimize import brentq, minimize_scalar

from .errors import (
    FlatObjectiveError,
    ImpedancePoleError,
    PreconditionError,
)

Z0 = 50.0  # characteristic impedance of every line segment, ohms

_LN10 = math.log(10.0)
_POLE_TOL = 1e-12


class TerminationMode(str, Enum):
    OPEN_PHASE_SHIFTER = "open_phase_shifter"
    FIXED_50_OHM = "fixed_50_ohm"


@dataclass(frozen=True)
class DriveChain:
    """Element stack between the source and ground, source side first.

    ``line_loss_db_per_segment`` applies the same attenuation to the
    fixed line and to the phase shifter (two segments); the source-side
    line is absorbed into the ideal Thevenin source.  The parasitic
    shunt capacitance sits at the source-side loop node and defaults to
    zero.  ``loop_inductance`` may be zero for degenerate test chains.
    """

    available_power: float = 34.8
    source_impedance: float = 50.0
    line2_phase_phi0: float = 0.0
    phase_shifter_phi: float = math.pi / 2
    blocking_capacitance: float = 0.5e-12
    loop_inductance: float = 5.7e-9
    parasitic_shunt_capacitance: float = 0.0
    line_loss_db_per_segment: float = 0.0
    termination_mode: TerminationMode = TerminationMode.OPEN_PHASE_SHIFTER

    def __post_init__(self):
        if not self.available_power > 0:
            raise PreconditionError("available_power must be > 0")
        if not self.source_impedance > 0:
            raise PreconditionError("source_impedance must be > 0")
        if not self.blocking_capacitance > 0:
            raise PreconditionError("blocking_capacitance must be > 0")
        if self.loop_inductance < 0:
            raise PreconditionError("loop_inductance must be >= 0")
        if self.parasitic_shunt_capacitance < 0:
            raise PreconditionError("parasitic_shunt_capacitance must be >= 0")
        if self.line_loss_db_per_segment < 0:
            raise PreconditionError("line_loss_db_per_segment must be >= 0")
        if not isinstance(self.termination_mode, TerminationMode):
            object.__setattr__(self, "termination_mode", TerminationMode(self.termination_mode))


@dataclass(frozen=True)
class TuneResult:
    phi_opt: float
    zin_at_opt: complex
    loop_current_amplitude: float
    reflection_coefficient_magnitude: float


@dataclass(frozen=True)
class SweepSample:
    phi: float
    zin: complex | None
    zin_abs: float
    loop_current_amplitude: float
    flagged: bool = False


def line_transform(load: complex | None, z0: float, electrical_phase: float,
                   loss_db: float = 0.0) -> complex:
    """Impedance at the input of a line section terminated in ``load``.

    ``load=None`` means an open end.  Lossless with an open end this is
    -i*z0*cot(electrical_phase).  Raises ImpedancePoleError where the
    transformed reflection coefficient reaches +1 (open line at a
    multiple of pi) instead of returning a non-finite value.
    """
    if not z0 > 0:
        raise PreconditionError("z0 must be > 0")
    if not math.isfinite(electrical_phase):
        raise PreconditionError("electrical_phase must be finite")
    if loss_db < 0:
        raise PreconditionError("loss_db must be >= 0")
    if load is None:
        gamma_load = 1.0 + 0.0j
    else:
        den = load + z0
        if abs(den) == 0.0:
            raise ImpedancePoleError("load equals -z0; reflection coefficient diverges")
        gamma_load = (load - z0) / den
    alpha = loss_db * _LN10 / 20.0  # nepers over the section
    gamma_in = gamma_load * cmath.exp(-2.0 * (alpha + 1j * electrical_phase))
    one_minus = 1.0 - gamma_in
    if abs(one_minus) < _POLE_TOL:
        raise ImpedancePoleError(
            f"impedance pole: open line at electrical phase {electrical_phase!r} (mod pi)")
    return z0 * (1.0 + gamma_in) / one_minus


def z1(phi: float, chain: DriveChain) -> complex:
    """Impedance of the line-plus-shifter branch, seen from the capacitor."""
    if chain.termination_mode is not TerminationMode.OPEN_PHASE_SHIFTER:
        raise PreconditionError("z1 requires termination_mode=open_phase_shifter")
    loss = chain.line_loss_db_per_segment
    shifter = line_transform(None, Z0, phi, loss)
    return line_transform(shifter, Z0, chain.line2_phase_phi0, loss)


def _capacitor_impedance(omega: float, capacitance: float) -> complex:
    return -1j / (omega * capacitance)


def z2(phi: float, omega: float, chain: DriveChain) -> complex:
    """Branch impedance including the series blocking capacitor."""
    if not omega > 0:
        raise PreconditionError("omega must be > 0")
    return z1(phi, chain) + _capacitor_impedance(omega, chain.blocking_capacitance)


def zin(phi: float, omega: float, chain: DriveChain) -> complex:
    """Impedance seen by the source: loop reactance in series with the branch.

    With ``fixed_50_ohm`` termination the shifter branch is replaced by a
    matched 50 ohm load (transparent through the line), so phi is ignored.
    A nonzero parasitic shunt capacitance is placed at the source-side
    loop node.
    """
    if not omega > 0:
        raise PreconditionError("omega must be > 0")
    if chain.termination_mode is TerminationMode.FIXED_50_OHM:
        branch = line_transform(complex(Z0), Z0, chain.line2_phase_phi0,
                                chain.line_loss_db_per_segment)
    else:
        branch = z1(phi, chain)
    series = (1j * omega * chain.loop_inductance + branch
              + _capacitor_impedance(omega, chain.blocking_capacitance))
    cp = chain.parasitic_shunt_capacitance
    if cp > 0:
        z_shunt = _capacitor_impedance(omega, cp)
        den = z_shunt + series
        if abs(den) < _POLE_TOL * max(abs(z_shunt), abs(series)):
            raise ImpedancePoleError("parallel resonance of the parasitic shunt")
        series = z_shunt * series / den
    return series


def source_peak_voltage(chain: DriveChain) -> float:
    """Peak source EMF delivering ``available_power`` into a matched load."""
    return math.sqrt(8.0 * chain.available_power * chain.source_impedance)


def loop_current(zin_value: complex, chain: DriveChain) -> float:
    """Peak loop current for the chain driven at the given input impedance."""
    return source_peak_voltage(chain) / abs(chain.source_impedance + zin_value)


def reflection(zin_value: complex, z0: float = Z0) -> float:
    """Magnitude of the power-wave reflection coefficient at reference z0."""
    if not z0 > 0:
        raise PreconditionError("z0 must be > 0")
    den = zin_value + z0
    if abs(den) < _POLE_TOL * z0:
        raise ImpedancePoleError("reflection pole: Zin equals -z0")
    return abs((zin_value - z0) / den)


def driving_efficiency(f1: float, power: float) -> float:
    """Rabi frequency per square root of drive power, Hz / sqrt(W)."""
    if not power > 0:
        raise PreconditionError("power must be > 0")
    return f1 / math.sqrt(power)


def _abs_zin_or_inf(phi: float, omega: float, chain: DriveChain) -> float:
    try:
        return abs(zin(phi, omega, chain))
    except ImpedancePoleError:
        return math.inf


def optimal_phase(omega: float, chain: DriveChain, n_grid: int = 720) -> TuneResult:
    """Phase-shifter setting minimizing |Zin| over [0, pi).

    Deterministic coarse grid scan followed by bounded local
    refinement; for a purely reactive chain the imaginary part is
    additionally root-polished so the reported minimum is exact to
    machine precision.  Raises FlatObjectiveError when |Zin| does not
    vary over the scan (fully degenerate chain).
    """
    if chain.termination_mode is not TerminationMode.OPEN_PHASE_SHIFTER:
        raise PreconditionError("optimal_phase requires termination_mode=open_phase_shifter: "
                                "a fixed 50 ohm branch has no tunable phase")
    if n_grid < 720:
        n_grid = 720
    step = math.pi / n_grid
    mags = [_abs_zin_or_inf(k * step, omega, chain) for k in range(n_grid)]
    finite = [m for m in mags if math.isfinite(m)]
    if not finite:
        raise FlatObjectiveError("every scanned phase sits on an impedance pole")
    if max(finite) - min(finite) <= 1e-9 * max(1.0, max(finite)):
        raise FlatObjectiveError("flat objective: |Zin| is constant over the phase scan")
    k_best = min(range(n_grid), key=lambda k: mags[k])
    lo = k_best * step - step
    hi = k_best * step + step

    res = minimize_scalar(lambda p: _abs_zin_or_inf(p, omega, chain) ** 2,
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13, "maxiter": 500})
    phi_opt = float(res.x)

    # pure-reactance chains cross zero; a sign change lets brentq nail the root
    z_lo, z_hi = zin(lo, omega, chain), zin(hi, omega, chain)
    if (max(abs(z_lo.real), abs(z_hi.real)) < 1e-9
            and z_lo.imag * z_hi.imag < 0):
        root = brentq(lambda p: zin(p, omega, chain).imag, lo, hi, xtol=1e-15)
        if _abs_zin_or_inf(root, omega, chain) <= _abs_zin_or_inf(phi_opt, omega, chain):
            phi_opt = float(root)

    phi_opt %= math.pi
    z_opt = zin(phi_opt, omega, chain)
    return TuneResult(
        phi_opt=phi_opt,
        zin_at_opt=z_opt,
        loop_current_amplitude=loop_current(z_opt, chain),
        reflection_coefficient_magnitude=reflection(z_opt, chain.source_impedance),
    )


def phi_sweep(omega: float, chain: DriveChain, n_points: int) -> list[SweepSample]:
    """Uniform scan of phi over [0, pi); pole samples are flagged, not fatal."""
    if n_points < 2:
        raise PreconditionError("n_points must be >= 2")
    samples = []
    for k in range(n_points):
        phi = k * math.pi / n_points
        try:
            z = zin(phi, omega, chain)
        except ImpedancePoleError:
            samples.append(SweepSample(phi=phi, zin=None, zin_abs=math.inf,
                                       loop_current_amplitude=0.0, flagged=True))
            continue
        samples.append(SweepSample(phi=phi, zin=z, zin_abs=abs(z),
                                   loop_current_amplitude=loop_current(z, chain)))
    return samples
