"""Scenario runner: `nvloop <scenario> --config <file> [--out <dir>] [--seed <n>]`.

Each scenario reads its parameters from a flat key-value config,
runs the corresponding model chain, and emits CSV files plus a plain
text report.  Outputs are deterministic: identical config and seed
reproduce byte-identical files.  Exit codes: 0 success, 2 config or
precondition error, 3 numerical error (impedance pole, conductor
clearance, failed calibration).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import magnetics, rf_network, signal_analysis, spin_dynamics
from .config import (
    ConfigView,
    FIELD_UNITS,
    FREQUENCY_UNITS,
    LENGTH_UNITS,
    TIME_UNITS,
    load_config,
)
from .errors import ConfigError, NumericalError, PreconditionError

GAUSS = 1e-4  # tesla


def _fmt(x: float) -> str:
    return f"{x:.11e}"


def _write_csv(path: Path, header: tuple[str, ...], rows) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            str(v) if isinstance(v, (int, np.integer)) else _fmt(float(v))
            for v in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path


@dataclass
class ScenarioReport:
    scenario: str
    scalars: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def add_file(self, path: Path) -> None:
        self.files.append(path)

    def render(self) -> str:
        lines = [f"scenario = {self.scenario}"]
        for key, value in self.scalars.items():
            if isinstance(value, float):
                lines.append(f"{key} = {_fmt(value)}")
            else:
                lines.append(f"{key} = {value}")
        for path in self.files:
            lines.append(f"file = {Path(path).name}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "report.txt"
        path.write_text(self.render(), newline="\n")
        return path


def _geometry_from(cfg: ConfigView) -> magnetics.LoopGeometry:
    radii = cfg.quantity_list("geometry.radii", LENGTH_UNITS, (150e-6, 180e-6, 210e-6))
    widths = cfg.quantity_list("geometry.trace_widths", LENGTH_UNITS,
                               tuple(17e-6 for _ in radii))
    thicknesses = cfg.quantity_list("geometry.trace_thicknesses", LENGTH_UNITS,
                                    (3e-6, 9e-6, 9e-6) if len(radii) == 3
                                    else tuple(9e-6 for _ in radii))
    z_offsets = cfg.quantity_list("geometry.z_offsets", LENGTH_UNITS,
                                  tuple(0.0 for _ in radii))
    if not (len(widths) == len(thicknesses) == len(z_offsets) == len(radii)):
        raise ConfigError("geometry.*: radii, trace_widths, trace_thicknesses and "
                          "z_offsets must have matching lengths")
    turns = tuple(
        magnetics.Turn(radius=r, z_offset=z, trace_width=w, trace_thickness=t)
        for r, z, w, t in zip(radii, z_offsets, widths, thicknesses))
    return magnetics.LoopGeometry(
        turns=turns,
        segments_per_turn=cfg.integer("geometry.segments_per_turn", 360, minimum=64),
        filament_grid=(cfg.integer("geometry.filaments_radial", 3, minimum=1),
                       cfg.integer("geometry.filaments_axial", 3, minimum=1)),
    )


def _frame_from(cfg: ConfigView) -> magnetics.NVFrame:
    default_tilt = math.acos(1.0 / math.sqrt(3.0))
    return magnetics.NVFrame(
        axis_tilt=cfg.quantity("nv.axis_tilt", ("deg", "rad"), default_tilt),
        azimuth=cfg.quantity("nv.azimuth", ("deg", "rad"), 0.0),
    )


def _chain_from(cfg: ConfigView) -> rf_network.DriveChain:
    if cfg.boolean("chain.loop_inductance_from_geometry", False):
        inductance = magnetics.loop_inductance(_geometry_from(cfg))
    else:
        inductance = cfg.quantity("chain.loop_inductance", ("nH", "H"), 5.7e-9)
    termination = cfg.string(
        "chain.termination", "open_phase_shifter",
        choices=("open_phase_shifter", "fixed_50_ohm"))
    return rf_network.DriveChain(
        available_power=cfg.quantity("chain.available_power", ("W", "mW"), 34.8,
                                     positive=True),
        source_impedance=cfg.quantity("chain.source_impedance", ("ohm",), 50.0,
                                      positive=True),
        line2_phase_phi0=cfg.quantity("chain.line2_phase_phi0", ("deg", "rad"), 0.0),
        phase_shifter_phi=cfg.quantity("chain.phase_shifter_phi", ("deg", "rad"),
                                       math.pi / 2),
        blocking_capacitance=cfg.quantity("chain.blocking_capacitance",
                                          ("pF", "fF", "F"), 0.5e-12, positive=True),
        loop_inductance=inductance,
        parasitic_shunt_capacitance=cfg.quantity("chain.parasitic_shunt_capacitance",
                                                 ("pF", "fF", "F"), 0.0, minimum=0.0),
        line_loss_db_per_segment=cfg.quantity("chain.line_loss", ("dB",), 0.0,
                                              minimum=0.0),
        termination_mode=rf_network.TerminationMode(termination),
    )


def _center_f1_per_ampere(cfg: ConfigView, geometry, frame) -> float:
    standoff = cfg.quantity("map.standoff", LENGTH_UNITS, 20e-6, positive=True)
    spot = cfg.quantity("map.spot_diameter", LENGTH_UNITS, 5e-6, minimum=0.0)
    spot_points = cfg.integer("map.spot_points", 13, minimum=1)
    if spot > 0:
        values = magnetics.spot_f1_values(geometry, frame, (0.0, 0.0), standoff, 1.0,
                                          spot, spot_points)
        return float(values.mean())
    b = magnetics.biot_savart((0.0, 0.0, standoff), geometry, 1.0)
    return spin_dynamics.GYROMAGNETIC_RATIO * magnetics.perp_projection(b, frame) / 2.0


def run_tune(cfg: ConfigView, out_dir: Path, seed: int) -> ScenarioReport:
    chain = _chain_from(cfg)
    geometry = _geometry_from(cfg)
    frame = _frame_from(cfg)
    freq = cfg.quantity("drive.frequency", FREQUENCY_UNITS, 2.55e9, positive=True)
    n_points = cfg.integer("tune.n_points", 720, minimum=2)
    cfg.finish(("chain", "drive", "tune", "geometry", "nv", "map"))

    omega = 2.0 * math.pi * freq
    f1_per_amp = _center_f1_per_ampere(cfg, geometry, frame)

    zin_cfg = rf_network.zin(chain.phase_shifter_phi, omega, chain)
    sweep = rf_network.phi_sweep(omega, chain, n_points)
    opt = rf_network.optimal_phase(omega, chain)
    fixed = replace(chain, termination_mode=rf_network.TerminationMode.FIXED_50_OHM)
    zin_fixed = rf_network.zin(0.0, omega, fixed)
    current_fixed = rf_network.loop_current(zin_fixed, fixed)

    rows = []
    for s in sweep:
        if s.flagged:
            rows.append((math.degrees(s.phi), math.inf, math.inf, 0.0, 0.0))
        else:
            rows.append((math.degrees(s.phi), s.zin.real, s.zin.imag,
                         s.loop_current_amplitude,
                         s.loop_current_amplitude * f1_per_amp))
    report = ScenarioReport("tune")
    report.add_file(_write_csv(out_dir / "f1_vs_phi.csv",
                               ("phi_deg", "zin_re", "zin_im", "current_A", "f1_Hz"),
                               rows))
    report.scalars.update({
        "drive_frequency_Hz": freq,
        "phi_opt_deg": math.degrees(opt.phi_opt),
        "zin_opt_re_ohm": opt.zin_at_opt.real,
        "zin_opt_im_ohm": opt.zin_at_opt.imag,
        "zin_opt_abs_ohm": abs(opt.zin_at_opt),
        "reflection_at_opt": opt.reflection_coefficient_magnitude,
        "loop_current_opt_A": opt.loop_current_amplitude,
        "f1_opt_Hz": opt.loop_current_amplitude * f1_per_amp,
        "zin_fixed_re_ohm": zin_fixed.real,
        "zin_fixed_im_ohm": zin_fixed.imag,
        "loop_current_fixed_A": current_fixed,
        "f1_fixed_Hz": current_fixed * f1_per_amp,
        "tuned_exceeds_fixed": int(opt.loop_current_amplitude > current_fixed),
        "zin_at_config_phi_re_ohm": zin_cfg.real,
        "zin_at_config_phi_im_ohm": zin_cfg.imag,
    })
    return report


def run_map(cfg: ConfigView, out_dir: Path, seed: int) -> ScenarioReport:
    geometry = _geometry_from(cfg)
    frame = _frame_from(cfg)
    standoff = cfg.quantity("map.standoff", LENGTH_UNITS, 20e-6, positive=True)
    extent = cfg.quantity("map.extent", LENGTH_UNITS, 280e-6, positive=True)
    pitch = cfg.quantity("map.pixel_pitch", LENGTH_UNITS, 10e-6, positive=True)
    spot = cfg.quantity("map.spot_diameter", LENGTH_UNITS, 5e-6, minimum=0.0)
    spot_points = cfg.integer("map.spot_points", 13, minimum=1)
    squares = cfg.quantity_list("map.squares", LENGTH_UNITS, (40e-6, 100e-6))
    calibrate = cfg.boolean("map.calibrate", False)
    target = cfg.number("map.calibration_target", 1.109)
    offset = cfg.quantity("map.calibration_offset", LENGTH_UNITS, 50e-6, positive=True)
    freq = cfg.quantity("drive.frequency", FREQUENCY_UNITS, 2.55e9, positive=True)

    report = ScenarioReport("map")
    if cfg.has("map.current_A"):
        current = cfg.quantity("map.current", ("A", "mA"), 0.0, positive=True)
        cfg.finish(("map", "geometry", "nv", "drive"))
    else:
        chain = _chain_from(cfg)
        cfg.finish(("map", "geometry", "nv", "drive", "chain"))
        opt = rf_network.optimal_phase(2.0 * math.pi * freq, chain)
        current = opt.loop_current_amplitude
        report.scalars["phi_opt_deg"] = math.degrees(opt.phi_opt)

    plane = magnetics.EvalPlane(standoff_height=standoff, extent=(extent, extent),
                                pixel_pitch=pitch)
    fmap = magnetics.f1_map(geometry, plane, frame, current,
                            spot_diameter=spot if spot > 0 else None,
                            spot_points=spot_points, drive_frequency=freq)

    rows = []
    for iy, y in enumerate(fmap.ys):
        for ix, x in enumerate(fmap.xs):
            rows.append((x * 1e6, y * 1e6, fmap.f1[iy, ix], int(fmap.flagged[iy, ix])))
    report.add_file(_write_csv(out_dir / "f1_map.csv",
                               ("x_um", "y_um", "f1_Hz", "flagged"), rows))

    report.scalars.update({
        "drive_current_A": current,
        "standoff_um": standoff * 1e6,
        "f1_center_Hz": float(fmap.f1[fmap.f1.shape[0] // 2, fmap.f1.shape[1] // 2]),
        "flagged_pixels": int(fmap.flagged.sum()),
    })
    for side in squares:
        stats = magnetics.homogeneity(fmap, side)
        tag = f"{side * 1e6:.0f}um"
        report.scalars[f"f1_mean_{tag}_Hz"] = stats.mean
        report.scalars[f"normalized_std_{tag}"] = stats.normalized_std
    if calibrate:
        report.scalars["calibrated_standoff_um"] = 1e6 * magnetics.calibrate_standoff(
            geometry, frame, target_ratio=target, offset_distance=offset)
        report.scalars["calibration_note"] = (
            "calibrated value reported only; set map.standoff_um to apply it")
    return report


def run_esr(cfg: ConfigView, out_dir: Path, seed: int) -> ScenarioReport:
    b_fields = cfg.quantity_list("esr.b0", FIELD_UNITS, (116e-4, 526e-4, 1125e-4))
    cfg.finish(("esr",))
    report = ScenarioReport("esr")
    rows = []
    for i, b0 in enumerate(b_fields):
        pair = spin_dynamics.esr_frequencies(b0)
        rows.append((b0 / GAUSS, pair.f_minus, pair.f_plus))
        report.scalars[f"b0_{i}_G"] = b0 / GAUSS
        report.scalars[f"f_minus_{i}_Hz"] = pair.f_minus
        report.scalars[f"f_plus_{i}_Hz"] = pair.f_plus
    report.add_file(_write_csv(out_dir / "esr.csv",
                               ("b0_G", "f_minus_Hz", "f_plus_Hz"), rows))
    return report


def run_rabi(cfg: ConfigView, out_dir: Path, seed: int) -> ScenarioReport:
    f1 = cfg.quantity("rabi.f1", FREQUENCY_UNITS, 136.3e6, positive=True)
    detuning = cfg.quantity("rabi.detuning", FREQUENCY_UNITS, 0.0)
    duration = cfg.quantity("rabi.duration", TIME_UNITS, 10.0 / f1, positive=True)
    n_samples = cfg.integer("rabi.n_samples", 1024, minimum=4)
    depth = cfg.number("rabi.contrast_depth", 0.03)
    cfg.finish(("rabi",))

    dt = duration / n_samples
    times = np.arange(n_samples) * dt
    population = spin_dynamics.rabi_population(times, f1, detuning)
    contrast = 1.0 - depth * population
    ts = signal_analysis.TimeSeries(population, dt)
    spec = signal_analysis.spectrum(ts)
    band = (2.0 * spec.bin_width, 0.45 / dt)
    pk = signal_analysis.peak(spec, band)

    report = ScenarioReport("rabi")
    report.add_file(_write_csv(out_dir / "rabi.csv", ("t_s", "population", "contrast"),
                               zip(times, population, contrast)))
    report.scalars.update({
        "f1_Hz": f1,
        "detuning_Hz": detuning,
        "oscillation_peak_Hz": pk.frequency,
        "oscillation_fwhm_Hz": pk.fwhm,
        "max_population": float(population.max()),
    })
    return report


def run_odmr(cfg: ConfigView, out_dir: Path, seed: int) -> ScenarioReport:
    f0 = cfg.quantity("odmr.f0", FREQUENCY_UNITS, 2.55e9, positive=True)
    f1 = cfg.quantity("odmr.f1", FREQUENCY_UNITS, 136.3e6, positive=True)
    span = cfg.quantity("odmr.span", FREQUENCY_UNITS, 8.0 * f1, positive=True)
    n_points = cfg.integer("odmr.n_points", 801, minimum=16)
    pulse = cfg.quantity("odmr.pulse_duration", TIME_UNITS, 20e-6, positive=True)
    depth = cfg.number("odmr.contrast_depth", 0.03)
    cfg.finish(("odmr",))

    freqs = np.linspace(f0 - span / 2.0, f0 + span / 2.0, n_points)
    contrast = spin_dynamics.odmr_spectrum(freqs, f0, f1, pulse, depth)
    dip = 1.0 - contrast
    k = int(np.argmax(dip))
    level = dip[k] / 2.0
    i = k
    while i + 1 < dip.size and dip[i + 1] >= level:
        i += 1
    f_hi = freqs[i] + (freqs[i + 1] - freqs[i]) * (dip[i] - level) / (dip[i] - dip[i + 1]) \
        if i + 1 < dip.size else freqs[-1]
    i = k
    while i - 1 >= 0 and dip[i - 1] >= level:
        i -= 1
    f_lo = freqs[i] - (freqs[i] - freqs[i - 1]) * (dip[i] - level) / (dip[i] - dip[i - 1]) \
        if i - 1 >= 0 else freqs[0]

    report = ScenarioReport("odmr")
    report.add_file(_write_csv(out_dir / "odmr.csv", ("f_Hz", "contrast"),
                               zip(freqs, contrast)))
    report.scalars.update({
        "dip_center_Hz": float(freqs[k]),
        "min_contrast": float(contrast[k]),
        "dip_fwhm_Hz": float(f_hi - f_lo),
    })
    return report


def run_casr(cfg: ConfigView, out_dir: Path, seed: int) -> ScenarioReport:
    f_signal = cfg.quantity("casr.f_signal", FREQUENCY_UNITS, 29.992e6, positive=True)
    f_casr = cfg.quantity("casr.f_casr", FREQUENCY_UNITS, 30e6, positive=True)
    f1 = cfg.quantity("casr.f1", FREQUENCY_UNITS, 136.3e6, positive=True)
    n_repeats = cfg.integer("casr.n_repeats", 6, minimum=1)
    total_time = cfg.quantity("casr.total_time", TIME_UNITS, 1.0, positive=True)
    amplitude = cfg.quantity("casr.amplitude", FIELD_UNITS, 1e-6, minimum=0.0)
    depth = cfg.number("casr.contrast_depth", 0.03)
    noise = cfg.number("casr.noise_std", 0.0)
    quadrature = cfg.string("casr.quadrature", "sin", choices=("sin", "cos"))
    ppm = cfg.number("casr.generator_offset_ppm", 0.0)
    timing = spin_dynamics.BlockTiming(
        post_sequence_delay=cfg.quantity("casr.post_sequence_delay", TIME_UNITS, 2e-6,
                                         minimum=0.0),
        aom_duration=cfg.quantity("casr.aom_duration", TIME_UNITS, 20e-6, minimum=0.0),
        post_aom_delay=cfg.quantity("casr.post_aom_delay", TIME_UNITS, 1e-6, minimum=0.0),
        lock_to_sequence_clock=cfg.boolean("casr.lock_to_sequence_clock", True),
    )
    cfg.finish(("casr",))

    readout = spin_dynamics.ReadoutModel(contrast_depth=depth, noise_std=noise,
                                         seed=seed, quadrature=quadrature)
    ts = spin_dynamics.casr_run(total_time, f_signal, amplitude, f_casr=f_casr,
                                n_repeats=n_repeats, f1=f1, readout=readout,
                                timing=timing, generator_offset_ppm=ppm)
    spec = signal_analysis.spectrum(ts)

    report = ScenarioReport("casr")
    report.add_file(_write_csv(out_dir / "casr_pl.csv", ("t_s", "contrast"),
                               zip(ts.times, ts.samples)))
    report.add_file(_write_csv(out_dir / "casr_spectrum.csv", ("f_Hz", "magnitude"),
                               zip(spec.freqs, spec.magnitudes)))
    report.scalars.update({
        "n_blocks": ts.samples.size,
        "block_period_s": ts.sample_period,
        "sample_rate_Hz": 1.0 / ts.sample_period,
        "bin_width_Hz": spec.bin_width,
    })
    band = (2.0 * spec.bin_width, 0.45 / ts.sample_period)
    try:
        pk = signal_analysis.peak(spec, band)
        report.scalars.update({
            "peak_found": 1,
            "f_peak_Hz": pk.frequency,
            "peak_amplitude": pk.amplitude,
            "fwhm_Hz": pk.fwhm,
        })
    except NumericalError:
        report.scalars.update({"peak_found": 0, "f_peak_Hz": 0.0,
                               "peak_amplitude": 0.0, "fwhm_Hz": 0.0})
    return report


def run_inductance(cfg: ConfigView, out_dir: Path, seed: int) -> ScenarioReport:
    geometry = _geometry_from(cfg)
    cfg.finish(("geometry", "inductance"))
    turns = geometry.turns
    rows = []
    report = ScenarioReport("inductance")
    for i, turn in enumerate(turns):
        self_l = magnetics.circular_self_inductance(turn.radius, turn.equivalent_wire_radius)
        rows.append(("self", i, i, self_l))
        report.scalars[f"self_{i}_nH"] = self_l * 1e9
    for i in range(len(turns)):
        for j in range(i + 1, len(turns)):
            m = magnetics.mutual_inductance(turns[i].radius, turns[j].radius,
                                            turns[i].z_offset - turns[j].z_offset)
            rows.append(("mutual", i, j, m))
            report.scalars[f"mutual_{i}{j}_nH"] = m * 1e9
    total = magnetics.loop_inductance(geometry)
    rows.append(("total", -1, -1, total))
    report.scalars["total_nH"] = total * 1e9

    lines = ["kind,turn_a,turn_b,inductance_H"]
    for kind, i, j, value in rows:
        lines.append(f"{kind},{i},{j},{_fmt(value)}")
    path = out_dir / "inductance.csv"
    path.write_text("\n".join(lines) + "\n", newline="\n")
    report.add_file(path)
    return report


_SCENARIOS = {
    "tune": run_tune,
    "map": run_map,
    "esr": run_esr,
    "rabi": run_rabi,
    "odmr": run_odmr,
    "casr": run_casr,
    "inductance": run_inductance,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nvloop",
        description="Impedance-tuned loop scenario runner (CSV + report output)")
    parser.add_argument("scenario", choices=sorted(_SCENARIOS))
    parser.add_argument("--config", required=True, help="flat key-value config file")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=0, help="seed for stochastic readout noise")
    args = parser.parse_args(argv)

    try:
        view = ConfigView(load_config(args.config))
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        report = _SCENARIOS[args.scenario](view, out_dir, args.seed)
    except (ConfigError, PreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    report.write(out_dir)
    sys.stdout.write(report.render())
    return 0


if __name__ == "__main__":
    sys.exit(main())
