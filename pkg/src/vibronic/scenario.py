"""Scenario files, the end-to-end pipeline, and output writing.

Scenario files are line-oriented key = value sections with unit suffixes::

    [grid]
    r_min = 6.0 a0
    ...
    [channel g]
    potential = morse
    depth = 300 cm-1
    ...
    [pulse]
    couples = g e
    omega = 10695 cm-1
    ...

A run eigensolves every channel's bare potential, builds the rotating-frame
coupled Hamiltonian, propagates the configured initial state, evaluates every
measure per snapshot, and analyzes the post-pulse entanglement oscillations.
Everything is deterministic: rerunning a config reproduces the outputs
byte for byte.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import measures, units
from .analysis import OscillationReport, build_report
from .dynamics import CoupledHamiltonian, CouplingTerm, Trajectory, propagate
from .grids import SpatialGrid, eigensolve
from .potentials import HarmonicPotential, MorsePotential, load_tabulated
from .pulses import ChirpedPulse
from .states import (BasisSet, BipartiteState, gaussian_packet,
                     project_coefficients, single_channel_state)

# Coupling is negligible this many stretched widths past the envelope center.
PULSE_TAIL_WIDTHS = 3.0


class ConfigError(ValueError):
    """A scenario file failed to parse or validate; the message names the key."""


@dataclass(frozen=True)
class ChannelConfig:
    label: str
    potential: object
    n_states: int


@dataclass(frozen=True)
class PulseConfig:
    lower: str
    upper: str
    pulse: ChirpedPulse


@dataclass(frozen=True)
class InitialConfig:
    channel: str
    kind: str               # "eigenstate" or "gaussian"
    v: int = 0
    center: float = 0.0
    width: float = 0.0
    momentum: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    t_start: float
    t_end: float
    dt: float
    snapshot_stride: int


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "output"
    wavefunctions: bool = False
    plot_data: bool = False
    profiles: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    grid: SpatialGrid
    channels: tuple
    pulses: tuple
    initial: InitialConfig
    run: RunConfig
    output: OutputConfig
    echo: tuple  # raw sections for the JSON echo

    def channel_index(self, label: str) -> int:
        for i, ch in enumerate(self.channels):
            if ch.label == label:
                return i
        raise KeyError(label)


# ----------------------------------------------------------------------
# Parsing

_SECTION_RE = re.compile(r"^\[(\w+)(?:\s+(\S+))?\]$")

_GRID_KEYS = {"r_min", "r_max", "n_points", "reduced_mass"}
_CHANNEL_KEYS = {"potential", "n_states", "depth", "steepness", "r_e", "offset",
                 "omega", "file"}
_PULSE_KEYS = {"couples", "coupling", "omega", "t_center", "tau_limited",
               "tau_stretched", "chirp"}
_INITIAL_KEYS = {"channel", "type", "v", "center", "width", "momentum"}
_RUN_KEYS = {"t_start", "t_end", "dt", "snapshot_stride"}
_OUTPUT_KEYS = {"directory", "wavefunctions", "plot_data", "profiles"}
_KNOWN_KEYS = {"grid": _GRID_KEYS, "channel": _CHANNEL_KEYS, "pulse": _PULSE_KEYS,
               "initial": _INITIAL_KEYS, "run": _RUN_KEYS, "output": _OUTPUT_KEYS}


@dataclass(frozen=True)
class _Section:
    name: str
    arg: str | None
    entries: dict


def _parse_sections(text: str, source: str) -> list[_Section]:
    sections: list[_Section] = []
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            name, arg = m.group(1), m.group(2)
            if name not in _KNOWN_KEYS:
                raise ConfigError(f"{source}:{lineno}: unknown section [{name}]")
            current = {}
            sections.append(_Section(name, arg, current))
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got '{line}'")
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside any section")
        key, value = (part.strip() for part in line.split("=", 1))
        section = sections[-1]
        if key not in _KNOWN_KEYS[section.name]:
            raise ConfigError(
                f"{source}:{lineno}: unknown key '{key}' in [{section.name}]"
            )
        if key in current:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for '{key}'")
        current[key] = value
    if not sections:
        raise ConfigError(f"{source}: no sections found; not a scenario file")
    return sections


class _SectionReader:
    """Typed access to one parsed section with key-naming errors."""

    def __init__(self, section: _Section, where: str):
        self.entries = dict(section.entries)
        self.where = where

    def _take(self, key: str, default=None, required: bool = True) -> str | None:
        if key not in self.entries:
            if required and default is None:
                raise ConfigError(f"missing key '{key}' in {self.where}")
            return default
        return self.entries[key]

    def quantity(self, key: str, dimension: units.Dimension,
                 default: str | None = None) -> float:
        raw = self._take(key, default)
        parts = raw.split()
        if len(parts) != 2:
            raise ConfigError(
                f"{self.where}: '{key}' must be '<value> <unit>', got '{raw}'"
            )
        try:
            value = float(parts[0])
            unit = units.find_unit(parts[1], dimension)
        except (ValueError, units.IncompatibleDimensionError) as exc:
            raise ConfigError(f"{self.where}: bad value for '{key}': {exc}") from exc
        return value * unit.factor

    def number(self, key: str, default: str | None = None) -> float:
        raw = self._take(key, default)
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{self.where}: '{key}' must be a number, got '{raw}'") from exc

    def integer(self, key: str, default: str | None = None) -> int:
        raw = self._take(key, default)
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{self.where}: '{key}' must be an integer, got '{raw}'") from exc

    def word(self, key: str, default: str | None = None) -> str:
        return self._take(key, default)

    def flag(self, key: str, default: str = "false") -> bool:
        raw = self._take(key, default).lower()
        if raw in ("true", "yes", "1"):
            return True
        if raw in ("false", "no", "0"):
            return False
        raise ConfigError(f"{self.where}: '{key}' must be true or false, got '{raw}'")


def _build_channel(section: _Section, grid: SpatialGrid, base_dir: Path) -> ChannelConfig:
    if not section.arg:
        raise ConfigError("[channel] sections need a label: [channel <label>]")
    where = f"[channel {section.arg}]"
    reader = _SectionReader(section, where)
    kind = reader.word("potential")
    offset = reader.quantity("offset", units.Dimension.ENERGY, default="0 hartree")
    try:
        if kind == "morse":
            curve = MorsePotential(
                depth=reader.quantity("depth", units.Dimension.ENERGY),
                steepness=reader.number("steepness"),  # inverse Bohr radii
                r_e=reader.quantity("r_e", units.Dimension.LENGTH),
                offset=offset,
            )
        elif kind == "harmonic":
            curve = HarmonicPotential(
                omega=reader.quantity("omega", units.Dimension.ENERGY),
                r_e=reader.quantity("r_e", units.Dimension.LENGTH),
                reduced_mass=grid.reduced_mass,
                offset=offset,
            )
        elif kind == "tabulated":
            path = base_dir / reader.word("file")
            if not path.exists():
                raise ConfigError(f"{where}: table file not found: {path}")
            curve = load_tabulated(path).shifted(offset)
        else:
            raise ConfigError(f"{where}: unknown potential kind '{kind}'")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from exc
    n_states = reader.integer("n_states")
    if n_states < 1:
        raise ConfigError(f"{where}: 'n_states' must be >= 1")
    return ChannelConfig(label=section.arg, potential=curve, n_states=n_states)


def _build_pulse(section: _Section, index: int, labels: list[str]) -> PulseConfig:
    where = f"[pulse] #{index + 1}"
    reader = _SectionReader(section, where)
    couples = reader.word("couples").split()
    if len(couples) != 2:
        raise ConfigError(f"{where}: 'couples' must name two channels")
    lower, upper = couples
    for label in couples:
        if label not in labels:
            raise ConfigError(f"{where}: 'couples' references unknown channel '{label}'")
    if lower == upper:
        raise ConfigError(f"{where}: 'couples' must name two distinct channels")
    try:
        pulse = ChirpedPulse(
            coupling=reader.quantity("coupling", units.Dimension.ENERGY),
            omega=reader.quantity("omega", units.Dimension.ENERGY),
            t_center=reader.quantity("t_center", units.Dimension.TIME),
            tau_limited=reader.quantity("tau_limited", units.Dimension.TIME),
            tau_stretched=reader.quantity("tau_stretched", units.Dimension.TIME),
            chirp=reader.quantity("chirp", units.Dimension.CHIRP, default="0 ps-2"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: stretch-relation violation: {exc}") from exc
    if pulse.chirp != 0.0 and pulse.stretch_consistency_error() > 0.02:
        raise ConfigError(
            f"{where}: stretch-relation violation: tau_stretched/tau_limited = "
            f"{pulse.stretch_ratio():.4g} is inconsistent with the chirp rate "
            f"(relative mismatch {pulse.stretch_consistency_error():.2g})"
        )
    return PulseConfig(lower=lower, upper=upper, pulse=pulse)


def _build_initial(section: _Section, labels: list[str]) -> InitialConfig:
    reader = _SectionReader(section, "[initial]")
    channel = reader.word("channel")
    if channel not in labels:
        raise ConfigError(f"[initial]: unknown channel '{channel}'")
    kind = reader.word("type")
    if kind == "eigenstate":
        v = reader.integer("v")
        if v < 0:
            raise ConfigError("[initial]: 'v' must be >= 0")
        return InitialConfig(channel=channel, kind=kind, v=v)
    if kind == "gaussian":
        return InitialConfig(
            channel=channel, kind=kind,
            center=reader.quantity("center", units.Dimension.LENGTH),
            width=reader.quantity("width", units.Dimension.LENGTH),
            momentum=reader.number("momentum", default="0"),  # inverse Bohr radii
        )
    raise ConfigError(f"[initial]: unknown type '{kind}'")


def load_config(path) -> ScenarioConfig:
    """Parse and validate a scenario file into atomic-unit configuration."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}")
    sections = _parse_sections(path.read_text(), str(path))

    by_name: dict[str, list[_Section]] = {}
    for s in sections:
        by_name.setdefault(s.name, []).append(s)

    def single(name: str, required: bool = True) -> _Section | None:
        got = by_name.get(name, [])
        if len(got) > 1:
            raise ConfigError(f"{path}: exactly one [{name}] section allowed")
        if not got:
            if required:
                raise ConfigError(f"{path}: missing [{name}] section")
            return None
        return got[0]

    grid_reader = _SectionReader(single("grid"), "[grid]")
    try:
        grid = SpatialGrid(
            r_min=grid_reader.quantity("r_min", units.Dimension.LENGTH),
            r_max=grid_reader.quantity("r_max", units.Dimension.LENGTH),
            n_points=grid_reader.integer("n_points"),
            reduced_mass=grid_reader.quantity("reduced_mass", units.Dimension.MASS),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[grid]: {exc}") from exc

    channel_sections = by_name.get("channel", [])
    if not channel_sections:
        raise ConfigError(f"{path}: at least one [channel] section required")
    channels = tuple(_build_channel(s, grid, path.parent) for s in channel_sections)
    labels = [c.label for c in channels]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"{path}: duplicate channel labels")

    pulses = tuple(_build_pulse(s, i, labels)
                   for i, s in enumerate(by_name.get("pulse", [])))

    initial_sections = by_name.get("initial", [])
    if len(initial_sections) != 1:
        raise ConfigError(f"{path}: exactly one [initial] section required")
    initial = _build_initial(initial_sections[0], labels)

    run_reader = _SectionReader(single("run"), "[run]")
    run = RunConfig(
        t_start=run_reader.quantity("t_start", units.Dimension.TIME),
        t_end=run_reader.quantity("t_end", units.Dimension.TIME),
        dt=run_reader.quantity("dt", units.Dimension.TIME),
        snapshot_stride=run_reader.integer("snapshot_stride", default="1"),
    )
    if run.dt <= 0:
        raise ConfigError("[run]: 'dt' must be positive")
    if run.t_end <= run.t_start:
        raise ConfigError("[run]: 't_end' must exceed 't_start'")
    if run.snapshot_stride < 1:
        raise ConfigError("[run]: 'snapshot_stride' must be >= 1")

    out_section = single("output", required=False)
    if out_section is None:
        output = OutputConfig()
    else:
        reader = _SectionReader(out_section, "[output]")
        output = OutputConfig(
            directory=reader.word("directory", default="output"),
            wavefunctions=reader.flag("wavefunctions"),
            plot_data=reader.flag("plot_data"),
            profiles=reader.flag("profiles"),
        )

    # Initial eigenstate index must exist in its channel's basis.
    if initial.kind == "eigenstate":
        n_states = channels[labels.index(initial.channel)].n_states
        if initial.v >= n_states:
            raise ConfigError(
                f"[initial]: 'v' = {initial.v} outside the {n_states}-state basis "
                f"of channel '{initial.channel}'"
            )

    echo = tuple({"section": s.name, "label": s.arg, "entries": dict(s.entries)}
                 for s in sections)
    return ScenarioConfig(grid=grid, channels=channels, pulses=pulses,
                          initial=initial, run=run, output=output, echo=echo)


# ----------------------------------------------------------------------
# Pipeline

def frame_shifts(cfg: ScenarioConfig) -> np.ndarray:
    """Per-channel dressing energies in one global rotating frame.

    Each pulse wants the lower channel raised by its photon energy relative
    to the upper one.  The constraints are solved by walking the coupling
    graph from the first channel; on a tree every pulse ends up resonant in
    its own frame, and any leftover mismatch (loops, shared channels) stays
    as an explicit residual detuning on the coupling term.
    """
    n = len(cfg.channels)
    shifts = np.zeros(n)
    known = np.zeros(n, dtype=bool)
    known[0] = True
    edges = [(cfg.channel_index(p.lower), cfg.channel_index(p.upper), p.pulse.omega)
             for p in cfg.pulses]
    changed = True
    while changed:
        changed = False
        for low, up, omega in edges:
            if known[low] and not known[up]:
                shifts[up] = shifts[low] - omega
                known[up] = changed = True
            elif known[up] and not known[low]:
                shifts[low] = shifts[up] + omega
                known[low] = changed = True
    return shifts


def build_hamiltonian(cfg: ScenarioConfig) -> tuple[CoupledHamiltonian, np.ndarray]:
    """Dressed coupled-channel Hamiltonian plus the frame shifts used."""
    shifts = frame_shifts(cfg)
    dressed = [ch.potential.shifted(s) for ch, s in zip(cfg.channels, shifts)]
    couplings = []
    for p in cfg.pulses:
        low = cfg.channel_index(p.lower)
        up = cfg.channel_index(p.upper)
        detuning = p.pulse.omega - (shifts[low] - shifts[up])
        couplings.append(CouplingTerm(upper=up, lower=low, drive=p.pulse,
                                      detuning=detuning))
    return CoupledHamiltonian(cfg.grid, dressed, couplings), shifts


def solve_bases(cfg: ScenarioConfig) -> BasisSet:
    """Bare vibrational bases of every channel."""
    return BasisSet([
        eigensolve(cfg.grid, ch.potential, ch.n_states, label=ch.label)
        for ch in cfg.channels
    ])


def initial_state(cfg: ScenarioConfig, bases: BasisSet) -> BipartiteState:
    idx = cfg.channel_index(cfg.initial.channel)
    if cfg.initial.kind == "eigenstate":
        packet = bases.bases[idx].functions[cfg.initial.v].astype(complex)
    else:
        packet = gaussian_packet(cfg.grid, cfg.initial.center, cfg.initial.width,
                                 cfg.initial.momentum)
    return single_channel_state(cfg.grid, len(cfg.channels), idx, packet,
                                time=cfg.run.t_start)


def pulses_end(cfg: ScenarioConfig) -> float:
    """Time after which every pulse envelope is negligible."""
    if not cfg.pulses:
        return cfg.run.t_start
    return max(p.pulse.t_center + PULSE_TAIL_WIDTHS * p.pulse.tau_stretched
               for p in cfg.pulses)


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    trajectory: Trajectory
    series: measures.MeasureSeries
    report: OscillationReport
    identities: dict
    post_pulse_start: float


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Eigensolve, propagate, measure every snapshot, analyze oscillations."""
    bases = solve_bases(cfg)
    hamiltonian, _ = build_hamiltonian(cfg)
    state0 = initial_state(cfg, bases)
    trajectory = propagate(hamiltonian, state0, cfg.run.t_start, cfg.run.t_end,
                           cfg.run.dt, cfg.run.snapshot_stride)

    v_values = hamiltonian_bare_values(cfg)
    records = []
    coeff_snapshots = []
    residuals = {"pairwise_linear_entropy": 0.0, "coefficient_linear_entropy": 0.0,
                 "purity_plus_entropy": 0.0, "skew_equals_variance": 0.0,
                 "norm": 0.0}
    two_channel = len(cfg.channels) == 2
    if two_channel:
        residuals["coherence_entropy"] = 0.0
        residuals["skew_identity"] = 0.0
    for state, norm in zip(trajectory.states, trajectory.norms):
        coeffs = project_coefficients(state, bases, residual_warn=1e-3)
        record = measures.compute_record(state, coeffs)
        records.append(record)
        coeff_snapshots.append(coeffs)
        lin = record.linear_entropy
        residuals["norm"] = max(residuals["norm"], abs(norm - 1.0))
        residuals["purity_plus_entropy"] = max(
            residuals["purity_plus_entropy"], abs(record.purity + lin - 1.0))
        residuals["pairwise_linear_entropy"] = max(
            residuals["pairwise_linear_entropy"],
            abs(lin - measures.linear_entropy_pairwise(state)))
        residuals["coefficient_linear_entropy"] = max(
            residuals["coefficient_linear_entropy"],
            abs(lin - measures.linear_entropy_from_coefficients(coeffs)))
        residuals["skew_equals_variance"] = max(
            residuals["skew_equals_variance"],
            abs(record.skew_hmol - record.variance_hmol))
        if two_channel:
            residuals["coherence_entropy"] = max(
                residuals["coherence_entropy"],
                measures.coherence_entropy_residual(state))
            residuals["skew_identity"] = max(
                residuals["skew_identity"],
                measures.skew_identity_residual(state, v_values, cfg.grid.r))
    series = measures.MeasureSeries.from_records(records)

    window_start = pulses_end(cfg)
    mask = trajectory.times >= window_start
    if mask.sum() < 2:
        mask = np.ones_like(mask)
    report = build_report(coeff_snapshots[-1], trajectory.times[mask],
                          series["L"][mask])
    return ScenarioResult(config=cfg, trajectory=trajectory, series=series,
                          report=report, identities=residuals,
                          post_pulse_start=float(window_start))


def hamiltonian_bare_values(cfg: ScenarioConfig) -> np.ndarray:
    """Bare potential values of every channel on the grid."""
    return np.array([np.asarray(ch.potential.evaluate(cfg.grid.r), dtype=float)
                     for ch in cfg.channels])


def write_outputs(result: ScenarioResult, cfg: ScenarioConfig) -> dict:
    """Write the CSV series, JSON summary, and any optional dumps."""
    outdir = Path(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    written = {}

    csv_path = outdir / "series.csv"
    result.series.to_csv(csv_path)
    written["series"] = str(csv_path)

    summary = {
        "config": list(cfg.echo),
        "post_pulse_start_ps": units.au_to_ps(result.post_pulse_start),
        "report": _report_in_ps(result.report),
        "identity_residuals": {k: float(v) for k, v in result.identities.items()},
        "units": {"time": "ps", "periods": "ps", "variance_Hmol": "cm-1 squared"},
    }
    json_path = outdir / "summary.json"
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2)
    written["summary"] = str(json_path)

    if cfg.output.plot_data:
        for name in result.series.CORE_COLUMNS:
            path = outdir / f"{name}.dat"
            data = np.column_stack([
                [units.au_to_ps(t) for t in result.series.times],
                result.series[name],
            ])
            np.savetxt(path, data, header=f"t_ps {name}")
            written[name] = str(path)

    if cfg.output.wavefunctions:
        for i, state in enumerate(result.trajectory.states):
            for a, ch in enumerate(cfg.channels):
                path = outdir / f"wf_{i:05d}_{ch.label}.dat"
                data = np.column_stack([cfg.grid.r, state.psi[a].real,
                                        state.psi[a].imag])
                np.savetxt(path, data, header="R_a0 re_psi im_psi")
        written["wavefunctions"] = str(outdir)

    if cfg.output.profiles:
        v_values = hamiltonian_bare_values(cfg)
        final = result.trajectory.states[-1]
        local = measures.skew_information_local(v_values, final.populations(),
                                                cfg.grid.r)
        reduced = measures.skew_information_reduced(final.reduced_density(),
                                                    v_values, cfg.grid.r)
        for name, profile in (("skew_local", local), ("skew_reduced", reduced)):
            path = outdir / f"{name}.dat"
            np.savetxt(path, np.column_stack([profile.r, profile.values]),
                       header=f"R_a0 {name}_hartree2")
            written[name] = str(path)
    return written


def _report_in_ps(report: OscillationReport) -> dict:
    """Report dictionary with periods and times converted to picoseconds."""
    d = report.as_dict()
    for entry in d["predicted_periods"]:
        entry["period"] = units.au_to_ps(entry["period"])
    for entry in d["observed_peaks"]:
        entry["period"] = units.au_to_ps(entry["period"])
    d["extremes"]["t_min"] = units.au_to_ps(d["extremes"]["t_min"])
    d["extremes"]["t_max"] = units.au_to_ps(d["extremes"]["t_max"])
    return d
