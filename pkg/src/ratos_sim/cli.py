"""Command-line scenario runner.

    ratos-sim <subcommand> --config FILE [--set K=V ...] [--out PREFIX]

Each run writes one or more CSV files named ``<prefix>_<table>.csv`` and a
``<prefix>_summary.txt`` with the headline numbers. Every CSV starts with a
``# config_sha256=...`` comment line followed by a header row. Exit codes:
0 success, 2 invalid input or configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import scenarios
from .dynamics import EvolutionConfig, StepSizeError, adiabaticity_sweep, geometric_fade_grid
from .hilbert import SectorSpec, enumerate_sector
from .linoptics import FockInput, coupling_probability, max_coupling_over_controls, ratio_grid, transform_from_ratios
from .model import ModelParams
from .propagation import (
    CFLError,
    NumericalError,
    absorbance_width,
    optical_depth,
    susceptibility,
    transmission,
    transparency_fwhm,
)

log = logging.getLogger("ratos_sim")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


# -- configuration ----------------------------------------------------------------

def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at top level")
    return data


def apply_overrides(config: dict, overrides: Sequence[str]) -> dict:
    """Apply ``path.to.key=value`` overrides; values are parsed as YAML scalars."""
    out = json.loads(json.dumps(config))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"override {item!r} has an empty key")
        node = out
        for p in parts[:-1]:
            child = node.setdefault(p, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override {item!r}: {p!r} is not a mapping")
            node = child
        node[parts[-1]] = yaml.safe_load(raw)
    return out


def config_hash(config: dict) -> str:
    """SHA-256 of the resolved config, excluding the output location."""
    body = {k: v for k, v in config.items() if k != "output"}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def _section(config: dict, name: str) -> dict:
    block = config.get(name)
    if not isinstance(block, dict):
        raise ConfigError(f"missing {name!r} block")
    return block


def _complex(value) -> complex:
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError as exc:
            raise ConfigError(f"cannot read {value!r} as a complex number") from exc
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    raise ConfigError(f"expected a number, got {value!r}")


def _complex_list(values, Q: Optional[int] = None, name: str = "values") -> np.ndarray:
    if not isinstance(values, (list, tuple)):
        values = [values] * (Q or 1)
    arr = np.array([_complex(v) for v in values], dtype=complex)
    if Q is not None and arr.size != Q:
        raise ConfigError(f"{name} needs {Q} entries, got {arr.size}")
    return arr


def _get(block: dict, key: str, default: Any = ..., kind: Callable = float):
    if key not in block:
        if default is ...:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return kind(block[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {block[key]!r}") from exc


def model_from_config(config: dict) -> ModelParams:
    block = _section(config, "model")
    Q = _get(block, "Q", kind=int)
    N = _get(block, "N", kind=int)
    g = _complex_list(block.get("g", 1.0), Q, "model.g")
    gamma = block.get("gamma", 0.0)
    gamma = gamma if isinstance(gamma, list) else [gamma] * Q
    return ModelParams(Q=Q, N=N, g=tuple(g), gamma=tuple(float(x) for x in gamma),
                       delta=_get(block, "delta", 0.0), Delta=_get(block, "Delta", 0.0))


def controls_from_config(config: dict, Q: int) -> np.ndarray:
    if "controls" not in config:
        raise ConfigError("missing 'controls' list")
    return _complex_list(config["controls"], Q, "controls")


# -- output -----------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


class Output:
    def __init__(self, prefix: Path, digest: str):
        self.prefix = prefix
        self.digest = digest
        self.files: List[Path] = []
        self.summary: List[tuple] = []
        prefix.parent.mkdir(parents=True, exist_ok=True)

    def table(self, name: str, header: Sequence[str], rows) -> Path:
        path = Path(f"{self.prefix}_{name}.csv")
        with open(path, "w", newline="") as fh:
            fh.write(f"# config_sha256={self.digest}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        self.files.append(path)
        return path

    def note(self, key: str, value) -> None:
        self.summary.append((key, value))

    def finish(self, scenario: str) -> Path:
        path = Path(f"{self.prefix}_summary.txt")
        lines = [f"scenario: {scenario}", f"config_sha256: {self.digest}"]
        lines += [f"{k}: {_fmt(v)}" for k, v in self.summary]
        lines += [f"file: {p.name}" for p in self.files]
        path.write_text("\n".join(lines) + "\n")
        return path


# -- subcommands ------------------------------------------------------------------

def run_darkstate_check(config: dict, out: Output) -> None:
    block = config.get("check", {})
    rows = scenarios.darkstate_residuals(
        config["seed"],
        block.get("atoms", [1, 2, 3, 4, 5]),
        block.get("modes", [1, 2, 3]),
        block.get("excitations", [1, 2]),
        int(block.get("draws", 20)),
    )
    out.table("residuals", ["N", "Q", "n", "draw", "dim", "residual"],
              ([r["N"], r["Q"], r["n"], r["draw"], r["dim"], r["residual"]] for r in rows))
    worst = max(r["residual"] for r in rows)
    out.note("cases", len(rows))
    out.note("max_residual", worst)
    out.note("pass", worst <= float(block.get("tolerance", 1e-10)))


def run_transform_check(config: dict, out: Output) -> None:
    block = config.get("check", {})
    rows = scenarios.transform_checks(config["seed"], int(block.get("draws", 100)),
                                      int(block.get("max_modes", 4)), int(block.get("max_atoms", 3)))
    keys = ["unitarity_U", "unitarity_W", "structure", "lambda_error"]
    out.table("transforms", ["draw", "Q", "N"] + keys,
              ([r["draw"], r["Q"], r["N"]] + [r[k] for k in keys] for r in rows))
    for k in keys:
        out.note(f"max_{k}", max(r[k] for r in rows))


def run_ratos(config: dict, out: Output) -> None:
    params = model_from_config(config)
    block = _section(config, "ratos")
    n = _get(block, "n", 1, int)
    i = _get(block, "mode_i", 1, int)
    j = _get(block, "mode_j", 2, int)
    amp = _complex(block.get("amplitude", 5.0))
    if "fade_times" in block:
        fades = [float(x) for x in block["fade_times"]]
    else:
        grid = block.get("grid", {})
        fades = list(geometric_fade_grid(abs(amp), float(grid.get("decades", 2.0)),
                                         int(grid.get("per_decade", 4)), grid.get("top")))
    evo = EvolutionConfig(0.0, 1.0, dt=_get(block, "dt", 0.01),
                          integrator=block.get("integrator", "rk4"), record_every=10**9)
    basis = enumerate_sector(SectorSpec(params.N, params.Q, n))
    rows = adiabaticity_sweep(params, basis, n, i, j, amp, fades, evo,
                              workers=_get(block, "workers", 1, int))
    out.table("sweep", ["fade_T", "fidelity", "infidelity", "absorbed"],
              ([T, F, 1.0 - F, a] for T, F, a in rows))
    out.note("fade_T_max", rows[-1][0])
    out.note("fidelity_at_max", rows[-1][1])
    infid = [1.0 - F for _, F, _ in sorted(rows)]
    out.note("max_infidelity_increase", max([b - a for a, b in zip(infid, infid[1:])] + [0.0]))


def run_spectrum(config: dict, out: Output) -> None:
    params = model_from_config(config)
    omega = controls_from_config(config, params.Q)
    block = _section(config, "spectrum")
    length = _get(block, "length", 1.0)
    det = np.linspace(_get(block, "detuning_min"), _get(block, "detuning_max"),
                      _get(block, "points", 801, int))
    chi = susceptibility(params, omega, det)
    d0 = optical_depth(params, omega, length)
    trans = transmission(chi, d0)
    out.table("spectrum", ["detuning", "chi_re", "chi_im", "transmission"],
              zip(det, chi.real, chi.imag, trans))
    out.note("optical_depth", d0)
    out.note("fwhm_predicted", transparency_fwhm(params, omega))
    out.note("fwhm_from_curve", absorbance_width(det - params.Delta, trans))
    scan = block.get("scan")
    if scan:
        res = scenarios.transparency_scan(params, omega, length, _get(scan, "dz", 0.02),
                                          _get(scan, "sigma", 40.0), _get(scan, "span", 1.6),
                                          _get(scan, "points", 81, int))
        out.table("scan", ["detuning", "transmitted"], zip(res.detunings, res.transmitted))
        out.note("fwhm_scanned", res.measured_width)
        out.note("resonant_transmission", res.resonant_transmission)


def _medium(config: dict):
    block = _section(config, "medium")
    return _get(block, "length"), _get(block, "dz", 0.02)


def run_slowdown(config: dict, out: Output) -> None:
    params = model_from_config(config)
    omega = controls_from_config(config, params.Q)
    length, dz = _medium(config)
    pulse = config.get("pulse", {})
    res = scenarios.slowdown(params, omega, length, dz, _get(pulse, "sigma", 20.0),
                             _get(pulse, "mode", 1, int))
    rep = res.report
    out.table("traces", ["time", "input_intensity", "output_intensity"],
              zip(rep.times, np.sum(np.abs(rep.input_trace[0]) ** 2, axis=0),
                  np.sum(np.abs(rep.output_trace[0]) ** 2, axis=0)))
    out.note("group_index", res.group_index)
    out.note("vg_predicted", res.predicted_vg)
    out.note("vg_measured", res.measured_vg)
    out.note("vg_relative_error", abs(res.measured_vg / res.predicted_vg - 1.0))
    out.note("transmitted", res.transmitted)


def _memory_outputs(res, out: Output, Q: int) -> None:
    rep = res.report
    cols = [np.abs(rep.input_trace[0, q]) ** 2 for q in range(Q)]
    cols += [np.abs(rep.output_trace[0, q]) ** 2 for q in range(Q)]
    header = ["time"] + [f"input_{q + 1}" for q in range(Q)] + [f"output_{q + 1}" for q in range(Q)]
    out.table("traces", header, zip(rep.times, *cols))
    out.note("input_energy", res.input_energy)
    for q in range(Q):
        out.note(f"output_energy_{q + 1}", res.output_energy[q])
    out.note("efficiency", res.efficiency)
    out.note("shape_overlap", res.shape_overlap)


def run_storage(config: dict, out: Output) -> None:
    params = model_from_config(config)
    length, dz = _medium(config)
    block = _section(config, "storage")
    mode_out = _get(block, "mode_out", 2, int)
    res = scenarios.storage(params, _get(block, "amplitude"), length, dz, _get(block, "ramp", 10.0),
                            _get(block, "hold", 50.0), _get(block, "mode_in", 1, int), mode_out,
                            _get(block, "sigma_fraction", 1 / 6))
    _memory_outputs(res, out, params.Q)
    out.note("output_mode_fraction", res.mode_fractions[mode_out - 1])


def run_convert(config: dict, out: Output) -> None:
    params = model_from_config(config)
    length, dz = _medium(config)
    block = _section(config, "convert")
    mode_out = _get(block, "mode_out", 2, int)
    res = scenarios.conversion(params, _get(block, "amplitude"), length, dz, _get(block, "fade", 20.0),
                               _get(block, "mode_in", 1, int), mode_out,
                               _get(block, "sigma_fraction", 1 / 6))
    _memory_outputs(res, out, params.Q)
    out.note("output_mode_fraction", res.mode_fractions[mode_out - 1])


def run_hom(config: dict, out: Output) -> None:
    block = _section(config, "hom")
    inputs = block.get("inputs", [[1, 1]])
    ratios = block.get("ratios", [[1, 1]])
    steps = _get(block, "grid_steps", 24, int)
    rows, best_rows = [], []
    for occ in inputs:
        fock = FockInput.from_occupation(occ)
        label = "(" + ",".join(str(int(x)) for x in occ) + ")"
        for r in ratios:
            r = _complex_list(r, fock.Q, "hom.ratios")
            p = coupling_probability(fock, transform_from_ratios(r))
            rows.append([label, ";".join(_fmt(x) for x in r), f"{p:.6f}"])
        best, best_r = max_coupling_over_controls(fock, ratio_grid(fock.Q, steps))
        best_rows.append([label, ";".join(_fmt(x) for x in best_r), f"{best:.6f}"])
    out.table("coupling", ["input", "ratios", "coupling_probability"], rows)
    out.table("best", ["input", "best_ratios", "max_coupling_probability"], best_rows)
    out.note("first_coupling_probability", rows[0][2])
    dyn = block.get("dynamics")
    if dyn:
        res = scenarios.hom_absorption(_get(dyn, "amplitude", 20.0), _get(dyn, "gamma", 4.0),
                                       _get(dyn, "t_end", 30.0), _get(dyn, "dt", 0.002))
        out.table("dynamics", ["time", "norm"], zip(res.times, res.norms))
        out.note("predicted_survival", res.predicted)
        out.note("simulated_survival", res.surviving)


HELP = {
    "darkstate-check": "dark-state residuals for random couplings",
    "transform-check": "unitarity and decoupling of the bright/dark transforms",
    "ratos": "adiabatic transfer fidelity versus fade time",
    "spectrum": "susceptibility, transmission and window width",
    "slowdown": "group velocity from a pulse simulation",
    "storage": "store and retrieve a pulse",
    "convert": "in-medium frequency conversion by a control cross-fade",
    "hom": "two-photon coupling into the EIT mode",
}

COMMANDS: Dict[str, Callable[[dict, Output], None]] = {
    "darkstate-check": run_darkstate_check,
    "transform-check": run_transform_check,
    "ratos": run_ratos,
    "spectrum": run_spectrum,
    "slowdown": run_slowdown,
    "storage": run_storage,
    "convert": run_convert,
    "hom": run_hom,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ratos-sim", description="Multi-Lambda EIT and RATOS scenarios")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", required=True, help="YAML scenario file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="K=V",
                       help="override a config entry, e.g. model.N=200")
        p.add_argument("--out", default=None, help="output path prefix")
    return parser


def run(command: str, config_path, overrides: Sequence[str] = (), out_prefix: Optional[str] = None) -> int:
    if command not in COMMANDS:
        log.error("unknown subcommand %r", command)
        return EXIT_INVALID
    try:
        config = apply_overrides(load_config(config_path), overrides)
        scenario = config.get("scenario", command)
        if scenario != command:
            raise ConfigError(f"config is for {scenario!r}, not {command!r}")
        if "seed" not in config or not isinstance(config["seed"], int) or isinstance(config["seed"], bool):
            raise ConfigError("config needs an integer 'seed'")
        config["scenario"] = command
        prefix = Path(out_prefix or config.get("output") or f"ratos_out/{command}")
        out = Output(prefix, config_hash(config))
        COMMANDS[command](config, out)
        summary = out.finish(command)
    except (CFLError, NumericalError, StepSizeError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except (ValueError, TypeError, KeyError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    print(summary.read_text(), end="")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return run(args.command, args.config, args.overrides, args.out)


if __name__ == "__main__":
    sys.exit(main())
