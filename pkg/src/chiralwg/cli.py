"""``sim`` command-line interface.

Subcommands: ``spectrum``, ``saturation``, ``fit`` and ``phase``. Every run
writes its outputs plus a ``manifest.json`` into ``--out``.

Exit codes: 0 success, 2 configuration error, 3 fit did not converge,
4 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ensemble
from .config import ConfigError, Scenario, load_scenario
from .fano import FitError, fano_contrast, fano_fit
from .params import Branch, Direction, derive_rates, power_to_flux
from .scattering import phase_shift_report
from .spectrum import SpectrumFormatError, atomic_write_text, format_number, ingest_csv, write_csv

log = logging.getLogger("chiralwg")

EXIT_OK, EXIT_CONFIG, EXIT_FIT, EXIT_IO = 0, 2, 3, 4
FIT_HALF_WINDOW = 40.0


@dataclass
class RunManifest:
    scenario: dict
    command: dict
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def add_output(self, path):
        path = Path(path)
        self.outputs.append({"path": path.name, "sha256": hashlib.sha256(path.read_bytes()).hexdigest()})

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.json"
        atomic_write_text(path, json.dumps(dataclasses.asdict(self), indent=2) + "\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def _threads() -> int:
    raw = os.environ.get("SIM_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("SIM_THREADS", f"expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("SIM_THREADS", f"expected a positive integer, got {raw!r}")
    return n


def _float_list(text, name, count=None):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(name, f"expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(values) != count:
        raise ConfigError(name, f"expected {count} values, got {len(values)}")
    return values


def _scenario(args) -> Scenario:
    scenario = load_scenario(args.config) if args.config else Scenario()
    drive = scenario.drive
    overrides = {}
    if getattr(args, "direction", None):
        overrides["direction"] = Direction(args.direction)
    if getattr(args, "power", None) is not None:
        if args.power < 0:
            raise ConfigError("--power", "must be >= 0")
        overrides["power_in_waveguide"] = args.power
    if overrides:
        scenario = scenario.replace(drive=dataclasses.replace(drive, **overrides))
    return scenario


def _command_record(args) -> dict:
    skip = {"func"}
    return {"subcommand": args.command,
            "args": {k: v for k, v in sorted(vars(args).items()) if k not in skip and k != "command"}}


def cmd_spectrum(args) -> int:
    scenario = _scenario(args)
    out = Path(args.out)
    manifest = RunManifest(scenario.to_dict(), _command_record(args))
    start = time.perf_counter()

    sc = scenario
    digest = sc.digest()
    t_on, r_on = ensemble.simulate_spectrum(sc.emitter, sc.ensemble, sc.drive, sc.cavity,
                                            differential=False, digest=digest)
    files = [write_csv(t_on, out / "transmission.csv"), write_csv(r_on, out / "reflection.csv")]
    if args.differential:
        d_t, d_r = ensemble.simulate_spectrum(sc.emitter, sc.ensemble, sc.drive, sc.cavity,
                                              differential=True, digest=digest)
        files += [write_csv(d_t, out / "delta_T.csv"), write_csv(d_r, out / "delta_R.csv")]
    for f in files:
        manifest.add_output(f)

    if args.mc_samples:
        manifest.extra["monte_carlo_check"] = _mc_check(sc, args.mc_samples, args.seed)
    manifest.wall_time = time.perf_counter() - start
    manifest.write(out)
    log.info("wrote %d spectra to %s", len(files), out)
    return EXIT_OK


def _mc_check(sc: Scenario, samples, seed):
    """Compare the quadrature average with Monte-Carlo at the branch resonances."""
    em = sc.emitter
    points = np.array(sorted(em.branch_offset(b) for b in Branch))
    flux = power_to_flux(sc.drive.power_in_waveguide, em.center_energy)
    fn = ensemble._saturating_response(em, sc.drive.direction, flux, points)
    gh = ensemble.wandering_average(fn, sc.ensemble.wandering_sigma, sc.ensemble.quadrature_order)
    mc, se = ensemble.monte_carlo_average(fn, sc.ensemble.wandering_sigma, samples, rng=seed)
    z = np.abs(gh - mc) / np.where(se > 0, se, np.inf)
    return {"detunings_ueV": points.tolist(), "samples": samples, "seed": seed,
            "max_standard_errors": float(np.max(z))}


def _log_grid(spec):
    start, stop, points = _float_list(spec, "--powers", 3)
    if not (0 < start < stop) or points < 2 or points != int(points):
        raise ConfigError("--powers", "expected start,stop,points with 0 < start < stop and points >= 2")
    return np.geomspace(start, stop, int(points))


def cmd_saturation(args) -> int:
    scenario = _scenario(args)
    powers = _log_grid(args.powers)
    out = Path(args.out)
    manifest = RunManifest(scenario.to_dict(), _command_record(args))
    start = time.perf_counter()

    sc = scenario
    chunks = np.array_split(powers, min(_threads(), len(powers)))
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = pool.map(lambda p: ensemble.simulate_saturation(sc.emitter, sc.ensemble, sc.drive.direction, p),
                         chunks)
        depths = np.concatenate(list(parts))

    lines = ["power_W,dip_depth"] + [f"{format_number(p)},{format_number(d)}" for p, d in zip(powers, depths)]
    path = out / "saturation.csv"
    atomic_write_text(path, "\n".join(lines) + "\n")
    manifest.add_output(path)
    manifest.wall_time = time.perf_counter() - start
    manifest.write(out)
    return EXIT_OK


def _fit_windows(args):
    if args.window:
        return [tuple(_float_list(w, "--window", 2)) for w in args.window]
    splitting = (load_scenario(args.config) if args.config else Scenario()).emitter.zeeman_splitting
    return [(c - FIT_HALF_WINDOW, c + FIT_HALF_WINDOW) for c in (0.5 * splitting, -0.5 * splitting)]


def _fit_file(path, windows):
    spectrum = ingest_csv(path)
    fits = []
    for lo, hi in windows:
        if lo >= hi:
            raise ConfigError("--window", f"lower bound {lo} not below upper bound {hi}")
        fits.append(fano_fit(spectrum, (lo, hi)))
    labels = ["sigma_plus", "sigma_minus"] if len(fits) == 2 else [f"window_{i}" for i in range(len(fits))]
    entry = {"path": str(path), "kind": spectrum.kind.value, "fits": {}}
    for label, (lo, hi), fit in zip(labels, windows, fits):
        entry["fits"][label] = {"window": [lo, hi], **fit.to_report()}
    if len(fits) == 2 and all(f.converged for f in fits):
        entry["contrast"] = fano_contrast(*fits)
    return entry, all(f.converged for f in fits)


def cmd_fit(args) -> int:
    windows = _fit_windows(args)
    out = Path(args.out)
    scenario = (load_scenario(args.config) if args.config else Scenario()).to_dict()
    manifest = RunManifest(scenario, _command_record(args))
    start = time.perf_counter()

    with ThreadPoolExecutor(max_workers=min(_threads(), len(args.csv))) as pool:
        results = list(pool.map(lambda p: _fit_file(p, windows), args.csv))

    report = {"files": [entry for entry, _ in results]}
    path = out / "fit_report.json"
    atomic_write_text(path, json.dumps(report, indent=2) + "\n")
    manifest.add_output(path)
    manifest.wall_time = time.perf_counter() - start
    manifest.write(out)
    for entry in report["files"]:
        if "contrast" in entry:
            print(f"{entry['path']}: C = {entry['contrast']:.4f}")
    return EXIT_OK if all(ok for _, ok in results) else EXIT_FIT


def _phase_row(emitter):
    direction = Direction.LtoR
    rates = derive_rates(emitter, emitter.preferred_branch(direction), direction)
    rep = phase_shift_report(rates)
    tau_d = emitter.dephasing_tau_d
    return {"beta": emitter.beta, "dephasing_tau_d": None if math.isinf(tau_d) else tau_d,
            "delta_phi_rad": rep.delta_phi, "detuning_ueV": rep.detuning_ueV, "abs_t": rep.abs_t}


def cmd_phase(args) -> int:
    scenario = _scenario(args)
    em = scenario.emitter
    rows = [_phase_row(em)]
    if args.scan_beta or args.scan_tau_d:
        betas = _float_list(args.scan_beta, "--scan-beta") if args.scan_beta else [em.beta]
        taus = _float_list(args.scan_tau_d, "--scan-tau-d") if args.scan_tau_d else [em.dephasing_tau_d]
        for b in betas:
            for td in taus:
                try:
                    rows.append(_phase_row(dataclasses.replace(em, beta=b, dephasing_tau_d=td)))
                except ValueError as exc:
                    raise ConfigError("--scan", str(exc)) from None
    for row in rows:
        print(f"beta={row['beta']:.3f} tau_d={row['dephasing_tau_d']} ns  "
              f"dphi={row['delta_phi_rad']:.6f} rad  at {row['detuning_ueV']:+.6f} ueV  |t|={row['abs_t']:.6f}")
    if args.out:
        out = Path(args.out)
        manifest = RunManifest(scenario.to_dict(), _command_record(args))
        path = out / "phase.json"
        atomic_write_text(path, json.dumps({"rows": rows}, indent=2) + "\n")
        manifest.add_output(path)
        manifest.write(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="scenario JSON (defaults to the built-in parameter set)")
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed for Monte-Carlo checks only")

    p = sub.add_parser("spectrum", help="transmission/reflection spectra")
    common(p)
    p.add_argument("--direction", choices=[d.value for d in Direction])
    p.add_argument("--power", type=float, help="power in the waveguide (W)")
    p.add_argument("--differential", action="store_true", help="also write dT and dR spectra")
    p.add_argument("--mc-samples", type=int, default=0, help="Monte-Carlo cross-check of the wandering average")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("saturation", help="resonant dip depth versus power")
    common(p)
    p.add_argument("--direction", choices=[d.value for d in Direction])
    p.add_argument("--powers", default="1e-13,1e-6,61", help="log grid start,stop,points in W")
    p.set_defaults(func=cmd_saturation)

    p = sub.add_parser("fit", help="Fano fits and directional contrast")
    common(p)
    p.add_argument("csv", nargs="+")
    p.add_argument("--window", action="append", help="lo,hi in ueV; give sigma+ first, then sigma-")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("phase", help="maximum transmission phase shift")
    common(p, out_required=False)
    p.add_argument("--scan-beta", help="comma-separated beta values")
    p.add_argument("--scan-tau-d", help="comma-separated dephasing times (ns)")
    p.set_defaults(func=cmd_phase)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (OSError, SpectrumFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
