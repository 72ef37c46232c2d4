"""Command-line driver.

    dressqsim {spectrum,fid,qpe,validate} --config PATH [--seed S] [--threads N] [--out DIR]

Exit codes: 0 success, 1 validation failure, 2 config error, 3 capacity error.
Numeric outputs (CSV and the JSON reports) depend only on the config and the
seed; timings live in ``manifest.json`` alone.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config, parse_matrix, parse_vector, realize_ensemble
from .dressing import dressed_hamiltonians
from .errors import CapacityError, ConfigError, DressqsimError
from .evolution import TimeGrid, pure_state
from .fid import FidConfig, check_sampling, ladder_observable, run_fid
from .linalg import eigh, spectral_norm
from .models import build_hamiltonian, hilbert_dim
from .qpe import QpeConfig, energy_estimate, run_generalized_qpe
from .validate import run_checks

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3


class Timer:
    def __init__(self):
        self.phases: dict[str, float] = {}

    def run(self, name, fn, *args, **kwargs):
        start = time.perf_counter()
        out = fn(*args, **kwargs)
        self.phases[name] = round(time.perf_counter() - start, 6)
        return out


def _fmt(x) -> str:
    return repr(float(x))


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, np.integer, str)) else _fmt(v) for v in row])


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


# ---------------------------------------------------------------- initial states and observables


def initial_state(value, H, key: str) -> np.ndarray:
    """``uniform`` | ``ground`` | ``{basis: k}`` | ``{vector: [...]}`` as a unit vector."""
    d = H.shape[0]
    if value is None or value == "uniform":
        return np.ones(d, dtype=complex) / math.sqrt(d)
    if value == "ground":
        return eigh(H).eigenvectors[:, 0]
    if isinstance(value, dict) and "basis" in value:
        k = value["basis"]
        if not isinstance(k, int) or not 0 <= k < d:
            raise ConfigError(f"basis index must be an integer in [0, {d})", key=f"{key}.basis")
        psi = np.zeros(d, dtype=complex)
        psi[k] = 1
        return psi
    if isinstance(value, dict) and "vector" in value:
        psi = parse_vector(value["vector"], f"{key}.vector")
        if len(psi) != d or np.linalg.norm(psi) == 0:
            raise ConfigError(f"need a non-zero vector of length {d}", key=f"{key}.vector")
        return psi / np.linalg.norm(psi)
    raise ConfigError("expected uniform, ground, {basis: k} or {vector: [...]}", key=key)


def observable(value, model, key: str) -> np.ndarray:
    if value is None:
        value = {"ladder": 0}
    if isinstance(value, dict) and "ladder" in value:
        site = value["ladder"]
        if not isinstance(site, int) or not 0 <= site < len(model.dims):
            raise ConfigError(f"ladder site must be an integer in [0, {len(model.dims)})", key=f"{key}.ladder")
        return ladder_observable(model.dims, site)
    if isinstance(value, dict) and "matrix" in value:
        O = parse_matrix(value["matrix"], f"{key}.matrix")
        if O.shape[0] != hilbert_dim(model):
            raise ConfigError(f"observable must be {hilbert_dim(model)}x{hilbert_dim(model)}", key=f"{key}.matrix")
        return O
    raise ConfigError("expected {ladder: site} or {matrix: [...]}", key=key)


# ---------------------------------------------------------------- tasks


def _dressed(cfg: ExperimentConfig, H, timer: Timer):
    ensemble = timer.run("sample_ensemble", realize_ensemble, cfg)
    H_list = timer.run("dress", dressed_hamiltonians, H, ensemble, cfg.model, cfg.dressing_mode, cfg.policy)
    return ensemble, H_list


def cmd_spectrum(cfg: ExperimentConfig, out: Path, timer: Timer) -> tuple[int, list[str]]:
    H = timer.run("build_model", build_hamiltonian, cfg.model, cfg.policy)
    _, H_list = _dressed(cfg, H, timer)
    e0 = timer.run("eigh", lambda: eigh(H, cfg.policy).eigenvalues)
    spectra = timer.run("dressed_eigh", lambda: [eigh(Ha, cfg.policy).eigenvalues for _, Ha in H_list])
    deviation = max(float(np.max(np.abs(e - e0))) for e in spectra)
    write_csv(out / "spectrum.csv", ["index", "energy"], enumerate(e0))
    write_csv(
        out / "dressed_spectra.csv",
        ["channel", "weight", "index", "energy"],
        ((a, p, u, e) for a, ((p, _), es) in enumerate(zip(H_list, spectra)) for u, e in enumerate(es)),
    )
    write_json(
        out / "spectrum_report.json",
        {
            "schema": f"dressqsim.spectrum/{SCHEMA_VERSION}",
            "dressing_mode": cfg.dressing_mode,
            "channels": len(H_list),
            "dimension": len(e0),
            "max_deviation": deviation,
            "bound": cfg.policy.spectrum_rtol * (1 + spectral_norm(H, cfg.policy)),
        },
    )
    return EXIT_OK, ["spectrum.csv", "dressed_spectra.csv", "spectrum_report.json"]


def fid_grid(block: dict, H, policy) -> TimeGrid:
    grid = block.get("grid") or {}
    if not isinstance(grid, dict):
        raise ConfigError("expected a mapping", key="fid.grid")
    n = grid.get("n_samples")
    if not isinstance(n, int) or n < 8:
        raise ConfigError("n_samples must be an integer of at least 8", key="fid.grid.n_samples")
    t0 = float(grid.get("t_start", 0.0))
    spectrum = eigh(H, policy)
    if grid.get("dt") is not None:
        dt = float(grid["dt"])
        if not dt > 0:
            raise ConfigError("must be positive", key="fid.grid.dt")
        check_sampling(spectrum, dt)
    else:
        fraction = float(grid.get("dt_fraction", 0.5))
        if not 0 < fraction < 1:
            raise ConfigError("must lie in (0, 1)", key="fid.grid.dt_fraction")
        width = float(spectrum.eigenvalues[-1] - spectrum.eigenvalues[0])
        dt = fraction * math.pi / width if width > 0 else 0.1
    return TimeGrid(t0, dt, n)


def cmd_fid(cfg: ExperimentConfig, out: Path, timer: Timer) -> tuple[int, list[str]]:
    block = cfg.fid
    H = timer.run("build_model", build_hamiltonian, cfg.model, cfg.policy)
    grid = fid_grid(block, H, cfg.policy)
    window = block.get("window", "none")
    threshold = float(block.get("threshold", 0.05))
    if not 0 < threshold < 1:
        raise ConfigError("must lie in (0, 1)", key="fid.threshold")
    fid_cfg = FidConfig(grid, observable(block.get("observable"), cfg.model, "fid.observable"), float(block.get("V0", 1.0)), window)
    rho0 = pure_state(initial_state(block.get("initial_state"), H, "fid.initial_state"))
    _, H_list = _dressed(cfg, H, timer)
    tol = block.get("tolerance")
    res = timer.run(
        "fid",
        run_fid,
        H_list,
        H,
        rho0,
        fid_cfg,
        threshold,
        None if tol is None else float(tol),
        cfg.policy,
        cfg.threads,
    )
    write_csv(out / "fid_signal.csv", ["t", "re", "im"], zip(res.times, res.signal.real, res.signal.imag))
    write_csv(out / "fid_spectrum.csv", ["omega", "power"], zip(res.frequencies, res.power))
    write_json(
        out / "fid_report.json",
        {
            "schema": f"dressqsim.fid/{SCHEMA_VERSION}",
            "dt": grid.dt,
            "n_samples": grid.n_samples,
            "window": window,
            "bin_width": res.bin_width,
            "threshold": threshold,
            "channels": len(H_list),
            "peaks": [asdict(p) for p in res.peaks],
            "match": res.report.to_dict(),
        },
    )
    return EXIT_OK, ["fid_signal.csv", "fid_spectrum.csv", "fid_report.json"]


def cmd_qpe(cfg: ExperimentConfig, out: Path, timer: Timer) -> tuple[int, list[str]]:
    block = cfg.qpe
    H = timer.run("build_model", build_hamiltonian, cfg.model, cfg.policy)
    n = block.get("n_register")
    if not isinstance(n, int):
        raise ConfigError("must be an integer", key="qpe.n_register")
    coeffs = block.get("initial_coefficients")
    kwargs = {}
    if coeffs is not None:
        kwargs["initial_coefficients"] = parse_vector(coeffs, "qpe.initial_coefficients")
        kwargs["initial_coefficients"] /= np.linalg.norm(kwargs["initial_coefficients"])
    else:
        kwargs["initial_state"] = initial_state(block.get("initial_state"), H, "qpe.initial_state")
    t = block.get("t_evolution")
    ensemble = timer.run("sample_ensemble", realize_ensemble, cfg)
    qcfg = QpeConfig(
        n,
        ensemble,
        None if t is None else float(t),
        mode=block.get("mode", "kernel"),
        reading=block.get("reading", "reexpand"),
        dressing=cfg.dressing_mode,
        **kwargs,
    )
    res = timer.run("qpe", run_generalized_qpe, qcfg, H, cfg.model, cfg.policy, cfg.threads, False)
    js = np.arange(2**n)
    write_csv(out / "qpe_histogram.csv", ["j", "probability", "E_est"], zip(js, res.histogram, energy_estimate(js, n, res.t)))
    write_json(
        out / "qpe_report.json",
        {
            "schema": f"dressqsim.qpe/{SCHEMA_VERSION}",
            "n_register": n,
            "t": res.t,
            "mode": qcfg.mode,
            "reading": qcfg.reading,
            "channels": len(ensemble),
            "histogram_sum": float(res.histogram.sum()),
            "support": sorted(res.support(cfg.policy.support_floor)),
            "energy_estimates": [{"j": j, "E_est": e, "probability": p} for j, e, p in res.energy_estimates],
            "noiseless_energies": eigh(H, cfg.policy).eigenvalues,
        },
    )
    return EXIT_OK, ["qpe_histogram.csv", "qpe_report.json"]


def cmd_validate(cfg: ExperimentConfig, out: Path, timer: Timer) -> tuple[int, list[str]]:
    results = timer.run("validate", run_checks, cfg.policy, cfg.master_seed, cfg.validate)
    passed = all(r.passed for r in results)
    write_json(
        out / "validate_report.json",
        {"schema": f"dressqsim.validate/{SCHEMA_VERSION}", "passed": passed, "checks": [r.to_dict() for r in results]},
    )
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}")
    return (EXIT_OK if passed else EXIT_VALIDATION), ["validate_report.json"]


COMMANDS = {"spectrum": cmd_spectrum, "fid": cmd_fid, "qpe": cmd_qpe, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dressqsim", description="Dressed-noise spectral experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} task")
        p.add_argument("--config", required=True, help="YAML experiment file")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    return parser


def run(args) -> int:
    timer = Timer()
    cfg = timer.run("load_config", load_config, args.config, args.seed, args.threads, args.out)
    if cfg.task != args.command:
        raise ConfigError(f"config declares task {cfg.task!r} but the {args.command!r} command was run", key="task")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    status, files = COMMANDS[args.command](cfg, out, timer)
    write_json(
        out / "manifest.json",
        {
            "schema": f"dressqsim.manifest/{SCHEMA_VERSION}",
            "task": cfg.task,
            "config_hash": cfg.config_hash(),
            "seed": cfg.master_seed,
            "version": __version__,
            "threads": cfg.threads,
            "timings": timer.phases,
            "policy": asdict(cfg.policy),
            "files": files,
            "exit_status": status,
        },
    )
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except DressqsimError as exc:
        # contract failures triggered by config values; name the task block
        print(f"config error: {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
