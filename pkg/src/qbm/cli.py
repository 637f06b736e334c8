"""Command-line front end: ``qbm COMMAND --config cfg.json --out DIR``.

Every command writes one CSV plus ``manifest.json`` to the output directory.
"""

from __future__ import annotations

import argparse
import copy
import datetime as dt
import hashlib
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import dynamics, noise, perturbation, population, spectrum
from .errors import ConfigurationError, ConvergenceError, FitRejectedError, QBMError, RegimeWarning
from .model import BathSpec, CouplingFunction, ModelConfig, default_omega_max, discretize, thermal_state
from .resolvent import ResolventModel, khalfin_tail_fit, survival_amplitude_continuum

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_REGIME = 4

COMMANDS = ("spectrum", "decay", "langevin", "noise", "population", "asymptote", "khalfin", "tscan", "validate")

# Per-command keys; they land at the top level once an override section is merged,
# so a manifest's resolved configuration can be fed back in unchanged.
COMMAND_OPTIONS = ("betas", "window", "scan", "seed")

DEFAULTS = {
    "system": {"omega": 1.0, "mass": 1.0, "beta": 1.0, "n0": 0.0},
    "bath": {"N": 400, "scheme": "midpoint"},
    "grid": {"t_min": 0.0, "t_max": 100.0, "samples": 1001, "spacing": "linear"},
}


def _merge(base, extra):
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def resolve_config(raw: dict, command: str) -> dict:
    """Defaults, then the document, then its ``command`` override section."""
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration must be a JSON object")
    unknown = set(raw) - {"system", "coupling", "bath", "grid", *COMMAND_OPTIONS, *COMMANDS}
    if unknown:
        raise ConfigurationError(f"unknown configuration sections: {sorted(unknown)}")
    cfg = _merge(DEFAULTS, {k: v for k, v in raw.items() if k not in COMMANDS})
    override = raw.get(command, {})
    if not isinstance(override, dict):
        raise ConfigurationError(f"override section {command!r} must be an object")
    cfg = _merge(cfg, override)
    if "coupling" not in cfg and "modes" not in cfg["bath"]:
        raise ConfigurationError("need a coupling section or explicit bath modes")
    build_grid(cfg)
    return cfg


def _number(section, key, default=None):
    value = section.get(key, default)
    if value is None:
        raise ConfigurationError(f"missing required key {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{key!r} must be a number")
    return float(value)


def build_coupling(cfg: dict, omega: float) -> CouplingFunction | None:
    sec = cfg.get("coupling")
    if sec is None:
        return None
    family = sec.get("family", "power-exponential")
    if family == "power-exponential":
        n = _number(sec, "n", 1.0)
        cutoff = sec.get("omega_c")
        if "gamma" in sec:
            if "lambda" in sec:
                raise ConfigurationError("give either lambda or gamma, not both")
            return CouplingFunction.from_damping(_number(sec, "gamma"), omega, n,
                                                 None if cutoff is None else float(cutoff))
        return CouplingFunction(family, _number(sec, "lambda"), n,
                                omega / n if cutoff is None else _number(sec, "omega_c"))
    if family == "window":
        return CouplingFunction(family, _number(sec, "lambda"), lower=_number(sec, "lower"),
                                upper=_number(sec, "upper"))
    if family == "custom-table":
        table = sec.get("table")
        if not isinstance(table, list):
            raise ConfigurationError("custom-table needs a list of [omega, g2] pairs")
        return CouplingFunction(family, _number(sec, "lambda", 1.0), table=tuple(tuple(p) for p in table))
    raise ConfigurationError(f"unknown coupling family {family!r}")


def build_model(cfg: dict):
    sysc = cfg["system"]
    omega = _number(sysc, "omega")
    coupling = build_coupling(cfg, omega)
    bath_sec = cfg["bath"]
    if "modes" in bath_sec:
        modes = bath_sec["modes"]
        if not isinstance(modes, list) or not all(isinstance(m, list) and len(m) == 2 for m in modes):
            raise ConfigurationError("bath.modes must be a list of [omega, g] pairs")
        bath = BathSpec.from_modes(modes)
    else:
        n = bath_sec.get("N")
        if not isinstance(n, int) or isinstance(n, bool):
            raise ConfigurationError("bath.N must be an integer")
        wmax = bath_sec.get("omega_max")
        wmax = default_omega_max(coupling, omega) if wmax is None else _number(bath_sec, "omega_max")
        bath = discretize(coupling, n, wmax, bath_sec.get("scheme", "midpoint"))
    config = ModelConfig(omega, bath, _number(sysc, "mass"), _number(sysc, "beta"), _number(sysc, "n0"))
    return config, coupling


def build_grid(cfg: dict) -> np.ndarray:
    g = cfg["grid"]
    t_min, t_max = _number(g, "t_min"), _number(g, "t_max")
    samples = g.get("samples")
    if not isinstance(samples, int) or samples < 2:
        raise ConfigurationError("grid.samples must be an integer >= 2")
    if not 0 <= t_min < t_max:
        raise ConfigurationError("grid needs 0 <= t_min < t_max")
    spacing = g.get("spacing", "linear")
    if spacing == "linear":
        return np.linspace(t_min, t_max, samples)
    if spacing == "log":
        if t_min <= 0:
            raise ConfigurationError("log spacing needs t_min > 0")
        return np.geomspace(t_min, t_max, samples)
    raise ConfigurationError(f"unknown grid spacing {spacing!r}")


def _pmap(fn, items, threads):
    """Order-preserving map; each item is computed independently, so the
    result does not depend on ``threads``."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _warm(model):
    """Fill lazily cached pieces before worker threads share the model."""
    _ = model.bound_state
    _ = model.breakpoints
    if not model.closed_form:
        _ = model._spline
    return model


def _need_coupling(coupling, command):
    if coupling is None:
        raise ConfigurationError(f"{command!r} needs a continuum coupling section")
    return coupling


# Each command returns (csv header, columns, results for the manifest).

def cmd_spectrum(cfg, threads):
    config, _ = build_model(cfg)
    spec = spectrum.decompose(config)
    return ["alpha [omega units]", "weight [1]"], [spec.alphas, spec.weights], {"modes": len(spec)}


def cmd_decay(cfg, threads):
    config, coupling = build_model(cfg)
    t = build_grid(cfg)
    exact = dynamics.survival_amplitude(spectrum.decompose(config), t).modulus
    if coupling is None:
        bw = cont = np.full(t.size, np.nan)
        results = {}
    else:
        consts = perturbation.perturbative_constants(coupling, config.omega)
        bw = perturbation.breit_wigner_amplitude(config.omega, consts.delta_omega, consts.gamma, t).modulus
        model = _warm(ResolventModel(coupling, config.omega))
        cont = np.concatenate(_pmap(lambda x: survival_amplitude_continuum(model, [x]).modulus, t, threads))
        results = {"delta_omega": consts.delta_omega, "gamma": consts.gamma}
    header = ["t [1/omega units]", "abs_A_exact [1]", "abs_A_breit_wigner [1]", "abs_A_continuum [1]"]
    return header, [t, exact, bw, cont], results


def cmd_langevin(cfg, threads):
    config, _ = build_model(cfg)
    t = build_grid(cfg)
    coef = dynamics.langevin_coefficients(spectrum.decompose(config), t)
    header = ["t [1/omega units]", "omega2 [omega^2 units]", "gamma [omega units]", "wronskian [omega units]",
              "singular [flag]"]
    return header, [t, coef.omega2, coef.gamma, coef.wronskian, coef.singular.astype(float)], {
        "singular_samples": int(coef.singular.sum())}


def cmd_noise(cfg, threads):
    config, coupling = build_model(cfg)
    t = build_grid(cfg)
    kd = noise.autocorrelation_discrete(config, thermal_state(config), t).values
    if coupling is None:
        kc = np.full(t.size, np.nan)
    else:
        kc = np.array(_pmap(
            lambda x: noise.autocorrelation_continuum(coupling, config.beta, config.mass, config.omega, [x]).values[0],
            t, threads))
    return ["t [1/omega units]", "K_discrete [omega^4 units]", "K_continuum [omega^4 units]"], [t, kd, kc], {}


def cmd_population(cfg, threads):
    config, coupling = build_model(cfg)
    t = build_grid(cfg)
    traj = population.exact_trajectory(spectrum.decompose(config), thermal_state(config), config.n0, t, config.beta)
    if coupling is None:
        vk = np.full(t.size, np.nan)
    else:
        gamma = perturbation.damping_rate(coupling, config.omega)
        vk = perturbation.van_kampen_trajectory(gamma, config.beta, config.omega, config.n0, t)
    return ["t [1/omega units]", "N_exact [1]", "N_van_kampen [1]"], [t, traj.values, vk], {
        "exact_asymptote": traj.asymptote}


def cmd_asymptote(cfg, threads):
    config, coupling = build_model(cfg)
    coupling = _need_coupling(coupling, "asymptote")
    model = _warm(ResolventModel(coupling, config.omega))
    betas = cfg.get("betas")
    betas = np.array([0.5, 1.0, 2.0]) / config.omega if betas is None else np.asarray(betas, dtype=float)
    shifted = model.shifted_frequency
    pops = np.array(_pmap(lambda b: population.asymptotic_population(model, float(b)), betas, threads))
    bose = np.array([1.0 / math.expm1(b * shifted) for b in betas])
    return ["beta [1/omega units]", "N_asymptotic [1]", "bose_shifted [1]"], [betas, pops, bose], {
        "delta_omega": shifted - config.omega}


def cmd_khalfin(cfg, threads):
    config, coupling = build_model(cfg)
    coupling = _need_coupling(coupling, "khalfin")
    model = _warm(ResolventModel(coupling, config.omega))
    t = build_grid(cfg)
    amp = np.concatenate(_pmap(lambda x: survival_amplitude_continuum(model, [x]).values, t, threads))
    series = dynamics.AmplitudeSeries(t, amp)
    window = cfg.get("window")
    if window is None:
        consts = perturbation.perturbative_constants(coupling, config.omega)
        bw = np.exp(-0.5 * consts.gamma * t)
        # Tail region: exponential part well below the computed amplitude.
        tail = np.flatnonzero(bw < 1e-3 * series.modulus)
        if tail.size < 4:
            raise FitRejectedError("grid does not reach the power-law tail")
        window = [float(t[tail[0]]), float(t[-1])]
    fit = khalfin_tail_fit(series, tuple(window))
    n = coupling.exponent
    return ["t [1/omega units]", "abs_A_continuum [1]"], [t, series.modulus], {
        "exponent": fit.exponent, "expected_exponent": n + 1.0, "prefactor": fit.prefactor, "r2": fit.r2,
        "window": list(fit.window)}


def cmd_tscan(cfg, threads):
    config, coupling = build_model(cfg)
    coupling = _need_coupling(coupling, "tscan")
    model = _warm(ResolventModel(coupling, config.omega))
    sec = cfg.get("scan", {})
    betas = np.geomspace(_number(sec, "beta_omega_min", 5.0), _number(sec, "beta_omega_max", 500.0),
                         int(_number(sec, "samples", 21))) / config.omega
    fit = population.temperature_scan(model, betas, threads=threads)
    k = fit.temperatures.size
    return ["T [omega units]", "N_asymptotic [1]", "exponent [1]", "q [1]"], [
        fit.temperatures, fit.populations, np.full(k, fit.exponent), np.full(k, fit.q)], {
        "exponent": fit.exponent, "q": fit.q, "r2": fit.r2, "energy_exponent": fit.energy_exponent,
        "heat_capacity_exponent": fit.heat_capacity_exponent}


def cmd_validate(cfg, threads):
    from .validation import run_checks

    rows = run_checks(seed=int(cfg.get("seed", 0)))
    header = ["check [name]", "value [1]", "tolerance [1]", "passed [flag]"]
    names = [r.name for r in rows]
    cols = [names, [r.value for r in rows], [r.tolerance for r in rows], [float(r.passed) for r in rows]]
    return header, cols, {"passed": all(r.passed for r in rows), "failed": [r.name for r in rows if not r.passed]}


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def _fmt(value):
    if isinstance(value, str):
        return value
    return "%.17g" % float(value)


def write_csv(path: Path, header, columns):
    rows = zip(*columns)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _threads(arg):
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("QBM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"QBM_THREADS must be an integer, got {env!r}") from None
    return 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def run(command: str, config_path: str | os.PathLike, out_dir: str | os.PathLike, *, strict: bool = False,
        threads: int | None = None) -> int:
    """Execute one command; returns the process exit code."""
    try:
        nthreads = _threads(threads)
        if command not in HANDLERS:
            raise ConfigurationError(f"unknown command {command!r}")
        try:
            raw = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read configuration: {exc}") from exc
        cfg = resolve_config(raw, command)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            header, columns, results = HANDLERS[command](cfg, nthreads)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, FitRejectedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (QBMError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{command}.csv"
    write_csv(csv_path, header, columns)
    messages = [f"{w.category.__name__}: {w.message}" for w in caught]
    for m in messages:
        print(m, file=sys.stderr)
    manifest = {
        "command": command,
        "version": __version__,
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(),
        "config": cfg,
        "outputs": {csv_path.name: _sha256(csv_path)},
        "results": results,
        "warnings": messages,
    }
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")

    if strict and any(issubclass(w.category, RegimeWarning) for w in caught):
        return EXIT_REGIME
    if command == "validate" and not results["passed"]:
        return EXIT_FAILED_CHECK
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qbm", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--strict", action="store_true", help="treat regime warnings as errors (exit 4)")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: $QBM_THREADS or 1)")
    parser.add_argument("--version", action="version", version=f"qbm {__version__}")
    args = parser.parse_args(argv)
    return run(args.command, args.config, args.out, strict=args.strict, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
