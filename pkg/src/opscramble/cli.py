"""Command-line experiment runner.

Every subcommand accepts ``--config FILE`` (INI, one section per subcommand)
and ``--seed``; explicit flags override file values. Artifacts are staged and
only moved into place once the whole run succeeds, together with a JSON
manifest naming the config hash.
"""
import argparse
import configparser
import csv
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__, circuits, collective, haar, ising, operators, otoc, spectral
from . import sweep as sweeps
from .errors import CapacityError, ContractViolation
from .pauli import PauliString, dense_matrix


class ConfigError(Exception):
    """Configuration file could not be read or holds an invalid value."""


def _axis(text):
    text = text.lower()
    if text not in ("x", "y", "z"):
        raise ValueError(f"axis must be x, y or z, got {text!r}")
    return text


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


# (name, type, default, help); ``None`` defaults mean "required or derived"
OPTIONS = {
    "ising": [
        ("n", int, 6, "number of sites"),
        ("theta", float, math.pi / 6, "field tilt angle in radians"),
        ("coupling", float, 1.0, "ZZ coupling J"),
        ("b_over_j", float, 1.0, "field strength in units of J"),
        ("site", int, 0, "seeded site, 1-based; 0 picks the central site"),
        ("axis", _axis, "y", "Pauli axis of the seeded operator"),
        ("tmax", float, 40.0, "final time"),
        ("steps", int, 401, "number of time points"),
        ("t0", float, 5.0, "start of the averaging window"),
        ("method", str, "direct", "Pauli decomposition route: direct or fast"),
        ("out", str, "ising.csv", "distribution CSV path"),
    ],
    "qkt": [
        ("n", int, 49, "N = 2J"),
        ("gamma", float, 3.0, "twisting strength"),
        ("initial", str, "jz", "initial operator: jz, jy or jx"),
        ("kicks", int, 200, "number of kicks"),
        ("t0", float, 20.0, "first kick of the averaging window"),
        ("method", str, "cg", "tensor basis route: cg or lowering"),
        ("out", str, "qkt.csv", "distribution CSV path"),
    ],
    "circuit": [
        ("n", int, 6, "number of qubits"),
        ("depth", int, 60, "number of layers"),
        ("p_t", float, 0.25, "probability of a T gate per layer"),
        ("instances", int, 40, "ensemble size"),
        ("site", int, 1, "seeded site, 1-based"),
        ("axis", _axis, "z", "Pauli axis of the seeded operator"),
        ("strategy", str, "hs-cx", "layer sampler"),
        ("out", str, "circuit.csv", "ensemble-averaged distribution CSV path"),
    ],
    "haar": [
        ("basis", str, "pauli", "pauli (N qubits) or collective (spin N/2)"),
        ("n", int, 6, "system size N"),
        ("samples", int, 0, "optional Monte-Carlo check with this many Haar unitaries"),
        ("out", str, "", "optional CSV path for the k,dim_Ck,pk_haar table"),
    ],
    "otoc-identities": [
        ("n_sites", int, 4, "number of qubits"),
        ("n_max", int, 4, "largest OTOC class"),
        ("trials", int, 50, "random unitaries"),
        ("out", str, "otoc_report.json", "JSON report path"),
    ],
    "amplitudes": [
        ("max", int, 50, "largest order"),
        ("out", str, "", "optional CSV path"),
    ],
    "spectrum": [
        ("model", str, "ising", "ising or qkt"),
        ("n", int, 10, "sites (ising) or N = 2J (qkt)"),
        ("theta", float, math.pi / 6, "Ising field angle"),
        ("gamma", float, 3.0, "QKT twisting strength"),
        ("desymmetrize", str, "reflection", "reflection or none (ising only)"),
        ("bulk_fraction", float, 0.5, "central fraction of eigenstates for the entropy"),
        ("out", str, "spectrum.json", "JSON report path"),
    ],
    "sweep": [
        ("parameter", str, None, "theta, gamma or p_t"),
        ("grid", _float_list, None, "comma-separated grid values"),
        ("n", int, 0, "system size; 0 keeps the parameter's default"),
        ("depth", int, 60, "circuit depth (p_t sweeps)"),
        ("instances", int, 40, "circuit ensemble size (p_t sweeps)"),
        ("kicks", int, 200, "number of kicks (gamma sweeps)"),
        ("t0", float, 0.0, "start of the averaging window; 0 keeps the parameter's default"),
        ("out", str, "sweep.csv", "summary CSV path"),
    ],
}


def build_parser():
    parser = argparse.ArgumentParser(prog="opscramble", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in OPTIONS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file; the section named after the subcommand is read")
        p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
        for key, typ, _, helptext in opts:
            p.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, default=None, help=helptext)
    return parser


def resolve_config(command, args):
    """Merge defaults, the config file section and explicit flags (highest priority)."""
    cfg = {key: default for key, _, default, _ in OPTIONS[command]}
    cfg["seed"] = 0
    types = {key: typ for key, typ, _, _ in OPTIONS[command]}
    types["seed"] = int
    if args.config:
        parser = configparser.ConfigParser()
        try:
            if not parser.read(args.config):
                raise ConfigError(f"cannot read config file {args.config}")
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        if parser.has_section(command):
            for key, raw in parser.items(command):
                key = key.replace("-", "_")
                if key not in types:
                    raise ConfigError(f"unknown key {key!r} in section [{command}]")
                try:
                    cfg[key] = types[key](raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key}: {exc}") from None
    for key in types:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    missing = [k for k, v in cfg.items() if v is None]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join(missing)}")
    return cfg


def config_to_ini(command, cfg):
    """Config file text that resolves back to ``cfg``."""
    lines = [f"[{command}]"]
    for key, value in cfg.items():
        if isinstance(value, list):
            value = ",".join(repr(float(v)) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def config_hash(command, cfg):
    """SHA-256 of the run parameters; the output path is left out so relocated runs match."""
    params = {k: v for k, v in cfg.items() if k != "out"}
    payload = json.dumps({"command": command, "config": params}, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()


class Artifacts:
    """Stages output files next to their targets and commits them together."""

    def __init__(self):
        self._staged = []

    def path(self, target):
        target = Path(target)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
        os.close(fd)
        self._staged.append((Path(tmp), target))
        return tmp

    @property
    def targets(self):
        return [str(t) for _, t in self._staged]

    def commit(self):
        for tmp, target in self._staged:
            os.replace(tmp, target)
        return [str(t) for _, t in self._staged]

    def discard(self):
        for tmp, _ in self._staged:
            tmp.unlink(missing_ok=True)


def _with_suffix(path, tag, ext=None):
    p = Path(path)
    return p.with_name(f"{p.stem}_{tag}{ext or p.suffix}")


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _summary(series, t0, tf):
    m = series.measures()
    out = {}
    for name in ("mean", "variance", "ipr"):
        out[f"{name}_avg"] = operators.time_average(m[name], t0, tf)
        out[f"{name}_delta"] = operators.temporal_fluctuation(m[name], t0, tf)
    return out


# --- subcommands ------------------------------------------------------------------

def cmd_ising(cfg, art):
    site = cfg["site"] or (cfg["n"] + 1) // 2
    model = ising.IsingConfig(cfg["n"], cfg["theta"], cfg["coupling"], cfg["b_over_j"] * cfg["coupling"])
    series = ising.run_ising_experiment(model, site, cfg["axis"], ising.default_grid(cfg["tmax"], cfg["steps"]), cfg["method"])
    operators.write_distribution_csv(art.path(cfg["out"]), series)
    operators.write_measures_csv(art.path(_with_suffix(cfg["out"], "measures")), series)
    summary = _summary(series, cfg["t0"], cfg["tmax"])
    summary["haar"] = _haar_dict(haar.haar_spin_half(cfg["n"]))
    return summary


def cmd_qkt(cfg, art):
    model = collective.QKTConfig.standard(cfg["n"], cfg["gamma"])
    series = collective.run_qkt_experiment(model, cfg["initial"], cfg["kicks"], method=cfg["method"])
    operators.write_distribution_csv(art.path(cfg["out"]), series)
    operators.write_measures_csv(art.path(_with_suffix(cfg["out"], "measures")), series)
    summary = _summary(series, cfg["t0"], cfg["kicks"])
    summary["haar"] = _haar_dict(haar.haar_collective(cfg["n"]))
    return summary


def cmd_circuit(cfg, art):
    instances = circuits.sample_ensemble(cfg["n"], cfg["depth"], cfg["p_t"], cfg["seed"], cfg["instances"], cfg["strategy"])
    result = circuits.ensemble_average(instances, cfg["site"], cfg["axis"])
    operators.write_distribution_csv(art.path(cfg["out"]), result.mean)
    operators.write_measures_csv(art.path(_with_suffix(cfg["out"], "measures")), result.mean)
    with open(art.path(_with_suffix(cfg["out"], "instances")), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance", "time", "k", "p_k"])
        for i, s in enumerate(result.per_instance):
            for t, row in zip(s.times, s.values):
                for k, p in enumerate(row, start=1):
                    w.writerow([i, f"{t:.12g}", k, f"{p:.12g}"])
    with open(art.path(_with_suffix(cfg["out"], "instances", ".json")), "w") as fh:
        json.dump([json.loads(inst.to_json()) for inst in instances], fh)
        fh.write("\n")
    target = 0.95 * haar.haar_spin_half(cfg["n"]).mean
    return {
        "final_mean": float(result.mean.measures()["mean"].values[-1]),
        "crossing_depth_95": circuits.crossing_depth(result.mean, target),
        "t_gates": [inst.count("T") for inst in instances],
    }


def _haar_dict(pred):
    return {
        "mean": pred.mean,
        "second_moment": pred.second_moment,
        "variance": pred.variance,
        "ipr": pred.ipr,
        "ipr_leading": pred.ipr_leading,
    }


def cmd_haar(cfg, art):
    if cfg["basis"] == "pauli":
        pred = haar.haar_spin_half(cfg["n"])
    elif cfg["basis"] == "collective":
        pred = haar.haar_collective(cfg["n"])
    else:
        raise ValueError(f"unknown basis {cfg['basis']!r}")
    table = [["k", "dim_Ck", "pk_haar"]]
    table += [[k, dim, f"{p:.12g}"] for k, (dim, p) in enumerate(zip(pred.dims, pred.pk), start=1)]
    table += [["mean", "variance", "ipr"], [f"{pred.mean:.12g}", f"{pred.variance:.12g}", f"{pred.ipr:.12g}"]]
    for row in table:
        print(",".join(str(v) for v in row))
    if cfg["out"]:
        with open(art.path(cfg["out"]), "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(table)
    summary = _haar_dict(pred)
    if cfg["samples"]:
        summary["monte_carlo"] = _haar_monte_carlo(cfg)
        print(f"monte_carlo_mean,{summary['monte_carlo']['mean']:.12g}")
    return summary


def _haar_monte_carlo(cfg):
    rng = np.random.default_rng(cfg["seed"])
    n = cfg["n"]
    if cfg["basis"] == "pauli":
        op = ising.initial_pauli(n, 1, "z")
        dist = lambda o: operators.weight_distribution(o, n)  # noqa: E731
        dim = 1 << n
    else:
        basis = collective.build_tensor_basis(n / 2)
        op = collective.initial_collective(n / 2, "jz")
        dist = lambda o: collective.rank_distribution(o, basis)  # noqa: E731
        dim = n + 1
    rows = []
    for _ in range(cfg["samples"]):
        u = haar.sample_haar_unitary(dim, rng)
        rows.append(dist(u.conj().T @ op @ u).probabilities)
    p = np.mean(rows, axis=0)
    ks = np.arange(1, len(p) + 1)
    return {"mean": float(p @ ks), "samples": cfg["samples"], "pk": p.tolist()}


def cmd_otoc_identities(cfg, art):
    n_sites, n_max = cfg["n_sites"], cfg["n_max"]
    if not 1 <= n_max <= n_sites:
        raise ValueError("need 1 <= n_max <= n_sites")
    rng = np.random.default_rng(cfg["seed"])
    scale = otoc.unitary_scale(n_sites)
    residual = np.zeros(n_max)
    moment_err = np.zeros(n_max)
    for _ in range(cfg["trials"]):
        u = haar.sample_haar_unitary(1 << n_sites, rng)
        site = int(rng.integers(1, n_sites + 1))
        w = dense_matrix(PauliString.single(n_sites, site, "xyz"[int(rng.integers(3))]))
        wt = u.conj().T @ w @ u
        dist = operators.weight_distribution(wt / scale, n_sites)
        brute = [otoc.averaged_otoc(wt, n, n_sites).value for n in range(1, n_max + 1)]
        pred = [otoc.predicted_averaged_otoc(dist, n, n_sites) for n in range(1, n_max + 1)]
        residual = np.maximum(residual, np.abs(np.subtract(brute, pred)))
        rec = otoc.reconstruct_moments(brute, n_sites).moments
        exact = otoc.moments_from_distribution(dist, n_max).moments
        moment_err = np.maximum(moment_err, np.abs(rec - exact) / np.maximum(1.0, np.abs(exact)))
    report = {
        "n_sites": n_sites,
        "trials": cfg["trials"],
        "identity_residual": {str(n): float(r) for n, r in enumerate(residual, start=1)},
        "moment_relative_error": {str(n): float(r) for n, r in enumerate(moment_err, start=1)},
        "polynomials": {
            str(n): [str(c) for c in otoc.otoc_sum_polynomial(n, n_sites)] for n in range(1, n_max + 1)
        },
        "amplitudes": {str(n): str(otoc.amplitude(n)) for n in range(1, n_max + 1)},
    }
    _write_json(art.path(cfg["out"]), report)
    return {"max_identity_residual": float(residual.max())}


def cmd_amplitudes(cfg, art):
    rows = []
    for n in range(1, cfg["max"] + 1):
        a = otoc.amplitude(n)
        log10 = math.log10(abs(a.numerator)) - math.log10(a.denominator) if a else float("-inf")
        rows.append((n, a, log10))
        print(f"{n:>3}  {str(a):>40}  {log10: .6f}")
    if cfg["out"]:
        with open(art.path(cfg["out"]), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "amplitude", "log10_abs"])
            for n, a, lg in rows:
                w.writerow([n, str(a), f"{lg:.12g}"])
    return {"nonzero": all(a != 0 for _, a, _ in rows)}


def cmd_spectrum(cfg, art):
    if cfg["model"] == "ising":
        h = ising.build_ising(ising.IsingConfig(cfg["n"], cfg["theta"]))
        stats = spectral.hamiltonian_statistics(h, cfg["n"], cfg["desymmetrize"])
        report = stats.to_dict()
        if cfg["n"] % 2 == 0:
            report["entanglement_entropy"] = spectral.bulk_entanglement_entropy(h, cfg["n"], cfg["bulk_fraction"])
    elif cfg["model"] == "qkt":
        u = collective.build_qkt_unitary(collective.QKTConfig.standard(cfg["n"], cfg["gamma"]))
        report = spectral.floquet_statistics(u).to_dict()
    else:
        raise ValueError(f"unknown model {cfg['model']!r}")
    _write_json(art.path(cfg["out"]), report)
    return {"r_bar": report["r_bar"], "r_bar_norm": report["r_bar_norm"]}


def cmd_sweep(cfg, art):
    base = {"depth": cfg["depth"], "instances": cfg["instances"], "kicks": cfg["kicks"], "seed": cfg["seed"]}
    if cfg["n"]:
        base["n"] = cfg["n"]
    if cfg["t0"]:
        base["t0"] = cfg["t0"]
    rows = sweeps.sweep(cfg["parameter"], cfg["grid"], base)
    with open(art.path(cfg["out"]), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(sweeps.COLUMNS)
        for r in rows:
            w.writerow([r["parameter"]] + [f"{r[c]:.12g}" for c in sweeps.COLUMNS[1:]])
    return {"points": len(rows)}


COMMANDS = {
    "ising": cmd_ising,
    "qkt": cmd_qkt,
    "circuit": cmd_circuit,
    "haar": cmd_haar,
    "otoc-identities": cmd_otoc_identities,
    "amplitudes": cmd_amplitudes,
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
}


def _manifest_target(cfg):
    out = cfg.get("out") or ""
    return _with_suffix(out, "manifest", ".json") if out else None


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
    except ConfigError as exc:
        parser.error(str(exc))
    art = Artifacts()
    start = time.perf_counter()
    try:
        summary = COMMANDS[args.command](cfg, art)
        manifest_path = _manifest_target(cfg)
        if manifest_path is not None:
            manifest = {
                "command": args.command,
                "config": cfg,
                "config_hash": config_hash(args.command, cfg),
                "seed": cfg["seed"],
                "version": __version__,
                "wall_time_s": time.perf_counter() - start,
                "artifacts": art.targets,
                "summary": summary,
            }
            _write_json(art.path(manifest_path), manifest)
        art.commit()
    except (ContractViolation, CapacityError) as exc:
        art.discard()
        print(f"opscramble: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        art.discard()
        print(f"opscramble {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except BaseException:
        art.discard()
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
