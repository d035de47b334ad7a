"""Parameter scans reporting long-time averages, fluctuations and Haar references."""
import os
from concurrent.futures import ProcessPoolExecutor
from math import pi

from . import circuits, collective, haar, ising, operators

PARAMETERS = ("theta", "gamma", "p_t")
MEASURES = ("mean", "variance", "ipr")
COLUMNS = (
    ["parameter", "value"]
    + [f"{m}_avg" for m in MEASURES]
    + [f"{m}_delta" for m in MEASURES]
    + [f"haar_{m}" for m in MEASURES]
)

DEFAULTS = {
    "theta": {"n": 6, "site": 0, "axis": "y", "tmax": 40.0, "steps": 401, "t0": 5.0},
    "gamma": {"n": 49, "initial": "jz", "kicks": 200, "t0": 20.0},
    "p_t": {"n": 6, "depth": 60, "instances": 40, "site": 1, "axis": "z", "t0": 30.0, "seed": 0},
}


def _series(parameter, value, cfg):
    if parameter == "theta":
        site = cfg["site"] or (cfg["n"] + 1) // 2
        times = ising.default_grid(cfg["tmax"], cfg["steps"])
        series = ising.run_ising_experiment(ising.IsingConfig(cfg["n"], value), site, cfg["axis"], times)
        return series, haar.haar_spin_half(cfg["n"]), (cfg["t0"], cfg["tmax"])
    if parameter == "gamma":
        qkt = collective.QKTConfig.standard(cfg["n"], value)
        series = collective.run_qkt_experiment(qkt, cfg["initial"], cfg["kicks"])
        return series, haar.haar_collective(cfg["n"]), (cfg["t0"], cfg["kicks"])
    ens = circuits.sample_ensemble(cfg["n"], cfg["depth"], value, cfg["seed"], cfg["instances"])
    series = circuits.ensemble_average(ens, cfg["site"], cfg["axis"], workers=1).mean
    return series, haar.haar_spin_half(cfg["n"]), (cfg["t0"], cfg["depth"])


def sweep_point(parameter, value, cfg):
    series, pred, (t0, tf) = _series(parameter, value, cfg)
    m = series.measures()
    row = {"parameter": parameter, "value": float(value)}
    for name in MEASURES:
        row[f"{name}_avg"] = operators.time_average(m[name], t0, tf)
    for name in MEASURES:
        row[f"{name}_delta"] = operators.temporal_fluctuation(m[name], t0, tf)
    row["haar_mean"] = pred.mean
    row["haar_variance"] = pred.variance
    row["haar_ipr"] = pred.ipr
    return row


def _point(args):
    return sweep_point(*args)


def sweep(parameter, grid, base=None, workers=None):
    """One summary row per grid value of ``theta``, ``gamma`` or ``p_t``."""
    if parameter not in PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter!r}")
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("empty sweep grid")
    cfg = dict(DEFAULTS[parameter])
    base = base or {}
    cfg.update({k: v for k, v in base.items() if k in cfg})
    end = {"theta": "tmax", "gamma": "kicks", "p_t": "depth"}[parameter]
    if "t0" not in base and cfg["t0"] >= cfg[end]:
        # a shortened run keeps its second half as the averaging window
        cfg["t0"] = cfg[end] / 2
    if parameter == "theta" and any(not 0 <= v <= pi / 2 + 1e-12 for v in grid):
        raise ValueError("theta values must lie in [0, pi/2]")
    jobs = [(parameter, v, cfg) for v in grid]
    workers = workers or max(1, int(os.environ.get("OPSCRAMBLE_WORKERS", "1")))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            return list(pool.map(_point, jobs))
    return [_point(j) for j in jobs]

