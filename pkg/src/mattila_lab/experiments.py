"""Experiment configs and the drivers behind each CLI subcommand.

All randomness derives from the config's root seed through
:func:`mattila_lab.common.stage_seed`, with a fixed stage index per driver
step, so a config reproduces its output files byte for byte.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bundled import BUNDLED, bundled
from .common import stage_seed
from .configmaps import ConfigMap, pushforward, support_lower_bound
from .fourier import (FrequencySet, annulus_energy, classic_mattila_integral, decay_slope,
                      spherical_average_curve)
from .identity import (polar_mattila_compare, probe_ensemble, ratio_spread, sl2_average_decay,
                       verify_identity)
from .measures import Mollifier, PointMassMeasure, frostman_fit, ifs_generate, mollify
from .serialize import (ifs_from_dict, measure_from_dict, measure_to_dict, write_csv, write_grid,
                        write_json)
from .groups import GroupWindow

EXPERIMENTS = ("build-measure", "fourier-profile", "mattila-verify", "falconer-distance",
               "product-distances", "sum-product", "sl2-probes")
CONFIG_KEYS = {"experiment", "measures", "epsilons", "seed", "window", "output", "params"}


class ConfigError(ValueError):
    """Invalid experiment config; the message names the file and line."""


@dataclass
class ExperimentConfig:
    experiment: str
    measures: list = field(default_factory=list)
    epsilons: list = field(default_factory=lambda: [2.0**-4, 2.0**-5, 2.0**-6])
    seed: int = 0
    window: dict = field(default_factory=dict)
    output: str = "out"
    params: dict = field(default_factory=dict)
    source: str = "<defaults>"


def _line_of(text: str, key: str) -> int:
    for i, line in enumerate(text.splitlines(), 1):
        if re.search(rf'"{re.escape(key)}"\s*:', line):
            return i
    return 1


def validate(cfg: ExperimentConfig, text: str = "") -> ExperimentConfig:
    def fail(key, msg):
        raise ConfigError(f"{cfg.source}:{_line_of(text, key) if text else 1}: {key}: {msg}")

    if cfg.experiment not in EXPERIMENTS:
        fail("experiment", f"unknown experiment {cfg.experiment!r}; choose from {list(EXPERIMENTS)}")
    e = cfg.epsilons
    if not isinstance(e, list) or not e:
        fail("epsilons", "must be a non-empty list")
    for v in e:
        if not isinstance(v, (int, float)) or v <= 0 or abs(np.log2(v) - round(np.log2(v))) > 1e-12:
            fail("epsilons", f"{v!r} is not a positive dyadic")
    if any(b >= a for a, b in zip(e, e[1:])):
        fail("epsilons", "ladder must be strictly decreasing")
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or not 0 <= cfg.seed < 2**64:
        fail("seed", "must be an integer in [0, 2^64)")
    for m in cfg.measures:
        if not isinstance(m, dict) or len(set(m) & {"bundled", "file", "ifs", "points"}) != 1:
            fail("measures", "each entry needs exactly one of bundled, file, ifs, points")
        if "bundled" in m and m["bundled"] not in BUNDLED:
            fail("measures", f"unknown bundled measure {m['bundled']!r}")
        if "file" in m and not Path(m["file"]).exists():
            fail("measures", f"file {m['file']!r} does not exist")
    if cfg.window:
        try:
            window_of(cfg)
        except (ValueError, TypeError) as exc:
            fail("window", str(exc))
    if not isinstance(cfg.params, dict):
        fail("params", "must be an object")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}:1: cannot read config ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        k = sorted(unknown)[0]
        raise ConfigError(f"{path}:{_line_of(text, k)}: {k}: unknown key")
    if "experiment" not in raw:
        raise ConfigError(f"{path}:1: experiment: missing required key")
    cfg = ExperimentConfig(**raw, source=str(path))
    return validate(cfg, text)


def resolve_measure(spec: dict) -> tuple[str, PointMassMeasure]:
    if "bundled" in spec:
        return spec["bundled"], bundled(spec["bundled"])
    if "file" in spec:
        return Path(spec["file"]).stem, measure_from_dict(json.loads(Path(spec["file"]).read_text()))
    if "ifs" in spec:
        return "ifs", ifs_generate(ifs_from_dict(spec["ifs"]))
    return "inline", measure_from_dict(spec["points"])


def window_of(cfg: ExperimentConfig) -> GroupWindow | None:
    w = cfg.window
    if not w:
        return None
    kind = w["kind"]
    if kind == "sl2":
        return GroupWindow.sl2(float(w.get("C", 2.0)), w.get("chart", "KP"))
    if kind == "dilation-block":
        return GroupWindow.dilation_block(int(w.get("blocks", 2)), int(w.get("block_dim", 2)),
                                          float(w.get("C", 2.0)))
    if kind in ("orthogonal2", "orthogonal3"):
        return GroupWindow.orthogonal(int(kind[-1]))
    if kind == "trivial":
        return GroupWindow.trivial(int(w.get("dim", 2)))
    raise ValueError(f"unknown window kind {kind!r}")


def _measures(cfg, default: list[str]):
    specs = cfg.measures or [{"bundled": n} for n in default]
    return [resolve_measure(s) for s in specs]


# ---------------------------------------------------------------------------
# drivers; each returns a JSON-able summary and writes files under ``out``


def run_build_measure(cfg: ExperimentConfig, out: Path) -> dict:
    summary = {}
    rows = []
    for j, (name, mu) in enumerate(_measures(cfg, ["cantor-8"])):
        write_json(out / f"measure_{j}_{name}.json", measure_to_dict(mu))
        seed = stage_seed(cfg.seed, 1, j)
        try:
            fit = frostman_fit(mu, seed=seed)
            rows += [(name, r, m, seed, "max-over-centers ball mass") for r, m in zip(fit.radii, fit.masses)]
            summary[name] = {"atoms": mu.n_atoms, "frostman_exponent": fit.exponent,
                             "frostman_residual": fit.residual}
        except ValueError as exc:
            summary[name] = {"atoms": mu.n_atoms, "frostman_error": str(exc)}
        if cfg.params.get("mollify", True):
            e = cfg.epsilons[0]
            rho = mollify(mu, Mollifier(mu.dim, e), e / 4)
            write_grid(out / f"grid_{j}_{name}.csv", rho)
            summary[name]["grid_mass"] = rho.mass
    write_csv(out / "frostman.csv", ["measure", "radius", "max_ball_mass", "seed", "tolerance"], rows)
    return summary


def run_fourier_profile(cfg: ExperimentConfig, out: Path) -> dict:
    p = cfg.params
    radii = [float(r) for r in p.get("radii", [8, 16, 32, 64, 128, 256])]
    summary = {}
    erows, srows, prows = [], [], []
    tol = "slope +/- 0.15"
    for j, (name, mu) in enumerate(_measures(cfg, ["cantor-dust-8"])):
        seed = stage_seed(cfg.seed, 2, j)
        sampler = FrequencySet.default(mu.dim, max(radii), seed=seed)
        vals = [annulus_energy(mu, R, sampler) for R in radii]
        erows += [(name, R, v.value, v.stderr, seed, tol) for R, v in zip(radii, vals)]
        slope = decay_slope([(R, v.value) for R, v in zip(radii, vals)])
        summary[name] = {"decay_slope": slope}
        if mu.dim in (2, 3):
            curve = spherical_average_curve(mu, np.asarray(radii), int(p.get("n_dirs", 256)))
            srows += [(name, r, v, e, seed, "half-direction difference") for r, v, e in curve.rows()]
            summary[name]["spherical_slope"] = decay_slope(list(zip(curve.radii, curve.values)))
            m = Mollifier(mu.dim, cfg.epsilons[0])
            cmp = polar_mattila_compare(mu, m, float(p.get("r_max", 8.0)),
                                        int(p.get("n_dirs", 256)), int(p.get("n_group", 256)),
                                        seed=seed)
            prows.append((name, m.epsilon, cmp.polar, cmp.group, cmp.ratio, seed, "2 pi +/- 5%"))
            summary[name]["polar_group_ratio"] = cmp.ratio
    write_csv(out / "energy.csv", ["measure", "R", "value", "stderr", "seed", "tolerance"], erows)
    write_csv(out / "spherical.csv", ["measure", "r", "value", "stderr", "seed", "tolerance"], srows)
    write_csv(out / "polar_group.csv",
              ["measure", "epsilon", "polar", "group", "ratio", "seed", "tolerance"], prows)
    write_csv(out / "summary.csv", ["measure", "decay_slope", "seed", "tolerance"],
              [(n, s["decay_slope"], cfg.seed, tol) for n, s in summary.items()])
    return summary


def _report_rows(name, reports, tol):
    return [(r.map, name, r.epsilon, r.lhs, r.lhs_stderr, r.rhs, r.rhs_stderr, r.ratio, r.seed, tol)
            for r in reports]


_REPORT_HEADER = ["map", "measure", "epsilon", "lhs", "lhs_stderr", "rhs", "rhs_stderr", "ratio",
                  "seed", "tolerance"]


def run_mattila_verify(cfg: ExperimentConfig, out: Path) -> dict:
    p = cfg.params
    cmap = ConfigMap(p.get("map", "distance"), int(p.get("d", 2)), int(p.get("k", 1)))
    default = {"distance": ["square-cloud-64"], "signed-area": ["arc-E", "sum-FH"],
               "dot-sum": ["arc-E", "patch-F", "patch-H"],
               "product-of-distances": ["cantor-dust-4"]}[cmap.kind]
    named = _measures(cfg, default)
    reps = verify_identity(cmap, [m for _, m in named], window_of(cfg), cfg.epsilons,
                           stage_seed(cfg.seed, 3), int(p.get("n_pairs", 1_000_000)),
                           p.get("n_group"), p.get("sampler_radius"))
    label = "+".join(n for n, _ in named)
    write_json(out / "reports.json", [r.to_dict() for r in reps])
    tol = "ratio spread <= 2"
    write_csv(out / "summary.csv", _REPORT_HEADER, _report_rows(label, reps, tol))
    return {"map": cmap.describe(), "ratio_spread": ratio_spread(reps),
            "ratios": [r.ratio for r in reps]}


def run_falconer_distance(cfg: ExperimentConfig, out: Path) -> dict:
    p = cfg.params
    rows, reps_all = [], {}
    for j, (name, mu) in enumerate(_measures(cfg, ["square-cloud-64"])):
        seed = stage_seed(cfg.seed, 4, j)
        cmap = ConfigMap("distance", mu.dim)
        reps = verify_identity(cmap, mu, None, cfg.epsilons, seed, int(p.get("n_pairs", 1_000_000)),
                               sampler_radius=p.get("sampler_radius"))
        reps_all[name] = [r.to_dict() for r in reps]
        for r in reps:
            m = Mollifier(mu.dim, r.epsilon)
            h = pushforward(cmap, mu, m, stage_seed(seed, 1), int(p.get("n_pairs", 1_000_000)))
            sb = support_lower_bound(h)
            mi = classic_mattila_integral(mu, float(p.get("r_max", 32.0)), mollifier=m) \
                if mu.dim in (2, 3) else None
            rows.append((name, r.epsilon, r.lhs, r.rhs, r.ratio,
                         r.diagnostics.get("orbit_ratio", float("nan")), sb.lower_bound, sb.occupied,
                         mi.value if mi else float("nan"), seed, "ratio spread <= 2"))
    write_json(out / "reports.json", reps_all)
    write_csv(out / "distance.csv", ["measure", "epsilon", "lhs", "rhs", "ratio", "orbit_ratio",
                                     "support_lower_bound", "occupied_support", "mattila_integral",
                                     "seed", "tolerance"], rows)
    return {n: {"ratio_spread": float(np.max([r["ratio"] for r in v]) / np.min([r["ratio"] for r in v]))}
            for n, v in reps_all.items()}


def run_product_distances(cfg: ExperimentConfig, out: Path) -> dict:
    p = cfg.params
    ks = [int(k) for k in p.get("ks", [1, 2, 3])]
    (name, mu), = _measures(cfg, ["cantor-dust-4"])[:1]
    rows, summary = [], {}
    for k in ks:
        cmap = ConfigMap("product-of-distances", mu.dim, k)
        seed = stage_seed(cfg.seed, 5, k)
        w = GroupWindow.dilation_block(k, mu.dim, float(cfg.window.get("C", 2.0)) if cfg.window else 2.0)
        reps = verify_identity(cmap, mu, w, cfg.epsilons, seed, int(p.get("n_pairs", 200_000)),
                               int(p.get("n_group", 64)))
        rows += _report_rows(name, reps, "exploratory: rhs finite, ratio spread reported")
        summary[f"k={k}"] = {"ratio_spread": ratio_spread(reps), "rhs": [r.rhs for r in reps],
                             "threshold_dim": mu.dim / 2 + 1 / (4 * k - 1)}
    write_csv(out / "summary.csv", _REPORT_HEADER, rows)
    return summary


def _sum_product_cases(seed: int):
    from .bundled import cantor_dust, interval_cloud, origin, square_cloud
    return {
        "E=origin,F=H=square": [origin(2), square_cloud(256, seed), square_cloud(256, seed + 1)],
        "A=origin,B=C=interval": [origin(1), interval_cloud(256, seed), interval_cloud(256, seed + 1)],
        "E=F=H=cantor-dust": [cantor_dust(4)] * 3,
        "E=F=H=square": [square_cloud(64, seed + 2)] * 3,
    }


def run_sum_product(cfg: ExperimentConfig, out: Path) -> dict:
    p = cfg.params
    rows, summary = [], {}
    for j, (case, ms) in enumerate(_sum_product_cases(int(p.get("cloud_seed", 7))).items()):
        d = ms[0].dim
        cmap = ConfigMap("dot-sum", d)
        try:
            s_dim = frostman_fit(ms[0]).exponent
        except ValueError:
            s_dim = 0.0
        lbs = []
        for e in cfg.epsilons:
            seed = stage_seed(cfg.seed, 6, j)
            h = pushforward(cmap, ms, Mollifier(d, e), seed, int(p.get("n_pairs", 200_000)))
            sb = support_lower_bound(h)
            lbs.append(sb.lower_bound)
            rows.append((case, e, sb.lower_bound, sb.occupied, sb.lower_bound / e, s_dim, seed,
                         "sharpness: lower_bound <= 4 eps"))
        summary[case] = {"support_lower_bound": lbs, "E_frostman_exponent": s_dim}
    write_csv(out / "sum_product.csv", ["case", "epsilon", "support_lower_bound", "occupied_support",
                                        "bound_over_eps", "E_frostman_exponent", "seed", "tolerance"],
              rows)
    return summary


def run_sl2_probes(cfg: ExperimentConfig, out: Path) -> dict:
    p = cfg.params
    w = window_of(cfg) or GroupWindow.sl2()
    rows, summary = [], {}
    for j, (name, mu) in enumerate(_measures(cfg, ["cantor-dust-8"])):
        seed = stage_seed(cfg.seed, 7, j)
        rep = sl2_average_decay(mu, w, n=int(p.get("n_group", 20_000)), seed=seed)
        rows += [("average", name, R, v, e, seed, "slope <= -s + 0.3")
                 for R, v, e in zip(rep.radii, rep.values, rep.stderr)]
        summary[name] = {"sl2_average_slope": rep.slope}
    prow = []
    n_pairs = int(p.get("n_pairs", 32))
    for regime in ("critical", "off-critical"):
        ens = probe_ensemble(regime, n_pairs=n_pairs, seed=stage_seed(cfg.seed, 8), window=w)
        prow += [(regime, t, v, stage_seed(cfg.seed, 8),
                  "amplitude slope >= -1.5" if regime == "critical" else "amplitude slope <= -2")
                 for t, v in zip(ens.ts, ens.mean_power)]
        summary[regime] = {"power_slope": ens.power_slope, "amplitude_slope": ens.amplitude_slope}
    write_csv(out / "sl2_average.csv", ["quantity", "measure", "R", "value", "stderr", "seed",
                                        "tolerance"], rows)
    write_csv(out / "sl2_probes.csv", ["regime", "t", "mean_power", "seed", "tolerance"], prow)
    return summary


DRIVERS = {
    "build-measure": run_build_measure,
    "fourier-profile": run_fourier_profile,
    "mattila-verify": run_mattila_verify,
    "falconer-distance": run_falconer_distance,
    "product-distances": run_product_distances,
    "sum-product": run_sum_product,
    "sl2-probes": run_sl2_probes,
}


def run(cfg: ExperimentConfig) -> dict:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    summary = DRIVERS[cfg.experiment](cfg, out)
    write_json(out / "summary.json", {"experiment": cfg.experiment, "seed": cfg.seed,
                                      "epsilons": cfg.epsilons, "results": summary})
    return summary
