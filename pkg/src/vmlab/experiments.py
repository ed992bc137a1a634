"""Experiment orchestration: figure-style sweeps, manifests, rate reports.

Each figure id maps to a sweep of (mass, damping) schedule pairs over one
objective family.  The runner integrates the reference flows once, the
variable-mass scheme per pair, writes one CSV per requested comparison,
and emits a manifest tying files to resolved settings.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import hashlib
import json
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bounds import (
    distance_series,
    envelope_to_csv,
    fit_constant,
    general_shape_envelope,
)
from .config import ExperimentConfig, make_x0
from .errors import DivergenceError, SingularSystemError, VmlabError
from .integrators import SolverConfig, integrate
from .modes import (
    classify_rates,
    closed_form_cn,
    closed_form_lm,
    eigenmodes,
    estimate_decay_rate,
    fit_ab,
    lg_solution,
    mode_csv,
)
from .objectives import OBJECTIVE_FAMILIES, QuadraticSpec
from .schedules import (
    Schedule,
    assumption_grid,
    check_mass_dominated,
    check_subexponential,
)

FIGURE_IDS = ("fig1_right", "fig2", "fig3", "fig4", "fig5", "fig6")

WORKERS_ENV = "VMLAB_WORKERS"


def worker_cap() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "4")))
    except ValueError:
        return 4


@dataclasses.dataclass
class RunManifest:
    figure: str
    out_dir: str
    config: dict
    files: dict = dataclasses.field(default_factory=dict)
    wall_times: dict = dataclasses.field(default_factory=dict)
    assumption_reports: list = dataclasses.field(default_factory=list)
    failures: dict = dataclasses.field(default_factory=dict)
    notes: list = dataclasses.field(default_factory=list)
    config_hash: str = ""
    created: str = ""

    def save(self, path=None) -> Path:
        path = Path(path) if path else Path(self.out_dir) / "manifest.json"
        with open(path, "w") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path) as fh:
            return cls(**json.load(fh))


def _schedule_label(s: Schedule) -> str:
    if s.family == "zero" or (s.family in ("power", "constant")
                              and s.c0 == 0.0):
        return "zero"
    if s.family == "constant" or (s.family == "power" and s.exponent == 0.0):
        return f"const{s.c0:g}"
    if s.family == "power":
        return f"pow{s.c0:g}_a{s.exponent:g}"
    return "table"


def _report_dict(rep) -> dict:
    return {"check": rep.check, "holds": rep.holds, "c1": rep.c1,
            "c2": rep.c2, "witness": rep.witness, "detail": rep.detail}


def _figure_plan(cfg: ExperimentConfig, figure: str) -> dict:
    """Resolve the sweep, objective and solver settings for one figure."""
    if figure == "fig1_right":
        pairs = [(Schedule.power(e0, 2.0), Schedule.zero())
                 for e0 in (1.0, 0.1, 0.01)]
        return {"objective": "quadratic",
                "spec": QuadraticSpec.from_spectrum([1.0, 100.0]),
                "pairs": pairs, "gamma": cfg.gamma, "beta": cfg.beta,
                "horizon": cfg.horizon,
                "comparisons": ("vs_cn", "to_opt"),
                "write_trajectories": True}
    if figure in ("fig2", "fig3", "fig4", "fig6"):
        family = {"fig2": "gauss_quad", "fig3": "logsumexp_quad",
                  "fig4": "poly50_quad", "fig6": "gauss_quad"}[figure]
        alphas = [Schedule.power(1.0, 1.0), Schedule.power(1.0, 2.0)]
        epses = [Schedule.power(1.0, a) for a in (0.0, 1.0, 2.0, 3.0)]
        pairs = [(e, a) for a in alphas for e in epses]
        comparisons = ["vs_cn", "vs_lm", "to_opt"]
        if figure == "fig4":
            comparisons.append("bounds")
        gamma, beta = cfg.gamma, cfg.beta
        if figure == "fig6":
            gamma, beta = 1.0, 1.0
        return {"objective": family, "spec": cfg.spec, "pairs": pairs,
                "gamma": gamma, "beta": beta, "horizon": cfg.horizon,
                "comparisons": tuple(comparisons),
                "write_trajectories": False}
    if figure == "fig5":
        pairs = [
            (Schedule.power(0.1, 1.0), Schedule.zero()),
            (Schedule.power(0.1, 2.0), Schedule.zero()),
            (Schedule.power(0.1, 3.0), Schedule.power(1.0, 1.0)),
        ]
        return {"objective": "quadratic",
                "spec": QuadraticSpec.from_spectrum([1.0]),
                "pairs": pairs, "gamma": min(cfg.gamma, 0.01),
                "beta": cfg.beta, "horizon": max(cfg.horizon, 200.0),
                "comparisons": ("to_opt", "lg", "classify"),
                "write_trajectories": False}
    raise ValueError(f"unknown figure id {figure!r}")


def _to_opt_csv(path, traj, minimizer) -> None:
    d = np.linalg.norm(traj.states - minimizer[None, :], axis=1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "dist_to_opt"])
        for t, dk in zip(traj.times, d):
            w.writerow([repr(float(t)), repr(float(dk))])


def _distance_csv(path, times, distances) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "distance"])
        for t, dk in zip(times, distances):
            w.writerow([repr(float(t)), repr(float(dk))])


def _integrate_run(obj, eps, alpha, scheme, gamma, beta, horizon, x0, v0):
    cfg = SolverConfig(gamma=gamma, beta=beta, horizon=horizon, x0=x0,
                       v0=v0, scheme=scheme)
    return integrate(obj, eps, alpha, cfg)


def _lg_outputs(plan, pair_tag, eps, alpha, x0, v0, out_dir, manifest):
    """Per-mode closed-form / approximate-solution comparison CSVs."""
    spec = plan["spec"]
    dec = eigenmodes(spec, plan["beta"], eps, alpha, x0, v0)
    obj_builder = OBJECTIVE_FAMILIES["quadratic"]
    for i, m in enumerate(dec.modes):
        obj1 = obj_builder(QuadraticSpec.from_spectrum([m.lam]))
        tr = _integrate_run(obj1, eps, alpha, "VM", plan["gamma"],
                            plan["beta"], plan["horizon"],
                            np.array([m.x0]), np.array([m.v0]))
        # thin the grid for the quadrature-backed columns
        stride = max(1, len(tr.times) // 400)
        t_sub = tr.times[::stride]
        x_vm = tr.states[::stride, 0]
        x_cn = closed_form_cn(m.x0, m.beta, t_sub)
        x_lm = np.asarray(closed_form_lm(m, t_sub), dtype=float)
        ap = fit_ab(m)
        x_lg = np.empty_like(t_sub)
        lo = np.empty_like(t_sub)
        hi = np.empty_like(t_sub)
        for j, t in enumerate(t_sub):
            x_lg[j], lo[j], hi[j] = lg_solution(ap, float(t))
        name = f"{pair_tag}_mode{i}_lg.csv"
        mode_csv(out_dir / name, t_sub, x_vm, x_cn, x_lm, x_lg, lo, hi)
        manifest.files[name] = name


def run_figure(cfg: ExperimentConfig, figure: str,
               out_dir=None) -> RunManifest:
    """Execute one figure's sweep and write CSVs plus a manifest."""
    if figure not in FIGURE_IDS:
        raise ValueError(f"unknown figure id {figure!r}")
    plan = _figure_plan(cfg, figure)
    if out_dir is None:
        stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
        out_dir = Path(cfg.output_dir) / f"{figure}-{stamp}"
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    cfg_echo = cfg.as_dict()
    cfg_echo["figure_plan"] = {
        "objective": plan["objective"], "gamma": plan["gamma"],
        "beta": plan["beta"], "horizon": plan["horizon"],
        "comparisons": list(plan["comparisons"]),
        "pairs": [[_schedule_label(e), _schedule_label(a)]
                  for e, a in plan["pairs"]],
    }
    blob = json.dumps(cfg_echo, sort_keys=True).encode()
    manifest = RunManifest(
        figure=figure, out_dir=str(out_dir), config=cfg_echo,
        config_hash=hashlib.sha256(blob).hexdigest(),
        created=_dt.datetime.now().isoformat(timespec="seconds"))
    manifest.notes.append("beta defaults to 1.0 by choice; the experiment "
                          "design does not pin it")
    if figure == "fig6":
        warnings.warn("fig6 runs gamma = beta = 1, outside the regime the "
                      "guarantees cover; results are exploratory",
                      stacklevel=2)
        manifest.notes.append("OUT OF THEORY: gamma = beta = 1 sweep")

    grid = assumption_grid(plan["horizon"], plan["gamma"])
    for eps, alpha in plan["pairs"]:
        for rep in (check_mass_dominated(eps, alpha, grid),
                    check_subexponential(eps, alpha, grid)):
            d = _report_dict(rep)
            d["pair"] = [_schedule_label(eps), _schedule_label(alpha)]
            manifest.assumption_reports.append(d)

    spec = plan["spec"]
    n = spec.dimension
    obj = OBJECTIVE_FAMILIES[plan["objective"]](spec)
    x0 = make_x0(cfg.x0_mode, n, cfg.seed,
                 explicit=cfg.x0 if cfg.x0 is not None else None)
    if len(x0) != n:
        x0 = make_x0("signs", n, cfg.seed)
    v0 = (np.asarray(cfg.v0, dtype=float) if cfg.v0 is not None
          and len(cfg.v0) == n else np.zeros(n))
    gamma, beta, horizon = plan["gamma"], plan["beta"], plan["horizon"]
    comparisons = plan["comparisons"]

    t0 = time.perf_counter()
    ref_cn = None
    if any(c in comparisons for c in ("vs_cn", "bounds")) or \
            plan["write_trajectories"]:
        ref_cn = _integrate_run(obj, Schedule.zero(), Schedule.zero(),
                                "CN", gamma, beta, horizon, x0, v0)
        if plan["write_trajectories"]:
            ref_cn.to_csv(out_dir / "traj_cn.csv")
            manifest.files["traj_cn.csv"] = "traj_cn.csv"
    ref_lm = {}
    if "vs_lm" in comparisons:
        for _, alpha in plan["pairs"]:
            key = _schedule_label(alpha)
            if key not in ref_lm:
                ref_lm[key] = _integrate_run(
                    obj, Schedule.zero(), alpha, "LM", gamma, beta,
                    horizon, x0, v0)
    manifest.wall_times["references"] = time.perf_counter() - t0

    def one_pair(pair):
        eps, alpha = pair
        tag = f"vm_e-{_schedule_label(eps)}_a-{_schedule_label(alpha)}"
        start = time.perf_counter()
        out = {"tag": tag, "files": {}, "failure": None}
        try:
            tr = _integrate_run(obj, eps, alpha, "VM", gamma, beta,
                                horizon, x0, v0)
        except (DivergenceError, SingularSystemError) as exc:
            out["failure"] = f"{type(exc).__name__}: {exc}"
            out["wall"] = time.perf_counter() - start
            return out
        if plan["write_trajectories"]:
            name = f"{tag}_traj.csv"
            tr.to_csv(out_dir / name)
            out["files"][name] = name
        if "to_opt" in comparisons and obj.minimizer is not None:
            name = f"{tag}_to_opt.csv"
            _to_opt_csv(out_dir / name, tr, obj.minimizer)
            out["files"][name] = name
        if "vs_cn" in comparisons and ref_cn is not None:
            name = f"{tag}_vs_cn.csv"
            _distance_csv(out_dir / name, tr.times,
                          distance_series(tr, ref_cn))
            out["files"][name] = name
        if "vs_lm" in comparisons:
            name = f"{tag}_vs_lm.csv"
            _distance_csv(out_dir / name, tr.times,
                          distance_series(tr, ref_lm[_schedule_label(alpha)]))
            out["files"][name] = name
        if "bounds" in comparisons and ref_cn is not None:
            env = general_shape_envelope(eps, alpha, beta, tr.times,
                                         kind="general_cn")
            d = distance_series(tr, ref_cn)
            c_fit = fit_constant(d, env.values)
            fitted = dataclasses.replace(
                env, values=c_fit * env.values,
                constants={"C": c_fit})
            name = f"{tag}_bound_vs_cn.csv"
            envelope_to_csv(out_dir / name, tr.times, d, fitted,
                            sidecar_path=out_dir / f"{tag}_bound_meta.json")
            out["files"][name] = name
            out["files"][f"{tag}_bound_meta.json"] = \
                f"{tag}_bound_meta.json"
        if "classify" in comparisons:
            vs_cn, vs_lm = classify_rates(eps, alpha)
            name = f"{tag}_rateclass.json"
            with open(out_dir / name, "w") as fh:
                json.dump({"vs_cn": dataclasses.asdict(vs_cn),
                           "vs_lm": dataclasses.asdict(vs_lm)},
                          fh, indent=2, sort_keys=True)
                fh.write("\n")
            out["files"][name] = name
        out["wall"] = time.perf_counter() - start
        return out

    with ThreadPoolExecutor(max_workers=worker_cap()) as pool:
        results = list(pool.map(one_pair, plan["pairs"]))

    for res in results:
        manifest.files.update(res["files"])
        manifest.wall_times[res["tag"]] = res.get("wall", 0.0)
        if res["failure"]:
            manifest.failures[res["tag"]] = res["failure"]

    if "lg" in comparisons:
        for eps, alpha in plan["pairs"]:
            tag = f"vm_e-{_schedule_label(eps)}_a-{_schedule_label(alpha)}"
            _lg_outputs(plan, tag, eps, alpha, x0, v0, out_dir, manifest)

    manifest.save()
    return manifest


def validate_config(cfg: ExperimentConfig) -> list:
    """Assumption reports for every (eps, alpha) pair in the config."""
    grid = assumption_grid(cfg.horizon, cfg.gamma)
    reports = []
    for eps in cfg.eps_schedules:
        for alpha in cfg.alpha_schedules:
            for rep in (check_mass_dominated(eps, alpha, grid),
                        check_subexponential(eps, alpha, grid)):
                d = _report_dict(rep)
                d["pair"] = [_schedule_label(eps), _schedule_label(alpha)]
                reports.append(d)
    return reports


def run_integrate(cfg: ExperimentConfig, out_dir=None) -> RunManifest:
    """Plain sweep over the config's own schedule pairs (no figure plan)."""
    if out_dir is None:
        stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
        out_dir = Path(cfg.output_dir) / f"integrate-{stamp}"
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = cfg.spec
    obj = OBJECTIVE_FAMILIES[cfg.objective](spec)
    n = spec.dimension
    x0 = make_x0(cfg.x0_mode, n, cfg.seed, explicit=cfg.x0)
    v0 = np.asarray(cfg.v0, dtype=float) if cfg.v0 else np.zeros(n)
    cfg_echo = cfg.as_dict()
    blob = json.dumps(cfg_echo, sort_keys=True).encode()
    manifest = RunManifest(
        figure="integrate", out_dir=str(out_dir), config=cfg_echo,
        config_hash=hashlib.sha256(blob).hexdigest(),
        created=_dt.datetime.now().isoformat(timespec="seconds"))
    for eps in cfg.eps_schedules:
        for alpha in cfg.alpha_schedules:
            tag = f"vm_e-{_schedule_label(eps)}_a-{_schedule_label(alpha)}"
            start = time.perf_counter()
            try:
                tr = _integrate_run(obj, eps, alpha, "VM", cfg.gamma,
                                    cfg.beta, cfg.horizon, x0, v0)
            except (DivergenceError, SingularSystemError) as exc:
                manifest.failures[tag] = f"{type(exc).__name__}: {exc}"
                continue
            name = f"{tag}_traj.csv"
            tr.to_csv(out_dir / name)
            manifest.files[name] = name
            name = f"{tag}_diag.csv"
            tr.diagnostics_to_csv(out_dir / name, eps, obj)
            manifest.files[name] = name
            manifest.wall_times[tag] = time.perf_counter() - start
    manifest.save()
    return manifest


def report_rates(manifest_path) -> dict:
    """Fitted tail decay slopes vs predicted rate classes, per run."""
    manifest = RunManifest.load(manifest_path)
    out_dir = Path(manifest.out_dir)
    pairs = {}
    plan = manifest.config.get("figure_plan", {})
    beta = plan.get("beta", manifest.config.get("beta", 1.0))
    report = {"figure": manifest.figure, "cn_slope": -1.0 / beta,
              "runs": []}
    for name in sorted(manifest.files):
        if not name.endswith("_to_opt.csv"):
            continue
        data = np.genfromtxt(out_dir / name, delimiter=",", names=True)
        t = data["t"]
        d = data["dist_to_opt"]
        window = (0.5 * t[-1], 0.95 * t[-1])
        entry = {"file": name}
        try:
            slope = estimate_decay_rate(d, t, window)
            entry["tail_slope"] = slope
            # series may underflow; flag when the usable window shrank
            usable = d[(t >= window[0]) & (t <= window[1])]
            if np.any(usable == 0.0):
                entry["note"] = "window shrunk past underflowed points"
        except VmlabError as exc:
            entry["error"] = str(exc)
            report["runs"].append(entry)
            continue
        tag = name[:-len("_to_opt.csv")]
        eps, alpha = _schedules_from_tag(tag)
        if eps is not None:
            vs_cn, vs_lm = classify_rates(eps, alpha)
            entry["predicted_vs_cn"] = vs_cn.verdict
            entry["predicted_vs_lm"] = vs_lm.verdict
            entry["agrees_vs_cn"] = _verdict_agrees(
                slope, -1.0 / beta, vs_cn.verdict)
        report["runs"].append(entry)
    return report


def _schedules_from_tag(tag):
    """Recover the schedule pair from a run tag like vm_e-pow1_a1_a-zero."""
    try:
        _, eps_part, alpha_part = tag.split("_e-")[0], \
            tag.split("_e-")[1].split("_a-")[0], tag.split("_a-")[1]
        return _schedule_from_label(eps_part), \
            _schedule_from_label(alpha_part)
    except (IndexError, ValueError):
        return None, None


def _schedule_from_label(label: str):
    if label == "zero":
        return Schedule.zero()
    if label.startswith("const"):
        return Schedule.constant(float(label[len("const"):]))
    if label.startswith("pow"):
        c0, a = label[len("pow"):].split("_a")
        return Schedule.power(float(c0), float(a))
    raise ValueError(f"unparseable schedule label {label!r}")


def _verdict_agrees(slope, cn_slope, verdict, tol=0.05) -> bool:
    if verdict == "faster":
        return slope < cn_slope - 0.005
    if verdict == "slower":
        return slope > cn_slope + 0.005
    if verdict == "as-fast":
        return abs(slope - cn_slope) <= abs(cn_slope) * tol
    return False
