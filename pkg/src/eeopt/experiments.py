"""Experiment drivers: configuration, solver dispatch, sweeps, Pareto
tracing, iteration benchmarks, the grid-search oracle, and CSV/JSON output.

A single JSON configuration describes every run.  The drivers return plain
payload dictionaries (column names, rows, and full per-solve reports) that
:func:`write_csv` and :func:`write_json` serialize; the command line is a
thin wrapper around these functions.

Monte Carlo trials are independent: trial ``t`` uses scenario seed
``seed + t``, trials may run concurrently (``EEOPT_THREADS`` caps the pool)
and results are aggregated in trial order regardless of completion order.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, InfeasibleError, InnerSolverError, IterationCapError
from .fractional import DinkelbachConfig
from .model import (
    EeMetric,
    InterferenceTemperature,
    LinkParams,
    MinRate,
    NetworkInstance,
    Scalar,
    SelfInterference,
    TotalPower,
    VectorLmmse,
    make_constraint,
    metric_value,
    rate,
)
from .monotonic import BrbConfig, solve_global
from .report import SolveReport, verify_report
from .scenarios import (
    LteScenarioConfig,
    MassiveMimoScenarioConfig,
    dbw_to_watt,
    generate_lte,
    generate_massive_mimo,
)
from .sequential import ScaConfig, sca_gee, sca_wmee, sum_rate_max

__all__ = [
    "ExperimentConfig",
    "build_instance",
    "run_solve",
    "run_sweep",
    "run_pareto",
    "run_benchmark",
    "grid_search",
    "iterations_to_convergence",
    "write_csv",
    "write_json",
    "read_csv",
]

_SCENARIOS = ("lte", "massive-mimo")
_SOLVERS = ("monotonic", "sequential", "sum-rate", "full-power", "grid")
_METRICS = tuple(m.value for m in EeMetric)
_EXPLICIT_KINDS = ("scalar", "self-interference", "vector-lmmse")

#: Recognized tolerance keys with their defaults.
_TOLERANCES = {
    "dinkelbach_epsilon": 1e-6,
    "dinkelbach_max_iter": 50,
    "brb_rel_gap": 1e-4,
    "brb_max_boxes": 200_000,
    "sca_outer_tol": 1e-6,
    "sca_max_outer": 100,
    "grid_points": 200,
    "rse": 1e-4,
}

_CONFIG_KEYS = (
    "scenario",
    "scenario_params",
    "metric",
    "solver",
    "sweep",
    "pareto",
    "trials",
    "seed",
    "tolerances",
    "output",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated description of one experiment.

    ``scenario`` is ``"lte"``, ``"massive-mimo"``, or a mapping describing
    an explicit instance (see :func:`build_instance`); ``scenario_params``
    feeds the scenario generator.  ``solver`` may be a single name or a
    list (a sweep then produces one row group per solver).  ``sweep`` holds
    the swept maximum-power values in dBW, ``directions`` the Pareto
    direction count.  All validation problems are reported at once.
    """

    scenario: object = "massive-mimo"
    scenario_params: dict = field(default_factory=dict)
    metric: str = "gee"
    solver: tuple = ("monotonic",)
    sweep_parameter: str = "p_max_dbw"
    sweep_values: tuple | None = None
    directions: int | None = None
    trials: int = 1
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        problems = []
        if isinstance(self.solver, str):
            object.__setattr__(self, "solver", (self.solver,))
        else:
            object.__setattr__(self, "solver", tuple(self.solver))
        if isinstance(self.scenario, str):
            if self.scenario not in _SCENARIOS:
                problems.append(
                    f"unknown scenario {self.scenario!r}; expected one of "
                    f"{_SCENARIOS} or an explicit-instance mapping"
                )
        elif isinstance(self.scenario, dict):
            kind = self.scenario.get("kind")
            if kind not in _EXPLICIT_KINDS:
                problems.append(
                    f"explicit scenario kind {kind!r} not in {_EXPLICIT_KINDS}"
                )
        else:
            problems.append("scenario must be a name or a mapping")
        if self.metric not in _METRICS:
            problems.append(f"unknown metric {self.metric!r}; expected {_METRICS}")
        for s in self.solver:
            if s not in _SOLVERS:
                problems.append(f"unknown solver {s!r}; expected {_SOLVERS}")
            elif s == "sequential" and self.metric not in ("gee", "wmee"):
                problems.append(
                    "the sequential solver handles the gee and wmee metrics only"
                )
        if not self.solver:
            problems.append("at least one solver is required")
        if self.sweep_parameter != "p_max_dbw":
            problems.append(
                f"sweep parameter must be 'p_max_dbw', got {self.sweep_parameter!r}"
            )
        if self.sweep_values is not None:
            vals = tuple(float(v) for v in self.sweep_values)
            object.__setattr__(self, "sweep_values", vals)
            if not vals:
                problems.append("sweep values must be nonempty")
            elif not all(math.isfinite(v) for v in vals):
                problems.append("sweep values must be finite")
            elif list(vals) != sorted(vals):
                problems.append("sweep values must be sorted ascending")
        if self.directions is not None and int(self.directions) < 1:
            problems.append("pareto direction count must be at least 1")
        if int(self.trials) < 1:
            problems.append("trials must be at least 1")
        tol = dict(_TOLERANCES)
        for key, val in dict(self.tolerances).items():
            if key not in _TOLERANCES:
                problems.append(f"unknown tolerance {key!r}; expected {tuple(_TOLERANCES)}")
                continue
            val = float(val) if "max" not in key and "points" not in key else int(val)
            if not val > 0:
                problems.append(f"tolerance {key!r} must be positive")
            tol[key] = val
        object.__setattr__(self, "tolerances", tol)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))
        if self.directions is not None:
            object.__setattr__(self, "directions", int(self.directions))
        if problems:
            raise ConfigError(problems)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        problems = [f"unknown config key {k!r}" for k in data if k not in _CONFIG_KEYS]
        if problems:
            raise ConfigError(problems)
        kwargs = {}
        for key in ("scenario", "scenario_params", "metric", "solver",
                    "trials", "seed", "tolerances", "output"):
            if key in data:
                kwargs[key] = data[key]
        sweep = data.get("sweep")
        if sweep is not None:
            kwargs["sweep_parameter"] = sweep.get("parameter", "p_max_dbw")
            kwargs["sweep_values"] = sweep.get("values")
        pareto = data.get("pareto")
        if pareto is not None:
            kwargs["directions"] = pareto.get("directions")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {
            "scenario": self.scenario,
            "scenario_params": dict(self.scenario_params),
            "metric": self.metric,
            "solver": list(self.solver),
            "trials": self.trials,
            "seed": self.seed,
            "tolerances": dict(self.tolerances),
            "output": self.output,
        }
        if self.sweep_values is not None:
            out["sweep"] = {
                "parameter": self.sweep_parameter,
                "values": list(self.sweep_values),
            }
        if self.directions is not None:
            out["pareto"] = {"directions": self.directions}
        return out


# ---------------------------------------------------------------------------
# instance construction
# ---------------------------------------------------------------------------


def _links_from_mapping(spec: dict, k: int) -> tuple[LinkParams, ...]:
    def per_link(name, default):
        val = spec.get(name, default)
        arr = np.broadcast_to(np.asarray(val, dtype=np.float64), (k,))
        return arr

    psi = per_link("psi", 1.0)
    p_max = per_link("p_max", 1.0)
    mu = per_link("mu", 1.0)
    weight = per_link("weight", 1.0)
    return tuple(
        LinkParams(psi=psi[i], p_max=p_max[i], mu=mu[i], weight=weight[i])
        for i in range(k)
    )


def _explicit_instance(spec: dict) -> NetworkInstance:
    kind = spec["kind"]
    try:
        if kind == "scalar":
            model = Scalar(
                alpha=spec["alpha"], beta=spec["beta"], sigma2=spec["sigma2"]
            )
        elif kind == "self-interference":
            model = SelfInterference(
                alpha=spec["alpha"],
                phi=spec["phi"],
                beta=spec["beta"],
                sigma2=spec["sigma2"],
            )
        else:
            v = np.asarray(spec["v_real"], dtype=np.float64) + 1j * np.asarray(
                spec["v_imag"], dtype=np.float64
            )
            u_re = spec.get("u_real")
            u_im = spec.get("u_imag")
            u = np.zeros(v.shape[1:], dtype=complex)
            if u_re is not None:
                u = u + np.asarray(u_re, dtype=np.float64)
            if u_im is not None:
                u = u + 1j * np.asarray(u_im, dtype=np.float64)
            model = VectorLmmse(
                r=int(spec["r"]), v=v, u=u, sigma2=spec["sigma2"]
            )
        links = _links_from_mapping(spec.get("links", {}), model.k)
        inst = NetworkInstance(
            k=model.k,
            bandwidth=float(spec.get("bandwidth", 1.0)),
            links=links,
            sinr=model,
        )
        specs = []
        for c in spec.get("constraints", ()):
            kind = c.get("kind")
            if kind == "min-rate":
                raw = MinRate(link=int(c["link"]), r_min=c["r_min"])
            elif kind == "total-power":
                raw = TotalPower(p_tot=c["p_tot"])
            elif kind == "interference-temperature":
                raw = InterferenceTemperature(coeffs=c["coeffs"], i_max=c["i_max"])
            else:
                raise ConfigError(f"unknown constraint kind {kind!r}")
            specs.append(make_constraint(raw, inst))
        if specs:
            inst = replace(inst, constraints=tuple(specs))
        return inst
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"explicit scenario is missing field {exc.args[0]!r}")
    except ValueError as exc:
        raise ConfigError(f"explicit scenario is malformed: {exc}")


def build_instance(
    config: ExperimentConfig, *, seed=None, p_max_dbw=None
) -> NetworkInstance:
    """Materialize the configured scenario into a problem instance.

    ``seed`` overrides the configured seed (per-trial seeds), ``p_max_dbw``
    the power budget (sweeps).  Explicit instances are deterministic and
    ignore the seed.
    """
    if isinstance(config.scenario, dict):
        inst = _explicit_instance(config.scenario)
        if p_max_dbw is not None:
            p = dbw_to_watt(p_max_dbw)
            inst = replace(
                inst, links=tuple(replace(l, p_max=p) for l in inst.links)
            )
        return inst
    params = dict(config.scenario_params)
    params.setdefault("k", 2)
    params["seed"] = config.seed if seed is None else int(seed)
    if p_max_dbw is not None:
        params["p_max_dbw"] = float(p_max_dbw)
    try:
        if config.scenario == "lte":
            return generate_lte(LteScenarioConfig(**params))
        return generate_massive_mimo(MassiveMimoScenarioConfig(**params))
    except TypeError as exc:
        raise ConfigError(f"bad scenario parameters: {exc}") from None


# ---------------------------------------------------------------------------
# solver dispatch
# ---------------------------------------------------------------------------


def _evaluation_report(instance, metric, powers, solver, t0) -> SolveReport:
    p = np.asarray(powers, dtype=np.float64)
    rep = SolveReport(
        solver=solver,
        metric=metric.value,
        powers=p,
        value=metric_value(instance, metric, p),
        link_ee=rate(instance, p) / instance.power_consumption(p),
        link_rates=rate(instance, p),
        wall_ms=(time.perf_counter() - t0) * 1e3,
    )
    verify_report(instance, rep)
    return rep


def _dispatch(
    instance: NetworkInstance,
    solver: str,
    metric: EeMetric,
    tol: dict,
    *,
    lambda0: float = 0.0,
    sca_start=None,
    sca_outer_tol=None,
) -> SolveReport:
    t0 = time.perf_counter()
    if solver == "monotonic":
        return solve_global(
            instance,
            metric,
            DinkelbachConfig(
                lambda0=lambda0,
                epsilon=tol["dinkelbach_epsilon"],
                max_iter=tol["dinkelbach_max_iter"],
            ),
            BrbConfig(
                rel_gap=tol["brb_rel_gap"], max_boxes=tol["brb_max_boxes"]
            ),
        )
    if solver == "sequential":
        cfg = ScaConfig(
            outer_tol=sca_outer_tol or tol["sca_outer_tol"],
            max_outer=tol["sca_max_outer"],
            start=sca_start,
        )
        fn = sca_gee if metric is EeMetric.GEE else sca_wmee
        return fn(instance, cfg)
    if solver == "sum-rate":
        return sum_rate_max(instance)
    if solver == "full-power":
        return _evaluation_report(
            instance, metric, instance.p_max_vec, "full-power", t0
        )
    _, best = grid_search(instance, metric, tol["grid_points"])
    rep = _evaluation_report(instance, metric, best, "grid", t0)
    rep.inner_work = tol["grid_points"] ** instance.k
    return rep


def run_solve(config: ExperimentConfig, instance: NetworkInstance | None = None):
    """Solve one instance with the first configured solver."""
    if instance is None:
        instance = build_instance(config)
    return _dispatch(
        instance, config.solver[0], EeMetric(config.metric), config.tolerances
    )


# ---------------------------------------------------------------------------
# grid-search oracle
# ---------------------------------------------------------------------------

_GRID_GUARD = 1e8
_GRID_CHUNK = 65_536


def grid_search(instance: NetworkInstance, metric, points_per_axis: int):
    """Exhaustive metric maximization on a uniform power grid.

    The grid spans ``[0, p_max]`` per link including both endpoints.
    Returns ``(best value, best power vector)``.  Guards against grids
    beyond 1e8 points.
    """
    metric = EeMetric(metric)
    n = int(points_per_axis)
    if n < 2:
        raise ConfigError("grid needs at least 2 points per axis")
    if n ** instance.k > _GRID_GUARD:
        raise ConfigError(
            f"grid of {n}^{instance.k} points exceeds the {_GRID_GUARD:.0e} guard"
        )
    axes = [np.linspace(0.0, pm, n) for pm in instance.p_max_vec]
    shape = (n,) * instance.k
    total = n**instance.k
    best_val = -np.inf
    best_p = np.zeros(instance.k)
    for start in range(0, total, _GRID_CHUNK):
        flat = np.arange(start, min(start + _GRID_CHUNK, total))
        coords = np.unravel_index(flat, shape)
        p = np.stack(
            [axes[j][coords[j]] for j in range(instance.k)], axis=-1
        )
        vals = np.asarray(metric_value(instance, metric, p))
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = float(vals[i])
            best_p = p[i].copy()
    return best_val, best_p


# ---------------------------------------------------------------------------
# iteration counting and trial parallelism
# ---------------------------------------------------------------------------


def iterations_to_convergence(values, rse_tol=1e-4) -> int:
    """Iterations until successive objective values agree.

    ``values`` is the metric sequence starting at the initialization value;
    counted is the first index at which the relative squared error between
    successive entries drops to ``rse_tol``.  A sequence that never settles
    counts every step; a single-entry sequence (the initial point was
    already the fixed point) counts one.
    """
    v = [float(x) for x in values]
    if len(v) < 2:
        return 1
    for i in range(1, len(v)):
        ref = v[i] if v[i] != 0.0 else 1.0
        if ((v[i] - v[i - 1]) / ref) ** 2 <= rse_tol:
            return i
    return len(v) - 1


def _thread_count(n_tasks: int) -> int:
    env = os.environ.get("EEOPT_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def _map_trials(fn, n_trials: int):
    """Run ``fn(trial_index)`` for each trial, results in trial order."""
    workers = _thread_count(n_trials)
    if workers == 1:
        return [fn(t) for t in range(n_trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_trials)))


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------

_SOLVER_FAILURES = (InfeasibleError, IterationCapError, InnerSolverError)


def run_sweep(config: ExperimentConfig) -> dict:
    """Metric-versus-budget table across the configured solvers.

    Every cell reports the *configured* metric evaluated at the allocation
    each solver returns, so solvers with a different internal objective
    (sum-rate) are compared on common ground.  Cell failures are recorded
    and leave a NaN value; the sweep continues.
    """
    if config.sweep_values is None:
        raise ConfigError("sweep requires swept p_max_dbw values")
    metric = EeMetric(config.metric)
    columns = ["pmax_dbw", "solver", "metric", "value", "iterations", "wall_ms"]
    rows, details = [], []
    for pmax_dbw in config.sweep_values:
        instance = build_instance(config, p_max_dbw=pmax_dbw)
        for solver in config.solver:
            detail = {"pmax_dbw": pmax_dbw, "solver": solver}
            t0 = time.perf_counter()
            try:
                rep = _dispatch(instance, solver, metric, config.tolerances)
                achieved = metric_value(instance, metric, rep.powers)
                rows.append(
                    [
                        pmax_dbw,
                        solver,
                        metric.value,
                        achieved,
                        rep.outer_iterations,
                        rep.wall_ms,
                    ]
                )
                detail["report"] = rep.to_dict()
                detail["value"] = achieved
            except _SOLVER_FAILURES as exc:
                wall = (time.perf_counter() - t0) * 1e3
                rows.append(
                    [pmax_dbw, solver, metric.value, math.nan, 0, wall]
                )
                detail["error"] = f"{type(exc).__name__}: {exc}"
            details.append(detail)
    return {
        "command": "sweep",
        "config": config.to_dict(),
        "columns": columns,
        "rows": rows,
        "details": details,
    }


def _pareto_directions(k: int, count: int, seed: int) -> np.ndarray:
    """Strictly positive unit directions spread over the EE orthant.

    Two links: uniform angular spacing on the open quarter circle.  Three
    links: a Fibonacci spiral mapped onto the positive octant.  More links:
    seeded quasi-uniform draws (absolute normal vectors, normalized).
    """
    if k == 1:
        return np.ones((count, 1))
    if k == 2:
        theta = (np.arange(count) + 0.5) * (np.pi / 2.0) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if k == 3:
        i = np.arange(count) + 0.5
        z = i / count
        phi = i * np.pi * (3.0 - np.sqrt(5.0))
        r = np.sqrt(1.0 - z**2)
        pts = np.abs(np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1))
        pts = np.maximum(pts, 1e-3)
        return pts / np.linalg.norm(pts, axis=1, keepdims=True)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    pts = np.maximum(np.abs(rng.standard_normal((count, k))), 1e-3)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def run_pareto(config: ExperimentConfig) -> dict:
    """Trace the per-link EE Pareto boundary by weighted max-min solves.

    Each direction ``u`` maximizes ``min_k ee_k / u_k`` (worst-cased
    weighted EE with weights ``1/u``), landing on the boundary point the
    direction aims at.  Directions are solved in order and warm-started
    from their neighbor; failures are recorded per direction and leave NaN
    coordinates.
    """
    count = config.directions if config.directions is not None else 200
    instance = build_instance(config)
    k = instance.k
    solver = config.solver[0]
    if solver not in ("monotonic", "sequential"):
        raise ConfigError(
            f"pareto tracing needs the monotonic or sequential solver, got {solver!r}"
        )
    directions = _pareto_directions(k, count, config.seed)
    columns = [f"w_{i + 1}" for i in range(k)] + [f"ee_{i + 1}" for i in range(k)]
    rows, details = [], []
    prev_powers = None
    for u in directions:
        w = (1.0 / u) / np.sum(1.0 / u)
        weighted = replace(
            instance,
            links=tuple(
                replace(l, weight=w[i]) for i, l in enumerate(instance.links)
            ),
        )
        detail = {"weights": w.tolist()}
        try:
            if solver == "monotonic":
                lam0 = 0.0
                if prev_powers is not None:
                    lam0 = metric_value(weighted, EeMetric.WMEE, prev_powers)
                rep = _dispatch(
                    weighted,
                    "monotonic",
                    EeMetric.WMEE,
                    config.tolerances,
                    lambda0=lam0,
                )
            else:
                rep = _dispatch(
                    weighted,
                    "sequential",
                    EeMetric.WMEE,
                    config.tolerances,
                    sca_start=prev_powers,
                )
            prev_powers = rep.powers
            rows.append([*w.tolist(), *rep.link_ee.tolist()])
            detail["report"] = rep.to_dict()
        except _SOLVER_FAILURES as exc:
            rows.append([*w.tolist(), *([math.nan] * k)])
            detail["error"] = f"{type(exc).__name__}: {exc}"
        details.append(detail)
    return {
        "command": "pareto",
        "config": config.to_dict(),
        "columns": columns,
        "rows": rows,
        "details": details,
    }


def run_benchmark(config: ExperimentConfig) -> dict:
    """Mean outer iterations of both iterative solvers versus the budget.

    Every trial starts each solver from the full-power allocation (the
    monotonic solver through its ratio parameter, the sequential solver
    through its iterate) and counts iterations until successive objective
    values agree to the ``rse`` tolerance, the criterion under which a
    single iteration means the initialization was already optimal.
    """
    if config.sweep_values is None:
        raise ConfigError("benchmark requires swept p_max_dbw values")
    metric = EeMetric(config.metric)
    tol = config.tolerances
    rse = tol["rse"]
    # The counting criterion resolves relative changes of sqrt(rse); running
    # the sequential solver just tight enough to cross that threshold keeps
    # the count exact without paying for the full-accuracy tail.
    sca_tol = math.sqrt(rse)

    columns = ["pmax_dbw", "solver", "mean_iters", "trials"]
    rows, details = [], []
    for pmax_dbw in config.sweep_values:

        def one_trial(t, _pmax=pmax_dbw):
            instance = build_instance(
                config, seed=config.seed + t, p_max_dbw=_pmax
            )
            fp_value = metric_value(instance, metric, instance.p_max_vec)
            mono = _dispatch(
                instance, "monotonic", metric, tol, lambda0=fp_value
            )
            seq = _dispatch(
                instance,
                "sequential",
                metric,
                tol,
                sca_start=instance.p_max_vec,
                sca_outer_tol=sca_tol,
            )
            return (
                iterations_to_convergence(mono.lambda_trace, rse),
                iterations_to_convergence(seq.sca_objective_trace, rse),
            )

        counts = _map_trials(one_trial, config.trials)
        mono_iters = [c[0] for c in counts]
        seq_iters = [c[1] for c in counts]
        rows.append(
            [pmax_dbw, "monotonic", float(np.mean(mono_iters)), config.trials]
        )
        rows.append(
            [pmax_dbw, "sequential", float(np.mean(seq_iters)), config.trials]
        )
        details.append(
            {
                "pmax_dbw": pmax_dbw,
                "monotonic_iterations": mono_iters,
                "sequential_iterations": seq_iters,
            }
        )
    return {
        "command": "benchmark",
        "config": config.to_dict(),
        "columns": columns,
        "rows": rows,
        "details": details,
    }


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _format_cell(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, columns, rows) -> None:
    """Emit rows as CSV; floats carry 17 significant digits (round-trip
    exact for doubles)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(x) for x in row])


def read_csv(path):
    """Parse a CSV written by :func:`write_csv`: numeric cells become
    floats, everything else stays a string.  Returns (columns, rows)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = []
        for raw in reader:
            row = []
            for cell in raw:
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
            rows.append(row)
    return columns, rows


class _ArrayEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        return super().default(o)


def write_json(path, payload: dict) -> None:
    """Emit the full payload (rows plus per-solve traces) as JSON."""
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, cls=_ArrayEncoder)
        fh.write("\n")
