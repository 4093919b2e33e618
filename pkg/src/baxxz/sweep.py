"""Sweep configuration, per-point evaluation, result cache and orchestration.

A sweep is a grid over one coupling (``axis``) at one or more values of the
other coupling (``fixed``), for every size and block length. Each grid value
``g`` is evaluated together with ``g + epsilon`` (for the convertibility and
majorization signs) and, when ``curvature`` is on, ``g - epsilon``.
Evaluations are independent tasks; they are cached on disk under a key
derived from the canonical parameter tuple and the backend version, so a
replay of a finished sweep performs no evaluation at all.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import multiprocessing
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .chain import DEFAULT_EPSILON, ChainSpec
from .entanglement import (catalyst_verdict, default_alpha_grid, dlc_column,
                           majorization_column, renyi_entropy)
from .exact_diag import DEFAULT_N_CAP, EIGENVALUE_FLOOR, entanglement_spectrum
from .free_fermion import (correlation_matrix, ground_energy_per_site, ground_energy_thermo,
                           renyi_from_occupations, spectrum_from_block)
from .tables import FORMATS, atomic_write, emit_table

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
BACKENDS = ("exact-diag", "free-fermion", "free-fermion-thermo")
AXES = ("Delta", "delta")
TABLES = ("points", "dlc", "majorization", "spectrum")
BACKEND_VERSION = f"baxxz-{__version__}/eval-2"
CACHE_ENV = "BAXXZ_CACHE_DIR"
HALF = "N/2"


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    """Everything needed to reproduce one sweep.

    ``L_A`` entries are even integers or the string ``"N/2"``. ``alpha`` is
    either ``{"n", "lo", "hi"}`` (log grid plus the sentinels 1 and inf) or
    ``{"values": [...]}``. For ``free-fermion`` the sizes are ``N = 2M``; the
    thermodynamic backend ignores ``N`` and reports it as 0.
    """

    backend: str = "exact-diag"
    axis: str = "Delta"
    start: float = 0.0
    stop: float = 6.0
    step: float = 0.1
    fixed: list = field(default_factory=lambda: [0.3])
    N: list = field(default_factory=lambda: [16])
    L_A: list = field(default_factory=lambda: [4])
    alpha: dict = field(default_factory=lambda: {"n": 200, "lo": 1e-2, "hi": 1e3})
    epsilon: float = DEFAULT_EPSILON
    curvature: bool = False
    tables: list = field(default_factory=lambda: list(TABLES))
    spectrum_levels: int = 16
    max_levels: int = 4096
    n_cap: int = DEFAULT_N_CAP
    seed: int = 0
    workers: int = 1
    cache: bool = True
    format: str = "csv"
    out: str = "out"
    name: str = ""
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}")
        if not self.step > 0 or self.stop < self.start:
            raise ConfigError("need step > 0 and stop >= start")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.fixed:
            raise ConfigError("fixed needs at least one value")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        unknown = set(self.tables) - set(TABLES)
        if unknown:
            raise ConfigError(f"unknown tables {sorted(unknown)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for L in self.L_A:
            if L != HALF and (not isinstance(L, int) or L < 2 or L % 2):
                raise ConfigError(f"L_A entries must be even integers >= 2 or {HALF!r}")
        self._alphas()
        if self.backend == "free-fermion-thermo":
            if HALF in self.L_A:
                raise ConfigError("the thermodynamic backend has no N/2 block")
        else:
            if not self.N:
                raise ConfigError("N list is empty")
            for N in self.N:
                if not isinstance(N, int) or N < 4 or N % 2:
                    raise ConfigError(f"N must be even integers >= 4, got {N!r}")
        if self.backend == "exact-diag":
            if max(self.N) > self.n_cap:
                raise ConfigError(f"N={max(self.N)} exceeds the exact-diagonalization cap "
                                  f"{self.n_cap}")
        else:
            deltas_big = self.fixed if self.axis == "delta" else self._axis_values(True)
            if any(abs(D) > 0 for D in deltas_big):
                raise ConfigError("free-fermion backends require Delta = 0")
        lo_d, hi_d = self._delta_range()
        low_ok = -1.0 <= lo_d if self.backend != "exact-diag" else -1.0 < lo_d
        if not low_ok or hi_d > 1.0:
            raise ConfigError(f"delta outside the allowed range: [{lo_d}, {hi_d}]")

    def _delta_range(self):
        # shifted partners beyond the range surface as error rows at evaluation
        if self.axis == "delta":
            vals = self._axis_values()
        else:
            vals = list(self.fixed)
        return min(vals), max(vals)

    def _alphas(self) -> np.ndarray:
        a = self.alpha
        if "values" in a:
            vals = np.asarray(a["values"], dtype=float)
            if vals.ndim != 1 or len(vals) == 0 or np.any(vals <= 0):
                raise ConfigError("alpha values must be positive")
            return np.sort(vals)
        try:
            return default_alpha_grid(int(a["n"]), float(a["lo"]), float(a["hi"]))
        except KeyError as exc:
            raise ConfigError(f"alpha spec missing {exc}") from None

    @property
    def alphas(self) -> np.ndarray:
        return self._alphas()

    def _axis_values(self, with_shifts: bool = False) -> list[float]:
        n = int(round((self.stop - self.start) / self.step)) + 1
        g = [round(self.start + i * self.step, 12) for i in range(n)]
        g = [x for x in g if x <= self.stop + 1e-12]
        if with_shifts:
            g = g + [round(x + self.epsilon, 12) for x in g]
            if self.curvature:
                g = g + [round(x - self.epsilon, 12) for x in g]
        return g

    @property
    def grid(self) -> list[float]:
        return self._axis_values()

    def sizes(self) -> list[int]:
        return [0] if self.backend == "free-fermion-thermo" else sorted(set(self.N))

    def blocks(self, N: int) -> list[int]:
        out = {N // 2 if L == HALF else L for L in self.L_A}
        if N:
            out = {L for L in out if L <= N // 2}
        return sorted(out)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "schema_version" not in d:
            raise ConfigError("config lacks schema_version")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "SweepConfig":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(d)

    def replace(self, **changes) -> "SweepConfig":
        return dataclasses.replace(self, **changes)


# --------------------------------------------------------------------------- evaluation

def _task_params(cfg: SweepConfig, N: int, L_A: int, delta: float, Delta: float) -> dict:
    """Canonical parameter tuple of one evaluation (also the cache key material)."""
    a = cfg.alpha
    alpha = {"values": [float(x) for x in a["values"]]} if "values" in a else {
        "n": int(a["n"]), "lo": float(a["lo"]), "hi": float(a["hi"])}
    p = {"backend": cfg.backend, "N": int(N), "L_A": int(L_A), "delta": float(delta),
         "Delta": float(Delta), "alpha": alpha, "floor": EIGENVALUE_FLOOR,
         "max_levels": int(cfg.max_levels)}
    if cfg.backend == "exact-diag":
        p["seed"] = int(cfg.seed)
    return p


def task_key(params: dict) -> str:
    blob = json.dumps({"params": params, "version": BACKEND_VERSION}, sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _alphas_of(params: dict) -> np.ndarray:
    a = params["alpha"]
    if "values" in a:
        return np.sort(np.asarray(a["values"], dtype=float))
    return default_alpha_grid(a["n"], a["lo"], a["hi"])


def evaluate_point(params: dict) -> dict:
    """Ground-state energy, labeled spectrum and Renyi entropies at one point."""
    alphas = _alphas_of(params)
    backend = params["backend"]
    out: dict = {}
    if backend == "exact-diag":
        spec = ChainSpec(params["N"], params["delta"], params["Delta"], L_A=params["L_A"])
        gs, es = entanglement_spectrum(spec, seed=params["seed"])
        w = es.probabilities
        out.update(e0=gs.energy_per_site, gs_gap=gs.gap, residual=gs.residual)
        S = [renyi_entropy(w, a) for a in alphas]
    else:
        M = None if backend == "free-fermion-thermo" else params["N"] // 2
        block = correlation_matrix(M, params["delta"], params["L_A"])
        es = spectrum_from_block(block, floor=params["floor"], max_levels=params["max_levels"])
        e0 = ground_energy_thermo(params["delta"]) if M is None else \
            ground_energy_per_site(M, params["delta"])
        out.update(e0=e0, gs_gap=math.nan, residual=0.0)
        S = [renyi_from_occupations(block.q, a) for a in alphas]
    out.update(alpha=[float(a) for a in alphas], S=[float(s) for s in S],
               omega=[float(x) for x in es.omega], Sz_A=[float(x) for x in es.Sz_A],
               p_A=[int(x) for x in es.p_A])
    return out


def _evaluate_safely(params: dict) -> dict:
    from threadpoolctl import threadpool_limits

    # single-threaded BLAS keeps results identical for any worker count
    with threadpool_limits(limits=1):
        try:
            return {"ok": True, "payload": evaluate_point(params)}
        except Exception as exc:  # recorded as an error row
            return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}


# --------------------------------------------------------------------------- cache

def cache_root(path=None) -> Path:
    if path is not None:
        return Path(path)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "baxxz"


class ResultCache:
    """Append-only store of evaluation records, one JSON file per key."""

    def __init__(self, root=None):
        self.root = cache_root(root)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> dict | None:
        p = self._path(key)
        if not p.exists():
            return None
        try:
            rec = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError):
            log.warning("ignoring unreadable cache record %s", p)
            return None
        return rec.get("payload")

    def put(self, key: str, params: dict, payload: dict) -> None:
        p = self._path(key)
        if p.exists():
            return
        record = {"key": key, "params": params, "backend_version": BACKEND_VERSION,
                  "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                  "payload": payload}
        atomic_write(p, json.dumps(record))


# --------------------------------------------------------------------------- orchestration

@dataclass
class SweepResult:
    config: SweepConfig
    points: dict  # (N, L_A, delta, Delta) -> payload or {"error": ...}
    evaluations: int
    cache_hits: int

    def payload(self, N, L_A, delta, Delta):
        k = (N, L_A, _r(delta), _r(Delta))
        if k not in self.points:
            return {"error": f"no evaluation at delta={_r(delta)} (outside the allowed range)"}
        return self.points[k]


def _r(x: float) -> float:
    return round(float(x), 12)


def _in_domain(cfg: SweepConfig, delta: float) -> bool:
    lo_ok = delta > -1.0 if cfg.backend == "exact-diag" else delta >= -1.0
    return lo_ok and delta <= 1.0


def sweep_tasks(cfg: SweepConfig) -> list[tuple[tuple, dict]]:
    """All distinct evaluations in lexicographic parameter order.

    Shifted partners that leave the allowed delta range are not evaluated.
    """
    tasks = {}
    for N in cfg.sizes():
        for L in cfg.blocks(N):
            for f in cfg.fixed:
                for g in cfg._axis_values(True):
                    delta, Delta = (f, g) if cfg.axis == "Delta" else (g, f)
                    if not _in_domain(cfg, delta):
                        continue
                    k = (N, L, _r(delta), _r(Delta))
                    tasks[k] = _task_params(cfg, N, L, delta, Delta)
    return sorted(tasks.items())


def run_sweep(cfg: SweepConfig, *, workers: int | None = None, use_cache: bool | None = None,
              cache_dir=None, progress=None) -> SweepResult:
    """Evaluate every point of the sweep once, reusing cached records.

    The returned mapping does not depend on execution order or worker count.
    """
    workers = cfg.workers if workers is None else workers
    use_cache = cfg.cache if use_cache is None else use_cache
    cache = ResultCache(cache_dir) if use_cache else None
    tasks = sweep_tasks(cfg)
    points: dict = {}
    todo = []
    hits = 0
    for k, params in tasks:
        key = task_key(params)
        payload = cache.get(key) if cache else None
        if payload is not None:
            points[k] = payload
            hits += 1
        else:
            todo.append((k, key, params))

    def _store(item, res):
        k, key, params = item
        if res["ok"]:
            # round-trip through JSON so fresh and cached payloads are identical objects
            payload = json.loads(json.dumps(res["payload"]))
            points[k] = payload
            if cache:
                cache.put(key, params, payload)
        else:
            points[k] = {"error": res["error"]}
        if progress:
            progress(len(points), len(tasks))

    if workers == 1 or len(todo) <= 1:
        for item in todo:
            _store(item, _evaluate_safely(item[2]))
    else:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
            for item, res in zip(todo, ex.map(_evaluate_safely, [t[2] for t in todo])):
                _store(item, res)
    return SweepResult(config=cfg, points=points, evaluations=len(todo), cache_hits=hits)


# --------------------------------------------------------------------------- tables

POINT_COLUMNS = ["backend", "N", "L_A", "delta", "Delta", "e0", "chi", "S_1", "S_2", "S_inf",
                 "W", "schmidt_gap", "top4_spread", "n_levels", "dropped_weight",
                 "truncation_error", "gs_gap", "residual",
                 "dlc_pos", "dlc_neg", "maj_pos", "maj_neg", "verdict", "error"]
DLC_COLUMNS = ["backend", "N", "L_A", "delta", "Delta", "alpha", "S", "sign"]
MAJ_COLUMNS = ["backend", "N", "L_A", "delta", "Delta", "k", "sign"]
SPECTRUM_COLUMNS = ["backend", "N", "L_A", "delta", "Delta", "j", "omega", "xi", "Sz_A", "p_A"]
COLUMNS = {"points": POINT_COLUMNS, "dlc": DLC_COLUMNS, "majorization": MAJ_COLUMNS,
           "spectrum": SPECTRUM_COLUMNS}


def _pick(S: list, alpha: list, target: float) -> float:
    for a, s in zip(alpha, S):
        if a == target:
            return s
    return math.nan


def _curve_S(payload: dict, alpha: float) -> float:
    """Renyi entropy at one alpha, falling back to the spectrum if off-grid."""
    val = _pick(payload["S"], payload["alpha"], alpha)
    if math.isnan(val):
        w = np.asarray(payload["omega"])
        val = renyi_entropy(w / w.sum(), alpha)
    return val


def build_tables(result: SweepResult) -> dict[str, list[dict]]:
    """Rows of every table in deterministic order: (N, L_A, fixed, g)."""
    cfg = result.config
    eps = cfg.epsilon
    out = {name: [] for name in TABLES}
    for N in cfg.sizes():
        for L in cfg.blocks(N):
            for f in cfg.fixed:
                for g in cfg.grid:
                    def at(x):
                        d, D = (f, x) if cfg.axis == "Delta" else (x, f)
                        return result.payload(N, L, d, D)
                    delta, Delta = (f, g) if cfg.axis == "Delta" else (g, f)
                    base = {"backend": cfg.backend, "N": N, "L_A": L,
                            "delta": float(delta), "Delta": float(Delta)}
                    here, nxt = at(g), at(_r(g + eps))
                    prev = at(_r(g - eps)) if cfg.curvature else None
                    _append_rows(out, base, here, nxt, prev, eps, cfg.spectrum_levels)
    return out


def _append_rows(out, base, here, nxt, prev, eps, n_levels):
    row = dict(base)
    errors = [p["error"] for p in (here, nxt, prev) if p is not None and "error" in p]
    nan = math.nan
    row.update(e0=nan, chi=nan, S_1=nan, S_2=nan, S_inf=nan, W=nan, schmidt_gap=nan,
               top4_spread=nan, n_levels=0, dropped_weight=nan, gs_gap=nan, residual=nan,
               dlc_pos=0, dlc_neg=0, maj_pos=0, maj_neg=0, verdict="", error="")
    # both backends are exact; there is no variational truncation to report
    row["truncation_error"] = 0.0
    if "error" in here:
        row["error"] = here["error"]
        out["points"].append(row)
        return
    w = np.asarray(here["omega"])
    prob = w / w.sum()
    row.update(e0=here["e0"], S_1=_curve_S(here, 1.0), S_2=_curve_S(here, 2.0),
               S_inf=_curve_S(here, math.inf), W=float(4.0 * np.sum(prob**2)),
               n_levels=len(w), dropped_weight=float(max(1.0 - w.sum(), 0.0)),
               gs_gap=here["gs_gap"], residual=here["residual"])
    if len(w) >= 2:
        row["schmidt_gap"] = float(prob[0] - prob[1])
    if len(w) >= 4:
        row["top4_spread"] = float((w[0] - w[3]) / w[0])
    if prev is not None and "error" not in prev and "error" not in nxt:
        row["chi"] = -(prev["e0"] - 2.0 * here["e0"] + nxt["e0"]) / eps**2
    if "error" not in nxt:
        dl = dlc_column(here["S"], nxt["S"])
        wn = np.asarray(nxt["omega"])
        mj = majorization_column(prob, wn / wn.sum())
        rep = catalyst_verdict(dl, mj)
        row.update(dlc_pos=rep.dlc_positive, dlc_neg=rep.dlc_negative,
                   maj_pos=rep.maj_positive, maj_neg=rep.maj_negative,
                   verdict=rep.verdict.value)
        for a, s, sg in zip(here["alpha"], here["S"], dl):
            out["dlc"].append({**base, "alpha": float(a), "S": float(s), "sign": int(sg)})
        for k, sg in enumerate(mj):
            out["majorization"].append({**base, "k": k, "sign": int(sg)})
    if errors:
        row["error"] = "; ".join(errors)
    for j in range(min(n_levels, len(w))):
        out["spectrum"].append({**base, "j": j, "omega": float(w[j]),
                                "xi": float(-math.log(w[j])), "Sz_A": float(here["Sz_A"][j]),
                                "p_A": int(here["p_A"][j])})
    out["points"].append(row)


def write_tables(result: SweepResult, out_dir=None, fmt: str | None = None,
                 names=None) -> list[Path]:
    cfg = result.config
    out_dir = Path(cfg.out if out_dir is None else out_dir)
    fmt = cfg.format if fmt is None else fmt
    names = cfg.tables if names is None else names
    tables = build_tables(result)
    paths = []
    for name in TABLES:
        if name in names:
            paths.append(emit_table(tables[name], COLUMNS[name], out_dir / f"{name}.{fmt}", fmt))
    return paths
