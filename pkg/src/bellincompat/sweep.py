"""Batch runs: Haar sweeps, threshold tables, scans and figure data.

Output conventions
------------------
* CSV for tables, JSON for optimization reports; UTF-8, ``\\n`` line endings,
  ``.`` decimal separator, floats written with 17 significant digits.
* Every CSV starts with ``# bellincompat-schema <version> <kind>`` followed
  by optional ``# key=value`` lines, then the header row. The header of each
  kind is pinned in :data:`SCHEMAS`; :func:`read_csv` checks it on the way
  back in.
* Sample ``i`` of a run seeded with ``s`` draws only from
  ``rng_stream(s, i)``, and rows are written in ``sample_index`` order, so a
  file does not depend on how many worker processes produced it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .cglmp import CglmpSetting, chi_max, chsh_closed_form, optimal_setting
from .errors import BellIncompatError, ConfigError, UnknownKind
from .incompatibility import incompatibility
from .measurements import pvm_from_unitary
from .optimize import (
    ConstrainedProblem,
    constrained_chi_extremum,
    interferometric_scan,
    schmidt_and_entropy,
)
from .qrac import (
    equal_robustness_scan,
    qrac_success,
    threshold_eta_c,
    threshold_eta_r,
)
from .sampling import haar_unitary, rng_stream

SCHEMA_VERSION = "1.0"
FAILURE_LIMIT = 0.01
WORKERS_ENV = "BELLINCOMPAT_WORKERS"

REPORT_KINDS = ("fig1-scatter", "fig2-entropy", "fig3-scan", "fig4-qrac", "fig5-equalrobust")


def _schmidt_cols(d: int) -> list[str]:
    return [f"schmidt_{k}" for k in range(d)]


SCHEMAS = {
    "sweep": lambda d: ["sample_index", "seed", "i_alice", "i_bob", "chi", "qrac"]
    + _schmidt_cols(d)
    + ["entropy", "status"],
    "qrac-sweep": lambda d: ["sample_index", "seed", "i_bob", "qrac", "eta_r", "status"],
    "thresholds": lambda d: ["d", "chi", "eta_c", "eta_r", "qrac"],
    "fig1-scatter": lambda d: ["sample_index", "i_alice", "i_bob", "chi"],
    "fig2-entropy": lambda d: ["i_target", "chi_max", "i_achieved", "gamma", "entropy"]
    + _schmidt_cols(d),
    "fig3-scan": lambda d: ["xi", "i_alice", "chi"],
    "fig4-qrac": lambda d: ["sample_index", "i_bob", "qrac"],
    "fig5-equalrobust": lambda d: [
        "sample_index",
        "i_bob",
        "eta_r",
        "eta_c",
        "qrac",
        "chi",
    ],
}


# ---------------------------------------------------------------- config


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {n}")
    return n


@dataclass(frozen=True)
class RunConfig:
    command: str = "sweep"
    d: int = 3
    samples: int = 1000
    seed: int = 0
    p: float = math.inf
    eta_a: float = 1.0
    eta_b: float = 1.0
    out: str | None = None
    workers: int = 1
    budget: int = 20_000
    i_target: float | None = None
    manifold: str = "unitary"
    sense: str = "max"
    side: str = "bob"
    d_min: int = 2
    d_max: int = 8
    grid: int | None = None
    tol: float = 1e-3

    def __post_init__(self):
        _check_int(self, "samples", lo=1)
        _check_int(self, "d", lo=2, hi=9)
        _check_int(self, "workers", lo=1)
        _check_int(self, "budget", lo=1)
        _check_int(self, "seed", lo=0)
        _check_int(self, "d_min", lo=2, hi=8)
        _check_int(self, "d_max", lo=2, hi=8)
        if self.d_min > self.d_max:
            raise ConfigError("field 'd_min': must not exceed d_max")
        if self.grid is not None:
            _check_int(self, "grid", lo=2)
        try:
            p = float(self.p)
        except (TypeError, ValueError):
            raise ConfigError(f"field 'p': cannot parse {self.p!r}") from None
        if not (p >= 1):
            raise ConfigError(f"field 'p': Schatten order must be >= 1, got {self.p}")
        object.__setattr__(self, "p", p)
        for name in ("eta_a", "eta_b"):
            v = getattr(self, name)
            if not 0.0 <= float(v) <= 1.0:
                raise ConfigError(f"field '{name}': must lie in [0, 1], got {v}")
        if self.manifold not in ("unitary", "interferometric"):
            raise ConfigError(f"field 'manifold': unknown value {self.manifold!r}")
        if self.sense not in ("max", "min"):
            raise ConfigError(f"field 'sense': unknown value {self.sense!r}")
        if self.side not in ("alice", "bob", "both"):
            raise ConfigError(f"field 'side': unknown value {self.side!r}")
        if not self.tol > 0:
            raise ConfigError("field 'tol': must be positive")

    @classmethod
    def from_json(cls, text: str, source: str = "<config>") -> "RunConfig":
        """Parse a JSON object of field values; errors name the line or field."""
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ConfigError(f"{source}: top level must be an object")
        known = {f.name for f in fields(cls)}
        for key in obj:
            if key not in known:
                line = _line_of_key(text, key)
                raise ConfigError(f"{source}:{line}: unknown field '{key}'")
        if obj.get("p") in ("inf", "Infinity"):
            obj["p"] = math.inf
        try:
            return cls(**obj)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None

    def to_json(self) -> dict:
        out = asdict(self)
        out["p"] = "inf" if math.isinf(self.p) else self.p
        return out


def _line_of_key(text: str, key: str) -> int:
    for n, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return n
    return 1


def _check_int(cfg, name, lo=None, hi=None):
    v = getattr(cfg, name)
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        raise ConfigError(f"field '{name}': expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"field '{name}': must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"field '{name}': must be <= {hi}, got {v}")


# ---------------------------------------------------------------- CSV io


def fmt(x) -> str:
    if isinstance(x, (str, bytes)):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_csv(path, kind: str, d: int, rows, meta: dict | None = None) -> str:
    """Write rows (sequences in schema order) and return the text written."""
    header = SCHEMAS[kind](d)
    buf = io.StringIO()
    buf.write(f"# bellincompat-schema {SCHEMA_VERSION} {kind}\n")
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, schema {kind} has {len(header)}")
        w.writerow([fmt(x) for x in row])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


@dataclass
class CsvTable:
    kind: str
    version: str
    meta: dict
    header: list
    rows: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.header.index(name)
        return np.array([r[i] for r in self.rows])


def _parse_cell(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(path_or_text, d: int | None = None) -> CsvTable:
    """Parse a file written by :func:`write_csv`, checking the pinned header."""
    if "\n" in str(path_or_text):
        text = str(path_or_text)
    else:
        with open(path_or_text, encoding="utf-8", newline="") as fh:
            text = fh.read()
    lines = text.split("\n")
    first = lines[0].split()
    if len(first) != 4 or first[:2] != ["#", "bellincompat-schema"]:
        raise ConfigError("line 1: missing schema comment")
    version, kind = first[2], first[3]
    if kind not in SCHEMAS:
        raise UnknownKind(f"line 1: unknown table kind {kind!r}")
    meta, i = {}, 1
    while i < len(lines) and lines[i].startswith("#"):
        k, _, v = lines[i][1:].strip().partition("=")
        meta[k] = v
        i += 1
    reader = csv.reader(io.StringIO("\n".join(lines[i:])))
    header = next(reader)
    if d is None:
        d = sum(h.startswith("schmidt_") for h in header) or 3
    if header != SCHEMAS[kind](d):
        raise ConfigError(f"line {i + 1}: header does not match schema {kind}")
    rows = [[_parse_cell(c) for c in r] for r in reader if r]
    return CsvTable(kind, version, meta, header, rows)


# ---------------------------------------------------------------- sweeps


def _sweep_sample(args) -> list:
    index, seed, d, p, eta_a, eta_b = args
    rng = rng_stream(seed, index)
    try:
        Us = [haar_unitary(d, rng) for _ in range(4)]
        ms = [pvm_from_unitary(U) for U in Us]
        s = CglmpSetting((ms[0], ms[1]), (ms[2], ms[3]))
        ia = incompatibility(ms[0], ms[1], p).value
        ib = incompatibility(ms[2], ms[3], p).value
        res = chi_max(s.noisy(eta_a, eta_b))
        R = qrac_success(ms[2], ms[3]).success
        coeffs, ent = schmidt_and_entropy(res.optimal_state, (d, d))
        vals = [ia, ib, res.chi, R, *coeffs, ent]
        if not all(math.isfinite(v) for v in vals):
            raise FloatingPointError("non-finite result")
        return [index, seed, *vals, "ok"]
    except (BellIncompatError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return [index, seed] + [math.nan] * (5 + d) + [f"error:{type(exc).__name__}"]


def _qrac_sample(args) -> list:
    index, seed, d, p = args
    rng = rng_stream(seed, index)
    try:
        b1 = pvm_from_unitary(haar_unitary(d, rng))
        b2 = pvm_from_unitary(haar_unitary(d, rng))
        vals = [
            incompatibility(b1, b2, p).value,
            qrac_success(b1, b2).success,
            threshold_eta_r(b1, b2),
        ]
        return [index, seed, *vals, "ok"]
    except (BellIncompatError, np.linalg.LinAlgError) as exc:
        return [index, seed, math.nan, math.nan, math.nan, f"error:{type(exc).__name__}"]


def _ordered_map(fn, tasks: list, workers: int) -> list:
    """Map in ``sample_index`` order; the result is independent of ``workers``."""
    if workers <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


@dataclass(frozen=True)
class RunSummary:
    kind: str
    path: str | None
    rows: int
    failures: int
    text: str
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failures <= FAILURE_LIMIT * max(1, self.rows) and all(
            self.checks.values()
        )


def _meta(cfg: RunConfig, **extra) -> dict:
    # worker count and output path do not affect the data, so they stay out
    conf = {k: v for k, v in cfg.to_json().items() if k not in ("workers", "out")}
    meta = {"config": json.dumps(conf, sort_keys=True), "units": "dimensionless"}
    meta.update(extra)
    return meta


def run_sweep(cfg: RunConfig) -> RunSummary:
    """Haar sweep over all four measurements; one row per sample."""
    tasks = [(i, cfg.seed, cfg.d, cfg.p, cfg.eta_a, cfg.eta_b) for i in range(cfg.samples)]
    rows = _ordered_map(_sweep_sample, tasks, cfg.workers)
    fails = sum(r[-1] != "ok" for r in rows)
    text = write_csv(cfg.out, "sweep", cfg.d, rows, _meta(cfg))
    return RunSummary("sweep", cfg.out, len(rows), fails, text)


def run_qrac_sweep(cfg: RunConfig) -> RunSummary:
    tasks = [(i, cfg.seed, cfg.d, cfg.p) for i in range(cfg.samples)]
    rows = _ordered_map(_qrac_sample, tasks, cfg.workers)
    fails = sum(r[-1] != "ok" for r in rows)
    text = write_csv(cfg.out, "qrac-sweep", cfg.d, rows, _meta(cfg))
    return RunSummary("qrac-sweep", cfg.out, len(rows), fails, text)


def threshold_row(d: int) -> list:
    """``[d, chi, eta_c, eta_r, qrac]`` at the optimal interferometric settings."""
    s = optimal_setting(d)
    res = chi_max(s)
    eta_c = threshold_eta_c(s, res.optimal_state, "bob")
    eta_r = threshold_eta_r(*s.bob)
    return [d, res.chi, eta_c, eta_r, qrac_success(*s.bob).success]


def run_thresholds(cfg: RunConfig) -> RunSummary:
    rows = [threshold_row(d) for d in range(cfg.d_min, cfg.d_max + 1)]
    eta_c = [r[2] for r in rows]
    eta_r = [r[3] for r in rows]
    checks = {
        "eta_r_increasing": all(b > a for a, b in zip(eta_r, eta_r[1:])),
        "eta_c_decreasing": all(b < a for a, b in zip(eta_c, eta_c[1:])),
    }
    meta = _meta(cfg, **{k: "yes" if v else "no" for k, v in checks.items()})
    text = write_csv(cfg.out, "thresholds", cfg.d, rows, meta)
    return RunSummary("thresholds", cfg.out, len(rows), 0, text, checks)


# ---------------------------------------------------------------- reports


def pair_gamma(schmidt) -> float:
    """``gamma`` of the ``(1, gamma, 1)`` pattern: odd coefficient over the closest pair."""
    s = np.asarray(schmidt, dtype=float)
    if s.size != 3:
        return math.nan
    gaps = [abs(s[0] - s[1]), abs(s[1] - s[2])]
    if gaps[0] <= gaps[1]:
        return float(s[2] / (0.5 * (s[0] + s[1])))
    return float(s[0] / (0.5 * (s[1] + s[2])))


def _fig2_rows(cfg: RunConfig) -> list:
    n = cfg.grid or 8
    targets = np.linspace(0.5, 3 * np.sqrt(2) - 0.05, n)
    rows = []
    for t in targets:
        rep = constrained_chi_extremum(
            ConstrainedProblem(
                i_target=float(t),
                side="bob",
                tol=cfg.tol,
                manifold=cfg.manifold,
                budget=cfg.budget,
                seed=cfg.seed,
                p=cfg.p,
            )
        )
        rows.append(
            [float(t), rep.value, rep.achieved_incompatibility, pair_gamma(rep.schmidt), rep.entropy]
            + list(rep.schmidt)
        )
    return rows


def run_report(kind: str, cfg: RunConfig) -> RunSummary:
    """Emit the data behind one figure as CSV."""
    if kind not in REPORT_KINDS:
        raise UnknownKind(f"unknown report kind {kind!r}; expected one of {REPORT_KINDS}")
    d = cfg.d
    if kind == "fig1-scatter":
        sweep = run_sweep(replace(cfg, out=None))
        table = read_csv(sweep.text)
        rows = [
            [r[0], r[2], r[3], r[4]] for r in table.rows if r[-1] == "ok"
        ]
    elif kind == "fig2-entropy":
        d = 3
        rows = _fig2_rows(cfg)
    elif kind == "fig3-scan":
        rows = [list(t) for t in interferometric_scan(cfg.grid or 629, d=min(d, 3), p=cfg.p)]
    elif kind == "fig4-qrac":
        sweep = run_qrac_sweep(replace(cfg, out=None))
        table = read_csv(sweep.text)
        rows = [[r[0], r[2], r[3]] for r in table.rows if r[-1] == "ok"]
    else:
        hits, _ = equal_robustness_scan(cfg.samples, d, cfg.tol, cfg.seed, cfg.p)
        rows = [
            [h.sample_index, h.incompatibility, h.eta_r, h.eta_c, h.qrac, h.chi] for h in hits
        ]
    text = write_csv(cfg.out, kind, d, rows, _meta(cfg))
    return RunSummary(kind, cfg.out, len(rows), 0, text)


def run_optimization(cfg: RunConfig) -> tuple:
    """Run one constrained search and write its JSON report; returns ``(report, text)``."""
    rep = constrained_chi_extremum(
        ConstrainedProblem(
            dim=cfg.d,
            sense=cfg.sense,
            i_target=cfg.i_target,
            side=cfg.side,
            tol=cfg.tol,
            manifold=cfg.manifold,
            budget=cfg.budget,
            seed=cfg.seed,
            p=cfg.p,
        )
    )
    obj = {"schema": SCHEMA_VERSION, "kind": "opt-chi", **rep.to_json()}
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if cfg.out is not None:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return rep, text


def d2_closed_form_defect(table: CsvTable) -> float:
    """Largest ``|chi - chsh_closed_form(I_A, I_B)|`` over the ok rows of a qubit sweep."""
    worst = 0.0
    ia, ib, chi, st = (table.header.index(c) for c in ("i_alice", "i_bob", "chi", "status"))
    for r in table.rows:
        if r[st] != "ok":
            continue
        worst = max(worst, abs(r[chi] - chsh_closed_form(min(r[ia], 2.0), min(r[ib], 2.0))))
    return worst
