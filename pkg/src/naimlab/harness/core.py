"""Declarative experiment specs, reports and rate fitting."""

from __future__ import annotations

import csv
import io
import json
import operator
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from ..objectives import OBJECTIVES

NO_OBJECTIVE = "none"


class SpecError(ValueError):
    """An experiment spec references unknown ids or carries invalid parameters."""


@dataclass
class ExperimentSpec:
    id: str
    objective_id: str
    scheme: str
    params: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    description: str = ""

    @property
    def objective_ids(self) -> list[str]:
        if self.objective_id == NO_OBJECTIVE:
            return []
        return [s.strip() for s in self.objective_id.split(",") if s.strip()]

    def validate(self, schemes: Sequence[str]) -> None:
        if not self.id:
            raise SpecError("spec id: must be nonempty")
        if self.scheme not in schemes:
            raise SpecError(f"scheme: unknown scheme {self.scheme!r} in spec {self.id!r}")
        for oid in self.objective_ids:
            if oid not in OBJECTIVES:
                raise SpecError(f"objective_id: unknown objective {oid!r} in spec {self.id!r}")
        if not isinstance(self.params, dict):
            raise SpecError(f"params: expected a mapping in spec {self.id!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        missing = {"id", "objective_id", "scheme"} - set(d)
        if missing:
            raise SpecError(f"spec is missing fields {sorted(missing)}")
        extra = set(d) - {"id", "objective_id", "scheme", "params", "outputs", "description"}
        if extra:
            raise SpecError(f"spec {d.get('id')!r} has unknown fields {sorted(extra)}")
        params = d.get("params", {})
        if not isinstance(params, dict):
            raise SpecError(f"params: expected a mapping in spec {d['id']!r}")
        outputs = d.get("outputs", [])
        if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
            raise SpecError(f"outputs: expected a list of table names in spec {d['id']!r}")
        return cls(d["id"], d["objective_id"], d["scheme"], dict(params), list(outputs),
                   d.get("description", ""))

    def to_dict(self) -> dict:
        return {"id": self.id, "objective_id": self.objective_id, "scheme": self.scheme,
                "params": self.params, "outputs": self.outputs, "description": self.description}


@dataclass
class ExperimentReport:
    spec_id: str
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    status: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.status.values())

    def summary_json(self) -> str:
        payload = {"spec_id": self.spec_id, "passed": self.passed, "status": self.status,
                   "summary": self.summary}
        return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir) -> Path:
        d = Path(out_dir) / self.spec_id
        d.mkdir(parents=True, exist_ok=True)
        for name, text in sorted(self.tables.items()):
            (d / f"{name}.csv").write_text(text)
        (d / "summary.json").write_text(self.summary_json())
        return d


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


_OPS = {"<=": operator.le, ">=": operator.ge, "<": operator.lt, ">": operator.gt, "==": operator.eq}


class Recorder:
    """Collects named checks into a report; tolerances pass through ``tol_scale``."""

    def __init__(self, spec_id: str, tol_scale: float = 1.0):
        self.report = ExperimentReport(spec_id)
        self.tol_scale = tol_scale

    def check(self, name: str, value, op: str, threshold, scale_tol: bool = True, note: str = "") -> bool:
        thr = threshold * self.tol_scale if scale_tol and op in ("<=", "<") else threshold
        ok = bool(_OPS[op](value, thr))
        self.report.status[name] = ok
        entry = {"value": value, "op": op, "threshold": thr}
        if note:
            entry["note"] = note
        self.report.summary.setdefault("checks", {})[name] = entry
        return ok

    def flag(self, name: str, ok: bool, note: str = "", **values) -> bool:
        self.report.status[name] = bool(ok)
        entry = dict(values)
        if note:
            entry["note"] = note
        self.report.summary.setdefault("checks", {})[name] = entry
        return bool(ok)

    def info(self, key: str, value) -> None:
        self.report.summary.setdefault("info", {})[key] = value

    def table(self, name: str, header: Sequence[str], rows) -> None:
        self.report.tables[name] = csv_text(header, rows)


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


# Rate fitting --------------------------------------------------------------

class RateFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def rate_fit(series, window: Optional[tuple[float, float]] = None, mode: str = "power") -> RateFit:
    """Least-squares line through log(value) against log(k) ("power") or k ("geometric").

    ``series`` is a sequence of (k, value) pairs or a pair of arrays.  The
    window is an inclusive range of k; by default the last 60% of the points.
    A geometric fit's slope is log of the per-step ratio.
    """
    if mode not in ("power", "geometric"):
        raise ValueError("mode must be 'power' or 'geometric'")
    if isinstance(series, tuple) and len(series) == 2 and np.ndim(series[0]) == 1:
        k, val = (np.asarray(a, dtype=float) for a in series)
    else:
        arr = np.asarray(series, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("series must be (k, value) pairs")
        k, val = arr[:, 0], arr[:, 1]
    if window is None:
        start = int(np.floor(0.4 * len(k)))
        sel = np.arange(len(k)) >= start
    else:
        sel = (k >= window[0]) & (k <= window[1])
    k, val = k[sel], val[sel]
    if k.size < 10:
        raise ValueError(f"need at least 10 points in the fit window, got {k.size}")
    if np.any(~(val > 0)):
        raise ValueError("values in the fit window must be positive")
    if mode == "power" and np.any(k <= 0):
        raise ValueError("power-law fits need k > 0")
    xs = np.log(k) if mode == "power" else k
    ys = np.log(val)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2)


# Running -------------------------------------------------------------------

Runner = Callable[[ExperimentSpec, Recorder, int], None]


@dataclass
class RunContext:
    seed: Optional[int] = None
    tol_scale: float = 1.0


def run(spec: ExperimentSpec, ctx: Optional[RunContext] = None) -> ExperimentReport:
    """Execute one spec; the scheme registry lives in :mod:`naimlab.harness.experiments`."""
    from .experiments import SCHEMES

    ctx = ctx or RunContext()
    if ctx.tol_scale <= 0:
        raise SpecError("tol_scale: must be positive")
    spec.validate(list(SCHEMES))
    seed = ctx.seed if ctx.seed is not None else int(spec.params.get("seed", 0))
    rec = Recorder(spec.id, ctx.tol_scale)
    rec.info("scheme", spec.scheme)
    rec.info("objective_id", spec.objective_id)
    rec.info("seed", seed)
    rec.info("tol_scale", ctx.tol_scale)
    SCHEMES[spec.scheme](spec, rec, seed)
    if spec.outputs:
        missing = [t for t in spec.outputs if t not in rec.report.tables]
        if missing:
            raise SpecError(f"outputs: spec {spec.id!r} requested unknown tables {missing}")
        rec.report.tables = {k: v for k, v in rec.report.tables.items() if k in spec.outputs}
    return rec.report


def run_many(specs: Sequence[ExperimentSpec], ctx: Optional[RunContext] = None) -> list[ExperimentReport]:
    return [run(s, ctx) for s in specs]


def load_specs(path=None) -> list[ExperimentSpec]:
    """Read a JSON list of specs; defaults to the bundled configuration."""
    if path is None:
        text = resources.files("naimlab.harness").joinpath("default_specs.json").read_text()
    else:
        text = Path(path).read_text()
    data = json.loads(text)
    if not isinstance(data, list):
        raise SpecError("config must be a JSON list of specs")
    specs = [ExperimentSpec.from_dict(d) for d in data]
    ids = [s.id for s in specs]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise SpecError(f"duplicate spec ids {dup}")
    return specs
