"""Scenario files, built-in examples and the task runner.

A scenario is a JSON object naming a task and carrying its data.  Running
one writes ``result.json`` (deterministic: no timings, no paths), task
specific CSV plot data and ``timings.json`` into an output directory.
"""
import copy
import hashlib
import json
import logging
import math
import re
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import gallery
from .chains import ChainError, Grid2D, GridChain, PointChain0, PolyChain1, rasterize, mass_Mh
from .duality import (CertificateError, PiecewiseCalibration, Region, certify_solution,
                      find_cycle, verify_calibration_field)
from .flatnorm import (FlatNormError, default_forms, grid_flat_norm, microstructure_chain,
                       relaxation_study)
from .flow import FlowError, FlowProblem, GeometricGraph, candidate_graph, flow_to_polychain, solve_flow
from .norms import GAP_TOL, GeneratedNorm, NormError, PolyhedralNorm, eval_H

logger = logging.getLogger(__name__)

TASKS = ("solve", "dual", "calibrate", "flatnorm", "microstructure", "h-eval")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class ScenarioError(ValueError):
    """Invalid scenario; ``problems`` lists ``(field path, message)`` pairs."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("", problems)]
        self.problems = list(problems)
        super().__init__("; ".join(f"{p or '<root>'}: {m}" for p, m in self.problems))


class NumericalFailure(RuntimeError):
    """A solver did not reach the requested accuracy."""


# ----------------------------------------------------------------------------
# schema
# ----------------------------------------------------------------------------

_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}
_POINT_CHAIN = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1}, "m": {"type": "integer", "minimum": 1},
        "atoms": {"type": "array", "items": {
            "type": "object", "required": ["x", "theta"],
            "properties": {"x": _VEC, "theta": _VEC}, "additionalProperties": False}},
    },
    "required": ["atoms"],
}
_POLY_CHAIN = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1}, "m": {"type": "integer", "minimum": 1},
        "segments": {"type": "array", "items": {
            "type": "object", "required": ["a", "b", "theta"],
            "properties": {"a": _VEC, "b": _VEC, "theta": _VEC}, "additionalProperties": False}},
    },
    "required": ["segments"],
}
_GRID = {
    "type": "object",
    "properties": {"lo": _VEC, "hi": _VEC, "delta": {"type": "number", "exclusiveMinimum": 0}},
    "required": ["delta"], "additionalProperties": False,
}
_NORM = {
    "oneOf": [
        {"type": "string"},
        {"type": "object", "required": ["name"],
         "properties": {"name": {"type": "string"}, "m": {"type": "integer", "minimum": 1},
                        "samples": {"type": "integer", "minimum": 3}},
         "additionalProperties": False},
        {"type": "object", "required": ["dual_vertices"],
         "properties": {"m": {"type": "integer", "minimum": 1}, "dual_vertices": _MAT,
                        "name": {"type": "string"}},
         "additionalProperties": False},
        {"type": "object", "required": ["primal_vertices"],
         "properties": {"m": {"type": "integer", "minimum": 1}, "primal_vertices": _MAT,
                        "name": {"type": "string"}},
         "additionalProperties": False},
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["task", "norm"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "task": {"enum": list(TASKS)},
        "norm": _NORM,
        "n": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "boundary": _POINT_CHAIN,
        "graph": {
            "oneOf": [
                {"type": "object", "required": ["nodes", "edges"],
                 "properties": {"nodes": _MAT, "edges": {"type": "array", "items": {
                     "type": "array", "items": {"type": "integer", "minimum": 0},
                     "minItems": 2, "maxItems": 2}}},
                 "additionalProperties": False},
                {"type": "object", "required": ["generator"],
                 "properties": {"generator": {
                     "type": "object",
                     "properties": {"lattice": {"type": "integer", "minimum": 0},
                                    "chords": {"type": "boolean"},
                                    "box": {"type": "array", "items": _VEC, "minItems": 2, "maxItems": 2},
                                    "extra_nodes": {"type": "array", "items": _VEC}},
                     "additionalProperties": False}},
                 "additionalProperties": False},
            ]
        },
        "calibration": {
            "type": "object", "required": ["box", "regions"],
            "properties": {
                "box": {"type": "array", "items": _VEC, "minItems": 2, "maxItems": 2},
                "regions": {"type": "array", "minItems": 1, "items": {
                    "type": "object", "required": ["Phi"],
                    "properties": {"A": {"type": "array", "items": _VEC}, "b": {"type": "array", "items": {"type": "number"}},
                                   "Phi": _MAT, "name": {"type": "string"}},
                    "additionalProperties": False}},
            },
            "additionalProperties": False,
        },
        "networks": {"type": "object", "additionalProperties": _POLY_CHAIN},
        "grid": _GRID,
        "chain": {"type": "object"},
        "matrix": _MAT,
        "warm_start": _MAT,
        "directions": _MAT,
        "gap_tol": {"type": "number", "exclusiveMinimum": 0},
        "microstructure": {
            "type": "object", "required": ["matrix", "decomposition", "ks"],
            "properties": {
                "matrix": _MAT,
                "decomposition": {"type": "array", "items": {
                    "type": "object", "required": ["theta", "e"],
                    "properties": {"theta": _VEC, "e": _VEC}, "additionalProperties": False}},
                "ks": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "box": {"type": "array", "items": _VEC, "minItems": 2, "maxItems": 2},
            },
            "additionalProperties": False,
        },
        "expected": {"type": "object", "properties": {"cost": {"type": "number"},
                                                       "value": {"type": "number"},
                                                       "tol": {"type": "number"}},
                     "additionalProperties": False},
    },
    "additionalProperties": False,
}

_TASK_NEEDS = {
    "solve": ("boundary", "graph"),
    "dual": ("boundary", "graph"),
    "calibrate": ("boundary", "graph"),
    "flatnorm": ("chain",),
    "microstructure": ("microstructure",),
    "h-eval": ("matrix",),
}


def _path(err):
    return "/".join(str(p) for p in err.absolute_path)


def validate(data):
    """Schema and consistency check; raises :class:`ScenarioError` listing every problem."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    problems = [(_path(e), e.message) for e in sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))]
    if problems:
        raise ScenarioError(problems)
    for key in _TASK_NEEDS[data["task"]]:
        if key not in data:
            problems.append((key, f"required for task {data['task']!r}"))
    if problems:
        raise ScenarioError(problems)


# ----------------------------------------------------------------------------
# scenario value type
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Validated scenario; ``to_dict``/``from_dict`` round-trip exactly."""

    task: str
    norm: object
    name: str = "scenario"
    description: str = ""
    n: int = 2
    seed: int = None
    boundary: dict = None
    graph: dict = None
    calibration: dict = None
    networks: dict = None
    grid: dict = None
    chain: dict = None
    matrix: list = None
    warm_start: list = None
    directions: list = None
    gap_tol: float = None
    microstructure: dict = None
    expected: dict = None

    @classmethod
    def from_dict(cls, data):
        validate(data)
        return cls(**copy.deepcopy(data))

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError([("", f"invalid JSON: {exc}")]) from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ScenarioError([("", f"cannot read {path}: {exc.strerror}")]) from exc
        return cls.from_json(text)

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name in ("name", "description", "n") and v == f.default:
                continue
            out[f.name] = copy.deepcopy(v)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def digest(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


# ----------------------------------------------------------------------------
# scenario -> objects
# ----------------------------------------------------------------------------

def build_norm(spec, m=None):
    try:
        if isinstance(spec, str):
            return PolyhedralNorm.named(spec, m=m or 2)
        if "name" in spec and "dual_vertices" not in spec and "primal_vertices" not in spec:
            return PolyhedralNorm.named(spec["name"], m=spec.get("m", m or 2),
                                        samples=spec.get("samples", 64))
        return PolyhedralNorm.from_dict(spec)
    except (NormError, KeyError, ValueError) as exc:
        raise ScenarioError([("norm", str(exc))]) from exc


def _materials(sc):
    if sc.boundary and sc.boundary.get("atoms"):
        return len(sc.boundary["atoms"][0]["theta"])
    if sc.matrix:
        return len(sc.matrix)
    if sc.microstructure:
        return len(sc.microstructure["matrix"])
    return None


def _boundary(sc, m):
    try:
        atoms = sc.boundary["atoms"]
        for i, a in enumerate(atoms):
            if len(a["x"]) != sc.n:
                raise ScenarioError([(f"boundary/atoms/{i}/x", f"expected {sc.n} coordinates")])
            if len(a["theta"]) != m:
                raise ScenarioError([(f"boundary/atoms/{i}/theta", f"expected {m} materials")])
        return PointChain0.from_atoms([(a["x"], a["theta"]) for a in atoms], n=sc.n, m=m)
    except ChainError as exc:
        raise ScenarioError([("boundary", str(exc))]) from exc


def _graph(sc, boundary):
    spec = sc.graph
    try:
        if "generator" in spec:
            gen = spec["generator"]
            if sc.n != 2:
                raise ScenarioError([("graph/generator", "the graph generator is planar (n = 2)")])
            return candidate_graph(boundary.positions, lattice=gen.get("lattice", 0),
                                   box=gen.get("box"), chords=gen.get("chords", True),
                                   extra_nodes=gen.get("extra_nodes", []))
        g = GeometricGraph(spec["nodes"], spec["edges"])
        if g.n != sc.n:
            raise ScenarioError([("graph/nodes", f"expected {sc.n} coordinates per node")])
        return g
    except FlowError as exc:
        raise ScenarioError([("graph", str(exc))]) from exc


def _field(sc):
    c = sc.calibration
    try:
        regions = [Region(r.get("A", []), r.get("b", []), r["Phi"], r.get("name", ""))
                   for r in c["regions"]]
        return PiecewiseCalibration(regions, c["box"])
    except CertificateError as exc:
        raise ScenarioError([("calibration", str(exc))]) from exc


def _problem(sc):
    m = _materials(sc)
    h = build_norm(sc.norm, m)
    if m is not None and h.m != m:
        raise ScenarioError([("norm", f"norm has {h.m} materials, boundary has {m}")])
    boundary = _boundary(sc, h.m)
    graph = _graph(sc, boundary)
    try:
        return FlowProblem(graph, boundary, h)
    except FlowError as exc:
        raise ScenarioError([("boundary", str(exc))]) from exc


# ----------------------------------------------------------------------------
# tasks
# ----------------------------------------------------------------------------

def _expected(sc, value, outputs):
    if sc.expected:
        target = sc.expected.get("cost", sc.expected.get("value"))
        tol = sc.expected.get("tol", 1e-6)
        outputs["expected"] = {"value": target, "tol": tol, "matches": abs(value - target) <= tol}


def _solve(sc, files, method="auto", form="gauge"):
    p = _problem(sc)
    sol = solve_flow(p, form=form, method=method)
    if sol.status != "optimal":
        raise NumericalFailure(f"flow LP ended with status {sol.status}")
    cert = certify_solution(sol)
    support = flow_to_polychain(sol)
    cyc = find_cycle(support) if len(support) else None
    out = {
        "cost": sol.cost, "lp_objective": sol.lp_objective, "dual_value": sol.dual_value(),
        "gap": sol.gap, "lp_status": sol.status, "route": sol.route,
        "graph": {"nodes": p.graph.n_nodes, "edges": p.graph.n_edges},
        "support_edges": sol.support.tolist(),
        "support_segments": len(support),
        "support_cycle": None if cyc is None else cyc.tolist(),
        "theta": sol.theta.tolist(), "potentials": sol.potentials.tolist(),
        "solver_certificate": cert.to_dict(),
    }
    files["edges.csv"] = sol.edges_csv()
    _expected(sc, sol.cost, out)
    return p, sol, out


def _task_solve(sc, files):
    return _solve(sc, files)[2]


def _task_dual(sc, files):
    p, sol, out = _solve(sc, files, method="dual", form="epigraph")
    slacks = sol.slacks()
    out["min_edge_slack"] = float(slacks.min()) if len(slacks) else None
    files["slacks.csv"] = "edge,slack\n" + "".join(f"{i},{float(s)!r}\n" for i, s in enumerate(slacks))
    return out


def _task_calibrate(sc, files):
    p, sol, out = _solve(sc, files)
    nets = {}
    if sc.networks:
        for name, data in sc.networks.items():
            try:
                nets[name] = PolyChain1.from_dict({**data, "n": sc.n, "m": p.m})
            except ChainError as exc:
                raise ScenarioError([(f"networks/{name}", str(exc))]) from exc
    nets["solver"] = flow_to_polychain(sol)
    out["networks"] = {k: {"cost": mass_Mh(p.h, v), "segments": len(v),
                           "boundary_matches": v.boundary().allclose(p.boundary, atol=1e-8)}
                       for k, v in nets.items()}
    if sc.calibration:
        fld = _field(sc)
        G = GeneratedNorm(p.h, sc.n)
        reports = {}
        for name, net in nets.items():
            try:
                rep = verify_calibration_field(fld, net, p.boundary, G)
            except CertificateError as exc:
                raise ScenarioError([("calibration", str(exc))]) from exc
            reports[name] = rep.to_dict()
            files[f"field_{name}.csv"] = rep.residuals_csv()
        out["field_certificates"] = reports
    return out


def _task_flatnorm(sc, files):
    m = None
    chain = sc.chain
    if "faces" in chain:
        m = chain.get("m")
    elif "segments" in chain and chain["segments"]:
        m = len(chain["segments"][0]["theta"])
    h = build_norm(sc.norm, m)
    try:
        if "faces" in chain or "k" in chain:
            P = GridChain.from_dict(chain)
        else:
            if sc.grid is None:
                raise ScenarioError([("grid", "required to rasterize a segment chain")])
            grid = Grid2D.from_dict(sc.grid)
            P = rasterize(PolyChain1.from_dict({**chain, "n": 2, "m": h.m}), grid)
    except (ChainError, KeyError) as exc:
        raise ScenarioError([("chain", str(exc))]) from exc
    if P.m != h.m:
        raise ScenarioError([("chain", f"chain has {P.m} materials, norm has {h.m}")])
    try:
        res = grid_flat_norm(P, h)
    except FlatNormError as exc:
        raise NumericalFailure(str(exc)) from exc
    out = res.to_dict()
    out["mass"] = mass_Mh(h, P)
    _expected(sc, res.value, out)
    return out


def _task_microstructure(sc, files):
    ms = sc.microstructure
    M = np.array(ms["matrix"], float)
    h = build_norm(sc.norm, M.shape[0])
    box = ms.get("box", [[0.0, 0.0], [1.0, 1.0]])
    dec = [(d["theta"], d["e"]) for d in ms["decomposition"]]
    try:
        study = relaxation_study(M, dec, ms["ks"], default_forms(h.m, M.shape[1]), h, box)
    except ChainError as exc:
        raise ScenarioError([("microstructure", str(exc))]) from exc
    files["study.csv"] = study.to_csv()
    if dec:
        P = microstructure_chain(dec, max(ms["ks"]), box)
        lines = ["family,ax,ay,bx,by," + ",".join(f"theta{i}" for i in range(h.m))]
        fam = _families(P, dec)
        for f, (a, b, t) in zip(fam, P):
            lines.append(",".join([str(f)] + [repr(float(v)) for v in (*a, *b, *t)]))
        files["microstructure.csv"] = "\n".join(lines) + "\n"
    out = study.to_dict()
    G = GeneratedNorm(h, M.shape[1], extra_directions=[np.asarray(e, float) / np.linalg.norm(e) for _, e in dec] or None)
    br = eval_H(G, M, gap_tol=sc.gap_tol or GAP_TOL)
    out["H_bracket"] = {"lower": br.lower, "upper": br.upper, "status": br.status}
    _expected(sc, study.expected_mass, out)
    return out


def _families(P, dec):
    dirs = np.array([np.asarray(e, float) / np.linalg.norm(e) for _, e in dec])
    return [int(np.argmax(np.abs(dirs @ d))) for d in P.directions]


def _task_h_eval(sc, files):
    M = np.array(sc.matrix, float)
    h = build_norm(sc.norm, M.shape[0])
    if h.m != M.shape[0]:
        raise ScenarioError([("matrix", f"expected {h.m} rows")])
    extra = None
    if sc.directions:
        extra = [np.asarray(d, float) / np.linalg.norm(d) for d in sc.directions]
    G = GeneratedNorm(h, M.shape[1], extra_directions=extra)
    br = eval_H(G, M, gap_tol=sc.gap_tol or GAP_TOL, warm_start=sc.warm_start)
    out = {"lower": br.lower, "upper": br.upper, "gap": br.gap, "status": br.status,
           "certificate": br.certificate.tolist(),
           "decomposition": [{"theta": np.asarray(t).tolist(), "e": np.asarray(e).tolist()}
                             for t, e in br.decomposition]}
    _expected(sc, br.lower, out)
    if br.status != "ok":
        raise NumericalFailure(f"H bracket width {br.gap:.3e} exceeds the requested tolerance")
    return out


_TASKS = {"solve": _task_solve, "dual": _task_dual, "calibrate": _task_calibrate,
          "flatnorm": _task_flatnorm, "microstructure": _task_microstructure,
          "h-eval": _task_h_eval}


# ----------------------------------------------------------------------------
# runner
# ----------------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


@dataclass
class RunRecord:
    """Outcome of one scenario run."""

    scenario_hash: str
    version: str
    status: str
    exit_code: int
    outputs: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def result(self):
        """Deterministic part of the record (written to ``result.json``)."""
        return _clean({"scenario_hash": self.scenario_hash, "version": self.version,
                       "status": self.status, "exit_code": self.exit_code,
                       "outputs": self.outputs})


def run_scenario(scenario, out_dir=None):
    """Run a scenario and optionally write its files to ``out_dir``.

    Input problems raise :class:`ScenarioError`; numerical failures are
    reported in the record with exit code 3.
    """
    t0 = time.perf_counter()
    files = {}
    try:
        outputs = _TASKS[scenario.task](scenario, files)
        status, code = "ok", EXIT_OK
    except NumericalFailure as exc:
        outputs, status, code = {"error": str(exc)}, "numerical-failure", EXIT_NUMERICAL
    except (FlowError, ChainError, NormError) as exc:
        raise ScenarioError([("", str(exc))]) from exc
    elapsed = time.perf_counter() - t0
    rec = RunRecord(scenario.digest(), __version__, status, code,
                    {"task": scenario.task, "name": scenario.name, **outputs},
                    {"total_seconds": elapsed}, files)
    if out_dir is not None:
        write_record(rec, scenario, out_dir)
    return rec


def write_record(rec, scenario, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.json").write_text(scenario.to_json() + "\n")
    (out / "result.json").write_text(json.dumps(rec.result(), indent=1, sort_keys=True,
                                                allow_nan=False) + "\n")
    (out / "timings.json").write_text(json.dumps(rec.timings, indent=1) + "\n")
    for name, text in rec.files.items():
        (out / name).write_text(text)


# ----------------------------------------------------------------------------
# built-in examples
# ----------------------------------------------------------------------------

def _segments(chain):
    return {"segments": [{"a": a.tolist(), "b": b.tolist(), "theta": t.tolist()} for a, b, t in chain]}


def _field_dict(fld):
    return {"box": [fld.lo.tolist(), fld.hi.tolist()],
            "regions": [{"A": r.A.tolist(), "b": r.b.tolist(), "Phi": np.asarray(r.Phi).tolist(),
                         **({"name": r.name} if r.name else {})} for r in fld.regions]}


def _from_worked(ex, description, seed=None):
    data = {
        "name": ex.name, "description": description, "task": "calibrate",
        "norm": ex.h.to_dict(), "n": 2,
        "boundary": {"atoms": [{"x": x.tolist(), "theta": t.tolist()} for x, t in ex.boundary]},
        "graph": ex.graph.to_dict(),
        "networks": {k: _segments(v) for k, v in ex.networks.items()},
        "calibration": _field_dict(ex.field),
        "expected": {"cost": ex.expected_cost, "tol": 1e-6},
    }
    if seed is not None:
        data["seed"] = int(seed)
    return data


def _two_sources(seed):
    return _from_worked(gallery.two_sources(False),
                        "two bundles through a tripod; constant field certifies")


def _two_sources_crossed(seed):
    return _from_worked(gallery.two_sources(True),
                        "crossed sinks; two optimal networks share a four-region field")


def _cycle(seed):
    return _from_worked(gallery.cycle(), "optimal network containing a loop")


def _star(seed, k=5):
    ex, _ = gallery.star_junction(k, seed)
    return _from_worked(ex, f"degree-{k} junction certified by the identity field", seed)


def _homogenization(seed):
    dec = [{"theta": t.tolist(), "e": e.tolist()}
           for t, e in zip(gallery.HOMOG_BUNDLES, gallery.HOMOG_DIRECTIONS)]
    return {"name": "paper/homogenization", "task": "microstructure", "norm": "linf-hex",
            "description": "three segment families whose flux is the identity matrix",
            "microstructure": {"matrix": np.eye(2).tolist(), "decomposition": dec,
                               "ks": [4, 8, 16], "box": [[0.0, 0.0], [1.0, 1.0]]},
            "expected": {"value": float(gallery.H_OF_IDENTITY), "tol": 1e-9}}


def _hexnorm_H(seed):
    return {"name": "paper/hexnorm-H", "task": "h-eval", "norm": "linf-hex",
            "description": "generated matrix norm of the identity for the hexagonal cost",
            "matrix": np.eye(2).tolist(), "warm_start": gallery.M_BAR.tolist(),
            "directions": gallery.HOMOG_DIRECTIONS.tolist(), "gap_tol": 1e-6,
            "expected": {"value": float(gallery.H_OF_IDENTITY), "tol": 1e-6}}


BUILTINS = {
    "paper/two-sources": (_two_sources, "tripod network for two bundles, cost 6"),
    "paper/two-sources-crossed": (_two_sources_crossed, "crossed sinks, two optimizers of cost 6"),
    "paper/cycle": (_cycle, "network with a loop, cost 2 + 2 sqrt 3"),
    "paper/star-junction": (_star, "junction of degree k (name:k, default 5), seeded"),
    "paper/homogenization": (_homogenization, "microstructure of the identity flux"),
    "paper/hexnorm-H": (_hexnorm_H, "bracket of H(I) for the hexagonal cost"),
}


def list_examples():
    """``[(name, description), ...]`` in a stable order."""
    return [(name, desc) for name, (_, desc) in BUILTINS.items()]


def builtin(name, seed=0):
    """Scenario of a built-in example; ``paper/star-junction:k`` selects the degree."""
    base, _, arg = name.partition(":")
    if base not in BUILTINS:
        raise ScenarioError([("", f"unknown example {name!r}")])
    fn = BUILTINS[base][0]
    if arg:
        if base != "paper/star-junction" or not re.fullmatch(r"\d+", arg):
            raise ScenarioError([("", f"bad example parameter in {name!r}")])
        data = fn(seed, int(arg))
    else:
        data = fn(seed)
    return Scenario.from_dict(data)


def safe_dirname(name):
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_") or "run"


__all__ = [
    "BUILTINS", "EXIT_INPUT", "EXIT_NUMERICAL", "EXIT_OK", "NumericalFailure", "RunRecord",
    "SCHEMA", "Scenario", "ScenarioError", "TASKS", "build_norm", "builtin", "list_examples",
    "run_scenario", "safe_dirname", "validate", "write_record",
]
