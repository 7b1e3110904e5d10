"""Metric scenes: base/perturbation field matrices, probes, and the catalog.

A scene is a pair of symmetric expression matrices (base metric and its
perturbation direction), an optional positive conformal factor, and a set of
named probe functions.  Only the upper triangle of each matrix is stored;
symmetry is a storage convention, not a runtime check.  Scenes are immutable
after construction and safe to share across workers.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SPDError
from .exprs import (Add, Const, Coord, Expr, Mul, ONE, ZERO, parse_expr)
from .jets import Jet, jet_stack

DEFAULT_DIM = 4
DEFAULT_ORDER = 2

_SCENE_KEYS = {"dim", "order", "base", "perturbation", "conformal_factor",
               "probes", "periodic", "period", "name"}


@dataclass(frozen=True)
class ChartPoint:
    coords: tuple

    def __post_init__(self):
        if not all(np.isfinite(c) for c in self.coords):
            raise ConfigError(f"non-finite chart point {self.coords}")

    @classmethod
    def of(cls, *coords):
        return cls(tuple(float(c) for c in coords))

    def array(self):
        return np.asarray(self.coords, dtype=float)


def _as_coords(point):
    if isinstance(point, ChartPoint):
        return point.array()
    return np.asarray(point, dtype=float)


class MetricScene:
    def __init__(self, dim, base, perturbation, conformal_factor=None,
                 probes=None, periodic=False, period=2 * np.pi,
                 order=DEFAULT_ORDER, name="custom"):
        self.dim = int(dim)
        self.order = int(order)
        self.base = dict(base)            # {(i, j) i <= j: Expr}, 0-based
        self.perturbation = dict(perturbation)
        self.conformal_factor = conformal_factor
        self.probes = dict(probes or {})
        self.periodic = bool(periodic)
        self.period = float(period)
        self.name = name
        for key in ("f0", "f1", "f2", "u"):
            self.probes.setdefault(key, _default_probe(key))

    # -- entry access ---------------------------------------------------------

    def base_entry(self, i, j) -> Expr:
        return self.base.get((min(i, j), max(i, j)), ZERO)

    def pert_entry(self, i, j) -> Expr:
        return self.perturbation.get((min(i, j), max(i, j)), ZERO)

    def perturbation_is_zero(self) -> bool:
        return all(e.is_zero() for e in self.perturbation.values())

    def probe(self, name) -> Expr:
        if name not in self.probes:
            raise ConfigError(f"scene has no probe '{name}'")
        return self.probes[name]

    # -- evaluation -----------------------------------------------------------

    def eval_matrix_jet(self, entries_fn, point, degree) -> Jet:
        coords = _as_coords(point)
        rows = []
        for i in range(self.dim):
            rows.append(jet_stack([entries_fn(i, j).jet(coords, degree)
                                   for j in range(self.dim)]))
        return jet_stack(rows, axis=-2)

    def eval_metric_pair(self, point, degree=2):
        """Jets of every base and perturbation entry at the point(s)."""
        gbar = self.eval_matrix_jet(self.base_entry, point, degree)
        self.check_spd(gbar.value)
        gper = self.eval_matrix_jet(self.pert_entry, point, degree)
        return gbar, gper

    @staticmethod
    def check_spd(matrix):
        try:
            np.linalg.cholesky(matrix)
        except np.linalg.LinAlgError:
            pivots = np.linalg.eigvalsh(matrix)
            raise SPDError("base metric is not positive definite",
                           smallest_pivot=float(np.min(pivots)))

    def conformal_factor_values(self, point):
        if self.conformal_factor is None:
            raise ConfigError("scene has no conformal factor")
        vals = self.conformal_factor.jet(_as_coords(point), 0).value
        if np.any(vals <= 0):
            raise ConfigError("conformal factor must be positive at the "
                              "requested points")
        return vals

    def spd_eps_radius(self, point, limit=1.0, tol=1e-6):
        """Largest eps in (0, limit] keeping base + eps*perturbation SPD,
        found by bisection at the given point(s)."""
        gbar, gper = self.eval_metric_pair(point, degree=0)
        g0, g1 = gbar.value, gper.value

        def spd_at(eps):
            try:
                np.linalg.cholesky(g0 + eps * g1)
                return True
            except np.linalg.LinAlgError:
                return False

        if spd_at(limit):
            return limit
        lo, hi = 0.0, limit
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if spd_at(mid):
                lo = mid
            else:
                hi = mid
        return lo

    # -- derived scenes ---------------------------------------------------------

    def scaled_by(self, factor: Expr) -> "MetricScene":
        """Scene with both metrics multiplied by the same positive factor."""
        return MetricScene(
            self.dim,
            {k: Mul(factor, e) for k, e in self.base.items()},
            {k: Mul(factor, e) for k, e in self.perturbation.items()},
            conformal_factor=self.conformal_factor,
            probes=self.probes, periodic=self.periodic, period=self.period,
            order=self.order, name=f"{self.name}*factor",
        )

    def with_conformal_factor(self, factor: Expr) -> "MetricScene":
        return MetricScene(self.dim, self.base, self.perturbation,
                           conformal_factor=factor, probes=self.probes,
                           periodic=self.periodic, period=self.period,
                           order=self.order, name=self.name)

    def collapsed_entry(self, i, j, eps: float) -> Expr:
        return Add(self.base_entry(i, j), Mul(Const(eps), self.pert_entry(i, j)))

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        def matrix_doc(entries):
            return {f"{i + 1}{j + 1}": str(e) for (i, j), e in sorted(entries.items())
                    if not e.is_zero()}

        doc = {
            "dim": self.dim,
            "order": self.order,
            "base": matrix_doc(self.base),
            "perturbation": matrix_doc(self.perturbation),
            "probes": {k: str(v) for k, v in sorted(self.probes.items())},
            "periodic": self.periodic,
            "period": self.period,
            "name": self.name,
        }
        if self.conformal_factor is not None:
            doc["conformal_factor"] = str(self.conformal_factor)
        return doc

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_json(cls, doc: dict) -> "MetricScene":
        unknown = set(doc) - _SCENE_KEYS
        if unknown:
            raise ConfigError(f"unknown scene keys: {sorted(unknown)}")
        dim = int(doc.get("dim", DEFAULT_DIM))
        if dim < 1:
            raise ConfigError("dim must be positive")

        def matrix_from(docm, label):
            entries = {}
            for key, text in (docm or {}).items():
                if len(key) != 2 or not key.isdigit():
                    raise ConfigError(f"bad {label} entry key '{key}'")
                i, j = int(key[0]) - 1, int(key[1]) - 1
                if not (0 <= i < dim and 0 <= j < dim):
                    raise ConfigError(f"{label} index '{key}' out of range")
                if j < i:
                    i, j = j, i   # only the upper triangle is read
                entries[(i, j)] = parse_expr(text)
            return entries

        factor = doc.get("conformal_factor")
        return cls(
            dim,
            matrix_from(doc.get("base"), "base"),
            matrix_from(doc.get("perturbation"), "perturbation"),
            conformal_factor=parse_expr(factor) if factor else None,
            probes={k: parse_expr(v) for k, v in (doc.get("probes") or {}).items()},
            periodic=doc.get("periodic", False),
            period=doc.get("period", 2 * np.pi),
            order=doc.get("order", DEFAULT_ORDER),
            name=doc.get("name", "custom"),
        )


def load_scene(path) -> MetricScene:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"scene file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scene file {path} is not valid JSON: line "
                          f"{exc.lineno} column {exc.colno}: {exc.msg}")
    return MetricScene.from_json(doc)


def save_scene(scene: MetricScene, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _default_probe(key):
    return {
        "f0": parse_expr("1 + 0.3*sin(x1)"),
        "f1": parse_expr("sin(x1) + 0.5*cos(x2)"),
        "f2": parse_expr("cos(x3) + 0.4*sin(x4)"),
        "u": parse_expr("cos(x2)"),
    }[key]


# -- built-in catalog -----------------------------------------------------------

def _delta_matrix(dim, diag_expr=ONE):
    return {(i, i): diag_expr for i in range(dim)}


def _sphere_factor():
    return parse_expr("4/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2")


def _euclidean4():
    return MetricScene(
        4, _delta_matrix(4), {},
        probes={"f0": parse_expr("x1"), "f1": parse_expr("x1^2"),
                "f2": parse_expr("x2^2"), "u": parse_expr("x1^2")},
        name="euclidean4")


def _sphere4_stereo():
    factor = _sphere_factor()
    pert = parse_expr("0.2/(1 + x1^2 + x2^2 + x3^2 + x4^2)")
    return MetricScene(
        4, _delta_matrix(4, factor), _delta_matrix(4, pert),
        probes={"f0": parse_expr("x1"), "f1": parse_expr("x1*x2"),
                "f2": parse_expr("x2 + 0.5*x3^2"), "u": parse_expr("x1^2 + x2")},
        name="sphere4_stereo")


def _conformally_flat():
    # base metric exp(2*phi)*delta with phi = 0.3*x1
    base = _delta_matrix(4, parse_expr("exp(0.6*x1)"))
    pert = {
        (0, 0): parse_expr("0.2*sin(x1)"),
        (1, 1): parse_expr("0.15*cos(x2)"),
        (2, 2): parse_expr("0.1*sin(x3)"),
        (3, 3): parse_expr("0.1*cos(x4)"),
        (0, 1): parse_expr("0.05*sin(x1 + x2)"),
        (2, 3): parse_expr("0.05*cos(x3 - x4)"),
    }
    return MetricScene(4, base, pert,
                       conformal_factor=parse_expr("exp(0.2*x2)"),
                       probes={"f0": parse_expr("x2"), "f1": parse_expr("x1^2 + x3"),
                               "f2": parse_expr("sin(x2)"), "u": parse_expr("x1*x4")},
                       name="conformally_flat")


def _torus_bump():
    base = {
        (0, 0): parse_expr("1 + 0.2*sin(x1)"),
        (1, 1): parse_expr("1 + 0.2*cos(x2)"),
        (2, 2): parse_expr("1 + 0.15*sin(x3)"),
        (3, 3): parse_expr("1 + 0.15*cos(x4)"),
        (0, 1): parse_expr("0.05*sin(x1 + x2)"),
        (2, 3): parse_expr("0.05*cos(x3 + x4)"),
    }
    pert = {
        (0, 0): parse_expr("0.2*cos(x1)"),
        (1, 1): parse_expr("0.15*sin(x2)"),
        (2, 2): parse_expr("0.1*cos(x3)"),
        (3, 3): parse_expr("0.1*sin(x4)"),
        (0, 2): parse_expr("0.05*sin(x1 + x3)"),
        (1, 3): parse_expr("0.05*cos(x2 - x4)"),
    }
    return MetricScene(
        4, base, pert,
        conformal_factor=parse_expr("1 + 0.2*sin(x2)"),
        probes={"f0": parse_expr("1 + 0.3*sin(x1)"),
                "f1": parse_expr("sin(x1) + 0.5*cos(x2)"),
                "f2": parse_expr("cos(x3) + 0.4*sin(x4)"),
                "f3": parse_expr("1 + 0.25*cos(x4)"),
                "u": parse_expr("cos(x2)")},
        periodic=True, name="torus_bump")


def _random_smooth(seed: int):
    """Seeded SPD pair built from low-frequency trig modes.

    Diagonal dominance keeps the base metric SPD on the whole chart.
    """
    rng = random.Random(seed)

    def trig_term(amp):
        freq_var = rng.randrange(1, 5)
        phase = rng.choice(["sin", "cos"])
        a = round(rng.uniform(-amp, amp), 4)
        return f"{a}*{phase}(x{freq_var})"

    base = {}
    pert = {}
    for i in range(4):
        base[(i, i)] = parse_expr(f"1 + {trig_term(0.15)} + {trig_term(0.1)}")
        pert[(i, i)] = parse_expr(f"{trig_term(0.25)} + {trig_term(0.15)}")
    offdiag = [(0, 1), (1, 2), (2, 3), (0, 3)]
    for (i, j) in rng.sample(offdiag, 2):
        base[(i, j)] = parse_expr(f"{trig_term(0.06)}")
    for (i, j) in rng.sample(offdiag, 2):
        pert[(i, j)] = parse_expr(f"{trig_term(0.1)}")

    def probe():
        return parse_expr(f"{round(rng.uniform(0.5, 1.5), 4)} + {trig_term(0.5)} "
                          f"+ {trig_term(0.4)}")

    return MetricScene(
        4, base, pert,
        conformal_factor=parse_expr(f"1 + {trig_term(0.2)}"),
        probes={"f0": probe(), "f1": probe(), "f2": probe(), "f3": probe(),
                "u": probe()},
        periodic=True, name=f"random_smooth_{seed}")


_CATALOG = {
    "euclidean4": lambda seed: _euclidean4(),
    "sphere4_stereo": lambda seed: _sphere4_stereo(),
    "conformally_flat": lambda seed: _conformally_flat(),
    "torus_bump": lambda seed: _torus_bump(),
    "random_smooth": lambda seed: _random_smooth(seed if seed is not None else 0),
}


def builtin_scene(name: str, seed: int | None = None) -> MetricScene:
    if name not in _CATALOG:
        raise ConfigError(f"unknown built-in scene '{name}'; "
                          f"choices: {sorted(_CATALOG)}")
    return _CATALOG[name](seed)


def builtin_scene_names():
    return sorted(_CATALOG)
