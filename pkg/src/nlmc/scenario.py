"""JSON scenario files: parsing, validation, and construction of kernel + aggregator.

Schema (top-level keys)::

    name        str, required
    kernel      {"builtin": id} | {"table": {...}} | {"app": kind, ...}
    aggregator  {"linear": [m_0, ..., m_{n-1}]}      optional, overrides the default
    family      "SD" | "cone_O" | {"linear_cone": [[...], ...]}   default "SD"
    h_domain    [lo, hi]                             required whenever kernel is given
    restrict    [lo, hi]                             optional local interval
    solver      {"grid_step": float, "tol": float}
    dynamics    {"mu0": [...], "steps": int}
    queue       {"ES": float, "ES2": float} | {"service": "exponential", "rate": float}
                | {"service": "deterministic", "time": float}
    seed        int
    command     default command for this scenario

Table kernels give one full matrix per aggregator knot and interpolate
linearly in ``h`` between knots.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import apps, catalog
from .apps.discretize import DiscreteLaw
from .certify import AffineChainSpec
from .core import Aggregator, OrderFamily, StateSpace
from .errors import ParseError, ValidationError

BUILTINS = {
    "example1i": lambda: apps.example1i_fixture(),
    "example1ii": lambda: apps.example1ii_fixture(),
    "example2": catalog.example2,
    "example3": catalog.example3,
    "example4": catalog.example4,
    "example5": catalog.example5,
    "example7": lambda: apps.example7_fixture(),
    "cor1": lambda: _cor1_table(),
    "wealth": lambda: apps.wealth_fixture(),
    "lindley": lambda: apps.build_lindley_kernel(apps.lindley_fixture()),
}

COMMANDS = ("certify", "solve", "simulate", "queue", "nleq")
_KEYS = {"name", "kernel", "aggregator", "family", "h_domain", "restrict", "solver", "dynamics", "queue", "seed",
         "command", "description"}


def _cor1_table():
    Q = catalog.table_kernel(
        [0.0, 1.0],
        [[[0.5, 0.5], [0.3, 0.7]], [[0.9, 0.1], [0.7, 0.3]]],
        name="cor1",
    )
    return Q, Aggregator.linear([0.0, 1.0])


@dataclass(frozen=True)
class Scenario:
    name: str
    kernel: Optional[dict] = None
    aggregator: Optional[dict] = None
    family: object = "SD"
    h_domain: Optional[tuple] = None
    restrict: Optional[tuple] = None
    grid_step: Optional[float] = None
    tol: float = 1e-10
    mu0: Optional[tuple] = None
    steps: int = 100
    queue: Optional[dict] = None
    seed: int = 0
    command: Optional[str] = None
    source: str = ""
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def builtin(self) -> Optional[str]:
        return (self.kernel or {}).get("builtin")


def _interval(value, name):
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ValidationError("expected [lo, hi]", name)
    try:
        lo, hi = float(value[0]), float(value[1])
    except (TypeError, ValueError):
        raise ValidationError("bounds must be numbers", name) from None
    if not lo <= hi:
        raise ValidationError(f"lo must not exceed hi, got [{lo}, {hi}]", name)
    return lo, hi


def _number(d, key, name, kind=float, positive=False):
    if key not in d:
        return None
    try:
        v = kind(d[key])
    except (TypeError, ValueError):
        raise ValidationError(f"expected a {kind.__name__}", f"{name}.{key}") from None
    if positive and not v > 0:
        raise ValidationError("must be positive", f"{name}.{key}")
    return v


def _validate_kernel(k):
    if not isinstance(k, dict):
        raise ValidationError("expected an object", "kernel")
    forms = [f for f in ("builtin", "table", "app") if f in k]
    if len(forms) != 1:
        raise ValidationError("give exactly one of builtin, table, app", "kernel")
    if "builtin" in k and k["builtin"] not in BUILTINS:
        raise ValidationError(f"unknown builtin {k['builtin']!r}; known ids: {', '.join(sorted(BUILTINS))}",
                              "kernel.builtin")
    if "table" in k:
        t = k["table"]
        if not isinstance(t, dict) or "h_knots" not in t or "rows" not in t:
            raise ValidationError("table needs h_knots and rows", "kernel.table")
    if "app" in k and k["app"] not in ("ar", "lindley", "wealth", "affine"):
        raise ValidationError(f"unknown app {k['app']!r}; known: affine, ar, lindley, wealth", "kernel.app")


def scenario_from_dict(data: dict, source: str = "") -> Scenario:
    if not isinstance(data, dict):
        raise ValidationError("scenario must be a JSON object")
    unknown = sorted(set(data) - _KEYS)
    if unknown:
        raise ValidationError(f"unknown field(s) {', '.join(unknown)}", unknown[0])
    if not isinstance(data.get("name"), str) or not data["name"]:
        raise ValidationError("required string", "name")
    kernel = data.get("kernel")
    h_domain = None
    if kernel is not None:
        _validate_kernel(kernel)
        if "h_domain" not in data:
            raise ValidationError("required when a kernel is given", "h_domain")
    if "h_domain" in data:
        h_domain = _interval(data["h_domain"], "h_domain")
    restrict = _interval(data["restrict"], "restrict") if "restrict" in data else None
    solver = data.get("solver", {})
    if not isinstance(solver, dict):
        raise ValidationError("expected an object", "solver")
    grid_step = _number(solver, "grid_step", "solver", positive=True)
    tol = _number(solver, "tol", "solver", positive=True) or 1e-10
    dyn = data.get("dynamics", {})
    if not isinstance(dyn, dict):
        raise ValidationError("expected an object", "dynamics")
    steps = _number(dyn, "steps", "dynamics", kind=int, positive=True) or 100
    mu0 = tuple(float(v) for v in dyn["mu0"]) if "mu0" in dyn else None
    family = data.get("family", "SD")
    if not (family in ("SD", "cone_O") or (isinstance(family, dict) and "linear_cone" in family)):
        raise ValidationError("expected 'SD', 'cone_O' or {'linear_cone': [...]}", "family")
    queue = data.get("queue")
    if queue is not None:
        if not isinstance(queue, dict):
            raise ValidationError("expected an object", "queue")
        if not ({"ES", "ES2"} <= set(queue) or queue.get("service") in ("exponential", "deterministic")):
            raise ValidationError("give ES and ES2, or service 'exponential'/'deterministic'", "queue")
    command = data.get("command")
    if command is not None and command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}; known: {', '.join(COMMANDS)}", "command")
    agg = data.get("aggregator")
    if agg is not None and not (isinstance(agg, dict) and "linear" in agg):
        raise ValidationError("expected {'linear': [...]}", "aggregator")
    seed = _number(data, "seed", "scenario", kind=int)
    return Scenario(
        name=data["name"], kernel=kernel, aggregator=agg, family=family, h_domain=h_domain,
        restrict=restrict, grid_step=grid_step, tol=tol, mu0=mu0, steps=steps, queue=queue,
        seed=seed or 0, command=command, source=source, raw=data,
    )


def resolve_path(path) -> Path:
    """A filesystem path, or the name of a bundled scenario (``example2``, ``mm1``...)."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix == ".json" else p.name + ".json"
    bundled = resources.files("nlmc") / "scenarios" / name
    if bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(f"no scenario file {path!r} and no bundled scenario named {p.stem!r}")


def bundled_scenarios() -> list:
    return sorted(p.name[:-5] for p in (resources.files("nlmc") / "scenarios").iterdir() if p.name.endswith(".json"))


def parse_scenario(path) -> Scenario:
    p = resolve_path(path)
    text = p.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return scenario_from_dict(data, source=str(p))
    except ValidationError as exc:
        raise ValidationError(f"{p}: {exc}", exc.field) from None


# construction

def _law(d, name) -> DiscreteLaw:
    try:
        return DiscreteLaw(tuple(d["values"]), tuple(d["probs"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad law: {exc}", name) from None


def _grid(g, name) -> StateSpace:
    if isinstance(g, dict):
        return StateSpace.line(np.linspace(float(g["start"]), float(g["stop"]), int(g["num"])))
    if isinstance(g, list):
        return StateSpace.line(g)
    raise ValidationError("expected a list or {start, stop, num}", name)


def _build_app(k: dict):
    kind = k["app"]
    try:
        if kind == "ar":
            grid = _grid(k["grid"], "kernel.grid")
            m = k.get("m", "identity")
            weights = grid.values if m == "identity" else m
            return apps.build_ar_kernel(float(k["a"]), k.get("drift", "linear"), _law(k["noise"], "kernel.noise"),
                                        weights, grid, c=k.get("c"))
        if kind == "affine":
            spec = AffineChainSpec(tuple(k["a"]), tuple(k["beta"]), tuple(k["gamma"]))
            grid = _grid(k["grid"], "kernel.grid").values
            noise = _law(k["noise"], "kernel.noise")
            return apps.build_affine_kernel(spec, [grid] * len(spec.a), [noise] * len(spec.a))
        if kind == "lindley":
            cells = int(k.get("cells", 50))
            low, high = _law(k["arrival_low"], "kernel.arrival_low"), _law(k["arrival_high"], "kernel.arrival_high")
            spec = apps.QueueSpec(
                _law(k["service"], "kernel.service"),
                apps.queue.mixture_family(low, high, float(cells - 1)),
                StateSpace.line(np.arange(cells, dtype=float)),
            )
            return apps.build_lindley_kernel(spec)
        if kind == "wealth":
            s = float(k["savings_rate"])
            r0, r1 = float(k["return"]["intercept"]), float(k["return"]["slope"])
            return apps.build_wealth_kernel(
                [lambda x: s * x],
                [lambda h: DiscreteLaw.point(r0 - r1 * h)],
                _law(k["income"], "kernel.income"),
                _grid(k["grid"], "kernel.grid"),
            )
    except KeyError as exc:
        raise ValidationError(f"missing parameter {exc.args[0]!r}", f"kernel.{exc.args[0]}") from None
    raise ValidationError(f"unknown app {kind!r}", "kernel.app")


def affine_spec(sc: Scenario) -> Optional[AffineChainSpec]:
    """The affine chain behind the scenario, when there is one."""
    k = sc.kernel or {}
    if k.get("builtin") == "example1ii":
        return apps.example1ii_spec()
    if k.get("app") == "affine":
        return AffineChainSpec(tuple(k["a"]), tuple(k["beta"]), tuple(k["gamma"]))
    return None


def build(sc: Scenario):
    """Kernel and aggregator for the scenario, with ``h_domain`` applied."""
    if sc.kernel is None:
        raise ValidationError("this command needs a kernel", "kernel")
    k = sc.kernel
    if "builtin" in k:
        Q, H = BUILTINS[k["builtin"]]()
    elif "table" in k:
        t = k["table"]
        try:
            Q = catalog.table_kernel(t["h_knots"], t["rows"], states=t.get("states"))
        except ValueError as exc:
            raise ValidationError(str(exc), "kernel.table") from None
        H = None
    else:
        Q, H = _build_app(k)
    if sc.aggregator is not None:
        H = Aggregator.linear(sc.aggregator["linear"])
        if H.m.size != Q.n_states:
            raise ValidationError(f"{H.m.size} weights for {Q.n_states} states", "aggregator.linear")
    if H is None:
        raise ValidationError("table kernels need an aggregator", "aggregator")
    lo, hi = sc.h_domain
    nlo, nhi = Q.h_domain
    if lo < nlo - 1e-12 or hi > nhi + 1e-12:
        if "builtin" in k or "app" in k:
            raise ValidationError(f"[{lo}, {hi}] exceeds the kernel's natural domain [{nlo}, {nhi}]", "h_domain")
    Q = dataclasses.replace(Q, h_domain=(lo, hi))
    if sc.mu0 is not None and len(sc.mu0) != Q.n_states:
        raise ValidationError(f"{len(sc.mu0)} entries for {Q.n_states} states", "dynamics.mu0")
    return Q, H


def order_family(sc: Scenario, dim: int = 1) -> OrderFamily:
    if sc.family == "SD":
        return OrderFamily.sd()
    if sc.family == "cone_O":
        return OrderFamily.cone_o(dim)
    return OrderFamily("LinearCone", tuple(sc.family["linear_cone"]))


def queue_moments(sc: Scenario):
    q = sc.queue
    if "ES" in q:
        return float(q["ES"]), float(q["ES2"])
    if q["service"] == "exponential":
        rate = float(q["rate"])
        return 1.0 / rate, 2.0 / rate**2
    d = float(q["time"])
    return d, d * d
