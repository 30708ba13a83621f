"""JSON scenario and bids files.

Scenario file::

    {"retail_price": 10,
     "demand": {"kind": "uniform", "low": 0, "high": 1},
     "suppliers": [{"name": "s1",
                    "execution_cost": {"kind": "constant", "value": 1},
                    "reservation_cost": {"kind": "piecewise_linear",
                                         "knots": [[0, 3], [1, 4]]},
                    "capacity": 0.8}]}

Demand kinds are ``uniform {low, high}``, ``discrete {points: [[d, p], ...]}``
and ``piecewise_cdf {knots: [[d, F], ...]}``.  A constant curve is defined on
``[0, capacity]`` (or ``[0, d_high]`` without a capacity).

Bids file: a list of ``{supplier, execution_price, reservation_price,
lump_sum?, power_margin?: {margin, theta, beta}}``.  Unknown keys are errors.
"""
from __future__ import annotations

import json
import math

from .buyer import Bid, BidProfile
from .chain import Scenario, Supplier
from .curves import MarginalCurve, PowerMargin
from .demand import DemandModel


class InputError(ValueError):
    """Malformed input file; carries a line/column when the JSON itself is bad."""

    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line, self.column = line, column


def _loads(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: {exc.msg}", exc.lineno, exc.colno) from None


def _keys(obj, path, required, optional=()):
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise InputError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise InputError(f"{path}: missing key(s) {missing}")


def _num(v, path) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise InputError(f"{path}: expected a finite number")
    return float(v)


def _pairs(v, path):
    if not isinstance(v, list) or not v:
        raise InputError(f"{path}: expected a non-empty list of pairs")
    out = []
    for k, p in enumerate(v):
        if not isinstance(p, list) or len(p) != 2:
            raise InputError(f"{path}[{k}]: expected a pair")
        out.append((_num(p[0], f"{path}[{k}][0]"), _num(p[1], f"{path}[{k}][1]")))
    return out


def parse_curve(obj, x_max: float, path: str = "curve") -> MarginalCurve:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InputError(f"{path}: expected a curve object with a 'kind'")
    try:
        if obj["kind"] == "constant":
            _keys(obj, path, ("kind", "value"))
            return MarginalCurve.constant(_num(obj["value"], f"{path}.value"), x_max)
        if obj["kind"] == "piecewise_linear":
            _keys(obj, path, ("kind", "knots"))
            return MarginalCurve.from_knots(_pairs(obj["knots"], f"{path}.knots"))
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    raise InputError(f"{path}: unknown curve kind {obj['kind']!r}")


def curve_to_obj(curve: MarginalCurve, x_max: float) -> dict:
    if curve.is_constant and curve.xs == (0.0, float(x_max)):
        return {"kind": "constant", "value": curve.vs[0]}
    return {"kind": "piecewise_linear", "knots": [[x, v] for x, v in curve.knots]}


def parse_demand(obj, path="demand") -> DemandModel:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InputError(f"{path}: expected a demand object with a 'kind'")
    kind = obj["kind"]
    try:
        if kind == "uniform":
            _keys(obj, path, ("kind", "low", "high"))
            return DemandModel.uniform(_num(obj["low"], f"{path}.low"), _num(obj["high"], f"{path}.high"))
        if kind == "discrete":
            _keys(obj, path, ("kind", "points"))
            return DemandModel.discrete(_pairs(obj["points"], f"{path}.points"))
        if kind == "piecewise_cdf":
            _keys(obj, path, ("kind", "knots"))
            return DemandModel.piecewise_cdf(_pairs(obj["knots"], f"{path}.knots"))
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    raise InputError(f"{path}: unknown demand kind {kind!r}")


def demand_to_obj(d: DemandModel) -> dict:
    if d.kind == "uniform":
        return {"kind": "uniform", "low": d.values[0], "high": d.values[1]}
    if d.kind == "discrete":
        return {"kind": "discrete", "points": [[v, p] for v, p in zip(d.values, d.weights)]}
    return {"kind": "piecewise_cdf", "knots": [[v, p] for v, p in zip(d.values, d.weights)]}


def _domain(capacity, demand: DemandModel) -> float:
    return demand.high if capacity is None else capacity


def scenario_from_obj(obj) -> Scenario:
    _keys(obj, "scenario", ("retail_price", "demand", "suppliers"))
    rho = _num(obj["retail_price"], "retail_price")
    demand = parse_demand(obj["demand"])
    sups = obj["suppliers"]
    if not isinstance(sups, list) or not sups:
        raise InputError("suppliers: expected a non-empty list")
    out = []
    for k, s in enumerate(sups):
        path = f"suppliers[{k}]"
        _keys(s, path, ("name", "execution_cost", "reservation_cost"), ("capacity",))
        if not isinstance(s["name"], str) or not s["name"]:
            raise InputError(f"{path}.name: expected a non-empty string")
        cap = None if s.get("capacity") is None else _num(s["capacity"], f"{path}.capacity")
        if cap is not None and cap <= 0:
            raise InputError(f"{path}.capacity: must be positive")
        dom = _domain(cap, demand)
        out.append(Supplier(s["name"], parse_curve(s["execution_cost"], dom, f"{path}.execution_cost"),
                            parse_curve(s["reservation_cost"], dom, f"{path}.reservation_cost"), cap))
    try:
        return Scenario(rho, demand, out)
    except ValueError as exc:
        raise InputError(f"scenario: {exc}") from None


def scenario_to_obj(sc: Scenario) -> dict:
    sups = []
    for s in sc.suppliers:
        dom = _domain(s.capacity, sc.demand)
        d = {"name": s.name, "execution_cost": curve_to_obj(s.exec_cost, dom),
             "reservation_cost": curve_to_obj(s.res_cost, dom)}
        if s.capacity is not None:
            d["capacity"] = s.capacity
        sups.append(d)
    return {"retail_price": sc.rho, "demand": demand_to_obj(sc.demand), "suppliers": sups}


def loads_scenario(text: str) -> Scenario:
    return scenario_from_obj(_loads(text, "scenario"))


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads_scenario(fh.read())


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_obj(sc), indent=2)


def bids_from_obj(obj, scenario: Scenario) -> BidProfile:
    if not isinstance(obj, list):
        raise InputError("bids: expected a list")
    names = scenario.names
    bids = [None] * scenario.n
    for k, b in enumerate(obj):
        path = f"bids[{k}]"
        _keys(b, path, ("supplier", "execution_price", "reservation_price"),
              ("lump_sum", "power_margin"))
        name = b["supplier"]
        if name not in names:
            raise InputError(f"{path}.supplier: unknown supplier {name!r}")
        i = names.index(name)
        if bids[i] is not None:
            raise InputError(f"{path}.supplier: duplicate bid for {name!r}")
        if "lump_sum" in b and "power_margin" in b:
            raise InputError(f"{path}: at most one of lump_sum and power_margin")
        dom = _domain(scenario.suppliers[i].capacity, scenario.demand)
        power = None
        if "power_margin" in b:
            pm = b["power_margin"]
            _keys(pm, f"{path}.power_margin", ("margin", "theta", "beta"))
            try:
                power = PowerMargin(*(_num(pm[key], f"{path}.power_margin.{key}")
                                      for key in ("margin", "theta", "beta")))
            except InputError:
                raise
            except ValueError as exc:
                raise InputError(f"{path}.power_margin: {exc}") from None
        lump = _num(b["lump_sum"], f"{path}.lump_sum") if "lump_sum" in b else 0.0
        try:
            bids[i] = Bid(parse_curve(b["execution_price"], dom, f"{path}.execution_price"),
                          parse_curve(b["reservation_price"], dom, f"{path}.reservation_price"),
                          lump, power)
        except InputError:
            raise
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from None
    missing = [names[i] for i, b in enumerate(bids) if b is None]
    if missing:
        raise InputError(f"bids: no bid for supplier(s) {missing}")
    return BidProfile(scenario, bids)


def bids_to_obj(profile: BidProfile) -> list:
    out = []
    sc = profile.scenario
    for s, b in zip(sc.suppliers, profile.bids):
        dom = _domain(s.capacity, sc.demand)
        d = {"supplier": s.name, "execution_price": curve_to_obj(b.exec_price, dom),
             "reservation_price": curve_to_obj(b.res_price, dom)}
        if b.lump_sum > 0:
            d["lump_sum"] = b.lump_sum
        if b.power is not None:
            d["power_margin"] = {"margin": b.power.margin, "theta": b.power.theta,
                                 "beta": b.power.beta}
        out.append(d)
    return out


def loads_bids(text: str, scenario: Scenario) -> BidProfile:
    return bids_from_obj(_loads(text, "bids"), scenario)


def load_bids(path, scenario: Scenario) -> BidProfile:
    with open(path, encoding="utf-8") as fh:
        return loads_bids(fh.read(), scenario)


def dumps_bids(profile: BidProfile) -> str:
    return json.dumps(bids_to_obj(profile), indent=2)
