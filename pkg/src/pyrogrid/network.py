"""Coupled transmission + distribution network model and the bundled testbed.

The testbed couples a 14-bus meshed transmission grid with one or more radial
33-node distribution feeders.  Each feeder head hangs off a distinct transmission
load bus through an interface transformer.  Topology and impedance tables live
in ``pyrogrid/data`` as CSV files.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from importlib import resources

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

SCHEMA_VERSION = 1
BASE_MVA = 100.0
# DERs sit last in merit order so they only run when islanded
DER_MARGINAL_COST = 100.0
CRITICALITY_WEIGHT = {"critical": 10.0, "standard": 1.0}

# transmission load buses offered to feeders, in order
DEFAULT_ATTACH_BUSES = (9, 10, 11, 12, 13, 14, 4, 5, 6, 2, 3)


class ConfigurationError(ValueError):
    pass


class Level(str, enum.Enum):
    TX = "Tx"
    DX = "Dx"


class BranchKind(str, enum.Enum):
    OVERHEAD = "line_overhead"
    UNDERGROUND = "line_underground"
    TRANSFORMER = "transformer"


class Hardening(str, enum.Enum):
    STANDARD = "standard"
    HARDENED = "hardened"


@dataclass(frozen=True)
class Bus:
    id: int
    level: Level
    coordinates: tuple[float, float]
    nominal_voltage: float
    feeder: int | None = None


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    kind: BranchKind
    geometry: tuple[tuple[float, float], ...]
    reactance: float
    thermal_rating: float
    spans: tuple[int, ...] = ()
    hardening_level: Hardening = Hardening.STANDARD
    switchable: bool = True
    vegetation_factor: float = 1.0
    feeder: int | None = None

    @property
    def length(self) -> float:
        pts = np.asarray(self.geometry)
        return float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))


@dataclass(frozen=True)
class Pole:
    id: int
    location: tuple[float, float]
    material: str
    supported_branches: tuple[int, ...]
    hardening_level: Hardening = Hardening.STANDARD


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_max: float
    p_min: float = 0.0
    kind: str = "bulk"
    marginal_cost: float = 0.0


@dataclass(frozen=True)
class Load:
    id: int
    bus: int
    demand: float
    criticality: str = "standard"
    customers: int = 0

    @property
    def weight(self) -> float:
        return CRITICALITY_WEIGHT[self.criticality]


@dataclass(frozen=True)
class GridNetwork:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    poles: tuple[Pole, ...] = ()
    generators: tuple[Generator, ...] = ()
    loads: tuple[Load, ...] = ()

    def __post_init__(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("bus ids must be unique")
        known = {b.id: b for b in self.buses}
        for br in self.branches:
            if br.from_bus not in known or br.to_bus not in known:
                raise ConfigurationError(f"branch {br.id} has a dangling endpoint")
            ends = (known[br.from_bus].coordinates, known[br.to_bus].coordinates)
            if len(br.geometry) < 2 or not (np.allclose(br.geometry[0], ends[0], atol=1e-6)
                                            and np.allclose(br.geometry[-1], ends[1], atol=1e-6)):
                raise ConfigurationError(f"branch {br.id} geometry does not start and end at its buses")
            if br.kind == BranchKind.TRANSFORMER and {known[br.from_bus].level, known[br.to_bus].level} != {Level.TX, Level.DX}:
                raise ConfigurationError(f"transformer {br.id} must connect a Tx bus to a Dx bus")
            if br.thermal_rating <= 0:
                raise ConfigurationError(f"branch {br.id} needs a positive thermal rating")
            if br.kind == BranchKind.UNDERGROUND and br.spans:
                raise ConfigurationError(f"underground branch {br.id} cannot have pole spans")
        for g in self.generators:
            if not 0 <= g.p_min <= g.p_max:
                raise ConfigurationError(f"generator {g.id}: need 0 <= p_min <= p_max")
            if g.bus not in known:
                raise ConfigurationError(f"generator {g.id} on unknown bus {g.bus}")
            if g.kind == "der" and known[g.bus].level != Level.DX:
                raise ConfigurationError(f"DER {g.id} must attach to a Dx bus")
        for ld in self.loads:
            if ld.demand < 0:
                raise ConfigurationError(f"load {ld.id} has negative demand")
            if ld.criticality not in CRITICALITY_WEIGHT:
                raise ConfigurationError(f"load {ld.id}: unknown criticality {ld.criticality!r}")
        if not any(g.kind == "bulk" for g in self.generators):
            raise ConfigurationError("network needs at least one bulk generator")

    @cached_property
    def _bus_index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def _branch_map(self) -> dict[int, Branch]:
        return {b.id: b for b in self.branches}

    @cached_property
    def _bus_map(self) -> dict[int, Bus]:
        return {b.id: b for b in self.buses}

    @cached_property
    def _pole_map(self) -> dict[int, Pole]:
        return {p.id: p for p in self.poles}

    def pole(self, pole_id: int) -> Pole:
        try:
            return self._pole_map[pole_id]
        except KeyError:
            raise KeyError(f"unknown pole id {pole_id}") from None

    def bus(self, bus_id: int) -> Bus:
        try:
            return self._bus_map[bus_id]
        except KeyError:
            raise KeyError(f"unknown bus id {bus_id}") from None

    def branch(self, branch_id: int) -> Branch:
        try:
            return self._branch_map[branch_id]
        except KeyError:
            raise KeyError(f"unknown branch id {branch_id}") from None

    def bus_position(self, bus_id: int) -> int:
        return self._bus_index[bus_id]

    def branch_class(self, branch: Branch) -> str:
        if branch.kind == BranchKind.TRANSFORMER:
            return "transformer"
        level = self.bus(branch.from_bus).level
        return "tx_line" if level == Level.TX else "dx_line"

    def bounding_box(self) -> tuple[float, float, float, float]:
        pts = [b.coordinates for b in self.buses]
        pts += [p for br in self.branches for p in br.geometry]
        pts += [p.location for p in self.poles]
        arr = np.asarray(pts, dtype=float)
        return (*arr.min(axis=0), *arr.max(axis=0))

    def feeder_ids(self) -> list[int]:
        return sorted({b.feeder for b in self.buses if b.feeder is not None})


# ---------------------------------------------------------------------------
# topology queries


def islands(net: GridNetwork, availability) -> list[frozenset[int]]:
    """Connected components over available branches, ordered by smallest bus id."""
    n = len(net.buses)
    rows, cols = [], []
    for br in net.branches:
        if availability.branch_available(net, br.id):
            rows.append(net.bus_position(br.from_bus))
            cols.append(net.bus_position(br.to_bus))
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    groups: dict[int, set[int]] = {}
    for bus, lab in zip(net.buses, labels):
        groups.setdefault(int(lab), set()).add(bus.id)
    return sorted((frozenset(g) for g in groups.values()), key=min)


def available_generators(net: GridNetwork, availability) -> list[Generator]:
    return [g for g in net.generators if availability.committed.get(g.id, True) and g.p_max > 0]


def energized_buses(net: GridNetwork, availability) -> set[int]:
    gen_buses = {g.bus for g in available_generators(net, availability)}
    return {b for isl in islands(net, availability) if isl & gen_buses for b in isl}


def energization_path_exists(net: GridNetwork, availability, bus: int) -> bool:
    net.bus(bus)
    island = next(isl for isl in islands(net, availability) if bus in isl)
    return any(g.bus in island for g in available_generators(net, availability))


# ---------------------------------------------------------------------------
# testbed


@dataclass(frozen=True)
class TestbedConfig:
    __test__ = False  # not a pytest class

    feeders: int = 1
    extent_m: tuple[float, float] = (12000.0, 12000.0)
    attach_buses: tuple[int, ...] | None = None
    hop_m: float = 150.0
    pole_spacing_m: float = 50.0
    margin_m: float = 300.0
    transformer_x_pu: float = 0.8
    transformer_rating_mw: float = 6.0
    pole_material: str = "wood"
    # (feeder, local_branch) pairs built underground
    underground: tuple[tuple[int, int], ...] = ()
    # {"bus": id, "p_max": MW} entries on Dx buses
    der: tuple[dict, ...] = ()

    @classmethod
    def from_dict(cls, d: dict) -> "TestbedConfig":
        d = dict(d)
        if "extent_m" in d:
            d["extent_m"] = tuple(float(v) for v in d["extent_m"])
        if d.get("attach_buses") is not None:
            d["attach_buses"] = tuple(d["attach_buses"])
        if "underground" in d:
            d["underground"] = tuple(tuple(p) for p in d["underground"])
        if "der" in d:
            d["der"] = tuple(d["der"])
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigurationError(f"unknown testbed config keys: {sorted(unknown)}")
        return cls(**d)


def _read_table(name: str) -> list[dict]:
    text = resources.files("pyrogrid.data").joinpath(name).read_text()
    return list(csv.DictReader(io.StringIO(text)))


def _feeder_bus_id(feeder: int, local: int) -> int:
    return 100 * (feeder + 1) + local


def _polyline_points(a, b, n):
    return [(a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f) for f in ((j + 0.5) / n for j in range(n))]


def build_testbed(config: TestbedConfig | None = None) -> GridNetwork:
    """Assemble the coupled Tx+Dx testbed described by ``config``.

    Feeder ``k`` (1-based) uses bus ids ``100*(k+1)+i`` for local node ``i``,
    branch ids ``100*(k+1)+j`` for local branch ``j`` and branch id ``100*(k+1)``
    for its interface transformer.  Pole ids are ``10*branch_id + j``.

    Layout: transmission buses come from normalized coordinates in the bus table
    scaled to the extent.  A feeder is drawn as a trunk along its local u axis with
    laterals along v, one hop apart, and rotated in 90 degree steps (preferring the
    direction that points at the landscape centre) until it fits inside the extent.
    """
    cfg = config or TestbedConfig()
    if cfg.feeders < 1:
        raise ConfigurationError("testbed needs at least one feeder")
    attach = cfg.attach_buses if cfg.attach_buses is not None else DEFAULT_ATTACH_BUSES
    if cfg.feeders > len(attach):
        raise ConfigurationError(
            f"{cfg.feeders} feeders requested but only {len(attach)} Tx attachment buses available"
        )
    if len(set(attach[: cfg.feeders])) != cfg.feeders:
        raise ConfigurationError("attachment buses must be distinct")
    width, height = cfg.extent_m

    buses: list[Bus] = []
    loads: list[Load] = []
    tx_rows = _read_table("tx14_buses.csv")
    tx_load_buses = set()
    for r in tx_rows:
        bid = int(r["bus"])
        buses.append(Bus(bid, Level.TX, (float(r["x_norm"]) * width, float(r["y_norm"]) * height), float(r["kv"])))
        mw = float(r["load_mw"])
        if mw > 0:
            tx_load_buses.add(bid)
            loads.append(Load(bid, bid, mw, r["criticality"], int(round(mw * 400))))
    pos = {b.id: b.coordinates for b in buses}
    for a in attach[: cfg.feeders]:
        if a not in tx_load_buses:
            raise ConfigurationError(f"attachment bus {a} is not a Tx load bus")

    branches: list[Branch] = []
    for r in _read_table("tx14_branches.csv"):
        f, t = int(r["from_bus"]), int(r["to_bus"])
        branches.append(
            Branch(int(r["branch"]), f, t, BranchKind.OVERHEAD, (pos[f], pos[t]), float(r["x_pu"]), float(r["rating_mw"]))
        )
    generators = [
        Generator(int(r["generator"]), int(r["bus"]), float(r["p_max_mw"]), float(r["p_min_mw"]), "bulk", float(r["marginal_cost"]))
        for r in _read_table("tx14_generators.csv")
    ]

    dx_bus_rows = _read_table("dx33_buses.csv")
    dx_branch_rows = _read_table("dx33_branches.csv")
    local_uv = {int(r["local_bus"]): (float(r["u_hops"]), float(r["v_hops"])) for r in dx_bus_rows}
    zbase = 12.66**2 / BASE_MVA
    underground = set(cfg.underground)
    poles: list[Pole] = []
    centre = np.array([width / 2, height / 2])

    for k in range(1, cfg.feeders + 1):
        tx_bus = attach[k - 1]
        origin = np.asarray(pos[tx_bus])
        to_centre = centre - origin
        base = [(1, 0), (0, 1), (-1, 0), (0, -1)]
        directions = sorted(base, key=lambda d: (-float(np.dot(d, to_centre)), base.index(d)))
        placed = None
        for du in directions:
            u_axis = np.array(du, dtype=float)
            v_axis = np.array([-u_axis[1], u_axis[0]])
            coords = {
                i: origin + cfg.hop_m * ((u + 1) * u_axis + v * v_axis) for i, (u, v) in local_uv.items()
            }
            arr = np.array(list(coords.values()))
            if (
                arr[:, 0].min() >= cfg.margin_m
                and arr[:, 1].min() >= cfg.margin_m
                and arr[:, 0].max() <= width - cfg.margin_m
                and arr[:, 1].max() <= height - cfg.margin_m
            ):
                placed = coords
                break
        if placed is None:
            raise ConfigurationError(f"feeder {k} at Tx bus {tx_bus} does not fit inside the landscape extent")
        coords = {i: (round(float(c[0]), 6), round(float(c[1]), 6)) for i, c in placed.items()}
        for r in dx_bus_rows:
            i = int(r["local_bus"])
            bid = _feeder_bus_id(k, i)
            buses.append(Bus(bid, Level.DX, coords[i], 12.66, feeder=k))
            kw = float(r["load_kw"])
            if kw > 0:
                loads.append(Load(bid, bid, kw / 1000.0, r["criticality"], max(1, int(round(kw / 2)))))
        head = _feeder_bus_id(k, 1)
        branches.append(
            Branch(
                100 * (k + 1), tx_bus, head, BranchKind.TRANSFORMER, (pos[tx_bus], coords[1]),
                cfg.transformer_x_pu, cfg.transformer_rating_mw, feeder=k,
            )
        )
        for r in dx_branch_rows:
            j = int(r["local_branch"])
            a, b = int(r["from_local"]), int(r["to_local"])
            bid = 100 * (k + 1) + j
            geom = (coords[a], coords[b])
            kind = BranchKind.UNDERGROUND if (k, j) in underground else BranchKind.OVERHEAD
            spans: tuple[int, ...] = ()
            if kind == BranchKind.OVERHEAD:
                length = math.dist(*geom)
                n = max(1, int(round(length / cfg.pole_spacing_m)))
                pts = _polyline_points(geom[0], geom[1], n)
                spans = tuple(10 * bid + m for m in range(n))
                poles.extend(
                    Pole(pid, (round(p[0], 6), round(p[1], 6)), cfg.pole_material, (bid,)) for pid, p in zip(spans, pts)
                )
            branches.append(
                Branch(
                    bid, _feeder_bus_id(k, a), _feeder_bus_id(k, b), kind, geom,
                    float(r["x_ohm"]) / zbase, float(r["rating_mw"]), spans, feeder=k,
                )
            )

    bus_level = {b.id: b.level for b in buses}
    next_gen = max(g.id for g in generators) + 1
    for d in cfg.der:
        if bus_level.get(d["bus"]) != Level.DX:
            raise ConfigurationError(f"DER must attach to a Dx bus, got {d['bus']}")
        generators.append(Generator(next_gen, int(d["bus"]), float(d["p_max"]), 0.0, "der", float(d.get("marginal_cost", DER_MARGINAL_COST))))
        next_gen += 1

    return GridNetwork(tuple(buses), tuple(branches), tuple(poles), tuple(generators), tuple(loads))


# ---------------------------------------------------------------------------
# serialization


def to_dict(net: GridNetwork) -> dict:
    def enc(obj):
        d = asdict(obj)
        for k, v in d.items():
            if isinstance(v, enum.Enum):
                d[k] = v.value
        return d

    return {
        "schema_version": SCHEMA_VERSION,
        "buses": [enc(b) for b in net.buses],
        "branches": [enc(b) for b in net.branches],
        "poles": [enc(p) for p in net.poles],
        "generators": [enc(g) for g in net.generators],
        "loads": [enc(ld) for ld in net.loads],
    }


def to_json(net: GridNetwork) -> str:
    return json.dumps(to_dict(net), indent=1, sort_keys=True) + "\n"


def from_dict(d: dict) -> GridNetwork:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported network schema_version {d.get('schema_version')!r}")
    try:
        buses = tuple(
            Bus(b["id"], Level(b["level"]), tuple(b["coordinates"]), b["nominal_voltage"], b.get("feeder"))
            for b in d["buses"]
        )
        branches = tuple(
            Branch(
                b["id"], b["from_bus"], b["to_bus"], BranchKind(b["kind"]),
                tuple(tuple(p) for p in b["geometry"]), b["reactance"], b["thermal_rating"],
                tuple(b.get("spans", ())), Hardening(b.get("hardening_level", "standard")),
                b.get("switchable", True), b.get("vegetation_factor", 1.0), b.get("feeder"),
            )
            for b in d["branches"]
        )
        poles = tuple(
            Pole(p["id"], tuple(p["location"]), p.get("material", "wood"), tuple(p["supported_branches"]),
                 Hardening(p.get("hardening_level", "standard")))
            for p in d.get("poles", [])
        )
        generators = tuple(Generator(**g) for g in d["generators"])
        loads = tuple(Load(**ld) for ld in d["loads"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed network document: {exc}") from exc
    return GridNetwork(buses, branches, poles, generators, loads)


def from_json(text: str) -> GridNetwork:
    return from_dict(json.loads(text))


def load_network(path) -> GridNetwork:
    with open(path) as fh:
        return from_json(fh.read())


def save_network(net: GridNetwork, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_json(net))


def with_changes(net: GridNetwork, **kw) -> GridNetwork:
    return replace(net, **kw)
