"""Mutable per-run component state shared by the damage, power and restoration stages."""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field


class Damage(str, enum.Enum):
    INTACT = "intact"
    DERATED = "derated"
    FAILED = "failed"


class Cause(str, enum.Enum):
    FIRE_DAMAGE = "fire_damage"
    WIND_DAMAGE = "wind_damage"
    OVERLOAD = "overload"
    MITIGATION = "mitigation"


# (kind, id) where kind is "branch" or "pole"
ComponentId = tuple[str, int]


@dataclass
class AssetState:
    in_service: bool = True
    damage: Damage = Damage.INTACT
    conductor_temp: float | None = None
    energized: bool = True
    # overload trips leave the asset intact but open until reclosed
    tripped: bool = False
    rating_factor: float = 1.0


@dataclass
class ComponentState:
    """Availability of every branch, pole and generator in one network.

    ``open_branches`` holds switches opened by mitigation policies; those branches
    are undamaged but carry no flow and count as de-energized.
    """

    branches: dict[int, AssetState]
    poles: dict[int, AssetState]
    committed: dict[int, bool]
    open_branches: set[int] = field(default_factory=set)

    @classmethod
    def initial(cls, net) -> "ComponentState":
        return cls(
            branches={b.id: AssetState() for b in net.branches},
            poles={p.id: AssetState() for p in net.poles},
            committed={g.id: True for g in net.generators},
        )

    def copy(self) -> "ComponentState":
        return ComponentState(
            {k: copy.copy(a) for k, a in self.branches.items()},
            {k: copy.copy(a) for k, a in self.poles.items()},
            dict(self.committed),
            set(self.open_branches),
        )

    def asset(self, cid: ComponentId) -> AssetState:
        kind, ident = cid
        return self.branches[ident] if kind == "branch" else self.poles[ident]

    def fail(self, cid: ComponentId) -> None:
        a = self.asset(cid)
        a.damage = Damage.FAILED
        a.in_service = False
        a.energized = False

    def repair(self, cid: ComponentId) -> None:
        a = self.asset(cid)
        a.damage = Damage.INTACT
        a.in_service = True
        a.tripped = False
        a.rating_factor = 1.0

    def branch_available(self, net, branch_id: int) -> bool:
        """True when the branch can carry flow: in service, closed, poles standing."""
        a = self.branches[branch_id]
        if not a.in_service or a.tripped or branch_id in self.open_branches:
            return False
        return all(self.poles[p].in_service for p in net.branch(branch_id).spans)

    def mark_energized(self, net, live_buses) -> None:
        """Energized = available and attached to a bus whose island has a running source."""
        for br in net.branches:
            self.branches[br.id].energized = self.branch_available(net, br.id) and br.from_bus in live_buses
        for pole in net.poles:
            self.poles[pole.id].energized = self.poles[pole.id].in_service and any(
                self.branches[b].energized for b in pole.supported_branches
            )

    def damaged(self) -> list[ComponentId]:
        out = [("branch", i) for i, a in self.branches.items() if a.damage == Damage.FAILED]
        out += [("pole", i) for i, a in self.poles.items() if a.damage == Damage.FAILED]
        return sorted(out)
