"""A feeder loses its substation transformer; can a local DER keep it alive?

Builds the one-feeder testbed, trips the interface transformer (branch 200)
and solves DC power flow with and without a 2 MW DER at bus 205 that is
allowed to island.

    python demos/feeder_islanding.py
"""

from pyrogrid.mitigation import MitigationPlan, OperationalPolicy, apply_plan, form_islands
from pyrogrid.network import Level, build_testbed, energized_buses
from pyrogrid.power import dc_power_flow
from pyrogrid.state import ComponentState


def feeder_report(label, net, policy):
    state = ComponentState.initial(net)
    state.branches[200].in_service = False
    state = form_islands(net, state, policy)
    sol = dc_power_flow(net, state)
    live = energized_buses(net, state)
    dx = [b.id for b in net.buses if b.level == Level.DX]
    crit = sum(sol.served[ld.id] for ld in net.loads if ld.bus in dx and ld.criticality == "critical")
    std = sum(sol.served[ld.id] for ld in net.loads if ld.bus in dx and not ld.criticality == "critical")
    print(f"{label:>14}: {sum(b in live for b in dx)}/{len(dx)} feeder buses energized, "
          f"critical served {crit:.2f} MW, standard served {std:.2f} MW")


def main() -> None:
    net = build_testbed()
    feeder_report("no DER", net, OperationalPolicy())
    with_der = apply_plan(net, MitigationPlan(der_additions=((205, 2.0),)))
    feeder_report("DER, islanding", with_der, OperationalPolicy(islanding=frozenset({1})))


if __name__ == "__main__":
    main()
