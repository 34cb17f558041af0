"""
Conservation audit of the reference scenario
============================================

Runs the shipped interacting rank-2 scenario and prints the energy table
plus the audit verdict.  Takes about ten seconds.
"""

from pathlib import Path

from tdhf import annotate, conservation_audit, kinetic_bound_check
from tdhf.propagate import run
from tdhf.runner import build_initial_state, load_scenario

scenario = load_scenario(Path(__file__).resolve().parent.parent / "scenarios" / "reference_rank2_3d.json")
traj = run(build_initial_state(scenario), scenario.config)

print(f"{'t':>5} {'e_kin':>10} {'e_pot':>10} {'e_tot':>16} {'trace':>18}")
for r in annotate(traj)[::4]:
    print(f"{r.t:5.2f} {r.e_kin:10.6f} {r.e_pot:10.6f} {r.e_tot:16.12f} {r.trace:18.15f}")

audit = conservation_audit(traj)
print("drifts:", {k: f"{v:.1e}" for k, v in audit.drifts.items()})
print("audit passed:", audit.passed, "| kinetic bound:", kinetic_bound_check(traj).passed)
