"""
Simulated intruders
===================

An attack replaces a stretch of the owner's trace with an intruder's
sessions. The uninformed intruder uses apps, sites, numbers and networks the
owner never touched; the informed one picks uniformly from the owner's top
ranked items but keeps its own habits for how long things last.
"""

from anfis_auth.events import FeatureKind, SyntheticProfile, generate_trace
from anfis_auth.harness import AttackMode, AttackSpec, graft_attack, victim_ranking

victim = generate_trace(SyntheticProfile(seed=8, day_count=10, foreground_rate=12))
start = victim.events[0].timestamp - victim.events[0].timestamp % 86_400 + 8 * 86_400 + 14 * 3600

for mode in AttackMode:
    spec = AttackSpec(mode, start, duration=2.0, intensity=20, knowledge_k=3, seed=1)
    grafted = graft_attack(victim, spec)
    inside = [e for e in grafted.events if spec.start <= e.timestamp < spec.end
              and e.kind is not FeatureKind.ScreenStatus]
    apps = sorted({e.item for e in inside if e.kind is FeatureKind.ApplicationHistory})
    print(f"{mode.value}: {len(inside)} attacker events, apps used: {apps[:5]}")

top = victim_ranking(victim, start)[FeatureKind.ApplicationHistory].top(3)
print("owner's top-3 apps at attack start:", top)
