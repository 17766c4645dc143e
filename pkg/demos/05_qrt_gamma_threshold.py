"""The QRT family x' = (a x + 1) / (x**gamma * y): recovery iff gamma <= 2.

For gamma in {0, 1, 2} the map is integrable and every singular residue
point recovers within a few steps.  For gamma >= 3, valuations grow
exponentially along the orbit and the reductions never return to a finite
lift-independent value: the recovery search produces failure witnesses.
"""

from agrlab import AGRQuery, detect_agr_failure, family_from_params, verify_proposition

p = 5

for gamma in (0, 1, 2):
    fam = family_from_params("qrt", {"a": "2", "gamma": str(gamma)})
    rep = verify_proposition(AGRQuery(fam, p, (0, 0), m_max=8))
    witnesses = detect_agr_failure(AGRQuery(fam, p, (0, 0), m_max=8))
    print(f"gamma = {gamma}: scanned {rep.points_scanned} residues,"
          f" recovery steps seen {dict(sorted(rep.m_histogram.items()))},"
          f" violations {len(rep.violations)}, witnesses {len(witnesses)}")

print()
gamma3 = family_from_params("qrt", {"a": "2", "gamma": "3"})
witnesses = detect_agr_failure(AGRQuery(gamma3, p, (0, 0), m_max=8))
print(f"gamma = 3: {len(witnesses)} failure witnesses (budget m <= 8)")
w = witnesses[0]
print(f"first witness at ({w.residue_point[0]}, {w.residue_point[1]}), kind {w.kind}")
print("reduced trails of its three lifts (note the escape to infinity):")
for trail in w.lift_trails:
    cells = "  ".join(f"({a}, {b})" for a, b in trail)
    print(f"  {cells}")
print()
print("the valuation seesaw never lands both coordinates on finite residues"
      " at the same step, so no iteration count can close the diagram")
