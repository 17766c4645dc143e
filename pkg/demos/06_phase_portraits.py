"""Phase portraits of the reduced dynamics with recovery jumps.

Autonomous families decompose the finite plane into cycles and transients
of the extended (recovery-jump) map; non-autonomous families report trail
lengths only, since the map changes with the step index.
"""

from agrlab import family_from_params, phase_portrait

print("autonomous: QRT gamma = 1, a = 2, p = 13")
fam = family_from_params("qrt", {"a": "2", "gamma": "1"})
port = phase_portrait(fam, 13)
print(f"  cycles by length: {dict(sorted(port.cycle_length_histogram.items()))}")
print(f"  transient depths: {dict(sorted(port.transient_length_histogram.items()))}")
print(f"  categories: {port.category_totals()}")
print(f"  account closed over {port.points_total} points: {port.conserved()}")

print()
print("autonomous and chaotic: Hietarinta-Viallet a = 2, p = 11")
port = phase_portrait(family_from_params("hv", {"a": "2"}), 11)
print(f"  cycles by length: {dict(sorted(port.cycle_length_histogram.items()))}")
print(f"  singular entries: {port.singular_entries}")
print(f"  categories: {port.category_totals()}")

print()
print("non-autonomous: q-Painleve III at p = 11 (trail statistics only)")
qp3 = family_from_params("qp3", {"a": "1", "b": "3", "c": "2", "d": "6", "q": "4"})
port = phase_portrait(qp3, 11, max_steps=24)
print(f"  cycle histogram is empty: {port.cycle_length_histogram == {}}")
print(f"  trail lengths: {dict(sorted(port.transient_length_histogram.items()))}")
print(f"  truncated: {port.truncated}, unrecoverable: {port.unrecoverable}")
print()
print("the unrecoverable starts are orbits that run into a 0/0 base point"
      " of some step index; the scan bookkeeping keeps every point in"
      " exactly one category")
