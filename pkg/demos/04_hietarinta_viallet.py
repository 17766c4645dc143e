"""The Hietarinta-Viallet map: chaotic, yet its singularities recover.

x' = x + a/x**2 - y blows up on the line x = 0 of the reduced plane, but
four steps later every lift's reduction returns to the same point (y~, 0)
regardless of the lift: the reduced dynamics passes the recovery test even
though the map itself is non-integrable (positive algebraic entropy).
"""

from agrlab import (
    AGRQuery,
    PFp,
    family_from_params,
    find_recovery_step,
    phase_portrait,
    trace_orbit,
)

p = 7
fam = family_from_params("hv", {"a": "1"})
query = AGRQuery(fam, p, (0, 0))

print(f"Hietarinta-Viallet over F_{p}, a = 1")
print("=" * 48)
print("every point of the singular line x = 0 recovers at m = 4:")
for yt in range(p):
    pt = (PFp.finite(0, p), PFp.finite(yt, p))
    rr = find_recovery_step(query, pt, 0)
    print(f"  (0, {yt}) -> m = {rr.minimal_m},"
          f" value ({rr.recovered_value[0]}, {rr.recovered_value[1]})")

print()
print("one extended orbit through the singular line:")
rec = trace_orbit(fam, p, 0, (PFp.finite(0, p), PFp.finite(3, p)), 12)
for point, kind in rec.trail:
    print(f"  ({point[0]}, {point[1]})  leaves by {kind}")
print(f"  terminal: {rec.terminal}")

print()
port = phase_portrait(fam, p)
print(f"phase portrait of the extended dynamics on {p * p} points:")
print(f"  singular entries: {port.singular_entries}")
print(f"  cycles by length: {dict(sorted(port.cycle_length_histogram.items()))}")
print(f"  categories: {port.category_totals()} (conserved: {port.conserved()})")
