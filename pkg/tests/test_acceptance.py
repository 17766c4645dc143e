"""Acceptance suite: one test per criterion, each printing a PASS line.

Parameter sets are frozen constants chosen (by exhaustive search over small
integers) to satisfy the family hypotheses at every prime and, for the
non-autonomous families, their step-shifted analogues over the whole scan
window: unit valuations, distinctness, a != b mod p, a + b != (c + d) q^(n+3),
aq^(2+n) tau0 != 1, aq^(4+n) tau0 != 1, and non-vanishing step numerators on
the singular lines (so every scanned singular point is a pole of the reduced
step, the regime the closed-form recoveries cover).
"""

import json
import random
import time

from gmpy2 import mpq

from agrlab.cli import ReportEnvelope, main
from agrlab.exactnum import PFp, reduce_rational, valuation
from agrlab.maps import (
    ExactSingularity,
    family_from_params,
    step_exact,
    step_kind,
)
from agrlab.agr import (
    AGRQuery,
    CaseID,
    EXPECTED_M,
    classify_case,
    detect_agr_failure,
    find_recovery_step,
    verify_proposition,
)

QP3_SETS = {
    11: [(1, 3, 2, 6, 4), (1, 3, 2, 6, 5), (1, 3, 2, 6, 9)],
    13: [(1, 3, 2, 5, 4), (1, 3, 2, 5, 10), (1, 3, 2, 6, 4)],
    19: [(1, 2, 3, 5, 10), (1, 2, 3, 6, 10), (1, 2, 3, 11, 10)],
}

QP4_SETS = [(1, 2, 4, 2), (1, 3, 4, 2), (1, 5, 2, 2)]

HV_PRIMES = (5, 7, 11, 101)
HV_AS = ("1", "2", "3")


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")


def qp3_family(values):
    return family_from_params("qp3", dict(zip("abcdq", map(str, values))))


def qp4_family(values):
    keys = ("a", "b", "q", "tau0")
    return family_from_params("qp4", dict(zip(keys, map(str, values))))


def test_criterion_1_qp3_proposition_suite():
    expected_cases = {c for c in CaseID if c.value.startswith("qp3")}
    total_violations = 0
    slowest = 0.0
    for p, sets in QP3_SETS.items():
        t0 = time.monotonic()
        for values in sets:
            fam = qp3_family(values)
            rep = verify_proposition(AGRQuery(fam, p, (0, 4), m_max=8))
            total_violations += len(rep.violations)
            assert rep.ok, (p, values, rep.violations[:3])
            seen = {k for k in rep.case_counts if k.startswith("qp3")}
            assert seen == {c.value for c in expected_cases}, (p, values, seen)
            # every m in the histogram is 1, 3, 4 or 5 per the matched cases
            assert set(rep.m_histogram) <= {1, 3, 4, 5}
        slowest = max(slowest, time.monotonic() - t0)
    ok = total_violations == 0 and slowest < 300.0
    _report(
        1,
        ok,
        f"qPIII exhaustive scans at p in {sorted(QP3_SETS)} x 3 parameter sets,"
        f" n in [0,4]: zero violations, all six cases witnessed"
        f" (slowest prime {slowest:.1f}s)",
    )
    assert ok


def test_criterion_2_qp4_proposition_suite():
    total_violations = 0
    for p in (11, 13, 19):
        for values in QP4_SETS:
            fam = qp4_family(values)
            rep = verify_proposition(AGRQuery(fam, p, (0, 4), m_max=8))
            total_violations += len(rep.violations)
            assert rep.ok, (p, values, rep.violations[:3])
            seen = {k for k in rep.case_counts if k.startswith("qp4")}
            assert seen == {c.value for c in CaseID if c.value.startswith("qp4")}
            assert set(rep.m_histogram) <= {1, 3, 5}
            # the excluded line x = -q^n tau0 moves with n and is singular
            # at exactly one residue line per index
            a, b, q, t0 = values
            for n in range(5):
                tau = pow(q, n, p) * t0 % p
                pt = (PFp.finite(-tau % p, p), PFp.finite(tau, p))
                case = classify_case(fam, pt, n, p)
                assert case in (
                    CaseID.QP4_X_NEG_TAU_GENERIC,
                    CaseID.QP4_X_NEG_TAU_RESONANT,
                )
    ok = total_violations == 0
    _report(
        2,
        ok,
        "qPIV exhaustive scans at p in [11, 13, 19] x 3 parameter sets,"
        " n in [0,4]: zero violations, all five cases witnessed, moving"
        " excluded line honoured",
    )
    assert ok


def test_criterion_3_hv_proposition_suite():
    t0 = time.monotonic()
    for p in HV_PRIMES:
        for a in HV_AS:
            fam = family_from_params("hv", {"a": a})
            rep = verify_proposition(AGRQuery(fam, p, (0, 0), m_max=8))
            assert rep.ok, (p, a, rep.violations[:3])
            assert rep.case_counts.get("hv_x_zero") == p
            assert rep.m_histogram == {1: p * p - p, 4: p}
    elapsed = time.monotonic() - t0
    ok = elapsed < 60.0
    _report(
        3,
        ok,
        f"Hietarinta-Viallet scans at p in {HV_PRIMES} x {len(HV_AS)} values"
        f" of a: every (0, y) recovers at m=4 with value (y, 0), all other"
        f" points m=1 ({elapsed:.1f}s)",
    )
    assert ok


def test_criterion_4_qrt_iff_suite():
    for gamma in (0, 1, 2):
        for p in (5, 7):
            for a in ("1", "2"):
                fam = family_from_params("qrt", {"a": a, "gamma": str(gamma)})
                query = AGRQuery(fam, p, (0, 0), m_max=8)
                witnesses = detect_agr_failure(query)
                assert witnesses == [], (gamma, p, a)
                rep = verify_proposition(query)
                assert rep.ok, (gamma, p, a, rep.violations[:3])
                assert max(rep.m_histogram) <= 8
    g3 = family_from_params("qrt", {"a": "1", "gamma": "3"})
    witnesses = detect_agr_failure(
        AGRQuery(g3, 5, (0, 0), m_max=12), stop_after=1
    )
    ok = len(witnesses) >= 1
    _report(
        4,
        ok,
        "QRT gamma in {0,1,2} at p in {5,7}: no failure witnesses, every"
        " scanned residue recovers within m_max=8; gamma=3 yields a failure"
        f" witness within m_max=12 ({witnesses[0].kind} at"
        f" ({witnesses[0].residue_point[0]}, {witnesses[0].residue_point[1]}))",
    )
    assert ok


def test_criterion_5_cross_oracle_equivalence():
    """Perturbation path vs reduce-then-evaluate oracle on m* <= 3 triples.

    find_recovery_step(use_oracle=True) raises CrossOracleMismatch on any
    disagreement between the two evaluation strategies at m <= 3.
    """
    checked = 0
    for p in (11, 13):
        jobs = [(qp3_family(v), p) for v in QP3_SETS[p]]
        jobs += [(qp4_family(v), p) for v in QP4_SETS]
        for fam, prime in jobs:
            query = AGRQuery(fam, prime, (0, 2))
            for n in (0, 1, 2):
                for xr in range(prime):
                    for yr in range(prime):
                        pt = (PFp.finite(xr, prime), PFp.finite(yr, prime))
                        if step_kind(fam, n, pt, prime) != "pole":
                            continue
                        case = classify_case(fam, pt, n, prime)
                        if case is None or EXPECTED_M.get(case) != 3:
                            continue
                        rr = find_recovery_step(query, pt, n, use_oracle=True)
                        assert rr.minimal_m == 3
                        checked += 1
                if checked >= 120:
                    break
            if checked >= 120:
                break
        if checked >= 120:
            break
    ok = checked >= 100
    _report(
        5,
        ok,
        f"cross-oracle equivalence on {checked} singular triples with m* = 3:"
        " zero mismatches between the perturbation path and the"
        " reduce-then-evaluate oracle",
    )
    assert ok


def _random_exact_orbit(fam, length, rng, n0=0):
    while True:
        pt = (
            mpq(rng.randrange(-60, 61), rng.randrange(1, 12)),
            mpq(rng.randrange(-60, 61), rng.randrange(1, 12)),
        )
        orbit = [pt]
        try:
            for k in range(length):
                pt = step_exact(fam, n0 + k, pt)
                orbit.append(pt)
            return orbit
        except ExactSingularity:
            continue


def test_criterion_6_lift_independence_and_three_point_identities():
    # lift independence at recovery is asserted inside the suites above:
    # any disagreeing lift surfaces as a lift_dependent violation.  Here the
    # singular recoveries of suite families are re-checked directly on a
    # sample, then the scalar three-point forms are verified on random
    # exact orbits.
    sample_checked = 0
    for fam, p in ((qp3_family(QP3_SETS[11][0]), 11), (qp4_family(QP4_SETS[0]), 11)):
        query = AGRQuery(fam, p, (0, 0), lifts_per_residue=5)
        for xr in range(p):
            for yr in range(p):
                pt = (PFp.finite(xr, p), PFp.finite(yr, p))
                if step_kind(fam, 0, pt, p) != "pole":
                    continue
                rr = find_recovery_step(query, pt, 0)
                assert rr.recovered and rr.lift_independent, (fam, xr, yr)
                sample_checked += 1

    rng = random.Random(2024)
    qp3 = qp3_family(QP3_SETS[11][0])
    qp4 = qp4_family(QP4_SETS[0])
    hv = family_from_params("hv", {"a": "2"})
    qrt = family_from_params("qrt", {"a": "3", "gamma": "2"})
    for _ in range(50):
        xs = [pt[0] for pt in _random_exact_orbit(hv, 10, rng)]
        for k in range(1, 10):
            assert xs[k + 1] + xs[k - 1] == xs[k] + hv.a / xs[k] ** 2
        xs = [pt[0] for pt in _random_exact_orbit(qp3, 10, rng)]
        a, b, c, d, q = qp3.a, qp3.b, qp3.c, qp3.d, qp3.q
        for k in range(1, 10):
            rhs = a * b * (xs[k] - c * q**k) * (xs[k] - d * q**k) / (
                (xs[k] - a) * (xs[k] - b)
            )
            assert xs[k + 1] * xs[k - 1] == rhs
        xs = [pt[0] for pt in _random_exact_orbit(qp4, 10, rng)]
        a, b, q, t0 = qp4.a, qp4.b, qp4.q, qp4.tau0
        for k in range(1, 10):
            tau = q**k * t0
            lhs = (xs[k + 1] * xs[k] - 1) * (xs[k] * xs[k - 1] - 1)
            assert lhs == tau**2 * (a * xs[k] ** 2 + b * xs[k] + a) / (xs[k] + tau)
        xs = [pt[0] for pt in _random_exact_orbit(qrt, 10, rng)]
        for k in range(1, 10):
            assert xs[k + 1] * xs[k - 1] == (qrt.a * xs[k] + 1) / xs[k] ** 2
    _report(
        6,
        True,
        f"lift independence re-checked with 5 lifts on {sample_checked}"
        " singular residues; three-point scalar identities hold on 50 exact"
        " orbits of length 10 for each family",
    )


def test_criterion_7_reduction_homomorphism():
    rng = random.Random(7)
    for p in (5, 7, 13):
        checked = 0
        while checked < 10000:
            x = mpq(rng.randrange(-(2**32), 2**32), rng.randrange(1, 2**32))
            y = mpq(rng.randrange(-(2**32), 2**32), rng.randrange(1, 2**32))
            if valuation(x, p) < 0 or valuation(y, p) < 0:
                continue
            rx, ry = reduce_rational(x, p), reduce_rational(y, p)
            assert reduce_rational(x + y, p) == PFp.finite(rx.r + ry.r, p)
            assert reduce_rational(x * y, p) == PFp.finite(rx.r * ry.r, p)
            checked += 1
    _report(
        7,
        True,
        "reduction is a ring homomorphism on 10000 nonnegative-valuation"
        " pairs per p in {5, 7, 13} for + and *",
    )


def test_criterion_8_determinism_and_serialization(tmp_path, capsys):
    argv = [
        "verify",
        "--family", "qp3",
        "--params", "a=1,b=3,c=2,d=6,q=4",
        "--prime", "11",
        "--n", "0..1",
        "--seed", "123",
    ]
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    assert main(argv + ["--out", str(out_a)]) == 0
    assert main(argv + ["--out", str(out_b)]) == 0
    bytes_a = out_a.read_bytes()
    bytes_b = out_b.read_bytes()
    assert bytes_a == bytes_b
    envelope = ReportEnvelope.from_json(bytes_a.decode())
    assert envelope.to_json().encode() == bytes_a
    parsed = json.loads(bytes_a)
    assert parsed["config"]["rng_seed"] == 123
    assert parsed["duration_seconds"] is None
    _report(
        8,
        True,
        "identical config and seed produce byte-identical reports; the JSON"
        " envelope round-trips losslessly",
    )
