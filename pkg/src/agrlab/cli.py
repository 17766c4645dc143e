"""Command-line frontend: verify, recover, portrait, params-check.

Configurations carry rationals as "num/den" strings so no floating point
enters the system.  Reports serialize to canonical JSON (sorted keys,
two-space indent, trailing newline): identical configuration and seed
produce byte-identical output.  Exit codes: 0 success, 1 mathematical
violation or witness found, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import __version__
from .exactnum import PFp, check_prime
from .maps import (
    MapFamily,
    family_from_params,
    family_name,
    family_params,
    is_autonomous,
    step_kind,
    validate_params,
)
from .agr import (
    _ORACLE_MAX_M,
    AGRQuery,
    CaseID,
    EXPECTED_M,
    UnsampleableResidue,
    classify_case,
    closed_form_value,
    find_recovery_step,
    oracle_value,
    verify_proposition,
    ZeroDenominatorInFormula,
)
from .orbits import phase_portrait

__all__ = ["ExperimentConfig", "ReportEnvelope", "main"]

_FORMATS = ("json", "csv", "table")


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 2)."""


@dataclass
class ExperimentConfig:
    family: str
    params: dict
    primes: list
    n_window: tuple
    m_max: int
    lifts_per_residue: int
    rng_seed: int
    output_format: str

    def build_family(self) -> MapFamily:
        return family_from_params(self.family, self.params)

    def to_dict(self) -> dict:
        fam = self.build_family()
        return {
            "family": self.family,
            "params": family_params(fam),
            "primes": list(self.primes),
            "n_window": list(self.n_window),
            "m_max": self.m_max,
            "lifts_per_residue": self.lifts_per_residue,
            "rng_seed": self.rng_seed,
            "output_format": self.output_format,
        }


@dataclass
class ReportEnvelope:
    config: dict
    tool_version: str
    results: list
    duration_seconds: object  # float with --timings, else None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "tool_version": self.tool_version,
            "results": self.results,
            "duration_seconds": self.duration_seconds,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ReportEnvelope":
        data = json.loads(text)
        return cls(
            config=data["config"],
            tool_version=data["tool_version"],
            results=data["results"],
            duration_seconds=data["duration_seconds"],
        )


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# config parsing


def _parse_params(text: str) -> dict:
    out = {}
    if not text:
        return out
    for chunk in text.split(","):
        if "=" not in chunk:
            raise ConfigError(f"malformed parameter assignment {chunk!r}")
        key, _, value = chunk.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"malformed parameter assignment {chunk!r}")
        if key in out:
            raise ConfigError(f"duplicate parameter {key!r}")
        if value.count("/") > 1 or value.endswith("/") or "//" in value:
            raise ConfigError(f"malformed rational {value!r}")
        out[key] = value
    return out


def _parse_primes(args) -> list:
    raw = []
    if args.prime is not None:
        raw.append(args.prime)
    if args.primes:
        raw.extend(x.strip() for x in args.primes.split(",") if x.strip())
    if not raw:
        raise ConfigError("no prime given (use --prime or --primes)")
    primes = []
    for item in raw:
        try:
            p = int(item)
        except (TypeError, ValueError):
            raise ConfigError(f"malformed prime {item!r}") from None
        try:
            check_prime(p)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        primes.append(p)
    return primes


def _parse_window(text: str) -> tuple:
    if ".." in text:
        lo, _, hi = text.partition("..")
    else:
        lo = hi = text
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"malformed step window {text!r}") from None
    if lo_i > hi_i:
        raise ConfigError(f"empty step window {text!r}")
    return (lo_i, hi_i)


def _config_from_args(args) -> ExperimentConfig:
    params = _parse_params(args.params or "")
    fmt = args.format
    if fmt not in _FORMATS:
        raise ConfigError(f"unknown output format {fmt!r}")
    cfg = ExperimentConfig(
        family=args.family,
        params=params,
        primes=_parse_primes(args),
        n_window=_parse_window(args.n),
        m_max=args.m_max,
        lifts_per_residue=args.lifts,
        rng_seed=args.seed,
        output_format=fmt,
    )
    try:
        cfg.build_family()
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.m_max < 1:
        raise ConfigError("m-max must be at least 1")
    if cfg.lifts_per_residue < 3:
        raise ConfigError("lifts must be at least 3")
    return cfg


# ---------------------------------------------------------------------------
# serialization of results


def _pfp(value: PFp) -> str:
    return str(value)


def _point(pt) -> dict:
    return {"x": _pfp(pt[0]), "y": _pfp(pt[1])}


def _histogram(hist: dict) -> list:
    return [[int(k), int(v)] for k, v in sorted(hist.items())]


def _report_dict(rep) -> dict:
    return {
        "kind": "proposition_report",
        "family": rep.family,
        "params": rep.params,
        "p": rep.p,
        "n_window": list(rep.n_window),
        "m_max": rep.m_max,
        "lifts_per_residue": rep.lifts_per_residue,
        "rng_seed": rep.rng_seed,
        "points_scanned": rep.points_scanned,
        "base_points_skipped": rep.base_points_skipped,
        "case_counts": dict(sorted(rep.case_counts.items())),
        "m_histogram": _histogram(rep.m_histogram),
        "oracle_checks": rep.oracle_checks,
        "assumptions": list(rep.assumptions),
        "violations": [
            {
                "kind": v.kind,
                "residue": {"x": v.residue[0], "y": v.residue[1]},
                "step_index": v.step_index,
                "detail": v.detail,
            }
            for v in rep.violations
        ],
    }


def _portrait_dict(port) -> dict:
    return {
        "kind": "phase_portrait",
        "family": port.family,
        "params": port.params,
        "p": port.p,
        "n0": port.n0,
        "max_steps": port.max_steps,
        "autonomous": port.autonomous,
        "points_total": port.points_total,
        "cycle_length_histogram": _histogram(port.cycle_length_histogram),
        "transient_length_histogram": _histogram(port.transient_length_histogram),
        "singular_entries": port.singular_entries,
        "categories": port.category_totals(),
        "conserved": port.conserved(),
    }


def _portrait_csv(port) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["histogram", "length", "count"])
    for length, count in sorted(port.cycle_length_histogram.items()):
        writer.writerow(["cycle", length, count])
    for length, count in sorted(port.transient_length_histogram.items()):
        writer.writerow(["transient", length, count])
    for name, count in sorted(port.category_totals().items()):
        writer.writerow(["category", name, count])
    return buf.getvalue()


def _emit(args, envelope: ReportEnvelope, csv_text: str | None = None) -> None:
    if envelope.config["output_format"] == "csv" and csv_text is not None:
        text = csv_text
    elif envelope.config["output_format"] == "table":
        text = _table_text(envelope)
    else:
        text = envelope.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table_text(envelope: ReportEnvelope) -> str:
    lines = [f"agrlab {envelope.tool_version}"]
    cfg = envelope.config
    lines.append(
        f"family={cfg['family']} params={cfg['params']} primes={cfg['primes']}"
    )
    for res in envelope.results:
        kind = res.get("kind")
        if kind == "proposition_report":
            status = "ok" if not res["violations"] else f"{len(res['violations'])} violations"
            lines.append(
                f"p={res['p']}: scanned={res['points_scanned']}"
                f" base_skipped={res['base_points_skipped']}"
                f" m_histogram={res['m_histogram']} -> {status}"
            )
            for v in res["violations"][:20]:
                lines.append(
                    f"  violation {v['kind']} at ({v['residue']['x']},"
                    f" {v['residue']['y']}) n={v['step_index']}: {v['detail']}"
                )
        elif kind == "phase_portrait":
            lines.append(
                f"p={res['p']}: categories={res['categories']}"
                f" singular_entries={res['singular_entries']}"
                f" conserved={res['conserved']}"
            )
        elif kind == "recovery":
            lines.append(
                f"p={res['p']} point=({res['point']['x']}, {res['point']['y']})"
                f" n={res['step_index']}: m={res['minimal_m']}"
                f" value={res['recovered_value']} case={res['matched_case']}"
            )
        elif kind == "params_check":
            status = "ok" if res["ok"] else "; ".join(res["violations"])
            lines.append(f"p={res['p']}: {status}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _threads() -> int:
    raw = os.environ.get("AGRLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _verify_job(payload):
    cfg_dict, p = payload
    fam = family_from_params(cfg_dict["family"], cfg_dict["params"])
    query = AGRQuery(
        fam,
        p,
        tuple(cfg_dict["n_window"]),
        m_max=cfg_dict["m_max"],
        lifts_per_residue=cfg_dict["lifts_per_residue"],
        rng_seed=cfg_dict["rng_seed"],
    )
    rep = verify_proposition(query, oracle_stride=cfg_dict.get("oracle_stride", 0))
    return _report_dict(rep)


def cmd_verify(args) -> int:
    cfg = _config_from_args(args)
    fam = cfg.build_family()
    for p in cfg.primes:
        vr = validate_params(fam, p)
        if not vr.ok:
            raise ConfigError(
                f"invalid parameters at p={p}: " + "; ".join(vr.violations)
            )
    t0 = time.monotonic()
    payloads = [
        (dict(cfg.to_dict(), oracle_stride=args.oracle_stride), p)
        for p in cfg.primes
    ]
    threads = _threads()
    if threads > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(payloads))) as pool:
            results = list(pool.map(_verify_job, payloads))
    else:
        results = [_verify_job(pl) for pl in payloads]
    duration = round(time.monotonic() - t0, 3) if args.timings else None
    envelope = ReportEnvelope(cfg.to_dict(), __version__, results, duration)
    _emit(args, envelope)
    return 0 if all(not r["violations"] for r in results) else 1


def cmd_recover(args) -> int:
    cfg = _config_from_args(args)
    if len(cfg.primes) != 1:
        raise ConfigError("recover expects exactly one prime")
    p = cfg.primes[0]
    fam = cfg.build_family()
    vr = validate_params(fam, p)
    if not vr.ok:
        raise ConfigError(f"invalid parameters at p={p}: " + "; ".join(vr.violations))
    parts = (args.point or "").split(",")
    if len(parts) != 2:
        raise ConfigError(f"malformed point {args.point!r} (expected x,y)")
    try:
        residue = (
            PFp.finite(int(parts[0]), p),
            PFp.finite(int(parts[1]), p),
        )
    except ValueError:
        raise ConfigError(f"malformed point {args.point!r}") from None
    n = cfg.n_window[0]
    kind = step_kind(fam, n, residue, p)
    result: dict = {
        "kind": "recovery",
        "p": p,
        "point": _point(residue),
        "step_index": n,
        "step_kind": kind,
    }
    exit_code = 0
    if kind == "base":
        result.update(
            minimal_m=None,
            recovered_value=None,
            matched_case=None,
            lift_independent=False,
            detail=(
                "0/0 base point of the reduced step: the commuting diagram"
                " is not asserted here"
            ),
        )
        exit_code = 1
    else:
        query = AGRQuery(
            fam,
            p,
            (n, n),
            m_max=cfg.m_max,
            lifts_per_residue=cfg.lifts_per_residue,
            rng_seed=cfg.rng_seed,
        )
        try:
            rr = find_recovery_step(query, residue, n, use_oracle=args.oracle)
        except UnsampleableResidue:
            raise ConfigError("all sampled lifts hit exact singularities") from None
        case = rr.matched_case
        result.update(
            minimal_m=rr.minimal_m,
            recovered_value=_point(rr.recovered_value) if rr.recovered_value else None,
            lift_independent=rr.lift_independent,
            matched_case=case.value if case is not None else None,
        )
        if case is not None and case is not CaseID.GENERIC:
            try:
                cf_value, cf_m = closed_form_value(case, residue, fam, n, p)
                result["closed_form"] = {"value": _point(cf_value), "m": cf_m}
            except ZeroDenominatorInFormula as exc:
                result["closed_form"] = {"error": str(exc)}
        if rr.minimal_m is not None and rr.minimal_m <= _ORACLE_MAX_M:
            oracle = oracle_value(fam, p, n, rr.minimal_m, residue)
            result["oracle_value"] = [str(c) for c in oracle]
        if rr.minimal_m is None:
            exit_code = 1
    duration = None
    envelope = ReportEnvelope(cfg.to_dict(), __version__, [result], duration)
    _emit(args, envelope)
    return exit_code


def _portrait_job(payload):
    cfg_dict, p = payload
    fam = family_from_params(cfg_dict["family"], cfg_dict["params"])
    port = phase_portrait(
        fam,
        p,
        n0=cfg_dict["n_window"][0],
        max_steps=cfg_dict["max_steps"],
        m_max=cfg_dict["m_max"],
        lifts_per_residue=cfg_dict["lifts_per_residue"],
        rng_seed=cfg_dict["rng_seed"],
    )
    return _portrait_dict(port), _portrait_csv(port)


def cmd_portrait(args) -> int:
    cfg = _config_from_args(args)
    fam = cfg.build_family()
    for p in cfg.primes:
        vr = validate_params(fam, p)
        if not vr.ok:
            raise ConfigError(
                f"invalid parameters at p={p}: " + "; ".join(vr.violations)
            )
    t0 = time.monotonic()
    payloads = [
        (dict(cfg.to_dict(), max_steps=args.max_steps), p) for p in cfg.primes
    ]
    threads = _threads()
    if threads > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(payloads))) as pool:
            outcomes = list(pool.map(_portrait_job, payloads))
    else:
        outcomes = [_portrait_job(pl) for pl in payloads]
    results = [o[0] for o in outcomes]
    for res, p in zip(results, cfg.primes):
        res["p"] = p
    csv_text = "".join(o[1] for o in outcomes)
    duration = round(time.monotonic() - t0, 3) if args.timings else None
    envelope = ReportEnvelope(cfg.to_dict(), __version__, results, duration)
    _emit(args, envelope, csv_text=csv_text)
    return 0


def cmd_params_check(args) -> int:
    cfg = _config_from_args(args)
    fam = cfg.build_family()
    results = []
    ok = True
    for p in cfg.primes:
        vr = validate_params(fam, p)
        ok = ok and vr.ok
        results.append(
            {
                "kind": "params_check",
                "p": p,
                "ok": vr.ok,
                "violations": list(vr.violations),
                "assumptions": list(vr.assumptions),
            }
        )
    envelope = ReportEnvelope(cfg.to_dict(), __version__, results, None)
    _emit(args, envelope)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--family", required=True, choices=("qrt", "qp3", "qp4", "hv"))
    sub.add_argument("--params", required=True, help="comma list, e.g. a=1,b=2/3")
    sub.add_argument("--prime", type=int, default=None)
    sub.add_argument("--primes", default="", help="comma list of primes")
    sub.add_argument("--n", default="0", help="step window, e.g. 0..4")
    sub.add_argument("--m-max", dest="m_max", type=int, default=8)
    sub.add_argument("--lifts", type=int, default=3)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", default=None)
    sub.add_argument("--format", default="json", choices=_FORMATS)
    sub.add_argument("--timings", action="store_true",
                     help="include wall-clock duration (breaks byte-identical output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agrlab",
        description=(
            "Exact reduction dynamics of plane rational maps: singularity"
            " recovery search, proposition verification, phase portraits."
        ),
    )
    parser.add_argument("--version", action="version", version=f"agrlab {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    verify = subs.add_parser("verify", help="exhaustive recovery checking")
    _add_common(verify)
    verify.add_argument(
        "--oracle-stride",
        dest="oracle_stride",
        type=int,
        default=0,
        help="cross-check every k-th point against the reduce-then-evaluate oracle",
    )
    verify.set_defaults(func=cmd_verify)

    recover = subs.add_parser("recover", help="recovery search at one residue point")
    _add_common(recover)
    recover.add_argument("--point", required=True, help="residue pair, e.g. 0,3")
    recover.add_argument("--oracle", action="store_true",
                         help="cross-check against the reduce-then-evaluate oracle")
    recover.set_defaults(func=cmd_recover)

    portrait = subs.add_parser("portrait", help="reduced phase-space statistics")
    _add_common(portrait)
    portrait.add_argument("--max-steps", dest="max_steps", type=int, default=64)
    portrait.set_defaults(func=cmd_portrait)

    check = subs.add_parser("params-check", help="validate family parameters")
    _add_common(check)
    check.set_defaults(func=cmd_params_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, 0 on --help/--version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"agrlab: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
