"""Command line front end: define, validate, construct, resume, audit, entropy, info.

Exit codes: 0 pass, 1 audit failure, 2 input error, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .archive import ArchiveError, RunArchive, write_json
from .construct import (BudgetError, MixingRoute, NestedFamily, Schedule, ScheduleError, TargetPath,
                        band_maxima, build_chain, generate_point, mixing_route, block_measure,
                        separated_family_certificate, solve_schedule, verify_route_tracking,
                        verify_tracking, verify_transitivity, MeasureChain)
from .irregular import (Observable, ObservableError, birkhoff_trace, classify_limit_set, irregular_target,
                        spread)
from .measures import MarkovMeasure, Measure, MeasureError, block_entropy, measure_from_json
from .separation import estimate_entropy_word_count
from .shift import ShiftSystem, SymbolStream, SystemError_, format_word, primitivity_index

log = logging.getLogger("satshift")

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3
AUDITS = ("tracking", "transitivity", "certificate", "birkhoff", "classify")

MANIFEST_DEFAULTS = {
    "family": None, "target": None, "observable": None, "variant": None, "n0": 1, "u": "",
    "eta": 0.25, "bands": 3, "horizon": None, "seed": 0, "mode": "direct", "chain_length": 8,
    "zeta1": None, "budget": 256, "max_length": None,
}


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# definitions


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def family_from_json(data: dict) -> NestedFamily:
    if "levels" in data:
        return NestedFamily.from_json(data)
    if "transitions" in data:
        return NestedFamily([ShiftSystem.from_json(data)], data.get("label", ""))
    raise InputError("family definition needs 'levels' or 'transitions'")


def _resolve_measure(data: dict, family: NestedFamily) -> Measure:
    if data.get("type") == "parry":
        return MarkovMeasure.parry(family.level(int(data.get("level", family.top))))
    if data.get("type") == "convex":
        comps = tuple((Fraction(str(c["weight"])), _resolve_measure(c["measure"], family), int(c.get("level", 0)))
                      for c in data["components"])
        from .measures import ConvexCombination
        return ConvexCombination(comps, data.get("label", ""))
    return measure_from_json(data)


def target_from_json(data: dict, family: NestedFamily) -> TargetPath:
    verts = data["vertices"] if "vertices" in data else [data]
    return TargetPath([_resolve_measure(v, family) for v in verts])


def kind_of(data: dict) -> str:
    if "family" in data and isinstance(data.get("family"), (str, dict)) and "levels" not in data:
        return "manifest"
    if "levels" in data:
        return "family"
    if "transitions" in data:
        return "system"
    if "vertices" in data:
        return "target"
    if "window" in data or "coordinate" in data:
        return "observable"
    if "type" in data:
        return "measure"
    return "unknown"


def validate_data(data: dict, base: Path | None = None) -> list:
    """Diagnostics for one definition; an empty list means valid."""
    kind = kind_of(data)
    try:
        if kind == "family":
            NestedFamily.from_json(data)
        elif kind == "system":
            from .shift import validate_nondegenerate
            validate_nondegenerate(ShiftSystem.from_json(data))
        elif kind == "measure":
            m = measure_from_json(data)
            if isinstance(m, MarkovMeasure) and not m.is_stationary():
                return ["measure is not shift invariant (pi P != pi)"]
        elif kind == "target":
            for i, v in enumerate(data["vertices"]):
                if v.get("type") != "parry":
                    measure_from_json(v)
        elif kind == "observable":
            Observable.from_json(data)
        elif kind == "manifest":
            resolve_manifest(data, base or Path("."))
        else:
            return ["unrecognized definition (no levels/transitions/vertices/type/window/family key)"]
    except (SystemError_, MeasureError, ObservableError, InputError, ScheduleError, KeyError,
            ValueError, TypeError) as exc:
        return [str(exc)]
    return []


def resolve_manifest(data: dict, base: Path) -> dict:
    """Manifest with defaults filled and referenced files embedded under ``definitions``."""
    m = dict(MANIFEST_DEFAULTS)
    unknown = set(data) - set(MANIFEST_DEFAULTS) - {"definitions"}
    if unknown:
        raise InputError(f"unknown manifest keys: {sorted(unknown)}")
    m.update(data)
    defs = dict(data.get("definitions", {}))
    for key in ("family", "target", "observable"):
        ref = m.get(key)
        if isinstance(ref, str):
            defs[key] = _load_json(base / ref)
        elif isinstance(ref, dict):
            defs[key] = ref
    if "family" not in defs:
        raise InputError("manifest names no family")
    if m["variant"] is None and "target" not in defs:
        raise InputError("manifest needs a target or a variant with an observable")
    if m["variant"] is not None and "observable" not in defs:
        raise InputError("a variant needs an observable")
    if m["mode"] not in ("direct", "measure"):
        raise InputError(f"unknown mode {m['mode']!r}")
    if not float(m["eta"]) > 0:
        raise InputError("eta must be positive")
    m["definitions"] = defs
    return m


@dataclass
class Run:
    manifest: dict
    family: NestedFamily  # as defined
    work: NestedFamily  # the family the schedule lives on (power family on the mixing route)
    route: MixingRoute | None
    chain: MeasureChain
    schedule: Schedule
    observable: Observable | None
    target_info: dict


def build_run(manifest: dict) -> Run:
    """Deterministically rebuild family, chain and schedule from a resolved manifest."""
    defs = manifest["definitions"]
    family = family_from_json(defs["family"])
    obs = Observable.from_json(defs["observable"]) if "observable" in defs else None
    u = manifest["u"]
    route = None
    work, u_work = family, u
    if any(primitivity_index(X) is None for X in family.levels):
        route = mixing_route(family, u)
        work, u_work = route.family, route.u_power
    eta = float(manifest["eta"])
    info = {}
    if manifest["variant"] is not None:
        if route is not None:
            raise InputError("observable variants need mixing levels")
        tgt = irregular_target(obs, family, int(manifest["n0"]), manifest["variant"], eta)
        path = tgt.path
        info = tgt.to_json()
    else:
        path = target_from_json(defs["target"], family)
        if route is not None:
            power = route.powers[-1]
            nb = len(power.block_alphabet)
            verts = []
            for v in path.vertices:
                verts.append(v if v.alphabet_size == nb and nb != family.alphabet_size
                             else block_measure(v, power))
            path = TargetPath(verts)
    B = int(manifest["bands"])
    chain = build_chain(path, eta, length=max(int(manifest["chain_length"]), B + 2), mode=manifest["mode"],
                        family=work)
    sched = solve_schedule(work, chain, u_work, eta, bands=B, seed=int(manifest["seed"]),
                           zeta1=manifest["zeta1"], budget=int(manifest["budget"]))
    limit = manifest.get("max_length")
    if limit is not None and sched.total_length() > int(limit) and manifest["horizon"] is None:
        raise BudgetError(f"schedule length {sched.total_length()} exceeds max_length {limit}")
    return Run(manifest, family, work, route, chain, sched, obs, info)


def _schedule_record(run: Run) -> dict:
    data = run.schedule.to_json()
    if run.route is not None:
        data["route"] = {"k": run.route.k, "i0": run.route.i0,
                         "blocks": [format_word(b) for b in run.route.powers[-1].block_alphabet]}
    return json.loads(json.dumps(data))


# ---------------------------------------------------------------------------
# construct / resume


def _status(run: Run, stream: SymbolStream, archive: RunArchive) -> dict:
    s = run.schedule
    horizon = run.manifest["horizon"]
    target = s.total_length() if horizon is None else min(int(horizon), s.total_length())
    done = len(stream) >= target
    return {"state": "complete" if done else "resumable", "completed_band": int(stream.meta["completed_band"]),
            "bands": s.B, "length": len(stream), "target_length": target, "seed": s.seed,
            "stream_sha256": archive.stream_digest()}


def construct(manifest: dict, out_dir, stop_band: int | None = None) -> tuple:
    """Build, materialize and persist a run.  Returns ``(run, archive)``."""
    archive = RunArchive(out_dir)
    run = build_run(manifest)
    archive.write_manifest(manifest)
    archive.write_schedule(_schedule_record(run))
    archive.write_index(run.schedule)
    stream = generate_point(run.work, run.chain, run.schedule, horizon=manifest["horizon"], stop_band=stop_band)
    archive.write_stream(stream.symbols, run.work.alphabet_size)
    archive.write_status(_status(run, stream, archive))
    return run, archive


def load_run(archive: RunArchive) -> Run:
    if not archive.exists():
        raise ArchiveError(f"{archive.root}: not a run archive")
    run = build_run(archive.manifest())
    if _schedule_record(run) != archive.schedule_json():
        raise ArchiveError("schedule.json does not match the schedule rebuilt from the manifest")
    return run


def load_stream(run: Run, archive: RunArchive) -> SymbolStream:
    sym, a = archive.read_stream()
    st = archive.status()
    s = run.schedule
    return SymbolStream(sym, a, s.checkpoints(), s.band_of_segment(), seed=s.seed,
                        meta={"completed_band": st["completed_band"], "seed": s.seed})


def resume(out_dir, stop_band: int | None = None) -> tuple:
    archive = RunArchive(out_dir)
    run = load_run(archive)
    st = archive.status()
    if st["state"] == "complete":
        return run, archive
    part = load_stream(run, archive)
    stream = generate_point(run.work, run.chain, run.schedule, horizon=run.manifest["horizon"],
                            stop_band=stop_band, resume=part)
    archive.write_stream(stream.symbols, run.work.alphabet_size)
    archive.write_status(_status(run, stream, archive))
    return run, archive


# ---------------------------------------------------------------------------
# audits


@dataclass
class AuditResult:
    name: str
    passed: bool
    summary: dict
    header: list
    rows: list


def base_view(run: Run, stream: SymbolStream) -> SymbolStream:
    return run.route.expand(stream) if run.route is not None else stream


def audit_tracking(run: Run, stream: SymbolStream) -> AuditResult:
    if run.route is not None:
        rows = verify_route_tracking(run.route, stream, run.chain, run.schedule)
    else:
        rows = verify_tracking(stream, run.chain, run.schedule, family=run.work)
    bad = [r for r in rows if not r.passed]
    mx = band_maxima(rows)
    seq = [mx[b] for b in sorted(mx)]
    summary = {"checkpoints": len(rows), "failures": len(bad),
               "first_failure": None if not bad else {"j": bad[0].j, "M": bad[0].M, "band": bad[0].band,
                                                     "window_ok": bad[0].window_ok},
               "band_maxima": {str(k): v for k, v in mx.items()},
               "maxima_strictly_decreasing": all(x > y for x, y in zip(seq, seq[1:]))}
    table = [(r.j, r.M, r.band, r.distance, r.envelope, r.window_ok, r.passed) for r in rows]
    return AuditResult("tracking", bool(rows) and not bad, summary,
                       ["j", "M", "band", "distance", "envelope", "window_ok", "passed"], table)


def audit_transitivity(run: Run, stream: SymbolStream, depth: int = 6) -> AuditResult:
    rows = verify_transitivity(stream, run.work, run.schedule, depth)
    n = len(stream)
    table = []
    audited = failed = 0
    for r in rows:
        if r.horizon is None or r.horizon > n:
            status = "unaudited"
        else:
            audited += 1
            status = "pass" if r.passed else "fail"
            failed += status == "fail"
        table.append((r.level, r.length, r.word, -1 if r.first_hit is None else r.first_hit,
                      -1 if r.horizon is None else r.horizon, status))
    summary = {"words": len(rows), "audited": audited, "failures": failed, "depth": depth}
    return AuditResult("transitivity", audited > 0 and failed == 0, summary,
                       ["level", "length", "word", "first_hit", "band_horizon", "status"], table)


def audit_certificate(run: Run, stream: SymbolStream, n_pairs: int = 100) -> AuditResult:
    c = separated_family_certificate(run.schedule, run.chain, run.work, stream, n_pairs=n_pairs,
                                     seed=run.schedule.seed)
    inf_h = run.chain.path.inf_entropy()
    summary = dict(c.to_json(), margin=c.rate - c.floor, inf_entropy_K=inf_h,
                   margin_vs_inf_entropy=c.rate - inf_h)
    table = [(b["k"], b["N"], b["n"], b["log_gamma"]) for b in c.per_band]
    return AuditResult("certificate", c.passed, summary, ["band", "N", "n", "log_gamma"], table)


def audit_birkhoff(run: Run, stream: SymbolStream, tolerance: float = 0.1) -> AuditResult:
    if run.observable is None:
        raise InputError("birkhoff audit needs an observable in the manifest")
    base = base_view(run, stream)
    tr = birkhoff_trace(base, run.observable)
    variant = run.manifest.get("variant")
    spreads = [float(x) for x in run.target_info.get("spreads", [])]
    if not spreads:
        spreads = [float(spread(run.observable, v)) for v in run.chain.path.vertices]
    if len(tr.averages) == 0:
        passed = False
    elif variant in ("a", "c", "d") or (variant is None and len(spreads) > 1 and max(spreads) > min(spreads)):
        passed = tr.liminf <= min(spreads) + tolerance and tr.limsup >= max(spreads) - tolerance
    else:
        passed = abs(float(tr.averages[-1]) - spreads[0]) <= tolerance
    summary = {"liminf": tr.liminf, "limsup": tr.limsup, "oscillation": tr.oscillation,
               "spreads": spreads, "tolerance": tolerance, "variant": variant,
               "band_estimates": {str(k): v for k, v in tr.band_estimates().items()}}
    return AuditResult("birkhoff", passed, summary, ["checkpoint", "average", "running_liminf", "running_limsup"],
                       list(tr.rows()))


def audit_classify(run: Run, stream: SymbolStream) -> AuditResult:
    base = base_view(run, stream)
    variant = run.manifest.get("variant")
    c = classify_limit_set(base, run.family if run.route is None else run.route.base, schedule=run.schedule,
                           declared=variant, n0=int(run.manifest["n0"]) if variant else None)
    passed = c.tag is not None and (variant is None or c.tag == variant)
    summary = c.to_json(base.alphabet_size)
    table = [(cl.leader, len(cl.members), cl.kind, cl.out_mass, cl.min_mass) for cl in c.clusters]
    return AuditResult("classify", passed, summary,
                       ["leader", "members", "kind", "out_of_level_mass", "min_ambient_mass"], table)


def run_audit(archive: RunArchive, which: str, fmt: str = "csv", tolerance: float = 0.1,
              run: Run | None = None) -> list:
    run = run or load_run(archive)
    stream = load_stream(run, archive)
    names = AUDITS if which == "all" else (which,)
    out = []
    for name in names:
        if name == "birkhoff" and run.observable is None and which == "all":
            continue
        if name == "classify" and which == "all" and run.manifest.get("variant") is None:
            continue
        fn = {"tracking": audit_tracking, "transitivity": audit_transitivity,
              "certificate": audit_certificate, "birkhoff": audit_birkhoff,
              "classify": audit_classify}[name]
        res = fn(run, stream, tolerance) if name == "birkhoff" else fn(run, stream)
        if fmt == "json":
            archive.write_audit_json(name, {"passed": res.passed, "summary": res.summary,
                                            "header": res.header, "rows": [list(map(_plain, r)) for r in res.rows]})
        else:
            archive.write_audit_csv(name, res.header, res.rows)
            archive.write_audit_json(f"{name}_summary", {"passed": res.passed, "summary": res.summary})
        out.append(res)
    return out


def _plain(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------------------
# presets


def _system(matrix, label):
    return {"label": label, "alphabet_size": len(matrix), "transitions": matrix}


GOLDEN = _system([[1, 1], [1, 0]], "golden-mean")
FULL2 = _system([[1, 1], [1, 1]], "full-2")
BERNOULLI_HALF = {"type": "bernoulli", "probs": ["1/2", "1/2"], "label": "Bernoulli(1/2)"}
PERIOD2 = [_system([[0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 0]], "period-2 inner"),
           _system([[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], "period-2 outer")]

PRESETS = {
    "bernoulli": {"family": {"label": "full 2-shift", "levels": [FULL2]},
                  "target": {"vertices": [BERNOULLI_HALF]},
                  "manifest": {"eta": 0.25, "bands": 3, "horizon": 1000000, "seed": 7}},
    "golden-full": {"family": {"label": "golden-mean in full 2-shift", "levels": [GOLDEN, FULL2]},
                    "target": {"vertices": [BERNOULLI_HALF]},
                    "manifest": {"eta": 0.25, "bands": 3, "seed": 7}},
    "irregular": {"family": {"label": "full 2-shift", "levels": [FULL2]},
                  "observable": {"alphabet_size": 2, "coordinate": 0, "label": "x_0"},
                  "manifest": {"eta": 0.42, "bands": 3, "seed": 11, "variant": "a", "n0": 1}},
    "period2": {"family": {"label": "period-2 pair", "levels": PERIOD2},
                "target": {"vertices": [{"type": "parry", "level": 2}]},
                "manifest": {"eta": 0.3, "bands": 3, "seed": 3, "u": "1", "horizon": 2000000}},
}


def define_preset(name: str, out_dir) -> Path:
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    p = PRESETS[name]
    out = Path(out_dir)
    man = dict(p["manifest"])
    for key in ("family", "target", "observable"):
        if key in p:
            write_json(out / f"{key}.json", p[key])
            man[key] = f"{key}.json"
    write_json(out / "manifest.json", man)
    return out / "manifest.json"


# ---------------------------------------------------------------------------
# argument handling


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the manifest seed")
    common.add_argument("--bands", type=int, help="override the band count B")
    common.add_argument("--horizon", type=int, help="override the materialized prefix length")
    common.add_argument("--out-dir", help="archive or output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="satshift", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="cmd", required=True)
    d = sub.add_parser("define", parents=[common], help="write a preset definition set")
    d.add_argument("preset", choices=sorted(PRESETS))
    v = sub.add_parser("validate", parents=[common], help="check definition files")
    v.add_argument("files", nargs="+")
    c = sub.add_parser("construct", parents=[common], help="build a run archive from a manifest")
    c.add_argument("manifest")
    c.add_argument("--stop-band", type=int, help="stop after this band (archive stays resumable)")
    r = sub.add_parser("resume", parents=[common], help="continue a resumable archive")
    r.add_argument("archive")
    r.add_argument("--stop-band", type=int)
    a = sub.add_parser("audit", parents=[common], help="audit an archive")
    a.add_argument("archive")
    a.add_argument("--which", choices=AUDITS + ("all",), default="all")
    a.add_argument("--tolerance", type=float, default=0.1, help="Birkhoff spread tolerance")
    e = sub.add_parser("entropy", parents=[common], help="entropy of a system or measure file")
    e.add_argument("file")
    e.add_argument("--n", type=int, default=32)
    i = sub.add_parser("info", parents=[common], help="summarize an archive or definition file")
    i.add_argument("path")
    return p


def _emit(data, fmt):
    if fmt == "json":
        print(json.dumps(data, indent=2, sort_keys=True, default=str))
    else:
        for k, v in data.items():
            print(f"{k},{v}")


def _manifest_from_args(args) -> dict:
    path = Path(args.manifest)
    data = _load_json(path)
    for key in ("seed", "bands", "horizon"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    return resolve_manifest(data, path.parent)


def _cmd_validate(args) -> int:
    worst = EXIT_PASS
    for f in args.files:
        try:
            data = _load_json(f)
        except InputError as exc:
            print(f"{f}: ERROR {exc}")
            worst = EXIT_INPUT
            continue
        problems = validate_data(data, Path(f).parent)
        if problems:
            worst = EXIT_INPUT
            for msg in problems:
                print(f"{f}: ERROR {msg}")
        else:
            print(f"{f}: OK ({kind_of(data)})")
    return worst


def _cmd_entropy(args) -> int:
    data = _load_json(args.file)
    kind = kind_of(data)
    if kind in ("system", "family"):
        fam = family_from_json(data)
        rows = []
        for lvl, X in enumerate(fam.levels, start=1):
            est = estimate_entropy_word_count(X, args.n)
            closed = MarkovMeasure.parry(X).entropy()
            rows.append({"level": lvl, "n": args.n, "word_count_estimate": est.value,
                         "parry_entropy": closed, "gap": est.value - closed})
        _emit({"levels": rows} if args.format == "json" else rows[-1], args.format)
        return EXIT_PASS
    if kind == "measure":
        mu = measure_from_json(data)
        n = min(args.n, 12)
        closed = mu.entropy()
        est = block_entropy(mu, n) / n
        _emit({"closed_form": closed, "block_entropy_rate": est, "n": n, "gap": est - closed}, args.format)
        return EXIT_PASS
    raise InputError(f"{args.file}: entropy needs a system, family or measure definition")


def _cmd_info(args) -> int:
    p = Path(args.path)
    if p.is_dir():
        ar = RunArchive(p)
        st = ar.status()
        sch = ar.schedule_json()
        man = ar.manifest()
        out = {"state": st["state"], "completed_band": st["completed_band"], "length": st["length"],
               "seed": st["seed"], "bands": sch["B"], "total_length": sch["total_length"],
               "eta": man["eta"], "variant": man.get("variant"),
               "band_table": [{k: b[k] for k in ("k", "m", "t", "n", "N", "zeta")} for b in sch["bands"]]}
        if "route" in sch:
            out["route"] = sch["route"]
        _emit(out, args.format)
        return EXIT_PASS
    data = _load_json(p)
    _emit({"kind": kind_of(data), "problems": validate_data(data, p.parent)}, args.format)
    return EXIT_PASS


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.cmd == "define":
            path = define_preset(args.preset, args.out_dir or args.preset)
            print(f"wrote {path}")
            return EXIT_PASS
        if args.cmd == "validate":
            return _cmd_validate(args)
        if args.cmd == "construct":
            man = _manifest_from_args(args)
            out = args.out_dir or Path(args.manifest).parent / "run"
            run, ar = construct(man, out, args.stop_band)
            st = ar.status()
            print(f"{st['state']}: {st['length']} symbols, band {st['completed_band']}/{st['bands']}, "
                  f"seed {st['seed']} -> {ar.root}")
            return EXIT_PASS
        if args.cmd == "resume":
            run, ar = resume(args.archive, args.stop_band)
            st = ar.status()
            print(f"{st['state']}: {st['length']} symbols, band {st['completed_band']}/{st['bands']}")
            return EXIT_PASS
        if args.cmd == "audit":
            ar = RunArchive(args.archive)
            results = run_audit(ar, args.which, args.format, args.tolerance)
            code = EXIT_PASS
            for res in results:
                line = f"{res.name}: {'PASS' if res.passed else 'FAIL'}"
                if res.name == "tracking" and res.summary["first_failure"]:
                    line += f" (first failing checkpoint j={res.summary['first_failure']['j']})"
                if res.name == "certificate":
                    line += (f" rate={res.summary['rate']:.6f} floor={res.summary['floor']:.6f} "
                             f"margin={res.summary['margin']:.6f} pairs={res.summary['pairs_separated']}"
                             f"/{res.summary['pairs_checked']}")
                if res.name == "birkhoff":
                    line += f" liminf={res.summary['liminf']:.4f} limsup={res.summary['limsup']:.4f}"
                if res.name == "classify":
                    line += f" tag={res.summary['tag']} declared={res.summary['declared']}"
                print(line)
                if not res.passed:
                    code = EXIT_FAIL
            return code
        if args.cmd == "entropy":
            return _cmd_entropy(args)
        if args.cmd == "info":
            return _cmd_info(args)
    except BudgetError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, SystemError_, MeasureError, ObservableError, ScheduleError, ArchiveError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
