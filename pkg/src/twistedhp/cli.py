"""Command line front end: ``twistedhp <command> [instance.json] [options]``.

Commands: validate, identities, hp, derham, compare, morita.  Reports go to
stdout as text or, with ``--format machine``, as one sorted JSON document
that is byte-identical across runs.  Exit status: 0 when every check passes,
1 on a falsification or failed check, 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Callable

from . import __version__
from .dgcat import (
    CentralFamily,
    DgCategoryPresentation,
    ParseError,
    PolynomialAlgebraPresentation,
    dg_category_to_json,
    loads_instance,
    parse_dg_category,
    parse_polynomial,
    parse_polynomial_text,
    polynomial_to_json,
    validate_central_family,
    validate_presentation,
)
from .derham import (
    DeRhamModule,
    TwistedComplex,
    check_fold_agreement,
    check_homotopy_identity,
    identity_map,
    tower_windows,
    twisted_cohomology,
)
from .hkr import check_compatibilities, check_quasi_iso, compare_mt1
from .hochschild import assemble_module, corner_morita
from .lambdamod import (
    DescentFailure,
    WindowInfinite,
    PeriodicComplex,
    ScaledEModule,
    Window,
    WeylActionData,
    chain_commutator_witness,
    check_relations,
    check_tower_compatibility,
    check_weyl_relations,
    is_weak_morphism,
    polynomial_tau_action,
    weyl_action,
    weyl_commutator_on_homology,
    window_dict,
)
from .linalg import format_rational

JOBS_ENV = "TWISTEDHP_JOBS"
DEFAULTS = {"w_max": 4, "t_max": 2, "w_min": 0, "N": 5}


class InputError(Exception):
    pass


# ------------------------------------------------------------------ input


def _read_instance(args) -> dict:
    if args.instance is None:
        if args.potential is None and args.n is None:
            raise InputError("no instance file and no inline polynomial given")
        n = args.n if args.n is not None else 1
        raw = {"kind": "polynomial", "n": n, "potentials": list(args.potential or [])}
        if args.weights:
            raw["weights"] = [int(w) for w in args.weights.split(",")]
        return raw
    try:
        text = sys.stdin.read() if args.instance == "-" else open(args.instance, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"cannot read {args.instance}: {exc.strerror}") from None
    raw = loads_instance(text)
    if not isinstance(raw, dict):
        raise ParseError("instance must be a JSON object", "top level")
    return raw


def _payload(raw: dict) -> dict:
    return raw.get("payload", raw)


def build_instance(raw: dict):
    """("polynomial", P) or ("dg-category", (P, t)) from a raw instance document."""
    kind = raw.get("kind")
    data = _payload(raw)
    if kind == "polynomial":
        data = dict(data)
        n = data.get("n")
        pots = []
        for i, f in enumerate(data.get("potentials", [])):
            if isinstance(f, str):
                if not isinstance(n, int):
                    raise ParseError("polynomial instance needs integer 'n'", "payload")
                f = [{"exponents": list(e), "coeff": format_rational(c)} for e, c in parse_polynomial_text(f, n).items()]
            pots.append(f)
        data["potentials"] = pots
        return kind, parse_polynomial(data)
    if kind == "dg-category":
        return kind, parse_dg_category(data)
    raise ParseError(f"unknown kind {kind!r}; expected 'polynomial' or 'dg-category'", "kind")


def _params(args, raw: dict) -> dict:
    win = raw.get("windows", {}) if isinstance(raw.get("windows", {}), dict) else {}
    out = {}
    for key, flag in (("w_max", "w_max"), ("t_max", "t_max"), ("w_min", "w_min"), ("N", "length_bound")):
        v = getattr(args, flag)
        if v is None:
            v = win.get(key, DEFAULTS[key])
        try:
            v = int(v)
        except (TypeError, ValueError):
            raise ParseError(f"window bound {key} must be an integer", f"windows.{key}") from None
        if v < 0 and key != "w_min":
            raise ParseError(f"window bound {key} must be >= 0", f"windows.{key}")
        out[key] = v
    return out


def _jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _instance_json(kind, obj) -> dict:
    if kind == "polynomial":
        return {"kind": kind, **polynomial_to_json(obj)}
    P, t = obj
    return {"kind": kind, **dg_category_to_json(P, t)}


# ------------------------------------------------------------- formatting


def _matrix(A) -> list:
    return [[format_rational(x) for x in row] for row in A]


def dims_rows(data: WeylActionData) -> list[dict]:
    stable = data.stable_table()
    rows = []
    for (p, w, T), n in sorted(data.dim_table().items(), key=lambda kv: (kv[0][1], kv[0][2], kv[0][0])):
        rows.append({"parity": "ev" if p == 0 else "od", "weight": w, "level": T, "dim": n, "stable": stable.get((p, w, T))})
    return rows


def maps_rows(data: WeylActionData) -> list[dict]:
    out = []
    for (kind, i, W) in sorted(data.maps, key=lambda k: (k[0], k[1], k[2].sort_key())):
        tgt, A = data.maps[(kind, i, W)]
        if not A or not A[0]:
            continue
        out.append({"map": kind, "index": i, "source": window_dict(W, data.weights), "target": window_dict(tgt, data.weights), "matrix": _matrix(A)})
    return out


def _check(name: str, ok: bool, **detail) -> dict:
    out = {"name": name, "ok": bool(ok)}
    out.update({k: v for k, v in detail.items() if v is not None})
    return out


def _summarize(checks_list, name: str) -> dict:
    bad = [c for c in checks_list if not c.ok]
    return _check(name, not bad, checked=len(checks_list), failures=len(bad),
                  witness=(window_dict(bad[0].window) if bad else None))


def weyl_checks(data: WeylActionData, label: str) -> list[dict]:
    out = [_summarize(check_weyl_relations(data), f"{label}: dtilde tau - tau dtilde = 1"),
           _summarize(check_tower_compatibility(data), f"{label}: tower maps commute with tau and dtilde")]
    if data.m >= 2:
        out.append(_summarize(weyl_commutator_on_homology(data), f"{label}: [dtilde_i, dtilde_j] = 0 on homology"))
        witness = None
        for W in data.windows():
            if W.level >= 2:
                witness = chain_commutator_witness(data.complex, W, 1, 2)
                if witness:
                    break
        out.append(_check(f"{label}: [dtilde_1, dtilde_2] chain-level witness (informational)", True, witness=witness or "none found"))
    return out


# --------------------------------------------------------------- commands


def _module_elements(M, w_min: int, w_max: int, N: int) -> list:
    if not M.weighted:
        return [x for p in (0, 1) for x in M.elements((), p, -N)]
    out = []
    for w in range(w_min, w_max + 1):
        for k in M.element_keys(w):
            for p in (0, 1):
                out.extend(M.elements(k, p))
    return out


def _hochschild_module(kind, obj, fault: bool):
    M = assemble_module(obj) if kind == "polynomial" else assemble_module(obj[0], obj[1])
    return ScaledEModule(M, -1) if fault else M


def cmd_validate(kind, obj, prm, args) -> tuple[dict, int]:
    if kind == "polynomial":
        P = obj
        rep = {"quasi_homogeneous": P.quasi_homogeneous, "degrees": P.degrees() if P.quasi_homogeneous else None,
               "violations": [], "verdict": "valid"}
        if not P.quasi_homogeneous:
            rep["caveat"] = "potentials are not quasi-homogeneous; computations use the total-degree filtration"
        return rep, 0
    P, t = obj
    v = validate_presentation(P)
    if not v:
        v += validate_central_family(P, t)
    return {"violations": [x.as_dict() for x in v], "verdict": "valid" if not v else "invalid"}, 0 if not v else 1


def cmd_identities(kind, obj, prm, args) -> tuple[dict, int]:
    modules = [_hochschild_module(kind, obj, args.inject_fault)]
    if kind == "polynomial":
        modules += [DeRhamModule(obj, "prime"), DeRhamModule(obj, "plain")]
    reports = []
    for M in modules:
        els = _module_elements(M, prm["w_min"], prm["w_max"], prm["N"])
        reports.append(check_relations(M, els))
    ok = all(r.ok for r in reports)
    checks = []
    for r in reports:
        for res in r.results:
            checks.append(_check(f"{r.module}: {res.name}", res.ok, checked=res.checked, failures=res.failures,
                                 witness=res.witness, residual=res.residual))
    return {"modules": [{"module": r.module, "elements": r.elements, "ok": r.ok} for r in reports],
            "checks": checks, "verdict": "pass" if ok else "fail"}, 0 if ok else 1


def _hp_data(kind, obj, prm, fault: bool) -> WeylActionData:
    M = _hochschild_module(kind, obj, fault)
    PC = PeriodicComplex(M)
    if M.weighted:
        windows, weights = tower_windows(M, prm["w_min"], prm["w_max"], prm["t_max"])
    else:
        windows = [Window((), T, p, -prm["N"]) for T in range(prm["t_max"] + 1) for p in (0, 1)]
        weights = {W: 0 for W in windows}
    return weyl_action(PC, windows, weights, jobs=_jobs())


def cmd_hp(kind, obj, prm, args) -> tuple[dict, int]:
    try:
        data = _hp_data(kind, obj, prm, args.inject_fault)
    except DescentFailure as exc:
        return {"verdict": "fail", "certificates": [{"kind": "DescentFailure", "message": str(exc)}]}, 1
    checks = weyl_checks(data, "Hochschild")
    ok = all(c["ok"] for c in checks)
    rep = {"dims": dims_rows(data), "checks": checks, "verdict": "pass" if ok else "fail"}
    if args.emit_matrices:
        rep["maps"] = maps_rows(data)
    return rep, 0 if ok else 1


def cmd_derham(kind, obj, prm, args) -> tuple[dict, int]:
    if kind != "polynomial":
        raise InputError("derham needs a polynomial instance")
    P = obj
    tc = twisted_cohomology(P, prm["w_max"], prm["t_max"], prm["w_min"], jobs=_jobs())
    data = tc.data
    checks = weyl_checks(data, "de Rham")
    for variant in ("prime", "plain"):
        M = DeRhamModule(P, variant)
        r = check_relations(M, _module_elements(M, prm["w_min"], prm["w_max"], prm["N"]))
        checks.append(_check(f"relations of {M.name}", r.ok, checked=r.elements,
                             witness=(r.first_failure().name if r.first_failure() else None)))
    for rep in (check_homotopy_identity(P, prm["w_max"], prm["t_max"], prm["w_min"]),
                check_fold_agreement(P, prm["w_max"], prm["t_max"], prm["w_min"])):
        checks.append(_check(rep.name, rep.ok, checked=rep.checked, witness=(rep.failures[0] if rep.failures else None)))
    if P.m:
        pairs = sorted({(W.key, W.level) for W in data.windows()})
        wm = is_weak_morphism(identity_map, DeRhamModule(P, "prime"), DeRhamModule(P, "plain"), pairs)
        checks.append(_check("identity of forms is a weak morphism (homotopy found)", wm.found, windows=wm.windows))
    poly = polynomial_tau_action(TwistedComplex(P), data.windows(), data.weights)
    checks += weyl_checks(poly, "de Rham tau-polynomial")
    ok = all(c["ok"] for c in checks)
    rep = {"dims": dims_rows(data), "tau_polynomial_dims": dims_rows(poly), "checks": checks,
           "verdict": "pass" if ok else "fail"}
    if tc.caveat:
        rep["caveat"] = tc.caveat
    if args.emit_matrices:
        rep["maps"] = maps_rows(data)
        rep["tau_polynomial_maps"] = maps_rows(poly)
    return rep, 0 if ok else 1


def cmd_compare(kind, obj, prm, args) -> tuple[dict, int]:
    if kind != "polynomial":
        raise InputError("compare needs a polynomial instance")
    P = obj
    cr = compare_mt1(P, prm["w_max"], prm["t_max"], prm["w_min"], jobs=_jobs())
    compat = check_compatibilities(P, prm["w_max"], prm["w_min"])
    qi = [check_quasi_iso(P, w) for w in range(max(prm["w_min"], 0), prm["w_max"] + 1)]
    checks = [
        _check("Weyl relations on both sides", cr.weyl_ok, checked=cr.weyl_checked),
        _check("tower maps commute on both sides", cr.tower_ok),
        _check("hkr compatibilities", compat.ok, E_sign=compat.e_sign, E_sign_determined=compat.sign_determined),
        _check("hkr quasi-isomorphism (rank certificates)", all(q.ok for q in qi)),
    ]
    if cr.hkr_map_ok is not None:
        checks.append(_check("hkr-induced map is an isomorphism commuting with tau and dtilde", cr.hkr_map_ok))
    sides = {"hochschild": dims_rows(cr.hochschild), "derham": dims_rows(cr.derham)}
    rep = {
        "verdict": cr.verdict,
        "sides": sides,
        "checks": checks,
        "hkr": {"compatibilities": compat.as_dict(), "quasi_iso": [q.as_dict() for q in qi]},
        "certificates": [cr.certificate] if cr.certificate else [],
        "stable_windows": sum(1 for r in sides["hochschild"] if r["stable"]),
    }
    if cr.intertwiner is not None:
        rep["intertwiner"] = cr.intertwiner.as_dict(cr.hochschild.weights)
    if cr.caveat:
        rep["caveat"] = cr.caveat
    if args.emit_matrices:
        rep["maps"] = {"hochschild": maps_rows(cr.hochschild), "derham": maps_rows(cr.derham)}
    ok = cr.verdict == "consistent" and all(c["ok"] for c in checks)
    return rep, 0 if ok else 1


def cmd_morita(kind, obj, prm, args) -> tuple[dict, int]:
    if kind != "dg-category":
        raise InputError("morita needs a one-object dg-category instance")
    P, t = obj
    if len(P.objects) != 1:
        raise InputError("morita needs a one-object dg-category instance")
    fam = t if t.m else None
    weighted = assemble_module(P).weighted
    weights = range(max(prm["w_min"], 0), prm["w_max"] + 1) if weighted else [0]
    results = [(w, corner_morita(P, fam, args.k, prm["N"], prm["t_max"], w)) for w in weights]
    hh, hp, strict = [], [], set()
    for w, r in results:
        tag = {"weight": w} if weighted else {}
        hh += [{**tag, "degree": d, "source": a, "target": b, "rank": c} for d, (a, b, c) in sorted(r.hh.items(), reverse=True)]
        hp += [{**tag, "parity": "ev" if p == 0 else "od", "level": T, "source": a, "target": b, "rank": c}
               for (p, T), (a, b, c) in sorted(r.hp.items(), key=lambda kv: (kv[0][1], kv[0][0]))]
        strict.update(r.strict_failures)
    ok = all(r.ok for _, r in results)
    rep = {
        "k": args.k,
        "floor": results[0][1].floor,
        "hh": hh,
        "hp": hp,
        "profile": list(results[0][1].profile(0)),
        "non_strict_operators": sorted(strict),
        "verdict": "isomorphism" if ok else "not an isomorphism",
    }
    return rep, 0 if ok else 1


COMMANDS: dict[str, Callable] = {
    "validate": cmd_validate,
    "identities": cmd_identities,
    "hp": cmd_hp,
    "derham": cmd_derham,
    "compare": cmd_compare,
    "morita": cmd_morita,
}


# ----------------------------------------------------------------- output


def render_text(rep: dict) -> str:
    lines = [f"twistedhp {rep['command']}: {rep.get('verdict', '')}"]
    if rep.get("error"):
        lines.append(f"  error: {rep['error']}")
    if rep.get("caveat"):
        lines.append(f"  caveat: {rep['caveat']}")

    def dims(title, rows):
        shown = [r for r in rows if r["dim"]]
        lines.append(f"  {title} (nonzero; {len(rows)} slices):")
        for r in shown:
            st = {True: "stable", False: "unstable", None: "top level"}[r["stable"]]
            lines.append(f"    {r['parity']} w={r['weight']} T={r['level']}: {r['dim']}  [{st}]")
        if not shown:
            lines.append("    all zero")

    if "dims" in rep:
        dims("dimensions", rep["dims"])
    if "tau_polynomial_dims" in rep:
        dims("tau-polynomial filtration", rep["tau_polynomial_dims"])
    for side, rows in rep.get("sides", {}).items():
        dims(f"{side} dimensions", rows)
    for v in rep.get("violations", []):
        lines.append(f"  violation [{v['kind']}] {v['message']}")
    for key in ("hh", "hp"):
        for r in rep.get(key, []):
            where = f"degree {r['degree']}" if key == "hh" else f"{r['parity']} T={r['level']}"
            lines.append(f"  {key.upper()} {where}: source {r['source']}, target {r['target']}, rank {r['rank']}")
    if "profile" in rep:
        lines.append(f"  parity profile at level 0: {tuple(rep['profile'])}")
    for c in rep.get("checks", []):
        extra = ", ".join(f"{k}={v}" for k, v in c.items() if k not in ("name", "ok"))
        lines.append(f"  [{'ok' if c['ok'] else 'FAIL'}] {c['name']}" + (f" ({extra})" if extra else ""))
    for c in rep.get("certificates", []):
        lines.append(f"  certificate: {json.dumps(c, sort_keys=True)}")
    if "intertwiner" in rep:
        lines.append(f"  intertwiner: {len(rep['intertwiner'])} nonzero blocks")
    return "\n".join(lines) + "\n"


def render_machine(rep: dict) -> str:
    return json.dumps(rep, sort_keys=True, indent=2) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twistedhp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"twistedhp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("instance", nargs="?", help="instance JSON file, or - for stdin")
        p.add_argument("--w-max", type=int, dest="w_max")
        p.add_argument("--t-max", type=int, dest="t_max")
        p.add_argument("--w-min", type=int, dest="w_min")
        p.add_argument("--length-bound", type=int, dest="length_bound", help="N for unweighted finite input")
        p.add_argument("--emit-matrices", action="store_true")
        p.add_argument("--format", choices=("text", "machine"), default="text")
        p.add_argument("--n", type=int, help="number of variables for an inline polynomial instance")
        p.add_argument("--weights", help="comma separated variable weights for an inline instance")
        p.add_argument("--potential", action="append", help="inline potential such as 'x*y' (repeatable)")
        p.add_argument("--k", type=int, default=2, help="matrix size for morita")
        p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return ap


def run(argv: list[str] | None = None) -> tuple[str, int]:
    args = build_parser().parse_args(argv)
    rep: dict = {"command": args.command, "version": __version__}
    try:
        raw = _read_instance(args)
        kind, obj = build_instance(raw)
        prm = _params(args, raw)
        rep["instance"] = _instance_json(kind, obj)
        rep["parameters"] = prm
        body, code = COMMANDS[args.command](kind, obj, prm, args)
        rep.update(body)
    except (ParseError, InputError, WindowInfinite) as exc:
        rep["verdict"] = "input error"
        rep["error"] = str(exc)
        code = 2
    out = render_machine(rep) if args.format == "machine" else render_text(rep)
    return out, code


def main(argv: list[str] | None = None) -> int:
    out, code = run(argv)
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
