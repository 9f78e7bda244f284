"""Command-line entry point.

Subcommands: find (resampling solver), sample (projected-chain sampler),
count (approximate model count), check-projection (admissibility report),
verify (oracle self-checks on the bundled instances).  Output is a single
JSON document on stdout carrying a manifest that, together with the input
file, fully determines the run; diagnostics go to stderr.

Exit codes: 0 success, 1 ERROR result (sampler lift failure, solver budget,
counting abort), 2 usage/parse/regime errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .bundled import BUNDLED
from .counting import CountingError, approx_count, counting_eps
from .csp import AtomicCSP, CSPError, ParseError, build_coloring_csp, parse_dimacs, parse_hypergraph
from .dynamics import main_sample
from .oracle import (
    count_satisfying,
    count_2trees,
    count_2trees_backtracking,
    greedy_2tree,
    is_two_tree,
    exact_mu_pi,
    marginal_bound_holds,
    two_tree_count_bound,
)
from .projection import (
    AdmissibilityError,
    ConstructionError,
    ProjectionScheme,
    RegimeError,
    check_admissibility,
    construct_projection,
    regime_ok,
)
from .resample import find_assignment

USAGE_ERROR, RESULT_ERROR = 2, 1


def _emit(payload: dict, pretty: bool) -> None:
    if pretty:
        text = json.dumps(payload, sort_keys=True, indent=2)
    else:
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    sys.stdout.write(text + "\n")


def _fail(message: str, code: int) -> int:
    sys.stderr.write(f"error: {message}\n")
    return code


def _load_csp(args) -> AtomicCSP:
    try:
        with open(args.input, "rb") as fh:
            text = fh.read()
    except OSError as exc:
        raise CSPError(f"cannot read {args.input}: {exc}") from exc
    if args.format == "cnf":
        return parse_dimacs(text)
    if args.q is None:
        raise CSPError("hypergraph input requires --q")
    return build_coloring_csp(parse_hypergraph(text), args.q)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(np.random.SeedSequence().entropy % (1 << 63))


def _scheme_for(args, csp: AtomicCSP, seed: int):
    if args.scheme:
        with open(args.scheme, "r", encoding="utf-8") as fh:
            return ProjectionScheme.from_json(fh.read()), f"file:{args.scheme}"
    scheme = construct_projection(
        csp,
        eta=args.eta,
        delta=args.construction_delta,
        case_hint=args.case_hint,
        rng=np.random.default_rng([seed, 0]),
    )
    return scheme, f"auto:{scheme.case}"


def _overrides(args) -> dict:
    out = {}
    for name in ("c_t", "theta_const", "c_n"):
        if hasattr(args, name) and getattr(args, name) is not None:
            out[name] = getattr(args, name)
    return out


def _manifest(args, command: str, seed: int, scheme_source: str | None) -> dict:
    manifest = {
        "command": command,
        "input": getattr(args, "input", None),
        "format": getattr(args, "format", None),
        "q": getattr(args, "q", None),
        "eta": getattr(args, "eta", None),
        "seed": seed,
        "scheme_source": scheme_source,
        "overrides": _overrides(args),
        "version": __version__,
    }
    if hasattr(args, "eps"):
        manifest["epsilon"] = args.eps
    if hasattr(args, "delta"):
        manifest["delta"] = args.delta
    return manifest


def _env_float(name: str, current):
    if current is not None:
        return current
    raw = os.environ.get(name)
    return float(raw) if raw else None


def _chain_payload(job) -> dict:
    csp_n, domains, constraints, scheme_json, eps, eta, c_t, seed = job
    from .csp import AtomicConstraint

    csp = AtomicCSP(
        n=csp_n,
        domains=domains,
        constraints=tuple(AtomicConstraint(tuple(v), tuple(f)) for v, f in constraints),
    )
    scheme = ProjectionScheme.from_json(scheme_json)
    res = main_sample(csp, scheme, eps, seed=seed, eta=eta, c_t=c_t)
    return {
        "assignment": list(res.assignment) if res.assignment is not None else None,
        "error": res.error,
        "diagnostics": res.diagnostics,
    }


def cmd_find(args) -> int:
    seed = _resolve_seed(args)
    csp = _load_csp(args)
    result = find_assignment(csp, np.random.default_rng([seed, 1]), delta=args.delta)
    payload = {
        "assignment": list(result.values) if result.success else None,
        "success": result.success,
        "resamples": result.resamples,
        "attempts": result.attempts_used,
        "manifest": _manifest(args, "find", seed, None),
    }
    _emit(payload, args.pretty)
    return 0 if result.success else RESULT_ERROR


def cmd_sample(args) -> int:
    args.c_t = _env_float("LLLSAMPLE_CT", args.c_t)
    seed = _resolve_seed(args)
    csp = _load_csp(args)
    scheme, source = _scheme_for(args, csp, seed)
    c_t = args.c_t if args.c_t is not None else 1.0
    jobs = [
        (
            csp.n,
            csp.domains,
            tuple((c.vars, c.forbidden) for c in csp.constraints),
            scheme.to_json(),
            args.eps,
            args.eta,
            c_t,
            [seed, 1, i],
        )
        for i in range(args.count)
    ]
    if args.workers > 1 and args.count > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_chain_payload, jobs))
    else:
        results = [_chain_payload(job) for job in jobs]
    manifest = _manifest(args, "sample", seed, source)
    if args.count == 1:
        payload = {**results[0], "manifest": manifest}
        errored = results[0]["error"] is not None
    else:
        payload = {"results": results, "manifest": manifest}
        errored = any(r["error"] is not None for r in results)
    _emit(payload, args.pretty)
    return RESULT_ERROR if errored else 0


def cmd_count(args) -> int:
    args.c_t = _env_float("LLLSAMPLE_CT", args.c_t)
    args.theta_const = _env_float("LLLSAMPLE_THETA_CONST", args.theta_const)
    args.c_n = _env_float("LLLSAMPLE_CN", args.c_n)
    seed = _resolve_seed(args)
    csp = _load_csp(args)
    scheme, source = _scheme_for(args, csp, seed)
    manifest = _manifest(args, "count", seed, source)
    try:
        estimate = approx_count(
            csp,
            scheme,
            args.delta,
            seed=seed,
            theta_const=args.theta_const if args.theta_const is not None else 0.125,
            c_n=args.c_n if args.c_n is not None else 64.0,
            eta=args.eta,
            c_t=args.c_t if args.c_t is not None else 1.0,
        )
    except CountingError as exc:
        _emit({"error": str(exc), "stage": exc.stage, "manifest": manifest}, args.pretty)
        return RESULT_ERROR
    _emit({**estimate.to_dict(), "manifest": manifest}, args.pretty)
    return 0


def cmd_check_projection(args) -> int:
    seed = _resolve_seed(args)
    csp = _load_csp(args)
    scheme, source = _scheme_for(args, csp, seed)
    report = check_admissibility(csp, scheme, args.eta)
    payload = {
        "report": report.to_dict(),
        "regime_ok": regime_ok(csp, scheme),
        "scheme": json.loads(scheme.to_json()),
        "manifest": _manifest(args, "check-projection", seed, source),
    }
    _emit(payload, args.pretty)
    return 0


def _verify_checks() -> list[dict]:
    checks = []
    for name, inst in BUNDLED.items():
        csp, scheme = inst.load()
        cnt = count_satisfying(csp)
        checks.append(
            {"name": f"count:{name}", "pass": cnt == inst.solutions,
             "detail": f"enumerated {cnt}, frozen {inst.solutions}"}
        )
        mu = exact_mu_pi(csp, scheme)
        checks.append(
            {"name": f"mu_pi_total:{name}", "pass": sum(mu.values()) == 1,
             "detail": f"{len(mu)} projected states"}
        )
        if "regime" in inst.tags:
            from itertools import product

            qs = scheme.q_sizes()
            ok = True
            for v in range(csp.n):
                for z in product(*(range(q) for q in qs)):
                    try:
                        if not marginal_bound_holds(csp, scheme, v, z):
                            ok = False
                    except ValueError:
                        continue  # conditioning event infeasible
            checks.append({"name": f"marginal_bound:{name}", "pass": ok, "detail": "all (v,z)"})
    path5 = {i: [j for j in (i - 1, i + 1) if 0 <= j < 5] for i in range(5)}
    star = {0: [1, 2, 3], 1: [0], 2: [0], 3: [0]}
    for gname, graph, delta in [("path5", path5, 2), ("star", star, 3)]:
        for ell in (2, 3):
            scan = count_2trees(graph, 0, ell)
            back = count_2trees_backtracking(graph, 0, ell)
            checks.append(
                {"name": f"2tree_count:{gname}:{ell}", "pass": scan == back
                 and scan <= two_tree_count_bound(delta, ell),
                 "detail": f"scan {scan}, backtracking {back}"}
            )
        tree = greedy_2tree(graph, set(graph), 0)
        ok = is_two_tree(graph, tree) and len(tree) >= len(graph) / (delta + 1)
        checks.append({"name": f"greedy_2tree:{gname}", "pass": ok, "detail": f"size {len(tree)}"})
    return checks


def cmd_verify(args) -> int:
    checks = _verify_checks()
    payload = {
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
        "manifest": {"command": "verify", "version": __version__},
    }
    _emit(payload, args.pretty)
    return 0 if payload["all_pass"] else RESULT_ERROR


def _add_common(p, scheme_opts=True):
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("cnf", "hypergraph"), default="cnf")
    p.add_argument("--q", type=int, default=None, help="colors for hypergraph input")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--eta", type=float, default=0.25)
    p.add_argument("--pretty", action="store_true")
    if scheme_opts:
        p.add_argument("--scheme", default=None, help="projection scheme JSON file")
        p.add_argument("--case-hint", default=None,
                       choices=("case1", "case2", "case3", "case4", "case5"))
        p.add_argument("--construction-delta", type=float, default=0.01)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lllsample",
        description="Near-uniform sampling and approximate counting of atomic-CSP solutions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("find", help="find one satisfying assignment by resampling")
    _add_common(p, scheme_opts=False)
    p.add_argument("--delta", type=float, default=0.01, help="failure probability")
    p.set_defaults(func=cmd_find)

    p = sub.add_parser("sample", help="draw near-uniform satisfying assignments")
    _add_common(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--c-t", type=float, default=None, dest="c_t")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("count", help="approximate the satisfying-assignment count")
    _add_common(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--theta-const", type=float, default=None, dest="theta_const")
    p.add_argument("--c-n", type=float, default=None, dest="c_n")
    p.add_argument("--c-t", type=float, default=None, dest="c_t")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("check-projection", help="admissibility report for a scheme")
    _add_common(p)
    p.set_defaults(func=cmd_check_projection)

    p = sub.add_parser("verify", help="run the oracle self-checks on bundled instances")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    try:
        return args.func(args)
    except (ParseError, CSPError, RegimeError, AdmissibilityError, ValueError) as exc:
        return _fail(str(exc), USAGE_ERROR)
    except ConstructionError as exc:
        return _fail(str(exc), RESULT_ERROR)


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
