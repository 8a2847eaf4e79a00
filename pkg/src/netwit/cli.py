"""``netwit`` command line.

Exit codes: 0 success, 1 certification or violation found (or a reproduction
check failed), 2 input error, 3 solver error.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .qlinalg import DomainError, HermitianOperator, permute_subsystems
from .states import ProductMeasurement, ghz_vector, w_vector
from .witness import entropic_witness, entropic_witness_k, fidelity_witness

EXIT_OK, EXIT_FOUND, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

REFERENCE = {
    "bound_ghz": 0.68301,
    "bound_w": 0.7602,
    "pc_ghz": 0.685,
    "pc_w": 0.765,
    "seesaw_ghz": 0.51,
    "seesaw_w": 0.66,
}


class SolverError(RuntimeError):
    pass


# -- inputs -------------------------------------------------------------------

def parse_target(spec: str) -> tuple[str, np.ndarray]:
    key = spec.lower()
    if key == "ghz":
        return "ghz", ghz_vector(2, 3)
    if key == "w":
        return "w", w_vector()
    return Path(spec).stem, io.load_vector(spec)


def load_measurement(spec: str, dims) -> ProductMeasurement:
    """``computational`` or a JSON file ``{"povms": [[effect, ...], ...]}`` with effects as [re, im] pair lists."""
    if spec == "computational":
        return ProductMeasurement.computational(dims)
    data = io.load_json(spec)
    try:
        povms = []
        for d, party in zip(dims, data["povms"]):
            povms.append(tuple(HermitianOperator((d,), io.pairs_to_complex(e, (d, d))) for e in party))
        if len(povms) != len(dims):
            raise io.InputError(f"measurement lists {len(data['povms'])} parties, state has {len(dims)}")
        return ProductMeasurement(tuple(povms))
    except (KeyError, TypeError, ValueError) as exc:
        raise io.InputError(f"bad POVM file: {exc}") from exc


# -- output -------------------------------------------------------------------

def _human(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.5g}"
    return str(v)


def render(report: dict, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return io.dumps(report) + "\n"
    if fmt == "csv":
        buf = _io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: ("%.17g" % v if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()
    lines = []
    for k, v in report.items():
        if isinstance(v, (list, dict)):
            continue
        lines.append(f"{k}: {_human(v)}")
    if rows:
        keys = list(rows[0])
        table = [keys] + [[_human(r[k]) for k in keys] for r in rows]
        widths = [max(len(row[i]) for row in table) for i in range(len(keys))]
        lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in table]
    return "\n".join(lines) + "\n"


def emit(args, report: dict, rows: list[dict]) -> None:
    text = render(report, rows, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# -- commands -----------------------------------------------------------------

def cmd_witness(args) -> int:
    rho = io.load_state(args.state)
    meas = load_measurement(args.measurement, rho.dims)
    reports = []
    k = rho.num_subsystems
    if k == 3:
        orders = [(0, 1, 2), (1, 2, 0), (2, 0, 1)] if args.relabel else [(0, 1, 2)]
        best = None
        for order in orders:
            m = ProductMeasurement(tuple(meas.povms[i] for i in order))
            r = entropic_witness(permute_subsystems(rho, order), m, args.tol)
            if best is None or r.margin > best.margin:
                best = r
        reports.append(best)
    elif k > 3:
        reports.append(entropic_witness_k(rho, meas, args.tol))
    d = args.d or rho.dims[0]
    kk = args.k or k
    if rho.dims == (d,) * kk and d >= 2 and kk >= 3:
        reports.append(fidelity_witness(rho, d, kk, args.tol))
    rows = [r.to_dict() for r in reports]
    emit(args, {"state": str(args.state), "witnesses": rows}, rows)
    return EXIT_FOUND if any(r.violated for r in reports) else EXIT_OK


def solve_bound(target, symmetry_reduction: bool = True, dump: str | None = None):
    from .inflation_sdp.ring import build_ring_inflation, solve

    prob = build_ring_inflation(target=target, symmetry_reduction=symmetry_reduction)
    if dump:
        prob.dump(dump)
    cert = solve(prob)
    if not cert.ok:
        raise SolverError(f"bound SDP ended with status {cert.solver_status}")
    return cert


def cmd_bound(args) -> int:
    name, t = parse_target(args.target)
    cert = solve_bound(t, not args.no_symmetry_reduction, args.dump_problem)
    report = {"target": name, "max_fidelity": cert.objective_value, "status": cert.solver_status,
              "iterations": cert.stats.get("iterations")}
    emit(args, report, [report])
    return EXIT_OK


def cmd_certify(args) -> int:
    from .inflation_sdp.ring import build_ring_inflation, certify_state

    rho = io.load_state(args.state)
    if rho.dims != (2, 2, 2):
        raise io.InputError(f"certification needs a three-qubit state, got dims {rho.dims}")
    kw = {"symmetry_reduction": not args.no_symmetry_reduction}
    if args.dump_problem:
        build_ring_inflation(fixed_rho=rho, **kw).dump(args.dump_problem)
    res = certify_state(rho, **kw)
    cert = res.certificate
    report = {"state": str(args.state), "verdict": res.verdict, "slack": cert.objective_value,
              "status": cert.solver_status}
    emit(args, report, [report])
    return EXIT_FOUND if res.certified_genuine else EXIT_OK


def cmd_postselect(args) -> int:
    from .postselect import critical_probability

    name, t = parse_target(args.target)
    scan = critical_probability(t, args.tol_p, name=name, jobs=args.jobs)
    d = scan.to_dict()
    emit(args, d, d["samples"])
    if scan.p_critical is None and any(s.max_fidelity is None for s in scan.samples):
        return EXIT_SOLVER
    return EXIT_OK


def cmd_seesaw(args) -> int:
    from .seesaw import SeesawConfig, seesaw_maximize

    name, t = parse_target(args.target)
    cfg = SeesawConfig(hidden_dim=args.hidden_dim, branches=args.branches, restarts=args.restarts,
                       max_iters=args.max_iters, seed=args.seed)
    model, fid = seesaw_maximize(t, cfg, jobs=args.jobs)
    if args.model_out:
        Path(args.model_out).write_text(io.dumps(model.to_dict()) + "\n")
    report = {"target": name, "fidelity": fid, "restarts": cfg.restarts, "hidden_dim": cfg.hidden_dim, "seed": cfg.seed}
    emit(args, report, [report])
    return EXIT_OK


def reproduce_rows(table: str, args) -> list[dict]:
    rows = []
    if table == "bounds":
        for name, t in (("ghz", ghz_vector()), ("w", w_vector())):
            val = solve_bound(t).objective_value
            ref = REFERENCE[f"bound_{name}"]
            rows.append({"quantity": f"sdp_bound_{name}", "reference": ref, "computed": val, "tolerance": 1e-3,
                         "pass": abs(val - ref) <= 1e-3})
    elif table == "postselection":
        from .postselect import critical_probability

        for name, t in (("ghz", ghz_vector()), ("w", w_vector())):
            scan = critical_probability(t, args.tol_p, name=name, jobs=args.jobs)
            if scan.p_critical is None:
                raise SolverError(f"postselection scan for {name} failed")
            ref = REFERENCE[f"pc_{name}"]
            rows.append({"quantity": f"p_critical_{name}", "reference": ref, "computed": scan.p_critical,
                         "tolerance": 0.01, "pass": abs(scan.p_critical - ref) <= 0.01})
    elif table == "seesaw":
        from .seesaw import SeesawConfig, seesaw_maximize

        for name, t in (("ghz", ghz_vector()), ("w", w_vector())):
            cfg = SeesawConfig(restarts=args.restarts, seed=args.seed)
            _, fid = seesaw_maximize(t, cfg, jobs=args.jobs)
            ref = REFERENCE[f"seesaw_{name}"]
            rows.append({"quantity": f"seesaw_lower_bound_{name}", "reference": ref, "computed": fid,
                         "tolerance": "computed >= reference", "pass": fid >= ref})
    return rows


def cmd_reproduce(args) -> int:
    from .inflation_sdp.backends import get_backend

    get_backend()  # fail early with an environment error if the solver is missing
    rows = reproduce_rows(args.table, args)
    emit(args, {"table": args.table, "rows": rows}, rows)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FOUND


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netwit", description="Witnesses and certificates of genuine network entanglement.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--format", choices=["json", "csv", "human"], default="human")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    w = sub.add_parser("witness", help="evaluate the analytic witnesses on a state file")
    w.add_argument("--state", required=True)
    w.add_argument("--measurement", default="computational", help="'computational' or a POVM JSON file")
    w.add_argument("--d", type=int, help="local dimension for the GHZ fidelity witness")
    w.add_argument("--k", type=int, help="number of parties for the GHZ fidelity witness")
    w.add_argument("--tol", type=float, default=1e-7)
    w.add_argument("--relabel", action="store_true", help="try the three cyclic party relabelings, keep the best margin")
    common(w)
    w.set_defaults(func=cmd_witness)

    b = sub.add_parser("bound", help="ring-inflation upper bound on the fidelity with a target")
    b.add_argument("--target", required=True, help="ghz, w or a vector JSON file")
    b.add_argument("--dump-problem", help="write the conic problem as JSON")
    b.add_argument("--no-symmetry-reduction", action="store_true")
    common(b)
    b.set_defaults(func=cmd_bound)

    c = sub.add_parser("certify", help="ring-inflation feasibility test for a three-qubit state")
    c.add_argument("--state", required=True)
    c.add_argument("--dump-problem", help="write the conic problem as JSON")
    c.add_argument("--no-symmetry-reduction", action="store_true")
    common(c)
    c.set_defaults(func=cmd_certify)

    ps = sub.add_parser("postselect", help="critical detection probability by bisection")
    ps.add_argument("--target", required=True)
    ps.add_argument("--tol-p", type=float, default=0.01)
    common(ps)
    ps.set_defaults(func=cmd_postselect)

    s = sub.add_parser("seesaw", help="see-saw lower bound from explicit network-2 models")
    s.add_argument("--target", required=True)
    s.add_argument("--restarts", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--hidden-dim", type=int, default=2)
    s.add_argument("--branches", type=int, default=4)
    s.add_argument("--max-iters", type=int, default=200)
    s.add_argument("--model-out", help="write the best model as JSON")
    common(s)
    s.set_defaults(func=cmd_seesaw)

    r = sub.add_parser("reproduce", help="recompute a published table and compare")
    r.add_argument("table", choices=["bounds", "postselection", "seesaw"])
    r.add_argument("--tol-p", type=float, default=0.01)
    r.add_argument("--restarts", type=int, default=20)
    r.add_argument("--seed", type=int, default=0)
    common(r)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    from .inflation_sdp.backends import SolverUnavailable

    try:
        return args.func(args)
    except (io.InputError, DomainError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, SolverUnavailable, RuntimeError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
