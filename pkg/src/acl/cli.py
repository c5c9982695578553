"""Command-line front end.

Exit codes: 0 success, 1 a domain check failed, 2 usage or parse error.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import io as aio
from .bell import SeesawConfig, chsh_problem, epsilon_sweep, seesaw_commuting, seesaw_eps_commuting
from .config import TOL
from .dilation import (
    FolnerParams,
    contraction_dilation,
    dilation_report,
    folner_dilation,
    naimark_projective_dilation,
)
from .errors import AclError
from .linalg import Isometry, identity
from .measurement import (
    correlation_matrix,
    max_commutator,
    random_measurement_system,
    random_povm,
    random_projective_povm,
    validate_povm,
    voiculescu_pair,
)

log = logging.getLogger("acl")


class UsageError(Exception):
    pass


def _emit(obj):
    print(json.dumps(obj, indent=1, allow_nan=False))


def _seed(args):
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> 1)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _require(args, name):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name.replace('_', '-')} is required for this command")
    return value


def _epsilons(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from None


def _write_json(obj, path):
    if path:
        aio.dump(obj, path)
    else:
        _emit(obj)


# --- subcommands ----------------------------------------------------------------------


def run_validate(args):
    obj = aio.load(_require(args, "input"))
    if "alice" in obj:
        system = aio.system_from_json(obj)
        families = [("alice", k, f) for k, f in enumerate(system.alice)]
        families += [("bob", k, f) for k, f in enumerate(system.bob)]
    else:
        families = [("povm", 0, aio.povm_from_json(obj))]
    reports = []
    for side, k, f in families:
        rep = validate_povm(f, TOL.validate).to_dict()
        rep.update(side=side, index=k)
        reports.append(rep)
    passed = all(r["passed"] for r in reports)
    out = {"passed": passed, "families": reports}
    if "alice" in obj:
        out["max_commutator"] = max_commutator(system)
    _emit(out)
    return 0 if passed else 1


def run_gen(args):
    kind = args.what
    seed = _seed(args) if kind in ("povm", "projective", "system", "contraction") else args.seed
    if kind == "povm":
        obj = aio.povm_to_json(random_povm(args.dim, args.outcomes, seed))
    elif kind == "projective":
        obj = aio.povm_to_json(random_projective_povm(args.dim, args.outcomes, seed))
        obj["projective"] = True
    elif kind == "system":
        system = random_measurement_system(args.dim, args.outcomes, args.d, seed, args.projective)
        obj = aio.system_to_json(system)
    elif kind == "voiculescu":
        U, V = voiculescu_pair(args.n)
        obj = {"U": aio.matrix_to_json(U), "V": aio.matrix_to_json(V)}
    elif kind == "chsh":
        obj = aio.bell_problem_to_json(chsh_problem())
    elif kind == "contraction":
        rng = np.random.default_rng(seed)
        pair = []
        for _ in range(2):
            z = rng.standard_normal((args.dim, args.dim)) + 1j * rng.standard_normal((args.dim, args.dim))
            z = z / np.linalg.norm(z, 2) * args.scale
            pair.append(z)
        obj = {"x": aio.matrix_to_json(pair[0]), "y": aio.matrix_to_json(pair[1])}
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(kind)
    _write_json(obj, args.output)
    return 0


def run_corr(args):
    system = aio.system_from_json(aio.load(_require(args, "input")))
    if args.isometry:
        V = Isometry(aio.matrix_from_json(aio.load(args.isometry)))
    else:
        V = Isometry(identity(system.dim)[:, :1])
    system.require_valid(TOL.validate)
    X = correlation_matrix(system, V)
    if args.format == "csv":
        lines = ["k,i,l,j,row,col,re,im"]
        for k, i, l, j in np.ndindex(X.d, X.m, X.d, X.m):
            B = X.entry(k, i, l, j)
            for r, c in np.ndindex(X.n, X.n):
                z = B[r, c]
                lines.append(f"{k},{i},{l},{j},{r},{c},{float(z.real)!r},{float(z.imag)!r}")
        text = "\n".join(lines) + "\n"
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        _write_json(aio.correlation_to_json(X), args.output)
    return 0


def _unitary_pair(obj):
    def fam(v):
        return [aio.matrix_from_json(m) for m in v] if isinstance(v, list) else [aio.matrix_from_json(v)]

    try:
        return fam(obj["U"]), fam(obj["V"])
    except KeyError as exc:
        raise aio.FormatError(f"unitary pair file lacks {exc}") from None


def run_dilate(args):
    obj = aio.load(_require(args, "input"))
    kind = args.kind
    if kind == "naimark":
        if "alice" not in obj:
            raise aio.FormatError("naimark input must be a measurement system")
        system = aio.system_from_json(obj)
        if system.d != 1:
            raise AclError(f"naimark dilation takes one POVM per side, got d = {system.d}")
        result = naimark_projective_dilation(system.alice[0], system.bob[0], TOL.validate)
    elif kind == "folner":
        Us, Vs = _unitary_pair(obj)
        budget = args.epsilon if args.epsilon is not None else float("inf")
        result = folner_dilation(Us, Vs, FolnerParams(budget, m=args.m, torus_size=args.torus_size))
    else:
        try:
            x, y = aio.matrix_from_json(obj["x"]), aio.matrix_from_json(obj["y"])
        except KeyError as exc:
            raise aio.FormatError(f"contraction input lacks {exc}") from None
        result = contraction_dilation(x, y)
    if args.output:
        aio.dump(aio.dilation_to_json(result), args.output)
    summary = {
        "kind": result.kind,
        "ambient_dim": result.ambient_dim,
        "defect_alice": result.defect_alice,
        "defect_bob": result.defect_bob,
        "max_defect": result.max_defect,
        "dilated_commutator": result.dilated_commutator,
        **result.extras,
    }
    _emit(summary)
    if kind == "folner":
        ok = result.max_defect <= result.extras["bound"] + 1e-12
    elif kind == "naimark":
        ok = max(result.max_defect, result.extras["product_defect"], result.extras["idempotency_defect"]) <= 1e-9
    else:
        ok = result.extras["unitary_defect"] <= 1e-9 and result.extras["product_defect"] <= 1e-12
    return 0 if ok else 1


def _config(args, **extra):
    return SeesawConfig(
        dim_k=args.dim_k,
        restarts=args.restarts,
        max_sweeps=args.max_sweeps,
        seed=_seed(args),
        fix_first=args.fix_first,
        **extra,
    )


def run_bell(args):
    prob = aio.bell_problem_from_json(aio.load(_require(args, "input")))
    if args.epsilon is None:
        res = seesaw_commuting(prob, _config(args))
        regime = "commuting"
    else:
        res = seesaw_eps_commuting(prob, _config(args, epsilon_budget=args.epsilon))
        regime = "eps_commuting"
    out = {
        "regime": regime,
        "value": res.value,
        "measured_eps": res.measured_eps,
        "converged": res.converged,
        "best_restart": res.best_restart,
        "restart_values": res.restart_values,
        "triangle_cap": prob.triangle_cap(),
        "seed": args.seed,
    }
    if args.output:
        witness = {
            "U": [aio.matrix_to_json(U) for U in res.Us],
            "V": [aio.matrix_to_json(V) for V in res.Vs],
        }
        aio.dump({**out, "witness": witness}, args.output)
    _emit(out)
    return 0


def run_sweep(args):
    prob = aio.bell_problem_from_json(aio.load(_require(args, "input")))
    eps = _require(args, "epsilons")
    if any(b < a for a, b in zip(eps, eps[1:])):
        raise UsageError("--epsilons must be ascending")
    sweep = epsilon_sweep(prob, eps, _config(args))
    text = aio.sweep_to_csv(sweep)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if all(v is None for v in sweep.values):
        print("every epsilon was infeasible", file=sys.stderr)
        return 1
    return 0


def run_report(args):
    result = aio.dilation_from_json(aio.load(_require(args, "input")))
    original = aio.load(_require(args, "original"))
    if "alice" in original:
        system = aio.system_from_json(original)
        alice, bob = system.alice[0], system.bob[0]
    elif "x" in original:
        alice, bob = [aio.matrix_from_json(original["x"])], [aio.matrix_from_json(original["y"])]
    else:
        alice, bob = _unitary_pair(original)
    _emit(dilation_report(result, alice, bob))
    return 0


# --- parser ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON file")
    common.add_argument("--output", help="output file (stdout when omitted)")
    common.add_argument("--seed", type=int, help="RNG seed; drawn and printed when omitted")
    common.add_argument("--tol", type=float, help="validation tolerance (default ACL_TOL or 1e-10)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    seesaw = argparse.ArgumentParser(add_help=False)
    seesaw.add_argument("--dim-k", type=int, default=2)
    seesaw.add_argument("--restarts", type=int, default=8)
    seesaw.add_argument("--max-sweeps", type=int, default=200)
    seesaw.add_argument("--fix-first", action="store_true", help="pin U_1 = V_1 = 1")

    p = argparse.ArgumentParser(prog="acl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check POVM invariants")
    s.set_defaults(func=run_validate)

    s = sub.add_parser("gen", parents=[common], help="generate fixtures")
    s.add_argument("what", choices=("povm", "projective", "system", "voiculescu", "chsh", "contraction"))
    s.add_argument("--dim", type=int, default=4)
    s.add_argument("--outcomes", type=int, default=2)
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--n", type=int, default=10, help="size of the clock/shift pair")
    s.add_argument("--scale", type=float, default=1.0, help="operator norm of generated contractions")
    s.add_argument("--projective", action="store_true")
    s.set_defaults(func=run_gen)

    s = sub.add_parser("corr", parents=[common], help="correlation matrix of a measurement system")
    s.add_argument("--isometry", help="JSON matrix file; first basis vector when omitted")
    s.set_defaults(func=run_corr)

    s = sub.add_parser("dilate", parents=[common], help="run a dilation construction")
    s.add_argument("kind", choices=("naimark", "folner", "contraction"))
    s.add_argument("--epsilon", type=float, help="commutator budget for folner (default: no budget)")
    s.add_argument("--m", type=int, help="box size override for folner")
    s.add_argument("--torus-size", type=int)
    s.set_defaults(func=run_dilate)

    s = sub.add_parser("bell", parents=[common, seesaw], help="see-saw norm estimate")
    s.add_argument("--epsilon", type=float, help="commutator budget; commuting ansatz when omitted")
    s.set_defaults(func=run_bell)

    s = sub.add_parser("sweep", parents=[common, seesaw], help="epsilon sweep to CSV")
    s.add_argument("--epsilons", type=_epsilons, help="comma separated ascending list")
    s.set_defaults(func=run_sweep)

    s = sub.add_parser("report", parents=[common], help="recheck a stored dilation result")
    s.add_argument("--original", help="file holding the original operators")
    s.set_defaults(func=run_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    saved = TOL.validate
    if args.tol is not None:
        TOL.validate = args.tol
    try:
        return args.func(args)
    except (aio.FormatError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AclError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    finally:
        TOL.validate = saved


if __name__ == "__main__":
    sys.exit(main())
