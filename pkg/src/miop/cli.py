"""Command-line front end. All numerics are delegated to the library."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from .exact_core import MalformedRational, NonExactDivision, rational_text
from . import families as fam
from .families import DegenerateIndex, InadmissibleParameters, MissingSplit, TwistType, make_family
from . import miop_idqm, miop_rdqm, verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INADMISSIBLE = 0, 1, 2, 3
VERBS = ("family-info", "poly", "xi", "miop", "verify", "lemma")


class UsageError(Exception):
    pass


# argument plumbing -------------------------------------------------------------

def _family_args(p: argparse.ArgumentParser):
    p.add_argument("--family", required=True, choices=[f.value for f in fam.FamilyId])
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--params", help="inline JSON object of rational strings")
    src.add_argument("--params-file", help="path to a JSON parameter file")
    p.add_argument("--q", help="base q for the q-families, e.g. 1/4")
    p.add_argument("--N", type=int, help="lattice size for R and qR")


def _output_args(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
    p.add_argument("--output", help="write to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="miop", description="Exact multi-indexed orthogonal polynomials.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("family-info", help="energies, coordinate and shift data of a family")
    _family_args(p)
    p.add_argument("--levels", type=int, default=4)
    _output_args(p)

    p = sub.add_parser("poly", help="eigenpolynomial P_n")
    _family_args(p)
    p.add_argument("--n", type=int, required=True)
    _output_args(p)

    p = sub.add_parser("xi", help="virtual-state polynomial xi_v")
    _family_args(p)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--type", choices=("I", "II"), help="twist type (W and AW only)")
    _output_args(p)

    p = sub.add_parser("miop", help="denominator polynomial (no --n) or multi-indexed polynomial")
    _family_args(p)
    p.add_argument("--D", required=True,
                   help='"1,2" for rdQM; "1:I,2:II" or a JSON list of {"d","type"} for W/AW')
    p.add_argument("--n", type=int)
    p.add_argument("--method", default="original", choices=miop_idqm.METHODS)
    _output_args(p)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", choices=tuple(verify.SUITES) + ("all",), default="all")
    p.add_argument("--config", default="default", help="SuiteConfig JSON path, or 'default'")
    p.add_argument("--sets", help="comma-separated parameter-set labels to restrict to")
    p.add_argument("--timings", action="store_true")
    _output_args(p)

    p = sub.add_parser("lemma", help="check one determinant lemma instance")
    p.add_argument("--kind", choices=("rdqm", "idqm"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", default="0")
    p.add_argument("--timings", action="store_true")
    _output_args(p)
    return parser


def _load_params(args) -> dict:
    try:
        if args.params is not None:
            data = json.loads(args.params)
        else:
            with open(args.params_file) as fh:
                data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read parameters: {exc}")
    if not isinstance(data, dict):
        raise UsageError("parameters must be a JSON object")
    return data


def _spec(args):
    params = _load_params(args)
    q = args.q if args.q is not None else params.pop("q", None)
    N = args.N if args.N is not None else params.pop("N", None)
    return make_family(args.family, params, q=q, N=N)


def _parse_D(text: str, idqm: bool):
    text = text.strip()
    if text.startswith("["):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad --D: {exc}")
    else:
        raw = [s.strip() for s in text.split(",") if s.strip()]
    if not idqm:
        try:
            return [int(d) for d in raw]
        except (TypeError, ValueError):
            raise UsageError("rdQM multi-indices are integers, e.g. --D 1,2")
    out = []
    for item in raw:
        if isinstance(item, str):
            if ":" not in item:
                raise UsageError('idQM entries need a type, e.g. "1:I"')
            d, t = item.split(":", 1)
            item = {"d": int(d), "type": t}
        out.append(item)
    return out


# output --------------------------------------------------------------------------

def _emit(text: str, args):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r)
    return buf.getvalue()


def _poly_text(coeffs: dict, var: str = "eta") -> str:
    if not coeffs:
        return "0"
    terms = []
    for k in sorted(coeffs, key=int):
        c = coeffs[k]
        terms.append(c if k == "0" else f"({c})*{var}^{k}")
    return " + ".join(terms)


def _result_out(res: miop_rdqm.MiopResult, args, passed="") -> str:
    data = res.to_json()
    if args.format == "json":
        return json.dumps(data, sort_keys=True) + "\n"
    row = {"family": data["family"], "D": json.dumps(data["D"], separators=(",", ":")),
           "n": data.get("n", ""), "method": data["method"], "degree": res.degree(), "pass": passed}
    if args.format == "csv":
        return _csv([row], ["family", "D", "n", "method", "degree", "pass"])
    head = f"{row['family']} D={row['D']} n={row['n'] if row['n'] != '' else '-'} method={row['method']}"
    return f"{head}\n  degree {row['degree']}\n  {_poly_text(data['eta_poly'])}\n"


def _report_out(reports: dict, args) -> str:
    if args.format == "json":
        data = {name: rep.to_json(args.timings) for name, rep in reports.items()}
        return json.dumps(data, sort_keys=True, indent=1) + "\n"
    rows = [dict(r.to_json(), suite=name, **{"pass": r.status}) for name, rep in reports.items() for r in rep.records]
    if args.format == "csv":
        return _csv(rows, ["suite", "case", "check", "pass"])
    lines = []
    for name, rep in reports.items():
        s = rep.summary()
        lines.append(f"{name:14s} pass {s['pass']:5d}  fail {s['fail']:4d}  skip {s['skip']:4d}")
        for r in rep.failures()[:20]:
            lines.append(f"  FAIL {r.case}: {r.residual}")
    return "\n".join(lines) + "\n"


# verbs ---------------------------------------------------------------------------

def _cmd_family_info(args) -> int:
    spec = _spec(args)
    info = {
        "family": spec.id.value,
        "params": [rational_text(p) for p in spec.params],
        "eta": fam.eta(spec).to_json(),
        "energies": [rational_text(fam.energy(spec, n)) for n in range(args.levels + 1)],
    }
    if spec.sqrt_q is not None:
        info["q"] = rational_text(spec.q)
    if spec.N is not None:
        info["N"] = spec.N
    if spec.is_idqm:
        info["virtual_energies"] = {t.value: [rational_text(fam.virtual_energy(spec, v, t))
                                              for v in range(args.levels + 1)]
                                    for t in (TwistType.I, TwistType.II)}
        info["split"] = spec.has_split
    else:
        info["virtual_energies"] = [rational_text(fam.virtual_energy(spec, v)) for v in range(args.levels + 1)]
    if args.format == "json":
        _emit(json.dumps(info, sort_keys=True) + "\n", args)
    elif args.format == "csv":
        rows = [{"level": n, "energy": e} for n, e in enumerate(info["energies"])]
        _emit(_csv(rows, ["level", "energy"]), args)
    else:
        lines = [f"{info['family']} params {', '.join(info['params'])}",
                 f"  eta {_poly_text(info['eta'], 'sym')}"]
        lines += [f"  E_{n} = {e}" for n, e in enumerate(info["energies"])]
        _emit("\n".join(lines) + "\n", args)
    return EXIT_OK


def _cmd_poly(args) -> int:
    spec = _spec(args)
    if args.n < 0:
        raise UsageError("--n must be non-negative")
    if spec.N is not None and args.n > spec.N:
        raise UsageError(f"--n exceeds N = {spec.N}")
    res = (miop_idqm.build_PDn_idqm(spec, [], args.n) if spec.is_idqm
           else miop_rdqm.build_PDn_rdqm(spec, [], args.n))
    _emit(_result_out(res, args), args)
    return EXIT_OK


def _cmd_xi(args) -> int:
    spec = _spec(args)
    if spec.is_idqm and args.type is None:
        raise UsageError("W and AW need --type I or II")
    if args.v < 0:
        raise UsageError("--v must be non-negative")
    if spec.is_idqm:
        res = miop_idqm.build_Xi_idqm(spec, [(args.v, args.type)])
    else:
        res = miop_rdqm.build_Xi_rdqm(spec, [args.v])
    _emit(_result_out(res, args), args)
    return EXIT_OK


def _cmd_miop(args) -> int:
    spec = _spec(args)
    D = _parse_D(args.D, spec.is_idqm)
    if not spec.is_idqm and args.method not in miop_rdqm.METHODS:
        raise UsageError(f"rdQM methods are {miop_rdqm.METHODS}")
    if spec.is_idqm:
        res = (miop_idqm.build_Xi_idqm(spec, D, args.method) if args.n is None
               else miop_idqm.build_PDn_idqm(spec, D, args.n, args.method))
    else:
        res = (miop_rdqm.build_Xi_rdqm(spec, D, args.method) if args.n is None
               else miop_rdqm.build_PDn_rdqm(spec, D, args.n, args.method))
    _emit(_result_out(res, args), args)
    return EXIT_OK


def _load_config(path: str) -> verify.SuiteConfig:
    if path in ("default", "default.json") and not os.path.exists(path):
        return verify.default_config()
    try:
        return verify.SuiteConfig.load(path)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise UsageError(f"cannot load config {path}: {exc}")


def _cmd_verify(args) -> int:
    cfg = _load_config(args.config)
    if args.sets:
        labels = [s.strip() for s in args.sets.split(",") if s.strip()]
        cfg.param_sets = cfg.select(labels)
        if not cfg.param_sets:
            raise UsageError(f"no parameter sets match {labels}")
        cfg.orthogonality_sets = [l for l in cfg.orthogonality_sets if cfg.select([l])]
    if args.suite == "all":
        reports = verify.run_all(cfg)
    else:
        reports = {args.suite: verify.SUITES[args.suite](cfg)}
    _emit(_report_out(reports, args), args)
    return EXIT_OK if all(r.ok for r in reports.values()) else EXIT_FAIL


def _cmd_lemma(args) -> int:
    if not 1 <= args.n <= 5:
        raise UsageError("--n must lie in 1..5")
    fn = verify.check_casoratian_lemma_rdqm if args.kind == "rdqm" else verify.check_casoratian_lemma_idqm
    rep = fn(args.n, args.seed)
    _emit(_report_out({rep.suite: rep}, args), args)
    return EXIT_OK if rep.ok else EXIT_FAIL


COMMANDS = {
    "family-info": _cmd_family_info,
    "poly": _cmd_poly,
    "xi": _cmd_xi,
    "miop": _cmd_miop,
    "verify": _cmd_verify,
    "lemma": _cmd_lemma,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("--") and argv[0] not in ("--help", "-h"):
        argv = ["miop"] + argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.verb](args)
    except MissingSplit as exc:
        print(f"error: {exc}. Choose AW parameters with a1*a2/q and a3*a4/q perfect rational squares.",
              file=sys.stderr)
        return EXIT_USAGE
    except (InadmissibleParameters, DegenerateIndex) as exc:
        print(f"inadmissible parameters: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (UsageError, MalformedRational) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonExactDivision as exc:
        print(f"identity breach: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
