"""Scan Racah / q-Racah parameter grids for sets usable in the orthogonality suite.

A set is kept when, for every D in the list, the denominator polynomial has no
zero on 0..N+1, the virtual energies are distinct from each other and from
E_0..E_N, every Xi_D has its full degree, and the Gram matrix is diagonal with positive diagonal.

    python3 scripts/scan_params.py --family qR --limit 5
"""
import argparse
import itertools
from fractions import Fraction

from miop import families as fam
from miop import miop_rdqm, verify
from miop.families import make_family

D_LIST = [[1], [2], [1, 2]]


def candidates(family):
    small = [Fraction(1, k) for k in (2, 3, 4, 5, 8)] + [Fraction(2, 3), Fraction(3, 4)]
    if family == "R":
        for b, c, d in itertools.product([3, 5, 7, 9, 12], [Fraction(1, 2), 1, 2, 3, 4, 6], small + [2, 3]):
            yield {"b": str(b), "c": str(c), "d": str(d)}, None
    else:
        tiny = [Fraction(1, 4 ** k) for k in (3, 4, 5, 6)]
        for b, c, d in itertools.product(tiny, small + [2, 4], small):
            yield {"b": str(b), "c": str(c), "d": str(d)}, "1/4"


def assess(spec):
    energies = {fam.energy(spec, n) for n in range(spec.N + 1)}
    virtual = [fam.virtual_energy(spec, v) for v in (1, 2)]
    if len(set(virtual)) < 2 or energies & set(virtual):
        return None
    worst = None
    for D in D_LIST:
        try:
            if miop_rdqm.build_Xi_rdqm(spec, D).degree() != miop_rdqm.ell_D(D):
                return None
            G = verify.gram_matrix(spec, D, 3)
        except Exception:
            return None
        if any(G[m][n] != 0 for m in range(4) for n in range(4) if m != n):
            return None
        diag = min(G[n][n] for n in range(4))
        if any(G[n][n] == 0 for n in range(4)):
            return None
        worst = diag if worst is None else min(worst, diag)
    return worst


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--family", choices=("R", "qR"), default="qR")
    ap.add_argument("--N", type=int, default=5)
    ap.add_argument("--limit", type=int, default=10)
    ap.add_argument("--positive", action="store_true", help="keep only positive-definite sets")
    args = ap.parse_args()
    found = 0
    for params, q in candidates(args.family):
        try:
            spec = make_family(args.family, params, q=q, N=args.N)
        except ValueError:
            continue
        worst = assess(spec)
        if worst is None:
            continue
        if args.positive and worst <= 0:
            continue
        tag = "positive" if worst > 0 else "indefinite"
        print(f"{params} q={q} N={args.N}: min Gram diagonal {float(worst):.3e} ({tag})")
        found += 1
        if found >= args.limit:
            break


if __name__ == "__main__":
    main()
