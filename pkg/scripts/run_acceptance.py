"""Run every suite on the shipped config and write one JSON report per suite.

    python3 scripts/run_acceptance.py [--out reports/] [--config path.json]
"""
import argparse
import json
import pathlib
import time

from miop import verify


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="reports")
    ap.add_argument("--config")
    args = ap.parse_args()
    cfg = verify.SuiteConfig.load(args.config)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    all_ok = True
    for name, fn in verify.SUITES.items():
        start = time.perf_counter()
        rep = fn(cfg)
        secs = time.perf_counter() - start
        (out / f"{name}.json").write_text(rep.dumps(timings=True))
        s = rep.summary()
        print(f"{name:14s} pass {s['pass']:5d} fail {s['fail']:4d} skip {s['skip']:4d}  {secs:6.1f}s")
        for r in rep.failures()[:5]:
            print(f"    {r.case}: {json.dumps(r.residual)}")
        all_ok &= rep.ok
    raise SystemExit(0 if all_ok else 1)


if __name__ == "__main__":
    main()
