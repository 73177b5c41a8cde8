"""Size table for a Tabakov-Vardi corpus, one row per configuration.

    python scripts/bench_table.py --n 8 --count 50 --configs schewe,maxrank-pipeline
"""

import argparse
import json

from ranker.harness import TvParams, configuration_names, run_benchmark, tabakov_vardi


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--td", type=float, default=1.5)
    ap.add_argument("--ad", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--configs", default="schewe,rankrestr-pipeline,maxrank-pipeline")
    ap.add_argument("--timeout", type=float, default=300.0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--records", help="also write JSON-lines records here")
    args = ap.parse_args()

    configs = [c for c in args.configs.split(",") if c]
    bad = set(configs) - set(configuration_names())
    if bad:
        ap.error(f"unknown configurations: {sorted(bad)}")
    corpus = [
        (f"tv-{s:05d}", tabakov_vardi(TvParams(args.n, 2, args.td, args.ad, s)))
        for s in range(args.seed, args.seed + args.count)
    ]
    _, summary = run_benchmark(corpus, configs, args.timeout, args.records, args.workers)

    print(f"{'config':<22}{'max':>9}{'mean':>11}{'median':>9}{'std':>11}{'TO':>5}")
    for name in configs:
        s = summary["configs"][name]
        if not s["count"]:
            print(f"{name:<22}{'-':>9}{'-':>11}{'-':>9}{'-':>11}{s['timeouts']:>5}")
            continue
        print(f"{name:<22}{s['max']:>9}{s['mean']:>11.1f}{s['median']:>9}{s['std']:>11.1f}{s['timeouts']:>5}")
    print()
    for pair, c in summary["pairs"].items():
        print(f"{pair}: {c['wins']} wins, {c['losses']} losses, {c['ties']} ties")
    if args.records is None:
        print(json.dumps({"inputs": summary["inputs"]}))


if __name__ == "__main__":
    main()
