"""Benchmark command line: gen, bulkload, run, inspect, ablate.

A typical session:

    aulid gen --kind uniform --n 1000000 --seed 1 --out keys.u64
    aulid bulkload --index aulid --dataset keys.u64 --out uni.idx
    aulid run --index uni.idx --workload w1 --ops 20000 --seed 7 --verify
    aulid inspect --index uni.idx
    aulid ablate --dataset keys.u64 --opt both

Mixed workloads (w3-w6) bulkload over a seeded fraction of the dataset
(--init-fraction) and insert the rest during the run; pass the same seed
and fraction to both commands.  AULID_BLOCK_SIZE overrides the 4 KB default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import (
    Config, WorkloadSpec, build_aulid, build_btree, open_index,
    default_block_size, gen_dataset, payloads_for, read_dataset, write_dataset,
    run_workload, split_init, ablation_extra_blocks,
)
from .datasets import KINDS, DatasetSpec
from .model import build_model, conflict_degree
from .workloads import OPT_VARIANTS


def _print_table(rows: list[tuple[str, object]]) -> None:
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        if isinstance(value, float):
            value = f"{value:.4f}"
        print(f"  {name:<{width}}  {value}")


def _config_from_args(args) -> Config:
    return Config(
        alpha=args.alpha, beta=args.beta,
        scanfward=args.scanfward, fulfill=args.fulfill,
        lippb_mode=args.lippb, leaf_fill=args.leaf_fill,
    )


def cmd_gen(args) -> int:
    spec = DatasetSpec(kind=args.kind, n=args.n, seed=args.seed,
                       params=json.loads(args.params) if args.params else {})
    keys = gen_dataset(spec)
    write_dataset(args.out, keys)
    model = build_model(keys, max(64, 2 * keys.size))
    degree = conflict_degree(model, keys)
    print(f"wrote {keys.size} keys to {args.out}")
    _print_table([
        ("kind", args.kind),
        ("min", int(keys[0])),
        ("max", int(keys[-1])),
        ("conflict_degree", degree),
    ])
    return 0


def cmd_bulkload(args) -> int:
    keys = read_dataset(args.dataset)
    if args.init_fraction < 1.0:
        keys, _ = split_init(keys, args.init_fraction, args.seed)
    if args.index == "aulid":
        idx = build_aulid(args.out, keys, payloads_for(keys), _config_from_args(args))
    else:
        idx = build_btree(args.out, keys, payloads_for(keys), args.leaf_fill)
    info = idx.inspect()
    idx.close()
    print(f"bulkloaded {keys.size} pairs into {args.out}")
    _print_table(sorted((k, v) for k, v in info.items() if not isinstance(v, dict)))
    return 0


def cmd_run(args) -> int:
    spec = WorkloadSpec(kind=args.workload, op_count=args.ops, seed=args.seed,
                        scan_len=args.scan_len, init_fraction=args.init_fraction)
    idx = open_index(args.index)
    if args.dataset:
        keys = read_dataset(args.dataset)
        init_keys, stream = split_init(keys, spec.init_fraction, args.seed)
    else:
        if spec.kind not in ("w1", "w2"):
            print("error: write workloads need --dataset for the insert stream", file=sys.stderr)
            return 2
        hi = (1 << 64) - 1
        init_keys = np.array([k for k, _ in idx.scan(0, hi)], dtype=np.uint64)
        stream = np.empty(0, dtype=np.uint64)
    metrics = run_workload(idx, init_keys, stream, spec,
                           verify=args.verify, profile=args.profile)
    idx.close()
    payload = metrics.to_json()
    payload["config"] = {"index": args.index, "workload": args.workload,
                         "ops": args.ops, "seed": args.seed,
                         "scan_len": args.scan_len,
                         "init_fraction": spec.init_fraction,
                         "dataset": args.dataset}
    if args.json:
        with open(args.json, "w") as f:
            json.dump(payload, f, indent=2)
        print(f"metrics written to {args.json}")
    _print_table([
        ("workload", spec.kind),
        ("ops", metrics.ops),
        ("throughput_ops_s", metrics.throughput),
        ("blocks_read_per_op", metrics.blocks_read_per_op),
        ("blocks_written_per_op", metrics.blocks_written_per_op),
        ("latency_p50_us", metrics.latency_p50_us),
        ("latency_p99_us", metrics.latency_p99_us),
        ("file_size", metrics.file_size),
        ("verified", metrics.verified),
    ])
    return 0


def cmd_inspect(args) -> int:
    idx = open_index(args.index)
    info = idx.inspect()
    idx.close()
    if args.json:
        with open(args.json, "w") as f:
            json.dump(info, f, indent=2)
    print(json.dumps(info, indent=2))
    return 0


def cmd_ablate(args) -> int:
    keys = read_dataset(args.dataset)
    scanfward, fulfill = OPT_VARIANTS[args.opt]
    config = Config(scanfward=scanfward, fulfill=fulfill)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "ablate.idx")
        idx = build_aulid(path, keys, payloads_for(keys), config)
        result = ablation_extra_blocks(idx, keys, args.queries, args.seed)
        idx.close()
    result["opt"] = args.opt
    _print_table(sorted(result.items()))
    if args.json:
        with open(args.json, "w") as f:
            json.dump(result, f, indent=2)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aulid", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a dataset file")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--params", help="JSON dict of generator parameters")
    g.set_defaults(fn=cmd_gen)

    b = sub.add_parser("bulkload", help="build an index file from a dataset")
    b.add_argument("--index", choices=("aulid", "btree"), required=True)
    b.add_argument("--dataset", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--alpha", type=float, default=0.05)
    b.add_argument("--beta", type=float, default=1.2)
    b.add_argument("--fulfill", action="store_true")
    b.add_argument("--no-scanfward", dest="scanfward", action="store_false")
    b.add_argument("--lippb", action="store_true")
    b.add_argument("--leaf-fill", type=float, default=1.0)
    b.add_argument("--init-fraction", type=float, default=1.0,
                   help="bulkload only this seeded fraction (for w3-w6 runs)")
    b.add_argument("--seed", type=int, default=0, help="seed for --init-fraction")
    b.set_defaults(fn=cmd_bulkload)

    r = sub.add_parser("run", help="run a workload against an index")
    r.add_argument("--index", required=True)
    r.add_argument("--workload", choices=("w1", "w2", "w3", "w4", "w5", "w6"), required=True)
    r.add_argument("--ops", type=int, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--scan-len", type=int, default=100)
    r.add_argument("--dataset", help="dataset file (required for w3-w6)")
    r.add_argument("--init-fraction", type=float, default=None)
    r.add_argument("--verify", action="store_true")
    r.add_argument("--profile", action="store_true")
    r.add_argument("--json", help="write metrics JSON here")
    r.set_defaults(fn=cmd_run)

    i = sub.add_parser("inspect", help="structure report for an index file")
    i.add_argument("--index", required=True)
    i.add_argument("--json")
    i.set_defaults(fn=cmd_inspect)

    a = sub.add_parser("ablate", help="extra fetched blocks under read optimizations")
    a.add_argument("--dataset", required=True)
    a.add_argument("--opt", choices=tuple(OPT_VARIANTS), required=True)
    a.add_argument("--queries", type=int, default=20000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--json")
    a.set_defaults(fn=cmd_ablate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
