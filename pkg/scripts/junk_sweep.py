"""Junk-size distribution of the 3d corner dissolve scenario over many seeds."""
import argparse
from collections import Counter

from stamr.analysis import audit_run
from stamr.gadgets import build_corner_gadget, input_names, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=1000)
    ap.add_argument("--bound", type=int, default=4)
    args = ap.parse_args()
    b = build_corner_gadget("3d")
    inputs = input_names(b)
    sizes, verdicts, oversize = Counter(), Counter(), 0
    for seed in range(args.seeds):
        res = run_scenario(b, seed)
        verdicts[res.verdict] += 1
        run = res.run
        holders = [run.state.registry[s] for s in run.terminal_ids() if inputs & set(run.state.registry[s].tile_names())]
        rep = audit_run(run, holders, args.bound)
        oversize += len(rep.oversize)
        for e in rep.junk:
            sizes[e.size] += 1
    print(f"# corner-3d seeds {args.seeds} bound {args.bound}")
    print("verdicts " + " ".join(f"{k}:{v}" for k, v in sorted(verdicts.items())))
    print("junk-species-by-size " + " ".join(f"{k}:{v}" for k, v in sorted(sizes.items())))
    print(f"max-junk {max(sizes) if sizes else 0} oversize {oversize}")


if __name__ == "__main__":
    main()
