"""Pass rates of every built-in gadget bundle, plus random message-follower paths."""
import argparse
import time
from collections import Counter

from stamr.gadgets import BUNDLES, build_message_follower, random_path, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--paths", type=int, default=50)
    ap.add_argument("--max-steps", type=int, default=20_000)
    args = ap.parse_args()
    for name, make in BUNDLES.items():
        b = make()
        t0 = time.perf_counter()
        v = Counter(run_scenario(b, s, args.max_steps).verdict for s in range(args.seeds))
        print(f"{name:18s} " + " ".join(f"{k}:{n}" for k, n in sorted(v.items()))
              + f"  ({time.perf_counter() - t0:.1f}s)")
    ok = 0
    for seed in range(args.paths):
        path = random_path(seed, 3 + seed % 10)
        ok += run_scenario(build_message_follower(path), seed, args.max_steps).passed
    print(f"message-paths      pass:{ok}/{args.paths}")


if __name__ == "__main__":
    main()
