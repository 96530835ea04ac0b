"""Compare decode-schedule scaffold readings over a seeded random corpus."""
import argparse

from stamr.codec import SCAFFOLDS, check_schedule_connectivity, enumerate_encodings
from stamr.geometry import random_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=4)
    ap.add_argument("--count", type=int, default=500)
    ap.add_argument("--bbox", type=int, default=5)
    args = ap.parse_args()
    corpus = random_corpus(args.seed, args.count, args.bbox)
    encs = [e for s in corpus for e in sorted(enumerate_encodings(s), key=lambda e: e.text_key())]
    print(f"# seed {args.seed} shapes {len(corpus)} encodings {len(encs)}")
    for scaffold in SCAFFOLDS:
        reps = [check_schedule_connectivity(e, scaffold) for e in encs]
        bad = sum(not r.ok for r in reps)
        viol = sum(len(r.violations) for r in reps)
        print(f"{scaffold:14s} removes {sum(r.removes for r in reps)} encodings-with-violations {bad} violations {viol}")


if __name__ == "__main__":
    main()
