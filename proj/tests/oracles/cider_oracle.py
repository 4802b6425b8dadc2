#!/usr/bin/env python3
"""Independent CIDEr-D evaluation of the toy corpus used in test_metrics.cpp.

Written directly from the coco-caption definition (tf * idf vectors per n-gram
order, clipped cosine, Gaussian length penalty, x10), sharing no code with the
C++ implementation. Run it to regenerate the frozen constants.
"""
import math
import re
from collections import Counter

CORPUS = {
    "v1": ("a man opens the red door",
           ["a man opens the door", "a man walks to the door and opens it"]),
    "v2": ("the dog runs in the yard", ["a dog runs across the yard"]),
    "v3": ("a woman cooks in a kitchen",
           ["two women talk in a kitchen", "women chat while cooking"]),
}
SIGMA = 6.0
MAX_N = 4


def tokens(text):
    return re.sub(r"[^\w\s]", " ", text.lower()).split()


def ngrams(words, n):
    return Counter(tuple(words[i:i + n]) for i in range(len(words) - n + 1))


def main():
    refs_tok = {vid: [tokens(r) for r in refs] for vid, (_, refs) in CORPUS.items()}
    n_docs = len(CORPUS)
    df = Counter()
    for refs in refs_tok.values():
        seen = set()
        for r in refs:
            for n in range(1, MAX_N + 1):
                seen.update(ngrams(r, n).keys())
        df.update(seen)

    def vec(words, n):
        v = {g: c * (math.log(n_docs) - math.log(max(1.0, df[g]))) for g, c in ngrams(words, n).items()}
        return v, math.sqrt(sum(x * x for x in v.values()))

    scores = {}
    for vid, (cand, _) in CORPUS.items():
        c = tokens(cand)
        total = 0.0
        for r in refs_tok[vid]:
            per_n = []
            for n in range(1, MAX_N + 1):
                vc, nc = vec(c, n)
                vr, nr = vec(r, n)
                val = sum(min(vc[g], vr[g]) * vr[g] for g in vc if g in vr)
                if nc != 0 and nr != 0:
                    val /= nc * nr
                val *= math.exp(-((len(c) - len(r)) ** 2) / (2 * SIGMA ** 2))
                per_n.append(val)
            total += sum(per_n) / MAX_N
        scores[vid] = total / len(refs_tok[vid]) * 10.0
    for vid, s in scores.items():
        print(f"{vid} {s:.12f}")
    print(f"mean {sum(scores.values()) / len(scores):.12f}")


if __name__ == "__main__":
    main()
