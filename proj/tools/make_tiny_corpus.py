#!/usr/bin/env python3
"""Generates the bundled tiny corpus under data/tiny/.

Words belong to latent classes; a sparse class-level Markov chain drives sentence
structure and words are drawn Zipf-style within their class. Words of a class are
interchangeable in context, which is the structure the augmented loss exploits.
"""
import argparse
import pathlib
import random

ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sh", "tr", "pl"]
VOWELS = ["a", "e", "i", "o", "u", "ai", "ou"]
CODAS = ["", "", "n", "r", "s", "t", "l", "m"]


def make_words(rng, count):
    seen = set()
    words = []
    while len(words) < count:
        n = rng.choice([1, 2, 2, 3])
        w = "".join(rng.choice(ONSETS) + rng.choice(VOWELS) for _ in range(n)) + rng.choice(CODAS)
        if w not in seen and w not in ("a", "b"):
            seen.add(w)
            words.append(w)
    return words


def zipf_weights(n, s):
    return [1.0 / (i + 1) ** s for i in range(n)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[1] / "data" / "tiny"))
    ap.add_argument("--classes", type=int, default=40)
    ap.add_argument("--words-per-class", type=int, default=25)
    ap.add_argument("--successors", type=int, default=3)
    ap.add_argument("--train", type=int, default=30000)
    ap.add_argument("--valid", type=int, default=5000)
    ap.add_argument("--test", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=1234)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    words = make_words(rng, args.classes * args.words_per_class)
    classes = [words[c * args.words_per_class:(c + 1) * args.words_per_class] for c in range(args.classes)]
    within = zipf_weights(args.words_per_class, 1.0)
    succ = []
    for _ in range(args.classes):
        targets = rng.sample(range(args.classes), args.successors)
        weights = [rng.uniform(0.5, 1.5) for _ in targets]
        succ.append((targets, weights))
    start_weights = zipf_weights(args.classes, 0.7)

    def sentence():
        length = rng.randint(6, 18)
        c = rng.choices(range(args.classes), start_weights)[0]
        out = []
        for _ in range(length):
            out.append(rng.choices(classes[c], within)[0])
            targets, weights = succ[c]
            c = rng.choices(targets, weights)[0]
        return out

    def split(budget):
        lines, n = [], 0
        while n < budget:
            s = sentence()
            lines.append(" ".join(s))
            n += len(s) + 1
        return "\n".join(lines) + "\n"

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, budget in (("train", args.train), ("valid", args.valid), ("test", args.test)):
        (out / f"{name}.txt").write_text(split(budget))


if __name__ == "__main__":
    main()
