"""Seeded train/val/test partitioning."""

import random
from dataclasses import dataclass

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class SplitManifest:
    seed: int
    assignments: dict  # filename -> split name

    @property
    def counts(self):
        out = dict.fromkeys(SPLITS, 0)
        for s in self.assignments.values():
            out[s] += 1
        return out

    def files(self, split):
        return sorted(f for f, s in self.assignments.items() if s == split)

    def lines(self):
        return [f"{s}\t{f}" for f, s in sorted(self.assignments.items())]


def split_dataset(files, ratio=(10, 1, 1), seed=0):
    """Partition ``files`` with val/test sized ``floor(N * r / sum(r))``.

    The list is sorted, then shuffled with Python's seeded Mersenne Twister
    (``random.Random(seed)``), so the result does not depend on input order.
    Train takes the first block of the shuffle, then val, then test.
    """
    if len(ratio) != 3 or any(int(r) != r or r <= 0 for r in ratio):
        raise ValueError(f"ratio must be three positive integers, got {ratio}")
    names = sorted(files)
    if len(set(names)) != len(names):
        raise ValueError("duplicate filenames in split input")
    n, total = len(names), sum(ratio)
    n_val = n * ratio[1] // total
    n_test = n * ratio[2] // total
    n_train = n - n_val - n_test
    random.Random(seed).shuffle(names)
    assignments = {}
    for i, name in enumerate(names):
        assignments[name] = "train" if i < n_train else "val" if i < n_train + n_val else "test"
    return SplitManifest(seed, assignments)
