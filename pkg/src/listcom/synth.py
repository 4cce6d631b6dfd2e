"""Synthetic corpora with planted group structure, for end-to-end checks.

Users are split into groups; an ``overlap`` fraction of users also joins a
second group.  Each group's lists draw most members from the group pool and
a ``noise`` fraction from the rest of the population, and take their names
and descriptions from a per-group vocabulary.  The ground truth maps each
group to all users that belong to it (including secondary memberships).
Generation is a pure function of the spec and seed.

List members are not sampled uniformly from the group pool.  Each group
arranges its pool on a circle and every list focuses on a window of that
circle (a curator's sub-theme), topped up with uniform fills: lists whose
windows land close together then share most of their members, which keeps
within-group overlaps significant under a hypergeometric null even at
desk-scale universe sizes, while the rotating windows still cover every
pool user.  Uniform per-list sampling would not survive a realistic
significance cutoff at a few hundred users: the chance overlap between two
dozen-member lists is then only a few members below typical observed
overlaps.

Noise members are fresh bystander accounts rather than members of other
groups, mirroring how curated lists mix a tracked core with one-off
co-listed accounts.  Bystanders enlarge the user universe (which sharpens
overlap significance), never appear in the ground truth, and are too rare
per community to clear a membership threshold.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import GroundTruth, ListRecord, MembershipCorpus, save_corpus, save_ground_truth
from .errors import ValidationError


@dataclass(frozen=True)
class PlantedSpec:
    groups: int
    users_per_group: int
    lists_per_group: int
    size_min: int
    size_max: int
    noise: float = 0.0
    overlap: float = 0.0
    vocab: tuple[tuple[str, ...], ...] | None = None

    def __post_init__(self):
        if self.groups < 1:
            raise ValidationError("groups must be >= 1")
        if self.users_per_group < 1 or self.lists_per_group < 1:
            raise ValidationError("users_per_group and lists_per_group must be >= 1")
        if not (1 <= self.size_min <= self.size_max):
            raise ValidationError("need 1 <= size_min <= size_max")
        if not (0.0 <= self.noise < 1.0):
            raise ValidationError("noise must be in [0, 1)")
        if not (0.0 <= self.overlap < 1.0):
            raise ValidationError("overlap must be in [0, 1)")
        if self.size_max > self.users_per_group:
            raise ValidationError(
                "infeasible: size_max exceeds the group user pool")
        if self.vocab is not None and len(self.vocab) != self.groups:
            raise ValidationError("vocab must have one word tuple per group")


def _default_vocab(groups: int) -> tuple[tuple[str, ...], ...]:
    suffixes = ("", "fans", "stars", "news", "club")
    return tuple(
        tuple(f"topic{k:02d}{suffix}" for suffix in suffixes)
        for k in range(groups)
    )


def synth(spec: PlantedSpec, seed: int) -> tuple[MembershipCorpus, GroundTruth]:
    """Generate a corpus and its planted ground truth."""
    rng = np.random.Generator(np.random.PCG64(seed))
    g, m = spec.groups, spec.users_per_group
    users = [f"u{k:02d}_{i:03d}" for k in range(g) for i in range(m)]
    group_sets: list[set[str]] = [
        set(users[k * m:(k + 1) * m]) for k in range(g)
    ]

    n_secondary = int(round(spec.overlap * g * m))
    if n_secondary > 0 and g >= 2:
        chosen = rng.choice(g * m, size=n_secondary, replace=False)
        for flat in sorted(chosen.tolist()):
            primary = flat // m
            shift = 1 + int(rng.integers(0, g - 1))
            group_sets[(primary + shift) % g].add(users[flat])

    vocab = spec.vocab if spec.vocab is not None else _default_vocab(g)

    records: list[ListRecord] = []
    memberships: dict[str, set[str]] = {}
    bystander_count = 0
    for k in range(g):
        circle = rng.permutation(np.array(sorted(group_sets[k])))
        pool_size = len(circle)
        w_lo = min(8, pool_size)
        w_hi = min(20, pool_size)
        words = np.array(vocab[k])
        for j in range(spec.lists_per_group):
            lid = f"g{k:02d}L{j:03d}"
            size = int(rng.integers(spec.size_min, spec.size_max + 1))
            n_out = int(np.count_nonzero(rng.random(size) < spec.noise))
            n_in = size - n_out
            window = int(rng.integers(w_lo, w_hi + 1))
            start = int(rng.integers(0, pool_size))
            arc = np.take(circle, range(start, start + window), mode="wrap")
            focus = min(n_in, window)
            members = set(rng.choice(arc, size=focus, replace=False).tolist())
            if n_in > focus:
                rest = np.take(circle, range(start + window, start + pool_size),
                               mode="wrap")
                members |= set(rng.choice(rest, size=n_in - focus,
                                          replace=False).tolist())
            for _ in range(n_out):
                members.add(f"x{bystander_count:05d}")
                bystander_count += 1
            name = " ".join(rng.choice(words, size=2, replace=True).tolist())
            description = " ".join(rng.choice(words, size=4, replace=True).tolist())
            records.append(ListRecord(lid, name, description))
            memberships[lid] = members

    truth = GroundTruth({
        f"group{k:02d}": frozenset(group_sets[k]) for k in range(g)
    })
    return MembershipCorpus.build(records, memberships), truth


def synth_files(spec: PlantedSpec, seed: int, out_dir) -> dict[str, Path]:
    """Generate and write memberships.tsv, lists.jsonl, groundtruth.tsv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus, truth = synth(spec, seed)
    paths = {
        "memberships": out / "memberships.tsv",
        "lists": out / "lists.jsonl",
        "groundtruth": out / "groundtruth.tsv",
    }
    save_corpus(corpus, paths["memberships"], paths["lists"])
    save_ground_truth(truth, paths["groundtruth"])
    return paths
