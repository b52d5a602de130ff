"""Shared generators and slow reference implementations used across tests."""

import math

import numpy as np

from infowalk import (
    ALICE,
    BOB,
    Decomposition,
    Internal,
    JointDistribution,
    Leaf,
    ProductDistribution,
    ProtocolTree,
    TranscriptLaw,
)


def random_prior(rng, nx, ny, floor=0.02):
    """A full-support prior, kept away from the simplex boundary."""
    v = rng.dirichlet(np.ones(nx * ny))
    v = (1.0 - floor * nx * ny) * v + floor
    return JointDistribution.from_mass(v.reshape(nx, ny))


def random_tree(rng, nx, ny, depth, outputs=(0, 1), leaf_prob=0.3, prob_lo=0.05):
    """A random valid tree with interior signal probabilities in
    [prob_lo, 1 − prob_lo] so every branch is reachable."""

    def build(d):
        if d >= depth or (d > 0 and rng.random() < leaf_prob):
            return Leaf(outputs[rng.integers(len(outputs))])
        owner = ALICE if rng.random() < 0.5 else BOB
        arity = nx if owner == ALICE else ny
        probs = tuple(rng.uniform(prob_lo, 1.0 - prob_lo, size=arity))
        return Internal(owner, probs, build(d + 1), build(d + 1))

    root = build(0)
    if isinstance(root, Leaf):  # ensure at least one signal
        owner = ALICE
        probs = tuple(rng.uniform(prob_lo, 1.0 - prob_lo, size=nx))
        root = Internal(owner, probs, Leaf(outputs[0]), root)
    return ProtocolTree(nx, ny, tuple(outputs), root)


def random_law(rng, nx, ny, transcripts, outputs=(0, 1)):
    """A random conditional law (not necessarily realizable by a tree)."""
    cond = np.stack(
        [
            rng.dirichlet(np.ones(transcripts), size=ny).T
            for _ in range(nx)
        ],
        axis=1,
    )  # (transcripts, nx, ny)
    prior = random_prior(rng, nx, ny)
    outs = tuple(outputs[rng.integers(len(outputs))] for _ in range(transcripts))
    return TranscriptLaw(prior, tuple(f"t{k}" for k in range(transcripts)), cond, outs)


def random_symmetric_decomposition(rng, lo=0.05):
    """A random symmetric positive reference with a random interior pretend pair."""
    raw = rng.uniform(lo, 1.0, size=3)  # x, y, z
    x, y, z = raw / (raw[0] + 2 * raw[1] + raw[2])
    nu = JointDistribution.from_mass([[x, y], [y, z]])
    p = rng.uniform(lo, 1.0 - lo)
    q = rng.uniform(lo, 1.0 - lo)
    return Decomposition(nu, ProductDistribution(p, q))


def reveal_chain(owner, arity, continuation):
    """A deterministic cascade announcing the owner's input value.

    Node k asks "is your value k?"; the resulting tree has one branch per
    value.  ``continuation(value)`` supplies the subtree below each answer.
    """

    def make(k):
        if k == arity - 1:
            return continuation(k)
        probs = tuple(1.0 if v == k else 0.0 for v in range(arity))
        return Internal(owner, probs, make(k + 1), continuation(k))

    return make(0)


def exchange_tree(nx, ny, f, outputs=None):
    """Both players reveal their inputs; leaves output f(x, y)."""
    table = np.asarray(f, dtype=object)
    if outputs is None:
        outputs = tuple(sorted(set(table.flat)))

    def after_alice(x):
        return reveal_chain(BOB, ny, lambda y: Leaf(table[x, y]))

    root = reveal_chain(ALICE, nx, after_alice)
    return ProtocolTree(nx, ny, outputs, root)


def ic_reference(law):
    """Slow, independent I(Π;X|Y) + I(Π;Y|X) straight from the definition."""
    j = law.cond * law.prior.mass[None, :, :]
    T, nx, ny = j.shape
    pt_y = j.sum(axis=1)
    pt_x = j.sum(axis=2)
    px = law.prior.marginal_x()
    py = law.prior.marginal_y()
    w = law.prior.mass
    total = 0.0
    for t in range(T):
        for x in range(nx):
            for y in range(ny):
                if j[t, x, y] <= 0.0:
                    continue
                total += j[t, x, y] * (
                    math.log2(j[t, x, y] * py[y] / (pt_y[t, y] * w[x, y]))
                    + math.log2(j[t, x, y] * px[x] / (pt_x[t, x] * w[x, y]))
                )
    return total


def external_reference(law):
    j = law.cond * law.prior.mass[None, :, :]
    pt = j.sum(axis=(1, 2))
    w = law.prior.mass
    total = 0.0
    T, nx, ny = j.shape
    for t in range(T):
        for x in range(nx):
            for y in range(ny):
                if j[t, x, y] > 0.0:
                    total += j[t, x, y] * math.log2(j[t, x, y] / (pt[t] * w[x, y]))
    return total
