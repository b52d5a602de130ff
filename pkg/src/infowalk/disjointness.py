"""Set intersection detection from one-sided AND blocks.

DISJ over n coordinates outputs 1 iff some coordinate has both bits set.
The protocol draws a public random permutation, runs a one-sided AND
subprotocol per coordinate in that order, and stops at the first 1.  Because
the subprotocols never answer 1 falsely, disjoint inputs never err, and an
input with t intersecting coordinates errs exactly when all t of its AND
rounds err — probability (per-round error)^t.

Input laws are product-across-coordinates, so earlier rounds never move the
posterior of a later coordinate and each round's prior is just its
coordinate's marginal law.  Composite inputs are encoded as integers whose
bit i is coordinate i; intersection is then literally ``x & y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Optional

import numpy as np

from .and_protocols import ic_and_zero, one_sided_and
from .distributions import JointDistribution, truncated_entropy
from .errors import PreconditionError, ProtocolError, ResourceCapError
from .infocost import TranscriptLaw, internal_ic

EXACT_COORD_CAP = 4
IC_EXACT_COORD_CAP = 3

# the zero-diagonal prior at which the zero-error cost of AND peaks; its
# closed-form cost anchors the analytic bound curve
HARDEST_ZERO_DIAG_PRIOR = JointDistribution.from_mass(
    [[0.3653203272016804, 0.31733983639915976], [0.31733983639915976, 0.0]]
)


def default_and_factory(prior: JointDistribution, epsilon: float) -> TranscriptLaw:
    """One-sided AND on a resolution-256 grid (coarse enough to compose)."""
    return one_sided_and(epsilon, prior, n=256)


@dataclass(frozen=True)
class DisjInstance:
    """A product-form input law: one independent 2x2 prior per coordinate."""

    n: int
    coord_priors: tuple
    p_one: float  # probability that the sets intersect

    def __post_init__(self):
        if self.n < 1 or len(self.coord_priors) != self.n:
            raise PreconditionError("need one coordinate prior per coordinate")
        for w in self.coord_priors:
            if (w.nx, w.ny) != (2, 2):
                raise PreconditionError("coordinate priors must be 2x2")
        recomputed = 1.0 - math.prod(1.0 - w.mass[1, 1] for w in self.coord_priors)
        if not (0.0 <= self.p_one <= 1.0) or abs(self.p_one - recomputed) > 1e-10:
            raise PreconditionError(
                f"p_one = {self.p_one!r} inconsistent with the coordinate priors "
                f"(recomputed {recomputed!r})"
            )

    @classmethod
    def from_priors(cls, coord_priors) -> "DisjInstance":
        priors = tuple(coord_priors)
        p = 1.0 - math.prod(1.0 - float(w.mass[1, 1]) for w in priors)
        return cls(len(priors), priors, p)

    @classmethod
    def iid(cls, w: JointDistribution, n: int) -> "DisjInstance":
        return cls.from_priors((w,) * n)

    def joint_prior(self) -> JointDistribution:
        """The product law over composite inputs (bit i of the index is
        coordinate i)."""
        size = 2**self.n
        mass = np.ones((size, size))
        for i, w in enumerate(self.coord_priors):
            xb = (np.arange(size) >> i) & 1
            mass *= w.mass[np.ix_(xb, xb)]
        return JointDistribution.from_mass(mass)


@dataclass(frozen=True)
class DisjRunResult:
    """One sampled execution: the answer and how many rounds ran."""

    output: int
    rounds_executed: int
    seed: int

    def __post_init__(self):
        if not (1 <= self.rounds_executed):
            raise PreconditionError("a run executes at least one round")


def disj_table(n: int) -> np.ndarray:
    """The full function table over composite inputs: 1 iff the sets meet."""
    size = 2**n
    x = np.arange(size)
    return ((x[:, None] & x[None, :]) != 0).astype(int)


def _coordinate_laws(inst: DisjInstance, eps_round: float, and_factory):
    laws = []
    for i, w in enumerate(inst.coord_priors):
        try:
            law = and_factory(w, eps_round)
        except Exception as exc:
            raise ProtocolError(
                f"AND factory failed on coordinate {i}: {exc}"
            ) from exc
        laws.append(law)
    return laws


def _trivial_law(inst: DisjInstance) -> TranscriptLaw:
    prior = inst.joint_prior()
    return TranscriptLaw(
        prior, ("",), np.ones((1, prior.nx, prior.ny)), (0,)
    )


def _composite_law(inst: DisjInstance, laws) -> TranscriptLaw:
    """Exact law of the permuted sequential composition with early stopping."""
    size = 2**inst.n
    weight = 1.0 / math.factorial(inst.n)
    # lift each coordinate's 2x2 conditional tables to the composite rectangle
    lifted = []
    for i, law in enumerate(laws):
        bits = (np.arange(size) >> i) & 1
        lifted.append(law.cond[:, bits[:, None], bits[None, :]])
    ids, tables, outs = [], [], []

    def extend(sigma, j, prefix_ids, table):
        coord = sigma[j]
        law = laws[coord]
        for t, out in enumerate(law.outputs):
            branch = table * lifted[coord][t]
            ids_here = prefix_ids + [law.leaf_ids[t]]
            if out == 1:
                record(sigma, ids_here, branch, 1)
            elif j + 1 == inst.n:
                record(sigma, ids_here, branch, 0)
            else:
                extend(sigma, j + 1, ids_here, branch)

    def record(sigma, round_ids, table, out):
        tag = "".join(str(c) for c in sigma)
        ids.append(f"{tag}|{';'.join(round_ids)}")
        tables.append(weight * table)
        outs.append(out)

    for sigma in permutations(range(inst.n)):
        extend(sigma, 0, [], np.ones((size, size)))
    order = sorted(range(len(ids)), key=lambda k: ids[k])
    return TranscriptLaw(
        inst.joint_prior(),
        tuple(ids[k] for k in order),
        np.stack([tables[k] for k in order]),
        tuple(outs[k] for k in order),
    )


def _run_once(rng, inst: DisjInstance, laws, x: int, y: int):
    """Execute the protocol once on a fixed composite input."""
    sigma = rng.permutation(inst.n)
    for j, coord in enumerate(sigma):
        law = laws[coord]
        xb, yb = (x >> int(coord)) & 1, (y >> int(coord)) & 1
        t = rng.choice(len(law.leaf_ids), p=law.cond[:, xb, yb])
        if law.outputs[t] == 1:
            return 1, j + 1
    return 0, inst.n


def disj_protocol(
    inst: DisjInstance,
    epsilon: float,
    and_factory: Callable = default_and_factory,
    seed: Optional[int] = None,
    sample: bool = False,
    samples: int = 1000,
):
    """The permuted-AND protocol at distributional error budget epsilon.

    When the sets intersect with probability below epsilon the always-0
    protocol already meets the budget and is returned as an exact law.
    Otherwise each round solves one-sided AND at budget epsilon/(2 p_one);
    exact mode (n ≤ 4) returns the full composite TranscriptLaw, and sampled
    mode returns a list of DisjRunResult with inputs drawn from the product
    law, one spawned child seed per run so runs can be distributed."""
    if not (0.0 <= epsilon < 1.0):
        raise PreconditionError(f"epsilon = {epsilon!r} outside [0, 1)")
    if inst.p_one == 0.0 or inst.p_one < epsilon:
        # the sets (almost) never intersect: always-0 already meets the budget
        return _trivial_law(inst)
    eps_round = epsilon / (2.0 * inst.p_one)
    laws = _coordinate_laws(inst, eps_round, and_factory)
    if not sample:
        if inst.n > EXACT_COORD_CAP:
            raise ResourceCapError(
                f"exact mode caps at {EXACT_COORD_CAP} coordinates; "
                "pass sample=True with a seed"
            )
        return _composite_law(inst, laws)
    if seed is None:
        raise PreconditionError("sampled mode needs a seed")
    prior = inst.joint_prior()
    flat = prior.mass.reshape(-1)
    results = []
    for child in np.random.SeedSequence(seed).spawn(samples):
        rng = np.random.default_rng(child)
        cell = rng.choice(flat.size, p=flat)
        x, y = divmod(int(cell), prior.ny)
        out, rounds = _run_once(rng, inst, laws, x, y)
        results.append(DisjRunResult(out, rounds, child.spawn_key[-1]))
    return results


@dataclass(frozen=True)
class DisjAudit:
    """Error accounting of one protocol instance.

    ``per_input`` is the full error table over composite inputs;
    ``expected_rounds`` averages the stopping time under the product law."""

    distributional: float
    per_input: np.ndarray
    eps_round: float
    expected_rounds: float
    trivial: bool
    mode: str


def _rounds_of(leaf_id: str) -> int:
    _, _, tail = leaf_id.partition("|")
    return len(tail.split(";")) if tail else 0


def disj_error_audit(
    inst: DisjInstance,
    epsilon: float,
    and_factory: Callable = default_and_factory,
    seed: Optional[int] = None,
    samples: int = 400,
) -> DisjAudit:
    """Exact (n ≤ 4) or Monte-Carlo error table of the protocol."""
    truth = disj_table(inst.n)
    prior = inst.joint_prior()
    trivial = inst.p_one == 0.0 or inst.p_one < epsilon
    eps_round = 0.0 if trivial else epsilon / (2.0 * inst.p_one)
    if inst.n <= EXACT_COORD_CAP:
        law = disj_protocol(inst, epsilon, and_factory)
        err = np.zeros_like(prior.mass)
        rounds = 0.0
        for t, out in enumerate(law.outputs):
            err += law.cond[t] * (out != truth)
            rounds += _rounds_of(law.leaf_ids[t]) * float(
                np.sum(prior.mass * law.cond[t])
            )
        return DisjAudit(
            distributional=float(np.sum(prior.mass * err)),
            per_input=err,
            eps_round=eps_round,
            expected_rounds=rounds,
            trivial=trivial,
            mode="exact",
        )
    if seed is None:
        raise PreconditionError("Monte-Carlo audit needs a seed")
    if trivial:
        return DisjAudit(0.0, np.zeros_like(prior.mass), 0.0, 0.0, True, "mc")
    laws = _coordinate_laws(inst, eps_round, and_factory)
    err = np.zeros_like(prior.mass)
    rounds_sum = 0.0
    rng = np.random.default_rng(seed)
    for x in range(prior.nx):
        for y in range(prior.ny):
            wrong = 0
            for _ in range(samples):
                out, rounds = _run_once(rng, inst, laws, x, y)
                wrong += out != truth[x, y]
                rounds_sum += rounds * prior.mass[x, y]
            err[x, y] = wrong / samples
    return DisjAudit(
        distributional=float(np.sum(prior.mass * err)),
        per_input=err,
        eps_round=eps_round,
        expected_rounds=float(rounds_sum) / samples,
        trivial=False,
        mode="mc",
    )


def disj_ic_exact(
    inst: DisjInstance,
    epsilon: float,
    and_factory: Callable = default_and_factory,
) -> float:
    """Exact internal information cost of the composite law.

    The public permutation rides in the transcript, so a single cost
    computation over the full law is already the permutation average."""
    if inst.n > IC_EXACT_COORD_CAP:
        raise ResourceCapError(
            f"exact information cost caps at {IC_EXACT_COORD_CAP} coordinates"
        )
    return internal_ic(disj_protocol(inst, epsilon, and_factory))


@dataclass(frozen=True)
class DisjBoundPoint:
    epsilon: float
    p_star: float
    bound: float
    gain: float


@dataclass(frozen=True)
class DisjBoundCurve:
    points: tuple
    fitted_exponent: Optional[float]

    def __iter__(self):
        return iter(self.points)


def _balance_p(epsilon: float) -> float:
    """Solve p = h̄(ε/p) by bisection; the difference is increasing in p."""
    lo, hi = epsilon, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - truncated_entropy(epsilon / mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def disj_bound_curve(epsilons, opt_p: Optional[float] = None) -> DisjBoundCurve:
    """The analytic per-coordinate cost bound along an epsilon grid.

    Each round either saves a whole execution (early stop, worth about p/3
    of a round) or runs a cheapened AND (worth h̄(ε/p)); the bound
    (1 − p/3 + ε/4)·(IC* − h̄(ε/p)) balances the two at p = h̄(ε/p), and the
    gap to IC* scales like √h(ε) — the log-log fit across the grid reports
    the measured exponent."""
    ic_star = ic_and_zero(HARDEST_ZERO_DIAG_PRIOR)
    points = []
    for eps in epsilons:
        if not (0.0 < eps < 0.5):
            raise PreconditionError("bound curve needs 0 < epsilon < 1/2")
        p = opt_p if opt_p is not None else _balance_p(eps)
        bound = (1.0 - p / 3.0 + eps / 4.0) * (
            ic_star - truncated_entropy(eps / p)
        )
        points.append(DisjBoundPoint(eps, p, bound, ic_star - bound))
    exponent = None
    if len(points) >= 2:
        logs_h = [math.log(truncated_entropy(pt.epsilon)) for pt in points]
        logs_g = [math.log(pt.gain) for pt in points]
        exponent = float(np.polyfit(logs_h, logs_g, 1)[0])
    return DisjBoundCurve(tuple(points), exponent)
