"""Machinery for the two-bit AND function.

The centerpiece is the buzzer protocol: each player treats their pretend
marginal of holding 1 as a position in [0, 1] and drives it as a drift-free
walk, giving up (to an axis) or pushing toward certainty at (1, 1).  Its leaf
law has a closed form, and so does the resulting scaled cost, which yields
the optimal zero-error information cost of AND for priors with no mass at
(1, 1).

The discretized walk lives on a grid of resolution n.  One gambler's-ruin
phase of the walk (mover bouncing between 0 and a ceiling) is collapsed into
a single two-outcome signal whose posteriors are the phase's exit states —
optional stopping preserves the law at phase boundaries, and a finite tree
cannot hold infinitely many micro-steps.  The resulting caterpillar tree is
measure-independent, as any protocol is: its conditional send probabilities
come from Bayes updates of the pretend walk, and running it against a real
prior reweights transitions exactly as the pretend/real conversion predicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .distributions import (
    Decomposition,
    JointDistribution,
    ProductDistribution,
    entropy_profile,
    symmetric_decomposition,
)
from .errors import PreconditionError, ProtocolError
from .infocost import TranscriptLaw, law_of
from .protocol import ALICE, BOB, Internal, Leaf, ProtocolTree, Task, WalkLeaf, walk
from .protocol import evaluate_error_law

LN2 = math.log(2.0)
AND_TABLE = ((0, 0), (0, 1))


# ---------------------------------------------------------------------------
# Leaf law of the continuous buzzer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BuzzerLeafLaw:
    """The buzzer's leaf distribution started from the pretend pair (p, q).

    With hi = max(p, q): an atom of mass 1 − lo/hi where the smaller marginal
    gives up immediately (at (hi, 0) or (0, hi)), a density p·q/ℓ³ on each of
    the two axis rays hi < ℓ < 1, and an atom of mass p·q at full certainty
    (1, 1)."""

    start: ProductDistribution
    atom_axis_point: tuple
    atom_axis_mass: float
    atom_11_mass: float

    def __post_init__(self):
        if self.atom_axis_mass < 0.0 or self.atom_11_mass < 0.0:
            raise PreconditionError("leaf-law masses must be nonnegative")
        if abs(self.total_mass() - 1.0) > 1e-9:
            raise PreconditionError("leaf law does not normalize")

    @property
    def hi(self) -> float:
        return max(self.start.p, self.start.q)

    def density(self, ell: float) -> float:
        """Per-axis density of axis leaves at parameter ell."""
        if self.hi < ell < 1.0:
            return self.start.p * self.start.q / ell**3
        return 0.0

    def density_mass(self) -> float:
        """Total mass of the two continuous axis components."""
        pq = self.start.p * self.start.q
        return pq * (1.0 / self.hi**2 - 1.0)

    def total_mass(self) -> float:
        return self.atom_axis_mass + self.density_mass() + self.atom_11_mass

    def cdf(self, t: float) -> float:
        """CDF of the scalar leaf parameter ℓ (both axes collapsed onto max)."""
        pq = self.start.p * self.start.q
        out = 0.0
        if t >= self.hi:
            out += self.atom_axis_mass
            top = min(t, 1.0)
            out += pq * (1.0 / self.hi**2 - 1.0 / top**2)
        if t >= 1.0:
            out += self.atom_11_mass
        return out


def buzzer_leaf_law(p: float, q: float) -> BuzzerLeafLaw:
    """Closed-form leaf law of the buzzer started at (p, q).

    Symmetric under swapping the players: only the axis carrying the
    immediate-give-up atom flips."""
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise PreconditionError("buzzer start must be interior: 0 < p, q < 1")
    start = ProductDistribution(p, q)
    hi, lo = max(p, q), min(p, q)
    point = (hi, 0.0) if p >= q else (0.0, hi)
    return BuzzerLeafLaw(start, point, 1.0 - lo / hi, p * q)


# ---------------------------------------------------------------------------
# Discretized buzzer: the grid walk as a finite protocol tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridWalkSpec:
    """A start point (a/n, b/n) on the resolution-n grid."""

    n: int
    a: int
    b: int

    def __post_init__(self):
        if self.n < 2:
            raise PreconditionError("grid resolution must be at least 2")
        if not (0 <= self.a <= self.n and 0 <= self.b <= self.n):
            raise PreconditionError("grid start off-lattice: need 0 <= a, b <= n")

    @classmethod
    def from_start(cls, p: float, q: float, n: int = 1024):
        """Snap a real start to the nearest lattice point.

        Returns (spec, snap distance) so callers can report how far the
        requested start moved."""
        a, b = round(p * n), round(q * n)
        spec = cls(n, a, b)
        return spec, max(abs(a / n - p), abs(b / n - q))

    @property
    def start(self) -> ProductDistribution:
        return ProductDistribution(self.a / self.n, self.b / self.n)


class _Phase(NamedTuple):
    owner: str
    mover: int  # the moving coordinate's current lattice value
    high: int  # gambler's-ruin ceiling; the floor is always 0
    other: int  # the resting coordinate's lattice value


def _grid_phases(spec: GridWalkSpec):
    """Phases of the collapsed walk plus the terminal outcome.

    From (a, b): when a >= b Bob's coordinate runs over [0, min(a+1, n)];
    otherwise Alice's runs over [0, b], exiting on the diagonal.  The walk
    absorbs on the axes (output 0) and at (n, n) (output 1)."""
    a, b, n = spec.a, spec.b, spec.n
    phases = []
    while True:
        if a == 0 or b == 0:
            return phases, 0
        if a == n and b == n:
            return phases, 1
        if a >= b:
            high = min(a + 1, n)
            phases.append(_Phase(BOB, b, high, a))
            b = high
        else:
            high = b
            phases.append(_Phase(ALICE, a, high, b))
            a = high


def _phase_signal(phase: _Phase, n: int) -> tuple:
    """Bayes-converted send probabilities for one collapsed phase.

    Under the pretend walk the mover m exits up with probability m/high,
    landing at posterior high/n.  Conditioning on the owner's input: a 1
    never gives up (posterior ratio (m/high)·(high/n)/(m/n) = 1); a 0
    continues with probability m(n−high)/(high(n−m))."""
    m, high = phase.mover, phase.high
    up_given_zero = 0.0 if m >= n else (m * (n - high)) / (high * (n - m))
    return (up_given_zero, 1.0)


def buzzer_grid_tree(
    spec: GridWalkSpec, dec: Optional[Decomposition] = None
) -> ProtocolTree:
    """The collapsed grid walk as a finite caterpillar protocol.

    Every give-up exit is a leaf with output 0; the (n, n) corner outputs 1.
    The tree errs on no input: a player holding 1 never takes a give-up
    branch, and the corner is reached only when both posteriors are certain.
    The signals are measure-independent; ``dec`` (when given) only fixes the
    symmetric-reference context the tree is meant to run under."""
    phases, terminal = _grid_phases(spec)
    node = Leaf(terminal)
    for phase in reversed(phases):  # build the caterpillar bottom-up
        node = Internal(phase.owner, _phase_signal(phase, spec.n), Leaf(0), node)
    return ProtocolTree(
        2, 2, (0, 1), node, depth_cap=max(64, len(phases) + 1)
    )


class GridLeaf(NamedTuple):
    leaf_id: str
    ell: float  # the nonzero coordinate at an axis exit; 1.0 at the corner
    axis: str  # "x", "y", or "one" for the (1,1) corner
    pretend_mass: float


def grid_leaf_law(spec: GridWalkSpec) -> list:
    """Exact pretend-measure leaf law of the collapsed grid walk."""
    phases, terminal = _grid_phases(spec)
    out = []
    reach = 1.0
    for k, phase in enumerate(phases):
        p_up = phase.mover / phase.high
        axis = "x" if phase.owner == BOB else "y"  # the survivor names the axis
        out.append(
            GridLeaf("1" * k + "0", phase.other / spec.n, axis, reach * (1.0 - p_up))
        )
        reach *= p_up
    if terminal == 1:
        out.append(GridLeaf("1" * len(phases), 1.0, "one", reach))
    else:
        ell = max(spec.a, spec.b) / spec.n
        axis = "x" if spec.a >= spec.b else "y"
        out.append(GridLeaf("1" * len(phases), ell, axis, reach))
    return out


def grid_law_kolmogorov(spec: GridWalkSpec, law: BuzzerLeafLaw) -> float:
    """Kolmogorov distance between the grid walk's scalar ℓ-law and the
    continuous law's CDF (evaluated just below and at each grid atom)."""
    mass = {}
    for leaf in grid_leaf_law(spec):
        mass[leaf.ell] = mass.get(leaf.ell, 0.0) + leaf.pretend_mass
    worst = 0.0
    running = 0.0
    for ell in sorted(mass):
        worst = max(worst, abs(running - law.cdf(ell - 1e-12)))
        running += mass[ell]
        worst = max(worst, abs(running - law.cdf(ell)))
    return worst


# ---------------------------------------------------------------------------
# Closed forms: SIM of the buzzer, the optimal zero-error IC of AND, and the
# stability potential
# ---------------------------------------------------------------------------

def _require_positive_reference(dec: Decomposition):
    if dec.x <= 0.0:
        raise PreconditionError("reference entry x = ν(0,0) must be positive")
    if dec.y <= 0.0:
        raise PreconditionError("reference entry y = ν(0,1) must be positive")


def sim_and_zero(p: float, q: float, dec: Decomposition) -> float:
    """Closed-form scaled cost of the buzzer from (p, q) under reference ν.

    The Table-1 integral evaluates to a natural-log antiderivative; one
    global 1/ln 2 converts it to bits.  Both absorption axes contribute
    identically because ν is symmetric, so for p < q the value is the p ≥ q
    branch at (q, p) with (x, y) unchanged."""
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise PreconditionError("sim_and_zero needs an interior start")
    _require_positive_reference(dec)
    if p < q:
        p, q = q, p
    x, y = dec.x, dec.y
    a = (1.0 - p) * x + p * y
    val = (
        q * (1.0 - p) * y
        + (1.0 - p) * (1.0 - q) * x * math.log((1.0 - p) * x / a)
        + (p * q * y * y / x + (p + q - 2.0 * p * q) * y) * math.log(p * y / a)
    )
    return -val / LN2


def sim_and_zero_d2p(p: float, q: float, dec: Decomposition) -> float:
    """∂²(sim_and_zero)/∂p² on the p > q side, in bits.

    −2(p−q)·xy / (2(1−p)·p²·((1−p)x+py)) / ln 2; the curvature in q is
    identically zero (the cost is linear in the smaller coordinate)."""
    _require_positive_reference(dec)
    if p <= q:
        raise PreconditionError("curvature formula applies on the p > q side")
    x, y = dec.x, dec.y
    a = (1.0 - p) * x + p * y
    return -2.0 * (p - q) * x * y / (2.0 * (1.0 - p) * p * p * a) / LN2


def ic_and_zero(w: JointDistribution) -> float:
    """Optimal zero-error internal information cost of AND at the prior w.

    H(X|Y) + H(Y|X) at w, minus the buzzer's concealed information — the
    closed-form scaled cost divided by ⟨ν, μ⟩ of w's symmetric
    decomposition."""
    dec = symmetric_decomposition(w)
    profile = entropy_profile(w)
    scaled = sim_and_zero(dec.pretend.p, dec.pretend.q, dec)
    return float(profile.h_x_given_y + profile.h_y_given_x - scaled / dec.inner())


def potential_phi_closed(c: float, p: float, q: float) -> float:
    """E[((c − ℓ)₊)²] under the buzzer leaf law from (p, q).

    Zero when max(p, q) ≥ c; otherwise the axis atom contributes
    (1 − lo/hi)(c − hi)² and the two density rays integrate analytically to
    2·hi·lo·(c²/(2hi²) − 2c/hi + 3/2 + ln(c/hi)).  Natural log: this is a
    polynomial antiderivative, not an entropy."""
    if not (0.0 < c < 1.0):
        raise PreconditionError("threshold must satisfy 0 < c < 1")
    hi, lo = max(p, q), min(p, q)
    if hi >= c:
        return 0.0
    axis = (1.0 - lo / hi) * (c - hi) ** 2
    rays = 2.0 * hi * lo * (
        c * c / (2.0 * hi * hi) - 2.0 * c / hi + 1.5 + math.log(c / hi)
    )
    return axis + rays


def _pretend_leaf_marginals(tree: ProtocolTree, dec: Decomposition):
    """Walk the tree under the pretend product prior; yield
    (pretend mass, P[x=1], P[y=1]) per leaf, rejecting non-product leaves."""
    result = walk(tree, dec.pretend.as_joint())
    for wl in result:
        m = wl.posterior.mass
        lp = m[1, :].sum()
        lq = m[:, 1].sum()
        gap = np.max(np.abs(m - np.outer([1 - lp, lp], [1 - lq, lq])))
        if gap > 1e-9:
            raise PreconditionError(
                f"leaf {wl.leaf_id} posterior is not a product distribution "
                f"(off by {gap:.3e})"
            )
        yield wl.prob, float(lp), float(lq)


def potential_of_tree(tree: ProtocolTree, c: float, dec: Decomposition) -> float:
    """E[((c − max(ℓp, ℓq))₊)²] over the tree's pretend leaf law."""
    if not (0.0 < c < 1.0):
        raise PreconditionError("threshold must satisfy 0 < c < 1")
    return math.fsum(
        mass * max(c - max(lp, lq), 0.0) ** 2
        for mass, lp, lq in _pretend_leaf_marginals(tree, dec)
    )


def leaf_mass_below(tree: ProtocolTree, dec: Decomposition, threshold: float) -> float:
    """Pretend-law probability that max(ℓp, ℓq) ≤ threshold at the leaf."""
    return math.fsum(
        mass
        for mass, lp, lq in _pretend_leaf_marginals(tree, dec)
        if max(lp, lq) <= threshold
    )


# ---------------------------------------------------------------------------
# The ε-flip, one-sided AND, and zero-error completion
# ---------------------------------------------------------------------------

def flip_transform(
    law: TranscriptLaw, x0: int, x1: int, epsilon: float
) -> TranscriptLaw:
    """Alice privately flips an ε-coin; on heads she behaves as if her input
    x1 were x0 for the whole run.  Only row x1 of the conditional law moves:
    Pr'[t|x1,y] = ε·Pr[t|x0,y] + (1−ε)·Pr[t|x1,y]."""
    if not (0.0 <= epsilon <= 1.0):
        raise PreconditionError(f"epsilon = {epsilon!r} outside [0, 1]")
    if x0 == x1:
        raise PreconditionError("flip rows must differ")
    nx = law.prior.nx
    if not (0 <= x0 < nx and 0 <= x1 < nx):
        raise PreconditionError("flip rows outside the rectangle")
    cond = np.array(law.cond)
    cond[:, x1, :] = epsilon * law.cond[:, x0, :] + (1 - epsilon) * law.cond[:, x1, :]
    return TranscriptLaw(law.prior, law.leaf_ids, cond, law.outputs)


def flip_tree(tree: ProtocolTree, x0: int, x1: int, epsilon: float) -> ProtocolTree:
    """The same ε-flip as a protocol tree.

    The private coin folds into the tree because Alice's coin posterior given
    (x1, transcript-so-far) does not depend on Bob's input — his factors
    cancel — so rewriting row x1 of each signal path-dependently reproduces
    the mixture law on the same tree shape.  Log-weights keep the reweighting
    stable on very deep trees."""
    if not (0.0 <= epsilon <= 1.0):
        raise PreconditionError(f"epsilon = {epsilon!r} outside [0, 1]")
    if x0 == x1:
        raise PreconditionError("flip rows must differ")
    if epsilon == 0.0:
        return tree

    def log_(v: float) -> float:
        return math.log(v) if v > 0.0 else -math.inf

    def mixed(node: Internal, la0: float, la1: float) -> tuple:
        s = node.send_one_prob
        if la0 == -math.inf and la1 == -math.inf:
            return s  # unreachable under x1 either way
        if la1 == -math.inf:
            heads = 1.0
        elif la0 == -math.inf:
            heads = 0.0
        else:
            heads = 1.0 / (1.0 + ((1 - epsilon) / epsilon) * math.exp(la1 - la0))
        new = list(s)
        new[x1] = heads * s[x0] + (1.0 - heads) * s[x1]
        return tuple(new)

    # post-order rebuild over (node, behave-as-x0 log-weight, as-x1 log-weight)
    done: dict = {}
    stack = [(tree.root, 0.0, 0.0, False)]
    while stack:
        node, la0, la1, expanded = stack.pop()
        key = (id(node), la0, la1)
        if key in done:
            continue
        if isinstance(node, Leaf):
            done[key] = node
            continue
        if not expanded:
            stack.append((node, la0, la1, True))
            if node.owner == ALICE:
                s = node.send_one_prob
                stack.append(
                    (node.child1, la0 + log_(s[x0]), la1 + log_(s[x1]), False)
                )
                stack.append(
                    (
                        node.child0,
                        la0 + log_(1 - s[x0]),
                        la1 + log_(1 - s[x1]),
                        False,
                    )
                )
            else:
                stack.append((node.child1, la0, la1, False))
                stack.append((node.child0, la0, la1, False))
        else:
            if node.owner == ALICE:
                s = node.send_one_prob
                c0 = done[(id(node.child0), la0 + log_(1 - s[x0]), la1 + log_(1 - s[x1]))]
                c1 = done[(id(node.child1), la0 + log_(s[x0]), la1 + log_(s[x1]))]
                done[key] = Internal(ALICE, mixed(node, la0, la1), c0, c1)
            else:
                c0 = done[(id(node.child0), la0, la1)]
                c1 = done[(id(node.child1), la0, la1)]
                done[key] = Internal(node.owner, node.send_one_prob, c0, c1)
    return ProtocolTree(
        tree.nx, tree.ny, tree.outputs, done[(id(tree.root), 0.0, 0.0)], tree.depth_cap
    )


def one_sided_and(
    epsilon: float, w: JointDistribution, n: int = 1024
) -> TranscriptLaw:
    """The buzzer law at w with an ε-flip of row 1 toward row 0.

    The result errs only by answering 0 on (1, 1), and does so with
    probability exactly ε; the evaluator enforces both facts."""
    dec = symmetric_decomposition(w)
    spec, _ = GridWalkSpec.from_start(dec.pretend.p, dec.pretend.q, n)
    tree = buzzer_grid_tree(spec, dec)
    flipped = flip_transform(law_of(tree, w), 0, 1, epsilon)
    task = Task(AND_TABLE, epsilon=max(epsilon, 1e-12), one_sided=(1, 0))
    report = evaluate_error_law(flipped, task)
    if report.one_sided_violation > 1e-12:
        raise ProtocolError("one-sided AND produced a forbidden error direction")
    if abs(report.max_pointwise - epsilon) > 1e-9:
        raise ProtocolError(
            f"one-sided AND error {report.max_pointwise} differs from epsilon"
        )
    return flipped


def complete_to_zero_error(
    tree: ProtocolTree, f, prior: JointDistribution
) -> ProtocolTree:
    """Append verification rounds below every leaf until no input can be
    answered incorrectly.

    At a leaf with output z and posterior μ_ℓ, the players test each support
    cell (x, y) with f(x, y) ≠ z in row-major order: the player whose
    posterior marginal of the tested value is smaller reveals first (ties to
    Alice); a confirmed match ends with the true value f(x, y), and if every
    test fails the original output stands.  Over a full-support prior the
    completed tree has pointwise error exactly zero."""
    table = np.asarray(f, dtype=object)
    if table.shape != (tree.nx, tree.ny):
        raise PreconditionError("function table shape does not match the tree")
    if (prior.nx, prior.ny) != (tree.nx, tree.ny):
        raise PreconditionError("prior shape does not match the tree")
    outputs = tuple(dict.fromkeys(tree.outputs + tuple(table.flat)))
    posteriors = {wl.leaf_id: wl.posterior for wl in walk(tree, prior)}
    support = prior.support()

    def verification(leaf: Leaf, posterior: JointDistribution):
        cells = [
            (x, y)
            for x in range(tree.nx)
            for y in range(tree.ny)
            if support[x, y] and table[x, y] != leaf.output
        ]
        px = posterior.marginal_x()
        py = posterior.marginal_y()
        node = leaf  # all tests failed: the original answer stands
        for x, y in reversed(cells):
            confirm = Leaf(table[x, y])
            ask_alice = lambda yes, no, xv=x: Internal(
                ALICE,
                tuple(1.0 if v == xv else 0.0 for v in range(tree.nx)),
                no,
                yes,
            )
            ask_bob = lambda yes, no, yv=y: Internal(
                BOB,
                tuple(1.0 if v == yv else 0.0 for v in range(tree.ny)),
                no,
                yes,
            )
            if px[x] <= py[y]:
                node = ask_alice(ask_bob(confirm, node), node)
            else:
                node = ask_bob(ask_alice(confirm, node), node)
        return node

    # rebuild the tree, replacing each reachable leaf by its verification
    done: dict = {}
    stack = [(tree.root, "", False)]
    while stack:
        node, path, expanded = stack.pop()
        if isinstance(node, Leaf):
            post = posteriors.get(path)
            done[path] = node if post is None else verification(node, post)
            continue
        if not expanded:
            stack.append((node, path, True))
            stack.append((node.child1, path + "1", False))
            stack.append((node.child0, path + "0", False))
        else:
            done[path] = Internal(
                node.owner, node.send_one_prob, done[path + "0"], done[path + "1"]
            )
    return ProtocolTree(
        tree.nx,
        tree.ny,
        outputs,
        done[""],
        tree.depth_cap + 2 * tree.nx * tree.ny,
    )
