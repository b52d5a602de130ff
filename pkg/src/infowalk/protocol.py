"""Protocol trees with owned signals, walk semantics, and error evaluation.

A protocol is a finite binary tree.  Each internal node is owned by one
player; the owner sends bit 1 with a probability that depends only on their
own input value.  Running the protocol against a prior is a drift-free random
walk on distributions: conditioned on the bit sent, the prior is rescaled
along the owner's axis (rows for Alice, columns for Bob) and renormalized.

Trees can be deep (the buzzer caterpillar has thousands of levels), so every
traversal here is iterative, never recursive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from .distributions import JointDistribution
from .errors import (
    DepthCapError,
    InfeasibleSplitError,
    ParseError,
    PreconditionError,
    ProtocolError,
)

ALICE = "alice"
BOB = "bob"
ROWS = "rows"
COLUMNS = "columns"
DEFAULT_DEPTH_CAP = 64
SPLIT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Leaf:
    output: object


@dataclass(frozen=True, eq=False)
class Internal:
    owner: str
    send_one_prob: tuple  # probability of sending bit 1, indexed by the owner's input
    child0: "Node" = field(repr=False)
    child1: "Node" = field(repr=False)

    def __repr__(self):  # children elided: trees can be thousands of levels deep
        return f"Internal(owner={self.owner!r}, send_one_prob={self.send_one_prob!r}, ...)"


Node = Union[Leaf, Internal]


@dataclass(frozen=True, eq=False)
class ProtocolTree:
    """A finite protocol over an nx-by-ny input rectangle.

    ``outputs`` is the explicit output alphabet; every leaf must reference it.
    ``depth_cap`` bounds the number of edges on any root-to-leaf path;
    constructions that legitimately need deeper trees pass their own cap.
    """

    nx: int
    ny: int
    outputs: tuple
    root: Node
    depth_cap: int = DEFAULT_DEPTH_CAP

    def __post_init__(self):
        outputs = tuple(self.outputs)
        object.__setattr__(self, "outputs", outputs)
        stack = [(self.root, 0)]
        while stack:
            node, depth = stack.pop()
            if depth > self.depth_cap:
                raise DepthCapError(
                    f"protocol tree exceeds depth cap {self.depth_cap}"
                )
            if isinstance(node, Leaf):
                if node.output not in outputs:
                    raise ProtocolError(
                        f"leaf output {node.output!r} not in alphabet {outputs!r}"
                    )
            elif isinstance(node, Internal):
                if node.owner == ALICE:
                    arity = self.nx
                elif node.owner == BOB:
                    arity = self.ny
                else:
                    raise ProtocolError(f"unknown owner {node.owner!r}")
                if len(node.send_one_prob) != arity:
                    raise ProtocolError(
                        f"signal table has {len(node.send_one_prob)} entries, "
                        f"owner {node.owner} needs {arity}"
                    )
                for s in node.send_one_prob:
                    if not (0.0 <= s <= 1.0):
                        raise ProtocolError(f"send probability {s!r} outside [0, 1]")
                stack.append((node.child0, depth + 1))
                stack.append((node.child1, depth + 1))
            else:
                raise ProtocolError(f"unknown node type {type(node).__name__}")

    def depth(self) -> int:
        best = 0
        stack = [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            if isinstance(node, Internal):
                stack.append((node.child0, d + 1))
                stack.append((node.child1, d + 1))
            else:
                best = max(best, d)
        return best


def owner_axis(owner: str) -> str:
    return ROWS if owner == ALICE else COLUMNS


@dataclass(frozen=True, eq=False)
class WalkStep:
    """One signal viewed as a random-walk step: λ₀μ₀ + λ₁μ₁ = μ, with μ_b a
    rescaling of μ along ``axis`` only.  ``send_one_prob`` realizes the step."""

    lambda0: float
    lambda1: float
    mu0: JointDistribution
    mu1: JointDistribution
    axis: str
    send_one_prob: tuple


class WalkLeaf(NamedTuple):
    leaf_id: str
    posterior: JointDistribution
    prob: float
    output: object


@dataclass(frozen=True)
class WalkResult:
    leaves: tuple
    pruned: tuple  # ids of zero-probability branches dropped during the walk

    def __iter__(self):
        return iter(self.leaves)

    def __len__(self):
        return len(self.leaves)


def walk(tree: ProtocolTree, prior: JointDistribution) -> WalkResult:
    """Run the drift-free walk: Bayes-update the prior along every path.

    Returns the leaf posteriors and reach probabilities.  Branches whose
    reach probability is exactly zero have no defined posterior; they are
    pruned and their ids recorded.
    """
    if (prior.nx, prior.ny) != (tree.nx, tree.ny):
        raise PreconditionError("prior shape does not match the tree rectangle")
    leaves = []
    pruned = []
    stack = [(tree.root, "", prior.mass)]
    while stack:
        node, path, mass = stack.pop()
        if isinstance(node, Leaf):
            prob = math.fsum(mass.flat)
            leaves.append(
                WalkLeaf(path, JointDistribution(tree.nx, tree.ny, mass / prob),
                         prob, node.output)
            )
            continue
        s = np.asarray(node.send_one_prob, dtype=float)
        if node.owner == ALICE:
            m1 = mass * s[:, None]
        else:
            m1 = mass * s[None, :]
        m0 = mass - m1
        for bit, m in ((1, m1), (0, m0)):
            if m.sum() <= 0.0:
                pruned.append(path + str(bit))
            else:
                stack.append(
                    (node.child1 if bit else node.child0, path + str(bit), m)
                )
    leaves.sort(key=lambda wl: wl.leaf_id)
    return WalkResult(tuple(leaves), tuple(pruned))


def apply_signal(mu: JointDistribution, owner: str, send_one_prob) -> WalkStep:
    """Forward direction of the walk equivalence: signal → one-step split.

    A branch with probability zero keeps the parent as its (conventional)
    posterior so the returned step is always well-formed.
    """
    s = np.asarray(send_one_prob, dtype=float)
    axis = owner_axis(owner)
    if axis == ROWS:
        if s.shape != (mu.nx,):
            raise ProtocolError("signal table length must equal the row count")
        m1 = mu.mass * s[:, None]
    else:
        if s.shape != (mu.ny,):
            raise ProtocolError("signal table length must equal the column count")
        m1 = mu.mass * s[None, :]
    m0 = mu.mass - m1
    lam1 = math.fsum(m1.flat)
    lam0 = 1.0 - lam1
    mu1 = JointDistribution(mu.nx, mu.ny, m1 / lam1) if lam1 > 0.0 else mu
    mu0 = JointDistribution(mu.nx, mu.ny, m0 / lam0) if lam0 > 0.0 else mu
    return WalkStep(lam0, lam1, mu0, mu1, axis, tuple(float(v) for v in s))


def step_from_split(
    mu: JointDistribution,
    mu0: JointDistribution,
    mu1: JointDistribution,
    lambda0: float,
    axis: str,
) -> WalkStep:
    """Converse direction: a drift-free, axis-aligned split is realizable.

    Checks the two defining conditions and recovers the signal that realizes
    the split:

    * mixture:  λ₀μ₀ + λ₁μ₁ = μ entrywise;
    * scaling:  each μ_b is the parent rescaled along ``axis`` only.

    Raises InfeasibleSplitError naming whichever condition fails.
    """
    if axis not in (ROWS, COLUMNS):
        raise PreconditionError(f"axis must be {ROWS!r} or {COLUMNS!r}")
    if not (0.0 <= lambda0 <= 1.0):
        raise PreconditionError(f"lambda0 = {lambda0!r} outside [0, 1]")
    lambda1 = 1.0 - lambda0
    mix = lambda0 * mu0.mass + lambda1 * mu1.mass
    gap = np.max(np.abs(mix - mu.mass))
    if gap > SPLIT_TOLERANCE:
        raise InfeasibleSplitError(
            f"mixture condition violated: |λ0·μ0 + λ1·μ1 − μ| = {gap:.3e}"
        )

    def line(mass, index):  # the slice that must be scaled as one block
        return mass[index, :] if axis == ROWS else mass[:, index]

    size = mu.nx if axis == ROWS else mu.ny
    send_one = np.full(size, 0.5)
    for b, child, lam in ((0, mu0, lambda0), (1, mu1, lambda1)):
        if lam <= 0.0:
            continue
        for i in range(size):
            parent_line = line(mu.mass, i)
            child_line = line(child.mass, i)
            total = parent_line.sum()
            if total <= 0.0:
                if child_line.sum() > SPLIT_TOLERANCE:
                    raise InfeasibleSplitError(
                        "scaling condition violated: child has mass on a "
                        f"zero-mass parent {axis[:-1]} {i}"
                    )
                continue
            scale = child_line.sum() / total
            worst = np.max(np.abs(child_line - scale * parent_line))
            if worst > SPLIT_TOLERANCE:
                raise InfeasibleSplitError(
                    f"scaling condition violated on {axis[:-1]} {i}: "
                    f"not a rescaling of the parent (off by {worst:.3e})"
                )
            if b == 1:
                send_one[i] = min(max(lam * scale, 0.0), 1.0)
    if lambda1 <= 0.0:
        send_one[:] = 0.0
    return WalkStep(
        lambda0, lambda1, mu0, mu1, axis, tuple(float(v) for v in send_one)
    )


@dataclass(frozen=True, eq=False)
class Task:
    """A computation target: a function table plus an error budget.

    ``error_kind`` is "pointwise" (every input must meet epsilon) or
    "distributional" (error weighted by ``measure``).  A one-sided task
    ``(z1, z0)`` only tolerates errors that output z0 in place of z1.
    """

    f: np.ndarray
    epsilon: float
    error_kind: str = "pointwise"
    measure: Optional[JointDistribution] = None
    one_sided: Optional[tuple] = None

    def __post_init__(self):
        f = np.array(self.f, dtype=object)
        if f.ndim != 2:
            raise PreconditionError("task function must be a 2-d table")
        f.flags.writeable = False
        object.__setattr__(self, "f", f)
        if self.error_kind not in ("pointwise", "distributional"):
            raise PreconditionError(f"unknown error kind {self.error_kind!r}")
        if self.error_kind == "distributional" and self.measure is None:
            raise PreconditionError("distributional error needs a measure")
        if self.measure is not None and (
            (self.measure.nx, self.measure.ny) != f.shape
        ):
            raise PreconditionError("measure shape does not match the task table")
        if not (0.0 <= self.epsilon <= 1.0):
            raise PreconditionError(f"epsilon = {self.epsilon!r} outside [0, 1]")

    @property
    def nx(self) -> int:
        return self.f.shape[0]

    @property
    def ny(self) -> int:
        return self.f.shape[1]


@dataclass(frozen=True)
class ErrorReport:
    max_pointwise: float
    distributional: float
    one_sided_violation: Optional[float]

    def meets(self, task: "Task") -> bool:
        ok = (
            self.max_pointwise <= task.epsilon
            if task.error_kind == "pointwise"
            else self.distributional <= task.epsilon
        )
        if task.one_sided is not None:
            ok = ok and self.one_sided_violation <= 0.0
        return ok


def evaluate_error_law(law, task: Task) -> ErrorReport:
    """Exact error of a transcript law against a task, by full enumeration.

    The distributional error is weighted by ``task.measure`` when present and
    by the uniform measure otherwise.  The one-sided violation is the weighted
    mass of errors other than answering z0 on a z1 input (None when the task
    is not one-sided).
    """
    if law.outputs is None:
        raise PreconditionError("law carries no outputs; cannot evaluate error")
    nx, ny = task.f.shape
    if (law.prior.nx, law.prior.ny) != (nx, ny):
        raise PreconditionError("law shape does not match the task table")
    weight = (
        task.measure.mass
        if task.measure is not None
        else np.full((nx, ny), 1.0 / (nx * ny))
    )
    err = np.zeros((nx, ny))
    violation = np.zeros((nx, ny))
    for t, out in enumerate(law.outputs):
        wrong = np.array(
            [[out != task.f[x, y] for y in range(ny)] for x in range(nx)]
        )
        err += law.cond[t] * wrong
        if task.one_sided is not None:
            z1, z0 = task.one_sided
            excused = np.array(
                [
                    [task.f[x, y] == z1 and out == z0 for y in range(ny)]
                    for x in range(nx)
                ]
            )
            violation += law.cond[t] * (wrong & ~excused)
    report = ErrorReport(
        max_pointwise=float(np.max(err)),
        distributional=float(np.sum(weight * err)),
        one_sided_violation=(
            float(np.sum(weight * violation)) if task.one_sided is not None else None
        ),
    )
    return report


def evaluate_error(tree: ProtocolTree, task: Task) -> ErrorReport:
    from .infocost import law_of

    prior = (
        task.measure
        if task.measure is not None
        else JointDistribution.uniform(task.nx, task.ny)
    )
    return evaluate_error_law(law_of(tree, prior), task)


def mix_with_abort(law, epsilon: float, abort_output=None):
    """Public-coin mixture: with probability ε stop immediately (one shared
    abort transcript, independent of the inputs); otherwise run the protocol.

    The internal information cost scales by exactly (1 − ε): the abort branch
    reveals nothing and the coin is input-independent.
    """
    from .infocost import TranscriptLaw

    if not (0.0 <= epsilon <= 1.0):
        raise PreconditionError(f"epsilon = {epsilon!r} outside [0, 1]")
    if epsilon == 0.0:
        return law
    nx, ny = law.prior.nx, law.prior.ny
    cond = np.concatenate(
        [(1.0 - epsilon) * law.cond, np.full((1, nx, ny), epsilon)], axis=0
    )
    leaf_ids = law.leaf_ids + ("abort",)
    outputs = None if law.outputs is None else law.outputs + (abort_output,)
    return TranscriptLaw(law.prior, leaf_ids, cond, outputs)


def mix_with_exchange(law, delta: float, prior: JointDistribution = None, f=None):
    """Public-coin mixture: with probability δ the players exchange inputs
    outright (one transcript per input cell); otherwise run the protocol.

    Pointwise error scales by exactly (1 − δ) when ``f`` labels the exchange
    leaves with the correct answers; the internal-IC increase is at most
    δ·log₂|X×Y| plus the (1−δ) scaling of the original cost.
    """
    from .infocost import TranscriptLaw

    if not (0.0 <= delta <= 1.0):
        raise PreconditionError(f"delta = {delta!r} outside [0, 1]")
    if delta == 0.0:
        return law
    if prior is None:
        prior = law.prior
    nx, ny = prior.nx, prior.ny
    table = None if f is None else np.asarray(f, dtype=object)
    extra = np.zeros((nx * ny, nx, ny))
    ids = []
    outs = []
    for x in range(nx):
        for y in range(ny):
            extra[x * ny + y, x, y] = delta
            ids.append(f"exchange:{x},{y}")
            outs.append(None if table is None else table[x, y])
    cond = np.concatenate([(1.0 - delta) * law.cond, extra], axis=0)
    leaf_ids = law.leaf_ids + tuple(ids)
    outputs = None if law.outputs is None else law.outputs + tuple(outs)
    return TranscriptLaw(prior, leaf_ids, cond, outputs)


# ---------------------------------------------------------------------------
# JSON protocol format: a flat node list with children referenced by index.
# Floats round-trip exactly (shortest-repr decimals), so dyadic send
# probabilities survive a serialize/parse cycle bit-for-bit.
# ---------------------------------------------------------------------------

def tree_to_json(tree: ProtocolTree) -> str:
    nodes = []
    index = {}
    order = []
    stack = [tree.root]
    while stack:  # preorder indexing
        node = stack.pop()
        if id(node) in index:
            continue
        index[id(node)] = len(order)
        order.append(node)
        if isinstance(node, Internal):
            stack.append(node.child1)
            stack.append(node.child0)
    for node in order:
        if isinstance(node, Leaf):
            nodes.append({"kind": "leaf", "output": node.output})
        else:
            nodes.append(
                {
                    "kind": "internal",
                    "owner": node.owner,
                    "send_one_prob": list(node.send_one_prob),
                    "child0": index[id(node.child0)],
                    "child1": index[id(node.child1)],
                }
            )
    payload = {
        "nx": tree.nx,
        "ny": tree.ny,
        "outputs": list(tree.outputs),
        "depth_cap": tree.depth_cap,
        "root": 0,
        "nodes": nodes,
    }
    return json.dumps(payload, sort_keys=True)


def tree_from_json(text: str) -> ProtocolTree:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from e
    try:
        raw_nodes = obj["nodes"]
        root_index = obj["root"]
        nx, ny = obj["nx"], obj["ny"]
        outputs = tuple(obj["outputs"])
        depth_cap = obj.get("depth_cap", DEFAULT_DEPTH_CAP)
    except (KeyError, TypeError) as e:
        raise ParseError(f"protocol JSON missing field: {e}") from e

    built: dict[int, Node] = {}

    def ready(i):
        spec = raw_nodes[i]
        if spec["kind"] == "leaf":
            return True
        return spec["child0"] in built and spec["child1"] in built

    stack = [root_index]
    expanding = set()
    while stack:
        i = stack[-1]
        if i in built:
            stack.pop()
            continue
        spec = raw_nodes[i]
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ParseError(f"malformed node {i}")
        if spec["kind"] == "leaf":
            built[i] = Leaf(spec["output"])
            stack.pop()
        elif spec["kind"] == "internal":
            if ready(i):
                built[i] = Internal(
                    spec["owner"],
                    tuple(float(v) for v in spec["send_one_prob"]),
                    built[spec["child0"]],
                    built[spec["child1"]],
                )
                expanding.discard(i)
                stack.pop()
            else:
                if i in expanding:
                    raise ParseError(f"node {i} is part of a reference cycle")
                expanding.add(i)
                c0, c1 = spec["child0"], spec["child1"]
                if not (0 <= c0 < len(raw_nodes) and 0 <= c1 < len(raw_nodes)):
                    raise ParseError(f"node {i} references a missing child")
                stack.append(c1)
                stack.append(c0)
        else:
            raise ParseError(f"unknown node kind {spec['kind']!r}")
    try:
        return ProtocolTree(nx, ny, outputs, built[root_index], depth_cap)
    except (ProtocolError, DepthCapError):
        raise
    except Exception as e:  # malformed scalars and the like
        raise ParseError(f"protocol JSON invalid: {e}") from e
