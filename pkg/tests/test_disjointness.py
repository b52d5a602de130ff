import math

import numpy as np
import pytest

from infowalk.and_protocols import one_sided_and
from infowalk.disjointness import (
    DisjInstance,
    DisjRunResult,
    disj_bound_curve,
    disj_error_audit,
    disj_ic_exact,
    disj_protocol,
    disj_table,
)
from infowalk.distributions import JointDistribution, truncated_entropy
from infowalk.errors import PreconditionError, ProtocolError, ResourceCapError
from infowalk.infocost import TranscriptLaw, internal_ic

W = JointDistribution.from_mass([[0.4, 0.2], [0.3, 0.1]])


def grid4(prior, eps):
    return one_sided_and(eps, prior, n=4)


def grid8(prior, eps):
    return one_sided_and(eps, prior, n=8)


def grid16(prior, eps):
    return one_sided_and(eps, prior, n=16)


def test_instance_p_one():
    inst = DisjInstance.iid(W, 2)
    assert inst.p_one == pytest.approx(1 - 0.9**2, abs=1e-12)
    with pytest.raises(PreconditionError):
        DisjInstance(2, (W, W), 0.5)
    with pytest.raises(PreconditionError):
        DisjInstance.from_priors([JointDistribution.uniform(2, 3)])


def test_joint_prior_is_product():
    inst = DisjInstance.iid(W, 2)
    prior = inst.joint_prior()
    # bit i of the index is coordinate i
    assert prior.mass[0b01, 0b10] == pytest.approx(
        W.mass[1, 0] * W.mass[0, 1], rel=1e-12
    )
    assert prior.mass.sum() == pytest.approx(1.0, abs=1e-12)


def test_disj_table():
    t = disj_table(2)
    assert t[0b00, 0b11] == 0
    assert t[0b01, 0b01] == 1
    assert t[0b01, 0b10] == 0
    assert t[0b11, 0b10] == 1


def test_all_empty_coordinates_never_err():
    empty = JointDistribution.from_mass([[1.0, 0.0], [0.0, 0.0]])
    inst = DisjInstance.iid(empty, 2)
    assert inst.p_one == 0.0
    law = disj_protocol(inst, 0.0, grid16)
    assert law.leaf_ids == ("",) and law.outputs == (0,)


def test_trivial_when_intersection_unlikely():
    thin = JointDistribution.from_mass([[0.7, 0.15], [0.14, 0.01]])
    inst = DisjInstance.iid(thin, 2)
    assert inst.p_one < 0.5
    law = disj_protocol(inst, 0.5, grid16)
    assert law.outputs == (0,)
    assert internal_ic(law) == 0.0


def test_n1_reduces_to_the_subprotocol():
    inst = DisjInstance.iid(W, 1)
    eps = 0.05
    composite = disj_protocol(inst, eps, grid16)
    sub = one_sided_and(eps / (2 * inst.p_one), W, n=16)
    assert internal_ic(composite) == pytest.approx(internal_ic(sub), abs=1e-12)


def test_exact_error_table_n2():
    inst = DisjInstance.iid(W, 2)
    eps = 0.1
    audit = disj_error_audit(inst, eps, grid16)
    assert audit.mode == "exact"
    assert audit.eps_round == pytest.approx(eps / (2 * inst.p_one), rel=1e-12)
    truth = disj_table(2)
    for x in range(4):
        for y in range(4):
            t = bin(x & y).count("1")
            if truth[x, y] == 0:
                assert audit.per_input[x, y] == 0.0  # one-sided, exactly
            else:
                assert audit.per_input[x, y] == pytest.approx(
                    audit.eps_round**t, abs=1e-10
                )
    assert audit.distributional < eps


def test_distributional_error_below_half_budget():
    # the audit argument gives p * eps/(2p) = eps/2 as the true ceiling
    inst = DisjInstance.iid(W, 3)
    audit = disj_error_audit(inst, 0.1, grid8)
    assert audit.distributional < 0.05


def test_expected_rounds_bound():
    # the rounded form needs n >= 3; at n = 2 the pre-rounding display holds
    eps = 0.1
    for n, factory in ((3, grid8), (4, grid4)):
        inst = DisjInstance.iid(W, n)
        audit = disj_error_audit(inst, eps, factory)
        p = inst.p_one
        assert audit.expected_rounds <= (1 - p / 3 + eps / 4) * n
    inst = DisjInstance.iid(W, 2)
    audit = disj_error_audit(inst, eps, grid16)
    p = inst.p_one
    assert audit.expected_rounds <= p * 1.5 + eps * 2 / 4 + (1 - p) * 2


def test_exact_mode_caps_coordinates():
    inst = DisjInstance.iid(W, 5)
    with pytest.raises(ResourceCapError):
        disj_protocol(inst, 0.1, grid4)
    with pytest.raises(ResourceCapError):
        disj_ic_exact(DisjInstance.iid(W, 4), 0.1, grid4)


def test_factory_failure_is_wrapped():
    def broken(prior, eps):
        raise ValueError("nope")

    with pytest.raises(ProtocolError):
        disj_protocol(DisjInstance.iid(W, 2), 0.1, broken)


def test_sampled_mode():
    inst = DisjInstance.iid(W, 2)
    runs = disj_protocol(inst, 0.1, grid8, seed=42, sample=True, samples=300)
    assert len(runs) == 300
    assert all(isinstance(r, DisjRunResult) for r in runs)
    assert all(1 <= r.rounds_executed <= 2 for r in runs)
    # repeatable under the same master seed
    again = disj_protocol(inst, 0.1, grid8, seed=42, sample=True, samples=300)
    assert [(r.output, r.rounds_executed) for r in runs] == [
        (r.output, r.rounds_executed) for r in again
    ]
    mean_out = np.mean([r.output for r in runs])
    assert abs(mean_out - inst.p_one) < 0.08  # errs only downward, slightly
    with pytest.raises(PreconditionError):
        disj_protocol(inst, 0.1, grid8, sample=True)


def test_mc_audit_tracks_exact():
    inst = DisjInstance.iid(W, 5)
    audit = disj_error_audit(inst, 0.1, grid4, seed=7, samples=200)
    assert audit.mode == "mc"
    truth = disj_table(5)
    assert np.all(audit.per_input[truth == 0] == 0.0)
    assert audit.distributional < 0.1


def test_ic_subadditive_over_coordinates():
    inst = DisjInstance.iid(W, 2)
    eps = 0.1
    ic2 = disj_ic_exact(inst, eps, grid16)
    per_coord = internal_ic(one_sided_and(eps / (2 * inst.p_one), W, n=16))
    assert ic2 <= 2 * per_coord + 1e-9


def test_zero_error_composition_is_permutation_invariant():
    inst = DisjInstance.iid(W, 2)
    law = disj_protocol(inst, 0.0, grid16)
    values = []
    for tag in ("01", "10"):
        idx = [k for k, lid in enumerate(law.leaf_ids) if lid.startswith(tag + "|")]
        sub = TranscriptLaw(
            law.prior,
            tuple(law.leaf_ids[k] for k in idx),
            law.cond[idx] * 2.0,
            tuple(law.outputs[k] for k in idx),
        )
        values.append(internal_ic(sub))
    assert values[0] == pytest.approx(values[1], abs=1e-9)


def test_bound_curve_shape():
    eps_grid = [10.0**k for k in range(-6, -1)]
    curve = disj_bound_curve(eps_grid)
    points = list(curve)
    assert [pt.epsilon for pt in points] == eps_grid
    for pt in points:
        # first-order balance at the optimizer
        assert pt.p_star == pytest.approx(
            truncated_entropy(pt.epsilon / pt.p_star), abs=1e-12
        )
        assert pt.gain > 0.0
    gains = [pt.gain for pt in points]
    assert gains == sorted(gains)  # looser budgets give bigger savings
    # eps -> 0 recovers the zero-error ceiling
    tiny = disj_bound_curve([1e-12]).points[0]
    assert tiny.bound == pytest.approx(0.4827018481689195, abs=1e-3)
    assert 0.4 <= curve.fitted_exponent <= 0.6


def test_bound_curve_explicit_p():
    pt = disj_bound_curve([1e-3], opt_p=0.2).points[0]
    assert pt.p_star == 0.2
    expect = (1 - 0.2 / 3 + 1e-3 / 4) * (
        0.4827018481689195 - truncated_entropy(1e-3 / 0.2)
    )
    assert pt.bound == pytest.approx(expect, abs=1e-10)
    with pytest.raises(PreconditionError):
        disj_bound_curve([0.7])
