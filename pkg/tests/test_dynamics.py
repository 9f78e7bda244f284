import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from lllsample.bundled import load_bundled
from lllsample.csp import evaluate
from lllsample.dynamics import (
    ProjectedState,
    SamplerConfig,
    chain_length,
    component_threshold,
    explore_component,
    glauber_run,
    inv_sample,
    main_sample,
    project_csp,
    rejection_budget,
    sample_step,
)
from lllsample.oracle import (
    exact_lift_conditional,
    exact_mu_pi,
    exact_projected_conditional,
    tv_empirical,
)
from lllsample.projection import ProjectionScheme, full_marking_scheme, identity_scheme
from conftest import uniform_csp


def test_schedule_formulas():
    # documented arithmetic point: n=10, kappa=20, Delta=5; eps=0.5 is outside the open
    # interval, so evaluate the formula pieces directly
    assert math.ceil(1.0 * 20 * 10 * math.log(10 * 5 / 0.5)) == 922
    assert chain_length(20.0, 10, 5, 0.49999999) == 922
    cfg = SamplerConfig(eps=0.1, eta=0.25, kappa=20.0, n=10, delta_deg=5)
    assert cfg.T == math.ceil(20 * 10 * math.log(10 * 5 / 0.1))
    assert cfg.S == math.ceil(10 * (20 * 10 / 0.1) ** 0.25 * math.log(10 * 20 / 0.1))
    assert cfg.theta_comp == 20 * 5 * math.log(10 * 20 / 0.1)
    assert cfg.H == 100 * 20 * 10
    with pytest.raises(ValueError):
        SamplerConfig(eps=0.5, eta=0.25, kappa=20.0, n=10, delta_deg=5)
    with pytest.raises(ValueError):
        SamplerConfig(eps=0.0, eta=0.25, kappa=20.0, n=10, delta_deg=5)


def test_formula_helpers_match_direct_evaluation():
    assert rejection_budget(137.0, 6, 0.1, 0.25) == math.ceil(
        10 * (137 * 6 / 0.1) ** 0.25 * math.log(6 * 137 / 0.1)
    )
    assert component_threshold(3, 6, 137.0, 0.1) == 20 * 3 * math.log(6 * 137 / 0.1)


def test_project_csp():
    csp, scheme = load_bundled("mark4")
    pcsp = project_csp(csp, scheme)
    assert pcsp.domains == (2, 1, 2, 1)
    assert [c.forbidden for c in pcsp.constraints] == [(0, 0), (0, 0), (0, 0)]


def test_state_bookkeeping_random_walk(rng):
    csp, scheme = load_bundled("mark4")
    pcsp = project_csp(csp, scheme)
    state = ProjectedState.random(pcsp, rng)
    state.check_consistent(pcsp)
    for _ in range(300):
        v = int(rng.integers(pcsp.n))
        state.apply(pcsp, v, int(rng.integers(pcsp.domains[v])))
    state.check_consistent(pcsp)


def test_explore_component_examples():
    # satisfied everywhere: component is the variable alone
    csp, scheme = load_bundled("mark4")
    pcsp = project_csp(csp, scheme)
    state = ProjectedState(pcsp, [1, 0, 1, 0])  # y0=1 satisfies both clauses at v0
    comp = explore_component(state, pcsp, 1)
    assert comp.vars == [1] or comp.constraints == [0, 1]

    # one unsatisfied constraint containing v
    one = uniform_csp(3, 2, [((0, 1), (0, 0))])
    scheme1 = full_marking_scheme(one)
    p1 = project_csp(one, scheme1)
    st = ProjectedState(p1, [0, 0, 0])
    comp = explore_component(st, p1, 0)
    assert comp.vars == [0, 1] and comp.constraints == [0]

    # chain of three pairwise-overlapping unsatisfied constraints: transitive
    # closure picks up the union of their variable sets
    chain = uniform_csp(4, 2, [((0, 1), (0, 0)), ((1, 2), (0, 0)), ((2, 3), (0, 0))])
    schemec = full_marking_scheme(chain)
    pc = project_csp(chain, schemec)
    stc = ProjectedState(pc, [0, 0, 0, 0])
    comp = explore_component(stc, pc, 0)
    assert comp.vars == [0, 1, 2, 3]
    assert comp.constraints == [0, 1, 2]
    # brute-force transitive closure over the unsatisfied incidence graph
    unsat = set(stc.unsat)
    grown = {0}
    changed = True
    while changed:
        changed = False
        for cid in unsat:
            if set(pc.constraints[cid].vars) & grown and not set(
                pc.constraints[cid].vars
            ) <= grown:
                grown |= set(pc.constraints[cid].vars)
                changed = True
    assert set(comp.vars) == grown

    # all components of the current state
    comps = explore_component(stc, pc, None)
    assert len(comps) == 1 and comps[0].constraints == [0, 1, 2]


def test_explore_component_early_exit():
    chain = uniform_csp(4, 2, [((0, 1), (0, 0)), ((1, 2), (0, 0)), ((2, 3), (0, 0))])
    pc = project_csp(chain, full_marking_scheme(chain))
    stc = ProjectedState(pc, [0, 0, 0, 0])
    comp = explore_component(stc, pc, 0, theta_comp=1.0)
    assert comp.size_exceeded


def test_sample_step_no_constraints_block_proportional(rng):
    csp = uniform_csp(1, 4, [])
    scheme = ProjectionScheme((((0, 1, 2), (3,)),))
    pcsp = project_csp(csp, scheme)
    cfg = SamplerConfig(eps=0.1, eta=0.25, kappa=10.0, n=1, delta_deg=0)
    state = ProjectedState(pcsp, [0])
    hits = 0
    draws = 100_000
    for _ in range(draws):
        q, flag = sample_step(state, pcsp, csp, scheme, cfg, rng, 0)
        assert flag is None
        hits += q == 0
    assert abs(hits / draws - 0.75) < 0.01


def test_sample_step_matches_exact_conditional(rng):
    csp, scheme = load_bundled("mark3")
    pcsp = project_csp(csp, scheme)
    cfg = SamplerConfig.derive(csp, scheme, 0.1)
    v, z = 0, (0, 0, 0)  # y1=0, y2 collapsed
    exact = exact_projected_conditional(csp, scheme, v, z)
    state = ProjectedState(pcsp, list(z))
    counts = {}
    for _ in range(20_000):
        q, flag = sample_step(state, pcsp, csp, scheme, cfg, rng, v)
        assert flag is None
        counts[q] = counts.get(q, 0) + 1
    assert tv_empirical(counts, exact) < 0.02


def test_glauber_zero_steps_is_identity(rng):
    csp, scheme = load_bundled("mark4")
    pcsp = project_csp(csp, scheme)
    cfg = SamplerConfig.derive(csp, scheme, 0.1)
    state = ProjectedState(pcsp, [0, 0, 0, 0])
    before = list(state.y)
    glauber_run(state, pcsp, csp, scheme, cfg, rng, steps=0)
    assert state.y == before


def test_glauber_no_constraints_uniform(rng):
    csp = uniform_csp(3, 2, [])
    scheme = identity_scheme(csp)
    pcsp = project_csp(csp, scheme)
    cfg = SamplerConfig.derive(csp, scheme, 0.1, c_t=0.2)
    ones = np.zeros(3)
    runs = 4000
    for _ in range(runs):
        state = ProjectedState.random(pcsp, rng)
        glauber_run(state, pcsp, csp, scheme, cfg, rng, steps=15)
        ones += state.y
    # each coordinate marginal stays uniform within 3 sigma
    sigma = math.sqrt(runs * 0.25)
    assert all(abs(c - runs / 2) < 3 * sigma for c in ones)


def test_glauber_bookkeeping_check(rng):
    csp, scheme = load_bundled("colork4")
    pcsp = project_csp(csp, scheme)
    cfg = SamplerConfig.derive(csp, scheme, 0.1)
    state = ProjectedState.random(pcsp, rng)
    glauber_run(state, pcsp, csp, scheme, cfg, rng, steps=500, check_every=100)
    state.check_consistent(pcsp)


def test_inv_sample_no_unsat_uniform_blocks(rng):
    csp, scheme = load_bundled("mark4")
    pcsp = project_csp(csp, scheme)
    cfg = SamplerConfig.derive(csp, scheme, 0.1)
    state = ProjectedState(pcsp, [1, 0, 1, 0])  # satisfies every projected constraint
    assert not state.unsat
    lift = inv_sample(state, pcsp, csp, scheme, cfg, rng)
    assert lift.error is None
    assert scheme.project(lift.assignment) == (1, 0, 1, 0)
    assert evaluate(csp, lift.assignment) == []


def test_inv_sample_i1_on_oversized_component(rng):
    csp, scheme = load_bundled("sat62")
    pcsp = project_csp(csp, scheme)
    cfg = SamplerConfig.derive(csp, scheme, 0.1)
    object.__setattr__(cfg, "theta_comp", 0.5)  # inject an undersized threshold
    state = ProjectedState(pcsp, [0] * 6)
    lift = inv_sample(state, pcsp, csp, scheme, cfg, rng)
    assert lift.error == "I1" and lift.assignment is None


def test_inv_sample_i2_on_unsatisfiable_block_cube(rng):
    # identity blocks freeze the violating assignment: rejection can never accept
    csp = uniform_csp(2, 2, [((0, 1), (0, 0))])
    scheme = identity_scheme(csp)
    pcsp = project_csp(csp, scheme)
    cfg = SamplerConfig.derive(csp, scheme, 0.4)
    state = ProjectedState(pcsp, [0, 0])
    lift = inv_sample(state, pcsp, csp, scheme, cfg, rng)
    assert lift.error == "I2"


def test_inv_sample_matches_exact_lift_conditional(rng):
    csp, scheme = load_bundled("mark3")
    pcsp = project_csp(csp, scheme)
    cfg = SamplerConfig.derive(csp, scheme, 0.1)
    y = (0, 0, 0)
    exact = exact_lift_conditional(csp, scheme, y)
    counts = {}
    for _ in range(20_000):
        state = ProjectedState(pcsp, list(y))
        lift = inv_sample(state, pcsp, csp, scheme, cfg, rng)
        assert lift.error is None
        counts[lift.assignment] = counts.get(lift.assignment, 0) + 1
    assert tv_empirical(counts, exact) < 0.02


def test_main_sample_no_constraints_uniform(rng):
    csp = uniform_csp(2, 2, [])
    scheme = identity_scheme(csp)
    counts = np.zeros((2, 2))
    for i in range(3000):
        res = main_sample(csp, scheme, 0.1, rng=rng, c_t=0.1)
        assert res.ok
        counts[0, res.assignment[0]] += 1
        counts[1, res.assignment[1]] += 1
    from scipy.stats import chisquare

    for v in range(2):
        assert chisquare(counts[v]).pvalue > 1e-5


def test_main_sample_two_var_clause_tv(rng):
    csp, scheme = load_bundled("and2")
    counts = {}
    for i in range(4000):
        res = main_sample(csp, scheme, 0.1, rng=rng, c_t=0.1)
        assert res.ok
        counts[res.assignment] = counts.get(res.assignment, 0) + 1
    exact = {s: Fraction(1, 3) for s in [(0, 1), (1, 0), (1, 1)]}
    assert tv_empirical(counts, exact) < 0.03


def test_main_sample_deterministic():
    csp, scheme = load_bundled("mark4")
    r1 = main_sample(csp, scheme, 0.2, seed=77, c_t=0.05)
    r2 = main_sample(csp, scheme, 0.2, seed=77, c_t=0.05)
    assert r1.assignment == r2.assignment and r1.error == r2.error
    assert r1.diagnostics == r2.diagnostics


def test_main_sample_diagnostics_fields():
    csp, scheme = load_bundled("and2")
    res = main_sample(csp, scheme, 0.1, seed=5, c_t=0.05)
    for key in ("T", "S", "theta_comp", "s1_failures", "s2_failures", "lift_error"):
        assert key in res.diagnostics
