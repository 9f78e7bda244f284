"""Projected single-site dynamics.

The sampler runs a Glauber chain on the projected state space: each step
picks a uniform variable and redraws its projected value from the conditional
law given the rest, realized by rejection sampling inside the connected
component of unsatisfied projected constraints around that variable.  A final
lifting pass turns the projected state into a full satisfying assignment, one
component at a time.

Failure paths are tagged, never raised: "S1"/"S2" for an oversized component
or exhausted rejection budget during a chain update (the update falls back to
a uniform draw), "I1"/"I2" for the same situations during lifting (the run
returns an ERROR result).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .csp import AtomicCSP, evaluate, violated_by_partial
from .projection import ProjectionScheme, _check_match, kappa_for
from .csp import degree_stats


def chain_length(kappa: float, n: int, delta_deg: int, eps: float, c_t: float = 1.0) -> int:
    return math.ceil(c_t * kappa * n * math.log(n * max(delta_deg, 1) / eps))


def rejection_budget(kappa: float, n: int, eps: float, eta: float) -> int:
    return math.ceil(10.0 * (kappa * n / eps) ** eta * math.log(n * kappa / eps))


def component_threshold(delta_deg: int, n: int, kappa: float, eps: float) -> float:
    return 20.0 * delta_deg * math.log(n * kappa / eps)


def time_block(kappa: float, n: int) -> float:
    return 100.0 * kappa * n


@dataclass(frozen=True)
class SamplerConfig:
    """Schedule constants derived from (eps, eta, kappa, n, Delta, C_T)."""

    eps: float
    eta: float
    kappa: float
    n: int
    delta_deg: int
    seed: int | None = None
    c_t: float = 1.0
    T: int = field(init=False)
    S: int = field(init=False)
    theta_comp: float = field(init=False)
    H: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise ValueError(f"eps must lie in (0, 1/2), got {self.eps}")
        object.__setattr__(self, "T", chain_length(self.kappa, self.n, self.delta_deg, self.eps, self.c_t))
        object.__setattr__(self, "S", rejection_budget(self.kappa, self.n, self.eps, self.eta))
        object.__setattr__(
            self, "theta_comp", component_threshold(self.delta_deg, self.n, self.kappa, self.eps)
        )
        object.__setattr__(self, "H", time_block(self.kappa, self.n))

    @classmethod
    def derive(
        cls,
        csp: AtomicCSP,
        scheme: ProjectionScheme,
        eps: float,
        seed: int | None = None,
        eta: float = 0.25,
        c_t: float = 1.0,
        kappa: float | None = None,
    ) -> "SamplerConfig":
        delta_deg, k, _ = degree_stats(csp)
        if kappa is None:
            kappa = scheme.kappa
        if kappa is None:
            kappa = kappa_for(scheme.case, delta_deg, max(csp.domains, default=2), k)
        return cls(eps=eps, eta=eta, kappa=kappa, n=csp.n, delta_deg=delta_deg, seed=seed, c_t=c_t)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps, "eta": self.eta, "kappa": self.kappa, "c_t": self.c_t,
            "n": self.n, "delta": self.delta_deg, "T": self.T, "S": self.S,
            "theta_comp": self.theta_comp, "H": self.H, "seed": self.seed,
        }


def project_csp(csp: AtomicCSP, scheme: ProjectionScheme) -> AtomicCSP:
    """The projected instance: same variable sets, forbidden vectors pushed
    through the per-variable block maps, alphabets = block counts."""
    _check_match(csp, scheme)
    constraints = tuple(
        type(c)(c.vars, tuple(scheme.project_value(v, f) for v, f in zip(c.vars, c.forbidden)))
        for c in csp.constraints
    )
    return AtomicCSP(
        n=csp.n, domains=scheme.q_sizes(), constraints=constraints, allow_unit_domains=True
    )


class ProjectedState:
    """Projected assignment plus incremental bookkeeping: per-constraint count
    of variables sitting at their forbidden projected value, and the set of
    fully-matched (unsatisfied) constraints."""

    __slots__ = ("y", "counts", "unsat")

    def __init__(self, pcsp: AtomicCSP, y):
        self.y = list(y)
        if len(self.y) != pcsp.n:
            raise ValueError("state length mismatch")
        self.counts = [0] * pcsp.m
        self.unsat: set[int] = set()
        for cid, c in enumerate(pcsp.constraints):
            self.counts[cid] = sum(self.y[v] == f for v, f in zip(c.vars, c.forbidden))
            if self.counts[cid] == c.arity:
                self.unsat.add(cid)

    @classmethod
    def random(cls, pcsp: AtomicCSP, rng: np.random.Generator) -> "ProjectedState":
        y = [int(rng.integers(size)) for size in pcsp.domains]
        return cls(pcsp, y)

    def apply(self, pcsp: AtomicCSP, v: int, new_q: int):
        old = self.y[v]
        if new_q == old:
            return
        self.y[v] = new_q
        for cid in pcsp.dep_index[v]:
            c = pcsp.constraints[cid]
            f = c.forbidden_at(v)
            delta = (new_q == f) - (old == f)
            if delta:
                self.counts[cid] += delta
                if self.counts[cid] == c.arity:
                    self.unsat.add(cid)
                else:
                    self.unsat.discard(cid)

    def check_consistent(self, pcsp: AtomicCSP):
        expect = set(violated_by_partial(pcsp, self.y))
        if expect != self.unsat:
            raise AssertionError(f"unsat bookkeeping drifted: {self.unsat} != {expect}")
        for cid, c in enumerate(pcsp.constraints):
            count = sum(self.y[v] == f for v, f in zip(c.vars, c.forbidden))
            if count != self.counts[cid]:
                raise AssertionError(f"count bookkeeping drifted at constraint {cid}")


@dataclass
class ComponentView:
    vars: list[int]
    constraints: list[int]
    size_exceeded: bool = False


def _unsat_without(state: ProjectedState, pcsp: AtomicCSP, cid: int, v: int | None) -> bool:
    """Is constraint cid unsatisfied by the state with v treated unassigned?"""
    c = pcsp.constraints[cid]
    if v is None or v not in c.vars:
        return state.counts[cid] == c.arity
    hit = state.y[v] == c.forbidden_at(v)
    return state.counts[cid] - hit == c.arity - 1


def explore_component(
    state: ProjectedState,
    pcsp: AtomicCSP,
    v: int | None,
    theta_comp: float = math.inf,
):
    """Connected component around v in the graph of constraints unsatisfied
    with v unassigned (v=None: list of all components of the current state).

    Exploration stops early, flagging size_exceeded, once the component holds
    more than theta_comp unsatisfied constraints.
    """
    if v is None:
        seen_cons: set[int] = set()
        comps = []
        for cid in sorted(state.unsat):
            if cid in seen_cons:
                continue
            comp = _grow_component(state, pcsp, [cid], None, theta_comp)
            seen_cons.update(comp.constraints)
            comps.append(comp)
        return comps
    seeds = [cid for cid in pcsp.dep_index[v] if _unsat_without(state, pcsp, cid, v)]
    comp = _grow_component(state, pcsp, seeds, v, theta_comp)
    if v not in comp.vars:
        comp.vars.append(v)
    return comp


def _grow_component(state, pcsp, seeds, v, theta_comp) -> ComponentView:
    comp_vars: set[int] = set()
    comp_cons: list[int] = []
    seen: set[int] = set(seeds)
    stack = list(seeds)
    exceeded = False
    while stack:
        cid = stack.pop()
        comp_cons.append(cid)
        if len(comp_cons) > theta_comp:
            exceeded = True
            break
        for u in pcsp.constraints[cid].vars:
            if u in comp_vars:
                continue
            comp_vars.add(u)
            for other in pcsp.dep_index[u]:
                if other not in seen and _unsat_without(state, pcsp, other, v):
                    seen.add(other)
                    stack.append(other)
    return ComponentView(vars=sorted(comp_vars), constraints=sorted(comp_cons), size_exceeded=exceeded)


def sample_step(
    state: ProjectedState,
    pcsp: AtomicCSP,
    csp: AtomicCSP,
    scheme: ProjectionScheme,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    v: int,
    _comp: ComponentView | None = None,
):
    """One conditional redraw of variable v.  Returns (new projected value,
    failure flag in {None, "S1", "S2"}).

    The non-failing branch draws original-space values for the component
    (blocks of the current projected state for the others, the full alphabet
    for v) until they satisfy every unsatisfied constraint inside, then
    projects the drawn value of v.
    """
    comp = _comp if _comp is not None else explore_component(state, pcsp, v, cfg.theta_comp)
    if comp.size_exceeded or len(comp.constraints) > cfg.theta_comp:
        return int(rng.integers(pcsp.domains[v])), "S1"
    return _reject_inside(state, csp, scheme, cfg, rng, v, comp)


@dataclass
class ChainDiagnostics:
    steps: int = 0
    s1: int = 0
    s2: int = 0
    component_hist: dict[int, int] = field(default_factory=dict)

    def record(self, flag: str | None, comp_size: int):
        self.steps += 1
        if flag == "S1":
            self.s1 += 1
        elif flag == "S2":
            self.s2 += 1
        self.component_hist[comp_size] = self.component_hist.get(comp_size, 0) + 1


def glauber_run(
    state: ProjectedState,
    pcsp: AtomicCSP,
    csp: AtomicCSP,
    scheme: ProjectionScheme,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    steps: int | None = None,
    check_every: int = 0,
):
    """Run the chain for T steps (uniform variable choice per step), applying
    sample_step updates in place.  check_every > 0 recomputes the bookkeeping
    from scratch periodically (debug aid)."""
    total = cfg.T if steps is None else steps
    diag = ChainDiagnostics()
    for t in range(total):
        v = int(rng.integers(cfg.n))
        comp = explore_component(state, pcsp, v, cfg.theta_comp)
        new_q, flag = sample_step(state, pcsp, csp, scheme, cfg, rng, v, _comp=comp)
        diag.record(flag, len(comp.constraints))
        state.apply(pcsp, v, new_q)
        if check_every and (t + 1) % check_every == 0:
            state.check_consistent(pcsp)
    return state, diag


def _reject_inside(state, csp, scheme, cfg, rng, v, comp):
    others = [u for u in comp.vars if u != v]
    cons = [csp.constraints[cid] for cid in comp.constraints]
    x: dict[int, int] = {}
    for _ in range(cfg.S):
        for u in others:
            x[u] = scheme.sample_preimage(u, state.y[u], rng)
        x[v] = int(rng.integers(csp.domains[v]))
        if all(any(x[u] != f for u, f in zip(c.vars, c.forbidden)) for c in cons):
            return scheme.project_value(v, x[v]), None
    return int(rng.integers(len(scheme.blocks[v]))), "S2"


@dataclass
class LiftResult:
    assignment: tuple[int, ...] | None
    error: str | None
    components: int = 0
    rounds: int = 0


def inv_sample(
    state: ProjectedState,
    pcsp: AtomicCSP,
    csp: AtomicCSP,
    scheme: ProjectionScheme,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> LiftResult:
    """Lift the projected state to a full assignment.

    Variables outside every unsatisfied component are drawn uniformly from
    their blocks; each component is rejection-sampled as a whole until its
    unsatisfied constraints are all satisfied.  Any oversized component yields
    ERROR "I1"; an exhausted budget yields ERROR "I2".  A returned assignment
    always projects back to the state and satisfies the full instance.
    """
    comps = explore_component(state, pcsp, None, cfg.theta_comp)
    for comp in comps:
        if comp.size_exceeded or len(comp.constraints) > cfg.theta_comp:
            return LiftResult(None, "I1", components=len(comps))
    x: list[int | None] = [None] * csp.n
    in_comp: set[int] = set()
    for comp in comps:
        in_comp.update(comp.vars)
    for u in range(csp.n):
        if u not in in_comp:
            x[u] = scheme.sample_preimage(u, state.y[u], rng)
    rounds = 0
    for comp in comps:
        cons = [csp.constraints[cid] for cid in comp.constraints]
        for attempt in range(cfg.S):
            draw = {u: scheme.sample_preimage(u, state.y[u], rng) for u in comp.vars}
            rounds += 1
            if all(any(draw[u] != f for u, f in zip(c.vars, c.forbidden)) for c in cons):
                for u, value in draw.items():
                    x[u] = value
                break
        else:
            return LiftResult(None, "I2", components=len(comps), rounds=rounds)
    assignment = tuple(x)  # type: ignore[arg-type]
    assert scheme.project(assignment) == tuple(state.y)
    assert evaluate(csp, assignment) == []
    return LiftResult(assignment, None, components=len(comps), rounds=rounds)


@dataclass
class SampleResult:
    assignment: tuple[int, ...] | None
    error: str | None
    diagnostics: dict

    @property
    def ok(self) -> bool:
        return self.error is None


def main_sample(
    csp: AtomicCSP,
    scheme: ProjectionScheme,
    eps: float,
    seed=None,
    eta: float = 0.25,
    c_t: float = 1.0,
    rng: np.random.Generator | None = None,
    initial=None,
) -> SampleResult:
    """Uniform-at-random initial projected state, T chain steps, then lifting.

    The distributional guarantee presumes an admissible scheme; the returned
    assignment, when not an ERROR, is always an exactly verified satisfying
    assignment regardless.
    """
    cfg = SamplerConfig.derive(csp, scheme, eps, seed=seed, eta=eta, c_t=c_t)
    if rng is None:
        rng = np.random.default_rng(seed)
    pcsp = project_csp(csp, scheme)
    state = ProjectedState(pcsp, initial) if initial is not None else ProjectedState.random(pcsp, rng)
    state, diag = glauber_run(state, pcsp, csp, scheme, cfg, rng)
    lift = inv_sample(state, pcsp, csp, scheme, cfg, rng)
    diagnostics = {
        **cfg.to_dict(),
        "s1_failures": diag.s1,
        "s2_failures": diag.s2,
        "lift_error": lift.error,
        "lift_components": lift.components,
        "component_hist": {str(k): v for k, v in sorted(diag.component_hist.items())},
    }
    return SampleResult(lift.assignment, lift.error, diagnostics)
