"""Projection schemes: per-variable partitions of the alphabet into preimage
blocks, the quantities b, zeta, kappa derived from them, the admissibility
report, and the five-case constructor.

A scheme maps each original value to the index of its block; the projected
alphabet of variable v has one symbol per block.  Collapsing a variable to a
single block erases it from the projected instance; singleton blocks keep it
fully visible.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .csp import AtomicCSP, CSPError, degree_stats
from .resample import BadEvent, ResamplingProblem, moser_tardos

logger = logging.getLogger(__name__)

E = math.e


class RegimeError(ValueError):
    """Instance/scheme parameters outside the range a formula is defined for."""


class ConstructionError(RuntimeError):
    """Randomized construction exhausted its resampling budget."""


class AdmissibilityError(ValueError):
    """Strict construction rejected a scheme that fails the numeric checks."""


# Constants reproduced from the offline optimizations behind the randomized
# constructions.  All are config-overridable through construct_projection's
# params argument.
CASE2_GAMMA = 0.1742
CASE2_ALPHA = 0.4047  # collapse probability; thresholds theta1=gamma, thetaf=2*gamma
CASE2_THETA1 = 0.1742
CASE2_THETAF = 0.3484
CASE3_GAMMA = 0.2
CASE4_GAMMA = {5: 0.221, 7: 0.236}
CASE4_MIX = {5: 0.275, 7: 0.69}  # probability of the coarser partition shape
CASE4_SHAPES = {5: ((3, 2), (2, 2, 1)), 7: ((3, 2, 2), (2, 2, 2, 1))}
CASE5_GAMMA = 0.142
CASE5_ALPHA2 = 0.34
CASE5_MIX = {5: 0.0, 7: 0.0}


@dataclass(frozen=True)
class ProjectionScheme:
    """Per-variable partition of 0..size-1 into nonempty blocks; block j is
    the preimage of projected value j."""

    blocks: tuple[tuple[tuple[int, ...], ...], ...]
    case: str | None = None
    kappa: float | None = None
    eta: float | None = None
    block_of: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        canon = tuple(
            tuple(tuple(sorted(block)) for block in var_blocks) for var_blocks in self.blocks
        )
        object.__setattr__(self, "blocks", canon)
        lookup = []
        for v, var_blocks in enumerate(canon):
            union: dict[int, int] = {}
            for j, block in enumerate(var_blocks):
                if not block:
                    raise CSPError(f"variable {v} has an empty block")
                for value in block:
                    if value in union:
                        raise CSPError(f"variable {v}: value {value} in two blocks")
                    union[value] = j
            size = len(union)
            if set(union) != set(range(size)):
                raise CSPError(f"variable {v}: blocks do not partition 0..{size - 1}")
            lookup.append(tuple(union[value] for value in range(size)))
        object.__setattr__(self, "block_of", tuple(lookup))

    @property
    def n(self) -> int:
        return len(self.blocks)

    def domain_sizes(self) -> tuple[int, ...]:
        return tuple(len(lookup) for lookup in self.block_of)

    def q_sizes(self) -> tuple[int, ...]:
        return tuple(len(var_blocks) for var_blocks in self.blocks)

    def project_value(self, v: int, value: int) -> int:
        return self.block_of[v][value]

    def project(self, x) -> tuple[int, ...]:
        return tuple(self.block_of[v][value] for v, value in enumerate(x))

    def block_size(self, v: int, q: int) -> int:
        return len(self.blocks[v][q])

    def sample_preimage(self, v: int, q: int, rng: np.random.Generator) -> int:
        block = self.blocks[v][q]
        if len(block) == 1:
            return block[0]
        return block[int(rng.integers(len(block)))]

    def restrict(self, keep) -> "ProjectionScheme":
        """Scheme over a variable subset, in the order given (for pinned
        instances)."""
        return ProjectionScheme(
            blocks=tuple(self.blocks[v] for v in keep),
            case=self.case,
            kappa=self.kappa,
            eta=self.eta,
        )

    def to_json(self) -> str:
        payload = {
            "blocks": [[list(b) for b in var_blocks] for var_blocks in self.blocks],
            "case": self.case,
            "kappa": self.kappa,
            "eta": self.eta,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProjectionScheme":
        payload = json.loads(text)
        return cls(
            blocks=tuple(
                tuple(tuple(b) for b in var_blocks) for var_blocks in payload["blocks"]
            ),
            case=payload.get("case"),
            kappa=payload.get("kappa"),
            eta=payload.get("eta"),
        )


def identity_scheme(csp: AtomicCSP, **kw) -> ProjectionScheme:
    return ProjectionScheme(
        tuple(tuple((value,) for value in range(size)) for size in csp.domains), **kw
    )


def full_marking_scheme(csp: AtomicCSP, **kw) -> ProjectionScheme:
    return ProjectionScheme(tuple((tuple(range(size)),) for size in csp.domains), **kw)


def scheme_from_blocks(blocks, **kw) -> ProjectionScheme:
    return ProjectionScheme(tuple(tuple(tuple(b) for b in vb) for vb in blocks), **kw)


def _check_match(csp: AtomicCSP, scheme: ProjectionScheme):
    if scheme.n != csp.n or scheme.domain_sizes() != csp.domains:
        raise CSPError(
            f"scheme covers domains {scheme.domain_sizes()}, CSP has {csp.domains}"
        )


# ---------------------------------------------------------------------------
# Derived quantities


def compute_b(csp: AtomicCSP, scheme: ProjectionScheme):
    """Exact per-constraint b(C) = prod of reciprocal preimage-block sizes at
    the forbidden projected values, and the maximum b."""
    _check_match(csp, scheme)
    per_constraint = []
    for c in csp.constraints:
        value = Fraction(1)
        for v, f in zip(c.vars, c.forbidden):
            value /= scheme.block_size(v, scheme.project_value(v, f))
        per_constraint.append(value)
    b = max(per_constraint, default=Fraction(0))
    return b, per_constraint


def marginal_prob(csp: AtomicCSP, scheme: ProjectionScheme, v: int, q: int) -> Fraction:
    """Product-measure probability that variable v projects to block q."""
    return Fraction(scheme.block_size(v, q), csp.domains[v])


def overlap_vars(scheme: ProjectionScheme, c) -> tuple[int, ...]:
    """Variables of a constraint with more than one block (written vbl-bar)."""
    return tuple(v for v in c.vars if len(scheme.blocks[v]) > 1)


def regime_ok(csp: AtomicCSP, scheme: ProjectionScheme) -> bool:
    """e * b * Delta <= 1, the hypothesis under which the conditional-marginal
    bound (and hence the sampling analysis) applies."""
    delta, _, _ = degree_stats(csp)
    b, _ = compute_b(csp, scheme)
    return E * float(b) * delta <= 1.0


def kappa_for(case: str | None, delta: int, a_max: int, k_max: int) -> float:
    """Chain-length scale for each construction case; generic fallback covers
    user-supplied schemes.  Always at least 4*ln(3000*Delta)."""
    d = max(delta, 1)
    if case == "case1":
        kappa = 12.0 * math.log(3000.0 * (d + a_max))
    elif case in ("case2", "case3"):
        kappa = 12.0 * math.log(3000.0 * (d + max(k_max, 1)))
    elif case == "case4":
        kappa = 12.0 * math.log(3000.0 * (d + a_max * max(k_max, 1)))
    elif case == "case5":
        kappa = 12.0 * math.log(3000.0 * (d + 100))
    else:
        kappa = 12.0 * math.log(3000.0 * (d + a_max + max(k_max, 1)))
    return max(kappa, 4.0 * math.log(3000.0 * d))


def zeta_values(csp: AtomicCSP, scheme: ProjectionScheme, b: Fraction | None = None):
    """zeta(C) with the conservative substitute 1 for the worst-case TV term:
    max over multi-block variables of max(1, min((1-3b)^Delta / P, 2*Delta)).
    Returns math.inf entries when b >= 1/3 makes the factor meaningless."""
    if b is None:
        b, _ = compute_b(csp, scheme)
    delta, _, _ = degree_stats(csp)
    shrink = (1.0 - 3.0 * float(b)) ** delta if float(b) < 1.0 / 3.0 else 0.0
    out = []
    for c in csp.constraints:
        best = 1.0
        for v in overlap_vars(scheme, c):
            p = float(marginal_prob(csp, scheme, v, scheme.project_value(v, c.forbidden_at(v))))
            inner = shrink / p if shrink > 0.0 else math.inf
            best = max(best, min(inner, 2.0 * delta))
        out.append(best)
    return out


def compute_zeta_kappa(csp: AtomicCSP, scheme: ProjectionScheme, eta: float):
    """(zeta per constraint, kappa).  Requires the e*b*Delta <= 1 regime."""
    delta, k, _ = degree_stats(csp)
    b, _ = compute_b(csp, scheme)
    if E * float(b) * max(delta, 0) > 1.0:
        raise RegimeError(
            f"e*b*Delta = {E * float(b) * delta:.4g} > 1; conditional-marginal bound unavailable"
        )
    zetas = zeta_values(csp, scheme, b)
    a_max = max(csp.domains, default=2)
    return zetas, kappa_for(scheme.case, delta, a_max, k)


# ---------------------------------------------------------------------------
# Admissibility


@dataclass
class AdmissibilityReport:
    eta: float
    kappa: float
    delta_deg: int
    b: float
    a1_bound: float
    a1_pass: bool
    a2_rhs: float
    a2_worst_lhs: float
    a2_worst_constraint: int | None
    a2_pass: bool
    a3_worst_ratio: float
    a3_pass: bool
    a4_pass: bool
    zeta: list[float]
    notes: list[str]

    @property
    def all_pass(self) -> bool:
        return self.a1_pass and self.a2_pass and self.a3_pass and self.a4_pass

    def to_dict(self) -> dict:
        def num(x):
            # strict-JSON surface: non-finite margins become None
            return x if x is None or (isinstance(x, (int, float)) and math.isfinite(x)) else None

        return {
            "eta": self.eta,
            "kappa": self.kappa,
            "delta": self.delta_deg,
            "b": self.b,
            "a1": {"pass": self.a1_pass, "b": self.b, "bound": num(self.a1_bound)},
            "a2": {
                "pass": self.a2_pass,
                "worst_lhs": num(self.a2_worst_lhs),
                "rhs": self.a2_rhs,
                "worst_constraint": self.a2_worst_constraint,
            },
            "a3": {"pass": self.a3_pass, "worst_ratio": self.a3_worst_ratio},
            "a4": {"pass": self.a4_pass},
            "zeta": [num(z) for z in self.zeta],
            "admissible": self.all_pass,
            "notes": self.notes,
        }


def check_admissibility(
    csp: AtomicCSP, scheme: ProjectionScheme, eta: float, kappa: float | None = None
) -> AdmissibilityReport:
    """Evaluate the four admissibility conditions numerically.

    Failures are report entries, never exceptions.  With no constraints every
    condition passes vacuously.
    """
    _check_match(csp, scheme)
    delta, k, _ = degree_stats(csp)
    b_frac, b_per = compute_b(csp, scheme)
    b = float(b_frac)
    notes: list[str] = []
    if kappa is None:
        kappa = scheme.kappa
    if kappa is None:
        kappa = kappa_for(scheme.case, delta, max(csp.domains, default=2), k)

    if csp.m == 0:
        return AdmissibilityReport(
            eta=eta, kappa=kappa, delta_deg=0, b=0.0, a1_bound=math.inf, a1_pass=True,
            a2_rhs=math.inf, a2_worst_lhs=0.0, a2_worst_constraint=None, a2_pass=True,
            a3_worst_ratio=1.0, a3_pass=True, a4_pass=True, zeta=[],
            notes=["no constraints: vacuous pass"],
        )

    # A1: b <= eta / (300 Delta), compared exactly
    a1_bound = eta / (300.0 * delta)
    a1_pass = b_frac <= Fraction(eta) / (300 * delta)

    if E * b * delta > 1.0:
        notes.append(f"outside e*b*Delta<=1 regime (={E * b * delta:.4g})")

    # A2: |vbl-bar|^2 kappa^2 zeta(C) prod((1-3b)^-Delta P + e^-kappa/3) <= (60000 Delta)^-2
    zetas = zeta_values(csp, scheme, b_frac)
    inflate = (1.0 - 3.0 * b) ** (-delta) if b < 1.0 / 3.0 else math.inf
    tail = math.exp(-kappa / 3.0)
    a2_rhs = (60000.0 * delta) ** -2
    worst_lhs, worst_cid = 0.0, None
    for cid, c in enumerate(csp.constraints):
        ov = overlap_vars(scheme, c)
        if not ov:
            lhs = 0.0
        else:
            logs = []
            for v in ov:
                p = float(marginal_prob(csp, scheme, v, scheme.project_value(v, c.forbidden_at(v))))
                term = inflate * p + tail
                logs.append(math.log(term) if term > 0 else -math.inf)
            log_prod = math.fsum(logs)  # compensated log-space product
            lhs = math.exp(
                math.log(len(ov) ** 2 * kappa**2 * zetas[cid]) + log_prod
            ) if math.isfinite(log_prod) and math.isfinite(zetas[cid]) else math.inf
        if lhs > worst_lhs:
            worst_lhs, worst_cid = lhs, cid
    a2_pass = worst_lhs <= a2_rhs

    # A3: marginal comparability within a factor of 2 at every shared variable
    worst_ratio = 1.0
    for v in range(csp.n):
        probs = {
            marginal_prob(csp, scheme, v, scheme.project_value(v, csp.constraints[cid].forbidden_at(v)))
            for cid in csp.dep_index[v]
        }
        if probs:
            ratio = max(probs) / min(probs)
            worst_ratio = max(worst_ratio, float(ratio))
    a3_pass = worst_ratio <= 2.0

    # A4: block-backed lookup projects and samples preimages in O(1) after
    # O(log|alphabet|) indexing; holds structurally for this representation.
    return AdmissibilityReport(
        eta=eta, kappa=kappa, delta_deg=delta, b=b, a1_bound=a1_bound, a1_pass=bool(a1_pass),
        a2_rhs=a2_rhs, a2_worst_lhs=worst_lhs, a2_worst_constraint=worst_cid, a2_pass=bool(a2_pass),
        a3_worst_ratio=worst_ratio, a3_pass=bool(a3_pass), a4_pass=True,
        zeta=[float(z) if math.isfinite(z) else math.inf for z in zetas], notes=notes,
    )


# ---------------------------------------------------------------------------
# Construction cases


def _floor_pow_2_3(a: int) -> int:
    """Exact floor(a^(2/3)): largest r with r^3 <= a^2."""
    r = round(a ** (2.0 / 3.0)) + 2
    while r**3 > a * a:
        r -= 1
    return r


def _contiguous_blocks(size: int, r: int) -> tuple[tuple[int, ...], ...]:
    """Partition 0..size-1 into r contiguous blocks of size floor(size/r) or
    ceil(size/r), small blocks first."""
    base, extra = divmod(size, r)
    blocks = []
    start = 0
    for j in range(r):
        width = base if j < r - extra else base + 1
        blocks.append(tuple(range(start, start + width)))
        start += width
    assert start == size
    return tuple(blocks)


def bucket_count(a: int) -> int:
    """Block count maximizing min(log(a/ceil(a/r))/(2 log a), log(floor(a/r))/log a)."""
    best_r, best_val = 2, -1.0
    for r in range(2, a + 1):
        val = min(
            0.5 * math.log(a / math.ceil(a / r)) / math.log(a),
            math.log(max(math.floor(a / r), 1)) / math.log(a),
        )
        if val > best_val + 1e-12:
            best_r, best_val = r, val
    return best_r


def _uniform_case_params(csp: AtomicCSP):
    sizes = set(csp.domains)
    arities = {c.arity for c in csp.constraints}
    a = sizes.pop() if len(sizes) == 1 else None
    k = arities.pop() if len(arities) == 1 else None
    return a, k


def choose_case(csp: AtomicCSP) -> str:
    """Instance-shape dispatch.  Uniform alphabets route to their dedicated
    case; mixed alphabets use the combined construction.  The large-alphabet
    cutoff for the cube-root bucketing is 8 (uniform arity required)."""
    a, k = _uniform_case_params(csp)
    if a is None:
        return "case5"
    if a == 2:
        return "case2"
    if a == 3:
        return "case3"
    if a in (5, 7):
        return "case4"
    if a >= 8 and k is not None:
        return "case1"
    return "case4"


def _build_case1(csp: AtomicCSP, a: int):
    r = _floor_pow_2_3(a)
    if r < 2:
        raise RegimeError(f"alphabet {a} too small for cube-root bucketing")
    blocks = _contiguous_blocks(a, r)
    return tuple(blocks for _ in range(csp.n))


def _build_case4_det(csp: AtomicCSP, a: int):
    blocks = _contiguous_blocks(a, bucket_count(a))
    return tuple(blocks for _ in range(csp.n))


def _random_partition(a: int, shape: tuple[int, ...], rng: np.random.Generator):
    perm = [int(x) for x in rng.permutation(a)]
    blocks, start = [], 0
    for width in shape:
        blocks.append(tuple(sorted(perm[start : start + width])))
        start += width
    blocks.sort(key=lambda blk: (-len(blk), blk))
    return tuple(blocks)


def _marking_blocks(a: int, collapsed: bool):
    if collapsed:
        return (tuple(range(a)),)
    return tuple((value,) for value in range(a))


def _run_construction_mt(csp, samplers, events, delta, rng, what):
    problem = ResamplingProblem(n=len(samplers), samplers=samplers, events=events)
    result = moser_tardos(problem, rng, delta=delta)
    if not result.success:
        raise ConstructionError(f"{what} construction exhausted its resampling budget")
    return result.values


def _build_case2(csp: AtomicCSP, delta: float, rng, params):
    alpha = params.get("alpha", CASE2_ALPHA)
    theta1 = params.get("theta1", CASE2_THETA1)
    thetaf = params.get("thetaf", CASE2_THETAF)
    samplers = [lambda r: bool(r.random() < alpha)] * csp.n

    def make_events(c):
        k = c.arity
        return [
            BadEvent(c.vars, lambda vals, c=c, t=theta1 * k: sum(vals[v] for v in c.vars) < t),
            BadEvent(c.vars, lambda vals, c=c, t=thetaf * k: sum(not vals[v] for v in c.vars) < t),
        ]

    events = [ev for c in csp.constraints for ev in make_events(c)]
    marks = _run_construction_mt(csp, samplers, events, delta, rng, "marking")
    return tuple(_marking_blocks(2, collapsed) for collapsed in marks)


def _case3_blocks(a: int, singleton: int):
    rest = tuple(sorted(set(range(a)) - {singleton}))
    return ((singleton,), rest)


def _build_case3(csp: AtomicCSP, delta: float, rng, params):
    gamma = params.get("gamma", CASE3_GAMMA)
    samplers = [lambda r: int(r.integers(3))] * csp.n
    ln2, ln3 = math.log(2.0), math.log(3.0)

    def pair_count(vals, c):
        # variables whose forbidden value lands in the 2-element block
        return sum(vals[v] != f for v, f in zip(c.vars, c.forbidden))

    def make_events(c):
        k = c.arity
        return [
            BadEvent(c.vars, lambda vals, c=c, t=gamma * k * ln3 / ln2: pair_count(vals, c) < t),
            BadEvent(
                c.vars,
                lambda vals, c=c, t=(1 - 2 * gamma) * k * ln3 / ln2: pair_count(vals, c) > t,
            ),
        ]

    events = [ev for c in csp.constraints for ev in make_events(c)]
    singles = _run_construction_mt(csp, samplers, events, delta, rng, "1/2-partition")
    return tuple(_case3_blocks(3, s) for s in singles)


def _build_case4_mix(csp: AtomicCSP, a: int, delta: float, rng, params):
    gamma = params.get("gamma", CASE4_GAMMA[a])
    mix = params.get("mix", CASE4_MIX[a])
    shapes = CASE4_SHAPES[a]

    def sampler(r):
        shape = shapes[0] if r.random() < mix else shapes[1]
        return _random_partition(a, shape, r)

    samplers = [sampler] * csp.n

    def forb_size(vals, c, v):
        f = c.forbidden_at(v)
        for block in vals[v]:
            if f in block:
                return len(block)
        raise AssertionError

    def log_b(vals, c):
        return -sum(math.log(forb_size(vals, c, v)) for v in c.vars)

    def log_sizes(vals, c):
        return sum(math.log(forb_size(vals, c, v)) for v in c.vars)

    lna = math.log(a)

    def make_events(c):
        k = c.arity
        return [
            BadEvent(c.vars, lambda vals, c=c, t=-gamma * k * lna: log_b(vals, c) > t),
            BadEvent(c.vars, lambda vals, c=c, t=(1 - 2 * gamma) * k * lna: log_sizes(vals, c) > t),
        ]

    events = [ev for c in csp.constraints for ev in make_events(c)]
    partitions = _run_construction_mt(csp, samplers, events, delta, rng, f"alphabet-{a} mix")
    return tuple(partitions)


def _build_case5(csp: AtomicCSP, delta: float, rng, params):
    gamma = params.get("gamma", CASE5_GAMMA)
    alpha2 = params.get("alpha2", CASE5_ALPHA2)
    mix = {5: params.get("mix5", CASE5_MIX[5]), 7: params.get("mix7", CASE5_MIX[7])}

    fixed: dict[int, tuple] = {}
    small: list[int] = []
    for v, a in enumerate(csp.domains):
        if a >= 4 and a not in (5, 7):
            fixed[v] = _contiguous_blocks(a, bucket_count(a))
        else:
            small.append(v)
    small_pos = {v: i for i, v in enumerate(small)}

    def sampler_for(v):
        a = csp.domains[v]
        if a == 2:
            return lambda r: _marking_blocks(2, bool(r.random() < alpha2))
        if a == 3:
            return lambda r: _case3_blocks(3, int(r.integers(3)))
        shapes, x = CASE4_SHAPES[a], mix[a]
        return lambda r: _random_partition(a, shapes[0] if r.random() < x else shapes[1], r)

    samplers = [sampler_for(v) for v in small]

    log_p = max(
        (-sum(math.log(csp.domains[v]) for v in c.vars) for c in csp.constraints),
        default=-math.inf,
    )

    def var_blocks(vals, v):
        return fixed[v] if v in fixed else vals[small_pos[v]]

    def forb_size(vals, c, v):
        f = c.forbidden_at(v)
        for block in var_blocks(vals, v):
            if f in block:
                return len(block)
        raise AssertionError

    def log_b(vals, c):
        return -sum(math.log(forb_size(vals, c, v)) for v in c.vars)

    def log_t(vals, c):
        return sum(
            math.log(forb_size(vals, c, v)) - math.log(csp.domains[v]) for v in c.vars
        )

    def make_events(c):
        deps = tuple(small_pos[v] for v in c.vars if v in small_pos)
        return [
            BadEvent(deps, lambda vals, c=c: log_b(vals, c) > gamma * log_p),
            BadEvent(deps, lambda vals, c=c: log_t(vals, c) > 3 * gamma * log_p),
        ]

    events = []
    for c in csp.constraints:
        for ev in make_events(c):
            if not ev.vars and ev.violated([]):
                raise ConstructionError(
                    "deterministic large-alphabet blocks already violate a threshold"
                )
            events.append(ev)
    values = _run_construction_mt(csp, samplers, events, delta, rng, "mixed-alphabet")
    return tuple(fixed[v] if v in fixed else values[small_pos[v]] for v in range(csp.n))


def construct_projection(
    csp: AtomicCSP,
    eta: float = 0.25,
    delta: float = 0.01,
    case_hint: str | None = None,
    seed=None,
    rng: np.random.Generator | None = None,
    strict: bool = False,
    params: dict | None = None,
) -> ProjectionScheme:
    """Build a projection scheme by the case matching the instance shape.

    The returned scheme is always re-verified by check_admissibility.  With
    strict=True a scheme failing A1-A3 is rejected (AdmissibilityError); by
    default the report outcome is logged and the scheme returned, since the
    numeric conditions are asymptotic and desk-scale instances routinely sit
    outside them while the sampler remains exact.
    """
    params = params or {}
    if rng is None:
        rng = np.random.default_rng(seed)
    case = case_hint or choose_case(csp)
    a, k = _uniform_case_params(csp)
    if case == "case1":
        if a is None or a < 4:
            raise RegimeError("case1 requires a uniform alphabet of size >= 4")
        blocks = _build_case1(csp, a)
    elif case == "case2":
        if a != 2:
            raise RegimeError("case2 requires a uniform binary alphabet")
        blocks = _build_case2(csp, delta, rng, params)
    elif case == "case3":
        if a != 3:
            raise RegimeError("case3 requires a uniform ternary alphabet")
        blocks = _build_case3(csp, delta, rng, params)
    elif case == "case4":
        if a is None or a < 4:
            raise RegimeError("case4 requires a uniform alphabet of size >= 4")
        blocks = _build_case4_mix(csp, a, delta, rng, params) if a in (5, 7) else _build_case4_det(csp, a)
    elif case == "case5":
        blocks = _build_case5(csp, delta, rng, params)
    else:
        raise RegimeError(f"unknown construction case {case!r}")

    delta_deg, k_max, _ = degree_stats(csp)
    kappa = kappa_for(case, delta_deg, max(csp.domains, default=2), k_max)
    scheme = ProjectionScheme(blocks=blocks, case=case, kappa=kappa, eta=eta)
    report = check_admissibility(csp, scheme, eta)
    if not report.all_pass:
        fails = [
            name
            for name, ok in [
                ("A1", report.a1_pass), ("A2", report.a2_pass),
                ("A3", report.a3_pass), ("A4", report.a4_pass),
            ]
            if not ok
        ]
        if strict:
            raise AdmissibilityError(
                f"constructed {case} scheme fails {'/'.join(fails)} numerically"
            )
        logger.info("constructed %s scheme fails %s numerically (desk scale)", case, fails)
    return scheme
