"""Compile a binary linear program into a QUBO.

Two schemes are available:

* the multilevel scheme (``mlcts``): every inequality gets a penalty built
  from its levelness (no ancillaries when that penalty is quadratic); only
  penalties of degree >= 3 are reduced, by one of four variants,
* the conventional scheme (``cts``): every inequality gets a slack
  expansion and the resulting equality is squared.

Penalties are combined with per-constraint weights and the objective (in
minimization form) into a :class:`~levelqubo.qubo.QuboModel`.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from . import levelness as lv
from .levelness import CompactCertificate, compact_certificate, refine_and_classify
from .model import BlpModel, LinearExpression, TwoSidedConstraint
from .penalties import synthesize, vip_equality
from .polynomial import Polynomial, multilinear_reduce, to_number
from .qubo import QuboModel, to_qubo
from .reduction import (
    AncillaAllocator,
    ReductionStep,
    tr0_1,
    tr0_2,
    tr0_2n,
    tr4_1_rosenberg,
    tr4_2_min_selection,
    tr6_1,
    tr6_2,
)

log = logging.getLogger(__name__)


class Variant(str, enum.Enum):
    MLCTS_TR4_1 = "tr4.1"
    MLCTS_TR4_2 = "tr4.2"
    MLCTS_TR0_1_TR6_1 = "tr6.1"
    MLCTS_TR0_2N_TR6_2 = "tr6.2"
    CTS = "cts"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        text = str(value).strip().lower()
        for v in cls:
            if text in (v.value, v.name.lower()):
                return v
        raise ValueError(f"unknown variant {value!r}; choose from {[v.value for v in cls]}")


DEFAULT_VARIANT = Variant.MLCTS_TR0_2N_TR6_2
ALL_VARIANTS = tuple(Variant)


class PipelineError(RuntimeError):
    """Internal invariant violation (e.g. a penalty of degree > 2 reached assembly)."""


@dataclass
class PipelineConfig:
    """Compilation options.

    Attributes:
        variant: reduction used for penalties of degree >= 3, or ``cts``.
        penalty_mode: ``"auto"``, ``"search"``, a positive number applied to
            every constraint, or a ``{constraint: weight}`` map.
        lemma3_root: optional ``{constraint: j}`` choosing the repeated root
            (1-based index into H) for odd two-sided constraints.
        use_table1: try the catalog of known penalties first.
        rosenberg_weight: fixed weight for Rosenberg terms (default: safe bound).
        rosenberg_pairs: optional ``{constraint: [(a, b), ...]}`` substitution pairs.
    """

    variant: Union[Variant, str] = DEFAULT_VARIANT
    penalty_mode: object = "auto"
    lemma3_root: Optional[Mapping[str, int]] = None
    use_table1: bool = True
    rosenberg_weight: object = None
    rosenberg_pairs: Optional[Mapping[str, Sequence]] = None

    def __post_init__(self):
        self.variant = Variant.parse(self.variant)
        mode = self.penalty_mode
        if isinstance(mode, Mapping):
            for k, v in mode.items():
                if to_number(v) <= 0:
                    raise ValueError(f"penalty weight for {k} must be positive")
        elif mode not in ("auto", "search"):
            if to_number(mode) <= 0:
                raise ValueError("penalty weight must be positive")


@dataclass
class ConstraintPenalty:
    """Unweighted penalty for one source constraint, with its audit trail."""

    name: str
    poly: Polynomial
    rule: str
    factored_r: Fraction = Fraction(1)
    ancillaries: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    report: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "constraint": self.name,
            "rule": self.rule,
            "factored_r": str(self.factored_r),
            "penalty": str(self.poly),
            "degree": self.poly.degree,
            "ancillaries": list(self.ancillaries),
            "steps": [s.to_dict() for s in self.steps],
            "levelness": self.report,
        }


@dataclass
class Synthesis:
    """All penalties of a model before weighting."""

    model: BlpModel
    config: PipelineConfig
    penalties: list
    allocator: AncillaAllocator
    dropped: list

    @property
    def ancillaries(self) -> list:
        return list(self.allocator.order)


@dataclass
class TransformTrace:
    """Which rule produced each penalty, its ancillaries and its weight."""

    variant: str
    entries: list
    dropped: list

    def to_dict(self) -> dict:
        return {"variant": self.variant, "entries": self.entries, "dropped": self.dropped}


@dataclass
class CompiledQubo:
    qubo: QuboModel
    trace: TransformTrace
    certificate: CompactCertificate
    ancillary_count: int
    is_compact: bool
    model: BlpModel
    penalties: list
    weights: dict

    def decode(self, bits) -> dict:
        """Original-variable assignment from a QUBO solution vector."""
        full = self.qubo.assignment(bits)
        return {v: full[v] for v in self.model.variables}

    def objective_value(self, bits):
        """Objective of the decoded point, in the model's own sense."""
        return self.model.objective_value(self.decode(bits))

    def is_feasible(self, bits) -> bool:
        return self.model.is_feasible(self.decode(bits))


def _finish(name, poly, rule, fac, anc, steps, report) -> ConstraintPenalty:
    if poly.degree > 2:
        raise PipelineError(f"{name}: penalty of degree {poly.degree} after reduction")
    red, r2 = multilinear_reduce(poly)
    return ConstraintPenalty(name, red, rule, Fraction(fac) * r2, list(anc), list(steps), report)


def _mlcts_constraint(c: TwoSidedConstraint, cfg: PipelineConfig, alloc: AncillaAllocator):
    r = refine_and_classify(c)
    rep = r.to_dict()
    if r.sidedness == lv.VACUOUS:
        log.warning("constraint %s is satisfied by every point; dropped", c.name)
        return None
    root = (cfg.lemma3_root or {}).get(c.name)
    pt = synthesize(r, root, cfg.use_table1)
    if pt.poly.degree <= 2:
        return _finish(c.name, pt.poly, pt.rule, pt.factored_r, [], [], rep)
    v = cfg.variant
    if v is Variant.MLCTS_TR4_1:
        pairs = (cfg.rosenberg_pairs or {}).get(c.name)
        res = tr4_1_rosenberg(pt.poly, alloc, pairs, cfg.rosenberg_weight, source=c.name)
        return _finish(c.name, res.combined, pt.rule + "+TR4.1", pt.factored_r, res.ancillaries, res.steps, rep)
    if v is Variant.MLCTS_TR4_2:
        res = tr4_2_min_selection(pt.poly, alloc, source=c.name)
        return _finish(c.name, res.poly, pt.rule + "+TR4.2", pt.factored_r, res.ancillaries, res.steps, rep)
    if v is Variant.MLCTS_TR0_1_TR6_1:
        lr = tr6_1(r, alloc)
        return _finish(c.name, lr.penalty, "TR0.1+TR6.1", 1, lr.ancillaries, [lr.step], rep)
    if v is Variant.MLCTS_TR0_2N_TR6_2:
        lr = tr6_2(r, alloc)
        return _finish(c.name, lr.penalty, "TR0.2n+TR6.2", 1, lr.ancillaries, [lr.step], rep)
    raise ValueError(f"variant {v} is not a multilevel variant")


def _square(eq: TwoSidedConstraint) -> Polynomial:
    h = eq.expr.to_polynomial() - eq.lo
    return multilinear_reduce(h * h)[0]


def _slack_cap(bits: Sequence[str], W: int, name: str):
    """Penalty for ``sum(2**t s_t) <= W`` if it is quadratic, else None."""
    cap = TwoSidedConstraint(LinearExpression({s: 1 << t for t, s in enumerate(bits)}), None, W, f"{name}.cap")
    pt = synthesize(refine_and_classify(cap))
    return pt.poly if pt.poly.degree <= 2 else None


def _cts_constraint(c: TwoSidedConstraint, cfg: PipelineConfig, alloc: AncillaAllocator):
    r = refine_and_classify(c)
    rep = r.to_dict()
    if r.sidedness == lv.VACUOUS:
        log.warning("constraint %s is satisfied by every point; dropped", c.name)
        return None
    if r.k == 1:
        pt = vip_equality(r)
        return _finish(c.name, pt.poly, pt.rule, pt.factored_r, [], [], rep)
    integral = all(Fraction(a).denominator == 1 for a in list(r.expr.terms.values()) + [r.lo, r.hi])
    if not integral:
        ex = tr0_1(r, alloc)
        poly = sum((_square(e) for e in ex.constraints), Polynomial.zero())
        return _finish(c.name, poly, "TR0.1+TR1", 1, ex.ancillaries, [ex.step], rep)
    W = int(r.hi - r.lo)
    n_prime = W.bit_length()
    two_sided = r.lo != r.H[0] and r.hi != r.H[-1]
    over_wide = (1 << n_prime) - 1 > W
    if two_sided and over_wide and _slack_cap([f"_t{t}" for t in range(n_prime)], W, c.name) is None:
        # the cap on the slack bits would not be quadratic: use the exact-range expansion
        ex = tr0_2n(r, alloc)
        return _finish(c.name, _square(ex.constraints[0]), "TR0.2n+TR1", 1, ex.ancillaries, [ex.step], rep)
    ex = tr0_2(r, alloc)
    poly = _square(ex.constraints[0])
    rule = "TR0.2+TR1"
    if ex.harmful:
        cap = _slack_cap(ex.ancillaries, W, c.name)
        poly = poly + cap
        rule += "+slack-cap"
        ex.step.params["slack_cap"] = str(cap)
    return _finish(c.name, poly, rule, 1, ex.ancillaries, [ex.step], rep)


def synthesize_model(m: BlpModel, cfg: Optional[PipelineConfig] = None) -> Synthesis:
    """Build every constraint's unweighted penalty (equalities are squared in both schemes)."""
    cfg = cfg or PipelineConfig()
    alloc = AncillaAllocator(m.variables)
    out, dropped = [], []
    handler = _cts_constraint if cfg.variant is Variant.CTS else _mlcts_constraint
    for c in m.constraints:
        if c.is_equality:
            r = refine_and_classify(c)
            if r.sidedness == lv.VACUOUS:
                dropped.append(c.name)
                continue
            pt = vip_equality(c)
            out.append(_finish(c.name, pt.poly, pt.rule, pt.factored_r, [], [], r.to_dict()))
            continue
        cp = handler(c, cfg, alloc)
        if cp is None:
            dropped.append(c.name)
        else:
            out.append(cp)
    return Synthesis(m, cfg, out, alloc, dropped)


def auto_weight(m: BlpModel) -> Fraction:
    """``1 + sum|c_j| + |c_0|`` of the objective.

    Penalties have integer coefficients, so a violated constraint costs at
    least the weight, which exceeds any change of the objective.
    """
    return to_number(1 + sum(abs(c) for c in m.objective.terms.values()) + abs(m.objective_constant))


def choose_penalties(m: BlpModel, synth: Synthesis, mode="auto") -> dict:
    """Weights per constraint name for the given mode."""
    names = [p.name for p in synth.penalties]
    if not names:
        return {}
    if isinstance(mode, Mapping):
        missing = [n for n in names if n not in mode]
        if missing:
            raise ValueError(f"no weight given for constraints {missing}")
        return {n: to_number(mode[n]) for n in names}
    if mode == "auto":
        w = auto_weight(m)
        return {n: w for n in names}
    if mode == "search":
        from .verify import minimal_lambda

        dim = len(m.variables) + len(synth.ancillaries)
        if dim > 24:
            raise ValueError(f"search mode needs at most 24 variables (got {dim}); use auto or a fixed weight")
        cfg = synth.config
        return minimal_lambda(
            m,
            cfg.variant,
            lemma3_root=cfg.lemma3_root,
            use_table1=cfg.use_table1,
            rosenberg_weight=cfg.rosenberg_weight,
            rosenberg_pairs=cfg.rosenberg_pairs,
        )
    w = to_number(mode)
    return {n: w for n in names}


def assemble(m: BlpModel, synth: Synthesis, weights: Mapping[str, object], decode: Optional[dict] = None) -> CompiledQubo:
    """Objective (minimization form) plus weighted penalties, lowered to a QUBO."""
    F = m.min_objective()
    entries = []
    for p in synth.penalties:
        w = to_number(weights[p.name])
        F = F + p.poly * w
        e = p.to_dict()
        e["weight"] = str(w)
        entries.append(e)
    if F.degree > 2:
        raise PipelineError("assembled objective has degree > 2")
    anc = synth.ancillaries
    order = list(m.variables) + anc
    kinds = ["original"] * len(m.variables) + ["ancillary"] * len(anc)
    meta = {"originals": list(m.variables), "sense": m.sense, "model": m.name}
    meta.update(decode or {})
    qubo = to_qubo(F, order, kinds, meta)
    trace = TransformTrace(synth.config.variant.value, entries, list(synth.dropped))
    return CompiledQubo(
        qubo, trace, compact_certificate(m), len(anc), not anc, m, list(synth.penalties), dict(weights)
    )


def compile_model(m: BlpModel, cfg: Optional[PipelineConfig] = None) -> CompiledQubo:
    cfg = cfg or PipelineConfig()
    synth = synthesize_model(m, cfg)
    return assemble(m, synth, choose_penalties(m, synth, cfg.penalty_mode))


def mlcts(m: BlpModel, cfg: Optional[PipelineConfig] = None) -> CompiledQubo:
    """Multilevel scheme; ``cfg.variant`` picks the reduction for high-degree penalties."""
    cfg = cfg or PipelineConfig()
    if cfg.variant is Variant.CTS:
        raise ValueError("mlcts needs a multilevel variant; use cts() for the conventional scheme")
    return compile_model(m, cfg)


def cts(m: BlpModel, cfg: Optional[PipelineConfig] = None) -> CompiledQubo:
    """Conventional scheme: slack expansion for every inequality, then squaring."""
    cfg = PipelineConfig(**{**(cfg.__dict__ if cfg else {}), "variant": Variant.CTS})
    return compile_model(m, cfg)
