"""Orchestration of the verification tasks, random sweeps and reports."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import linalg
from .config import TASKS, RunConfig
from .curvature import (
    LocalGeometry,
    classify_ecs,
    olszak_distribution,
    ricci_identity_residual,
    riemann_symmetry_residual,
    trace_residual,
)
from .homogeneity import (
    NoWitness,
    build_homogeneous_witness,
    canonicalize_model,
    detect_canonical,
    homogeneity_criterion,
)
from .model import (
    ChartPoint,
    ModelData,
    christoffels_closed,
    make_model,
    make_point,
    metric_signature,
    sample_interior,
)
from .scalar import EXACT, FLOAT, EcsLabError, eval_jet, float_tolerance, format_scalar, parse_f
from .symmetry import (
    INCONCLUSIVE,
    INFINITE,
    TRIVIAL,
    DeckGroup,
    FFunction,
    IsometryWitness,
    NonzeroPeriodError,
    SampledFunctionSpace,
    basis_construct,
    check_equivariance,
    construct_invariant_primitive,
    gradient_t_multiplier,
    holonomy_group,
    period_integral,
    standard_members,
    verify_isometry,
)

SCHEMA = "ecs-lab-report/1"
PASS, FAIL, ERROR = "pass", "fail", "error"
PERIOD_TOL = 1e-10
NABLA_W_FLOAT_TOL = 1e-8


def jsonable(value):
    """Convert scalars and containers into JSON-friendly values."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, Fraction):
        return format_scalar(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return float(f"{value:.12g}")
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return str(value)


@dataclass
class Check:
    name: str
    identity: str
    value: object
    tolerance: object
    passed: bool

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "identity": self.identity,
            "value": jsonable(self.value),
            "tolerance": jsonable(self.tolerance),
            "pass": self.passed,
        }


@dataclass
class Section:
    name: str
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def status(self) -> str:
        if self.error is not None:
            return ERROR
        return PASS if all(c.passed for c in self.checks) else FAIL

    def zero(self, name: str, identity: str, value, mode: str, tol=None) -> Check:
        """Record ``value == 0`` (exact) or ``|value| <= tol`` (float)."""
        if mode == EXACT:
            check = Check(name, identity, value, 0, value == 0)
        else:
            tol = float_tolerance() if tol is None else tol
            check = Check(name, identity, float(value), tol, abs(value) <= tol)
        self.checks.append(check)
        return check

    def expect(self, name: str, identity: str, value, wanted) -> Check:
        check = Check(name, identity, value, wanted, value == wanted)
        self.checks.append(check)
        return check

    def assert_true(self, name: str, identity: str, flag: bool, value=None) -> Check:
        check = Check(name, identity, flag if value is None else value, "true", bool(flag))
        self.checks.append(check)
        return check

    def as_dict(self) -> dict:
        out = {
            "status": self.status,
            "checks": [c.as_dict() for c in self.checks],
            "results": jsonable(self.results),
        }
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass
class Report:
    title: str
    sections: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return PASS if all(s.status == PASS for s in self.sections.values()) else FAIL

    @property
    def exit_code(self) -> int:
        return 0 if self.status == PASS else 1

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "title": self.title,
            "status": self.status,
            "meta": jsonable(self.meta),
            "sections": {k: s.as_dict() for k, s in self.sections.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self, runtime: float | None = None) -> str:
        lines = [f"== {self.title} ==", f"overall: {self.status.upper()}"]
        for key in sorted(self.meta):
            lines.append(f"  {key}: {jsonable(self.meta[key])}")
        for name, sec in self.sections.items():
            lines.append("")
            lines.append(f"[{name}] {sec.status.upper()}")
            if sec.error:
                lines.append(f"  error: {sec.error}")
            for c in sec.checks:
                mark = "ok  " if c.passed else "FAIL"
                lines.append(f"  {mark} {c.name}: {jsonable(c.value)} (tol {jsonable(c.tolerance)})  [{c.identity}]")
            for key in sorted(sec.results):
                text = json.dumps(jsonable(sec.results[key]), sort_keys=True)
                if len(text) > 160:
                    text = text[:157] + "..."
                lines.append(f"  {key}: {text}")
        if runtime is not None:
            lines.append("")
            lines.append(f"runtime: {runtime:.2f} s")
        return "\n".join(lines) + "\n"


# -- sampling --------------------------------------------------------------------


def _rand_rational(rng: random.Random, lo, hi, den: int) -> Fraction:
    lo, hi = Fraction(lo), Fraction(hi)
    a, b = math.ceil(lo * den), math.floor(hi * den)
    return Fraction(rng.randint(a, b), den)


def _t_range(model: ModelData, spec_t):
    if spec_t is not None:
        return spec_t
    pts = sample_interior(model.lo, model.hi, 2)
    lo = model.lo if model.lo != -math.inf else pts[0] - 2
    hi = model.hi if model.hi != math.inf else pts[-1] + 2
    return Fraction(lo), Fraction(hi)


def sample_points(model: ModelData, spec, seed: int, mode: str = EXACT) -> list[ChartPoint]:
    """Seeded rational chart points; ``t`` strictly inside the sampled range."""
    rng = random.Random(seed)
    den = spec.denominator
    lo, hi = _t_range(model, spec.t)
    ts = list(spec.t_values)
    while len(ts) < max(spec.count, len(spec.t_values)):
        t = _rand_rational(rng, lo, hi, den)
        if lo < t < hi and model.contains(t):
            ts.append(t)
    pts = []
    for t in ts:
        s = _rand_rational(rng, *spec.s, den)
        x = tuple(_rand_rational(rng, *spec.x, den) for _ in range(model.dim_v))
        pts.append(make_point(model, t, s, x, mode))
    return pts


def effective_mode(model: ModelData, mode: str) -> str:
    return mode if model.exact_only else FLOAT


# -- tasks ---------------------------------------------------------------------------


def _max(values, zero):
    return max(values, default=zero)


def run_verify(model: ModelData, points: list[ChartPoint], mode: str, section: Section | None = None) -> Section:
    """Curvature identities at each point, folded into per-identity maxima."""
    sec = section or Section("verify")
    zero = Fraction(0) if mode == EXACT else 0.0
    acc = {k: zero for k in ("christoffel", "ricci", "scalar", "symmetry", "bianchi", "weyl_trace", "nabla_w", "nabla_g")}
    sig_ok = True
    for p in points:
        geom = LocalGeometry(model, p, order=3)
        gen = geom.value("christoffel").components
        closed = christoffels_closed(model, p)
        keys = set(gen) | set(closed)
        acc["christoffel"] = max(acc["christoffel"], _max((abs(gen.get(k, 0) - closed.get(k, 0)) for k in keys), zero))
        acc["ricci"] = max(acc["ricci"], ricci_identity_residual(model, geom.value("ricci"), p))
        acc["scalar"] = max(acc["scalar"], abs(geom.scalar_curvature.value(zero)))
        sym = riemann_symmetry_residual(geom.value("riemann"))
        acc["symmetry"] = max(acc["symmetry"], sym["antisym_first"], sym["antisym_last"], sym["pair_exchange"])
        acc["bianchi"] = max(acc["bianchi"], sym["bianchi"])
        traces = trace_residual(geom.value("weyl"), geom.inverse.at_point(model.n).dense())
        acc["weyl_trace"] = max(acc["weyl_trace"], _max(traces.values(), zero))
        acc["nabla_w"] = max(acc["nabla_w"], geom.covariant_derivative(geom.weyl).max_abs())
        acc["nabla_g"] = max(acc["nabla_g"], geom.covariant_derivative(geom.metric).max_abs())
        plus, minus = model.inner.signature
        sig_ok = sig_ok and metric_signature(model, p) == (plus + 1, minus + 1)
    sec.zero("christoffel_cross_check", "closed-form Christoffels = Levi-Civita Christoffels", acc["christoffel"], mode)
    sec.zero("ricci_identity", "Ric = (2-n) f dt (x) dt", acc["ricci"], mode)
    sec.zero("scalar_curvature", "scalar curvature = 0", acc["scalar"], mode)
    sec.zero("riemann_symmetries", "R_abcd = -R_bacd = -R_abdc = R_cdab", acc["symmetry"], mode)
    sec.zero("first_bianchi", "R_abcd + R_acdb + R_adbc = 0", acc["bianchi"], mode)
    sec.zero("weyl_traces", "g^pq W_..p..q.. = 0", acc["weyl_trace"], mode)
    sec.zero("parallel_weyl", "nabla W = 0", acc["nabla_w"], mode, NABLA_W_FLOAT_TOL)
    sec.zero("metric_compatibility", "nabla g = 0", acc["nabla_g"], mode)
    sec.assert_true("signature_law", "signature(g) = signature(G) + (1, 1)", sig_ok)
    sec.results["points"] = len(points)
    return sec


def run_classify(model: ModelData, points: list[ChartPoint], mode: str, expect: dict, section: Section | None = None) -> Section:
    sec = section or Section("classify")
    tol = None if mode == EXACT else float_tolerance()
    verdict = classify_ecs(model, points, tol)
    ranks, dperp, dn = [], [], []
    for p in points:
        rep = olszak_distribution(model, p, tol=tol)
        ranks.append(rep.rank)
        if rep.rank == 1:
            dperp.append(rep.dperp_check)
            dn.append(rep.dn_check)
    sec.results.update(
        {
            "conformally_flat": verdict.conformally_flat,
            "is_ecs": verdict.is_ecs,
            "locally_symmetric_locus": verdict.locally_symmetric_locus,
            "nabla_r_zero": verdict.nabla_r_zero,
            "olszak_rank": verdict.olszak_rank,
            "olszak_ranks": ranks,
            "quantifiers": verdict.note,
        }
    )
    sec.assert_true("olszak_rank_range", "dim D in {0, 1, 2}", all(r in (0, 1, 2) for r in ranks), ranks)
    if dperp:
        zero = Fraction(0) if mode == EXACT else 0.0
        sec.zero("olszak_dperp", "D-perp = Ker dt", max((v for v in dperp if v is not None), default=zero), mode)
        sec.assert_true("olszak_dn", "D spanned by d_n", all(v is not None for v in dn) and all(v == 0 or (tol and abs(v) <= tol) for v in dn), dn)
    sec.expect(
        "local_symmetry_locus",
        "nabla R = 0 exactly where f' = 0",
        verdict.nabla_r_zero,
        verdict.locally_symmetric_locus,
    )
    names = {"is_ecs": verdict.is_ecs, "conformally_flat": verdict.conformally_flat, "olszak_rank": verdict.olszak_rank}
    for key, value in names.items():
        if key in expect:
            want = expect[key]
            sec.expect(f"expected_{key}", "configured expectation", value, int(want) if key == "olszak_rank" else want)
    if "locally_symmetric" in expect:
        everywhere = len(verdict.nabla_r_zero) == len({p.t for p in points})
        sec.expect("expected_locally_symmetric", "nabla R = 0 at every sample", everywhere, expect["locally_symmetric"])
    return sec


def _time_samples(points: list[ChartPoint]) -> list:
    return sorted({p.t for p in points})


def run_homogeneity(cfg: RunConfig, points: list[ChartPoint], mode: str, section: Section | None = None) -> Section:
    sec = section or Section("homogeneity")
    model = cfg.model
    ts = _time_samples(points)
    interval = (model.lo, model.hi)
    verdict = homogeneity_criterion(model.f, interval, ts, mode)
    float_verdict = homogeneity_criterion(model.f, interval, [float(t) for t in ts], FLOAT)
    sec.results["verdict"] = verdict.as_dict()
    sec.assert_true("ii_implies_iii", "criterion (ii) => criterion (iii)", verdict.criterion_iii or not verdict.criterion_ii)
    sec.assert_true(
        "canonical_implies_iii", "f = eps (t-b)^-2 => (|f|^-1/2)'' = 0", verdict.canonical is None or verdict.criterion_iii
    )
    sec.expect(
        "mode_stability",
        "exact and float verdicts agree",
        (float_verdict.criterion_ii, float_verdict.criterion_iii),
        (verdict.criterion_ii, verdict.criterion_iii),
    )
    if "criterion_ii" in cfg.expect:
        sec.expect("expected_criterion_ii", "configured expectation", verdict.criterion_ii, cfg.expect["criterion_ii"])
    witnesses = {}
    if verdict.canonical is not None:
        target = model
        if verdict.canonical[1] != 0:
            target, shift = canonicalize_model(model)
            sec.results["canonical_shift"] = shift
        nilpotent = linalg.is_nilpotent(model.a_matrix)
        definite = model.inner.definite
        successes = []
        for q in cfg.witness_q:
            w = build_homogeneous_witness(target, q)
            if isinstance(w, NoWitness):
                witnesses[format_scalar(q)] = {"reason": w.reason, "detail": w.detail}
                continue
            witnesses[format_scalar(q)] = w.as_dict()
            if q != 1:
                successes.append(q)
            pts = [p for p in points if target.contains(p.t) and target.contains(w.act_t(p.t))]
            if pts:
                exact_pts = [p if mode == EXACT else p.in_mode(EXACT) for p in pts]
                sec.zero(f"witness_q={format_scalar(q)}_pullback", "gamma^* g = g", verify_isometry(target, w, exact_pts), EXACT)
        sec.assert_true("lemma_nilpotency", "dilation witness with q != 1 => A nilpotent", not successes or nilpotent)
        if definite:
            sec.assert_true("lorentzian_non_homogeneity", "definite G => no witness for q != 1", not successes)
        if "witness" in cfg.expect:
            nontrivial = [q for q in cfg.witness_q if q != 1]
            got = bool(nontrivial) and len(successes) == len(nontrivial)
            sec.expect("expected_witness", "configured expectation", got, cfg.expect["witness"])
    elif cfg.expect.get("witness"):
        sec.expect("expected_witness", "configured expectation", False, True)
    sec.results["witnesses"] = witnesses
    sec.results["label"] = "criterion (compactness not assumed)"
    return sec


def _generator_points(model: ModelData, w: IsometryWitness, points: list[ChartPoint]) -> list[ChartPoint]:
    return [p for p in points if model.contains(w.act_t(p.t))]


def run_holonomy(cfg: RunConfig, points: list[ChartPoint], section: Section | None = None) -> Section:
    sec = section or Section("holonomy")
    model = cfg.model
    deck = cfg.deck or DeckGroup(())
    for i, g in enumerate(deck.generators):
        pts = [p.in_mode(EXACT) for p in _generator_points(model, g, points)]
        if not pts:
            sec.assert_true(f"generator_{i}_samples", "some sample maps into I", False)
            continue
        sec.zero(f"generator_{i}_isometry", "gamma^* g = g", verify_isometry(model, g, pts), EXACT)
        k = gradient_t_multiplier(model, g, pts[0])
        sec.expect(f"generator_{i}_gradient", "gamma^* w = q w for w = grad t", k, g.q)
        sec.expect(f"generator_{i}_s_factor", "s-factor 1/q inverts the t-factor q", g.q * (1 / g.q), 1)
    t0 = cfg.t0 if cfg.t0 is not None else points[0].t
    result = holonomy_group(deck, Fraction(t0), cfg.max_word_length, (model.lo, model.hi))
    sec.results.update(
        {
            "t0": t0,
            "multipliers": list(result.multipliers),
            "classification": result.classification,
            "certificate": result.certificate,
            "words": result.words,
            "max_word_length": cfg.max_word_length,
        }
    )
    sec.assert_true(
        "dichotomy", "holonomy is trivial or infinite", result.classification in (TRIVIAL, INFINITE, INCONCLUSIVE), result.classification
    )
    if "holonomy" in cfg.expect:
        sec.expect("expected_holonomy", "configured expectation", result.classification, cfg.expect["holonomy"])
    return sec


def _function_witnesses(cfg: RunConfig) -> list:
    if cfg.deck and cfg.deck.generators:
        return list(cfg.deck.generators)
    model = cfg.model
    canon = detect_canonical(model.f, (model.lo, model.hi))
    if canon is not None and canon[1] == 0:
        w = build_homogeneous_witness(model, Fraction(2))
        if isinstance(w, IsometryWitness):
            return [w]
    return []


def run_functions(cfg: RunConfig, points: list[ChartPoint], section: Section | None = None) -> Section:
    sec = section or Section("functions")
    model = cfg.model
    witnesses = _function_witnesses(cfg)
    members = {k: v for k, v in standard_members(model).items()}
    for text in cfg.chi:
        members[text] = FFunction(parse_f(text), text)
    per_gen = []
    for i, w in enumerate(witnesses):
        ts = [p.t for p in _generator_points(model, w, points)]
        entry = {"q": w.q, "p": w.p, "laws": {}, "periods": {}}
        for law in check_equivariance(model, w, ts):
            entry["laws"][law.law] = law.residual
            sec.checks.append(Check(f"generator_{i}: {law.law}", law.law, law.residual, law.tolerance or 0, law.ok))
        t0 = cfg.t0 if cfg.t0 is not None else ts[0] if ts else points[0].t
        for label, chi in members.items():
            try:
                period = period_integral(chi, w, t0)
            except EcsLabError as exc:
                entry["periods"][label] = {"error": str(exc)}
                continue
            item = {"period": period, "class_vanishes": abs(period) <= PERIOD_TOL}
            if item["class_vanishes"]:
                try:
                    prim = construct_invariant_primitive(chi, w, t0)
                    item.update({"invariance_residual": prim.residual, "nonconstant": prim.nonconstant})
                    sec.checks.append(
                        Check(f"generator_{i}: mu({label}) o gamma = mu", "mu o gamma = mu", prim.residual, 1e-9, prim.residual <= 1e-9)
                    )
                except NonzeroPeriodError as exc:
                    item["error"] = str(exc)
            entry["periods"][label] = item
        per_gen.append(entry)
    sec.results["generators"] = per_gen
    if len(witnesses) > 1:
        sec.results["note"] = "classes tested per generator; joint vanishing over the whole group is not certified"
    if not witnesses:
        sec.results["note"] = "no deck generators or homogeneous witness: nothing to test"
    return sec


def random_function_space(rng: random.Random, max_m: int = 5, max_x: int = 12) -> tuple[SampledFunctionSpace, list]:
    """Random abs-closed space: disjointly supported positive vectors, then mixed.

    Returns the space and the hidden blocks (lists of labels).
    """
    size = rng.randint(1, max_x)
    m = rng.randint(1, min(max_m, size))
    labels = list(range(1, size + 1))
    order = labels[:]
    rng.shuffle(order)
    cuts = sorted(rng.sample(range(1, size + 1), m))
    blocks, start = [], 0
    for c in cuts:
        blocks.append(order[start:c])
        start = c
    hidden = [[] for _ in range(m)]
    vectors = []
    for j, block in enumerate(blocks):
        if not block:
            block.append(order[-1])
        hidden[j] = sorted(block)
        vectors.append([Fraction(rng.randint(1, 9), rng.randint(1, 4)) if x in block else Fraction(0) for x in labels])
    while True:
        mix = [[Fraction(rng.randint(-3, 3)) for _ in range(m)] for _ in range(m)]
        if linalg.determinant(mix) != 0:
            break
    basis = [[sum(mix[i][j] * vectors[j][x] for j in range(m)) for x in range(size)] for i in range(m)]
    return SampledFunctionSpace(labels, basis), hidden


def basis_properties(space: SampledFunctionSpace, result) -> dict:
    """The four properties of a constructed basis, each as a bool."""
    labels = space.labels
    pos = neg = True
    for chi, block in zip(result.basis, result.partition):
        inside = [chi[labels.index(x)] for x in block]
        outside = [chi[i] for i, x in enumerate(labels) if x not in block]
        pos = pos and bool(inside) and min(inside) > 0
        neg = neg and all(v == 0 for v in outside)
    flat = [x for b in result.partition for x in b]
    partition = len(flat) == len(set(flat)) and set(flat) | set(result.x0) == set(labels) and not set(flat) & set(result.x0)
    invertible = linalg.rank([list(r) for r in result.evaluation]) == len(result.basis)
    return {"positive_on_block": pos, "zero_off_block": neg, "partition": partition, "evaluation_invertible": invertible}


def run_basis_demo(count: int, seed: int, section: Section | None = None) -> Section:
    sec = section or Section("basis-demo")
    rng = random.Random(seed)
    ok = {"positive_on_block": True, "zero_off_block": True, "partition": True, "evaluation_invertible": True}
    sizes = []
    for _ in range(count):
        space, _ = random_function_space(rng)
        result = basis_construct(space)
        props = basis_properties(space, result)
        for k in ok:
            ok[k] = ok[k] and props[k]
        sizes.append([len(space.labels), space.dim])
    identities = {
        "positive_on_block": "chi_j > 0 on X_j",
        "zero_off_block": "chi_j = 0 off X_j",
        "partition": "X_j partition X minus X_0",
        "evaluation_invertible": "evaluations at x_1..x_m invertible",
    }
    for k, flag in ok.items():
        sec.assert_true(k, identities[k], flag)
    sec.results["spaces"] = sizes
    return sec


def _guard(section: Section, fn, *args):
    try:
        fn(*args, section=section)
    except EcsLabError as exc:
        section.error = f"{type(exc).__name__}: {exc}"
    return section


def run_suite(cfg: RunConfig, tasks=None, mode: str | None = None, seed: int | None = None) -> Report:
    """Run the selected tasks; a failing task is recorded without stopping the others."""
    tasks = list(tasks or cfg.tasks)
    mode = effective_mode(cfg.model, mode or cfg.mode)
    seed = cfg.seed if seed is None else seed
    model = cfg.model
    report = Report(
        f"ecs-lab report: {model.name or cfg.source or 'model'}",
        meta={
            "source": cfg.source,
            "model": model_summary(model),
            "mode": mode,
            "seed": seed,
            "tasks": tasks,
            "tolerance": 0 if mode == EXACT else float_tolerance(),
        },
    )
    points = sample_points(model, cfg.samples, seed, mode)
    runners = {
        "verify": lambda section: run_verify(model, points, mode, section),
        "classify": lambda section: run_classify(model, points, mode, cfg.expect, section),
        "homogeneity": lambda section: run_homogeneity(cfg, points, mode, section),
        "holonomy": lambda section: run_holonomy(cfg, points, section),
        "functions": lambda section: run_functions(cfg, points, section),
        "basis-demo": lambda section: run_basis_demo(cfg.basis_demos, seed, section),
    }
    for task in TASKS:
        if task in tasks:
            report.sections[task] = _guard(Section(task), lambda section, t=task: runners[t](section))
    return report


def model_summary(model: ModelData) -> dict:
    return {
        "name": model.name,
        "n": model.n,
        "gram": model.gram,
        "A": model.a_matrix,
        "f": model.f_text or str(model.f),
        "interval": [model.lo, model.hi],
        "signature": list(model.inner.signature),
        "probe": model.probe,
    }


# -- random sweeps --------------------------------------------------------------------


class SweepGenerationError(EcsLabError):
    pass


SWEEP_WINDOW = (Fraction(1, 2), Fraction(3))
RETRY_CAP = 200


def _random_gram(rng: random.Random, m: int) -> list:
    d = [Fraction(rng.choice([-3, -2, -1, 1, 2, 3])) for _ in range(m)]
    p = [[Fraction(1) if i == j else (Fraction(rng.randint(-1, 1)) if j > i else Fraction(0)) for j in range(m)] for i in range(m)]
    dm = [[d[i] if i == j else Fraction(0) for j in range(m)] for i in range(m)]
    return linalg.matmul(linalg.matmul(linalg.transpose(p), dm), p)


def _random_endomorphism(rng: random.Random, gram: list) -> list:
    m = len(gram)
    s = [[Fraction(0)] * m for _ in range(m)]
    for i in range(m):
        for j in range(i, m):
            s[i][j] = s[j][i] = Fraction(rng.randint(-3, 3))
    ginv = linalg.inverse(gram)
    c = linalg.trace(linalg.matmul(ginv, s)) / m
    s = linalg.matsub(s, linalg.scale(gram, c))
    return linalg.matmul(ginv, s)


def _random_f(rng: random.Random) -> str:
    exps = [1, 2, 3, -1, -2]
    k = rng.choice(exps)
    a = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 2]))
    terms = [f"({a})*t^({k})"]
    if rng.random() < 0.5:
        j = rng.choice([e for e in exps if e != k])
        sign = 1 if (a * k > 0) == (j > 0) else -1
        b = sign * Fraction(rng.randint(1, 3), rng.choice([1, 2, 3]))
        terms.append(f"({b})*t^({j})")
    c = Fraction(rng.randint(-2, 2), rng.choice([1, 2]))
    if c:
        terms.append(f"({c})")
    return " + ".join(terms)


def random_model(rng: random.Random, n: int, min_rank: int = 2) -> ModelData:
    """Admissible model with rational data, ``rank(A) >= min_rank`` and ``f' != 0`` on the window."""
    m = n - 2
    for _ in range(RETRY_CAP):
        gram = _random_gram(rng, m)
        a = _random_endomorphism(rng, gram)
        if linalg.rank(a) < min(min_rank, m):
            continue
        text = _random_f(rng)
        f = parse_f(text)
        probe = [SWEEP_WINDOW[0] + (SWEEP_WINDOW[1] - SWEEP_WINDOW[0]) * Fraction(k, 8) for k in range(9)]
        if any(eval_jet(f, t).d(1) == 0 for t in probe):
            continue
        return make_model(n, gram, a, f, (0, math.inf), f_text=text, name=f"random n={n}")
    raise SweepGenerationError(f"no admissible model for n = {n} after {RETRY_CAP} attempts")


@dataclass
class SweepModel:
    model: ModelData
    points: list


def sweep_models(count: int, dims, seed: int, points_per_model: int = 3, mode: str = EXACT) -> list[SweepModel]:
    """``count`` models per dimension with seeded rational sample points."""
    rng = random.Random(seed)
    out = []
    for n in sorted(dims):
        if not 4 <= n <= 8:
            raise ValueError(f"sweep dimension {n} outside 4..8")
        for _ in range(count):
            model = random_model(rng, n)
            pts = []
            for _ in range(points_per_model):
                t = _rand_rational(rng, *SWEEP_WINDOW, 24)
                while not SWEEP_WINDOW[0] < t < SWEEP_WINDOW[1]:
                    t = _rand_rational(rng, *SWEEP_WINDOW, 24)
                s = _rand_rational(rng, -2, 2, 12)
                x = tuple(_rand_rational(rng, -2, 2, 12) for _ in range(model.dim_v))
                pts.append(make_point(model, t, s, x, mode))
            out.append(SweepModel(model, pts))
    return out


def random_model_sweep(count: int, dims, seed: int, points_per_model: int = 3, mode: str = EXACT) -> Report:
    """Verify and classify ``count`` random models per dimension; aggregate the checks."""
    dims = sorted(set(dims))
    report = Report(
        "ecs-lab sweep",
        meta={"count": count, "dims": dims, "seed": seed, "mode": mode, "points_per_model": points_per_model},
    )
    verify = Section("verify")
    classify = Section("classify")
    try:
        models = sweep_models(count, dims, seed, points_per_model, mode)
    except EcsLabError as exc:
        verify.error = f"{type(exc).__name__}: {exc}"
        report.sections["verify"] = verify
        return report
    per_model = []
    for sm in models:
        v = run_verify(sm.model, sm.points, mode)
        c = run_classify(sm.model, sm.points, mode, {})
        per_model.append(
            {
                "n": sm.model.n,
                "f": sm.model.f_text,
                "verify": v.status,
                "classify": c.status,
                "olszak_rank": c.results["olszak_rank"],
                "is_ecs": c.results["is_ecs"],
            }
        )
        _fold(verify, v)
        _fold(classify, c)
    for sec in (verify, classify):
        sec.results["models"] = len(models)
        report.sections[sec.name] = sec
    report.sections["verify"].results["per_model"] = per_model
    return report


def _fold(total: Section, part: Section) -> None:
    """Merge ``part`` into ``total`` keeping the worst value per check name."""
    existing = {c.name: c for c in total.checks}
    for c in part.checks:
        old = existing.get(c.name)
        if old is None:
            new = Check(c.name, c.identity, c.value, c.tolerance, c.passed)
            total.checks.append(new)
            existing[c.name] = new
            continue
        old.passed = old.passed and c.passed
        if isinstance(c.value, (int, float, Fraction)) and not isinstance(c.value, bool):
            if isinstance(old.value, (int, float, Fraction)) and not isinstance(old.value, bool):
                old.value = max(old.value, c.value)
        elif not c.passed:
            old.value = c.value
