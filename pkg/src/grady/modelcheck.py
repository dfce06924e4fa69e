"""Finite-model checks of the graded monad liftings behind the instances.

Predicates are subsets of small label sets (truth values in 2).  A lifting
assigns to a grade ``m`` and a predicate ``P`` on ``X`` the predicate
``T_m P`` on the monad's carrier ``T X``.  Three monads are modelled:

* cost: ``T X = X x {0, 1, 2, inf}`` with capped addition and
  ``T_m P = {(x, n) | x in P, n <= m}``;
* writer: ``T X = X x words`` over push/pop (words of length <= 3 at each
  level) graded by stack languages, ``T_L P = {(x, w) | x in P, w in L}``;
* distributions with probabilities in {0, 1/2, 1}, graded by failure bounds,
  ``T_e P = {d | d(X \\ P) <= e}``.

Every check is an exhaustive loop and returns a :class:`LawReport` whose
witness (if any) is plain JSON data.  Mutant liftings serve as negative
controls; each one is expected to fail the law named in ``MUTANTS``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .effects import Lang, StackAtom, lang_le

BOT = "_|_"
LABELS = ("a", "b", "c", "d")


@dataclass(frozen=True)
class FinitePredicate:
    carrier: Tuple[object, ...]
    subset: frozenset

    def __post_init__(self):
        if not self.subset <= frozenset(self.carrier):
            raise ValueError("predicate subset is not contained in its carrier")


@dataclass(frozen=True)
class LiftingSpec:
    """A monad on finite sets together with a graded predicate lifting."""
    name: str
    grades: Tuple[object, ...]
    unit_grade: object
    mul: Callable[[object, object], object]
    leq: Callable[[object, object], bool]
    carrier: Callable[[Sequence[object]], List[object]]
    eta: Callable[[object], object]
    mu: Callable[[object], object]
    fmap: Callable[[Callable, object], object]
    lift: Callable[[object, frozenset, object], bool]
    bottom_eta: Optional[Callable[[object], object]] = None  # image of bottom in T(X + bottom)


@dataclass
class LawReport:
    law: str
    lifting: str
    universe: int
    passed: bool
    checked: int = 0
    witness: Optional[dict] = None

    def to_json(self) -> dict:
        return {"law": self.law, "lifting": self.lifting, "universe": self.universe,
                "passed": self.passed, "checked": self.checked, "witness": self.witness}


def _js(x):
    """JSON-friendly rendering of carrier elements, grades and predicates."""
    if isinstance(x, (frozenset, set)):
        return sorted((_js(i) for i in x), key=repr)
    if isinstance(x, tuple):
        return [_js(i) for i in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Lang):
        return ".".join(f"stack({a.d},{a.m})" if isinstance(a, StackAtom) else a
                        for a in x.atoms) or "1"
    if isinstance(x, _Dist):
        return {"dist": [[_js(e), str(p)] for e, p in x.items]}
    return x


def subsets(xs: Sequence[object]):
    for r in range(len(xs) + 1):
        for c in itertools.combinations(xs, r):
            yield frozenset(c)


# ---------------------------------------------------------------------------
# Cost monad


INF_HAT = "inf"
COST_GRADES = (0, 1, 2, INF_HAT)


def cost_add(a, b):
    if a == INF_HAT or b == INF_HAT:
        return INF_HAT
    s = a + b
    return s if s <= 2 else INF_HAT


def cost_leq(a, b) -> bool:
    return b == INF_HAT or (a != INF_HAT and a <= b)


def _cost_mu(tt):
    (x, n), k = tt
    return (x, cost_add(k, n))


COST = LiftingSpec(
    "cost", COST_GRADES, 0, cost_add, cost_leq,
    carrier=lambda xs: [(x, n) for x in xs for n in COST_GRADES],
    eta=lambda x: (x, 0),
    mu=_cost_mu,
    fmap=lambda f, t: (f(t[0]), t[1]),
    lift=lambda m, P, t: t[0] in P and cost_leq(t[1], m),
    bottom_eta=lambda b: (b, 0),
)

# ---------------------------------------------------------------------------
# Writer monad graded by stack languages

WORDS = tuple(w for n in range(4) for w in itertools.product(("push", "pop"), repeat=n))
WRITER_GRADES = (
    Lang(()), Lang(("push",)), Lang(("pop",)), Lang((StackAtom(0, 1),)),
    Lang((StackAtom(1, 1),)), Lang((StackAtom(0, 2),)), Lang((StackAtom(-1, 0),)),
)


def _writer_leq(a: Lang, b: Lang) -> bool:
    return lang_le(a, b)


WRITER = LiftingSpec(
    "writer", WRITER_GRADES, Lang(()), lambda a, b: Lang(a.atoms + b.atoms), _writer_leq,
    carrier=lambda xs: [(x, w) for x in xs for w in WORDS],
    eta=lambda x: (x, ()),
    mu=lambda tt: (tt[0][0], tt[1] + tt[0][1]),  # the outer word is written first
    fmap=lambda f, t: (f(t[0]), t[1]),
    lift=lambda L, P, t: t[0] in P and L.contains(t[1]),
    bottom_eta=lambda b: (b, ()),
)

# ---------------------------------------------------------------------------
# Distributions


@dataclass(frozen=True)
class _Dist:
    items: Tuple[Tuple[object, Fraction], ...]

    @staticmethod
    def of(pairs) -> "_Dist":
        acc: Dict[object, Fraction] = {}
        for e, p in pairs:
            if p:
                acc[e] = acc.get(e, Fraction(0)) + p
        return _Dist(tuple(sorted(acc.items(), key=lambda kv: repr(kv[0]))))


HALF = Fraction(1, 2)
DIST_GRADES = (Fraction(0), HALF, Fraction(1))


def _dist_carrier(xs):
    out = [_Dist.of([(x, Fraction(1))]) for x in xs]
    out += [_Dist.of([(x, HALF), (y, HALF)]) for x, y in itertools.combinations(xs, 2)]
    return out


def _dist_mu(dd: _Dist) -> _Dist:
    return _Dist.of([(e, p * q) for d, p in dd.items for e, q in d.items])


def _dist_lift(eps, P, d: _Dist) -> bool:
    return sum((p for e, p in d.items if e not in P), Fraction(0)) <= eps


DIST = LiftingSpec(
    "dist", DIST_GRADES, Fraction(0), lambda a, b: min(Fraction(1), a + b), lambda a, b: a <= b,
    carrier=_dist_carrier,
    eta=lambda x: _Dist.of([(x, Fraction(1))]),
    mu=_dist_mu,
    fmap=lambda f, d: _Dist.of([(f(e), p) for e, p in d.items]),
    lift=_dist_lift,
    bottom_eta=lambda b: _Dist.of([(b, Fraction(1))]),
)

LIFTINGS = {s.name: s for s in (COST, WRITER, DIST)}

# ---------------------------------------------------------------------------
# Laws


def _universe(n: int) -> Tuple[str, ...]:
    if not 1 <= n <= len(LABELS):
        raise ValueError(f"universe size must be between 1 and {len(LABELS)}")
    return LABELS[:n]


def _lift_set(spec: LiftingSpec, m, P, elems) -> frozenset:
    return frozenset(t for t in elems if spec.lift(m, P, t))


def check_unit(spec: LiftingSpec, universe: int = 3) -> LawReport:
    """``eta`` maps ``P`` into ``T_1 P``."""
    xs = _universe(universe)
    n = 0
    for P in subsets(xs):
        for x in P:
            n += 1
            if not spec.lift(spec.unit_grade, P, spec.eta(x)):
                return LawReport("unit", spec.name, universe, False, n,
                                 {"P": _js(P), "x": x, "eta": _js(spec.eta(x))})
    return LawReport("unit", spec.name, universe, True, n)


def check_multiplication(spec: LiftingSpec, universe: int = 3) -> LawReport:
    """``mu`` maps ``T_m1 (T_m2 P)`` into ``T_(m1 m2) P``."""
    xs = _universe(universe)
    tx = spec.carrier(xs)
    ttx = spec.carrier(tx)
    n = 0
    for P in subsets(xs):
        for m2 in spec.grades:
            inner = _lift_set(spec, m2, P, tx)
            for m1 in spec.grades:
                m = spec.mul(m1, m2)
                for tt in ttx:
                    if not spec.lift(m1, inner, tt):
                        continue
                    n += 1
                    if not spec.lift(m, P, spec.mu(tt)):
                        return LawReport("multiplication", spec.name, universe, False, n,
                                         {"P": _js(P), "m1": _js(m1), "m2": _js(m2),
                                          "element": _js(tt), "mu": _js(spec.mu(tt))})
    return LawReport("multiplication", spec.name, universe, True, n)


def check_associativity(spec: LiftingSpec, universe: int = 3) -> LawReport:
    """Monad equations (``mu . T mu = mu . mu T`` and both unit equations) and
    associativity/unit of the grade monoid on the samples."""
    xs = _universe(universe)
    tx = spec.carrier(xs)
    n = 0
    for a, b, c in itertools.product(spec.grades, repeat=3):
        n += 1
        if spec.mul(spec.mul(a, b), c) != spec.mul(a, spec.mul(b, c)):
            return LawReport("associativity", spec.name, universe, False, n,
                             {"grades": [_js(a), _js(b), _js(c)]})
    for a in spec.grades:
        n += 1
        if spec.mul(spec.unit_grade, a) != a or spec.mul(a, spec.unit_grade) != a:
            return LawReport("associativity", spec.name, universe, False, n, {"unit_grade": _js(a)})
    for t in tx:
        n += 1
        left, right = spec.mu(spec.eta(t)), spec.mu(spec.fmap(spec.eta, t))
        if left != t or right != t:
            return LawReport("associativity", spec.name, universe, False, n,
                             {"element": _js(t), "mu_eta": _js(left), "mu_T_eta": _js(right)})
    for ttt in spec.carrier(spec.carrier(tx)):
        n += 1
        a, b = spec.mu(spec.mu(ttt)), spec.mu(spec.fmap(spec.mu, ttt))
        if a != b:
            return LawReport("associativity", spec.name, universe, False, n,
                             {"element": _js(ttt), "mu_mu": _js(a), "mu_T_mu": _js(b)})
    return LawReport("associativity", spec.name, universe, True, n)


def check_monotonicity(spec: LiftingSpec, universe: int = 3) -> LawReport:
    """``m1 <= m2`` implies ``T_m1 P`` is contained in ``T_m2 P``."""
    xs = _universe(universe)
    tx = spec.carrier(xs)
    n = 0
    for m1, m2 in itertools.product(spec.grades, repeat=2):
        if not spec.leq(m1, m2):
            continue
        for P in subsets(xs):
            for t in tx:
                n += 1
                if spec.lift(m1, P, t) and not spec.lift(m2, P, t):
                    return LawReport("monotonicity", spec.name, universe, False, n,
                                     {"m1": _js(m1), "m2": _js(m2), "P": _js(P), "element": _js(t)})
    return LawReport("monotonicity", spec.name, universe, True, n)


def check_strength(spec: LiftingSpec, universe: int = 3) -> LawReport:
    """Strength maps ``P x T_m Q`` into ``T_m (P x Q)``."""
    xs = _universe(universe)
    tx = spec.carrier(xs)
    n = 0
    for m in spec.grades:
        for P in subsets(xs):
            for Q in subsets(xs):
                PQ = frozenset(itertools.product(P, Q))
                for t in tx:
                    if not spec.lift(m, Q, t):
                        continue
                    for x in P:
                        n += 1
                        s = spec.fmap(lambda y, x=x: (x, y), t)
                        if not spec.lift(m, PQ, s):
                            return LawReport("strength", spec.name, universe, False, n,
                                             {"m": _js(m), "P": _js(P), "Q": _js(Q), "x": x,
                                              "element": _js(t)})
    return LawReport("strength", spec.name, universe, True, n)


def check_graded_monad_laws(spec: LiftingSpec, universe: int = 3) -> List[LawReport]:
    return [check_unit(spec, universe), check_multiplication(spec, universe),
            check_associativity(spec, universe), check_monotonicity(spec, universe),
            check_strength(spec, universe)]


# ---------------------------------------------------------------------------
# Indexed liftings and reindexing


def lift_family(spec: LiftingSpec, f: Dict[object, object], X: Dict[object, frozenset],
                elems) -> Dict[object, frozenset]:
    """Index-wise lifting: ``(T_f X)_j = T_(f j) X_j``."""
    return {j: _lift_set(spec, f[j], X[j], elems) for j in X}


def reindex(u: Dict[object, object], family: Dict[object, object]) -> Dict[object, object]:
    """``u* family``: the family (or grade function) precomposed with ``u``."""
    return {i: family[j] for i, j in u.items()}


def check_reindexing(spec: LiftingSpec, universe: int = 3, source=("i", "k"),
                     target=("x", "y", "z"), lift_fn=None) -> LawReport:
    """``u*(T_f X) = T_(f . u)(u* X)`` for every ``u``, family ``X`` and grade function ``f``,
    plus naturality of the unit under reindexing."""
    lift_fn = lift_fn or lift_family
    xs = _universe(universe)
    tx = spec.carrier(xs)
    preds = list(subsets(xs))
    n = 0
    maps = [dict(zip(source, img)) for img in itertools.product(target, repeat=len(source))]
    families = [dict(zip(target, ps)) for ps in itertools.product(preds, repeat=len(target))]
    grade_fns = [dict(zip(target, gs)) for gs in itertools.product(spec.grades, repeat=len(target))]
    for f in grade_fns:
        for X in families:
            lifted = lift_fn(spec, f, X, tx)
            for u in maps:
                n += 1
                left = reindex(u, lifted)
                right = lift_fn(spec, reindex(u, f), reindex(u, X), tx)
                if left != right:
                    return LawReport("reindexing", spec.name, universe, False, n,
                                     {"u": u, "f": {k: _js(v) for k, v in f.items()},
                                      "X": {k: _js(v) for k, v in X.items()}})
    # unit: eta sends (u* X)_i into (T_(1) u* X)_i
    for X in families:
        for u in maps:
            uX = reindex(u, X)
            for i, P in uX.items():
                for x in P:
                    n += 1
                    if not spec.lift(spec.unit_grade, P, spec.eta(x)):
                        return LawReport("reindexing", spec.name, universe, False, n,
                                         {"u": u, "i": i, "x": x})
    return LawReport("reindexing", spec.name, universe, True, n)


def check_composite(spec: LiftingSpec, universe: int = 3, index=("i", "k")) -> LawReport:
    """The lifting over a context: the predicate
    ``{(i, t) | P(i) and t in T_(f i) Q<i, ->}`` computed directly and through
    the strength ``I x T X -> T(I x X)`` agree."""
    xs = _universe(universe)
    tx = spec.carrier(xs)
    n = 0
    pairs = list(itertools.product(index, xs))
    for f in itertools.product(spec.grades, repeat=len(index)):
        fi = dict(zip(index, f))
        for P in subsets(index):
            for Q in subsets(pairs):
                for i in index:
                    sect = frozenset(x for (j, x) in Q if j == i)
                    for t in tx:
                        n += 1
                        direct = i in P and spec.lift(fi[i], sect, t)
                        strong = spec.fmap(lambda x, i=i: (i, x), t)
                        via = i in P and spec.lift(fi[i], Q, strong)
                        if direct != via:
                            return LawReport("composite", spec.name, universe, False, n,
                                             {"f": {k: _js(v) for k, v in fi.items()},
                                              "P": _js(P), "Q": _js(Q), "i": i, "element": _js(t)})
    return LawReport("composite", spec.name, universe, True, n)


def check_restricted_order(spec: LiftingSpec, index=("i", "k", "l")) -> LawReport:
    """Grade functions ordered only on a predicate: ``f <=_P g`` iff ``f i <= g i`` for
    ``i`` in ``P``.  Checks that reindexing is monotone for this order and that some pair is
    ordered on ``P`` while unordered outside it."""
    n = 0
    exhibited = None
    fns = list(itertools.product(spec.grades, repeat=len(index)))
    preds = list(subsets(index))

    def le_on(f, g, P, idx):
        return all(spec.leq(f[idx.index(i)], g[idx.index(i)]) for i in P)

    src = index[:2]
    maps = list(itertools.product(index, repeat=len(src)))
    for f in fns:
        for g in fns:
            for P in preds:
                if not le_on(f, g, P, index):
                    continue
                if exhibited is None and not le_on(f, g, index, index):
                    exhibited = {"f": _js(f), "g": _js(g), "P": _js(P)}
                for img in maps:
                    n += 1
                    fu = tuple(f[index.index(j)] for j in img)
                    gu = tuple(g[index.index(j)] for j in img)
                    uP = frozenset(i for i, j in zip(src, img) if j in P)
                    if not le_on(fu, gu, uP, src):
                        return LawReport("restricted-order", spec.name, 0, False, n,
                                         {"f": _js(f), "g": _js(g), "P": _js(P), "u": list(img)})
    ok = exhibited is not None or len(spec.grades) < 2
    return LawReport("restricted-order", spec.name, 0, ok, n, exhibited)


def check_par_distribution(spec: LiftingSpec, universe: int = 3,
                           bottom_eta=None) -> LawReport:
    """The distributive law ``(T X)_bot -> T(X_bot)`` maps ``Par(T_m P)`` into ``T_m(Par P)``.

    ``Par P`` adds bottom to ``P``.  Bottom is sent to the unit at bottom and
    every other element is kept.
    """
    bottom_eta = bottom_eta or spec.bottom_eta
    xs = _universe(universe)
    tx = spec.carrier(xs)
    n = 0
    for m in spec.grades:
        for P in subsets(xs):
            parP = P | {BOT}
            for e in [BOT] + tx:
                if e != BOT and not spec.lift(m, P, e):
                    continue
                n += 1
                image = bottom_eta(BOT) if e == BOT else e
                if not spec.lift(m, parP, image):
                    return LawReport("par-distribution", spec.name, universe, False, n,
                                     {"m": _js(m), "P": _js(P), "element": _js(e),
                                      "image": _js(image)})
    return LawReport("par-distribution", spec.name, universe, True, n)


# ---------------------------------------------------------------------------
# Stack abstraction against word-level semantics


def _in_stack_words(word, d: int, m: int) -> bool:
    """Word-level membership: net depth ``d`` and every prefix depth at most ``m``."""
    depth = 0
    for ev in word:
        depth += 1 if ev == "push" else -1
        if depth > m:
            return False
    return depth == d and m >= 0


def _extremal(atoms) -> Tuple[str, ...]:
    """A word of the language reaching its maximal prefix depth."""
    out: Tuple[str, ...] = ()
    for a in atoms:
        out += ("push",) * a.m + ("pop",) * (a.m - a.d)
    return out


def check_stack_abstraction(max_d: int = 3, max_m: int = 3, max_len: int = 6) -> LawReport:
    """Composition and order of Stack grades agree with word-level membership.

    Membership of ``Stack(d1,m1) . Stack(d2,m2)`` is compared with the set of
    concatenations of member words.  Inclusion ``a <= Stack(d,m)`` is compared
    with word-level inclusion on all words up to ``max_len`` plus the extremal
    word of ``a``; since every word of ``a`` has the same net depth and the
    extremal word attains the maximal prefix depth, this decides inclusion.
    """
    words = [w for n in range(max_len + 1) for w in itertools.product(("push", "pop"), repeat=n)]
    grades = [(d, m) for d in range(-max_d, max_d + 1) for m in range(0, max_m + 1)]
    members = {g: frozenset(w for w in words if _in_stack_words(w, *g)) for g in grades}
    n = 0

    def fail(kind, **wit):
        return LawReport("stack-abstraction", "writer", max_len, False, n, {"kind": kind, **wit})

    for g in grades:
        lang = Lang((StackAtom(*g),))
        for w in words:
            n += 1
            if lang.contains(w) != (w in members[g]):
                return fail("membership", grade=list(g), word=list(w))
    for g1, g2 in itertools.product(grades, repeat=2):
        lang = Lang((StackAtom(*g1), StackAtom(*g2)))
        concat = frozenset(u + v for u in members[g1] for v in members[g2] if len(u) + len(v) <= max_len)
        for w in words:
            n += 1
            if lang.contains(w) != (w in concat):
                return fail("composition", grades=[list(g1), list(g2)], word=list(w))
        lhs = [(lang, concat, [g1, g2])] if not lang.empty else []
        if g1 == g2:
            single = Lang((StackAtom(*g1),))
            if not single.empty:
                lhs.append((single, members[g1], [g1]))
        for a, a_words, parts in lhs:
            ext = _extremal(a.atoms)
            for g3 in grades:
                n += 1
                truth = a_words <= members[g3] and _in_stack_words(ext, *g3)
                if lang_le(a, Lang((StackAtom(*g3),))) != truth:
                    return fail("order", lhs=[list(p) for p in parts], rhs=list(g3))
    return LawReport("stack-abstraction", "writer", max_len, True, n)


# ---------------------------------------------------------------------------
# Negative controls


STRICT_COST = replace(COST, name="cost-strict",
                      lift=lambda m, P, t: t[0] in P and t[1] != INF_HAT
                      and (m == INF_HAT or t[1] < m))
ANTITONE_COST = replace(COST, name="cost-antitone",
                        lift=lambda m, P, t: t[0] in P and cost_leq(m, t[1]))
SKEWED_COST = replace(COST, name="cost-skewed-mu",
                      mu=lambda tt: (tt[0][0], cost_add(tt[0][1], cost_add(tt[1], tt[1]))))
REVERSED_WRITER = replace(WRITER, name="writer-reversed-mu",
                          mu=lambda tt: (tt[0][0], tt[0][1] + tt[1]))
COSTLY_BOTTOM = replace(COST, name="cost-costly-bottom", bottom_eta=lambda b: (b, 1))


def _first_index_family(spec, f, X, elems):
    first = sorted(X)[0]
    return {j: _lift_set(spec, f[first], X[j], elems) for j in X}


@dataclass(frozen=True)
class Mutant:
    name: str
    law: str
    run: Callable[[int], LawReport]


MUTANTS = (
    Mutant("cost-strict", "unit", lambda u: check_unit(STRICT_COST, u)),
    Mutant("cost-antitone", "monotonicity", lambda u: check_monotonicity(ANTITONE_COST, u)),
    Mutant("cost-skewed-mu", "associativity", lambda u: check_associativity(SKEWED_COST, u)),
    Mutant("writer-reversed-mu", "multiplication",
           lambda u: check_multiplication(REVERSED_WRITER, u)),
    Mutant("cost-costly-bottom", "par-distribution",
           lambda u: check_par_distribution(COSTLY_BOTTOM, u)),
    Mutant("cost-first-index", "reindexing",
           lambda u: replace(check_reindexing(COST, min(u, 2), lift_fn=_first_index_family),
                             lifting="cost-first-index")),
)


def run_laws(universe: int = 3) -> List[LawReport]:
    """The default suite: all laws for every lifting."""
    out: List[LawReport] = []
    for spec in (COST, WRITER, DIST):
        out.extend(check_graded_monad_laws(spec, universe))
        out.append(check_reindexing(spec, min(universe, 2)))
        out.append(check_composite(spec, min(universe, 2)))
    out.append(check_restricted_order(COST))
    for spec in (COST, DIST):
        out.append(check_par_distribution(spec, universe))
    out.append(check_stack_abstraction())
    return out


def run_mutants(universe: int = 3) -> List[Tuple[Mutant, LawReport]]:
    return [(m, m.run(universe)) for m in MUTANTS]


__all__ = ["FinitePredicate", "LiftingSpec", "LawReport", "COST", "WRITER", "DIST", "LIFTINGS",
           "BOT", "INF_HAT", "check_unit", "check_multiplication", "check_associativity",
           "check_monotonicity", "check_strength", "check_graded_monad_laws", "lift_family",
           "reindex", "check_reindexing", "check_composite", "check_restricted_order",
           "check_par_distribution", "check_stack_abstraction", "MUTANTS", "run_laws", "run_mutants", "subsets"]
