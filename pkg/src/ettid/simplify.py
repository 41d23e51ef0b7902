"""Fixpoint rewriting of estimands.

Only value-consistency rewrites are applied: contradictory conditioning
collapses to zero, a summation index pinned by a term that also mentions a
fixed value of the same variable collapses onto that value, and identical
factors cancel across a quotient. Distinct tokens for one variable are taken
to denote distinct values.
"""

from __future__ import annotations

from collections import Counter

from .estimand import (ONE, ZERO, Binding, Const, Estimand, Prob, Product, Quotient, Sum,
                       _subst)

__all__ = ["simplify_consistency", "normalize"]

_MAX_ROUNDS = 64


def _prob(p: Prob, bound: frozenset) -> Estimand:
    event: list[Binding] = []
    for b in p.event:
        if b not in event:
            event.append(b)
    given: list[Binding] = []
    for b in p.given:
        if b not in given:
            given.append(b)
    event = [b for b in event if b not in given]
    free_vals: dict[str, set] = {}
    for b in event + given:
        if b not in bound:
            free_vals.setdefault(b.var, set()).add(b.value)
    if any(len(v) > 1 for v in free_vals.values()):
        return ZERO
    if not event:
        return ONE
    return Prob(tuple(event), tuple(given), p.do)


def _factors(e: Estimand) -> list[Estimand]:
    return list(e.factors) if isinstance(e, Product) else [e]


def _mk_product(fs: list[Estimand]) -> Estimand:
    if not fs:
        return ONE
    if len(fs) == 1:
        return fs[0]
    return Product(tuple(fs))


def _key(e: Estimand):
    return e.key() if isinstance(e, Prob) else e


def _product(fs: list[Estimand]) -> Estimand:
    flat: list[Estimand] = []
    for f in fs:
        if isinstance(f, Product):
            flat.extend(f.factors)
        else:
            flat.append(f)
    if any(f == ZERO for f in flat):
        return ZERO
    flat = [f for f in flat if f != ONE]
    if any(isinstance(f, Quotient) for f in flat):
        nums, dens = [], []
        for f in flat:
            if isinstance(f, Quotient):
                nums.extend(_factors(f.numerator))
                dens.extend(_factors(f.denominator))
            else:
                nums.append(f)
        return _quotient(_mk_product(nums), _mk_product(dens))
    return _mk_product(flat)


def _quotient(num: Estimand, den: Estimand) -> Estimand:
    if num == ZERO:
        return ZERO
    if isinstance(num, Quotient) or isinstance(den, Quotient):
        n1, d1 = (num.numerator, num.denominator) if isinstance(num, Quotient) else (num, ONE)
        n2, d2 = (den.numerator, den.denominator) if isinstance(den, Quotient) else (den, ONE)
        num = _product([n1, d2])
        den = _product([d1, n2])
        if isinstance(num, Quotient) or isinstance(den, Quotient):
            return Quotient(num, den)
    nf = [f for f in _factors(num) if f != ONE]
    df = [f for f in _factors(den) if f != ONE]
    dcount = Counter(_key(f) for f in df)
    kept_n = []
    for f in nf:
        k = _key(f)
        if dcount[k] > 0:
            dcount[k] -= 1
        else:
            kept_n.append(f)
    kept_d = []
    for f in df:
        k = _key(f)
        if dcount[k] > 0:
            dcount[k] -= 1
            kept_d.append(f)
    num, den = _mk_product(kept_n), _mk_product(kept_d)
    if den == ONE:
        return num
    return Quotient(num, den)


def _pinning_value(e: Estimand, b: Binding, bound: frozenset) -> str | None:
    """A free token of ``b.var`` that a multiplicative Prob factor pairs with ``b``."""
    if isinstance(e, Prob):
        bs = e.event + e.given
        if b in bs:
            for c in bs:
                if c.var == b.var and c != b and c not in bound:
                    return c.value
        return None
    if isinstance(e, Product):
        for f in e.factors:
            v = _pinning_value(f, b, bound)
            if v is not None:
                return v
        return None
    if isinstance(e, Quotient):
        return _pinning_value(e.numerator, b, bound)
    if isinstance(e, Sum):
        if b in e.over:
            return None
        return _pinning_value(e.body, b, bound | set(e.over))
    return None


def _sum(over: tuple, body: Estimand, bound: frozenset) -> Estimand:
    if body == ZERO:
        return ZERO
    inner = bound | set(over)
    for b in over:
        val = _pinning_value(body, b, inner)
        if val is not None:
            target = Binding(b.var, val)
            rest = tuple(c for c in over if c != b)
            body = _subst(body, lambda c: target if c == b else c,
                          bound | set(rest))
            return _sum(rest, normalize(body, bound | set(rest)), bound)
    if not over:
        return body
    if isinstance(body, Sum) and not {b.var for b in over} & {b.var for b in body.over}:
        return Sum(over + body.over, body.body)
    return Sum(over, body)


def normalize(e: Estimand, bound: frozenset = frozenset()) -> Estimand:
    """One bottom-up rewriting pass."""
    if isinstance(e, Prob):
        return _prob(e, bound)
    if isinstance(e, Product):
        return _product([normalize(f, bound) for f in e.factors])
    if isinstance(e, Quotient):
        return _quotient(normalize(e.numerator, bound), normalize(e.denominator, bound))
    if isinstance(e, Sum):
        inner = bound | set(e.over)
        return _sum(e.over, normalize(e.body, inner), bound)
    return e


def simplify_consistency(e: Estimand) -> Estimand:
    for _ in range(_MAX_ROUNDS):
        new = normalize(e)
        if new == e:
            return e
        e = new
    return e
