"""Exact numerical evaluation of estimands against joint tables.

Evaluation is tensorised: every summation index in scope is an array axis,
and a table source may stack several models on a leading batch axis so one
pass evaluates an estimand on all of them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Protocol

import numpy as np

from .estimand import Binding, Const, Estimand, Prob, Product, Quotient, Sum
from .scm import JointTable

__all__ = ["evaluate", "evaluate_with_flags", "EvaluationError", "Evaluation", "resolve_token"]


class EvaluationError(ValueError):
    """Unresolved token, missing regime table or a domain mismatch."""


class Source(Protocol):
    domains: Mapping[str, int]

    def table(self, regime: tuple) -> JointTable: ...


@dataclass
class Evaluation:
    value: float | np.ndarray
    degenerate: int


def resolve_token(resolution: Mapping, var: str, token: str) -> int:
    """Look up ``(var, token)``, then ``token``; bare integers resolve to themselves."""
    if resolution is not None:
        if (var, token) in resolution:
            return int(resolution[(var, token)])
        if token in resolution:
            return int(resolution[token])
    if token.isdigit():
        return int(token)
    raise EvaluationError(f"cannot resolve value token {token!r} of {var}")


class _Evaluator:
    def __init__(self, source: Source, resolution: Mapping | None):
        self.source = source
        self.resolution = resolution
        self.degenerate = 0
        self._tables: dict = {}
        self._marg: dict = {}
        self.batch: tuple[int, ...] | None = None

    # tables ---------------------------------------------------------------

    def _table(self, regime: tuple) -> JointTable:
        if regime not in self._tables:
            try:
                t = self.source.table(regime)
            except KeyError as exc:
                raise EvaluationError(str(exc)) from None
            batch = t.batch_shape
            probs = t.probs if batch else t.probs[None, ...]
            if self.batch is None:
                self.batch = probs.shape[:1]
            self._tables[regime] = JointTable(t.variables, probs)
        return self._tables[regime]

    def _marginal(self, regime: tuple, keep: frozenset) -> JointTable:
        key = (regime, keep)
        if key not in self._marg:
            self._marg[key] = self._table(regime).marginal(keep)
        return self._marg[key]

    # helpers --------------------------------------------------------------

    def _domain(self, var: str) -> int:
        try:
            return int(self.source.domains[var])
        except KeyError:
            raise EvaluationError(f"no domain for variable {var}") from None

    def _spec(self, b: Binding, scope: list[Binding]):
        for pos in range(len(scope) - 1, -1, -1):
            if scope[pos] == b:
                return ("axis", pos)
        k = resolve_token(self.resolution, b.var, b.value)
        if not 0 <= k < self._domain(b.var):
            raise EvaluationError(f"value {k} outside the domain of {b.var}")
        return ("val", k)

    def _arange(self, pos: int, d: int, n: int) -> np.ndarray:
        shape = [1] * n
        shape[pos] = d
        return np.arange(d).reshape(shape)

    def _index(self, spec, var: str, n: int):
        if spec[0] == "val":
            return spec[1]
        return self._arange(spec[1], self._domain(var), n)

    def _indicator(self, a, b, var: str, n: int) -> np.ndarray:
        ia, ib = self._index(a, var, n), self._index(b, var, n)
        return np.asarray(np.equal(ia, ib), dtype=float).reshape((1,) + np.shape(np.equal(ia, ib)))

    def _prob_of(self, regime: tuple, assigns: list, n: int):
        """Probability of a conjunction of assignments, as an array (B, scope...)."""
        fixed = dict(regime)
        primary: dict[str, tuple] = {}
        ind = np.ones((1,) + (1,) * n)
        for var, spec in assigns:
            if var in fixed:
                ind = ind * self._indicator(spec, ("val", fixed[var]), var, n)
            elif var in primary:
                ind = ind * self._indicator(primary[var], spec, var, n)
            else:
                primary[var] = spec
        t = self._marginal(regime, frozenset(primary))
        missing = set(primary) - set(t.variables)
        if missing:
            raise EvaluationError(f"variables {sorted(missing)} are not in the table")
        if not t.variables:
            p = t.probs.reshape(t.probs.shape[:1] + (1,) * n)
            return p * ind
        idx = []
        arrays = []
        for v in t.variables:
            i = self._index(primary[v], v, n)
            idx.append(i)
            if not np.isscalar(i):
                arrays.append(i)
        if not arrays:
            idx[0] = np.asarray(idx[0]).reshape((1,) * n)
        p = t.probs[(slice(None),) + tuple(idx)]
        if p.ndim == 1:
            p = p.reshape(p.shape + (1,) * n)
        return p * ind

    # recursion ------------------------------------------------------------

    def _safe_div(self, num: np.ndarray, den: np.ndarray) -> np.ndarray:
        num, den = np.broadcast_arrays(num, den)
        zero = den == 0
        if zero.any():
            self.degenerate += int(zero.sum())
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(zero, 0.0, num / np.where(zero, 1.0, den))
        return out

    def _prob(self, e: Prob, scope: list[Binding]) -> np.ndarray:
        n = len(scope)
        ev = [(b.var, self._spec(b, scope)) for b in e.event]
        gv = [(b.var, self._spec(b, scope)) for b in e.given]
        rv = [(b.var, self._spec(b, scope)) for b in e.do]
        axis_regime = [(var, s[1]) for var, s in rv if s[0] == "axis"]
        static = tuple((var, s[1]) for var, s in rv if s[0] == "val")
        if not axis_regime:
            return self._term(tuple(sorted(static)), ev, gv, n)
        positions = sorted({pos for _, pos in axis_regime})
        full = (self.batch[0],) + tuple(self._domain(b.var) for b in scope)
        out = np.zeros(full)
        for combo in itertools.product(*(range(full[1 + p]) for p in positions)):
            at = dict(zip(positions, combo))
            reg = dict(static)
            conflict = False
            for var, pos in axis_regime:
                if var in reg and reg[var] != at[pos]:
                    conflict = True
                reg[var] = at[pos]
            if conflict:
                continue
            val = self._term(tuple(sorted(reg.items())), ev, gv, n)
            for p in reversed(positions):
                val = np.take(val, at[p] if val.shape[1 + p] > 1 else 0, axis=1 + p)
            sl = [slice(None)] * (1 + n)
            for p in positions:
                sl[1 + p] = at[p]
            out[tuple(sl)] = val
        return out

    def _term(self, regime: tuple, ev: list, gv: list, n: int) -> np.ndarray:
        num = self._prob_of(regime, ev + gv, n)
        if not gv:
            return num
        return self._safe_div(num, self._prob_of(regime, gv, n))

    def eval(self, e: Estimand, scope: list[Binding]) -> np.ndarray:
        n = len(scope)
        if isinstance(e, Const):
            return np.full((1,) + (1,) * n, float(e.value))
        if isinstance(e, Prob):
            return self._prob(e, scope)
        if isinstance(e, Product):
            out = np.ones((1,) + (1,) * n)
            for f in e.factors:
                out = out * self.eval(f, scope)
            return out
        if isinstance(e, Quotient):
            return self._safe_div(self.eval(e.numerator, scope), self.eval(e.denominator, scope))
        if isinstance(e, Sum):
            inner = scope + list(e.over)
            body = self.eval(e.body, inner)
            for i in range(len(e.over)):
                axis = n + 1 + i
                d = self._domain(e.over[i].var)
                if body.shape[axis] == 1 and d > 1:
                    body = body * d
            return body.sum(axis=tuple(range(n + 1, n + 1 + len(e.over)))) if e.over else body
        raise TypeError(type(e))


def evaluate_with_flags(e: Estimand, source: Source, resolution: Mapping | None = None) -> Evaluation:
    ev = _Evaluator(source, resolution)
    ev._table(())
    out = ev.eval(e, [])
    batched = bool(source.table(()).batch_shape) if hasattr(source, "table") else False
    out = np.broadcast_to(out, ev.batch).copy()
    value = out if batched else float(out[0])
    return Evaluation(value, ev.degenerate)


def evaluate(e: Estimand, source: Source, resolution: Mapping | None = None):
    """Value of ``e``; a batched source yields one value per stacked model."""
    return evaluate_with_flags(e, source, resolution).value
