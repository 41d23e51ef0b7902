"""ETT queries and their parser."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .estimand import Estimand, default_token, prime, substitute_tokens
from .graph import Admg
from .identify import QueryError

__all__ = ["EttQuery", "parse_query"]


@dataclass(frozen=True)
class EttQuery:
    """``P(Y_x = y | X = x', E = e)``.

    ``treatments`` holds ``(var, do_token, observed_token)``; ``evidence`` holds
    extra natural-world observations ``(var, token)`` on variables that are not
    intervened on (produced when a treatment is dropped as irrelevant).
    """

    outcomes: tuple[tuple[str, str], ...]
    treatments: tuple[tuple[str, str, str], ...]
    evidence: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.outcomes:
            raise QueryError("at least one outcome is required")
        names = [v for v, _ in self.outcomes] + [t[0] for t in self.treatments] + [v for v, _ in self.evidence]
        dup = sorted({v for v in names if names.count(v) > 1})
        if dup:
            raise QueryError(f"variables mentioned more than once: {dup}")

    @classmethod
    def single(cls, y: str, x: str, y_tok: str | None = None, x_tok: str | None = None,
               x_obs: str | None = None) -> "EttQuery":
        x_tok = x_tok or default_token(x)
        return cls(((y, y_tok or default_token(y)),),
                   ((x, x_tok, x_obs or prime(x_tok)),))

    @property
    def y(self) -> frozenset:
        return frozenset(v for v, _ in self.outcomes)

    @property
    def x(self) -> frozenset:
        return frozenset(t[0] for t in self.treatments)

    @property
    def e(self) -> frozenset:
        return frozenset(v for v, _ in self.evidence)

    def check_graph(self, g: Admg):
        unknown = (self.y | self.x | self.e) - set(g.vertices)
        if unknown:
            raise QueryError(f"unknown variables in query: {sorted(unknown)}")

    def internal(self) -> tuple["EttQuery", dict]:
        """The same query over canonical tokens, plus the map back to the user's tokens.

        Outcomes and do-values use the lower-cased variable name, observed values
        its primed form (or the same token when the user gave identical tokens).
        """
        back: dict = {}
        outs = []
        for v, tok in self.outcomes:
            outs.append((v, default_token(v)))
            back[(v, default_token(v))] = tok
        trs = []
        for v, d, o in self.treatments:
            di = default_token(v)
            oi = di if d == o else prime(di)
            trs.append((v, di, oi))
            back[(v, di)] = d
            back[(v, oi)] = o
        ev = []
        for v, tok in self.evidence:
            oi = prime(default_token(v))
            ev.append((v, oi))
            back[(v, oi)] = tok
        return EttQuery(tuple(outs), tuple(trs), tuple(ev)), back

    def __str__(self):
        outs = ", ".join(f"{v}={t}" for v, t in self.outcomes)
        dos = ", ".join(f"do({v}={d})" for v, d, _ in self.treatments)
        obs = ", ".join([f"{v}={o}" for v, _, o in self.treatments] + [f"{v}={t}" for v, t in self.evidence])
        return f"ETT[ {outs} | {dos} ; {obs} ]"

    def to_json(self) -> dict:
        return {"outcomes": [{"var": v, "value": t} for v, t in self.outcomes],
                "treatments": [{"var": v, "do": d, "observed": o} for v, d, o in self.treatments],
                "evidence": [{"var": v, "value": t} for v, t in self.evidence]}


def to_user_tokens(e: Estimand, back: dict) -> Estimand:
    return substitute_tokens(e, {k: v for k, v in back.items() if k[1] != v})


_TOKEN = r"[^\s,;|()\[\]=]+"
_ASSIGN = re.compile(rf"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*({_TOKEN})\s*\Z")
_DO = re.compile(rf"\s*do\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*({_TOKEN})\s*\)\s*\Z")


def _split(s: str) -> list[str]:
    parts = [p for p in s.split(",")]
    if any(not p.strip() for p in parts):
        raise QueryError(f"empty item in {s.strip()!r}")
    return parts


def _assignments(s: str, pattern, what: str) -> list[tuple[str, str]]:
    out = []
    for part in _split(s):
        m = pattern.match(part)
        if not m:
            raise QueryError(f"cannot parse {what} {part.strip()!r}")
        out.append((m.group(1), m.group(2)))
    names = [v for v, _ in out]
    dup = sorted({v for v in names if names.count(v) > 1})
    if dup:
        raise QueryError(f"duplicate {what} for {dup}")
    return out


def parse_query(s: str, g: Admg | None = None) -> EttQuery:
    """Parse ``ETT[ Y=y, ... | do(X=x), ... ; X=x', ... ]``."""
    m = re.fullmatch(r"\s*ETT\s*\[(.*)\]\s*", s, flags=re.S)
    if not m:
        raise QueryError("query must have the form ETT[ Y=y | do(X=x) ; X=x' ]")
    body = m.group(1)
    if body.count("|") != 1:
        raise QueryError("query needs exactly one '|' between outcomes and interventions")
    outs_s, rest = body.split("|")
    if rest.count(";") != 1:
        raise QueryError("missing observed treatment values (expected '; X=x'')")
    do_s, obs_s = rest.split(";")
    outs = _assignments(outs_s, _ASSIGN, "outcome")
    dos = _assignments(do_s, _DO, "intervention")
    obs = _assignments(obs_s, _ASSIGN, "observed value")
    do_vars, obs_vars = [v for v, _ in dos], dict(obs)
    if set(do_vars) != set(obs_vars):
        raise QueryError(f"treatments {sorted(do_vars)} and observed values {sorted(obs_vars)} must match")
    q = EttQuery(tuple(outs), tuple((v, d, obs_vars[v]) for v, d in dos))
    if not q.treatments:
        raise QueryError("at least one treatment is required")
    if g is not None:
        q.check_graph(g)
    return q
