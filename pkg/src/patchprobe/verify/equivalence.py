"""Bitvector semantic equivalence of normalized conditions.

Two routes share one variable-mapping search:

* ``solver``: an SMT-LIB v2 session with an external solver process (z3 by
  default) over QF_BV.
* ``exhaustive``: vectorized enumeration of every assignment with numpy.

Semantics are C-like over two's complement width-bit vectors: comparisons,
division, remainder and right shift are signed; a condition is true iff it is
nonzero.  Assignments that make any divisor zero are excluded on both sides.
Shift amounts are read unsigned; shifting by >= width yields 0 (left) or the
sign fill (right), matching SMT-LIB bvshl/bvashr.
"""

from __future__ import annotations

import enum
import itertools
import logging
import re
import shutil
import subprocess
from dataclasses import dataclass, field

import numpy as np

from ..errors import SolverError, TooManyVariables, UnsupportedOperator
from .expr import BINARY_PREC, Bin, CallAtom, Num, Un, Var, render
from .lexer import lex_line

log = logging.getLogger(__name__)

EXHAUSTIVE_BIT_CAP = 20
ORACLE_MAX_WIDTH = 10
ORACLE_MAX_VARS = 2


class Equivalence(str, enum.Enum):
    EQUAL = "Equal"
    NEGATED = "Negated"
    INEQUIVALENT = "Inequivalent"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class EquivalenceVerdict:
    value: Equivalence
    witness: dict | None = None  # {"lhs": {"x1": v}, "rhs": {"x1": v}}
    method: str = "solver"
    width: int = 32
    mapping: dict = field(default_factory=dict)  # lhs var name -> rhs var name
    lhs: str = ""
    rhs: str = ""

    @property
    def is_match(self) -> bool:
        return self.value in (Equivalence.EQUAL, Equivalence.NEGATED)

    def to_dict(self):
        return {"value": self.value.value, "witness": self.witness, "method": self.method,
                "width": self.width, "mapping": dict(self.mapping), "lhs": self.lhs,
                "rhs": self.rhs}

    @classmethod
    def from_dict(cls, d):
        return cls(Equivalence(d["value"]), d.get("witness"), d.get("method", "solver"),
                   d.get("width", 32), dict(d.get("mapping", {})), d.get("lhs", ""),
                   d.get("rhs", ""))


@dataclass(frozen=True)
class SolverConfig:
    path: str = "z3"
    timeout_s: float = 10.0


# ------------------------------------------------------------ bound trees
# Leaves of a bound tree are Sym nodes; everything else reuses the
# normalized node classes.

@dataclass(frozen=True)
class Sym:
    name: str


def _symbols(e) -> list:
    """Distinct leaves (Var / CallAtom) in first-appearance order."""
    out: list = []

    def go(n):
        if isinstance(n, (Var, CallAtom)):
            if n not in out:
                out.append(n)
        elif isinstance(n, Un):
            go(n.operand)
        elif isinstance(n, Bin):
            go(n.left)
            go(n.right)
        elif not isinstance(n, Num):
            raise UnsupportedOperator(f"node outside the condition grammar: {n!r}")

    go(e)
    return out


def _check_grammar(e):
    if isinstance(e, Un):
        if e.op not in ("!", "~", "-"):
            raise UnsupportedOperator(e.op)
        _check_grammar(e.operand)
    elif isinstance(e, Bin):
        if e.op not in BINARY_PREC:
            raise UnsupportedOperator(e.op)
        _check_grammar(e.left)
        _check_grammar(e.right)
    elif not isinstance(e, (Var, Num, CallAtom)):
        raise UnsupportedOperator(f"unsupported node {type(e).__name__}")


def _leaf_name(leaf) -> str:
    return f"x{leaf.index}" if isinstance(leaf, Var) else render(leaf)


def _bind(e, names: dict):
    if isinstance(e, (Var, CallAtom)):
        return Sym(names[e])
    if isinstance(e, Un):
        return Un(e.op, _bind(e.operand, names))
    if isinstance(e, Bin):
        return Bin(e.op, _bind(e.left, names), _bind(e.right, names))
    return e


def _divisors(e, acc):
    if isinstance(e, Un):
        _divisors(e.operand, acc)
    elif isinstance(e, Bin):
        if e.op in ("/", "%"):
            acc.append(e.right)
        _divisors(e.left, acc)
        _divisors(e.right, acc)
    return acc


def _compatible(a, b) -> bool:
    if isinstance(a, Var) and isinstance(b, Var):
        return True
    if isinstance(a, CallAtom) and isinstance(b, CallAtom):
        return a.name == b.name and len(a.args) == len(b.args)
    return False


def _spelling(text: str) -> str:
    return " ".join(t.lexeme for t in lex_line(text))


def _candidate_mappings(s1, s2, origin1, origin2):
    """Injective leaf mappings lhs -> rhs to try, deduplicated, in a fixed order."""
    cands = []

    def add(m):
        if m not in cands:
            cands.append(m)

    # 1. equal origin text
    if origin1 and origin2:
        by_text = {_spelling(v): k for k, v in origin2.items()}
        m = {}
        for leaf in s1:
            if isinstance(leaf, Var):
                tgt = by_text.get(_spelling(origin1.get(f"x{leaf.index}", "")))
                if tgt is not None:
                    rv = Var(int(tgt[1:]))
                    if rv in s2 and rv not in m.values():
                        m[leaf] = rv
        if m:
            add(tuple(sorted(m.items(), key=lambda kv: s1.index(kv[0]))))
    # 2. positional identity
    m = {}
    for a, b in zip(s1, s2):
        if _compatible(a, b):
            m[a] = b
    add(tuple(m.items()))
    # 3. full search over small sets
    if max(len(s1), len(s2)) <= 3:
        if len(s1) <= len(s2):
            for perm in itertools.permutations(s2, len(s1)):
                if all(_compatible(a, b) for a, b in zip(s1, perm)):
                    add(tuple(zip(s1, perm)))
        else:
            for perm in itertools.permutations(s1, len(s2)):
                if all(_compatible(a, b) for a, b in zip(perm, s2)):
                    add(tuple(sorted(zip(perm, s2), key=lambda kv: s1.index(kv[0]))))
    return cands


@dataclass
class _Problem:
    lhs: object  # bound trees
    rhs: object
    syms: list   # combined symbol names, lhs-first order
    mapping: dict
    lhs_names: dict  # lhs var name -> symbol
    rhs_names: dict


def _problems(e1, e2, origin1=None, origin2=None) -> list[_Problem]:
    _check_grammar(e1)
    _check_grammar(e2)
    s1, s2 = _symbols(e1), _symbols(e2)
    out = []
    for cand in _candidate_mappings(s1, s2, origin1 or {}, origin2 or {}):
        m = dict(cand)
        rnames = {leaf: f"r{k + 1}" for k, leaf in enumerate(s2)}
        lnames = {}
        for k, leaf in enumerate(s1):
            lnames[leaf] = rnames[m[leaf]] if leaf in m else f"l{k + 1}"
        syms = []
        for leaf in s1:
            if lnames[leaf] not in syms:
                syms.append(lnames[leaf])
        for leaf in s2:
            if rnames[leaf] not in syms:
                syms.append(rnames[leaf])
        out.append(_Problem(
            _bind(e1, lnames), _bind(e2, rnames), syms,
            {_leaf_name(a): _leaf_name(b) for a, b in m.items()},
            {_leaf_name(leaf): n for leaf, n in lnames.items()},
            {_leaf_name(leaf): n for leaf, n in rnames.items()},
        ))
    return out


def _split_witness(pb: _Problem, values: dict) -> dict:
    return {"lhs": {k: values.get(s, 0) for k, s in pb.lhs_names.items()},
            "rhs": {k: values.get(s, 0) for k, s in pb.rhs_names.items()}}


# --------------------------------------------------------- scalar evaluator

def _signed(v, width):
    v &= (1 << width) - 1
    return v - (1 << width) if v >> (width - 1) else v


def _tdiv(a, b):
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def evaluate(e, env: dict, width: int) -> int | None:
    """Value of a bound or normalized tree under `env`; None on division by zero.

    `env` maps symbol names (bound trees) or "xN" names (normalized trees).
    """
    mask = (1 << width) - 1

    def go(n):
        if isinstance(n, Sym):
            return env[n.name] & mask
        if isinstance(n, Var):
            return env[f"x{n.index}"] & mask
        if isinstance(n, CallAtom):
            return env[render(n)] & mask
        if isinstance(n, Num):
            return n.value & mask
        if isinstance(n, Un):
            v = go(n.operand)
            if n.op == "!":
                return int(v == 0)
            if n.op == "~":
                return ~v & mask
            return -v & mask
        a, b = go(n.left), go(n.right)
        op = n.op
        sa, sb = _signed(a, width), _signed(b, width)
        if op == "+":
            return (a + b) & mask
        if op == "-":
            return (a - b) & mask
        if op == "*":
            return (a * b) & mask
        if op in ("/", "%"):
            if b == 0:
                raise ZeroDivisionError
            q = _tdiv(sa, sb)
            return (q if op == "/" else sa - sb * q) & mask
        if op == "&":
            return a & b
        if op == "|":
            return a | b
        if op == "^":
            return a ^ b
        if op == "<<":
            return 0 if b >= width else (a << b) & mask
        if op == ">>":
            if b >= width:
                return mask if sa < 0 else 0
            return (sa >> b) & mask
        if op == "&&":
            return int(a != 0 and b != 0)
        if op == "||":
            return int(a != 0 or b != 0)
        return int({"==": sa == sb, "!=": sa != sb, "<": sa < sb, "<=": sa <= sb,
                    ">": sa > sb, ">=": sa >= sb}[op])

    try:
        return go(e)
    except ZeroDivisionError:
        return None


def check_witness(e1, e2, verdict: EquivalenceVerdict) -> bool:
    """Re-evaluate an Inequivalent witness directly on the two expressions."""
    e1 = getattr(e1, "expr", e1)
    e2 = getattr(e2, "expr", e2)
    if verdict.witness is None:
        return False
    w = verdict.width
    div1 = _divisors(e1, [])
    div2 = _divisors(e2, [])
    env1, env2 = verdict.witness["lhs"], verdict.witness["rhs"]
    if any(evaluate(d, env1, w) in (0, None) for d in div1) or \
            any(evaluate(d, env2, w) in (0, None) for d in div2):
        return False
    v1, v2 = evaluate(e1, env1, w), evaluate(e2, env2, w)
    return v1 is not None and v2 is not None and (v1 != 0) != (v2 != 0)


# -------------------------------------------------------- exhaustive route

def _np_eval(n, env, width):
    mask = np.uint64((1 << width) - 1)
    one = np.uint64(1)

    def signed(a):
        s = a.astype(np.int64)
        return np.where(s >> (width - 1) & 1, s - (1 << width), s)

    def go(n):
        if isinstance(n, Sym):
            return env[n.name]
        if isinstance(n, Num):
            return np.full_like(env["__shape__"], n.value & ((1 << width) - 1))
        if isinstance(n, Un):
            v = go(n.operand)
            if n.op == "!":
                return (v == 0).astype(np.uint64)
            if n.op == "~":
                return ~v & mask
            return (np.uint64(0) - v) & mask
        a, b = go(n.left), go(n.right)
        op = n.op
        if op == "+":
            return (a + b) & mask
        if op == "-":
            return (a - b) & mask
        if op == "*":
            return (a * b) & mask
        if op in ("/", "%"):
            sa, sb = signed(a), signed(b)
            sb = np.where(sb == 0, 1, sb)  # excluded assignments, value irrelevant
            q = np.abs(sa) // np.abs(sb)
            q = np.where((sa < 0) != (sb < 0), -q, q)
            r = q if op == "/" else sa - sb * q
            return r.astype(np.uint64) & mask
        if op == "&":
            return a & b
        if op == "|":
            return a | b
        if op == "^":
            return a ^ b
        if op == "<<":
            sh = np.minimum(b, np.uint64(width - 1))
            return np.where(b >= width, np.uint64(0), (a << sh) & mask)
        if op == ">>":
            sa = signed(a)
            sh = np.minimum(b, np.uint64(width - 1)).astype(np.int64)
            fill = np.where(sa < 0, -1, 0)
            res = np.where(b >= width, fill, sa >> sh)
            return res.astype(np.uint64) & mask
        if op == "&&":
            return ((a != 0) & (b != 0)).astype(np.uint64)
        if op == "||":
            return ((a != 0) | (b != 0)).astype(np.uint64)
        sa, sb = signed(a), signed(b)
        res = {"==": sa == sb, "!=": sa != sb, "<": sa < sb, "<=": sa <= sb,
               ">": sa > sb, ">=": sa >= sb}[op]
        return res.astype(np.uint64) & one

    return go(n)


def _exhaustive(pb: _Problem, width: int):
    k = len(pb.syms)
    bits = k * width
    if bits > EXHAUSTIVE_BIT_CAP:
        raise TooManyVariables(f"{k} variables at width {width} exceed the enumeration cap")
    idx = np.arange(1 << bits, dtype=np.uint64)
    mask = np.uint64((1 << width) - 1)
    env = {"__shape__": idx}
    for j, s in enumerate(pb.syms):
        env[s] = (idx >> np.uint64(j * width)) & mask
    valid = np.ones(idx.shape, dtype=bool)
    for d in _divisors(pb.lhs, []) + _divisors(pb.rhs, []):
        valid &= _np_eval(d, env, width) != 0
    t1 = _np_eval(pb.lhs, env, width) != 0
    t2 = _np_eval(pb.rhs, env, width) != 0
    disagree = (t1 != t2) & valid
    agree = (t1 == t2) & valid
    if not disagree.any():
        return Equivalence.EQUAL, None
    if not agree.any():
        return Equivalence.NEGATED, None
    first = int(np.argmax(disagree))
    values = {s: (first >> (j * width)) & ((1 << width) - 1) for j, s in enumerate(pb.syms)}
    return Equivalence.INEQUIVALENT, values


# ------------------------------------------------------------ solver route

def _bv(value, width):
    return f"(_ bv{value & ((1 << width) - 1)} {width})"


def smt_term(n, width) -> str:
    zero, one = _bv(0, width), _bv(1, width)

    def boolify(c):
        return f"(ite {c} {one} {zero})"

    def go(n):
        if isinstance(n, Sym):
            return n.name
        if isinstance(n, Num):
            return _bv(n.value, width)
        if isinstance(n, Un):
            v = go(n.operand)
            if n.op == "!":
                return boolify(f"(= {v} {zero})")
            return f"({'bvnot' if n.op == '~' else 'bvneg'} {v})"
        a, b = go(n.left), go(n.right)
        op = n.op
        simple = {"+": "bvadd", "-": "bvsub", "*": "bvmul", "/": "bvsdiv", "%": "bvsrem",
                  "&": "bvand", "|": "bvor", "^": "bvxor", "<<": "bvshl", ">>": "bvashr"}
        if op in simple:
            return f"({simple[op]} {a} {b})"
        if op == "&&":
            return boolify(f"(and (distinct {a} {zero}) (distinct {b} {zero}))")
        if op == "||":
            return boolify(f"(or (distinct {a} {zero}) (distinct {b} {zero}))")
        cmp = {"==": "=", "!=": "distinct", "<": "bvslt", "<=": "bvsle", ">": "bvsgt",
               ">=": "bvsge"}[op]
        return boolify(f"({cmp} {a} {b})")

    return go(n)


_VALUE_RE = re.compile(r"\(\s*(\w+)\s+(#x[0-9a-fA-F]+|#b[01]+|\(_\s+bv(\d+)\s+\d+\))\s*\)")


class SolverSession:
    """One solver process per equivalence query; closed after use."""

    def __init__(self, cfg: SolverConfig):
        exe = shutil.which(cfg.path)
        if exe is None:
            raise SolverError(f"solver executable {cfg.path!r} not found")
        ms = int(cfg.timeout_s * 1000)
        self.timeout_s = cfg.timeout_s
        self.proc = subprocess.Popen([exe, "-in", "-smt2", f"-t:{ms}"], stdin=subprocess.PIPE,
                                     stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
                                     text=True, bufsize=1)
        self.send("(set-logic QF_BV)")

    def send(self, cmd: str):
        self.proc.stdin.write(cmd + "\n")
        self.proc.stdin.flush()

    def read_sexpr(self) -> str:
        buf = ""
        depth = 0
        while True:
            line = self.proc.stdout.readline()
            if not line:
                raise SolverError(f"solver closed the stream (partial output {buf!r})")
            buf += line
            depth += line.count("(") - line.count(")")
            if depth <= 0 and buf.strip():
                return buf.strip()

    def check(self) -> str:
        self.send("(check-sat)")
        out = self.read_sexpr()
        if out not in ("sat", "unsat", "unknown"):
            raise SolverError(f"unexpected solver output: {out!r}")
        return out

    def values(self, names) -> dict:
        if not names:
            return {}
        self.send(f"(get-value ({' '.join(names)}))")
        out = self.read_sexpr()
        vals = {}
        for name, lit, dec in _VALUE_RE.findall(out):
            if dec:
                vals[name] = int(dec)
            elif lit.startswith("#x"):
                vals[name] = int(lit[2:], 16)
            else:
                vals[name] = int(lit[2:], 2)
        return vals

    def close(self):
        try:
            self.send("(exit)")
            self.proc.communicate(timeout=self.timeout_s)
        except Exception:  # noqa: BLE001 - best-effort teardown
            self.proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _solve(session: SolverSession, pb: _Problem, width: int):
    t1 = f"(distinct {smt_term(pb.lhs, width)} {_bv(0, width)})"
    t2 = f"(distinct {smt_term(pb.rhs, width)} {_bv(0, width)})"
    guards = [f"(distinct {smt_term(d, width)} {_bv(0, width)})"
              for d in _divisors(pb.lhs, []) + _divisors(pb.rhs, [])]
    session.send("(push 1)")
    for s in pb.syms:
        session.send(f"(declare-const {s} (_ BitVec {width}))")
    for g in guards:
        session.send(f"(assert {g})")
    session.send("(push 1)")
    session.send(f"(assert (distinct {t1} {t2}))")
    res = session.check()
    witness = None
    if res == "sat":
        witness = session.values(pb.syms)
    session.send("(pop 1)")
    if res == "unknown":
        session.send("(pop 1)")
        return Equivalence.UNKNOWN, None
    if res == "unsat":
        session.send("(pop 1)")
        return Equivalence.EQUAL, None
    session.send("(push 1)")
    session.send(f"(assert (= {t1} {t2}))")
    res2 = session.check()
    session.send("(pop 1)")
    session.send("(pop 1)")
    if res2 == "unsat":
        return Equivalence.NEGATED, None
    if res2 == "unknown":
        return Equivalence.UNKNOWN, None
    return Equivalence.INEQUIVALENT, witness


# ----------------------------------------------------------------- public

def _unpack(e):
    from .statements import NormalizedEquation, StatementKind
    if isinstance(e, NormalizedEquation):
        if e.kind is not StatementKind.CONDITIONAL:
            raise UnsupportedOperator(f"{e.kind.value} equations are not boolean conditions")
        return e.expr, e.var_origin, e.canonical
    return e, {}, render(e)


# a timed-out mapping might still have matched, so Unknown outranks Inequivalent
_RANK = {Equivalence.EQUAL: 0, Equivalence.NEGATED: 1, Equivalence.UNKNOWN: 2,
         Equivalence.INEQUIVALENT: 3}


def check_equivalence(e1, e2, width: int = 32, mode: str = "solver",
                      solver: SolverConfig | None = None) -> EquivalenceVerdict:
    """Compare two conditions under every candidate variable mapping.

    The best outcome across mappings wins (Equal over Negated over
    Inequivalent); the witness comes from the first mapping tried.
    """
    x1, o1, c1 = _unpack(e1)
    x2, o2, c2 = _unpack(e2)
    problems = _problems(x1, x2, o1, o2)
    results = []
    if mode == "exhaustive":
        for pb in problems:
            results.append((pb, *_exhaustive(pb, width)))
    elif mode == "solver":
        with SolverSession(solver or SolverConfig()) as session:
            for pb in problems:
                results.append((pb, *_solve(session, pb, width)))
    else:
        raise ValueError(f"unknown equivalence mode {mode!r}")
    pb, value, wit = min(results, key=lambda r: _RANK[r[1]])
    if value is Equivalence.INEQUIVALENT:
        pb, value, wit = next(r for r in results if r[1] is Equivalence.INEQUIVALENT)
    witness = _split_witness(pb, wit) if wit is not None else None
    return EquivalenceVerdict(value, witness, mode, width, pb.mapping, c1, c2)


def bounded_equivalence_oracle(e1, e2, width: int = ORACLE_MAX_WIDTH) -> EquivalenceVerdict:
    """Exhaustive, authoritative check for at most two variables and 10 bits."""
    if width > ORACLE_MAX_WIDTH or width < 1:
        raise ValueError(f"oracle width must be in 1..{ORACLE_MAX_WIDTH}")
    x1, _, _ = _unpack(e1)
    x2, _, _ = _unpack(e2)
    if max(len(_symbols(x1)), len(_symbols(x2))) > ORACLE_MAX_VARS:
        raise TooManyVariables("oracle handles at most two combined variables")
    return check_equivalence(e1, e2, width, mode="exhaustive")
