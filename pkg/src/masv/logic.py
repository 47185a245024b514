"""Ground atom indexing and stratified minimal-model computation.

The engine evaluates over a database view `dict[pred -> set[arg tuples]]`;
`Interpretation` is the boundary type: an immutable set of dense atom ids
with a lazily built per-predicate view and deterministic (sorted) iteration.
"""

from __future__ import annotations

import itertools
import re

from .stratify import StrataAssignment
from .syntax import Atom, Literal, Rule, is_var
from .validate import ValidatedSpec

GroundAtom = tuple[str, tuple[str, ...]]
Database = dict[str, set[tuple[str, ...]]]
Substitution = dict[str, str]


class CapacityError(Exception):
    def __init__(self, needed: int, limit: int):
        self.needed = needed
        self.limit = limit
        super().__init__(f"Herbrand base needs {needed} atoms, limit is {limit}")


class UnboundNegationError(Exception):
    """A negated literal was evaluated with an unbound variable."""


class AtomIndex:
    """Bijection between ground atoms and dense integer ids.

    Ids are assigned per predicate in first-appearance order, argument
    tuples in lexicographic order of constant names.
    """

    def __init__(self, spec: ValidatedSpec, capacity: int = 1 << 22):
        total = 0
        sizes: dict[str, int] = {}
        for pred in spec.predicates:
            size = 1
            for dom in spec.signatures[pred]:
                size *= len(spec.domains[dom])
            sizes[pred] = size
            total += size
        if total > capacity:
            raise CapacityError(total, capacity)

        self.spec = spec
        self.atoms: list[GroundAtom] = []
        self.ids: dict[GroundAtom, int] = {}
        self.pred_ranges: dict[str, tuple[int, int]] = {}
        self.pred_arg_values: dict[str, list[list[str]]] = {}
        for pred in spec.predicates:
            start = len(self.atoms)
            columns = [sorted(spec.domains[d]) for d in spec.signatures[pred]]
            self.pred_arg_values[pred] = columns
            for args in itertools.product(*columns):
                ga = (pred, args)
                self.ids[ga] = len(self.atoms)
                self.atoms.append(ga)
            self.pred_ranges[pred] = (start, len(self.atoms) - start)

    def __len__(self) -> int:
        return len(self.atoms)

    def id_of(self, pred: str, args: tuple[str, ...]) -> int:
        return self.ids[(pred, args)]

    def id_of_atom(self, atom: Atom) -> int:
        return self.ids[(atom.pred, atom.args)]

    def contains_atom(self, atom: Atom) -> bool:
        return (atom.pred, atom.args) in self.ids

    def atom_str(self, atom_id: int) -> str:
        pred, args = self.atoms[atom_id]
        return f"{pred}({','.join(args)})" if args else pred

    def decode(self, atom_id: int) -> GroundAtom:
        return self.atoms[atom_id]


_ATOM_RE = re.compile(r"^([a-z_][A-Za-z0-9_]*)(?:\(([^()]*)\))?$")


def parse_ground_atom(text: str) -> Atom:
    """Parse `pred` / `pred(c1,c2)` strings used in traces and sensor input."""
    m = _ATOM_RE.match(text.strip())
    if m is None:
        raise ValueError(f"malformed atom {text!r}")
    pred, argtext = m.group(1), m.group(2)
    if argtext is None:
        return Atom(pred)
    args = tuple(a.strip() for a in argtext.split(","))
    if any(not a or is_var(a) or not re.match(r"^[a-z_][A-Za-z0-9_]*$", a) for a in args):
        raise ValueError(f"atom {text!r} has a non-constant argument")
    return Atom(pred, args)


class Interpretation:
    """Immutable set of ground atom ids over a governing AtomIndex."""

    __slots__ = ("ids", "_by_pred")

    def __init__(self, ids=()):
        self.ids: frozenset[int] = ids if isinstance(ids, frozenset) else frozenset(ids)
        self._by_pred: Database | None = None

    def __contains__(self, atom_id: int) -> bool:
        return atom_id in self.ids

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(sorted(self.ids))

    def __eq__(self, other) -> bool:
        return isinstance(other, Interpretation) and self.ids == other.ids

    def __hash__(self) -> int:
        return hash(self.ids)

    def __repr__(self) -> str:
        return f"Interpretation({sorted(self.ids)!r})"

    def by_pred(self, index: AtomIndex) -> Database:
        """Per-predicate tuple view; cached, valid for the building index."""
        if self._by_pred is None:
            view: Database = {}
            for atom_id in self.ids:
                pred, args = index.atoms[atom_id]
                view.setdefault(pred, set()).add(args)
            self._by_pred = view
        return self._by_pred

    def atom_strings(self, index: AtomIndex) -> list[str]:
        return sorted(index.atom_str(i) for i in self.ids)

    def with_ids(self, add: set[int] = frozenset(), remove: set[int] = frozenset()):
        return Interpretation((self.ids - frozenset(remove)) | frozenset(add))


def encode_db(index: AtomIndex, db: Database) -> Interpretation:
    ids = set()
    for pred, tuples in db.items():
        for args in tuples:
            ids.add(index.id_of(pred, args))
    return Interpretation(ids)


# -- conjunction matching ----------------------------------------------------


def _extend(binding: Substitution, pattern: tuple[str, ...], ground: tuple[str, ...]):
    out = binding
    copied = False
    for pat, val in zip(pattern, ground):
        if is_var(pat):
            known = out.get(pat)
            if known is None:
                if not copied:
                    out = dict(out)
                    copied = True
                out[pat] = val
            elif known != val:
                return None
        elif pat != val:
            return None
    return out


def _ground_args(atom: Atom, binding: Substitution) -> tuple[str, ...]:
    args = []
    for a in atom.args:
        if is_var(a):
            if a not in binding:
                raise UnboundNegationError(
                    f"variable {a} in negated literal 'not {atom}' is not bound "
                    f"by a positive literal"
                )
            args.append(binding[a])
        else:
            args.append(a)
    return tuple(args)


def match_literals(db: Database, literals, binding: Substitution | None = None) -> list[Substitution]:
    """All bindings satisfying the conjunction against `db`.

    Positive literals are joined in order; negated literals are checked
    afterwards and must be ground by then.
    """
    solutions: list[Substitution] = [dict(binding) if binding else {}]
    for lit in literals:
        if lit.negated:
            continue
        tuples = db.get(lit.atom.pred, ())
        new: list[Substitution] = []
        for b in solutions:
            for args in tuples:
                nb = _extend(b, lit.atom.args, args)
                if nb is not None:
                    new.append(nb)
        solutions = new
        if not solutions:
            return []
    for lit in literals:
        if not lit.negated:
            continue
        kept = []
        for b in solutions:
            args = _ground_args(lit.atom, b)
            if args not in db.get(lit.atom.pred, frozenset()):
                kept.append(b)
        solutions = kept
        if not solutions:
            return []
    return solutions


def sort_solutions(solutions: list[Substitution]) -> list[Substitution]:
    """Deterministic order: lexicographic by constants, variables sorted by name."""
    return sorted(solutions, key=lambda b: tuple(b[v] for v in sorted(b)))


# -- stratified fixpoint -----------------------------------------------------


def _eval_rule_seminaive(rule: Rule, full: Database, delta: Database) -> set[GroundAtom]:
    """Heads derivable with at least one positive literal matched in delta."""
    positives = [lit for lit in rule.body if not lit.negated]
    negatives = [lit for lit in rule.body if lit.negated]
    derived: set[GroundAtom] = set()
    for pivot in range(len(positives)):
        if not delta.get(positives[pivot].atom.pred):
            continue
        solutions: list[Substitution] = [{}]
        for i, lit in enumerate(positives):
            source = delta if i == pivot else full
            tuples = source.get(lit.atom.pred, ())
            new = []
            for b in solutions:
                for args in tuples:
                    nb = _extend(b, lit.atom.args, args)
                    if nb is not None:
                        new.append(nb)
            solutions = new
            if not solutions:
                break
        for lit in negatives:
            if not solutions:
                break
            solutions = [
                b
                for b in solutions
                if _ground_args(lit.atom, b) not in full.get(lit.atom.pred, frozenset())
            ]
        for b in solutions:
            derived.add((rule.head.pred, _ground_args(rule.head, b)))
    return derived


def fixpoint(facts: Database, rules, strata: StrataAssignment) -> Database:
    """Perfect-model fixpoint over the tuple-space database (semi-naive)."""
    db: Database = {p: set(ts) for p, ts in facts.items()}
    by_stratum: dict[int, list[Rule]] = {}
    for rule in rules:
        by_stratum.setdefault(strata.get(rule.head.pred, 0), []).append(rule)
    for s in sorted(by_stratum):
        stratum_rules = by_stratum[s]
        # seed pass: every rule evaluated naively against the current database
        delta: Database = {}
        for rule in stratum_rules:
            for pred, args in _eval_rule_naive_once(rule, db):
                if args not in db.get(pred, frozenset()):
                    delta.setdefault(pred, set()).add(args)
        while delta:
            for pred, tuples in delta.items():
                db.setdefault(pred, set()).update(tuples)
            new_delta: Database = {}
            for rule in stratum_rules:
                for pred, args in _eval_rule_seminaive(rule, db, delta):
                    if args not in db.get(pred, frozenset()):
                        new_delta.setdefault(pred, set()).add(args)
            delta = new_delta
    return db


def _eval_rule_naive_once(rule: Rule, db: Database) -> set[GroundAtom]:
    return {
        (rule.head.pred, _ground_args(rule.head, b))
        for b in match_literals(db, rule.body)
    }


def minimal_model(
    index: AtomIndex, facts: Interpretation, rules, strata: StrataAssignment
) -> Interpretation:
    """The unique perfect model of `facts` under stratified `rules`."""
    db = {p: set(ts) for p, ts in facts.by_pred(index).items()}
    return encode_db(index, fixpoint(db, rules, strata))


def query(index: AtomIndex, interp: Interpretation, conj) -> list[Substitution]:
    """Substitutions satisfying a conjunction of (possibly negated) literals."""
    return sort_solutions(match_literals(interp.by_pred(index), conj))


def holds(index: AtomIndex, interp: Interpretation, ground_conj) -> bool:
    """Ground conjunction check; cost proportional to the conjunct count."""
    for lit in ground_conj:
        atom_id = index.id_of(lit.atom.pred, lit.atom.args)
        if lit.negated == (atom_id in interp.ids):
            return False
    return True


def literal(pred: str, *args: str, negated: bool = False) -> Literal:
    """Convenience constructor used by tests and internal grounding."""
    return Literal(Atom(pred, tuple(args)), negated)
