"""GOAL-style mental states: substate properties, bel/goal conditions,
goal dropping, and belief effects.

`World` owns the per-spec machinery every evaluation needs: the atom
index, the knowledge base, and memo caches for substate properties and
per-goal models. Caches are keyed by value (frozen id sets), so they are
invisible to semantics; `MentalState` values are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .logic import (
    AtomIndex,
    Interpretation,
    Substitution,
    UnboundNegationError,
    fixpoint,
    match_literals,
    minimal_model,
    sort_solutions,
)
from .syntax import Atom, Effect, Literal, MentalLiteral, Msc, is_var
from .validate import ValidatedSpec


@dataclass(frozen=True)
class Busy:
    """An in-progress durative action occupying its agent."""

    action: str
    args: tuple[str, ...]
    binding: tuple[tuple[str, str], ...]  # effect-relevant variable bindings
    remaining: int


@dataclass(frozen=True)
class MentalState:
    beliefs: Interpretation
    goals: tuple[frozenset[int], ...] = ()
    mailbox: tuple[tuple[str, int], ...] = ()
    busy: Optional[Busy] = None


class World:
    """Evaluation context for one validated spec."""

    def __init__(self, spec: ValidatedSpec, capacity: int = 1 << 22):
        self.spec = spec
        self.index = AtomIndex(spec, capacity)
        self.rules = spec.ast.knowledge
        self.strata = spec.strata
        self.agent_names = spec.agent_names
        self._property_cache: dict[frozenset[int], Interpretation] = {}
        self._goal_model_cache: dict[frozenset[int], Interpretation] = {}

    # -- substate properties -------------------------------------------------

    def substate_property(self, ms: MentalState) -> Interpretation:
        return self.property_of(ms.beliefs)

    def property_of(self, beliefs: Interpretation) -> Interpretation:
        cached = self._property_cache.get(beliefs.ids)
        if cached is None:
            cached = minimal_model(self.index, beliefs, self.rules, self.strata)
            self._property_cache[beliefs.ids] = cached
        return cached

    def goal_model(self, goal: frozenset[int]) -> Interpretation:
        """Minimal model of one goal conjunction under the knowledge base."""
        cached = self._goal_model_cache.get(goal)
        if cached is None:
            cached = minimal_model(self.index, Interpretation(goal), self.rules, self.strata)
            self._goal_model_cache[goal] = cached
        return cached

    # -- condition evaluation -------------------------------------------------

    def eval_msc(
        self, ms: MentalState, msc: Msc, binding: Substitution | None = None
    ) -> list[Substitution]:
        """All solutions of a mental state condition, deterministically ordered.

        bel conjuncts are evaluated against the substate property, goal
        conjuncts against the per-goal models; negation is closed-world
        failure and requires its variables to be bound. An initial binding
        pins variables (used for action preconditions under a parameter
        assignment).
        """
        prop_db = self.substate_property(ms).by_pred(self.index)
        solutions: list[Substitution] = [dict(binding) if binding else {}]
        for mlit in msc:
            if not solutions:
                break
            if mlit.op == "bel":
                lits = tuple(Literal(a) for a in mlit.atoms)
                if not mlit.negated:
                    solutions = [
                        ext for b in solutions for ext in match_literals(prop_db, lits, b)
                    ]
                else:
                    solutions = [
                        b
                        for b in solutions
                        if not self._ground_conj_in(prop_db, mlit.atoms, b)
                    ]
            else:  # goal
                if not mlit.negated:
                    solutions = self._extend_by_goal(ms, mlit, solutions)
                else:
                    solutions = [
                        b for b in solutions if not self._some_goal_entails(ms, mlit.atoms, b)
                    ]
        return sort_solutions(solutions)

    def _extend_by_goal(
        self, ms: MentalState, mlit: MentalLiteral, solutions: list[Substitution]
    ) -> list[Substitution]:
        lits = tuple(Literal(a) for a in mlit.atoms)
        out: list[Substitution] = []
        for b in solutions:
            seen: set[tuple] = set()
            for goal in ms.goals:
                model_db = self.goal_model(goal).by_pred(self.index)
                for ext in match_literals(model_db, lits, b):
                    key = tuple(sorted(ext.items()))
                    if key not in seen:
                        seen.add(key)
                        out.append(ext)
        return out

    def _some_goal_entails(self, ms: MentalState, atoms, binding: Substitution) -> bool:
        ground = [self._ground(a, binding) for a in atoms]
        for goal in ms.goals:
            model = self.goal_model(goal)
            if all(self.index.id_of_atom(a) in model.ids for a in ground):
                return True
        return False

    def _ground_conj_in(self, db, atoms, binding: Substitution) -> bool:
        for atom in atoms:
            ga = self._ground(atom, binding)
            if ga.args not in db.get(ga.pred, frozenset()):
                return False
        return True

    def _ground(self, atom: Atom, binding: Substitution) -> Atom:
        args = []
        for a in atom.args:
            if is_var(a):
                if a not in binding:
                    raise UnboundNegationError(
                        f"variable {a} in negated condition on '{atom}' is not "
                        f"bound by a positive conjunct"
                    )
                args.append(binding[a])
            else:
                args.append(a)
        return Atom(atom.pred, tuple(args))

    # -- state updates ---------------------------------------------------------

    def update_goals(self, ms: MentalState) -> MentalState:
        """Drop every goal conjunction entailed by the substate property."""
        if not ms.goals:
            return ms
        prop = self.substate_property(ms).ids
        kept = tuple(g for g in ms.goals if not g <= prop)
        if len(kept) == len(ms.goals):
            return ms
        return replace(ms, goals=kept)

    def apply_effects(self, ms: MentalState, effects: Iterable[Effect]) -> MentalState:
        """Deletes apply before inserts, then achieved goals are dropped."""
        deletes: set[int] = set()
        inserts: set[int] = set()
        for eff in effects:
            atom_id = self.index.id_of_atom(eff.atom)
            (deletes if eff.op == "delete" else inserts).add(atom_id)
        beliefs = Interpretation((ms.beliefs.ids - frozenset(deletes)) | frozenset(inserts))
        return self.update_goals(replace(ms, beliefs=beliefs))

    # -- serialization ----------------------------------------------------------

    def mental_state_doc(self, ms: MentalState) -> dict:
        """Canonical JSON form: sorted atom strings, goal order preserved."""
        doc = {
            "beliefs": ms.beliefs.atom_strings(self.index),
            "goals": [
                sorted(self.index.atom_str(i) for i in g) for g in ms.goals
            ],
            "mailbox": [
                [sender, self.index.atom_str(i)] for sender, i in ms.mailbox
            ],
            "busy": None,
        }
        if ms.busy is not None:
            doc["busy"] = {
                "action": ms.busy.action,
                "args": list(ms.busy.args),
                "binding": [[v, c] for v, c in ms.busy.binding],
                "remaining": ms.busy.remaining,
            }
        return doc

    def beliefs_from_atoms(self, atoms: Iterable[Atom]) -> Interpretation:
        return Interpretation(self.index.id_of_atom(a) for a in atoms)

    def goal_from_atoms(self, atoms: Iterable[Atom]) -> frozenset[int]:
        return frozenset(self.index.id_of_atom(a) for a in atoms)
