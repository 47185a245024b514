"""Lexer and recursive-descent parser for the specification language.

Grammar summary (line comments start with //):

    spec        := system agent+
    system      := "system" "{" domains knowledge? actions rules comms? safety? "}"
    domains     := "domains" "{" ( ID "=" "{" ID ("," ID)* "}" ";" )+ "}"
    knowledge   := "knowledge" "{" ( atom ( ":-" lit ("," lit)* )? "." )* "}"
    lit         := atom | "not" atom
    atom        := ID ( "(" term ("," term)* ")" )?
    term        := ID | VAR
    actions     := "actions" "{" actiondecl* "}"
    actiondecl  := "action" ID "(" (VAR ":" ID ("," VAR ":" ID)*)? ")" "{"
                   ("duration" INT ";")? "pre" msc ";" outcome+ "}"
    outcome     := "effect" "[" NUMBER "]" "{" (("insert"|"delete") atom ";")* "}"
    rules       := "rules" "{" ("if" msc "then" ID "(" term ("," term)* ")" ";")+ "}"
    msc         := mlit ("," mlit)*
    mlit        := ("not")? ("bel"|"goal") "(" atom ("," atom)* ")"
    comms       := "comms" "{" ( sendrule | recvrule )* "}"
    sendrule    := "on" msc "send" atom "to" ("all" | ID) ";"
    recvrule    := "on" "received" atom ("from" ID)? "do" ("insert"|"delete") atom ";"
    safety      := "safety" "{" ("always" slit ("," slit)* ";")+ "}"
    slit        := ("not")? "bel" "(" atom ")"
    agent       := "agent" ID "{" "beliefs" "{" (atom ".")* "}"
                   "goals" "{" (atom ("&" atom)* ";")* "}" "}"

Zero-argument action calls are additionally accepted as `name()`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .diagnostics import Diagnostic, DiagnosticSink, Span, SpecError
from .syntax import (
    ActionDecl,
    AgentDecl,
    Atom,
    DecisionRule,
    Effect,
    Literal,
    MentalLiteral,
    Msc,
    Outcome,
    RecvRule,
    Rule,
    SafetyConstraint,
    SendRule,
    SpecAst,
)

_PUNCT = {"{", "}", "(", ")", "[", "]", ",", ";", ".", "&", "="}


@dataclass(frozen=True)
class Token:
    kind: str  # "ID", "VAR", "NUMBER", punctuation, ":-", ":", "EOF"
    text: str
    span: Span


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "/":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            span = Span(start_line, start_col, line, start_col + (j - i))
            # keywords are contextual: the parser matches them by text, so
            # predicates and constants may reuse words like "on" or "do"
            kind = "VAR" if text[0].isupper() else "ID"
            tokens.append(Token(kind, text, span))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            text = source[i:j]
            tokens.append(Token("NUMBER", text, Span(start_line, start_col, line, start_col + (j - i))))
            col += j - i
            i = j
            continue
        if c == ":" and i + 1 < n and source[i + 1] == "-":
            tokens.append(Token(":-", ":-", Span(start_line, start_col, line, start_col + 2)))
            i += 2
            col += 2
            continue
        if c == ":":
            tokens.append(Token(":", ":", Span.point(line, col)))
            i += 1
            col += 1
            continue
        if c in _PUNCT:
            tokens.append(Token(c, c, Span.point(line, col)))
            i += 1
            col += 1
            continue
        raise SpecError([Diagnostic(f"unexpected character {c!r}", Span.point(line, col))])
    tokens.append(Token("EOF", "", Span.point(line, col)))
    return tokens


class ParseDiagnostics(SpecError):
    """Parse failure; `.diagnostics` holds one entry per problem found."""


_SYSTEM_SECTIONS = ("domains", "knowledge", "actions", "rules", "comms", "safety")
_MANDATORY_SECTIONS = ("domains", "actions", "rules")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.sink = DiagnosticSink()

    # -- token plumbing -----------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, kind: str) -> bool:
        return self.cur.kind == kind

    def at_kw(self, word: str) -> bool:
        return self.cur.kind == "ID" and self.cur.text == word

    def accept(self, kind: str) -> Token | None:
        if self.at(kind):
            return self.advance()
        return None

    def accept_kw(self, word: str) -> Token | None:
        if self.at_kw(word):
            return self.advance()
        return None

    def expect(self, kind: str, what: str | None = None) -> Token:
        if self.at(kind):
            return self.advance()
        found = self.cur.text or "end of input"
        expected = what or f"'{kind}'"
        self.fail(f"expected {expected}, found {found!r}", self.cur.span)

    def expect_kw(self, word: str) -> Token:
        if self.at_kw(word):
            return self.advance()
        found = self.cur.text or "end of input"
        self.fail(f"expected '{word}', found {found!r}", self.cur.span)

    def fail(self, message: str, span: Span):
        self.sink.error(message, span)
        raise ParseDiagnostics(self.sink.items)

    # -- grammar ------------------------------------------------------------

    def parse_spec(self) -> SpecAst:
        self.expect_kw("system")
        self.expect("{")
        sections: dict[str, object] = {}
        order_seen: list[str] = []
        while not self.at("}"):
            kind = self.cur.text if self.cur.kind == "ID" else None
            if kind not in _SYSTEM_SECTIONS:
                self.fail(
                    f"expected a system section ({', '.join(_SYSTEM_SECTIONS)}) or '}}', "
                    f"found {self.cur.text!r}",
                    self.cur.span,
                )
            if kind in sections:
                self.sink.error(f"duplicate section '{kind}'", self.cur.span)
                # re-parse and discard so we can continue
            prev = order_seen[-1] if order_seen else None
            if prev is not None and _SYSTEM_SECTIONS.index(kind) < _SYSTEM_SECTIONS.index(prev):
                self.sink.error(
                    f"section '{kind}' must appear before '{prev}'", self.cur.span
                )
            order_seen.append(kind)
            parser = getattr(self, f"_parse_{kind}")
            sections.setdefault(kind, parser())
        close = self.expect("}")
        for name in _MANDATORY_SECTIONS:
            if name not in sections:
                self.sink.error(f"missing mandatory section '{name}'", close.span)
        agents: list[AgentDecl] = []
        names_seen: set[str] = set()
        while self.at_kw("agent"):
            agent = self._parse_agent()
            if agent.name in names_seen:
                self.sink.error(f"duplicate agent name '{agent.name}'", agent.span)
            names_seen.add(agent.name)
            agents.append(agent)
        if not agents:
            self.sink.error("at least one agent declaration is required", self.cur.span)
        if not self.at("EOF"):
            self.sink.error(
                f"expected 'agent' or end of input, found {self.cur.text!r}", self.cur.span
            )
        self.sink.raise_if_any()
        send_rules, recv_rules = sections.get("comms", ((), ()))
        return SpecAst(
            domains=tuple(sections.get("domains", ())),
            knowledge=tuple(sections.get("knowledge", ())),
            actions=tuple(sections.get("actions", ())),
            decision_rules=tuple(sections.get("rules", ())),
            send_rules=tuple(send_rules),
            recv_rules=tuple(recv_rules),
            safety=tuple(sections.get("safety", ())),
            agents=tuple(agents),
        )

    def _parse_domains(self):
        self.expect_kw("domains")
        self.expect("{")
        domains = []
        while not self.at("}"):
            name = self.expect("ID", "a domain name")
            self.expect("=")
            self.expect("{")
            consts = [self.expect("ID", "a constant").text]
            while self.accept(","):
                consts.append(self.expect("ID", "a constant").text)
            self.expect("}")
            self.expect(";")
            domains.append((name.text, tuple(consts)))
        self.expect("}")
        if not domains:
            self.sink.error("domains section must declare at least one domain", self.cur.span)
        return domains

    def _parse_knowledge(self):
        self.expect_kw("knowledge")
        self.expect("{")
        rules = []
        while not self.at("}"):
            head = self._parse_atom()
            body: list[Literal] = []
            if self.accept(":-"):
                body.append(self._parse_lit())
                while self.accept(","):
                    body.append(self._parse_lit())
            end = self.expect(".")
            rules.append(Rule(head, tuple(body), span=head.span.merge(end.span)))
        self.expect("}")
        return rules

    def _parse_lit(self) -> Literal:
        if self.at_kw("not") and self.toks[self.pos + 1].kind in ("ID",):
            self.advance()
            return Literal(self._parse_atom(), negated=True)
        return Literal(self._parse_atom())

    def _parse_atom(self) -> Atom:
        name = self.expect("ID", "a predicate name")
        span = name.span
        args: list[str] = []
        if self.accept("("):
            args.append(self._parse_term())
            while self.accept(","):
                args.append(self._parse_term())
            close = self.expect(")")
            span = span.merge(close.span)
        return Atom(name.text, tuple(args), span=span)

    def _parse_term(self) -> str:
        tok = self.cur
        if tok.kind in ("ID", "VAR"):
            return self.advance().text
        self.fail(f"expected a term (constant or variable), found {tok.text!r}", tok.span)

    def _parse_actions(self):
        self.expect_kw("actions")
        self.expect("{")
        decls = []
        while not self.at("}"):
            decls.append(self._parse_actiondecl())
        self.expect("}")
        return decls

    def _parse_actiondecl(self) -> ActionDecl:
        kw = self.expect_kw("action")
        name = self.expect("ID", "an action name")
        self.expect("(")
        params: list[tuple[str, str]] = []
        if not self.at(")"):
            while True:
                var = self.expect("VAR", "a parameter variable")
                self.expect(":")
                dom = self.expect("ID", "a domain name")
                params.append((var.text, dom.text))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect("{")
        duration = 1
        if self.accept_kw("duration"):
            num = self.expect("NUMBER", "an integer duration")
            if "." in num.text:
                self.fail("duration must be an integer", num.span)
            duration = int(num.text)
            if duration < 1:
                self.sink.error("duration must be >= 1", num.span)
            self.expect(";")
        self.expect_kw("pre")
        pre = self._parse_msc()
        self.expect(";")
        outcomes = [self._parse_outcome()]
        while self.at_kw("effect"):
            outcomes.append(self._parse_outcome())
        close = self.expect("}")
        return ActionDecl(
            name.text, tuple(params), duration, pre, tuple(outcomes),
            span=kw.span.merge(close.span),
        )

    def _parse_outcome(self) -> Outcome:
        self.expect_kw("effect")
        self.expect("[")
        num = self.expect("NUMBER", "an outcome weight")
        weight = _number_to_fraction(num.text)
        self.expect("]")
        self.expect("{")
        effects: list[Effect] = []
        while not self.at("}"):
            if self.accept_kw("insert"):
                op = "insert"
            elif self.accept_kw("delete"):
                op = "delete"
            else:
                self.fail(f"expected 'insert' or 'delete', found {self.cur.text!r}", self.cur.span)
            atom = self._parse_atom()
            self.expect(";")
            effects.append(Effect(op, atom))
        self.expect("}")
        return Outcome(weight, tuple(effects))

    def _parse_rules(self):
        self.expect_kw("rules")
        self.expect("{")
        rules = []
        while not self.at("}"):
            kw = self.expect_kw("if")
            condition = self._parse_msc()
            self.expect_kw("then")
            name = self.expect("ID", "an action name")
            self.expect("(")
            args: list[str] = []
            if not self.at(")"):
                args.append(self._parse_term())
                while self.accept(","):
                    args.append(self._parse_term())
            self.expect(")")
            end = self.expect(";")
            rules.append(
                DecisionRule(condition, name.text, tuple(args), span=kw.span.merge(end.span))
            )
        self.expect("}")
        if not rules:
            self.sink.error("rules section must declare at least one rule", self.cur.span)
        return rules

    def _parse_msc(self) -> Msc:
        lits = [self._parse_mlit()]
        while self.accept(","):
            lits.append(self._parse_mlit())
        return tuple(lits)

    def _parse_mlit(self) -> MentalLiteral:
        negated = False
        if self.at_kw("not") and not self._next_is("("):
            self.advance()
            negated = True
        if self.accept_kw("bel"):
            op = "bel"
        elif self.accept_kw("goal"):
            op = "goal"
        else:
            self.fail(f"expected 'bel' or 'goal', found {self.cur.text!r}", self.cur.span)
        self.expect("(")
        atoms = [self._parse_atom()]
        while self.accept(","):
            atoms.append(self._parse_atom())
        self.expect(")")
        return MentalLiteral(op, tuple(atoms), negated)

    def _next_is(self, kind: str) -> bool:
        return self.toks[self.pos + 1].kind == kind if self.pos + 1 < len(self.toks) else False

    def _parse_comms(self):
        self.expect_kw("comms")
        self.expect("{")
        sends: list[SendRule] = []
        recvs: list[RecvRule] = []
        while not self.at("}"):
            kw = self.expect_kw("on")
            if self.accept_kw("received"):
                pattern = self._parse_atom()
                sender = None
                if self.accept_kw("from"):
                    sender = self.expect("ID", "an agent name").text
                self.expect_kw("do")
                if self.accept_kw("insert"):
                    op = "insert"
                elif self.accept_kw("delete"):
                    op = "delete"
                else:
                    self.fail(
                        f"expected 'insert' or 'delete', found {self.cur.text!r}", self.cur.span
                    )
                atom = self._parse_atom()
                end = self.expect(";")
                recvs.append(RecvRule(pattern, sender, op, atom, span=kw.span.merge(end.span)))
            else:
                condition = self._parse_msc()
                self.expect_kw("send")
                atom = self._parse_atom()
                self.expect_kw("to")
                if self.accept_kw("all"):
                    to = "all"
                else:
                    to = self.expect("ID", "an agent name or 'all'").text
                end = self.expect(";")
                sends.append(SendRule(condition, atom, to, span=kw.span.merge(end.span)))
        self.expect("}")
        return sends, recvs

    def _parse_safety(self):
        self.expect_kw("safety")
        self.expect("{")
        constraints = []
        while not self.at("}"):
            kw = self.expect_kw("always")
            lits = [self._parse_slit()]
            while self.accept(","):
                lits.append(self._parse_slit())
            end = self.expect(";")
            constraints.append(SafetyConstraint(tuple(lits), span=kw.span.merge(end.span)))
        self.expect("}")
        if not constraints:
            self.sink.error("safety section must declare at least one constraint", self.cur.span)
        return constraints

    def _parse_slit(self) -> Literal:
        negated = False
        if self.at_kw("not") and not self._next_is("("):
            self.advance()
            negated = True
        self.expect_kw("bel")
        self.expect("(")
        atom = self._parse_atom()
        self.expect(")")
        return Literal(atom, negated)

    def _parse_agent(self) -> AgentDecl:
        kw = self.expect_kw("agent")
        name = self.expect("ID", "an agent name")
        self.expect("{")
        self.expect_kw("beliefs")
        self.expect("{")
        beliefs: list[Atom] = []
        while not self.at("}"):
            beliefs.append(self._parse_atom())
            self.expect(".")
        self.expect("}")
        self.expect_kw("goals")
        self.expect("{")
        goals: list[tuple[Atom, ...]] = []
        while not self.at("}"):
            conj = [self._parse_atom()]
            while self.accept("&"):
                conj.append(self._parse_atom())
            self.expect(";")
            goals.append(tuple(conj))
        self.expect("}")
        close = self.expect("}")
        return AgentDecl(
            name.text, tuple(beliefs), tuple(goals), span=kw.span.merge(close.span)
        )


def _number_to_fraction(text: str) -> Fraction:
    if "." in text:
        whole, frac = text.split(".")
        return Fraction(int(whole + frac), 10 ** len(frac))
    return Fraction(int(text))


def parse_spec(source: str) -> SpecAst:
    """Parse source text into a SpecAst; raises ParseDiagnostics on failure."""
    tokens = tokenize(source)
    return _Parser(tokens).parse_spec()
