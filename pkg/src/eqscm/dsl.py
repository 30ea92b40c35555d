"""Line-oriented model definition language (``.rxn`` files).

Grammar, one statement per line, ``#`` starts a comment, blank lines ignored::

    MODEL <name>
    INPUT <id> = <int>
    SPECIES <id> TOTAL=<int> INIT=<int>
    ACTIVATE <target> BY <regulator> RATE <float>
    DEACTIVATE <target> BY <regulator> RATE <float>
    DEACTIVATE <target> AUTO RATE <float>

The parser reports every malformed line (not just the first) with 1-based
line/column positions, and never raises on arbitrary input.  Reference
resolution is order-independent: a reaction may name a species declared
further down.  Structural checks that need the whole network (cycles, missing
reaction pairs) live in :func:`eqscm.network.validate`, not here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .network import (
    AUTO,
    InputSignal,
    Reaction,
    ReactionKind,
    ReactionNetwork,
    Species,
)

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
TOKEN_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"  # or "warning"

    def format(self, origin: str = "<string>") -> str:
        return f"{origin}:{self.line}:{self.column}: {self.severity}: {self.message}"


@dataclass
class ParseResult:
    network: ReactionNetwork | None
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)
    origin: str = "<string>"

    @property
    def ok(self) -> bool:
        return self.network is not None

    def errors(self) -> list[ParseDiagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]

    def format_diagnostics(self) -> str:
        return "\n".join(d.format(self.origin) for d in self.diagnostics)


@dataclass
class _Token:
    text: str
    column: int  # 1-based


def _tokenize(line: str) -> list[_Token]:
    code = line.split("#", 1)[0]
    return [_Token(m.group(), m.start() + 1) for m in TOKEN_RE.finditer(code)]


def parse_model(text: str, origin: str = "<string>") -> ParseResult:
    """Parse source text; returns the network or all diagnostics."""
    diags: list[ParseDiagnostic] = []
    model_name: str | None = None
    species: list[Species] = []
    inputs: list[InputSignal] = []
    # reactions kept with their line for second-pass reference errors
    pending: list[tuple[int, _Token, _Token | None, Reaction]] = []
    declared: dict[str, str] = {}  # id -> "species" | "input"

    def err(line_no: int, col: int, msg: str) -> None:
        diags.append(ParseDiagnostic(line_no, col, msg))

    for line_no, raw in enumerate(text.splitlines(), start=1):
        toks = _tokenize(raw)
        if not toks:
            continue
        head = toks[0]
        if head.text == "MODEL":
            if len(toks) != 2:
                err(line_no, head.column, "expected: MODEL <name>")
                continue
            if model_name is not None:
                err(line_no, head.column, "duplicate MODEL statement")
                continue
            model_name = toks[1].text
        elif head.text == "INPUT":
            if len(toks) != 4 or toks[2].text != "=":
                err(line_no, head.column, "expected: INPUT <id> = <int>")
                continue
            name = _ident(toks[1], line_no, diags)
            value = _int(toks[3], line_no, diags, minimum=0, what="input value")
            if name is None or value is None:
                continue
            if name in declared:
                err(line_no, toks[1].column, f"duplicate declaration of {name!r}")
                continue
            declared[name] = "input"
            inputs.append(InputSignal(name, value))
        elif head.text == "SPECIES":
            if len(toks) != 4:
                err(line_no, head.column, "expected: SPECIES <id> TOTAL=<int> INIT=<int>")
                continue
            name = _ident(toks[1], line_no, diags)
            total = _kv_int(toks[2], "TOTAL", line_no, diags, minimum=1)
            init = _kv_int(toks[3], "INIT", line_no, diags, minimum=0)
            if name is None or total is None or init is None:
                continue
            if init > total:
                err(line_no, toks[3].column, f"INIT {init} exceeds TOTAL {total}")
                continue
            if name in declared:
                err(line_no, toks[1].column, f"duplicate declaration of {name!r}")
                continue
            declared[name] = "species"
            species.append(Species(name, total, init))
        elif head.text in ("ACTIVATE", "DEACTIVATE"):
            kind = ReactionKind.ACTIVATE if head.text == "ACTIVATE" else ReactionKind.DEACTIVATE
            rx = _parse_reaction(kind, toks, line_no, diags)
            if rx is not None:
                target_tok = toks[1]
                reg_tok = toks[3] if rx.regulator is not AUTO else None
                pending.append((line_no, target_tok, reg_tok, rx))
        else:
            err(line_no, head.column, f"unknown statement {head.text!r}")

    if model_name is None:
        diags.insert(0, ParseDiagnostic(1, 1, "missing MODEL statement"))

    reactions: list[Reaction] = []
    seen_keys: dict[str, int] = {}
    for line_no, target_tok, reg_tok, rx in pending:
        ok = True
        target_kind = declared.get(rx.target)
        if target_kind is None:
            err(line_no, target_tok.column, f"unknown species {rx.target!r}")
            ok = False
        elif target_kind == "input":
            err(line_no, target_tok.column, f"cannot target input signal {rx.target!r}")
            ok = False
        if rx.regulator is not AUTO and rx.regulator not in declared:
            assert reg_tok is not None
            err(line_no, reg_tok.column, f"unknown id {rx.regulator!r}")
            ok = False
        if rx.key in seen_keys:
            err(line_no, target_tok.column, f"duplicate reaction (first at line {seen_keys[rx.key]})")
            ok = False
        else:
            seen_keys[rx.key] = line_no
        if ok:
            reactions.append(rx)

    errors = [d for d in diags if d.severity == "error"]
    if errors:
        return ParseResult(None, diags, origin)
    net = ReactionNetwork(
        name=model_name or "",
        species=tuple(species),
        inputs=tuple(inputs),
        reactions=tuple(reactions),
    )
    return ParseResult(net, diags, origin)


def parse_model_bytes(data: bytes, origin: str = "<bytes>") -> ParseResult:
    """Parse raw bytes; undecodable sequences become replacement characters."""
    return parse_model(data.decode("utf-8", errors="replace"), origin)


def _ident(tok: _Token, line_no: int, diags: list[ParseDiagnostic]) -> str | None:
    if IDENT_RE.match(tok.text):
        return tok.text
    diags.append(ParseDiagnostic(line_no, tok.column, f"invalid identifier {tok.text!r}"))
    return None


def _int(
    tok: _Token, line_no: int, diags: list[ParseDiagnostic], minimum: int, what: str
) -> int | None:
    try:
        value = int(tok.text)
    except ValueError:
        diags.append(ParseDiagnostic(line_no, tok.column, f"{what} must be an integer, got {tok.text!r}"))
        return None
    if value < minimum:
        diags.append(ParseDiagnostic(line_no, tok.column, f"{what} must be >= {minimum}, got {value}"))
        return None
    return value


def _kv_int(
    tok: _Token, keyword: str, line_no: int, diags: list[ParseDiagnostic], minimum: int
) -> int | None:
    prefix = keyword + "="
    if not tok.text.startswith(prefix):
        diags.append(ParseDiagnostic(line_no, tok.column, f"expected {prefix}<int>, got {tok.text!r}"))
        return None
    body = _Token(tok.text[len(prefix):], tok.column + len(prefix))
    return _int(body, line_no, diags, minimum=minimum, what=keyword)


def _parse_reaction(
    kind: ReactionKind, toks: list[_Token], line_no: int, diags: list[ParseDiagnostic]
) -> Reaction | None:
    head = toks[0]
    auto_form = len(toks) == 5 and toks[2].text == "AUTO" and toks[3].text == "RATE"
    by_form = len(toks) == 6 and toks[2].text == "BY" and toks[4].text == "RATE"
    if not auto_form and not by_form:
        shape = f"expected: {head.text} <target> BY <regulator> RATE <float>"
        if kind is ReactionKind.DEACTIVATE:
            shape += " or DEACTIVATE <target> AUTO RATE <float>"
        diags.append(ParseDiagnostic(line_no, head.column, shape))
        return None
    if auto_form and kind is ReactionKind.ACTIVATE:
        diags.append(ParseDiagnostic(line_no, toks[2].column, "AUTO is only legal for DEACTIVATE"))
        return None
    target = _ident(toks[1], line_no, diags)
    regulator: str | None
    if auto_form:
        regulator = AUTO
        rate_tok = toks[4]
    else:
        regulator = _ident(toks[3], line_no, diags)
        if regulator is None:
            return None
        rate_tok = toks[5]
    if target is None:
        return None
    try:
        rate = float(rate_tok.text)
    except ValueError:
        diags.append(ParseDiagnostic(line_no, rate_tok.column, f"rate must be a number, got {rate_tok.text!r}"))
        return None
    if not (rate > 0) or rate == float("inf"):
        diags.append(ParseDiagnostic(line_no, rate_tok.column, "rate must be positive"))
        return None
    return Reaction(kind, target, regulator, rate)


# ---------------------------------------------------------------------------
# serialization


def canonicalize(network: ReactionNetwork) -> ReactionNetwork:
    """Sort declarations and reactions into the canonical order used by serialize."""
    return ReactionNetwork(
        name=network.name,
        species=tuple(sorted(network.species, key=lambda s: s.name)),
        inputs=tuple(sorted(network.inputs, key=lambda i: i.name)),
        reactions=tuple(
            sorted(network.reactions, key=lambda r: (r.target, r.kind.value, r.regulator or ""))
        ),
    )


def serialize_model(network: ReactionNetwork) -> str:
    """Render canonical source text; ``parse_model`` inverts it exactly."""
    net = canonicalize(network)
    lines = [f"MODEL {net.name}"]
    for inp in net.inputs:
        lines.append(f"INPUT {inp.name} = {inp.value}")
    for sp in net.species:
        lines.append(f"SPECIES {sp.name} TOTAL={sp.total} INIT={sp.init_active}")
    for rx in net.reactions:
        word = rx.kind.value.upper()
        if rx.regulator is AUTO:
            lines.append(f"DEACTIVATE {rx.target} AUTO RATE {rx.rate!r}")
        else:
            lines.append(f"{word} {rx.target} BY {rx.regulator} RATE {rx.rate!r}")
    return "\n".join(lines) + "\n"
