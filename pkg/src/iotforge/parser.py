"""Recursive-descent parsers for the three specification languages.

Each entry point returns either a fully validated spec or a non-empty list
of diagnostics; a partially built spec is never handed out. Syntax errors
stop at the first offence, post-parse name checks are collected so several
duplicate-name mistakes surface in one run.
"""

from __future__ import annotations

from .diagnostics import Diagnostic, SourceSpan
from .lexer import EOF, FLOAT, IDENT, INT, PUNCT, SpecSyntaxError, Token, tokenize
from .specs import (
    BUILTIN_NAMES,
    PRIMITIVE_TYPES,
    ActionDecl,
    ActuatorDecl,
    ArchitectureSpec,
    CommandClause,
    ConsumeClause,
    DataItem,
    DeploymentSpec,
    DeviceDecl,
    FieldDecl,
    LogicBinding,
    ParamDecl,
    ProduceClause,
    RecordDecl,
    RegionDecl,
    RequestClause,
    SensorDecl,
    ServiceDecl,
    StorageDecl,
    VocabularySpec,
)

_UNIT_MS = {"ms": 1, "s": 1000, "min": 60000}


class _Parser:
    def __init__(self, source: str, file: str):
        self.tokens = tokenize(source, file)
        self.pos = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def fail(self, message: str, span: SourceSpan | None = None):
        raise SpecSyntaxError(Diagnostic(span or self.cur.span, message))

    def accept_punct(self, ch: str) -> bool:
        if self.cur.is_punct(ch):
            self.advance()
            return True
        return False

    def expect_punct(self, ch: str) -> Token:
        if not self.cur.is_punct(ch):
            self.fail(f"expected {ch!r}, found {self._describe(self.cur)}")
        return self.advance()

    def accept_word(self, word: str) -> bool:
        if self.cur.is_word(word):
            self.advance()
            return True
        return False

    def expect_word(self, word: str) -> Token:
        if not self.cur.is_word(word):
            self.fail(f"expected '{word}', found {self._describe(self.cur)}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.cur.kind != IDENT:
            self.fail(f"expected {what}, found {self._describe(self.cur)}")
        return self.advance()

    def expect_int(self, what: str = "integer") -> tuple[int, Token]:
        if self.cur.kind != INT:
            self.fail(f"expected {what}, found {self._describe(self.cur)}")
        tok = self.advance()
        return int(tok.text), tok

    def expect_eof(self) -> None:
        if self.cur.kind != EOF:
            self.fail(f"unexpected {self._describe(self.cur)}")

    def expect_type(self) -> str:
        tok = self.expect_ident("type name")
        return tok.text

    def ident_list(self) -> list[Token]:
        out = [self.expect_ident()]
        while self.accept_punct(","):
            out.append(self.expect_ident())
        return out

    @staticmethod
    def _describe(tok: Token) -> str:
        if tok.kind == EOF:
            return "end of file"
        return f"{tok.text!r}"


class _Names:
    """Duplicate tracking for one namespace; reports at the second use."""

    def __init__(self, what: str, diags: list[Diagnostic]):
        self.what = what
        self.diags = diags
        self.seen: dict[str, SourceSpan] = {}

    def add(self, tok: Token) -> None:
        if tok.text in self.seen:
            self.diags.append(
                Diagnostic(tok.span, f"duplicate {self.what} '{tok.text}'")
            )
        else:
            self.seen[tok.text] = tok.span


# ---------------------------------------------------------------------------
# Vocabulary language


def parse_vocabulary(source: str, file: str) -> VocabularySpec | list[Diagnostic]:
    try:
        p = _Parser(source, file)
        name_tok = None
        p.expect_word("vocabulary")
        name_tok = p.expect_ident("vocabulary name")
        regions: list[RegionDecl] = []
        records: list[RecordDecl] = []
        sensors: list[SensorDecl] = []
        actuators: list[ActuatorDecl] = []
        storages: list[StorageDecl] = []
        while p.cur.kind != EOF:
            section = p.expect_ident("section keyword")
            p.expect_punct(":")
            if section.text == "regions":
                while p.cur.kind == IDENT and not _starts_section(p):
                    tok = p.advance()
                    p.expect_punct(";")
                    regions.append(RegionDecl(tok.text, tok.span))
            elif section.text == "datatypes":
                while p.cur.is_word("datatype"):
                    records.append(_record_decl(p))
            elif section.text == "resources":
                while True:
                    if p.cur.is_word("sensor"):
                        sensors.append(_sensor_decl(p))
                    elif p.cur.is_word("actuator"):
                        actuators.append(_actuator_decl(p))
                    elif p.cur.is_word("storage"):
                        storages.append(_storage_decl(p))
                    else:
                        break
            else:
                p.fail(
                    f"expected section 'regions', 'datatypes' or 'resources', found {section.text!r}",
                    section.span,
                )
        spec = VocabularySpec(
            name=name_tok.text,
            regions=tuple(regions),
            records=tuple(records),
            sensors=tuple(sensors),
            actuators=tuple(actuators),
            storages=tuple(storages),
            span=name_tok.span,
        )
    except SpecSyntaxError as e:
        return [e.diag]
    diags = _validate_vocabulary(spec)
    return diags if diags else spec


def _starts_section(p: _Parser) -> bool:
    # Section keywords are only recognized when followed by ':'.
    nxt = p.tokens[p.pos + 1] if p.pos + 1 < len(p.tokens) else None
    return (
        p.cur.text in ("regions", "datatypes", "resources")
        and nxt is not None
        and nxt.is_punct(":")
    )


def _record_decl(p: _Parser) -> RecordDecl:
    p.expect_word("datatype")
    name = p.expect_ident("record name")
    p.expect_punct("{")
    fields: list[FieldDecl] = []
    while not p.accept_punct("}"):
        f = p.expect_ident("field name")
        p.expect_punct(":")
        t = p.expect_type()
        p.expect_punct(";")
        fields.append(FieldDecl(f.text, t, f.span))
    if not fields:
        p.fail(f"record '{name.text}' declares no fields", name.span)
    return RecordDecl(name.text, tuple(fields), name.span)


def _sensor_decl(p: _Parser) -> SensorDecl:
    p.expect_word("sensor")
    name = p.expect_ident("sensor name")
    p.expect_punct("{")
    items: list[DataItem] = []
    while not p.accept_punct("}"):
        p.expect_word("generate")
        d = p.expect_ident("data name")
        p.expect_punct(":")
        t = p.expect_type()
        p.expect_punct(";")
        items.append(DataItem(d.text, t, d.span))
    if not items:
        p.fail(f"sensor '{name.text}' generates no data", name.span)
    return SensorDecl(name.text, tuple(items), name.span)


def _actuator_decl(p: _Parser) -> ActuatorDecl:
    p.expect_word("actuator")
    name = p.expect_ident("actuator name")
    p.expect_punct("{")
    actions: list[ActionDecl] = []
    while not p.accept_punct("}"):
        p.expect_word("action")
        a = p.expect_ident("action name")
        p.expect_punct("(")
        params: list[ParamDecl] = []
        if not p.cur.is_punct(")"):
            while True:
                pn = p.expect_ident("parameter name")
                p.expect_punct(":")
                pt = p.expect_type()
                params.append(ParamDecl(pn.text, pt, pn.span))
                if not p.accept_punct(","):
                    break
        p.expect_punct(")")
        p.expect_punct(";")
        actions.append(ActionDecl(a.text, tuple(params), a.span))
    if not actions:
        p.fail(f"actuator '{name.text}' declares no actions", name.span)
    return ActuatorDecl(name.text, tuple(actions), name.span)


def _storage_decl(p: _Parser) -> StorageDecl:
    p.expect_word("storage")
    name = p.expect_ident("storage name")
    p.expect_punct("{")
    p.expect_word("generate")
    d = p.expect_ident("data name")
    p.expect_punct(":")
    dt = p.expect_type()
    p.expect_word("accessed")
    p.expect_punct("-")
    p.expect_word("by")
    k = p.expect_ident("key name")
    p.expect_punct(":")
    kt = p.expect_type()
    p.expect_punct(";")
    p.expect_punct("}")
    return StorageDecl(name.text, d.text, dt, k.text, kt, name.span)


def _validate_vocabulary(spec: VocabularySpec) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    declared = _Names("declaration", diags)
    for r in spec.regions:
        declared.add(Token(IDENT, r.name, r.span))
    for rec in spec.records:
        declared.add(Token(IDENT, rec.name, rec.span))
    for res in spec.resources():
        declared.add(Token(IDENT, res.name, res.span))

    items = _Names("data or action name", diags)
    record_names = {rec.name for rec in spec.records}

    def check_type(t: str, span: SourceSpan) -> None:
        if t not in PRIMITIVE_TYPES and t not in record_names:
            diags.append(Diagnostic(span, f"unknown type '{t}'"))

    for rec in spec.records:
        fields = _Names(f"field in record '{rec.name}'", diags)
        for f in rec.fields:
            fields.add(Token(IDENT, f.name, f.span))
            check_type(f.type, f.span)
    _check_record_cycles(spec, diags)
    for s in spec.sensors:
        for item in s.generates:
            items.add(Token(IDENT, item.name, item.span))
            check_type(item.type, item.span)
    for a in spec.actuators:
        for act in a.actions:
            items.add(Token(IDENT, act.name, act.span))
            params = _Names(f"parameter of action '{act.name}'", diags)
            for prm in act.params:
                params.add(Token(IDENT, prm.name, prm.span))
                check_type(prm.type, prm.span)
    for st in spec.storages:
        items.add(Token(IDENT, st.data_name, st.span))
        check_type(st.data_type, st.span)
        check_type(st.key_type, st.span)
    return diags


def _check_record_cycles(spec: VocabularySpec, diags: list[Diagnostic]) -> None:
    by_name = {rec.name: rec for rec in spec.records}

    def reaches(name: str, target: str, seen: set[str]) -> bool:
        rec = by_name.get(name)
        if rec is None or name in seen:
            return False
        seen.add(name)
        for f in rec.fields:
            if f.type == target or reaches(f.type, target, seen):
                return True
        return False

    for rec in spec.records:
        if reaches(rec.name, rec.name, set()):
            diags.append(
                Diagnostic(rec.span, f"record '{rec.name}' is recursively defined")
            )


# ---------------------------------------------------------------------------
# Architecture language


def parse_architecture(source: str, file: str) -> ArchitectureSpec | list[Diagnostic]:
    try:
        p = _Parser(source, file)
        p.expect_word("architecture")
        name_tok = p.expect_ident("architecture name")
        p.expect_word("uses")
        vocab_tok = p.expect_ident("vocabulary name")
        services: list[ServiceDecl] = []
        while p.cur.kind != EOF:
            services.append(_service_decl(p))
        spec = ArchitectureSpec(
            name=name_tok.text,
            vocabulary_name=vocab_tok.text,
            services=tuple(services),
            span=name_tok.span,
        )
    except SpecSyntaxError as e:
        return [e.diag]
    diags = _validate_architecture(spec)
    return diags if diags else spec


def _service_decl(p: _Parser) -> ServiceDecl:
    p.expect_word("service")
    name = p.expect_ident("service name")
    p.expect_punct("{")
    p.expect_word("scope")
    p.expect_punct(":")
    scope = p.expect_ident("region name")
    p.expect_punct(";")

    consumes: list[ConsumeClause] = []
    produces: list[ProduceClause] = []
    requests: list[RequestClause] = []
    commands: list[CommandClause] = []
    logic: LogicBinding | None = None
    while not p.accept_punct("}"):
        if p.accept_word("consume"):
            d = p.expect_ident("data name")
            window = None
            period = None
            if p.accept_word("window"):
                window, wtok = p.expect_int("window size")
                if window < 1:
                    p.fail("window must be >= 1", wtok.span)
            if p.accept_word("every"):
                value, vtok = p.expect_int("period value")
                unit = p.expect_ident("time unit")
                if unit.text not in _UNIT_MS:
                    p.fail("expected time unit 'ms', 's' or 'min'", unit.span)
                period = value * _UNIT_MS[unit.text]
                if period < 1:
                    p.fail("period must be >= 1", vtok.span)
            p.expect_punct(";")
            consumes.append(ConsumeClause(d.text, window, period, d.span))
        elif p.accept_word("produce"):
            d = p.expect_ident("data name")
            p.expect_punct(":")
            t = p.expect_type()
            p.expect_punct(";")
            produces.append(ProduceClause(d.text, t, d.span))
        elif p.accept_word("request"):
            d = p.expect_ident("data name")
            p.expect_punct("(")
            key = p.expect_ident("key argument")
            p.expect_punct(")")
            p.expect_word("from")
            st = p.expect_ident("storage name")
            p.expect_punct(";")
            requests.append(RequestClause(d.text, key.text, st.text, d.span))
        elif p.accept_word("command"):
            a = p.expect_ident("action name")
            p.expect_punct("(")
            args: list[Token] = []
            if not p.cur.is_punct(")"):
                args = p.ident_list()
            p.expect_punct(")")
            p.expect_word("to")
            actuator = p.expect_ident("actuator name")
            p.expect_punct(";")
            commands.append(
                CommandClause(a.text, actuator.text, tuple(t.text for t in args), a.span)
            )
        elif p.cur.is_word("logic"):
            tok = p.advance()
            p.expect_punct(":")
            if logic is not None:
                p.fail(f"duplicate logic clause in service '{name.text}'", tok.span)
            logic = _logic_spec(p)
            p.expect_punct(";")
        else:
            p.fail(
                f"expected 'consume', 'produce', 'request', 'command', 'logic' or '}}', found {p._describe(p.cur)}"
            )
    if logic is None:
        p.fail(f"service '{name.text}' has no logic clause", name.span)
    return ServiceDecl(
        name=name.text,
        scope_region=scope.text,
        consumes=tuple(consumes),
        produces=tuple(produces),
        requests=tuple(requests),
        commands=tuple(commands),
        logic=logic,
        span=name.span,
    )


def _logic_spec(p: _Parser) -> LogicBinding:
    if p.accept_word("builtin"):
        first = p.expect_ident("builtin name")
        parts = [first.text]
        while p.accept_punct("-"):
            parts.append(p.expect_ident("builtin name").text)
        builtin = "-".join(parts)
        if builtin not in BUILTIN_NAMES:
            p.fail(f"unknown builtin '{builtin}'", first.span)
        params: list[tuple[str, int | float | str]] = []
        if p.accept_punct("("):
            if not p.cur.is_punct(")"):
                while True:
                    k = p.expect_ident("parameter name")
                    p.expect_punct("=")
                    params.append((k.text, _kv_value(p)))
                    if not p.accept_punct(","):
                        break
            p.expect_punct(")")
        return LogicBinding("builtin", builtin, tuple(params), span=first.span)
    if p.accept_word("extern"):
        key = p.expect_ident("handler key")
        return LogicBinding("extern", handler_key=key.text, span=key.span)
    p.fail(f"expected 'builtin' or 'extern', found {p._describe(p.cur)}")
    raise AssertionError("unreachable")


def _kv_value(p: _Parser) -> int | float | str:
    negative = p.accept_punct("-")
    if p.cur.kind == INT:
        v = int(p.advance().text)
        return -v if negative else v
    if p.cur.kind == FLOAT:
        v = float(p.advance().text)
        return -v if negative else v
    if negative:
        p.fail("expected number after '-'")
    return p.expect_ident("parameter value").text


def _validate_architecture(spec: ArchitectureSpec) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    services = _Names("service", diags)
    produced = _Names("produced data name", diags)
    for svc in spec.services:
        services.add(Token(IDENT, svc.name, svc.span))
        consumed = _Names(f"consume in service '{svc.name}'", diags)
        for c in svc.consumes:
            consumed.add(Token(IDENT, c.data_name, c.span))
        for pr in svc.produces:
            produced.add(Token(IDENT, pr.data_name, pr.span))
        requested = _Names(f"request in service '{svc.name}'", diags)
        for rq in svc.requests:
            requested.add(Token(IDENT, rq.data_name, rq.span))
    return diags


# ---------------------------------------------------------------------------
# Deployment language


def parse_deployment(source: str, file: str) -> DeploymentSpec | list[Diagnostic]:
    try:
        p = _Parser(source, file)
        p.expect_word("deployment")
        name_tok = p.expect_ident("deployment name")
        p.expect_word("uses")
        vocab_tok = p.expect_ident("vocabulary name")
        devices: list[DeviceDecl] = []
        while p.cur.kind != EOF:
            devices.append(_device_decl(p))
        spec = DeploymentSpec(
            name=name_tok.text,
            vocabulary_name=vocab_tok.text,
            devices=tuple(devices),
            span=name_tok.span,
        )
    except SpecSyntaxError as e:
        return [e.diag]
    diags = _validate_deployment(spec)
    return diags if diags else spec


def _device_decl(p: _Parser) -> DeviceDecl:
    p.expect_word("device")
    name = p.expect_ident("device name")
    p.expect_punct("{")
    p.expect_word("region")
    p.expect_punct(":")
    coords: list[tuple[str, int]] = []
    coord_names: set[str] = set()
    while True:
        r = p.expect_ident("region name")
        p.expect_punct("=")
        v, _ = p.expect_int("region value")
        if r.text in coord_names:
            p.fail(f"duplicate region '{r.text}' in device '{name.text}'", r.span)
        coord_names.add(r.text)
        coords.append((r.text, v))
        if not p.accept_punct(","):
            break
    p.expect_punct(";")
    p.expect_word("resources")
    p.expect_punct(":")
    resources = p.ident_list()
    seen: set[str] = set()
    for tok in resources:
        if tok.text in seen:
            p.fail(f"duplicate resource '{tok.text}' in device '{name.text}'", tok.span)
        seen.add(tok.text)
    p.expect_punct(";")
    p.expect_word("platform")
    p.expect_punct(":")
    platform = p.expect_ident("platform tag")
    p.expect_punct(";")
    p.expect_punct("}")
    return DeviceDecl(
        name=name.text,
        region_coords=tuple(coords),
        resources=tuple(t.text for t in resources),
        platform=platform.text,
        span=name.span,
    )


def _validate_deployment(spec: DeploymentSpec) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    devices = _Names("device", diags)
    for d in spec.devices:
        devices.add(Token(IDENT, d.name, d.span))
    return diags
