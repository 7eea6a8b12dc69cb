"""Script parsing and command safety classification.

Statements are split on newlines and semicolons outside quoted spans; the
first token of each statement is the verb. Verbs are matched case-insensitively
against a fixed read-only whitelist and a mutating blacklist; everything else
is Unknown. The probe policy is fail-closed: only ReadOnly commands pass.
The executor policy denies a small destructive subset and allows the rest,
since modification is the executor's job.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import ConfigError, ScriptParseError

READ_ONLY_WHITELIST: frozenset[str] = frozenset(
    {"SELECT", "SHOW", "DESCRIBE", "GET", "LIST", "READ"}
)
MUTATING_BLACKLIST: frozenset[str] = frozenset(
    {"DELETE", "UPDATE", "INSERT", "DROP", "ALTER", "TRUNCATE"}
)
DEFAULT_EXECUTOR_DENY: frozenset[str] = frozenset({"DROP", "TRUNCATE"})

_QUOTES = ("'", '"')


class Classification(str, Enum):
    READ_ONLY = "ReadOnly"
    MUTATING = "Mutating"
    UNKNOWN = "Unknown"


class Policy(str, Enum):
    PROBE = "ProbePolicy"
    EXECUTOR = "ExecutorPolicy"


@dataclass(frozen=True)
class SafetyPolicy:
    """Verb sets driving classification and validation.

    Ships with the default whitelist/blacklist/deny sets; a policy file can
    override any of them.
    """

    whitelist: frozenset[str] = READ_ONLY_WHITELIST
    blacklist: frozenset[str] = MUTATING_BLACKLIST
    executor_deny: frozenset[str] = DEFAULT_EXECUTOR_DENY

    @classmethod
    def from_file(cls, path: str | Path) -> "SafetyPolicy":
        """Load a policy override file.

        Expected JSON shape::

            {"whitelist": [...], "blacklist": [...], "executor_deny": [...]}

        Missing keys keep their defaults. Verbs are uppercased.
        """
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load safety policy {path}: {exc}") from exc

        def verbs(key: str, default: frozenset[str]) -> frozenset[str]:
            if key not in data:
                return default
            return frozenset(str(v).upper() for v in data[key])

        return cls(
            whitelist=verbs("whitelist", READ_ONLY_WHITELIST),
            blacklist=verbs("blacklist", MUTATING_BLACKLIST),
            executor_deny=verbs("executor_deny", DEFAULT_EXECUTOR_DENY),
        )


DEFAULT_POLICY = SafetyPolicy()


@dataclass(frozen=True)
class Command:
    """One parsed statement: uppercased verb, original text preserved."""

    raw_text: str
    verb: str
    arguments: tuple[str, ...]
    classification: Classification


@dataclass(frozen=True)
class Violation:
    index: int
    verb: str
    reason: str


@dataclass(frozen=True)
class SafetyVerdict:
    safe: bool
    violations: tuple[Violation, ...] = ()

    def __post_init__(self):
        if self.safe != (len(self.violations) == 0):
            raise ValueError("verdict safe flag inconsistent with violations")


def classify_verb(verb: str, policy: SafetyPolicy = DEFAULT_POLICY) -> Classification:
    upper = verb.upper()
    if upper in policy.whitelist:
        return Classification.READ_ONLY
    if upper in policy.blacklist:
        return Classification.MUTATING
    return Classification.UNKNOWN


def classify_command(cmd: Command, policy: SafetyPolicy = DEFAULT_POLICY) -> Classification:
    return classify_verb(cmd.verb, policy)


def make_command(statement: str, policy: SafetyPolicy = DEFAULT_POLICY) -> Command:
    """Build a Command from one already-split statement."""
    tokens = statement.split()
    verb = tokens[0].upper() if tokens else ""
    return Command(
        raw_text=statement,
        verb=verb,
        arguments=tuple(tokens[1:]),
        classification=classify_verb(verb, policy),
    )


def _split_statements(script: str) -> list[str]:
    """Split on newline and ';' outside quotes; raises on unterminated quotes."""
    statements: list[str] = []
    buf: list[str] = []
    quote: str | None = None
    line, col = 1, 0
    quote_pos = (1, 0)
    for ch in script:
        col += 1
        if quote is not None:
            buf.append(ch)
            if ch == quote:
                quote = None
            if ch == "\n":
                line += 1
                col = 0
            continue
        if ch in _QUOTES:
            quote = ch
            quote_pos = (line, col)
            buf.append(ch)
        elif ch == ";":
            statements.append("".join(buf))
            buf = []
        elif ch == "\n":
            statements.append("".join(buf))
            buf = []
            line += 1
            col = 0
        else:
            buf.append(ch)
    if quote is not None:
        raise ScriptParseError("unterminated quote", quote_pos[0], quote_pos[1])
    statements.append("".join(buf))
    return statements


def tokenize_script(script: str, policy: SafetyPolicy = DEFAULT_POLICY) -> list[Command]:
    """Parse a script into commands, dropping empty statements."""
    commands: list[Command] = []
    for statement in _split_statements(script):
        stripped = statement.strip()
        if not stripped:
            continue
        commands.append(make_command(stripped, policy))
    return commands


def validate_script(
    commands: list[Command],
    policy_kind: Policy,
    policy: SafetyPolicy = DEFAULT_POLICY,
) -> SafetyVerdict:
    """Validate a command list; the verdict carries every violation."""
    violations: list[Violation] = []
    for i, cmd in enumerate(commands):
        if policy_kind is Policy.PROBE:
            if cmd.classification is not Classification.READ_ONLY:
                reason = (
                    "blacklisted mutating verb"
                    if cmd.classification is Classification.MUTATING
                    else "verb not on read-only whitelist"
                )
                violations.append(Violation(index=i, verb=cmd.verb, reason=reason))
        else:
            if cmd.verb in policy.executor_deny:
                violations.append(
                    Violation(index=i, verb=cmd.verb, reason="destructive verb denied")
                )
    return SafetyVerdict(safe=not violations, violations=tuple(violations))
