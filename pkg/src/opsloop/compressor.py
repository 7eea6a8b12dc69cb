"""Sliding-window context compression with criticality-preserving summarization.

Pipeline: tokenize, slice into overlapping windows (stride = window_size x
overlap_ratio), extract critical items per window, summarize each window under
a token budget, merge overlapping output (dropping duplicate sentences and
critical spans), and run one secondary pass at half budget if the merged text
still exceeds the retained-size allowance.

The default summarizer is extractive and deterministic: sentences holding
critical spans are kept first (by severity, then position); remaining budget
is filled with the highest-scoring ordinary sentences. A different summarizer
(e.g. the remote adapter) can be plugged in through the Summarizer protocol.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol, Sequence

from .errors import ConfigError, ContractViolationError
from .memory import COMPRESSED_TTL_SECONDS, CompressedContextEntry, MemoryStore

DEFAULT_WINDOW_SIZE = 768
DEFAULT_OVERLAP_RATIO = 0.5
DEFAULT_TARGET_RATIO = 0.72

# Planted ground-truth markers embedded in scenario logs.
MARKER_PATTERN = re.compile(r"\[CRIT:([A-Za-z0-9_.-]+)\]")


class CriticalKind(str, Enum):
    ERROR_CODE = "ErrorCode"
    FAULT_SIGNATURE = "FaultSignature"
    THRESHOLD_BREACH = "ThresholdBreach"
    CAUSAL_MARKER = "CausalMarker"


# Lower rank = kept first when the budget is tight.
_SEVERITY_RANK = {
    CriticalKind.ERROR_CODE: 0,
    CriticalKind.FAULT_SIGNATURE: 1,
    CriticalKind.THRESHOLD_BREACH: 2,
    CriticalKind.CAUSAL_MARKER: 3,
}


@dataclass(frozen=True)
class Window:
    index: int
    start: int
    end: int
    tokens: tuple[str, ...]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class CriticalItem:
    kind: CriticalKind
    text: str
    source_window: int
    tag_id: str


@dataclass(frozen=True)
class CriticalRule:
    """One extraction rule: a regex and the kind its matches carry.

    When ``tag_group`` is set, the tag id is taken from that capture group
    (used for planted markers); otherwise the tag is a content hash.
    """

    kind: CriticalKind
    pattern: str
    tag_group: int | None = None

    def compiled(self) -> re.Pattern[str]:
        return re.compile(self.pattern)


DEFAULT_RULES: tuple[CriticalRule, ...] = (
    CriticalRule(CriticalKind.FAULT_SIGNATURE, MARKER_PATTERN.pattern, tag_group=1),
    CriticalRule(CriticalKind.ERROR_CODE, r"\b[A-Z][A-Z0-9]*(?:-|_)\d{2,}\b"),
    CriticalRule(
        CriticalKind.THRESHOLD_BREACH,
        r"\b(?:cpu|memory|latency|error[-_ ]rate|availability)[ \t]*"
        r"(?:>=|<=|>|<|above|below|exceeds|exceeded)[ \t]*\d+(?:\.\d+)?%?",
    ),
    CriticalRule(
        CriticalKind.CAUSAL_MARKER,
        r"\b(?:caused by|due to|triggered(?: by)?)\b[^.;\n]{0,60}",
    ),
)


def load_rules(path: str | Path) -> tuple[CriticalRule, ...]:
    """Load extraction rules from a JSON file.

    Shape: ``[{"kind": "ErrorCode", "pattern": "...", "tag_group": null}, ...]``
    """
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load rules {path}: {exc}") from exc
    rules = []
    for item in raw:
        rules.append(
            CriticalRule(
                kind=CriticalKind(item["kind"]),
                pattern=item["pattern"],
                tag_group=item.get("tag_group"),
            )
        )
    if not rules:
        raise ConfigError(f"rule file {path} is empty")
    return tuple(rules)


def signature_rules(phrases: Sequence[str]) -> tuple[CriticalRule, ...]:
    """Fault-signature rules for a lexicon of phrases (e.g. the simulator's)."""
    return tuple(
        CriticalRule(CriticalKind.FAULT_SIGNATURE, re.escape(phrase))
        for phrase in phrases
    )


def tokenize(text: str) -> list[str]:
    """Whitespace tokenization; punctuation stays attached to tokens."""
    return text.split()


def make_windows(
    tokens: Sequence[str], window_size: int, overlap_ratio: float
) -> list[Window]:
    """Slice tokens into sliding windows with stride window_size x overlap_ratio.

    An overlap of 0 degenerates to disjoint windows (stride = window_size);
    inputs no longer than one window produce a single whole-input window.
    """
    if window_size < 2:
        raise ConfigError("window_size must be >= 2")
    if not 0 <= overlap_ratio < 1:
        raise ConfigError("overlap_ratio must be in [0, 1)")
    stride_f = window_size * overlap_ratio
    if overlap_ratio == 0:
        stride = window_size
    else:
        if abs(stride_f - round(stride_f)) > 1e-9:
            raise ConfigError(
                f"window_size * overlap_ratio = {stride_f} is not an integer"
            )
        stride = int(round(stride_f))
    n = len(tokens)
    toks = tuple(tokens)
    if n <= window_size:
        return [Window(index=0, start=0, end=n, tokens=toks)]
    windows = []
    i = 0
    while i * stride < n:
        start = i * stride
        end = min(start + window_size, n)
        windows.append(Window(index=i, start=start, end=end, tokens=toks[start:end]))
        i += 1
    return windows


def _content_tag(kind: CriticalKind, text: str) -> str:
    digest = hashlib.sha1(f"{kind.value}:{text}".encode("utf-8")).hexdigest()
    return digest[:12]


def extract_critical(
    window: Window, rules: Sequence[CriticalRule] = DEFAULT_RULES
) -> list[CriticalItem]:
    """Pattern-match critical spans in a window; one item per match."""
    if not rules:
        raise ContractViolationError("extraction needs a non-empty rule set")
    items: list[CriticalItem] = []
    seen: set[tuple[CriticalKind, str, str]] = set()
    text = window.text
    for rule in rules:
        for match in rule.compiled().finditer(text):
            span = match.group(0)
            if rule.tag_group is not None:
                tag = match.group(rule.tag_group)
            else:
                tag = _content_tag(rule.kind, span)
            key = (rule.kind, span, tag)
            if key in seen:
                continue
            seen.add(key)
            items.append(
                CriticalItem(
                    kind=rule.kind, text=span, source_window=window.index, tag_id=tag
                )
            )
    return items


class Summarizer(Protocol):
    """Behavioral contract for window summarization.

    The returned summary must fit the token budget, and every supplied
    critical item's text should be preserved whenever the budget allows.
    """

    def summarize(
        self,
        tokens: Sequence[str],
        critical_items: Sequence[CriticalItem],
        budget: int,
    ) -> str: ...


_SENTENCE_SPLIT = re.compile(r"(?<=[.!?;])\s+|\n+")


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT.split(text) if s.strip()]


class ExtractiveSummarizer:
    """Deterministic extractive summarizer.

    Sentences containing critical spans are emitted first (ordered by the
    most severe item they contain, then by position). If a critical sentence
    does not fit the remaining budget, the bare critical span is emitted
    instead. Ordinary sentences are appended only after every critical span
    has been placed, scored by criticality count, then earlier position,
    then length.
    """

    def summarize(
        self,
        tokens: Sequence[str],
        critical_items: Sequence[CriticalItem],
        budget: int,
    ) -> str:
        if budget <= 0:
            return ""
        sentences = split_sentences(" ".join(tokens))
        unique: dict[tuple[CriticalKind, str, str], CriticalItem] = {}
        for item in critical_items:
            unique.setdefault((item.kind, item.text, item.tag_id), item)
        items = sorted(
            unique.values(),
            key=lambda it: (_SEVERITY_RANK[it.kind], it.source_window, it.text),
        )

        picked: list[str] = []
        used = 0
        emitted: set[str] = set()

        def try_emit(text: str) -> bool:
            nonlocal used
            count = len(text.split())
            if text in emitted or count == 0:
                return True
            if used + count > budget:
                return False
            picked.append(text)
            emitted.add(text)
            used += count
            return True

        all_placed = True
        for item in items:
            sentence = next((s for s in sentences if item.text in s), None)
            placed = False
            if sentence is not None and sentence in emitted:
                placed = True
            elif sentence is not None and try_emit(sentence):
                placed = True
            elif try_emit(item.text):
                placed = True
            if not placed:
                all_placed = False

        if all_placed:
            spans = [it.text for it in items]
            scored = []
            for pos, sentence in enumerate(sentences):
                if sentence in emitted:
                    continue
                crit_count = sum(1 for span in spans if span in sentence)
                scored.append((-crit_count, pos, -len(sentence), sentence))
            for *_, sentence in sorted(scored):
                if used >= budget:
                    break
                words = sentence.split()
                room = budget - used
                if len(words) <= room:
                    try_emit(sentence)
                else:
                    # Hard cap: truncate the final sentence to the budget.
                    try_emit(" ".join(words[:room]))
                    break
        return " ".join(picked)


def merge_overlaps(summaries: Sequence[str]) -> str:
    """Concatenate window summaries, dropping repeated sentences.

    Overlapping windows tend to re-emit the same critical sentences; only the
    first occurrence survives the merge.
    """
    seen: set[str] = set()
    out: list[str] = []
    for summary in summaries:
        for sentence in split_sentences(summary):
            if sentence in seen:
                continue
            seen.add(sentence)
            out.append(sentence)
    return " ".join(out)


def ccr(raw_token_count: int, compressed_token_count: int) -> float:
    """Size-reduction fraction: 1 - compressed/raw."""
    if raw_token_count <= 0:
        raise ContractViolationError("raw token count must be positive")
    if compressed_token_count < 0 or compressed_token_count > raw_token_count:
        raise ContractViolationError(
            "compressed token count must be in [0, raw token count]"
        )
    return 1.0 - compressed_token_count / raw_token_count


def ips(ground_truth_tags: frozenset[str] | set[str], entry: CompressedContextEntry) -> float:
    """Fraction of ground-truth critical tags surviving in a compressed entry."""
    truth = set(ground_truth_tags)
    if not truth:
        return 1.0
    return len(entry.preserved_tags & truth) / len(truth)


class Compressor:
    """Alg.-style compression pipeline around a pluggable summarizer."""

    def __init__(
        self,
        summarizer: Summarizer | None = None,
        window_size: int = DEFAULT_WINDOW_SIZE,
        overlap_ratio: float = DEFAULT_OVERLAP_RATIO,
        target_ratio: float = DEFAULT_TARGET_RATIO,
        rules: Sequence[CriticalRule] = DEFAULT_RULES,
        memory: MemoryStore | None = None,
    ):
        if not 0 < target_ratio < 1:
            raise ConfigError("target_ratio must be in (0, 1)")
        self.summarizer = summarizer or ExtractiveSummarizer()
        self.window_size = window_size
        self.overlap_ratio = overlap_ratio
        self.target_ratio = target_ratio
        self.rules = tuple(rules)
        self.memory = memory
        self._counter = 0

    def _next_id(self) -> str:
        self._counter += 1
        return f"ctx-{self._counter:06d}"

    def _check_budget(self, summary: str, budget: int) -> None:
        count = len(summary.split())
        if count > budget:
            raise ContractViolationError(
                f"summarizer produced {count} tokens over budget {budget}"
            )

    def compress(
        self,
        raw_tokens: Sequence[str],
        source_entry_ids: frozenset[str] | set[str] | None = None,
        created_at: float = 0.0,
        allowed_tags: frozenset[str] | None = None,
    ) -> CompressedContextEntry:
        """Compress a token stream into one compressed-context entry.

        When the compressor was built with a memory store, the entry is also
        written to the compressed layer. ``allowed_tags`` restricts the
        preserved-tag set to the tags carried by the source entries, keeping
        the compressed-layer invariant satisfiable.
        """
        if not raw_tokens:
            raise ContractViolationError("cannot compress empty input")
        windows = make_windows(raw_tokens, self.window_size, self.overlap_ratio)
        per_window_budget = max(1, int(self.window_size * (1 - self.target_ratio)))

        seen_items: dict[tuple[CriticalKind, str, str], CriticalItem] = {}
        summaries: list[str] = []
        for window in windows:
            items = extract_critical(window, self.rules)
            for item in items:
                seen_items.setdefault((item.kind, item.text, item.tag_id), item)
            summary = self.summarizer.summarize(window.tokens, items, per_window_budget)
            self._check_budget(summary, per_window_budget)
            summaries.append(summary)
        all_items = list(seen_items.values())

        merged = merge_overlaps(summaries)
        raw_count = len(raw_tokens)
        allowance = 1 - self.target_ratio
        if len(merged.split()) / raw_count > allowance:
            secondary_budget = max(1, int(raw_count * allowance) // 2)
            merged = self.summarizer.summarize(
                merged.split(), all_items, secondary_budget
            )
            self._check_budget(merged, secondary_budget)

        preserved = frozenset(
            item.tag_id for item in all_items if item.text in merged
        )
        if allowed_tags is not None:
            preserved &= allowed_tags
        entry = CompressedContextEntry(
            entry_id=self._next_id(),
            created_at=created_at,
            summary_text=merged,
            source_entry_ids=frozenset(source_entry_ids or {"adhoc-input"}),
            preserved_tags=preserved,
            ttl=self.memory.compressed_ttl if self.memory else COMPRESSED_TTL_SECONDS,
            degraded=bool(getattr(self.summarizer, "degraded", False)),
        )
        # Ad-hoc token streams have no raw-layer provenance, so they are
        # returned without being persisted.
        if self.memory is not None and source_entry_ids:
            self.memory.put_compressed(entry)
        return entry
