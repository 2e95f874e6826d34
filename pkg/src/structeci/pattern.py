"""Causal-pattern extraction via prompted LLM calls.

Labeled negatives are classified by rule, never by the LLM. Positives
and unlabeled queries go through mode-specific prompts whose wording is
frozen against golden files.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .corpus import Sample
from .errors import DataError, GatewayError, StructEciError
from .jsonl import append_jsonl, read_jsonl
from .llm_gateway import Gateway, text_digest, user_request

logger = logging.getLogger(__name__)

MODE_POSITIVE = "positive"
MODE_INFERENCE = "inference"

PROVENANCE_LLM = "llm"
PROVENANCE_RULE = "negative-rule"
PROVENANCE_CACHE = "cache"


class CausalPattern(str, Enum):
    DIRECT = "Direct"
    CHAIN = "Chain"
    COLLIDER = "Collider"
    FORK = "Fork"
    COREFERENCE = "Coreference"
    NO = "No"


class PatternParseError(StructEciError):
    """No usable pattern found in an LLM response."""


_PROMPT_HEAD = "TEXT: {text}, EVENT X: {source}, EVENT Y: {target}.\n"

_QUESTION_POSITIVE = (
    "QUESTION: There is a causal relationship between EVENT X and EVENT Y. Please follow the "
    "following instructions to explain why there exists a causal relationship between X and Y "
    "based on the given text.\n"
    'NOTE: You should put the final answer in JSON format: {{"pattern": THE CAUSAL PATTERN YOU '
    'FIND. DO NOT ANSWER "None" or "No".}}\n'
)

_QUESTION_INFERENCE = (
    "QUESTION: Determine whether there is a causal relationship between EVENT X and EVENT Y.\n"
    'NOTE: You should put the final answer in JSON format: {{"pattern": THE CAUSAL PATTERN YOU '
    'FIND. IF NO PATTERN RULES ARE MET, GIVE "No".}}\n'
)

_INSTRUCTIONS_COMMON = (
    "- Instructions:\n"
    '1. Analyze and determine whether X and Y have direct causal relationship, and meet the '
    'causal pattern rule "Direct". If so, answer causal pattern as "Direct"; If not, continue '
    "to analyze.\n"
    "2. Determine which indirect causal pattern given below the given input and events satisfy. "
    "Note: If X and Y have the indirect causal relationship, they must satisfy to one of the "
    "following patterns.\n"
    "3. Consider whether there are mediators between events X and Y: write down other events "
    "(or entities) that relates to X, and other events (or entities) that relates to Y, and "
    "determine whether there is any intersection between the events (or entities) that relate "
    "to both events. Note: Mediators can be given explicitly from the input text. If not given, "
    "you can also use common sense to think about whether there are implicit mediators.\n"
)

_INSTRUCTION_4_POSITIVE = (
    "4. Finally, analyze all the following patterns ONE-BY-ONE to determine whether the given "
    'text and events satisfy. DO NOT answer "None" or "No".\n'
)

_INSTRUCTION_4_INFERENCE = (
    "4. Finally, analyze all the following patterns ONE-BY-ONE to determine whether the given "
    'text and events satisfy. If no pattern rules are met, give "No"\n'
)

_PATTERN_RULES = (
    "- Pattern Rules:\n"
    "Direct: If the text explicitly states a causal relationship between X and Y without "
    'involving any mediating event (Z), then the causal connection is "Direct". This means '
    "that X directly influences Y, or Y directly influences X, with no intermediary mentioned.\n"
    "\n"
    "Coreference of X: In the text, if an event with the same or similar meaning as the X can "
    "be found, and this similar event has a causal relationship with Y, then there is a causal "
    "relationship between X and Y.\n"
    "\n"
    "Coreference of Y: In the text, if an event with the same or similar meaning as the Y can "
    "be found, and this similar event has a causal relationship with X, then there is a causal "
    "relationship between X and Y.\n"
    "\n"
    "Collider: In the text, If there are one or multiple mediators (Z) that both events X and Y "
    "have causal relationship to: Then consider specific rule: First, it satisfies that it is "
    "related to X and Y respectively, then it satisfies that X acts on Z and Y acts on Z, i.e. "
    "X -> Z and Y -> Z. Therefore, it can be concluded that there is a causal relationship "
    "between X and Y.\n"
    "\n"
    "Fork: In text, if there are one or multiple mediators (Z) that both events X and Y have "
    "causal relationship to: Then consider specific rule: First, it satisfies that it is "
    "related to X and Y respectively, then it satisfies that Z acts on X and Z acts on Y, i.e. "
    "Z -> X and Z -> Y. Therefore, it can be concluded that there is a causal relationship "
    "between X and Y.\n"
    "\n"
    "Chain: In the text, if there are at least one or multiple mediators (Z) that both events X "
    "and Y have causal relationship to: Then consider specific rules: First, a mediator "
    "satisfies that it is related to X and Y respectively, then it satisfies that X acts on Z "
    "and Z acts on Y, i.e. they form a causal chain structure: X -> Z -> Y (or inversely, "
    "Y -> Z -> X). Then, it can be concluded that there is a causal relationship between X "
    "and Y.\n"
    "NOTE: If one pattern rule is met, you DON'T need to analyze the remaining rules.\n"
)

_WORKED_EXAMPLES = (
    "EXAMPLE 1:\n"
    "TEXT: The factory’s decision to shut down immediately resulted in hundreds of workers "
    "losing their jobs.\n"
    "X: shut down; Y: losing\n"
    'PATTERN: Direct (The text clearly indicates a direct causal link between "factory’s '
    'decision to shut down" and "workers losing their jobs.")\n'
    "EXAMPLE 2:\n"
    "TEXT: The company was accused of negligence in maintaining its pipelines, which were found "
    "to be leaking crude oil into the river. The oil spill caused significant harm to the local "
    "ecosystem.\n"
    "X: negligence in maintaining its pipelines; Y: Harm\n"
    'PATTERN: Coreference ("The company was accused of negligence in maintaining its pipelines" '
    'and "pipelines leaking crude oil into the river" describe the same event in different '
    'ways. "Pipelines leaking crude oil" caused "harm to the ecosystem".)\n'
    "EXAMPLE 3:\n"
    "TEXT: A major tech company introduced aggressive hiring policies, while a spike in tech "
    "startups also attracted talent to the industry. The resulting competition for skilled "
    "workers drove up average salaries in the tech sector.\n"
    "X: aggressive hiring policies; Y: spike in tech startups; Z: Competition for skilled "
    "workers.\n"
    'PATTERN: Collider ("Aggressive hiring policies" and "spike in tech startups" both increase '
    "competition for skilled workers (X -> Z, Y -> Z), which in turn drives up salaries, "
    "indirectly linking X and Y.)\n"
    "EXAMPLE 4:\n"
    "TEXT: A global economic slowdown led to a decline in consumer spending and a rise in "
    "unemployment rates, as businesses struggled to stay profitable.\n"
    "X: decline in consumer spending; Y: rise in unemployment rates\n"
    'PATTERN: Fork ("Global economic slowdown" causes both "a decline in consumer spending" '
    '(Z -> X) and "a rise in unemployment rates" (Z -> Y). This forms a Fork structure linking '
    "X and Y via Z.)\n"
    "EXAMPLE 5:\n"
    "TEXT: Heavy deforestation in the region caused soil erosion, which eventually led to a "
    "decline in agricultural productivity.\n"
    "X: deforestation; Y: decline; Z: soil erosion\n"
    'PATTERN: Chain ("Heavy deforestation" leads to "soil erosion" (X -> Z), and "soil erosion" '
    'causes "a decline in agricultural productivity" (Z -> Y). This forms a causal chain)\n'
    "Your answer:\n"
)

_TEMPLATE_POSITIVE = (
    _PROMPT_HEAD + _QUESTION_POSITIVE + _INSTRUCTIONS_COMMON + _INSTRUCTION_4_POSITIVE
    + _PATTERN_RULES + _WORKED_EXAMPLES
)

_TEMPLATE_INFERENCE = (
    _PROMPT_HEAD + _QUESTION_INFERENCE + _INSTRUCTIONS_COMMON + _INSTRUCTION_4_INFERENCE
    + _PATTERN_RULES + _WORKED_EXAMPLES
)


def build_extraction_prompt(sample: Sample, mode: str) -> str:
    if mode == MODE_POSITIVE:
        template = _TEMPLATE_POSITIVE
    elif mode == MODE_INFERENCE:
        template = _TEMPLATE_INFERENCE
    else:
        raise ValueError(f"mode must be {MODE_POSITIVE!r} or {MODE_INFERENCE!r}, got {mode!r}")
    return template.format(
        text=sample.context,
        source=sample.source_event.surface,
        target=sample.target_event.surface,
    )


_JSON_OBJECT = re.compile(r"\{[^{}]*\}")


def parse_pattern(response: str) -> CausalPattern:
    """Extract the pattern from the last JSON object mentioning one.

    Tolerates surrounding prose and code fences. Raises
    PatternParseError when nothing usable is found.
    """
    value: str | None = None
    for snippet in _JSON_OBJECT.findall(response):
        try:
            obj = json.loads(snippet)
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        for key, raw in obj.items():
            if str(key).casefold() == "pattern":
                value = str(raw)
    if value is None:
        raise PatternParseError(f"no pattern object in response: {response[:200]!r}")
    folded = value.strip().strip(".").casefold()
    if folded.startswith("coreference"):
        return CausalPattern.COREFERENCE
    for pattern in CausalPattern:
        if folded == pattern.value.casefold():
            return pattern
    raise PatternParseError(f"unrecognized pattern value {value!r}")


class PatternCache:
    """Append-only JSONL cache of pattern assignments, keyed by (id, model)."""

    def __init__(self, path: str | Path | None = None):
        self._path = None if path is None else Path(path)
        self._entries: dict[tuple[str, str], tuple[CausalPattern, str]] = {}
        if self._path is not None and self._path.exists():
            for line_no, obj in read_jsonl(self._path):
                try:
                    key = (str(obj["id"]), str(obj["model"]))
                    record = (CausalPattern(obj["pattern"]), str(obj["provenance"]))
                except (KeyError, TypeError, ValueError) as exc:
                    raise DataError(f"{self._path}: line {line_no}: bad pattern cache record: {exc}") from exc
                if key not in self._entries:
                    self._entries[key] = record

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, sample_id: str, model: str) -> CausalPattern | None:
        entry = self._entries.get((sample_id, model))
        return None if entry is None else entry[0]

    def add(
        self,
        sample_id: str,
        model: str,
        pattern: CausalPattern,
        provenance: str,
        raw_response_digest: str,
    ) -> None:
        key = (sample_id, model)
        if key in self._entries:
            return
        self._entries[key] = (pattern, provenance)
        if self._path is not None:
            append_jsonl(
                self._path,
                {
                    "id": sample_id,
                    "model": model,
                    "pattern": pattern.value,
                    "provenance": provenance,
                    "raw_response_digest": raw_response_digest,
                },
            )


@dataclass
class PatternAssignment:
    entries: dict[str, tuple[CausalPattern, str]]

    def pattern_of(self, sample_id: str) -> CausalPattern:
        try:
            return self.entries[sample_id][0]
        except KeyError:
            raise DataError(f"no pattern assigned for sample {sample_id!r}") from None

    def provenance_of(self, sample_id: str) -> str:
        try:
            return self.entries[sample_id][1]
        except KeyError:
            raise DataError(f"no pattern assigned for sample {sample_id!r}") from None

    def counts(self) -> dict[str, int]:
        histogram: dict[str, int] = {p.value: 0 for p in CausalPattern}
        for pattern, _ in self.entries.values():
            histogram[pattern.value] += 1
        return histogram

    def __len__(self) -> int:
        return len(self.entries)


def _extract_with_retry(sample: Sample, mode: str, gateway: Gateway, model: str, temperature: float):
    prompt = build_extraction_prompt(sample, mode)
    request = user_request(model, prompt, temperature)
    try:
        response = gateway.complete(request)
    except GatewayError as exc:
        raise GatewayError(f"pattern extraction failed for sample {sample.id}: {exc}") from exc
    try:
        return parse_pattern(response.text), response
    except PatternParseError:
        logger.warning("sample %s: unparsable pattern response, retrying once", sample.id)
    try:
        response = gateway.complete(request, skip_cache=True)
    except GatewayError as exc:
        raise GatewayError(f"pattern extraction failed for sample {sample.id}: {exc}") from exc
    return parse_pattern(response.text), response


def assign_patterns(
    samples: list[Sample],
    gateway: Gateway,
    cache: PatternCache,
    model: str,
    temperature: float = 0.0,
) -> PatternAssignment:
    """Assign one causal pattern to every labeled sample.

    Negatives are assigned No by rule and never reach the LLM.
    Positives whose response cannot be parsed even after one retry fall
    back to Direct with a warning.
    """
    entries: dict[str, tuple[CausalPattern, str]] = {}
    for sample in sorted(samples, key=lambda s: s.id):
        if sample.label is None:
            raise DataError(f"sample {sample.id} has no label; pattern assignment needs labels")
        cached = cache.get(sample.id, model)
        if cached is not None:
            entries[sample.id] = (cached, PROVENANCE_CACHE)
            continue
        if sample.label == "No":
            entries[sample.id] = (CausalPattern.NO, PROVENANCE_RULE)
            cache.add(sample.id, model, CausalPattern.NO, PROVENANCE_RULE, text_digest(""))
            continue
        try:
            pattern, response = _extract_with_retry(sample, MODE_POSITIVE, gateway, model, temperature)
        except PatternParseError:
            logger.warning("sample %s: pattern still unparsable after retry, falling back to Direct", sample.id)
            pattern, response = CausalPattern.DIRECT, None
        digest = text_digest("" if response is None else response.text)
        entries[sample.id] = (pattern, PROVENANCE_LLM)
        cache.add(sample.id, model, pattern, PROVENANCE_LLM, digest)
    return PatternAssignment(entries=entries)


def query_pattern(
    sample: Sample,
    gateway: Gateway,
    cache: PatternCache | None,
    model: str,
    temperature: float = 0.0,
) -> CausalPattern:
    """Pattern for an unlabeled query; unparsable responses become No."""
    if cache is not None:
        cached = cache.get(sample.id, model)
        if cached is not None:
            return cached
    try:
        pattern, response = _extract_with_retry(sample, MODE_INFERENCE, gateway, model, temperature)
    except PatternParseError:
        logger.warning("query %s: pattern still unparsable after retry, treating as No", sample.id)
        pattern, response = CausalPattern.NO, None
    if cache is not None:
        digest = text_digest("" if response is None else response.text)
        cache.add(sample.id, model, pattern, PROVENANCE_LLM, digest)
    return pattern
