"""Final yes/no inference prompted with retrieved examples."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from .corpus import Sample
from .errors import GatewayError, StructEciError
from .llm_gateway import Gateway, text_digest, user_request
from .retrieval import ExampleSet

logger = logging.getLogger(__name__)

_INSTRUCTION_BLOCK = """Given a text, two events (Event X and Event Y). Based on the related examples, you need to determine whether there is a causal relationship between the given events X and Y. Please follow the instructions below and refer to the provided examples when answering.
###
Instructions:
You should refer to the examples but not be entirely influenced by them. Whether the events in the examples have a causal relationship DOES NOT affect whether the given events in the provided text have a causal relationship.
You should give step-by-step reasoning path before giving the final answer.
"""

_EXAMPLE_BLOCK = """***Example {idx}***
Text: {text};
Event X: {source};
Event Y: {target};
Answer: {{"Answer": "{answer}"}}
"""

_PROMPT_BLOCK = """{instruction_prompt}
###
Here are some examples.
{examples_prompt}
###
Text: {text};
Event X: {source};
Event Y: {target};
Give step-by-step reasoning path, and then organize the final answer in JSON format: {{"Answer": "Your answer, the answer must be either 'Yes' or 'No', and nothing else."}}
Your response:
"""


class AnswerParseError(StructEciError):
    """No usable yes/no answer found in an LLM response."""


def build_inference_prompt(query: Sample, examples: ExampleSet) -> str:
    """Final prompt: instructions, numbered example blocks, the query.

    Zero examples are permitted; the examples section is then empty.
    """
    examples_prompt = ""
    for idx, candidate in enumerate(examples, start=1):
        examples_prompt += _EXAMPLE_BLOCK.format(
            idx=idx,
            text=candidate.sample.context,
            source=candidate.sample.source_event.surface,
            target=candidate.sample.target_event.surface,
            answer="Yes" if candidate.sample.label == "Yes" else "No",
        ) + "\n"
    return _PROMPT_BLOCK.format(
        instruction_prompt=_INSTRUCTION_BLOCK,
        examples_prompt=examples_prompt,
        text=query.context,
        source=query.source_event.surface,
        target=query.target_event.surface,
    )


_JSON_OBJECT = re.compile(r"\{[^{}]*\}")


def parse_answer(response: str) -> str:
    """Return "Yes" or "No" from the last JSON object with an Answer key."""
    value: str | None = None
    for snippet in _JSON_OBJECT.findall(response):
        try:
            obj = json.loads(snippet)
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        for key, raw in obj.items():
            if str(key).casefold() == "answer":
                value = str(raw)
    if value is None:
        raise AnswerParseError(f"no answer object in response: {response[:200]!r}")
    folded = value.strip().strip(".").casefold()
    if folded == "yes":
        return "Yes"
    if folded == "no":
        return "No"
    raise AnswerParseError(f"unrecognized answer value {value!r}")


@dataclass(frozen=True)
class Verdict:
    query_id: str
    answer: str
    raw_response: str
    example_ids: tuple[str, ...]
    prompt_digest: str


def infer(
    query: Sample,
    examples: ExampleSet,
    gateway: Gateway,
    model: str,
    temperature: float = 0.0,
) -> Verdict:
    """Ask for a verdict; an unparsable response becomes No after one retry."""
    prompt = build_inference_prompt(query, examples)
    request = user_request(model, prompt, temperature)
    try:
        response = gateway.complete(request)
    except GatewayError as exc:
        raise GatewayError(f"inference failed for query {query.id}: {exc}") from exc
    try:
        answer = parse_answer(response.text)
    except AnswerParseError:
        logger.warning("query %s: unparsable answer, retrying once", query.id)
        try:
            response = gateway.complete(request, skip_cache=True)
        except GatewayError as exc:
            raise GatewayError(f"inference failed for query {query.id}: {exc}") from exc
        try:
            answer = parse_answer(response.text)
        except AnswerParseError:
            logger.warning("query %s: answer still unparsable after retry, defaulting to No", query.id)
            answer = "No"
    return Verdict(
        query_id=query.id,
        answer=answer,
        raw_response=response.text,
        example_ids=examples_ids(examples),
        prompt_digest=text_digest(prompt),
    )


def examples_ids(examples: ExampleSet) -> tuple[str, ...]:
    return tuple(examples.ids())


def prediction_record(verdict: Verdict) -> dict:
    return {
        "id": verdict.query_id,
        "answer": verdict.answer,
        "example_ids": list(verdict.example_ids),
        "prompt_digest": verdict.prompt_digest,
    }
