"""Dependency parser backends emitting CoNLL-U text.

The default backend is a deterministic rule stub: it produces valid,
stable CoNLL-U without any model download, which is what the test
fixtures and offline runs need. The spaCy backend wraps an industrial
parser when one is installed.
"""

from __future__ import annotations

import logging

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

SENTENCE_FINAL = {".", "!", "?"}
PUNCTUATION = SENTENCE_FINAL | {",", ";", ":", '"', "'", "(", ")"}
DETERMINERS = {"a", "an", "the"}
ADPOSITIONS = {"in", "on", "of", "at", "by", "with", "from", "to", "for"}
ADVERBS = {
    "again",
    "alone",
    "always",
    "away",
    "early",
    "fast",
    "hard",
    "here",
    "late",
    "never",
    "now",
    "often",
    "soon",
    "then",
    "there",
    "today",
    "together",
    "tomorrow",
    "well",
    "yesterday",
}
VERB_WORDS = {"is", "was", "are", "were", "be", "been", "has", "had", "have", "does", "did"}
VERB_SUFFIXES = ("ed", "ew")


def _tokenize(text: str) -> list[str]:
    """Whitespace split, peeling punctuation off token edges."""
    tokens: list[str] = []
    for chunk in text.split():
        leading: list[str] = []
        while len(chunk) > 1 and chunk[0] in PUNCTUATION:
            leading.append(chunk[0])
            chunk = chunk[1:]
        trailing: list[str] = []
        while len(chunk) > 1 and chunk[-1] in PUNCTUATION:
            trailing.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(leading)
        tokens.append(chunk)
        tokens.extend(reversed(trailing))
    return tokens


def _split_sentences(tokens: list[str]) -> list[list[str]]:
    sentences: list[list[str]] = []
    current: list[str] = []
    for token in tokens:
        current.append(token)
        if token in SENTENCE_FINAL:
            sentences.append(current)
            current = []
    if current:
        sentences.append(current)
    return sentences


def _looks_like_verb(token: str) -> bool:
    lowered = token.lower()
    if lowered in PUNCTUATION or lowered in DETERMINERS:
        return False
    if lowered in VERB_WORDS:
        return True
    return len(lowered) > 3 and lowered.endswith(VERB_SUFFIXES)


def _root_index(tokens: list[str]) -> int:
    for index, token in enumerate(tokens):
        if _looks_like_verb(token):
            return index
    # no verb-looking token: prefer the second word (subject-first order)
    for index in (1, 0):
        if index < len(tokens) and tokens[index] not in PUNCTUATION:
            return index
    return 0


def _attach(tokens: list[str], root: int) -> list[tuple[int, str]]:
    """(head index, relation) per token; head -1 marks the root."""
    n = len(tokens)
    lowered = [t.lower() for t in tokens]
    result: list[tuple[int, str]] = [(-2, "")] * n
    result[root] = (-1, "root")
    saw_subject = False
    saw_object = False
    for i in range(n):
        if i == root:
            continue
        token = lowered[i]
        if token in PUNCTUATION:
            result[i] = (root, "punct")
            continue
        if token in DETERMINERS:
            head = root
            for j in range(i + 1, n):
                if lowered[j] not in DETERMINERS and lowered[j] not in PUNCTUATION:
                    head = j
                    break
            result[i] = (head, "det")
            continue
        if token in ADPOSITIONS:
            result[i] = (root, "prep")
            continue
        if token in ADVERBS or (len(token) > 3 and token.endswith("ly")):
            result[i] = (root, "advmod")
            continue
        j = i - 1
        while j >= 0 and lowered[j] in DETERMINERS:
            j -= 1
        if j >= 0 and lowered[j] in ADPOSITIONS:
            result[i] = (j, "pobj")
            continue
        if i < root:
            if not saw_subject:
                result[i] = (root, "nsubj")
                saw_subject = True
            else:
                result[i] = (root, "compound")
        else:
            if not saw_object:
                result[i] = (root, "dobj")
                saw_object = True
            else:
                result[i] = (root, "dep")
    return result


_UPOS = {"punct": "PUNCT", "det": "DET", "prep": "ADP", "advmod": "ADV", "root": "VERB"}


def _sentence_block(tokens: list[str]) -> str:
    root = _root_index(tokens)
    attachments = _attach(tokens, root)
    lines = ["# text = " + " ".join(tokens)]
    for index, token in enumerate(tokens):
        head, relation = attachments[index]
        upos = _UPOS.get(relation, "NOUN")
        lines.append(
            "\t".join(
                [
                    str(index + 1),
                    token,
                    token.lower(),
                    upos,
                    "_",
                    "_",
                    "0" if head == -1 else str(head + 1),
                    relation,
                    "_",
                    "_",
                ]
            )
        )
    return "\n".join(lines) + "\n"


class HeuristicParser:
    """Rule-based stub parser: deterministic, no models, flat-ish trees."""

    id = "heuristic-v1"

    def parse(self, text: str) -> str:
        tokens = _tokenize(text)
        if not tokens:
            raise DataError("cannot parse empty text")
        blocks = [_sentence_block(sentence) for sentence in _split_sentences(tokens)]
        return "\n".join(blocks)


class SpacyParser:
    """Industrial parser via spaCy; requires the model to be installed."""

    def __init__(self, model: str = "en_core_web_sm"):
        try:
            import spacy
        except ImportError as exc:
            raise ConfigError(
                "spaCy backend requested but spacy is not installed "
                "(pip install 'structeci-prep[spacy]')"
            ) from exc
        try:
            self._nlp = spacy.load(model)
        except OSError as exc:
            raise ConfigError(f"spaCy model {model!r} is not available: {exc}") from exc
        self.id = f"spacy/{model}"

    def parse(self, text: str) -> str:
        doc = self._nlp(text)
        blocks = []
        for sentence in doc.sents:
            lines = ["# text = " + sentence.text]
            offset = sentence.start
            for token in sentence:
                head = 0 if token.head is token else token.head.i - offset + 1
                lines.append(
                    "\t".join(
                        [
                            str(token.i - offset + 1),
                            token.text,
                            token.lemma_,
                            token.pos_,
                            token.tag_,
                            "_",
                            str(head),
                            token.dep_,
                            "_",
                            "_",
                        ]
                    )
                )
            blocks.append("\n".join(lines) + "\n")
        return "\n".join(blocks)


def get_parser(name: str):
    if name in ("heuristic", HeuristicParser.id):
        return HeuristicParser()
    if name.startswith("spacy"):
        _, _, model = name.partition("/")
        return SpacyParser(model) if model else SpacyParser()
    raise ConfigError(f"unknown parser backend {name!r} (try 'heuristic' or 'spacy/<model>')")
