from __future__ import annotations

import json
import random
import string

import pytest

from structeci.errors import DataError
from structeci.path_metric import (
    FORWARD,
    INVERSE,
    ConceptPath,
    PathHop,
    RelationTemplates,
    default_templates,
    levenshtein,
    load_templates,
    path_similarity,
    serialize_path,
)

from oracles import lev_oracle

TEMPLATES = default_templates()


def hop(relation, direction, label):
    return PathHop(relation=relation, direction=direction, next_label=label)


def test_serialize_zero_hop():
    assert serialize_path(ConceptPath("fire"), TEMPLATES) == '"fire".'


def test_serialize_worked_example():
    path = ConceptPath("a", (hop("HasA", FORWARD, "b"), hop("Causes", INVERSE, "c")))
    assert serialize_path(path, TEMPLATES) == '"a" has a "b", and "b" is caused by "c".'


def test_all_relations_round_trip_against_fixture(fixtures_dir):
    table = json.loads((fixtures_dir / "relation_phrases.json").read_text("utf-8"))
    assert len(table) == 34
    assert sorted(table) == TEMPLATES.relations()
    for relation, (forward_phrase, inverse_phrase) in table.items():
        forward = serialize_path(ConceptPath("x", (hop(relation, FORWARD, "y"),)), TEMPLATES)
        inverse = serialize_path(ConceptPath("x", (hop(relation, INVERSE, "y"),)), TEMPLATES)
        assert forward == f'"x" {forward_phrase} "y".'
        assert inverse == f'"x" {inverse_phrase} "y".'


def test_unknown_relation_falls_back():
    text = serialize_path(ConceptPath("x", (hop("NoSuchRelation", FORWARD, "y"),)), TEMPLATES)
    assert text == '"x" is related to "y".'


def test_dbpedia_subrelations_share_templates():
    text = serialize_path(ConceptPath("x", (hop("dbpedia/genre", FORWARD, "y"),)), TEMPLATES)
    assert text == '"x" is associated with the DBpedia concept of "y".'
    text = serialize_path(ConceptPath("x", (hop("dbpedia/field", INVERSE, "y"),)), TEMPLATES)
    assert text == '"x" has association from the DBpedia concept of "y".'


def test_bad_direction_rejected():
    with pytest.raises(ValueError):
        TEMPLATES.phrase("Causes", "sideways")


def test_load_templates_rejects_bad_shapes(tmp_path):
    bad = tmp_path / "templates.json"
    bad.write_text('{"Causes": ["only-one"]}', "utf-8")
    with pytest.raises(DataError):
        load_templates(bad)
    bad.write_text("[]", "utf-8")
    with pytest.raises(DataError):
        load_templates(bad)


def test_levenshtein_known_values():
    assert levenshtein("", "") == 0
    assert levenshtein("abc", "") == 3
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein("fire", "smoke") == 4


def test_levenshtein_matches_matrix_oracle():
    rng = random.Random(4011)
    alphabet = string.ascii_lowercase[:6] + '" .'
    for _ in range(200):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
        assert levenshtein(a, b) == lev_oracle(a, b)


def test_levenshtein_works_on_sequences():
    assert levenshtein(["a", "b"], ["a", "c"]) == 1
    assert levenshtein(("x",), ()) == 1


def test_path_similarity_absence_is_exactly_zero():
    present = ConceptPath("a", (hop("Causes", FORWARD, "b"),))
    assert path_similarity(None, present, TEMPLATES) == 0.0
    assert path_similarity(present, None, TEMPLATES) == 0.0
    assert path_similarity(None, None, TEMPLATES) == 0.0


def test_path_similarity_identity_and_range():
    p = ConceptPath("fire", (hop("Causes", FORWARD, "damage"),))
    q = ConceptPath("smoke", (hop("Causes", FORWARD, "damage"),))
    assert path_similarity(p, p, TEMPLATES) == 1.0
    value = path_similarity(p, q, TEMPLATES)
    assert 0.0 <= value <= 1.0
    assert value == path_similarity(q, p, TEMPLATES)
    # edit distance 4 over the longer serialization (24 chars)
    assert value == pytest.approx(1.0 - 4.0 / 24.0)


def test_path_similarity_hop_normalization():
    p = ConceptPath("fire", (hop("Causes", FORWARD, "damage"),))
    q = ConceptPath("smoke", (hop("Causes", FORWARD, "damage"),))
    assert path_similarity(p, q, TEMPLATES, normalize="hops") == 0.0
    two_hop = ConceptPath(
        "fire", (hop("Causes", FORWARD, "damage"), hop("RelatedTo", FORWARD, "loss"))
    )
    same_first = ConceptPath("fire", (hop("Causes", FORWARD, "damage"),))
    assert path_similarity(two_hop, same_first, TEMPLATES, normalize="hops") == pytest.approx(0.5)
    with pytest.raises(ValueError):
        path_similarity(p, q, TEMPLATES, normalize="words")
