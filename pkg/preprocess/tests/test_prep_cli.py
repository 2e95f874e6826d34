from __future__ import annotations

import json

from structeci_prep.cli import main

from structeci.corpus import load_embeddings, load_parses


def test_run_command_end_to_end(tmp_path, toy_corpus_path, capsys):
    out_dir = tmp_path / "out"
    code = main(["run", "--corpus", str(toy_corpus_path), "--out-dir", str(out_dir)])
    assert code == 0
    assert "processed 10 samples" in capsys.readouterr().out
    assert (out_dir / "manifest.json").exists()
    assert len(load_parses(out_dir / "parses")) == 10
    assert load_embeddings(out_dir / "embeddings.jsonl").dimension == 256


def test_parse_command_exits_2_when_a_sample_is_skipped(tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    good = {"id": "good", "context": "Fire caused damage .", "source": {"surface": "Fire"}, "target": {"surface": "damage"}}
    bad = {"id": "bad", "context": "   ", "source": {"surface": ""}, "target": {"surface": ""}}
    corpus.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n")
    out_dir = tmp_path / "parses"
    code = main(["parse", "--corpus", str(corpus), "--out-dir", str(out_dir)])
    assert code == 2
    assert "skipped 1 samples: bad" in capsys.readouterr().err
    assert (out_dir / "good.conllu").exists()
    assert not (out_dir / "bad.conllu").exists()


def test_collect_keys_then_embed(tmp_path, toy_corpus_path):
    keys_path = tmp_path / "keys.txt"
    emb_path = tmp_path / "emb.jsonl"
    assert main(["collect-keys", "--corpus", str(toy_corpus_path), "--out", str(keys_path)]) == 0
    assert len(keys_path.read_text().splitlines()) == 19
    assert main(["embed", "--keys", str(keys_path), "--out", str(emb_path)]) == 0
    assert len(load_embeddings(emb_path)) == 19


def test_restrict_dump_command(tmp_path, toy_corpus_path, capsys):
    dump = tmp_path / "dump.csv"
    dump.write_text(
        "/a/x\t/r/Causes\t/c/en/rain\t/c/en/flood\t{}\n"
        "/a/x\t/r/RelatedTo\t/c/en/mars\t/c/en/venus\t{}\n"
    )
    out = tmp_path / "restricted.csv"
    code = main([
        "restrict-dump", "--corpus", str(toy_corpus_path),
        "--dump", str(dump), "--out", str(out), "--max-hops", "1",
    ])
    assert code == 0
    assert "kept 1 of 2 dump rows" in capsys.readouterr().out
    assert "mars" not in out.read_text()


def test_missing_corpus_is_a_config_error(tmp_path, capsys):
    code = main(["parse", "--corpus", str(tmp_path / "absent.jsonl"), "--out-dir", str(tmp_path)])
    assert code == 1
    assert "config error" in capsys.readouterr().err


def test_unknown_encoder_is_a_config_error(tmp_path, toy_corpus_path, capsys):
    keys_path = tmp_path / "keys.txt"
    keys_path.write_text("fire\n")
    code = main(["--encoder", "nope", "embed", "--keys", str(keys_path), "--out", str(tmp_path / "emb.jsonl")])
    assert code == 1
    assert "unknown encoder" in capsys.readouterr().err


def test_missing_subcommand_is_a_config_error(capsys):
    assert main([]) == 1
    assert "config error" in capsys.readouterr().err


def test_malformed_corpus_is_a_data_error(tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    corpus.write_text("not json\n")
    code = main(["parse", "--corpus", str(corpus), "--out-dir", str(tmp_path)])
    assert code == 2
    assert "data error" in capsys.readouterr().err
