import os
import shutil
import subprocess

import pytest

import texsan


def test_version():
    assert texsan.__version__


def test_entropy():
    assert texsan.shannon_entropy("aaaa") == 0.0
    assert texsan.shannon_entropy("ab") == 1.0


def test_filter():
    assert texsan.filter_candidate("aaaaaaaaaaaa") == "drop(entropy)"
    assert texsan.filter_candidate("abcdefghijklmnop") == "drop(monotone)"
    assert texsan.filter_candidate("9f8A2kQ7xLmR0pZw") == "keep"


def test_roundtrip():
    src = b"hello % comment\n\\begin{verbatim}% keep\\end{verbatim}\n"
    assert texsan.parse_roundtrip(src) == src


def test_spans_and_strip():
    src = b"text % secret\n\\iffalse hidden \\fi\nmore\n"
    spans = texsan.find_irrelevant_spans(src)
    mechanisms = {s["mechanism"] for s in spans}
    assert "line_comment" in mechanisms
    assert "skipped_if_branch" in mechanisms
    cleaned = texsan.strip_irrelevant(src)
    assert b"secret" not in cleaned
    assert b"hidden" not in cleaned
    assert b"more" in cleaned


def test_scan_text():
    hits = texsan.scan_text("key AKIAJ6X2K9Q4R7TPM2WV")
    assert any(h["rule"] == "AWS access keys" and h["severity"] == "H" for h in hits)


def test_clean_pipeline(tmp_path):
    bin_dir = os.environ.get("TEXSAN_BIN_DIR")
    if not bin_dir or not os.path.exists(os.path.join(bin_dir, "minitex")):
        pytest.skip("bundled engine not built")
    bundle = tmp_path / "bundle"
    bundle.mkdir()
    (bundle / "main.tex").write_text(
        "\\documentclass{article}\n% note\n\\begin{document}\nhi\n\\end{document}\n"
    )
    (bundle / "unused.txt").write_text("dangling\n")
    out = tmp_path / "cleaned"
    result = texsan.clean(str(bundle), str(out), verify=True, timeout=60)
    assert result["verdict"] == "beneficial"
    assert "unused.txt" in result["removed_files"]
    assert not (out / "unused.txt").exists()
    assert "% note" not in (out / "main.tex").read_text()
