import json
import subprocess
import sys

import numpy as np
import pytest

from ocralign.cli import main
from ocralign.warp import RasterImage, write_pnm

from conftest import doc_tsv


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def synth_and_extract(capsys, tmp_path, *flags):
    d = tmp_path / "pair"
    assert run(capsys, "synth", "--out-dir", d, *flags)[0] == 0
    for side in "ab":
        code, out, _ = run(capsys, "extract", d / f"{side}.json", "--format", "json", "--out", d / f"{side}.daf")
        assert code == 0
    return d


def test_extract_tsv(capsys, tmp_path):
    src = tmp_path / "doc.tsv"
    src.write_bytes(doc_tsv())
    code, out, err = run(capsys, "extract", src, "--format", "tsv", "--out", tmp_path / "doc.daf")
    assert code == 0
    assert (tmp_path / "doc.daf").exists()
    assert out.startswith("words=4 payload_bytes=")
    assert err == ""


def test_extract_200_words_size(capsys, tmp_path):
    d = synth_and_extract(capsys, tmp_path, "--seed", "1")
    code, out, _ = run(capsys, "extract", d / "a.json", "--format", "json", "--out", d / "a.daf")
    fields = dict(kv.split("=") for kv in out.split())
    assert int(fields["words"]) == 200 and int(fields["payload_bytes"]) <= 8192


def test_unknown_format_is_usage_error(capsys, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["extract", str(tmp_path / "x"), "--format", "xml", "--out", str(tmp_path / "y")])
    assert info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_parse_error_exit_2(capsys, tmp_path):
    src = tmp_path / "bad.tsv"
    src.write_text("not a header\n")
    code, _, err = run(capsys, "extract", src, "--format", "tsv", "--out", tmp_path / "o.daf")
    assert code == 2 and "error" in err


def test_missing_file_exit_3(capsys, tmp_path):
    code, _, err = run(capsys, "extract", tmp_path / "nope.tsv", "--format", "tsv", "--out", tmp_path / "o.daf")
    assert code == 3 and "cannot read" in err


def test_unwritable_output_exit_3(capsys, tmp_path):
    src = tmp_path / "doc.tsv"
    src.write_bytes(doc_tsv())
    code, _, _ = run(capsys, "extract", src, "--format", "tsv", "--out", tmp_path / "no" / "such" / "dir.daf")
    assert code == 3


def test_align_noiseless(capsys, tmp_path):
    d = synth_and_extract(capsys, tmp_path, "--kind", "translation", "--seed", "2")
    code, out, err = run(capsys, "align", d / "a.daf", d / "b.daf", "--out", d / "r.json")
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("mean_sqrt_ste_px="))
    assert float(line.split()[0].split("=")[1]) < 1e-6
    result = json.loads((d / "r.json").read_text())
    assert result["converged"] and result["mean_sqrt_ste"] < 1e-6


def test_align_no_shared_tokens(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps({"page": {"width": 100, "height": 100},
                             "words": [{"text": "apple", "left": 1, "top": 1, "width": 10, "height": 5}]}))
    b.write_text(json.dumps({"page": {"width": 100, "height": 100},
                             "words": [{"text": "pear", "left": 1, "top": 1, "width": 10, "height": 5}]}))
    for p in (a, b):
        run(capsys, "extract", p, "--format", "json", "--out", p.with_suffix(".daf"))
    code, _, err = run(capsys, "align", a.with_suffix(".daf"), b.with_suffix(".daf"), "--out", tmp_path / "r.json")
    assert code == 4 and "share no tokens" in err


def test_align_fixed_iterations(capsys, tmp_path):
    d = synth_and_extract(capsys, tmp_path, "--seed", "3", "--sigma", "1")
    code, _, _ = run(capsys, "align", d / "a.daf", d / "b.daf", "--error-rate", "0.5", "--confidence", "0.99",
                     "--no-adaptive", "--out", d / "r.json")
    assert code == 0
    assert json.loads((d / "r.json").read_text())["iterations_run"] == 72


def test_match_then_estimate(capsys, tmp_path):
    d = synth_and_extract(capsys, tmp_path, "--kind", "translation", "--seed", "4")
    code, _, err = run(capsys, "match", d / "a.daf", d / "b.daf", "--out", d / "m.tsv")
    assert code == 0 and "matches=" in err
    code, out, _ = run(capsys, "estimate", d / "m.tsv", "--out", d / "r.json")
    assert code == 0 and out.startswith("mean_sqrt_ste_px=")
    code, _, _ = run(capsys, "align", d / "a.daf", d / "b.daf", "--out", d / "r2.json")
    assert json.loads((d / "r.json").read_text()) == json.loads((d / "r2.json").read_text())


def test_estimate_too_few_matches(capsys, tmp_path):
    m = tmp_path / "m.tsv"
    m.write_text("a\t1\t2\t3\t4\t1\nb\t5\t6\t7\t8\t1\n")
    assert run(capsys, "estimate", m, "--out", tmp_path / "r.json")[0] == 4


def test_eval_identical(capsys, tmp_path):
    truth = {"homography": {"h": [[1, 0, 5], [0, 1, 7], [0, 0, 1]]}, "page_width": 2200, "page_height": 1700}
    (tmp_path / "t.json").write_text(json.dumps(truth))
    code, out, _ = run(capsys, "eval", tmp_path / "t.json", tmp_path / "t.json")
    assert code == 0 and out.strip() == "corner_error_px=0"


def test_eval_needs_page_dims(capsys, tmp_path):
    (tmp_path / "r.json").write_text(json.dumps({"homography": {"h": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}}))
    assert run(capsys, "eval", tmp_path / "r.json", tmp_path / "r.json")[0] == 2
    code, out, _ = run(capsys, "eval", tmp_path / "r.json", tmp_path / "r.json", "--page-width", 10, "--page-height", 10)
    assert code == 0


def test_full_pipeline_noiseless_eval(capsys, tmp_path):
    d = synth_and_extract(capsys, tmp_path, "--kind", "translation", "--seed", "5")
    assert run(capsys, "align", d / "a.daf", d / "b.daf", "--out", d / "r.json")[0] == 0
    code, out, _ = run(capsys, "eval", d / "r.json", d / "truth.json")
    assert code == 0 and float(out.strip().split("=")[1]) <= 1e-4


def test_full_pipeline_perspective_is_quantized(capsys, tmp_path):
    # word boxes are whole pixels in every file format, which caps accuracy
    d = synth_and_extract(capsys, tmp_path, "--kind", "perspective", "--seed", "5")
    assert run(capsys, "align", d / "a.daf", d / "b.daf", "--out", d / "r.json")[0] == 0
    code, out, _ = run(capsys, "eval", d / "r.json", d / "truth.json")
    assert code == 0 and float(out.strip().split("=")[1]) <= 1.0


def test_warp_identity(capsys, tmp_path):
    img = RasterImage((np.arange(48) * 5 % 256).astype(np.uint8).reshape(4, 4, 3))
    (tmp_path / "in.ppm").write_bytes(write_pnm(img))
    (tmp_path / "r.json").write_text(json.dumps({"homography": {"h": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}}))
    code, _, _ = run(capsys, "warp", tmp_path / "in.ppm", tmp_path / "r.json", "--out", tmp_path / "out.ppm")
    assert code == 0
    assert (tmp_path / "out.ppm").read_bytes() == (tmp_path / "in.ppm").read_bytes()


def test_warp_bad_image(capsys, tmp_path):
    (tmp_path / "in.pgm").write_bytes(b"P7\n")
    (tmp_path / "r.json").write_text(json.dumps({"homography": {"h": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}}))
    assert run(capsys, "warp", tmp_path / "in.pgm", tmp_path / "r.json", "--out", tmp_path / "o.pgm")[0] == 2


def test_deterministic_outputs(capsys, tmp_path):
    blobs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert run(capsys, "synth", "--out-dir", d, "--seed", "7", "--sigma", "1", "--char-substitution-rate", "0.1")[0] == 0
        for side in "ab":
            run(capsys, "extract", d / f"{side}.json", "--format", "json", "--out", d / f"{side}.daf")
        run(capsys, "align", d / "a.daf", d / "b.daf", "--seed", "3", "--out", d / "r.json")
        blobs.append([(d / n).read_bytes() for n in ("a.json", "b.json", "truth.json", "a.daf", "b.daf", "r.json")])
    assert blobs[0] == blobs[1]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ocralign", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("ocralign ")
