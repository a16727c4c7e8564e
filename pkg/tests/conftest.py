import pytest

# one small document in each supported OCR dialect
DOC_WORDS = [
    # text, left, top, width, height, conf (percent)
    ("Court,", 100, 50, 80, 20, 91),
    ("of", 190, 50, 24, 20, 88),
    ("Appeals", 220, 50, 84, 20, 95),
    ("Signed", 10, 300, 100, 25, 96),
    ("o'clock", 400, 600, 84, 20, 77),
]
DOC_SIZE = (2200, 1700)

TSV_HEADER = "level\tpage_num\tblock_num\tpar_num\tline_num\tword_num\tleft\ttop\twidth\theight\tconf\ttext\n"


def doc_tsv():
    rows = [TSV_HEADER, f"1\t1\t0\t0\t0\t0\t0\t0\t{DOC_SIZE[0]}\t{DOC_SIZE[1]}\t-1\t\n",
            "2\t1\t1\t0\t0\t0\t10\t50\t500\t600\t-1\t\n"]
    for k, (t, l, tp, w, h, c) in enumerate(DOC_WORDS, start=1):
        rows.append(f"5\t1\t1\t1\t1\t{k}\t{l}\t{tp}\t{w}\t{h}\t{c}\t{t}\n")
    return "".join(rows).encode("utf-8")


def doc_hocr():
    spans = "".join(
        f"<span class='ocrx_word' id='w{k}' title='bbox {l} {tp} {l + w} {tp + h}; x_wconf {c}'>"
        f"{t.replace(chr(39), '&#39;')}</span> "
        for k, (t, l, tp, w, h, c) in enumerate(DOC_WORDS)
    )
    return (
        "<?xml version='1.0' encoding='UTF-8'?>\n<html><head><title></title>"
        "<meta http-equiv='Content-Type' content='text/html; charset=utf-8'/></head><body>"
        f"<div class='ocr_page' id='page_1' title='image \"x.png\"; bbox 0 0 {DOC_SIZE[0]} {DOC_SIZE[1]}; ppageno 0'>"
        f"<div class='ocr_carea'><p class='ocr_par'><span class='ocr_line' title='bbox 10 50 500 650'>{spans}</span>"
        "</p></div></div></body></html>"
    ).encode("utf-8")


def doc_json():
    import json
    words = [{"text": t, "left": l, "top": tp, "width": w, "height": h, "confidence": c / 100}
             for t, l, tp, w, h, c in DOC_WORDS]
    return json.dumps({"page": {"width": DOC_SIZE[0], "height": DOC_SIZE[1]}, "words": words}).encode("utf-8")


@pytest.fixture
def doc_formats():
    return {"tsv": doc_tsv(), "hocr": doc_hocr(), "json": doc_json()}
