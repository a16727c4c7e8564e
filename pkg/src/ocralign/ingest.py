"""OCR output parsers and the compact binary feature file.

Three input dialects are understood: Tesseract TSV, hOCR (the
``ocr_page``/``ocrx_word`` subset) and a vendor-neutral Words-JSON layout.
All of them produce the same :class:`Page`.

Feature file layout (all integers little-endian)::

    b"DAF1"
    u32 page_width, u32 page_height, u32 word_count
    per word:
        u32 left, u32 top, u32 width, u32 height
        u8  confidence flag (0 or 1)
        f32 confidence            (only when flag == 1)
        u16 text byte length
        UTF-8 text bytes
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Optional

import jsonschema

from .errors import FormatError, MissingPageGeometryError, RowError

MAGIC = b"DAF1"
TSV_COLUMNS = (
    "level", "page_num", "block_num", "par_num", "line_num", "word_num",
    "left", "top", "width", "height", "conf", "text",
)

_HEADER = struct.Struct("<4sIII")
_GEOMETRY = struct.Struct("<IIII")
_F32 = struct.Struct("<f")
_U16 = struct.Struct("<H")
_U32_MAX = 2**32 - 1


def _f32(value: float) -> float:
    return _F32.unpack(_F32.pack(value))[0]


@dataclass(frozen=True)
class RawWord:
    """One word as reported by the OCR engine.

    Confidence is rounded to single precision on construction, which is the
    precision the feature file stores.
    """

    text: str
    left: int
    top: int
    width: int
    height: int
    confidence: Optional[float] = None

    def __post_init__(self):
        for name in ("left", "top", "width", "height"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{name} must be an integer, got {value!r}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"box size must be positive, got {self.width}x{self.height}")
        if self.left < 0 or self.top < 0:
            raise ValueError(f"box origin must be non-negative, got ({self.left}, {self.top})")
        if not self.text.strip():
            raise ValueError("word text is empty")
        if self.confidence is not None:
            c = float(self.confidence)
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"confidence {c} outside [0, 1]")
            object.__setattr__(self, "confidence", _f32(c))

    @property
    def right(self) -> int:
        return self.left + self.width

    @property
    def bottom(self) -> int:
        return self.top + self.height


@dataclass(frozen=True)
class Page:
    """All words of one page plus its pixel dimensions.

    ``dpi`` and ``source_label`` are metadata: they are not stored in the
    feature file and do not take part in equality.
    """

    words: tuple[RawWord, ...]
    page_width: int
    page_height: int
    dpi: Optional[float] = field(default=None, compare=False)
    source_label: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if self.page_width <= 0 or self.page_height <= 0:
            raise ValueError(f"page size must be positive, got {self.page_width}x{self.page_height}")
        for i, w in enumerate(self.words):
            _check_inside(w, self.page_width, self.page_height, i)


def _check_inside(word: RawWord, page_width: int, page_height: int, index=None):
    if word.right > page_width or word.bottom > page_height:
        where = f"word {index} " if index is not None else ""
        raise ValueError(
            f"{where}{word.text!r} box ({word.left}, {word.top}, {word.width}, {word.height}) "
            f"extends outside the {page_width}x{page_height} page"
        )


def _build_page(rows, page_width, page_height, dpi=None, source_label=""):
    """rows: iterable of (location, RawWord kwargs)."""
    words = []
    for loc, kwargs in rows:
        try:
            word = RawWord(**kwargs)
            _check_inside(word, page_width, page_height)
        except ValueError as exc:
            raise RowError(str(exc), line=loc) from None
        words.append(word)
    try:
        return Page(tuple(words), page_width, page_height, dpi=dpi, source_label=source_label)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _decode(data) -> str:
    if isinstance(data, str):
        return data
    try:
        return bytes(data).decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise FormatError(f"input is not UTF-8: {exc}") from None


# -- Tesseract TSV ---------------------------------------------------------

def parse_tesseract_tsv(data, source_label: str = "") -> Page:
    text = _decode(data)
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty TSV input")
    header = tuple(c.strip() for c in lines[0].split("\t"))
    if header != TSV_COLUMNS:
        raise FormatError(f"unexpected TSV header {header!r}")

    page_dims = None
    page_num = None
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) == 11:
            # non-word rows sometimes omit the trailing text column
            cols.append("")
        if len(cols) != 12:
            raise RowError(f"expected 12 columns, got {len(cols)}", line=lineno)
        try:
            level, pnum = int(cols[0]), int(cols[1])
            left, top, width, height = (int(c) for c in cols[6:10])
        except ValueError:
            raise RowError("non-integer geometry field", line=lineno) from None
        try:
            conf = float(cols[10])
        except ValueError:
            raise RowError(f"non-numeric conf {cols[10]!r}", line=lineno) from None

        if page_num is None:
            page_num = pnum
        elif pnum != page_num:
            raise FormatError(f"line {lineno}: multi-page TSV input is not supported")
        if level == 1:
            page_dims = (width, height)
        elif level == 5:
            word_text = cols[11].strip()
            if not word_text:
                continue
            rows.append((lineno, dict(
                text=word_text, left=left, top=top, width=width, height=height,
                confidence=conf / 100.0 if conf >= 0 else None,
            )))
    if page_dims is None:
        raise MissingPageGeometryError("TSV has no level-1 (page) row")
    return _build_page(rows, *page_dims, source_label=source_label)


# -- hOCR --------------------------------------------------------------------

def _title_props(title: str) -> dict:
    props = {}
    for part in title.split(";"):
        tokens = part.split()
        if tokens:
            props[tokens[0]] = tokens[1:]
    return props


def _bbox(props, what, loc):
    if "bbox" not in props:
        return None
    values = props["bbox"]
    try:
        x0, y0, x1, y1 = (int(v) for v in values)
    except ValueError:
        raise RowError(f"{what} has malformed bbox {' '.join(values)!r}", line=loc) from None
    if x1 <= x0 or y1 <= y0:
        raise RowError(f"{what} bbox {x0} {y0} {x1} {y1} is empty", line=loc)
    return x0, y0, x1, y1


_VOID_TAGS = frozenset({"area", "br", "col", "embed", "hr", "img", "input", "link", "meta", "wbr"})


class _HocrCollector(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.page_bbox = None
        self.pages = 0
        self.rows = []
        self._word = None  # [loc, bbox, conf, text parts, depth]

    def handle_starttag(self, tag, attrs):
        if self._word is not None:
            if tag not in _VOID_TAGS:
                self._word[4] += 1
            return
        attrs = dict(attrs)
        classes = (attrs.get("class") or "").split()
        title = attrs.get("title") or ""
        loc = self.getpos()[0]
        if "ocr_page" in classes:
            self.pages += 1
            if self.pages > 1:
                raise FormatError(f"line {loc}: multi-page hOCR input is not supported")
            self.page_bbox = _bbox(_title_props(title), "ocr_page", loc)
        elif "ocrx_word" in classes:
            props = _title_props(title)
            box = _bbox(props, "ocrx_word", loc)
            if box is None:
                raise RowError("ocrx_word has no bbox", line=loc)
            conf = None
            if "x_wconf" in props and props["x_wconf"]:
                try:
                    conf = float(props["x_wconf"][0]) / 100.0
                except ValueError:
                    raise RowError("malformed x_wconf", line=loc) from None
            self._word = [loc, box, conf, [], 0]

    def handle_startendtag(self, tag, attrs):
        # void elements inside a word (e.g. <br/>) contribute nothing
        if self._word is None:
            self.handle_starttag(tag, attrs)
            if self._word is not None:
                self._finish_word()

    def handle_endtag(self, tag):
        if self._word is None:
            return
        if self._word[4] > 0:
            self._word[4] -= 1
        else:
            self._finish_word()

    def handle_data(self, data):
        if self._word is not None:
            self._word[3].append(data)

    def _finish_word(self):
        loc, (x0, y0, x1, y1), conf, parts, _ = self._word
        self._word = None
        text = "".join(parts).strip()
        if text:
            self.rows.append((loc, dict(
                text=text, left=x0, top=y0, width=x1 - x0, height=y1 - y0, confidence=conf,
            )))


def parse_hocr(data, source_label: str = "") -> Page:
    collector = _HocrCollector()
    collector.feed(_decode(data))
    collector.close()
    if collector.page_bbox is None:
        raise MissingPageGeometryError("hOCR has no ocr_page element with a bbox")
    # word boxes are absolute image coordinates, so the page extent is (x1, y1)
    _, _, x1, y1 = collector.page_bbox
    return _build_page(collector.rows, x1, y1, source_label=source_label)


# -- Words-JSON --------------------------------------------------------------

WORDS_JSON_SCHEMA = {
    "type": "object",
    "required": ["page", "words"],
    "properties": {
        "page": {
            "type": "object",
            "required": ["width", "height"],
            "properties": {
                "width": {"type": "integer", "minimum": 1},
                "height": {"type": "integer", "minimum": 1},
                "dpi": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "words": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["text", "left", "top", "width", "height"],
                "properties": {
                    "text": {"type": "string"},
                    "left": {"type": "integer", "minimum": 0},
                    "top": {"type": "integer", "minimum": 0},
                    "width": {"type": "integer", "minimum": 1},
                    "height": {"type": "integer", "minimum": 1},
                    "confidence": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}


def _json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def parse_words_json(data, source_label: str = "") -> Page:
    try:
        doc = json.loads(_decode(data))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(WORDS_JSON_SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if error is not None:
        path = list(error.absolute_path)
        if len(path) >= 2 and path[0] == "words":
            raise RowError(error.message, line=_json_path(path))
        raise FormatError(f"{_json_path(path)}: {error.message}")

    page = doc["page"]
    rows = []
    for i, w in enumerate(doc["words"]):
        if not w["text"].strip():
            continue
        rows.append((f"$.words[{i}]", dict(
            text=w["text"].strip(), left=w["left"], top=w["top"],
            width=w["width"], height=w["height"], confidence=w.get("confidence"),
        )))
    return _build_page(rows, page["width"], page["height"], dpi=page.get("dpi"),
                       source_label=source_label)


def page_to_words_json(page: Page) -> dict:
    """Inverse of :func:`parse_words_json`, as a JSON-ready dict."""
    head = {"width": page.page_width, "height": page.page_height}
    if page.dpi is not None:
        head["dpi"] = page.dpi
    words = []
    for w in page.words:
        item = {"text": w.text, "left": w.left, "top": w.top, "width": w.width, "height": w.height}
        if w.confidence is not None:
            item["confidence"] = w.confidence
        words.append(item)
    return {"page": head, "words": words}


# -- binary feature file -----------------------------------------------------

def write_feature_file(page: Page) -> bytes:
    for name in ("page_width", "page_height"):
        if getattr(page, name) > _U32_MAX:
            raise ValueError(f"{name} does not fit in 32 bits")
    buf = io.BytesIO()
    buf.write(_HEADER.pack(MAGIC, page.page_width, page.page_height, len(page.words)))
    for w in page.words:
        text = w.text.encode("utf-8")
        if len(text) > 0xFFFF:
            raise ValueError(f"word text of {len(text)} bytes exceeds the 16-bit length field")
        buf.write(_GEOMETRY.pack(w.left, w.top, w.width, w.height))
        if w.confidence is None:
            buf.write(b"\x00")
        else:
            buf.write(b"\x01")
            buf.write(_F32.pack(w.confidence))
        buf.write(_U16.pack(len(text)))
        buf.write(text)
    return buf.getvalue()


def read_feature_file(data: bytes, source_label: str = "") -> Page:
    data = bytes(data)
    view = memoryview(data)
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(data):
            raise FormatError(f"truncated feature file while reading {what} at byte {pos}")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    magic, width, height, count = _HEADER.unpack(take(_HEADER.size, "header"))
    if magic != MAGIC:
        raise FormatError(f"bad magic {bytes(magic)!r}")
    words = []
    for i in range(count):
        left, top, w, h = _GEOMETRY.unpack(take(_GEOMETRY.size, f"word {i} geometry"))
        flag = take(1, f"word {i} flag")[0]
        if flag == 1:
            (conf,) = _F32.unpack(take(4, f"word {i} confidence"))
        elif flag == 0:
            conf = None
        else:
            raise FormatError(f"word {i}: bad confidence flag {flag}")
        (n,) = _U16.unpack(take(2, f"word {i} text length"))
        try:
            text = bytes(take(n, f"word {i} text")).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"word {i}: text is not UTF-8: {exc}") from None
        try:
            words.append(RawWord(text, left, top, w, h, conf))
        except ValueError as exc:
            raise FormatError(f"word {i}: {exc}") from None
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after {count} words")
    try:
        return Page(tuple(words), width, height, source_label=source_label)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def feature_payload_size(page: Page) -> int:
    return len(write_feature_file(page))


PARSERS = {
    "tsv": parse_tesseract_tsv,
    "hocr": parse_hocr,
    "json": parse_words_json,
}


def parse_ocr(data, fmt: str, source_label: str = "") -> Page:
    try:
        parser = PARSERS[fmt]
    except KeyError:
        raise FormatError(f"unknown OCR format {fmt!r}; expected one of {sorted(PARSERS)}") from None
    return parser(data, source_label=source_label)
