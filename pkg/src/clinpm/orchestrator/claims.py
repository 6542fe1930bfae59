from __future__ import annotations

import re
from dataclasses import dataclass

CLAIM_SECTIONS = ("findings", "statistics")
KNOWN_SECTIONS = ("findings", "statistics", "recommendations", "limitations")

STOP_WORDS = frozenset("""
a an and are as at be been but by for from has have in into is it its of on or that the their there
these this those to was were which while with within also than then so such per via over
""".split())

_HEADING = re.compile(r"^\s*(?:#{1,6}\s*)?(?:\*\*)?([A-Za-z][A-Za-z ]*?)(?:\*\*)?\s*:?\s*$")
_BULLET = re.compile(r"^\s*(?:[-*+]|\d+[.)])\s+")
# sentence end: terminal punctuation followed by whitespace (so "2.7" never splits)
_SENTENCE_END = re.compile(r"(?<=[.!?])\s+(?=\S)")
_TOKEN = re.compile(r"\d+(?:[.,]\d+)*%?|[a-z][a-z0-9]*(?:[-'][a-z0-9]+)*")
_NUMBER = re.compile(r"^\d")


class MissingSection(ValueError):
    pass


@dataclass(frozen=True)
class Claim:
    source_model_id: str
    text: str
    normalized_key: frozenset[str]
    section: str = "findings"

    @property
    def numbers(self) -> frozenset[str]:
        return frozenset(t for t in self.normalized_key if _NUMBER.match(t))

    @property
    def words(self) -> frozenset[str]:
        return self.normalized_key - self.numbers


def normalize(text: str) -> frozenset[str]:
    """Lower-cased token set without stop words; numbers (with decimals and %) are kept whole."""
    tokens = _TOKEN.findall(text.lower())
    return frozenset(t for t in tokens if t not in STOP_WORDS)


def split_sections(report_text: str) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {}
    current = None
    for line in report_text.splitlines():
        m = _HEADING.match(line)
        if m and m.group(1).strip().lower() in KNOWN_SECTIONS:
            current = m.group(1).strip().lower()
            sections.setdefault(current, [])
            continue
        if line.lstrip().startswith("#"):
            current = None
            continue
        if current is not None:
            sections[current].append(line)
    return sections


def split_sentences(lines: list[str]) -> list[str]:
    """Bullets and blank lines delimit items; each item is split into sentences."""
    items: list[str] = []
    buf: list[str] = []
    for line in lines:
        if not line.strip() or _BULLET.match(line):
            if buf:
                items.append(" ".join(buf))
                buf = []
            if line.strip():
                buf.append(_BULLET.sub("", line).strip())
        else:
            buf.append(line.strip())
    if buf:
        items.append(" ".join(buf))
    sentences = []
    for item in items:
        sentences.extend(s.strip() for s in _SENTENCE_END.split(item) if s.strip())
    return sentences


def extract_claims(report_text: str, source_model_id: str = "") -> list[Claim]:
    """One claim per sentence of the Findings and Statistics sections."""
    sections = split_sections(report_text)
    findings = split_sentences(sections.get("findings", []))
    if not findings:
        raise MissingSection("report has no (or an empty) Findings section")
    claims = []
    for name in CLAIM_SECTIONS:
        for sentence in split_sentences(sections.get(name, [])):
            claims.append(Claim(source_model_id, sentence, normalize(sentence), name))
    return claims
