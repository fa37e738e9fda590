"""Corpus manifest: UTF-8 delimited text with header path,language,word,speaker."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

from ..errors import FormatError

HEADER = ("path", "language", "word", "speaker")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    language: str
    word: str
    speaker: str

    @property
    def key(self):
        return (self.language, self.word, self.speaker)


def read_manifest(path) -> list:
    """Parse a manifest; relative paths are resolved against its directory.

    Not every (word, speaker) cell needs to be present, but each
    (language, word, speaker) triple may appear only once.
    """
    base = os.path.dirname(os.path.abspath(path))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise FormatError(f"{path}: header must be {','.join(HEADER)}")
        entries, seen = [], set()
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            p, lang, word, spk = (c.strip() for c in row)
            entry = ManifestEntry(os.path.normpath(os.path.join(base, p)), lang, word, spk)
            if entry.key in seen:
                raise FormatError(f"{path}:{lineno}: duplicate entry {entry.key}")
            seen.add(entry.key)
            entries.append(entry)
    return entries


def write_manifest(entries, path) -> None:
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for e in entries:
            rel = os.path.relpath(os.path.abspath(e.path), base)
            w.writerow([rel, e.language, e.word, e.speaker])
