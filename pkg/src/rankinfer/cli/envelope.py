"""Deterministic output envelope shared by every subcommand.

Key order is part of the contract: procedure, input_digest, seed,
coverage, results, warnings. Two runs with the same inputs and seed
must serialize to identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field


def input_digest(*chunks: bytes) -> str:
    digest = hashlib.sha256()
    for i, chunk in enumerate(chunks):
        if i:
            digest.update(b"\x1e")  # keep (a, b) distinct from (ab,)
        digest.update(chunk)
    return "sha256:" + digest.hexdigest()


@dataclass(frozen=True)
class OutputEnvelope:
    procedure: str
    input_digest: str
    seed: int | None
    coverage: float | None
    results: dict
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def to_json(self) -> str:
        body = {
            "procedure": self.procedure,
            "input_digest": self.input_digest,
            "seed": self.seed,
            "coverage": self.coverage,
            "results": self.results,
            "warnings": list(self.warnings),
        }
        return json.dumps(body, indent=2, ensure_ascii=False) + "\n"


def render_csv(header: list[str], rows: list[list[object]]) -> str:
    """Tabular view of the results; floats via repr so values round-trip."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()
