"""Per-call LLM transcripts and their plain-text file format.

A transcript file is a short ``#`` header followed by one block per call. Prompt
and response bodies are preceded by their length in characters, so arbitrary
model output (including text that looks like block markers) round-trips
verbatim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ReplayError

MAGIC = "# policyscope transcript v1"
ROLES = ("strategy", "generation", "single")
OUTCOMES = ("ok", "retried", "fallback")


@dataclass(frozen=True)
class AgentTranscript:
    iteration: int
    role: str
    prompt: str
    response: str
    parse_outcome: str
    latency_ms: float = 0.0


@dataclass
class TranscriptFile:
    transcripts: list[AgentTranscript]
    header: dict[str, str] = field(default_factory=dict)


def format_transcripts(transcripts, header: dict | None = None) -> str:
    parts = [MAGIC + "\n"]
    for key, value in (header or {}).items():
        parts.append(f"# {key}: {value}\n")
    for i, t in enumerate(transcripts, 1):
        parts.append(
            f"=== call {i} ===\n"
            f"iteration: {t.iteration}\n"
            f"role: {t.role}\n"
            f"parse_outcome: {t.parse_outcome}\n"
            f"latency_ms: {t.latency_ms!r}\n"
            f"--- prompt: {len(t.prompt)} chars ---\n{t.prompt}\n"
            f"--- response: {len(t.response)} chars ---\n{t.response}\n"
            f"=== end call {i} ===\n"
        )
    return "".join(parts)


def write_transcript(path, transcripts, header: dict | None = None) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_transcripts(transcripts, header))
    return path


class _Reader:
    def __init__(self, text, source):
        self.text = text
        self.pos = 0
        self.source = source

    def line(self) -> str:
        end = self.text.find("\n", self.pos)
        if end < 0:
            raise ReplayError(f"{self.source}: truncated transcript")
        out = self.text[self.pos : end]
        self.pos = end + 1
        return out

    def field(self, name) -> str:
        line = self.line()
        prefix = f"{name}: "
        if not line.startswith(prefix):
            raise ReplayError(f"{self.source}: expected '{name}' field, found {line[:60]!r}")
        return line[len(prefix) :]

    def body(self, name) -> str:
        m = re.fullmatch(rf"--- {name}: (\d+) chars ---", self.line())
        if not m:
            raise ReplayError(f"{self.source}: malformed {name} marker")
        n = int(m.group(1))
        out = self.text[self.pos : self.pos + n]
        if len(out) != n or self.text[self.pos + n : self.pos + n + 1] != "\n":
            raise ReplayError(f"{self.source}: truncated {name} body")
        self.pos += n + 1
        return out


def read_transcript(path) -> TranscriptFile:
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise ReplayError(f"cannot read transcript {path}: {exc}") from exc
    r = _Reader(text, path)
    if r.line() != MAGIC:
        raise ReplayError(f"{path}: not a transcript file")
    header = {}
    while r.pos < len(text) and text.startswith("# ", r.pos):
        key, _, value = r.line()[2:].partition(": ")
        header[key] = value
    out = []
    while r.pos < len(text):
        if not re.fullmatch(r"=== call \d+ ===", r.line()):
            raise ReplayError(f"{path}: expected a call block")
        iteration = int(r.field("iteration"))
        role = r.field("role")
        outcome = r.field("parse_outcome")
        latency = float(r.field("latency_ms"))
        prompt = r.body("prompt")
        response = r.body("response")
        if not re.fullmatch(r"=== end call \d+ ===", r.line()):
            raise ReplayError(f"{path}: unterminated call block")
        out.append(AgentTranscript(iteration, role, prompt, response, outcome, latency))
    return TranscriptFile(out, header)
