"""
Artifact plumbing for CLI runs: result envelopes, CSV tables, manifests and replay.

A run directory holds result.json, any CSV tables and manifest.json. The manifest
digest covers the subcommand, its full parameter set and the code version; the
output digest covers every primary output byte for byte.
"""

import csv
import hashlib
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings

from lab.constants import SCHEMA_VERSION
from lab.exceptions import PreconditionError
from lab.models import RunManifest
from lab.schemas import ManifestOut, ResultEnvelope, TruncationOut
from polylab.utils import get_polylab_logger

logger = get_polylab_logger(__name__)

RESULT_FILE = "result.json"
MANIFEST_FILE = "manifest.json"
DIGEST_PREFIX = 12


@dataclass
class RunOutcome:
    """What a subcommand produced: the JSON payload, CSV tables and the lines to print."""

    subcommand: str
    payload: dict
    truncation: TruncationOut = field(default_factory=TruncationOut)
    tables: dict[str, str] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class ReplayResult:
    subcommand: str
    expected_digest: str
    actual_digest: str

    @property
    def matches(self) -> bool:
        return self.expected_digest == self.actual_digest


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=True)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def manifest_digest(subcommand: str, parameters: dict, code_version: str) -> str:
    return sha256_hex(
        canonical_json(
            {"subcommand": subcommand, "parameters": parameters, "code_version": code_version}
        )
    )


def render_outputs(outcome: RunOutcome, digest: str) -> dict[str, str]:
    """File name to file text for every primary output of a run."""
    envelope = ResultEnvelope(
        schema_version=SCHEMA_VERSION,
        subcommand=outcome.subcommand,
        manifest_digest=digest,
        truncation=outcome.truncation,
        payload=outcome.payload,
    )
    outputs = {RESULT_FILE: json.dumps(envelope.model_dump(), indent=2, sort_keys=True) + "\n"}
    outputs.update(outcome.tables)
    return outputs


def output_digest(outputs: dict[str, str]) -> str:
    hasher = hashlib.sha256()
    for name in sorted(outputs):
        hasher.update(name.encode("utf-8"))
        hasher.update(b"\0")
        hasher.update(outputs[name].encode("utf-8"))
        hasher.update(b"\0")
    return hasher.hexdigest()


def csv_table(header: list[str], rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_run(
    outcome: RunOutcome,
    parameters: dict,
    thread_count: int,
    wall_time_seconds: float,
    out_dir: str | Path | None = None,
) -> RunManifest:
    code_version = settings.POLYLAB_CODE_VERSION
    digest = manifest_digest(outcome.subcommand, parameters, code_version)
    outputs = render_outputs(outcome, digest)
    run_digest = output_digest(outputs)

    root = Path(out_dir) if out_dir else Path(settings.POLYLAB_ARTIFACTS_DIR)
    directory = root / f"{outcome.subcommand}-{digest[:DIGEST_PREFIX]}"
    directory.mkdir(parents=True, exist_ok=True)
    for name, text in outputs.items():
        (directory / name).write_text(text, encoding="utf-8")

    manifest = ManifestOut(
        subcommand=outcome.subcommand,
        parameters=parameters,
        code_version=code_version,
        thread_count=thread_count,
        wall_time_seconds=wall_time_seconds,
        output_digest=run_digest,
    ).model_dump()
    manifest["manifest_digest"] = digest
    manifest["schema_version"] = SCHEMA_VERSION
    (directory / MANIFEST_FILE).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    run = RunManifest.objects.create(
        subcommand=outcome.subcommand,
        parameters=parameters,
        code_version=code_version,
        thread_count=thread_count,
        wall_time_seconds=wall_time_seconds,
        output_digest=run_digest,
        manifest_digest=digest,
        artifact_path=str(directory),
    )
    logger.info(
        "[Runs] Wrote run artifacts",
        subcommand=outcome.subcommand,
        manifest_digest=digest,
        output_digest=run_digest,
        artifact_path=str(directory),
        files=sorted(outputs),
    )
    return run


def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_FILE
    if not path.exists():
        raise PreconditionError(f"no manifest at {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as error:
        raise PreconditionError(f"manifest {path} is not valid JSON") from error
    missing = {"subcommand", "parameters", "code_version", "output_digest"} - set(manifest)
    if missing:
        raise PreconditionError(f"manifest {path} lacks {sorted(missing)}")
    return manifest


def replay_manifest(path: str | Path, workers: int | None = None) -> ReplayResult:
    """Re-execute a stored run and compare the digest of its fresh outputs."""
    from lab.subcommands import execute

    manifest = load_manifest(path)
    if manifest["code_version"] != settings.POLYLAB_CODE_VERSION:
        logger.warning(
            "[Runs] Replaying a manifest written by another code version",
            recorded=manifest["code_version"],
            current=settings.POLYLAB_CODE_VERSION,
        )

    started = time.perf_counter()
    outcome = execute(manifest["subcommand"], manifest["parameters"], workers=workers)
    digest = manifest_digest(
        manifest["subcommand"], manifest["parameters"], manifest["code_version"]
    )
    actual = output_digest(render_outputs(outcome, digest))

    result = ReplayResult(
        subcommand=manifest["subcommand"],
        expected_digest=manifest["output_digest"],
        actual_digest=actual,
    )
    logger.info(
        "[Runs] Replayed manifest",
        subcommand=result.subcommand,
        matches=result.matches,
        wall_time_seconds=time.perf_counter() - started,
    )
    return result
