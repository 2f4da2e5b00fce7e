"""Target execution: spawn-per-case subprocess runner and in-process toy runner.

Subprocess targets receive the test case as a file path substituted for the
"{case}" placeholder in the argv template, and report coverage through one
of two channels:

  envfile  COVRL_COV_PATH names a file the target fills with the final
           M-byte counter map at exit (zeroed by the executor beforehand)
  shm      COVRL_SHM_PATH names a pre-sized file the target mmaps and
           updates in place, surviving mid-run kills

Hitting the timeout kills the process and classifies the run as a timeout
with whatever coverage was written; exits under a signal are crashes.  The
toy interpreter also runs in-process (ToyExecutor), which is how campaigns
against it reach fuzzing throughput; the subprocess path is for external
targets and for exercising the process contract itself.
"""

from __future__ import annotations

import hashlib
import os
import re
import signal as signal_mod
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from random import Random

import numpy as np

from .coverage import CoverageMap, ConfigurationError, DEFAULT_MAP_EXPONENT
from .reward import ExitStatus, Outcome, OutcomeClass, classify_stderr
from . import toy_target

STDERR_HEAD_BYTES = 4096
CHANNEL_ENVFILE = "envfile"
CHANNEL_SHM = "shm"
COVERAGE_CHANNELS = (CHANNEL_ENVFILE, CHANNEL_SHM)

ENV_COV_PATH = "COVRL_COV_PATH"
ENV_SHM_PATH = "COVRL_SHM_PATH"
ENV_MAP_EXPONENT = "COVRL_MAP_EXPONENT"


@dataclass
class TargetConfig:
    """How to launch and observe one target."""

    argv: list[str]
    coverage_channel: str = CHANNEL_ENVFILE
    timeout_ms: int = 1000
    map_size_exponent: int = DEFAULT_MAP_EXPONENT
    memory_limit_mb: int | None = None

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ConfigurationError("timeout_ms must be positive")
        if self.coverage_channel not in COVERAGE_CHANNELS:
            raise ConfigurationError(
                f"coverage_channel must be one of {COVERAGE_CHANNELS}"
            )
        placeholders = sum(1 for a in self.argv if "{case}" in a)
        if placeholders != 1:
            raise ConfigurationError(
                "argv must contain the {case} placeholder exactly once"
            )


@dataclass
class ExecutionResult:
    """One execution: classified outcome plus its coverage."""

    outcome: Outcome
    coverage: CoverageMap
    wall_ms: int
    stderr_head: bytes = b""


def toy_argv() -> list[str]:
    """Argv template that runs the toy interpreter as a subprocess."""
    return [sys.executable, "-m", "covrl.toy_target", "{case}"]


class Executor:
    """Plain spawn-per-case runner for instrumented external targets."""

    def __init__(self, config: TargetConfig, work_dir: str | None = None):
        self.config = config
        self._tmp = tempfile.TemporaryDirectory(prefix="covrl-exec-") if work_dir is None else None
        self.work_dir = self._tmp.name if self._tmp else work_dir
        self.case_path = os.path.join(self.work_dir, "case.bin")
        self.cov_path = os.path.join(self.work_dir, "coverage.map")
        self.map_size = 1 << config.map_size_exponent

    def close(self):
        if self._tmp is not None:
            self._tmp.cleanup()
            self._tmp = None

    def _build_env(self) -> dict:
        env = dict(os.environ)
        env[ENV_MAP_EXPONENT] = str(self.config.map_size_exponent)
        if self.config.coverage_channel == CHANNEL_ENVFILE:
            env[ENV_COV_PATH] = self.cov_path
            env.pop(ENV_SHM_PATH, None)
        else:
            env[ENV_SHM_PATH] = self.cov_path
            env.pop(ENV_COV_PATH, None)
        return env

    def _preexec(self):
        if self.config.memory_limit_mb is None:
            return None
        limit = self.config.memory_limit_mb * 1024 * 1024

        def set_limits():
            import resource

            resource.setrlimit(resource.RLIMIT_AS, (limit, limit))

        return set_limits

    def execute(self, case: bytes) -> ExecutionResult:
        with open(self.case_path, "wb") as fp:
            fp.write(case)
        # zero the coverage region before the run
        with open(self.cov_path, "wb") as fp:
            fp.write(b"\x00" * self.map_size)

        argv = [a.replace("{case}", self.case_path) for a in self.config.argv]
        started = time.monotonic()
        timed_out = False
        try:
            proc = subprocess.Popen(
                argv,
                stdout=subprocess.DEVNULL,
                stderr=subprocess.PIPE,
                env=self._build_env(),
                preexec_fn=self._preexec(),
            )
        except OSError as exc:
            raise ConfigurationError(f"cannot launch target {argv[0]!r}: {exc}") from exc
        try:
            _, stderr = proc.communicate(timeout=self.config.timeout_ms / 1000.0)
        except subprocess.TimeoutExpired:
            timed_out = True
            proc.kill()
            _, stderr = proc.communicate()
        wall_ms = int((time.monotonic() - started) * 1000)

        stderr_head = (stderr or b"")[:STDERR_HEAD_BYTES]
        code = proc.returncode
        sig = -code if (code is not None and code < 0 and not timed_out) else None
        exit_status = ExitStatus(
            code=code if sig is None else None, signal=sig, timed_out=timed_out
        )
        outcome = classify_stderr(stderr_head, exit_status)

        try:
            with open(self.cov_path, "rb") as fp:
                raw = fp.read(self.map_size)
        except OSError:
            raw = b""
        if len(raw) < self.map_size:
            raw = raw + b"\x00" * (self.map_size - len(raw))
        counters = np.frombuffer(raw, dtype=np.uint8).copy()
        cov = CoverageMap(counters, self.config.map_size_exponent)
        return ExecutionResult(outcome, cov, wall_ms, stderr_head)


class ToyExecutor:
    """In-process runner for the built-in toy interpreter."""

    def __init__(
        self,
        map_size_exponent: int = DEFAULT_MAP_EXPONENT,
        timeout_ms: int = 1000,
        fuel: int = toy_target.DEFAULT_FUEL,
    ):
        if (1 << map_size_exponent) < toy_target.EDGE_COUNT:
            raise ConfigurationError(
                f"toy target needs a map of at least {toy_target.EDGE_COUNT} edges"
            )
        self.map_size_exponent = map_size_exponent
        self.timeout_ms = timeout_ms
        self.fuel = fuel

    def close(self):
        pass

    def execute(self, case: bytes, noise_rng: Random | None = None) -> ExecutionResult:
        started = time.monotonic()
        deadline = started + self.timeout_ms / 1000.0
        res = toy_target.run(
            case, fuel=self.fuel, deadline=deadline, noise_rng=noise_rng
        )
        wall_ms = int((time.monotonic() - started) * 1000)
        stderr_bytes = res.stderr.encode("utf-8", "replace")[:STDERR_HEAD_BYTES]
        exit_status = ExitStatus(
            code=res.exit_code, signal=res.signal, timed_out=res.timed_out
        )
        outcome = classify_stderr(stderr_bytes, exit_status)
        cov = CoverageMap.from_hits(res.hits, self.map_size_exponent)
        return ExecutionResult(outcome, cov, wall_ms, stderr_bytes)


_HEX_RE = re.compile(rb"0x[0-9a-fA-F]+")
_NUM_RE = re.compile(rb"\d+")
_WS_RE = re.compile(rb"\s+")


def _normalize_line(line: bytes) -> bytes:
    line = _HEX_RE.sub(b"<addr>", line)
    line = _NUM_RE.sub(b"<n>", line)
    return _WS_RE.sub(b" ", line).strip()


def fingerprint_crash(result: ExecutionResult, context_lines: int = 5) -> str:
    """Stable bucket id for a crash: signal plus normalized stderr head.

    Addresses, pids, and other numerals are stripped so that runs of the
    same bug with different pointer noise land in one bucket.
    """
    if result.outcome.cls is not OutcomeClass.CRASH:
        raise ValueError("fingerprint_crash needs a crash outcome")
    lines = [ln for ln in result.stderr_head.splitlines() if ln.strip()]
    normalized = b"\n".join(_normalize_line(ln) for ln in lines[:context_lines])
    digest = hashlib.sha256(
        str(result.outcome.signal).encode() + b"\n" + normalized
    ).hexdigest()
    return digest[:16]
