"""Subprocess and in-process execution, coverage channels, crash buckets."""

import sys

import pytest

from covrl.coverage import ConfigurationError, unique_coverage
from covrl.executor import (
    CHANNEL_SHM,
    CoverageMap,
    ExecutionResult,
    Executor,
    TargetConfig,
    ToyExecutor,
    fingerprint_crash,
    toy_argv,
)
from covrl.reward import Outcome, OutcomeClass
from covrl.toy_target import EDGE_COUNT


def test_target_config_validation():
    with pytest.raises(ConfigurationError):
        TargetConfig(argv=["prog"])  # no {case}
    with pytest.raises(ConfigurationError):
        TargetConfig(argv=["prog", "{case}", "{case}"])
    with pytest.raises(ConfigurationError):
        TargetConfig(argv=["prog", "{case}"], timeout_ms=0)
    with pytest.raises(ConfigurationError):
        TargetConfig(argv=["prog", "{case}"], coverage_channel="pipe")


def test_toy_executor_needs_room_for_all_edges():
    with pytest.raises(ConfigurationError):
        ToyExecutor(map_size_exponent=8)
    assert (1 << 10) >= EDGE_COUNT  # the smallest exponent the toy accepts
    ToyExecutor(map_size_exponent=10)


def test_toy_executor_pass_and_coverage():
    ex = ToyExecutor(map_size_exponent=10)
    res = ex.execute(b"print ( 1 + 2 ) ;")
    assert res.outcome.cls is OutcomeClass.PASS
    assert len(unique_coverage(res.coverage)) > 5
    assert res.wall_ms >= 0


def test_toy_executor_error_taxonomy():
    ex = ToyExecutor(map_size_exponent=10)
    assert ex.execute(b"let ;").outcome.cls is OutcomeClass.SYNTAX_ERROR
    res = ex.execute(b"print ( nope ) ;")
    assert res.outcome.cls is OutcomeClass.SEMANTIC_ERROR
    assert res.outcome.semantic_kind.value == "reference"


def test_toy_executor_crash_and_fingerprint_stability():
    ex = ToyExecutor(map_size_exponent=10)
    crash_src = b'print ( repeat ( "ab" , 21 ) ) ;'
    res1 = ex.execute(crash_src)
    res2 = ex.execute(crash_src)
    assert res1.outcome.cls is OutcomeClass.CRASH
    fp1, fp2 = fingerprint_crash(res1), fingerprint_crash(res2)
    assert fp1 == fp2
    assert len(fp1) == 16
    # a different bug lands in a different bucket
    other = ex.execute(b'print ( decodeURI ( "%00" ) ) ;')
    assert other.outcome.cls is OutcomeClass.CRASH
    assert fingerprint_crash(other) != fp1


def test_fingerprint_requires_a_crash():
    ex = ToyExecutor(map_size_exponent=10)
    res = ex.execute(b"print ( 1 ) ;")
    with pytest.raises(ValueError):
        fingerprint_crash(res)


def test_fingerprint_normalizes_numerals():
    base = Outcome(OutcomeClass.CRASH, signal=6)
    a = ExecutionResult(base, CoverageMap.zeros(10), 1, b"frame at 0xdeadbeef pid 123")
    b = ExecutionResult(base, CoverageMap.zeros(10), 1, b"frame at 0xfeedface pid 999")
    assert fingerprint_crash(a) == fingerprint_crash(b)


@pytest.mark.parametrize("channel", ["envfile", CHANNEL_SHM])
def test_subprocess_toy_round_trip(tmp_path, channel):
    """The toy CLI honors both coverage channels through a real subprocess."""
    cfg = TargetConfig(
        argv=toy_argv(),
        coverage_channel=channel,
        timeout_ms=10000,
        map_size_exponent=10,
    )
    ex = Executor(cfg, work_dir=str(tmp_path))
    try:
        res = ex.execute(b"print ( 40 + 2 ) ;")
        assert res.outcome.cls is OutcomeClass.PASS
        edges = unique_coverage(res.coverage)
        assert len(edges) > 5
        bad = ex.execute(b"print ( nope ) ;")
        assert bad.outcome.cls is OutcomeClass.SEMANTIC_ERROR
    finally:
        ex.close()


def test_subprocess_agrees_with_in_process(tmp_path):
    src = b'let a = [ 1 , 2 ] ; print ( len ( a ) ) ; print ( str ( a ) ) ;'
    toy = ToyExecutor(map_size_exponent=10)
    in_proc = set(unique_coverage(toy.execute(src)).tolist())
    cfg = TargetConfig(argv=toy_argv(), timeout_ms=10000, map_size_exponent=10)
    ex = Executor(cfg, work_dir=str(tmp_path))
    try:
        sub = set(unique_coverage(ex.execute(src).coverage).tolist())
    finally:
        ex.close()
    assert sub == in_proc


def test_subprocess_timeout_classified(tmp_path):
    script = tmp_path / "sleeper.py"
    script.write_text("import time\ntime.sleep(30)\n")
    cfg = TargetConfig(
        argv=[sys.executable, str(script), "{case}"],
        timeout_ms=300,
        map_size_exponent=8,
    )
    ex = Executor(cfg, work_dir=str(tmp_path))
    try:
        res = ex.execute(b"x")
        assert res.outcome.cls is OutcomeClass.TIMEOUT
    finally:
        ex.close()


def test_subprocess_signal_is_crash(tmp_path):
    script = tmp_path / "aborter.py"
    script.write_text(
        "import os, signal, sys\n"
        "sys.stderr.write('boom at 0x1234\\n')\n"
        "sys.stderr.flush()\n"
        "os.kill(os.getpid(), signal.SIGSEGV)\n"
    )
    cfg = TargetConfig(
        argv=[sys.executable, str(script), "{case}"],
        timeout_ms=10000,
        map_size_exponent=8,
    )
    ex = Executor(cfg, work_dir=str(tmp_path))
    try:
        res = ex.execute(b"x")
        assert res.outcome.cls is OutcomeClass.CRASH
        assert res.outcome.signal == 11
        assert len(fingerprint_crash(res)) == 16
    finally:
        ex.close()


def test_subprocess_missing_binary_raises(tmp_path):
    cfg = TargetConfig(argv=["/no/such/binary", "{case}"], map_size_exponent=8)
    ex = Executor(cfg, work_dir=str(tmp_path))
    try:
        with pytest.raises(ConfigurationError):
            ex.execute(b"x")
    finally:
        ex.close()
