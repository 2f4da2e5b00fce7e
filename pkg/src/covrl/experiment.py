"""Paired-run experiment: does reward feedback buy coverage?

Both arms run identical campaign mechanics on the in-process toy
interpreter.  One switch differs: the adaptive arm lets the mock
mutator reweight its dictionary, shapes, and themes from batch rewards
(``mock_adaptive=True``); the uniform arm keeps sampling those
uniformly forever.  Queue scheduling, masking, retention, and the
execution budget are the same in both.  Nine paired runs (seeds 1
through 9) give a median edge count per arm plus the set of planted
crashes each arm reached.

The starting corpus is rebuilt in a temp directory on every call, so
the experiment is self-contained.  Two deliberate choices about it:

* No corpus program calls the string/number/array builtins directly
  (``api_share=0.0``).  Finding those call families is the work the
  adaptive sampler is graded on; seeding them would measure nothing.
* The fixed floor set is included, pinning one-off trivia edges in
  both arms identically, so medians compare search rather than luck.

Small map and short cycles keep one pair under half a minute; the
whole experiment runs in a few minutes on one core.
"""

from __future__ import annotations

import os
import statistics
import tempfile
import time
from dataclasses import dataclass, field

from .config import Config
from .corpusgen import generate_corpus
from .executor import ToyExecutor, fingerprint_crash
from .fuzzer import Campaign

EXPERIMENT_SEEDS = tuple(range(1, 10))
EXEC_BUDGET = 50_000
CORPUS_SIZE = 50
CORPUS_SEED = 7

# One canonical trigger per planted bug.  Fingerprints are computed at
# runtime (they hash normalized crash reports, which is cheap) instead
# of being frozen here, so a report edit in the target cannot silently
# desync the experiment's bug accounting.
BUG_TRIGGERS = {
    "deep_array": "let d = [ [ [ [ [ [ [ 1 ] ] ] ] ] ] ] ;",
    "repeat_overflow": 'print ( repeat ( "ab" , 9 ) ) ;',
    "uri_nul": 'print ( decodeURI ( "%00" ) ) ;',
}


def experiment_config(seed: int, adaptive: bool, execs: int = EXEC_BUDGET) -> Config:
    """The frozen campaign settings for one arm of one pair.

    map_exponent 10 comfortably holds the toy target's edge space and
    keeps the bitmap maths fast; 625-execution cycles give the sampler
    80 reweighting opportunities per run; mask_rate 0.10 with at most
    5 slots keeps mutants close enough to their parents to parse.
    """
    return Config(
        target="toy",
        map_exponent=10,
        execs=execs,
        iter_cycle=625,
        mask_rate=0.10,
        mask_max_slots=5,
        error_sample_rate=0.25,
        strategy_mix="1,1,1",
        mutator="mock",
        mock_adaptive=adaptive,
        seed=seed,
    ).validate()


def write_experiment_corpus(directory: str) -> list[str]:
    """Materialize the fixed 50-program starting corpus into a directory."""
    programs = generate_corpus(CORPUS_SIZE, base_seed=CORPUS_SEED, api_share=0.0)
    os.makedirs(directory, exist_ok=True)
    for i, source in enumerate(programs):
        with open(os.path.join(directory, f"seed_{i:03d}.js"), "w") as fp:
            fp.write(source + "\n")
    return programs


def known_bug_fingerprints() -> dict[str, str]:
    """Map crash-bucket fingerprint -> planted bug name."""
    table = {}
    executor = ToyExecutor(10, 1000)
    try:
        for name, source in BUG_TRIGGERS.items():
            result = executor.execute(source.encode())
            if result.outcome.cls.value != "crash":
                raise RuntimeError(f"bug trigger for {name!r} did not crash")
            table[fingerprint_crash(result)] = name
    finally:
        executor.close()
    return table


@dataclass
class RunResult:
    """One arm of one pair."""

    seed: int
    adaptive: bool
    edges: int
    passes: int
    execs: int
    crash_buckets: dict = field(default_factory=dict)
    bugs: set = field(default_factory=set)


@dataclass
class DifferentialReport:
    runs: list = field(default_factory=list)
    median_adaptive: float = 0.0
    median_uniform: float = 0.0
    bugs_adaptive: set = field(default_factory=set)
    bugs_uniform: set = field(default_factory=set)
    elapsed_s: float = 0.0

    @property
    def gaps(self) -> list[int]:
        by_seed = {}
        for run in self.runs:
            by_seed.setdefault(run.seed, {})[run.adaptive] = run.edges
        return [pair[True] - pair[False] for _, pair in sorted(by_seed.items())]

    def render(self) -> str:
        lines = [f"{'seed':>4} {'adaptive':>8} {'uniform':>8} {'gap':>5}"]
        by_seed = {}
        for run in self.runs:
            by_seed.setdefault(run.seed, {})[run.adaptive] = run
        for seed, pair in sorted(by_seed.items()):
            a, u = pair[True], pair[False]
            lines.append(f"{seed:>4} {a.edges:>8} {u.edges:>8} {a.edges - u.edges:>+5}")
        lines.append("")
        lines.append(f"median edges  adaptive={self.median_adaptive:g}  "
                     f"uniform={self.median_uniform:g}")
        lines.append(f"planted bugs  adaptive={sorted(self.bugs_adaptive)}  "
                     f"uniform={sorted(self.bugs_uniform)}")
        lines.append(f"elapsed       {self.elapsed_s:.1f}s")
        return "\n".join(lines)


def run_single(
    seed: int,
    adaptive: bool,
    corpus_dir: str,
    execs: int = EXEC_BUDGET,
    bug_names: dict | None = None,
) -> RunResult:
    """Run one campaign arm fully in memory and summarize it."""
    camp = Campaign(experiment_config(seed, adaptive, execs), out_dir=None, quiet=True)
    camp.warmup(corpus_dir)
    camp.run(execs=execs)
    buckets = dict(camp.crash_buckets)
    names = bug_names if bug_names is not None else known_bug_fingerprints()
    return RunResult(
        seed=seed,
        adaptive=adaptive,
        edges=int(camp.virgin.seen.sum()),
        passes=camp.stats.passes,
        execs=camp.stats.execs,
        crash_buckets=buckets,
        bugs={names[f] for f in buckets if f in names},
    )


def run_differential(
    seeds=EXPERIMENT_SEEDS,
    execs: int = EXEC_BUDGET,
    progress=None,
) -> DifferentialReport:
    """The full paired experiment.  ``progress`` gets one line per pair."""
    start = time.monotonic()
    report = DifferentialReport()
    names = known_bug_fingerprints()
    with tempfile.TemporaryDirectory(prefix="covrl_exp_") as tmp:
        corpus_dir = os.path.join(tmp, "corpus")
        write_experiment_corpus(corpus_dir)
        for seed in seeds:
            a = run_single(seed, True, corpus_dir, execs, names)
            u = run_single(seed, False, corpus_dir, execs, names)
            report.runs += [a, u]
            report.bugs_adaptive |= a.bugs
            report.bugs_uniform |= u.bugs
            if progress is not None:
                progress(
                    f"seed {seed}: adaptive={a.edges} uniform={u.edges} "
                    f"gap={a.edges - u.edges:+d} bugs={sorted(a.bugs)}"
                )
    report.median_adaptive = statistics.median(
        r.edges for r in report.runs if r.adaptive
    )
    report.median_uniform = statistics.median(
        r.edges for r in report.runs if not r.adaptive
    )
    report.elapsed_s = time.monotonic() - start
    return report
