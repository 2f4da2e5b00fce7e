"""Fuzzing campaign: seed schedule, mutate-execute loop, weights, persistence.

One campaign drives one target.  Each cycle runs `iter_cycle` executions of
mask -> fill -> splice -> execute -> classify.  Executions with new
coverage are retained as seeds and always enter the finetune dataset with a
coverage reward; syntax/semantic failures are sampled in at a configured
rate with their penalties; crashes are fingerprinted into buckets and
timeouts are only counted.  At the end of a cycle the idf weights are
recomputed from document frequencies, folded in with momentum, the cycle's
dataset slice is sent to the mutator's finetune endpoint, and state is
checkpointed.

Persistence layout under the output directory:

  queue/      retained seeds, one file per seed, named id_parent_cycle.js
  crashes/    first case and stderr per crash bucket
  dataset.jsonl   reward records (one JSON object per line)
  stats.jsonl     one snapshot per cycle
  state.bin       campaign-state checkpoint

For reproducibility stats.jsonl carries a virtual clock: wall_ms counts one
millisecond per execution, so two runs with the same seed write identical
bytes.  Real elapsed time is reported on the console instead.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import struct
import time
from bisect import bisect_right
from dataclasses import dataclass, field
from random import Random

import numpy as np

from .config import Config
from .coverage import (
    ConfigurationError,
    StateFormatError,
    VirginMap,
    WeightMap,
    accumulate,
    compute_idf,
    read_state_block,
    register_seed_coverage,
    unique_coverage,
    update_with_momentum,
    write_state_block,
)
from .executor import Executor, ExecutionResult, TargetConfig, ToyExecutor, fingerprint_crash, toy_argv
from .masking import (
    STRATEGY_INSERT,
    STRATEGY_OVERWRITE,
    STRATEGY_SPLICE,
    STRATEGIES,
    MaskedCase,
    mask_insert,
    mask_overwrite,
    mask_splice,
    sample_mask_positions,
    splice_fills,
)
from .mutator import (
    DecodeParams,
    InProcessEndpoint,
    MockMutator,
    ProtocolError,
    TcpEndpoint,
    TransportError,
    build_finetune_request,
    request_fill,
)
from .reward import (
    Outcome,
    OutcomeClass,
    dispatch_reward,
)
from .tokenizer import TokenStream, detokenize, tokenize

log = logging.getLogger("covrl.fuzzer")

EXT_MAGIC = b"CVRX"
EXT_VERSION = 1
_EXT_HEADER = struct.Struct("<4sIQ")

MIN_SEED_ENERGY = 0.05
RECENCY_BOOST = 2.0

# share of mutation cases that touch a single spot instead of masking at
# the configured rate, and the rate used for those light touches
LIGHT_TOUCH_SHARE = 0.10
LIGHT_TOUCH_RATE = 0.03


@dataclass
class Seed:
    """A retained corpus entry."""

    id: int
    data: bytes
    tokens: TokenStream
    unique_edges: np.ndarray       # edges this seed saw first
    discovered_cycle: int = 0
    parent: int | None = None
    truncated: bool = False        # coverage ends at a crash site

    def filename(self) -> str:
        parent = "init" if self.parent is None else f"{self.parent:06d}"
        return f"{self.id:06d}_{parent}_{self.discovered_cycle:04d}.js"


@dataclass
class CampaignStats:
    execs: int = 0
    passes: int = 0
    syntax_errors: int = 0
    semantic_errors: int = 0
    crashes: int = 0
    timeouts: int = 0
    cycles: int = 0
    mutation_discards: int = 0
    finetune_failures: int = 0

    def outcome_total(self) -> int:
        return (
            self.passes
            + self.syntax_errors
            + self.semantic_errors
            + self.crashes
            + self.timeouts
        )


def seed_energy(seed: Seed, weights: WeightMap, current_cycle: int, uniform: bool = False) -> float:
    """Schedule weight for one seed.

    Rarity: the sum of current idf over the edges this seed discovered,
    floored at MIN_SEED_ENERGY.  Recency: seeds found in the current or
    previous cycle are boosted 2x.  Uniform mode scores every seed 1.0.
    """
    if uniform:
        return 1.0
    if seed.truncated:
        # a crasher's rare edges say where it died, not what mutating it
        # will reach; keep it reproducible but do not chase it
        return MIN_SEED_ENERGY
    if len(seed.unique_edges):
        rarity = float(weights.idf[seed.unique_edges].sum())
    else:
        rarity = 0.0
    energy = rarity if rarity > MIN_SEED_ENERGY else MIN_SEED_ENERGY
    if current_cycle - seed.discovered_cycle <= 1:
        energy *= RECENCY_BOOST
    return energy


class Campaign:
    """One fuzzing campaign instance; independent of any other."""

    def __init__(self, config: Config, out_dir: str | None = None, quiet: bool = True):
        config.validate()
        self.config = config
        self.out_dir = out_dir
        self.quiet = quiet
        self.rng = Random(config.seed)
        self.virgin = VirginMap.empty(config.map_exponent)
        self.weights = WeightMap.empty(config.map_exponent)
        self.valid_seen = np.zeros(1 << config.map_exponent, dtype=bool)
        self.queue: list[Seed] = []
        self.stats = CampaignStats()
        self.cycle = 0
        self.next_seed_id = 0
        self.crash_buckets: dict[str, int] = {}
        self.decode = DecodeParams(config.top_k, config.contrastive_alpha)
        self._virtual_ms = 0
        self._strategy_weights = config.strategy_weights()
        self._cum_energy: list[float] = []
        self._cycle_records: list[dict] = []
        self._remote_down = False

        if config.target == "toy":
            self.executor = ToyExecutor(config.map_exponent, config.timeout_ms)
            self._toy = True
        else:
            tc = TargetConfig(
                argv=config.target.split(),
                coverage_channel=config.coverage_channel,
                timeout_ms=config.timeout_ms,
                map_size_exponent=config.map_exponent,
            )
            self.executor = Executor(tc)
            self._toy = False

        self.mock = MockMutator(self.rng, adaptive=config.mock_adaptive)
        if config.mutator == "mock":
            self.endpoint = InProcessEndpoint(self.mock)
            self._remote = None
        else:
            host, _, port = config.mutator.rpartition(":")
            if not host or not port.isdigit():
                raise ConfigurationError(
                    f"mutator must be 'mock' or host:port, got {config.mutator!r}"
                )
            self._remote = TcpEndpoint(host, int(port))
            self.endpoint = self._remote

        if out_dir is not None:
            os.makedirs(os.path.join(out_dir, "queue"), exist_ok=True)
            os.makedirs(os.path.join(out_dir, "crashes"), exist_ok=True)
            self._dataset_fp = open(os.path.join(out_dir, "dataset.jsonl"), "a", encoding="utf-8")
            self._stats_fp = open(os.path.join(out_dir, "stats.jsonl"), "a", encoding="utf-8")
        else:
            self._dataset_fp = None
            self._stats_fp = None

    # ------------------------------------------------------------------
    # lifecycle
    # ------------------------------------------------------------------

    def close(self) -> None:
        for fp in (self._dataset_fp, self._stats_fp):
            if fp is not None:
                fp.close()
        self._dataset_fp = None
        self._stats_fp = None
        self.executor.close()
        if self._remote is not None:
            self._remote.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # ------------------------------------------------------------------
    # warm-up
    # ------------------------------------------------------------------

    def warmup(self, corpus_dir: str) -> int:
        """Replay the starting corpus, seed the queue, and prime weights."""
        try:
            names = sorted(os.listdir(corpus_dir))
        except OSError as exc:
            raise ConfigurationError(f"cannot read corpus {corpus_dir!r}: {exc}") from exc
        loaded = 0
        for name in names:
            path = os.path.join(corpus_dir, name)
            if not os.path.isfile(path):
                continue
            with open(path, "rb") as fp:
                data = fp.read()
            res = self._execute(data)
            cls = res.outcome.cls
            if cls in (OutcomeClass.CRASH, OutcomeClass.TIMEOUT):
                log.warning("skipping corpus seed %s: %s", name, res.outcome.encode())
                continue
            newly = accumulate(self.virgin, res.coverage)
            edges = unique_coverage(res.coverage)
            if cls is OutcomeClass.PASS:
                self.valid_seen[edges] = True
            self._add_seed(data, newly, parent=None, edges=edges)
            loaded += 1
        if loaded == 0:
            raise ConfigurationError(f"corpus {corpus_dir!r} holds no usable seeds")
        if self.virgin.unique_count > 0:
            fresh = compute_idf(self.weights, self.virgin)
            update_with_momentum(self.weights, fresh, alpha=0.0)
        self._rebuild_energies()
        return loaded

    # ------------------------------------------------------------------
    # seed scheduling
    # ------------------------------------------------------------------

    def _rebuild_energies(self) -> None:
        total = 0.0
        cum = []
        uniform = self.config.uniform_energy
        for seed in self.queue:
            total += seed_energy(seed, self.weights, self.cycle, uniform)
            cum.append(total)
        self._cum_energy = cum

    def _append_energy(self, seed: Seed) -> None:
        e = seed_energy(seed, self.weights, self.cycle, self.config.uniform_energy)
        last = self._cum_energy[-1] if self._cum_energy else 0.0
        self._cum_energy.append(last + e)

    def select_seed(self) -> Seed:
        total = self._cum_energy[-1]
        i = bisect_right(self._cum_energy, self.rng.random() * total)
        return self.queue[min(i, len(self.queue) - 1)]

    # ------------------------------------------------------------------
    # one execution
    # ------------------------------------------------------------------

    def _execute(self, data: bytes) -> ExecutionResult:
        if self._toy:
            return self.executor.execute(data, noise_rng=self.rng)
        return self.executor.execute(data)

    def _plan_mask(self, seed: Seed) -> MaskedCase:
        strategy = self.rng.choices(STRATEGIES, weights=self._strategy_weights)[0]
        ts = seed.tokens
        if len(ts) == 0:
            strategy = STRATEGY_INSERT
        # two-regime intensity: most cases mask at the configured rate, a
        # fixed share stay nearly intact (single-slot touches).  Shallow bugs
        # need the surrounding program to survive, fresh structure needs
        # aggressive rewrites; one fixed intensity cannot serve both.
        rate = self.config.mask_rate
        if self.rng.random() < LIGHT_TOUCH_SHARE:
            rate = LIGHT_TOUCH_RATE
        if strategy == STRATEGY_INSERT:
            positions = sample_mask_positions(
                len(ts), self.rng, rate, self.config.mask_max_slots, insert=True
            )
            mc = mask_insert(ts, positions)
        elif strategy == STRATEGY_OVERWRITE:
            positions = sample_mask_positions(
                len(ts), self.rng, rate, self.config.mask_max_slots
            )
            mc = mask_overwrite(ts, positions)
        else:
            donor = self.select_seed()
            mc = mask_splice(ts, donor.tokens, self.rng)
            mc.donor_id = donor.id
        mc.seed_id = seed.id
        return mc

    def _request_fill(self, mc: MaskedCase):
        endpoint = self.endpoint
        if self._remote is not None and self._remote_down:
            endpoint = InProcessEndpoint(self.mock)
        try:
            return request_fill(mc, endpoint, self.decode, request_id=self.stats.execs)
        except TransportError:
            # remote went away: fall back to the mock for the rest of the cycle
            log.warning("mutator endpoint lost; using mock until next cycle")
            self._remote_down = True
            return request_fill(mc, InProcessEndpoint(self.mock), self.decode,
                                request_id=self.stats.execs)

    def _add_seed(self, data: bytes, newly: np.ndarray, parent: int | None,
                  edges: np.ndarray, truncated: bool = False) -> Seed:
        seed = Seed(
            id=self.next_seed_id,
            data=data,
            tokens=tokenize(data),
            unique_edges=np.asarray(newly, dtype=np.int64),
            discovered_cycle=self.cycle,
            parent=parent,
            truncated=truncated,
        )
        self.next_seed_id += 1
        self.queue.append(seed)
        register_seed_coverage(self.weights, edges)
        self._append_energy(seed)
        self.mock.add_tokens(seed.tokens.tokens)
        if self.out_dir is not None:
            path = os.path.join(self.out_dir, "queue", seed.filename())
            with open(path, "wb") as fp:
                fp.write(data)
        return seed

    def _record(self, case_id: str, seed_id: int, mc: MaskedCase, fills,
                outcome: Outcome, reward_value: float) -> None:
        rec = {
            "case_id": case_id,
            "seed_id": seed_id,
            "masked_input": list(mc.masked.tokens),
            "fill": [list(f) for f in fills.fills],
            "outcome": outcome.encode(),
            "reward": reward_value,
            "cycle": self.cycle,
        }
        self._cycle_records.append(rec)
        if self._dataset_fp is not None:
            self._dataset_fp.write(json.dumps(rec, sort_keys=True) + "\n")

    def _record_crash(self, res: ExecutionResult, data: bytes) -> str:
        bucket = fingerprint_crash(res)
        first_seen = bucket not in self.crash_buckets
        self.crash_buckets[bucket] = self.crash_buckets.get(bucket, 0) + 1
        if first_seen and self.out_dir is not None:
            base = os.path.join(self.out_dir, "crashes", bucket)
            with open(base + ".js", "wb") as fp:
                fp.write(data)
            with open(base + ".stderr.txt", "wb") as fp:
                fp.write(res.stderr_head)
        return bucket

    def fuzz_one(self) -> None:
        """One mutate-execute-score step."""
        seed = self.select_seed()
        mc = self._plan_mask(seed)
        try:
            fills = self._request_fill(mc)
        except ProtocolError as exc:
            log.warning("discarding mutation: %s", exc)
            self.stats.mutation_discards += 1
            return
        ts = splice_fills(mc, fills)
        if len(ts) > self.config.max_case_tokens:
            ts = TokenStream(
                ts.tokens[: self.config.max_case_tokens],
                ts.kinds[: self.config.max_case_tokens],
            )
        data = detokenize(ts).encode("utf-8")

        res = self._execute(data)
        stats = self.stats
        stats.execs += 1
        self._virtual_ms += 1
        cls = res.outcome.cls

        if cls is OutcomeClass.TIMEOUT:
            # truncated coverage is noise: count the event, keep nothing
            stats.timeouts += 1
            return
        if cls is OutcomeClass.CRASH:
            # triaged into buckets, then scored like a pass below so that
            # crash-adjacent inputs are never penalized
            stats.crashes += 1
            self._record_crash(res, data)
        elif cls is OutcomeClass.PASS:
            stats.passes += 1
        elif cls is OutcomeClass.SYNTAX_ERROR:
            stats.syntax_errors += 1
        else:
            stats.semantic_errors += 1

        edges = unique_coverage(res.coverage)
        if cls is OutcomeClass.PASS:
            self.valid_seen[edges] = True
        newly = accumulate(self.virgin, res.coverage)

        if len(newly):
            reward = dispatch_reward(
                res.outcome, res.coverage, self.weights, self.virgin,
                scheme=self.config.reward_scheme, newly_seen=len(newly),
            )
            new_seed = self._add_seed(
                data, newly, parent=seed.id, edges=edges,
                truncated=cls is OutcomeClass.CRASH,
            )
            self._record(f"s{new_seed.id}", seed.id, mc, fills, res.outcome, reward.value)
        elif cls in (OutcomeClass.SYNTAX_ERROR, OutcomeClass.SEMANTIC_ERROR):
            if self.rng.random() < self.config.error_sample_rate:
                reward = dispatch_reward(
                    res.outcome, res.coverage, self.weights, self.virgin,
                    scheme=self.config.reward_scheme,
                )
                self._record(f"e{stats.execs}", seed.id, mc, fills, res.outcome, reward.value)

    # ------------------------------------------------------------------
    # cycles
    # ------------------------------------------------------------------

    def _finetune(self) -> None:
        if not self._cycle_records:
            return
        records = [
            {
                "masked_tokens": rec["masked_input"],
                "fill_tokens": rec["fill"],
                "reward": rec["reward"],
            }
            for rec in self._cycle_records
        ]
        request = build_finetune_request(self.cycle, records, self.config.finetune_epochs)
        endpoint = self.endpoint
        if self._remote is not None and self._remote_down:
            endpoint = InProcessEndpoint(self.mock)
        try:
            resp = endpoint.request(request)
            if not isinstance(resp, dict) or resp.get("type") != "finetune":
                raise ProtocolError(f"unexpected finetune response: {resp!r}")
        except (TransportError, ProtocolError) as exc:
            log.warning("finetune skipped this cycle: %s", exc)
            self.stats.finetune_failures += 1

    def _reward_mean(self) -> float:
        if not self._cycle_records:
            return 0.0
        return sum(r["reward"] for r in self._cycle_records) / len(self._cycle_records)

    def _stats_row(self) -> dict:
        return {
            "cycle": self.cycle,
            "execs": self.stats.execs,
            "n_edges": self.virgin.unique_count,
            "valid_edges": int(self.valid_seen.sum()),
            "err_syntax": self.stats.syntax_errors,
            "err_semantic": self.stats.semantic_errors,
            "crashes": self.stats.crashes,
            "queue_len": len(self.queue),
            "reward_mean": self._reward_mean(),
            "wall_ms": self._virtual_ms,
        }

    def _finish_cycle(self) -> None:
        if self.virgin.unique_count > 0:
            fresh = compute_idf(self.weights, self.virgin)
            update_with_momentum(self.weights, fresh, self.config.alpha)
        self._finetune()
        row = self._stats_row()
        if self._stats_fp is not None:
            self._stats_fp.write(json.dumps(row, sort_keys=True) + "\n")
            self._stats_fp.flush()
        if self._dataset_fp is not None:
            self._dataset_fp.flush()
        self.stats.cycles += 1
        self.cycle += 1
        self._cycle_records = []
        self._remote_down = False
        self._rebuild_energies()
        if self.out_dir is not None:
            self.checkpoint(os.path.join(self.out_dir, "state.bin"))

    def run_cycle(self, iterations: int | None = None) -> dict:
        """Run one cycle of fuzz_one steps and finalize it; returns the row."""
        if not self.queue:
            raise ConfigurationError("run warmup() before fuzzing")
        iterations = self.config.iter_cycle if iterations is None else iterations
        for _ in range(iterations):
            self.fuzz_one()
        row = self._stats_row()
        self._finish_cycle()
        return row

    def run(self, execs: int | None = None) -> CampaignStats:
        """Run cycles until the execution budget (or wall cap) is spent."""
        budget = self.config.execs if execs is None else execs
        deadline = (
            time.monotonic() + self.config.max_seconds
            if self.config.max_seconds > 0
            else None
        )
        try:
            while self.stats.execs < budget:
                if deadline is not None and time.monotonic() >= deadline:
                    break
                step = min(self.config.iter_cycle, budget - self.stats.execs)
                self.run_cycle(step)
                if not self.quiet:
                    row = self._stats_row()
                    log.info(
                        "cycle %d: execs=%d edges=%d queue=%d crashes=%d",
                        row["cycle"], row["execs"], row["n_edges"],
                        row["queue_len"], row["crashes"],
                    )
        except KeyboardInterrupt:
            log.info("interrupted; flushing state")
            self._finish_cycle()
        return self.stats

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------

    def _extension_state(self) -> dict:
        return {
            "campaign_cycle": self.cycle,
            "next_seed_id": self.next_seed_id,
            "virtual_ms": self._virtual_ms,
            "virgin_seen": base64.b64encode(np.packbits(self.virgin.seen)).decode("ascii"),
            "valid_seen": base64.b64encode(np.packbits(self.valid_seen)).decode("ascii"),
            "rng": _encode_rng_state(self.rng.getstate()),
            "stats": {
                "execs": self.stats.execs,
                "passes": self.stats.passes,
                "syntax_errors": self.stats.syntax_errors,
                "semantic_errors": self.stats.semantic_errors,
                "crashes": self.stats.crashes,
                "timeouts": self.stats.timeouts,
                "cycles": self.stats.cycles,
                "mutation_discards": self.stats.mutation_discards,
                "finetune_failures": self.stats.finetune_failures,
            },
            "crash_buckets": {k: self.crash_buckets[k] for k in sorted(self.crash_buckets)},
            "queue": [
                {
                    "id": s.id,
                    "parent": s.parent,
                    "cycle": s.discovered_cycle,
                    "edges": [int(e) for e in s.unique_edges],
                    "trunc": s.truncated,
                    "file": s.filename(),
                }
                for s in self.queue
            ],
            "mock": self.mock.state_dict(),
        }

    def checkpoint(self, path: str) -> None:
        """Write the campaign-state file: weight/virgin block plus extras."""
        tmp = path + ".tmp"
        with open(tmp, "wb") as fp:
            write_state_block(fp, self.weights, self.virgin)
            ext = json.dumps(self._extension_state(), sort_keys=True,
                             separators=(",", ":")).encode("utf-8")
            fp.write(_EXT_HEADER.pack(EXT_MAGIC, EXT_VERSION, len(ext)))
            fp.write(ext)
        os.replace(tmp, path)

    @classmethod
    def restore(cls, config: Config, out_dir: str, quiet: bool = True) -> "Campaign":
        """Rebuild a campaign from out_dir/state.bin and the queue files."""
        camp = cls(config, out_dir=out_dir, quiet=quiet)
        path = os.path.join(out_dir, "state.bin")
        with open(path, "rb") as fp:
            weights, n, exponent = read_state_block(fp)
            head = fp.read(_EXT_HEADER.size)
            if len(head) != _EXT_HEADER.size:
                raise StateFormatError("missing campaign extension block")
            magic, version, length = _EXT_HEADER.unpack(head)
            if magic != EXT_MAGIC or version != EXT_VERSION:
                raise StateFormatError("bad campaign extension block")
            ext = json.loads(fp.read(length))
        if exponent != config.map_exponent:
            raise ConfigurationError(
                f"state file uses map_exponent {exponent}, config says {config.map_exponent}"
            )
        camp.weights = weights
        size = 1 << exponent
        seen = np.unpackbits(
            np.frombuffer(base64.b64decode(ext["virgin_seen"]), dtype=np.uint8)
        )[:size].astype(bool)
        camp.virgin = VirginMap(seen, n)
        camp.valid_seen = np.unpackbits(
            np.frombuffer(base64.b64decode(ext["valid_seen"]), dtype=np.uint8)
        )[:size].astype(bool)
        camp.cycle = ext["campaign_cycle"]
        camp.next_seed_id = ext["next_seed_id"]
        camp._virtual_ms = ext["virtual_ms"]
        camp.rng.setstate(_decode_rng_state(ext["rng"]))
        st = ext["stats"]
        camp.stats = CampaignStats(**st)
        camp.crash_buckets = dict(ext["crash_buckets"])
        camp.queue = []
        for entry in ext["queue"]:
            seed_path = os.path.join(out_dir, "queue", entry["file"])
            with open(seed_path, "rb") as sfp:
                data = sfp.read()
            camp.queue.append(
                Seed(
                    id=entry["id"],
                    data=data,
                    tokens=tokenize(data),
                    unique_edges=np.asarray(entry["edges"], dtype=np.int64),
                    discovered_cycle=entry["cycle"],
                    parent=entry["parent"],
                    truncated=entry["trunc"],
                )
            )
        camp.mock.load_state_dict(ext["mock"])
        for seed in camp.queue:
            camp.mock.add_tokens(seed.tokens.tokens)
        camp._rebuild_energies()
        return camp


def _encode_rng_state(state) -> list:
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _decode_rng_state(raw) -> tuple:
    version, internal, gauss = raw
    return (version, tuple(internal), gauss)


# ----------------------------------------------------------------------
# corpus replay reporting
# ----------------------------------------------------------------------


@dataclass
class ReplayReport:
    """Outcome mix and coverage split for a replayed corpus."""

    files: int = 0
    outcomes: dict = field(default_factory=dict)
    total_edges: set = field(default_factory=set)
    valid_edges: set = field(default_factory=set)
    rows: list = field(default_factory=list)

    def rate(self, outcome_key: str) -> float:
        return self.outcomes.get(outcome_key, 0) / self.files if self.files else 0.0

    def render(self) -> str:
        lines = [f"{'file':<32} {'outcome':<24} edges"]
        for name, outcome, count in self.rows:
            lines.append(f"{name:<32} {outcome:<24} {count}")
        lines.append("")
        lines.append(f"files:        {self.files}")
        for key in sorted(self.outcomes):
            share = 100.0 * self.rate(key)
            lines.append(f"  {key:<22} {self.outcomes[key]:>6}  ({share:.1f}%)")
        lines.append(f"total edges:  {len(self.total_edges)}")
        lines.append(f"valid edges:  {len(self.valid_edges)}")
        return "\n".join(lines)


def replay(corpus_dir: str, config: Config) -> ReplayReport:
    """Execute every file in a directory and report coverage and outcomes."""
    if config.target == "toy":
        executor = ToyExecutor(config.map_exponent, config.timeout_ms)
    else:
        executor = Executor(
            TargetConfig(
                argv=config.target.split(),
                coverage_channel=config.coverage_channel,
                timeout_ms=config.timeout_ms,
                map_size_exponent=config.map_exponent,
            )
        )
    report = ReplayReport()
    try:
        for name in sorted(os.listdir(corpus_dir)):
            path = os.path.join(corpus_dir, name)
            if not os.path.isfile(path):
                continue
            with open(path, "rb") as fp:
                data = fp.read()
            res = executor.execute(data)
            edges = unique_coverage(res.coverage)
            key = res.outcome.cls.value
            report.files += 1
            report.outcomes[key] = report.outcomes.get(key, 0) + 1
            report.total_edges.update(int(e) for e in edges)
            if res.outcome.cls is OutcomeClass.PASS:
                report.valid_edges.update(int(e) for e in edges)
            report.rows.append((name, res.outcome.encode(), len(edges)))
    finally:
        executor.close()
    return report
