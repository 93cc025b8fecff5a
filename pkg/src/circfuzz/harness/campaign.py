"""Campaign loops for the regex pipeline and for witness mutation.

The scheduler hands out work in fixed-size batches of regex iterations and
absorbs the results strictly in iteration order.  Every random stream is
derived from the campaign seed and the iteration index, and the next batch
is only scheduled once the previous one is absorbed, so the report sequence
does not depend on the number of workers.
"""

from __future__ import annotations

import logging
import signal
import threading
import time
from collections import Counter, OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Mapping

from ..circuit import Circuit, Witness
from ..errors import CircfuzzError, ConfigError, ParseError, ResourceError
from ..execute import constraint_values, generate_witness, violations_from_values
from ..inputgen import GenBudget, StringBudget, generate_invalid_strings, generate_regex, generate_valid_strings
from ..inputgen.bnf import Grammar, parse_bnf, restrict
from ..inputgen.corpus import load_seed_corpus
from ..mutator import ProbeBudget, ProbeStats, soundness_probe, verify_finding
from ..oracle import EXPECTED_INVALID, EXPECTED_VALID, BugReport, Observation, classify, dedupe
from ..regex import DEFAULT_ALPHABET, compile_regex, make_reference
from ..rng import derive_rng, derive_seed
from ..transpiler import BugInjection, TranspileSpec, inject_bug, transpile
from .config import CampaignConfig
from .coverage import EMPTY, CircuitCoverage, CoverageMap, coverage_merge, dfa_transitions, observe

log = logging.getLogger(__name__)

CHAR_RULES = ("char", "cchar", "range", "escaped")
REQUEUE_PROBABILITY = 0.25
CIRCUIT_CACHE_SIZE = 256


@dataclass
class CampaignStats:
    iterations: int = 0
    regexes_rejected: int = 0
    regexes_skipped: int = 0
    requeued: int = 0
    circuits: int = 0
    pairs: int = 0
    witnesses: int = 0
    witness_errors: int = 0
    mock_proofs: int = 0
    probe_iterations: int = 0
    no_injection_site: int = 0
    iteration_errors: int = 0
    reports_by_category: Counter = field(default_factory=Counter)
    wall_time: float = 0.0
    stopped_by: str = ""

    def to_json(self, coverage: CoverageMap | None = None) -> dict[str, Any]:
        doc = {k: v for k, v in self.__dict__.items() if k != "reports_by_category"}
        doc["reports_by_category"] = dict(sorted(self.reports_by_category.items()))
        doc["wall_time"] = round(self.wall_time, 3)
        if coverage is not None:
            doc["coverage"] = coverage.summary()
        return doc


@dataclass
class CampaignResult:
    reports: list[BugReport]
    stats: CampaignStats
    coverage: CoverageMap
    circuits: dict[str, Circuit] = field(default_factory=dict)  # hash -> circuit, for reproducers
    raw_reports: list[BugReport] = field(default_factory=list)  # before dedup, in order


# -- worker side -------------------------------------------------------------


@dataclass
class PairOutcome:
    circuit_key: tuple[str, int]
    report: BugReport | None = None
    circuit: Circuit | None = None  # shipped only alongside a report
    coverage: tuple[str, CircuitCoverage] | None = None
    transitions: dict[str, int] = field(default_factory=dict)
    counts: Counter = field(default_factory=Counter)


@dataclass
class IterationResult:
    index: int
    regex: str
    status: str  # ok | rejected | skipped | error
    detail: str = ""
    pairs: list[PairOutcome] = field(default_factory=list)


def load_grammar(cfg: CampaignConfig) -> Grammar:
    grammar = parse_bnf(Path(cfg.grammar).read_text(encoding="utf-8"))
    alphabet = cfg.alphabet_range
    if alphabet != DEFAULT_ALPHABET:
        grammar = restrict(grammar, frozenset(alphabet), CHAR_RULES)
    return grammar


def _interleave(a: list[bytes], b: list[bytes]) -> list[tuple[bytes, str]]:
    out: list[tuple[bytes, str]] = []
    for k in range(max(len(a), len(b))):
        if k < len(a):
            out.append((a[k], EXPECTED_VALID))
        if k < len(b):
            out.append((b[k], EXPECTED_INVALID))
    return out


class RegexWorker:
    """Evaluates one regex iteration; owns a reference matcher and a circuit cache."""

    def __init__(self, cfg: CampaignConfig):
        self.cfg = cfg
        self.modulus = cfg.field_modulus
        self.alphabet = cfg.alphabet_range
        self.injection = cfg.bug_injection
        self.reference = make_reference(cfg.reference, self.alphabet)
        self.cache: OrderedDict[tuple, tuple[Circuit | None, str | None]] = OrderedDict()

    def close(self) -> None:
        self.reference.close()

    def circuit_for(self, regex: str, dfa, n: int) -> tuple[Circuit | None, str | None]:
        """Circuit for ``(regex, n)``, with the campaign's injection if any."""
        inj = self.injection
        if inj is not None:
            site = (inj.site + derive_seed(self.cfg.seed, "site", regex, n)) % 2**32
            inj = BugInjection(inj.kind, site, inj.direction)
        key = (regex, n, inj.tag() if inj else None)
        hit = self.cache.get(key)
        if hit is not None:
            self.cache.move_to_end(key)
            return hit
        spec = TranspileSpec(dfa, n, regex, self.cfg.max_len, self.cfg.dfa_state_cap)
        if inj is None:
            value = (transpile(spec, self.modulus), None)
        else:
            try:
                value = (inject_bug(spec, inj, self.modulus)[0], inj.tag())
            except ConfigError:
                value = (None, inj.tag())
        self.cache[key] = value
        if len(self.cache) > CIRCUIT_CACHE_SIZE:
            self.cache.popitem(last=False)
        return value

    def run(self, index: int, regex: str) -> IterationResult:
        try:
            return self._run(index, regex)
        except Exception as exc:  # per-iteration failures are counted, never fatal
            log.warning("iteration %d (%r) failed: %s: %s", index, regex, type(exc).__name__, exc)
            return IterationResult(index, regex, "error", f"{type(exc).__name__}: {exc}")

    def _run(self, index: int, regex: str) -> IterationResult:
        cfg = self.cfg
        try:
            ast, nfa, dfa = compile_regex(regex, self.alphabet, cfg.dfa_state_cap)
        except ParseError as exc:
            return IterationResult(index, regex, "rejected", str(exc))
        except ResourceError as exc:
            return IterationResult(index, regex, "skipped", str(exc))
        sb = StringBudget(rng_seed=derive_seed(cfg.seed, "strings", index), max_len=min(cfg.max_string_len, cfg.max_len))
        valid = generate_valid_strings(ast, nfa, dfa, cfg.valid_per_regex, sb)
        invalid = generate_invalid_strings(ast, nfa, dfa, valid.strings, cfg.invalid_per_regex, sb)
        result = IterationResult(index, regex, "ok")
        for j, (s, label) in enumerate(_interleave(valid.strings, invalid.strings)):
            result.pairs.append(self._pair(index, j, regex, dfa, s, label))
        return result

    def _pair(self, index: int, j: int, regex: str, dfa, s: bytes, label: str) -> PairOutcome:
        cfg = self.cfg
        out = PairOutcome((regex, len(s)))
        out.transitions = dfa_transitions(dfa, s)
        circuit, tag = self.circuit_for(regex, dfa, len(s))
        if circuit is None:
            out.counts["no_injection_site"] += 1
            return out
        inputs = {f"char[{k}]": b for k, b in enumerate(s)}
        witness: Witness | None = None
        werr = None
        violations = None
        outputs = None
        try:
            witness = generate_witness(circuit, inputs)
        except CircfuzzError as exc:
            werr = f"{type(exc).__name__}: {exc}"
            out.counts["witness_errors"] += 1
        out.counts["witnesses"] += 1
        if witness is not None:
            vals = constraint_values(circuit, witness.values)
            violations = violations_from_values(circuit, vals).violations
            out.counts["mock_proofs"] += 1
            out.coverage = (circuit.hash, observe(circuit, vals))
            outputs = witness.outputs(circuit)
        ref = self.reference.matches(regex, s)
        findings = ()
        extra: dict[str, Any] = {}
        if witness is not None and not violations and j < cfg.probe_strings:
            ps = ProbeStats()
            budget = ProbeBudget(cfg.probe_iterations, derive_seed(cfg.seed, "probe", index, j), stop_after=1)
            found = soundness_probe(circuit, inputs, witness, budget, reference_outputs={"accept": int(ref)}, stats=ps)
            out.counts["probe_iterations"] += ps.iterations
            out.counts["mock_proofs"] += ps.mock_proofs
            found = [f for f in found if verify_finding(circuit, f)]
            if found:
                findings = (found[0],)
                extra["witness_delta"] = found[0].delta(witness, circuit)
        obs = Observation(
            circuit.hash,
            "regex",
            label,
            regex,
            s,
            inputs,
            werr,
            violations,
            outputs,
            ref,
            None,
            findings,
            cfg.seed,
            tag,
            index,
            extra,
        )
        out.report = classify(obs)
        if out.report is not None:
            out.circuit = circuit
        return out


_WORKER: RegexWorker | None = None


def _init_worker(cfg: CampaignConfig) -> None:
    global _WORKER
    signal.signal(signal.SIGINT, signal.SIG_IGN)
    _WORKER = RegexWorker(cfg)


def _run_in_worker(task: tuple[int, str]) -> IterationResult:
    assert _WORKER is not None
    return _WORKER.run(*task)


# -- scheduler / sink --------------------------------------------------------


class _StopFlag:
    """Set by SIGINT/SIGTERM so the campaign flushes and returns."""

    def __init__(self) -> None:
        self.set = False
        self._old: dict[int, Any] = {}

    def __enter__(self) -> _StopFlag:
        if threading.current_thread() is threading.main_thread():
            for sig in (signal.SIGINT, signal.SIGTERM):
                self._old[sig] = signal.signal(sig, self._handle)
        return self

    def _handle(self, signum, frame) -> None:
        log.warning("signal %d received, flushing and stopping", signum)
        self.set = True

    def __exit__(self, *exc) -> None:
        for sig, old in self._old.items():
            signal.signal(sig, old)


def _stop_matches(stop_on: str | None, report: BugReport) -> bool:
    return stop_on is not None and (stop_on == "any" or report.category == stop_on)


class _Sink:
    def __init__(self, cfg: CampaignConfig, flush: Callable[[CampaignResult], None] | None):
        self.cfg = cfg
        self.stats = CampaignStats()
        self.coverage = EMPTY
        self.reports: list[BugReport] = []
        self.circuits: dict[str, Circuit] = {}
        self.circuit_keys: set[tuple[str, int]] = set()
        self.requeue: list[tuple[str, int]] = []
        self.done = ""
        self.flush_fn = flush
        self.last_flush = time.monotonic()
        self.started = time.monotonic()

    def absorb(self, res: IterationResult) -> None:
        st = self.stats
        st.iterations += 1
        if res.status == "rejected":
            st.regexes_rejected += 1
        elif res.status == "skipped":
            st.regexes_skipped += 1
        elif res.status == "error":
            st.iteration_errors += 1
        new_flags = 0
        for pair in res.pairs:
            if self.cfg.pairs is not None and st.pairs >= self.cfg.pairs:
                self.done = "pairs"
                break
            st.pairs += 1
            self.circuit_keys.add(pair.circuit_key)
            for k, v in pair.counts.items():
                setattr(st, k, getattr(st, k) + v)
            if pair.coverage is not None:
                h, cov = pair.coverage
                before = self.coverage.circuits.get(h)
                self.coverage = coverage_merge(self.coverage, CoverageMap({h: cov}, {res.regex: pair.transitions}))
                new_flags += self.coverage.circuits[h].flags() - (before.flags() if before else 0)
            elif pair.transitions:
                self.coverage = coverage_merge(self.coverage, CoverageMap({}, {res.regex: pair.transitions}))
            if pair.report is not None:
                self.reports.append(pair.report)
                st.reports_by_category[pair.report.category] += 1
                if pair.circuit is not None:
                    self.circuits.setdefault(pair.circuit.hash, pair.circuit)
                if _stop_matches(self.cfg.stop_on, pair.report):
                    self.done = "stop_on"
                    break
        st.circuits = len(self.circuit_keys)
        if new_flags > 0:
            self.requeue.append((res.regex, 1 + new_flags))
        if self.cfg.pairs is not None and st.pairs >= self.cfg.pairs and not self.done:
            self.done = "pairs"

    def result(self) -> CampaignResult:
        self.stats.wall_time = time.monotonic() - self.started
        self.stats.stopped_by = self.done
        return CampaignResult(dedupe(self.reports), self.stats, self.coverage, dict(self.circuits), list(self.reports))

    def maybe_flush(self, force: bool = False) -> None:
        if self.flush_fn is None:
            return
        now = time.monotonic()
        if force or now - self.last_flush >= self.cfg.flush_seconds:
            self.flush_fn(self.result())
            self.last_flush = now


class _Scheduler:
    def __init__(self, cfg: CampaignConfig, sink: _Sink):
        self.cfg = cfg
        self.sink = sink
        self.grammar = load_grammar(cfg)
        self.corpus = load_seed_corpus(cfg.corpus, cfg.alphabet_range) if cfg.corpus else []

    def regex_for(self, i: int) -> str:
        if i < len(self.corpus):
            return self.corpus[i]
        pool = self.sink.requeue
        rng = derive_rng(self.cfg.seed, "schedule", i)
        if pool and rng.random() < REQUEUE_PROBABILITY:
            k = rng.choices(range(len(pool)), [w for _, w in pool])[0]
            regex, _ = pool.pop(k)
            self.sink.stats.requeued += 1
            return regex
        budget = GenBudget(self.cfg.regex_max_depth, self.cfg.regex_max_len, derive_seed(self.cfg.seed, "regex", i))
        return generate_regex(self.grammar, budget)


def run_regex_campaign(
    cfg: CampaignConfig, flush: Callable[[CampaignResult], None] | None = None
) -> CampaignResult:
    """grammar -> regex -> strings -> circuit -> witness -> oracles, until the budget runs out."""
    cfg.validate()
    if flush is None and cfg.out:
        from .report import emit_report_bundle

        def flush(result: CampaignResult) -> None:
            emit_report_bundle(result, cfg.out, cfg)

    sink = _Sink(cfg, flush)
    sched = _Scheduler(cfg, sink)
    deadline = sink.started + cfg.seconds if cfg.seconds else None
    pool = None
    local = None
    if cfg.workers > 1:
        pool = ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(cfg,))
    else:
        local = RegexWorker(cfg)
    i = 0
    try:
        with _StopFlag() as stop:
            while not sink.done:
                if cfg.iterations is not None and i >= cfg.iterations:
                    sink.done = "iterations"
                    break
                if deadline is not None and time.monotonic() >= deadline:
                    sink.done = "seconds"
                    break
                size = cfg.batch_size
                if cfg.iterations is not None:
                    size = min(size, cfg.iterations - i)
                tasks = [(i + k, sched.regex_for(i + k)) for k in range(size)]
                i += size
                results: Iterable[IterationResult]
                if pool is not None:
                    results = pool.map(_run_in_worker, tasks)
                else:
                    results = (local.run(*t) for t in tasks)
                for res in results:
                    sink.absorb(res)
                    if sink.done or stop.set:
                        break
                if stop.set:
                    sink.done = "signal"
                sink.maybe_flush()
    finally:
        if pool is not None:
            pool.shutdown(wait=True, cancel_futures=True)
        if local is not None:
            local.close()
    sink.maybe_flush(force=True)
    return sink.result()


# -- witness campaigns -------------------------------------------------------


def random_inputs(circuit: Circuit, seed: int) -> Iterator[dict[str, int]]:
    """Endless input assignments: small values half the time, uniform field elements otherwise."""
    names = [s.name for s in circuit.inputs]
    j = 0
    while True:
        rng = derive_rng(seed, "inputs", j)
        yield {n: rng.randrange(16) if rng.random() < 0.5 else rng.randrange(circuit.p) for n in names}
        j += 1


def run_witness_campaign(
    cfg: CampaignConfig,
    circuit: Circuit,
    inputs_source: Iterable[Mapping[str, int]],
    reference: Callable[[Mapping[str, int], int], Mapping[str, int]] | None = None,
    label: str | None = EXPECTED_VALID,
    flush: Callable[[CampaignResult], None] | None = None,
) -> CampaignResult:
    """Honest witness, mock proof and soundness probe for every input assignment.

    ``cfg.iterations`` caps the number of assignments; ``cfg.probe_iterations``
    is the probe budget per assignment.
    """
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.iterations is not None and cfg.iterations <= 0:
        raise ConfigError("iterations must be > 0")
    if flush is None and cfg.out:
        from .report import emit_report_bundle

        def flush(result: CampaignResult) -> None:
            emit_report_bundle(result, cfg.out, cfg)

    sink = _Sink(cfg, flush)
    st = sink.stats
    deadline = sink.started + cfg.seconds if cfg.seconds else None
    p = circuit.p
    with _StopFlag() as stop:
        for j, raw in enumerate(inputs_source):
            if cfg.iterations is not None and j >= cfg.iterations:
                sink.done = "iterations"
                break
            if deadline is not None and time.monotonic() >= deadline:
                sink.done = "seconds"
                break
            if stop.set:
                sink.done = "signal"
                break
            inputs = {k: int(v) % p for k, v in raw.items()}
            st.iterations += 1
            st.witnesses += 1
            witness = None
            werr = violations = outputs = None
            try:
                witness = generate_witness(circuit, inputs)
            except CircfuzzError as exc:
                werr = f"{type(exc).__name__}: {exc}"
                st.witness_errors += 1
            findings = ()
            extra: dict[str, Any] = {}
            if witness is not None:
                vals = constraint_values(circuit, witness.values)
                violations = violations_from_values(circuit, vals).violations
                st.mock_proofs += 1
                sink.coverage = coverage_merge(sink.coverage, CoverageMap({circuit.hash: observe(circuit, vals)}))
                outputs = witness.outputs(circuit)
                if not violations:
                    ps = ProbeStats()
                    budget = ProbeBudget(cfg.probe_iterations, derive_seed(cfg.seed, "probe", j), stop_after=1)
                    found = soundness_probe(circuit, inputs, witness, budget, stats=ps)
                    st.probe_iterations += ps.iterations
                    st.mock_proofs += ps.mock_proofs
                    found = [f for f in found if verify_finding(circuit, f)]
                    if found:
                        findings = (found[0],)
                        extra["witness_delta"] = found[0].delta(witness, circuit)
            ref = dict(reference(inputs, p)) if reference is not None and witness is not None else None
            obs = Observation(
                circuit.hash,
                "witness",
                label,
                inputs=inputs,
                witness_error=werr,
                violations=violations,
                outputs=outputs,
                reference_outputs=ref,
                findings=findings,
                seed=cfg.seed,
                iteration=j,
                extra=extra,
            )
            report = classify(obs)
            if report is not None:
                sink.reports.append(report)
                st.reports_by_category[report.category] += 1
                sink.circuits.setdefault(circuit.hash, circuit)
                if _stop_matches(cfg.stop_on, report):
                    sink.done = "stop_on"
                    break
            sink.maybe_flush()
        else:
            sink.done = sink.done or "inputs"
    st.circuits = 1
    sink.maybe_flush(force=True)
    return sink.result()


__all__ = [
    "CampaignStats",
    "CampaignResult",
    "RegexWorker",
    "IterationResult",
    "PairOutcome",
    "load_grammar",
    "random_inputs",
    "run_regex_campaign",
    "run_witness_campaign",
]
