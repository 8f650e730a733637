"""Hierarchical evaluation protocol.

For every annotated transcript and every depth level ``tau`` the ground truth
is flattened to the leaves of its depth-``tau`` sub-tree and pruned. Each
method is then asked for exactly that many segments ``K`` and scored with Pk
and WindowDiff. Tree-based methods build their tree once per transcript and
serve all levels from it. RandomSeg is drawn ``repetitions`` times per row and
averaged.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .baselines import Fitted, Segmenter
from .exceptions import TreeSegError
from .ingest import DEFAULT_MIN_SIZE, CorpusEntry, GroundTruthTree, ground_truth_levels
from .metrics import default_k, pk, windiff

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1


@dataclass
class Row:
    transcript_id: str
    level: int
    method: str
    K: int
    attained_k: int
    pk: float
    windiff: float
    dev: bool = False

    @property
    def short(self) -> bool:
        """The method could not produce the requested number of segments."""
        return self.attained_k < self.K


def repetition_seed(master_seed: int, transcript_id: str, level: int, repetition: int) -> int:
    digest = hashlib.blake2b(json.dumps([transcript_id, level, repetition]).encode("utf-8"),
                             digest_size=8).digest()
    return (master_seed ^ int.from_bytes(digest, "little")) & MASK64


def usable_levels(tree: GroundTruthTree, min_size: int = DEFAULT_MIN_SIZE):
    """``(levels, skipped)``: pruned partitions with more than one segment, by tau."""
    levels, skipped = [], 0
    for tau, part in enumerate(ground_truth_levels(tree, min_size), start=1):
        if len(part) > 1:
            levels.append((tau, part))
        else:
            skipped += 1
    return levels, skipped


def evaluate_transcript(segmenter, gt_tree: GroundTruthTree, source=None, *,
                        transcript_id: str = "", min_size: int = DEFAULT_MIN_SIZE,
                        master_seed: int = 0, dev: bool = False,
                        method: Optional[str] = None) -> list[Row]:
    """Score one method on every usable level of one transcript.

    ``segmenter`` is either a :class:`Segmenter` (fitted here, once) or an
    already fitted object exposing ``query``. ``source`` is the embedding
    timeline for embedding-based methods; others only need ``gt_tree.T``.
    """
    levels, _ = usable_levels(gt_tree, min_size)
    if not levels:
        return []
    T = gt_tree.T
    if source is not None and len(source) != T:
        raise ValueError(f"source has {len(source)} utterances, annotation covers {T}")

    name = method or getattr(segmenter, "name", type(segmenter).__name__)
    repetitions = getattr(segmenter, "repetitions", 1)
    if hasattr(segmenter, "fit"):
        needs = getattr(segmenter, "needs_embeddings", False)
        if needs and source is None:
            raise ValueError(f"method {name!r} needs embeddings")
        k_max = max(len(part) for _, part in levels)
        fitted: Fitted = segmenter.fit(source if needs else T, k_max)
    else:
        fitted = segmenter

    rows = []
    for tau, ref in levels:
        K = len(ref)
        k = default_k(ref)
        pk_sum = wd_sum = 0.0
        attained = K
        for rep in range(repetitions):
            seed = repetition_seed(master_seed, transcript_id, tau, rep) if repetitions > 1 else master_seed
            hyp = fitted.query(K, seed=seed)
            attained = min(attained, len(hyp))
            pk_sum += pk(ref, hyp, k)
            wd_sum += windiff(ref, hyp, k)
        if attained < K:
            log.warning("%s reached only %d of %d segments on %s level %d",
                        name, attained, K, transcript_id, tau)
        rows.append(Row(transcript_id, tau, name, K, attained,
                        pk_sum / repetitions, wd_sum / repetitions, dev))
    return rows


@dataclass
class EvalConfig:
    window: Optional[int] = None
    min_size: int = DEFAULT_MIN_SIZE
    seed: int = 0
    repetitions: int = 100
    include_dev: bool = False
    model: Optional[str] = None


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else float("nan")


@dataclass
class EvalReport:
    dataset: str
    config: dict
    rows: list[Row] = field(default_factory=list)
    skipped: int = 0
    failed: int = 0

    @property
    def methods(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.method not in seen:
                seen.append(r.method)
        return seen

    @property
    def levels(self) -> list[int]:
        return sorted({r.level for r in self.rows})

    def headline_rows(self, method=None, level=None) -> list[Row]:
        include_dev = self.config.get("include_dev", False)
        return [r for r in self.rows
                if (include_dev or not r.dev)
                and (method is None or r.method == method)
                and (level is None or r.level == level)]

    def aggregate(self, method: str, level: Optional[int] = None) -> tuple[float, float, int]:
        """Mean ``(pk, windiff, n_rows)``, each (transcript, level) row weighted equally."""
        rows = self.headline_rows(method, level)
        return _mean([r.pk for r in rows]), _mean([r.windiff for r in rows]), len(rows)

    def overall(self) -> dict:
        return {m: self.aggregate(m)[:2] for m in self.methods}

    def per_level(self) -> dict:
        return {(m, lvl): self.aggregate(m, lvl)[:2]
                for m in self.methods for lvl in self.levels if self.aggregate(m, lvl)[2]}

    def to_dict(self) -> dict:
        return {
            "header": {"dataset": self.dataset, "config": self.config,
                       "skipped": self.skipped, "failed": self.failed},
            "rows": [asdict(r) for r in self.rows],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "EvalReport":
        head = obj["header"]
        return cls(head["dataset"], head["config"], [Row(**r) for r in obj["rows"]],
                   head.get("skipped", 0), head.get("failed", 0))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def __eq__(self, other):
        if not isinstance(other, EvalReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def evaluate_corpus(corpus: Sequence[CorpusEntry], methods: Sequence[Segmenter],
                    config: Optional[EvalConfig] = None, *,
                    embed: Optional[Callable[[CorpusEntry], object]] = None,
                    dataset: str = "corpus", workers: int = 1) -> EvalReport:
    """Evaluate ``methods`` on every transcript of ``corpus``.

    ``embed`` maps a corpus entry to its embedding timeline and is called once
    per transcript when some method needs embeddings. Transcripts that fail
    are logged and counted in ``report.failed``.
    """
    if not methods:
        raise ValueError("no methods to evaluate")
    config = config or EvalConfig()
    needs_embeddings = any(getattr(m, "needs_embeddings", False) for m in methods)
    if needs_embeddings and embed is None:
        raise ValueError("an embedding function is required for embedding-based methods")

    def run(entry: CorpusEntry):
        try:
            source = embed(entry) if needs_embeddings else None
            rows = []
            for m in methods:
                rows.extend(evaluate_transcript(
                    m, entry.tree, source if m.needs_embeddings else None,
                    transcript_id=entry.transcript_id, min_size=config.min_size,
                    master_seed=config.seed, dev=entry.dev))
            return rows, usable_levels(entry.tree, config.min_size)[1], False
        except (TreeSegError, ValueError) as exc:
            log.error("evaluation failed for %s: %s", entry.transcript_id, exc)
            return [], 0, True

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, corpus))
    else:
        results = [run(e) for e in corpus]

    order = {m.name: i for i, m in enumerate(methods)}
    report = EvalReport(dataset, asdict(config))
    for rows, skipped, failed in results:
        report.rows.extend(rows)
        report.skipped += skipped
        report.failed += int(failed)
    report.rows.sort(key=lambda r: (r.transcript_id, r.level, order.get(r.method, len(order))))
    return report


def format_overall(reports: Sequence[EvalReport]) -> str:
    """Methods by datasets table with Pk and Wd columns."""
    methods = []
    for rep in reports:
        methods.extend(m for m in rep.methods if m not in methods)
    head1 = f"{'':<12}" + "".join(f"{rep.dataset:^16}" for rep in reports)
    head2 = f"{'Method':<12}" + "".join(f"{'Pk':>8}{'Wd':>8}" for _ in reports)
    lines = [head1, head2]
    for m in methods:
        cells = []
        for rep in reports:
            p, w, n = rep.aggregate(m) if m in rep.methods else (float("nan"),) * 2 + (0,)
            cells.append(f"{p:8.3f}{w:8.3f}" if n else f"{'-':>8}{'-':>8}")
        lines.append(f"{m:<12}" + "".join(cells))
    return "\n".join(lines)


def format_per_level(report: EvalReport, metric: str = "pk") -> str:
    idx = 0 if metric == "pk" else 1
    levels = report.levels
    lines = [f"{report.dataset} ({'Pk' if idx == 0 else 'Wd'})",
             f"{'Method':<12}" + "".join(f"{'L' + str(lvl):>8}" for lvl in levels)]
    for m in report.methods:
        cells = []
        for lvl in levels:
            agg = report.aggregate(m, lvl)
            cells.append(f"{agg[idx]:8.3f}" if agg[2] else f"{'-':>8}")
        lines.append(f"{m:<12}" + "".join(cells))
    return "\n".join(lines)


def emit_report(report: EvalReport, path=None, format: str = "json") -> str:
    """Render ``report`` and optionally write it to ``path``.

    ``format="json"`` writes the machine-readable report, ``"table"`` the text
    tables. The text tables are returned either way.
    """
    if not report.methods:
        raise ValueError("report has no methods")
    if format not in ("json", "table"):
        raise ValueError(f"unknown report format {format!r}")
    text = "\n\n".join([format_overall([report]), format_per_level(report, "pk"),
                         format_per_level(report, "wd")])
    text += f"\n\nskipped levels: {report.skipped}  failed transcripts: {report.failed}\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.dumps() + "\n" if format == "json" else text)
    return text


def load_report(path) -> EvalReport:
    with open(path, encoding="utf-8") as fh:
        return EvalReport.from_dict(json.load(fh))


def tune_window(corpus: Sequence[CorpusEntry], windows: Iterable[int],
                embed_for_window: Callable[[CorpusEntry, int], object],
                min_size: int = DEFAULT_MIN_SIZE) -> tuple[int, dict]:
    """Grid search over the block width on the dev transcripts only.

    Returns the window with the lowest mean Pk and every window's score.
    """
    from .baselines import TreeSeg

    dev = [e for e in corpus if e.dev]
    if not dev:
        raise ValueError("corpus has no dev transcripts")
    scores = {}
    for W in windows:
        rows = []
        for entry in dev:
            rows.extend(evaluate_transcript(TreeSeg(min_size), entry.tree, embed_for_window(entry, W),
                                            transcript_id=entry.transcript_id, min_size=min_size))
        scores[W] = _mean([r.pk for r in rows])
    best = min(scores, key=lambda w: (scores[w], w))
    return best, scores
