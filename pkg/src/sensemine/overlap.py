"""Exact k-nearest-neighbour search in SOR space and per-instance overlap
ratio phi = s/k.

For a query instance with sense g, k is the number of pool instances sharing
g minus one (the query itself is excluded from its neighbourhood), s is the
number of same-sense instances among the k nearest by cosine distance, and
phi = s/k. Distance ties break on ascending instance id, so scores do not
depend on corpus order.

All similarity arithmetic goes through one scalar kernel (float64 np.dot on
vectors normalized as v / sqrt(v.v)) so that independent reimplementations
of the search produce bit-identical distances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus, SenseInventory
from .embedstore import EmbeddingMatrix, align
from .errors import DataError, ZeroNormError


@dataclass(frozen=True)
class OverlapScore:
    instance_id: str
    sense_id: str
    k: int
    s: int
    phi: float
    neighbor_ids: tuple[str, ...]

    def __post_init__(self):
        if not 0 < self.k == len(self.neighbor_ids):
            raise ValueError(f"{self.instance_id}: k={self.k} with {len(self.neighbor_ids)} neighbors")
        if not 0 <= self.s <= self.k:
            raise ValueError(f"{self.instance_id}: s={self.s} outside [0, {self.k}]")
        if self.phi != self.s / self.k:
            raise ValueError(f"{self.instance_id}: phi {self.phi} != {self.s}/{self.k}")
        if self.instance_id in self.neighbor_ids:
            raise ValueError(f"{self.instance_id}: query appears in its own neighbor list")


@dataclass
class ScoreTable:
    scores: tuple[OverlapScore, ...]
    scope: str
    skipped: tuple[tuple[str, str], ...] = ()

    def by_id(self) -> dict[str, OverlapScore]:
        return {sc.instance_id: sc for sc in self.scores}


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = math.sqrt(np.dot(v, v))
    if n == 0.0:
        raise ZeroNormError("zero-norm vector cannot be searched by cosine distance")
    return v / n


def knn(
    sor: EmbeddingMatrix,
    pool: Sequence[str],
    query_id: str,
    k: int,
) -> list[str]:
    """The k pool members nearest to the query by cosine distance, excluding
    the query itself; ascending distance, ties by ascending instance id."""
    if query_id not in set(pool):
        raise DataError(f"query {query_id!r} not in pool")
    if not 1 <= k <= len(pool) - 1:
        raise DataError(f"k={k} invalid for pool of {len(pool)}")
    index = sor.row_index()
    try:
        units = {iid: _unit(sor.vectors[index[iid]]) for iid in pool}
    except KeyError as exc:
        raise DataError(f"pool id {exc.args[0]!r} has no embedding") from None
    uq = units[query_id]
    ranked = sorted(
        (1.0 - float(np.dot(uq, units[iid])), iid) for iid in pool if iid != query_id
    )
    return [iid for _, iid in ranked[:k]]


def overlap_ratio(
    sor: EmbeddingMatrix,
    pool: Sequence[str],
    sense_of: Mapping[str, str],
    query_id: str,
) -> OverlapScore:
    """Overlap ratio for one query against its same-lemma (or given) pool."""
    sense = sense_of[query_id]
    k = sum(1 for iid in pool if sense_of[iid] == sense) - 1
    if k < 1:
        raise DataError(f"sense {sense!r} is a singleton in the pool; k would be 0")
    neighbors = knn(sor, pool, query_id, k)
    s = sum(1 for iid in neighbors if sense_of[iid] == sense)
    return OverlapScore(
        instance_id=query_id,
        sense_id=sense,
        k=k,
        s=s,
        phi=s / k,
        neighbor_ids=tuple(neighbors),
    )


def _score_pool(
    ids: list[str],
    senses: list[int],
    vectors: np.ndarray,
) -> list[tuple[int, int, list[int]] | None]:
    """Score every member of one pool.

    senses holds integer sense codes; vectors holds raw rows aligned with
    ids. Returns (k, s, neighbor positions) per member, or None for members
    whose sense is a pool singleton.
    """
    n = len(ids)
    units = np.empty((n, vectors.shape[1]), dtype=np.float64)
    for r in range(n):
        units[r] = _unit(vectors[r])
    counts: dict[int, int] = {}
    for code in senses:
        counts[code] = counts.get(code, 0) + 1
    out: list[tuple[int, int, list[int]] | None] = []
    for q in range(n):
        k = counts[senses[q]] - 1
        if k < 1:
            out.append(None)
            continue
        uq = units[q]
        ranked = sorted(
            (1.0 - float(np.dot(uq, units[j])), ids[j], j) for j in range(n) if j != q
        )
        nb = [j for _, _, j in ranked[:k]]
        s = sum(1 for j in nb if senses[j] == senses[q])
        out.append((k, s, nb))
    return out


# Tasks shared with forked workers by memory inheritance; one score_all call
# at a time may use the parallel path.
_FORK_TASKS: list = []


def _score_chunk_packed(task_indices):
    """Worker: score the given task pools, return buffer-packed results.

    Packing (int32 arrays for k, s, flattened neighbor positions, offsets)
    keeps the result pickle cheap; a k of -1 marks a pool-singleton member.
    """
    out = []
    for ti in task_indices:
        key, ids, senses, vectors = _FORK_TASKS[ti]
        res = _score_pool(ids, senses, vectors)
        ks = np.full(len(ids), -1, dtype=np.int32)
        ss = np.zeros(len(ids), dtype=np.int32)
        offsets = np.zeros(len(ids) + 1, dtype=np.int64)
        flat: list[int] = []
        for pos, got in enumerate(res):
            if got is not None:
                k, s, nb = got
                ks[pos] = k
                ss[pos] = s
                flat.extend(nb)
            offsets[pos + 1] = len(flat)
        out.append((key, ks, ss, np.asarray(flat, dtype=np.int32), offsets))
    return out


def _unpack_chunk(packed):
    results = {}
    for key, ks, ss, flat, offsets in packed:
        res: list[tuple[int, int, list[int]] | None] = []
        for pos in range(len(ks)):
            if ks[pos] < 0:
                res.append(None)
            else:
                res.append(
                    (int(ks[pos]), int(ss[pos]),
                     flat[offsets[pos]:offsets[pos + 1]].tolist())
                )
        results[key] = res
    return results


def score_all(
    sor: EmbeddingMatrix,
    corpus: Corpus,
    inventory: SenseInventory,
    min_examples: int,
    group_by_lemma: bool = True,
    threads: int = 1,
) -> ScoreTable:
    """Score every instance whose sense resolves and meets min_examples.

    The neighbour pool for each query is all scored instances of the same
    lemma (default) or the whole scored corpus. Results are merged in corpus
    order, so output is identical for any thread count.
    """
    data = align(corpus, sor)
    counts = corpus.sense_counts()
    skipped: list[tuple[str, str]] = []
    candidates = []
    for inst in corpus:
        if inst.sense_id not in inventory:
            skipped.append((inst.instance_id, "unresolved sense"))
        elif counts[inst.sense_id] < min_examples:
            skipped.append(
                (inst.instance_id,
                 f"sense support {counts[inst.sense_id]} < min_examples {min_examples}")
            )
        else:
            candidates.append(inst)

    pools: dict[str, list] = {}
    for inst in candidates:
        pools.setdefault(inst.lemma if group_by_lemma else "", []).append(inst)

    sense_codes: dict[str, int] = {}
    tasks = []
    for key in sorted(pools):
        members = pools[key]
        ids = [inst.instance_id for inst in members]
        senses = []
        for inst in members:
            senses.append(sense_codes.setdefault(inst.sense_id, len(sense_codes)))
        rows = sor.vectors[[data.index[inst.instance_id] for inst in members]]
        tasks.append((key, ids, senses, rows))

    if threads > 1 and len(tasks) > 1:
        import multiprocessing

        n_chunks = min(len(tasks), threads * 8)
        chunks = [list(range(i, len(tasks), n_chunks)) for i in range(n_chunks)]
        ctx = multiprocessing.get_context("fork")
        _FORK_TASKS.clear()
        _FORK_TASKS.extend(tasks)
        try:
            with ctx.Pool(threads) as pool:
                chunk_results = pool.map(_score_chunk_packed, chunks)
        finally:
            _FORK_TASKS.clear()
        results = {}
        for packed in chunk_results:
            results.update(_unpack_chunk(packed))
    else:
        results = {key: _score_pool(ids, senses, rows) for key, ids, senses, rows in tasks}

    code_to_sense = [""] * len(sense_codes)
    for sid, code in sense_codes.items():
        code_to_sense[code] = sid
    per_instance: dict[str, OverlapScore | None] = {}
    for key, ids, senses, _rows in tasks:
        res = results[key]
        for pos, iid in enumerate(ids):
            got = res[pos]
            if got is None:
                per_instance[iid] = None
                continue
            k, s, nb = got
            per_instance[iid] = OverlapScore(
                instance_id=iid,
                sense_id=code_to_sense[senses[pos]],
                k=k,
                s=s,
                phi=s / k,
                neighbor_ids=tuple(ids[j] for j in nb),
            )

    scores = []
    for inst in candidates:
        sc = per_instance[inst.instance_id]
        if sc is None:
            skipped.append((inst.instance_id, "singleton sense in pool"))
        else:
            scores.append(sc)
    skipped_order = {inst.instance_id: i for i, inst in enumerate(corpus)}
    skipped.sort(key=lambda pair: skipped_order[pair[0]])
    return ScoreTable(
        scores=tuple(scores),
        scope="per-lemma" if group_by_lemma else "corpus",
        skipped=tuple(skipped),
    )


def write_score_table(path: str | Path, table: ScoreTable) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for sc in table.scores:
            fh.write(
                json.dumps(
                    {
                        "id": sc.instance_id,
                        "sense": sc.sense_id,
                        "k": sc.k,
                        "s": sc.s,
                        "phi": sc.phi,
                        "neighbors": list(sc.neighbor_ids),
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                + "\n"
            )


def read_score_table(path: str | Path) -> ScoreTable:
    scores = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                scores.append(
                    OverlapScore(
                        instance_id=rec["id"],
                        sense_id=rec["sense"],
                        k=rec["k"],
                        s=rec["s"],
                        phi=rec["phi"],
                        neighbor_ids=tuple(rec["neighbors"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}: line {line_no}: bad score record: {exc}") from None
    return ScoreTable(scores=tuple(scores), scope="file")


def write_skip_report(path: str | Path, table: ScoreTable) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for iid, reason in table.skipped:
            fh.write(json.dumps({"id": iid, "reason": reason}, separators=(",", ":")) + "\n")
