"""Sentence data model, treebank I/O, and supertag annotation handling.

Treebanks are read and written in a CoNLL-X style 10-column tab-separated
format (ID, FORM, LEMMA, CPOS, POS, FEATS, HEAD, DEPREL, PHEAD, PDEPREL)
with a blank line between sentences. Supertag annotations live in a
separate sparse file format (see :func:`parse_supertag_file`) together
with an inventory file mapping tag names to ids.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

CONLL_COLUMNS = 10


@dataclass(frozen=True)
class SupertagInventory:
    """Ordered supertag name list; position in the list is the tag id."""

    tags: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for i, name in enumerate(self.tags):
            if not name or name.split() != [name]:
                raise ValueError(f"bad supertag name {name!r} at id {i}")
            if name in index:
                raise ValueError(f"duplicate supertag name {name!r}")
            index[name] = i
        object.__setattr__(self, "index", index)

    @property
    def n(self) -> int:
        return len(self.tags)

    def id_of(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise DataError(f"unknown supertag name {name!r}") from None

    def name_of(self, tag_id: int) -> str:
        return self.tags[tag_id]


def load_inventory(text: str) -> SupertagInventory:
    """Parse an inventory file: one tag name per line, line i holds tag id i-1."""
    names = [line.strip() for line in text.splitlines()]
    while names and not names[-1]:
        names.pop()
    if any(not name for name in names):
        raise DataError("inventory file contains an empty line")
    try:
        return SupertagInventory(tuple(names))
    except ValueError as exc:
        raise DataError(f"bad inventory file: {exc}") from None


def emit_inventory(inv: SupertagInventory) -> str:
    return "".join(name + "\n" for name in inv.tags)


class SupertagDistribution:
    """Sparse probability vector over an n-tag inventory.

    ``ids`` are strictly increasing tag ids, ``probs`` the matching
    probabilities. Probabilities are positive and sum to 1 within 1e-6
    after construction.
    """

    __slots__ = ("ids", "probs", "n")

    def __init__(self, ids: np.ndarray, probs: np.ndarray, n: int):
        ids = np.asarray(ids, dtype=np.int32)
        probs = np.asarray(probs, dtype=np.float64)
        if ids.ndim != 1 or probs.shape != ids.shape:
            raise ValueError("ids and probs must be 1-d arrays of equal length")
        if len(ids) == 0:
            raise ValueError("empty distribution")
        if np.any(np.diff(ids) <= 0):
            raise ValueError("tag ids must be strictly increasing")
        if ids[0] < 0 or ids[-1] >= n:
            raise ValueError(f"tag id out of range for inventory size {n}")
        if np.any(probs <= 0.0):
            raise ValueError("probabilities must be positive")
        total = float(probs.sum())
        if not (1.0 - 1e-6 <= total <= 1.0 + 1e-6):
            raise ValueError(f"probabilities sum to {total}, expected 1")
        ids.setflags(write=False)
        probs.setflags(write=False)
        self.ids = ids
        self.probs = probs
        self.n = n

    @classmethod
    def from_entries(cls, entries, n: int) -> "SupertagDistribution":
        """Build from (tag_id, probability) pairs in any order.

        Zero-probability entries are dropped; probabilities outside [0, 1]
        are rejected; total mass in [0.9, 1.1] is renormalized to 1, any
        other total is rejected.
        """
        entries = [(int(i), float(p)) for i, p in entries]
        for i, p in entries:
            if not (0.0 <= p <= 1.0):
                raise DataError(f"probability {p} for tag {i} outside [0, 1]")
        entries = sorted((i, p) for i, p in entries if p > 0.0)
        if not entries:
            raise DataError("distribution has no positive-probability entries")
        ids = np.array([i for i, _ in entries], dtype=np.int32)
        if np.any(np.diff(ids) <= 0):
            raise DataError("duplicate tag id in distribution")
        probs = np.array([p for _, p in entries], dtype=np.float64)
        total = float(probs.sum())
        if not (0.9 <= total <= 1.1):
            raise DataError(f"distribution mass {total:.6g} outside [0.9, 1.1]")
        return cls(ids, probs / total, n)

    @property
    def best(self) -> int:
        """Argmax tag id; ties resolve to the lowest id."""
        return int(self.ids[int(np.argmax(self.probs))])

    def dense(self) -> np.ndarray:
        vec = np.zeros(self.n)
        vec[self.ids] = self.probs
        return vec

    def __eq__(self, other):
        return (
            isinstance(other, SupertagDistribution)
            and self.n == other.n
            and np.array_equal(self.ids, other.ids)
            and np.array_equal(self.probs, other.probs)
        )

    def __hash__(self):
        return hash((self.n, self.ids.tobytes(), self.probs.tobytes()))

    def __repr__(self):
        pairs = ",".join(f"{i}:{p:.4g}" for i, p in zip(self.ids, self.probs))
        return f"SupertagDistribution({pairs}; n={self.n})"


@dataclass(frozen=True)
class Token:
    """One treebank token. ``index`` is 1-based; head 0 is the artificial root."""

    index: int
    form: str
    pos: str
    gold_head: int
    gold_label: str
    lemma: str = "_"
    cpos: str = "_"
    feats: str = "_"
    phead: str = "_"
    pdeprel: str = "_"
    best_supertag: int | None = None
    supertag_dist: SupertagDistribution | None = None
    pred_head: int | None = None
    pred_label: str | None = None

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"token index {self.index} must be >= 1")
        if self.gold_head < 0:
            raise ValueError(f"token {self.index}: negative head {self.gold_head}")
        if self.gold_head == self.index:
            raise ValueError(f"token {self.index} is its own head")
        if self.supertag_dist is not None:
            best = self.supertag_dist.best
            if self.best_supertag is None:
                object.__setattr__(self, "best_supertag", best)
            elif self.best_supertag != best:
                raise ValueError(
                    f"token {self.index}: best supertag {self.best_supertag} "
                    f"differs from distribution argmax {best}"
                )


@dataclass(frozen=True)
class Sentence:
    """An ordered token sequence whose gold arcs form a tree rooted at 0.

    Exactly one token attaches to the artificial root; every other token
    has a head inside the sentence and no head chain cycles back on itself.
    """

    tokens: tuple[Token, ...]

    def __post_init__(self):
        n = len(self.tokens)
        if n == 0:
            raise ValueError("empty sentence")
        for pos, tok in enumerate(self.tokens, start=1):
            if tok.index != pos:
                raise ValueError(f"token index {tok.index} at position {pos}")
            if tok.gold_head > n:
                raise ValueError(
                    f"token {pos}: head {tok.gold_head} out of range (n={n})"
                )
        roots = [t.index for t in self.tokens if t.gold_head == 0]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root dependent, got {roots}")
        for tok in self.tokens:
            seen = {tok.index}
            head = tok.gold_head
            while head != 0:
                if head in seen:
                    raise ValueError(f"cycle in gold heads involving token {head}")
                seen.add(head)
                head = self.tokens[head - 1].gold_head

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def token(self, index: int) -> Token:
        """Token by its 1-based index."""
        return self.tokens[index - 1]

    def gold_arcs(self) -> set[tuple[int, int, str]]:
        return {(t.gold_head, t.index, t.gold_label) for t in self.tokens}

    def with_predictions(self, heads, labels) -> "Sentence":
        if len(heads) != len(self.tokens) or len(labels) != len(self.tokens):
            raise ValueError("prediction length mismatch")
        toks = tuple(
            dataclasses.replace(t, pred_head=int(h), pred_label=str(l))
            for t, h, l in zip(self.tokens, heads, labels)
        )
        return Sentence(toks)


def parse_conll(text: str) -> list[Sentence]:
    """Parse CoNLL-X style 10-column text into sentences.

    Lines starting with ``#`` are skipped. Multi-word and empty-node id
    forms (``1-2``, ``1.1``) are rejected. Errors name the offending
    1-based line (or sentence) of the input.
    """
    sentences: list[Sentence] = []
    rows: list[tuple[int, list[str]]] = []

    def flush():
        if not rows:
            return
        first_line = rows[0][0]
        tokens = []
        for pos, (lineno, cols) in enumerate(rows, start=1):
            tid, head = cols[0], cols[6]
            if tid != str(pos):
                raise DataError(f"line {lineno}: token id {tid!r}, expected {pos}")
            try:
                head_i = int(head)
            except ValueError:
                raise DataError(f"line {lineno}: bad HEAD field {head!r}") from None
            if head_i < 0 or head_i > len(rows):
                raise DataError(f"line {lineno}: HEAD {head_i} out of range")
            try:
                tokens.append(
                    Token(
                        index=pos,
                        form=cols[1],
                        lemma=cols[2],
                        cpos=cols[3],
                        pos=cols[4],
                        feats=cols[5],
                        gold_head=head_i,
                        gold_label=cols[7],
                        phead=cols[8],
                        pdeprel=cols[9],
                    )
                )
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
        try:
            sentences.append(Sentence(tuple(tokens)))
        except ValueError as exc:
            raise DataError(
                f"sentence {len(sentences) + 1} (starting line {first_line}): {exc}"
            ) from None
        rows.clear()

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != CONLL_COLUMNS:
            raise DataError(
                f"line {lineno}: expected {CONLL_COLUMNS} tab-separated columns, "
                f"got {len(cols)}"
            )
        if "-" in cols[0] or "." in cols[0]:
            raise DataError(
                f"line {lineno}: multi-word/empty token id {cols[0]!r} not supported"
            )
        rows.append((lineno, cols))
    flush()
    return sentences


def emit_conll(sentences, use_predicted: bool = False) -> str:
    """Render sentences back to 10-column text.

    With ``use_predicted`` the HEAD and DEPREL columns carry the predicted
    head and label, which must be present on every token.
    """
    out = []
    for sent in sentences:
        for tok in sent:
            if use_predicted:
                if tok.pred_head is None or tok.pred_label is None:
                    raise ValueError(
                        f"token {tok.index} ({tok.form!r}) has no prediction"
                    )
                head, label = tok.pred_head, tok.pred_label
            else:
                head, label = tok.gold_head, tok.gold_label
            out.append(
                "\t".join(
                    (
                        str(tok.index),
                        tok.form,
                        tok.lemma,
                        tok.cpos,
                        tok.pos,
                        tok.feats,
                        str(head),
                        label,
                        tok.phead,
                        tok.pdeprel,
                    )
                )
            )
            out.append("\n")
        out.append("\n")
    return "".join(out)


def parse_supertag_file(
    text: str, inv: SupertagInventory
) -> list[list[SupertagDistribution]]:
    """Parse a supertag annotation file.

    One token per line: ``index TAB best_tag TAB tag:prob(,tag:prob)*``
    with a blank line between sentences. Tag names must exist in ``inv``
    and must not contain commas; the best_tag column must agree with the
    distribution argmax. Distributions are renormalized on load (total
    mass within [0.9, 1.1]) and otherwise rejected.
    """
    result: list[list[SupertagDistribution]] = []
    current: list[SupertagDistribution] = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            if current:
                result.append(current)
                current = []
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise DataError(f"line {lineno}: expected 3 tab-separated fields")
        idx_s, best_name, entries_s = cols
        if idx_s != str(len(current) + 1):
            raise DataError(
                f"line {lineno}: token index {idx_s!r}, expected {len(current) + 1}"
            )
        entries = []
        for item in entries_s.split(","):
            name, _, prob_s = item.rpartition(":")
            if not name:
                raise DataError(f"line {lineno}: bad tag:prob entry {item!r}")
            try:
                prob = float(prob_s)
            except ValueError:
                raise DataError(
                    f"line {lineno}: bad probability {prob_s!r}"
                ) from None
            try:
                tag_id = inv.id_of(name)
            except DataError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
            entries.append((tag_id, prob))
        try:
            dist = SupertagDistribution.from_entries(entries, inv.n)
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
        best_id = inv.id_of(best_name) if best_name in inv.index else None
        if best_id is None:
            raise DataError(f"line {lineno}: unknown supertag name {best_name!r}")
        if best_id != dist.best:
            raise DataError(
                f"line {lineno}: best tag {best_name!r} (id {best_id}) is not "
                f"the distribution argmax (id {dist.best})"
            )
        current.append(dist)
    if current:
        result.append(current)
    return result


def emit_supertag_file(
    annotations: list[list[SupertagDistribution]], inv: SupertagInventory
) -> str:
    """Inverse of :func:`parse_supertag_file`. Probabilities use repr
    formatting, so a write/read cycle is exact."""
    out = []
    for sent in annotations:
        for i, dist in enumerate(sent, start=1):
            entries = ",".join(
                f"{inv.name_of(int(t))}:{float(p)!r}"
                for t, p in zip(dist.ids, dist.probs)
            )
            out.append(f"{i}\t{inv.name_of(dist.best)}\t{entries}\n")
        out.append("\n")
    return "".join(out)


def attach_supertags(sentences, annotations) -> list[Sentence]:
    """Return sentences whose tokens carry the given distributions.

    Sentence counts and per-sentence token counts must line up exactly.
    """
    if len(sentences) != len(annotations):
        raise DataError(
            f"{len(sentences)} sentences but {len(annotations)} annotation blocks"
        )
    attached = []
    for i, (sent, dists) in enumerate(zip(sentences, annotations), start=1):
        if len(sent) != len(dists):
            raise DataError(
                f"sentence {i}: {len(sent)} tokens but {len(dists)} annotations"
            )
        toks = tuple(
            dataclasses.replace(
                tok, best_supertag=dist.best, supertag_dist=dist
            )
            for tok, dist in zip(sent, dists)
        )
        attached.append(Sentence(toks))
    return attached


def is_projective(sentence: Sentence) -> bool:
    """True iff no two gold arcs cross, counting the arc from the root.

    Uses the subtree-interval characterization: the tree is projective iff
    every node's descendant set (node included) is a contiguous index span.
    """
    n = len(sentence)
    children: list[list[int]] = [[] for _ in range(n + 1)]
    for tok in sentence:
        children[tok.gold_head].append(tok.index)

    lo = list(range(n + 1))
    hi = list(range(n + 1))
    size = [1] * (n + 1)
    # post-order over the tree rooted at 0
    order = []
    stack = [0]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(children[node])
    for node in reversed(order):
        for child in children[node]:
            lo[node] = min(lo[node], lo[child])
            hi[node] = max(hi[node], hi[child])
            size[node] += size[child]
    return all(hi[v] - lo[v] + 1 == size[v] for v in range(n + 1))


def synthetic_inventory(size: int) -> SupertagInventory:
    """Inventory of ``size`` generic tag names (st0000, st0001, ...)."""
    width = max(4, len(str(size - 1)))
    return SupertagInventory(tuple(f"st{i:0{width}d}" for i in range(size)))


def _signature(sentence: Sentence, tok: Token) -> tuple[str, str, bool, bool]:
    direction = "L" if tok.gold_head < tok.index else "R"
    has_left = any(
        t.gold_head == tok.index and t.index < tok.index for t in sentence
    )
    has_right = any(
        t.gold_head == tok.index and t.index > tok.index for t in sentence
    )
    return (tok.pos, direction, has_left, has_right)


def synth_supertags(
    sentences, inventory_size: int, noise: float, seed: int
) -> list[list[SupertagDistribution]]:
    """Generate deterministic synthetic supertag annotations.

    Each token's structural signature (POS, head direction, presence of
    left/right dependents) maps to a tag id. Ids enumerate the full grid
    sorted-POS x direction x dependent-flags, so independently annotated
    splits of a corpus agree on tag ids as long as they observe the same
    POS tagset. The distribution puts mass ``1 - noise`` on the signature
    tag and spreads ``noise`` uniformly over 4 other sampled tags. Pure
    function of (sentences, inventory_size, noise, seed).
    """
    if not (0.0 <= noise <= 1.0):
        raise ValueError(f"noise {noise} outside [0, 1]")
    if noise > 0.0 and inventory_size < 5:
        raise ValueError("inventory_size must be >= 5 when noise > 0")
    pos_tags = sorted({tok.pos for sent in sentences for tok in sent})
    pos_rank = {pos: i for i, pos in enumerate(pos_tags)}
    sig_ids = {
        (pos, direction, has_left, has_right): (
            ((pos_rank[pos] * 2 + (direction == "R")) * 2 + has_left) * 2
            + has_right
        )
        for pos in pos_tags
        for direction in ("L", "R")
        for has_left in (False, True)
        for has_right in (False, True)
    }
    if len(sig_ids) > inventory_size:
        raise ValueError(
            f"inventory_size {inventory_size} too small for "
            f"{len(sig_ids)} distinct signatures"
        )

    rng = np.random.default_rng(seed)
    annotations = []
    for sent in sentences:
        dists = []
        for tok in sent:
            true_tag = sig_ids[_signature(sent, tok)]
            if noise == 0.0:
                entries = [(true_tag, 1.0)]
            else:
                others = [t for t in range(inventory_size) if t != true_tag]
                picked = rng.choice(len(others), size=4, replace=False)
                entries = [(true_tag, 1.0 - noise)]
                entries += [(others[int(j)], noise / 4.0) for j in picked]
            dists.append(
                SupertagDistribution.from_entries(entries, inventory_size)
            )
        annotations.append(dists)
    return annotations
