"""Heterogeneous synset-sememe graph: typed nodes, relations, triplets.

The graph mixes two node kinds (synsets and sememes) and three triplet
kinds: synset-synset, sememe-sememe, and the bridging ``have_sememe``
triplets that attach a synset to each of its annotated sememes.  A
:class:`TripletStore` is immutable after construction and carries an
optional POS tag per node plus a train/valid/test split label per
triplet.
"""

from __future__ import annotations

import enum
import logging
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, ParseError, UnknownIdError, ValidationError

logger = logging.getLogger(__name__)

# Relation name reserved for the learned equivalence vector; it must never
# appear in a triplet file.
EQUIVALENCE_RELATION_NAME = "semantic_equivalence"


class NodeKind(enum.Enum):
    SYNSET = "syn"
    SEMEME = "sem"


class RelationKind(enum.Enum):
    SYNSET_SYNSET = "syn-syn"
    SEMEME_SEMEME = "sem-sem"
    HAVE_SEMEME = "have"
    EQUIVALENCE = "equiv"


class Pos(enum.Enum):
    NOUN = "noun"
    VERB = "verb"
    ADJ = "adj"
    ADV = "adv"
    UNKNOWN = "unknown"


class Split(enum.Enum):
    TRAIN = "train"
    VALID = "valid"
    TEST = "test"


@dataclass(frozen=True)
class NodeId:
    """A node identifier whose kind is encoded in the ``syn:``/``sem:`` prefix.

    ``name`` is the full serialized form, e.g. ``"syn:bn:00045106n"`` or
    ``"sem:capital"``, so sorting by name is total and stable.
    """

    kind: NodeKind
    name: str

    def __post_init__(self) -> None:
        prefix = self.kind.value + ":"
        if not self.name.startswith(prefix) or len(self.name) <= len(prefix):
            raise ValidationError(f"node id {self.name!r} does not match kind {self.kind.value!r}")

    @classmethod
    def parse(cls, text: str) -> "NodeId":
        for kind in NodeKind:
            if text.startswith(kind.value + ":"):
                return cls(kind, text)
        raise ValidationError(f"node id {text!r} lacks a syn:/sem: prefix")

    def __str__(self) -> str:
        return self.name


def synset_id(bare: str) -> NodeId:
    """Build a synset NodeId from an unprefixed name."""
    return NodeId(NodeKind.SYNSET, f"syn:{bare}")


def sememe_id(bare: str) -> NodeId:
    """Build a sememe NodeId from an unprefixed name."""
    return NodeId(NodeKind.SEMEME, f"sem:{bare}")


@dataclass(frozen=True)
class RelationId:
    """A relation identified by (kind, name); the same name may exist for
    several kinds, e.g. ``antonym`` between synsets and between sememes."""

    kind: RelationKind
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("relation name must be non-empty")

    @property
    def serialized(self) -> str:
        return f"rel:{self.kind.value}:{self.name}"

    @classmethod
    def parse(cls, text: str) -> "RelationId":
        parts = text.split(":", 2)
        if len(parts) != 3 or parts[0] != "rel":
            raise ValidationError(f"relation id {text!r} is not of the form rel:<kind>:<name>")
        try:
            kind = RelationKind(parts[1])
        except ValueError as exc:
            raise ValidationError(f"unknown relation kind {parts[1]!r} in {text!r}") from exc
        return cls(kind, parts[2])

    @property
    def sort_key(self) -> tuple[str, str]:
        return (self.kind.value, self.name)

    def __str__(self) -> str:
        return self.serialized


EQUIVALENCE_RELATION = RelationId(RelationKind.EQUIVALENCE, EQUIVALENCE_RELATION_NAME)


def _relation_kind_for(head: NodeId, tail: NodeId) -> RelationKind:
    if head.kind is NodeKind.SYNSET and tail.kind is NodeKind.SYNSET:
        return RelationKind.SYNSET_SYNSET
    if head.kind is NodeKind.SEMEME and tail.kind is NodeKind.SEMEME:
        return RelationKind.SEMEME_SEMEME
    if head.kind is NodeKind.SYNSET and tail.kind is NodeKind.SEMEME:
        return RelationKind.HAVE_SEMEME
    raise ValidationError(
        f"triplet with sememe head {head} and synset tail {tail} is not a legal kind"
    )


@dataclass(frozen=True)
class Triplet:
    head: NodeId
    relation: RelationId
    tail: NodeId

    def __post_init__(self) -> None:
        if self.relation.kind is RelationKind.EQUIVALENCE:
            raise ValidationError("the equivalence relation never appears in triplets")
        expected = _relation_kind_for(self.head, self.tail)
        if self.relation.kind is not expected:
            raise ValidationError(
                f"relation {self.relation} does not match endpoints "
                f"({self.head.kind.value}, {self.tail.kind.value})"
            )

    @property
    def sort_key(self) -> tuple[str, str, str, str]:
        return (self.head.name, self.relation.kind.value, self.relation.name, self.tail.name)


def make_triplet(head: NodeId, relation_name: str, tail: NodeId) -> Triplet:
    """Build a triplet inferring the relation kind from the endpoint kinds."""
    if relation_name == EQUIVALENCE_RELATION_NAME:
        raise ValidationError(
            f"relation name {EQUIVALENCE_RELATION_NAME!r} is reserved for the learned "
            "equivalence vector and cannot appear in data"
        )
    kind = _relation_kind_for(head, tail)
    return Triplet(head, RelationId(kind, relation_name), tail)


AnnotationMap = Mapping[NodeId, frozenset[NodeId]]


@dataclass(frozen=True)
class StoreStats:
    n_triplets: int
    n_synsets: int
    n_sememes: int
    n_relations_by_kind: dict[RelationKind, int]
    n_triplets_by_kind: dict[RelationKind, int]
    n_by_split: dict[Split, int]


class TripletStore:
    """Immutable, validated container for the synset-sememe graph.

    Construction deduplicates triplets (logging the dropped count),
    enforces the single ``have_sememe`` relation rule, and checks split
    soundness: valid/test may contain only synset-sememe triplets, and
    all such triplets of one synset share one split.
    """

    def __init__(
        self,
        triplets: Iterable[Triplet],
        pos_tags: Mapping[NodeId, Pos] | None = None,
        split: Mapping[Triplet, Split] | None = None,
    ) -> None:
        seen: dict[Triplet, None] = {}
        dropped = 0
        for t in triplets:
            if t in seen:
                dropped += 1
            else:
                seen[t] = None
        if dropped:
            logger.info("dropped %d duplicate triplets", dropped)
        self._triplets: tuple[Triplet, ...] = tuple(seen)

        split = split or {}
        self._split: dict[Triplet, Split] = {t: split.get(t, Split.TRAIN) for t in self._triplets}
        self._pos: dict[NodeId, Pos] = dict(pos_tags or {})

        nodes: dict[NodeId, None] = {}
        for t in self._triplets:
            nodes.setdefault(t.head)
            nodes.setdefault(t.tail)
        for n in self._pos:
            nodes.setdefault(n)
        self._nodes: tuple[NodeId, ...] = tuple(sorted(nodes, key=lambda n: n.name))
        self._node_set = frozenset(self._nodes)

        have_names = {t.relation.name for t in self._triplets if t.relation.kind is RelationKind.HAVE_SEMEME}
        if len(have_names) > 1:
            raise ValidationError(
                f"multiple synset-sememe relation names found: {sorted(have_names)}; exactly one is allowed"
            )

        rels: dict[RelationId, None] = {}
        for t in self._triplets:
            rels.setdefault(t.relation)
        self._relations: tuple[RelationId, ...] = tuple(sorted(rels, key=lambda r: r.sort_key))

        self._degree: Counter[NodeId] = Counter()
        for t in self._triplets:
            self._degree[t.head] += 1
            self._degree[t.tail] += 1

        self._check_split_soundness()

    def _check_split_soundness(self) -> None:
        synset_split: dict[NodeId, Split] = {}
        for t in self._triplets:
            s = self._split[t]
            if t.relation.kind is not RelationKind.HAVE_SEMEME:
                if s is not Split.TRAIN:
                    raise ValidationError(
                        f"non have_sememe triplet {t.head}->{t.tail} assigned to {s.value}"
                    )
                continue
            prev = synset_split.setdefault(t.head, s)
            if prev is not s:
                raise ValidationError(
                    f"synset {t.head} has have_sememe triplets in both {prev.value} and {s.value}"
                )

    # -- basic queries -------------------------------------------------

    @property
    def triplets(self) -> tuple[Triplet, ...]:
        return self._triplets

    @property
    def nodes(self) -> tuple[NodeId, ...]:
        return self._nodes

    @property
    def relations(self) -> tuple[RelationId, ...]:
        return self._relations

    @property
    def synsets(self) -> tuple[NodeId, ...]:
        return tuple(n for n in self._nodes if n.kind is NodeKind.SYNSET)

    @property
    def sememes(self) -> tuple[NodeId, ...]:
        return tuple(n for n in self._nodes if n.kind is NodeKind.SEMEME)

    def __len__(self) -> int:
        return len(self._triplets)

    def __contains__(self, triplet: Triplet) -> bool:
        return triplet in self._split

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TripletStore):
            return NotImplemented
        return (
            self._triplets == other._triplets
            and self._split == other._split
            and self._pos == other._pos
        )

    def __repr__(self) -> str:
        return f"TripletStore({len(self._triplets)} triplets, {len(self._nodes)} nodes)"

    def split_of(self, triplet: Triplet) -> Split:
        try:
            return self._split[triplet]
        except KeyError as exc:
            raise UnknownIdError(f"triplet not in store: {triplet}") from exc

    def pos_of(self, node: NodeId) -> Pos:
        if node not in self._node_set:
            raise UnknownIdError(f"unknown node {node}")
        return self._pos.get(node, Pos.UNKNOWN)

    def pos_tags(self) -> dict[NodeId, Pos]:
        return dict(self._pos)

    def degree(self, node: NodeId) -> int:
        """Number of triplets in which ``node`` appears as head or tail."""
        if node not in self._node_set:
            raise UnknownIdError(f"unknown node {node}")
        return self._degree[node]

    def have_sememe_relation(self) -> RelationId:
        for r in self._relations:
            if r.kind is RelationKind.HAVE_SEMEME:
                return r
        raise UnknownIdError("store has no synset-sememe triplets")

    def triplets_in(self, split: Split) -> tuple[Triplet, ...]:
        return tuple(t for t in self._triplets if self._split[t] is split)

    def annotation_map(self, split: Split) -> dict[NodeId, frozenset[NodeId]]:
        """Per-synset gold sememe sets derived from the split's triplets,
        keyed in sorted synset order."""
        gold: dict[NodeId, set[NodeId]] = {}
        for t in self._triplets:
            if t.relation.kind is RelationKind.HAVE_SEMEME and self._split[t] is split:
                gold.setdefault(t.head, set()).add(t.tail)
        return {b: frozenset(gold[b]) for b in sorted(gold, key=lambda n: n.name)}

    def annotated_synsets(self) -> tuple[NodeId, ...]:
        """Synsets possessing at least one have_sememe triplet, sorted."""
        out: set[NodeId] = set()
        for t in self._triplets:
            if t.relation.kind is RelationKind.HAVE_SEMEME:
                out.add(t.head)
        return tuple(sorted(out, key=lambda n: n.name))

    def stats(self) -> StoreStats:
        rel_kinds = Counter(r.kind for r in self._relations)
        trip_kinds = Counter(t.relation.kind for t in self._triplets)
        by_split = Counter(self._split[t] for t in self._triplets)
        return StoreStats(
            n_triplets=len(self._triplets),
            n_synsets=len(self.synsets),
            n_sememes=len(self.sememes),
            n_relations_by_kind={k: rel_kinds.get(k, 0) for k in RelationKind},
            n_triplets_by_kind={k: trip_kinds.get(k, 0) for k in RelationKind},
            n_by_split={s: by_split.get(s, 0) for s in Split},
        )

    # -- transformations ----------------------------------------------

    def _substore(self, keep: Iterable[Triplet], keep_nodes: Iterable[NodeId] | None = None) -> "TripletStore":
        kept = tuple(keep)
        if keep_nodes is None:
            node_set = {t.head for t in kept} | {t.tail for t in kept}
        else:
            node_set = set(keep_nodes)
        pos = {n: p for n, p in self._pos.items() if n in node_set}
        split = {t: self._split[t] for t in kept}
        return TripletStore(kept, pos, split)

    def filter_low_frequency(self, min_node_degree: int, min_relation_count: int) -> "TripletStore":
        """Iteratively drop nodes below ``min_node_degree`` and relations
        below ``min_relation_count``, with their triplets, to a fixed point.
        """
        if min_node_degree < 0 or min_relation_count < 0:
            raise ConfigError("frequency thresholds must be >= 0")
        triplets = list(self._triplets)
        nodes = set(self._nodes)
        while True:
            deg: Counter[NodeId] = Counter()
            rel_count: Counter[RelationId] = Counter()
            for t in triplets:
                deg[t.head] += 1
                deg[t.tail] += 1
                rel_count[t.relation] += 1
            bad_nodes = {n for n in nodes if deg[n] < min_node_degree}
            bad_rels = {r for r in rel_count if rel_count[r] < min_relation_count}
            if not bad_nodes and not bad_rels:
                break
            nodes -= bad_nodes
            triplets = [
                t
                for t in triplets
                if t.head in nodes and t.tail in nodes and t.relation not in bad_rels
            ]
        return self._substore(triplets, nodes)

    def split_dataset(self, ratios: tuple[float, float, float], seed: int) -> "TripletStore":
        """Partition annotated synsets by ``ratios``; their have_sememe
        triplets follow them into valid/test while every other triplet,
        including synset-synset ones touching held-out synsets, stays in
        train.
        """
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {ratios}")
        if any(r < 0 for r in ratios):
            raise ConfigError(f"split ratios must be nonnegative, got {ratios}")
        annotated = list(self.annotated_synsets())
        if not annotated:
            raise ValidationError("cannot split a store with no annotated synsets")
        rng = random.Random(seed)
        rng.shuffle(annotated)
        n = len(annotated)
        n_valid = int(ratios[1] * n)
        n_test = int(ratios[2] * n)
        n_train = n - n_valid - n_test
        assignment: dict[NodeId, Split] = {}
        for i, b in enumerate(annotated):
            if i < n_train:
                assignment[b] = Split.TRAIN
            elif i < n_train + n_valid:
                assignment[b] = Split.VALID
            else:
                assignment[b] = Split.TEST
        split: dict[Triplet, Split] = {}
        for t in self._triplets:
            if t.relation.kind is RelationKind.HAVE_SEMEME:
                split[t] = assignment[t.head]
            else:
                split[t] = Split.TRAIN
        return TripletStore(self._triplets, self._pos, split)

    def filter_by_pos(self, keep: Iterable[Pos]) -> "TripletStore":
        """Drop synsets whose POS tag is not in ``keep`` along with every
        triplet touching them; sememes are never removed by POS."""
        keep_set = set(keep)
        if not keep_set:
            raise ConfigError("filter_by_pos requires a non-empty keep set")
        removed = {
            n
            for n in self._nodes
            if n.kind is NodeKind.SYNSET and self._pos.get(n, Pos.UNKNOWN) not in keep_set
        }
        kept_nodes = [n for n in self._nodes if n not in removed]
        kept_triplets = [t for t in self._triplets if t.head not in removed and t.tail not in removed]
        return self._substore(kept_triplets, kept_nodes)


# -- file formats -----------------------------------------------------
#
# Triplet file: UTF-8, one triplet per line, TAB-separated fields
#   head<TAB>relation<TAB>tail[<TAB>split]
# Lines starting with '#' are comments.  The optional fourth column is the
# split label written by the prepare step.
#
# POS file: node-id<TAB>pos-tag with the same comment convention.


def _data_lines(path: Path) -> Iterable[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def load_triplets(path: str | Path, pos_path: str | Path | None = None) -> TripletStore:
    """Load a triplet file, optionally with a POS file, into a validated store.

    Three-column lines default to the train split; four-column lines carry
    an explicit split label.  Malformed lines raise :class:`ParseError`
    naming the line number.
    """
    path = Path(path)
    triplets: list[Triplet] = []
    split: dict[Triplet, Split] = {}
    for lineno, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise ParseError(f"{path}:{lineno}: expected 3 or 4 TAB-separated fields, got {len(fields)}")
        try:
            head = NodeId.parse(fields[0])
            tail = NodeId.parse(fields[2])
            triplet = make_triplet(head, fields[1], tail)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        if len(fields) == 4:
            try:
                split[triplet] = Split(fields[3])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: unknown split label {fields[3]!r}") from exc
        triplets.append(triplet)
    pos = load_pos_tags(pos_path) if pos_path is not None else {}
    return TripletStore(triplets, pos, split)


def load_pos_tags(path: str | Path) -> dict[NodeId, Pos]:
    path = Path(path)
    tags: dict[NodeId, Pos] = {}
    for lineno, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(f"{path}:{lineno}: expected 2 TAB-separated fields, got {len(fields)}")
        try:
            node = NodeId.parse(fields[0])
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        try:
            tags[node] = Pos(fields[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: unknown POS tag {fields[1]!r}") from exc
    return tags


def save_triplets(store: TripletStore, path: str | Path, include_split: bool = False) -> None:
    """Write the store's triplets in insertion order; with ``include_split``
    a fourth column carries each triplet's split label."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for t in store.triplets:
            fields = [t.head.name, t.relation.name, t.tail.name]
            if include_split:
                fields.append(store.split_of(t).value)
            fh.write("\t".join(fields) + "\n")


def save_pos_tags(tags: Mapping[NodeId, Pos], path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for node in sorted(tags, key=lambda n: n.name):
            fh.write(f"{node.name}\t{tags[node].value}\n")


def format_stats(stats: StoreStats) -> str:
    """Human-readable dataset summary used by the prepare command."""
    lines = [
        f"triplets\t{stats.n_triplets}",
        f"synsets\t{stats.n_synsets}",
        f"sememes\t{stats.n_sememes}",
    ]
    for kind in (RelationKind.SYNSET_SYNSET, RelationKind.SEMEME_SEMEME, RelationKind.HAVE_SEMEME):
        lines.append(f"relations[{kind.value}]\t{stats.n_relations_by_kind[kind]}")
        lines.append(f"triplets[{kind.value}]\t{stats.n_triplets_by_kind[kind]}")
    for split in Split:
        lines.append(f"split[{split.value}]\t{stats.n_by_split[split]}")
    return "\n".join(lines) + "\n"
