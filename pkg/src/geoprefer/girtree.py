"""Height-balanced spatial index with superimposed signatures, and the
k-superior candidate search.

The tree is bulk-loaded with sort-tile-recursive packing for reproducible
structure. Every node carries the minimum bounding rectangle of its subtree
and the OR of all signatures beneath it, which together yield an admissible
optimistic bound per subtree: no member of the k-superior set can ever be
pruned.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from heapq import heappush, heappop
from pathlib import Path
from typing import Iterator, NamedTuple

from .model import (
    DatasetSummary,
    GeoObject,
    Query,
    ScorePair,
    ValidationError,
    validate_dataset,
)
from .scoring import geo_proximity, score_pair
from .signature import Signature, SignatureConfig, sign_word_set, similarity_upper_bound

DEFAULT_FANOUT = 32

MAGIC = b"GPIX"
FORMAT_VERSION = 1


class LeafEntry(NamedTuple):
    obj_id: int
    lon: float
    lat: float
    sig: Signature


@dataclass
class GirNode:
    mbr: tuple[float, float, float, float]  # min_lon, min_lat, max_lon, max_lat
    sig: Signature
    is_leaf: bool
    children: list["GirNode"] = field(default_factory=list)
    entries: list[LeafEntry] = field(default_factory=list)

    def height(self) -> int:
        if self.is_leaf:
            return 1
        return 1 + max(c.height() for c in self.children)

    def iter_nodes(self) -> Iterator["GirNode"]:
        yield self
        for c in self.children:
            yield from c.iter_nodes()

    def covered_ids(self) -> list[int]:
        if self.is_leaf:
            return [e.obj_id for e in self.entries]
        out: list[int] = []
        for c in self.children:
            out.extend(c.covered_ids())
        return out


@dataclass
class GirTree:
    root: GirNode
    d_max: float
    lon_scale: float
    sig_cfg: SignatureConfig
    fanout: int
    object_store: dict[int, GeoObject]
    summary: DatasetSummary

    def height(self) -> int:
        return self.root.height()

    def objects(self) -> list[GeoObject]:
        return [self.object_store[i] for i in sorted(self.object_store)]


def _mbr_of_points(pts: list[tuple[float, float]]) -> tuple[float, float, float, float]:
    lons = [p[0] for p in pts]
    lats = [p[1] for p in pts]
    return (min(lons), min(lats), max(lons), max(lats))


def _mbr_union(boxes: list[tuple[float, float, float, float]]) -> tuple[float, float, float, float]:
    return (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )


def _str_chunks(items: list, key_x, key_y, fanout: int) -> list[list]:
    """One level of sort-tile-recursive packing into runs of <= fanout."""
    n = len(items)
    pages = math.ceil(n / fanout)
    slices = math.ceil(math.sqrt(pages))
    by_x = sorted(items, key=key_x)
    slice_size = slices * fanout
    chunks: list[list] = []
    for s in range(0, n, slice_size):
        strip = sorted(by_x[s : s + slice_size], key=key_y)
        for c in range(0, len(strip), fanout):
            chunks.append(strip[c : c + fanout])
    return chunks


def build(
    objects: list[GeoObject],
    fanout: int = DEFAULT_FANOUT,
    sig_cfg: SignatureConfig | None = None,
) -> GirTree:
    """Bulk-load a tree; freezes d_max and the longitude scale with it."""
    if fanout < 2:
        raise ValidationError(f"fanout must be >= 2, got {fanout}")
    summary = validate_dataset(objects)
    cfg = sig_cfg or SignatureConfig()

    entries = [
        LeafEntry(o.id, o.lon, o.lat, sign_word_set(o.words, cfg)) for o in objects
    ]
    leaf_chunks = _str_chunks(
        entries,
        key_x=lambda e: (e.lon, e.lat, e.obj_id),
        key_y=lambda e: (e.lat, e.lon, e.obj_id),
        fanout=fanout,
    )
    nodes = [
        GirNode(
            mbr=_mbr_of_points([(e.lon, e.lat) for e in chunk]),
            sig=_or_all([e.sig for e in chunk], cfg.length_bits),
            is_leaf=True,
            entries=list(chunk),
        )
        for chunk in leaf_chunks
    ]
    while len(nodes) > 1:
        def center(node: GirNode) -> tuple[float, float]:
            b = node.mbr
            return ((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0)

        chunks = _str_chunks(
            nodes,
            key_x=lambda nd: (center(nd)[0], center(nd)[1]),
            key_y=lambda nd: (center(nd)[1], center(nd)[0]),
            fanout=fanout,
        )
        nodes = [
            GirNode(
                mbr=_mbr_union([c.mbr for c in chunk]),
                sig=_or_all([c.sig for c in chunk], cfg.length_bits),
                is_leaf=False,
                children=list(chunk),
            )
            for chunk in chunks
        ]
    return GirTree(
        root=nodes[0],
        d_max=summary.d_max,
        lon_scale=summary.lon_scale,
        sig_cfg=cfg,
        fanout=fanout,
        object_store={o.id: o for o in objects},
        summary=summary,
    )


def _or_all(sigs: list[Signature], length_bits: int) -> Signature:
    bits = 0
    for s in sigs:
        bits |= s.bits
    return Signature(bits, length_bits)


def mbr_min_distance(
    q_lon: float,
    q_lat: float,
    mbr: tuple[float, float, float, float],
    lon_scale: float = 1.0,
) -> float:
    """Distance from a point to the nearest point of a rectangle (0 inside)."""
    dlon = max(mbr[0] - q_lon, 0.0, q_lon - mbr[2])
    dlat = max(mbr[1] - q_lat, 0.0, q_lat - mbr[3])
    return math.hypot(dlon * lon_scale, dlat)


def max_proximity(q: Query, node: GirNode, d_max: float, lon_scale: float = 1.0) -> float:
    """Upper bound on the proximity of any object under the node."""
    if d_max <= 0.0:
        return 1.0
    dist = mbr_min_distance(q.lon, q.lat, node.mbr, lon_scale)
    return min(1.0, max(0.0, 1.0 - dist / d_max))


def f_sort(
    q: Query, node: GirNode, d_max: float, sig_cfg: SignatureConfig, lon_scale: float = 1.0
) -> float:
    """Optimistic proximity-plus-similarity of anything under the node."""
    return max_proximity(q, node, d_max, lon_scale) + similarity_upper_bound(
        q.words, node.sig, sig_cfg
    )


def _dominator_count(pairs: list[ScorePair], target_prox: float, target_sim: float, k: int) -> int:
    """Count of pairs dominating (target_prox, target_sim), early-exits at k."""
    n = 0
    for sp in pairs:
        if (
            sp.proximity >= target_prox
            and sp.similarity >= target_sim
            and (sp.proximity > target_prox or sp.similarity > target_sim)
        ):
            n += 1
            if n >= k:
                return n
    return n


def gi_super_search(tree: GirTree, q: Query) -> list[tuple[GeoObject, ScorePair]]:
    """Best-first candidate search returning exactly the k-superior set.

    The heap is ordered by descending optimistic bound; a subtree or entry
    is dropped only when at least k already-admitted objects dominate its
    optimistic (proximity, similarity) bound, which can never discard a
    k-superior object. A final quadratic pass removes any member admitted
    before its dominators were discovered, making the output order-free.
    """
    cfg = tree.sig_cfg
    d_max, lon_scale = tree.d_max, tree.lon_scale

    admitted: list[tuple[GeoObject, ScorePair]] = []
    admitted_pairs: list[ScorePair] = []

    heap: list[tuple[float, int, object]] = []
    counter = 0
    root_bound = f_sort(q, tree.root, d_max, cfg, lon_scale)
    heappush(heap, (-root_bound, counter, tree.root))

    while heap:
        _, _, item = heappop(heap)
        if isinstance(item, GirNode):
            if item.is_leaf:
                for entry in item.entries:
                    prox = geo_proximity(q.lon, q.lat, entry.lon, entry.lat, d_max, lon_scale)
                    sim_ub = similarity_upper_bound(q.words, entry.sig, cfg)
                    if _dominator_count(admitted_pairs, prox, sim_ub, q.k) >= q.k:
                        continue
                    counter += 1
                    heappush(heap, (-(prox + sim_ub), counter, entry))
            else:
                for child in item.children:
                    prox_ub = max_proximity(q, child, d_max, lon_scale)
                    sim_ub = similarity_upper_bound(q.words, child.sig, cfg)
                    if _dominator_count(admitted_pairs, prox_ub, sim_ub, q.k) >= q.k:
                        continue
                    counter += 1
                    heappush(heap, (-(prox_ub + sim_ub), counter, child))
        else:
            entry: LeafEntry = item  # type: ignore[assignment]
            obj = tree.object_store[entry.obj_id]
            sp = score_pair(q, obj, d_max, lon_scale)
            if _dominator_count(admitted_pairs, sp.proximity, sp.similarity, q.k) < q.k:
                admitted.append((obj, sp))
                admitted_pairs.append(sp)

    # Heap-order ties can admit an object before its dominators; one pass
    # against the full admitted set restores the exact membership predicate.
    final = [
        (obj, sp)
        for obj, sp in admitted
        if _dominator_count(admitted_pairs, sp.proximity, sp.similarity, q.k) < q.k
    ]
    final.sort(key=lambda t: t[0].id)
    return final


# ---------------------------------------------------------------------------
# Index file format
#
#   header:  magic "GPIX", version u32, fanout u32, length_bits u32,
#            bits_per_word u32, seed i64, d_max f64, N u64
#   nodes:   node_count u64, then breadth-first records:
#              flags u8 (1 = leaf), mbr 4 x f64, signature (length_bits/8
#              bytes, little-endian 64-bit words), count u32, then for a
#              leaf `count` entries (id i64, lon f64, lat f64, signature);
#              an internal node's `count` children are the next unclaimed
#              nodes in breadth-first order.
#   objects: N records: id i64, lon f64, lat f64, word_count u32,
#            words u32 each, image_url (u32 length + UTF-8, 0xFFFFFFFF for
#            absent), tags (u32 count or 0xFFFFFFFF for absent, each tag
#            u32 length + UTF-8).
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sIIIIqdQ")
_NODE_FIXED = struct.Struct("<B4d")
_ENTRY_FIXED = struct.Struct("<q2d")
_OBJ_FIXED = struct.Struct("<q2dI")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_ABSENT = 0xFFFFFFFF


def save_index(tree: GirTree, path: str | Path) -> None:
    cfg = tree.sig_cfg
    out = bytearray()
    out += _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        tree.fanout,
        cfg.length_bits,
        cfg.bits_per_word,
        cfg.seed,
        tree.d_max,
        len(tree.object_store),
    )

    bfs: list[GirNode] = []
    queue = [tree.root]
    while queue:
        node = queue.pop(0)
        bfs.append(node)
        if not node.is_leaf:
            queue.extend(node.children)
    out += _U64.pack(len(bfs))
    for node in bfs:
        out += _NODE_FIXED.pack(1 if node.is_leaf else 0, *node.mbr)
        out += node.sig.to_le_words()
        if node.is_leaf:
            out += _U32.pack(len(node.entries))
            for e in node.entries:
                out += _ENTRY_FIXED.pack(e.obj_id, e.lon, e.lat)
                out += e.sig.to_le_words()
        else:
            out += _U32.pack(len(node.children))

    for obj in tree.objects():
        out += _OBJ_FIXED.pack(obj.id, obj.lon, obj.lat, len(obj.words))
        for w in obj.words:
            out += _U32.pack(w)
        out += _pack_optional_str(obj.image_url)
        if obj.tags is None:
            out += _U32.pack(_ABSENT)
        else:
            out += _U32.pack(len(obj.tags))
            for t in obj.tags:
                out += _pack_optional_str(t)

    Path(path).write_bytes(bytes(out))


def _pack_optional_str(s: str | None) -> bytes:
    if s is None:
        return _U32.pack(_ABSENT)
    raw = s.encode("utf-8")
    return _U32.pack(len(raw)) + raw


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise ValidationError("truncated index file")
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st: struct.Struct) -> tuple:
        return st.unpack(self.take(st.size))


def _read_optional_str(r: _Reader) -> str | None:
    (n,) = r.unpack(_U32)
    if n == _ABSENT:
        return None
    return r.take(n).decode("utf-8")


def load_index(path: str | Path) -> GirTree:
    r = _Reader(Path(path).read_bytes())
    magic, version, fanout, length_bits, bits_per_word, seed, d_max, n_objects = r.unpack(
        _HEADER
    )
    if magic != MAGIC:
        raise ValidationError(f"not an index file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ValidationError(f"unsupported index version {version}")
    cfg = SignatureConfig(length_bits=length_bits, bits_per_word=bits_per_word, seed=seed)
    sig_bytes = length_bits // 8

    (node_count,) = r.unpack(_U64)
    nodes: list[GirNode] = []
    counts: list[int] = []
    for _ in range(node_count):
        flags, a, b, c, d = r.unpack(_NODE_FIXED)
        sig = Signature.from_le_words(r.take(sig_bytes), length_bits)
        is_leaf = bool(flags & 1)
        node = GirNode(mbr=(a, b, c, d), sig=sig, is_leaf=is_leaf)
        (count,) = r.unpack(_U32)
        if is_leaf:
            for _ in range(count):
                oid, lon, lat = r.unpack(_ENTRY_FIXED)
                esig = Signature.from_le_words(r.take(sig_bytes), length_bits)
                node.entries.append(LeafEntry(oid, lon, lat, esig))
        nodes.append(node)
        counts.append(0 if is_leaf else count)

    # reattach children: each internal node claims the next `count` nodes
    # in breadth-first order
    next_child = 1
    for node, count in zip(nodes, counts):
        if count:
            node.children = nodes[next_child : next_child + count]
            next_child += count
    if node_count and next_child != node_count:
        raise ValidationError("inconsistent node records in index file")

    objects: list[GeoObject] = []
    for _ in range(n_objects):
        oid, lon, lat, wc = r.unpack(_OBJ_FIXED)
        words = tuple(r.unpack(_U32)[0] for _ in range(wc))
        image_url = _read_optional_str(r)
        (tag_count,) = r.unpack(_U32)
        tags: tuple[str, ...] | None
        if tag_count == _ABSENT:
            tags = None
        else:
            tags = tuple(_read_optional_str(r) or "" for _ in range(tag_count))
        objects.append(
            GeoObject(id=oid, lon=lon, lat=lat, words=words, image_url=image_url, tags=tags)
        )

    summary = validate_dataset(objects)
    return GirTree(
        root=nodes[0],
        d_max=d_max,
        lon_scale=summary.lon_scale,
        sig_cfg=cfg,
        fanout=fanout,
        object_store={o.id: o for o in objects},
        summary=summary,
    )
