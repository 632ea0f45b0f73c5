"""Bigon detection and removal, reduction to minimal position, intersection
numbers.

A *bigon* here is a puncture-free disk region bounded by a subpath of one arc
and a subpath of a second strand (another arc or a tether), cornered by two of
their crossings.  A *half-bigon* is a puncture-free triangle at the boundary:
one arc endpoint, one crossing, and the adjacent boundary attachment of the
other strand (an endpoint or a tether foot).  Both kinds may be traversed by
other strands; a move is emitted only when every such through-path enters
through one side and leaves through the other, which is exactly the innermost
condition.  Removal is implemented by rerouting the moving arc along the far
side of the other strand and rebuilding the diagram, so every intermediate
object is a fully validated map.

Tether moves do not change the arc/arc crossing count; they are normalization
moves that make diagrams taut relative to the puncture anchors.  ``reduce``
applies both; ``find_bigons`` reports only genuine arc/arc moves.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Optional

from .diskmap import ArcDiagram, ArcRoute, K_END, K_FOOT, K_TIP, build_diagram
from .errors import StaleBigon, UnknownArc


@dataclass(frozen=True)
class Bigon:
    """Witness of a removable region, as reported by :func:`find_bigons`."""

    kind: str                     # "bigon" or "half_bigon"
    sides: tuple                  # two segment descriptors (owner kind, id, from vertex, to vertex)
    interior_faces: frozenset     # region identifiers (merged arrangement faces)
    innermost: bool
    _move: "_Move" = field(repr=False, compare=False, default=None)
    _token: bytes = field(repr=False, compare=False, default=b"")


@dataclass(frozen=True)
class _Move:
    kind: str            # "bigon" or "half"
    mover: int           # arc id that gets rerouted
    other: int           # owner code of the fixed strand
    corners: tuple       # bigon: (u, w) crossing vertices; half: (endpoint, v, attach)
    runs: tuple          # per through-path: (z owner code, exit vertex on the fixed strand, far edge dart)
    interior_raw: frozenset
    interior_real: frozenset
    key: tuple
    stretch_dir: int = 0  # half only: +1 when the slide stretch runs ccw from the endpoint


def _edge_id(d: ArcDiagram, dart: int) -> int:
    t = d.twin[dart]
    return dart if dart < t else t


def _region(d: ArcDiagram, curve_edges: set) -> Optional[tuple]:
    """Faces strictly inside the closed curve made of ``curve_edges``.

    Returns (interior face ids, interior edge ids) or None when the edge set
    does not split the faces into exactly two classes.
    """
    face_of, orbits, outer = d.faces()
    parent = list(range(len(orbits)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for dart in range(d.num_darts):
        t = d.twin[dart]
        if dart < t and dart not in curve_edges:
            a, b = find(face_of[dart]), find(face_of[t])
            if a != b:
                parent[a] = b
    classes = {find(f) for f in range(len(orbits))}
    if len(classes) != 2:
        return None
    inside = {f for f in range(len(orbits)) if find(f) != find(outer)}
    interior_edges = set()
    for dart in range(d.num_darts):
        t = d.twin[dart]
        if dart < t and dart not in curve_edges and face_of[dart] in inside:
            interior_edges.add(dart)
    return inside, interior_edges


class _Analyzer:
    """Shared per-diagram tables for move finding and application."""

    def __init__(self, d: ArcDiagram):
        self.d = d
        self.walks = {}
        for a in d.arc_order:
            self.walks[d.n + a] = d.oriented_walk(d.n + a, d.canonical_direction(a))
        for t in range(1, d.n + 1):
            self.walks[t] = d.owner_walk(t)
        self.pos = {}          # (owner, vertex) -> crossing index along owner
        self.partners = {}     # vertex -> [owner codes]
        self.edge_index = {}   # edge id -> (owner, edge index along owner)
        for owner, walk in self.walks.items():
            for i, dart in enumerate(walk):
                self.edge_index[_edge_id(d, dart)] = (owner, i)
            for i, dart in enumerate(walk[:-1]):
                v = d.dvert[d.twin[dart]]
                self.pos[(owner, v)] = i
                self.partners.setdefault(v, []).append(owner)
        self.num_cross = {o: len(w) - 1 for o, w in self.walks.items()}

    def fwd_at(self, owner: int, v: int) -> int:
        return self.walks[owner][self.pos[(owner, v)] + 1]

    def back_at(self, owner: int, v: int) -> int:
        return self.d.twin[self.walks[owner][self.pos[(owner, v)]]]

    def other_at(self, owner: int, v: int) -> int:
        for o in self.partners[v]:
            if o != owner:
                return o
        raise ValueError(f"no partner at {v}")

    def pair_crossings(self, x: int, y: int) -> list:
        """Crossing vertices of owners x and y ordered along x."""
        d = self.d
        out = []
        for i, dart in enumerate(self.walks[x][:-1]):
            v = d.dvert[d.twin[dart]]
            if self.other_at(x, v) == y:
                out.append(v)
        return out

    def subpath_edges(self, owner: int, v1: int, v2: int) -> list:
        """Edge ids of the owner subpath between two of its crossings."""
        i1, i2 = self.pos[(owner, v1)], self.pos[(owner, v2)]
        lo, hi = min(i1, i2), max(i1, i2)
        return [_edge_id(self.d, dart) for dart in self.walks[owner][lo + 1:hi + 1]]

    def end_edges(self, owner: int, v: int, which: int) -> list:
        """Edge ids from the owner's boundary attachment to crossing v.

        ``which`` 0 selects the walk-start end, 1 the walk-end end.
        """
        i = self.pos[(owner, v)]
        walk = self.walks[owner]
        if which == 0:
            return [_edge_id(self.d, dart) for dart in walk[:i + 1]]
        return [_edge_id(self.d, dart) for dart in walk[i + 1:]]

    def attachment_vertex(self, owner: int, which: int) -> int:
        walk = self.walks[owner]
        d = self.d
        return d.dvert[walk[0]] if which == 0 else d.dvert[d.twin[walk[-1]]]

    def runs_in(self, interior_edges: set, x: int, y: int,
                stretch_vertices: frozenset = frozenset()):
        """Decompose interior edges into through-paths.

        Every maximal interior subpath of a third strand must run between two
        of: a crossing on x, a crossing on y, a boundary anchor lying on the
        slide stretch.  Paths with both ends on the same arc side are smaller
        removable regions, so the candidate is rejected (None).  Returns one
        (z owner code, exit vertex, far edge dart) entry per path leaving
        through y.
        """
        d = self.d
        by_owner = {}
        for e in interior_edges:
            owner, idx = self.edge_index[e]
            if owner in (x, y):
                return None
            by_owner.setdefault(owner, set()).add(idx)
        runs = []
        for z, idxs in by_owner.items():
            walk = self.walks[z]
            for i in sorted(idxs):
                if i - 1 in idxs:
                    continue
                j = i
                while j + 1 in idxs:
                    j += 1
                # the run spans edges i..j of z
                ends = []
                for at_start in (True, False):
                    if (i == 0) if at_start else (j == len(walk) - 1):
                        anchor = d.dvert[walk[0]] if at_start else d.dvert[d.twin[walk[-1]]]
                        if d.vkind[anchor] == K_TIP or anchor not in stretch_vertices:
                            return None
                        ends.append(("s", None, None))
                    else:
                        bnd = i - 1 if at_start else j
                        v = d.dvert[d.twin[walk[bnd]]]
                        o = self.other_at(z, v)
                        if o == x:
                            ends.append(("x", v, None))
                        elif o == y:
                            ends.append(("y", v, bnd if at_start else j + 1))
                        else:
                            return None
                kinds = sorted(e[0] for e in ends)
                if kinds in (["x", "x"], ["y", "y"]):
                    return None
                for tag, v, edge_pos in ends:
                    if tag == "y":
                        runs.append((z, v, walk[edge_pos]))
        return runs

    def left_of(self, z: int, v: int, sector_dart: int) -> bool:
        """Whether the sector starting at ``sector_dart`` lies on z's left at v."""
        zf = self.fwd_at(z, v)
        zb = self.back_at(z, v)
        return sector_dart == zf or self.d.rotn[sector_dart] == zb


def _real_faces_of(d: ArcDiagram, raw_faces: frozenset) -> frozenset:
    cls, _, _ = d.real_faces()
    return frozenset(cls[f] for f in raw_faces)


def _tips_in(d: ArcDiagram, faces) -> bool:
    return any(d.face_of(d.tip_dart(p)) in faces for p in range(1, d.n + 1))


def find_moves(d: ArcDiagram, slide_endpoints: bool = True,
               arcs_only: bool = False, first_only: bool = False,
               only_owner: int | None = None) -> list:
    """All innermost removal moves available on the diagram.

    ``only_owner`` restricts the scan to strand pairs involving that owner
    code; sound when the diagram without that strand is known to be reduced.
    """
    an = _Analyzer(d)
    moves = []
    arc_codes = [d.n + a for a in d.arc_order]
    strand_codes = arc_codes + list(range(1, d.n + 1))

    def consider_bigon(x: int, y: int):
        cr_x = an.pair_crossings(x, y)
        if len(cr_x) < 2:
            return
        order_y = sorted(cr_x, key=lambda v: an.pos[(y, v)])
        rank_y = {v: i for i, v in enumerate(order_y)}
        for t in range(len(cr_x) - 1):
            u, w = cr_x[t], cr_x[t + 1]
            if abs(rank_y[u] - rank_y[w]) != 1:
                continue
            curve = set(an.subpath_edges(x, u, w)) | set(an.subpath_edges(y, u, w))
            reg = _region(d, curve)
            if reg is None:
                continue
            inside, interior_edges = reg
            if _tips_in(d, inside):
                continue
            runs = an.runs_in(interior_edges, x, y)
            if runs is None:
                continue
            mover = x - d.n
            moves.append(_Move(
                kind="bigon", mover=mover, other=y, corners=(u, w),
                runs=tuple(sorted(runs)), interior_raw=frozenset(inside),
                interior_real=_real_faces_of(d, frozenset(inside)),
                key=(0, len(inside), min(inside), mover, y, u, w),
            ))

    def consider_half(x: int, y: int):
        # endpoints of the moving arc against boundary attachments of the strand
        cr = an.pair_crossings(x, y)
        if not cr:
            return
        rank = d.boundary_rank()
        m = len(rank)
        gap_darts = d.boundary_gap_darts()
        bseq = d.boundary_sequence()
        attach_ends = (0, 1) if y > d.n else (0,)
        for which_a in (0, 1):
            ea = an.attachment_vertex(x, which_a)
            for which_y in attach_ends:
                ey = an.attachment_vertex(y, which_y)
                ra, ry = rank[ea], rank[ey]
                for stretch_dir in (1, -1):
                    if stretch_dir == 1:
                        span = [(ra + t) % m for t in range((ry - ra) % m)]
                        inner = [bseq[(ra + t) % m] for t in range(1, (ry - ra) % m)]
                    else:
                        span = [(ry + t) % m for t in range((ra - ry) % m)]
                        inner = [bseq[(ry + t) % m] for t in range(1, (ra - ry) % m)]
                    stretch_edges = {_edge_id(d, gap_darts[t]) for t in span}
                    stretch_vertices = frozenset(inner)
                    for v in cr:
                        curve = (set(an.end_edges(x, v, which_a))
                                 | set(an.end_edges(y, v, which_y))
                                 | stretch_edges)
                        reg = _region(d, curve)
                        if reg is None:
                            continue
                        inside, interior_edges = reg
                        if _tips_in(d, inside):
                            continue
                        runs = an.runs_in(interior_edges, x, y, stretch_vertices)
                        if runs is None:
                            continue
                        mover = x - d.n
                        moves.append(_Move(
                            kind="half", mover=mover, other=y,
                            corners=(ea, v, ey), runs=tuple(sorted(runs)),
                            interior_raw=frozenset(inside),
                            interior_real=_real_faces_of(d, frozenset(inside)),
                            key=(1, len(inside), min(inside, default=0), mover, y, ea, v, stretch_dir),
                            stretch_dir=stretch_dir,
                        ))

    for x in arc_codes:
        for y in strand_codes:
            if y == x:
                continue
            if y > d.n and y < x:
                continue  # each arc pair once, smaller id moves
            if arcs_only and y <= d.n:
                continue
            if only_owner is not None and only_owner not in (x, y):
                continue
            consider_bigon(x, y)
            if slide_endpoints:
                consider_half(x, y)
            if first_only and moves:
                return moves
    return moves


def find_bigons(diagram: ArcDiagram, slide_endpoints: bool = True) -> list:
    """All innermost puncture-free bigons and half-bigons between arcs."""
    token = diagram.canonical_code()
    out = []
    for mv in find_moves(diagram, slide_endpoints=slide_endpoints, arcs_only=True):
        other_id = mv.other - diagram.n
        if mv.kind == "bigon":
            u, w = mv.corners
            sides = (("a", mv.mover, u, w), ("a", other_id, u, w))
            kind = "bigon"
        else:
            ea, v, ey = mv.corners
            sides = (("a", mv.mover, ea, v), ("a", other_id, ey, v))
            kind = "half_bigon"
        out.append(Bigon(kind=kind, sides=sides, interior_faces=mv.interior_real,
                         innermost=True, _move=mv, _token=token))
    return out


def _apply_move(d: ArcDiagram, mv: _Move) -> ArcDiagram:
    an = _Analyzer(d)
    others = [a for a in d.arc_order if a != mv.mover]
    ext = d.extract_routes(others + [mv.mover])
    route = ext[-1][1]
    inst = list(route.crossings)
    x = d.n + mv.mover
    y = mv.other

    def new_item(z, q, far_dart):
        # z-walk key of the fresh crossing placed just beyond exit q
        tq = an.pos[(z, q)]
        owner, k = an.edge_index[_edge_id(d, far_dart)]
        assert owner == z and k in (tq, tq + 1)
        key = tq + 0.25 if k == tq + 1 else tq - 0.25
        return ("new", z, key, q, k)

    far_runs = [(an.pos[(y, q)], z, q, fd) for z, q, fd in mv.runs]

    if mv.kind == "bigon":
        u, w = mv.corners
        iu, iw = sorted((an.pos[(x, u)], an.pos[(x, w)]))
        vu = u if an.pos[(x, u)] == iu else w
        vw = w if vu is u else u
        pu, pw = an.pos[(y, vu)], an.pos[(y, vw)]
        travel_toward_end = pw > pu
        ordered = sorted(far_runs, reverse=not travel_toward_end)
        program = ([("old", t) for t in range(iu)]
                   + [new_item(z, q, fd) for _, z, q, fd in ordered]
                   + [("old", t) for t in range(iw + 1, len(inst))])
    else:
        ea, v, ey = mv.corners
        iv = an.pos[(x, v)]
        which_a = 0 if an.attachment_vertex(x, 0) == ea else 1
        which_y = 0 if an.attachment_vertex(y, 0) == ey else 1
        attach_pos = -0.5 if which_y == 0 else an.num_cross[y] - 0.5
        pv = an.pos[(y, v)]
        if which_a == 0:
            # the new start runs alongside y from past ey toward v
            travel_toward_end = pv > attach_pos
            ordered = sorted(far_runs, reverse=not travel_toward_end)
            program = ([new_item(z, q, fd) for _, z, q, fd in ordered]
                       + [("old", t) for t in range(iv + 1, len(inst))])
        else:
            # the new tail leaves the old course at v and rounds ey
            travel_toward_end = attach_pos > pv
            ordered = sorted(far_runs, reverse=not travel_toward_end)
            program = ([("old", t) for t in range(iv)]
                       + [new_item(z, q, fd) for _, z, q, fd in ordered])

    def side_for_new(z, q, k):
        # the mover approaches the far edge of z from the sector at q bounded
        # by the far dart and the y dart pointing against the travel direction
        tq = an.pos[(z, q)]
        far = an.walks[z][tq + 1] if k == tq + 1 else d.twin[an.walks[z][tq]]
        behind = an.back_at(y, q) if travel_toward_end else an.fwd_at(y, q)
        if d.rotn[behind] == far:
            sector = behind
        else:
            assert d.rotn[far] == behind, "far dart not adjacent across travel sector"
            sector = far
        return 0 if an.left_of(z, q, sector) else 1

    # replay split bookkeeping to assign execution-time segment indices
    vis_arcs = set(others)
    splits = {}
    for owner in an.walks:
        keys = []
        for t in range(an.num_cross[owner]):
            vtx = d.dvert[d.twin[an.walks[owner][t]]]
            z = an.other_at(owner, vtx)
            if z <= d.n or (z - d.n) in vis_arcs:
                keys.append(float(t))
        splits[owner] = sorted(keys)

    new_inst = []
    for item in program:
        if item[0] == "old":
            t = item[1]
            vtx = d.dvert[d.twin[an.walks[x][t]]]
            z = an.other_at(x, vtx)
            key = float(an.pos[(z, vtx)])
            side = inst[t][3]
        else:
            _, z, key, q, k = item
            side = side_for_new(z, q, k)
        kind = "t" if z <= d.n else "a"
        zid = z if z <= d.n else z - d.n
        lst = splits[z]
        seg = bisect.bisect_left(lst, key)
        new_inst.append((kind, zid, seg, side))
        bisect.insort(lst, key)

    rank = d.boundary_rank()
    m = len(rank)

    def gap_of(key: float, extra=()):
        key = key % m
        vis = [rank[vv] for vv in d.boundary_sequence()
               if d.vkind[vv] == K_FOOT
               or (d.vkind[vv] == K_END and d._end_owner(vv) in vis_arcs)]
        vis = sorted(list(vis) + [e % m for e in extra])
        return sum(1 for r in vis if r < key) - 1

    if mv.kind == "bigon":
        start_gap, end_gap = route.start_gap, route.end_gap
    else:
        ry = rank[ey]
        away = ry + 0.5 if mv.stretch_dir == 1 else ry - 0.5
        s_vtx = an.attachment_vertex(x, 0)
        e_vtx = an.attachment_vertex(x, 1)
        if which_a == 0:
            start_gap = gap_of(away)
            end_gap = gap_of(rank[e_vtx], extra=[away])
        else:
            start_gap = gap_of(rank[s_vtx])
            end_gap = gap_of(away, extra=[rank[s_vtx]])

    new_route = ArcRoute(start_gap, tuple(new_inst), end_gap)
    return build_diagram(d.disk, ext[:-1] + [(mv.mover, new_route)])


def remove_bigon(diagram: ArcDiagram, b: Bigon) -> ArcDiagram:
    """Isotope one arc across the witnessed region, removing its crossings."""
    if b._move is None or b._token != diagram.canonical_code():
        raise StaleBigon("bigon witness does not match this diagram")
    before = diagram.real_crossing_count()
    out = _apply_move(diagram, b._move)
    expected = before - (2 if b.kind == "bigon" else 1)
    assert out.real_crossing_count() == expected, "bigon removal miscounted"
    return out


def reduce(diagram: ArcDiagram, slide_endpoints: bool = True) -> ArcDiagram:
    """Remove innermost bigons and half-bigons until none remain.

    Also pulls arcs taut against the puncture anchors, so the result is a
    normal form suitable for canonical deduplication.
    """
    d = diagram
    while True:
        moves = find_moves(d, slide_endpoints=slide_endpoints)
        if not moves:
            return d
        mv = min(moves, key=lambda m: m.key)
        d = _apply_move(d, mv)


def is_minimal(diagram: ArcDiagram, slide_endpoints: bool = True) -> bool:
    """True when no bigon or half-bigon move is available.

    Taut position against the puncture anchors is required as well, so that
    ``reduce`` is the identity exactly on minimal diagrams.
    """
    return not find_moves(diagram, slide_endpoints=slide_endpoints, first_only=True)


def intersection_number(diagram: ArcDiagram, a: int, b: int,
                        slide_endpoints: bool = True) -> int:
    """Geometric intersection number of two arcs of the diagram."""
    if a not in diagram.arc_roots:
        raise UnknownArc(a)
    if b not in diagram.arc_roots:
        raise UnknownArc(b)
    if a == b:
        return 0
    key = (min(a, b), max(a, b), slide_endpoints)
    cached = diagram._pair_cache.get(key)
    if cached is None:
        pair = diagram.subdiagram([a, b])
        red = reduce(pair, slide_endpoints=slide_endpoints)
        cached = red.arc_crossings(a, b)
        diagram._pair_cache[key] = cached
    return cached


def count_bigons(diagram: ArcDiagram, a: int, b: int) -> int:
    """Number of puncture-free bigons between subpaths of a and b.

    All embedded corner pairs are counted, not only innermost ones.
    """
    if a not in diagram.arc_roots:
        raise UnknownArc(a)
    if b not in diagram.arc_roots:
        raise UnknownArc(b)
    if a == b:
        raise UnknownArc("count_bigons needs two distinct arcs")
    d = diagram
    an = _Analyzer(d)
    x, y = d.n + a, d.n + b
    cr = an.pair_crossings(x, y)
    count = 0
    for i in range(len(cr)):
        for j in range(i + 1, len(cr)):
            u, w = cr[i], cr[j]
            iu, iw = sorted((an.pos[(x, u)], an.pos[(x, w)]))
            pu, pw = sorted((an.pos[(y, u)], an.pos[(y, w)]))
            shared = False
            for v in cr:
                if v in (u, w):
                    continue
                if iu < an.pos[(x, v)] < iw and pu < an.pos[(y, v)] < pw:
                    shared = True
                    break
            if shared:
                continue
            curve = set(an.subpath_edges(x, u, w)) | set(an.subpath_edges(y, u, w))
            reg = _region(d, curve)
            if reg is None:
                continue
            inside, _ = reg
            if not _tips_in(d, inside):
                count += 1
    return count
