"""Combinatorial model of arc systems on an n-punctured disk.

A diagram is a planar combinatorial map (darts, a twin involution and a
counterclockwise rotation at every vertex).  The boundary circle is part of
the map.  Each puncture is anchored by a *tether*: an internal path from a
foot vertex on the boundary to a degree-one tip vertex marking the puncture.
Arcs are inserted one at a time by routes; a route records the boundary gap
where the arc starts, the ordered list of edges it crosses (segments of
earlier arcs or of tethers, with a side bit), and the gap where it ends.
Because arcs record their crossings with the tethers, a route determines the
arc up to isotopy and the whole diagram is reproducible from its routes.

Face convention: faces are orbits of ``d -> rot^-1(twin(d))`` and lie on the
left of each of their darts; interior faces of the disk are traversed
counterclockwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import (
    InvalidPunctureCount,
    MalformedDocument,
    NonRealizableRoute,
    SelfCrossing,
    UnknownArc,
)

# vertex kinds (internal)
K_FOOT = 0      # tether foot on the boundary, degree 3
K_TIP = 1       # tether tip, degree 1, marks a puncture
K_END = 2       # arc endpoint on the boundary, degree 3
K_CROSS = 3     # arc/arc crossing, degree 4
K_TCROSS = 4    # arc/tether crossing, degree 4
K_HEAD = 5      # provisional head while an arc is being drawn

PUBLIC_KIND = {
    K_FOOT: "boundary_subdivision",
    K_TIP: "puncture_tip",
    K_END: "boundary_endpoint",
    K_CROSS: "crossing",
    K_TCROSS: "tether_crossing",
}

OWNER_BOUNDARY = 0


@dataclass(frozen=True)
class PuncturedDisk:
    """The disk D_n with punctures labeled 1..n; boundary oriented ccw."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise InvalidPunctureCount(f"need at least one puncture, got {self.n!r}")


def new_disk(n: int) -> PuncturedDisk:
    """Return the model of D_n with no arcs."""
    return PuncturedDisk(n)


@dataclass(frozen=True)
class ArcRoute:
    """Construction recipe for one arc.

    ``crossings`` is a tuple of instructions ``(kind, owner, seg, side)`` where
    ``kind`` is ``"a"`` (arc) or ``"t"`` (tether), ``owner`` the arc id or
    puncture label, ``seg`` the index of the crossed segment along the owner at
    execution time, and ``side`` 0 when the arc crosses coming from the owner's
    left (owner direction: arc start to end, tether foot to tip).
    """

    start_gap: int
    crossings: tuple
    end_gap: int

    def to_json(self) -> list:
        return [self.start_gap, [list(c) for c in self.crossings], self.end_gap]

    @staticmethod
    def from_json(obj) -> "ArcRoute":
        try:
            start, crossings, end = obj
            inst = []
            for c in crossings:
                kind, owner, seg, side = c
                if kind not in ("a", "t") or side not in (0, 1):
                    raise ValueError
                inst.append((kind, int(owner), int(seg), int(side)))
            return ArcRoute(int(start), tuple(inst), int(end))
        except (ValueError, TypeError) as exc:
            raise MalformedDocument(f"bad route {obj!r}") from exc


class _Builder:
    """Mutable journaled half-edge map used to build and probe diagrams."""

    def __init__(self, n: int):
        self.n = n
        # dart arrays
        self.twin: list[int] = []
        self.rotn: list[int] = []
        self.rotp: list[int] = []
        self.dvert: list[int] = []
        self.downer: list[int] = []
        self.dalive: list[bool] = []
        # vertex arrays
        self.vkind: list[int] = []
        self.valive: list[bool] = []
        self._log: list = []
        self.arc_order: list[int] = []     # arc ids in insertion order
        self.arc_root: dict[int, int] = {} # arc id -> first dart at start endpoint
        self.tether_root: list[int] = []   # puncture label-1 -> dart at foot
        self._init_disk()

    # -- journal ------------------------------------------------------------

    def _set(self, arr: list, i: int, val):
        self._log.append((arr, i, arr[i]))
        arr[i] = val

    def _append(self, arr: list, val):
        self._log.append((arr, None, None))
        arr.append(val)

    def checkpoint(self) -> int:
        return len(self._log)

    def rollback(self, cp: int):
        while len(self._log) > cp:
            arr, i, old = self._log.pop()
            if i is None:
                arr.pop()
            else:
                arr[i] = old

    # -- primitives ----------------------------------------------------------

    def _new_dart(self, v: int, owner: int) -> int:
        d = len(self.twin)
        self._append(self.twin, -1)
        self._append(self.rotn, -1)
        self._append(self.rotp, -1)
        self._append(self.dvert, v)
        self._append(self.downer, owner)
        self._append(self.dalive, True)
        return d

    def _new_vertex(self, kind: int) -> int:
        v = len(self.vkind)
        self._append(self.vkind, kind)
        self._append(self.valive, True)
        return v

    def _tie(self, a: int, b: int):
        self._set(self.twin, a, b)
        self._set(self.twin, b, a)

    def _cycle(self, darts: Sequence[int]):
        k = len(darts)
        for i, d in enumerate(darts):
            self._set(self.rotn, d, darts[(i + 1) % k])
            self._set(self.rotp, d, darts[(i - 1) % k])

    def _insert_after(self, e: int, d: int):
        nxt = self.rotn[e]
        self._set(self.rotn, e, d)
        self._set(self.rotn, d, nxt)
        self._set(self.rotp, d, e)
        self._set(self.rotp, nxt, d)

    def _kill_dart(self, d: int):
        self._set(self.dalive, d, False)

    def _kill_vertex(self, v: int):
        self._set(self.valive, v, False)

    def _init_disk(self):
        n = self.n
        feet = [self._new_vertex(K_FOOT) for _ in range(n)]
        tips = [self._new_vertex(K_TIP) for _ in range(n)]
        us, ws, ss, sps = [], [], [], []
        for i in range(n):
            us.append(self._new_dart(feet[i], OWNER_BOUNDARY))
            ws.append(self._new_dart(feet[(i + 1) % n], OWNER_BOUNDARY))
            ss.append(self._new_dart(feet[i], i + 1))
            sps.append(self._new_dart(tips[i], i + 1))
        for i in range(n):
            self._tie(us[i], ws[i])
            self._tie(ss[i], sps[i])
            self._cycle([sps[i]])
        for i in range(n):
            # ccw at a foot: forward boundary, tether, backward boundary
            self._cycle([us[i], ss[i], ws[(i - 1) % n]])
        self.boundary_root = us[0]
        self.tether_root = ss

    # -- structure queries ----------------------------------------------------

    def face_walk(self, d0: int) -> list[int]:
        """Darts of the face containing d0, in order (face on the left)."""
        out = [d0]
        d = self.rotp[self.twin[d0]]
        while d != d0:
            out.append(d)
            d = self.rotp[self.twin[d]]
        return out

    def vertex_darts(self, d0: int) -> list[int]:
        out = [d0]
        d = self.rotn[d0]
        while d != d0:
            out.append(d)
            d = self.rotn[d]
        return out

    def owner_walk(self, owner: int, exclude_head: bool = True) -> list[int]:
        """Forward darts along a tether or completed arc, in owner order."""
        if 1 <= owner <= self.n:
            d = self.tether_root[owner - 1]
        else:
            d = self.arc_root[owner - self.n]
        out = []
        while True:
            out.append(d)
            t = self.twin[d]
            v = self.dvert[t]
            k = self.vkind[v]
            if k in (K_TIP, K_END, K_FOOT) or (exclude_head and k == K_HEAD):
                return out
            d = self.rotn[self.rotn[t]]

    def boundary_vertices(self) -> list[int]:
        """Boundary vertices in ccw order starting at foot 1."""
        out = []
        d = self.boundary_root
        while True:
            out.append(self.dvert[d])
            d = self.rotn[self.twin[d]]
            if d == self.boundary_root:
                return out

    def boundary_gaps(self) -> list[int]:
        """Forward darts of the boundary edges, ccw from foot 1."""
        out = []
        d = self.boundary_root
        while True:
            out.append(d)
            d = self.rotn[self.twin[d]]
            if d == self.boundary_root:
                return out

    # -- arc insertion ---------------------------------------------------------

    def _subdivide(self, h: int, kind: int):
        """Split edge(h) at a new vertex; returns (X, back dart, forward dart).

        The forward dart continues h's direction.
        """
        h2 = self.twin[h]
        o = self.downer[h]
        x = self._new_vertex(kind)
        xb = self._new_dart(x, o)
        xf = self._new_dart(x, o)
        self._tie(h, xb)
        self._tie(xf, h2)
        self._cycle([xf, xb])
        return x, xb, xf

    def begin_arc(self, arc_id: int, gap_dart: int) -> int:
        """Insert the start endpoint on a boundary edge; returns the head dart."""
        owner = self.n + arc_id
        e, xb, xf = self._subdivide(gap_dart, K_END)
        c_out = self._new_dart(e, owner)
        self._insert_after(xf, c_out)
        head = self._new_vertex(K_HEAD)
        hd = self._new_dart(head, owner)
        self._tie(c_out, hd)
        self._cycle([hd])
        self.arc_root[arc_id] = c_out
        return hd

    def advance(self, hd: int, h: int) -> int:
        """Cross edge(h) from its left; returns the new head dart."""
        owner = self.downer[hd]
        kind = K_TCROSS if 1 <= self.downer[h] <= self.n else K_CROSS
        x, xb, xf = self._subdivide(h, kind)
        c_prev = self.twin[hd]
        c_in = self._new_dart(x, owner)
        c_out = self._new_dart(x, owner)
        self._tie(c_prev, c_in)
        head = self._new_vertex(K_HEAD)
        hd2 = self._new_dart(head, owner)
        self._tie(c_out, hd2)
        self._cycle([xf, c_in, xb, c_out])
        self._cycle([hd2])
        self._kill_dart(hd)
        self._kill_vertex(self.dvert[hd])
        return hd2

    def finish(self, hd: int, gap_dart: int):
        """Insert the end endpoint on a boundary edge and close the arc."""
        e, xb, xf = self._subdivide(gap_dart, K_END)
        c_prev = self.twin[hd]
        c_in = self._new_dart(e, self.downer[hd])
        self._insert_after(xf, c_in)
        self._tie(c_prev, c_in)
        self._kill_dart(hd)
        self._kill_vertex(self.dvert[hd])

    def current_face(self, hd: int) -> list[int]:
        """Darts of the region the pending arc is travelling through."""
        return self.face_walk(hd)

    def resolve_instruction(self, inst, cur_arc: int, face_darts: set[int]) -> int:
        kind, owner_id, seg, side = inst
        if kind == "t":
            if not 1 <= owner_id <= self.n:
                raise NonRealizableRoute(f"no tether {owner_id}")
            owner = owner_id
        else:
            if owner_id == cur_arc:
                raise SelfCrossing(f"arc {cur_arc} cannot cross itself")
            if owner_id not in self.arc_root:
                raise NonRealizableRoute(f"no arc {owner_id} to cross")
            owner = self.n + owner_id
        walk = self.owner_walk(owner)
        if not 0 <= seg < len(walk):
            raise NonRealizableRoute(f"owner {kind}{owner_id} has no segment {seg}")
        f = walk[seg]
        h = f if side == 0 else self.twin[f]
        if h not in face_darts:
            raise NonRealizableRoute(
                f"segment {kind}{owner_id}[{seg}] side {side} does not border the current region"
            )
        return h

    def insert_route(self, arc_id: int, route: ArcRoute):
        gaps = self.boundary_gaps()
        if not 0 <= route.start_gap < len(gaps):
            raise NonRealizableRoute(f"no boundary gap {route.start_gap}")
        hd = self.begin_arc(arc_id, gaps[route.start_gap])
        for inst in route.crossings:
            face = set(self.current_face(hd))
            h = self.resolve_instruction(inst, arc_id, face)
            hd = self.advance(hd, h)
        gaps = self.boundary_gaps()
        if not 0 <= route.end_gap < len(gaps):
            raise NonRealizableRoute(f"no boundary gap {route.end_gap}")
        end_dart = gaps[route.end_gap]
        if end_dart not in set(self.current_face(hd)):
            raise NonRealizableRoute(
                f"end gap {route.end_gap} does not border the final region"
            )
        self.finish(hd, end_dart)
        self.arc_order.append(arc_id)

    # -- freezing ---------------------------------------------------------------

    def freeze(self, routes: Sequence[tuple[int, ArcRoute]], check: bool = True) -> "ArcDiagram":
        live = [d for d in range(len(self.twin)) if self.dalive[d]]
        dmap = {d: i for i, d in enumerate(live)}
        vlive = sorted({self.dvert[d] for d in live})
        vmap = {v: i for i, v in enumerate(vlive)}
        twin = tuple(dmap[self.twin[d]] for d in live)
        rotn = tuple(dmap[self.rotn[d]] for d in live)
        rotp = tuple(dmap[self.rotp[d]] for d in live)
        dvert = tuple(vmap[self.dvert[d]] for d in live)
        downer = tuple(self.downer[d] for d in live)
        vkind = tuple(self.vkind[v] for v in vlive)
        diag = ArcDiagram(
            n=self.n,
            twin=twin,
            rotn=rotn,
            rotp=rotp,
            dvert=dvert,
            downer=downer,
            vkind=vkind,
            boundary_root=dmap[self.boundary_root],
            tether_roots=tuple(dmap[d] for d in self.tether_root),
            arc_roots={a: dmap[d] for a, d in self.arc_root.items()},
            arc_order=tuple(self.arc_order),
            routes=tuple(routes),
        )
        if check:
            diag.validate()
        return diag

    @staticmethod
    def replay(n: int, routes: Sequence[tuple[int, ArcRoute]]) -> "_Builder":
        b = _Builder(n)
        for arc_id, route in routes:
            b.insert_route(arc_id, route)
        return b


class ArcDiagram:
    """Immutable arc diagram on D_n.  Construct via :func:`build_diagram`."""

    def __init__(self, n, twin, rotn, rotp, dvert, downer, vkind,
                 boundary_root, tether_roots, arc_roots, arc_order, routes):
        self.n = n
        self.disk = PuncturedDisk(n)
        self.twin = twin
        self.rotn = rotn
        self.rotp = rotp
        self.dvert = dvert
        self.downer = downer
        self.vkind = vkind
        self.boundary_root = boundary_root
        self.tether_roots = tether_roots
        self.arc_roots = arc_roots
        self.arc_order = arc_order
        self.routes = routes
        self._faces_cache = None
        self._walks_cache = {}
        self._canon_cache = None
        self._pair_cache = {}

    # -- basic accessors -----------------------------------------------------

    @property
    def num_darts(self) -> int:
        return len(self.twin)

    @property
    def arcs(self) -> tuple:
        return self.arc_order

    def owner_of(self, dart: int):
        o = self.downer[dart]
        if o == OWNER_BOUNDARY:
            return ("b", 0)
        if o <= self.n:
            return ("t", o)
        return ("a", o - self.n)

    def arc_owner_code(self, arc_id: int) -> int:
        if arc_id not in self.arc_roots:
            raise UnknownArc(arc_id)
        return self.n + arc_id

    def vertex_kind_public(self, v: int) -> str:
        return PUBLIC_KIND[self.vkind[v]]

    def vertex_darts(self, d0: int) -> list[int]:
        out = [d0]
        d = self.rotn[d0]
        while d != d0:
            out.append(d)
            d = self.rotn[d]
        return out

    def degree(self, v: int) -> int:
        return sum(1 for d in range(self.num_darts) if self.dvert[d] == v)

    # -- faces -----------------------------------------------------------------

    def _fp(self, d: int) -> int:
        return self.rotp[self.twin[d]]

    def faces(self):
        """(face_of, list of face orbits, outer face id)."""
        if self._faces_cache is None:
            nd = self.num_darts
            face_of = [-1] * nd
            orbits = []
            for d0 in range(nd):
                if face_of[d0] >= 0:
                    continue
                fid = len(orbits)
                orbit = []
                d = d0
                while face_of[d] < 0:
                    face_of[d] = fid
                    orbit.append(d)
                    d = self._fp(d)
                orbits.append(tuple(orbit))
            outer = face_of[self.twin[self.boundary_root]]
            self._faces_cache = (tuple(face_of), tuple(orbits), outer)
        return self._faces_cache

    def face_of(self, d: int) -> int:
        return self.faces()[0][d]

    def sector_face(self, d: int) -> int:
        """Face of the angular sector between d and rotn[d] at d's vertex."""
        return self.face_of(d)

    def outer_face(self) -> int:
        return self.faces()[2]

    def tip_vertex(self, puncture: int) -> int:
        return self.dvert[self.tip_dart(puncture)]

    def tip_dart(self, puncture: int) -> int:
        return self.twin[self.owner_walk(puncture)[-1]]

    def face_classes(self, merge_owner) -> list[int]:
        """Union-find over faces, merging across edges whose owner satisfies
        the predicate; returns class representative per face id."""
        _, orbits, _ = self.faces()
        parent = list(range(len(orbits)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        face_of = self.faces()[0]
        for d in range(self.num_darts):
            if d < self.twin[d] and merge_owner(self.downer[d]):
                a, b = find(face_of[d]), find(face_of[self.twin[d]])
                if a != b:
                    parent[a] = b
        return [find(f) for f in range(len(orbits))]

    def real_faces(self):
        """Faces of the arc arrangement: map faces merged across tether edges.

        Returns (class_of_face, {class: set of punctures}, outer_class).
        """
        cls = self.face_classes(lambda o: 1 <= o <= self.n)
        punct = {}
        for p in range(1, self.n + 1):
            c = cls[self.face_of(self.tip_dart(p))]
            punct.setdefault(c, set()).add(p)
        outer = cls[self.outer_face()]
        return cls, punct, outer

    def regions(self) -> list[tuple[int, frozenset]]:
        """Internal regions of the arc arrangement with their puncture sets."""
        cls, punct, outer = self.real_faces()
        internal = sorted(set(cls) - {outer})
        return [(c, frozenset(punct.get(c, set()))) for c in internal]

    # -- owner walks and crossings ----------------------------------------------

    def owner_walk(self, owner: int) -> tuple:
        w = self._walks_cache.get(owner)
        if w is None:
            if 1 <= owner <= self.n:
                d = self.tether_roots[owner - 1]
            else:
                d = self.arc_roots[owner - self.n]
            out = []
            while True:
                out.append(d)
                t = self.twin[d]
                v = self.dvert[t]
                if self.vkind[v] in (K_TIP, K_END, K_FOOT):
                    break
                d = self.rotn[self.rotn[t]]
            w = tuple(out)
            self._walks_cache[owner] = w
        return w

    def arc_walk(self, arc_id: int) -> tuple:
        return self.owner_walk(self.arc_owner_code(arc_id))

    def crossing_vertices(self, owner: int) -> list[int]:
        """Crossing vertices along the owner, in owner order."""
        walk = self.owner_walk(owner)
        return [self.dvert[self.twin[d]] for d in walk[:-1]]

    def crossing_partner(self, v: int, owner: int) -> int:
        """The owner code of the other strand through crossing vertex v."""
        for d in range(self.num_darts):
            if self.dvert[d] == v and self.downer[d] != owner:
                return self.downer[d]
        raise ValueError(f"vertex {v} has no second strand")

    def arc_crossings(self, a: int, b: int) -> int:
        """Number of crossing vertices shared by arcs a and b in this diagram."""
        ca = self.arc_owner_code(a)
        cb = self.arc_owner_code(b)
        if a == b:
            return 0
        count = 0
        for v in self.crossing_vertices(ca):
            if self.crossing_partner(v, ca) == cb:
                count += 1
        return count

    def real_crossing_count(self) -> int:
        """Total number of arc/arc crossings."""
        return sum(1 for v in range(len(self.vkind)) if self.vkind[v] == K_CROSS)

    def map_crossing_count(self) -> int:
        return sum(1 for v in range(len(self.vkind)) if self.vkind[v] in (K_CROSS, K_TCROSS))

    def endpoints(self, arc_id: int) -> tuple[int, int]:
        """(start vertex, end vertex) along the stored walk direction."""
        walk = self.arc_walk(arc_id)
        return self.dvert[walk[0]], self.dvert[self.twin[walk[-1]]]

    def boundary_sequence(self) -> list[int]:
        out = []
        d = self.boundary_root
        while True:
            out.append(self.dvert[d])
            d = self.rotn[self.twin[d]]
            if d == self.boundary_root:
                return out

    def boundary_gap_darts(self) -> list[int]:
        out = []
        d = self.boundary_root
        while True:
            out.append(d)
            d = self.rotn[self.twin[d]]
            if d == self.boundary_root:
                return out

    # -- validation ---------------------------------------------------------------

    def validate(self):
        nd = self.num_darts
        assert nd % 2 == 0
        for d in range(nd):
            t = self.twin[d]
            assert t != d and self.twin[t] == d, "twin must be a fixed-point-free involution"
            assert self.rotp[self.rotn[d]] == d, "rotation links inconsistent"
            assert self.dvert[d] == self.dvert[self.rotn[d]], "rotation mixes vertices"
            assert self.downer[d] == self.downer[t], "edge darts disagree on owner"
        nv = len(self.vkind)
        deg = [0] * nv
        for d in range(nd):
            deg[self.dvert[d]] += 1
        for v in range(nv):
            k = self.vkind[v]
            if k == K_TIP:
                assert deg[v] == 1
            elif k in (K_FOOT, K_END):
                assert deg[v] == 3, f"boundary vertex {v} has degree {deg[v]}"
            elif k in (K_CROSS, K_TCROSS):
                assert deg[v] == 4
                # the two strands alternate in the rotation
                d0 = next(d for d in range(nd) if self.dvert[d] == v)
                ring = self.vertex_darts(d0)
                assert self.downer[ring[0]] == self.downer[ring[2]]
                assert self.downer[ring[1]] == self.downer[ring[3]]
                assert self.downer[ring[0]] != self.downer[ring[1]]
        # single boundary cycle through all feet and endpoints
        expected = sum(1 for v in range(nv) if self.vkind[v] in (K_FOOT, K_END))
        assert len(self.boundary_sequence()) == expected
        # Euler relation for the sphere: V - E + F = 2 (outer face included)
        _, orbits, _ = self.faces()
        assert nv - nd // 2 + len(orbits) == 2, "map is not planar"
        # arcs are embedded simple paths between distinct boundary endpoints
        for a in self.arc_order:
            walk = self.arc_walk(a)
            seen = set()
            for d in walk:
                v = self.dvert[d]
                assert v not in seen, f"arc {a} revisits vertex {v}"
                seen.add(v)
            assert self.vkind[self.dvert[walk[0]]] == K_END
            assert self.vkind[self.dvert[self.twin[walk[-1]]]] == K_END
        # every puncture sits in exactly one internal region
        cls, punct, outer = self.real_faces()
        held = [p for ps in punct.values() for p in ps]
        assert sorted(held) == list(range(1, self.n + 1))
        assert outer not in punct

    # -- canonical form ---------------------------------------------------------

    _KTAG = {K_FOOT: 1, K_TIP: 2, K_END: 3, K_CROSS: 4, K_TCROSS: 5}

    def _owner_tag(self, d: int) -> int:
        o = self.downer[d]
        if o == OWNER_BOUNDARY:
            return 0
        return 1 if o <= self.n else 2

    def _trace(self, start: int, reverse: bool) -> tuple:
        rot = self.rotp if reverse else self.rotn
        index = {start: 0}
        order = [start]
        seen_vertex = set()
        out = []
        pos = 0
        while pos < len(order):
            d = order[pos]
            pos += 1
            v = self.dvert[d]
            if v in seen_vertex:
                continue
            seen_vertex.add(v)
            ring = [d]
            e = rot[d]
            while e != d:
                ring.append(e)
                e = rot[e]
            out.append(-self._KTAG[self.vkind[v]])
            out.append(len(ring))
            for e in ring:
                out.append(self._owner_tag(e))
                t = self.twin[e]
                got = index.get(t)
                if got is None:
                    index[t] = len(order)
                    order.append(t)
                    out.append(-1)
                else:
                    out.append(got)
        return tuple(out)

    def canonical_code(self) -> bytes:
        """Complete isomorphism invariant of the diagram.

        Invariant under relabeling of arcs and punctures and under the
        dihedral symmetries of the boundary circle (the trace is minimized
        over all boundary starting darts and both orientations).
        """
        if self._canon_cache is None:
            best = None
            for d in range(self.num_darts):
                if self.downer[d] != OWNER_BOUNDARY:
                    continue
                for rev in (False, True):
                    t = self._trace(d, rev)
                    if best is None or t < best:
                        best = t
            self._canon_cache = repr(best).encode()
        return self._canon_cache

    # -- route extraction ----------------------------------------------------------

    def boundary_rank(self) -> dict[int, int]:
        """vertex -> ccw position along the boundary, foot 1 first."""
        return {v: i for i, v in enumerate(self.boundary_sequence())}

    def canonical_direction(self, arc_id: int) -> bool:
        """True when the stored walk already starts at the endpoint with the
        smaller boundary rank."""
        rank = self.boundary_rank()
        s, e = self.endpoints(arc_id)
        return rank[s] < rank[e]

    def oriented_walk(self, owner: int, forward: bool = True) -> tuple:
        walk = self.owner_walk(owner)
        if forward:
            return walk
        return tuple(self.twin[d] for d in reversed(walk))

    def extract_routes(self, order: Optional[Sequence[int]] = None):
        """Recompute construction routes for the arcs listed in ``order``.

        Arcs not listed are treated as absent; the routes returned rebuild the
        sub-diagram containing exactly those arcs (and the tethers).  Arc
        directions are normalized to start at the endpoint of smaller
        boundary rank.
        """
        if order is None:
            order = list(self.arc_order)
        for a in order:
            if a not in self.arc_roots:
                raise UnknownArc(a)
        rank = self.boundary_rank()
        kept = set(order)

        # fixed normalized direction per arc
        direction = {a: self.canonical_direction(a) for a in self.arc_order}
        walks = {}
        for a in self.arc_order:
            walks[self.n + a] = self.oriented_walk(self.n + a, direction[a])
        for t in range(1, self.n + 1):
            walks[t] = self.owner_walk(t)

        # crossing positions per owner in normalized direction
        pos = {}
        partner = {}
        for owner, walk in walks.items():
            for i, d in enumerate(walk[:-1]):
                v = self.dvert[self.twin[d]]
                pos[(owner, v)] = i
                partner.setdefault(v, []).append(owner)

        def side_bit(owner_o: int, owner_j: int, v: int) -> int:
            """0 when arc j crossed o coming from o's left."""
            p = pos[(owner_o, v)]
            walk_o = walks[owner_o]
            o_fwd = walk_o[p + 1]
            pj = pos[(owner_j, v)]
            j_in = self.twin[walks[owner_j][pj]]
            if self.rotn[o_fwd] == j_in:
                return 0
            j_out = walks[owner_j][pj + 1]
            assert self.rotn[o_fwd] == j_out, "crossing rotation malformed"
            return 1

        # endpoints of each arc in normalized direction
        ends = {}
        for a in self.arc_order:
            s, e = self.endpoints(a)
            ends[a] = (s, e) if direction[a] else (e, s)

        def gap_index(target_rank: float, visible_ranks: list[int]) -> int:
            count = sum(1 for r in visible_ranks if r < target_rank)
            return count - 1

        routes = []
        visible_arcs: set[int] = set()
        for a in order:
            code_a = self.n + a
            vis_ranks = [rank[v] for v in self.boundary_sequence()
                         if self.vkind[v] == K_FOOT
                         or (self.vkind[v] == K_END and self._end_owner(v) in visible_arcs)]
            s_vertex, e_vertex = ends[a]
            start_gap = gap_index(rank[s_vertex], vis_ranks)
            end_gap = gap_index(rank[e_vertex], sorted(vis_ranks + [rank[s_vertex]]))
            inst = []
            walk = walks[code_a]
            for i, d in enumerate(walk[:-1]):
                v = self.dvert[self.twin[d]]
                others = [o for o in partner[v] if o != code_a]
                o = others[0]
                if o > self.n and (o - self.n) not in visible_arcs:
                    continue
                seg = 0
                for w in range(pos[(o, v)]):
                    y = self.dvert[self.twin[walks[o][w]]]
                    zs = [z for z in partner[y] if z != o]
                    z = zs[0]
                    if z <= self.n or (z - self.n) in visible_arcs:
                        seg += 1
                    elif z == code_a and pos[(code_a, y)] < i:
                        seg += 1
                kind = "t" if o <= self.n else "a"
                oid = o if o <= self.n else o - self.n
                inst.append((kind, oid, seg, side_bit(o, code_a, v)))
            routes.append((a, ArcRoute(start_gap, tuple(inst), end_gap)))
            visible_arcs.add(a)
        return routes

    def _end_owner(self, v: int) -> int:
        """Arc id owning endpoint vertex v."""
        for d in range(self.num_darts):
            if self.dvert[d] == v and self.downer[d] > self.n:
                return self.downer[d] - self.n
        raise ValueError(f"vertex {v} is not an arc endpoint")

    # -- derived diagrams --------------------------------------------------------

    def subdiagram(self, keep: Iterable[int]) -> "ArcDiagram":
        keep = set(keep)
        for a in keep:
            if a not in self.arc_roots:
                raise UnknownArc(a)
        order = [a for a in self.arc_order if a in keep]
        return build_diagram(self.disk, self.extract_routes(order))

    def delete_arc(self, arc_id: int) -> "ArcDiagram":
        if arc_id not in self.arc_roots:
            raise UnknownArc(arc_id)
        return self.subdiagram(a for a in self.arc_order if a != arc_id)

    def mirrored(self) -> "ArcDiagram":
        """The reflected diagram, with puncture labels permuted accordingly."""
        n = self.n
        relabel = {1: 1} | {i: n + 2 - i for i in range(2, n + 1)}
        mapped = []
        for o in self.downer:
            if o == OWNER_BOUNDARY or o > n:
                mapped.append(o)
            else:
                mapped.append(relabel[o])
        tether_roots = [0] * n
        for i in range(1, n + 1):
            tether_roots[relabel[i] - 1] = self.tether_roots[i - 1]
        # foot 1 keeps its label; the new ccw boundary root is the old backward
        # dart at foot 1
        foot1 = self.dvert[self.boundary_root]
        new_root = next(
            d for d in range(self.num_darts)
            if self.dvert[d] == foot1 and self.downer[d] == OWNER_BOUNDARY
            and d != self.boundary_root
        )
        ghost = ArcDiagram(
            n=n,
            twin=self.twin,
            rotn=self.rotp,
            rotp=self.rotn,
            dvert=self.dvert,
            downer=tuple(mapped),
            vkind=self.vkind,
            boundary_root=new_root,
            tether_roots=tuple(tether_roots),
            arc_roots=dict(self.arc_roots),
            arc_order=self.arc_order,
            routes=(),
        )
        ghost.validate()
        return build_diagram(self.disk, ghost.extract_routes())

    # -- serialization -------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "arcs": [
                {"id": a, "route": r.to_json()} for a, r in self.routes
            ],
        }

    @staticmethod
    def from_json(doc: dict) -> "ArcDiagram":
        if not isinstance(doc, dict):
            raise MalformedDocument("diagram document must be an object")
        allowed = {"n", "arcs", "labels"}
        unknown = set(doc) - allowed
        if unknown:
            raise MalformedDocument(f"unknown fields {sorted(unknown)}")
        if "n" not in doc or "arcs" not in doc:
            raise MalformedDocument("diagram document needs 'n' and 'arcs'")
        try:
            n = int(doc["n"])
        except (TypeError, ValueError) as exc:
            raise MalformedDocument("'n' must be an integer") from exc
        routes = []
        seen = set()
        if not isinstance(doc["arcs"], list):
            raise MalformedDocument("'arcs' must be an array")
        for entry in doc["arcs"]:
            if not isinstance(entry, dict) or set(entry) - {"id", "route"}:
                raise MalformedDocument(f"bad arc entry {entry!r}")
            try:
                aid = int(entry["id"])
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedDocument("arc entries need an integer 'id'") from exc
            if aid < 1 or aid in seen:
                raise MalformedDocument(f"bad or duplicate arc id {aid}")
            seen.add(aid)
            routes.append((aid, ArcRoute.from_json(entry.get("route"))))
        return build_diagram(new_disk(n), routes)

    def __repr__(self):
        return (f"ArcDiagram(n={self.n}, arcs={len(self.arc_order)}, "
                f"crossings={self.real_crossing_count()})")


def build_diagram(disk: PuncturedDisk, routes) -> ArcDiagram:
    """Build a diagram by inserting the given (arc id, route) pairs in order.

    Plain ``ArcRoute`` items are also accepted and get ids 1, 2, ...
    """
    normalized = []
    next_id = 1
    for item in routes:
        if isinstance(item, ArcRoute):
            normalized.append((next_id, item))
        else:
            aid, route = item
            normalized.append((int(aid), route))
        next_id = max(next_id, normalized[-1][0]) + 1
    b = _Builder.replay(disk.n, normalized)
    return b.freeze(normalized)
