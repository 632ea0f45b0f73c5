"""Good families of arcs and exhaustive search for extremal family sizes.

A family is *good* when every arc is essential, no two arcs are isotopic, and
the diagram is in minimal position.  The search enumerates reduced diagrams by
inserting one arc at a time; every reduced k-bounded family is reachable this
way because deleting an arc from a reduced good family leaves a reduced good
family.  States are deduplicated by canonical code, so each configuration is
expanded once up to the dihedral symmetries of the disk.

Search universe: routes whose pairwise arc crossings stay at most k and whose
crossings with each puncture anchor stay within ``tether_budget``.  Reported
maxima are exact over this universe when ``exhaustive`` is set; the universe
parameters are echoed in the report provenance.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field

from .diskmap import ArcDiagram, ArcRoute, OWNER_BOUNDARY, _Builder, build_diagram, new_disk
from .errors import NotGoodFamily, UnknownArc
from .moves import find_moves, intersection_number, is_minimal, reduce


# -- predicates ------------------------------------------------------------------


def _side_classes(d: ArcDiagram, cut_codes: set):
    """Face classes of the diagram cut only along the given owner codes."""
    return d.face_classes(lambda o: o != OWNER_BOUNDARY and o not in cut_codes)


def arc_side_punctures(d: ArcDiagram, a: int):
    """Punctures on the left and on the right of one arc of the diagram."""
    code = d.arc_owner_code(a)
    cls = _side_classes(d, {code})
    left = cls[d.face_of(d.arc_walk(a)[0])]
    out = {left: set(), None: set()}
    sides = {}
    for p in range(1, d.n + 1):
        c = cls[d.face_of(d.tip_dart(p))]
        sides.setdefault(c, set()).add(p)
    left_set = frozenset(sides.get(left, set()))
    right_set = frozenset(p for c, s in sides.items() if c != left for p in s)
    return left_set, right_set


def is_essential(diagram: ArcDiagram, a: int) -> bool:
    """True when both complementary regions of the arc contain a puncture."""
    left, right = arc_side_punctures(diagram, a)
    return bool(left) and bool(right)


def _disjoint_pair_isotopic(d: ArcDiagram, a: int, b: int) -> bool:
    """For arcs with no mutual crossings in d: whether they cobound an empty strip."""
    ca, cb = d.arc_owner_code(a), d.arc_owner_code(b)
    cls = _side_classes(d, {ca, cb})
    sides_a = {cls[d.face_of(w)] for w in d.arc_walk(a)} | {cls[d.face_of(d.twin[w])] for w in d.arc_walk(a)}
    sides_b = {cls[d.face_of(w)] for w in d.arc_walk(b)} | {cls[d.face_of(d.twin[w])] for w in d.arc_walk(b)}
    between = (sides_a & sides_b) - {cls[d.outer_face()]}
    if not between:
        return False
    for p in range(1, d.n + 1):
        if cls[d.face_of(d.tip_dart(p))] in between:
            return False
    return True


def arcs_isotopic(diagram: ArcDiagram, a: int, b: int,
                  slide_endpoints: bool = True) -> bool:
    """Whether two arcs of the diagram are isotopic rel the punctures."""
    if a not in diagram.arc_roots:
        raise UnknownArc(a)
    if b not in diagram.arc_roots:
        raise UnknownArc(b)
    if a == b:
        return True
    if intersection_number(diagram, a, b, slide_endpoints=slide_endpoints) != 0:
        return False
    pair = reduce(diagram.subdiagram([a, b]), slide_endpoints=slide_endpoints)
    return _disjoint_pair_isotopic(pair, a, b)


def is_good_family(diagram: ArcDiagram, slide_endpoints: bool = True) -> bool:
    """Essential arcs, pairwise non-isotopic, in minimal position."""
    arcs = diagram.arc_order
    for a in arcs:
        if not is_essential(diagram, a):
            return False
    if not is_minimal(diagram, slide_endpoints=slide_endpoints):
        return False
    for i, a in enumerate(arcs):
        for b in arcs[i + 1:]:
            if diagram.arc_crossings(a, b) == 0 and _disjoint_pair_isotopic(diagram, a, b):
                return False
    return True


# -- search ---------------------------------------------------------------------


@dataclass
class FamilyRecord:
    n: int
    k: int
    diagram: ArcDiagram
    size: int
    flags: dict
    provenance: dict

    def to_json(self) -> dict:
        return {
            "n": self.n, "k": self.k, "size": self.size,
            "flags": self.flags, "provenance": self.provenance,
            "diagram": self.diagram.to_json(),
        }


@dataclass
class SearchReport:
    n: int
    k: int
    max_size_found: int
    certificates: list
    exhaustive: bool
    nodes_explored: int
    wall_budget_hit: bool
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "n": self.n, "k": self.k,
            "max_size_found": self.max_size_found,
            "exhaustive": self.exhaustive,
            "nodes_explored": self.nodes_explored,
            "wall_budget_hit": self.wall_budget_hit,
            "provenance": self.provenance,
            "certificates": [c.to_json() for c in self.certificates],
        }


def default_tether_budget(k: int) -> int:
    return max(2, k + 1)


def candidate_routes(d: ArcDiagram, k: int, tether_budget: int, new_id: int):
    """All taut insertion routes for one more arc, within the crossing budgets.

    Immediate re-crossings of a just-split edge are pruned; they always create
    an empty bigon.  Yields ArcRoute objects.
    """
    b = _Builder.replay(d.n, list(d.routes))
    n = d.n
    counts = {}
    out = []

    def dfs(hd, inst, forbidden):
        face = b.current_face(hd)
        cur = b.downer[hd]
        for dart in face:
            o = b.downer[dart]
            if o == OWNER_BOUNDARY:
                all_gaps = b.boundary_gaps()
                out.append(ArcRoute(start_gap, tuple(inst), all_gaps.index(dart)))
        for dart in face:
            o = b.downer[dart]
            if o == OWNER_BOUNDARY or o == cur:
                continue
            cap = tether_budget if o <= n else k
            if counts.get(o, 0) >= cap:
                continue
            edge = min(dart, b.twin[dart])
            if edge in forbidden:
                continue
            walk = b.owner_walk(o)
            if dart in walk:
                seg, side = walk.index(dart), 0
            else:
                seg, side = walk.index(b.twin[dart]), 1
            kind = "t" if o <= n else "a"
            oid = o if o <= n else o - n
            counts[o] = counts.get(o, 0) + 1
            cp = b.checkpoint()
            hd2 = b.advance(hd, dart)
            # the two halves of the split edge flank the fresh crossing
            new_forbidden = {min(dart, b.twin[dart])}
            for dd in b.vertex_darts(b.twin[dart]):
                if b.downer[dd] == o and dd != b.twin[dart]:
                    new_forbidden.add(min(dd, b.twin[dd]))
            inst.append((kind, oid, seg, side))
            dfs(hd2, inst, new_forbidden)
            inst.pop()
            b.rollback(cp)
            counts[o] -= 1

    gaps = b.boundary_gaps()
    for start_gap in range(len(gaps)):
        cp = b.checkpoint()
        hd = b.begin_arc(new_id, b.boundary_gaps()[start_gap])
        dfs(hd, [], frozenset())
        b.rollback(cp)
        del b.arc_root[new_id]
    return out


def extensions(d: ArcDiagram, k: int, tether_budget: int,
               slide_endpoints: bool = True, seen: set | None = None,
               first_only: bool = False, rng: random.Random | None = None):
    """Valid good-family extensions of a reduced good family.

    Returns a list of child diagrams (one new arc inserted, still reduced and
    good, pairwise intersections at most k).
    """
    new_id = (max(d.arc_order) + 1) if d.arc_order else 1
    routes = candidate_routes(d, k, tether_budget, new_id)
    if rng is not None:
        rng.shuffle(routes)
    children = []
    local_seen = set()
    for route in routes:
        child = build_diagram(d.disk, list(d.routes) + [(new_id, route)])
        if not is_essential(child, new_id):
            continue
        code = child.canonical_code()
        if code in local_seen or (seen is not None and code in seen):
            continue
        local_seen.add(code)
        if find_moves(child, slide_endpoints=slide_endpoints,
                      first_only=True, only_owner=child.n + new_id):
            continue
        bad = False
        for a in d.arc_order:
            if child.arc_crossings(a, new_id) == 0 and _disjoint_pair_isotopic(child, a, new_id):
                bad = True
                break
        if bad:
            continue
        children.append(child)
        if first_only:
            return children
    return children


def is_maximal(diagram: ArcDiagram, k: int, tether_budget: int | None = None,
               slide_endpoints: bool = True) -> bool:
    """No further essential, pairwise non-isotopic arc fits within k crossings.

    The candidate space is the finite route universe used by the search.
    """
    if not is_good_family(diagram, slide_endpoints=slide_endpoints):
        raise NotGoodFamily("is_maximal needs a good family")
    arcs = diagram.arc_order
    for i, a in enumerate(arcs):
        for b in arcs[i + 1:]:
            if diagram.arc_crossings(a, b) > k:
                raise NotGoodFamily(f"arcs {a},{b} cross more than {k} times")
    tb = default_tether_budget(k) if tether_budget is None else tether_budget
    return not extensions(diagram, k, tb, slide_endpoints=slide_endpoints,
                          first_only=True)


def enumerate_max_family(n: int, k: int, max_size: int | None = None,
                         node_budget: int | None = None,
                         tether_budget: int | None = None,
                         slide_endpoints: bool = True,
                         seed: int = 0,
                         dedup: bool = True,
                         total_crossing_cap: int | None = None,
                         certificates_limit: int = 8,
                         checkpoint_path: str | None = None,
                         checkpoint_every: int = 500,
                         resume: str | None = None,
                         verbose: bool = False) -> SearchReport:
    """Depth-first enumeration of good families with pairwise at most k
    crossings, reporting the largest family found.

    With ``dedup`` disabled the search visits every construction order (the
    brute-force oracle used by the tests).  ``total_crossing_cap`` bounds the
    arc/arc crossings of explored states.
    """
    tb = default_tether_budget(k) if tether_budget is None else tether_budget
    rng = random.Random(seed) if seed else None
    provenance = {
        "tether_budget": tb, "slide_endpoints": slide_endpoints,
        "seed": seed, "dedup": dedup, "max_size": max_size,
        "node_budget": node_budget, "total_crossing_cap": total_crossing_cap,
    }

    if resume:
        with open(_checkpoint_file(resume)) as fh:
            doc = json.load(fh)
        stack = [ArcDiagram.from_json(e) for e in doc["frontier"]]
        best = doc["max_size_found"]
        certs = [ArcDiagram.from_json(c["diagram"]) for c in doc["certificates"]]
        nodes = doc["nodes_explored"]
    else:
        stack = [build_diagram(new_disk(n), [])]
        best = 0
        certs = []
        nodes = 0

    seen: set = set()
    truncated = False

    def note_state(d):
        nonlocal best, certs
        size = len(d.arc_order)
        if size > best:
            best = size
            certs = [d]
        elif size == best and size > 0 and len(certs) < certificates_limit:
            if all(d.canonical_code() != c.canonical_code() for c in certs):
                certs.append(d)

    while stack:
        if node_budget is not None and nodes >= node_budget:
            truncated = True
            break
        d = stack.pop()
        nodes += 1
        note_state(d)
        if verbose and nodes % 200 == 0:
            print(f"  explored {nodes} states, best {best}, frontier {len(stack)}",
                  flush=True)
        if max_size is not None and len(d.arc_order) >= max_size:
            continue
        if total_crossing_cap is not None and d.real_crossing_count() > total_crossing_cap:
            continue
        kids = extensions(d, k, tb, slide_endpoints=slide_endpoints,
                          seen=seen if dedup else None, rng=rng)
        for child in kids:
            if total_crossing_cap is not None and child.real_crossing_count() > total_crossing_cap:
                continue
            if dedup:
                seen.add(child.canonical_code())
            stack.append(child)
        if checkpoint_path and nodes % checkpoint_every == 0:
            _write_checkpoint(checkpoint_path, n, k, best, certs, nodes, stack, provenance)

    exhaustive = not truncated
    records = [
        FamilyRecord(
            n=n, k=k, diagram=c, size=len(c.arc_order),
            flags={"good": True, "minimal_position": True,
                   "maximal": True if (exhaustive and len(c.arc_order) == best and best > 0) else None},
            provenance=provenance,
        )
        for c in certs
    ]
    report = SearchReport(
        n=n, k=k, max_size_found=best, certificates=records,
        exhaustive=exhaustive, nodes_explored=nodes,
        wall_budget_hit=truncated, provenance=provenance,
    )
    if checkpoint_path:
        _write_checkpoint(checkpoint_path, n, k, best, certs, nodes,
                          stack if truncated else [], provenance)
    return report


def _checkpoint_file(path: str) -> str:
    cache = os.environ.get("ARCWORK_CACHE_DIR")
    if cache and not os.path.isabs(path):
        return os.path.join(cache, path)
    return path


def _write_checkpoint(path, n, k, best, certs, nodes, frontier, provenance):
    doc = {
        "n": n, "k": k, "max_size_found": best,
        "exhaustive": False, "nodes_explored": nodes,
        "wall_budget_hit": True, "provenance": provenance,
        "certificates": [
            {"n": n, "k": k, "size": len(c.arc_order), "flags": {},
             "provenance": provenance, "diagram": c.to_json()}
            for c in certs
        ],
        "frontier": [d.to_json() for d in frontier],
    }
    target = _checkpoint_file(path)
    tmp = target + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, target)
