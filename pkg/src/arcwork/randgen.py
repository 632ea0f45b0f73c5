"""Seeded random arc diagrams, used by property tests and smoke runs."""

from __future__ import annotations

import random

from .diskmap import ArcDiagram, ArcRoute, OWNER_BOUNDARY, _Builder, new_disk, build_diagram


def random_diagram(n: int, arcs: int, max_crossings: int = 8,
                   seed: int = 0, cross_bias: float = 0.45) -> ArcDiagram:
    """A random diagram on D_n with the given number of arcs.

    The total number of crossings (tether crossings included) never exceeds
    ``max_crossings``.  Deterministic for a fixed seed.
    """
    rng = random.Random(seed)
    routes = []
    budget = max_crossings

    for arc_id in range(1, arcs + 1):
        for _attempt in range(60):
            b = _Builder.replay(n, routes)
            gaps = b.boundary_gaps()
            start = rng.randrange(len(gaps))
            hd = b.begin_arc(arc_id, gaps[start])
            inst = []
            ok = False
            for _step in range(budget + 4):
                face = b.current_face(hd)
                cur_owner = b.downer[hd]
                crossable = [d for d in face
                             if b.downer[d] != OWNER_BOUNDARY and b.downer[d] != cur_owner]
                ends = [d for d in face if b.downer[d] == OWNER_BOUNDARY]
                want_cross = (crossable and len(inst) < budget
                              and rng.random() < cross_bias)
                if not want_cross and ends:
                    end_dart = rng.choice(ends)
                    all_gaps = b.boundary_gaps()
                    end_gap = all_gaps.index(end_dart)
                    b.finish(hd, end_dart)
                    routes.append((arc_id, _finish_route(b, start, inst, end_gap)))
                    ok = True
                    break
                if not crossable:
                    break
                h = rng.choice(crossable)
                inst.append(_instruction_for(b, h))
                hd = b.advance(hd, h)
            if ok:
                budget -= len(inst)
                break
        else:
            raise RuntimeError("random generation failed to place an arc")
    return build_diagram(new_disk(n), routes)


def _instruction_for(b: _Builder, h: int):
    owner = b.downer[h]
    walk = b.owner_walk(owner)
    if h in walk:
        seg, side = walk.index(h), 0
    else:
        seg, side = walk.index(b.twin[h]), 1
    kind = "t" if owner <= b.n else "a"
    oid = owner if owner <= b.n else owner - b.n
    return (kind, oid, seg, side)


def _finish_route(b: _Builder, start: int, inst: list, end_gap: int) -> ArcRoute:
    return ArcRoute(start, tuple(inst), end_gap)
