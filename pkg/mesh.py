"""
Labelled Delta-complex triangulations of closed oriented surfaces.

Half-edge h = 3*face + corner runs from faces[face][corner] to
faces[face][corner + 1]. Edges are twin pairs, so self-glued faces,
loops and multi-edges need no special casing.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from config import SEARCH_CAP
from errors import BadMatching, DanglingVertex, DegenerateHinge, EulerMismatch, SearchCapExceeded

logger = logging.getLogger("packflow.mesh")


@dataclass(frozen=True)
class HalfEdge:
    id: int
    face: int
    corner: int
    origin: int
    twin: int


@dataclass(frozen=True)
class Hinge:
    """Edge e_ij with its faces f_ijk (left) and f_ijl (right)."""
    edge: int
    left_face: int
    right_face: int
    k: int
    i: int
    l: int
    j: int
    e_ki: int
    e_il: int
    e_lj: int
    e_jk: int
    half_edge: int  # the lower half-edge, running i -> j


def _next(h: int) -> int:
    return 3 * (h // 3) + (h % 3 + 1) % 3


def _prev(h: int) -> int:
    return 3 * (h // 3) + (h % 3 + 2) % 3


@dataclass(frozen=True)
class Triangulation:
    num_vertices: int
    faces: Tuple[Tuple[int, int, int], ...]
    twins: Tuple[int, ...]
    edge_ids: Tuple[int, ...]

    # ─── Connectivity ────────────────────────────────────────────────

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    @property
    def num_half_edges(self) -> int:
        return len(self.twins)

    @property
    def num_edges(self) -> int:
        return len(self.twins) // 2

    @property
    def euler_characteristic(self) -> int:
        return self.num_vertices - self.num_edges + self.num_faces

    @property
    def genus(self) -> int:
        return (2 - self.euler_characteristic) // 2

    def origin(self, h: int) -> int:
        return self.faces[h // 3][h % 3]

    def dest(self, h: int) -> int:
        return self.origin(_next(h))

    def next(self, h: int) -> int:
        return _next(h)

    def prev(self, h: int) -> int:
        return _prev(h)

    def half_edge(self, h: int) -> HalfEdge:
        return HalfEdge(id=h, face=h // 3, corner=h % 3, origin=self.origin(h), twin=self.twins[h])

    def edge_half_edges(self, edge: int) -> Tuple[int, int]:
        """The two half-edges of an edge, lower id first."""
        lo = self._edge_lookup()[edge]
        return lo, self.twins[lo]

    def _edge_lookup(self) -> Dict[int, int]:
        lookup = self.__dict__.get("_lookup")
        if lookup is None:
            lookup = {}
            for h, e in enumerate(self.edge_ids):
                if h < self.twins[h]:
                    lookup[e] = h
            object.__setattr__(self, "_lookup", lookup)
        return lookup

    def edge_endpoints(self, edge: int) -> Tuple[int, int]:
        h, _ = self.edge_half_edges(edge)
        return self.origin(h), self.dest(h)

    def face_edges(self, f: int) -> Tuple[int, int, int]:
        """Edge ids of the sides of face f, side c running from corner c to c+1."""
        return tuple(self.edge_ids[3 * f + c] for c in range(3))

    def vertex_degree(self) -> List[int]:
        degree = [0] * self.num_vertices
        for face in self.faces:
            for v in face:
                degree[v] += 1
        return degree

    def signature(self) -> Tuple:
        """Canonical description: faces as rotation-minimal (vertex, edge id) triples, sorted."""
        faces = []
        for f, face in enumerate(self.faces):
            sides = [(face[c], self.edge_ids[3 * f + c]) for c in range(3)]
            faces.append(min(tuple(sides[c:] + sides[:c]) for c in range(3)))
        return (self.num_vertices, tuple(sorted(faces)))


# ─── Construction ────────────────────────────────────────────────────

def twins_from_faces(faces: Sequence[Sequence[int]]) -> List[int]:
    """Pair each oriented side (u, v) with its reverse (v, u); simplicial inputs only."""
    sides: Dict[Tuple[int, int], int] = {}
    for f, face in enumerate(faces):
        for c in range(3):
            key = (face[c], face[(c + 1) % 3])
            if key in sides:
                raise BadMatching(f"oriented side {key} occurs twice; pass twins explicitly", side=list(key))
            sides[key] = 3 * f + c
    twins = [-1] * (3 * len(faces))
    for (u, v), h in sides.items():
        t = sides.get((v, u))
        if t is None:
            raise BadMatching(f"side ({u}, {v}) has no partner; the surface is open", side=[u, v])
        twins[h] = t
    return twins


def _vertex_orbits(faces, twins) -> List[List[int]]:
    """Orbits of the rotation h -> next(twin(h)) around each vertex."""
    n_he = len(twins)
    seen = [False] * n_he
    orbits = []
    for start in range(n_he):
        if seen[start]:
            continue
        orbit = []
        h = start
        while not seen[h]:
            seen[h] = True
            orbit.append(h)
            h = _next(twins[h])
        orbits.append(orbit)
    return orbits


def build(num_vertices: int, faces: Sequence[Sequence[int]], twins: Optional[Sequence[int]] = None,
          edge_ids: Optional[Sequence[int]] = None, genus: Optional[int] = None) -> Triangulation:
    """Validate a gluing and assign edge ids (ascending lower half-edge unless given)."""
    if not faces:
        raise EulerMismatch("a triangulation needs at least one face")
    faces_t = tuple(tuple(int(v) for v in face) for face in faces)
    if any(len(face) != 3 for face in faces_t):
        raise BadMatching("every face must list exactly three vertices")
    if twins is None:
        twins = twins_from_faces(faces_t)
    twins_t = tuple(int(t) for t in twins)
    n_he = 3 * len(faces_t)

    if len(twins_t) != n_he:
        raise BadMatching(f"expected {n_he} twin entries, got {len(twins_t)}")
    for h, t in enumerate(twins_t):
        if not 0 <= t < n_he:
            raise BadMatching(f"twin of half-edge {h} is out of range", half_edge=h)
        if t == h:
            raise BadMatching(f"half-edge {h} is its own twin", half_edge=h)
        if twins_t[t] != h:
            raise BadMatching(f"twin map is not an involution at half-edge {h}", half_edge=h)

    for v in (v for face in faces_t for v in face):
        if not 0 <= v < num_vertices:
            raise DanglingVertex(f"vertex {v} is outside [0, {num_vertices})", vertex=v)
    used = {v for face in faces_t for v in face}
    missing = sorted(set(range(num_vertices)) - used)
    if missing:
        raise DanglingVertex(f"vertices {missing} are not the origin of any half-edge", vertices=missing)

    def origin(h):
        return faces_t[h // 3][h % 3]

    for h, t in enumerate(twins_t):
        if origin(t) != origin(_next(h)):
            raise BadMatching(f"half-edges {h} and {t} do not traverse their edge in opposite directions",
                              half_edge=h)

    orbits = _vertex_orbits(faces_t, twins_t)
    for orbit in orbits:
        labels = {origin(h) for h in orbit}
        if len(labels) != 1:
            raise BadMatching(f"vertex link mixes labels {sorted(labels)}", labels=sorted(labels))
    if len(orbits) != num_vertices:
        raise BadMatching(f"gluing has {len(orbits)} vertex links for {num_vertices} labels")

    n_edges = n_he // 2
    chi = num_vertices - n_edges + len(faces_t)
    if chi % 2:
        raise EulerMismatch(f"Euler characteristic {chi} is odd", chi=chi)
    if chi - num_vertices >= 0:
        raise EulerMismatch(f"chi - n = {chi - num_vertices} must be negative", chi=chi)
    if genus is not None and chi != 2 - 2 * genus:
        raise EulerMismatch(f"chi = {chi} does not match genus {genus}", chi=chi, genus=genus)

    if edge_ids is None:
        ids = [-1] * n_he
        next_id = 0
        for h in range(n_he):
            if h < twins_t[h]:
                ids[h] = ids[twins_t[h]] = next_id
                next_id += 1
    else:
        ids = [int(e) for e in edge_ids]
        if len(ids) != n_he:
            raise BadMatching(f"expected {n_he} edge ids, got {len(ids)}")
        if any(ids[h] != ids[t] for h, t in enumerate(twins_t)):
            raise BadMatching("edge ids differ across a twin pair")
        if sorted(ids[h] for h in range(n_he) if h < twins_t[h]) != list(range(n_edges)):
            raise BadMatching(f"edge ids must enumerate 0..{n_edges - 1} once per twin pair")

    tri = Triangulation(num_vertices=num_vertices, faces=faces_t, twins=twins_t, edge_ids=tuple(ids))
    logger.debug("built triangulation n=%d |E|=%d |F|=%d chi=%d", num_vertices, n_edges, len(faces_t), chi)
    return tri


# ─── Hinges and flips ────────────────────────────────────────────────

def hinge_at(tri: Triangulation, edge: int) -> Hinge:
    h, t = tri.edge_half_edges(edge)
    left, right = h // 3, t // 3
    if left == right:
        raise DegenerateHinge(f"edge {edge} has both sides on face {left}", edge=edge)
    return Hinge(
        edge=edge,
        left_face=left,
        right_face=right,
        k=tri.origin(_prev(h)),
        i=tri.origin(h),
        l=tri.origin(_prev(t)),
        j=tri.origin(t),
        e_ki=tri.edge_ids[_prev(h)],
        e_il=tri.edge_ids[_next(t)],
        e_lj=tri.edge_ids[_prev(t)],
        e_jk=tri.edge_ids[_next(h)],
        half_edge=h,
    )


def flip(tri: Triangulation, edge: int) -> Triangulation:
    """Replace the diagonal e_ij of its hinge by e_kl; the edge id is kept."""
    hinge = hinge_at(tri, edge)
    h, t = tri.edge_half_edges(edge)
    fl, fr = hinge.left_face, hinge.right_face

    faces = list(tri.faces)
    faces[fl] = (hinge.k, hinge.i, hinge.l)
    faces[fr] = (hinge.l, hinge.j, hinge.k)

    # old side half-edge -> its slot in the new faces
    remap = {
        _prev(h): 3 * fl + 0,  # k -> i
        _next(t): 3 * fl + 1,  # i -> l
        _prev(t): 3 * fr + 0,  # l -> j
        _next(h): 3 * fr + 1,  # j -> k
    }
    twins = list(tri.twins)
    ids = list(tri.edge_ids)
    for old, new in remap.items():
        partner = remap.get(tri.twins[old], tri.twins[old])
        twins[new] = partner
        twins[partner] = new
        ids[new] = tri.edge_ids[old]
    twins[3 * fl + 2], twins[3 * fr + 2] = 3 * fr + 2, 3 * fl + 2
    ids[3 * fl + 2] = ids[3 * fr + 2] = edge

    return Triangulation(num_vertices=tri.num_vertices, faces=tuple(faces), twins=tuple(twins),
                         edge_ids=tuple(ids))


def flip_distance_path(tri: Triangulation, target: Triangulation, cap: int = SEARCH_CAP) -> List[int]:
    """Breadth-first search for a flip sequence turning tri into target."""
    if tri.num_vertices != target.num_vertices or tri.num_half_edges != target.num_half_edges:
        raise BadMatching("triangulations differ in vertex or half-edge count")
    goal = target.signature()
    start = tri.signature()
    if start == goal:
        return []

    parents: Dict[Tuple, Tuple[Optional[Tuple], Optional[int]]] = {start: (None, None)}
    queue = deque([tri])
    while queue:
        current = queue.popleft()
        key = current.signature()
        for e in range(current.num_edges):
            try:
                nxt = flip(current, e)
            except DegenerateHinge:
                continue
            nkey = nxt.signature()
            if nkey in parents:
                continue
            parents[nkey] = (key, e)
            if nkey == goal:
                path = []
                while parents[nkey][0] is not None:
                    nkey, step = parents[nkey]
                    path.append(step)
                return path[::-1]
            if len(parents) >= cap:
                raise SearchCapExceeded(f"no flip path within {cap} triangulations", cap=cap)
            queue.append(nxt)
    raise SearchCapExceeded("flip graph exhausted without reaching the target", cap=cap)
