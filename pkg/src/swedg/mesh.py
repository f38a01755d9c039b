"""Quadtree forest of bilinear quadrilaterals with 2:1-balanced hanging faces.

A leaf is keyed by ``(level, gi, gj)``: ``level`` starts at 1 for root cells
of the nx x ny Cartesian root grid, and ``(gi, gj)`` are global integer cell
coordinates at that level (``gi`` in ``[0, nx * 2**(level-1))``). Children of
``(l, i, j)`` are ``(l+1, 2i+dx, 2j+dy)``.

Element corner order is counterclockwise from the lower-left reference
corner: ``(-1,-1), (1,-1), (1,1), (-1,1)``. Because children inherit their
corners from the parent bilinear map, child edges lie exactly on parent
edges, which keeps hanging-face quadrature points matched between levels.

Sides: 0 = left, 1 = right, 2 = bottom, 3 = top; the same codes double as
boundary tags of the rectangular domain.
"""

import warnings

import numpy as np

from .errors import MeshError

REFINE, KEEP, COARSEN = 1, 0, -1

# sub-face codes matching reference.SUB_*
SUB_WHOLE, SUB_LO, SUB_HI = 0, 1, 2


def bilinear_map(corners, ref_pts):
    """Map reference points to physical space; also return the Jacobian.

    corners: (4, 2) in the canonical order; ref_pts: (np, 2) in [-1,1]^2.
    Returns (phys (np,2), jac (np,2,2)) with jac[:, a, b] = dx_a/dref_b.
    """
    corners = np.asarray(corners, dtype=float)
    ref_pts = np.atleast_2d(np.asarray(ref_pts, dtype=float))
    xi, eta = ref_pts[:, 0], ref_pts[:, 1]
    shp = np.stack([
        (1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
        (1 + xi) * (1 + eta), (1 - xi) * (1 + eta),
    ], axis=1) * 0.25
    dxi = np.stack([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)], axis=1) * 0.25
    deta = np.stack([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)], axis=1) * 0.25
    phys = shp @ corners
    jac = np.empty((len(ref_pts), 2, 2))
    jac[:, :, 0] = dxi @ corners
    jac[:, :, 1] = deta @ corners
    return phys, jac


# side -> (corner at param -1, corner at param +1)
_SIDE_CORNERS = {0: (0, 3), 1: (1, 2), 2: (0, 1), 3: (3, 2)}
# normal = rot(tangent); sign chosen so the normal points out of the element
_SIDE_ROT = {0: -1, 1: +1, 2: +1, 3: -1}


def side_endpoints(corners, side):
    a, b = _SIDE_CORNERS[side]
    return corners[a], corners[b]


def outward_normal(corners, side):
    """Unit outward normal of a straight side."""
    p0, p1 = side_endpoints(corners, side)
    t = p1 - p0
    t = t / np.hypot(t[0], t[1])
    if _SIDE_ROT[side] > 0:
        return np.array([t[1], -t[0]])
    return np.array([-t[1], t[0]])


class Face:
    """One integration sub-face.

    For a hanging face the fine element sees its whole side (sub=SUB_WHOLE)
    and the coarse element sees half of its side (SUB_LO/SUB_HI). elem1 is
    -1 for boundary faces, with btag >= 0.
    """

    __slots__ = ("elem0", "side0", "sub0", "elem1", "side1", "sub1", "btag", "span")

    def __init__(self, elem0, side0, sub0, elem1, side1, sub1, btag, span):
        self.elem0 = elem0
        self.side0 = side0
        self.sub0 = sub0
        self.elem1 = elem1
        self.side1 = side1
        self.sub1 = sub1
        self.btag = btag
        self.span = span  # element whose whole side spans this sub-face


class Mesh:
    """Leaves of a quadtree forest over an nx x ny root grid."""

    def __init__(self, nx, ny, root_nodes, leaf_keys):
        self.nx = nx
        self.ny = ny
        self.root_nodes = np.asarray(root_nodes, dtype=float)  # (ny+1, nx+1, 2)
        self.leaf_keys = sorted(leaf_keys)
        self.index = {k: i for i, k in enumerate(self.leaf_keys)}
        self.n_elements = len(self.leaf_keys)
        self.level = np.array([k[0] for k in self.leaf_keys], dtype=np.int64)
        self.corners = np.empty((self.n_elements, 4, 2))
        for i, key in enumerate(self.leaf_keys):
            self.corners[i] = self._leaf_corners(key)
        self.faces = self._build_faces()

    # -- geometry -----------------------------------------------------------

    def _leaf_corners(self, key):
        level, gi, gj = key
        m = 1 << (level - 1)
        rx, ry = gi // m, gj // m
        root = np.array([
            self.root_nodes[ry, rx], self.root_nodes[ry, rx + 1],
            self.root_nodes[ry + 1, rx + 1], self.root_nodes[ry + 1, rx],
        ])
        i, j = gi - rx * m, gj - ry * m
        x0, x1 = -1 + 2 * i / m, -1 + 2 * (i + 1) / m
        y0, y1 = -1 + 2 * j / m, -1 + 2 * (j + 1) / m
        ref = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
        phys, _ = bilinear_map(root, ref)
        return phys

    def element_size(self):
        """Characteristic size per element (longest edge)."""
        c = self.corners
        e = np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 1],
                      c[:, 2] - c[:, 3], c[:, 3] - c[:, 0]], axis=1)
        return np.max(np.hypot(e[..., 0], e[..., 1]), axis=1)

    # -- topology -----------------------------------------------------------

    def _cells_per_axis(self, level):
        m = 1 << (level - 1)
        return self.nx * m, self.ny * m

    def _build_faces(self):
        faces = []
        leaves = self.index
        for e0, key in enumerate(self.leaf_keys):
            level, gi, gj = key
            ncx, ncy = self._cells_per_axis(level)
            for side in range(4):
                if side == 0:
                    inside, nb = gi > 0, (level, gi - 1, gj)
                elif side == 1:
                    inside, nb = gi < ncx - 1, (level, gi + 1, gj)
                elif side == 2:
                    inside, nb = gj > 0, (level, gi, gj - 1)
                else:
                    inside, nb = gj < ncy - 1, (level, gi, gj + 1)
                if not inside:
                    faces.append(Face(e0, side, SUB_WHOLE, -1, -1, SUB_WHOLE,
                                      side, e0))
                    continue
                if nb in leaves:
                    # conforming: created by the low-coordinate element only
                    if side in (1, 3):
                        e1 = leaves[nb]
                        oside = {1: 0, 3: 2}[side]
                        faces.append(Face(e0, side, SUB_WHOLE, e1, oside,
                                          SUB_WHOLE, -1, e0))
                    continue
                coarse = (level - 1, nb[1] // 2, nb[2] // 2)
                if level > 1 and coarse in leaves:
                    # self is the fine side: always creates the sub-face,
                    # oriented with elem0 on the low-coordinate side.
                    ec = leaves[coarse]
                    sub = (SUB_LO, SUB_HI)[gj % 2 if side in (0, 1) else gi % 2]
                    oside = {0: 1, 1: 0, 2: 3, 3: 2}[side]
                    if side in (1, 3):  # fine element is the low side
                        faces.append(Face(e0, side, SUB_WHOLE, ec, oside, sub,
                                          -1, e0))
                    else:
                        faces.append(Face(ec, oside, sub, e0, side, SUB_WHOLE,
                                          -1, e0))
                    continue
                # finer neighbors exist: they create the sub-faces themselves
                fine0 = (level + 1, 2 * nb[1], 2 * nb[2])
                if fine0 not in leaves and (level + 1, 2 * nb[1] + 1, 2 * nb[2]) \
                        not in leaves and (level + 1, 2 * nb[1], 2 * nb[2] + 1) \
                        not in leaves:
                    raise MeshError(f"no neighbor found for {key} side {side}; "
                                    "mesh is not 2:1 balanced")
        return faces



def mark_elements(mesh, eta, theta_r, theta_c, n_max, h_min=0.0, absolute=False):
    """Per-element refine/coarsen/keep flags from an indicator field.

    Relative mode compares against theta * max(eta); absolute mode treats the
    thetas as thresholds directly (used by bathymetry-driven refinement).
    """
    eta = np.asarray(eta, dtype=float)
    if np.any(eta < 0):
        raise ValueError("refinement indicator must be non-negative")
    if theta_c > theta_r:
        warnings.warn("coarsening threshold exceeds refinement threshold; "
                      "remeshing may oscillate", stacklevel=2)
    if absolute:
        ref_thr, coa_thr = theta_r, theta_c
    else:
        eta_max = eta.max() if len(eta) else 0.0
        ref_thr, coa_thr = theta_r * eta_max, theta_c * eta_max
    size = mesh.element_size()
    marks = np.full(mesh.n_elements, KEEP, dtype=np.int64)
    marks[eta < coa_thr] = COARSEN
    refinable = (mesh.level < n_max) & (size > h_min)
    marks[(eta > ref_thr) & refinable] = REFINE
    return marks


def adapt(mesh, marks):
    """Apply marks, restore 2:1 balance, and report the transfer plan.

    Returns ``(new_mesh, ops)`` where ``ops[i]`` describes how new element i
    gets its data: ``("copy", old)``, ``("inject", old, [quadrants...])`` for
    refined elements (quadrant path from the old leaf down), or
    ``("project", [old0..old3])`` for coarsened elements with children in
    quadrant order (kx + 2*ky).
    """
    marks = np.asarray(marks)
    refine = {mesh.leaf_keys[i] for i in np.nonzero(marks == REFINE)[0]}
    coarsen = {mesh.leaf_keys[i] for i in np.nonzero(marks == COARSEN)[0]}

    # coarsening needs the full sibling group, none refined, level > 1
    groups = {}
    for key in coarsen:
        level, gi, gj = key
        if level <= 1:
            continue
        groups.setdefault((level - 1, gi // 2, gj // 2), []).append(key)
    merge = {}
    for parent, kids in groups.items():
        if len(kids) != 4:
            continue
        if any(k in refine for k in kids):
            continue
        merge[parent] = kids

    leaves = set(mesh.leaf_keys)
    for key in refine:
        leaves.discard(key)
        level, gi, gj = key
        leaves.update((level + 1, 2 * gi + a, 2 * gj + b)
                      for a in (0, 1) for b in (0, 1))

    # veto merges that would break 2:1 balance against the refined set
    for parent, kids in sorted(merge.items()):
        if _merge_breaks_balance(mesh, parent, kids, leaves):
            continue
        for k in kids:
            leaves.discard(k)
        leaves.add(parent)

    _balance_closure(mesh, leaves)

    new_mesh = Mesh(mesh.nx, mesh.ny, mesh.root_nodes, leaves)
    ops = []
    old_index = mesh.index
    for key in new_mesh.leaf_keys:
        if key in old_index:
            ops.append(("copy", old_index[key]))
            continue
        # refined: walk up to the old leaf, recording quadrants
        path = []
        l, i, j = key
        found = None
        while l > 1:
            path.append((i % 2) + 2 * (j % 2))
            l, i, j = l - 1, i // 2, j // 2
            if (l, i, j) in old_index:
                found = old_index[(l, i, j)]
                break
        if found is not None:
            ops.append(("inject", found, list(reversed(path))))
            continue
        # coarsened: direct children must be old leaves
        l, i, j = key
        kids = []
        for b in (0, 1):
            for a in (0, 1):
                ck = (l + 1, 2 * i + a, 2 * j + b)
                if ck not in old_index:
                    raise MeshError(f"cannot build transfer plan for {key}")
                kids.append(old_index[ck])
        ops.append(("project", kids))
    return new_mesh, ops


def _neighbor_cells(nx, ny, key):
    level, gi, gj = key
    m = 1 << (level - 1)
    ncx, ncy = nx * m, ny * m
    for dx, dy in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ci, cj = gi + dx, gj + dy
        if 0 <= ci < ncx and 0 <= cj < ncy:
            yield (level, ci, cj)


def _max_leaf_level_at(leaves, cell, max_level):
    """Deepest leaf level covering/inside a cell, or None if outside."""
    l, i, j = cell
    # ancestor?
    al, ai, aj = l, i, j
    while al >= 1:
        if (al, ai, aj) in leaves:
            return al
        al, ai, aj = al - 1, ai // 2, aj // 2
    # descendants
    best = None
    stack = [cell]
    while stack:
        c = stack.pop()
        if c in leaves:
            best = c[0] if best is None else max(best, c[0])
        elif c[0] < max_level:
            cl, ci, cj = c
            stack.extend((cl + 1, 2 * ci + a, 2 * cj + b)
                         for a in (0, 1) for b in (0, 1))
    return best


def _merge_breaks_balance(mesh, parent, kids, leaves):
    max_level = max(k[0] for k in leaves)
    probe = set(leaves)
    for k in kids:
        probe.discard(k)
    probe.add(parent)
    for cell in _neighbor_cells(mesh.nx, mesh.ny, parent):
        lvl = _max_leaf_level_at(probe, cell, max_level)
        if lvl is not None and lvl > parent[0] + 1:
            return True
    return False


def _balance_closure(mesh, leaves):
    """Refine leaves in place until no neighbor differs by more than 1 level."""
    changed = True
    while changed:
        changed = False
        max_level = max(k[0] for k in leaves)
        for key in sorted(leaves):
            level = key[0]
            for cell in _neighbor_cells(mesh.nx, mesh.ny, key):
                lvl = _max_leaf_level_at(leaves, cell, max_level)
                if lvl is not None and lvl > level + 1:
                    leaves.discard(key)
                    l, gi, gj = key
                    leaves.update((l + 1, 2 * gi + a, 2 * gj + b)
                                  for a in (0, 1) for b in (0, 1))
                    changed = True
                    break
            if changed:
                break


def build_cartesian(nx, ny, extent, distortion=None):
    """Conforming level-1 mesh of the rectangle ``extent=(x0,x1,y0,y1)``.

    ``distortion``, if given, is a dict with keys ``region`` (rectangle
    (x0,x1,y0,y1)), ``amplitude`` (fraction of local spacing, <= 0.3) and
    ``seed``; interior nodes inside the region get a deterministic
    pseudo-random displacement.
    """
    if nx < 1 or ny < 1:
        raise ValueError("mesh needs nx, ny >= 1")
    x0, x1, y0, y1 = extent
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    nodes = np.empty((ny + 1, nx + 1, 2))
    nodes[..., 0] = xs[None, :]
    nodes[..., 1] = ys[:, None]
    if distortion is not None:
        rx0, rx1, ry0, ry1 = distortion["region"]
        amp = float(distortion.get("amplitude", 0.25))
        if amp > 0.3:
            raise ValueError("distortion amplitude capped at 30% of spacing")
        rng = np.random.default_rng(distortion.get("seed", 0))
        hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
        shift = rng.uniform(-1.0, 1.0, size=nodes.shape)
        interior = np.zeros(nodes.shape[:2], dtype=bool)
        interior[1:-1, 1:-1] = True
        in_region = ((nodes[..., 0] > rx0) & (nodes[..., 0] < rx1)
                     & (nodes[..., 1] > ry0) & (nodes[..., 1] < ry1))
        mask = interior & in_region
        nodes[mask, 0] += amp * hx * shift[mask, 0]
        nodes[mask, 1] += amp * hy * shift[mask, 1]
    leaves = [(1, i, j) for j in range(ny) for i in range(nx)]
    mesh = Mesh(nx, ny, nodes, leaves)
    if distortion is not None:
        check_positive_jacobians(mesh)
    return mesh


def check_positive_jacobians(mesh, ref_pts=None):
    """Scan Jacobian determinants; raise on inverted/collapsed elements."""
    if ref_pts is None:
        g = np.linspace(-1, 1, 5)
        ref_pts = np.column_stack([np.repeat(g, 5), np.tile(g, 5)])
    for e in range(mesh.n_elements):
        _, jac = bilinear_map(mesh.corners[e], ref_pts)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        if np.any(det <= 0):
            raise MeshError(f"element {e} has non-positive Jacobian determinant "
                            f"(min {det.min():.3e})")


# -- plain-text mesh I/O ----------------------------------------------------

def save_mesh_text(mesh, path):
    """Node table, root connectivity, and leaf keys in a line-oriented format."""
    with open(path, "w") as f:
        f.write("# swedg mesh v1\n")
        f.write(f"roots {mesh.nx} {mesh.ny}\n")
        ny1, nx1, _ = mesh.root_nodes.shape
        f.write(f"nodes {nx1 * ny1}\n")
        for j in range(ny1):
            for i in range(nx1):
                x, y = mesh.root_nodes[j, i]
                f.write(f"{float(x)!r} {float(y)!r}\n")
        f.write(f"leaves {mesh.n_elements}\n")
        for level, gi, gj in mesh.leaf_keys:
            f.write(f"{level} {gi} {gj}\n")


def load_mesh_text(path):
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip() and not ln.startswith("#")]
    it = iter(lines)
    tok = next(it).split()
    if tok[0] != "roots":
        raise MeshError("bad mesh file: missing roots header")
    nx, ny = int(tok[1]), int(tok[2])
    tok = next(it).split()
    n_nodes = int(tok[1])
    if n_nodes != (nx + 1) * (ny + 1):
        raise MeshError("bad mesh file: node count mismatch")
    nodes = np.empty((ny + 1, nx + 1, 2))
    for j in range(ny + 1):
        for i in range(nx + 1):
            x, y = next(it).split()
            nodes[j, i] = (float(x), float(y))
    tok = next(it).split()
    n_leaves = int(tok[1])
    leaves = []
    for _ in range(n_leaves):
        l, gi, gj = (int(v) for v in next(it).split())
        leaves.append((l, gi, gj))
    return Mesh(nx, ny, nodes, leaves)
