"""Field, gauge, and diagnostic output (VTK ASCII, CSV)."""

import csv

import numpy as np

from .errors import IOFailure


def write_vtk(path, op, state, extra_fields=None):
    """Legacy-format VTK unstructured grid with per-element nodal fields.

    Each element is emitted as an independent patch of (r+1)^2 points
    subdivided into r^2 bilinear quads (degree 0 keeps one quad from the
    element corners), so discontinuities across element faces survive in
    the output. Point data: zeta, qx, qy, depth h, bathymetry z_b and any
    extra nodal fields (e.g. the tracer).
    """
    ref = op.ref
    r = max(ref.degree, 1)
    n1 = r + 1
    ne = op.mesh.n_elements
    if ref.degree == 0:
        from .mesh import bilinear_map
        grid = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]])
        pts = np.empty((ne, 4, 2))
        for e in range(ne):
            pts[e], _ = bilinear_map(op.mesh.corners[e], grid)
        tab = np.ones((4, 1))
    else:
        pts = op.node_pts
        tab = np.eye(ref.n_nodes)
    npts_e = pts.shape[1]
    fields = {
        "zeta": state.zeta @ tab.T,
        "qx": state.qx @ tab.T,
        "qy": state.qy @ tab.T,
    }
    if state.conc is not None:
        fields["c"] = state.conc @ tab.T
    zb = op._eval_zb(pts)
    fields["z_b"] = zb
    fields["h"] = fields["zeta"] + zb
    if extra_fields:
        fields.update(extra_fields)
    ncell_e = r * r if ref.degree > 0 else 1
    try:
        with open(path, "w") as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write("swedg fields\nASCII\nDATASET UNSTRUCTURED_GRID\n")
            fh.write(f"POINTS {ne * npts_e} double\n")
            for e in range(ne):
                for p in pts[e]:
                    fh.write(f"{float(p[0])!r} {float(p[1])!r} 0.0\n")
            ncells = ne * ncell_e
            fh.write(f"CELLS {ncells} {ncells * 5}\n")
            for e in range(ne):
                base = e * npts_e
                if ref.degree == 0:
                    fh.write(f"4 {base} {base + 1} {base + 3} {base + 2}\n")
                    continue
                for j in range(r):
                    for i in range(r):
                        a = base + j * n1 + i
                        fh.write(f"4 {a} {a + 1} {a + n1 + 1} {a + n1}\n")
            fh.write(f"CELL_TYPES {ncells}\n")
            fh.write("9\n" * ncells)
            fh.write(f"POINT_DATA {ne * npts_e}\n")
            for name, data in fields.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for e in range(ne):
                    for v in data[e]:
                        fh.write(f"{float(v)!r}\n")
    except OSError as exc:
        raise IOFailure(f"cannot write VTK file {path}: {exc}") from exc


def write_csv(path, header, rows):
    """Plain CSV with a header row; floats rendered via repr (round-trip)."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(v) if isinstance(v, float) else v
                                 for v in row])
    except OSError as exc:
        raise IOFailure(f"cannot write CSV file {path}: {exc}") from exc


def write_gauge_csv(path, gauge_points, gauge_rows):
    """Per-step gauge records: t, then zeta and |u| columns per gauge."""
    header = ["t"]
    for g in range(len(gauge_points)):
        header += [f"zeta_{g}", f"speed_{g}"]
    rows = []
    for rec in gauge_rows:
        t = rec[0][0]
        row = [float(t)]
        for (tg, z, qx, qy) in rec:
            row += [float(z), float(np.hypot(qx, qy))]
        rows.append(row)
    write_csv(path, header, rows)


def write_mass_csv(path, record):
    """Volume/mass history: step, t, total volume, relative drift, elements."""
    vols = record.volumes
    v0 = vols[0] if vols else 1.0
    rows = []
    for k, (t, v, ne) in enumerate(zip(record.times, vols,
                                       record.n_elements)):
        row = [k, float(t), float(v), float((v - v0) / v0), ne]
        if record.tracer_mass:
            m0 = record.tracer_mass[0]
            row.append(float((record.tracer_mass[k] - m0) / m0))
        rows.append(row)
    header = ["step", "t", "volume", "rel_volume_drift", "n_elements"]
    if record.tracer_mass:
        header.append("rel_tracer_mass_drift")
    write_csv(path, header, rows)


def line_cut(op, state, y_value, n_samples=400, x_range=None):
    """Sample fields along a horizontal line (for 1D channel comparisons).

    Returns rows of (x, zeta, qx, qy, z_b). Sampling is per element via the
    nodal expansion, so the cut honours inter-element discontinuities.
    """
    from .stepping import _invert_bilinear
    mesh = op.mesh
    if x_range is None:
        xs_all = op.node_pts[:, :, 0]
        x_range = (float(xs_all.min()), float(xs_all.max()))
    xs = np.linspace(x_range[0] + 1e-9, x_range[1] - 1e-9, n_samples)
    rows = []
    for x in xs:
        hit = None
        for e in range(mesh.n_elements):
            c = mesh.corners[e]
            if (c[:, 0].min() - 1e-12 <= x <= c[:, 0].max() + 1e-12
                    and c[:, 1].min() - 1e-12 <= y_value <= c[:, 1].max() + 1e-12):
                rp = _invert_bilinear(c, np.array([x, y_value]))
                if np.max(np.abs(rp)) <= 1.0 + 1e-9:
                    hit = (e, np.clip(rp, -1, 1))
                    break
        if hit is None:
            continue
        e, rp = hit
        tab = op.ref.eval_at(rp[None, :])[0]
        rows.append((float(x),
                     float(tab @ state.zeta[e]),
                     float(tab @ state.qx[e]),
                     float(tab @ state.qy[e]),
                     float(op.bathymetry(np.array([x]),
                                         np.array([y_value]))[0])))
    return rows
