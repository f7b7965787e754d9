"""Independent reference implementations used to cross-check the pipeline.

Everything here is deliberately plain-python arithmetic over lists so a bug in
the vectorized implementations cannot hide in its own mirror image. Summation
orders match the documented contracts (detections in file order within a view,
views ascending, faces ascending within a part) so agreement is expected to be
exact, and is asserted far tighter than the 1e-12 gate.
"""

from __future__ import annotations

import math


def pixels_in_box(buffer, face_index: int, bbox) -> int:
    """Count pixels of one face whose centers fall inside the box."""
    x0, y0, x1, y1 = bbox
    pixels = buffer.pixels
    h, w = pixels.shape
    count = 0
    for py in range(h):
        cy = py + 0.5
        if not (y0 <= cy < y1):
            continue
        row = pixels[py]
        for px in range(w):
            cx = px + 0.5
            if x0 <= cx < x1 and int(row[px]) == face_index:
                count += 1
    return count


def score_matrix(buffers, detections, face_count: int, prompt_count: int):
    """Bounding-box vote scores: S[i][j] = sum over detections of prompt j of
    (pixels of face i inside the box) x confidence.

    Detections accumulate into a per-view partial in list order; per-view
    partials are added in ascending view order.
    """
    by_view: dict[int, list] = {}
    for det in detections:
        by_view.setdefault(det.view_index, []).append(det)
    buf_of = {b.view_index: b for b in buffers}

    total = [[0.0] * prompt_count for _ in range(face_count)]
    for view in sorted(by_view):
        buffer = buf_of[view]
        partial = [[0.0] * prompt_count for _ in range(face_count)]
        for det in by_view[view]:
            counts = [pixels_in_box(buffer, i, det.bbox) for i in range(face_count)]
            for i in range(face_count):
                partial[i][det.prompt_index] += counts[i] * det.confidence
        for i in range(face_count):
            for j in range(prompt_count):
                total[i][j] += partial[i][j]
    return total


def part_members(part_of_face, part_count: int) -> list[list[int]]:
    members: list[list[int]] = [[] for _ in range(part_count)]
    for u, k in enumerate(part_of_face):
        members[int(k)].append(u)
    return members


def relevance_rows(S, areas, part_of_face, part_count: int, rev_norm: str = "paper"):
    """Per-part relevance: area-weighted column sums over the part, divided by
    (member count x part area) for "paper" or by part area for "mean"."""
    prompt_count = len(S[0])
    rows = []
    for mem in part_members(part_of_face, part_count):
        num = [0.0] * prompt_count
        part_area = 0.0
        for u in mem:
            part_area += float(areas[u])
            for j in range(prompt_count):
                num[j] += float(areas[u]) * S[u][j]
        den = (len(mem) * part_area) if rev_norm == "paper" else part_area
        if den > 0.0:
            rows.append([v / den for v in num])
        else:
            rows.append([0.0] * prompt_count)
    return rows


def multi_fusion(S, areas, ladder_parts, rev_norm: str = "paper"):
    """Every ladder entry adds its relevance rows to member faces; all
    relevance is computed from the original matrix."""
    out = [row[:] for row in S]
    for part_of_face, part_count in ladder_parts:
        rows = relevance_rows(S, areas, part_of_face, part_count, rev_norm)
        for i in range(len(S)):
            row = rows[int(part_of_face[i])]
            for j in range(len(S[0])):
                out[i][j] += row[j]
    return out


def fine_opt(S, areas, part_of_face, part_count: int):
    """Each face's row becomes its part's unnormalized area-weighted sum."""
    prompt_count = len(S[0])
    agg = []
    for mem in part_members(part_of_face, part_count):
        row = [0.0] * prompt_count
        for u in mem:
            for j in range(prompt_count):
                row[j] += float(areas[u]) * S[u][j]
        agg.append(row)
    return [agg[int(part_of_face[i])][:] for i in range(len(S))]


def geo_spreading(S, areas, ladder_parts):
    """Sequential fine-to-coarse propagation; each step reads the evolving
    matrix and divides by (ladder length x part area)."""
    out = [row[:] for row in S]
    m_th = len(ladder_parts)
    prompt_count = len(S[0])
    for part_of_face, part_count in ladder_parts:
        rows = []
        for mem in part_members(part_of_face, part_count):
            num = [0.0] * prompt_count
            part_area = 0.0
            for u in mem:
                part_area += float(areas[u])
                for j in range(prompt_count):
                    num[j] += float(areas[u]) * out[u][j]
            den = m_th * part_area
            rows.append([v / den for v in num] if den > 0.0 else [0.0] * prompt_count)
        add = [rows[int(part_of_face[i])] for i in range(len(S))]
        for i in range(len(S)):
            for j in range(prompt_count):
                out[i][j] += add[i][j]
    return out


def argmax_labels(S, unknown: int = -1):
    """Lowest-index argmax per row; all-zero rows map to unknown."""
    labels = []
    for row in S:
        if all(v == 0.0 for v in row):
            labels.append(unknown)
            continue
        best, best_j = row[0], 0
        for j in range(1, len(row)):
            if row[j] > best:
                best, best_j = row[j], j
        labels.append(best_j)
    return labels


def miou_value(pred, truth, weights, prompt_count: int):
    """Mean IoU over labels present in truth; unknown predictions join unions
    only."""
    per_label = []
    for j in range(prompt_count):
        inter = 0.0
        union = 0.0
        for p, t, w in zip(pred, truth, weights):
            if p == j and t == j:
                inter += w
            if p == j or t == j:
                union += w
        per_label.append(inter / union if union > 0.0 else 0.0)
    present = sorted({int(t) for t in truth if 0 <= int(t) < prompt_count})
    if not present:
        return 0.0, per_label
    return sum(per_label[j] for j in present) / len(present), per_label


def point_triangle_distance(p, a, b, c) -> float:
    """Distance from point to triangle via plane projection with edge
    fallback — deliberately a different formulation than the library's
    region-classification closest-point routine."""

    def sub(u, v):
        return (u[0] - v[0], u[1] - v[1], u[2] - v[2])

    def dot(u, v):
        return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]

    def cross(u, v):
        return (
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        )

    def norm(u):
        return math.sqrt(dot(u, u))

    def seg_dist(p, a, b):
        ab = sub(b, a)
        denom = dot(ab, ab)
        t = 0.0 if denom == 0.0 else max(0.0, min(1.0, dot(sub(p, a), ab) / denom))
        q = (a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2])
        return norm(sub(p, q))

    n = cross(sub(b, a), sub(c, a))
    nn = dot(n, n)
    if nn > 0.0:
        dist_plane = dot(sub(p, a), n) / math.sqrt(nn)
        q = (p[0] - dist_plane * n[0] / math.sqrt(nn),
             p[1] - dist_plane * n[1] / math.sqrt(nn),
             p[2] - dist_plane * n[2] / math.sqrt(nn))
        # barycentric test of the projected point
        v0, v1, v2 = sub(b, a), sub(c, a), sub(q, a)
        d00, d01, d11 = dot(v0, v0), dot(v0, v1), dot(v1, v1)
        d20, d21 = dot(v2, v0), dot(v2, v1)
        denom = d00 * d11 - d01 * d01
        if denom != 0.0:
            v = (d11 * d20 - d01 * d21) / denom
            w = (d00 * d21 - d01 * d20) / denom
            if v >= 0.0 and w >= 0.0 and v + w <= 1.0:
                return abs(dist_plane)
    return min(seg_dist(p, a, b), seg_dist(p, b, c), seg_dist(p, c, a))
