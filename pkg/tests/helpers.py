"""Independent reference implementations used as test oracles.

Everything here is deliberately written as straight-line brute force
(per-pixel loops, plain dicts, queue-based flood fill) so it shares no
code path with the library it checks.
"""

from collections import deque

RCA_SET = {"1", "2", "3", "4", "16", "16a", "16b", "16c"}
LCX_SET = {"11", "12", "13", "14", "14a", "14b", "15"}

ALL_NAMES = [
    "1", "2", "3", "4", "5", "6", "7", "8", "9", "9a", "10", "10a",
    "11", "12", "12a", "12b", "13", "14", "14a", "14b", "15",
    "16", "16a", "16b", "16c",
]


def reference_route(names, lcx_includes_12ab=False):
    """Three-branch routing, re-coded from scratch over name strings."""
    names = list(names)
    if not names:
        raise ValueError("empty")
    for n in names:
        if n in RCA_SET:
            return "RCA"
    lcx = LCX_SET | {"12a", "12b"} if lcx_includes_12ab else LCX_SET
    for n in names:
        if n in lcx:
            return "LCX"
    return "LAD"


def point_in_polygon(xs, ys, px, py):
    """Even-odd crossing test for a single point."""
    inside = False
    n = len(xs)
    for i in range(n):
        x1, y1 = xs[i], ys[i]
        x2, y2 = xs[(i + 1) % n], ys[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            if px < (x2 - x1) * (py - y1) / (y2 - y1) + x1:
                inside = not inside
    return inside


def brute_force_rasterize(xs, ys, width, height):
    """Per-pixel point-in-polygon over every pixel center."""
    return [
        [point_in_polygon(xs, ys, j + 0.5, i + 0.5) for j in range(width)]
        for i in range(height)
    ]


def naive_image_scores(gt, pred):
    """Pixel-by-pixel TP/FP/FN recount; returns {class_id: f1} for gt classes."""
    h, w = len(gt), len(gt[0])
    tp, fp, fn = {}, {}, {}
    gt_classes = set()
    for i in range(h):
        for j in range(w):
            g = int(gt[i][j])
            p = int(pred[i][j])
            if g:
                gt_classes.add(g)
            if g == p:
                if g:
                    tp[g] = tp.get(g, 0) + 1
            else:
                if g:
                    fn[g] = fn.get(g, 0) + 1
                if p:
                    fp[p] = fp.get(p, 0) + 1
    scores = {}
    for c in sorted(gt_classes):
        t, f_p, f_n = tp.get(c, 0), fp.get(c, 0), fn.get(c, 0)
        precision = t / (t + f_p) if t + f_p else 0.0
        recall = t / (t + f_n) if t + f_n else 0.0
        scores[c] = (
            0.0 if precision + recall == 0
            else 2 * precision * recall / (precision + recall)
        )
    return scores


def naive_dataset_mean_f1(gts, preds):
    """Returns (mean over scored images, skipped image count)."""
    means = []
    skipped = 0
    for gt, pred in zip(gts, preds):
        scores = naive_image_scores(gt, pred)
        if not scores:
            skipped += 1
            continue
        means.append(sum(scores.values()) / len(scores))
    return (sum(means) / len(means) if means else 0.0), skipped


def flood_components(mask):
    """Queue-based 8-connectivity flood fill; returns a list of pixel sets."""
    h, w = len(mask), len(mask[0])
    seen = [[False] * w for _ in range(h)]
    comps = []
    for si in range(h):
        for sj in range(w):
            if not mask[si][sj] or seen[si][sj]:
                continue
            comp = set()
            queue = deque([(si, sj)])
            seen[si][sj] = True
            while queue:
                i, j = queue.popleft()
                comp.add((i, j))
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        ni, nj = i + di, j + dj
                        if 0 <= ni < h and 0 <= nj < w:
                            if mask[ni][nj] and not seen[ni][nj]:
                                seen[ni][nj] = True
                                queue.append((ni, nj))
            comps.append(comp)
    return comps


def make_coco_doc(images, annotations, categories=None):
    """Assemble a COCO-style document dict from terse tuples.

    images: [(id, w, h)], annotations: [(id, image_id, category_id, seg)],
    seg is a list of flat rings.
    """
    if categories is None:
        categories = [{"id": i + 1, "name": n} for i, n in enumerate(ALL_NAMES)]
    return {
        "images": [
            {"id": i, "width": w, "height": h, "file_name": f"{i:05d}.png"}
            for i, w, h in images
        ],
        "annotations": [
            {"id": a, "image_id": i, "category_id": c, "segmentation": seg}
            for a, i, c, seg in annotations
        ],
        "categories": categories,
    }
