"""Slow, obviously-correct reference implementations used by the tests.

Each oracle is written independently of the package code it checks:
explicit Python loops, dictionaries instead of sorted arrays, pairwise
counting instead of ranks.
"""

from __future__ import annotations

import math

import numpy as np


# -- order book -------------------------------------------------------------

class DictBook:
    """Price-keyed book: {price: [depth, count]} per side.

    Adding a level beyond ``cap`` forgets the worst-priced one.
    """

    def __init__(self, cap=5):
        self.side = {"B": {}, "A": {}}
        self.cap = cap

    def apply(self, kind, side, price, qty, count_delta):
        if kind == "ADD":
            lv = self.side[side].setdefault(price, [0, 0])
            lv[0] += qty
            lv[1] = min(max(lv[1] + count_delta, 1), lv[0])
            book = self.side[side]
            while len(book) > self.cap:
                del book[min(book) if side == "B" else max(book)]
        elif kind in ("CXL", "MOD"):
            lv = self.side[side][price]
            lv[0] -= qty
            if lv[0] == 0:
                del self.side[side][price]
            else:
                lv[1] = min(max(lv[1] + count_delta, 1), lv[0])
        elif kind == "MKT":
            book = self.side["A" if side == "B" else "B"]
            left = qty
            for p in sorted(book, reverse=(side == "A")):
                take = min(left, book[p][0])
                book[p][0] -= take
                left -= take
                if book[p][0] == 0:
                    del book[p]
                else:
                    book[p][1] = min(book[p][1], book[p][0])
                if left == 0:
                    break

    def top(self, side, n=5):
        prices = sorted(self.side[side], reverse=(side == "B"))[:n]
        return [(p, self.side[side][p][0], self.side[side][p][1]) for p in prices]


# -- metrics --------------------------------------------------------------

def brute_confusion(preds, labels, classes=(-1, 0, 1)):
    out = {}
    for c in classes:
        tp = fp = fn = tn = 0
        for p, y in zip(preds, labels):
            if p == c and y == c:
                tp += 1
            elif p == c:
                fp += 1
            elif y == c:
                fn += 1
            else:
                tn += 1
        out[c] = (tp, fp, fn, tn)
    return out


def brute_prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def brute_roc_points(scores, positive, thresholds):
    pts = []
    n_pos = sum(1 for y in positive if y)
    n_neg = len(positive) - n_pos
    for t in thresholds:
        tp = sum(1 for s, y in zip(scores, positive) if y and s >= t)
        fp = sum(1 for s, y in zip(scores, positive) if not y and s >= t)
        pts.append((tp / n_pos if n_pos else 0.0, fp / n_neg if n_neg else 0.0))
    return pts


def brute_closed_trapezoid(points):
    """Area under [(0,0)] + points sorted by fpr then tpr + [(1,1)]."""
    pts = [(0.0, 0.0)] + sorted((f, t) for t, f in points) + [(1.0, 1.0)]
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2
    return area


def pairwise_auc(scores, positive):
    pos = [s for s, y in zip(scores, positive) if y]
    neg = [s for s, y in zip(scores, positive) if not y]
    if not pos or not neg:
        return float("nan")
    win = 0.0
    for a in pos:
        for b in neg:
            win += 1.0 if a > b else (0.5 if a == b else 0.0)
    return win / (len(pos) * len(neg))


# -- network --------------------------------------------------------------

def loop_rnn_proba(W_h, U_h, b_h, W_y, b_y, x):
    """Elementwise-loop Elman forward pass for one (T, P) sequence."""
    H, P = W_h.shape
    K = W_y.shape[0]
    h = [0.0] * H
    for t in range(x.shape[0]):
        new = []
        for i in range(H):
            z = b_h[i]
            for j in range(P):
                z += W_h[i, j] * x[t, j]
            for j in range(H):
                z += U_h[i, j] * h[j]
            new.append(max(z, 0.0))
        h = new
    logits = [b_y[k] + sum(W_y[k, i] * h[i] for i in range(H)) for k in range(K)]
    m = max(logits)
    e = [math.exp(v - m) for v in logits]
    s = sum(e)
    return np.array([v / s for v in e])


def central_difference(f, params: dict, step=1e-5):
    """Numerical gradient of scalar ``f()`` w.r.t. every entry of ``params``."""
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = arr[idx]
            arr[idx] = old + step
            up = f()
            arr[idx] = old - step
            down = f()
            arr[idx] = old
            g[idx] = (up - down) / (2 * step)
        grads[name] = g
    return grads


# -- labels and features ----------------------------------------------------

def scan_horizon_label(ts, mids, t, horizon):
    cutoff = ts[t] + horizon
    j = t
    for k in range(t, len(ts)):
        if ts[k] <= cutoff:
            j = k
        else:
            break
    return int(np.sign(mids[j] - mids[t]))


def naive_mean_std(rows):
    rows = np.asarray(rows, dtype=float)
    n = rows.shape[0]
    means = [sum(rows[:, j]) / n for j in range(rows.shape[1])]
    stds = [math.sqrt(sum((v - means[j]) ** 2 for v in rows[:, j]) / n) for j in range(rows.shape[1])]
    return np.array(means), np.array(stds)
