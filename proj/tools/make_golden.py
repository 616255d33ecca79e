#!/usr/bin/env python3
"""Writes the example score files under data/examples and the expected
report outputs under data/golden.

The metrics here are computed from their definitions (threshold sweeps,
pair counting) and share no code with the C++ library; the ctest case
golden_report checks that `padkit report` reproduces these files byte for
byte.
"""
import math
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
EX = ROOT / "data" / "examples"
GOLD = ROOT / "data" / "golden"


def write_scores(path, rows):
    with open(path, "w", newline="\n") as f:
        f.write("id,label,score\n")
        for i, lab, s in rows:
            f.write(f"{i},{lab},{s:.9g}\n")


def read_scores(path):
    bona, atk = [], []
    with open(path) as f:
        next(f)
        for line in f:
            line = line.strip()
            if not line:
                continue
            _, lab, s = line.split(",")
            (bona if lab == "bonafide" else atk).append(float(s))
    return bona, atk


def make_examples():
    rng = random.Random(20240)
    EX.mkdir(parents=True, exist_ok=True)

    def sample(prefix, n_b, n_a, mb, ma, sd, digits):
        rows = []
        for k in range(n_b):
            rows.append((f"{prefix}-b{k:03d}", "bonafide", round(min(1, max(0, rng.gauss(mb, sd))), digits)))
        for k in range(n_a):
            rows.append((f"{prefix}-a{k:03d}", "attack", round(min(1, max(0, rng.gauss(ma, sd))), digits)))
        rng.shuffle(rows)
        return rows

    write_scores(EX / "separable.csv", sample("sep", 20, 20, 0.85, 0.15, 0.06, 4))
    write_scores(EX / "overlap.csv", sample("ovl", 37, 29, 0.62, 0.40, 0.15, 4))
    write_scores(EX / "overlap_dev.csv", sample("ovd", 31, 33, 0.62, 0.40, 0.15, 4))
    write_scores(EX / "ties.csv", sample("tie", 25, 40, 0.6, 0.4, 0.2, 1))
    write_scores(EX / "ties_dev.csv", sample("tid", 30, 30, 0.6, 0.4, 0.2, 1))
    write_scores(EX / "bonafide_only.csv", sample("bon", 12, 0, 0.7, 0.3, 0.1, 3))
    # evaluation tables for the improvement report
    base = ("model,train,test,accuracy,precision,recall,f1,roc_auc,pr_auc,apcer,bpcer,acer,eer,hter,mcc,kappa,"
            "tnr,fpr,tau,tp,tn,fp,fn\n")
    with open(EX / "baseline.csv", "w", newline="\n") as f:
        f.write(base)
        f.write("livenessnet,synthA,synthA,0.985000,1,1,1,1,1,0.010000,0.020000,0.015000,0.010000,0.015000,1,1,1,0,0.5,1,1,0,0\n")
        f.write("livenessnet,synthA,synthB,0.580000,1,1,1,1,1,0.700000,0.140000,0.420000,0.350000,0.420000,1,1,1,0,0.5,1,1,0,0\n")
        f.write("livenessnet,synthB,synthB,1.000000,1,1,1,1,1,0.000000,0.000000,0.000000,0.000000,0.000000,1,1,1,0,0.5,1,1,0,0\n")
    with open(EX / "combined.csv", "w", newline="\n") as f:
        f.write(base)
        f.write("livenessnet,combined,synthB,0.995000,1,1,1,1,1,0.010000,0.000000,0.005000,0.004000,0.005000,1,1,1,0,0.5,1,1,0,0\n")
        f.write("livenessnet,combined,synthA,0.990000,1,1,1,1,1,0.000000,0.020000,0.010000,NA,0.010000,1,1,1,0,0.5,1,1,0,0\n")
        f.write("livenessnet,combined,combined,0.992500,1,1,1,1,1,0.005000,0.010000,0.007500,0.006000,0.007500,1,1,1,0,0.5,1,1,0,0\n")


# ---- definitions ----------------------------------------------------------

def counts(bona, atk, tau):
    tp = sum(1 for s in atk if not s >= tau)
    fn = len(atk) - tp
    tn = sum(1 for s in bona if s >= tau)
    fp = len(bona) - tn
    return tp, tn, fp, fn


def div(a, b):
    return None if b == 0 else a / b


def sweep(bona, atk):
    vals = sorted(set(bona + atk))
    taus = [vals[0] - 1.0] + [0.5 * (vals[i] + vals[i + 1]) for i in range(len(vals) - 1)] + [vals[-1] + 1.0]
    out = []
    for t in taus:
        apcer = sum(1 for s in atk if s >= t) / len(atk)
        bpcer = sum(1 for s in bona if s < t) / len(bona)
        out.append((t, apcer, bpcer))
    return out


def eer(bona, atk):
    curve = sweep(bona, atk)
    for t, a, b in curve:
        if a == b:
            return a
    for (t0, a0, b0), (t1, a1, b1) in zip(curve, curve[1:]):
        d0, d1 = a0 - b0, a1 - b1
        if d0 > 0 and d1 < 0:
            f = d0 / (d0 - d1)
            return a0 + f * (a1 - a0)
    return 0.5


def eer_tau(bona, atk):
    curve = sweep(bona, atk)
    for t, a, b in curve:
        if a == b:
            return t
    for (t0, a0, b0), (t1, a1, b1) in zip(curve, curve[1:]):
        d0, d1 = a0 - b0, a1 - b1
        if d0 > 0 and d1 < 0:
            f = d0 / (d0 - d1)
            return t0 + f * (t1 - t0)
    return 0.0


def min_acer_tau(bona, atk):
    best, tau = math.inf, None
    for t, a, b in sweep(bona, atk):
        if (a + b) / 2 < best:
            best, tau = (a + b) / 2, t
    return tau


def roc_auc(bona, atk):
    if not bona or not atk:
        return None
    wins = 0.0
    for b in bona:
        for a in atk:
            wins += 1.0 if b > a else (0.5 if b == a else 0.0)
    return wins / (len(bona) * len(atk))


def pr_auc(bona, atk):
    # attack is the positive class, ranked by 1 - s; one step per distinct score
    if not bona or not atk:
        return None
    ap, prev = 0.0, 0.0
    for v in sorted(set(bona + atk)):
        tp = sum(1 for s in atk if s <= v)
        fp = sum(1 for s in bona if s <= v)
        recall = tp / len(atk)
        ap += (recall - prev) * (tp / (tp + fp))
        prev = recall
    return ap


def fmt(v):
    return "NA" if v is None else "%.6f" % v


def report_row(label, bona, atk, tau):
    tp, tn, fp, fn = counts(bona, atk, tau)
    tp_, tn_, fp_, fn_ = float(tp), float(tn), float(fp), float(fn)
    n = tp_ + tn_ + fp_ + fn_
    acc = div(tp_ + tn_, n)
    prec = div(tp_, tp_ + fp_)
    rec = div(tp_, tp_ + fn_)
    f1 = div(2 * prec * rec, prec + rec) if prec is not None and rec is not None else None
    den = (tp_ + fp_) * (tp_ + fn_) * (tn_ + fp_) * (tn_ + fn_)
    mcc = (tp_ * tn_ - fp_ * fn_) / math.sqrt(den) if den > 0 else None
    po = (tp_ + tn_) / n
    pe = ((tp_ + fp_) * (tp_ + fn_) + (fn_ + tn_) * (fp_ + tn_)) / (n * n)
    kappa = (po - pe) / (1 - pe) if pe < 1 else None
    apcer = div(fn_, tp_ + fn_)
    bpcer = div(fp_, tn_ + fp_)
    acer = (apcer + bpcer) / 2 if apcer is not None and bpcer is not None else None
    e = eer(bona, atk) if bona and atk else None
    cells = [label, fmt(acc), fmt(prec), fmt(rec), fmt(f1), fmt(roc_auc(bona, atk)), fmt(pr_auc(bona, atk)),
             fmt(apcer), fmt(bpcer), fmt(acer), fmt(e), fmt(acer), fmt(mcc), fmt(kappa),
             fmt(div(tn_, tn_ + fp_)), fmt(div(fp_, tn_ + fp_)), "%.6f" % tau, str(tp), str(tn), str(fp), str(fn)]
    return ",".join(cells)


HEADER = ("label,accuracy,precision,recall,f1,roc_auc,pr_auc,apcer,bpcer,acer,eer,hter,mcc,kappa,tnr,fpr,tau,"
          "tp,tn,fp,fn")


def golden_report(outdir, sets, dev, rule, fixed_tau):
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [HEADER]
    for name in sets:
        bona, atk = read_scores(EX / f"{name}.csv")
        tau = fixed_tau
        if name in dev:
            db, da = read_scores(EX / f"{dev[name]}.csv")
            tau = min_acer_tau(db, da) if rule == "min-acer" else eer_tau(db, da)
        rows.append(report_row(name, bona, atk, tau))
        if bona and atk:
            with open(outdir / f"curve_{name}.csv", "w", newline="\n") as f:
                f.write("tau,apcer,bpcer\n")
                for t, a, b in sweep(bona, atk):
                    f.write("%.9g,%.6f,%.6f\n" % (t, a, b))
    with open(outdir / "report.csv", "w", newline="\n") as f:
        f.write("\n".join(rows) + "\n")


def golden_improvement(outdir):
    def table(path):
        lines = [l.rstrip("\n") for l in open(path) if l.strip()]
        head = lines[0].split(",")
        return head, [l.split(",") for l in lines[1:]]

    bh, brows = table(EX / "baseline.csv")
    ch, crows = table(EX / "combined.csv")
    key = {}
    for r in brows:
        k = (r[bh.index("model")], r[bh.index("test")])
        within = r[bh.index("train")] == r[bh.index("test")]
        if k not in key or (within and key[k][bh.index("train")] != key[k][bh.index("test")]):
            key[k] = r

    def delta(a, b):
        return "NA" if "NA" in (a, b) else "%.6f" % (float(b) - float(a))

    out = ["model,test,baseline_accuracy,combined_accuracy,delta_accuracy,delta_acer,delta_eer"]
    for r in crows:
        k = (r[ch.index("model")], r[ch.index("test")])
        if k not in key:
            continue
        b = key[k]
        cols = [bh.index(c) for c in ("accuracy", "acer", "eer")]
        ccols = [ch.index(c) for c in ("accuracy", "acer", "eer")]
        out.append(",".join([k[0], k[1], b[cols[0]], r[ccols[0]]] +
                            [delta(b[i], r[j]) for i, j in zip(cols, ccols)]))
    with open(outdir / "improvement.csv", "w", newline="\n") as f:
        f.write("\n".join(out) + "\n")


def main():
    if "--examples" in sys.argv:
        make_examples()
    sets = ["separable", "overlap", "ties", "bonafide_only"]
    golden_report(GOLD / "min_acer", sets, {"overlap": "overlap_dev", "ties": "ties_dev"}, "min-acer", 0.5)
    golden_report(GOLD / "eer", sets, {"overlap": "overlap_dev", "ties": "ties_dev"}, "eer", 0.5)
    golden_improvement(GOLD / "min_acer")


if __name__ == "__main__":
    main()
