"""Plot NMSE versus SNR from a ``salsa sweep`` CSV (needs matplotlib).

    python docs/plot_sweep.py results.csv nmse.png
"""

import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

src, dst = sys.argv[1], sys.argv[2]
curves = defaultdict(list)
with open(src) as fh:
    for row in csv.DictReader(fh):
        if row["status"] != "ok" or row["snr_db"] == "inf":
            continue
        label = row["estimator"] if row["estimator"] == "ls" else f"salsa {row['shape']} R={row['r']}"
        curves[(label, row["t_bs"])].append((float(row["snr_db"]), float(row["nmse"])))

fig, ax = plt.subplots(figsize=(6, 4))
for (label, t_bs), pts in sorted(curves.items()):
    pts.sort()
    ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{label}, T_BS={t_bs}")
ax.set_xlabel("SNR [dB]")
ax.set_ylabel("NMSE")
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(dst, dpi=150)
