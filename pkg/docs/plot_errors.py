"""Log-log plot of errors.csv or metrics.csv with the fitted order from order.json.

python docs/plot_errors.py OUT_DIR
"""

import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

out = Path(sys.argv[1])
fig, ax = plt.subplots()
if (out / "errors.csv").exists():
    d = np.genfromtxt(out / "errors.csv", delimiter=",", names=True)
    series = {"error": d["error"]}
    orders = {"error": json.loads((out / "order.json").read_text())["order"]}
else:
    d = np.genfromtxt(out / "metrics.csv", delimiter=",", names=True)
    series = {k: d[k] for k in ("d1", "d2", "d3")}
    orders = json.loads((out / "order.json").read_text())["orders"]
for name, err in series.items():
    rep = orders[name]
    label = name if rep is None else f"{name}: order {rep['fitted_order']:.2f}"
    ax.loglog(d["n"], err, "o-", label=label)
ax.set_xlabel("n")
ax.set_ylabel("paired difference")
ax.legend()
plt.show()
