"""Overlay density.csv files: python docs/plot_density.py OUT_A OUT_B ..."""

import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

fig, ax = plt.subplots()
for out in sys.argv[1:]:
    d = np.loadtxt(Path(out) / "density.csv", delimiter=",", skiprows=1)
    ax.plot(d[:, 0], d[:, 1], label=out)
ax.set_xlabel("y")
ax.set_ylabel("density of surviving positive positions")
ax.legend()
plt.show()
