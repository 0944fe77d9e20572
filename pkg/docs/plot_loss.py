"""Plot loss.csv / loss_n*.csv files: python docs/plot_loss.py OUT/loss*.csv"""

import sys

import matplotlib.pyplot as plt
import numpy as np

fig, ax = plt.subplots()
for path in sys.argv[1:]:
    d = np.loadtxt(path, delimiter=",", skiprows=1)
    ax.step(d[:, 0], d[:, 1], where="post", label=path)
ax.set_xlabel("t")
ax.set_ylabel("L(t)")
ax.legend()
plt.show()
