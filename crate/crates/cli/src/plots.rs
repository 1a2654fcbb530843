//! Generated matplotlib scripts; each reads the CSV sitting next to it.

pub fn profile_script() -> String {
    r#"import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent


def read(name):
    with open(here / name) as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


prof = read("profile.csv")
oned = read("oned.csv")

fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
a.plot(prof["t"], prof["g"], label="g")
a.plot(prof["t"], prof["W"], label="W(g)")
a.set_xlabel("t")
a.legend()
b.semilogy([1 / e for e in oned["eps"]], oned["excess"], "o-")
b.set_xlabel("1/eps")
b.set_ylabel("r1D - cost")
fig.tight_layout()
fig.savefig(here / "profile.png", dpi=150)
if "--show" in sys.argv:
    plt.show()
"#
    .to_string()
}

pub fn minimize_script() -> String {
    r#"import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
with open(here / "history.csv") as f:
    rows = list(csv.DictReader(f))
it = [int(r["iteration"]) for r in rows]
energy = [float(r["energy"]) for r in rows]
best = min(energy)

fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogy(it, [e - best + 1e-16 for e in energy])
ax.set_xlabel("iteration")
ax.set_ylabel("E - min E")
fig.tight_layout()
fig.savefig(here / "history.png", dpi=150)
if "--show" in sys.argv:
    plt.show()
"#
    .to_string()
}

pub fn sweep_script() -> String {
    r#"import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
with open(here / "sweep.csv") as f:
    rows = list(csv.DictReader(f))
eps = [float(r["eps"]) for r in rows]

fig, (a, b, c) = plt.subplots(1, 3, figsize=(14, 4))
a.semilogy([1 / e for e in eps], [float(r["oned_excess"]) for r in rows], "o-")
a.set_xlabel("1/eps")
a.set_ylabel("r1D - cost")
b.loglog(eps, [float(r["compression_defect"]) for r in rows], "o-")
b.set_xlabel("eps")
b.set_ylabel("compression defect")
c.plot(eps, [float(r["production_mass"]) for r in rows], "o-", label="production mass")
c.plot(eps, [float(r["total"]) for r in rows], "s-", label="energy")
c.set_xscale("log")
c.set_xlabel("eps")
c.legend()
fig.tight_layout()
fig.savefig(here / "sweep.png", dpi=150)
if "--show" in sys.argv:
    plt.show()
"#
    .to_string()
}
