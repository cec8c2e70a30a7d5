"""Plot a sweep CSV written by `secrecy ergodic`, `sweep` or `partial-csi`.

usage: python3 docs/plot_sweep.py sweep.csv [out.png]
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    path = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else path.rsplit(".", 1)[0] + ".png"
    with open(path) as f:
        header = f.readline().lstrip("# ").strip()
    df = pd.read_csv(path, comment="#")
    key = "sigma_e2" if "sigma_e2" in df.columns else "method"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, grp in df.groupby(key, sort=False):
        ax.errorbar(grp.snr_db, grp.mean_rate_bits, yerr=grp["stderr"], marker="o", ms=3, capsize=2,
                    label=f"{key}={label}" if key == "sigma_e2" else label)
    ax.set_xlabel("P_T (dB, unit noise power)")
    ax.set_ylabel("secrecy rate (bits/channel use)")
    ax.set_title(df.constellation.iloc[0])
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.text(0.01, 0.01, header[:140], fontsize=5, alpha=0.6)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(out)


if __name__ == "__main__":
    main()
