"""Linearity of the WU, DS, DSWU and binned-DSWU variants on one mismatch profile."""
import argparse

from tdlsim.config import load
from tdlsim.harness import compare

KEYS = ("lsb", "dnl_range", "inl_range", "sigma_dnl", "w_eq", "zero_bins", "ultra_small_bins")

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/wu_example.toml")
    ap.add_argument("--samples", type=int, default=2_000_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = load(args.config)
    out = compare(cfg.delay, cfg.launcher, args.samples, args.seed)
    print(f"{'':16s}" + "".join(f"{k:>22s}" for k in KEYS))
    for name, rep in out.items():
        cells = []
        for k in KEYS:
            v = rep[k]
            cells.append(f"[{v[0]:.2f}, {v[1]:.2f}]" if isinstance(v, list) else f"{v:.3f}" if isinstance(v, float) else str(v))
        print(f"{name:16s}" + "".join(f"{c:>22s}" for c in cells))
