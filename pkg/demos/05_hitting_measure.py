"""Where the lambda-NRW leaves the tree: empirical law vs Hausdorff measure."""
from fracnet import WalkConfig, hitting_histogram

for fid, n in (("sg3", 2), ("cantor_x_interval", 1)):
    h = hitting_histogram(fid, WalkConfig(lam=0.2 if fid == "sg3" else 0.1, samples=100_000, target_level=n))
    print(f"{fid}, level {n}: chi2 {h.chi2:.2f}, p {h.p_value:.3f}")
    for w, f, e in zip(h.words, h.frequencies, h.expected):
        print(f"  {w:>4s}  {f:.4f}  (expected {e:.4f})")
