"""Write f_n samples for plotting and print the grid-level residuals."""

import argparse
from dataclasses import dataclass
from pathlib import Path

from rieszops.hermite import default_rule, gram_error, ladder_residuals, sample


@dataclass
class SampleConfig:
    nmax: int = 20
    indices: tuple = (0, 1, 2, 3, 10)
    out_dir: Path = Path("hermite_samples")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=SampleConfig.out_dir)
    ap.add_argument("--nmax", type=int, default=SampleConfig.nmax)
    args = ap.parse_args()
    cfg = SampleConfig(nmax=args.nmax, out_dir=args.out_dir)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    rule = default_rule(cfg.nmax)
    for n in cfg.indices:
        print("wrote", sample(n, rule).to_csv(cfg.out_dir / f"f{n}.csv"))
    print(f"gram error (n <= {cfg.nmax}): {gram_error(cfg.nmax, rule):.2e}")
    for k, v in ladder_residuals(cfg.nmax, rule).items():
        print(f"{k:>7} residual: {v:.2e}")


if __name__ == "__main__":
    main()
