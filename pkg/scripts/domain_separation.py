"""Membership verdicts for a family of candidates under both operator forms.

The default scale t_n = 2^-n makes T bounded with unbounded inverse, the
regime in which the conjugated domain is strictly smaller.
"""

import argparse
import json
from dataclasses import dataclass, field
from fractions import Fraction

from rieszops import seq as sq
from rieszops.domain import closedness_witness, compare_domains, membership
from rieszops.operators import Form, ScaleOperator, make_operator


@dataclass
class SeparationConfig:
    scale_ratio: Fraction = Fraction(1, 2)
    core: str = "diagonal"
    candidate_ratios: list = field(default_factory=lambda: [Fraction(k, 8) for k in range(1, 8)])


def run(cfg: SeparationConfig) -> dict:
    s = ScaleOperator(sq.geometric(cfg.scale_ratio))
    alpha = sq.constant(1) if cfg.core == "diagonal" else sq.sqrt_index()
    conj = make_operator(cfg.core, alpha, s, Form.CONJUGATED)
    formal = make_operator(cfg.core, alpha, s, Form.FORMAL_SERIES)
    cands = [sq.geometric(r) for r in cfg.candidate_ratios]
    rows = []
    for r, xi in zip(cfg.candidate_ratios, cands):
        rows.append({"ratio": str(r), "conjugated": membership(conj, xi).overall.outcome.value,
                     "formal_series": membership(formal, xi).overall.outcome.value})
    w = closedness_witness(conj)
    return {"rows": rows, "comparison": compare_domains(conj, formal, cands).to_dict(),
            "witness": None if w is None else w.to_dict()["statement"]}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scale-ratio", type=Fraction, default=SeparationConfig.scale_ratio)
    ap.add_argument("--core", choices=("diagonal", "lower", "raise"), default=SeparationConfig.core)
    args = ap.parse_args()
    print(json.dumps(run(SeparationConfig(args.scale_ratio, args.core)), indent=2))


if __name__ == "__main__":
    main()
