"""Random technology-mapped circuits for desk-scale experiments.

LUTs are laid out in ``depth`` levels. A LUT at position ``p`` of level
``l`` draws its inputs from nearby positions of the previous levels, which
gives bounded logic depth and Rent-like locality. Every LUT output is
consumed or becomes a primary output.
"""

from __future__ import annotations

import random
from typing import List, Optional


def synthetic_blif(n_luts: int, n_inputs: int = 8, seed: int = 0, k_max: int = 4,
                   depth: Optional[int] = None, spread: int = 3,
                   latch_fraction: float = 0.1, name: Optional[str] = None) -> str:
    """BLIF text of a random LUT circuit with ``n_luts`` LUTs."""
    if n_luts < 1 or n_inputs < 1:
        raise ValueError("need at least one LUT and one input")
    rng = random.Random(seed)
    name = name or f"syn{n_luts}_{seed}"
    depth = depth or max(2, min(12, round(n_luts ** 0.5)))
    width = -(-n_luts // depth)
    pis = [f"i{k}" for k in range(n_inputs)]
    # level 0 holds the primary inputs spread across the level width
    levels: List[List[str]] = [[pis[(p * n_inputs) // width] for p in range(width)]]
    used = set()
    body, latches = [], []
    count = 0
    for lev in range(1, depth + 1):
        row = []
        for p in range(width):
            if count == n_luts:
                break
            fanin = rng.randint(2, k_max)
            picked = []
            for _ in range(4 * fanin):
                if len(picked) == fanin:
                    break
                back = 1 if rng.random() < 0.7 else rng.randint(1, lev)
                src = levels[lev - back]
                q = min(max(p + rng.randint(-spread, spread), 0), len(src) - 1)
                s = src[q]
                if s not in picked:
                    picked.append(s)
            out = f"n{count}"
            body.append(".names " + " ".join(picked + [out]))
            body.append("".join(rng.choice("01") for _ in picked) + " 1")
            used.update(picked)
            if rng.random() < latch_fraction:
                q = f"q{count}"
                latches.append(f".latch {out} {q} re clk 0")
                out = q
            row.append(out)
            count += 1
        if row:
            levels.append(row)
    produced = [s for row in levels[1:] for s in row]
    outs = [s for s in produced if s not in used] or [produced[-1]]
    inputs = [s for s in pis if s in used] or pis[:1]
    if latches:
        inputs.append("clk")
    lines = [f".model {name}", ".inputs " + " ".join(inputs), ".outputs " + " ".join(outs)]
    lines += body + latches + [".end"]
    return "\n".join(lines) + "\n"
