"""Tour of the spec language: parsing, verdicts, and violation losses.

Specs are plain text over a tiny grammar: `p` is the trajectory point, `v`
its per-step displacement, `speed` the magnitude of `v`, `o1..oK` are scene
objects, and the temporal operators are spelled G (always), F (eventually),
N (next), and U (until).  This script parses the four bundled planar specs,
shows how formulas normalize and print, and scores a randomly generated
demonstration against each.

Run from the repository root:

    python3 demos/spec_walkthrough.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ltldmp import ltl, quantloss, tasks  # noqa: E402

schema = ltl.SpecSchema(d=2, k_objects=3)
demo = tasks.gen_demo(seed=11, task="generic")
objects = demo.input[4:].reshape(3, 2)

print("scenario seed 11:")
print(f"  start {demo.trace.points[0].round(3)}, goal {demo.trace.points[-1].round(3)}")
for k, obj in enumerate(objects):
    print(f"  o{k + 1} at {obj.round(3)}")
print()

hard = quantloss.LossConfig(mode="hard")
soft = quantloss.LossConfig(mode="soft")

for name, text in tasks.SPEC_TEXTS.items():
    formula = ltl.parse_formula(text, schema)
    nnf = ltl.to_nnf(formula)
    holds = ltl.eval_qualitative(formula, demo.trace, 0, objects)
    lh = quantloss.constraint_loss_on_trace(nnf, demo.trace, objects, hard)
    ls = quantloss.constraint_loss_on_trace(nnf, demo.trace, objects, soft)
    print(f"{name}: {text}")
    print(f"  round-trip: {ltl.to_text(formula)}")
    print(f"  satisfied: {holds}   hard loss: {lh:.5f}   soft loss: {ls:.5f}")
    print()

# Negation pushes inward and conditionals compile away; the hard loss is
# exactly zero precisely when the boolean semantics accept the trace.
guarded = ltl.parse_formula("G (p.x >= 0.5 -> p.y <= 0.6)", schema)
print("conditional:", ltl.to_text(guarded))
print("  normal form:", ltl.to_text(ltl.to_nnf(guarded)))
negated = ltl.to_nnf(ltl.Not(guarded))
print("  negated:    ", ltl.to_text(negated))
