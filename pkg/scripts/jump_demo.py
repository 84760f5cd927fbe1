"""Show the compound-Poisson accept/reject reversal grid point by grid point.

    python3 scripts/jump_demo.py
"""
from __future__ import annotations

from riskdex.convergence import run_jump_reversal
from riskdex.presets import jump_pair


def main() -> None:
    cp1, cp2, a1, a2 = jump_pair()
    rep = run_jump_reversal(cp1, cp2, a1, a2)
    print("jump-level decisions:", rep.jump_level)
    print(f"{'t':>10}  {'agent 1 (h, h~)':20} {'agent 2 (h, h~)':20} reversed  tail bound")
    for t, d1, d2, rev, b in zip(rep.t_grid, rep.agent1, rep.agent2, rep.reversed_at, rep.tail_bounds):
        print(f"{t:10.3e}  {', '.join(d1):20} {', '.join(d2):20} {str(rev):8}  {b:.1e}")
    print("reversal holds on every t <=", rep.t_check, ":", rep.reversal_holds)


if __name__ == "__main__":
    main()
