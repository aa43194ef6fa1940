"""Randomized cone-program instances with reference optima.

    minimize ||P f - C 1||  s.t.  ||B_l f|| <= eps_l,  ||f|| <= 1,  f complex

Solved with cvxpy (Clarabel) and cross-checked with CVXOPT. Writes
crates/core/tests/fixtures/cone_instances.json; complex matrices are stored
row-major as [re, im] pairs.
"""
import json
import pathlib

import cvxpy as cp
import numpy as np

COUNT = 200
SEED = 20240611


def orthonormal_rows(rng, r, n, mix=None):
    g = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    if mix is not None:
        # Tilt toward given rows so some constraints bind.
        w = rng.uniform(0.5, 3.0)
        g[:, : min(r, mix.shape[0])] += w * mix.conj().T[:, : min(r, mix.shape[0])] * np.sqrt(n)
    q, _ = np.linalg.qr(g)
    return q[:, :r].conj().T


def solve(p, c, blocks, solver):
    n = p.shape[1]
    f = cp.Variable(n, complex=True)
    cons = [cp.norm(f, 2) <= 1.0] + [cp.norm(b @ f, 2) <= e for b, e in blocks]
    prob = cp.Problem(cp.Minimize(cp.norm(p @ f - c * np.ones(p.shape[0]), 2)), cons)
    if solver == "CLARABEL":
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-9, tol_gap_rel=1e-9, tol_feas=1e-9)
    else:
        prob.solve(solver=cp.CVXOPT)
    assert prob.status == cp.OPTIMAL, prob.status
    return prob.value


def pack(m):
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def main():
    rng = np.random.default_rng(SEED)
    out = []
    worst = 0.0
    for i in range(COUNT):
        n = int(rng.integers(2, 17))
        r = int(rng.integers(1, min(4, n) + 1))
        blocks_n = int(rng.integers(0, 4))
        p = orthonormal_rows(rng, r, n)
        c = float(rng.uniform(0.2, 1.5))
        blocks = []
        for _ in range(blocks_n):
            rb = int(rng.integers(1, min(4, n) + 1))
            mix = p if rng.random() < 0.6 else None
            b = orthonormal_rows(rng, rb, n, mix)
            eps = float(10 ** rng.uniform(-3, 0))
            blocks.append((b, eps))
        ref = solve(p, c, blocks, "CLARABEL")
        alt = solve(p, c, blocks, "CVXOPT")
        worst = max(worst, abs(ref - alt))
        assert abs(ref - alt) < 1e-5, (i, ref, alt)
        out.append(
            {
                "n": n,
                "objective_basis": pack(p),
                "target_level": c,
                "blocks": [{"rows": pack(b), "cap": e} for b, e in blocks],
                "power_cap": 1.0,
                "objective": float(ref),
            }
        )
    path = pathlib.Path(__file__).resolve().parents[2] / "crates/core/tests/fixtures/cone_instances.json"
    path.write_text(json.dumps({"seed": SEED, "instances": out}) + "\n")
    print(f"{len(out)} instances, worst solver disagreement {worst:.2e}")


if __name__ == "__main__":
    main()
