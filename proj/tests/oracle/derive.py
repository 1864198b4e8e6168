"""Reference values for the C++ tests, computed with numpy/scipy/cvxpy.

Run from the repo root: python3 tests/oracle/derive.py [extended.json]
The optional JSON (written by the scratch exporter) adds the LMI gain
cross-check with an independent conic solver.
"""
import json
import sys

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq, minimize_scalar

A = np.array([[-49.0, 0.0], [1.0, 0.0]])
B = np.array([[8.0], [0.0]])
C = np.array([[-4.5, 1.5]])


def loop(w):
    return (C @ np.linalg.solve(1j * w * np.eye(2) - A, B))[0, 0]


def fr_margin():
    ws = np.logspace(-4, 4, 20001)
    mag = np.log(np.abs([loop(w) for w in ws]))
    best = (np.inf, None)
    for k in np.nonzero(np.diff(np.sign(mag)))[0]:
        wc = brentq(lambda lw: np.log(abs(loop(np.exp(lw)))), np.log(ws[k]), np.log(ws[k + 1]), xtol=1e-14)
        wc = np.exp(wc)
        pm = np.mod(np.angle(loop(wc)) + np.pi, 2 * np.pi)
        best = min(best, (pm / wc, wc))
    return best


def delayed_gain(tau):
    f = lambda w: abs(1.0 / (1.0 + loop(w) * np.exp(-1j * w * tau)))
    ws = np.logspace(-3, 3, 20001)
    vals = np.array([f(w) for w in ws])
    k = int(np.argmax(vals))
    r = minimize_scalar(lambda lw: -f(np.exp(lw)), bounds=(np.log(ws[k - 1]), np.log(ws[k + 1])), method="bounded",
                        options={"xatol": 1e-12})
    return max(vals[k], -r.fun)


def hinf_grid(a, b, c, d):
    ws = np.logspace(-3, 3, 40001)
    n = a.shape[0]
    return max(np.linalg.svd(c @ np.linalg.solve(1j * w * np.eye(n) - a, b) + d, compute_uv=False)[0] for w in ws)


def lmi_gain(ext, tau_key):
    import cvxpy as cp

    e = ext["ext"][tau_key]
    terms = e["terms"]
    v = e["vertices"][0]
    m = lambda x: np.array(x["data"], dtype=float).reshape(x["rows"], x["cols"])
    a, b, c, d = m(v["A"]), m(v["B"]), m(v["C"]), m(v["D"])
    n = a.shape[0]
    nz = sum(e["z_sizes"])
    nw, nd, ne = e["nw"], e["nd"], e["ne"]
    P = cp.Variable((n, n), symmetric=True)
    t = cp.Variable()
    cons = [P >> 0]
    Mz = 0
    offs = 0
    for term, sz in zip(terms, e["z_sizes"]):
        if term["base"] is not None:
            X = cp.Variable((1, 1), symmetric=True)
            cons.append(X >> 0)
            Mk = cp.kron(m(term["base"]), X)
        else:
            lam = cp.Variable(nonneg=True)
            Mk = lam * m(term["m"])
        blk = np.zeros((sz, nz))
        blk[:, offs:offs + sz] = np.eye(sz)
        Mz = Mz + blk.T @ Mk @ blk
        offs += sz
    cz, dz = c[:nz], d[:nz]
    ce, de = c[nz:], d[nz:]
    L = np.hstack([np.eye(n), np.zeros((n, nw + nd))])
    F = np.hstack([a, b])
    Z = np.hstack([cz, dz])
    E = np.hstack([ce, de])
    Dd = np.hstack([np.zeros((nd, n + nw)), np.eye(nd)])
    lmi = L.T @ P @ F + F.T @ P @ L + Z.T @ Mz @ Z + E.T @ E - t * (Dd.T @ Dd)
    lmi = (lmi + lmi.T) / 2
    cons.append(lmi << -1e-9 * np.eye(n + nw + nd))
    prob = cp.Problem(cp.Minimize(t), cons)
    prob.solve(solver=cp.CLARABEL)
    return float(np.sqrt(t.value))


def main():
    out = {}
    tau, wc = fr_margin()
    out["fr_margin"] = tau
    out["fr_omega"] = wc
    out["delayed_gain"] = {str(t): delayed_gain(t) for t in (0.25, 0.5, 0.5247034976, 1.0, 1.5)}
    out["phi2_dc"] = 2e-6 / 7.1
    out["phi3_poles"] = sorted(np.roots([1.0, -5.64, -17.0]).real.tolist())

    rng = np.random.default_rng(7)
    a = rng.normal(size=(3, 3)) - 3.0 * np.eye(3)
    b = rng.normal(size=(3, 2))
    c = rng.normal(size=(2, 3))
    r = np.diag([1.0, -4.0])
    out["are_input"] = {"a": a.tolist(), "b": b.tolist(), "c": c.tolist(), "r": r.tolist()}
    out["are_x"] = sla.solve_continuous_are(a, b, np.zeros((3, 3)), r, s=c.T).tolist()
    out["lyap_x"] = sla.solve_continuous_lyapunov(a, -np.eye(3)).tolist()
    out["hinf"] = hinf_grid(a, b, c, np.zeros((2, 2)))

    if len(sys.argv) > 1:
        ext = json.load(open(sys.argv[1]))
        out["lmi_gain"] = {k: lmi_gain(ext, k) for k in ext["ext"]}
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
