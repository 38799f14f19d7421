"""Reference values for the fixture matrices in tests/fixtures.hpp.

Computed with numpy/scipy, independently of the C++ code, and pasted into the
tests as frozen constants. Rerun to audit: python3 tests/derive_fixtures.py
"""
import itertools

import numpy as np
import scipy.linalg as sl

np.set_printoptions(precision=17)

B6 = np.array([[2, 1, 0, 1, 0, 1],
               [1, 3, 1, 0, 1, 0],
               [0, 1, 2, 1, 0, 1],
               [1, 0, 1, 3, 1, 0],
               [0, 1, 0, 1, 2, 1],
               [1, 0, 1, 0, 1, 3]], dtype=float)
A6 = B6 @ B6.T + np.eye(6)

A4 = np.array([[4.0, 1.0, 0.5, 0.2],
               [1.0, 3.0, 0.4, 0.1],
               [0.5, 0.4, 2.0, 0.3],
               [0.2, 0.1, 0.3, 1.0]])


def schur(a, i, s):
    s = list(s)
    if not s:
        return a[i, i]
    m = a[np.ix_(s, s)]
    v = a[s, i]
    return a[i, i] - v @ np.linalg.pinv(m) @ v


def vecchia(a, pattern):
    n = len(a)
    c = np.eye(n)
    d = np.zeros(n)
    for i in range(n):
        s = pattern[i]
        if s:
            x = -np.linalg.solve(a[np.ix_(s, s)], a[s, i])
            c[i, s] = x
        d[i] = schur(a, i, s)
    return c, d


def log_kappa(a, ahat):
    w = sl.eigh(a, ahat, eigvals_only=True)
    return len(w) * np.log(w.mean()) - np.log(w).sum()


def show(name, v):
    print(f"{name} = {np.array2string(np.asarray(v), separator=', ', precision=17)}")


show("A6 schur(4, {0,2})", schur(A6, 4, [0, 2]))
show("A6 logdet", np.linalg.slogdet(A6)[1])
show("A6 hadamard log kappa", np.log(np.diag(A6)).sum() - np.linalg.slogdet(A6)[1])

pattern4 = [[], [], [1], [0, 2]]
c, d = vecchia(A4, pattern4)
show("A4 row2 coef", c[2, [1]])
show("A4 row3 coef", c[3, [0, 2]])
show("A4 diag", d)
ahat = np.linalg.inv(c) @ np.diag(d) @ np.linalg.inv(c).T
show("A4 log kappa", log_kappa(A4, ahat))
show("A4 logdet ahat", np.log(d).sum())

# Partial Cholesky of A6 on the identity order, rank 2.
l = np.zeros((6, 2)); dd = np.zeros(2); r = A6.copy()
for k in range(2):
    dd[k] = r[k, k]; l[:, k] = r[:, k] / dd[k]
    r = r - dd[k] * np.outer(l[:, k], l[:, k])
show("A6 pc d", dd)
show("A6 pc residual diag", np.diag(r))

# Nearest candidates for row 5 among {0..4}: distance A(i,i) - 2A(i,j) + A(j,j).
dist = [A6[5, 5] - 2 * A6[5, j] + A6[j, j] for j in range(5)]
show("A6 distances to 5", dist)
show("A6 nn c=3", sorted(sorted(range(5), key=lambda j: (dist[j], j))[:3]))

# Greedy OMP for row 5 with q=3 over candidates {0..4}.
chosen = []
dists = [A6[5, 5]]
for _ in range(3):
    best = min((schur(A6, 5, chosen + [j]), j) for j in range(5) if j not in chosen)
    chosen.append(best[1]); dists.append(best[0])
show("A6 omp picks", chosen)
show("A6 omp distances", dists)

# FPS ratio on A6 for r = 2: greedy farthest point vs exhaustive optimum.
def pd(a, i, j):
    return a[i, i] - 2 * a[i, j] + a[j, j]
def eta(a, sel):
    return max(min(np.sqrt(max(pd(a, i, j), 0)) for j in sel) for i in range(len(a)))
best = min(eta(A6, s) for s in itertools.combinations(range(6), 2))
show("A6 fps optimum r=2", best)

# CSV fixture columns and their standardized values (sample variance).
x = np.array([[1.0, 10.0, 5.0], [2.0, 20.0, 5.0], [3.0, 40.0, 5.0], [4.0, 50.0, 5.0]])
z = (x - x.mean(0)) / np.where(x.std(0, ddof=1) > 0, x.std(0, ddof=1), 1)
z[:, 2] = 0
show("csv standardized", z)
z2 = x[:2]
z2 = (z2 - z2.mean(0)) / np.where(z2.std(0, ddof=1) > 0, z2.std(0, ddof=1), 1)
z2[:, 2] = 0
show("csv subsample standardized", z2)

# Kernel entry between (0,0,0) and (1,2,2) in d=3: exp(-9/6).
show("kernel", np.exp(-9 / 6))
