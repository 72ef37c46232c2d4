"""Reference implementations that share no code path with the package.

Each oracle is deliberately naive: explicit loops, series sums, bit
manipulation. They are only fast enough for the small sizes used in tests.
"""

import math

import numpy as np
from scipy.special import eval_genlaguerre


def jacobi_eigenvalues(h, tol=1e-14, max_sweeps=100):
    """Eigenvalues of a complex Hermitian matrix by cyclic Jacobi rotations.

    The Hermitian ``A + iB`` is embedded as the real symmetric
    ``[[A, -B], [B, A]]``, whose spectrum is that of ``h`` with every value
    doubled; every second sorted value is returned.
    """
    h = np.asarray(h, dtype=complex)
    a = np.block([[h.real, -h.imag], [h.imag, h.real]]).astype(float)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                for k in range(n):
                    akp, akq = a[k, p], a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p, k], a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
    return np.sort(np.diag(a))[::2]


def series_expm(g, terms=60):
    """``exp(G)`` by scaling, Taylor summation and repeated squaring."""
    g = np.asarray(g, dtype=complex)
    norm = np.max(np.sum(np.abs(g), axis=1)) if g.size else 0.0
    squarings = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0.5 else 0
    x = g / 2**squarings
    out = np.eye(g.shape[0], dtype=complex)
    term = np.eye(g.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ x / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def occupation_annihilator(n_modes, mode):
    """``c_mode`` acting on occupation bit strings; mode 0 is the leftmost bit."""
    dim = 2**n_modes
    c = np.zeros((dim, dim))
    for state in range(dim):
        bits = [(state >> (n_modes - 1 - m)) & 1 for m in range(n_modes)]
        if not bits[mode]:
            continue
        sign = (-1) ** sum(bits[:mode])
        target = state ^ (1 << (n_modes - 1 - mode))
        c[target, state] = sign
    return c


def bcs_occupation_hamiltonian(eps, V, eps_down=None, q=0):
    """BCS matrix from direct fermion action on occupation states."""
    L = len(eps)
    eps_down = eps if eps_down is None else eps_down
    n = 2 * L
    c = [occupation_annihilator(n, m) for m in range(n)]
    up = lambda k: k % L
    dn = lambda k: L + k % L
    H = np.zeros((2**n, 2**n))
    for k in range(L):
        H += eps[k] * c[up(k)].T @ c[up(k)] + eps_down[k] * c[dn(k)].T @ c[dn(k)]
    for k in range(L):
        for kp in range(L):
            eta_k = c[up(k)] @ c[dn(q - k)]
            eta_kp = c[up(kp)] @ c[dn(q - kp)]
            H += V[k][kp] * eta_kp.T @ eta_k
    return H


def displacement_element(m, n, beta):
    """``<m| exp(beta b^dag - beta* b) |n>`` in closed form."""
    x = abs(beta) ** 2
    pref = math.exp(-x / 2)
    if m >= n:
        return math.sqrt(math.factorial(n) / math.factorial(m)) * beta ** (m - n) * pref * eval_genlaguerre(n, m - n, x)
    return (
        math.sqrt(math.factorial(m) / math.factorial(n))
        * (-np.conj(beta)) ** (n - m)
        * pref
        * eval_genlaguerre(m, n - m, x)
    )


def fid_spectral_expansion(H, rho0, O, times):
    """``sum_uv rho_uv O_vu exp(-i (E_u - E_v) t)`` with an explicit double loop."""
    e, v = np.linalg.eigh(H)
    rho = v.conj().T @ rho0 @ v
    obs = v.conj().T @ O @ v
    out = np.zeros(len(times), dtype=complex)
    d = len(e)
    for u in range(d):
        for w in range(d):
            out += rho[u, w] * obs[w, u] * np.exp(-1j * (e[u] - e[w]) * np.asarray(times))
    return out


def qpe_register_sum(phases, weights, n):
    """QPE outcome distribution from the explicit register sum ``(1/N) sum_k e^{2 pi i (phi - j/N) k}``."""
    N = 2**n
    k = np.arange(N)
    out = np.zeros(N)
    for phi, w in zip(phases, weights):
        for j in range(N):
            out[j] += w * abs(np.exp(2j * np.pi * (phi - j / N) * k).sum() / N) ** 2
    return out


def random_hermitian(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))
