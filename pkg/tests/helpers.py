"""Independent oracles and random families shared by the tests."""
import numpy as np

from genred import jets
from genred.linalg import pairing_matrix


def fd_jacobian(f, p, h=1e-6):
    """Central-difference derivative; trailing axis is the coordinate index."""
    p = np.asarray(p, float)
    cols = []
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        cols.append((np.asarray(f(p + e)) - np.asarray(f(p - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def plain(field):
    """Evaluate a Field without derivatives."""
    return lambda q: field.at(q, 0).v


def fd_exterior(alpha, p, h=1e-6):
    """d of a k-form by finite differences and the alternating sum."""
    D = fd_jacobian(alpha, p, h)
    k = D.ndim - 1
    out = 0
    for pos in range(k + 1):
        out = out + (-1) ** pos * np.moveaxis(D, -1, pos)
    return out


def nijenhuis_tm(I, p, h=1e-6):
    """N(d_a, d_b) of an almost complex structure on coordinate fields by finite differences.

    N(X,Y) = [IX,IY] - I[IX,Y] - I[X,IY] - [X,Y]; for coordinate X = d_a, Y = d_b this is
    (d_{Ia} I)_b - (d_{Ib} I)_a - I((d_b I)_a) + I((d_a I)_b) with (d_c I)_b the column b.
    """
    Iv = I(p)
    dI = fd_jacobian(I, p, h)  # dI[i, j, c] = d_c I^i_j
    m = Iv.shape[0]
    N = np.zeros((m, m, m))
    for a in range(m):
        for b in range(m):
            # [I d_a, I d_b] = (I_a . grad) I_b - (I_b . grad) I_a
            t1 = dI[:, b, :] @ Iv[:, a] - dI[:, a, :] @ Iv[:, b]
            # [I d_a, d_b] = -d_b(I_a);  [d_a, I d_b] = d_a(I_b)
            t2 = -dI[:, a, b]
            t3 = dI[:, b, a]
            N[:, a, b] = t1 - Iv @ t2 - Iv @ t3
    return N


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def random_spd(rng, n, spread=0.5):
    a = rng.normal(size=(n, n)) * spread
    return np.eye(n) + a @ a.T


def sqrtm_spd(g):
    w, v = np.linalg.eigh(g)
    return v @ np.diag(np.sqrt(w)) @ v.T


def random_hermitian_complex(rng, g):
    """A complex structure orthogonal for the metric g."""
    n = g.shape[0]
    o = random_orthogonal(rng, n)
    i0 = o @ np.kron(np.eye(n // 2), [[0.0, -1.0], [1.0, 0.0]]) @ o.T
    s = sqrtm_spd(g)
    return np.linalg.inv(s) @ i0 @ s


def random_antisymmetric(rng, n, scale=0.5):
    a = rng.normal(size=(n, n)) * scale
    return a - a.T


def generalized_metric(g, b):
    m = g.shape[0]
    e = np.eye(m)
    z = np.zeros((m, m))
    bmap = b.T
    Eb = np.block([[e, z], [bmap, e]])
    Emb = np.block([[e, z], [-bmap, e]])
    return Eb @ np.block([[z, np.linalg.inv(g)], [g, z]]) @ Emb


def gk_pair(Ip, Im, g, b):
    """J of the bihermitian quadruple, written out independently."""
    m = g.shape[0]
    e = np.eye(m)
    z = np.zeros((m, m))
    wp, wm = g @ Ip, g @ Im
    core = 0.5 * np.block([[Ip + Im, -(np.linalg.inv(wp) - np.linalg.inv(wm))],
                           [wp - wm, -(Ip.T + Im.T)]])
    bmap = b.T
    Eb = np.block([[e, z], [bmap, e]])
    Emb = np.block([[e, z], [-bmap, e]])
    return Eb @ core @ Emb


def fiber_configuration(rng, m=4, designed=True):
    """(K basis, G, J) with K isotropic of dimension 2 and (J, G) a generalized Kahler pair.

    designed=True builds K from a+ + a- and J a+ + s J a- (a+- in C+-), so J preserves K + GK;
    designed=False draws K from independent random a_i+ + b_i-.
    """
    g = random_spd(rng, m)
    b = random_antisymmetric(rng, m)
    Ip = random_hermitian_complex(rng, g)
    Im = random_hermitian_complex(rng, g)
    G = generalized_metric(g, b)
    J = gk_pair(Ip, Im, g, b)
    Q = pairing_matrix(m)
    # orthonormal bases of C+ (pairing positive) and C- (pairing negative)
    cp = np.linalg.qr(np.eye(2 * m) + G)[0][:, :m]
    cm = np.linalg.qr(np.eye(2 * m) - G)[0][:, :m]

    def unit(c, sign):
        v = c @ rng.normal(size=m)
        return v / np.sqrt(sign * (v @ Q @ v))

    if designed:
        ap, am = unit(cp, 1), unit(cm, -1)
        s = rng.choice([-1.0, 1.0])
        K = np.stack([ap + am, J @ ap + s * (J @ am)], axis=1)
    else:
        def onb(c, sign):
            V = c @ rng.normal(size=(m, 2))
            gram = sign * V.T @ Q @ V
            L = np.linalg.cholesky(gram)
            return V @ np.linalg.inv(L).T

        K = onb(cp, 1) + onb(cm, -1)
    return K, G, J
