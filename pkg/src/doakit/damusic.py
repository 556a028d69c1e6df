"""Learned subspace estimator: GRU over snapshots -> dense head ->
Hermitian surrogate covariance -> eigendecomposition -> inverse-distance
spatial spectrum -> MLP -> d angles.

The whole map lives on one autodiff tape, including the eigendecomposition
(adjoint supplied by linalg) and the subspace-distance spectrum, so RMSPE
gradients reach every parameter. Parameter shapes never depend on T: the
GRU consumes snapshots one at a time, which is what lets a single trained
model serve any snapshot count.

Complex tensors travel through the tape as (real, imag) float pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import nn
from .classical import grid_angles
from .linalg import evd_backward_batch, hermitian_evd
from .nn import GruParams, Node, ParamStore, Tape, glorot_init
from .signal import steering_matrix

DEFAULT_SPECTRUM_EPS = 1e-8  # looser than the classical guard: gradients
                             # flow through this reciprocal


@dataclass
class DaMusicConfig:
    m: int
    d: int
    grid_size: int = 360
    gru_hidden: int | None = None  # defaults to 2m
    mlp_hidden: int | None = None  # defaults to 2m
    spectrum_eps: float = DEFAULT_SPECTRUM_EPS

    def __post_init__(self):
        if self.gru_hidden is None:
            self.gru_hidden = 2 * self.m
        if self.mlp_hidden is None:
            self.mlp_hidden = 2 * self.m
        if not (1 <= self.d < self.m):
            raise ValueError(f"need 1 <= d < m, got d={self.d} m={self.m}")
        if self.grid_size < 2 * self.m:
            raise ValueError(f"grid_size must be >= 2m, got {self.grid_size}")
        if self.gru_hidden < 1 or self.mlp_hidden < 1:
            raise ValueError("hidden sizes must be >= 1")
        if not (0.0 < self.spectrum_eps):
            raise ValueError("spectrum_eps must be > 0")


@dataclass
class PseudoCovariance:
    """Learned Hermitian m x m surrogate for the signal covariance."""

    k_tilde: np.ndarray  # complex snapshot of the current value
    re: Node             # tape nodes carrying the same matrix
    im: Node


def parameter_count(cfg: DaMusicConfig) -> int:
    """Closed-form trainable parameter total for this configuration."""
    din, h, k = 2 * cfg.m, cfg.gru_hidden, 2 * cfg.m * cfg.m
    mh, g, d = cfg.mlp_hidden, cfg.grid_size, cfg.d
    gru = 3 * (h * din + h * h + h)
    head = k * h + k
    mlp = (mh * g + mh) + (mh * mh + mh) + (d * mh + d)
    return gru + head + mlp


def init_params(cfg: DaMusicConfig, rng: np.random.Generator) -> ParamStore:
    """Glorot weights, zero biases; draw order is fixed and documented by
    the calls below, so one seed pins every parameter."""
    store = ParamStore()
    din, h = 2 * cfg.m, cfg.gru_hidden
    for gate in "zrh":
        store.add(f"gru.w_{gate}", glorot_init(din, h, rng))
        store.add(f"gru.u_{gate}", glorot_init(h, h, rng))
        store.add(f"gru.b_{gate}", np.zeros(h))
    k = 2 * cfg.m * cfg.m
    store.add("head.w", glorot_init(h, k, rng))
    store.add("head.b", np.zeros(k))
    mh = cfg.mlp_hidden
    store.add("mlp1.w", glorot_init(cfg.grid_size, mh, rng))
    store.add("mlp1.b", np.zeros(mh))
    store.add("mlp2.w", glorot_init(mh, mh, rng))
    store.add("mlp2.b", np.zeros(mh))
    store.add("mlp3.w", glorot_init(mh, cfg.d, rng))
    store.add("mlp3.b", np.zeros(cfg.d))
    assert store.total_size() == parameter_count(cfg)
    return store


def gru_params(store: ParamStore) -> GruParams:
    return GruParams(*(store[f"gru.{n}_{g}"] for g in "zrh" for n in ("w", "u", "b")))


def stack_real_imag(x: np.ndarray) -> np.ndarray:
    """(…, m, T) complex -> (…, T, 2m) real rows [Re x(t); Im x(t)]."""
    x = np.asarray(x, dtype=np.complex128)
    xt = np.swapaxes(x, -1, -2)
    return np.concatenate([xt.real, xt.imag], axis=-1)


def unstack_real_imag(seq: np.ndarray) -> np.ndarray:
    """Inverse of stack_real_imag."""
    m = seq.shape[-1] // 2
    xt = seq[..., :m] + 1j * seq[..., m:]
    return np.swapaxes(xt, -1, -2)


# --------------------------------------------------- complex tape bridges


def evd_op(re: Node, im: Node) -> tuple[Node, Node, Node]:
    """Eigendecomposition of re + j*im (Hermitian) as a joint tape
    primitive: outputs eigenvalues, eigenvector real parts, eigenvector
    imaginary parts. One shared backward pushes all three cotangents
    through the adjoint at once."""
    tape = re.tape
    batched = re.value.ndim == 3
    kmat = re.value + 1j * im.value
    kb = kmat if batched else kmat[None]
    b, m, _ = kb.shape
    lam = np.empty((b, m))
    vec = np.empty((b, m, m), dtype=np.complex128)
    for i in range(b):
        evd = hermitian_evd(kb[i])
        lam[i] = evd.eigenvalues
        vec[i] = evd.eigenvectors

    def out(a):
        return tape.node(a if batched else a[0], (re, im))

    lam_n, vre_n, vim_n = out(lam), out(vec.real.copy()), out(vec.imag.copy())
    fired = []

    def joint(_g):
        if fired:
            return
        fired.append(True)

        def lift(g):
            return None if g is None else (g if batched else g[None])

        gl = lift(lam_n.grad)
        gvr, gvi = lift(vre_n.grad), lift(vim_n.grad)
        if gl is None and gvr is None and gvi is None:
            return
        gv = None
        if gvr is not None or gvi is not None:
            if gvr is None:
                gvr = np.zeros((b, m, m))
            if gvi is None:
                gvi = np.zeros((b, m, m))
            gv = gvr + 1j * gvi
        abar = evd_backward_batch(lam, vec, gl, gv)
        re._accum(abar.real if batched else abar[0].real)
        im._accum(abar.imag if batched else abar[0].imag)

    lam_n._bwd = vre_n._bwd = vim_n._bwd = joint
    return lam_n, vre_n, vim_n


def subspace_distance_op(
    vre: Node, vim: Node, steering: np.ndarray, n_noise: int
) -> Node:
    """||E_n^H a(psi_g)||^2 per grid angle, where E_n is the first n_noise
    eigenvector columns (ascending eigenvalues) of the decomposition whose
    vectors are (vre, vim). steering is the constant (G, m) grid manifold."""
    tape = vre.tape
    batched = vre.value.ndim == 3
    e = vre.value + 1j * vim.value
    eb = e if batched else e[None]
    en = eb[:, :, :n_noise]
    w = np.einsum("gm,bmn->bgn", steering.conj(), en, optimize=True)
    den = np.einsum("bgn,bgn->bg", w, w.conj(), optimize=True).real
    out = tape.node(den if batched else den[0], (vre, vim))

    def bwd(g):
        gb = g if batched else g[None]
        ebar = 2.0 * np.einsum("bg,bgn,gp->bpn", gb, w, steering, optimize=True)
        full = np.zeros(eb.shape, dtype=np.complex128)
        full[:, :, :n_noise] = ebar
        vre._accum(full.real if batched else full[0].real)
        vim._accum(full.imag if batched else full[0].imag)

    out._bwd = bwd
    return out


# ----------------------------------------------------------- pipeline ops


def pseudo_covariance_head(h_final, params, tape: Tape) -> PseudoCovariance:
    """Dense identity layer 2m -> 2m^2; first half of the output is Re(K0)
    row-major, second half Im(K0); returned matrix is (K0 + K0^H)/2."""
    w_param, b_param = params
    k2 = w_param.value.shape[0]
    m = int(round(math.sqrt(k2 / 2)))
    if 2 * m * m != k2:
        raise ValueError(f"head output size {k2} is not 2*m^2")
    flat = nn.dense_forward(params, h_final, "identity", tape)
    lead = flat.value.shape[:-1]
    re0 = nn.reshape(nn.slice_last(flat, 0, m * m), lead + (m, m))
    im0 = nn.reshape(nn.slice_last(flat, m * m, 2 * m * m), lead + (m, m))
    re_h = nn.scale(nn.add(re0, nn.transpose_last2(re0)), 0.5)
    im_h = nn.scale(nn.sub(im0, nn.transpose_last2(im0)), 0.5)
    return PseudoCovariance(re_h.value + 1j * im_h.value, re_h, im_h)


def learned_spectrum(
    k_tilde: PseudoCovariance,
    d: int,
    grid: np.ndarray,
    tape: Tape,
    spectrum_eps: float = DEFAULT_SPECTRUM_EPS,
) -> Node:
    """Subspace spectrum of the learned covariance, max-normalized to (0, 1].

    The eigendecomposition sits on the tape, so gradients flow from the
    spectrum back into the matrix.
    """
    m = k_tilde.re.value.shape[-1]
    if not (1 <= d < m):
        raise ValueError(f"need 1 <= d < m={m}, got d={d}")
    steering = steering_matrix(np.asarray(grid), m).T  # (G, m)
    _, vre, vim = evd_op(k_tilde.re, k_tilde.im)
    den = subspace_distance_op(vre, vim, steering, m - d)
    return nn.max_normalize_last(nn.reciprocal(nn.add_const(den, spectrum_eps)))


def mlp_head(spectrum, params, tape: Tape) -> Node:
    """grid_size -> hidden relu -> hidden relu -> d, squashed into
    (-pi/2, pi/2) by (pi/2)*tanh."""
    (w1, b1, w2, b2, w3, b3) = params
    y = nn.dense_forward((w1, b1), spectrum, "relu", tape)
    y = nn.dense_forward((w2, b2), y, "relu", tape)
    y = nn.dense_forward((w3, b3), y, "identity", tape)
    return nn.scale(nn.tanh(y), math.pi / 2)


_GRID_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _grid(cfg: DaMusicConfig) -> np.ndarray:
    key = (cfg.m, cfg.grid_size)
    if key not in _GRID_CACHE:
        _GRID_CACHE[key] = grid_angles(cfg.grid_size)
    return _GRID_CACHE[key]


def forward(x: np.ndarray, store: ParamStore, cfg: DaMusicConfig, tape: Tape) -> Node:
    """Full pipeline for one snapshot block (m, T) -> (d,) angles, or a
    batch (B, m, T) -> (B, d). T may be anything >= 1."""
    x = np.asarray(x, dtype=np.complex128)
    batched = x.ndim == 3
    if x.shape[-2] != cfg.m:
        raise ValueError(f"expected {cfg.m} array elements, got {x.shape}")
    seq = stack_real_imag(x)  # (…, T, 2m)
    t_count = seq.shape[-2]
    lead = (x.shape[0],) if batched else ()
    gru = gru_params(store)
    h = tape.leaf(np.zeros(lead + (cfg.gru_hidden,)))
    for t in range(t_count):
        h = nn.gru_step(gru, h, tape.leaf(seq[..., t, :]), tape)
    cov = pseudo_covariance_head(h, (store["head.w"], store["head.b"]), tape)
    spec = learned_spectrum(cov, cfg.d, _grid(cfg), tape, cfg.spectrum_eps)
    return mlp_head(
        spec,
        (
            store["mlp1.w"], store["mlp1.b"],
            store["mlp2.w"], store["mlp2.b"],
            store["mlp3.w"], store["mlp3.b"],
        ),
        tape,
    )


def estimate_batch(
    xs: np.ndarray, store: ParamStore, cfg: DaMusicConfig, chunk: int = 128
) -> np.ndarray:
    """Inference over (B, m, T): forward in chunks, no gradient retention."""
    xs = np.asarray(xs, dtype=np.complex128)
    if xs.ndim != 3:
        raise ValueError(f"expected (B, m, T), got {xs.shape}")
    outs = []
    for lo in range(0, xs.shape[0], chunk):
        outs.append(forward(xs[lo : lo + chunk], store, cfg, Tape()).value)
    return np.concatenate(outs, axis=0)
