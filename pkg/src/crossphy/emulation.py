"""QAM-emulation autoencoder: fixed DSP layers around a trainable quantizer.

The model maps an 80*S-sample waveform through cyclic-prefix removal, a
64-point DFT, target-bin selection, a trainable per-subcarrier complex
scale, a soft quantizer onto standard constellation points, grid reassembly
with fixed pilots, an inverse DFT and cyclic-prefix re-addition.  Training
it to reconstruct its own input picks the constellation points whose OFDM
synthesis best matches the target waveform, in the time domain (analog
mode) or in the instantaneous-phase domain (digital mode).

The only trainable state is the complex scale vector; temperature anneals
on a fixed schedule, and inference replaces the soft assignment with the
nearest-point decision (``infer_symbols``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dsp import ComplexSignal, N_FFT
from .diffblocks import (
    ComplexScale,
    GridAssemble,
    Sequential,
    SoftQuantize,
    bin_select_layer,
    cp_add_layer,
    cp_remove_layer,
    dft_layer,
    idft_layer,
    stack_complex,
    unstack_complex,
)
from .errors import ConfigError, DimensionError, DomainError
from .wifi import (
    CP_LEN,
    DATA_SUBCARRIERS,
    SYMBOL_LEN,
    Constellation,
    constellation,
)

MODEL_FORMAT_VERSION = 1


@dataclass
class EmulationConfig:
    constellation: str = "qam64"
    target_subcarriers: tuple = ()
    mode: str = "analog"  # 'analog' (time-domain MSE) or 'digital' (phase MSE)
    start_symbol: int = 0
    tau_start: float = 1.0
    tau_decay: float = 0.95
    tau_floor: float = 0.05

    def __post_init__(self):
        if self.mode not in ("analog", "digital"):
            raise ConfigError(f"unknown emulation mode {self.mode!r}")


class EmulationModel:
    """The assembled block stack plus bookkeeping for training/inference."""

    def __init__(self, cfg: EmulationConfig):
        self.cfg = cfg
        self.const: Constellation = constellation(cfg.constellation)
        bad = [m for m in cfg.target_subcarriers if m not in DATA_SUBCARRIERS]
        if bad:
            raise ConfigError(f"target subcarriers {bad} are not data subcarriers")
        if not cfg.target_subcarriers:
            raise ConfigError("target subcarrier set is empty")
        self.target_subcarriers = tuple(sorted(cfg.target_subcarriers))
        m = len(self.target_subcarriers)
        cols = [sc % N_FFT for sc in self.target_subcarriers]  # plain DFT order

        self.cp_remove = cp_remove_layer()
        self.dft = dft_layer()
        self.select = bin_select_layer(cols)
        self.scale = ComplexScale(m)
        self.quantize = SoftQuantize(self.const, m, tau=cfg.tau_start)
        self.assemble = GridAssemble(cols, start_symbol=cfg.start_symbol)
        self.idft = idft_layer()
        self.cp_add = cp_add_layer()
        self.stack = Sequential(
            [self.cp_remove, self.dft, self.select, self.scale,
             self.quantize, self.assemble, self.idft, self.cp_add]
        )

    # -- shaping ------------------------------------------------------------

    def _to_blocks(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if len(x) % SYMBOL_LEN != 0:
            raise DimensionError(f"waveform length {len(x)} not a multiple of {SYMBOL_LEN}")
        return stack_complex(x.reshape(-1, SYMBOL_LEN))

    def forward(self, x) -> np.ndarray:
        """Waveform in, reconstructed waveform out (same length)."""
        out = self.stack.forward(self._to_blocks(x))
        return unstack_complex(out).reshape(-1)

    def backward(self, g_wave: np.ndarray) -> np.ndarray:
        g = stack_complex(np.asarray(g_wave).reshape(-1, SYMBOL_LEN))
        return self.stack.backward(g)

    # -- quantizer views ----------------------------------------------------

    def scaled_bins(self, x) -> np.ndarray:
        """(S, m) complex values entering the quantizer (after scaling)."""
        h = self._to_blocks(x)
        for b in (self.cp_remove, self.dft, self.select, self.scale):
            h = b.forward(h)
        return unstack_complex(h)

    def target_bins(self, x) -> np.ndarray:
        """(S, m) raw DFT values on the target subcarriers (before scaling)."""
        h = self._to_blocks(x)
        for b in (self.cp_remove, self.dft, self.select):
            h = b.forward(h)
        return unstack_complex(h)

    def normalize(self, x) -> np.ndarray:
        """Per-OFDM-symbol max-abs pre-normalization of a raw waveform.

        Every 80-sample block is divided by the largest target-bin magnitude
        of that block, which brings the bins into the constellation's
        dynamic range; the trainable scales then start from 1+0j on top of
        this.  ZigBee's constant envelope keeps the per-block factors nearly
        equal, and the frame decoder is amplitude-invariant anyway.
        """
        x = np.asarray(x, dtype=np.complex128)
        z = self.target_bins(x)
        g = np.max(np.abs(z), axis=1)
        # blocks with negligible energy (zero padding) stay near zero
        # instead of being amplified to full scale
        g = np.maximum(g, max(1e-9 * float(g.max()), 1e-300))
        return (x.reshape(-1, SYMBOL_LEN) / g[:, None]).reshape(-1)

    def infer_symbols(self, x) -> np.ndarray:
        """Hard constellation indices, shape (ceil(len(x)/80), m).

        Deterministic; a partial trailing block is zero-padded.
        """
        x = np.asarray(x, dtype=np.complex128)
        pad = (-len(x)) % SYMBOL_LEN
        if pad:
            x = np.concatenate([x, np.zeros(pad, dtype=np.complex128)])
        w = self.scaled_bins(self.normalize(x))
        return self.quantize.hard_indices(stack_complex(w))

    def hard_forward(self, x) -> np.ndarray:
        """Reconstruction with the quantizer snapped to nearest points."""
        idx = self.infer_symbols(x)
        pts = self.const.points[idx]
        h = self.assemble.forward(stack_complex(pts))
        h = self.idft.forward(h)
        h = self.cp_add.forward(h)
        return unstack_complex(h).reshape(-1)

    def export_scales(self) -> np.ndarray:
        """Per-subcarrier complex scales applied after the per-symbol max-abs
        normalization; dropping them into the plain normalize-then-nearest
        quantization rule reproduces this model's hard decisions."""
        return self.scale.scale.copy()

    @property
    def tau(self) -> float:
        return self.quantize.tau

    @tau.setter
    def tau(self, value: float):
        if value <= 0:
            raise DomainError("tau must be positive")
        self.quantize.tau = float(value)


def build_autoencoder(cfg: EmulationConfig) -> EmulationModel:
    return EmulationModel(cfg)


def build_passthrough_autoencoder() -> Sequential:
    """Validation stack: CP-remove, DFT, IDFT, CP-add with no quantizer and
    all 64 bins kept.  Isolates the cyclic-prefix contribution: the body of
    every 80-sample block is reproduced exactly and each prefix region maps
    to the block's tail."""
    return Sequential(
        [cp_remove_layer(), dft_layer(),
         GridAssemble(None, full_passthrough=True), idft_layer(), cp_add_layer()]
    )


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def loss(output, target, mode: str) -> float:
    """analog: mean |u-v|^2 over samples; digital: mean wrapped-phase-diff^2."""
    u = np.asarray(target, dtype=np.complex128).reshape(-1)
    v = np.asarray(output, dtype=np.complex128).reshape(-1)
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch {u.shape} vs {v.shape}")
    if mode == "analog":
        return float(np.mean(np.abs(u - v) ** 2))
    if mode == "digital":
        return float(np.mean(np.angle(v * np.conj(u)) ** 2))
    raise ConfigError(f"unknown loss mode {mode!r}")


def loss_and_grad(output, target, mode: str, eps: float = 1e-12):
    """Loss plus its gradient with respect to the (complex) output.

    The gradient is returned as a complex array whose real/imag parts are
    the partials with respect to the output's real/imag parts.
    """
    u = np.asarray(target, dtype=np.complex128).reshape(-1)
    v = np.asarray(output, dtype=np.complex128).reshape(-1)
    n = len(u)
    if mode == "analog":
        diff = v - u
        return float(np.mean(np.abs(diff) ** 2)), (2.0 / n) * diff
    if mode == "digital":
        e = np.angle(v * np.conj(u))
        mag2 = np.maximum(np.abs(v) ** 2, eps)
        # d(angle v)/d(vr) = -vi/|v|^2, d/d(vi) = vr/|v|^2
        gr = (2.0 / n) * e * (-v.imag / mag2)
        gi = (2.0 / n) * e * (v.real / mag2)
        return float(np.mean(e**2)), gr + 1j * gi
    raise ConfigError(f"unknown loss mode {mode!r}")


def body_mask(n_samples: int) -> np.ndarray:
    """True outside cyclic-prefix regions."""
    mask = np.ones(n_samples, dtype=bool)
    mask.reshape(-1, SYMBOL_LEN)[:, :CP_LEN] = False
    return mask


def nmse_excluding_cp(output, target) -> float:
    u = np.asarray(target).reshape(-1)
    v = np.asarray(output).reshape(-1)
    m = body_mask(len(u))
    return float(np.sum(np.abs(u[m] - v[m]) ** 2) / np.sum(np.abs(u[m]) ** 2))


def phase_mse_excluding_cp(output, target) -> float:
    u = np.asarray(target).reshape(-1)
    v = np.asarray(output).reshape(-1)
    m = body_mask(len(u))
    return float(np.mean(np.angle(v[m] * np.conj(u[m])) ** 2))


def selection_metric(output, target, mode: str) -> float:
    """Hard-reconstruction quality used to pick the best training epoch:
    body NMSE in analog mode, body phase MSE in digital mode."""
    if mode == "analog":
        return nmse_excluding_cp(output, target)
    return phase_mse_excluding_cp(output, target)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    plateau_patience: int = 50
    plateau_tol: float = 1e-9
    seed: int = 0


@dataclass
class TrainResult:
    loss_history: list = field(default_factory=list)
    hard_metric_history: list = field(default_factory=list)
    best_epoch: int = -1
    best_hard_metric: float = math.inf
    epochs_run: int = 0


def train(model: EmulationModel, target: ComplexSignal, opt: TrainConfig | None = None) -> TrainResult:
    """Adam on the quantizer scales, tau annealed geometrically.

    The target is first max-abs pre-normalized per OFDM symbol, so epoch 0
    with scales at 1+0j reproduces the plain normalize-then-nearest-point
    quantization exactly.  The kept parameters are the best epoch by the
    hard-quantized selection metric, so the result is never worse than that
    baseline.  Deterministic for a fixed config: no randomness enters the
    updates.
    """
    opt = opt or TrainConfig()
    x = np.asarray(target.samples, dtype=np.complex128)
    if len(x) % SYMBOL_LEN != 0:
        raise DimensionError(f"target length {len(x)} not a multiple of {SYMBOL_LEN}")
    if len(x) == 0:
        raise DomainError("empty training target")

    if float(np.max(np.abs(model.target_bins(x)))) <= 0:
        raise DomainError("target has no energy on the selected subcarriers")
    u = model.normalize(x)

    cfg = model.cfg
    params = model.scale.params
    mom = {k: np.zeros_like(v) for k, v in params.items()}
    vel = {k: np.zeros_like(v) for k, v in params.items()}
    result = TrainResult()
    best_params = {k: v.copy() for k, v in params.items()}
    stale = 0
    t = 0

    for epoch in range(opt.epochs):
        model.tau = max(cfg.tau_floor, cfg.tau_start * cfg.tau_decay**epoch)

        v_soft = model.forward(u)
        soft_loss, g = loss_and_grad(v_soft, u, cfg.mode)
        if not math.isfinite(soft_loss):
            raise DomainError(f"non-finite training loss at epoch {epoch}: {soft_loss}")
        model.stack.zero_grads()
        model.backward(g)

        v_hard = model.hard_forward(u)  # normalize() is idempotent on u
        metric = selection_metric(v_hard, u, cfg.mode)
        result.loss_history.append(soft_loss)
        result.hard_metric_history.append(metric)
        if metric < result.best_hard_metric - opt.plateau_tol:
            result.best_hard_metric = metric
            result.best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= opt.plateau_patience:
                break

        t += 1
        for k in params:
            gk = model.scale.grads[k]
            mom[k] = opt.beta1 * mom[k] + (1 - opt.beta1) * gk
            vel[k] = opt.beta2 * vel[k] + (1 - opt.beta2) * gk**2
            m_hat = mom[k] / (1 - opt.beta1**t)
            v_hat = vel[k] / (1 - opt.beta2**t)
            params[k] = params[k] - opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.adam_eps)

    for k, v in best_params.items():
        params[k] = v
    model.tau = cfg.tau_floor
    result.epochs_run = len(result.loss_history)
    return result


# ---------------------------------------------------------------------------
# hard quantization helpers (shared with baselines)
# ---------------------------------------------------------------------------

def hard_quantize(bins, const: Constellation, scales=None) -> np.ndarray:
    """Nearest-point indices of ``scales * bins`` (ties to lowest index)."""
    z = np.asarray(bins, dtype=np.complex128)
    w = z * (np.asarray(scales) if scales is not None else 1.0)
    d = np.abs(w[..., None] - const.points) ** 2
    return np.argmin(d, axis=-1)


def soft_quantize(bins, const: Constellation, scales=None, tau: float = 1.0):
    """Functional soft assignment; returns (soft_values, weights)."""
    z = np.asarray(bins, dtype=np.complex128)
    w = z * (np.asarray(scales) if scales is not None else 1.0)
    d = np.abs(w[..., None] - const.points) ** 2
    logits = -d / tau
    logits -= logits.max(axis=-1, keepdims=True)
    e = np.exp(logits)
    a = e / e.sum(axis=-1, keepdims=True)
    return a @ const.points, a


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_model(model: EmulationModel, path) -> None:
    s = model.scale.scale
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "constellation": model.const.name,
        "mode": model.cfg.mode,
        "target_subcarriers": list(model.target_subcarriers),
        "start_symbol": model.cfg.start_symbol,
        "tau": model.tau,
        "scales_re": s.real.tolist(),
        "scales_im": s.imag.tolist(),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)


def load_model(path) -> EmulationModel:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ConfigError(f"unsupported model format version {doc.get('format_version')}")
    cfg = EmulationConfig(
        constellation=doc["constellation"],
        target_subcarriers=tuple(doc["target_subcarriers"]),
        mode=doc["mode"],
        start_symbol=doc.get("start_symbol", 0),
    )
    model = EmulationModel(cfg)
    model.scale.set_scale(np.array(doc["scales_re"]) + 1j * np.array(doc["scales_im"]))
    model.tau = doc["tau"]
    return model
