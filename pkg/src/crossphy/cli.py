"""Command-line entry point.

One executable with subcommands; every run is reproducible from the config
it echoes.  Exit codes: 0 success, 1 usage, 2 configuration, 3 runtime.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

from . import sim, zigbee
from .dsp import make_rng
from .emulation import (
    EmulationConfig,
    TrainConfig,
    build_autoencoder,
    load_model,
    save_model,
    train,
)
from .errors import ConfigError, CrossPhyError
from .iqfile import read_cf32, write_cf32
from .wifi import SAMPLE_RATE_HZ, transmit_psdu

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_CONFIG_KEYS = {
    "payload_hex": str,
    "payload_len": int,
    "delta_f_hz": float,
    "modulation": str,
    "coding_rate": str,
    "emulation_mode": str,
    "quantizer_mode": str,
    "snr_db": list,
    "trials": int,
    "seed": int,
    "epochs": int,
    "learning_rate": float,
    "tau_start": float,
    "tau_decay": float,
    "tau_floor": float,
    "target_subcarrier_count": int,
    "lead_in_samples": int,
    "scrambler_seed": int,
    "model_file": str,
    "iq_out": str,
    "metrics_out": str,
    "payload_lens": list,
    "modes": list,
}


def _parse_snr(values) -> tuple:
    out = []
    for v in values:
        if isinstance(v, str) and v.lower() in ("inf", "+inf", "noiseless"):
            out.append(math.inf)
        else:
            out.append(float(v))
    return tuple(out)


def parse_config(path: str | None, overrides: dict) -> dict:
    """Config file merged with flag overrides; unknown keys rejected."""
    doc = {}
    if path:
        try:
            with open(path) as f:
                doc = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}")
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
    for key in doc:
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown key {key}")
    for key, value in overrides.items():
        if value is not None:
            doc[key] = value
    for key, value in doc.items():
        want = _CONFIG_KEYS[key]
        if want in (int, float) and not isinstance(value, (int, float)):
            raise ConfigError(f"key {key}: expected {want.__name__}, got {value!r}")
    return doc


def experiment_config(doc: dict) -> sim.ExperimentConfig:
    cfg = sim.ExperimentConfig()
    if "payload_hex" in doc:
        payload = bytes.fromhex(doc["payload_hex"])
    elif "payload_len" in doc:
        rng = make_rng(int(doc.get("seed", 0)), 0xBEEF, int(doc["payload_len"]))
        payload = bytes(rng.integers(0, 256, int(doc["payload_len"])).tolist())
    else:
        payload = cfg.payload
    cfg = replace(
        cfg,
        payload=payload,
        delta_f_hz=float(doc.get("delta_f_hz", cfg.delta_f_hz)),
        modulation=doc.get("modulation", cfg.modulation),
        coding_rate=doc.get("coding_rate", cfg.coding_rate),
        emulation_mode=doc.get("emulation_mode", cfg.emulation_mode),
        quantizer_mode=doc.get("quantizer_mode", cfg.quantizer_mode),
        snr_db=_parse_snr(doc.get("snr_db", ["inf"])),
        trials=int(doc.get("trials", cfg.trials)),
        seed=int(doc.get("seed", cfg.seed)),
        epochs=int(doc.get("epochs", cfg.epochs)),
        learning_rate=float(doc.get("learning_rate", cfg.learning_rate)),
        tau_start=float(doc.get("tau_start", cfg.tau_start)),
        tau_decay=float(doc.get("tau_decay", cfg.tau_decay)),
        tau_floor=float(doc.get("tau_floor", cfg.tau_floor)),
        target_subcarrier_count=int(doc.get("target_subcarrier_count", cfg.target_subcarrier_count)),
        lead_in_samples=int(doc.get("lead_in_samples", cfg.lead_in_samples)),
        scrambler_seed=int(doc.get("scrambler_seed", cfg.scrambler_seed)),
    )
    cfg.validate()
    return cfg


def _emit(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2, default=str)
    if path:
        with open(path, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def _trained_model(cfg: sim.ExperimentConfig, doc: dict):
    if doc.get("model_file"):
        return load_model(doc["model_file"])
    subs = sim.target_subcarriers(cfg.delta_f_hz, cfg.target_subcarrier_count)
    target = sim.make_target(cfg.payload, cfg.delta_f_hz, lead_in_samples=cfg.lead_in_samples)
    model = build_autoencoder(EmulationConfig(
        constellation=cfg.modulation, target_subcarriers=subs, mode=cfg.emulation_mode,
        tau_start=cfg.tau_start, tau_decay=cfg.tau_decay, tau_floor=cfg.tau_floor))
    train(model, target, TrainConfig(epochs=cfg.epochs, learning_rate=cfg.learning_rate,
                                     seed=cfg.seed))
    return model


def _resolve_quantizer(cfg: sim.ExperimentConfig, doc: dict):
    """For nn-webee, pull scales from the model file (or train one)."""
    if cfg.quantizer_mode != "nn-webee":
        return cfg, None
    model = _trained_model(cfg, doc)
    return replace(cfg, scales=model.export_scales()), model


# -- subcommand handlers -----------------------------------------------------

def cmd_train(cfg, doc):
    subs = sim.target_subcarriers(cfg.delta_f_hz, cfg.target_subcarrier_count)
    target = sim.make_target(cfg.payload, cfg.delta_f_hz, lead_in_samples=cfg.lead_in_samples)
    model = build_autoencoder(EmulationConfig(
        constellation=cfg.modulation, target_subcarriers=subs, mode=cfg.emulation_mode,
        tau_start=cfg.tau_start, tau_decay=cfg.tau_decay, tau_floor=cfg.tau_floor))
    result = train(model, target, TrainConfig(epochs=cfg.epochs,
                                              learning_rate=cfg.learning_rate, seed=cfg.seed))
    out = doc.get("model_file", "model.json")
    save_model(model, out)
    _emit(sim.summary_json(cfg, [], extra={
        "train": {"epochs_run": result.epochs_run, "best_epoch": result.best_epoch,
                  "best_hard_metric": result.best_hard_metric, "model_file": out},
    }), doc.get("metrics_out"))
    return EXIT_OK


def cmd_emulate(cfg, doc):
    cfg, _ = _resolve_quantizer(cfg, doc)
    model = _trained_model(cfg, doc) if cfg.quantizer_mode == "trained" else None
    plan = sim.plan_frame(cfg, model=model)
    if doc.get("iq_out"):
        write_cf32(doc["iq_out"], plan.tx)
    _emit(sim.summary_json(cfg, [], extra={
        "emulation": {
            "nmse_body": plan.nmse_body,
            "phase_mse_body": plan.phase_mse_body,
            "evm": plan.evm,
            "violated_bit_count": len(plan.report.violated_positions),
            "psdu_hex": plan.report.psdu.hex(),
        },
    }), doc.get("metrics_out"))
    return EXIT_OK


def cmd_solve_payload(cfg, doc):
    cfg, _ = _resolve_quantizer(cfg, doc)
    plan = sim.plan_frame(cfg)
    if doc.get("iq_out"):
        with open(doc["iq_out"], "wb") as f:
            f.write(plan.report.psdu)
    _emit(sim.summary_json(cfg, [], extra={
        "solve": {
            "psdu_hex": plan.report.psdu.hex(),
            "satisfied": plan.report.satisfied,
            "violated_positions": plan.report.violated_positions,
            "perturbed_subcarriers": plan.report.perturbed_subcarriers[:64],
            "rank": plan.report.rank,
        },
    }), doc.get("metrics_out"))
    return EXIT_OK


def cmd_transmit(cfg, doc):
    psdu = bytes.fromhex(doc["payload_hex"]) if "payload_hex" in doc else cfg.payload
    sig = transmit_psdu(psdu, cfg.mcs, cfg.scrambler_seed)
    out = doc.get("iq_out", "tx.cf32")
    write_cf32(out, sig)
    _emit(sim.summary_json(cfg, [], extra={
        "transmit": {"samples": len(sig), "sample_rate_hz": SAMPLE_RATE_HZ, "iq_out": out},
    }), doc.get("metrics_out"))
    return EXIT_OK


def cmd_zigbee_mod(cfg, doc):
    chips = zigbee.symbols_to_chips(zigbee.build_frame(cfg.payload))
    sig = zigbee.oqpsk_modulate(chips)
    out = doc.get("iq_out", "zigbee.cf32")
    write_cf32(out, sig)
    _emit(sim.summary_json(cfg, [], extra={
        "zigbee_mod": {"symbols": int(len(zigbee.build_frame(cfg.payload))),
                       "chips": int(len(chips)), "samples": len(sig), "iq_out": out},
    }), doc.get("metrics_out"))
    return EXIT_OK


def cmd_zigbee_demod(cfg, doc):
    if not doc.get("iq_out"):
        raise ConfigError("zigbee-demod needs iq_out pointing at the cf32 file to decode")
    sig = read_cf32(doc["iq_out"], SAMPLE_RATE_HZ)
    expected = cfg.payload if "payload_hex" in doc else None
    res = zigbee.decode_frame(sig, expected_payload=expected)
    _emit(sim.summary_json(cfg, [], extra={
        "zigbee_demod": {
            "detected": res.detected,
            "payload_hex": res.payload.hex() if res.payload is not None else None,
            "ser": res.ser,
            "chip_error_rate": res.chip_error_rate,
            "sync_corr": res.sync_corr,
        },
    }), doc.get("metrics_out"))
    return EXIT_OK


def cmd_evaluate(cfg, doc):
    cfg, _ = _resolve_quantizer(cfg, doc)
    metrics = sim.run_pipeline(cfg)
    _emit(sim.summary_json(cfg, metrics), doc.get("metrics_out"))
    return EXIT_OK


def cmd_sweep(cfg, doc):
    rows = sim.sweep(cfg, payload_lens=doc.get("payload_lens"), modes=doc.get("modes"))
    out = doc.get("metrics_out", "sweep.csv")
    sim.write_csv(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_grad_check(cfg, doc):
    from .diffblocks import grad_check
    from .wifi import constellation as _const
    from . import diffblocks as db

    rng = make_rng(cfg.seed)
    subs = sim.target_subcarriers(cfg.delta_f_hz, cfg.target_subcarrier_count)
    model = build_autoencoder(EmulationConfig(
        constellation=cfg.modulation, target_subcarriers=subs))
    checks = {
        "dft": db.dft_layer(),
        "idft": db.idft_layer(),
        "cp_add": db.cp_add_layer(),
        "cp_remove": db.cp_remove_layer(),
        "bin_select": db.bin_select_layer([sc % 64 for sc in subs]),
        "complex_scale": db.ComplexScale(len(subs)),
        "soft_quantize": db.SoftQuantize(_const(cfg.modulation), len(subs), tau=1.0),
        "autoencoder": model.stack,
    }
    worst = 0.0
    report = {}
    for name, block in checks.items():
        err = grad_check(block, rng)
        report[name] = err
        worst = max(worst, err)
        print(f"{name:14s} max relative error {err:.3e}")
    ok = worst < 1e-4
    print(f"worst {worst:.3e} -> {'OK' if ok else 'FAIL'}")
    if doc.get("metrics_out"):
        _emit({"grad_check": report, "worst": worst, "ok": ok}, doc.get("metrics_out"))
    return EXIT_OK if ok else EXIT_RUNTIME


_COMMANDS = {
    "train": cmd_train,
    "emulate": cmd_emulate,
    "solve-payload": cmd_solve_payload,
    "transmit": cmd_transmit,
    "zigbee-mod": cmd_zigbee_mod,
    "zigbee-demod": cmd_zigbee_demod,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "grad-check": cmd_grad_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="crossphy",
        description="WiFi-to-ZigBee cross-technology waveform emulation toolkit",
    )
    p.add_argument("command", choices=sorted(_COMMANDS), help="subcommand to run")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--payload-hex", dest="payload_hex", help="payload bytes as hex")
    p.add_argument("--payload-len", dest="payload_len", type=int,
                   help="random payload length (seeded)")
    p.add_argument("--delta-f-hz", dest="delta_f_hz", type=float)
    p.add_argument("--modulation", choices=["bpsk", "qpsk", "qam16", "qam64"])
    p.add_argument("--coding-rate", dest="coding_rate", choices=["1/2", "3/4"])
    p.add_argument("--emulation-mode", dest="emulation_mode", choices=["analog", "digital"])
    p.add_argument("--quantizer-mode", dest="quantizer_mode", choices=list(sim.QUANTIZER_MODES))
    p.add_argument("--snr-db", dest="snr_db", help="comma list, e.g. 'inf,12,8'")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--lead-in-samples", dest="lead_in_samples", type=int)
    p.add_argument("--target-subcarrier-count", dest="target_subcarrier_count", type=int)
    p.add_argument("--scrambler-seed", dest="scrambler_seed", type=int)
    p.add_argument("--model-file", dest="model_file")
    p.add_argument("--iq-out", dest="iq_out")
    p.add_argument("--metrics-out", dest="metrics_out")
    p.add_argument("--payload-lens", dest="payload_lens",
                   help="comma list of payload lengths for sweep")
    p.add_argument("--modes", help="comma list of quantizer modes for sweep")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    overrides = {
        k: getattr(args, k)
        for k in _CONFIG_KEYS
        if hasattr(args, k) and getattr(args, k) is not None
    }
    if overrides.get("snr_db") is not None:
        overrides["snr_db"] = [s.strip() for s in str(overrides["snr_db"]).split(",")]
    if overrides.get("payload_lens") is not None:
        overrides["payload_lens"] = [int(s) for s in str(overrides["payload_lens"]).split(",")]
    if overrides.get("modes") is not None:
        overrides["modes"] = [s.strip() for s in str(overrides["modes"]).split(",")]
    try:
        doc = parse_config(args.config, overrides)
        cfg = experiment_config(doc)
        return _COMMANDS[args.command](cfg, doc)
    except ConfigError as e:
        print(f"error: config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CrossPhyError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"error: io: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
