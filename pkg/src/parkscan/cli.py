"""parkscan command line: detect, batch, eval, synth, sync and serve.

Exit codes: 0 success, 1 input image/decode failure, 2 invalid config,
3 output write failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
import time
from datetime import datetime, timezone

from .config import ConfigError, LotConfig, load_config
from .detector import detect_stages
from .evaluate import EvalError, evaluate
from .netpbm import NetpbmError, decode, decode_image, encode_ppm, encode_stage
from .service import LotService, create_app, ingest_from_store
from .store import LocalDirStore
from .sync import SyncState, poll_sync
from .synth import gen_synthetic, synthetic_lot_config

EXIT_OK = 0
EXIT_DECODE = 1
EXIT_CONFIG = 2
EXIT_WRITE = 3


def _fail(message: str, code: int) -> int:
    print(f"parkscan: {message}", file=sys.stderr)
    return code


def _load(config_path) -> LotConfig:
    return load_config(config_path)


def _analyze_fn(config: LotConfig):
    def analyze(obj):
        img = decode(obj.data)
        report, _ = detect_stages(img, config.params, config.canny_lo, config.canny_hi)
        return encode_ppm(report.annotated), report.bit_string

    return analyze


def _run_one(image_path, config: LotConfig, out_dir, dump_stages: bool) -> str:
    """Detect one image and write its outputs; returns the bit string."""
    image_id = os.path.splitext(os.path.basename(image_path))[0]
    img = decode_image(image_path)
    report, stages = detect_stages(img, config.params, config.canny_lo, config.canny_hi)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, f"{image_id}_annotated.ppm"), "wb") as fh:
        fh.write(encode_ppm(report.annotated))
    with open(os.path.join(out_dir, f"{image_id}_slots.txt"), "w", encoding="ascii") as fh:
        fh.write(report.bit_string + "\n")
    if dump_stages:
        for tag, stage in stages.items():
            with open(os.path.join(out_dir, f"{image_id}_{tag}.pgm"), "wb") as fh:
                fh.write(encode_stage(stage))
    return report.bit_string


def cmd_detect(args) -> int:
    try:
        config = _load(args.config)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    try:
        bits = _run_one(args.image, config, args.out, args.dump_stages)
    except NetpbmError as exc:
        return _fail(f"decode failed: {exc}", EXIT_DECODE)
    except OSError as exc:
        return _fail(f"write failed: {exc}", EXIT_WRITE)
    print(bits)
    return EXIT_OK


def cmd_batch(args) -> int:
    try:
        config = _load(args.config)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    try:
        names = sorted(
            n for n in os.listdir(args.dir) if os.path.isfile(os.path.join(args.dir, n))
        )
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        return _fail(str(exc), EXIT_WRITE)

    rows = []
    for name in names:
        image_id = os.path.splitext(name)[0]
        stamp = datetime.now(timezone.utc).isoformat()
        try:
            bits = _run_one(os.path.join(args.dir, name), config, args.out, False)
            rows.append({"image_id": image_id, "bit_string": bits, "timestamp": stamp})
        except NetpbmError as exc:
            rows.append({"image_id": image_id, "error": str(exc), "timestamp": stamp})
        except OSError as exc:
            return _fail(f"write failed: {exc}", EXIT_WRITE)

    try:
        with open(os.path.join(args.out, "manifest.jsonl"), "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")
    except OSError as exc:
        return _fail(f"write failed: {exc}", EXIT_WRITE)
    done = sum(1 for r in rows if "bit_string" in r)
    print(f"processed {done}/{len(rows)} images -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        result = evaluate(args.manifest, args.truth, args.slots_per_test)
    except (EvalError, OSError, json.JSONDecodeError) as exc:
        return _fail(f"eval failed: {exc}", EXIT_DECODE)
    print(json.dumps(result.to_dict(), indent=2))
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        config = _load(args.config) if args.config else synthetic_lot_config()
    except ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    try:
        pairs = gen_synthetic(
            args.seed,
            args.count,
            config,
            args.out,
            occupancy_p=args.occupancy_p,
            speckles=args.speckles,
            occlusion_p=args.occlusion_p,
        )
        if not args.config:
            with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8") as fh:
                fh.write(config.dumps())
    except OSError as exc:
        return _fail(f"write failed: {exc}", EXIT_WRITE)
    print(f"wrote {len(pairs)} scenes to {args.out}")
    return EXIT_OK


def cmd_sync(args) -> int:
    try:
        config = _load(args.config)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    store = LocalDirStore(args.store)
    state = SyncState.load(args.state or os.path.join(args.store, "sync_state.log"))
    analyze = _analyze_fn(config)
    cycles = 1 if args.once else args.cycles
    for summary in poll_sync(store, analyze, state, interval=args.interval, cycles=cycles):
        print(f"processed={len(summary.processed)} failed={len(summary.failed)}")
        for oid, err in summary.failed:
            print(f"  {oid}: {err}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    try:
        config = _load(args.config)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    service = LotService(config, data_dir=args.data_dir)
    app = create_app(service, static_dir=args.static)

    if args.store:
        store = LocalDirStore(args.store)

        def bridge():
            while True:
                try:
                    ingest_from_store(service, store)
                except Exception as exc:  # noqa: BLE001 - keep polling
                    print(f"store bridge: {exc}", file=sys.stderr)
                time.sleep(args.poll)

        threading.Thread(target=bridge, daemon=True).start()

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parkscan")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect slots in one image")
    p.add_argument("image")
    p.add_argument("--config", default=None, help="config JSON (or PARKSCAN_CONFIG)")
    p.add_argument("--out", required=True)
    p.add_argument("--dump-stages", action="store_true")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("batch", help="detect every image in a directory")
    p.add_argument("dir")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("eval", help="score a batch manifest against ground truth")
    p.add_argument("--manifest", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--slots-per-test", type=int, default=4)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate synthetic scenes with ground truth")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--config", default=None, help="defaults to the tuned synthetic config")
    p.add_argument("--out", required=True)
    p.add_argument("--occupancy-p", type=float, default=0.5)
    p.add_argument("--speckles", type=int, default=0)
    p.add_argument("--occlusion-p", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sync", help="poll a store, detect new images, publish results")
    p.add_argument("--store", required=True, help="local store directory")
    p.add_argument("--config", default=None)
    p.add_argument("--state", default=None, help="processed-id state file")
    p.add_argument("--once", action="store_true")
    p.add_argument("--cycles", type=int, default=None)
    p.add_argument("--interval", type=float, default=5.0)
    p.set_defaults(func=cmd_sync)

    p = sub.add_parser("serve", help="run the slot-state HTTP service")
    p.add_argument("--config", default=None)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", default="./parkscan-data")
    p.add_argument("--static", default=None, help="web UI bundle to serve at /")
    p.add_argument("--store", default=None, help="store dir to poll for results")
    p.add_argument("--poll", type=float, default=5.0)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
