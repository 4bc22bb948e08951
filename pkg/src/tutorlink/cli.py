"""Command line entry points: serve, bot, replay, export.

Exit codes are a stable contract: 0 ok, 1 semantic failure, 2 connectivity,
3 bad configuration.
"""

from __future__ import annotations

import argparse
import asyncio
import errno
import json
import logging
import os
import signal
import sys

from . import harness, report
from .protocol import (
    Bye,
    Envelope,
    Hello,
    Ping,
    Pong,
    Rejection,
    Welcome,
    decode,
    deframe,
    encode,
    frame,
)
from .server import ConfigError, ServerConfig, load_config, run_server
from .state import events as ev

log = logging.getLogger("tutorlink.cli")

EXIT_OK = 0
EXIT_SEMANTIC = 1
EXIT_CONNECT = 2
EXIT_CONFIG = 3

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = _LOG_LEVELS.get(os.environ.get("TUTORLINK_LOG_LEVEL", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")


# --- serve -------------------------------------------------------------------


def cmd_serve(args) -> int:
    try:
        overrides = {"port": args.port, "ws_port": args.ws_port, "log_path": args.log}
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    async def main():
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, stop.set)
        digest = await run_server(config, stop)
        print(f"final digest {digest}")

    try:
        asyncio.run(main())
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            print(f"port in use: {exc}", file=sys.stderr)
            return EXIT_CONNECT
        raise
    return EXIT_OK


# --- bot ---------------------------------------------------------------------


def _load_script(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise ValueError("script must be a JSON array of {t_ms, event}")
    timeline = []
    for i, entry in enumerate(doc):
        timeline.append((float(entry["t_ms"]), ev.event_from_json(entry["event"])))
    if [t for t, _ in timeline] != sorted(t for t, _ in timeline):
        raise ValueError("script timestamps must be non-decreasing")
    return timeline


async def _bot_session(host, port, timeline, sender, time_scale):
    reader, writer = await asyncio.open_connection(host, port)
    rejections = []
    done_nonce = 0xB07
    loop = asyncio.get_running_loop()
    pong = loop.create_future()
    welcome = loop.create_future()

    async def send(env):
        writer.write(frame(encode(env)))
        await writer.drain()

    async def read_loop():
        buf = b""
        while True:
            chunk = await reader.read(65536)
            if not chunk:
                break
            buf += chunk
            frames, buf = deframe(buf)
            for data in frames:
                env = decode(data)
                if isinstance(env.payload, Welcome):
                    if not welcome.done():
                        welcome.set_result(env.payload)
                elif isinstance(env.payload, Rejection):
                    rejections.append(env.payload)
                    log.info("rejection: %s", env.payload)
                elif isinstance(env.payload, Pong) and env.payload.nonce == done_nonce:
                    if not pong.done():
                        pong.set_result(True)
                elif isinstance(env.payload, Bye):
                    err = ConnectionError(f"server said bye: {env.payload.reason}")
                    for fut in (welcome, pong):
                        if not fut.done():
                            fut.set_exception(err)
                    return

    reader_task = asyncio.create_task(read_loop())
    await send(Envelope("control", 0, sender, Hello(role=sender)))
    try:
        await asyncio.wait_for(welcome, timeout=10.0)
    except (asyncio.TimeoutError, ConnectionError) as exc:
        reader_task.cancel()
        writer.close()
        raise ConnectionError(f"handshake failed: {exc}") from None
    seqs = {}
    t_prev = 0.0
    try:
        for t, event in timeline:
            await asyncio.sleep(max(0.0, (t - t_prev) / 1000.0 / time_scale))
            t_prev = t
            channel = harness.channel_for(event)
            seq = seqs.get(channel, -1) + 1
            seqs[channel] = seq
            await send(Envelope(channel, seq, sender, event))
        await send(Envelope("control", 0, sender, Ping(done_nonce)))
        await asyncio.wait_for(pong, timeout=10.0)
    finally:
        reader_task.cancel()
        writer.close()
        try:
            await writer.wait_closed()
        except Exception:
            pass
    return rejections


def cmd_bot(args) -> int:
    try:
        timeline = _load_script(args.script)
    except (OSError, ValueError, KeyError, ev.EventCodecError) as exc:
        print(f"bad script: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    host, _, port = args.address.partition(":")
    try:
        rejections = asyncio.run(
            _bot_session(host or "127.0.0.1", int(port or 7740), timeline, args.sender, args.time_scale)
        )
    except (ConnectionError, OSError, asyncio.TimeoutError) as exc:
        print(f"connection failed: {exc}", file=sys.stderr)
        return EXIT_CONNECT
    if rejections and not args.expect_rejects:
        print(f"{len(rejections)} event(s) rejected", file=sys.stderr)
        return EXIT_SEMANTIC
    return EXIT_OK


# --- replay ------------------------------------------------------------------


def cmd_replay(args) -> int:
    try:
        computed, footer = harness.replay(args.log)
    except (OSError, harness.LogError) as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC
    print(computed)
    if footer is None:
        print("no footer digest in log", file=sys.stderr)
        return EXIT_SEMANTIC
    if computed != footer:
        print(f"digest mismatch: footer {footer}", file=sys.stderr)
        return EXIT_SEMANTIC
    return EXIT_OK


# --- export ------------------------------------------------------------------


def cmd_export(args) -> int:
    try:
        envelopes, _footer = harness.read_log(args.log)
    except (OSError, harness.LogError) as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC
    if args.what == "annotations":
        doc = report.annotations_export(harness.replay_state(envelopes))
        figures = {"annotations": doc, "trajectory": None}
    else:
        doc = report.trajectory_export(envelopes)
        figures = {"annotations": None, "trajectory": doc}
    print(report.export_json(doc))
    if args.out_dir:
        written = report.render_figures(args.out_dir, figures["annotations"], figures["trajectory"])
        for path in written:
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


# --- entry -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tutorlink", description="shared virtual tutoring session engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="host a live session")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--port", type=int, default=None, help="native TCP port (default 7740)")
    p.add_argument("--ws-port", type=int, default=None, help="WebSocket port (default 7741)")
    p.add_argument("--log", default=None, help="session log path (JSON lines)")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("bot", help="play a scripted peer against a host")
    p.add_argument("address", help="host:port")
    p.add_argument("--script", required=True, help="JSON array of {t_ms, event}")
    p.add_argument("--time-scale", type=float, default=1.0, help="playback speedup factor")
    p.add_argument("--sender", default="student_client", choices=["student_client", "console"])
    p.add_argument("--expect-rejects", action="store_true")
    p.set_defaults(fn=cmd_bot)

    p = sub.add_parser("replay", help="replay a session log and verify its digest footer")
    p.add_argument("log")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("export", help="export annotation or trajectory reports from a log")
    p.add_argument("log")
    p.add_argument("--what", required=True, choices=["annotations", "trajectory"])
    p.add_argument("--out-dir", default=None, help="also render figures and CSV here")
    p.set_defaults(fn=cmd_export)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
