"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .acoustics import F0Config
from .comparison import ComparisonError
from .facial_metrics import EyebrowConfig
from .filtering import SgConfig
from .head_pose import CameraIntrinsics, FaceModel3D
from .io import InputError, read_manifest, write_landmark_file, write_manifest, write_wav
from .lm import ConvergenceError, DegenerateError
from .pipeline import (
    AnalysisConfig,
    AnalysisResult,
    StageError,
    analyze,
    compare_sessions,
    dumps,
    format_table,
    load_result,
    save_result,
)
from .plotting import plot_session
from .synthesis import (
    FocusStimulusSpec,
    synth_camera,
    synth_focus_audio,
    synth_interocular_mm,
    synth_landmark_track,
)
from .types import SessionManifest, ValidationError

log = logging.getLogger("avprosody")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


def _floats(text: str, n: Optional[int] = None) -> list[float]:
    try:
        vals = [float(v) for v in text.replace("x", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} values, got {text!r}")
    return vals


def _pair(text):
    return tuple(_floats(text, 2))


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("analysis configuration (overrides --config)")
    g.add_argument("--config", type=Path, help="JSON configuration file")
    g.add_argument("--sg-window", type=int, help="Savitzky-Golay window (odd, frames)")
    g.add_argument("--sg-order", type=int, help="Savitzky-Golay polynomial order")
    g.add_argument("--fx", type=float)
    g.add_argument("--fy", type=float)
    g.add_argument("--cx", type=float)
    g.add_argument("--cy", type=float)
    g.add_argument("--image-size", type=_pair, metavar="WxH",
                   help="derive intrinsics from image size (focal = width)")
    g.add_argument("--eye-corner-index", type=int)
    g.add_argument("--brow-index", type=int)
    g.add_argument("--interocular-indices", type=_pair, metavar="A,B")
    g.add_argument("--interocular-mm", type=float)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_config(args: argparse.Namespace) -> AnalysisConfig:
    """Defaults, then the --config file, then individual flags."""
    d: dict = {}
    if getattr(args, "config", None):
        try:
            d = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InputError("config file not found", args.config) from None
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc.msg}", args.config, exc.lineno) from None

    sg = d.get("sg", {})
    if args.sg_window is not None:
        sg["window"] = args.sg_window
    if args.sg_order is not None:
        sg["order"] = args.sg_order

    cam = d.get("camera")
    if args.image_size is not None:
        cam = CameraIntrinsics.from_image_size(*args.image_size).to_dict()
    flags = {k: getattr(args, k) for k in ("fx", "fy", "cx", "cy") if getattr(args, k) is not None}
    if flags:
        cam = {**(cam or {}), **flags}
        cam.setdefault("fy", cam.get("fx"))
        cam.setdefault("fx", cam.get("fy"))

    brow = dict(d.get("eyebrow", {}))
    if args.eye_corner_index is not None:
        brow["eye_inner_corner_index"] = args.eye_corner_index
    if args.brow_index is not None:
        brow["brow_inner_index"] = args.brow_index
    if args.interocular_indices is not None:
        brow["interocular_indices"] = tuple(int(v) for v in args.interocular_indices)
    if "interocular_indices" in brow:
        brow["interocular_indices"] = tuple(brow["interocular_indices"])

    try:
        return AnalysisConfig(
            sg=SgConfig(**sg),
            model=FaceModel3D.from_dict(d["model"]) if "model" in d else FaceModel3D(),
            camera=CameraIntrinsics(**cam) if cam else None,
            image_size=tuple(d.get("image_size", (1920, 1080))),
            eyebrow=EyebrowConfig(**brow),
            f0=F0Config(**d.get("f0", {})),
            interocular_mm=args.interocular_mm or d.get("interocular_mm"),
        )
    except (TypeError, KeyError) as exc:
        raise InputError(f"bad configuration: {exc}") from None


def _load_session(path: Path, config: AnalysisConfig) -> AnalysisResult:
    """A manifest is analysed; a saved result is loaded as is."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError("file not found", path) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    if isinstance(doc, dict) and "pitch" in doc and "eyebrow" in doc:
        return load_result(path)
    return analyze(read_manifest(path), config)


def cmd_analyze(args) -> int:
    config = build_config(args)
    result = analyze(read_manifest(args.manifest), config)
    if args.output:
        save_result(result, args.output)
        log.info("wrote %s", args.output)
    else:
        sys.stdout.write(dumps(result.to_dict()) + "\n")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = build_config(args)
    real = _load_session(args.real, config)
    vh = []
    for path in args.vh:
        r = _load_session(path, config)
        if r.strength_percent is None:
            raise InputError("virtual-human session has no strength_percent", path)
        vh.append((r.strength_percent, r))
    out = Path(args.output)
    report = compare_sessions(real, vh, out, feature=args.feature,
                              focus_interval=args.focus_interval)
    if args.save_results:
        save_result(real, out / "real.result.json")
        for s, r in vh:
            save_result(r, out / f"vh_{s:g}.result.json")
    if not args.no_plot:
        plot_session(real, [r for _, r in sorted(vh, key=lambda x: -x[0])], out / "figure.svg")
    sys.stdout.write(format_table([report]))
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        d = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError("spec file not found", args.spec) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg}", args.spec, exc.lineno) from None
    label = d.pop("label", "synthetic")
    try:
        spec = FocusStimulusSpec.from_dict(d)
    except TypeError as exc:
        raise InputError(f"bad stimulus spec: {exc}", args.spec) from None
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    cam = synth_camera()
    interocular = synth_interocular_mm()
    audio_name = None
    if not args.no_audio:
        audio_name = "audio.wav"
        write_wav(synth_focus_audio(spec), out / audio_name)
    sessions = [("real", None)] + [(f"vh_{s:g}", s) for s in args.strengths]
    for name, strength in sessions:
        if strength is None:
            track = synth_landmark_track(spec, cam=cam, noise_px=args.real_noise,
                                         noise_seed=spec.idiosyncrasy_seed)
        else:
            track = synth_landmark_track(spec, cam=cam, strength=strength)
        write_landmark_file(track, out / f"{name}.csv")
        write_manifest(SessionManifest(label, f"{name}.csv", interocular, audio_name,
                                       strength, cam.to_dict()), out / f"{name}.json")
    log.info("wrote %d sessions to %s", len(sessions), out)
    sys.stdout.write("\n".join(str(out / f"{n}.json") for n, _ in sessions) + "\n")
    return EXIT_OK


def cmd_plot(args) -> int:
    results = [load_result(p) for p in args.results]
    plot_session(results[0], results[1:], args.output)
    return EXIT_OK


def cmd_report(args) -> int:
    reports = []
    for p in args.reports:
        try:
            reports.append(json.loads(Path(p).read_text(encoding="utf-8")))
        except FileNotFoundError:
            raise InputError("report not found", p) from None
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc.msg}", p, exc.lineno) from None
    text = format_table(reports)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="avprosody",
        description="Head-pitch, eyebrow and prosody analysis of real and virtual talkers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="analyse one session manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("-o", "--output", type=Path, help="result JSON (default: stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", parents=[common],
                       help="correlate virtual-human sessions against a real one")
    p.add_argument("real", type=Path, help="real-talker manifest or result JSON")
    p.add_argument("vh", type=Path, nargs="*", help="virtual-human manifests or results")
    p.add_argument("-o", "--output", type=Path, default=Path("."), help="output directory")
    p.add_argument("--feature", choices=["peak-to-peak", "focal-extremum"], default="peak-to-peak")
    p.add_argument("--focus-interval", type=_pair, metavar="START,END")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--save-results", action="store_true", help="also write per-session result JSON")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", parents=[common], help="render synthetic focus sessions")
    p.add_argument("spec", type=Path, help="stimulus spec JSON")
    p.add_argument("--strengths", type=_floats, default=[50.0, 100.0, 150.0, 200.0])
    p.add_argument("-o", "--output", type=Path, default=Path("synth"))
    p.add_argument("--no-audio", action="store_true")
    p.add_argument("--real-noise", type=float, default=0.0, metavar="PX",
                   help="Gaussian landmark jitter (pixels) added to the real session")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plot", parents=[common], help="figure from saved results")
    p.add_argument("results", type=Path, nargs="+", help="main result, then overlays")
    p.add_argument("-o", "--output", type=Path, default=Path("figure.svg"))
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("report", parents=[common], help="merge compare reports into one table")
    p.add_argument("reports", type=Path, nargs="+")
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL if exc.numerical else EXIT_INPUT
    except (ConvergenceError, DegenerateError, ArithmeticError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except (InputError, ValidationError, ComparisonError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
