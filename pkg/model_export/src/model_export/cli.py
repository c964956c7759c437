"""Export command: `sess-export --arch NAME --out DIR [--verify IMAGE]`.

The leading word `export` is accepted and ignored so the invocation also
reads naturally as a subcommand.
"""

from __future__ import annotations

import argparse
import sys

from .export import ExportFailed, ExportSpec, export_model


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sess-export",
        description="Export a torchvision classifier to ONNX with the JSON "
                    "sidecar consumed by the sess backend",
    )
    parser.add_argument("subcommand", nargs="?", choices=["export"],
                        help=argparse.SUPPRESS)
    parser.add_argument("--arch", required=True,
                        help="torchvision architecture name, e.g. resnet50")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--verify", default=None,
                        help="reference image; its in-framework top-1 is "
                             "recorded in the sidecar for parity checks")
    parser.add_argument("--opset", type=int, default=17)
    parser.add_argument("--no-pretrained", action="store_true",
                        help="skip the pretrained-weight download attempt")
    parser.add_argument("--seed", type=int, default=0,
                        help="init seed for the random-weight fallback")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = ExportSpec(
        architecture=args.arch,
        out_dir=args.out,
        opset=args.opset,
        verify_image=args.verify,
        pretrained=not args.no_pretrained,
        fallback_seed=args.seed,
    )
    try:
        paths = export_model(spec)
    except ExportFailed as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {paths['model']} and {paths['meta']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
