"""Entry point: `mbrkit-adapter --backend lexical_mock|qe_mock|real_model`.

Speaks the scorer protocol on stdio until EOF.  A real-model backend that
fails to load reports one error line and exits with code 2.
"""

import argparse
import json
import sys

from .server import BACKENDS, AdapterConfig, AdapterStartupError, serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mbrkit-adapter", description=__doc__)
    parser.add_argument("--backend", choices=BACKENDS, required=True)
    parser.add_argument("--model-id", dest="model_id", default=None)
    parser.add_argument("--device", default=None)
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=32)
    args = parser.parse_args(argv)

    try:
        config = AdapterConfig(
            backend=args.backend,
            model_id=args.model_id,
            device=args.device,
            batch_size=args.batch_size,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        serve(config)
    except AdapterStartupError as exc:
        sys.stdout.write(json.dumps({"req_id": None, "error": str(exc)}) + "\n")
        sys.stdout.flush()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
