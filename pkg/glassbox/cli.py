"""
Command-line entry points. Every subcommand is a thin composition of library operations.

Exit codes: 0 on success, 1 on an operational failure (bad file, invalid document, failed verification, remote error),
2 on a usage error.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from glassbox.client import StreamClient
from glassbox.csv_table import CsvTable
from glassbox.envelope import DEFAULT_HOST, DEFAULT_PORT, Compression, Encryption, StreamConfig
from glassbox.errors import GlassboxError
from glassbox.qc import DEFAULT_SEED, run_qc_pipeline
from glassbox.registry import MODEL_ALIASES, model_class, resolve_model_name
from glassbox.server import serve
from glassbox.signing import load_signed, load_signing_key, load_verify_key, save_signed, sign_document, verify_document
from glassbox.tensors import DATA_STRUCTURE_KEY, NDARRAY_DTYPE_KEY, NDARRAY_SHAPE_KEY, NDARRAY_STRUCTURE, SCALAR_TYPE_KEY, parse
from glassbox.transport import export_model, import_model, load_document, read_bytes, save_document
from glassbox.validation import validate_document

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

PREDICTION_COLUMN = "prediction"

# flag destination -> constructor keyword, per model type
_HYPER_FLAGS: Dict[str, Dict[str, str]] = {
    "LinearRegression": {"fit_intercept": "fit_intercept"},
    "LogisticRegression": {"max_iter": "max_iter", "tol": "tol", "lr": "lr"},
    "DecisionTreeClassifier": {"max_depth": "max_depth"},
    "KMeans": {"n_clusters": "n_clusters", "random_state": "random_state", "max_iter": "max_iter"},
    "GaussianNB": {"var_smoothing": "var_smoothing"},
}
_ALL_HYPER_FLAGS = sorted({flag for flags in _HYPER_FLAGS.values() for flag in flags})


class UsageError(Exception):
    pass


def _hyper_params(model_type: str, args: argparse.Namespace) -> Dict[str, Any]:
    accepted = _HYPER_FLAGS[model_type]
    given = {flag: getattr(args, flag) for flag in _ALL_HYPER_FLAGS if getattr(args, flag) is not None}
    rejected = sorted(set(given) - set(accepted))
    if rejected:
        raise UsageError(f"{model_type} does not take {', '.join('--' + f.replace('_', '-') for f in rejected)}")
    return {accepted[flag]: value for flag, value in given.items()}


def _stream_config(args: argparse.Namespace, **extra: Any) -> StreamConfig:
    try:
        return StreamConfig.from_env(
            key_hex=args.key_hex,
            encryption=Encryption.none if args.no_encrypt else Encryption.aead,
            compression=Compression.none if args.no_compress else Compression.gzip,
            **extra,
        )
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def _cmd_train(args: argparse.Namespace) -> int:
    model_type = resolve_model_name(args.model)
    if model_type not in _HYPER_FLAGS:
        raise UsageError(f"unknown model {args.model!r}; choose one of {', '.join(MODEL_ALIASES)}")
    try:
        model = model_class(model_type)(**_hyper_params(model_type, args))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    fitted = model.fit(CsvTable.read(args.data).dataset(args.target))
    save_document(export_model(fitted), args.out)
    print(f"trained {model_type} on {args.data}, saved to {args.out}")
    return EXIT_OK


def _cmd_predict(args: argparse.Namespace) -> int:
    model = import_model(load_document(args.model))
    X = CsvTable.read(args.data).features(exclude=args.target)
    CsvTable.build([PREDICTION_COLUMN], model.predict(X)).write(args.out)
    return EXIT_OK


def _field_summary(value: Any) -> str:
    if isinstance(value, dict) and value.get(DATA_STRUCTURE_KEY) == NDARRAY_STRUCTURE:
        return f"tensor {value.get(NDARRAY_DTYPE_KEY)} shape {value.get(NDARRAY_SHAPE_KEY)}"
    if isinstance(value, dict) and SCALAR_TYPE_KEY in value:
        return f"scalar {value[SCALAR_TYPE_KEY]}"
    if isinstance(value, dict):
        return f"map with keys {list(value)}"
    return f"{type(value).__name__} {value!r}"


def _cmd_inspect(args: argparse.Namespace) -> int:
    doc = load_document(args.file)
    print(f"model_type:      {doc.model_type}")
    print(f"sklearn_version: {doc.sklearn_version}")
    print(f"pymilo_version:  {doc.pymilo_version}")
    print("fields:")
    for name, value in doc.data.items():
        print(f"  {name}: {_field_summary(value)}")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    report = validate_document(parse(read_bytes(args.file)))
    print(report.to_text())
    return EXIT_OK if report.ok else EXIT_FAILURE


def _cmd_sign(args: argparse.Namespace) -> int:
    out = args.out or args.file.with_name(args.file.name + ".signed")
    env = sign_document(load_document(args.file), load_signing_key(args.key))
    save_signed(env, out)
    print(f"signed {args.file} with key {env.public_key_fingerprint[:16]}, saved to {out}")
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    env = load_signed(args.file)
    if not verify_document(env, load_verify_key(args.key)):
        print(f"{args.file}: signature INVALID")
        return EXIT_FAILURE
    print(f"{args.file}: signature OK ({env.document().model_type})")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    cfg = _stream_config(args, host=args.host, port=args.port, document_path=args.model)
    handle = serve(cfg)
    print(f"serving {args.model or 'no model'} on {handle.url}", flush=True)
    try:
        handle.wait()
    except KeyboardInterrupt:
        pass
    finally:
        handle.shutdown()
    return EXIT_OK


def _cmd_call(args: argparse.Namespace) -> int:
    cfg = _stream_config(args)
    table = CsvTable.read(args.data)
    with StreamClient(args.url, cfg) as client:
        if args.attribute == "fit":
            ds = table.dataset(args.target)
            ack = client.call("fit", X=ds.X, **({} if ds.y is None else {"y": ds.y}))
            print(f"server refitted {ack['model_type']} (sha256 {ack['sha256']})")
            return EXIT_OK
        y = client.call(args.attribute, X=table.features(exclude=args.target))
    if args.out is not None:
        CsvTable.build([PREDICTION_COLUMN], y).write(args.out)
    else:
        print("\n".join(repr(v) for v in np.asarray(y).tolist()))
    return EXIT_OK


def _cmd_qc(args: argparse.Namespace) -> int:
    report = run_qc_pipeline(args.seed, workdir=args.workdir)
    print(report.to_text())
    return EXIT_OK if report.passed else EXIT_FAILURE


def _add_stream_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--key-hex", help="64 hex digits of the shared stream key (default: $MILO_STREAM_KEY)")
    parser.add_argument("--no-encrypt", action="store_true", help="send plaintext envelopes")
    parser.add_argument("--no-compress", action="store_true", help="do not gzip outgoing payloads")


def _add_hyper_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model hyper-parameters")
    group.add_argument("--fit-intercept", dest="fit_intercept", action=argparse.BooleanOptionalAction, default=None)
    group.add_argument("--max-iter", type=int)
    group.add_argument("--tol", type=float)
    group.add_argument("--lr", type=float)
    group.add_argument("--max-depth", type=int)
    group.add_argument("--n-clusters", type=int)
    group.add_argument("--random-state", type=int)
    group.add_argument("--var-smoothing", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glassbox", description="Train, export, validate, sign and serve transparent models.")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a CSV file and export it")
    p.add_argument("--model", required=True, help=f"one of {', '.join(MODEL_ALIASES)}")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--target", help="target column; omit for clustering")
    p.add_argument("--out", required=True, type=Path)
    _add_hyper_flags(p)
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("predict", help="predict with an exported model")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--target", help="column to leave out of the features")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("inspect", help="summarize a model file")
    p.add_argument("file", type=Path)
    p.set_defaults(handler=_cmd_inspect)

    p = sub.add_parser("validate", help="check a model file without importing it")
    p.add_argument("file", type=Path)
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("sign", help="sign a model file with an Ed25519 private key")
    p.add_argument("file", type=Path)
    p.add_argument("--key", required=True, type=Path)
    p.add_argument("--out", type=Path, help="signed file (default: FILE.signed)")
    p.set_defaults(handler=_cmd_sign)

    p = sub.add_parser("verify", help="verify a signed model file with an Ed25519 public key")
    p.add_argument("file", type=Path)
    p.add_argument("--key", required=True, type=Path)
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("serve", help="host a model over the encrypted streaming protocol")
    p.add_argument("--model", type=Path)
    p.add_argument("--host", default=DEFAULT_HOST)
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    _add_stream_flags(p)
    p.set_defaults(handler=_cmd_serve)

    p = sub.add_parser("call", help="call a hosted model")
    p.add_argument("attribute", choices=["predict", "decision_function", "fit"])
    p.add_argument("--url", required=True)
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--target", help="target column (fit) or column to leave out (predict)")
    p.add_argument("--out", type=Path, help="CSV for the results (default: standard output)")
    _add_stream_flags(p)
    p.set_defaults(handler=_cmd_call)

    p = sub.add_parser("qc", help="run the export/import round-trip quality control suite")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workdir", type=Path, help="keep the exported files here")
    p.set_defaults(handler=_cmd_qc)
    return parser


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"glassbox {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GlassboxError as exc:
        logger.debug("command %s failed", args.command, exc_info=True)
        print(f"glassbox {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(cli_dispatch(argv))
