from glassbox.chains import ModelCategory, TransporterChain, build_chain, chain_deserialize, chain_serialize
from glassbox.client import RemoteCall, StreamClient, client_download, client_predict, client_upload, remote_call
from glassbox.cluster import KMeansModel, fit_kmeans
from glassbox.csv_table import CsvTable
from glassbox.envelope import Compression, Encryption, SealedEnvelope, StreamConfig, open_payload, seal_payload
from glassbox.errors import GlassboxError, ModelError, StreamError
from glassbox.imodel import Dataset, IModel
from glassbox.itransporter import AbstractTransporter, ITransporter
from glassbox.linear_model import LinearRegressionModel, LogisticRegressionModel, fit_linear_regression, fit_logistic_regression
from glassbox.metrics import MetricKind, compute_metric
from glassbox.naive_bayes import GaussianNBModel, fit_gaussian_nb
from glassbox.qc import QcReport, run_qc_pipeline
from glassbox.registry import extract_state, predict, restore_state
from glassbox.server import ServerHandle, serve
from glassbox.signing import SignedEnvelope, sign_document, verify_document
from glassbox.tensors import canonical_bytes, decode_scalar, decode_tensor, encode_scalar, encode_tensor
from glassbox.transport import Export, Import, ModelDocument, export_model, import_model, load_document, save_document
from glassbox.tree import DecisionTreeClassifierModel, fit_decision_tree
from glassbox.validation import ValidationReport, validate_document
