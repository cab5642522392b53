"""Central, local and clustered-federated training regimes."""
from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace

import numpy as np

from ..core.ops import ConfigurationError
from ..data.windows import ClientData, WindowSet
from ..evaluation import MAPE_FLOOR, ClientMetrics, client_metrics
from ..models.architectures import Forecaster, ModelSpec, build_model
from ..models.params import ParameterSet
from ..models.training import BATCH_SIZE, PATIENCE, train_epochs
from ..seeding import derive_rng
from .aggregation import AGGREGATIONS, ClientUpdate, aggregate
from .transport import TRANSPORTS, TransportError, make_link

REGIMES = ("central", "local", "federated")
HOURS_PER_MONTH = 30 * 24


class ClientTrainingError(RuntimeError):
    def __init__(self, client_id: str, cause: BaseException):
        super().__init__(f"client {client_id}: {type(cause).__name__}: {cause}")
        self.client_id = client_id
        self.cause = cause


class InsufficientSpanError(ValueError):
    pass


@dataclass(frozen=True)
class RegimeConfig:
    regime: str
    n_epoch: int = 20
    n_round: int = 2
    epochs: int = 100
    early_stopping: bool | None = None
    patience: int = PATIENCE
    aggregation: str = "data_weighted"
    batch_size: int = BATCH_SIZE
    learning_rate: float = 1e-3
    mape_floor: float = MAPE_FLOOR
    transport: str = "inprocess"

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigurationError(f"unknown regime {self.regime!r}")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigurationError(f"unknown aggregation {self.aggregation!r}")
        if self.transport not in TRANSPORTS:
            raise ConfigurationError(f"unknown transport {self.transport!r}")
        if min(self.n_epoch, self.n_round, self.epochs) < 0:
            raise ConfigurationError("epoch and round counts must be non-negative")
        if self.regime == "federated" and self.early_stopping:
            raise ConfigurationError("federated local updates run without early stopping")

    @property
    def uses_early_stopping(self) -> bool:
        if self.regime == "federated":
            return False
        return True if self.early_stopping is None else bool(self.early_stopping)

    @property
    def patience_or_none(self) -> int | None:
        return self.patience if self.uses_early_stopping else None


@dataclass
class ClusterModel:
    cluster: int
    members: list[str]
    params: ParameterSet
    round: int = 0


@dataclass
class RegimeResult:
    regime: str
    spec: ModelSpec
    client_metrics: list[ClientMetrics] = field(default_factory=list)
    seconds_per_epoch: float = 0.0
    failures: list[str] = field(default_factory=list)
    checkpoints: dict[str, ParameterSet] = field(default_factory=dict)
    predictions: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    clusters: dict[int, ClusterModel] = field(default_factory=dict)
    broadcasts: dict[int, int] = field(default_factory=dict)
    collects: dict[int, int] = field(default_factory=dict)
    cluster_of: dict[str, int] = field(default_factory=dict)


def init_base_model(spec: ModelSpec, seed: int | None = None) -> ParameterSet:
    """Randomly initialised weights ``w_rand`` for ``spec`` (seeded)."""
    return build_model(spec if seed is None else spec.with_seed(seed)).get_parameters()


def _dropout_rng(master_seed: int, party: str, spec: ModelSpec) -> np.random.Generator:
    return derive_rng(master_seed, "dropout", party, spec.kind, spec.horizon, spec.n_features)


class ClientTrainer:
    """A client's private model, optimiser state and dropout stream.

    The same trainer is reused across federated rounds, so optimiser
    moments and the dropout stream carry over between rounds exactly as
    they would in an uninterrupted local run.
    """

    def __init__(self, data: ClientData, spec: ModelSpec, master_seed: int):
        self.data = data
        self.model: Forecaster = build_model(spec)
        self.rng = _dropout_rng(master_seed, data.client_id, spec)

    @property
    def client_id(self) -> str:
        return self.data.client_id


def local_update(trainer: ClientTrainer, w_in: ParameterSet, n_epoch: int,
                 config: RegimeConfig | None = None) -> ClientUpdate:
    cfg = config or RegimeConfig("federated")
    cid = trainer.client_id
    n = trainer.data.n_train
    try:
        trainer.model.set_parameters(w_in)
        if n_epoch == 0:
            return ClientUpdate(cid, w_in.copy(), n, 0.0)
        res = train_epochs(trainer.model, trainer.data.windows, n_epoch, cfg.batch_size,
                           early_stopping=None, rng=trainer.rng, learning_rate=cfg.learning_rate)
    except Exception as exc:  # noqa: BLE001 - reattach client identity
        raise ClientTrainingError(cid, exc) from exc
    return ClientUpdate(cid, res.params, n, res.mean_seconds_per_epoch)


def _evaluate(model: Forecaster, data: ClientData, floor: float, result: RegimeResult) -> None:
    x, y = data.windows.arrays("test")
    pred = model.predict(x)
    result.client_metrics.append(client_metrics(data.client_id, pred, y, floor))
    result.predictions[data.client_id] = (y, pred)


def _by_id(clients: list[ClientData]) -> list[ClientData]:
    if not clients:
        raise ConfigurationError("fleet is empty")
    ids = [c.client_id for c in clients]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("duplicate client ids in fleet")
    return sorted(clients, key=lambda c: c.client_id)


def _federated_round(trainers: list[ClientTrainer], w: ParameterSet, cfg: RegimeConfig,
                     counts: dict) -> list[ClientUpdate]:
    """Broadcast ``w``, run every member's local update, collect the updates."""
    links = [make_link(cfg.transport) for _ in trainers]
    seconds: dict[str, float] = {}
    errors: dict[str, BaseException] = {}

    def serve(trainer: ClientTrainer, end):
        try:
            w_local = end.recv()
            up = local_update(trainer, w_local, cfg.n_epoch, cfg)
            seconds[trainer.client_id] = up.seconds_per_epoch
            end.send(up.params)
        except BaseException as exc:  # noqa: BLE001 - surfaced by the server side
            errors[trainer.client_id] = exc
            end.close()

    threads = []
    try:
        for trainer, (server, client) in zip(trainers, links):
            if cfg.transport == "stream":
                t = threading.Thread(target=serve, args=(trainer, client), daemon=True)
                t.start()
                threads.append(t)
            server.send(w)
            counts["broadcast"] += 1
            if cfg.transport == "inprocess":
                serve(trainer, client)
        updates = []
        for trainer, (server, _) in zip(trainers, links):
            if trainer.client_id in errors:
                break
            try:
                p = server.recv()
            except TransportError:
                if trainer.client_id in errors:
                    break
                raise
            counts["collect"] += 1
            updates.append(ClientUpdate(trainer.client_id, p, trainer.data.n_train,
                                        seconds.get(trainer.client_id, 0.0)))
    finally:
        for t in threads:
            t.join()
        for server, client in links:
            server.close()
            client.close()
    if errors:
        cid = sorted(errors)[0]
        exc = errors[cid]
        raise exc if isinstance(exc, ClientTrainingError) else ClientTrainingError(cid, exc)
    return updates


def run_federated(clients: list[ClientData], assignment: dict[str, int], spec: ModelSpec,
                  config: RegimeConfig | None = None, master_seed: int = 0,
                  cluster_order: list[int] | None = None) -> RegimeResult:
    """Clustered federated averaging: one independent FedAvg group per cluster.

    Every cluster starts from the same ``w_rand``. A client failure aborts
    its cluster (no partial aggregation); other clusters proceed.
    """
    cfg = config or RegimeConfig("federated")
    if cfg.regime != "federated":
        raise ConfigurationError("run_federated needs a federated RegimeConfig")
    clients = _by_id(clients)
    missing = [c.client_id for c in clients if c.client_id not in assignment]
    if missing:
        raise ConfigurationError(f"clients without a cluster: {', '.join(missing)}")
    w_rand = init_base_model(spec)
    result = RegimeResult("federated", spec, cluster_of={c.client_id: int(assignment[c.client_id])
                                                         for c in clients})
    labels = sorted({result.cluster_of[c.client_id] for c in clients})
    order = labels if cluster_order is None else list(cluster_order)
    if sorted(order) != labels:
        raise ConfigurationError(f"cluster_order {order} is not a permutation of {labels}")
    epoch_seconds = []
    for k in order:
        members = [c for c in clients if result.cluster_of[c.client_id] == k]
        trainers = [ClientTrainer(c, spec, master_seed) for c in members]
        cm = ClusterModel(k, [c.client_id for c in members], w_rand.copy())
        counts = {"broadcast": 0, "collect": 0}
        try:
            for _ in range(cfg.n_round):
                updates = _federated_round(trainers, cm.params, cfg, counts)
                cm.params = aggregate(updates, cfg.aggregation)
                cm.round += 1
                epoch_seconds += [u.seconds_per_epoch for u in updates if u.seconds_per_epoch > 0]
        except ClientTrainingError as exc:
            result.failures.append(f"federated cluster {k}: {exc}")
            continue
        finally:
            result.broadcasts[k] = counts["broadcast"]
            result.collects[k] = counts["collect"]
        result.clusters[k] = cm
        result.checkpoints[f"cluster{k}"] = cm.params
        for trainer in trainers:
            trainer.model.set_parameters(cm.params)
            _evaluate(trainer.model, trainer.data, cfg.mape_floor, result)
    result.client_metrics.sort(key=lambda m: m.client_id)
    result.seconds_per_epoch = float(np.mean(epoch_seconds)) if epoch_seconds else 0.0
    return result


def merge_windows(clients: list[ClientData]) -> WindowSet:
    """Pool train and val windows of all clients (client-id order, chronological within)."""
    clients = _by_id(clients)
    xs, ys, parts, starts = [], [], [], []
    for part in ("train", "val"):
        for c in clients:
            idx = c.windows.indices(part)
            xs.append(c.windows.inputs[idx])
            ys.append(c.windows.targets[idx])
            parts.append(c.windows.partition[idx])
            starts.append(c.windows.start[idx])
    first = clients[0].windows
    return WindowSet(np.concatenate(xs), np.concatenate(ys), np.concatenate(parts),
                     np.concatenate(starts), first.look_back, list(first.names))


def run_central(clients: list[ClientData], spec: ModelSpec, config: RegimeConfig | None = None,
                master_seed: int = 0) -> RegimeResult:
    cfg = config or RegimeConfig("central")
    clients = _by_id(clients)
    merged = merge_windows(clients)
    model = build_model(spec)
    party = "+".join(c.client_id for c in clients)
    result = RegimeResult("central", spec)
    try:
        res = train_epochs(model, merged, cfg.epochs, cfg.batch_size, cfg.patience_or_none,
                           rng=_dropout_rng(master_seed, party, spec),
                           learning_rate=cfg.learning_rate)
    except Exception as exc:  # noqa: BLE001
        result.failures.append(f"central: {type(exc).__name__}: {exc}")
        return result
    result.seconds_per_epoch = res.mean_seconds_per_epoch
    result.checkpoints["central"] = res.params
    for c in clients:
        _evaluate(model, c, cfg.mape_floor, result)
    return result


def run_local(clients: list[ClientData], spec: ModelSpec, config: RegimeConfig | None = None,
              master_seed: int = 0) -> RegimeResult:
    """Independent per-client trainings; a failing client is reported and skipped."""
    cfg = config or RegimeConfig("local")
    result = RegimeResult("local", spec)
    seconds = []
    for c in _by_id(clients):
        trainer = ClientTrainer(c, spec, master_seed)
        try:
            res = train_epochs(trainer.model, c.windows, cfg.epochs, cfg.batch_size,
                               cfg.patience_or_none, rng=trainer.rng,
                               learning_rate=cfg.learning_rate)
        except Exception as exc:  # noqa: BLE001
            result.failures.append(f"local {c.client_id}: {type(exc).__name__}: {exc}")
            continue
        if res.seconds_per_epoch:
            seconds.append(res.mean_seconds_per_epoch)
        result.checkpoints[c.client_id] = res.params
        _evaluate(trainer.model, c, cfg.mape_floor, result)
    result.seconds_per_epoch = float(np.mean(seconds)) if seconds else 0.0
    return result


def run_regime(regime: str, clients: list[ClientData], spec: ModelSpec, config: RegimeConfig,
               master_seed: int, assignment: dict[str, int] | None = None) -> RegimeResult:
    if regime == "federated":
        if assignment is None:
            raise ConfigurationError("federated regime needs a cluster assignment")
        return run_federated(clients, assignment, spec, config, master_seed)
    if regime == "central":
        return run_central(clients, spec, config, master_seed)
    return run_local(clients, spec, config, master_seed)


def limited_data_view(clients: list[ClientData], months: float = 3) -> list[ClientData]:
    """Keep only training windows that lie inside the first ``months`` (30-day) months.

    Validation and test windows are untouched, so metrics stay comparable
    with the full-data run. A limit at or beyond a client's span leaves it as is.
    """
    if months <= 0:
        raise ConfigurationError("months must be positive")
    limit = int(round(months * HOURS_PER_MONTH))
    out = []
    for c in clients:
        if limit >= len(c.series):
            out.append(c)
            continue
        w = c.windows
        end = w.start + w.look_back + w.horizon
        keep = (w.partition != "train") | (end <= limit)
        if not np.any(keep & (w.partition == "train")):
            raise InsufficientSpanError(
                f"{c.client_id}: no training window fits in the first {limit} hours")
        out.append(replace(c, windows=w.subset(keep)))
    return out
