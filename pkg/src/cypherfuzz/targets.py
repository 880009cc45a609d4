"""Engine targets: the built-in reference executor plus adapters that
speak external engines' client protocols.

Target descriptors select a backend:

- ``reference`` — the in-process reference executor.
- ``reference!<fault>[,<fault>]`` — a fault-injected copy, for
  self-tests and oracle calibration (see :class:`cypherfuzz.executor.Fault`).
- ``bolt://[user:password@]host:port[/database]`` — engines speaking the
  graph-database binary protocol (requires the ``neo4j`` driver).
- ``redis://host:port`` — a key-value server with a graph module
  (requires the ``redis`` driver).

External adapters are optional at runtime; the reference executor has no
external dependency.
"""

from __future__ import annotations

from urllib.parse import urlparse

from . import query_ast as qa
from .errors import ConfigError, SetupError
from .executor import (
    DEFAULT_ROW_LIMIT,
    ExecOutcome,
    Fault,
    OutcomeKind,
    reference_eval,
)
from .generate import IndexSpec, create_script
from .model import GraphSchema, PropertyGraph
from .skeleton import EngineCaps


class EngineTarget:
    """One engine instance under test."""

    label: str
    caps: EngineCaps
    schema_mode: str  # "schema-free" | "schema-based"

    def setup(
        self, schema: GraphSchema, graph: PropertyGraph, indexes: list[IndexSpec]
    ) -> None:
        raise NotImplementedError

    def execute(self, query: qa.Query, time_limit: float | None = None) -> ExecOutcome:
        raise NotImplementedError

    def close(self) -> None:
        pass


class ReferenceTarget(EngineTarget):
    """In-process reference executor, optionally fault-injected."""

    schema_mode = "schema-free"

    def __init__(
        self,
        label: str = "reference",
        faults: frozenset[Fault] = frozenset(),
        row_limit: int = DEFAULT_ROW_LIMIT,
    ):
        self.label = label
        self.caps = EngineCaps()
        self.faults = faults
        self.row_limit = row_limit
        self.graph: PropertyGraph | None = None
        self.indexes: list[IndexSpec] = []

    def setup(self, schema, graph, indexes) -> None:
        # drop-and-recreate: the previous state is simply replaced
        self.graph = graph
        self.indexes = list(indexes)

    def execute(self, query: qa.Query, time_limit: float | None = None) -> ExecOutcome:
        if self.graph is None:
            return ExecOutcome.error("target was not set up")
        # Determinism: the reference executor bounds work by a row/step cap
        # instead of wall-clock time, and reports overruns as timeouts.
        return reference_eval(
            self.graph, query, row_limit=self.row_limit, faults=self.faults
        )


# ---------------------------------------------------------------------------
# Error classification tables for external adapters

_BOLT_REJECTION_MARKERS = ("SyntaxError", "SemanticError", "ParameterMissing")


def classify_bolt_failure(code: str | None, message: str) -> OutcomeKind:
    """Map a bolt-protocol error status to an outcome kind."""
    code = code or ""
    if any(marker in code for marker in _BOLT_REJECTION_MARKERS):
        return OutcomeKind.SEMANTIC_REJECTION
    if "ClientError" in code or "TransientError" in code or "DatabaseError" in code:
        return OutcomeKind.RUNTIME_ERROR
    lowered = message.lower()
    if "timed out" in lowered or "timeout" in lowered:
        return OutcomeKind.TIMEOUT
    if "connection" in lowered or "defunct" in lowered:
        return OutcomeKind.CONNECTION_LOST
    return OutcomeKind.RUNTIME_ERROR


_REDIS_REJECTION_MARKERS = ("Invalid input", "Syntax error", "not defined", "errMsg")


def classify_redis_failure(message: str) -> OutcomeKind:
    """Map a graph-module response error to an outcome kind."""
    if any(marker in message for marker in _REDIS_REJECTION_MARKERS):
        return OutcomeKind.SEMANTIC_REJECTION
    lowered = message.lower()
    if "timed out" in lowered or "timeout" in lowered:
        return OutcomeKind.TIMEOUT
    if "connection" in lowered:
        return OutcomeKind.CONNECTION_LOST
    return OutcomeKind.RUNTIME_ERROR


class BoltTarget(EngineTarget):
    """Adapter for engines speaking the graph-database binary protocol."""

    schema_mode = "schema-free"

    def __init__(self, descriptor: str):
        parsed = urlparse(descriptor)
        if not parsed.hostname:
            raise ConfigError(f"bolt descriptor needs a host: {descriptor!r}")
        self.host = parsed.hostname
        self.port = parsed.port or 7687
        self.auth = (parsed.username, parsed.password) if parsed.username else None
        self.database = parsed.path.lstrip("/") or None
        self.label = f"bolt://{self.host}:{self.port}" + (
            f"/{self.database}" if self.database else ""
        )
        self.caps = EngineCaps()
        self._driver = None

    def _connect(self):
        if self._driver is None:
            try:
                import neo4j  # noqa: PLC0415
            except ImportError as exc:
                raise SetupError(
                    "the neo4j driver is required for bolt targets"
                ) from exc
            auth = self.auth if self.auth else None
            self._driver = neo4j.GraphDatabase.driver(
                f"bolt://{self.host}:{self.port}", auth=auth
            )
        return self._driver

    def _run(self, statement: str, time_limit: float | None = None):
        driver = self._connect()
        with driver.session(database=self.database) as session:
            return list(session.run(statement, timeout=time_limit))

    def setup(self, schema, graph, indexes) -> None:
        try:
            self._run("MATCH (n) DETACH DELETE n;")
            for spec in indexes:
                self._run(f"CREATE INDEX IF NOT EXISTS FOR (n:{spec.label}) ON (n.{spec.key});")
            script = create_script(graph)
            if script.startswith("CREATE"):
                self._run(script)
        except SetupError:
            raise
        except Exception as exc:
            raise SetupError(f"{self.label}: {exc}") from exc

    def execute(self, query: qa.Query, time_limit: float | None = None) -> ExecOutcome:
        from .executor import ResultSet

        text = qa.render(query)
        try:
            records = self._run(text, time_limit)
        except SetupError as exc:
            return ExecOutcome.lost(str(exc))
        except Exception as exc:
            code = getattr(exc, "code", None)
            kind = classify_bolt_failure(code, str(exc))
            if kind == OutcomeKind.TIMEOUT:
                return ExecOutcome.timeout()
            if kind == OutcomeKind.CONNECTION_LOST:
                return ExecOutcome.lost(str(exc))
            if kind == OutcomeKind.SEMANTIC_REJECTION:
                return ExecOutcome.rejection(str(exc))
            return ExecOutcome.error(str(exc))
        columns = tuple(records[0].keys()) if records else ()
        rows = [tuple(record.values()) for record in records]
        final = query.clauses[-1]
        ordered = isinstance(final, qa.Return) and bool(final.order_by)
        return ExecOutcome.success(ResultSet(columns, rows, ordered=ordered))

    def close(self) -> None:
        if self._driver is not None:
            self._driver.close()
            self._driver = None


class RedisGraphTarget(EngineTarget):
    """Adapter for a key-value server exposing a graph query module."""

    schema_mode = "schema-free"

    def __init__(self, descriptor: str):
        parsed = urlparse(descriptor)
        if not parsed.hostname:
            raise ConfigError(f"redis descriptor needs a host: {descriptor!r}")
        self.host = parsed.hostname
        self.port = parsed.port or 6379
        self.graph_name = parsed.path.lstrip("/") or "fuzz"
        self.label = f"redis://{self.host}:{self.port}/{self.graph_name}"
        # the engine rejects MATCH after OPTIONAL MATCH
        self.caps = EngineCaps(allows_optional_match_before_match=False)
        self._client = None

    def _connect(self):
        if self._client is None:
            try:
                import redis  # noqa: PLC0415
            except ImportError as exc:
                raise SetupError(
                    "the redis driver is required for redis targets"
                ) from exc
            self._client = redis.Redis(host=self.host, port=self.port)
        return self._client

    def _query(self, statement: str, time_limit: float | None = None):
        client = self._connect()
        args = ["GRAPH.QUERY", self.graph_name, statement, "--compact"]
        if time_limit:
            args += ["timeout", str(int(time_limit * 1000))]
        return client.execute_command(*args)

    def setup(self, schema, graph, indexes) -> None:
        try:
            client = self._connect()
            try:
                client.execute_command("GRAPH.DELETE", self.graph_name)
            except Exception:
                pass  # absent graph
            for spec in indexes:
                self._query(f"CREATE INDEX ON :{spec.label}({spec.key})")
            script = create_script(graph)
            if script.startswith("CREATE"):
                self._query(script.rstrip("\n;"))
        except SetupError:
            raise
        except Exception as exc:
            raise SetupError(f"{self.label}: {exc}") from exc

    def execute(self, query: qa.Query, time_limit: float | None = None) -> ExecOutcome:
        from .executor import ResultSet

        try:
            reply = self._query(qa.render(query).rstrip(";"), time_limit)
        except SetupError as exc:
            return ExecOutcome.lost(str(exc))
        except Exception as exc:
            kind = classify_redis_failure(str(exc))
            if kind == OutcomeKind.TIMEOUT:
                return ExecOutcome.timeout()
            if kind == OutcomeKind.CONNECTION_LOST:
                return ExecOutcome.lost(str(exc))
            if kind == OutcomeKind.SEMANTIC_REJECTION:
                return ExecOutcome.rejection(str(exc))
            return ExecOutcome.error(str(exc))
        columns, rows = _decode_redis_reply(reply)
        final = query.clauses[-1]
        ordered = isinstance(final, qa.Return) and bool(final.order_by)
        return ExecOutcome.success(ResultSet(columns, rows, ordered=ordered))

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None


def _decode_redis_reply(reply) -> tuple[tuple[str, ...], list[tuple]]:
    # header, result rows, statistics
    if not isinstance(reply, (list, tuple)) or len(reply) < 2:
        return (), []
    header = tuple(
        (h[1] if isinstance(h, (list, tuple)) else h) for h in reply[0]
    )
    header = tuple(c.decode() if isinstance(c, bytes) else str(c) for c in header)
    rows = []
    for raw in reply[1]:
        rows.append(tuple(_decode_redis_value(cell) for cell in raw))
    return header, rows


def _decode_redis_value(cell):
    if isinstance(cell, bytes):
        text = cell.decode()
        for caster in (int, float):
            try:
                return caster(text)
            except ValueError:
                continue
        if text in ("true", "false"):
            return text == "true"
        if text == "NULL":
            return None
        return text
    if isinstance(cell, (list, tuple)):
        return [_decode_redis_value(v) for v in cell]
    return cell


# ---------------------------------------------------------------------------
# Descriptor parsing and module-level operations

_FAULT_NAMES = {fault.value: fault for fault in Fault}


def parse_target(descriptor: str, *, row_limit: int = DEFAULT_ROW_LIMIT) -> EngineTarget:
    """Build an engine target from its config descriptor string."""
    if descriptor == "reference" or descriptor.startswith("reference!"):
        faults = frozenset()
        if "!" in descriptor:
            _, _, spec = descriptor.partition("!")
            names = [s.strip() for s in spec.split(",") if s.strip()]
            unknown = [n for n in names if n not in _FAULT_NAMES]
            if unknown:
                raise ConfigError(
                    f"unknown fault(s) {unknown}; known: {sorted(_FAULT_NAMES)}"
                )
            faults = frozenset(_FAULT_NAMES[n] for n in names)
        return ReferenceTarget(label=descriptor, faults=faults, row_limit=row_limit)
    if descriptor.startswith("bolt://"):
        return BoltTarget(descriptor)
    if descriptor.startswith("redis://"):
        return RedisGraphTarget(descriptor)
    raise ConfigError(f"unknown target descriptor {descriptor!r}")


def setup_target(
    target: EngineTarget,
    schema: GraphSchema,
    graph: PropertyGraph,
    indexes: list[IndexSpec],
) -> None:
    """Load exactly the generated graph and indexes into a target.

    Idempotent via drop-and-recreate; raises SetupError on failure.
    """
    target.setup(schema, graph, indexes)


def execute(
    target: EngineTarget, query: qa.Query, time_limit: float | None = None
) -> ExecOutcome:
    """Run one query on one target, classifying the response.

    External adapters enforce the wall-clock budget through their drivers;
    the reference target uses a deterministic work cap instead.
    """
    return target.execute(query, time_limit)
