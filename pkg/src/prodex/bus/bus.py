"""In-process message bus.

Topic publications deliver synchronously: each subscriber gets its own
copy of the message under a fresh handle, and the subscription's deliver
callback (installed by the owning environment's plugin) asserts the fact
under that environment's guard. Service calls are asynchronous: the
handler invocation and the timeout are clock events, so virtual-clock
runs stay deterministic.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Union

from prodex.bus.schema import SchemaError, SchemaRegistry
from prodex.clock import Clock
from prodex.values import Handle


class BusError(Exception):
    pass


DeliverFn = Callable[[str, Handle], None]  # (topic, message handle)
RespondFn = Callable[[str, int, Handle, bool], None]  # (service, call-id, handle, success)
HandlerFn = Callable[[dict], Optional[dict]]  # request values -> response values or None (drop)


@dataclass
class _Stored:
    schema: str
    values: dict
    owner: str


@dataclass
class Publisher:
    topic: str
    schema: str


@dataclass
class Subscription:
    topic: str
    schema: str
    owner: str
    deliver: DeliverFn


@dataclass
class ServiceServer:
    name: str
    request_schema: str
    response_schema: str
    handler: HandlerFn
    owner: str


@dataclass
class ServiceClient:
    service: str
    owner: str
    timeout: float
    respond: RespondFn


@dataclass
class _Call:
    done: bool = False


class MessageBus:
    def __init__(self, clock: Clock, registry: SchemaRegistry):
        self.clock = clock
        self.registry = registry
        self._lock = threading.RLock()
        self._messages: dict[int, _Stored] = {}
        self._msg_ids = itertools.count(1)
        self._call_ids = itertools.count(1)
        self._publishers: dict[str, Publisher] = {}
        self._subscriptions: dict[str, list[Subscription]] = {}
        self._servers: dict[str, ServiceServer] = {}
        self._clients: dict[tuple[str, str], ServiceClient] = {}

    # ------------------------------------------------------------ message store

    def msg_create(self, owner: str, schema: str) -> Handle:
        values = self.registry.defaults(schema)
        return self._store(schema, values, owner)

    def _store(self, schema: str, values: dict, owner: str) -> Handle:
        with self._lock:
            mid = next(self._msg_ids)
            self._messages[mid] = _Stored(schema, values, owner)
            return Handle("msg", mid)

    def _live(self, handle: Handle) -> _Stored:
        stored = self._messages.get(handle.id) if isinstance(handle, Handle) else None
        if stored is None:
            raise BusError(f"dead handle {handle!r}")
        return stored

    def msg_schema(self, handle: Handle) -> str:
        return self._live(handle).schema

    def msg_get(self, handle: Handle, path: str) -> Any:
        stored = self._live(handle)
        return self.registry.get_path(stored.schema, stored.values, path)

    def msg_set(self, handle: Handle, path: str, value: Any) -> None:
        stored = self._live(handle)
        self.registry.set_path(stored.schema, stored.values, path, value)

    def msg_destroy(self, handle: Handle) -> None:
        with self._lock:
            if not isinstance(handle, Handle) or self._messages.pop(handle.id, None) is None:
                raise BusError(f"dead handle {handle!r}")

    def msg_is_live(self, handle: Handle) -> bool:
        return isinstance(handle, Handle) and handle.id in self._messages

    def live_count(self, owner: Optional[str] = None) -> int:
        with self._lock:
            if owner is None:
                return len(self._messages)
            return sum(1 for s in self._messages.values() if s.owner == owner)

    # ---------------------------------------------------------------- topics

    def _check_topic_schema(self, topic: str, schema: str) -> None:
        self.registry.get(schema)
        existing = self._publishers.get(topic)
        if existing is not None and existing.schema != schema:
            raise BusError(
                f"topic '{topic}' already carries schema '{existing.schema}', not '{schema}'"
            )
        for sub in self._subscriptions.get(topic, []):
            if sub.schema != schema:
                raise BusError(
                    f"topic '{topic}' already carries schema '{sub.schema}', not '{schema}'"
                )

    def create_publisher(self, owner: str, topic: str, schema: str) -> Publisher:
        with self._lock:
            self._check_topic_schema(topic, schema)
            publisher = self._publishers.get(topic)
            if publisher is None:
                publisher = Publisher(topic, schema)
                self._publishers[topic] = publisher
            return publisher

    def create_subscription(
        self, owner: str, topic: str, schema: str, deliver: DeliverFn
    ) -> Subscription:
        with self._lock:
            self._check_topic_schema(topic, schema)
            sub = Subscription(topic, schema, owner, deliver)
            self._subscriptions.setdefault(topic, []).append(sub)
            return sub

    def publish(self, topic: str, message: Union[Handle, dict]) -> None:
        with self._lock:
            publisher = self._publishers.get(topic)
            if publisher is None:
                raise BusError(f"no publisher on topic '{topic}'")
            if isinstance(message, Handle):
                stored = self._live(message)
                if stored.schema != publisher.schema:
                    raise BusError(
                        f"handle schema '{stored.schema}' does not match topic "
                        f"'{topic}' schema '{publisher.schema}'"
                    )
                values = stored.values
            else:
                values = self.registry.conform(publisher.schema, message)
            subs = list(self._subscriptions.get(topic, []))
        for sub in subs:
            copy = self.registry.copy_values(values)
            handle = self._store(publisher.schema, copy, sub.owner)
            sub.deliver(topic, handle)

    # --------------------------------------------------------------- services

    def create_service(
        self,
        owner: str,
        name: str,
        request_schema: str,
        response_schema: str,
        handler: HandlerFn,
    ) -> ServiceServer:
        with self._lock:
            self.registry.get(request_schema)
            self.registry.get(response_schema)
            if name in self._servers:
                raise BusError(f"service '{name}' already provided")
            server = ServiceServer(name, request_schema, response_schema, handler, owner)
            self._servers[name] = server
            return server

    def create_client(
        self, owner: str, service: str, respond: RespondFn, timeout: float = 1.0
    ) -> ServiceClient:
        with self._lock:
            client = ServiceClient(service, owner, timeout, respond)
            self._clients[(owner, service)] = client
            return client

    def call(self, owner: str, service: str, request: Union[Handle, dict]) -> int:
        with self._lock:
            client = self._clients.get((owner, service))
            if client is None:
                raise BusError(f"no client for service '{service}' owned by '{owner}'")
            server = self._servers.get(service)
            if isinstance(request, Handle):
                values = self.registry.copy_values(self._live(request).values)
            elif server is not None:
                values = self.registry.conform(server.request_schema, request)
            else:
                values = dict(request)
            call_id = next(self._call_ids)
        state = _Call()
        if server is not None:
            self.clock.call_after(0.0, self._invoke, server, values, state, client, call_id)
        self.clock.call_after(client.timeout, self._timeout, state, client, call_id)
        return call_id

    def _invoke(
        self, server: ServiceServer, values: dict, state: _Call, client: ServiceClient, call_id: int
    ) -> None:
        if state.done:
            return
        request = self.registry.conform(server.request_schema, values)
        response = server.handler(request)
        if response is None:
            return  # dropped; the timeout event will answer
        state.done = True
        conformed = self.registry.conform(server.response_schema, response)
        handle = self._store(server.response_schema, conformed, client.owner)
        client.respond(client.service, call_id, handle, True)

    def _timeout(self, state: _Call, client: ServiceClient, call_id: int) -> None:
        if state.done:
            return
        state.done = True
        handle = self._store("Empty", self.registry.defaults("Empty"), client.owner)
        client.respond(client.service, call_id, handle, False)

    # ---------------------------------------------------------------- cleanup

    def release_owner(self, owner: str) -> int:
        """Drop every endpoint and live handle belonging to `owner`;
        returns the number of handles released."""
        with self._lock:
            dead = [mid for mid, stored in self._messages.items() if stored.owner == owner]
            for mid in dead:
                del self._messages[mid]
            for topic in list(self._subscriptions):
                self._subscriptions[topic] = [
                    s for s in self._subscriptions[topic] if s.owner != owner
                ]
                if not self._subscriptions[topic]:
                    del self._subscriptions[topic]
            for key in [k for k in self._clients if k[0] == owner]:
                del self._clients[key]
            for name in [n for n, s in self._servers.items() if s.owner == owner]:
                del self._servers[name]
            return len(dead)
