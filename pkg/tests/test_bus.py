"""Message bus: schemas, handles, topics, services."""

import pytest

from prodex.bus.bus import BusError, MessageBus
from prodex.bus.schema import SchemaError, SchemaRegistry, builtin_registry
from prodex.clock import VirtualClock
from prodex.values import Handle


@pytest.fixture
def registry():
    return builtin_registry()


@pytest.fixture
def bus(registry):
    return MessageBus(VirtualClock(), registry)


class TestSchemaRegistry:
    def test_defaults(self, registry):
        registry.register("Sample", [("name", "string"), ("n", "integer"), ("ok", "boolean")])
        assert registry.defaults("Sample") == {"name": "", "n": 0, "ok": False}

    def test_nested_defaults(self, registry):
        pose = registry.defaults("Pose")
        assert pose == {"x": 0.0, "y": 0.0, "theta": 0.0}

    def test_duplicate_schema_rejected(self, registry):
        with pytest.raises(SchemaError, match="already registered"):
            registry.register("Pose", [("x", "float")])

    def test_duplicate_field_rejected(self, registry):
        with pytest.raises(SchemaError, match="duplicate field"):
            registry.register("Bad", [("a", "float"), ("a", "float")])

    def test_unknown_kind_rejected(self, registry):
        with pytest.raises(SchemaError, match="unknown field kind"):
            registry.register("Bad", [("a", "quaternion")])

    def test_unknown_nested_schema_rejected(self, registry):
        with pytest.raises(SchemaError, match="unknown"):
            registry.register("Bad", [("inner", "nested:Missing")])
        # the failed registration must not linger
        with pytest.raises(SchemaError, match="not registered"):
            registry.get("Bad")

    def test_nesting_cycle_rejected(self, registry):
        registry.register("A", [("n", "integer")])
        with pytest.raises(SchemaError, match="cycle"):
            registry.register("B", [("self", "nested:B")])

    def test_conform_fills_and_checks(self, registry):
        out = registry.conform("Pose", {"x": 1})
        assert out == {"x": 1.0, "y": 0.0, "theta": 0.0}
        with pytest.raises(SchemaError, match="no field"):
            registry.conform("Pose", {"z": 1.0})
        with pytest.raises(SchemaError, match="expected float"):
            registry.conform("Pose", {"x": "one"})

    def test_integer_field_rejects_bool_and_float(self, registry):
        registry.register("C", [("n", "integer")])
        with pytest.raises(SchemaError):
            registry.conform("C", {"n": True})
        with pytest.raises(SchemaError):
            registry.conform("C", {"n": 1.5})

    def test_path_access(self, registry):
        registry.register("Wrap", [("pose", "nested:Pose"), ("tags", "array:string")])
        values = registry.defaults("Wrap")
        registry.set_path("Wrap", values, "pose.x", 2.5)
        registry.set_path("Wrap", values, "tags", ["a", "b"])
        registry.set_path("Wrap", values, "tags.1", "c")
        assert registry.get_path("Wrap", values, "pose.x") == 2.5
        assert registry.get_path("Wrap", values, "tags.1") == "c"
        with pytest.raises(SchemaError, match="no field"):
            registry.get_path("Wrap", values, "pose.w")
        with pytest.raises(SchemaError, match="out of range"):
            registry.set_path("Wrap", values, "tags.9", "x")

    def test_load_file(self, registry, tmp_path):
        path = tmp_path / "schemas.yaml"
        path.write_text("Tick: {count: integer}\nNamed: {label: string, at: nested:Pose}\n")
        assert registry.load_file(str(path)) == 2
        assert registry.defaults("Named")["at"] == {"x": 0.0, "y": 0.0, "theta": 0.0}


class TestHandles:
    def test_create_get_set_destroy(self, bus):
        handle = bus.msg_create("envA", "Pose")
        assert isinstance(handle, Handle)
        bus.msg_set(handle, "x", 3.0)
        assert bus.msg_get(handle, "x") == 3.0
        assert bus.msg_schema(handle) == "Pose"
        bus.msg_destroy(handle)
        assert not bus.msg_is_live(handle)

    def test_dead_handle_errors(self, bus):
        handle = bus.msg_create("envA", "Pose")
        bus.msg_destroy(handle)
        with pytest.raises(BusError, match="dead handle"):
            bus.msg_get(handle, "x")
        with pytest.raises(BusError, match="dead handle"):
            bus.msg_destroy(handle)

    def test_release_owner_reaps_only_theirs(self, bus):
        a = bus.msg_create("envA", "Pose")
        b = bus.msg_create("envB", "Pose")
        assert bus.release_owner("envA") == 1
        assert not bus.msg_is_live(a)
        assert bus.msg_is_live(b)


class TestTopics:
    def test_each_subscriber_gets_its_own_copy(self, bus):
        got = {}
        bus.create_subscription("envA", "pose", "Pose", lambda t, h: got.setdefault("a", h))
        bus.create_subscription("envB", "pose", "Pose", lambda t, h: got.setdefault("b", h))
        bus.create_publisher("envC", "pose", "Pose")
        bus.publish("pose", {"x": 1.0})
        assert got["a"] != got["b"]
        bus.msg_set(got["a"], "x", 99.0)
        assert bus.msg_get(got["b"], "x") == 1.0

    def test_publish_from_handle_conforms_schema(self, bus):
        bus.create_publisher("envA", "pose", "Pose")
        seen = []
        bus.create_subscription("envB", "pose", "Pose", lambda t, h: seen.append(h))
        msg = bus.msg_create("envA", "Pose")
        bus.msg_set(msg, "theta", 0.5)
        bus.publish("pose", msg)
        assert bus.msg_get(seen[0], "theta") == 0.5
        # the original handle still belongs to the publisher
        assert bus.msg_is_live(msg)

    def test_topic_schema_conflicts_rejected(self, bus):
        bus.create_publisher("envA", "pose", "Pose")
        with pytest.raises(BusError, match="already carries"):
            bus.create_publisher("envB", "pose", "Empty")
        with pytest.raises(BusError, match="already carries"):
            bus.create_subscription("envB", "pose", "Empty", lambda t, h: None)

    def test_publish_without_publisher_rejected(self, bus):
        with pytest.raises(BusError, match="no publisher"):
            bus.publish("nowhere", {"x": 0.0})

    def test_wrong_handle_schema_rejected(self, bus):
        bus.create_publisher("envA", "pose", "Pose")
        msg = bus.msg_create("envA", "Empty")
        with pytest.raises(BusError, match="does not match topic"):
            bus.publish("pose", msg)


class TestServices:
    def setup_case(self, bus, handler, timeout=1.0):
        clock = bus.clock
        responses = []
        bus.registry.register("Quantity", [("value", "float")])
        bus.create_service("server", "add-one", "Quantity", "Quantity", handler)
        bus.create_client(
            "client",
            "add-one",
            lambda service, call_id, handle, ok: responses.append((service, call_id, handle, ok)),
            timeout=timeout,
        )
        return clock, responses

    def test_round_trip(self, bus):
        clock, responses = self.setup_case(bus, lambda req: {"value": req["value"] + 1.0})
        call_id = bus.call("client", "add-one", {"value": 4.0})
        assert responses == []  # asynchronous even in-process
        clock.run_until(0.1)
        (service, got_id, handle, ok) = responses[0]
        assert (service, got_id, ok) == ("add-one", call_id, True)
        assert bus.msg_get(handle, "value") == 5.0
        # response handle belongs to the caller
        assert bus.live_count("client") == 1

    def test_timeout_reports_failure(self, bus):
        clock, responses = self.setup_case(bus, lambda req: {"value": 0.0}, timeout=0.5)
        bus.create_client("other", "missing", lambda *a: responses.append(a), timeout=0.5)
        bus.call("other", "missing", {"value": 1.0})  # no server at all
        clock.run_until(1.0)
        (service, call_id, handle, ok) = responses[0]
        assert ok is False
        assert bus.msg_schema(handle) == "Empty"

    def test_dropped_request_falls_to_timeout(self, bus):
        clock, responses = self.setup_case(bus, lambda req: None, timeout=0.5)
        bus.call("client", "add-one", {"value": 1.0})
        clock.run_until(0.4)
        assert responses == []
        clock.run_until(0.6)
        assert len(responses) == 1
        assert responses[0][3] is False

    def test_late_handler_loses_to_timeout(self, bus):
        # handler scheduled at t=0 but timeout 0 fires... both at 0: handler
        # first (scheduling order), so use a handler that drops, then verify
        # double-completion is suppressed
        clock, responses = self.setup_case(bus, lambda req: {"value": 2.0}, timeout=0.0)
        bus.call("client", "add-one", {"value": 1.0})
        clock.run_until(1.0)
        assert len(responses) == 1

    def test_duplicate_service_rejected(self, bus):
        bus.create_service("a", "svc", "Empty", "Empty", lambda req: {})
        with pytest.raises(BusError, match="already provided"):
            bus.create_service("b", "svc", "Empty", "Empty", lambda req: {})

    def test_call_without_client_rejected(self, bus):
        with pytest.raises(BusError, match="no client"):
            bus.call("nobody", "add-one", {})
