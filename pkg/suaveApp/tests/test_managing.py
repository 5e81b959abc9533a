import numpy as np
from django.test import SimpleTestCase

from suaveApp.bus import (
    DIAGNOSTICS_TOPIC,
    OBJECTIVE_SERVICE,
    REQUEST_CONFIGURATION_SERVICE,
    ConfigurationRequest,
    DiagnosticArray,
    DiagnosticStatus,
    Level,
    ObjectiveRequest,
    create_bus,
)
from suaveApp.exceptions import ConfigError
from suaveApp.managed import ManagedSubsystem, MissionParams
from suaveApp.managing import (
    ManagerConfig,
    ManagerKind,
    ThrusterMonitor,
    build_manager,
    observe_water_visibility,
)
from suaveApp.simworld import (
    Kinematics,
    Pipeline,
    VehicleState,
    WaterVisibilityModel,
    WorldState,
)
from suaveApp.tomasys import ComponentStatus, GroundingStatus

DT = 0.1
MISSION_VISIBILITY = WaterVisibilityModel(1.25, 3.75, 80.0, 0.0)


def make_world():
    return WorldState(
        vehicle=VehicleState(10.0, 5.0, 2.0, 0.0, 0.5),
        pipeline=Pipeline(((0.0, 0.0), (60.0, 0.0))),
        visibility=MISSION_VISIBILITY,
        kinematics=Kinematics(),
        rng=np.random.default_rng(0),
        dt=DT,
    )


class Rig:
    """Bus with the managed subsystem, one manager and a probe client."""

    def __init__(self, kind, **manager_options):
        self.bus = create_bus()
        self.managed = ManagedSubsystem(MissionParams(), Kinematics(), self.bus, DT)
        self.manager = build_manager(
            ManagerConfig(kind=kind, **manager_options), self.bus, DT, rng=np.random.default_rng(11)
        )
        self.probe = self.bus.client("probe")
        self.received = []
        self.probe.subscribe(DIAGNOSTICS_TOPIC, self.received.append, DiagnosticArray)

    def objective(self, action, function):
        return self.probe.call_service(OBJECTIVE_SERVICE, ObjectiveRequest(action, function))

    def visibility(self, t, value):
        status = DiagnosticStatus(
            Level.OK, "water_visibility_observer", values=(("water_visibility", value),)
        )
        self.probe.publish(DIAGNOSTICS_TOPIC, t, DiagnosticArray((status,)))

    def thrusters(self, t, failed=()):
        values = tuple(
            (f"thruster_{i}", "FAILED" if f"thruster_{i}" in failed else "AVAILABLE") for i in range(1, 7)
        )
        status = DiagnosticStatus(Level.ERROR if failed else Level.OK, "thruster_monitor", values=values)
        self.probe.publish(DIAGNOSTICS_TOPIC, t, DiagnosticArray((status,)))

    def run_until(self, t_end, start_tick=0):
        for tick in range(start_tick, round(t_end / DT) + 1):
            self.manager.tick(tick, tick * DT)


class ObserverTests(SimpleTestCase):
    def test_water_visibility_at_start(self):
        rig = Rig(ManagerKind.NONE)
        observe_water_visibility(MISSION_VISIBILITY, 0.0, rig.bus.client("water_visibility_observer"))
        status = rig.received[0].payload.status[0]
        self.assertEqual(status.name, "water_visibility_observer")
        self.assertEqual(status.level, Level.OK)
        self.assertEqual(status.as_dict(), {"water_visibility": "2.50"})

    def test_publish_stamps(self):
        rig = Rig(ManagerKind.NONE)
        client = rig.bus.client("water_visibility_observer")
        observe_water_visibility(MISSION_VISIBILITY, 0.5, client)
        observe_water_visibility(MISSION_VISIBILITY, 1.0, client)
        self.assertEqual([env.stamp for env in rig.received], [0.5, 1.0])

    def test_constant_visibility(self):
        rig = Rig(ManagerKind.NONE)
        client = rig.bus.client("water_visibility_observer")
        model = WaterVisibilityModel(2.0, 2.0, 80.0, 0.0)
        for t in (0.0, 0.5, 1.0):
            observe_water_visibility(model, t, client)
        values = {env.payload.status[0].as_dict()["water_visibility"] for env in rig.received}
        self.assertEqual(values, {"2.00"})

    def test_thruster_monitor_is_edge_triggered(self):
        rig = Rig(ManagerKind.NONE)
        monitor = ThrusterMonitor(rig.bus.client("thruster_monitor"))
        world = make_world()
        self.assertTrue(monitor.observe(world))
        self.assertFalse(monitor.observe(world))
        world.thrusters["thruster_1"] = ComponentStatus.FAILED
        self.assertTrue(monitor.observe(world))

        levels = [env.payload.status[0].level for env in rig.received]
        self.assertEqual(levels, [Level.OK, Level.ERROR])
        self.assertEqual(rig.received[-1].payload.status[0].as_dict()["thruster_1"], "FAILED")


class NoManagerTests(SimpleTestCase):
    def test_fixed_modes_once(self):
        rig = Rig(ManagerKind.NONE)
        rig.run_until(60.0)
        self.assertEqual(rig.managed.search.mode, "fd_spiral_medium")
        self.assertEqual(rig.managed.maintain.mode, "fd_all_thrusters")
        self.assertEqual(len(rig.manager.change_requests), 2)
        self.assertTrue(all(t == 0.0 for t, *_ in rig.manager.change_requests))

    def test_objectives_are_acknowledged_but_not_handled(self):
        rig = Rig(ManagerKind.NONE)
        response = rig.objective("set", "F2")
        self.assertTrue(response.success)
        self.assertFalse(response.handled)

    def test_invalid_fixed_mode(self):
        with self.assertRaises(ConfigError):
            ManagerConfig(kind=ManagerKind.NONE, fixed_modes=(("f_generate_search_path", "fd_bogus"),))


class RandomManagerTests(SimpleTestCase):
    def sequence(self, seed):
        bus = create_bus()
        managed = ManagedSubsystem(MissionParams(), Kinematics(), bus, DT)
        manager = build_manager(ManagerConfig(kind=ManagerKind.RANDOM), bus, DT, rng=np.random.default_rng(seed))
        client = bus.client("probe")
        client.call_service(OBJECTIVE_SERVICE, ObjectiveRequest("set", "F1"))
        client.call_service(OBJECTIVE_SERVICE, ObjectiveRequest("set", "F2"))
        for tick in range(0, 1501):
            manager.tick(tick, tick * DT)
        return manager.change_requests

    def test_reproducible_for_a_seed(self):
        self.assertEqual(self.sequence(3), self.sequence(3))

    def test_changes_every_adaptation_period(self):
        requests = self.sequence(3)
        self.assertEqual(sorted({round(t, 6) for t, *_ in requests}), [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0, 105.0, 120.0, 135.0, 150.0])
        nodes = {node for _, node, _, _ in requests}
        self.assertEqual(nodes, {"f_maintain_motion", "f_generate_search_path"})

    def test_only_nodes_with_objectives(self):
        rig = Rig(ManagerKind.RANDOM)
        rig.objective("set", "F3")
        rig.run_until(30.0)
        self.assertEqual({node for _, node, _, _ in rig.manager.change_requests}, {"f_follow_pipeline"})

    def test_exclusion_list(self):
        rig = Rig(ManagerKind.RANDOM, random_exclude=("f_maintain_motion",))
        rig.objective("set", "F1")
        rig.objective("set", "F2")
        rig.run_until(30.0)
        self.assertEqual({node for _, node, _, _ in rig.manager.change_requests}, {"f_generate_search_path"})


class MetacontrolTests(SimpleTestCase):
    def test_objective_acks(self):
        rig = Rig(ManagerKind.METACONTROL)
        self.assertEqual(rig.objective("set", "F2").detail, "O2")
        self.assertFalse(rig.objective("set", "F2").success)
        self.assertFalse(rig.objective("remove", "F3").success)
        self.assertFalse(rig.objective("pause", "F2").success)

    def test_initial_grounding(self):
        rig = Rig(ManagerKind.METACONTROL)
        rig.objective("set", "F1")
        rig.objective("set", "F2")
        rig.visibility(0.0, "2.50")
        rig.thrusters(0.0)
        rig.manager.tick(0, 0.0)

        self.assertEqual(rig.managed.search.mode, "fd_spiral_high")
        self.assertEqual(rig.managed.maintain.mode, "fd_all_thrusters")
        self.assertEqual(rig.manager.kb.groundings["O2"].design, "FD5")

    def test_visibility_drop_is_handled_within_one_period(self):
        rig = Rig(ManagerKind.METACONTROL)
        rig.objective("set", "F2")
        rig.visibility(0.0, "2.40")
        rig.manager.tick(0, 0.0)
        self.assertEqual(rig.managed.search.mode, "fd_spiral_high")

        for tick in range(1, 5):
            rig.manager.tick(tick, tick * DT)
        published = 0.5
        rig.visibility(published, "1.10")
        for tick in range(5, 11):
            rig.manager.tick(tick, tick * DT)

        t, node, mode, success = rig.manager.change_requests[-1]
        self.assertEqual((node, mode, success), ("f_generate_search_path", "fd_spiral_medium", True))
        self.assertLessEqual(t - published, 1.0 + DT)
        self.assertEqual(rig.managed.search.mode, "fd_spiral_medium")

    def test_quiescent_without_news(self):
        rig = Rig(ManagerKind.METACONTROL)
        rig.objective("set", "F1")
        rig.objective("set", "F2")
        rig.visibility(0.0, "3.00")
        rig.thrusters(0.0)
        rig.manager.tick(0, 0.0)
        calls = len(rig.manager.change_requests)
        for step in range(1, 20):
            rig.visibility(step * 0.5, "3.00")
        rig.run_until(10.0, start_tick=1)
        self.assertEqual(len(rig.manager.change_requests), calls)

    def test_thruster_failure_and_recovery(self):
        rig = Rig(ManagerKind.METACONTROL)
        rig.objective("set", "F1")
        rig.thrusters(0.0)
        rig.manager.tick(0, 0.0)
        self.assertEqual(rig.managed.maintain.mode, "fd_all_thrusters")

        rig.thrusters(35.0, failed=("thruster_1",))
        rig.manager.tick(350, 35.0)
        self.assertEqual(rig.managed.maintain.mode, "fd_recover_thrusters")
        self.assertEqual(rig.manager.kb.groundings["O1"].design, "FD2")

        rig.thrusters(45.0)
        rig.manager.tick(450, 45.0)
        self.assertEqual(rig.managed.maintain.mode, "fd_all_thrusters")

    def test_removed_objective_ungrounds_its_node(self):
        rig = Rig(ManagerKind.METACONTROL)
        rig.objective("set", "F2")
        rig.manager.tick(0, 0.0)
        rig.objective("remove", "F2")
        rig.objective("set", "F3")
        rig.manager.tick(10, 1.0)
        self.assertEqual(rig.managed.search.mode, "fd_unground")
        self.assertEqual(rig.managed.follow.mode, "fd_follow_pipeline")

    def test_unreadable_diagnostic_is_logged_and_ignored(self):
        rig = Rig(ManagerKind.METACONTROL)
        rig.objective("set", "F2")
        with self.assertLogs("suaveApp.managing", level="ERROR"):
            rig.visibility(0.0, "murky")
        rig.manager.tick(0, 0.0)
        self.assertIsNone(rig.manager.kb.measured("water_visibility"))
        self.assertEqual(rig.manager.kb.groundings["O2"].status, GroundingStatus.OK)

    def test_snapshot_callback_runs_every_cycle(self):
        cycles = []
        bus = create_bus()
        ManagedSubsystem(MissionParams(), Kinematics(), bus, DT)
        manager = build_manager(ManagerConfig(), bus, DT, on_cycle=lambda t, kb: cycles.append(t))
        for tick in range(0, 31):
            manager.tick(tick, tick * DT)
        self.assertEqual(len(cycles), 4)

    def test_bridge_rejects_unknown_design(self):
        rig = Rig(ManagerKind.METACONTROL)
        response = rig.probe.call_service(REQUEST_CONFIGURATION_SERVICE, ConfigurationRequest("F2", "FD9"))
        self.assertFalse(response.success)
        response = rig.probe.call_service(REQUEST_CONFIGURATION_SERVICE, ConfigurationRequest("F2", "FD3"))
        self.assertTrue(response.success)
        self.assertEqual(rig.managed.search.mode, "fd_spiral_low")


class ManagerConfigTests(SimpleTestCase):
    def test_periods_must_be_positive(self):
        with self.assertRaises(ConfigError):
            ManagerConfig(mape_period=0.0)
        with self.assertRaises(ConfigError):
            ManagerConfig(adaptation_period=-1.0)
