import json
import tempfile
from pathlib import Path

from django.conf import settings
from django.test import SimpleTestCase

from suaveApp.config import (
    RunConfig,
    config_from_dict,
    config_to_dict,
    config_to_json,
    load_config,
    with_overrides,
)
from suaveApp.exceptions import ConfigError
from suaveApp.managing import ManagerKind
from suaveApp.simworld import ThrusterEvent


class LoadConfigTests(SimpleTestCase):
    def test_default_scenario_matches_defaults(self):
        self.assertEqual(load_config(settings.SUAVE_DEFAULT_SCENARIO), RunConfig())

    def test_empty_document_is_all_defaults(self):
        self.assertEqual(config_from_dict({}), RunConfig())

    def test_echo_reads_back(self):
        config = config_from_dict({
            "time_limit": 120,
            "thruster_events": [{"time": 50, "thruster": 3}, {"time": 10, "thruster": 2}],
            "manager": {"kind": "random", "random_exclude": ["f_maintain_motion"]},
        })
        self.assertEqual(config_from_dict(json.loads(config_to_json(config))), config)
        self.assertEqual(config_to_dict(config)["manager"]["kind"], "random")

    def test_thruster_events_are_time_ordered(self):
        config = config_from_dict({"thruster_events": [{"time": 50, "thruster": 3}, {"time": 10, "thruster": 2}]})
        self.assertEqual(config.thruster_events, (ThrusterEvent(10.0, 2), ThrusterEvent(50.0, 3)))

    def test_seeds(self):
        config = RunConfig(runs=3, base_seed=7)
        self.assertEqual(config.seeds, [7, 8, 9])
        self.assertEqual(config.time_limit_ticks, 3000)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config("/nonexistent/scenario.json")

    def test_malformed_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.json"
            path.write_text("{not json", encoding="utf-8")
            with self.assertRaises(ConfigError):
                load_config(path)


class ValidationTests(SimpleTestCase):
    def assertRejected(self, data):
        with self.assertRaises(ConfigError):
            config_from_dict(data)

    def test_unknown_keys(self):
        self.assertRejected({"time_limt": 300})
        self.assertRejected({"wv": {"amplitude": 1.0}})

    def test_bad_values(self):
        self.assertRejected({"dt": 0})
        self.assertRejected({"runs": 0})
        self.assertRejected({"runs": 2.5})
        self.assertRejected({"time_limit": "long"})
        self.assertRejected({"wv": {"min": 3.0, "max": 2.0}})
        self.assertRejected({"thruster_events": [{"time": 35, "thruster": 9}]})
        self.assertRejected({"mission": {"capture_radius": 0}})

    def test_bad_manager(self):
        self.assertRejected({"manager": {"kind": "oracle"}})
        self.assertRejected({"manager": {"fixed_modes": {"f_generate_search_path": "fd_spiral_huge"}}})
        self.assertRejected({"manager": {"random_exclude": ["f_nothing"]}})


class OverrideTests(SimpleTestCase):
    def test_flags_take_precedence(self):
        config = with_overrides(RunConfig(), manager="none", runs=4, seed=11, out="/tmp/out")
        self.assertEqual(config.manager.kind, ManagerKind.NONE)
        self.assertEqual(config.seeds, [11, 12, 13, 14])
        self.assertEqual(config.output, "/tmp/out")

    def test_no_flags_keeps_config(self):
        config = RunConfig()
        self.assertIs(with_overrides(config), config)

    def test_unknown_manager_flag(self):
        with self.assertRaises(ConfigError):
            with_overrides(RunConfig(), manager="oracle")
