"""Configuration parsing, validation, defaults, and hashing."""

import json
from pathlib import Path

import pytest

from liversim import (
    ConfigError,
    build_model,
    config_from_dict,
    config_hash,
    config_to_dict,
    default_config,
    parse_config,
    write_config,
)

REPO_DEFAULT = Path(__file__).resolve().parents[1] / "configs" / "default.json"


class TestDefaults:
    def test_empty_object_is_valid(self):
        cfg = config_from_dict({})
        assert cfg.scenario_count() == 8
        assert cfg.replications == 10

    def test_shipped_default_file(self):
        cfg = parse_config(REPO_DEFAULT)
        assert cfg.scenario_count() == 8
        model = build_model(cfg)
        assert len(model.classes) == 28
        assert model.steps_per_year == 3108

    def test_shipped_file_matches_programmatic_defaults(self):
        assert config_to_dict(parse_config(REPO_DEFAULT)) == config_to_dict(default_config())

    def test_steps_per_year_derived_from_counts(self):
        cfg = default_config()
        total = sum(cfg.arrival_counts.values())
        assert cfg.resolved_steps_per_year == round(total / cfg.count_period_years)
        assert cfg.resolved_steps_per_year == 3108

    def test_default_arrival_aggregates(self):
        cfg = default_config()
        patients = sum(v for k, v in cfg.arrival_counts.items() if k != "DONOR")
        assert patients == pytest.approx(3758.0, abs=0.5)
        assert cfg.arrival_counts["DONOR"] == 2458.0

    def test_write_and_reparse_round_trip(self, tmp_path):
        cfg = default_config()
        cfg.seed = 4242
        path = tmp_path / "cfg.json"
        write_config(cfg, path)
        again = parse_config(path)
        assert config_to_dict(again) == config_to_dict(cfg)


class TestOverrides:
    def test_partial_override_merges(self):
        cfg = config_from_dict({"replications": 3, "seed": 1})
        assert cfg.replications == 3
        assert cfg.seed == 1
        assert cfg.scenario_count() == 8

    def test_shortage_override_shrinks_matrix(self):
        cfg = config_from_dict({"shortage_levels": [0.0, 0.25]})
        assert cfg.scenario_count() == 4

    def test_probability_arrivals_accepted(self):
        probs = {"DONOR": 0.4}
        rest = 0.6 / 18
        from liversim import recipient_classes, class_key, Indication
        for c in recipient_classes():
            if not c.awaits_mxp and c.indication is not Indication.MXP:
                probs[class_key(c)] = rest
        cfg = config_from_dict({"arrival_probs": probs, "steps_per_year": 500})
        assert sum(cfg.arrival_counts.values()) == pytest.approx(1.0)

    def test_probability_sum_violation_names_key(self):
        with pytest.raises(ConfigError, match="arrival_probs"):
            config_from_dict({"arrival_probs": {"DONOR": 0.5, "CIRRH.B1": 0.4},
                              "steps_per_year": 500})

    def test_probabilities_require_explicit_steps(self):
        probs = {"DONOR": 1.0}
        with pytest.raises(ConfigError, match="steps_per_year"):
            config_from_dict({"arrival_probs": probs})


class TestValidation:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            config_from_dict({"no_such_option": 1})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="no such config file"):
            parse_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            parse_config(path)

    def test_direct_mxp_arrivals_rejected(self):
        counts = dict(default_config().arrival_counts)
        counts["MXP.B1"] = 5.0
        with pytest.raises(ConfigError, match="MXP.B1"):
            config_from_dict({"arrival_counts": counts})

    def test_missing_recipient_class_named(self):
        counts = dict(default_config().arrival_counts)
        del counts["HCC.B5"]
        with pytest.raises(ConfigError, match="HCC.B5"):
            config_from_dict({"arrival_counts": counts})

    def test_negative_count_rejected(self):
        counts = dict(default_config().arrival_counts)
        counts["HCC.B5"] = -2.0
        with pytest.raises(ConfigError, match="HCC.B5"):
            config_from_dict({"arrival_counts": counts})

    def test_bad_class_key_named(self):
        counts = dict(default_config().arrival_counts)
        counts["HCC.B9"] = 1.0
        with pytest.raises(ConfigError, match="HCC.B9"):
            config_from_dict({"arrival_counts": counts})

    def test_missing_stratum_named(self):
        patience = {k: v for k, v in default_config().patience.items() if k != "HCC"}
        with pytest.raises(ConfigError, match="patience.HCC"):
            config_from_dict({"patience": patience})

    def test_bad_sigma_named(self):
        patience = dict(default_config().patience)
        patience["HCC"] = dict(patience["HCC"], sigma=-1.0)
        with pytest.raises(ConfigError, match="patience.HCC.sigma"):
            config_from_dict({"patience": patience})

    def test_wrong_coefficient_count_named(self):
        patience = dict(default_config().patience)
        patience["HCC"] = dict(patience["HCC"], log_hr=[0.0, 0.1])
        with pytest.raises(ConfigError, match="patience.HCC.log_hr"):
            config_from_dict({"patience": patience})

    def test_bad_mxp_table_rejected(self):
        with pytest.raises(ConfigError, match="mxp_predictive"):
            config_from_dict({"mxp_predictive": {"times": [0.0, 1.0],
                                                 "survival": [1.0, 1.2]}})

    def test_unknown_policy_rejected(self):
        with pytest.raises(ConfigError, match="policies"):
            config_from_dict({"policies": ["LIFO"]})

    def test_shortage_range_enforced(self):
        with pytest.raises(ConfigError, match="shortage_levels"):
            config_from_dict({"shortage_levels": [0.0, 1.0]})

    def test_replications_minimum(self):
        with pytest.raises(ConfigError, match="replications"):
            config_from_dict({"replications": 0})

    def test_p_up_range(self):
        with pytest.raises(ConfigError, match="p_up"):
            config_from_dict({"p_up": 1.2})

    def test_steps_per_year_minimum(self):
        with pytest.raises(ConfigError, match="steps_per_year"):
            config_from_dict({"steps_per_year": 1})


class TestHash:
    def test_stable_under_key_order(self, tmp_path):
        cfg = default_config()
        d = config_to_dict(cfg)
        shuffled = dict(reversed(list(d.items())))
        path = tmp_path / "shuffled.json"
        path.write_text(json.dumps(shuffled))
        assert config_hash(parse_config(path)) == config_hash(cfg)

    def test_output_dir_not_semantic(self):
        a = default_config()
        b = default_config()
        b.output_dir = "elsewhere"
        assert config_hash(a) == config_hash(b)

    def test_seed_changes_hash(self):
        a, b = default_config(), default_config()
        b.seed = a.seed + 1
        assert config_hash(a) != config_hash(b)

    def test_law_changes_hash(self):
        a, b = default_config(), default_config()
        b.patience = dict(b.patience)
        b.patience["HCC"] = dict(b.patience["HCC"], sigma=9.9)
        assert config_hash(a) != config_hash(b)

    def test_explicit_default_steps_hash_equal(self):
        # Writing the derived steps_per_year explicitly is not a semantic change.
        a = default_config()
        b = config_from_dict({"steps_per_year": 3108})
        assert config_hash(a) == config_hash(b)
