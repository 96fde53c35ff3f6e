"""
Unit tests for the error taxonomy and experiment configuration checks
"""
from pathlib import Path

import pytest

from src.config import Config, env_int
from src.models.experiment import ExperimentConfig
from src.utils.errors import (
    AllCandidatesSingular, BadCovariance, ConfigError, DataError, DisconnectedGraph,
    DuplicateEdge, ExperimentError, GraphCRBError, InfeasibleBudget, NumericalError,
    ParseError, SingularInformation, UsageError,
)


def base_table(**overrides):
    table = {
        'model': 'masked',
        'policies': ['greedy'],
        'sweep': {'var': 'inv_sigma2', 'grid': [1.0]},
        'trials': 10,
        'seed': 1,
        'graph': {'m': 20},
        'band': {'r': 3, 'd': 6},
    }
    table.update(overrides)
    return table


class TestExitCodes:
    """Each error family maps onto one command-line exit code"""

    def test_usage_errors_exit_with_1(self):
        """Test that usage errors exit with 1"""
        assert UsageError("x").exit_code == 1

    @pytest.mark.parametrize("error", [DataError, BadCovariance, DuplicateEdge, ConfigError])
    def test_data_errors_exit_with_2(self, error):
        """Test that data errors exit with 2 and are ValueErrors"""
        assert error("x").exit_code == 2
        assert isinstance(error("x"), ValueError)

    @pytest.mark.parametrize("error", [NumericalError, DisconnectedGraph, SingularInformation,
                                       InfeasibleBudget, AllCandidatesSingular])
    def test_numerical_errors_exit_with_3(self, error):
        """Test that numerical errors exit with 3"""
        assert error("x").exit_code == 3

    def test_every_error_is_a_library_error(self):
        """Test that every family derives from GraphCRBError"""
        for error in (UsageError, DataError, NumericalError):
            assert issubclass(error, GraphCRBError)

    def test_experiment_error_keeps_cause_exit_code(self):
        """Test that an annotated failure exits like the error it wraps"""
        data = ExperimentError("grid point 1 (m=10): bad", ConfigError("bad", key='graph.m'))
        numerical = ExperimentError("grid point 2 (d=3): small", InfeasibleBudget("small"))
        assert data.exit_code == 2
        assert numerical.exit_code == 3
        assert isinstance(numerical.cause, InfeasibleBudget)


class TestMessages:
    def test_parse_error_location(self):
        """Test that parse errors start with path and line"""
        e = ParseError("negative weight", line=7, path="g.csv")
        assert str(e) == "g.csv:7: negative weight"
        assert e.line == 7

    def test_parse_error_without_location(self):
        """Test a parse error with no location"""
        assert str(ParseError("no edges")) == "no edges"

    def test_config_error_names_key(self):
        """Test that config errors start with their key"""
        e = ConfigError("expected a number", key='trials')
        assert str(e) == "trials: expected a number"
        assert e.key == 'trials'


class TestExperimentConfig:
    """Parsing and cross-key validation of experiment files"""

    def test_valid_masked_config(self):
        """Test a valid masked experiment"""
        cfg = ExperimentConfig.from_dict(base_table())
        assert cfg.model == 'masked'
        assert cfg.graph_source == 'watts-strogatz'
        assert cfg.budget_for(20) == 6

    def test_dotted_and_table_keys_agree(self):
        """Test that dotted and table keys are equivalent"""
        table = base_table()
        del table['band']
        table['band.r'] = 3
        table['band.d'] = 6
        assert ExperimentConfig.from_dict(table) == ExperimentConfig.from_dict(base_table())

    def test_budget_fraction(self):
        """Test a budget given as a fraction of M"""
        cfg = ExperimentConfig.from_dict(base_table(band={'r': 3, 'd_fraction': 0.25}))
        assert cfg.budget_for(40) == 10

    def test_generators_become_zero_based(self):
        """Test that generator buses are converted to 0-based"""
        cfg = ExperimentConfig.from_dict(base_table(noise={'generators': [3, 1, 3]}))
        assert cfg.generators == (0, 2)

    @pytest.mark.parametrize("overrides, key", [
        ({'colour': 'blue'}, 'colour'),
        ({'graph': {'m': 20, 'size': 3}}, 'graph.size'),
        ({'model': 'nonlinear'}, 'model'),
        ({'policies': ['max-st']}, 'policies'),
        ({'policies': ['best']}, 'policies'),
        ({'sweep': {'var': 'k', 'grid': [1]}}, 'sweep.var'),
        ({'sweep': {'var': 'inv_sigma2', 'grid': [0.0]}}, 'sweep.grid'),
        ({'sweep': {'var': 'd', 'grid': [2.5]}}, 'sweep.grid'),
        ({'trials': 0}, 'trials'),
        ({'trials': 'many'}, 'trials'),
        ({'band': {'d': 6}}, 'band.r'),
        ({'band': {'r': 3}}, 'band.d'),
        ({'band': {'r': 3, 'd': 6, 'd_fraction': 0.5}}, 'band.d_fraction'),
        ({'noise': {'sigma2': 0.0}}, 'noise.sigma2'),
        ({'noise': {'csv': 'n.csv', 'generators': [1]}}, 'noise.generators'),
        ({'noise': {'generators': [0]}}, 'noise.generators'),
        ({'graph': {'m': 20, 'degree': 3}}, 'graph.degree'),
        ({'graph': {'m': 20, 'weight_low': 0.5}}, 'graph.weight_low'),
        ({'graph': {'source': 'grid.csv'}, 'sweep': {'var': 'm', 'grid': [10]}}, 'sweep.var'),
    ])
    def test_invalid_settings_name_their_key(self, overrides, key):
        """Test that invalid settings name their key"""
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict(base_table(**overrides))
        assert info.value.key == key

    def test_missing_required_key(self):
        """Test that a missing required key is reported"""
        table = base_table()
        del table['seed']
        with pytest.raises(ConfigError, match="seed: required key is missing"):
            ExperimentConfig.from_dict(table)

    def test_relative_model_rejects_masked_settings(self):
        """Test that the relative model rejects masked-only settings"""
        table = base_table(model='relative', policies=['max-st'])
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict(table)
        assert info.value.key == 'band.r'

    def test_relative_model_allows_zero_noise(self):
        """Test that the relative model allows zero noise"""
        table = base_table(model='relative', policies=['max-st'], noise={'sigma2': 0.0})
        del table['band']
        assert ExperimentConfig.from_dict(table).sigma2 == 0.0

    def test_validate_reports_key_and_message(self):
        """Test that validate returns the key and message"""
        cfg = ExperimentConfig.from_dict(base_table())
        bad = ExperimentConfig(**{**cfg.__dict__, 'trials': 0})
        is_valid, error = bad.validate()
        assert not is_valid
        assert error.startswith("trials: ")


class TestTomlFiles:
    def test_missing_file(self, tmp_path):
        """Test that a missing TOML file is reported"""
        with pytest.raises(ConfigError, match="not found"):
            ExperimentConfig.from_toml(tmp_path / "nope.toml")

    def test_malformed_toml(self, tmp_path):
        """Test that malformed TOML is a config error"""
        path = tmp_path / "bad.toml"
        path.write_text("model = \n")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_toml(path)

    def test_relative_paths_resolve_next_to_file(self, tmp_path):
        """Test that relative paths resolve next to the TOML file"""
        path = tmp_path / "exp.toml"
        path.write_text(
            'model = "masked"\npolicies = ["greedy"]\ntrials = 5\nseed = 3\n'
            '[graph]\nsource = "grid.csv"\n[noise]\ncsv = "noise.csv"\n'
            '[band]\nr = 2\nd = 4\n[sweep]\nvar = "inv_sigma2"\ngrid = [1.0, 2.0]\n'
        )
        cfg = ExperimentConfig.from_toml(path)
        assert not cfg.is_generated
        assert cfg.resolve(cfg.noise_csv) == tmp_path / "noise.csv"
        assert cfg.resolve(cfg.graph_source) == tmp_path / "grid.csv"

    @pytest.mark.parametrize("name", [
        "fig1_small.toml", "fig1_network_size.toml", "fig2_budget.toml",
        "fig2_noise.toml", "fig3_erdos_renyi.toml",
    ])
    def test_shipped_experiments_are_valid(self, name):
        """Test that every shipped experiment loads"""
        cfg = ExperimentConfig.from_toml(Path(__file__).resolve().parents[1] / "configs" / name)
        assert cfg.trials > 0


class TestEnvironmentSettings:
    """Integer settings read from GRAPH_CRB_* variables"""

    def test_thread_count_from_environment(self, monkeypatch):
        """Test that GRAPH_CRB_THREADS sets the default worker count"""
        monkeypatch.setenv('GRAPH_CRB_THREADS', '3')
        assert Config.threads() == 3

    def test_unset_thread_count_defaults_to_one(self, monkeypatch):
        """Test that a missing or empty variable falls back to one thread"""
        monkeypatch.delenv('GRAPH_CRB_THREADS', raising=False)
        assert Config.threads() == 1
        monkeypatch.setenv('GRAPH_CRB_THREADS', '')
        assert Config.threads() == 1

    @pytest.mark.parametrize("raw", ["many", "2.5", "0", "-1"])
    def test_bad_thread_count_is_a_config_error(self, monkeypatch, raw):
        """Test that an unusable thread count raises a ConfigError naming the variable"""
        monkeypatch.setenv('GRAPH_CRB_THREADS', raw)
        with pytest.raises(ConfigError, match="GRAPH_CRB_THREADS") as info:
            Config.threads()
        assert info.value.key == 'GRAPH_CRB_THREADS'
        assert info.value.exit_code == 2

    def test_env_int_minimum(self, monkeypatch):
        """Test that env_int accepts values at its lower bound"""
        monkeypatch.setenv('GRAPH_CRB_TEST_COUNT', '0')
        assert env_int('GRAPH_CRB_TEST_COUNT', 5, minimum=0) == 0
