import copy
import yaml
import logging
from pathlib import Path
from typing import Any, Dict, Optional
from dataclasses import dataclass
from enum import Enum, auto
from src.slopes.slope_settings import RhoSchedule, SamplingSettings, ToleranceSettings
from src.criteria.criteria_settings import AuditConfig, CriteriaSettings

class ConfigScope(Enum):
    """Defines different configuration scopes."""
    SAMPLING = auto()     # Graph sampling around the reference point
    SCHEDULE = auto()     # rho schedule of the limit quantities
    TOLERANCES = auto()   # Numerical tolerances and margins
    CRITERIA = auto()     # Gamma levels and spot-checks
    AUDIT = auto()        # Implication audit corpus
    PERFORMANCE = auto()  # Stage timing

@dataclass
class PerformanceConfig:
    log_to_file: bool
    log_dir: str
    log_interval: float
    warning_threshold_s: float
    critical_threshold_s: float
    memory_warning_threshold_mb: float

class ConfigurationManager:
    """Manages analysis configuration settings."""

    DEFAULT_CONFIG = {
        "sampling": SamplingSettings().to_config(),
        "schedule": RhoSchedule().to_config(),
        "tolerances": {
            "graph_tol": 1e-10,
            "identity_tol": 1e-8,
            "sample_rel_tol": 1e-2,
            "division_guard": 1e-14,
            "margin_abs": 1e-2,
            "margin_rel": 2e-2,
            "positivity_tol": 2e-2,
            "equality_rel": 5e-2,
            "active_tol": 1e-9,
            "fd_step": 1e-6,
            "angular_tol": 1e-3,
            "persistence_levels": 4
        },
        "criteria": {
            "gammas": [0.25, 0.5, 0.9],
            "gamma_match_factor": 0.9,
            "convexity_trials": 1000
        },
        "audit": {
            "random_instances": 200,
            "max_points": 50,
            "seed": 0,
            "progress": False
        },
        "performance": {
            "log_to_file": False,
            "log_dir": "logs",
            "log_interval": 5.0,
            "warning_threshold_s": 10.0,
            "critical_threshold_s": 60.0,
            "memory_warning_threshold_mb": 2000.0
        }
    }

    def __init__(self, config_dir: Optional[Path] = Path("config"), create: bool = False):
        """Read config.yaml from ``config_dir``; missing files mean defaults.

        The analysis path never writes: ``create=True`` writes the defaults
        when no file exists.
        """
        self.config_dir = Path(config_dir) if config_dir is not None else None
        self.config: Dict[str, Any] = {}
        self.logger = logging.getLogger('config')

        if self.config_dir is None or not self.load_config():
            self.config = copy.deepcopy(self.DEFAULT_CONFIG)
            if create and self.config_dir is not None:
                self.config_dir.mkdir(parents=True, exist_ok=True)
                self.save_config()

    @property
    def config_file(self) -> Path:
        return self.config_dir / "config.yaml"

    def load_config(self) -> bool:
        """Load configuration from file."""
        try:
            if self.config_file.exists():
                with open(self.config_file, 'r') as f:
                    self.config = yaml.safe_load(f) or {}
                self._validate_config()
                return True
        except Exception as e:
            self.logger.error(f"Error loading config: {e}")
        return False

    def save_config(self) -> bool:
        """Save current configuration to file."""
        try:
            with open(self.config_file, 'w') as f:
                yaml.dump(self.config, f, default_flow_style=False)
            return True
        except Exception as e:
            self.logger.error(f"Error saving config: {e}")
            return False

    def get_sampling_settings(self) -> SamplingSettings:
        """Get graph sampling settings."""
        return SamplingSettings.from_config(self.config.get('sampling', self.DEFAULT_CONFIG['sampling']))

    def get_rho_schedule(self) -> RhoSchedule:
        """Get the rho schedule of the limit quantities."""
        schedule = self.config.get('schedule', self.DEFAULT_CONFIG['schedule'])

        # older files nest the schedule under sampling
        if 'rho_schedule' in self.config.get('sampling', {}):
            schedule = {**schedule, **self.config['sampling']['rho_schedule']}

        return RhoSchedule.from_config(schedule)

    def get_tolerance_settings(self) -> ToleranceSettings:
        return ToleranceSettings.from_config(self.config.get('tolerances', self.DEFAULT_CONFIG['tolerances']))

    def get_criteria_settings(self) -> CriteriaSettings:
        return CriteriaSettings.from_config(self.config.get('criteria', self.DEFAULT_CONFIG['criteria']))

    def get_audit_config(self) -> AuditConfig:
        """Get implication audit settings."""
        return AuditConfig.from_config(self.config.get('audit', self.DEFAULT_CONFIG['audit']))

    def get_performance_config(self) -> PerformanceConfig:
        """Get performance configuration settings."""
        perf = dict(self.config.get("performance", self.DEFAULT_CONFIG["performance"]))
        return PerformanceConfig(**{key: perf.get(key, default)
                                    for key, default in self.DEFAULT_CONFIG["performance"].items()})

    def update_config(self, scope: ConfigScope, settings: Dict[str, Any]) -> bool:
        """Update configuration settings for a specific scope."""
        scope_name = scope.name.lower()
        try:
            if scope_name in self.config:
                self.config[scope_name].update(settings)
            else:
                self.config[scope_name] = settings
            self._validate_config()
            return self.save_config()
        except Exception as e:
            self.logger.error(f"Error updating config: {e}")
            return False

    def _validate_config(self) -> None:
        """Validate configuration and fill in missing values."""
        for section, defaults in self.DEFAULT_CONFIG.items():
            if section not in self.config or self.config[section] is None:
                self.config[section] = copy.deepcopy(defaults)
            else:
                for key, value in defaults.items():
                    if key not in self.config[section]:
                        self.config[section][key] = copy.deepcopy(value)
        # typed views raise on bad values; surface them at load time
        self.get_sampling_settings()
        self.get_rho_schedule()
        self.get_tolerance_settings()
        self.get_criteria_settings()
        self.get_audit_config()

    def export_config(self, file_path: Path) -> bool:
        """Export configuration to a file."""
        try:
            with open(file_path, 'w') as f:
                yaml.dump(self.config, f, default_flow_style=False)
            return True
        except Exception as e:
            self.logger.error(f"Error exporting config: {e}")
            return False

    def import_config(self, file_path: Path) -> bool:
        """Import configuration from a file."""
        try:
            with open(file_path, 'r') as f:
                new_config = yaml.safe_load(f)
            self.config = new_config
            self._validate_config()
            return self.save_config()
        except Exception as e:
            self.logger.error(f"Error importing config: {e}")
            return False
