import time
import logging
import psutil
from pathlib import Path
from collections import deque
from contextlib import contextmanager
from typing import Optional

class PerformanceMonitor:
	"""Times estimation stages and logs their cost to the performance log."""

	def __init__(self,
					window_size: int = 256,
					log_interval: float = 5.0,
					warning_threshold_s: float = 10.0,
					critical_threshold_s: float = 60.0,
					memory_warning_threshold_mb: float = 2000.0,
					log_dir: Optional[Path] = Path('logs')):
		self.stage_metrics = deque(maxlen=window_size)
		self.stage_count = 0
		self.last_log_time = time.perf_counter()
		self.start_time = time.perf_counter()
		self.log_interval = log_interval
		self.warning_threshold_s = warning_threshold_s
		self.critical_threshold_s = critical_threshold_s
		self.memory_warning_threshold = memory_warning_threshold_mb * 1024 * 1024
		self.process = psutil.Process()

		self._setup_logging(log_dir)
		self.perf_logger.info("---===Performance Monitor initialized===---")

	def _setup_logging(self, log_dir: Optional[Path]):
		"""Performance records go to logs/performance.log, never to the console."""
		self.perf_logger = logging.getLogger('performance')
		self.perf_logger.setLevel(logging.INFO)
		self.perf_logger.handlers = []

		if log_dir is not None:
			log_dir = Path(log_dir)
			log_dir.mkdir(parents=True, exist_ok=True)
			file_handler = logging.FileHandler(log_dir / 'performance.log', mode='a')
			file_handler.setLevel(logging.INFO)
			file_handler.setFormatter(logging.Formatter(
				'%(asctime)s - %(name)s - %(levelname)s - %(message)s'
			))
			self.perf_logger.addHandler(file_handler)
		else:
			self.perf_logger.addHandler(logging.NullHandler())

		self.perf_logger.propagate = False

	@contextmanager
	def stage(self, name: str):
		"""Time the enclosed block as one named stage."""
		start = time.perf_counter()
		try:
			yield
		finally:
			self.record_stage(name, time.perf_counter() - start)

	def record_stage(self, name: str, seconds: float):
		current_time = time.perf_counter()
		memory = self.process.memory_info().rss
		self.stage_metrics.append({
			'timestamp': current_time,
			'stage': name,
			'seconds': seconds,
			'memory': memory,
		})
		self.stage_count += 1

		if seconds >= self.critical_threshold_s:
			self.perf_logger.error(f"Stage {name} took {seconds:.2f}s (critical: {self.critical_threshold_s:.0f}s)")
		elif seconds >= self.warning_threshold_s:
			self.perf_logger.warning(f"Stage {name} took {seconds:.2f}s (warning: {self.warning_threshold_s:.0f}s)")

		if current_time - self.last_log_time >= self.log_interval:
			self._log_performance_data()
			self.last_log_time = current_time

	def _log_performance_data(self):
		"""Log stage throughput and memory over the last interval."""
		if not self.stage_metrics:
			return

		current_time = time.perf_counter()
		interval_start = current_time - self.log_interval
		interval_stages = [m for m in self.stage_metrics if m['timestamp'] >= interval_start]
		if not interval_stages:
			return

		count = len(interval_stages)
		avg_seconds = sum(m['seconds'] for m in interval_stages) / count
		slowest = max(interval_stages, key=lambda m: m['seconds'])
		current_memory = self.process.memory_info().rss

		log_msg = (
			f"Performance Metrics | "
			f"Stages: {count} | "
			f"Avg Stage Time: {avg_seconds*1000:.1f}ms | "
			f"Slowest: {slowest['stage']} {slowest['seconds']*1000:.1f}ms | "
			f"Memory Usage: {current_memory / (1024 * 1024):.1f}MB"
		)
		if current_memory > self.memory_warning_threshold:
			log_msg += " | WARNING: memory above threshold"
			self.perf_logger.warning(log_msg)
		else:
			self.perf_logger.info(log_msg)
		for handler in self.perf_logger.handlers:
			handler.flush()

	def get_performance_summary(self) -> dict:
		"""Totals since the monitor started."""
		if not self.stage_metrics:
			return {'stages': 0, 'total_seconds': 0.0, 'slowest_stage': None, 'memory_usage': 0.0, 'durations': {}}

		slowest = max(self.stage_metrics, key=lambda m: m['seconds'])
		durations = {}
		for m in self.stage_metrics:
			durations[m['stage']] = durations.get(m['stage'], 0.0) + m['seconds']
		return {
			'stages': self.stage_count,
			'total_seconds': sum(m['seconds'] for m in self.stage_metrics),
			'slowest_stage': slowest['stage'],
			'memory_usage': self.stage_metrics[-1]['memory'] / (1024 * 1024),
			'durations': durations,
		}
