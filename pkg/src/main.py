# src/main.py

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from src.utils.logger_config import logger, set_verbosity
from src.utils.configuration_manager import ConfigurationManager
from src.utils.performance_monitor import PerformanceMonitor
from src.utils.report_writer import bracketed, render_csv, render_json, write_text
from src.utils.errors import DomainError, InputError, InvariantViolationError, PreconditionError, UnsupportedStructureError
from src.mappings.gauges import ModulationFunction
from src.mappings.problem_spec import ProblemSpec, resolve_problem
from src.criteria.certificates import Verdict
from src.criteria.criteria_checker import CONDITIONS, CriteriaChecker, GaugeSelection, SlopeQuantities
from src.criteria.corpus import builtin_corpus, load_corpus, random_corpus
from src.criteria.implication_audit import ImplicationAuditor
from src.slopes.slope_estimate import encode_ext
from src.slopes.slope_settings import RhoSchedule, SamplingSettings

DEFAULT_CONFIG_DIR = Path(__file__).resolve().parents[1] / "config"

EXIT_OK, EXIT_FAILS, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3
VERDICT_EXIT = {Verdict.HOLDS: EXIT_OK, Verdict.FAILS: EXIT_FAILS, Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE}

PRIMAL_QUANTITIES = [
	"modulus:f", "modulus:g", "modulus:phi", "error_bound", "growth",
	"strict:f", "strict:g", "strict:phi",
	"modified:f", "modified:g", "modified:phi",
	"uniform:f", "uniform:g", "uniform:phi",
]
DUAL_QUANTITIES = [
	"subdiff:f:plain", "subdiff:f:modified",
	"subdiff:g:plain", "subdiff:g:approximate", "subdiff:g:modified", "subdiff:g:approximate_modified",
	"subdiff:phi:plain", "subdiff:phi:approximate", "subdiff:phi:modified", "subdiff:phi:approximate_modified",
	"subdiff_xi_free:plain",
	"limiting:g", "limiting_approx:g", "limiting:phi",
]


class _Parser(argparse.ArgumentParser):
	"""Usage errors are input errors (exit 3), not argparse's exit 2."""

	def error(self, message):
		raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
	common = _Parser(add_help=False)
	common.add_argument('--problem', type=str, help='Problem spec file (.yaml/.json) or built-in problem name')
	common.add_argument('--gauge', type=str, default='g', help='f, g, phi or holder:q')
	common.add_argument('--gamma', type=float, help='Level of the quantitative criteria')
	common.add_argument('--rho0', type=float, help='First level of the rho schedule')
	common.add_argument('--rho-factor', type=float, help='Ratio of consecutive rho levels')
	common.add_argument('--rho-steps', type=int, help='Number of rho levels')
	common.add_argument('--radius', type=float, help='Sampling window around the reference point')
	common.add_argument('--resolution', type=int, help='Grid points per x axis')
	common.add_argument('--format', choices=['json', 'csv'], default='json', help='Report format')
	common.add_argument('--seed', type=int, help='Seed of the random audit corpus')
	common.add_argument('--out', type=str, help='Report path; stdout when omitted')
	common.add_argument('--config', type=str, default=str(DEFAULT_CONFIG_DIR), help='Configuration directory')
	common.add_argument('-v', '--verbose', action='count', default=0, help='-v for INFO, -vv for DEBUG')

	parser = _Parser(prog='subreg', description='Slopes, moduli and regularity criteria of set-valued mappings')
	commands = parser.add_subparsers(dest='command', metavar='command')
	commands.required = True

	commands.add_parser('analyze', parents=[common], help='Every slope, modulus and vartheta at the reference point')

	certify = commands.add_parser('certify', parents=[common], help='Certificates of the regularity criteria')
	certify.add_argument('--condition', type=str, default='a', help='Condition letter deciding the exit code')
	certify.add_argument('--mode', choices=['quantitative', 'qualitative'],
						 help='Defaults to quantitative when --gamma is given')

	sweep = commands.add_parser('sweep', parents=[common], help='Modulus and verdicts along one axis')
	sweep.add_argument('--axis', choices=['q', 'gamma', 'rho0'], required=True)
	sweep.add_argument('--values', type=str, required=True, help='Comma-separated axis values')

	audit = commands.add_parser('audit', parents=[common], help='Implication audit over a corpus')
	audit.add_argument('--random-instances', type=int, help='Size of the random sampled-graph corpus')
	return parser


class RunContext:
	"""Configuration, flags and the performance monitor of one command."""

	def __init__(self, args: argparse.Namespace):
		self.args = args
		self.config_manager = ConfigurationManager(Path(args.config))
		self.sampling = self.config_manager.get_sampling_settings()
		self.schedule = self.config_manager.get_rho_schedule()
		self.tolerances = self.config_manager.get_tolerance_settings()
		self.criteria = self.config_manager.get_criteria_settings()
		self.audit = self.config_manager.get_audit_config()
		perf = self.config_manager.get_performance_config()
		self.monitor = PerformanceMonitor(
			log_interval=perf.log_interval,
			warning_threshold_s=perf.warning_threshold_s,
			critical_threshold_s=perf.critical_threshold_s,
			memory_warning_threshold_mb=perf.memory_warning_threshold_mb,
			log_dir=Path(perf.log_dir) if perf.log_to_file else None,
		)

	@property
	def sampling_flags(self) -> Dict[str, Any]:
		return {'radius': self.args.radius, 'resolution': self.args.resolution}

	@property
	def schedule_flags(self) -> Dict[str, Any]:
		return {'rho_0': self.args.rho0, 'factor': self.args.rho_factor, 'steps': self.args.rho_steps}

	def load_problem(self) -> ProblemSpec:
		if not self.args.problem:
			raise InputError("--problem is required")
		with self.monitor.stage('load'):
			return resolve_problem(self.args.problem, graph_tol=self.tolerances.graph_tol)

	def checker(self, spec: ProblemSpec, gauge, schedule_flags: Optional[Dict[str, Any]] = None) -> CriteriaChecker:
		flags = {**self.schedule_flags, **(schedule_flags or {})}
		return CriteriaChecker(
			spec, gauge,
			sampling=spec.sampling_settings(self.sampling, self.sampling_flags),
			schedule=spec.rho_schedule(self.schedule, flags),
			tolerances=self.tolerances,
			criteria=self.criteria,
		)

	def emit(self, payload: Dict[str, Any], rows: List[Dict[str, Any]], columns: List[str]) -> None:
		out = Path(self.args.out) if self.args.out else None
		if self.args.format == 'csv':
			write_text(render_csv(rows, columns), out)
		else:
			write_text(render_json(payload), out)


def _settings_block(checker: CriteriaChecker) -> Dict[str, Any]:
	return {
		'sampling': checker.sampling.to_config(),
		'schedule': {**checker.schedule.to_config(), 'rhos': [float(r) for r in checker.schedule.rhos]},
	}


def _estimate_row(name: str, estimate_dict: Dict[str, Any]) -> Dict[str, Any]:
	if 'unsupported' in estimate_dict:
		return {'quantity': name, 'value': None, 'lower': None, 'upper': None, 'rho': None,
				'note': estimate_dict['unsupported']}
	return {
		'quantity': name,
		'value': estimate_dict['value'],
		'lower': estimate_dict['lower'],
		'upper': estimate_dict['upper'],
		'rho': estimate_dict.get('rho'),
		'note': '; '.join(estimate_dict.get('diagnostics', [])),
	}


def cmd_analyze(ctx: RunContext) -> int:
	spec = ctx.load_problem()
	checker = ctx.checker(spec, ctx.args.gauge)
	quantities: SlopeQuantities = checker.quantities
	values: Dict[str, Any] = {}
	with ctx.monitor.stage('primal'):
		for name in PRIMAL_QUANTITIES:
			values[name] = quantities.get(name).to_dict()
	coderivatives: Dict[str, Any] = {}
	with ctx.monitor.stage('dual'):
		for name in DUAL_QUANTITIES:
			try:
				values[name] = quantities.get(name).to_dict()
			except UnsupportedStructureError as e:
				values[name] = {'unsupported': str(e)}
		for kind, approximate in (('g', False), ('g', True), ('phi', False)):
			key = f"{kind}{'_approximate' if approximate else ''}"
			try:
				coderivatives[key] = quantities.limiting(kind, approximate).to_dict()
			except UnsupportedStructureError as e:
				coderivatives[key] = {'unsupported': str(e)}

	gauge = quantities.gauge
	spot_checks: Dict[str, Any] = {
		'gauge_positive': gauge.check_positivity(quantities.primal.window_sample().ys),
		'gauge_growth_ratio': bracketed(gauge.growth_ratio()),
		'gauge_continuous': gauge.continuity_spot_check(),
	}
	if spec.hypotheses.convex:
		spot_checks['midpoint_convexity'] = spec.mapping.midpoint_convexity_check(
			trials=ctx.criteria.convexity_trials, radius=checker.sampling.radius)

	payload = {
		'command': 'analyze',
		'problem': spec.name,
		'gauge': checker.selection.label,
		'phi': checker.selection.phi.to_config(),
		'hypotheses': spec.hypotheses.to_config(),
		'vartheta': bracketed(quantities.vartheta()),
		'quantities': values,
		'coderivatives': coderivatives,
		'spot_checks': spot_checks,
		**_settings_block(checker),
	}
	rows = [_estimate_row(name, data) for name, data in values.items()]
	rows.append({'quantity': 'vartheta', **bracketed(quantities.vartheta()), 'rho': None, 'note': ''})
	ctx.emit(payload, rows, ['quantity', 'value', 'lower', 'upper', 'rho', 'note'])
	return EXIT_OK


def cmd_certify(ctx: RunContext) -> int:
	spec = ctx.load_problem()
	checker = ctx.checker(spec, ctx.args.gauge)
	mode = ctx.args.mode or ('quantitative' if ctx.args.gamma is not None else 'qualitative')
	with ctx.monitor.stage('certify'):
		if mode == 'quantitative':
			if ctx.args.gamma is None:
				raise InputError("quantitative certification needs --gamma")
			certificates = checker.check_quantitative(ctx.args.gamma)
		else:
			certificates = checker.check_qualitative()
	corollary = checker.corollary(mode)
	requested = ctx.args.condition
	if requested not in CONDITIONS[corollary]:
		raise InputError(f"{corollary} has no condition ({requested}); choose one of {sorted(CONDITIONS[corollary])}")
	verdict = next(c.verdict for c in certificates if c.criterion_id == requested)

	payload: Dict[str, Any] = {
		'command': 'certify',
		'problem': spec.name,
		'gauge': checker.selection.label,
		'mode': mode,
		'gamma': ctx.args.gamma if mode == 'quantitative' else None,
		'corollary': corollary,
		'condition': requested,
		'verdict': verdict.value,
		'certificates': [c.to_dict() for c in certificates],
		**_settings_block(checker),
	}
	if spec.hypotheses.convex and checker.family == 'phi':
		try:
			payload['convex_bound'] = checker.convex_necessity_bound().to_dict()
		except UnsupportedStructureError as e:
			payload['convex_bound'] = {'unsupported': str(e)}
	rows = []
	for c in certificates:
		value = c.value.to_dict() if c.value is not None else {}
		rows.append({
			'corollary': c.corollary, 'criterion_id': c.criterion_id, 'gamma': c.gamma,
			'verdict': c.verdict.value, 'quantity': c.quantity,
			'value': value.get('value'), 'lower': value.get('lower'), 'upper': value.get('upper'),
			'rho': c.rho_used,
		})
	ctx.emit(payload, rows, ['corollary', 'criterion_id', 'gamma', 'verdict', 'quantity',
							 'value', 'lower', 'upper', 'rho'])
	logger.info(f"{spec.name}: condition ({requested}) of {corollary} {verdict.value}")
	return VERDICT_EXIT[verdict]


def _parse_values(text: str) -> List[float]:
	values = []
	for item in text.split(','):
		item = item.strip()
		if not item:
			continue
		try:
			values.append(float(item))
		except ValueError:
			raise InputError(f"malformed sweep value '{item}'") from None
	return values


def cmd_sweep(ctx: RunContext) -> int:
	spec = ctx.load_problem()
	axis = ctx.args.axis
	values = _parse_values(ctx.args.values)
	if not values:
		logger.warning("empty sweep range")
	gamma = ctx.args.gamma
	rows: List[Dict[str, Any]] = []
	json_rows: List[Dict[str, Any]] = []
	letters: List[str] = []

	for value in values:
		schedule_flags = None
		level = gamma
		if axis == 'q':
			gauge = GaugeSelection(f"holder:{value:g}", 'phi', ModulationFunction.holder(value))
		else:
			gauge = ctx.args.gauge
		if axis == 'gamma':
			level = value
		if axis == 'rho0':
			schedule_flags = {'rho_0': value}
		with ctx.monitor.stage(f"sweep:{axis}={value:g}"):
			checker = ctx.checker(spec, gauge, schedule_flags)
			modulus = checker.quantities.get(f"modulus:{checker.family}")
			if level is not None:
				certificates = checker.check_quantitative(level)
			else:
				certificates = checker.check_qualitative()
		verdicts = {c.criterion_id: c.verdict.value for c in certificates}
		letters = sorted(verdicts)
		bracket = modulus.bracket()
		rows.append({'axis': axis, 'value': value, 'gamma': level, 'modulus': bracket['value'],
					 'modulus_lower': bracket['lower'], 'modulus_upper': bracket['upper'],
					 **{f"verdict_{k}": v for k, v in verdicts.items()}})
		json_rows.append({'value': value, 'gamma': level, 'gauge': checker.selection.label,
						  'modulus': modulus.to_dict(), 'verdicts': verdicts})

	notes = []
	if axis == 'q' and rows:
		ordered = sorted(rows, key=lambda r: r['value'], reverse=True)
		held = False
		monotone = True
		for row in ordered:
			holds = row.get('verdict_a') == Verdict.HOLDS.value
			if held and not holds and row.get('verdict_a') == Verdict.FAILS.value:
				monotone = False
			held = held or holds
		if monotone:
			notes.append("modulus verdicts are monotone in q: a smaller q is never harder")
		else:
			notes.append("modulus verdicts are not monotone in q on these rows")
			logger.warning(notes[-1])

	payload = {'command': 'sweep', 'problem': spec.name, 'axis': axis, 'rows': json_rows, 'notes': notes}
	columns = ['axis', 'value', 'gamma', 'modulus', 'modulus_lower', 'modulus_upper'] + [f"verdict_{k}" for k in letters]
	ctx.emit(payload, rows, columns)
	return EXIT_OK


def _given(flags: Dict[str, Any]) -> Dict[str, Any]:
	return {k: v for k, v in flags.items() if v is not None}


def cmd_audit(ctx: RunContext) -> int:
	audit = ctx.audit
	seed = ctx.args.seed if ctx.args.seed is not None else audit.seed
	count = ctx.args.random_instances if ctx.args.random_instances is not None else audit.random_instances
	if count < 0:
		raise InputError(f"--random-instances must be nonnegative, got {count}")
	with ctx.monitor.stage('load'):
		if ctx.args.problem:
			specs = load_corpus(Path(ctx.args.problem))
		else:
			specs = builtin_corpus() + random_corpus(count, audit.max_points, seed)
	if not specs:
		logger.warning("empty corpus, nothing to audit")

	audit.progress = audit.progress and sys.stderr.isatty()
	auditor = ImplicationAuditor(
		sampling=SamplingSettings.from_config({**ctx.sampling.to_config(), **_given(ctx.sampling_flags)}),
		schedule=RhoSchedule.from_config({**ctx.schedule.to_config(), **_given(ctx.schedule_flags)}),
		tolerances=ctx.tolerances,
		criteria=ctx.criteria,
		audit=audit,
		monitor=ctx.monitor,
	)
	reports = auditor.audit_implications(specs)

	violations = [f"{r.instance_id}:{v}" for r in reports for v in r.violations]
	counts: Dict[str, int] = {}
	for report in reports:
		for status, n in report.status_counts().items():
			counts[status] = counts.get(status, 0) + n
	payload = {
		'command': 'audit',
		'seed': seed,
		'instances': [r.to_dict() for r in reports],
		'summary': {'instances': len(reports), 'counts': dict(sorted(counts.items())), 'violations': violations},
	}
	rows = []
	for report in reports:
		for edge in report.edges:
			rows.append({'instance_id': report.instance_id, 'kind': 'edge', 'id': edge.edge,
						 'gamma': edge.gamma, 'status': edge.status.value, 'lhs': None, 'rhs': None})
		for check in report.hierarchy:
			rows.append({'instance_id': report.instance_id, 'kind': 'hierarchy', 'id': check.check_id,
						 'gamma': None, 'status': check.status.value,
						 'lhs': encode_ext(check.lhs), 'rhs': encode_ext(check.rhs)})
	ctx.emit(payload, rows, ['instance_id', 'kind', 'id', 'gamma', 'status', 'lhs', 'rhs'])
	if violations:
		logger.error(f"{len(violations)} violated edges or checks: {violations}")
		return EXIT_FAILS
	return EXIT_OK


COMMANDS = {'analyze': cmd_analyze, 'certify': cmd_certify, 'sweep': cmd_sweep, 'audit': cmd_audit}


def main(argv: Optional[List[str]] = None) -> int:
	"""Command-line entry point; returns the exit code."""
	try:
		args = build_parser().parse_args(argv)
		set_verbosity(args.verbose)
		ctx = RunContext(args)
		code = COMMANDS[args.command](ctx)
		logger.info(f"performance: {ctx.monitor.get_performance_summary()}")
		return code
	except (InputError, DomainError, InvariantViolationError, PreconditionError) as e:
		print(f"error: {e}", file=sys.stderr)
		return EXIT_INPUT
	except (yaml.YAMLError, json.JSONDecodeError, OSError) as e:
		print(f"error: cannot read input: {e}", file=sys.stderr)
		return EXIT_INPUT
	except (TypeError, ValueError) as e:
		# settings validation
		print(f"error: {e}", file=sys.stderr)
		return EXIT_INPUT


if __name__ == "__main__":
	sys.exit(main())
