"""Run configuration.

A config file holds one ``section.key = value`` pair per line; ``#`` starts
a comment and lists are comma separated. Every key has a default, so an
empty file describes SO2 driven by the weak single-cycle pulse.
"""

import dataclasses

from dataclasses import dataclass, field

from rotorwave import angular, dynamics, thermal
from rotorwave.base import ConfigException
from rotorwave.utils import sha256_bytes

MAX_SEED = 2 ** 64 - 1
WEAK_FIELD = 1.2
SCALING_MAX_STATES = 30000


def _items(kind):
    return {'item': kind}


def _optional():
    return {'optional': True}


@dataclass
class MoleculeSection:
    A_cm1: float = 2.028
    B_cm1: float = 0.3442
    C_cm1: float = 0.2935
    mu_debye: float = 1.62

    def validate(self):
        for name in ('A_cm1', 'B_cm1', 'C_cm1'):
            _positive('molecule.' + name, getattr(self, name))
        _non_negative('molecule.mu_debye', self.mu_debye)
        if not self.A_cm1 >= self.B_cm1 >= self.C_cm1:
            raise ConfigException('molecule', 'expected A >= B >= C')


@dataclass
class EnsembleSection:
    temperature_K: float = 10.0
    population_cutoff: float = 1e-3
    jmax_ceiling: int = thermal.JMAX_CEILING
    exact_max_states: int = dynamics.EXACT_MAX_STATES

    def validate(self):
        _positive('ensemble.temperature_K', self.temperature_K)
        _fraction('ensemble.population_cutoff', self.population_cutoff)
        _positive('ensemble.jmax_ceiling', self.jmax_ceiling)
        _positive('ensemble.exact_max_states', self.exact_max_states)


@dataclass
class PulseSection:
    peak_field_MV_cm: float = field(default=WEAK_FIELD, metadata=_optional())
    intensity_W_cm2: float = field(default=None, metadata=_optional())
    carrier_THz: float = 0.5
    fwhm_ps: float = dynamics.DEFAULT_FWHM
    center_ps: float = dynamics.DEFAULT_CENTER

    def validate(self):
        if (self.peak_field_MV_cm is None) == (self.intensity_W_cm2 is None):
            raise ConfigException(
                'pulse', 'give exactly one of peak_field_MV_cm and '
                'intensity_W_cm2')
        if self.peak_field_MV_cm is not None:
            _non_negative('pulse.peak_field_MV_cm', self.peak_field_MV_cm)
        else:
            _non_negative('pulse.intensity_W_cm2', self.intensity_W_cm2)
        _non_negative('pulse.carrier_THz', self.carrier_THz)
        _positive('pulse.fwhm_ps', self.fwhm_ps)

    @property
    def e0(self):
        if self.peak_field_MV_cm is not None:
            return self.peak_field_MV_cm
        return dynamics.intensity_to_field(self.intensity_W_cm2)


@dataclass
class PropagationSection:
    dt_ps: float = 0.002
    t_start_ps: float = -12.5
    t_end_ps: float = 125.0
    method: str = dynamics.SPLIT_STEP
    sample_every_ps: float = 0.05
    j_buffer: int = 20
    norm_drift_tolerance: float = 1e-8
    leakage_tolerance: float = 1e-6

    def validate(self):
        _choice('propagation.method', self.method, dynamics.METHODS)
        _positive('propagation.dt_ps', self.dt_ps)
        _positive('propagation.sample_every_ps', self.sample_every_ps)
        _non_negative('propagation.j_buffer', self.j_buffer)
        _positive('propagation.norm_drift_tolerance',
                  self.norm_drift_tolerance)
        _positive('propagation.leakage_tolerance', self.leakage_tolerance)
        if not self.t_end_ps > self.t_start_ps:
            raise ConfigException('propagation.t_end_ps',
                                  'must exceed t_start_ps')
        try:
            self.build()
        except ValueError as e:
            raise ConfigException('propagation', str(e))

    def build(self):
        return dynamics.PropagationConfig(
            dt=self.dt_ps,
            t_start=self.t_start_ps,
            t_end=self.t_end_ps,
            method=self.method,
            norm_drift_tolerance=self.norm_drift_tolerance,
            sample_every=self.sample_every_ps,
            j_buffer=self.j_buffer,
            leakage_tolerance=self.leakage_tolerance,
        )


@dataclass
class RpwfSection:
    n_realizations: int = 100
    master_seed: int = 0
    batches: int = 100
    keep: int = 1

    def validate(self):
        _positive('rpwf.n_realizations', self.n_realizations)
        _positive('rpwf.batches', self.batches)
        _non_negative('rpwf.keep', self.keep)
        if not 0 <= self.master_seed <= MAX_SEED:
            raise ConfigException('rpwf.master_seed',
                                  'must be an unsigned 64-bit integer')


@dataclass
class OutputSection:
    directory: str = 'output'
    format: str = 'csv'

    def validate(self):
        if not self.directory:
            raise ConfigException('output.directory', 'must not be empty')
        _choice('output.format', self.format, ('csv',))


@dataclass
class LevelsSection:
    temperatures_K: list = field(
        default_factory=lambda: [0.01, 20.0, 30.0, 40.0, 50.0, 75.0, 100.0,
                                 150.0, 200.0, 300.0],
        metadata=_items(float))
    count_cutoff: float = 0.5
    count_criterion: str = thermal.POPULATION
    scaling_range_K: list = field(default_factory=lambda: [20.0, 200.0],
                                  metadata=_items(float))
    deviation_range_K: list = field(default_factory=lambda: [50.0, 300.0],
                                    metadata=_items(float))
    partition_tolerance: float = 1e-14

    def validate(self):
        _positive_list('levels.temperatures_K', self.temperatures_K)
        _choice('levels.count_criterion', self.count_criterion,
                thermal.CRITERIA)
        _fraction('levels.count_cutoff', self.count_cutoff,
                  closed=self.count_criterion == thermal.BOLTZMANN_FACTOR)
        _range('levels.scaling_range_K', self.scaling_range_K)
        _range('levels.deviation_range_K', self.deviation_range_K)
        _fraction('levels.partition_tolerance', self.partition_tolerance)


@dataclass
class StaticSection:
    temperatures_K: list = field(default_factory=lambda: [10.0, 50.0, 100.0],
                                 metadata=_items(float))

    def validate(self):
        _positive_list('static.temperatures_K', self.temperatures_K)


@dataclass
class DynamicsSection:
    methods: list = field(default_factory=lambda: [dynamics.EXACT,
                                                   dynamics.RPWF],
                          metadata=_items(str))
    epsilon_window_ps: float = 120.0
    epsilon_start_ps: float = 0.0
    flatness_windows_ps: list = field(default_factory=list,
                                      metadata=_items(float))
    checkpoints: list = field(default_factory=list, metadata=_items(int))

    def validate(self):
        if not self.methods:
            raise ConfigException('dynamics.methods', 'must not be empty')
        for x in self.methods:
            _choice('dynamics.methods', x, (dynamics.EXACT, dynamics.RPWF))
        _positive('dynamics.epsilon_window_ps', self.epsilon_window_ps)
        if len(self.flatness_windows_ps) % 2:
            raise ConfigException('dynamics.flatness_windows_ps',
                                  'expected lo,hi pairs')
        for lo, hi in self.windows:
            if not lo < hi:
                raise ConfigException('dynamics.flatness_windows_ps',
                                      'window {}..{} is empty'.format(lo, hi))
        _positive_list('dynamics.checkpoints', self.checkpoints,
                       allow_empty=True)

    @property
    def windows(self):
        x = self.flatness_windows_ps
        return list(zip(x[::2], x[1::2]))


@dataclass
class ScalingSection:
    parts: list = field(default_factory=lambda: ['static', 'dynamic'],
                        metadata=_items(str))
    static_temperatures_K: list = field(
        default_factory=lambda: [5.0, 10.0, 20.0, 50.0, 100.0],
        metadata=_items(float))
    static_realizations: list = field(
        default_factory=lambda: [64, 128, 256, 512, 1024],
        metadata=_items(int))
    dynamic_temperatures_K: list = field(
        default_factory=lambda: [10.0, 30.0, 75.0], metadata=_items(float))
    dynamic_realizations: list = field(
        default_factory=lambda: [25, 100, 400, 1600], metadata=_items(int))
    fixed_realizations: int = 100
    exact_max_states: int = SCALING_MAX_STATES
    epsilon_target: float = field(default=None, metadata=_optional())

    def validate(self):
        if not self.parts:
            raise ConfigException('scaling.parts', 'must not be empty')
        for x in self.parts:
            _choice('scaling.parts', x, ('static', 'dynamic'))
        for name in ('static_temperatures_K', 'static_realizations',
                     'dynamic_temperatures_K', 'dynamic_realizations'):
            _positive_list('scaling.' + name, getattr(self, name))
        _positive('scaling.fixed_realizations', self.fixed_realizations)
        _positive('scaling.exact_max_states', self.exact_max_states)
        if self.epsilon_target is not None:
            _positive('scaling.epsilon_target', self.epsilon_target)


SECTIONS = (
    ('molecule', MoleculeSection),
    ('ensemble', EnsembleSection),
    ('pulse', PulseSection),
    ('propagation', PropagationSection),
    ('rpwf', RpwfSection),
    ('output', OutputSection),
    ('levels', LevelsSection),
    ('static', StaticSection),
    ('dynamics', DynamicsSection),
    ('scaling', ScalingSection),
)


@dataclass
class RunConfig:
    """Validated run configuration.

    :ivar molecule: rotational constants and dipole
    :ivar ensemble: thermal ensemble of the dynamics and static runs
    :ivar pulse: driving pulse
    :ivar propagation: time grid and integrator
    :ivar rpwf: realization count, seed and batching
    :ivar output: output directory and format
    :ivar levels: level counting and thermal energy
    :ivar static: static observables
    :ivar dynamics: trace comparison
    :ivar scaling: convergence grids

    """

    molecule: MoleculeSection = field(default_factory=MoleculeSection)
    ensemble: EnsembleSection = field(default_factory=EnsembleSection)
    pulse: PulseSection = field(default_factory=PulseSection)
    propagation: PropagationSection = field(
        default_factory=PropagationSection)
    rpwf: RpwfSection = field(default_factory=RpwfSection)
    output: OutputSection = field(default_factory=OutputSection)
    levels: LevelsSection = field(default_factory=LevelsSection)
    static: StaticSection = field(default_factory=StaticSection)
    dynamics: DynamicsSection = field(default_factory=DynamicsSection)
    scaling: ScalingSection = field(default_factory=ScalingSection)

    def validate(self):
        for name, _ in SECTIONS:
            getattr(self, name).validate()
        self._validate_windows()
        return self

    def _validate_windows(self):
        lo, hi = self.propagation_config().sample_span
        d = self.dynamics
        if d.epsilon_start_ps < lo - 1e-9 or \
                d.epsilon_start_ps + d.epsilon_window_ps > hi + 1e-9:
            raise ConfigException(
                'dynamics.epsilon_window_ps',
                '[{}, {}] exceeds the sampled span [{}, {}]'.format(
                    d.epsilon_start_ps,
                    d.epsilon_start_ps + d.epsilon_window_ps, lo, hi))
        for a, b in d.windows:
            if a < lo - 1e-9 or b > hi + 1e-9:
                raise ConfigException(
                    'dynamics.flatness_windows_ps',
                    'window {}..{} lies outside the sampled span '
                    '[{}, {}]'.format(a, b, lo, hi))

    def rotor(self):
        m = self.molecule
        return angular.RotorConstants(A=m.A_cm1, B=m.B_cm1, C=m.C_cm1,
                                      mu=m.mu_debye)

    def pulse_spec(self):
        p = self.pulse
        return dynamics.PulseSpec.from_fwhm(
            p.e0, fwhm=p.fwhm_ps, carrier=p.carrier_THz, t_center=p.center_ps)

    def propagation_config(self):
        return self.propagation.build()

    def with_overrides(self, seed=None, out=None):
        """Copy with the command-line overrides applied."""
        rpwf = self.rpwf
        output = self.output
        if seed is not None:
            rpwf = dataclasses.replace(rpwf, master_seed=int(seed))
        if out is not None:
            output = dataclasses.replace(output, directory=out)
        return dataclasses.replace(self, rpwf=rpwf, output=output).validate()

    def dumps(self):
        """Canonical text form; every key, in declaration order."""
        lines = []
        for name, _ in SECTIONS:
            section = getattr(self, name)
            for f in dataclasses.fields(section):
                value = getattr(section, f.name)
                if value is None:
                    continue
                lines.append('{}.{} = {}'.format(name, f.name,
                                                 _render(value)))
        return '\n'.join(lines) + '\n'

    def digest(self):
        return sha256_bytes(self.dumps().encode('utf-8'))


def _render(value):
    if isinstance(value, list):
        return ','.join(_render(x) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(path, kind, text):
    try:
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError:
        raise ConfigException(path, 'expected {}, got "{}"'.format(
            'an integer' if kind is int else 'a number', text))
    return text


def _parse_value(path, f, text):
    if f.type is list or f.type == 'list':
        kind = f.metadata['item']
        return [_convert(path, kind, x.strip())
                for x in text.split(',') if x.strip()]
    if f.metadata.get('optional') and text.lower() in ('', 'none'):
        return None
    return _convert(path, f.type, text)


def loads(text):
    """Parse and validate config text.

    :raises ConfigException: on unknown keys, malformed lines or invalid
        values

    """
    sections = dict(SECTIONS)
    values = {name: {} for name in sections}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition('=')
        key = key.strip()
        if not eq:
            raise ConfigException('line {}'.format(lineno),
                                  'expected "key = value"')
        section, _, name = key.partition('.')
        if section not in sections:
            raise ConfigException(key, 'unknown section')
        fields = {f.name: f for f in dataclasses.fields(sections[section])}
        if name not in fields:
            raise ConfigException(key, 'unknown key')
        if name in values[section]:
            raise ConfigException(key, 'given twice')
        values[section][name] = _parse_value(key, fields[name],
                                             value.strip())

    pulse = values['pulse']
    if 'intensity_W_cm2' in pulse and 'peak_field_MV_cm' not in pulse:
        pulse['peak_field_MV_cm'] = None

    config = RunConfig(**{
        name: cls(**values[name]) for name, cls in SECTIONS})
    return config.validate()


def load(path):
    try:
        with open(path, encoding='utf-8') as fd:
            text = fd.read()
    except OSError as e:
        raise ConfigException('config', 'cannot read {}: {}'.format(
            path, e.strerror))
    return loads(text)


def _positive(path, x):
    if not x > 0:
        raise ConfigException(path, 'must be positive, got {}'.format(x))


def _non_negative(path, x):
    if not x >= 0:
        raise ConfigException(path, 'must be non-negative, got {}'.format(x))


def _fraction(path, x, closed=False):
    if not (0 < x <= 1 if closed else 0 < x < 1):
        raise ConfigException(path, 'must lie in (0, 1{}, got {}'.format(
            ']' if closed else ')', x))


def _choice(path, x, choices):
    if x not in choices:
        raise ConfigException(path, 'expected one of {}, got "{}"'.format(
            '|'.join(choices), x))


def _positive_list(path, xs, allow_empty=False):
    if not xs and not allow_empty:
        raise ConfigException(path, 'must not be empty')
    for x in xs:
        _positive(path, x)


def _range(path, xs):
    if len(xs) != 2 or not 0 < xs[0] < xs[1]:
        raise ConfigException(path, 'expected lo,hi with 0 < lo < hi')
