from pathlib import Path

from django import forms
from django.conf import settings

from .collocation import SCHEMES
from .mollifier import FAMILIES
from .problems import CASES
from .study import CASE_DEFAULTS, StudyConfig

CONFIG_KEYS = (
    'case', 'rp', 'mollifier', 'kappa', 'scheme', 'beta', 'gamma',
    'sigma', 'replicates', 'seed', 'levels', 'out', 'workers',
)


def _choices(names):
    return [(name, name) for name in names]


def read_config_file(path):
    """Parse a flat key=value study file; '#' starts a comment"""
    values = {}
    with open(path) as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition('=')
            key = key.strip()
            if not sep or not key:
                raise forms.ValidationError(f"{path}:{number}: expected key=value, got {raw.strip()!r}")
            if key not in CONFIG_KEYS:
                raise forms.ValidationError(f"{path}:{number}: unknown key {key!r}")
            values[key] = value.strip()
    return values


class StudyConfigForm(forms.Form):
    """Validates a merged study configuration; unset values take the case defaults"""
    case = forms.ChoiceField(choices=_choices(CASES))
    rp = forms.IntegerField(min_value=0, required=False)
    mollifier = forms.ChoiceField(choices=_choices(FAMILIES), required=False)
    kappa = forms.FloatField(required=False)
    scheme = forms.ChoiceField(choices=_choices(SCHEMES), required=False)
    beta = forms.IntegerField(min_value=1, required=False)
    gamma = forms.IntegerField(min_value=1, max_value=30, required=False)
    sigma = forms.FloatField(min_value=0.0, required=False)
    replicates = forms.IntegerField(min_value=1, required=False)
    seed = forms.IntegerField(min_value=0, required=False)
    levels = forms.IntegerField(min_value=2, required=False)
    out = forms.CharField(required=False)
    workers = forms.IntegerField(min_value=1, required=False)

    def clean_kappa(self):
        kappa = self.cleaned_data.get('kappa')
        if kappa is not None and kappa <= 0:
            raise forms.ValidationError('kappa must be positive.')
        return kappa

    def clean_sigma(self):
        sigma = self.cleaned_data.get('sigma')
        if sigma is not None and sigma >= 0.5:
            raise forms.ValidationError('sigma must be below 0.5 of the point spacing.')
        return sigma

    def clean(self):
        cleaned_data = super().clean()
        case = cleaned_data.get('case')
        if case is None:
            return cleaned_data
        defaults = CASE_DEFAULTS[case]
        for key in ('rp', 'mollifier', 'scheme', 'beta', 'sigma', 'levels', 'gamma'):
            if cleaned_data.get(key) in (None, ''):
                cleaned_data[key] = defaults.get(key)
        if cleaned_data.get('kappa') is None:
            cleaned_data['kappa'] = 1.0
        if cleaned_data.get('replicates') is None:
            cleaned_data['replicates'] = 1
        if cleaned_data.get('seed') is None:
            cleaned_data['seed'] = 0
        if cleaned_data.get('workers') is None:
            cleaned_data['workers'] = getattr(settings, 'COLLOCATION_WORKERS', 1)
        return cleaned_data

    def to_config(self):
        data = self.cleaned_data
        return StudyConfig(
            case=data['case'],
            rp=data['rp'],
            mollifier=data['mollifier'],
            scheme=data['scheme'],
            beta=data['beta'],
            levels=data['levels'],
            kappa=data['kappa'],
            gamma=data['gamma'],
            sigma=data['sigma'],
            replicates=data['replicates'],
            seed=data['seed'],
            out=Path(data['out']) if data.get('out') else None,
            workers=data['workers'],
        )
