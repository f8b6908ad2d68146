from django.db import models, transaction

from .study import LevelResult, render_csv


class StudyRun(models.Model):
    """One convergence study: its configuration, fitted rates and per-level results"""
    case = models.CharField(max_length=32, db_index=True)
    rp = models.PositiveSmallIntegerField()
    mollifier = models.CharField(max_length=16)
    scheme = models.CharField(max_length=16)
    kappa = models.FloatField(default=1.0)
    seed = models.PositiveIntegerField(default=0)
    config = models.JSONField(default=dict)
    rates = models.JSONField(default=dict, blank=True)
    created = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created']

    def __str__(self):
        return f"{self.case} rp={self.rp} {self.mollifier}/{self.scheme} ({self.created:%Y-%m-%d %H:%M})"

    @classmethod
    def record(cls, result):
        """Store a StudyResult with all of its levels"""
        config = result.config
        with transaction.atomic():
            run = cls.objects.create(
                case=config.case,
                rp=config.rp,
                mollifier=config.mollifier,
                scheme=config.scheme,
                kappa=config.kappa,
                seed=config.seed,
                config=config.as_dict(),
                rates=dict(result.rates),
            )
            StudyLevel.objects.bulk_create(
                StudyLevel(
                    run=run,
                    level=level.level,
                    n_c=level.n_c,
                    h=level.h,
                    n_b=level.n_b,
                    n_z=level.n_z,
                    e_l2=level.e_L2,
                    e_h1=level.e_H1,
                    e_energy=level.e_energy,
                    mean=level.mean,
                    std=level.std,
                )
                for level in result.levels
            )
        return run

    def level_results(self):
        return [level.as_level_result() for level in self.levels.all()]

    def to_csv(self):
        return render_csv(self.level_results())

    def as_json(self, with_levels=False):
        data = {
            'id': self.pk,
            'case': self.case,
            'rp': self.rp,
            'mollifier': self.mollifier,
            'scheme': self.scheme,
            'kappa': self.kappa,
            'seed': self.seed,
            'rates': self.rates,
            'created': self.created.isoformat(),
        }
        if with_levels:
            data['config'] = self.config
            data['levels'] = [level.as_json() for level in self.levels.all()]
        return data


class StudyLevel(models.Model):
    """Errors of one refinement level of a study"""
    run = models.ForeignKey(StudyRun, on_delete=models.CASCADE, related_name='levels')
    level = models.PositiveSmallIntegerField()
    n_c = models.PositiveIntegerField()
    h = models.FloatField()
    n_b = models.PositiveIntegerField()
    n_z = models.PositiveIntegerField()
    e_l2 = models.FloatField()
    e_h1 = models.FloatField()
    e_energy = models.FloatField(null=True, blank=True)
    mean = models.FloatField(null=True, blank=True)
    std = models.FloatField(default=0.0)

    class Meta:
        ordering = ['level']
        constraints = [
            models.UniqueConstraint(fields=['run', 'level'], name='unique_level_per_run'),
        ]

    def __str__(self):
        return f"level {self.level} of run {self.run_id}"

    def as_level_result(self):
        return LevelResult(
            level=self.level,
            n_c=self.n_c,
            h=self.h,
            n_b=self.n_b,
            n_z=self.n_z,
            e_L2=self.e_l2,
            e_H1=self.e_h1,
            e_energy=self.e_energy,
            mean=self.mean,
            std=self.std,
        )

    def as_json(self):
        return {
            'level': self.level,
            'n_c': self.n_c,
            'h': self.h,
            'n_b': self.n_b,
            'n_z': self.n_z,
            'e_L2': self.e_l2,
            'e_H1': self.e_h1,
            'e_energy': self.e_energy,
            'mean': self.mean,
            'std': self.std,
        }
