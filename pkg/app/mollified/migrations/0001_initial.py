# Generated by Django 5.2.3 on 2026-10-19 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='StudyRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('case', models.CharField(db_index=True, max_length=32)),
                ('rp', models.PositiveSmallIntegerField()),
                ('mollifier', models.CharField(max_length=16)),
                ('scheme', models.CharField(max_length=16)),
                ('kappa', models.FloatField(default=1.0)),
                ('seed', models.PositiveIntegerField(default=0)),
                ('config', models.JSONField(default=dict)),
                ('rates', models.JSONField(blank=True, default=dict)),
                ('created', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created'],
            },
        ),
        migrations.CreateModel(
            name='StudyLevel',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('level', models.PositiveSmallIntegerField()),
                ('n_c', models.PositiveIntegerField()),
                ('h', models.FloatField()),
                ('n_b', models.PositiveIntegerField()),
                ('n_z', models.PositiveIntegerField()),
                ('e_l2', models.FloatField()),
                ('e_h1', models.FloatField()),
                ('e_energy', models.FloatField(blank=True, null=True)),
                ('mean', models.FloatField(blank=True, null=True)),
                ('std', models.FloatField(default=0.0)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='levels', to='mollified.studyrun')),
            ],
            options={
                'ordering': ['level'],
                'constraints': [models.UniqueConstraint(fields=('run', 'level'), name='unique_level_per_run')],
            },
        ),
    ]
