# Generated by Django 6.0 on 2026-10-18 12:00

import django.db.models.deletion
import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('simulate', 'Генерация траекторий'), ('train', 'Офлайн-обучение'), ('adapt', 'Онлайн-адаптация'), ('eval', 'Оценка'), ('experiment', 'Эксперимент')], help_text='Какая команда создала запись.', max_length=20)),
                ('label', models.CharField(blank=True, help_text='Имя эксперимента (колонка experiment в summary.csv).', max_length=200)),
                ('seed', models.BigIntegerField(default=0, help_text='Главный сид запуска.')),
                ('config', models.JSONField(default=dict, help_text='Итоговая конфигурация после слияния источников.')),
                ('config_hash', models.CharField(blank=True, help_text='sha256 канонического JSON конфигурации (как в чекпойнте).', max_length=64)),
                ('out_dir', models.CharField(blank=True, help_text='Каталог с артефактами запуска.', max_length=500)),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now, editable=False)),
            ],
            options={
                'verbose_name': 'Запуск',
                'verbose_name_plural': 'Запуски',
                'db_table': 'pushadapt_run',
                'ordering': ['-created_at', '-id'],
                'indexes': [models.Index(fields=['kind'], name='pushadapt_run_kind_idx'), models.Index(fields=['config_hash'], name='pushadapt_run_hash_idx'), models.Index(fields=['created_at'], name='pushadapt_run_created_idx')],
            },
        ),
        migrations.CreateModel(
            name='ModelScore',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('series', models.CharField(choices=[('offline_nn', 'Offline NN'), ('offline', 'Offline'), ('fixed', 'Fixed'), ('online', 'Online'), ('nn', 'NN (online stream)')], max_length=20)),
                ('nmse_pos', models.FloatField(help_text='NMSE по положению (среднее ½(ℓ_x + ℓ_y)).')),
                ('nmse_rot', models.FloatField(help_text='NMSE по повороту.')),
                ('steps', models.PositiveIntegerField(default=0, help_text='Число шагов онлайн-потока (0 для офлайн-оценок).')),
                ('run', models.ForeignKey(help_text='Запуск, к которому относится оценка.', on_delete=django.db.models.deletion.CASCADE, related_name='scores', to='pushadapt.experimentrun')),
            ],
            options={
                'verbose_name': 'Оценка модели',
                'verbose_name_plural': 'Оценки моделей',
                'db_table': 'pushadapt_score',
                'constraints': [models.UniqueConstraint(fields=('run', 'series'), name='uniq_score_per_series')],
            },
        ),
    ]
