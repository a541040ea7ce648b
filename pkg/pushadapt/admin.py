import csv

from django.contrib import admin
from django.http import HttpResponse
from django.utils.html import format_html

from .models import ExperimentRun, ModelScore


# ==================
# INLINE КЛАССЫ
# ==================

class ModelScoreInline(admin.TabularInline):
    """Оценки моделей запуска"""
    model = ModelScore
    extra = 0
    fields = ('series', 'nmse_pos', 'nmse_rot', 'steps')
    readonly_fields = fields
    can_delete = False


# ==================
# ADMIN КЛАССЫ
# ==================

@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'kind_badge', 'label', 'seed', 'hash_short', 'online_vs_fixed', 'created_at')
    list_display_links = ('id', 'label')
    list_filter = ('kind',)
    search_fields = ('label', 'config_hash', 'out_dir')
    readonly_fields = ('kind', 'label', 'seed', 'config', 'config_hash', 'out_dir', 'created_at')
    list_per_page = 50
    date_hierarchy = 'created_at'
    inlines = [ModelScoreInline]
    actions = ['export_to_csv']

    def kind_badge(self, obj):
        """Бейдж типа запуска"""
        colors = {
            'simulate': '#64748b',
            'train': '#2563eb',
            'adapt': '#ea580c',
            'eval': '#16a34a',
            'experiment': '#7c3aed',
        }
        return format_html(
            '<span style="background: {}; color: white; padding: 3px 8px; border-radius: 3px;">{}</span>',
            colors.get(obj.kind, '#6c757d'), obj.get_kind_display()
        )
    kind_badge.short_description = 'Тип'
    kind_badge.admin_order_field = 'kind'

    def hash_short(self, obj):
        return obj.config_hash[:12] if obj.config_hash else '-'
    hash_short.short_description = 'Конфигурация'

    def online_vs_fixed(self, obj):
        """Суммарная NMSE online против fixed (зелёным, если адаптация помогла)"""
        scores = {score.series: score for score in obj.scores.all()}
        online, fixed = scores.get('online'), scores.get('fixed')
        if online is None or fixed is None:
            return '-'
        online_total = online.nmse_pos + online.nmse_rot
        fixed_total = fixed.nmse_pos + fixed.nmse_rot
        color = '#16a34a' if online_total < fixed_total else '#dc2626'
        return format_html(
            '<span style="color: {}; font-weight: bold;">{} / {}</span>',
            color, f"{online_total:.3f}", f"{fixed_total:.3f}"
        )
    online_vs_fixed.short_description = 'Online / Fixed'

    def export_to_csv(self, request, queryset):
        """Экспорт в CSV (по строке на оценку модели)"""
        response = HttpResponse(content_type='text/csv')
        response['Content-Disposition'] = 'attachment; filename="runs.csv"'

        writer = csv.writer(response)
        writer.writerow(['ID', 'Kind', 'Label', 'Seed', 'Config hash', 'Series', 'NMSE pos', 'NMSE rot', 'Steps'])
        for run in queryset.prefetch_related('scores'):
            scores = list(run.scores.all())
            if not scores:
                writer.writerow([run.id, run.kind, run.label, run.seed, run.config_hash, '', '', '', ''])
            for score in scores:
                writer.writerow([run.id, run.kind, run.label, run.seed, run.config_hash,
                                 score.series, score.nmse_pos, score.nmse_rot, score.steps])
        return response
    export_to_csv.short_description = 'Экспортировать в CSV'


@admin.register(ModelScore)
class ModelScoreAdmin(admin.ModelAdmin):
    list_display = ('run', 'series', 'nmse_pos', 'nmse_rot', 'steps')
    list_filter = ('series',)
    search_fields = ('run__label',)
    autocomplete_fields = ['run']
