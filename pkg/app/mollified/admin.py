from django.contrib import admin

from .models import StudyLevel, StudyRun


class StudyLevelInline(admin.TabularInline):
    model = StudyLevel
    extra = 0
    fields = ('level', 'n_c', 'h', 'n_b', 'n_z', 'e_l2', 'e_h1', 'e_energy', 'mean', 'std')
    readonly_fields = fields
    can_delete = False


@admin.register(StudyRun)
class StudyRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'case', 'rp', 'mollifier', 'scheme', 'kappa', 'rates_display', 'created')
    list_filter = ('case', 'mollifier', 'scheme')
    date_hierarchy = 'created'
    readonly_fields = ('config', 'rates', 'created')
    inlines = [StudyLevelInline]

    def rates_display(self, obj):
        """Fitted rates, one 'column: slope' pair per error"""
        if not obj.rates:
            return "-"
        return ", ".join(f"{column}: {rate:.2f}" for column, rate in obj.rates.items())

    rates_display.short_description = 'Rates'
