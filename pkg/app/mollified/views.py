from django.http import HttpResponse, JsonResponse
from django.shortcuts import get_object_or_404
from django.views.decorators.http import require_GET

from .models import StudyRun


@require_GET
def study_list_api(request):
    """Stored studies, newest first, optionally filtered by ?case="""
    runs = StudyRun.objects.all()
    case = request.GET.get('case')
    if case:
        runs = runs.filter(case=case)
    return JsonResponse({'studies': [run.as_json() for run in runs]})


@require_GET
def study_detail_api(request, pk):
    run = get_object_or_404(StudyRun, pk=pk)
    return JsonResponse(run.as_json(with_levels=True))


@require_GET
def study_csv(request, pk):
    """The study CSV exactly as the run_study command writes it"""
    run = get_object_or_404(StudyRun, pk=pk)
    response = HttpResponse(run.to_csv(), content_type='text/csv')
    response['Content-Disposition'] = f'attachment; filename="study-{run.pk}.csv"'
    return response
