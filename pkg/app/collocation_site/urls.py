"""
URL configuration for collocation_site project.

The admin lists stored studies; the mollified app serves them read-only
as JSON and as the study CSV.
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('', include('mollified.urls')),
]
