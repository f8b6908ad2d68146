from django.urls import path
from . import views

urlpatterns = [
    path('api/studies/', views.study_list_api, name='study_list_api'),
    path('api/studies/<int:pk>/', views.study_detail_api, name='study_detail_api'),
    path('studies/<int:pk>.csv', views.study_csv, name='study_csv'),
]
