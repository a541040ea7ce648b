"""
URL configuration for the pushadapt project.

Только админка: журнал запусков (ExperimentRun / ModelScore).
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path('admin/', admin.site.urls),
]
