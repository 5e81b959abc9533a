"""
URL configuration for the suave project.

The mission API lives in ``suaveApp.urls``.
"""
from django.urls import path, include

urlpatterns = [
    path('', include('suaveApp.urls')),
]
