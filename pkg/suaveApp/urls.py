from django.urls import path
from . import views

urlpatterns = [
    path('runMission/', views.run_mission, name='runMission'),
    path('knowledgeBase/', views.knowledge_base, name='knowledgeBase'),
]
