import json
import logging

from django.conf import settings
from django.http import JsonResponse
from django.views.decorators.csrf import csrf_protect

from .config import config_from_dict, config_to_dict, load_config
from .exceptions import ConfigError, KnowledgeBaseError
from .runner import run_once
from .tomasys import THRUSTERS, WATER_VISIBILITY, ComponentStatus, analyze, init_kb, plan

logger = logging.getLogger(__name__)


@csrf_protect
def run_mission(request):
    """Run one seeded mission from a JSON body ``{"seed": .., "config": {..}}``."""
    if request.method != 'POST':
        return JsonResponse({'error': 'Method not allowed. Use POST.'}, status=405)
    try:
        body = json.loads(request.body or b'{}')
    except json.JSONDecodeError:
        return JsonResponse({'error': 'Request body is not valid JSON.'}, status=400)
    if not isinstance(body, dict):
        return JsonResponse({'error': 'Request body must be a JSON object.'}, status=400)

    seed = body.get('seed', 1)
    if isinstance(seed, bool) or not isinstance(seed, int):
        return JsonResponse({'error': 'Seed must be an integer.'}, status=400)
    try:
        if 'config' in body:
            config = config_from_dict(body['config'])
        else:
            config = load_config(settings.SUAVE_DEFAULT_SCENARIO)
    except ConfigError as e:
        return JsonResponse({'error': f"Invalid configuration: {e}"}, status=400)

    try:
        metrics = run_once(config, seed)
    except Exception as e:
        logger.exception("Mission with seed %s failed", seed)
        return JsonResponse({'status': 'error', 'error': str(e)}, status=500)

    return JsonResponse({
        'status': 'ok',
        'manager': config.manager.kind.value,
        'config': config_to_dict(config),
        'metrics': {
            'seed': metrics.seed,
            'pipeline_found': metrics.pipeline_found,
            'search_time_s': metrics.search_time,
            'distance_inspected_m': metrics.distance_inspected,
        },
    })


def knowledge_base(request):
    """
    Analyze and plan on a fresh knowledge base.

    Query parameters: ``water_visibility`` (measured QA), ``failed`` (comma
    separated thruster names) and ``objectives`` (comma separated function
    ids, default ``F1,F2``). Planned designs are applied as groundings.
    """
    if request.method != 'GET':
        return JsonResponse({'error': 'Method not allowed. Use GET.'}, status=405)

    kb = init_kb()
    objectives = [f.strip() for f in request.GET.get('objectives', 'F1,F2').split(',') if f.strip()]
    failed = [t.strip() for t in request.GET.get('failed', '').split(',') if t.strip()]
    unknown = sorted(set(failed) - set(THRUSTERS))
    if unknown:
        return JsonResponse({'error': f"Unknown thrusters: {', '.join(unknown)}."}, status=400)

    try:
        for function_id in objectives:
            kb.set_objective(function_id)
        if 'water_visibility' in request.GET:
            kb.update_measured_qa(WATER_VISIBILITY, float(request.GET['water_visibility']), 0.0)
        for name in failed:
            kb.update_component_status(name, ComponentStatus.FAILED)
    except (KnowledgeBaseError, ValueError) as e:
        return JsonResponse({'error': str(e)}, status=400)

    analyze(kb)
    configuration = plan(kb)
    for objective_id, design_id in configuration.changes(kb):
        kb.apply_grounding(objective_id, design_id)

    return JsonResponse({
        'status': 'ok',
        'configuration': configuration.designs,
        'knowledge_base': kb.snapshot(),
    })
