from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from suaveApp.config import load_config, with_overrides
from suaveApp.exceptions import ConfigError
from suaveApp.managing import ManagerKind
from suaveApp.runner import run_batch


def load_run_config(options):
    """Scenario document with the command-line overrides applied."""
    path = options['config'] or settings.SUAVE_DEFAULT_SCENARIO
    try:
        config = load_config(path)
        return with_overrides(
            config,
            manager=options.get('manager'),
            runs=options.get('runs'),
            seed=options.get('seed'),
            out=options['out'] or (None if config.output else settings.SUAVE_OUTPUT_DIR),
        )
    except ConfigError as e:
        raise CommandError(str(e), returncode=2) from e


class Command(BaseCommand):
    help = "Run a batch of seeded pipeline-inspection missions and write CSV results."

    def add_arguments(self, parser):
        parser.add_argument('--config', help="JSON scenario (defaults to SUAVE_DEFAULT_SCENARIO).")
        parser.add_argument('--manager', choices=[kind.value for kind in ManagerKind])
        parser.add_argument('--runs', type=int)
        parser.add_argument('--seed', type=int, help="First seed of the batch.")
        parser.add_argument('--out', help="Output directory.")
        parser.add_argument('--trace', action='store_true', help="Write a per-step trajectory CSV per run.")
        parser.add_argument('--snapshot-kb', action='store_true', help="Dump the knowledge base every MAPE cycle.")
        parser.add_argument('--workers', type=int, default=settings.SUAVE_WORKERS)

    def handle(self, *args, **options):
        config = load_run_config(options)
        if options['workers'] < 1:
            raise CommandError("--workers must be at least 1.", returncode=2)

        metrics, stats = run_batch(
            config,
            workers=options['workers'],
            trace=options['trace'],
            snapshot_kb=options['snapshot_kb'],
        )
        found = sum(m.pipeline_found for m in metrics)
        self.stdout.write(self.style.SUCCESS(
            f"{config.manager.kind.value}: {found}/{stats.runs} found, "
            f"search {stats.search_time_mean:.2f} s, inspected {stats.distance_mean:.2f} m "
            f"-> {config.output}"
        ))
