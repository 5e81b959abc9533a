from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from suaveApp.managing import ManagerKind
from suaveApp.runner import run_comparison

from .run_experiment import load_run_config


class Command(BaseCommand):
    help = "Run the same batch with every manager and write comparison.csv."

    def add_arguments(self, parser):
        parser.add_argument('--config')
        parser.add_argument(
            '--managers',
            nargs='+',
            choices=[kind.value for kind in ManagerKind],
            default=[kind.value for kind in ManagerKind],
        )
        parser.add_argument('--runs', type=int)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--out')
        parser.add_argument('--workers', type=int, default=settings.SUAVE_WORKERS)

    def handle(self, *args, **options):
        config = load_run_config(options)
        if options['workers'] < 1:
            raise CommandError("--workers must be at least 1.", returncode=2)

        results = run_comparison(config, options['managers'], workers=options['workers'])
        self.stdout.write(f"{'manager':<12}{'search mean':>12}{'std':>9}{'dist mean':>11}{'std':>9}")
        for manager, (_, stats) in results.items():
            self.stdout.write(
                f"{manager:<12}{stats.search_time_mean:>12.2f}{stats.search_time_std:>9.2f}"
                f"{stats.distance_mean:>11.2f}{stats.distance_std:>9.2f}"
            )
