import os
import sys


def ensure_schema() -> bool:
    """Create the run-manifest table on a fresh checkout; returns True when it migrated."""
    from django.core.management import call_command
    from django.db import connection

    from lab.models import RunManifest

    if RunManifest._meta.db_table in connection.introspection.table_names():
        return False
    call_command("migrate", interactive=False, verbosity=0)
    return True


def main():
    """Entry point for the `polylab` console script: `polylab <subcommand> [options]`."""
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "polylab.settings")
    try:
        import django
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc

    django.setup()
    ensure_schema()
    execute_from_command_line(["polylab", "polylab", *sys.argv[1:]])


if __name__ == "__main__":
    main()
