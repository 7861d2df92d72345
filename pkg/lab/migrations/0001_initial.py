# Generated manually for the run manifest ledger.

from django.db import migrations, models


class Migration(migrations.Migration):
    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="RunManifest",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("subcommand", models.CharField(max_length=32)),
                ("parameters", models.JSONField(default=dict)),
                ("code_version", models.CharField(max_length=32)),
                ("thread_count", models.PositiveIntegerField(default=1)),
                ("wall_time_seconds", models.FloatField(default=0.0)),
                ("output_digest", models.CharField(max_length=64)),
                ("manifest_digest", models.CharField(db_index=True, max_length=64)),
                ("artifact_path", models.CharField(blank=True, max_length=512)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
            options={"ordering": ("-created_at",)},
        ),
        migrations.AddIndex(
            model_name="runmanifest",
            index=models.Index(fields=["subcommand", "created_at"], name="lab_run_subcommand_idx"),
        ),
    ]
