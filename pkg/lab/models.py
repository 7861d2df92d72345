from django.db import models


class RunManifest(models.Model):
    subcommand = models.CharField(max_length=32)
    parameters = models.JSONField(default=dict)
    code_version = models.CharField(max_length=32)
    thread_count = models.PositiveIntegerField(default=1)
    wall_time_seconds = models.FloatField(default=0.0)
    output_digest = models.CharField(max_length=64)
    manifest_digest = models.CharField(max_length=64, db_index=True)
    artifact_path = models.CharField(max_length=512, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ("-created_at",)
        indexes = [models.Index(fields=["subcommand", "created_at"], name="lab_run_subcommand_idx")]

    def __str__(self) -> str:
        return f"{self.subcommand} ({self.manifest_digest[:12]})"
