from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('pipeline', models.CharField(max_length=20)),
                ('dataset_path', models.CharField(max_length=500)),
                ('output_path', models.CharField(max_length=500)),
                ('seed', models.BigIntegerField()),
                ('epochs', models.PositiveIntegerField()),
                ('status', models.CharField(choices=[('succeeded', 'Succeeded'), ('failed', 'Failed')], default='succeeded', max_length=20)),
                ('final_loss', models.FloatField(blank=True, null=True)),
                ('val_loss', models.FloatField(blank=True, null=True)),
                ('arguments', models.JSONField(blank=True, default=dict)),
                ('epoch_losses', models.JSONField(blank=True, default=list)),
                ('duration_s', models.FloatField(default=0.0)),
                ('creation_date', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Training Run',
                'verbose_name_plural': 'Training Runs',
                'ordering': ['-creation_date', '-id'],
            },
        ),
        migrations.CreateModel(
            name='EvaluationResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=200)),
                ('strategy', models.CharField(max_length=50)),
                ('model_path', models.CharField(max_length=500)),
                ('dataset_path', models.CharField(max_length=500)),
                ('avg_iou', models.FloatField()),
                ('avg_fps', models.FloatField()),
                ('temporal_consistency', models.FloatField()),
                ('clear_on_slow', models.BooleanField(default=True)),
                ('slow_frames', models.PositiveIntegerField(default=0)),
                ('total_frames', models.PositiveIntegerField(default=0)),
                ('arguments', models.JSONField(blank=True, default=dict)),
                ('creation_date', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Evaluation Result',
                'verbose_name_plural': 'Evaluation Results',
                'ordering': ['-creation_date', '-id'],
            },
        ),
    ]
