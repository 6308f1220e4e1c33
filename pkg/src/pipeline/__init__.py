"""Training pipeline: tasks, the training loop and experiment orchestration."""
