"""Result records for training runs and experiment reports."""
