"""Repository layer.

Reads and writes the files a run produces or consumes: images, point files,
checkpoints, metrics CSVs and diagnostic renders.
"""
