# storage/__init__.py
from .cube_io import load_cube, save_cube, cube_paths, load_signatures_csv, save_signatures_csv
from .exports import (
    render_band_pgm, read_pgm, save_projection, load_projection_scores,
    save_eigen_csv, load_eigen_csv, save_band_means_csv, save_history_csv,
)
