"""Desk-scale interest point detection, description, and self-labeling.

Modules:
    geometry    homography algebra, sampling, and projective warping
    imaging     grayscale rasters, interpolation, photometric noise, PGM I/O
    synthdata   shape rendering with exact corner ground truth
    classical   Harris / Shi-Tomasi / FAST baselines and point selection
    neural      differentiable network, losses, and training loops
    adaptation  warp-averaged detection and iterative self-labeling
    evalsuite   metrics, matching, RANSAC estimation, benchmark protocols
    cli         command-line front end
"""

__version__ = "0.1.0"
