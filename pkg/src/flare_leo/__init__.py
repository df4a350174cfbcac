"""Simulator and optimization toolkit for multi-spot-beam LEO satellite downlinks.

Covers beam coverage planning from user geography, joint bandwidth/precoding
optimization via successive convex approximation, two-satellite handover
coordination over an inter-satellite link, content caching, and a small
convolutional channel-gain predictor.
"""

__version__ = "0.1.0"
