"""Digital twin of a two-axis robotic exercise machine.

The package simulates a subject tracking an elliptical target against a
machine that renders a programmable impedance around a neutral circular
path, synthesizes surface EMG for six arm muscles from the interaction
torque, processes the EMG into muscle effort distributions, and trains a
small feedforward network to estimate the machine stiffness and ellipse
orientation from those distributions.
"""

__version__ = "0.1.0"
