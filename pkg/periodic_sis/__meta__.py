"""Metadata for PeriodicSIS package"""

__pkgname__ = "PeriodicSIS"
__version__ = "2024.10"
__authors__ = "PeriodicSIS developers"
__license__ = "Apache License"
__copyright__ = "Copyright (c) PeriodicSIS developers 2024. All Rights Reserved."
__description__ = "Stability analysis and control of periodic SIS epidemics on networks"
