"""


Author:
    Inspyre Softworks

Project:
    kalman-sgd

File:
    src/kalman_sgd/meta/__init__.py


Description:
    Package metadata. ``_version.py`` is generated at build time.

"""
