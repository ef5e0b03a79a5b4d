#!/usr/bin/env python3
"""
Setup script for SRG Bode
Installs the library modules and the srg-bode command
"""

from pathlib import Path

from setuptools import find_packages, setup

HERE = Path(__file__).parent

# test and lint pins stay out of the install requirements
DEV_ONLY = ('pytest', 'black', 'flake8')


def read_requirements():
    """Runtime requirements from requirements.txt"""
    requirements = []
    for line in (HERE / 'requirements.txt').read_text().splitlines():
        line = line.split('#', 1)[0].strip()
        if line and not line.startswith(DEV_ONLY):
            requirements.append(line)
    return requirements


setup(
    name='srg-bode',
    version='1.0.0',
    description="Certified frequency- and amplitude-dependent L2-gain bounds for Lur'e systems",
    long_description=(HERE / 'README.md').read_text(encoding='utf-8'),
    long_description_content_type='text/markdown',
    python_requires='>=3.9',
    py_modules=[
        'cli',
        'config',
        'errors',
        'lti_systems',
        'lure_gain',
        'nonlinearities',
        'region_geometry',
        'reporting',
        'run_config',
        'simulation_oracle',
    ],
    packages=find_packages(include=['utils', 'utils.*']),
    install_requires=read_requirements(),
    entry_points={
        'console_scripts': [
            'srg-bode=cli:main',
        ],
    },
)
