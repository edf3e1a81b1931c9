#!/usr/bin/env python

"""The setup script."""

from setuptools import setup, find_packages

with open('README.rst') as readme_file:
    readme = readme_file.read()

with open('HISTORY.rst') as history_file:
    history = history_file.read()

requirements = ['numpy>=1.20', 'scipy>=1.6', 'sympy>=1.8', 'pytz']

setup_requirements = [ ]

test_requirements = [ ]

setup(
    author="Rotorwave developers",
    author_email='rotorwave@users.noreply.github.com',
    python_requires='>=3.8',
    classifiers=[
        'Development Status :: 2 - Pre-Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    description="THz-driven asymmetric-top rotor dynamics with random "
                "phase wave functions",
    entry_points={
        'console_scripts': [
            'rotorwave=rotorwave.cli:main',
        ],
    },
    install_requires=requirements,
    license="MIT license",
    long_description=readme + '\n\n' + history,
    include_package_data=True,
    keywords='rotational dynamics, THz, asymmetric top, random phase',
    name='rotorwave',
    packages=find_packages(include=['rotorwave', 'rotorwave.*']),
    setup_requires=setup_requirements,
    test_suite='tests',
    tests_require=test_requirements,
    version='0.1.0',
    zip_safe=False,
)
