"""Package metadata and the magnls console script."""
from setuptools import find_packages, setup

setup(
    name='magnls',
    version='0.1.0',
    description='Spectral toolkit for the focusing NLS with a constant magnetic field',
    packages=find_packages(exclude=('tests', 'tests.*')),
    python_requires='>=3.10',
    install_requires=[
        'Flask>=2.3',
        'Werkzeug>=2.3',
        'click>=8.1',
        'SQLAlchemy>=2.0',
        'Flask-SQLAlchemy>=3.1',
        'numpy>=1.26',
        'scipy>=1.11',
        'joblib>=1.3',
        'python-dotenv>=1.0',
    ],
    extras_require={'test': ['pytest>=7.4', 'pytest-flask>=1.3']},
    entry_points={'console_scripts': ['magnls=magnls.cli:main']},
)
