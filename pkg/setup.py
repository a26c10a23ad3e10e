
from setuptools import setup

import padkit


setup(
    name='padkit',
    version=padkit.__version__,
    license='GPLv3',
    description=(
        'Pooled attention distillation for exemplar-free continual '
        'learning of vision transformers.'
    ),
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.20',
        'omegaconf>=2.1',
        'matplotlib>=3.3'
    ],
    extras_require={'test': ['pytest>=6']},
    packages=[
        'padkit',
        'padkit.core',
        'padkit.core.tensor',
        'padkit.core.model',
        'padkit.core.loss',
        'padkit.core.data',
        'padkit.core.metrics',
        'padkit.continual',
        'padkit.tools'
    ],
    package_dir={'padkit': 'padkit'},
    entry_points={'console_scripts': ['padkit = padkit.padkitapp:main']},
    scripts=['padkit-run.py']
)
