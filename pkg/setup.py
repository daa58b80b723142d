from setuptools import setup

setup(
    name='gaussof',
    description='Entanglement of formation of two-mode Gaussian states via the canonical form of the covariance matrix',
    license='Apache-2.0',
    packages=['gaussof'],
    python_requires='>=3.6',
    install_requires=[
        'numpy',
        'scipy>=1.4',
        'pandas',
        'cached-property',
    ],
    extras_require={
        'test': [
            'pytest',
        ]
    },
    entry_points={
        'console_scripts': [
            'gaussof = gaussof.cli:main',
        ]
    },
    use_scm_version=True,
    setup_requires=['setuptools_scm']
)
