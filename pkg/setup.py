from setuptools import setup

version = '0.1.0'

setup(
    name='ksgroove',
    version=version,
    description='Kuramoto-Sivashinsky groove simulator and decay-estimate verification harness.',
    packages=['ksgroove'],
    python_requires='>=3.8',
    install_requires=['numpy', 'scipy', 'python-decouple', 'humanreadable', 'bidict'],
    extras_require={'test': ['pytest']},
    scripts=['bin/ksgroove'],
)
