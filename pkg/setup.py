from setuptools import find_packages, setup

setup(
    name='pyintlearn',
    packages=find_packages(where='src'),
    package_dir={'': 'src'},
    include_package_data=True,
    version='0.1.0',
    description='Python library for causal structure learning from interventions with unknown targets',
    author='Niels Haandbaek',
    license='MIT',
    install_requires=['numpy', 'scipy', 'networkx', 'pandas>=1.5', 'pyyaml', 'joblib'],
    setup_requires=['pytest-runner'],
    tests_require=['pytest'],
    test_suite='tests',
    entry_points={
        'console_scripts': ['intlearn = intlearn.cli:main'],
    },
)
