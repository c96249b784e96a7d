from setuptools import setup, find_packages

setup(
    name="overtopos_sites",
    version="0.1",
    packages=find_packages(exclude=["examples", "examples.*"]),
    package_data={"overtopos_sites": ["data/workspaces/*.json"]},
    install_requires=[
        'python-dotenv==1.0.0',
        'tqdm==4.66.1'
    ],
    extras_require={
        'tests': [
            'pytest>=7.4.0',
            'hypothesis>=6.88.0'
        ]
    },
    entry_points={
        'console_scripts': [
            'overtopos-sites=overtopos_sites.check_sites:main'
        ]
    }
)
