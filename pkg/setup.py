from setuptools import setup, find_packages

setup(
    name="subreg",
    version="0.1",
    packages=find_packages(include=["src", "src.*"]),
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.1",
        "pandas>=2.0.0",
        "PyYAML>=6.0",
        "psutil>=5.9.0",
        "tqdm>=4.65.0",
    ],
    entry_points={
        "console_scripts": ["subreg=src.main:main"],
    },
)
