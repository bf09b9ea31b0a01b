from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="narx_mss",
    version="0.1.0",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "numpy>=1.21.0",
        "scipy>=1.7.0",
        "pandas>=1.3.0",
        "joblib>=1.1.0",
        "tqdm>=4.64.0",
    ],
    extras_require={
        "test": ["pytest>=7.0.0"],
    },
    entry_points={
        "console_scripts": [
            "narx-mss=narx_mss.cli:main",
        ],
    },
    scripts=["scripts/run_benchmark.py"],
    description="Structure selection for polynomial NARX models with a binary PSO-GSA search",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords="system identification, NARX, model structure selection, particle swarm, gravitational search",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.8",
)
