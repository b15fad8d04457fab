from setuptools import setup, find_packages

setup(
    name="mixed_manna",
    description=(
        "Exact pivoting algorithm for competitive equilibria of markets with"
        " goods and bads under SPLC utilities"
    ),
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    version="0.1.0",
    packages=find_packages(),
    install_requires=[
        "numpy>=1.22.1",
        "pandas>=1.4.4",
        "prettytable>=3.6.0",
        "networkx>=2.8",
        "tqdm",
        "wandb",
        "decorator",
        "pytest",
    ],
    extras_require={
        "dev": [
            "pytest",
            "plotly",
            "notebook",  # liked by vscode
        ]
    },
    entry_points={
        "console_scripts": ["mixed-manna=mixed_manna.cli:main"],
    },
)
