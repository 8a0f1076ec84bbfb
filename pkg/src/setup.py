from setuptools import setup, find_packages

setup(
    name="skill-discovery-cli",
    version="1.0.0",
    packages=find_packages(),
    install_requires=[
        "pydantic>=2.0.0",
        "httpx>=0.25.0",
        "typer>=0.9.0",
        "rich>=13.0.0",
        "python-dotenv>=1.0.0",
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "scikit-learn>=1.2.0",
        "matplotlib>=3.7.0",
    ],
    entry_points={"console_scripts": ["skill-discovery=skill_discovery.cli:main"]},
    python_requires=">=3.10",
)
