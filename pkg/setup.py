from setuptools import setup

setup(
    name="twinsub",
    version="0.1",
    keywords="quantum optics interferometry photon subtraction",
    packages=["twinsub"],
    install_requires=["numpy", "scipy", "h5py", "tqdm", "termcolor"],
    entry_points={"console_scripts": ["twinsub=twinsub.cli:console_main"]},
)
