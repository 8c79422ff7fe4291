from setuptools import setup, find_packages


def readme():
  with open('README.md', 'r', encoding='UTF-8') as f:
    return f.read()


setup(
  name='relay_secrecy',
  version='0.1.0',
  author='AzatXafizof',
  author_email='hafizov.azat.m@gmail.com',
  description='Оптимизация весов релейного бимформинга по секретной скорости для AF и DF сетей с подслушивателем: SDR, обобщённые собственные значения, бисекция',
  long_description=readme(),
  long_description_content_type='text/markdown',
  packages=find_packages(exclude=['tests', 'tests.*']),
  install_requires=['numpy>=1.24', 'scipy>=1.10', 'cvxpy>=1.4', 'clarabel>=0.6', 'pandas>=2.0', 'aiofiles==24.1.0', 'pydantic>=2.9.2'],
  extras_require={
    'tests': ['pytest>=7.4']
  },
  entry_points={
    'console_scripts': ['relay-secrecy=relay_secrecy.cli:main']
  },
  classifiers=[
    'Programming Language :: Python :: 3.11',
    'License :: OSI Approved :: MIT License',
    'Operating System :: OS Independent'
  ],
  keywords='beamforming relay secrecy physical-layer-security SDR',
  python_requires='>=3.10'
)
