"""ESP Ewald - periodic Coulomb electrostatics with prolate spheroidal kernels."""

__version__ = "1.0.0"
