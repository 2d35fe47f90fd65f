# Utility modules: configuration, settings, errors and numerics
