# Computational modules: groups, representations, set maps, subshifts, thermodynamics
