# Helpers shared by the roadseg modules.
