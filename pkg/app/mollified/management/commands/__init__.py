# Management commands of the mollified app
