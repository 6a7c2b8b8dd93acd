#