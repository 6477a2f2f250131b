"""Online and offline algorithms for content delivery on a line network."""
