# Configuration, errors, validation and shared helpers
