"""Domain models for fairalloc."""