"""Graph t-SNE layouts and graph CNE node embeddings."""
